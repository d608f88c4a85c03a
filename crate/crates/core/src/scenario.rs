//! Scenario configuration, clutter patch geometry and initial waveforms.
//!
//! A scenario is read from a JSON document with the top-level keys `radar`,
//! `timing`, `target`, `clutter`, `noise`, `bands`, `sectors`, `solver` and
//! `init`. Angles are degrees in the file and radians everywhere else;
//! spectral caps are given in dB (`E = 10^(cap_db/10)`).

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, from_db, CMatrix};
use crate::stap::WaveformMatrix;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub radar: RadarConfig,
    pub timing: TimingConfig,
    pub target: TargetConfig,
    pub clutter: ClutterConfig,
    pub noise: NoiseConfig,
    #[serde(default)]
    pub bands: Vec<BandConfig>,
    #[serde(default)]
    pub sectors: Vec<SectorConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub init: InitConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    /// Transmit element spacing in wavelengths.
    pub d_tx: f64,
    /// Receive element spacing in wavelengths.
    pub d_rx: f64,
    /// meters
    pub wavelength: f64,
    /// meters
    pub altitude: f64,
    /// m/s
    pub platform_speed: f64,
    #[serde(default = "one")]
    pub total_energy: f64,
    /// PAPR bound, `1 <= papr_bound <= code_length`.
    pub papr_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingConfig {
    pub n_pulses: usize,
    /// Hz
    pub prf: f64,
    pub code_length: usize,
    /// Hz
    pub sample_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub azimuth_deg: f64,
    /// Normalized Doppler; takes precedence over `speed`.
    #[serde(default)]
    pub normalized_doppler: Option<f64>,
    /// Radial speed in m/s, converted with `2v/(λ f_r)`.
    #[serde(default)]
    pub speed: Option<f64>,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Slant range of the target cell in meters.
    #[serde(default = "default_range")]
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClutterConfig {
    /// Half-count `P`; `2P+1` rings are modeled.
    pub n_rings: usize,
    pub n_patches_per_ring: usize,
    #[serde(default)]
    pub patch_power: PatchPower,
    /// Uniform Doppler spread as a fraction of the PRF.
    #[serde(default)]
    pub doppler_uncertainty: f64,
    /// Range-bin size in meters; defaults to `c / (2 f_s)`.
    #[serde(default)]
    pub range_bin: Option<f64>,
}

/// Patch power: one value for every patch, or a `(2P+1) x N_c` table (rings ascending).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PatchPower {
    Uniform(f64),
    Table(Vec<Vec<f64>>),
}

impl Default for PatchPower {
    fn default() -> Self {
        PatchPower::Uniform(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub noise_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    pub f_lo: f64,
    pub f_hi: f64,
    pub cap_db: f64,
}

impl BandConfig {
    pub fn cap(&self) -> f64 {
        from_db(self.cap_db)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorConfig {
    pub theta_lo_deg: f64,
    pub theta_hi_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    DkAdmm,
    MmAdmm,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::DkAdmm => "dk_admm",
            Algorithm::MmAdmm => "mm_admm",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// ADMM penalty ϑ; must exceed 2.
    pub penalty: f64,
    /// ADMM residual tolerance ξ.
    pub admm_tol: f64,
    pub admm_max_iter: usize,
    /// Relative tolerance ε₁ on the Dinkelbach ratio.
    pub inner_tol: f64,
    /// Relative tolerance ε₂ on the outer SINR.
    pub outer_tol: f64,
    pub mm_inner_max_iter: usize,
    pub seed: u64,
    /// Coordinate-descent sweeps per Dinkelbach / MM update.
    pub cd_sweeps: usize,
    /// Surrogate maximizations per filter update on the MM path.
    pub mm_steps: usize,
    pub max_outer_iter: usize,
    pub max_dinkelbach_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::DkAdmm,
            penalty: 5.0,
            admm_tol: 5e-10,
            admm_max_iter: 1000,
            inner_tol: 3e-3,
            outer_tol: 3e-4,
            mm_inner_max_iter: 50,
            seed: 0,
            cd_sweeps: 1,
            mm_steps: 1,
            max_outer_iter: 100,
            max_dinkelbach_iter: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Lfm,
    RandomCe,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    pub kind: InitKind,
    /// LFM chirp rate γ_s in s⁻².
    pub chirp_rate: f64,
    /// Standard deviation of the random constant-envelope phases, radians.
    pub phase_std: f64,
    pub path: Option<PathBuf>,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            kind: InitKind::Lfm,
            chirp_rate: 3.5e9,
            phase_std: PI,
            path: None,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_range() -> f64 {
    12_728.0
}

/// Wrap a normalized frequency into `[-0.5, 0.5)`.
pub fn wrap_doppler(f: f64) -> f64 {
    let w = f - (f + 0.5).floor();
    if w >= 0.5 {
        w - 1.0
    } else {
        w
    }
}

impl ScenarioConfig {
    pub fn n_tx(&self) -> usize {
        self.radar.n_tx
    }

    pub fn n_rx(&self) -> usize {
        self.radar.n_rx
    }

    pub fn code_length(&self) -> usize {
        self.timing.code_length
    }

    pub fn n_pulses(&self) -> usize {
        self.timing.n_pulses
    }

    pub fn total_energy(&self) -> f64 {
        self.radar.total_energy
    }

    pub fn antenna_energy(&self) -> f64 {
        self.radar.total_energy / self.radar.n_tx as f64
    }

    pub fn papr_bound(&self) -> f64 {
        self.radar.papr_bound
    }

    pub fn target_azimuth(&self) -> f64 {
        self.target.azimuth_deg.to_radians()
    }

    pub fn target_doppler(&self) -> f64 {
        let f = match (self.target.normalized_doppler, self.target.speed) {
            (Some(f), _) => f,
            (None, Some(v)) => 2.0 * v / (self.radar.wavelength * self.timing.prf),
            (None, None) => 0.0,
        };
        wrap_doppler(f)
    }

    pub fn range_bin(&self) -> f64 {
        self.clutter
            .range_bin
            .unwrap_or(SPEED_OF_LIGHT / (2.0 * self.timing.sample_rate))
    }

    /// Check every invariant; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        let r = &self.radar;
        let t = &self.timing;
        if r.n_tx == 0 {
            return Err(Error::config("radar.n_tx", "must be at least 1"));
        }
        if r.n_rx == 0 {
            return Err(Error::config("radar.n_rx", "must be at least 1"));
        }
        if t.code_length == 0 {
            return Err(Error::config("timing.code_length", "must be at least 1"));
        }
        if t.n_pulses == 0 {
            return Err(Error::config("timing.n_pulses", "must be at least 1"));
        }
        for (field, v) in [
            ("radar.wavelength", r.wavelength),
            ("timing.prf", t.prf),
            ("timing.sample_rate", t.sample_rate),
            ("radar.total_energy", r.total_energy),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(field, format!("must be positive, got {v}")));
            }
        }
        if !(r.d_tx > 0.0 && r.d_rx > 0.0) {
            return Err(Error::config(
                "radar.d_tx",
                "element spacings must be positive",
            ));
        }
        if r.altitude < 0.0 || r.platform_speed < 0.0 {
            return Err(Error::config(
                "radar.altitude",
                "altitude and speed must be non-negative",
            ));
        }
        if r.papr_bound.is_nan() || r.papr_bound < 1.0 {
            return Err(Error::config(
                "radar.papr_bound",
                format!("PAPR bound below 1 ({})", r.papr_bound),
            ));
        }
        if r.papr_bound > t.code_length as f64 {
            return Err(Error::config(
                "radar.papr_bound",
                format!(
                    "PAPR bound {} exceeds the code length {}",
                    r.papr_bound, t.code_length
                ),
            ));
        }
        if self.noise.noise_power.is_nan() || self.noise.noise_power <= 0.0 {
            return Err(Error::config(
                "noise.noise_power",
                "noise power must be positive",
            ));
        }
        let s = &self.solver;
        if s.penalty.is_nan() || s.penalty <= 2.0 {
            return Err(Error::config(
                "solver.penalty",
                format!("penalty must exceed 2 (got {})", s.penalty),
            ));
        }
        if s.penalty <= 4.0 {
            // With s held fixed the (z, d) recursion contracts by 2/(ϑ-2).
            warnings.push(format!(
                "solver.penalty = {} leaves the ADMM dual recursion undamped; the residual may not reach admm_tol",
                s.penalty
            ));
        }
        for (field, v) in [
            ("solver.admm_tol", s.admm_tol),
            ("solver.inner_tol", s.inner_tol),
            ("solver.outer_tol", s.outer_tol),
        ] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::config(field, "tolerance must be positive"));
            }
        }
        if s.admm_max_iter == 0 || s.mm_inner_max_iter == 0 || s.cd_sweeps == 0 || s.mm_steps == 0 {
            return Err(Error::config(
                "solver",
                "iteration counts must be at least 1",
            ));
        }
        if !(self.target.amplitude.is_finite()) {
            return Err(Error::config("target.amplitude", "must be finite"));
        }
        let c = &self.clutter;
        if c.doppler_uncertainty < 0.0 {
            return Err(Error::config(
                "clutter.doppler_uncertainty",
                "must be non-negative",
            ));
        }
        match &c.patch_power {
            PatchPower::Uniform(p) if *p < 0.0 => {
                return Err(Error::config("clutter.patch_power", "must be non-negative"));
            }
            PatchPower::Table(rows) => {
                if rows.len() != 2 * c.n_rings + 1
                    || rows.iter().any(|row| row.len() != c.n_patches_per_ring)
                {
                    return Err(Error::config(
                        "clutter.patch_power",
                        format!(
                            "table must be {} x {}",
                            2 * c.n_rings + 1,
                            c.n_patches_per_ring
                        ),
                    ));
                }
                if rows.iter().flatten().any(|p| *p < 0.0) {
                    return Err(Error::config("clutter.patch_power", "must be non-negative"));
                }
            }
            _ => {}
        }
        for b in &self.bands {
            if !(0.0 <= b.f_lo && b.f_lo < b.f_hi && b.f_hi <= 1.0) {
                return Err(Error::config(
                    "bands",
                    format!(
                        "band [{}, {}] must satisfy 0 <= f_lo < f_hi <= 1",
                        b.f_lo, b.f_hi
                    ),
                ));
            }
        }
        let mut sorted: Vec<&BandConfig> = self.bands.iter().collect();
        sorted.sort_by(|a, b| a.f_lo.total_cmp(&b.f_lo));
        for w in sorted.windows(2) {
            if w[1].f_lo < w[0].f_hi {
                warnings.push(format!(
                    "bands [{}, {}] and [{}, {}] overlap",
                    w[0].f_lo, w[0].f_hi, w[1].f_lo, w[1].f_hi
                ));
            }
        }
        for sct in &self.sectors {
            if !(-90.0 <= sct.theta_lo_deg
                && sct.theta_lo_deg < sct.theta_hi_deg
                && sct.theta_hi_deg <= 90.0)
            {
                return Err(Error::config(
                    "sectors",
                    format!(
                        "sector [{}, {}] must satisfy -90 <= lo < hi <= 90",
                        sct.theta_lo_deg, sct.theta_hi_deg
                    ),
                ));
            }
        }
        if !self.sectors.is_empty() && self.sectors.len() != self.bands.len() {
            return Err(Error::config(
                "sectors",
                "sectors must pair one-to-one with bands",
            ));
        }
        if self.init.kind == InitKind::File && self.init.path.is_none() {
            return Err(Error::config("init.path", "file initializer needs a path"));
        }
        Ok(warnings)
    }
}

/// Parse and validate a scenario document. Non-fatal warnings are logged.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let (cfg, warnings) = parse_config_with_warnings(text)?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(cfg)
}

pub fn parse_config_with_warnings(text: &str) -> Result<(ScenarioConfig, Vec<String>)> {
    let cfg: ScenarioConfig = serde_json::from_str(text)?;
    let warnings = cfg.validate()?;
    Ok((cfg, warnings))
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClutterPatch {
    /// Ring offset `p` in `[-P, P]`.
    pub ring: i64,
    /// Patch index within the ring, 1-based.
    pub index: usize,
    /// Azimuth, radians.
    pub azimuth: f64,
    pub mean_doppler: f64,
    pub doppler_spread: f64,
    pub power: f64,
}

/// Depression angle of a ring at slant range `range` seen from `altitude`.
pub fn depression_angle(altitude: f64, range: f64) -> f64 {
    (altitude / range).clamp(-1.0, 1.0).asin()
}

/// Side-looking clutter patches for `2P+1` rings, ring-major then azimuth.
///
/// Azimuths are uniform over `[-π/2, π/2)`; the mean Doppler of a patch is
/// `2 v_a/(λ f_r) · sin θ · cos φ_p` with `φ_p` the ring's depression angle.
pub fn build_clutter_geometry(cfg: &ScenarioConfig) -> Vec<ClutterPatch> {
    let c = &cfg.clutter;
    let n_rings = c.n_rings as i64;
    let n_c = c.n_patches_per_ring;
    let doppler_scale = 2.0 * cfg.radar.platform_speed / (cfg.radar.wavelength * cfg.timing.prf);
    let bin = cfg.range_bin();
    let mut patches = Vec::with_capacity((2 * c.n_rings + 1) * n_c);
    for (ring_row, p) in (-n_rings..=n_rings).enumerate() {
        let range = cfg.target.range + p as f64 * bin;
        let cos_dep = depression_angle(cfg.radar.altitude, range).cos();
        for k in 0..n_c {
            let azimuth = -PI / 2.0 + PI * k as f64 / n_c as f64;
            let power = match &c.patch_power {
                PatchPower::Uniform(v) => *v,
                PatchPower::Table(rows) => rows[ring_row][k],
            };
            patches.push(ClutterPatch {
                ring: p,
                index: k + 1,
                azimuth,
                mean_doppler: wrap_doppler(doppler_scale * azimuth.sin() * cos_dep),
                doppler_spread: c.doppler_uncertainty,
                power,
            });
        }
    }
    patches
}

/// LFM row `√p · exp(jπγ(l/f_s)²)`, `l = 0..L-1`.
pub fn lfm_row(
    code_length: usize,
    chirp_rate: f64,
    sample_rate: f64,
    amplitude: f64,
) -> Vec<crate::linalg::C64> {
    (0..code_length)
        .map(|l| {
            let t = l as f64 / sample_rate;
            cis(PI * chirp_rate * t * t) * amplitude
        })
        .collect()
}

/// Constant-envelope waveform with i.i.d. zero-mean Gaussian phases.
pub fn random_constant_envelope(
    n_tx: usize,
    code_length: usize,
    energy: f64,
    phase_std: f64,
    seed: u64,
) -> WaveformMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // phase_std is validated finite by the caller; a zero std is a valid degenerate case.
    let normal = Normal::new(0.0, phase_std.abs()).expect("finite standard deviation");
    let amp = (energy / (n_tx * code_length) as f64).sqrt();
    let mut m = CMatrix::zeros(n_tx, code_length);
    for n in 0..n_tx {
        for l in 0..code_length {
            m[(n, l)] = cis(normal.sample(&mut rng)) * amp;
        }
    }
    WaveformMatrix::new(m)
}

pub fn initial_waveform(cfg: &ScenarioConfig) -> Result<WaveformMatrix> {
    let n_tx = cfg.n_tx();
    let len = cfg.code_length();
    match cfg.init.kind {
        InitKind::Lfm => {
            let amp = (cfg.total_energy() / (len * n_tx) as f64).sqrt();
            let row = lfm_row(len, cfg.init.chirp_rate, cfg.timing.sample_rate, amp);
            Ok(WaveformMatrix::new(CMatrix::from_fn(n_tx, len, |_, l| {
                row[l]
            })))
        }
        InitKind::RandomCe => Ok(random_constant_envelope(
            n_tx,
            len,
            cfg.total_energy(),
            cfg.init.phase_std,
            cfg.solver.seed,
        )),
        InitKind::File => {
            let path = cfg
                .init
                .path
                .as_ref()
                .ok_or_else(|| Error::config("init.path", "file initializer needs a path"))?;
            let w = crate::io::read_waveform_csv(path)?;
            if w.n_tx() != n_tx || w.code_length() != len {
                return Err(Error::WaveformFile(format!(
                    "{} holds a {}x{} waveform, scenario needs {}x{}",
                    path.display(),
                    w.n_tx(),
                    w.code_length(),
                    n_tx,
                    len
                )));
            }
            Ok(w)
        }
    }
}
