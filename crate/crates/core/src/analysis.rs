//! Post-design evaluation: STCA surfaces, constraint audits and Doppler
//! robustness.

use serde::Serialize;

use crate::design::DesignMode;
use crate::error::{Error, Result};
use crate::filter::{sinr, sinr_opt};
use crate::linalg::{db, inner, CVector};
use crate::scenario::{build_clutter_geometry, ScenarioConfig};
use crate::spectral::{bands_from_config, sectors_from_config, SpaceFrequencySector, SpectralBand};
use crate::stap::{ordered_map, ArrayGeometry, StapModel, WaveformMatrix};

/// Relative slack on the energy constraint.
pub const ENERGY_TOL: f64 = 1e-10;
/// Relative slack on the PAPR bound.
pub const PAPR_TOL: f64 = 1e-10;
/// Relative slack on spectral caps.
pub const LEAKAGE_TOL: f64 = 1e-6;

pub const STCA_HEADER: [&str; 3] = ["azimuth_deg", "normalized_doppler", "power_db"];

/// `|w†V(θ,f)s|²` in dB over an azimuth x Doppler grid, `power_db[i][j]` at
/// `azimuth_deg[i]`, `doppler[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StcaGrid {
    pub azimuth_deg: Vec<f64>,
    pub doppler: Vec<f64>,
    pub power_db: Vec<Vec<f64>>,
}

impl StcaGrid {
    pub fn rows(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.azimuth_deg.len() * self.doppler.len());
        for (i, az) in self.azimuth_deg.iter().enumerate() {
            for (j, f) in self.doppler.iter().enumerate() {
                out.push((*az, *f, self.power_db[i][j]));
            }
        }
        out
    }

    pub fn peak_db(&self) -> f64 {
        self.power_db
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Default grids: 181 azimuths over [-90°, 90°] and 101 Dopplers over [-0.5, 0.5].
pub fn default_grids() -> (Vec<f64>, Vec<f64>) {
    (linspace(-90.0, 90.0, 181), linspace(-0.5, 0.5, 101))
}

/// `|w†V(θ,f)s|²` with `V = d(f) ⊗ I_L ⊗ A(θ)`, linear.
pub fn stca_point(
    geometry: &ArrayGeometry,
    w: &CVector,
    s: &CVector,
    theta: f64,
    doppler: f64,
) -> Result<f64> {
    let v = geometry.operator(theta, doppler, 0).apply(s)?;
    Ok(inner(w, &v).norm_sqr())
}

/// STCA over the grid, one azimuth row per task on up to `workers` threads.
pub fn stca(
    geometry: &ArrayGeometry,
    w: &CVector,
    s: &WaveformMatrix,
    azimuth_deg: &[f64],
    doppler: &[f64],
    workers: usize,
) -> Result<StcaGrid> {
    if azimuth_deg.is_empty() || doppler.is_empty() {
        return Err(Error::InvalidArgument(
            "STCA grids must be non-empty".into(),
        ));
    }
    let x = s.vec_s();
    let power_db = ordered_map(azimuth_deg, workers, |az| {
        doppler
            .iter()
            .map(|f| Ok(db(stca_point(geometry, w, &x, az.to_radians(), *f)?)))
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(StcaGrid {
        azimuth_deg: azimuth_deg.to_vec(),
        doppler: doppler.to_vec(),
        power_db,
    })
}

/// Mean STCA over the range-ring-0 clutter patches, in dB relative to the
/// STCA at the target cell. Negative values mean the ridge is suppressed.
pub fn ridge_suppression_db(cfg: &ScenarioConfig, w: &CVector, s: &WaveformMatrix) -> Result<f64> {
    let geometry = ArrayGeometry::from_config(cfg);
    let x = s.vec_s();
    let target = stca_point(&geometry, w, &x, cfg.target_azimuth(), cfg.target_doppler())?;
    let patches: Vec<_> = build_clutter_geometry(cfg)
        .into_iter()
        .filter(|p| p.ring == 0)
        .collect();
    if patches.is_empty() {
        return Err(Error::InvalidArgument("no clutter patches".into()));
    }
    let mut total = 0.0;
    for p in &patches {
        total += stca_point(&geometry, w, &x, p.azimuth, p.mean_doppler)?;
    }
    Ok(db(total / patches.len() as f64) - db(target))
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

/// Constraint audit of a waveform; values are compared unrounded.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AuditReport {
    pub mode: String,
    pub energy: Vec<Check>,
    pub papr: Vec<Check>,
    pub leakage: Vec<Check>,
}

impl AuditReport {
    pub fn all_pass(&self) -> bool {
        self.energy_pass() && self.papr_pass() && self.spectral_pass()
    }

    pub fn energy_pass(&self) -> bool {
        self.energy.iter().all(|c| c.pass)
    }

    pub fn papr_pass(&self) -> bool {
        self.papr.iter().all(|c| c.pass)
    }

    pub fn spectral_pass(&self) -> bool {
        self.leakage.iter().all(|c| c.pass)
    }

    pub fn to_text(&self) -> String {
        let verdict = |b: bool| if b { "PASS" } else { "FAIL" };
        let mut out = format!("constraint audit ({} mode)\n", self.mode);
        for (title, checks) in [
            ("energy", &self.energy),
            ("papr", &self.papr),
            ("leakage", &self.leakage),
        ] {
            for c in checks.iter() {
                out.push_str(&format!(
                    "{title:<8} {:<12} value {:.12e} limit {:.12e} {}\n",
                    c.name,
                    c.value,
                    c.limit,
                    verdict(c.pass)
                ));
            }
        }
        out.push_str(&format!(
            "energy {} papr {} spectral {} overall {}\n",
            verdict(self.energy_pass()),
            verdict(self.papr_pass()),
            verdict(self.spectral_pass()),
            verdict(self.all_pass())
        ));
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        v["all_pass"] = self.all_pass().into();
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

/// Constraint evaluator shared by the optimizer and the audit.
#[derive(Debug, Clone)]
pub struct Auditor {
    mode: DesignMode,
    n_tx: usize,
    code_length: usize,
    bands: Vec<SpectralBand>,
    sectors: Vec<SpaceFrequencySector>,
    caps: Vec<f64>,
    antenna_energy: f64,
    total_energy: f64,
    rho: f64,
}

impl Auditor {
    pub fn new(cfg: &ScenarioConfig, mode: DesignMode) -> Result<Self> {
        let (bands, sectors) = match mode {
            DesignMode::Bands => (bands_from_config(cfg)?, Vec::new()),
            DesignMode::Sectors => (Vec::new(), sectors_from_config(cfg)?),
        };
        let caps = match mode {
            DesignMode::Bands => bands.iter().map(|b| b.cap).collect(),
            DesignMode::Sectors => sectors.iter().map(|s| s.cap()).collect(),
        };
        Ok(Self {
            mode,
            n_tx: cfg.n_tx(),
            code_length: cfg.code_length(),
            bands,
            sectors,
            caps,
            antenna_energy: cfg.antenna_energy(),
            total_energy: cfg.total_energy(),
            rho: cfg.papr_bound(),
        })
    }

    pub fn caps(&self) -> &[f64] {
        &self.caps
    }

    /// Per-antenna (bands) or joint (sectors) PAPR values.
    pub fn papr(&self, s: &WaveformMatrix) -> Vec<f64> {
        match self.mode {
            DesignMode::Bands => (0..s.n_tx()).map(|n| s.papr(n)).collect(),
            DesignMode::Sectors => vec![s.papr_total()],
        }
    }

    /// `leakage[n][k]` per antenna and band, or a single row of sector leakages.
    pub fn leakage(&self, s: &WaveformMatrix) -> Vec<Vec<f64>> {
        match self.mode {
            DesignMode::Bands => (0..s.n_tx())
                .map(|n| {
                    let row = s.row(n);
                    self.bands.iter().map(|b| b.leakage(&row)).collect()
                })
                .collect(),
            DesignMode::Sectors => {
                let x = s.vec_s();
                vec![self.sectors.iter().map(|sec| sec.leakage(&x)).collect()]
            }
        }
    }

    /// Same verdict as `audit(s).all_pass()`.
    pub fn feasible(&self, s: &WaveformMatrix) -> bool {
        self.audit(s).is_ok_and(|r| r.all_pass())
    }

    pub fn audit(&self, s: &WaveformMatrix) -> Result<AuditReport> {
        if s.n_tx() != self.n_tx || s.code_length() != self.code_length {
            return Err(Error::Shape(format!(
                "waveform is {}x{}, config expects {}x{}",
                s.n_tx(),
                s.code_length(),
                self.n_tx,
                self.code_length
            )));
        }
        let rho = self.rho;
        let energy_check = |name: String, value: f64, target: f64| Check {
            name,
            value,
            limit: target,
            pass: (value - target).abs() <= ENERGY_TOL * target,
        };
        let papr_check = |name: String, value: f64| Check {
            name,
            value,
            limit: rho,
            pass: value <= rho * (1.0 + PAPR_TOL),
        };
        let leak_check = |name: String, value: f64, cap: f64| Check {
            name,
            value,
            limit: cap,
            pass: value <= cap * (1.0 + LEAKAGE_TOL),
        };
        let papr = self.papr(s);
        let leak = self.leakage(s);
        let caps = &self.caps;
        Ok(match self.mode {
            DesignMode::Bands => AuditReport {
                mode: self.mode.to_string(),
                energy: (0..s.n_tx())
                    .map(|n| {
                        energy_check(
                            format!("antenna {}", n + 1),
                            s.antenna_energy(n),
                            self.antenna_energy,
                        )
                    })
                    .collect(),
                papr: papr
                    .iter()
                    .enumerate()
                    .map(|(n, v)| papr_check(format!("antenna {}", n + 1), *v))
                    .collect(),
                leakage: leak
                    .iter()
                    .enumerate()
                    .flat_map(|(n, row)| {
                        row.iter()
                            .zip(caps)
                            .enumerate()
                            .map(move |(k, (v, cap))| (format!("a{} b{}", n + 1, k + 1), *v, *cap))
                    })
                    .map(|(name, v, cap)| leak_check(name, v, cap))
                    .collect(),
            },
            DesignMode::Sectors => AuditReport {
                mode: self.mode.to_string(),
                energy: vec![energy_check(
                    "total".into(),
                    s.total_energy(),
                    self.total_energy,
                )],
                papr: vec![papr_check("total".into(), papr[0])],
                leakage: leak[0]
                    .iter()
                    .zip(caps)
                    .enumerate()
                    .map(|(k, (v, cap))| leak_check(format!("sector {}", k + 1), *v, *cap))
                    .collect(),
            },
        })
    }
}

pub fn audit(cfg: &ScenarioConfig, s: &WaveformMatrix, mode: DesignMode) -> Result<AuditReport> {
    Auditor::new(cfg, mode)?.audit(s)
}

/// SINR (dB) when every clutter patch has Doppler spread `delta`.
///
/// With `refilter` the MVDR filter is re-derived against the spread clutter;
/// otherwise `w` is held fixed.
pub fn doppler_robustness(
    cfg: &ScenarioConfig,
    s: &WaveformMatrix,
    w: &CVector,
    delta: f64,
    refilter: bool,
) -> Result<f64> {
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "Doppler spread {delta} must be >= 0"
        )));
    }
    let patches = build_clutter_geometry(cfg);
    let model = StapModel::from_patches(cfg, &patches).with_doppler_spread(&patches, delta);
    let x = s.vec_s();
    if refilter {
        sinr_opt(&model, &x)
    } else {
        sinr(&model, w, &x)
    }
}
