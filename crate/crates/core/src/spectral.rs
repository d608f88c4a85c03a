//! Stopband and space-frequency constraint matrices, ESD evaluation and
//! leakage accounting.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, cis, db, lambda_min, quad_form, CMatrix, CVector, C64};
use crate::scenario::ScenarioConfig;

/// `R_I(m,l) = ∫_{f_lo}^{f_hi} exp(j2πf(m-l)) df`, the Gram matrix of a stopband.
pub fn band_matrix(f_lo: f64, f_hi: f64, code_length: usize) -> Result<CMatrix> {
    if !(0.0..=1.0).contains(&f_lo) || !(0.0..=1.0).contains(&f_hi) || f_lo >= f_hi {
        return Err(Error::InvalidArgument(format!(
            "band [{f_lo}, {f_hi}] must satisfy 0 <= lo < hi <= 1"
        )));
    }
    Ok(exp_integral_toeplitz(f_lo, f_hi, 1.0, code_length))
}

/// `M(p,q) = ∫_{x_lo}^{x_hi} exp(j2πx·scale·(p-q)) dx`
fn exp_integral_toeplitz(x_lo: f64, x_hi: f64, scale: f64, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |p, q| {
        let k = (p as f64 - q as f64) * scale;
        if p == q || k == 0.0 {
            c(x_hi - x_lo, 0.0)
        } else {
            (cis(2.0 * PI * x_hi * k) - cis(2.0 * PI * x_lo * k)) / C64::new(0.0, 2.0 * PI * k)
        }
    })
}

/// `U(p,q) = ∫_{sinθ_lo}^{sinθ_hi} exp(j2πv(q-p)d_tx) dv`, angles in radians and
/// spacing in wavelengths.
pub fn sector_matrix(theta_lo: f64, theta_hi: f64, d_tx: f64, n_tx: usize) -> Result<CMatrix> {
    let half = PI / 2.0;
    if theta_lo < -half || theta_hi > half || theta_lo > theta_hi {
        return Err(Error::InvalidArgument(format!(
            "sector [{theta_lo}, {theta_hi}] rad must satisfy -π/2 <= lo <= hi <= π/2"
        )));
    }
    // (q - p) rather than (p - q): the transpose of the band form.
    Ok(exp_integral_toeplitz(
        theta_lo.sin(),
        theta_hi.sin(),
        -d_tx,
        n_tx,
    ))
}

/// `F_I = R_I ⊗ U`, acting on `s = vec(S)`.
pub fn space_frequency_matrix(r_i: &CMatrix, u: &CMatrix) -> CMatrix {
    r_i.kronecker(u)
}

/// A stopband with its Gram matrix and linear energy cap.
#[derive(Debug, Clone)]
pub struct SpectralBand {
    pub f_lo: f64,
    pub f_hi: f64,
    pub cap: f64,
    pub r_i: CMatrix,
}

impl SpectralBand {
    pub fn new(f_lo: f64, f_hi: f64, cap: f64, code_length: usize) -> Result<Self> {
        Ok(Self {
            f_lo,
            f_hi,
            cap,
            r_i: band_matrix(f_lo, f_hi, code_length)?,
        })
    }

    /// `s_n† R_I s_n`
    pub fn leakage(&self, s_n: &CVector) -> f64 {
        leakage(s_n, &self.r_i)
    }
}

/// A stopband restricted to an angular sector, acting on the full `s`.
#[derive(Debug, Clone)]
pub struct SpaceFrequencySector {
    pub band: SpectralBand,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub u: CMatrix,
    pub f_i: CMatrix,
}

impl SpaceFrequencySector {
    pub fn new(
        band: SpectralBand,
        theta_lo: f64,
        theta_hi: f64,
        d_tx: f64,
        n_tx: usize,
    ) -> Result<Self> {
        let u = sector_matrix(theta_lo, theta_hi, d_tx, n_tx)?;
        let f_i = space_frequency_matrix(&band.r_i, &u);
        Ok(Self {
            band,
            theta_lo,
            theta_hi,
            u,
            f_i,
        })
    }

    pub fn cap(&self) -> f64 {
        self.band.cap
    }

    /// `s† F_I s` for `s = vec(S)`.
    pub fn leakage(&self, s: &CVector) -> f64 {
        leakage(s, &self.f_i)
    }
}

/// `x† R x`, clipped at zero against round-off.
pub fn leakage(x: &CVector, r: &CMatrix) -> f64 {
    quad_form(r, x).max(0.0)
}

pub fn bands_from_config(cfg: &ScenarioConfig) -> Result<Vec<SpectralBand>> {
    cfg.bands
        .iter()
        .map(|b| SpectralBand::new(b.f_lo, b.f_hi, b.cap(), cfg.code_length()))
        .collect()
}

pub fn sectors_from_config(cfg: &ScenarioConfig) -> Result<Vec<SpaceFrequencySector>> {
    if cfg.sectors.len() != cfg.bands.len() {
        return Err(Error::config(
            "sectors",
            "sectors must pair one-to-one with bands",
        ));
    }
    bands_from_config(cfg)?
        .into_iter()
        .zip(&cfg.sectors)
        .map(|(band, s)| {
            SpaceFrequencySector::new(
                band,
                s.theta_lo_deg.to_radians(),
                s.theta_hi_deg.to_radians(),
                cfg.radar.d_tx,
                cfg.n_tx(),
            )
        })
        .collect()
}

/// `|s_n† a(f)|²` on each grid frequency.
pub fn esd(s_n: &CVector, grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&f| {
            s_n.iter()
                .enumerate()
                .map(|(l, v)| v.conj() * cis(2.0 * PI * f * l as f64))
                .sum::<C64>()
                .norm_sqr()
        })
        .collect()
}

/// `k/n` for `k = 0..n`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 / n as f64).collect()
}

/// Rows `(antenna, freq, esd_db)` over the default `4L`-point grid.
pub fn esd_rows(s: &crate::stap::WaveformMatrix, points: Option<usize>) -> Vec<(usize, f64, f64)> {
    let grid = uniform_grid(points.unwrap_or(4 * s.code_length()));
    let mut rows = Vec::with_capacity(grid.len() * s.n_tx());
    for n in 0..s.n_tx() {
        for (f, v) in grid.iter().zip(esd(&s.row(n), &grid)) {
            rows.push((n + 1, *f, db(v)));
        }
    }
    rows
}

pub const ESD_HEADER: [&str; 3] = ["antenna", "freq", "esd_db"];

/// One line of a feasibility precheck.
#[derive(Debug, Clone, Serialize)]
pub struct PrecheckEntry {
    pub band: usize,
    /// Smallest leakage achievable at the required energy, ignoring PAPR.
    pub min_leakage: f64,
    pub cap: f64,
    pub pass: bool,
}

/// Necessary (not sufficient) feasibility conditions for the spectral caps.
#[derive(Debug, Clone, Serialize)]
pub struct PrecheckReport {
    pub entries: Vec<PrecheckEntry>,
}

impl PrecheckReport {
    pub fn feasible(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "band {}: min leakage {:.6e} vs cap {:.6e} {}\n",
                e.band,
                e.min_leakage,
                e.cap,
                if e.pass { "PASS" } else { "FAIL" }
            ));
        }
        out
    }
}

/// Per-antenna bands: `λ_min(R_I)·e_t/N_t <= E_I`.
pub fn feasibility_precheck(bands: &[SpectralBand], cfg: &ScenarioConfig) -> PrecheckReport {
    let energy = cfg.antenna_energy();
    precheck(bands.iter().map(|b| (lambda_min(&b.r_i) * energy, b.cap)))
}

/// Sector mode: `λ_min(F_I)·e_t <= E_I`.
pub fn sector_precheck(sectors: &[SpaceFrequencySector], cfg: &ScenarioConfig) -> PrecheckReport {
    let energy = cfg.total_energy();
    precheck(
        sectors
            .iter()
            .map(|s| (lambda_min(&s.f_i) * energy, s.cap())),
    )
}

fn precheck(items: impl Iterator<Item = (f64, f64)>) -> PrecheckReport {
    PrecheckReport {
        entries: items
            .enumerate()
            .map(|(k, (min_leakage, cap))| PrecheckEntry {
                band: k + 1,
                min_leakage: min_leakage.max(0.0),
                cap,
                pass: min_leakage <= cap,
            })
            .collect(),
    }
}
