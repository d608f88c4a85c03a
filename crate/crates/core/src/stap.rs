//! Space-time signal model.
//!
//! The transmit code matrix `S` is `N_t x L`. Two vectorizations are used:
//! `s = vec(S)` (sample-major, index `l*N_t + n`) is the layout of every
//! quadratic form below, and `s̄ = vec(Sᵀ)` (antenna-major, index `n*L + l`)
//! is the layout of the per-antenna block coordinate descent. `s = P s̄` for a
//! commutation matrix `P`, which is only ever applied as an index permutation.
//!
//! A space-time operator `V = d ⊗ J_pᵀ ⊗ A` maps `s` to a length `L·M·N_r`
//! snapshot. It is kept factored: `V s = d ⊗ vec(A S J_p)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{c, cis, inner, norm_sqr, solve_hpd, CMatrix, CVector, HermitianEigen, C64};
use crate::scenario::{build_clutter_geometry, ClutterPatch, ScenarioConfig};

/// Transmit code matrix, one row per antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformMatrix {
    s: CMatrix,
}

impl WaveformMatrix {
    pub fn new(s: CMatrix) -> Self {
        Self { s }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.s
    }

    pub fn n_tx(&self) -> usize {
        self.s.nrows()
    }

    pub fn code_length(&self) -> usize {
        self.s.ncols()
    }

    /// `vec(S)`; nalgebra storage is column-major, which is exactly this order.
    pub fn vec_s(&self) -> CVector {
        CVector::from_column_slice(self.s.as_slice())
    }

    pub fn from_vec_s(s: &CVector, n_tx: usize, code_length: usize) -> Result<Self> {
        if s.len() != n_tx * code_length {
            return Err(Error::Shape(format!(
                "vector of length {} is not {n_tx}x{code_length}",
                s.len()
            )));
        }
        Ok(Self::new(CMatrix::from_column_slice(
            n_tx,
            code_length,
            s.as_slice(),
        )))
    }

    /// `vec(Sᵀ)` = `[s_1; ...; s_Nt]`.
    pub fn vec_bar(&self) -> CVector {
        let (n_tx, len) = self.s.shape();
        CVector::from_fn(n_tx * len, |i, _| self.s[(i / len, i % len)])
    }

    pub fn from_vec_bar(s_bar: &CVector, n_tx: usize, code_length: usize) -> Result<Self> {
        if s_bar.len() != n_tx * code_length {
            return Err(Error::Shape(format!(
                "vector of length {} is not {n_tx}x{code_length}",
                s_bar.len()
            )));
        }
        Ok(Self::new(CMatrix::from_fn(n_tx, code_length, |n, l| {
            s_bar[n * code_length + l]
        })))
    }

    pub fn row(&self, n: usize) -> CVector {
        CVector::from_iterator(self.code_length(), self.s.row(n).iter().copied())
    }

    pub fn set_row(&mut self, n: usize, row: &CVector) {
        for (l, v) in row.iter().enumerate() {
            self.s[(n, l)] = *v;
        }
    }

    pub fn antenna_energy(&self, n: usize) -> f64 {
        self.s.row(n).iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn total_energy(&self) -> f64 {
        self.s.iter().map(|v| v.norm_sqr()).sum()
    }

    /// PAPR of antenna `n`.
    pub fn papr(&self, n: usize) -> f64 {
        papr(self.s.row(n).iter())
    }

    /// PAPR over all `N_t·L` samples.
    pub fn papr_total(&self) -> f64 {
        papr(self.s.iter())
    }
}

/// `max|x|² / mean|x|²`; zero for the zero vector.
pub fn papr<'a>(x: impl Iterator<Item = &'a C64>) -> f64 {
    let (mut peak, mut sum, mut count) = (0.0f64, 0.0, 0usize);
    for v in x {
        let p = v.norm_sqr();
        peak = peak.max(p);
        sum += p;
        count += 1;
    }
    if sum == 0.0 {
        0.0
    } else {
        peak * count as f64 / sum
    }
}

/// ULA steering vector `exp(j2π·d·n·sinθ)`, `n = 0..N-1`.
pub fn ula_steering(theta: f64, spacing: f64, n: usize) -> CVector {
    let phase = 2.0 * PI * spacing * theta.sin();
    CVector::from_fn(n, |i, _| cis(phase * i as f64))
}

/// Temporal steering vector `exp(j2π f m)`, `m = 0..M-1`.
pub fn temporal_steering(f: f64, n_pulses: usize) -> CVector {
    CVector::from_fn(n_pulses, |m, _| cis(2.0 * PI * f * m as f64))
}

/// `X J_p`: column `l` of the result is column `l - p` of `X` (zero outside).
pub fn shift_apply(p: i64, x: &CMatrix) -> CMatrix {
    let len = x.ncols() as i64;
    CMatrix::from_fn(x.nrows(), x.ncols(), |r, l| {
        let src = l as i64 - p;
        if (0..len).contains(&src) {
            x[(r, src as usize)]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `X J_pᵀ = X J_{-p}`.
pub fn shift_apply_transpose(p: i64, x: &CMatrix) -> CMatrix {
    shift_apply(-p, x)
}

/// Array and pulse-train dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub n_tx: usize,
    pub n_rx: usize,
    pub d_tx: f64,
    pub d_rx: f64,
    pub code_length: usize,
    pub n_pulses: usize,
}

impl ArrayGeometry {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            n_tx: cfg.radar.n_tx,
            n_rx: cfg.radar.n_rx,
            d_tx: cfg.radar.d_tx,
            d_rx: cfg.radar.d_rx,
            code_length: cfg.timing.code_length,
            n_pulses: cfg.timing.n_pulses,
        }
    }

    pub fn steer_tx(&self, theta: f64) -> CVector {
        ula_steering(theta, self.d_tx, self.n_tx)
    }

    pub fn steer_rx(&self, theta: f64) -> CVector {
        ula_steering(theta, self.d_rx, self.n_rx)
    }

    /// `A(θ) = b(θ) a(θ)ᵀ`
    pub fn spatial_matrix(&self, theta: f64) -> CMatrix {
        self.steer_rx(theta) * self.steer_tx(theta).transpose()
    }

    /// Length of `s`.
    pub fn waveform_dim(&self) -> usize {
        self.code_length * self.n_tx
    }

    /// Length of a received snapshot.
    pub fn snapshot_dim(&self) -> usize {
        self.code_length * self.n_pulses * self.n_rx
    }

    pub fn operator(&self, theta: f64, doppler: f64, shift: i64) -> SpaceTimeOperator {
        SpaceTimeOperator::new(
            temporal_steering(doppler, self.n_pulses),
            shift,
            self.spatial_matrix(theta),
            self.code_length,
        )
    }
}

/// Factored `V = d ⊗ J_pᵀ ⊗ A` of shape `(L·M·N_r) x (L·N_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeOperator {
    pub temporal: CVector,
    pub shift: i64,
    pub spatial: CMatrix,
    pub code_length: usize,
}

impl SpaceTimeOperator {
    pub fn new(temporal: CVector, shift: i64, spatial: CMatrix, code_length: usize) -> Self {
        Self {
            temporal,
            shift,
            spatial,
            code_length,
        }
    }

    pub fn n_tx(&self) -> usize {
        self.spatial.ncols()
    }

    pub fn n_rx(&self) -> usize {
        self.spatial.nrows()
    }

    pub fn rows(&self) -> usize {
        self.temporal.len() * self.code_length * self.n_rx()
    }

    pub fn cols(&self) -> usize {
        self.code_length * self.n_tx()
    }

    fn check_len(&self, got: usize, want: usize) -> Result<()> {
        if got != want {
            return Err(Error::Shape(format!("expected length {want}, got {got}")));
        }
        Ok(())
    }

    /// `W s = vec(A S J_p)`, length `L·N_r`.
    pub fn spatial_apply(&self, s: &CVector) -> Result<CVector> {
        self.check_len(s.len(), self.cols())?;
        let s_mat = CMatrix::from_column_slice(self.n_tx(), self.code_length, s.as_slice());
        let x = shift_apply(self.shift, &(&self.spatial * s_mat));
        Ok(CVector::from_column_slice(x.as_slice()))
    }

    /// `W† x = vec(A† X J_pᵀ)`, length `L·N_t`.
    pub fn spatial_adjoint(&self, x: &CVector) -> Result<CVector> {
        self.check_len(x.len(), self.code_length * self.n_rx())?;
        let x_mat = CMatrix::from_column_slice(self.n_rx(), self.code_length, x.as_slice());
        let y = shift_apply_transpose(self.shift, &(self.spatial.adjoint() * x_mat));
        Ok(CVector::from_column_slice(y.as_slice()))
    }

    /// `V s = d ⊗ (W s)`
    pub fn apply(&self, s: &CVector) -> Result<CVector> {
        let x = self.spatial_apply(s)?;
        Ok(kron_vec(&self.temporal, &x))
    }

    /// `V† u = W† Σ_m conj(d_m) u_m`
    pub fn adjoint_apply(&self, u: &CVector) -> Result<CVector> {
        self.adjoint_with_temporal(&self.temporal, u)
    }

    /// `W† Σ_m conj(g_m) u_m` for an arbitrary temporal vector `g`.
    pub fn adjoint_with_temporal(&self, g: &CVector, u: &CVector) -> Result<CVector> {
        self.check_len(u.len(), self.rows())?;
        let block = self.code_length * self.n_rx();
        let mut acc = CVector::zeros(block);
        for (m, gm) in g.iter().enumerate() {
            let gm = gm.conj();
            for i in 0..block {
                acc[i] += gm * u[m * block + i];
            }
        }
        self.spatial_adjoint(&acc)
    }
}

/// `a ⊗ b` for column vectors.
pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let nb = b.len();
    CVector::from_fn(a.len() * nb, |i, _| a[i / nb] * b[i % nb])
}

/// Doppler taper `Γ(m,m') = exp(j2πf̄(m-m'))·sinc(δ(m-m'))`, the expectation of
/// `d(f) d(f)†` for `f` uniform on `[f̄ - δ/2, f̄ + δ/2]`.
pub fn doppler_taper(mean_doppler: f64, spread: f64, n_pulses: usize) -> CMatrix {
    CMatrix::from_fn(n_pulses, n_pulses, |m, mp| {
        let k = m as f64 - mp as f64;
        cis(2.0 * PI * mean_doppler * k) * crate::linalg::sinc(spread * k)
    })
}

/// One clutter patch as a covariance term `σ² Γ ⊗ (W s)(W s)†` with `Γ = G G†`.
#[derive(Debug, Clone)]
pub struct ClutterTerm {
    pub op: SpaceTimeOperator,
    pub power: f64,
    /// `M x r` factor of the temporal covariance; the steering vector itself when the spread is zero.
    pub temporal_factor: CMatrix,
}

impl ClutterTerm {
    pub fn new(op: SpaceTimeOperator, power: f64, mean_doppler: f64, spread: f64) -> Self {
        let temporal_factor = if spread == 0.0 {
            CMatrix::from_column_slice(op.temporal.len(), 1, op.temporal.as_slice())
        } else {
            let eig = HermitianEigen::new(&doppler_taper(mean_doppler, spread, op.temporal.len()));
            let mut g = eig.vectors.clone();
            for (k, lam) in eig.values.iter().enumerate() {
                let root = lam.max(0.0).sqrt();
                g.column_mut(k).scale_mut(root);
            }
            g
        };
        Self {
            op,
            power,
            temporal_factor,
        }
    }

    /// Columns `√σ² · (G[:,i] ⊗ W s)`.
    fn covariance_columns(&self, s: &CVector) -> Result<Vec<CVector>> {
        let x = self.op.spatial_apply(s)?;
        let amp = self.power.sqrt();
        Ok(self
            .temporal_factor
            .column_iter()
            .map(|g| kron_vec(&g.into_owned(), &x) * c(amp, 0.0))
            .collect())
    }

    /// Columns `√σ² · W† Σ_m conj(G[m,i]) w_m`, so that `w†R w = s† (F F†) s`.
    fn quadratic_columns(&self, w: &CVector) -> Result<Vec<CVector>> {
        let amp = self.power.sqrt();
        self.temporal_factor
            .column_iter()
            .map(|g| Ok(self.op.adjoint_with_temporal(&g.into_owned(), w)? * c(amp, 0.0)))
            .collect()
    }
}

/// Evaluate `f` over `items` on up to `workers` threads, preserving order.
/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "STAPWAVE_WORKERS";

/// Worker count from the environment; 1 when unset or invalid.
pub fn workers_from_env() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or(1)
}

/// Map `f` over `items` on up to `workers` threads, keeping input order.
pub(crate) fn ordered_map<T: Sync, U: Send>(
    items: &[T],
    workers: usize,
    f: impl Fn(&T) -> Result<U> + Sync,
) -> Result<Vec<U>> {
    if workers <= 1 || items.len() < 2 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    let f = &f;
    let parts: Vec<Result<Vec<U>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(f).collect::<Result<Vec<U>>>()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(items.len());
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// Stack columns into a matrix and return `F F†`.
fn gram(columns: Vec<Vec<CVector>>, dim: usize) -> CMatrix {
    let cols: Vec<CVector> = columns.into_iter().flatten().collect();
    if cols.is_empty() {
        return CMatrix::zeros(dim, dim);
    }
    let f = CMatrix::from_columns(&cols);
    &f * f.adjoint()
}

/// Target, clutter and noise description consumed by the optimizers.
#[derive(Debug, Clone)]
pub struct StapModel {
    pub geometry: ArrayGeometry,
    pub noise_power: f64,
    /// `|α_t|`
    pub target_amplitude: f64,
    pub target: SpaceTimeOperator,
    pub clutter: Vec<ClutterTerm>,
    /// Threads used for per-patch work. Results do not depend on it.
    pub workers: usize,
}

impl StapModel {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self::from_patches(cfg, &build_clutter_geometry(cfg))
    }

    pub fn from_patches(cfg: &ScenarioConfig, patches: &[ClutterPatch]) -> Self {
        let geometry = ArrayGeometry::from_config(cfg);
        let target = geometry.operator(cfg.target_azimuth(), cfg.target_doppler(), 0);
        let clutter = patches
            .iter()
            .map(|p| {
                ClutterTerm::new(
                    geometry.operator(p.azimuth, p.mean_doppler, p.ring),
                    p.power,
                    p.mean_doppler,
                    p.doppler_spread,
                )
            })
            .collect();
        Self {
            geometry,
            noise_power: cfg.noise.noise_power,
            target_amplitude: cfg.target.amplitude.abs(),
            target,
            clutter,
            workers: 1,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    /// `|α_t|²`
    pub fn target_gain(&self) -> f64 {
        self.target_amplitude * self.target_amplitude
    }

    /// `R_c(s) = Σ σ² Γ ⊗ (W s)(W s)†`, accumulated ring-major, patch ascending.
    pub fn clutter_covariance(&self, s: &CVector) -> Result<CMatrix> {
        let cols = ordered_map(&self.clutter, self.workers, |t| t.covariance_columns(s))?;
        Ok(gram(cols, self.geometry.snapshot_dim()))
    }

    /// `R_v(s) = R_c(s) + σ² I`
    pub fn interference_covariance(&self, s: &CVector) -> Result<CMatrix> {
        let mut r = self.clutter_covariance(s)?;
        for i in 0..r.nrows() {
            r[(i, i)] += c(self.noise_power, 0.0);
        }
        Ok(r)
    }

    /// `Q(w)` with `w† R_c(s) w = s† Q s` for every `s`.
    pub fn clutter_quadratic(&self, w: &CVector) -> Result<CMatrix> {
        let cols = ordered_map(&self.clutter, self.workers, |t| t.quadratic_columns(w))?;
        Ok(gram(cols, self.geometry.waveform_dim()))
    }

    /// `v_t(s) = V(w_t, θ_t) s`
    pub fn target_vector(&self, s: &CVector) -> Result<CVector> {
        self.target.apply(s)
    }

    /// `D = (V_t† w)(V_t† w)†` and `β = σ² ‖w‖²`.
    pub fn target_forms(&self, w: &CVector) -> Result<(CMatrix, f64)> {
        let q = self.target.adjoint_apply(w)?;
        let d = &q * q.adjoint();
        Ok((d, self.noise_power * norm_sqr(w)))
    }

    /// Minorizer of `SINR(s)` touching it at `s_prev`.
    pub fn mm_surrogate(&self, s_prev: &CVector) -> Result<MmSurrogate> {
        let r_v = self.interference_covariance(s_prev)?;
        let v_t = self.target_vector(s_prev)?;
        let u = solve_hpd(&r_v, &v_t)?;
        Ok(MmSurrogate {
            r: self.clutter_quadratic(&u)?,
            c: self.target.adjoint_apply(&u)?,
            constant: -self.noise_power * norm_sqr(&u),
            gain: self.target_gain(),
        })
    }

    /// Same geometry with every patch given the Doppler spread `spread`.
    pub fn with_doppler_spread(&self, patches: &[ClutterPatch], spread: f64) -> Self {
        let mut out = self.clone();
        out.clutter = self
            .clutter
            .iter()
            .zip(patches)
            .map(|(t, p)| ClutterTerm::new(t.op.clone(), t.power, p.mean_doppler, spread))
            .collect();
        out
    }
}

/// `gain · (-s†R s + 2Re(c†s) + constant)`, a lower bound on the MVDR SINR.
///
/// With `u = R_v(s_prev)⁻¹ v_t(s_prev)`: `R = Σ σ² V†u u†V`, `c = V_t† u` and
/// `constant = -σ²‖u‖² = -tr(u u† R_u)`.
#[derive(Debug, Clone)]
pub struct MmSurrogate {
    pub r: CMatrix,
    pub c: CVector,
    pub constant: f64,
    pub gain: f64,
}

impl MmSurrogate {
    pub fn value(&self, s: &CVector) -> f64 {
        let quad = inner(s, &(&self.r * s)).re;
        self.gain * (-quad + 2.0 * inner(&self.c, s).re + self.constant)
    }
}

/// `c̄ = P† c`: reorder a sample-major vector into antenna-major blocks.
pub fn to_bar(v: &CVector, n_tx: usize, code_length: usize) -> CVector {
    CVector::from_fn(n_tx * code_length, |i, _| {
        let (n, l) = (i / code_length, i % code_length);
        v[l * n_tx + n]
    })
}

/// `c = P c̄`
pub fn from_bar(v_bar: &CVector, n_tx: usize, code_length: usize) -> CVector {
    CVector::from_fn(n_tx * code_length, |i, _| {
        let (l, n) = (i / n_tx, i % n_tx);
        v_bar[n * code_length + l]
    })
}

/// `T̄ = P† T P` split into `N_t x N_t` blocks of size `L x L`, plus an optional
/// linear term `c̄ = P† c`.
#[derive(Debug, Clone)]
pub struct BlockPartition {
    pub n_blocks: usize,
    pub block_len: usize,
    pub bar: CMatrix,
    pub linear: Option<CVector>,
}

impl BlockPartition {
    pub fn new(
        m: &CMatrix,
        linear: Option<&CVector>,
        n_tx: usize,
        code_length: usize,
    ) -> Result<Self> {
        let dim = n_tx * code_length;
        if m.shape() != (dim, dim) {
            return Err(Error::Shape(format!(
                "matrix {:?} does not match {n_tx} blocks of {code_length}",
                m.shape()
            )));
        }
        let idx = |i: usize| (i % code_length) * n_tx + i / code_length;
        let bar = CMatrix::from_fn(dim, dim, |i, j| m[(idx(i), idx(j))]);
        let linear = match linear {
            Some(v) if v.len() != dim => {
                return Err(Error::Shape(format!("linear term of length {}", v.len())))
            }
            Some(v) => Some(to_bar(v, n_tx, code_length)),
            None => None,
        };
        Ok(Self {
            n_blocks: n_tx,
            block_len: code_length,
            bar,
            linear,
        })
    }

    /// A single block spanning the whole vector, in the given order.
    pub fn joint(m: &CMatrix, linear: Option<&CVector>) -> Self {
        Self {
            n_blocks: 1,
            block_len: m.nrows(),
            bar: m.clone(),
            linear: linear.cloned(),
        }
    }

    pub fn block(&self, n: usize, m: usize) -> CMatrix {
        let l = self.block_len;
        self.bar.view((n * l, m * l), (l, l)).into_owned()
    }

    pub fn diag_block(&self, n: usize) -> CMatrix {
        self.block(n, n)
    }

    /// `Σ_{m≠n} T̄_{n,m} s_m (+ c_n)` evaluated at the current `s̄`.
    pub fn linear_term(&self, n: usize, s_bar: &CVector) -> CVector {
        let l = self.block_len;
        let mut out = match &self.linear {
            Some(c_bar) => c_bar.rows(n * l, l).into_owned(),
            None => CVector::zeros(l),
        };
        for m in (0..self.n_blocks).filter(|&m| m != n) {
            out += self.bar.view((n * l, m * l), (l, l)) * s_bar.rows(m * l, l);
        }
        out
    }

    /// `s̄†T̄s̄ + 2Re(c̄†s̄)`
    pub fn objective(&self, s_bar: &CVector) -> f64 {
        let mut v = inner(s_bar, &(&self.bar * s_bar)).re;
        if let Some(c_bar) = &self.linear {
            v += 2.0 * inner(c_bar, s_bar).re;
        }
        v
    }
}
