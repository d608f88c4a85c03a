//! ADMM for one coordinate block:
//!
//! ```text
//! max  s†T s + 2Re(lin†s)
//! s.t. ‖s‖² = e,  PAPR(s) <= ρ,  s†B_k s <= 1  (k = 1..K)
//! ```
//!
//! with splittings `z = T^{1/2}s`, `g_k = B_k^{1/2}s` and scaled duals `d`, `c_k`.
//! The `s`-step is solved by an MM loop whose every iterate is a PAPR projection.

use crate::error::{Error, Result};
use crate::linalg::{c, inner, norm_sqr, quad_form, CMatrix, CVector, HermitianEigen};

/// Slack on `s†B_k s <= 1` under which a block is treated as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Relative change of the `s`-step surrogate that ends the MM loop.
const MM_INNER_TOL: f64 = 1e-8;

/// Maximize `Re(s†u)` subject to `‖s‖² = e` and `max|s_l|² <= ρe/L`.
pub fn papr_project(u: &CVector, energy: f64, rho: f64) -> Result<CVector> {
    let len = u.len();
    if len == 0 {
        return Err(Error::InvalidArgument("empty code".into()));
    }
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "energy {energy} must be positive"
        )));
    }
    let lf = len as f64;
    if !(rho >= 1.0 - 1e-12 && rho <= lf * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument(format!(
            "PAPR bound {rho} outside [1, {len}]"
        )));
    }
    let mags: Vec<f64> = u.iter().map(|v| v.norm()).collect();
    let phase = |l: usize| {
        if mags[l] > 0.0 {
            u[l] / mags[l]
        } else {
            c(1.0, 0.0)
        }
    };
    let flat = (energy / lf).sqrt();
    if rho <= 1.0 || mags.iter().all(|&a| a == 0.0) {
        return Ok(CVector::from_fn(len, |l, _| phase(l) * flat));
    }

    let cap = (rho * energy / lf).sqrt();
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by(|&i, &j| mags[j].total_cmp(&mags[i]));
    let mut out = vec![0.0; len];
    for k in 0..len {
        let remaining = energy - k as f64 * cap * cap;
        let rest = &order[k..];
        let sum_sq: f64 = rest.iter().map(|&l| mags[l] * mags[l]).sum();
        let fits = if sum_sq > 0.0 {
            let scale = (remaining.max(0.0) / sum_sq).sqrt();
            if mags[rest[0]] * scale <= cap {
                rest.iter().for_each(|&l| out[l] = mags[l] * scale);
                true
            } else {
                false
            }
        } else {
            // Only zeros left: spread the remaining energy evenly.
            let m = (remaining.max(0.0) / rest.len() as f64).sqrt();
            rest.iter().for_each(|&l| out[l] = m);
            true
        };
        if fits {
            order[..k].iter().for_each(|&l| out[l] = cap);
            return Ok(CVector::from_fn(len, |l, _| phase(l) * out[l]));
        }
    }
    unreachable!("the water level always settles before every sample is capped")
}

/// `x` if `‖x‖ <= 1`, else `x/‖x‖`.
pub fn project_unit_ball(x: &CVector) -> CVector {
    let n = x.norm();
    if n <= 1.0 {
        x.clone()
    } else {
        x / c(n, 0.0)
    }
}

/// A quadratic constraint `s†B s <= 1` with its square root cached.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub b: CMatrix,
    pub b_sqrt: CMatrix,
}

impl Constraint {
    /// `B = R / cap`
    pub fn new(r: &CMatrix, cap: f64) -> Result<Self> {
        if cap.is_nan() || cap <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "cap {cap} must be positive"
            )));
        }
        let b = r / c(cap, 0.0);
        let b_sqrt = HermitianEigen::new(&b).sqrt_psd();
        Ok(Self { b, b_sqrt })
    }

    pub fn value(&self, s: &CVector) -> f64 {
        quad_form(&self.b, s).max(0.0)
    }
}

/// One block subproblem.
#[derive(Debug, Clone)]
pub struct BlockProblem<'a> {
    pub tnn: CMatrix,
    pub tnn_sqrt: CMatrix,
    pub lin: CVector,
    pub constraints: &'a [Constraint],
    pub energy: f64,
    pub rho: f64,
    /// `λ_max(T + ΣB_k)`
    shift: f64,
    /// `T + ΣB_k`
    curvature: CMatrix,
}

impl<'a> BlockProblem<'a> {
    pub fn new(
        tnn: CMatrix,
        lin: CVector,
        constraints: &'a [Constraint],
        energy: f64,
        rho: f64,
    ) -> Result<Self> {
        let n = tnn.nrows();
        if tnn.ncols() != n || lin.len() != n || constraints.iter().any(|k| k.b.nrows() != n) {
            return Err(Error::Shape(format!(
                "block problem of size {n} with mismatched terms"
            )));
        }
        let tnn_sqrt = HermitianEigen::new(&tnn).sqrt_psd();
        let mut curvature = tnn.clone();
        for k in constraints {
            curvature += &k.b;
        }
        let shift = HermitianEigen::new(&curvature).max();
        Ok(Self {
            tnn,
            tnn_sqrt,
            lin,
            constraints,
            energy,
            rho,
            shift,
            curvature,
        })
    }

    pub fn len(&self) -> usize {
        self.lin.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lin.is_empty()
    }

    /// `s†T s + 2Re(lin†s)`
    pub fn objective(&self, s: &CVector) -> f64 {
        quad_form(&self.tnn, s) + 2.0 * inner(&self.lin, s).re
    }

    /// `max_k (s†B_k s - 1)`, floored at zero.
    pub fn violation(&self, s: &CVector) -> f64 {
        self.constraints
            .iter()
            .map(|k| k.value(s) - 1.0)
            .fold(0.0, f64::max)
    }

    pub fn is_feasible(&self, s: &CVector) -> bool {
        self.violation(s) <= FEASIBILITY_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmSettings {
    pub penalty: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub mm_inner_max_iter: usize,
}

impl AdmmSettings {
    pub fn from_solver(cfg: &crate::scenario::SolverConfig) -> Self {
        Self {
            penalty: cfg.penalty,
            tol: cfg.admm_tol,
            max_iter: cfg.admm_max_iter,
            mm_inner_max_iter: cfg.mm_inner_max_iter,
        }
    }
}

/// Primal, auxiliary and scaled dual variables of one block.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub s: CVector,
    pub z: CVector,
    pub t: f64,
    pub g: Vec<CVector>,
    pub c: Vec<CVector>,
    pub d: CVector,
    pub penalty: f64,
    pub residual_history: Vec<f64>,
}

impl AdmmState {
    /// Start at `s0` with consensus auxiliaries and the duals that make
    /// `z = T^{1/2}s` a fixed point of the `z`-step.
    pub fn new(prob: &BlockProblem, s0: &CVector, penalty: f64) -> Result<Self> {
        if penalty <= 2.0 {
            return Err(Error::config("solver.penalty", "penalty must exceed 2"));
        }
        let z = &prob.tnn_sqrt * s0;
        let d = &z * c(2.0 / penalty, 0.0);
        Ok(Self {
            s: s0.clone(),
            t: norm_sqr(&z),
            z,
            g: prob
                .constraints
                .iter()
                .map(|k| project_unit_ball(&(&k.b_sqrt * s0)))
                .collect(),
            c: vec![CVector::zeros(s0.len()); prob.constraints.len()],
            d,
            penalty,
            residual_history: Vec::new(),
        })
    }

    /// Keep the auxiliaries and duals but move the primal to `s`.
    pub fn warm(&mut self, s: &CVector) {
        self.s = s.clone();
    }

    /// `s†Y s + 2Re(s†v)` for the current auxiliaries.
    fn s_surrogate(&self, prob: &BlockProblem, s: &CVector, v: &CVector) -> f64 {
        -0.5 * self.penalty * quad_form(&prob.curvature, s) + 2.0 * inner(s, v).re
    }

    /// `v = (ϑ/2)(T^{1/2}(z+d) + Σ B_k^{1/2}(g_k+c_k)) + lin`
    fn s_linear(&self, prob: &BlockProblem) -> CVector {
        let mut h = &prob.tnn_sqrt * (&self.z + &self.d);
        for (k, con) in prob.constraints.iter().enumerate() {
            h += &con.b_sqrt * (&self.g[k] + &self.c[k]);
        }
        h * c(0.5 * self.penalty, 0.0) + &prob.lin
    }

    /// MM ascent on the `s`-subproblem. Returns the surrogate values visited.
    pub fn update_s(&mut self, prob: &BlockProblem, max_inner: usize) -> Result<Vec<f64>> {
        let v = self.s_linear(prob);
        let half = 0.5 * self.penalty;
        let mut s = papr_project(&self.s, prob.energy, prob.rho)?;
        let mut values = vec![self.s_surrogate(prob, &s, &v)];
        for _ in 0..max_inner.max(1) {
            let u = (&s * c(prob.shift, 0.0) - &prob.curvature * &s) * c(half, 0.0) + &v;
            s = papr_project(&u, prob.energy, prob.rho)?;
            let value = self.s_surrogate(prob, &s, &v);
            let prev = *values.last().unwrap();
            values.push(value);
            if (value - prev).abs() <= MM_INNER_TOL * value.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        self.s = s;
        Ok(values)
    }

    /// `q = T^{1/2}s - d`, `z = ϑq/(ϑ-2)`, `t = ‖z‖²`.
    pub fn update_zt(&mut self, prob: &BlockProblem) {
        let q = &prob.tnn_sqrt * &self.s - &self.d;
        self.z = q * c(self.penalty / (self.penalty - 2.0), 0.0);
        self.t = norm_sqr(&self.z);
    }

    /// `g_k = Proj_ball(B_k^{1/2}s - c_k)`
    pub fn update_g(&mut self, prob: &BlockProblem) {
        for (k, con) in prob.constraints.iter().enumerate() {
            self.g[k] = project_unit_ball(&(&con.b_sqrt * &self.s - &self.c[k]));
        }
    }

    /// `c_k += g_k - B_k^{1/2}s`, `d += z - T^{1/2}s`.
    pub fn update_duals(&mut self, prob: &BlockProblem) {
        for (k, con) in prob.constraints.iter().enumerate() {
            let gap = &self.g[k] - &con.b_sqrt * &self.s;
            self.c[k] += gap;
        }
        self.d += &self.z - &prob.tnn_sqrt * &self.s;
    }

    /// Norm of the stacked consensus gaps.
    pub fn residual(&self, prob: &BlockProblem) -> f64 {
        let mut r = norm_sqr(&(&self.z - &prob.tnn_sqrt * &self.s));
        for (k, con) in prob.constraints.iter().enumerate() {
            r += norm_sqr(&(&self.g[k] - &con.b_sqrt * &self.s));
        }
        r.sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct AdmmOutcome {
    pub s: CVector,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub feasible: bool,
}

/// Iterate until the residual drops below `settings.tol` or the budget runs out.
///
/// The returned block always meets the energy and PAPR constraints. If the
/// residual stalls, the best iterate seen is returned: the feasible one with
/// the largest objective, or failing that the least violating one.
pub fn run_admm(
    prob: &BlockProblem,
    state: &mut AdmmState,
    settings: &AdmmSettings,
) -> Result<AdmmOutcome> {
    state.residual_history.clear();
    let mut best: Option<(bool, f64, CVector)> = None;
    let mut consider = |s: &CVector| {
        let feasible = prob.is_feasible(s);
        let score = if feasible {
            prob.objective(s)
        } else {
            -prob.violation(s)
        };
        let better = match &best {
            None => true,
            Some((bf, bs, _)) => (feasible && !bf) || (feasible == *bf && score > *bs),
        };
        if better {
            best = Some((feasible, score, s.clone()));
        }
    };
    let mut converged = false;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    for _ in 0..settings.max_iter {
        iterations += 1;
        state.update_s(prob, settings.mm_inner_max_iter)?;
        state.update_zt(prob);
        state.update_g(prob);
        state.update_duals(prob);
        residual = state.residual(prob);
        state.residual_history.push(residual);
        if !residual.is_finite() {
            return Err(Error::NonFinite("ADMM residual".into()));
        }
        consider(&state.s);
        if residual < settings.tol {
            converged = true;
            break;
        }
    }
    let s = if converged && prob.is_feasible(&state.s) {
        state.s.clone()
    } else {
        best.map(|b| b.2).unwrap_or_else(|| state.s.clone())
    };
    Ok(AdmmOutcome {
        feasible: prob.is_feasible(&s),
        s,
        iterations,
        residual,
        converged,
    })
}
