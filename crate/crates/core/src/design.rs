//! Cyclic waveform/filter design.
//!
//! Each outer iteration fixes the MVDR filter of the current waveform and then
//! improves the waveform, either by a Dinkelbach loop over the SINR ratio with
//! the filter held fixed (`DkAdmm`) or by maximizing a tangent minorizer of the
//! filter-optimized SINR (`MmAdmm`). Both reduce to block coordinate descent over
//! quadratic programs `max s†T̂s + 2Re(c†s)` solved per block by ADMM.

use std::time::Instant;

use log::{debug, warn};

use crate::admm::{papr_project, run_admm, AdmmSettings, AdmmState, BlockProblem, Constraint};
use crate::analysis::{Auditor, ENERGY_TOL, PAPR_TOL};
use crate::error::{Error, Result};
use crate::filter::design_filter;
use crate::linalg::{
    c, db, inner, norm_sqr, quad_form, trace_re, CMatrix, CVector, HermitianEigen,
};
use crate::scenario::{initial_waveform, Algorithm, ScenarioConfig};
use crate::spectral::{bands_from_config, sectors_from_config};
use crate::stap::{papr, workers_from_env, BlockPartition, StapModel, WaveformMatrix};

/// Above this many unknowns η and μ come from trace bounds instead of eigenvalues.
pub const TRACE_BOUND_DIM: usize = 512;

/// Which spectral constraints apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignMode {
    /// Per-antenna stopbands; one CD block per antenna.
    Bands,
    /// Space-frequency sectors over the full stacked code; one block.
    Sectors,
}

impl std::fmt::Display for DesignMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DesignMode::Bands => "bands",
            DesignMode::Sectors => "sectors",
        })
    }
}

#[derive(Debug, Clone)]
pub struct DesignOptions {
    pub algorithm: Algorithm,
    pub mode: DesignMode,
    /// Keep every outer iterate (for diagnostics).
    pub keep_iterates: bool,
    /// Carry ADMM auxiliaries and duals across outer iterations.
    pub warm_start: bool,
}

impl DesignOptions {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            algorithm: cfg.solver.algorithm,
            mode: DesignMode::Bands,
            keep_iterates: false,
            warm_start: true,
        }
    }
}

/// One line of the design trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub outer_iter: usize,
    pub inner_iter: usize,
    pub cpu_seconds: f64,
    pub sinr_db: f64,
    pub flags: Vec<&'static str>,
    pub papr: Vec<f64>,
    /// `leakage[n][k]`: antenna `n`, band `k`. In sector mode a single row over all antennas.
    pub leakage: Vec<Vec<f64>>,
}

impl TraceRow {
    pub fn flag(&self) -> String {
        if self.flags.is_empty() {
            "ok".to_string()
        } else {
            self.flags.join(";")
        }
    }

    pub fn is_feasible(&self) -> bool {
        !self.flags.contains(&"infeasible")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DesignTrace {
    pub rows: Vec<TraceRow>,
}

impl DesignTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// SINR of every outer iterate at the start of its iteration (`inner_iter == 0`).
    pub fn outer_sinr_db(&self) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.inner_iter == 0)
            .map(|r| r.sinr_db)
            .collect()
    }

    /// Largest drop between consecutive rows from the first feasible row on.
    pub fn worst_decrease_db(&self) -> f64 {
        let start = self
            .rows
            .iter()
            .position(|r| r.is_feasible())
            .unwrap_or(self.rows.len());
        self.rows[start..]
            .windows(2)
            .map(|w| w[0].sinr_db - w[1].sinr_db)
            .fold(0.0, f64::max)
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["outer_iter", "inner_iter", "cpu_seconds", "sinr_db", "flag"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        if let Some(row) = self.rows.first() {
            h.extend((0..row.papr.len()).map(|n| format!("papr_a{}", n + 1)));
            for (n, per) in row.leakage.iter().enumerate() {
                h.extend((0..per.len()).map(|k| format!("leak_a{}_b{}", n + 1, k + 1)));
            }
        }
        h
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut v = vec![
                    r.outer_iter.to_string(),
                    r.inner_iter.to_string(),
                    format!("{:.6}", r.cpu_seconds),
                    format!("{:e}", r.sinr_db),
                    r.flag(),
                ];
                v.extend(r.papr.iter().map(|x| format!("{x:e}")));
                v.extend(r.leakage.iter().flatten().map(|x| format!("{x:e}")));
                v
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct DesignResult {
    pub s: WaveformMatrix,
    pub w: CVector,
    pub sinr_db: f64,
    /// The initial waveform with its own MVDR filter.
    pub initial_sinr_db: f64,
    pub trace: DesignTrace,
    /// The outer loop met its tolerance with a feasible waveform.
    pub converged: bool,
    /// The final waveform satisfies every constraint.
    pub feasible: bool,
    /// Blocks whose ADMM hit its iteration cap without a feasible iterate.
    pub stalls: usize,
    /// Ratio sequences of every Dinkelbach loop, tagged with feasibility at entry.
    pub dinkelbach: Vec<(bool, Vec<f64>)>,
    pub iterates: Vec<WaveformMatrix>,
    pub warnings: Vec<String>,
}

/// Shift that makes `T = D - f(Q + β/e·I)` positive semidefinite.
#[derive(Debug, Clone)]
pub struct ShiftedMatrix {
    pub matrix: CMatrix,
    pub shift: f64,
    pub trace_bound: bool,
}

/// `T̂ = D - f(Q + (β/e)I) + ηI` with `η = max(0, -λ_min(T)) + 1e-8(1 + |λ_min(T)|)`.
pub fn dinkelbach_matrix(
    d: &CMatrix,
    q: &CMatrix,
    beta: f64,
    energy: f64,
    f: f64,
) -> ShiftedMatrix {
    let n = d.nrows();
    let mut t = d - q * c(f, 0.0);
    for i in 0..n {
        t[(i, i)] -= c(f * beta / energy, 0.0);
    }
    let (lmin, trace_bound) = if n > TRACE_BOUND_DIM {
        // λ_min(T) >= -λ_max(f(Q + β/e I)) >= -f(tr Q + nβ/e)
        (-f * (trace_re(q) + n as f64 * beta / energy), true)
    } else {
        (HermitianEigen::new(&t).min(), false)
    };
    let shift = (-lmin).max(0.0) + 1e-8 * (1.0 + lmin.abs());
    for i in 0..n {
        t[(i, i)] += c(shift, 0.0);
    }
    ShiftedMatrix {
        matrix: t,
        shift,
        trace_bound,
    }
}

/// `R̂ = μI - R` with `μ = λ_max(R) + 1e-8·max(λ_max(R), tr R, 1)`.
pub fn mm_matrix(r: &CMatrix) -> ShiftedMatrix {
    let n = r.nrows();
    let tr = trace_re(r);
    let (lmax, trace_bound) = if n > TRACE_BOUND_DIM {
        (tr, true)
    } else {
        (HermitianEigen::new(r).max(), false)
    };
    let mu = lmax + 1e-8 * lmax.max(tr).max(1.0);
    let mut out = -r.clone();
    for i in 0..n {
        out[(i, i)] += c(mu, 0.0);
    }
    ShiftedMatrix {
        matrix: out,
        shift: mu,
        trace_bound,
    }
}

/// How the code splits into coordinate blocks and which constraints each block carries.
struct Layout {
    mode: DesignMode,
    n_tx: usize,
    code_length: usize,
    constraints: Vec<Constraint>,
    block_energy: f64,
    rho: f64,
}

impl Layout {
    fn new(cfg: &ScenarioConfig, mode: DesignMode) -> Result<Self> {
        let (constraints, block_energy) = match mode {
            DesignMode::Bands => (
                bands_from_config(cfg)?
                    .iter()
                    .map(|b| Constraint::new(&b.r_i, b.cap))
                    .collect::<Result<Vec<_>>>()?,
                cfg.antenna_energy(),
            ),
            DesignMode::Sectors => {
                if cfg.sectors.is_empty() {
                    return Err(Error::config(
                        "sectors",
                        "sector mode needs at least one sector",
                    ));
                }
                (
                    sectors_from_config(cfg)?
                        .iter()
                        .map(|s| Constraint::new(&s.f_i, s.cap()))
                        .collect::<Result<Vec<_>>>()?,
                    cfg.total_energy(),
                )
            }
        };
        Ok(Self {
            mode,
            n_tx: cfg.n_tx(),
            code_length: cfg.code_length(),
            constraints,
            block_energy,
            rho: cfg.papr_bound(),
        })
    }

    fn n_blocks(&self) -> usize {
        match self.mode {
            DesignMode::Bands => self.n_tx,
            DesignMode::Sectors => 1,
        }
    }

    /// Coordinates in block order.
    fn to_blocks(&self, s: &WaveformMatrix) -> CVector {
        match self.mode {
            DesignMode::Bands => s.vec_bar(),
            DesignMode::Sectors => s.vec_s(),
        }
    }

    fn to_waveform(&self, x: &CVector) -> Result<WaveformMatrix> {
        match self.mode {
            DesignMode::Bands => WaveformMatrix::from_vec_bar(x, self.n_tx, self.code_length),
            DesignMode::Sectors => WaveformMatrix::from_vec_s(x, self.n_tx, self.code_length),
        }
    }

    fn partition(&self, m: &CMatrix, linear: Option<&CVector>) -> Result<BlockPartition> {
        match self.mode {
            DesignMode::Bands => BlockPartition::new(m, linear, self.n_tx, self.code_length),
            DesignMode::Sectors => Ok(BlockPartition::joint(m, linear)),
        }
    }

    /// Energy and PAPR hold for the block.
    fn shape_ok(&self, block: &CVector) -> bool {
        (norm_sqr(block) - self.block_energy).abs() <= ENERGY_TOL * self.block_energy
            && papr(block.iter()) <= self.rho * (1.0 + PAPR_TOL)
    }

    /// Project every block onto the energy/PAPR set if it is not already there.
    fn normalize(&self, s: &WaveformMatrix) -> Result<WaveformMatrix> {
        let mut x = self.to_blocks(s);
        let len = x.len() / self.n_blocks();
        for n in 0..self.n_blocks() {
            let block = x.rows(n * len, len).into_owned();
            if !self.shape_ok(&block) {
                x.rows_mut(n * len, len).copy_from(&papr_project(
                    &block,
                    self.block_energy,
                    self.rho,
                )?);
            }
        }
        self.to_waveform(&x)
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct SweepReport {
    stalls: usize,
    accepted: usize,
}

/// Persistent per-block ADMM state.
struct Solver<'a> {
    cfg: &'a ScenarioConfig,
    model: StapModel,
    layout: Layout,
    auditor: Auditor,
    settings: AdmmSettings,
    states: Vec<Option<AdmmState>>,
    warm_start: bool,
}

impl<'a> Solver<'a> {
    /// Gauss–Seidel sweeps over the blocks of `max x†M x + 2Re(c†x)`.
    fn cd_sweeps(
        &mut self,
        m: &CMatrix,
        linear: Option<&CVector>,
        s: &WaveformMatrix,
    ) -> Result<(WaveformMatrix, SweepReport)> {
        let part = self.layout.partition(m, linear)?;
        let mut x = self.layout.to_blocks(s);
        let len = part.block_len;
        let mut report = SweepReport::default();
        for _ in 0..self.cfg.solver.cd_sweeps.max(1) {
            for n in 0..part.n_blocks {
                let current = x.rows(n * len, len).into_owned();
                let prob = BlockProblem::new(
                    part.diag_block(n),
                    part.linear_term(n, &x),
                    &self.layout.constraints,
                    self.layout.block_energy,
                    self.layout.rho,
                )?;
                let state = match self.states[n].take() {
                    Some(mut st) if self.warm_start => {
                        st.warm(&current);
                        st
                    }
                    _ => AdmmState::new(&prob, &current, self.settings.penalty)?,
                };
                let mut state = state;
                let out = run_admm(&prob, &mut state, &self.settings)?;
                self.states[n] = Some(state);
                if !out.converged && !out.feasible {
                    report.stalls += 1;
                }
                if accept(&prob, &current, &out.s) {
                    x.rows_mut(n * len, len).copy_from(&out.s);
                    report.accepted += 1;
                }
            }
        }
        Ok((self.layout.to_waveform(&x)?, report))
    }

    fn row(
        &self,
        outer: usize,
        inner: usize,
        start: &Instant,
        sinr: f64,
        s: &WaveformMatrix,
        flags: Vec<&'static str>,
    ) -> TraceRow {
        let mut flags = flags;
        if !self.auditor.feasible(s) {
            flags.insert(0, "infeasible");
        }
        TraceRow {
            outer_iter: outer,
            inner_iter: inner,
            cpu_seconds: start.elapsed().as_secs_f64(),
            sinr_db: db(sinr),
            flags,
            papr: self.auditor.papr(s),
            leakage: self.auditor.leakage(s),
        }
    }
}

/// Keep the incumbent block unless the candidate is at least as good:
/// feasibility first, then objective, then smaller violation.
fn accept(prob: &BlockProblem, current: &CVector, candidate: &CVector) -> bool {
    let cur_ok = prob.is_feasible(current)
        && (norm_sqr(current) - prob.energy).abs() <= ENERGY_TOL * prob.energy
        && papr(current.iter()) <= prob.rho * (1.0 + PAPR_TOL);
    let cand_ok = prob.is_feasible(candidate);
    match (cur_ok, cand_ok) {
        (false, true) => true,
        (true, false) => false,
        (true, true) => prob.objective(candidate) >= prob.objective(current),
        (false, false) => prob.violation(candidate) <= prob.violation(current),
    }
}

/// Run the design described by `cfg` starting from its configured initializer.
pub fn design(cfg: &ScenarioConfig, opts: &DesignOptions) -> Result<DesignResult> {
    design_with_progress(cfg, opts, &mut |_| {})
}

pub fn design_with_progress(
    cfg: &ScenarioConfig,
    opts: &DesignOptions,
    progress: &mut dyn FnMut(&TraceRow),
) -> Result<DesignResult> {
    let s0 = initial_waveform(cfg)?;
    design_from(cfg, opts, &s0, progress)
}

/// Run the design from an explicit initial waveform.
pub fn design_from(
    cfg: &ScenarioConfig,
    opts: &DesignOptions,
    s_init: &WaveformMatrix,
    progress: &mut dyn FnMut(&TraceRow),
) -> Result<DesignResult> {
    cfg.validate()?;
    if s_init.n_tx() != cfg.n_tx() || s_init.code_length() != cfg.code_length() {
        return Err(Error::Shape(format!(
            "initial waveform is {}x{}, config expects {}x{}",
            s_init.n_tx(),
            s_init.code_length(),
            cfg.n_tx(),
            cfg.code_length()
        )));
    }
    let workers = workers_from_env();
    let layout = Layout::new(cfg, opts.mode)?;
    let n_blocks = layout.n_blocks();
    let mut solver = Solver {
        cfg,
        model: StapModel::from_config(cfg).with_workers(workers),
        layout,
        auditor: Auditor::new(cfg, opts.mode)?,
        settings: AdmmSettings::from_solver(&cfg.solver),
        states: vec![None; n_blocks],
        warm_start: opts.warm_start,
    };
    let start = Instant::now();
    let gain = solver.model.target_gain();
    let e_t = cfg.total_energy();

    let initial_sinr = design_filter(&solver.model, &s_init.vec_s())?.1;
    let mut s = solver.layout.normalize(s_init)?;
    let mut trace = DesignTrace::default();
    let mut dinkelbach = Vec::new();
    let mut iterates = Vec::new();
    let mut stalls = 0;
    let mut converged = false;
    let mut prev_sinr: Option<f64> = None;
    let mut w = CVector::zeros(0);
    let mut sinr = 0.0;

    for outer in 0..=cfg.solver.max_outer_iter {
        let (w_t, sinr_t) = design_filter(&solver.model, &s.vec_s())?;
        w = w_t;
        sinr = sinr_t;
        if !sinr.is_finite() {
            return Err(Error::NonFinite(format!("SINR at outer iteration {outer}")));
        }
        let feasible = solver.auditor.feasible(&s);
        let row = solver.row(outer, 0, &start, sinr, &s, Vec::new());
        progress(&row);
        trace.rows.push(row);
        if opts.keep_iterates {
            iterates.push(s.clone());
        }
        if let Some(prev) = prev_sinr {
            if feasible && (sinr - prev).abs() / sinr < cfg.solver.outer_tol {
                converged = true;
                break;
            }
        }
        prev_sinr = Some(sinr);
        if outer == cfg.solver.max_outer_iter {
            break;
        }

        match opts.algorithm {
            Algorithm::DkAdmm => {
                let (d, beta) = solver.model.target_forms(&w)?;
                let q = solver.model.clutter_quadratic(&w)?;
                let ratio = |s: &CVector| quad_form(&d, s) / (quad_form(&q, s) + beta);
                let entered_feasible = feasible;
                let mut fs = vec![ratio(&s.vec_s())];
                for inner_iter in 1..=cfg.solver.max_dinkelbach_iter.max(1) {
                    let f = *fs.last().unwrap();
                    let t_hat = dinkelbach_matrix(&d, &q, beta, e_t, f);
                    let (next, report) = solver.cd_sweeps(&t_hat.matrix, None, &s)?;
                    stalls += report.stalls;
                    s = next;
                    let f_new = ratio(&s.vec_s());
                    fs.push(f_new);
                    let mut flags = Vec::new();
                    if t_hat.trace_bound {
                        flags.push("trace_bound");
                    }
                    if report.stalls > 0 {
                        flags.push("admm_stall");
                    }
                    let row = solver.row(outer, inner_iter, &start, gain * f_new, &s, flags);
                    progress(&row);
                    trace.rows.push(row);
                    let layout_ok = solver.auditor.feasible(&s);
                    if report.accepted == 0
                        || (layout_ok && (f_new - f).abs() / f_new < cfg.solver.inner_tol)
                    {
                        break;
                    }
                }
                debug!("outer {outer}: Dinkelbach ratios {fs:?}");
                dinkelbach.push((entered_feasible, fs));
            }
            Algorithm::MmAdmm => {
                for step in 1..=cfg.solver.mm_steps.max(1) {
                    let sur = solver.model.mm_surrogate(&s.vec_s())?;
                    let r_hat = mm_matrix(&sur.r);
                    let (next, report) = solver.cd_sweeps(&r_hat.matrix, Some(&sur.c), &s)?;
                    stalls += report.stalls;
                    s = next;
                    if step < cfg.solver.mm_steps.max(1) {
                        let mut flags = Vec::new();
                        if r_hat.trace_bound {
                            flags.push("trace_bound");
                        }
                        if report.stalls > 0 {
                            flags.push("admm_stall");
                        }
                        let value = design_filter(&solver.model, &s.vec_s())?.1;
                        let row = solver.row(outer, step, &start, value, &s, flags);
                        progress(&row);
                        trace.rows.push(row);
                    }
                }
            }
        }
    }

    let feasible = solver.auditor.feasible(&s);
    let mut warnings = Vec::new();
    if !feasible {
        warnings.push("final waveform violates a constraint".to_string());
    }
    if !converged {
        warnings.push(format!(
            "outer loop stopped after {} iterations without meeting the SINR tolerance",
            cfg.solver.max_outer_iter
        ));
    }
    if stalls > 0 {
        warnings.push(format!(
            "{stalls} ADMM block solves stalled without a feasible iterate"
        ));
    }
    for w in &warnings {
        warn!("{w}");
    }
    // Sanity: the reported filter is the MVDR filter of the returned waveform.
    debug_assert!(
        (gain * inner(&solver.model.target_vector(&s.vec_s())?, &w).re - sinr).abs() <= 1e-8 * sinr
    );
    Ok(DesignResult {
        sinr_db: db(sinr),
        initial_sinr_db: db(initial_sinr),
        s,
        w,
        trace,
        converged,
        feasible,
        stalls,
        dinkelbach,
        iterates,
        warnings,
    })
}
