//! MVDR receive filter and output SINR.

use crate::error::{Error, Result};
use crate::linalg::{db, inner, quad_form, solve_hpd, CMatrix, CVector};
use crate::stap::StapModel;

/// Relative residual accepted from the positive-definite solve.
const SOLVE_RESIDUAL: f64 = 1e-8;

/// Solve `R_v w = v_t`.
pub fn mvdr(r_v: &CMatrix, v_t: &CVector) -> Result<CVector> {
    let w = solve_hpd(r_v, v_t)?;
    let resid = (r_v * &w - v_t).norm();
    if resid > SOLVE_RESIDUAL * v_t.norm() {
        return Err(Error::NotPositiveDefinite(format!(
            "MVDR residual {resid:.3e} exceeds {SOLVE_RESIDUAL:e}·‖v_t‖"
        )));
    }
    Ok(w)
}

/// `gain·|w†v_t|² / (w†R_v w)`, linear.
pub fn sinr_linear(w: &CVector, v_t: &CVector, r_v: &CMatrix, gain: f64) -> Result<f64> {
    let den = quad_form(r_v, w);
    if den <= 0.0 || !den.is_finite() {
        return Err(Error::InvalidArgument(
            "filter output power is zero (is w = 0?)".into(),
        ));
    }
    Ok(gain * inner(w, v_t).norm_sqr() / den)
}

/// `gain·v_t† R_v⁻¹ v_t`, linear.
pub fn sinr_opt_linear(v_t: &CVector, r_v: &CMatrix, gain: f64) -> Result<f64> {
    let x = solve_hpd(r_v, v_t)?;
    Ok(gain * inner(v_t, &x).re)
}

/// Output SINR of filter `w` against waveform `s`, in dB.
pub fn sinr(model: &StapModel, w: &CVector, s: &CVector) -> Result<f64> {
    let r_v = model.interference_covariance(s)?;
    let v_t = model.target_vector(s)?;
    Ok(db(sinr_linear(w, &v_t, &r_v, model.target_gain())?))
}

/// SINR of waveform `s` with its own MVDR filter, in dB.
pub fn sinr_opt(model: &StapModel, s: &CVector) -> Result<f64> {
    Ok(db(sinr_opt_linear_for(model, s)?))
}

pub fn sinr_opt_linear_for(model: &StapModel, s: &CVector) -> Result<f64> {
    let r_v = model.interference_covariance(s)?;
    let v_t = model.target_vector(s)?;
    sinr_opt_linear(&v_t, &r_v, model.target_gain())
}

/// The MVDR filter for waveform `s` and the linear SINR it attains.
pub fn design_filter(model: &StapModel, s: &CVector) -> Result<(CVector, f64)> {
    let r_v = model.interference_covariance(s)?;
    let v_t = model.target_vector(s)?;
    let w = mvdr(&r_v, &v_t)?;
    let value = model.target_gain() * inner(&v_t, &w).re;
    if !value.is_finite() {
        return Err(Error::NonFinite("SINR".into()));
    }
    Ok((w, value))
}
