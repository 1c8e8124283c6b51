//! Energy functional, Nehari functional and the equation residual for
//! `(A + μ) u = |u|^{p-2} u`, where `A` is a diagonal multiplier.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    lp_integral, norm_l2, to_physical, to_spectral, ModelError, PhysParams, RealField,
};
use crate::symbol::{Multiplier, SymbolError};

#[derive(Debug, Error)]
pub enum VariationalError {
    #[error("operation undefined for the zero field")]
    ZeroField,
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, VariationalError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `Σ (a(ξ) + μ) |û|²`
    #[serde(rename = "Q")]
    pub quadratic: f64,
    /// `‖u‖_p^p`
    pub lp: f64,
    #[serde(rename = "I")]
    pub energy: f64,
    #[serde(rename = "J")]
    pub nehari: f64,
    pub residual: f64,
    /// `|I − (1/2 − 1/p) ‖u‖_p^p|`
    pub identity_gap: f64,
}

/// `|u|^{p-2} u`.
pub fn nonlinearity(u: &RealField, p: f64) -> RealField {
    u.map(|v| v.signum() * v.abs().powf(p - 1.0))
}

/// `max(u, 0)^{p-1}`, used on the positive solver path.
pub fn clamped_nonlinearity(u: &RealField, p: f64) -> RealField {
    u.map(|v| v.max(0.0).powf(p - 1.0))
}

pub fn quadratic_form(u: &RealField, mult: &Multiplier, params: &PhysParams) -> Result<f64> {
    Ok(mult.quadratic(&to_spectral(u), params.mu)?)
}

/// Relative L² residual `‖(A + μ)u − |u|^{p-2}u‖ / ‖u‖`; zero for the zero field.
pub fn residual(u: &RealField, mult: &Multiplier, params: &PhysParams) -> Result<f64> {
    let norm = norm_l2(u);
    if norm == 0.0 {
        return Ok(0.0);
    }
    let lhs = to_physical(&mult.apply_spectral(&to_spectral(u), params.mu)?);
    let diff = lhs.sub(&nonlinearity(u, params.p))?;
    Ok(norm_l2(&diff) / norm)
}

pub fn energy(u: &RealField, mult: &Multiplier, params: &PhysParams) -> Result<EnergyReport> {
    let p = params.p;
    let quadratic = quadratic_form(u, mult, params)?;
    let lp = lp_integral(u, p);
    let energy = 0.5 * quadratic - lp / p;
    Ok(EnergyReport {
        quadratic,
        lp,
        energy,
        nehari: quadratic - lp,
        residual: residual(u, mult, params)?,
        identity_gap: (energy - (0.5 - 1.0 / p) * lp).abs(),
    })
}

/// Scales `u` onto the Nehari manifold: `t* = (Q(u) / ‖u‖_p^p)^{1/(p-2)}`.
pub fn nehari_project(
    u: &RealField,
    mult: &Multiplier,
    params: &PhysParams,
) -> Result<(f64, RealField)> {
    let lp = lp_integral(u, params.p);
    if lp == 0.0 {
        return Err(VariationalError::ZeroField);
    }
    let quadratic = quadratic_form(u, mult, params)?;
    let t = nehari_scale(quadratic, lp, params.p);
    Ok((t, u.scale(t)))
}

pub fn nehari_scale(quadratic: f64, lp: f64, p: f64) -> f64 {
    (quadratic / lp).powf(1.0 / (p - 2.0))
}

/// `Q(u)^{p/(p-2)} / (‖u‖_p^p)^{2/(p-2)}`, invariant under `u ↦ t u`.
///
/// Its minimum over nonzero fields is `(1/2 − 1/p)^{-1}` times the ground-state level.
pub fn rayleigh_quotient(u: &RealField, mult: &Multiplier, params: &PhysParams) -> Result<f64> {
    let p = params.p;
    let lp = lp_integral(u, p);
    if lp == 0.0 {
        return Err(VariationalError::ZeroField);
    }
    let quadratic = quadratic_form(u, mult, params)?;
    Ok(rayleigh_value(quadratic, lp, p))
}

pub fn rayleigh_value(quadratic: f64, lp: f64, p: f64) -> f64 {
    // (Q / lp^{2/p})^{p/(p-2)} keeps the intermediate in range
    (quadratic / lp.powf(2.0 / p)).powf(p / (p - 2.0))
}
