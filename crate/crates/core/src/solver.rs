//! Ground-state computation for `(A + μ) u = |u|^{p-2} u` with a diagonal multiplier `A`.
//!
//! The primary method is the Petviashvili iteration
//!
//! ```text
//! u_{k+1} = M_k^γ (A + μ)^{-1} (u_k^{p-1}),   M_k = ⟨(A + μ)u_k, u_k⟩ / ⟨u_k^{p-1}, u_k⟩
//! ```
//!
//! with `γ = (p-1)/(p-2)`. The fallback is preconditioned gradient descent on the
//! energy with a Nehari projection after every step.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::model::{
    lp_integral, norm_l2, read_snapshot, spectral_shift, to_physical, to_spectral, Grid,
    ModelError, PhysParams, RealField, SpectralField,
};
use crate::symbol::{Multiplier, SymbolError};
use crate::variational::{
    clamped_nonlinearity, energy, nehari_project, nonlinearity, EnergyReport, VariationalError,
};

const BLOW_UP_NORM: f64 = 1e12;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("iteration blew up at step {iteration} (L2 norm {norm:e})")]
    BlowUp { iteration: usize, norm: f64 },
    #[error("initial guess is zero")]
    ZeroInit,
    #[error(transparent)]
    Variational(#[from] VariationalError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, SolverError>;

#[derive(Debug, Clone)]
pub enum Init {
    /// Gaussian of the given width centred in the box.
    Gaussian(f64),
    /// Field snapshot on disk; the grid must match.
    File(PathBuf),
    Custom(RealField),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub tol_residual: f64,
    pub max_iter: usize,
    /// Petviashvili exponent; `None` selects `(p-1)/(p-2)`.
    pub gamma: Option<f64>,
    pub init: Init,
    pub fallback_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_residual: 1e-9,
            max_iter: 10_000,
            gamma: None,
            init: Init::Gaussian(2.0),
            fallback_step: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn gamma_for(&self, p: f64) -> f64 {
        self.gamma.unwrap_or((p - 1.0) / (p - 2.0))
    }

    fn validate(&self, p: f64) -> Result<()> {
        if !(self.tol_residual > 0.0) {
            return Err(SolverError::Config(format!(
                "tol_residual must be positive (got {})",
                self.tol_residual
            )));
        }
        let gamma = self.gamma_for(p);
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(SolverError::Config(format!(
                "gamma must exceed 1 (got {gamma})"
            )));
        }
        if !(self.fallback_step > 0.0 && self.fallback_step.is_finite()) {
            return Err(SolverError::Config(format!(
                "fallback_step must be positive (got {})",
                self.fallback_step
            )));
        }
        if let Init::Gaussian(w) = self.init {
            if !(w > 0.0) {
                return Err(SolverError::Config(format!(
                    "init width must be positive (got {w})"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub field: RealField,
    pub report: EnergyReport,
    pub iterations: usize,
    pub converged: bool,
    pub params: PhysParams,
}

impl GroundState {
    pub fn min_over_max(&self) -> f64 {
        self.field.min() / self.field.max()
    }
}

pub fn initial_guess(grid: &Grid, init: &Init) -> Result<RealField> {
    match init {
        Init::Gaussian(width) => Ok(grid.sample(|x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            (-r2 / (2.0 * width * width)).exp()
        })),
        Init::File(path) => {
            let (_, field) = read_snapshot(path)?;
            if field.grid != *grid {
                return Err(ModelError::GridMismatch.into());
            }
            Ok(field)
        }
        Init::Custom(field) => {
            if field.grid != *grid {
                return Err(ModelError::GridMismatch.into());
            }
            Ok(field.clone())
        }
    }
}

/// Relative residual measured on the spectral side (Parseval), plus the spectrum of `u`.
fn spectral_residual(
    u: &RealField,
    mult: &Multiplier,
    params: &PhysParams,
) -> Result<(f64, SpectralField)> {
    let spec = to_spectral(u);
    let lhs = mult.apply_spectral(&spec, params.mu)?;
    let rhs = to_spectral(&nonlinearity(u, params.p));
    let diff = SpectralField::new(
        &u.grid,
        lhs.coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a - b)
            .collect(),
    )?;
    let num = diff.weighted_sq_sum(|_| 1.0).sqrt();
    let den = norm_l2(u);
    Ok((if den == 0.0 { 0.0 } else { num / den }, spec))
}

/// One Petviashvili update.
pub fn petviashvili_step(
    u: &RealField,
    mult: &Multiplier,
    params: &PhysParams,
    gamma: f64,
) -> Result<RealField> {
    let spec = to_spectral(u);
    petviashvili_from_spectrum(u, &spec, mult, params, gamma)
}

fn petviashvili_from_spectrum(
    u: &RealField,
    spec: &SpectralField,
    mult: &Multiplier,
    params: &PhysParams,
    gamma: f64,
) -> Result<RealField> {
    let quadratic = mult.quadratic(spec, params.mu)?;
    let source = clamped_nonlinearity(u, params.p);
    let pairing = crate::model::inner(&source, u)?;
    if pairing <= 0.0 {
        return Err(SolverError::ZeroInit);
    }
    let factor = (quadratic / pairing).powf(gamma);
    let solved = mult.solve_spectral(&to_spectral(&source), params.mu)?;
    Ok(to_physical(&solved).scale(factor))
}

fn finish(
    u: RealField,
    mult: &Multiplier,
    params: &PhysParams,
    iterations: usize,
    tol: f64,
) -> Result<GroundState> {
    let (_, projected) = nehari_project(&u, mult, params)?;
    let (field, _) = recenter(&projected);
    field.warn_if_truncated("ground state");
    let report = energy(&field, mult, params)?;
    Ok(GroundState {
        converged: report.residual <= tol,
        field,
        report,
        iterations,
        params: *params,
    })
}

fn check_growth(u: &RealField, iteration: usize) -> Result<()> {
    let norm = norm_l2(u);
    if !norm.is_finite() || norm > BLOW_UP_NORM {
        return Err(SolverError::BlowUp { iteration, norm });
    }
    Ok(())
}

fn start(
    params: &PhysParams,
    grid: &Grid,
    mult: &Multiplier,
    cfg: &SolverConfig,
) -> Result<RealField> {
    params.validate()?;
    cfg.validate(params.p)?;
    if *mult.grid() != *grid {
        return Err(ModelError::GridMismatch.into());
    }
    let init = initial_guess(grid, &cfg.init)?;
    if lp_integral(&init, params.p) == 0.0 {
        return Err(SolverError::ZeroInit);
    }
    Ok(nehari_project(&init, mult, params)?.1)
}

/// Petviashvili iteration until the relative residual drops below `cfg.tol_residual`.
///
/// Non-convergence is not an error: the last iterate comes back with `converged = false`.
pub fn solve_ground_state(
    params: &PhysParams,
    grid: &Grid,
    mult: &Multiplier,
    cfg: &SolverConfig,
) -> Result<GroundState> {
    let gamma = cfg.gamma_for(params.p);
    let mut u = start(params, grid, mult, cfg)?;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let (res, spec) = spectral_residual(&u, mult, params)?;
        if res <= cfg.tol_residual {
            break;
        }
        u = petviashvili_from_spectrum(&u, &spec, mult, params, gamma)?;
        iterations += 1;
        check_growth(&u, iterations)?;
    }
    let state = finish(u, mult, params, iterations, cfg.tol_residual)?;
    if !state.converged {
        log::warn!(
            "Petviashvili stopped after {iterations} iterations with residual {:.3e}",
            state.report.residual
        );
    }
    Ok(state)
}

/// Preconditioned descent `v ← P_N(v − τ (v − (A+μ)^{-1} v^{p-1}))`, `P_N` the Nehari projection.
pub fn projected_gradient_solve(
    params: &PhysParams,
    grid: &Grid,
    mult: &Multiplier,
    cfg: &SolverConfig,
) -> Result<GroundState> {
    let tau = cfg.fallback_step;
    let mut v = start(params, grid, mult, cfg)?;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let (res, _) = spectral_residual(&v, mult, params)?;
        if !res.is_finite() {
            return Err(SolverError::BlowUp {
                iteration: iterations,
                norm: norm_l2(&v),
            });
        }
        if res <= cfg.tol_residual {
            break;
        }
        let source = clamped_nonlinearity(&v, params.p);
        let pulled = to_physical(&mult.solve_spectral(&to_spectral(&source), params.mu)?);
        let stepped = v.zip_with(&pulled, |a, b| a - tau * (a - b))?;
        iterations += 1;
        check_growth(&stepped, iterations)?;
        v = match nehari_project(&stepped, mult, params) {
            Ok((_, w)) => w,
            // the step wiped out the positive part; nothing left to project
            Err(VariationalError::ZeroField) => {
                return Err(SolverError::BlowUp {
                    iteration: iterations,
                    norm: norm_l2(&stepped),
                })
            }
            Err(e) => return Err(e.into()),
        };
        check_growth(&v, iterations)?;
    }
    let state = finish(v, mult, params, iterations, cfg.tol_residual)?;
    if !state.converged {
        log::warn!(
            "projected descent stopped after {iterations} iterations with residual {:.3e}",
            state.report.residual
        );
    }
    Ok(state)
}

/// Result of [`recenter`]: the applied cyclic shift per axis and the number of
/// grid points tied for the maximum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recentering {
    pub shift: Vec<usize>,
    pub ties: usize,
}

/// Cyclically shifts `f` so that its maximum sits at grid index `N/2` on every axis.
///
/// Values within `1e-12 · max|f|` of the maximum count as ties; the lexicographically
/// smallest tied index is used. A constant field therefore keeps index `(0, …, 0)`
/// as its maximizer and is shifted by `N/2` on every axis.
pub fn recenter(f: &RealField) -> (RealField, Recentering) {
    let grid = &f.grid;
    let top = f.max();
    let tol = 1e-12 * f.max_abs();
    let mut ties = 0;
    let mut first = None;
    for (i, &v) in f.values.iter().enumerate() {
        if v >= top - tol {
            ties += 1;
            first.get_or_insert(i);
        }
    }
    let peak = grid.unflatten(first.unwrap_or(0));
    let np = grid.points();
    let shift: Vec<usize> = peak.iter().map(|&i| (np / 2 + np - i) % np).collect();
    if ties > 1 {
        log::debug!("recenter: {ties} grid points tie for the maximum");
    }
    let mut values = vec![0.0; f.values.len()];
    for (flat, &v) in f.values.iter().enumerate() {
        let idx: Vec<usize> = grid
            .unflatten(flat)
            .iter()
            .zip(&shift)
            .map(|(&i, &s)| (i + s) % np)
            .collect();
        values[grid.flatten(&idx)] = v;
    }
    (
        RealField {
            grid: grid.clone(),
            values,
        },
        Recentering { shift, ties },
    )
}

/// Offset of the centre of mass of `f` from grid index `N/2`, using periodic
/// displacements in `[-L/2, L/2)`. Intended for one-signed, decaying fields
/// whose peak is already near the centre.
pub fn centroid(f: &RealField) -> Vec<f64> {
    let grid = &f.grid;
    let mut moment = vec![0.0; grid.dim()];
    let mut mass = 0.0;
    for (flat, &v) in f.values.iter().enumerate() {
        let w = v.abs();
        mass += w;
        for (slot, x) in moment.iter_mut().zip(grid.position(flat)) {
            *slot += w * x;
        }
    }
    if mass == 0.0 {
        return vec![0.0; grid.dim()];
    }
    moment.into_iter().map(|m| m / mass).collect()
}

/// Maximum deviation from radial symmetry, relative to `max f`.
///
/// Each grid point within `L/2` of the centre is compared with the field on the
/// first coordinate axis at the same radius; the axis profile is evaluated
/// off-grid by exact trigonometric interpolation, so a radial field scores at
/// round-off level regardless of the grid spacing. A sub-cell translation to the
/// centroid is applied first when the field is off centre.
pub fn radial_scatter(f: &RealField) -> f64 {
    let top = f.max_abs();
    if top == 0.0 {
        return 0.0;
    }
    let (centred, _) = recenter(f);
    let offset = centroid(&centred);
    let grid = &f.grid;
    let centred = if offset.iter().any(|d| d.abs() > 1e-13 * grid.spacing()) {
        let back: Vec<f64> = offset.iter().map(|d| -d).collect();
        spectral_shift(&centred, &back)
    } else {
        centred
    };
    let np = grid.points();
    let half = np / 2;
    let h = grid.spacing();

    // DFT of the axis line through the centre
    let line: Vec<Complex64> = (0..np)
        .map(|i| {
            let mut idx = vec![half; grid.dim()];
            idx[0] = i;
            Complex64::new(centred.values[grid.flatten(&idx)], 0.0)
        })
        .collect();
    let mut coeffs = line;
    FftPlanner::new().plan_fft_forward(np).process(&mut coeffs);
    let axis_value = |r: f64| -> f64 {
        let phi = 2.0 * PI * (half as f64 + r / h) / np as f64;
        let mut acc = coeffs[0].re;
        for (k, b) in coeffs.iter().enumerate().take(half).skip(1) {
            acc += 2.0 * (b * Complex64::from_polar(1.0, k as f64 * phi)).re;
        }
        acc += coeffs[half].re * (half as f64 * phi).cos();
        acc / np as f64
    };

    let mut cache: HashMap<usize, f64> = HashMap::new();
    let limit = half * half;
    let mut worst: f64 = 0.0;
    for (flat, &v) in centred.values.iter().enumerate() {
        let key: usize = grid
            .unflatten(flat)
            .iter()
            .map(|&i| i.abs_diff(half).pow(2))
            .sum();
        if key > limit {
            continue;
        }
        let reference = *cache
            .entry(key)
            .or_insert_with(|| axis_value((key as f64).sqrt() * h));
        worst = worst.max((v - reference).abs());
    }
    worst / top
}
