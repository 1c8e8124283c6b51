//! Kinetic symbols and diagonal Fourier multipliers.
//!
//! The relativistic symbol `√(c²|ξ|² + m²c⁴) − mc²` is only ever evaluated in
//! the quotient form `|ξ|² / (√(|ξ|²/c² + m²) + m)`, which has no cancellation
//! for large `c`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    norm_l2, to_physical, to_spectral, Grid, ModelError, PhysParams, RealField, SpectralField,
};

#[derive(Debug, Error)]
pub enum SymbolError {
    #[error("multiplier table has {got} entries, grid has {expected}")]
    TableSize { expected: usize, got: usize },
    #[error("multiplier entry {index} is negative or non-finite ({value})")]
    BadEntry { index: usize, value: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MultiplierKind {
    Relativistic,
    Limit,
    Custom,
}

/// `m √(1 + |ξ|²/(c²m²))`, written so that it is never below `m` in floating point.
fn root_term(xi_sq: f64, params: &PhysParams) -> f64 {
    let ratio = xi_sq / (params.c * params.c * params.m * params.m);
    params.m * (1.0 + ratio).sqrt()
}

pub fn eval_relativistic_symbol(xi_sq: f64, params: &PhysParams) -> f64 {
    xi_sq / (root_term(xi_sq, params) + params.m)
}

pub fn eval_limit_symbol(xi_sq: f64, params: &PhysParams) -> f64 {
    xi_sq / (2.0 * params.m)
}

/// `|ξ|⁴ / (8 m³ c²)`.
pub fn symbol_gap_bound(xi_sq: f64, params: &PhysParams) -> f64 {
    let m = params.m;
    xi_sq * xi_sq / (8.0 * m * m * m * params.c * params.c)
}

/// `a_∞(ξ) − a_c(ξ)` without subtraction: `bound · (2m / (s + m))²` with `s ≥ m`.
pub fn symbol_gap(xi_sq: f64, params: &PhysParams) -> f64 {
    let shrink = 2.0 * params.m / (root_term(xi_sq, params) + params.m);
    symbol_gap_bound(xi_sq, params) * (shrink * shrink)
}

/// Whether `0 ≤ a_∞ − a_c ≤ |ξ|⁴/(8m³c²)` holds at this frequency.
pub fn sandwich_holds(xi_sq: f64, params: &PhysParams) -> bool {
    let gap = symbol_gap(xi_sq, params);
    (0.0..=symbol_gap_bound(xi_sq, params)).contains(&gap)
}

/// A real, nonnegative symbol tabulated on the spectral lattice of a grid.
#[derive(Debug, Clone)]
pub struct Multiplier {
    pub kind: MultiplierKind,
    pub params: PhysParams,
    grid: Grid,
    table: Arc<Vec<f64>>,
}

impl Multiplier {
    pub fn relativistic(grid: &Grid, params: &PhysParams) -> Self {
        let table = grid
            .xi_sq()
            .iter()
            .map(|&x| eval_relativistic_symbol(x, params))
            .collect();
        Self::from_parts(MultiplierKind::Relativistic, grid, params, table)
    }

    pub fn limit(grid: &Grid, params: &PhysParams) -> Self {
        let table = grid
            .xi_sq()
            .iter()
            .map(|&x| eval_limit_symbol(x, params))
            .collect();
        Self::from_parts(MultiplierKind::Limit, grid, params, table)
    }

    /// Relativistic symbol for finite `c`, limit symbol for `c = ∞`.
    pub fn for_params(grid: &Grid, params: &PhysParams) -> Self {
        if params.is_limit() {
            Self::limit(grid, params)
        } else {
            Self::relativistic(grid, params)
        }
    }

    pub fn custom(grid: &Grid, params: &PhysParams, table: Vec<f64>) -> Result<Self, SymbolError> {
        if table.len() != grid.len() {
            return Err(SymbolError::TableSize {
                expected: grid.len(),
                got: table.len(),
            });
        }
        if let Some((index, &value)) = table
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(SymbolError::BadEntry { index, value });
        }
        Ok(Self::from_parts(
            MultiplierKind::Custom,
            grid,
            params,
            table,
        ))
    }

    fn from_parts(kind: MultiplierKind, grid: &Grid, params: &PhysParams, table: Vec<f64>) -> Self {
        Self {
            kind,
            params: *params,
            grid: grid.clone(),
            table: Arc::new(table),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    fn check(&self, grid: &Grid) -> Result<(), SymbolError> {
        if *grid != self.grid {
            return Err(ModelError::GridMismatch.into());
        }
        Ok(())
    }

    /// `(a(ξ) + shift) · F(ξ)` for every mode.
    pub fn apply_spectral(
        &self,
        spec: &SpectralField,
        shift: f64,
    ) -> Result<SpectralField, SymbolError> {
        self.check(&spec.grid)?;
        let coeffs = spec
            .coeffs
            .iter()
            .zip(self.table.iter())
            .map(|(&c, &a)| c * (a + shift))
            .collect();
        Ok(SpectralField::new(&spec.grid, coeffs)?)
    }

    /// `F(ξ) / (a(ξ) + shift)`; `shift` must be positive.
    pub fn solve_spectral(
        &self,
        spec: &SpectralField,
        shift: f64,
    ) -> Result<SpectralField, SymbolError> {
        self.check(&spec.grid)?;
        let coeffs = spec
            .coeffs
            .iter()
            .zip(self.table.iter())
            .map(|(&c, &a)| c / (a + shift))
            .collect();
        Ok(SpectralField::new(&spec.grid, coeffs)?)
    }

    /// `Δξ^n Σ (a(ξ) + shift) |F(ξ)|²`.
    pub fn quadratic(&self, spec: &SpectralField, shift: f64) -> Result<f64, SymbolError> {
        self.check(&spec.grid)?;
        let sum: f64 = spec
            .coeffs
            .iter()
            .zip(self.table.iter())
            .map(|(c, &a)| (a + shift) * c.norm_sqr())
            .sum();
        Ok(sum * self.grid.spectral_weight())
    }
}

pub fn apply_multiplier(mult: &Multiplier, f: &RealField) -> Result<RealField, SymbolError> {
    let spec = mult.apply_spectral(&to_spectral(f), 0.0)?;
    Ok(to_physical(&spec))
}

/// `‖(A_c − A_∞) φ‖₂` for each `c` in `c_list`, evaluated through the cancellation-free gap.
pub fn multiplier_convergence_test(
    phi: &RealField,
    params: &PhysParams,
    c_list: &[f64],
) -> Result<Vec<f64>, SymbolError> {
    let spec = to_spectral(phi);
    c_list
        .iter()
        .map(|&c| {
            let pc = params.with_c(c)?;
            let diff = spec.weighted(|xi_sq| symbol_gap(xi_sq, &pc));
            Ok(norm_l2(&to_physical(&diff)))
        })
        .collect()
}
