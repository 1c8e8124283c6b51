//! Domain types, the periodic grid, the unitary discrete Fourier transform and
//! the norms used throughout the crate.
//!
//! Physical coordinates are `x_j = (j - N/2) h` along every axis, so grid index
//! `N/2` is the origin. Spectral coefficients approximate the continuous
//! transform `(2π)^{-n/2} ∫ e^{-i x·ξ} u(x) dx`:
//!
//! ```text
//! û_k = h^n (2π)^{-n/2} Σ_j u_j e^{-i ξ_k·x_j}
//! ```
//!
//! With this convention `h^n Σ u_j² = Δξ^n Σ_k |û_k|²` where `Δξ = 2π/L`, and a
//! real field that is even about the origin has real coefficients.

use std::f64::consts::PI;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("N must be a power of two (got {0})")]
    NotPowerOfTwo(usize),
    #[error("N must be at least 16 (got {0})")]
    TooFewPoints(usize),
    #[error("dimension must be 2 or 3 (got {0})")]
    Dimension(usize),
    #[error("box length must be positive and finite (got {0})")]
    Length(f64),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("shape mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("snapshot {path}: {msg}")]
    Snapshot { path: String, msg: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Physical parameters of the standing-wave problem.
///
/// `c = f64::INFINITY` denotes the nonrelativistic limit problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub m: f64,
    pub mu: f64,
    #[serde(with = "light_speed")]
    pub c: f64,
    pub p: f64,
    pub n: usize,
}

mod light_speed {
    use serde::{Deserialize, Deserializer, Serializer};

    // JSON has no infinity; the limit problem is written as `null`.
    pub fn serialize<S: Serializer>(c: &f64, s: S) -> Result<S::Ok, S::Error> {
        if c.is_finite() {
            s.serialize_some(c)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl PhysParams {
    pub fn new(m: f64, mu: f64, c: f64, p: f64, n: usize) -> Result<Self> {
        let params = Self { m, mu, c, p, n };
        params.validate()?;
        Ok(params)
    }

    /// Parameters of the nonrelativistic limit problem.
    pub fn limit(m: f64, mu: f64, p: f64, n: usize) -> Result<Self> {
        Self::new(m, mu, f64::INFINITY, p, n)
    }

    pub fn with_c(&self, c: f64) -> Result<Self> {
        Self::new(self.m, self.mu, c, self.p, self.n)
    }

    pub fn is_limit(&self) -> bool {
        self.c.is_infinite()
    }

    /// Upper end of the subcritical range, `2n/(n-1)`.
    pub fn critical_exponent(&self) -> f64 {
        2.0 * self.n as f64 / (self.n as f64 - 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ModelError::Params(msg));
        if !(self.m > 0.0 && self.m.is_finite()) {
            return bad(format!("m must be positive (got {})", self.m));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive (got {})", self.mu));
        }
        if self.c.is_nan() || self.c < 1.0 {
            return bad(format!("c must be at least 1 (got {})", self.c));
        }
        if self.n < 2 {
            return bad(format!("n must be at least 2 (got {})", self.n));
        }
        let crit = self.critical_exponent();
        if !(self.p > 2.0 && self.p < crit) {
            return bad(format!("p must lie in (2, {crit}) (got {})", self.p));
        }
        // μ = mc² is accepted: the trace-side quadratic form stays positive.
        if self.mu > self.m * self.c * self.c {
            return bad(format!(
                "mu < m c^2 violated (mu = {}, m c^2 = {})",
                self.mu,
                self.m * self.c * self.c
            ));
        }
        Ok(())
    }
}

/// Periodic box `[-L/2, L/2)^n` sampled with `N` points per axis.
#[derive(Clone)]
pub struct Grid {
    n: usize,
    length: f64,
    points: usize,
    spacing: f64,
    freqs: Arc<Vec<f64>>,
    xi_sq: Arc<Vec<f64>>,
    signs: Arc<Vec<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .field("points", &self.points)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length && self.points == other.points
    }
}

pub fn make_grid(n: usize, length: f64, points: usize) -> Result<Grid> {
    Grid::new(n, length, points)
}

impl Grid {
    pub fn new(n: usize, length: f64, points: usize) -> Result<Self> {
        if !(2..=3).contains(&n) {
            return Err(ModelError::Dimension(n));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(ModelError::Length(length));
        }
        if !points.is_power_of_two() {
            return Err(ModelError::NotPowerOfTwo(points));
        }
        if points < 16 {
            return Err(ModelError::TooFewPoints(points));
        }
        let dxi = 2.0 * PI / length;
        let half = (points / 2) as i64;
        let freqs: Vec<f64> = (0..points as i64)
            .map(|k| if k < half { k } else { k - points as i64 })
            .map(|k| k as f64 * dxi)
            .collect();
        let total = points.pow(n as u32);
        let xi_sq = (0..total)
            .map(|flat| {
                let mut rest = flat;
                let mut acc = 0.0;
                for _ in 0..n {
                    let xi = freqs[rest % points];
                    acc += xi * xi;
                    rest /= points;
                }
                acc
            })
            .collect();
        let signs = (0..total)
            .map(|flat| {
                let mut rest = flat;
                let mut odd = 0;
                for _ in 0..n {
                    odd += rest % points;
                    rest /= points;
                }
                if odd % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            length,
            points,
            spacing: length / points as f64,
            freqs: Arc::new(freqs),
            xi_sq: Arc::new(xi_sq),
            signs: Arc::new(signs),
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.xi_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-axis frequencies in FFT storage order (`0, 1, …, N/2-1, -N/2, …, -1` times `2π/L`).
    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn freq_step(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// `|ξ|²` for every flat spectral index.
    pub fn xi_sq(&self) -> &[f64] {
        &self.xi_sq
    }

    /// Quadrature weight `h^n` of physical-space sums.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.n as i32)
    }

    /// Weight `Δξ^n` of spectral sums.
    pub fn spectral_weight(&self) -> f64 {
        self.freq_step().powi(self.n as i32)
    }

    pub fn coordinate(&self, index: usize) -> f64 {
        (index as f64 - (self.points / 2) as f64) * self.spacing
    }

    /// Per-axis indices of a flat (row-major, last axis fastest) index.
    pub fn unflatten(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n];
        let mut rest = flat;
        for slot in idx.iter_mut().rev() {
            *slot = rest % self.points;
            rest /= self.points;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.points + i)
    }

    /// Physical position of a flat index.
    pub fn position(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .into_iter()
            .map(|i| self.coordinate(i))
            .collect()
    }

    /// Signed per-axis wavenumbers `k` of a flat spectral index.
    pub fn wavenumbers(&self, flat: usize) -> Vec<i64> {
        let half = (self.points / 2) as i64;
        self.unflatten(flat)
            .into_iter()
            .map(|k| {
                let k = k as i64;
                if k < half {
                    k
                } else {
                    k - self.points as i64
                }
            })
            .collect()
    }

    pub fn zeros(&self) -> RealField {
        RealField {
            grid: self.clone(),
            values: vec![0.0; self.len()],
        }
    }

    /// Samples `f` at every grid point.
    pub fn sample(&self, mut f: impl FnMut(&[f64]) -> f64) -> RealField {
        let values = (0..self.len()).map(|i| f(&self.position(i))).collect();
        RealField {
            grid: self.clone(),
            values,
        }
    }

    fn transform_axes(&self, data: &mut [Complex64], inverse: bool) {
        let plan = if inverse {
            &self.inverse
        } else {
            &self.forward
        };
        let np = self.points;
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let mut line = vec![Complex64::new(0.0, 0.0); np];
        for axis in 0..self.n {
            let stride = np.pow((self.n - 1 - axis) as u32);
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = stride * np;
            for start in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (i, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        data[base + i * stride] = *v;
                    }
                }
            }
        }
    }

    // (-1)^{k_1 + … + k_n}: the phase of the box offset -L/2.
    fn parity(&self, flat: usize) -> f64 {
        self.signs[flat]
    }
}

/// Real samples of a field on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

/// Spectral coefficients of a field, in FFT storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: Grid,
    pub coeffs: Vec<Complex64>,
}

impl RealField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(ModelError::Shape {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite);
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, t: f64) -> Self {
        self.map(|v| t * v)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(ModelError::GridMismatch);
        }
        Ok(())
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Largest `|u|` on the faces of the box relative to `max |u|`; zero for the zero field.
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let edge = (0..self.values.len())
            .filter(|&i| self.grid.unflatten(i).contains(&0))
            .fold(0.0_f64, |acc, i| acc.max(self.values[i].abs()));
        edge / peak
    }

    /// Logs a warning when the field has not decayed at the box faces.
    pub fn warn_if_truncated(&self, label: &str) {
        let ratio = self.boundary_ratio();
        if ratio > 1e-8 {
            log::warn!(
                "{label}: boundary values reach {ratio:.2e} of the maximum; box length may be too small"
            );
        }
    }
}

pub fn to_spectral(f: &RealField) -> SpectralField {
    let grid = &f.grid;
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.transform_axes(&mut data, false);
    let norm = grid.cell_volume() * (2.0 * PI).powf(-(grid.n as f64) / 2.0);
    for (k, c) in data.iter_mut().enumerate() {
        *c *= norm * grid.parity(k);
    }
    SpectralField {
        grid: grid.clone(),
        coeffs: data,
    }
}

/// Inverse transform; the imaginary part (round-off for Hermitian input) is discarded.
pub fn to_physical(spec: &SpectralField) -> RealField {
    let grid = &spec.grid;
    let norm = grid.spectral_weight() * (2.0 * PI).powf(-(grid.n as f64) / 2.0);
    let mut data: Vec<Complex64> = spec
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| c * (norm * grid.parity(k)))
        .collect();
    grid.transform_axes(&mut data, true);
    RealField {
        grid: grid.clone(),
        values: data.into_iter().map(|c| c.re).collect(),
    }
}

/// Inverse transform keeping the imaginary part, for Hermitian-symmetry checks.
pub fn to_physical_complex(spec: &SpectralField) -> Vec<Complex64> {
    let grid = &spec.grid;
    let norm = grid.spectral_weight() * (2.0 * PI).powf(-(grid.n as f64) / 2.0);
    let mut data: Vec<Complex64> = spec
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| c * (norm * grid.parity(k)))
        .collect();
    grid.transform_axes(&mut data, true);
    data
}

impl SpectralField {
    pub fn new(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(ModelError::Shape {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// Multiplies every coefficient by `w(|ξ|²)`.
    pub fn weighted(&self, w: impl Fn(f64) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.grid.xi_sq())
            .map(|(&c, &xi_sq)| c * w(xi_sq))
            .collect();
        Self {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// `Δξ^n Σ w(|ξ|²) |c_k|²`.
    pub fn weighted_sq_sum(&self, w: impl Fn(f64) -> f64) -> f64 {
        let sum: f64 = self
            .coeffs
            .iter()
            .zip(self.grid.xi_sq())
            .map(|(c, &xi_sq)| w(xi_sq) * c.norm_sqr())
            .sum();
        sum * self.grid.spectral_weight()
    }
}

/// Discrete L² inner product `h^n Σ f g`.
pub fn inner(f: &RealField, g: &RealField) -> Result<f64> {
    f.check_grid(g)?;
    let sum: f64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum();
    Ok(sum * f.grid.cell_volume())
}

pub fn norm_l2(f: &RealField) -> f64 {
    let sum: f64 = f.values.iter().map(|v| v * v).sum();
    (sum * f.grid.cell_volume()).sqrt()
}

/// `h^n Σ |f|^p`, the discrete `‖f‖_p^p`.
pub fn lp_integral(f: &RealField, p: f64) -> f64 {
    let sum: f64 = f.values.iter().map(|v| v.abs().powf(p)).sum();
    sum * f.grid.cell_volume()
}

pub fn norm_lp(f: &RealField, p: f64) -> f64 {
    lp_integral(f, p).powf(1.0 / p)
}

pub fn norm_h1(f: &RealField) -> f64 {
    to_spectral(f).weighted_sq_sum(|xi_sq| 1.0 + xi_sq).sqrt()
}

pub fn norm_hhalf(f: &RealField) -> f64 {
    to_spectral(f)
        .weighted_sq_sum(|xi_sq| (1.0 + xi_sq).sqrt())
        .sqrt()
}

/// `‖∇f‖²` from the spectral side.
pub fn gradient_sq(f: &RealField) -> f64 {
    to_spectral(f).weighted_sq_sum(|xi_sq| xi_sq)
}

/// Spectral partial derivatives; the Nyquist row is dropped since `iξ` is odd.
pub fn spectral_gradient(f: &RealField) -> Vec<RealField> {
    let spec = to_spectral(f);
    let grid = &f.grid;
    let nyquist = grid.points / 2;
    (0..grid.n)
        .map(|axis| {
            let coeffs = spec
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| {
                    let ka = grid.unflatten(k)[axis];
                    if ka == nyquist {
                        Complex64::new(0.0, 0.0)
                    } else {
                        c * Complex64::new(0.0, grid.freqs[ka])
                    }
                })
                .collect();
            to_physical(&SpectralField {
                grid: grid.clone(),
                coeffs,
            })
        })
        .collect()
}

/// Translates `f` by `offset` (physical units, periodic) via spectral phase shift.
pub fn spectral_shift(f: &RealField, offset: &[f64]) -> RealField {
    let spec = to_spectral(f);
    let grid = &f.grid;
    let coeffs = spec
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            grid.unflatten(k)
                .iter()
                .zip(offset)
                .fold(c, |acc, (&ka, &d)| {
                    let phase = grid.freqs[ka] * d;
                    if ka == grid.points / 2 {
                        // Nyquist row has no conjugate partner; keep the result real
                        acc * phase.cos()
                    } else {
                        acc * Complex64::from_polar(1.0, -phase)
                    }
                })
        })
        .collect();
    to_physical(&SpectralField {
        grid: grid.clone(),
        coeffs,
    })
}

/// One-line JSON header preceding the raw samples of a snapshot file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "N")]
    pub points: usize,
    pub params: PhysParams,
}

/// Writes a JSON header line followed by little-endian `f64` samples in row-major order.
pub fn write_snapshot(path: &Path, field: &RealField, params: &PhysParams) -> Result<()> {
    let io_err = |source| ModelError::Io {
        path: path.display().to_string(),
        source,
    };
    let header = SnapshotHeader {
        n: field.grid.n,
        length: field.grid.length,
        points: field.grid.points,
        params: *params,
    };
    let line = serde_json::to_string(&header).map_err(|e| ModelError::Snapshot {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    out.write_all(line.as_bytes()).map_err(io_err)?;
    out.write_all(b"\n").map_err(io_err)?;
    for v in &field.values {
        out.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, RealField)> {
    let io_err = |source| ModelError::Io {
        path: path.display().to_string(),
        source,
    };
    let bad = |msg: String| ModelError::Snapshot {
        path: path.display().to_string(),
        msg,
    };
    let mut reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut line = String::new();
    reader.read_line(&mut line).map_err(io_err)?;
    let header: SnapshotHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| bad(e.to_string()))?;
    let grid = Grid::new(header.n, header.length, header.points)?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes).map_err(io_err)?;
    if bytes.len() != grid.len() * 8 {
        return Err(bad(format!(
            "expected {} bytes of samples, found {}",
            grid.len() * 8,
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
        .collect();
    let field = RealField::new(&grid, values)?;
    Ok((header, field))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos_mode(grid: &Grid) -> RealField {
        let l = grid.length();
        grid.sample(|x| (2.0 * PI * x[0] / l).cos())
    }

    #[test]
    fn grid_arithmetic() {
        let g = make_grid(2, 32.0, 256).unwrap();
        assert_eq!(g.spacing(), 0.125);
        let max_xi = g.freqs().iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        assert!((max_xi - PI * 256.0 / 32.0).abs() < 1e-12);
        assert!((max_xi - 25.13).abs() < 0.01);

        let g3 = make_grid(3, 16.0, 64).unwrap();
        assert_eq!(g3.len(), 64 * 64 * 64);
        assert_eq!(g3.spacing(), 0.25);
    }

    #[test]
    fn grid_rejects_bad_input() {
        let err = make_grid(2, 32.0, 255).unwrap_err();
        assert_eq!(err.to_string(), "N must be a power of two (got 255)");
        assert!(matches!(
            make_grid(4, 32.0, 64),
            Err(ModelError::Dimension(4))
        ));
        assert!(matches!(
            make_grid(1, 32.0, 64),
            Err(ModelError::Dimension(1))
        ));
        assert!(matches!(
            make_grid(2, 32.0, 8),
            Err(ModelError::TooFewPoints(8))
        ));
        assert!(matches!(make_grid(2, -1.0, 64), Err(ModelError::Length(_))));
    }

    #[test]
    fn frequency_lattice_is_symmetric_except_nyquist() {
        let g = make_grid(2, 10.0, 16).unwrap();
        let f = g.freqs();
        assert_eq!(f[0], 0.0);
        for k in 1..8 {
            assert_eq!(f[k], -f[16 - k]);
        }
        assert!((f[8] + PI * 16.0 / 10.0).abs() < 1e-12);
    }

    #[test]
    fn params_validation() {
        assert!(PhysParams::new(1.0, 1.0, 1.0, 3.0, 2).is_ok());
        assert!(PhysParams::new(1.0, 2.0, 1.0, 3.0, 2).is_err());
        assert!(PhysParams::new(1.0, 1.0, 0.5, 3.0, 2).is_err());
        assert!(PhysParams::new(1.0, 1.0, 2.0, 4.0, 2).is_err());
        assert!(PhysParams::new(1.0, 1.0, 2.0, 2.0, 2).is_err());
        assert!(PhysParams::new(1.0, 1.0, 2.0, 2.9, 3).is_ok());
        assert!(PhysParams::new(1.0, 1.0, 2.0, 3.1, 3).is_err());
        assert!(PhysParams::new(0.0, 1.0, 2.0, 3.0, 2).is_err());
        assert!(PhysParams::limit(1.0, 5.0, 3.0, 2).is_ok());
    }

    #[test]
    fn params_json_encodes_limit_as_null() {
        let lim = PhysParams::limit(1.0, 1.0, 3.0, 2).unwrap();
        let text = serde_json::to_string(&lim).unwrap();
        assert!(text.contains("\"c\":null"));
        let back: PhysParams = serde_json::from_str(&text).unwrap();
        assert!(back.is_limit());
    }

    #[test]
    fn constant_has_only_dc_coefficient() {
        let g = make_grid(2, 8.0, 16).unwrap();
        let spec = to_spectral(&g.sample(|_| 1.0));
        // û(0) = h^n (2π)^{-1} N^2 = L^2 / (2π)
        let dc = 64.0 / (2.0 * PI);
        assert!((spec.coeffs[0].re - dc).abs() < 1e-12 * dc);
        for c in &spec.coeffs[1..] {
            assert!(c.norm() < 1e-12 * dc);
        }
    }

    #[test]
    fn single_cosine_has_two_conjugate_coefficients() {
        let g = make_grid(2, 8.0, 16).unwrap();
        let spec = to_spectral(&cos_mode(&g));
        let plus = g.flatten(&[1, 0]);
        let minus = g.flatten(&[15, 0]);
        let a = spec.coeffs[plus];
        let b = spec.coeffs[minus];
        assert!(a.norm() > 1.0);
        assert!((a - b.conj()).norm() < 1e-12);
        for (k, c) in spec.coeffs.iter().enumerate() {
            if k != plus && k != minus {
                assert!(c.norm() < 1e-12, "mode {k} = {c}");
            }
        }
        assert!((g.freqs()[1] - 2.0 * PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_norms() {
        let g = make_grid(2, 32.0, 64).unwrap();
        let f = cos_mode(&g);
        let l = 32.0_f64;
        let l2_sq = norm_l2(&f).powi(2);
        assert!((l2_sq - l * l / 2.0).abs() < 1e-10 * l * l);
        let k = 2.0 * PI / l;
        let h1_sq = norm_h1(&f).powi(2);
        let want = (1.0 + k * k) * l * l / 2.0;
        assert!((h1_sq - want).abs() < 1e-10 * want);
    }

    #[test]
    fn zero_field_norms_vanish() {
        let g = make_grid(2, 10.0, 16).unwrap();
        let z = g.zeros();
        assert_eq!(norm_l2(&z), 0.0);
        assert_eq!(norm_lp(&z, 3.0), 0.0);
        assert_eq!(norm_h1(&z), 0.0);
        assert_eq!(norm_hhalf(&z), 0.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let g = make_grid(2, 10.0, 16).unwrap();
        assert!(matches!(
            RealField::new(&g, vec![0.0; 10]),
            Err(ModelError::Shape {
                expected: 256,
                got: 10
            })
        ));
        assert!(matches!(
            RealField::new(&g, vec![f64::NAN; 256]),
            Err(ModelError::NonFinite)
        ));
        let other = make_grid(2, 12.0, 16).unwrap();
        assert!(inner(&g.zeros(), &other.zeros()).is_err());
    }

    #[test]
    fn spectral_shift_by_whole_cells_is_a_roll() {
        let g = make_grid(2, 16.0, 32).unwrap();
        let f = g.sample(|x| (-(x[0] - 1.0).powi(2) - x[1] * x[1]).exp());
        let shifted = spectral_shift(&f, &[-1.0, 0.0]);
        let want = g.sample(|x| (-x[0] * x[0] - x[1] * x[1]).exp());
        let err = shifted.sub(&want).unwrap().max_abs();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.bin");
        let g = make_grid(2, 10.0, 16).unwrap();
        let f = g.sample(|x| x[0] - 0.5 * x[1]);
        let params = PhysParams::new(1.0, 1.0, 4.0, 3.0, 2).unwrap();
        write_snapshot(&path, &f, &params).unwrap();

        let bytes = std::fs::read(&path).unwrap();
        let newline = bytes.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(bytes.len() - newline - 1, 256 * 8);
        let header: serde_json::Value = serde_json::from_slice(&bytes[..newline]).unwrap();
        assert_eq!(header["N"], 16);
        assert_eq!(header["params"]["c"], 4.0);

        let (h, back) = read_snapshot(&path).unwrap();
        assert_eq!(h.params, params);
        assert_eq!(back.values, f.values);
    }

    #[test]
    fn boundary_ratio_flags_slow_decay() {
        let g = make_grid(2, 8.0, 32).unwrap();
        let wide = g.sample(|x| (-(x[0] * x[0] + x[1] * x[1]) / 8.0).exp());
        assert!(wide.boundary_ratio() > 1e-3);
        let narrow = g.sample(|x| (-(x[0] * x[0] + x[1] * x[1]) * 4.0).exp());
        assert!(narrow.boundary_ratio() < 1e-10);
    }
}
