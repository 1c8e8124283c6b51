//! Shooting oracle for the positive radial solution of
//! `−Δu/(2m) + μu = u^{p−1}`, i.e. the ODE
//!
//! ```text
//! u'' + (n−1)/r u' = 2m (μu − u^{p−1}),   u(0) = u0,  u'(0) = 0.
//! ```
//!
//! Shots with `u0` too large cross zero, shots with `u0` too small turn back up
//! before reaching zero; the ground state sits at the boundary between the two
//! and is located by bisection. Nothing here touches the spectral machinery.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::model::{PhysParams, RealField};
use crate::solver::GroundState;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("step size {dr} too large: energy balance off by {drift:e} at r = {r}")]
    StepTooLarge { dr: f64, r: f64, drift: f64 },
    #[error("invalid step or radius (dr = {dr}, r_max = {r_max})")]
    Resolution { dr: f64, r_max: f64 },
    #[error("shooting amplitude must be positive (got {0})")]
    Amplitude(f64),
    #[error("bracket [{lo}, {hi}] does not separate decaying and crossing shots")]
    Bracket { lo: f64, hi: f64 },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, OracleError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShotOutcome {
    /// Stays positive and turns back up (or reaches `r_max` still positive): `u0` too small.
    Decays,
    /// Reaches zero: `u0` too large.
    CrossesZero,
    /// Left every sensible bound.
    Diverges,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialOptions {
    pub r_max: f64,
    pub dr: f64,
    /// Absolute bisection tolerance on `u0`.
    pub tol: f64,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self {
            r_max: 30.0,
            dr: 1e-3,
            tol: 1e-13,
        }
    }
}

/// Samples `u(i·dr)` of a positive, decreasing radial profile.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub r_max: f64,
    pub dr: f64,
    pub values: Vec<f64>,
    pub u0: f64,
    /// Radius beyond which `values` is the asymptotic tail rather than integrated data.
    pub r_cut: f64,
}

impl RadialProfile {
    /// Linear interpolation; zero beyond `r_max`.
    pub fn eval(&self, r: f64) -> f64 {
        if r < 0.0 || r > self.r_max {
            return 0.0;
        }
        let x = r / self.dr;
        let i = (x.floor() as usize).min(self.values.len() - 1);
        if i + 1 >= self.values.len() {
            return self.values[self.values.len() - 1];
        }
        let t = x - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| i as f64 * self.dr)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io_err = |source| OracleError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
        writeln!(out, "r,u").map_err(io_err)?;
        for (r, u) in self.radii().zip(&self.values) {
            writeln!(out, "{r},{u}").map_err(io_err)?;
        }
        out.flush().map_err(io_err)
    }
}

/// Integrated trajectory of one shot.
#[derive(Debug, Clone)]
pub struct Shot {
    pub outcome: ShotOutcome,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

struct Rhs {
    two_m: f64,
    mu: f64,
    p: f64,
    bend: f64,
}

impl Rhs {
    fn new(params: &PhysParams) -> Self {
        Self {
            two_m: 2.0 * params.m,
            mu: params.mu,
            p: params.p,
            bend: params.n as f64 - 1.0,
        }
    }

    fn force(&self, u: f64) -> f64 {
        self.two_m * (self.mu * u - u.signum() * u.abs().powf(self.p - 1.0))
    }

    fn accel(&self, r: f64, u: f64, v: f64) -> f64 {
        self.force(u) - self.bend / r * v
    }

    /// `v²/2 − F(u)`; along exact trajectories `dE/dr = −(n−1) v²/r`.
    fn energy(&self, u: f64, v: f64) -> f64 {
        let f = self.two_m * (0.5 * self.mu * u * u - u.abs().powf(self.p) / self.p);
        0.5 * v * v - f
    }
}

/// Integrates one shot with classical RK4; the first step uses the series
/// `u ≈ u0 + u''(0) r²/2` with `u''(0) = (2m/n)(μu0 − u0^{p−1})`.
pub fn shoot(u0: f64, params: &PhysParams, r_max: f64, dr: f64) -> Result<Shot> {
    if !(u0 > 0.0 && u0.is_finite()) {
        return Err(OracleError::Amplitude(u0));
    }
    if !(dr > 0.0 && r_max > dr && dr.is_finite() && r_max.is_finite()) {
        return Err(OracleError::Resolution { dr, r_max });
    }
    let rhs = Rhs::new(params);
    let curvature = rhs.force(u0) / params.n as f64;
    let steps = (r_max / dr).round() as usize;
    let mut u = Vec::with_capacity(steps + 1);
    let mut du = Vec::with_capacity(steps + 1);
    u.push(u0);
    du.push(0.0);
    let (mut uc, mut vc) = (u0 + 0.5 * curvature * dr * dr, curvature * dr);
    u.push(uc);
    du.push(vc);

    let scale = rhs.energy(u0, 0.0).abs() + u0 * u0;
    let mut e_prev = rhs.energy(uc, vc);
    let mut v_prev = vc;
    let bound = 1e6 * u0.max(1.0);
    let mut outcome = ShotOutcome::Decays;
    for i in 1..steps {
        let r = i as f64 * dr;
        let (k1u, k1v) = (vc, rhs.accel(r, uc, vc));
        let (k2u, k2v) = (
            vc + 0.5 * dr * k1v,
            rhs.accel(r + 0.5 * dr, uc + 0.5 * dr * k1u, vc + 0.5 * dr * k1v),
        );
        let (k3u, k3v) = (
            vc + 0.5 * dr * k2v,
            rhs.accel(r + 0.5 * dr, uc + 0.5 * dr * k2u, vc + 0.5 * dr * k2v),
        );
        let (k4u, k4v) = (
            vc + dr * k3v,
            rhs.accel(r + dr, uc + dr * k3u, vc + dr * k3v),
        );
        uc += dr / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        vc += dr / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);

        if !uc.is_finite() || !vc.is_finite() || uc.abs() > bound {
            outcome = ShotOutcome::Diverges;
            break;
        }
        let e = rhs.energy(uc, vc);
        // Simpson on (n−1)v²/r with a cubic Hermite midpoint velocity
        let a_prev = k1v;
        let a_next = rhs.accel(r + dr, uc, vc);
        let v_mid = 0.5 * (v_prev + vc) + dr * (a_prev - a_next) / 8.0;
        let loss = dr / 6.0
            * rhs.bend
            * (v_prev * v_prev / r + 4.0 * v_mid * v_mid / (r + 0.5 * dr) + vc * vc / (r + dr));
        let drift = e - e_prev + loss;
        if drift.abs() > 1e-8 * scale {
            return Err(OracleError::StepTooLarge {
                dr,
                r: r + dr,
                drift,
            });
        }
        e_prev = e;
        v_prev = vc;
        u.push(uc);
        du.push(vc);
        if uc <= 0.0 {
            outcome = ShotOutcome::CrossesZero;
            break;
        }
        if vc > 0.0 {
            outcome = ShotOutcome::Decays;
            break;
        }
    }
    Ok(Shot { outcome, u, du })
}

/// Rest point `μ^{1/(p−2)}` of the ODE; the ground-state amplitude lies above it.
pub fn rest_point(params: &PhysParams) -> f64 {
    params.mu.powf(1.0 / (params.p - 2.0))
}

/// A bracket `[lo, hi]` with `lo` decaying and `hi` crossing zero.
pub fn default_bracket(params: &PhysParams, opts: &RadialOptions) -> Result<(f64, f64)> {
    let lo = 0.5 * rest_point(params);
    let mut hi = 2.0 * rest_point(params);
    for _ in 0..60 {
        if shoot(hi, params, opts.r_max, opts.dr)?.outcome == ShotOutcome::CrossesZero {
            return Ok((lo, hi));
        }
        hi *= 2.0;
    }
    Err(OracleError::Bracket { lo, hi })
}

/// Bisects on the decay/crossing dichotomy. Returns the final bracket.
pub fn bisect_u0(
    params: &PhysParams,
    bracket: (f64, f64),
    opts: &RadialOptions,
) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = bracket;
    let classify = |u0: f64| shoot(u0, params, opts.r_max, opts.dr).map(|s| s.outcome);
    if !(lo < hi)
        || classify(lo)? != ShotOutcome::Decays
        || classify(hi)? != ShotOutcome::CrossesZero
    {
        return Err(OracleError::Bracket { lo, hi });
    }
    while hi - lo > opts.tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match classify(mid)? {
            ShotOutcome::CrossesZero => hi = mid,
            _ => lo = mid,
        }
    }
    Ok((lo, hi))
}

/// Ground-state amplitude `u(0)`.
pub fn find_ground_u0(
    params: &PhysParams,
    bracket: (f64, f64),
    opts: &RadialOptions,
) -> Result<f64> {
    let (lo, hi) = bisect_u0(params, bracket, opts)?;
    Ok(0.5 * (lo + hi))
}

/// Builds the ground-state profile from the final bisection bracket.
///
/// The true solution lies between the two bracketing shots; their mean is kept
/// while both decrease, stay positive and agree to `1e-9 · u0`. Past that radius
/// the profile continues with the decay `r^{-(n-1)/2} e^{-√(2mμ) r}`.
pub fn ground_profile(params: &PhysParams, opts: &RadialOptions) -> Result<RadialProfile> {
    let bracket = default_bracket(params, opts)?;
    let (lo, hi) = bisect_u0(params, bracket, opts)?;
    let a = shoot(lo, params, opts.r_max, opts.dr)?;
    let b = shoot(hi, params, opts.r_max, opts.dr)?;
    let u0 = 0.5 * (lo + hi);
    let len = a.u.len().min(b.u.len());
    let mut values = Vec::new();
    for i in 0..len {
        let (ua, ub) = (a.u[i], b.u[i]);
        let ok = ua > 0.0
            && ub > 0.0
            && (i == 0 || (a.du[i] < 0.0 && b.du[i] < 0.0))
            && (ua - ub).abs() <= 1e-9 * u0;
        if !ok {
            break;
        }
        values.push(0.5 * (ua + ub));
    }
    // drop the last few points so the tail starts on clean data
    values.truncate(values.len().saturating_sub(1).max(1));
    let cut = values.len() - 1;
    let r_cut = cut as f64 * opts.dr;
    let u_cut = values[cut];
    let kappa = (2.0 * params.m * params.mu).sqrt();
    let power = 0.5 * (params.n as f64 - 1.0);
    let steps = (opts.r_max / opts.dr).round() as usize;
    for i in cut + 1..=steps {
        let r = i as f64 * opts.dr;
        values.push(u_cut * (r_cut / r).powf(power) * (-kappa * (r - r_cut)).exp());
    }
    Ok(RadialProfile {
        r_max: steps as f64 * opts.dr,
        dr: opts.dr,
        values,
        u0,
        r_cut,
    })
}

/// Sup over grid points within `L/2` of the centre of `|u(x) − profile(|x|)|`, relative to `u0`.
///
/// Points are grouped by their exact radius, so this is the sup over radius bins.
pub fn compare_field(field: &RealField, prof: &RadialProfile) -> f64 {
    let grid = &field.grid;
    let half = grid.length() / 2.0;
    let worst = field
        .values
        .iter()
        .enumerate()
        .filter_map(|(i, &v)| {
            let r = grid.position(i).iter().map(|x| x * x).sum::<f64>().sqrt();
            (r <= half).then(|| (v - prof.eval(r)).abs())
        })
        .fold(0.0, f64::max);
    worst / prof.u0
}

pub fn compare_profiles(gs: &GroundState, prof: &RadialProfile) -> f64 {
    compare_field(&gs.field, prof)
}

/// Samples the profile on a grid centred at the origin.
pub fn lift_profile(grid: &crate::model::Grid, prof: &RadialProfile) -> RealField {
    grid.sample(|x| prof.eval(x.iter().map(|v| v * v).sum::<f64>().sqrt()))
}
