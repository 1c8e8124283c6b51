//! Experiment driver: the c-sweep towards the nonrelativistic limit, the uniform
//! bounds along it, the extension and oracle cross-checks, and report output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;
use thiserror::Error;

use crate::extension::{
    mode_table, neumann_consistency, perturbation_excess, perturbed_mode_energy, summed_energies,
    ExtensionError, ModeExtension, ModeRow,
};
use crate::model::{
    gradient_sq, make_grid, norm_h1, norm_hhalf, norm_l2, to_spectral, write_snapshot, Grid,
    ModelError, PhysParams, RealField,
};
use crate::radial_oracle::{
    compare_field, ground_profile, OracleError, RadialOptions, RadialProfile,
};
use crate::solver::{
    projected_gradient_solve, radial_scatter, solve_ground_state, GroundState, Init, SolverConfig,
    SolverError,
};
use crate::symbol::Multiplier;
use crate::variational::EnergyReport;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot parse {path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Extension(#[from] ExtensionError),
}

pub type Result<T> = std::result::Result<T, SweepError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SweepError + '_ {
    move |source| SweepError::Io {
        path: path.display().to_string(),
        source,
    }
}

// ---------------------------------------------------------------------------
// configuration

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsSection {
    pub m: f64,
    pub mu: f64,
    pub p: f64,
    pub n: usize,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        Self {
            m: 1.0,
            mu: 1.0,
            p: 3.0,
            n: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub length: f64,
    pub points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            length: 32.0,
            points: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub c: Vec<f64>,
    /// Light speed re-solved from the cold initial guess; defaults to the last entry.
    pub cold_check: Option<f64>,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self {
            c: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
            cold_check: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tol_residual: f64,
    pub max_iter: usize,
    pub gamma: Option<f64>,
    pub init_width: f64,
    pub init_file: Option<PathBuf>,
    pub fallback_step: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            tol_residual: d.tol_residual,
            max_iter: d.max_iter,
            gamma: d.gamma,
            init_width: 2.0,
            init_file: None,
            fallback_step: d.fallback_step,
        }
    }
}

impl SolverSection {
    pub fn solver_config(&self) -> SolverConfig {
        let init = match &self.init_file {
            Some(path) => Init::File(path.clone()),
            None => Init::Gaussian(self.init_width),
        };
        SolverConfig {
            tol_residual: self.tol_residual,
            max_iter: self.max_iter,
            gamma: self.gamma,
            init,
            fallback_step: self.fallback_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub r_max: f64,
    pub dr: f64,
    pub tol: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        let d = RadialOptions::default();
        Self {
            r_max: d.r_max,
            dr: d.dr,
            tol: d.tol,
        }
    }
}

impl OracleSection {
    pub fn options(&self) -> RadialOptions {
        RadialOptions {
            r_max: self.r_max,
            dr: self.dr,
            tol: self.tol,
        }
    }
}

/// Pass/fail thresholds applied to every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub scatter: f64,
    pub positivity: f64,
    pub nehari: f64,
    pub identity: f64,
    /// `‖u_cmax − u_∞‖_{H¹} / ‖u_∞‖_{H¹}` at the end of the schedule.
    pub final_error: f64,
    pub lp_ratio: f64,
    pub hhalf_ratio: f64,
    pub limit_slack: f64,
    pub slack_floor: f64,
    pub cold_start: f64,
    pub oracle: f64,
    pub mode_gap: f64,
    pub summed_gap: f64,
    pub neumann: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            scatter: 1e-6,
            positivity: 1e-10,
            nehari: 1e-8,
            identity: 1e-8,
            final_error: 1e-2,
            lp_ratio: 2.0,
            hhalf_ratio: 2.0,
            limit_slack: 1e-6,
            slack_floor: -0.05,
            cold_start: 1e-6,
            oracle: 1e-3,
            mode_gap: 1e-12,
            summed_gap: 1e-10,
            neumann: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

/// Full run description; every key is optional in the TOML file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub physics: PhysicsSection,
    pub grid: GridSection,
    pub sweep: ScheduleSection,
    pub solver: SolverSection,
    pub oracle: OracleSection,
    pub tolerances: Tolerances,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| SweepError::Parse {
            path: "<string>".into(),
            msg: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let cfg: Self = toml::from_str(&text).map_err(|e| SweepError::Parse {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn limit_params(&self) -> Result<PhysParams> {
        let ph = &self.physics;
        Ok(PhysParams::limit(ph.m, ph.mu, ph.p, ph.n)?)
    }

    pub fn params_at(&self, c: f64) -> Result<PhysParams> {
        Ok(self.limit_params()?.with_c(c)?)
    }

    pub fn make_grid(&self) -> Result<Grid> {
        Ok(make_grid(
            self.physics.n,
            self.grid.length,
            self.grid.points,
        )?)
    }

    pub fn validate(&self) -> Result<()> {
        self.limit_params()?;
        self.make_grid()?;
        let cs = &self.sweep.c;
        if cs.is_empty() {
            return Err(SweepError::Config("c schedule is empty".into()));
        }
        if cs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SweepError::Config(format!(
                "c schedule must be strictly increasing (got {cs:?})"
            )));
        }
        for &c in cs {
            if !(c.is_finite() && c >= 1.0) {
                return Err(SweepError::Config(format!(
                    "every c must be finite and at least 1 (got {c})"
                )));
            }
            self.params_at(c)?;
        }
        if let Some(c) = self.sweep.cold_check {
            if !cs.contains(&c) {
                return Err(SweepError::Config(format!(
                    "cold_check = {c} is not in the schedule"
                )));
            }
        }
        let s = &self.solver;
        if !(s.tol_residual > 0.0) || s.max_iter == 0 || !(s.init_width > 0.0) {
            return Err(SweepError::Config(
                "solver needs tol_residual > 0, max_iter > 0 and init_width > 0".into(),
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// records

/// Diagnostics of one ground state; `c` is `None` for the limit problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    #[serde(with = "opt_light_speed")]
    pub c: Option<f64>,
    pub energy: f64,
    pub lp: f64,
    pub l2_sq: f64,
    pub grad_sq: f64,
    pub hhalf: f64,
    /// `‖u_c − u_∞‖_{H¹}`.
    pub h1_err: f64,
    pub residual: f64,
    pub iterations: usize,
    pub radial_scatter: f64,
    pub min_over_max: f64,
    pub converged: bool,
}

mod opt_light_speed {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match c {
            Some(v) => s.serialize_f64(*v),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<f64>::deserialize(d)
    }
}

pub const CSV_HEADER: &str = "c,energy,lp,l2_sq,grad_sq,hhalf,h1_err,residual,iterations,radial_scatter,min_over_max,converged";

impl SweepRecord {
    pub fn from_state(state: &GroundState, limit: Option<&RealField>) -> Result<Self> {
        let u = &state.field;
        let h1_err = match limit {
            Some(v) => norm_h1(&u.sub(v)?),
            None => 0.0,
        };
        Ok(Self {
            c: (!state.params.is_limit()).then_some(state.params.c),
            energy: state.report.energy,
            lp: state.report.lp,
            l2_sq: norm_l2(u).powi(2),
            grad_sq: gradient_sq(u),
            hhalf: norm_hhalf(u),
            h1_err,
            residual: state.report.residual,
            iterations: state.iterations,
            radial_scatter: radial_scatter(u),
            min_over_max: state.min_over_max(),
            converged: state.converged,
        })
    }

    pub fn csv_line(&self) -> String {
        let c = self.c.map_or_else(|| "inf".to_string(), |c| c.to_string());
        format!(
            "{c},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{:e},{:e},{}",
            self.energy,
            self.lp,
            self.l2_sq,
            self.grad_sq,
            self.hhalf,
            self.h1_err,
            self.residual,
            self.iterations,
            self.radial_scatter,
            self.min_over_max,
            self.converged
        )
    }

    /// Per-state checks: convergence, sign, symmetry and the Nehari identities.
    pub fn row_checks(&self, report: &EnergyReport, tol: &Tolerances) -> RowChecks {
        RowChecks {
            converged: self.converged,
            positive: self.min_over_max >= -tol.positivity,
            radial: self.radial_scatter <= tol.scatter,
            nehari: report.nehari.abs() <= tol.nehari * report.quadratic,
            identity: report.identity_gap <= tol.identity * report.energy.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RowChecks {
    pub converged: bool,
    pub positive: bool,
    pub radial: bool,
    pub nehari: bool,
    pub identity: bool,
}

impl RowChecks {
    pub fn all(&self) -> bool {
        self.converged && self.positive && self.radial && self.nehari && self.identity
    }
}

// ---------------------------------------------------------------------------
// solving

/// Petviashvili first; projected descent if that fails to converge or blows up.
pub fn solve_with_fallback(
    params: &PhysParams,
    grid: &Grid,
    cfg: &SolverConfig,
) -> Result<GroundState> {
    let mult = Multiplier::for_params(grid, params);
    match solve_ground_state(params, grid, &mult, cfg) {
        Ok(gs) if gs.converged => return Ok(gs),
        Ok(_) => log::warn!("falling back to projected descent at c = {}", params.c),
        Err(SolverError::BlowUp { iteration, norm }) => {
            log::warn!("Petviashvili blew up at step {iteration} (norm {norm:e}); falling back")
        }
        Err(e) => return Err(e.into()),
    }
    Ok(projected_gradient_solve(params, grid, &mult, cfg)?)
}

#[derive(Debug, Clone)]
pub struct ColdCheck {
    pub c: f64,
    /// `‖u_warm − u_cold‖_{H¹} / ‖u_warm‖_{H¹}`.
    pub rel_h1_diff: f64,
    pub converged: bool,
}

/// Everything a sweep produces; the states are kept for snapshots and further checks.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub records: Vec<SweepRecord>,
    pub states: Vec<GroundState>,
    pub limit: SweepRecord,
    pub limit_state: GroundState,
    pub cold: Option<ColdCheck>,
}

impl SweepRun {
    pub fn limit_h1(&self) -> f64 {
        norm_h1(&self.limit_state.field)
    }
}

/// Solves the limit problem cold, then every `c` in order, each warm-started
/// from the previous state (rescaled onto the new Nehari manifold).
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepRun> {
    cfg.validate()?;
    let grid = cfg.make_grid()?;
    let base = cfg.solver.solver_config();

    let limit_params = cfg.limit_params()?;
    let limit_state = solve_with_fallback(&limit_params, &grid, &base)?;
    log::info!(
        "limit: I = {:.12}, {} iterations",
        limit_state.report.energy,
        limit_state.iterations
    );
    let limit = SweepRecord::from_state(&limit_state, None)?;

    let mut records = Vec::new();
    let mut states: Vec<GroundState> = Vec::new();
    for &c in &cfg.sweep.c {
        let params = cfg.params_at(c)?;
        let solver_cfg = match states.last() {
            Some(prev) => base.clone().with_init(Init::Custom(prev.field.clone())),
            None => base.clone(),
        };
        let state = solve_with_fallback(&params, &grid, &solver_cfg)?;
        let rec = SweepRecord::from_state(&state, Some(&limit_state.field))?;
        log::info!(
            "c = {c}: I = {:.12}, err = {:.3e}, {} iterations",
            rec.energy,
            rec.h1_err,
            rec.iterations
        );
        if !rec.converged {
            log::warn!("c = {c} did not converge (residual {:.3e})", rec.residual);
        }
        records.push(rec);
        states.push(state);
    }

    let cold_c = cfg
        .sweep
        .cold_check
        .unwrap_or(*cfg.sweep.c.last().expect("validated"));
    let idx = cfg
        .sweep
        .c
        .iter()
        .position(|&c| c == cold_c)
        .expect("validated");
    let cold = if idx == 0 {
        // the first entry is already a cold start
        None
    } else {
        let state = solve_with_fallback(&cfg.params_at(cold_c)?, &grid, &base)?;
        let warm = &states[idx].field;
        Some(ColdCheck {
            c: cold_c,
            rel_h1_diff: norm_h1(&warm.sub(&state.field)?) / norm_h1(warm),
            converged: state.converged,
        })
    };

    Ok(SweepRun {
        records,
        states,
        limit,
        limit_state,
        cold,
    })
}

// ---------------------------------------------------------------------------
// checks

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlackEntry {
    #[serde(with = "opt_light_speed")]
    pub c: Option<f64>,
    /// `2m‖u‖_p^p − (‖∇u‖² + 2mμ‖u‖²)`.
    pub slack: f64,
    /// `slack / (2m‖u‖_p^p)`.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformBounds {
    /// `max_c ‖u_c‖_p^p / min_c ‖u_c‖_p^p` over the converged rows.
    pub lp_ratio: f64,
    pub slack: Vec<SlackEntry>,
    pub limit_slack: SlackEntry,
    /// Observed `sup_c I_c(u_c)`.
    pub sup_energy: f64,
    /// `max_c ‖u_c‖_{H^{1/2}} / ‖u_∞‖_{H^{1/2}}`.
    pub hhalf_ratio: f64,
}

fn slack_entry(rec: &SweepRecord, params: &PhysParams) -> SlackEntry {
    let two_m = 2.0 * params.m;
    let lp_side = two_m * rec.lp;
    let slack = lp_side - (rec.grad_sq + two_m * params.mu * rec.l2_sq);
    SlackEntry {
        c: rec.c,
        slack,
        relative: slack / lp_side,
    }
}

/// L^p, H^{1/2} and energy bounds along the sweep. Needs at least two converged rows.
pub fn check_uniform_bounds(
    records: &[SweepRecord],
    limit: &SweepRecord,
    params: &PhysParams,
) -> Option<UniformBounds> {
    let conv: Vec<&SweepRecord> = records.iter().filter(|r| r.converged).collect();
    if conv.len() < 2 {
        return None;
    }
    let fold = |f: fn(f64, f64) -> f64, init: f64, get: fn(&SweepRecord) -> f64| {
        conv.iter().map(|r| get(r)).fold(init, f)
    };
    let lp_max = fold(f64::max, f64::NEG_INFINITY, |r| r.lp);
    let lp_min = fold(f64::min, f64::INFINITY, |r| r.lp);
    Some(UniformBounds {
        lp_ratio: lp_max / lp_min,
        slack: conv.iter().map(|r| slack_entry(r, params)).collect(),
        limit_slack: slack_entry(limit, params),
        sup_energy: fold(f64::max, f64::NEG_INFINITY, |r| r.energy),
        hhalf_ratio: fold(f64::max, f64::NEG_INFINITY, |r| r.hhalf) / limit.hhalf,
    })
}

/// Outcome of every check on a sweep; `passed` is what the CLI exit code reflects.
#[derive(Debug, Clone, Serialize)]
pub struct SweepChecks {
    pub rows: Vec<RowChecks>,
    pub limit_row: RowChecks,
    /// Finding, not a gate: the limit theorem only holds along a subsequence.
    pub err_strictly_decreasing: bool,
    pub err_last_is_min: bool,
    pub final_rel_err: f64,
    pub final_err_ok: bool,
    pub energy_increasing: bool,
    pub energy_below_limit: bool,
    pub bounds: Option<UniformBounds>,
    pub bounds_ok: bool,
    pub cold_ok: bool,
    pub passed: bool,
}

pub fn evaluate(run: &SweepRun, cfg: &RunConfig) -> Result<SweepChecks> {
    let tol = &cfg.tolerances;
    let rows: Vec<RowChecks> = run
        .records
        .iter()
        .zip(&run.states)
        .map(|(r, s)| r.row_checks(&s.report, tol))
        .collect();
    let limit_row = run.limit.row_checks(&run.limit_state.report, tol);
    let errs: Vec<f64> = run.records.iter().map(|r| r.h1_err).collect();
    let last = *errs.last().expect("non-empty schedule");
    let final_rel_err = last / run.limit_h1();
    let energies: Vec<f64> = run.records.iter().map(|r| r.energy).collect();
    // levels only need to agree with the ordering up to the solver tolerance
    let slop = cfg.solver.tol_residual * run.limit.energy.abs();
    let bounds = check_uniform_bounds(&run.records, &run.limit, &cfg.limit_params()?);
    let bounds_ok = bounds.as_ref().is_some_and(|b| {
        let last_slack = b
            .slack
            .last()
            .is_some_and(|s| s.relative >= tol.slack_floor);
        b.lp_ratio <= tol.lp_ratio
            && b.hhalf_ratio <= tol.hhalf_ratio
            && b.limit_slack.relative.abs() <= tol.limit_slack
            && last_slack
    });
    let cold_ok = run
        .cold
        .as_ref()
        .is_none_or(|c| c.converged && c.rel_h1_diff <= tol.cold_start);
    let mut checks = SweepChecks {
        err_strictly_decreasing: errs.windows(2).all(|w| w[1] < w[0]),
        err_last_is_min: errs.iter().all(|&e| e >= last),
        final_rel_err,
        final_err_ok: final_rel_err <= tol.final_error,
        energy_increasing: energies.windows(2).all(|w| w[1] >= w[0] - slop),
        energy_below_limit: energies.iter().all(|&e| e <= run.limit.energy + slop),
        rows,
        limit_row,
        bounds,
        bounds_ok,
        cold_ok,
        passed: false,
    };
    checks.passed = checks.rows.iter().all(RowChecks::all)
        && checks.limit_row.all()
        && checks.err_last_is_min
        && checks.final_err_ok
        && checks.energy_increasing
        && checks.energy_below_limit
        && checks.bounds_ok
        && checks.cold_ok;
    Ok(checks)
}

// ---------------------------------------------------------------------------
// output

/// Writes through a temporary file in the target directory and renames on success.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = NamedTempFile::new_in(dir).map_err(io_err(path))?;
    fill(tmp.path())?;
    tmp.persist(path).map_err(|e| SweepError::Io {
        path: path.display().to_string(),
        source: e.error,
    })?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, |tmp| {
        let mut f = fs::File::create(tmp).map_err(io_err(tmp))?;
        f.write_all(text.as_bytes()).map_err(io_err(tmp))?;
        f.sync_all().map_err(io_err(tmp))
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    // serialising plain data structs cannot fail
    serde_json::to_string_pretty(value).expect("serialisable") + "\n"
}

/// CSV text with the header and one line per record (header only when empty).
pub fn records_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &Path, records: &[SweepRecord]) -> Result<()> {
    write_text(path, &records_csv(records))
}

/// Stem used for per-state files, e.g. `state_c8` or `state_limit`.
pub fn state_stem(params: &PhysParams) -> String {
    if params.is_limit() {
        "state_limit".into()
    } else {
        format!("state_c{}", params.c)
    }
}

/// Raw field snapshot plus an [`EnergyReport`] JSON side-car.
pub fn write_state(dir: &Path, state: &GroundState) -> Result<PathBuf> {
    let stem = state_stem(&state.params);
    let snap = dir.join(format!("{stem}.bin"));
    write_atomic(&snap, |tmp| {
        Ok(write_snapshot(tmp, &state.field, &state.params)?)
    })?;
    write_text(&dir.join(format!("{stem}.json")), &to_json(&state.report))?;
    Ok(snap)
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    records: &'a [SweepRecord],
    limit: &'a SweepRecord,
    limit_h1: f64,
    cold_check: Option<ColdSummary>,
    checks: &'a SweepChecks,
}

#[derive(Serialize)]
struct ColdSummary {
    c: f64,
    rel_h1_diff: f64,
    converged: bool,
}

/// Writes `sweep.csv`, `sweep.json` and one snapshot per state into `dir`.
pub fn emit(run: &SweepRun, checks: &SweepChecks, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_csv(&dir.join("sweep.csv"), &run.records)?;
    let summary = SweepSummary {
        records: &run.records,
        limit: &run.limit,
        limit_h1: run.limit_h1(),
        cold_check: run.cold.as_ref().map(|c| ColdSummary {
            c: c.c,
            rel_h1_diff: c.rel_h1_diff,
            converged: c.converged,
        }),
        checks,
    };
    write_text(&dir.join("sweep.json"), &to_json(&summary))?;
    for state in run.states.iter().chain(std::iter::once(&run.limit_state)) {
        write_state(dir, state)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// single solve

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub record: SweepRecord,
    pub report: EnergyReport,
    pub checks: RowChecks,
}

/// Solves one light speed (`c = ∞` for the limit) and writes its snapshot.
pub fn run_single(cfg: &RunConfig, c: f64, dir: &Path) -> Result<(GroundState, SolveSummary)> {
    cfg.validate()?;
    let params = if c.is_infinite() {
        cfg.limit_params()?
    } else {
        cfg.params_at(c)?
    };
    let grid = cfg.make_grid()?;
    let state = solve_with_fallback(&params, &grid, &cfg.solver.solver_config())?;
    let record = SweepRecord::from_state(&state, None)?;
    let checks = record.row_checks(&state.report, &cfg.tolerances);
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_state(dir, &state)?;
    let summary = SolveSummary {
        record,
        report: state.report,
        checks,
    };
    Ok((state, summary))
}

// ---------------------------------------------------------------------------
// extension check

/// Competitor offsets `δ` spanning `[1e-6, 1e3]` logarithmically.
pub fn delta_grid() -> Vec<f64> {
    (-12..=6).map(|k| 10f64.powf(0.5 * k as f64)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtensionSummary {
    pub c: f64,
    pub modes: usize,
    pub max_mode_gap: f64,
    /// Relative gap between summed extension energy and the trace form.
    pub summed_gap: f64,
    pub neumann_gap: f64,
    /// Every competitor has positive excess and is not below the harmonic energy.
    pub competitors_larger: bool,
    pub passed: bool,
}

/// Trace-inequality checks on the ground state at `c`, plus the per-mode table.
pub fn extension_check(
    state: &GroundState,
    tol: &Tolerances,
) -> Result<(ExtensionSummary, Vec<ModeRow>)> {
    let params = &state.params;
    let u = &state.field;
    let rows = mode_table(u, params)?;
    let max_mode_gap = rows.iter().map(|r| r.gap).fold(0.0, f64::max);
    let (ext, trace) = summed_energies(u, params)?;
    let summed_gap = (ext - trace).abs() / trace;
    let neumann_gap = neumann_consistency(u, params)?;
    let deltas = delta_grid();
    let spec = to_spectral(u);
    let mut competitors_larger = true;
    for (&coef, &xi_sq) in spec.coeffs.iter().zip(u.grid.xi_sq()) {
        if coef.norm_sqr() == 0.0 {
            continue;
        }
        let mode = ModeExtension::new(xi_sq, coef, params)?;
        let base = crate::extension::mode_energy(&mode, params);
        for &d in &deltas {
            let excess = perturbation_excess(&mode, d, params)?;
            let total = perturbed_mode_energy(&mode, d, params)?;
            competitors_larger &= excess > 0.0 && total >= base;
        }
    }
    let passed = max_mode_gap <= tol.mode_gap
        && summed_gap <= tol.summed_gap
        && neumann_gap <= tol.neumann
        && competitors_larger;
    Ok((
        ExtensionSummary {
            c: params.c,
            modes: rows.len(),
            max_mode_gap,
            summed_gap,
            neumann_gap,
            competitors_larger,
            passed,
        },
        rows,
    ))
}

pub fn mode_rows_csv(rows: &[ModeRow]) -> String {
    let mut out = String::from("mode,xi_sq,lhs,rhs,gap\n");
    for r in rows {
        let mode: Vec<String> = r.mode.iter().map(i64::to_string).collect();
        out.push_str(&format!(
            "{},{:e},{:e},{:e},{:e}\n",
            mode.join(":"),
            r.xi_sq,
            r.lhs,
            r.rhs,
            r.gap
        ));
    }
    out
}

/// Runs the sweep solves and checks the extension identities at every `c`.
pub fn run_extension_check(cfg: &RunConfig, dir: &Path) -> Result<Vec<ExtensionSummary>> {
    cfg.validate()?;
    let grid = cfg.make_grid()?;
    let base = cfg.solver.solver_config();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut out = Vec::new();
    let mut prev: Option<RealField> = None;
    for &c in &cfg.sweep.c {
        let solver_cfg = match &prev {
            Some(f) => base.clone().with_init(Init::Custom(f.clone())),
            None => base.clone(),
        };
        let state = solve_with_fallback(&cfg.params_at(c)?, &grid, &solver_cfg)?;
        let (summary, rows) = extension_check(&state, &cfg.tolerances)?;
        write_text(
            &dir.join(format!("extension_c{c}.csv")),
            &mode_rows_csv(&rows),
        )?;
        out.push(summary);
        prev = Some(state.field);
    }
    write_text(&dir.join("extension.json"), &to_json(&out))?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// oracle check

#[derive(Debug, Clone, Serialize)]
pub struct ScalingEntry {
    pub m: f64,
    pub mu: f64,
    /// `sup_r |u(r) − α w(βr)| / u(0)` against the `m = 1/2, μ = 1` profile.
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub u0: f64,
    pub spectral_max: f64,
    /// Sup-norm gap between spectral `u_∞` and the shooting profile, relative to `u0`.
    pub profile_gap: f64,
    pub scaling: Vec<ScalingEntry>,
    pub passed: bool,
}

/// Sup over `r ∈ [0, r_max]` of `|u(r) − μ^{1/(p−2)} w(√(2mμ) r)| / u(0)`.
pub fn scaling_deviation(u: &RadialProfile, w: &RadialProfile, params: &PhysParams) -> f64 {
    let alpha = params.mu.powf(1.0 / (params.p - 2.0));
    let beta = (2.0 * params.m * params.mu).sqrt();
    u.radii()
        .zip(&u.values)
        .filter(|(r, _)| beta * r <= w.r_max)
        .map(|(r, &v)| (v - alpha * w.eval(beta * r)).abs())
        .fold(0.0, f64::max)
        / u.u0
}

/// Scaling pairs used by the oracle check.
pub const SCALING_PAIRS: [(f64, f64); 2] = [(2.0, 0.5), (0.5, 2.0)];

/// Oracle profile vs spectral limit state, and the oracle's own scaling closure.
pub fn oracle_check(
    cfg: &RunConfig,
    limit_state: &GroundState,
) -> Result<(OracleSummary, RadialProfile)> {
    let opts = cfg.oracle.options();
    let params = cfg.limit_params()?;
    let prof = ground_profile(&params, &opts)?;
    let profile_gap = compare_field(&limit_state.field, &prof);

    let ph = &cfg.physics;
    let unit = PhysParams::limit(0.5, 1.0, ph.p, ph.n)?;
    let w = ground_profile(&unit, &opts)?;
    let mut scaling = Vec::new();
    for (m, mu) in SCALING_PAIRS {
        let pp = PhysParams::limit(m, mu, ph.p, ph.n)?;
        let u = ground_profile(&pp, &opts)?;
        scaling.push(ScalingEntry {
            m,
            mu,
            deviation: scaling_deviation(&u, &w, &pp),
        });
    }
    let passed =
        profile_gap <= cfg.tolerances.oracle && scaling.iter().all(|s| s.deviation <= 1e-6);
    Ok((
        OracleSummary {
            u0: prof.u0,
            spectral_max: limit_state.field.max(),
            profile_gap,
            scaling,
            passed,
        },
        prof,
    ))
}

pub fn run_oracle_check(cfg: &RunConfig, dir: &Path) -> Result<OracleSummary> {
    cfg.validate()?;
    let grid = cfg.make_grid()?;
    let limit_state =
        solve_with_fallback(&cfg.limit_params()?, &grid, &cfg.solver.solver_config())?;
    let (summary, prof) = oracle_check(cfg, &limit_state)?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv = dir.join("oracle_profile.csv");
    write_atomic(&csv, |tmp| Ok(prof.write_csv(tmp)?))?;
    write_text(&dir.join("oracle.json"), &to_json(&summary))?;
    Ok(summary)
}
