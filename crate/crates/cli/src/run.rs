//! Orchestration: one job per (microstate, route), reduced in declaration order.

use qtraj_core::{
    build_action, cycle_average_classical_limit, derive_initial_state, floyd_time_numeric, floyd_trajectory, free_state,
    guarded_end, integrate_classical, integrate_fiqnl, integrate_quadrature, solve_basis, solve_energy, ActionField, BasisPair,
    Convention, Diagnostics, FreeTrajectoryParams, Microstate, RootPolicy, StepControl, Trajectory, TrajectoryState,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{MicrostateSpec, RouteKind, RunConfig};
use crate::output::Row;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Solve the basis and report its Wronskian.
    Basis,
    /// Dynamics routes: quadrature, fiqnl, closed form, classical.
    Trajectory,
    /// Jacobi-theorem times t - t0 = dS0/dE.
    Floyd,
    /// Every enabled route side by side, with probe times and deltas.
    Compare,
    /// Identity checks against their bounds.
    Residuals,
    /// Cycle-averaged classical limit under repeated halving of hbar.
    Limit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Basis => "basis",
            Self::Trajectory => "trajectory",
            Self::Floyd => "floyd",
            Self::Compare => "compare",
            Self::Residuals => "residuals",
            Self::Limit => "limit",
        }
    }

    fn routes(self) -> &'static [RouteKind] {
        use RouteKind::*;
        match self {
            Self::Basis | Self::Limit => &[],
            Self::Trajectory => &[Quadrature, Fiqnl, ClosedForm, Classical],
            Self::Floyd => &[Floyd],
            Self::Compare => &RouteKind::ALL,
            Self::Residuals => &[Quadrature, Fiqnl],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub seedless: bool,
    pub config: RunConfig,
    pub microstates: Vec<MicrostateReport>,
    pub checks_failed: usize,
    pub failures: usize,
    pub success: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MicrostateReport {
    pub index: usize,
    pub microstate: MicrostateSpec,
    pub routes: Vec<RouteReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<Probe>,
    pub comparisons: Vec<Comparison>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<Limit>,
    pub errors: Vec<String>,
    #[serde(skip)]
    pub data: Vec<(RouteKind, Vec<Row>)>,
    #[serde(skip)]
    pub basis: Option<BasisPair>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RouteReport {
    pub route: RouteKind,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub points: usize,
    pub start: Option<[f64; 2]>,
    pub end: Option<[f64; 2]>,
    pub max_conservation: Option<f64>,
    pub max_fiqnl: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Probe {
    pub x: f64,
    pub times: Vec<ProbeTime>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeTime {
    pub route: RouteKind,
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub routes: [RouteKind; 2],
    pub t_range: [f64; 2],
    pub max_dx: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    /// `None` for informational entries.
    pub bound: Option<f64>,
    pub pass: bool,
}

impl Check {
    fn bounded(name: impl Into<String>, value: Option<f64>, bound: f64) -> Self {
        let pass = value.is_some_and(|v| v <= bound);
        Self { name: name.into(), value, bound: Some(bound), pass }
    }

    fn info(name: impl Into<String>, value: Option<f64>) -> Self {
        Self { name: name.into(), value, bound: None, pass: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Limit {
    pub centre: f64,
    pub classical: f64,
    pub samples: Vec<LimitSample>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitSample {
    pub halvings: u32,
    pub hbar: f64,
    pub average: f64,
    pub ratio: f64,
}

pub fn run(config: &RunConfig, command: Command, seedless: bool) -> RunReport {
    let microstates: Vec<MicrostateReport> =
        config.microstates.par_iter().enumerate().map(|(i, spec)| run_microstate(config, command, i + 1, spec)).collect();
    let checks_failed = microstates.iter().flat_map(|m| &m.checks).filter(|c| !c.pass).count();
    let failures = microstates
        .iter()
        .map(|m| m.errors.len() + m.routes.iter().filter(|r| r.status == "failed").count())
        .sum();
    RunReport {
        command: command.name(),
        seedless,
        config: config.clone(),
        microstates,
        checks_failed,
        failures,
        success: checks_failed == 0 && failures == 0,
    }
}

/// Shared per-microstate inputs.
struct Setup {
    pair: BasisPair,
    field: ActionField,
    arc_end: f64,
    quadrature: qtraj_core::Result<Trajectory>,
    t_end: Option<f64>,
}

fn setup(config: &RunConfig, spec: &MicrostateSpec) -> qtraj_core::Result<Setup> {
    let mut pair = solve_basis(&config.potential, spec.energy, config.grid, config.units, config.convention)?;
    if let Some(mu) = spec.mu {
        pair = pair.recombine(mu);
    }
    let ms = Microstate::new(spec.energy, spec.a, spec.b)?.with_lambda(spec.lambda);
    let field = build_action(&pair, ms)?.with_turning_rel(config.tolerances.turning_rel);
    let arc_end = guarded_end(&field, config.span.x_start, config.span.x_end)?;
    let quadrature = integrate_quadrature(&field, config.span.x_start, arc_end, 0.0, config.tolerances.quad_tol);
    let t_end = config.span.t_end.or_else(|| quadrature.as_ref().ok().map(|q| q.end().t));
    Ok(Setup { pair, field, arc_end, quadrature, t_end })
}

/// Output of one route: rows for the data file, plus x(t) when the route
/// produces a time-parametrised path.
struct RouteData {
    rows: Vec<Row>,
    path: Option<Path>,
    report: RouteReport,
}

enum Path {
    Sampled(Trajectory),
    Closed(FreeTrajectoryParams, qtraj_core::Units, [f64; 2]),
}

impl Path {
    fn span(&self) -> [f64; 2] {
        match self {
            Self::Sampled(t) => {
                let (a, b) = (t.start().t, t.end().t);
                [a.min(b), a.max(b)]
            }
            Self::Closed(_, _, span) => *span,
        }
    }

    fn x(&self, t: f64) -> Option<f64> {
        match self {
            Self::Sampled(traj) => traj.position_at(t),
            Self::Closed(p, u, _) => Some(qtraj_core::free_trajectory(p, *u, t)),
        }
    }

    /// First time the path reaches `x`: bracket on a uniform time sampling,
    /// then bisect.
    fn time_at(&self, x: f64) -> Option<f64> {
        let [t0, t1] = self.span();
        let n = 400;
        let ts: Vec<f64> = (0..=n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).collect();
        let f = |t: f64| self.x(t).map(|v| v - x);
        for w in ts.windows(2) {
            let (fa, fb) = (f(w[0])?, f(w[1])?);
            if fa == 0.0 {
                return Some(w[0]);
            }
            if fa.signum() != fb.signum() {
                let (mut lo, mut hi, mut flo) = (w[0], w[1], fa);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let fm = f(mid)?;
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                return Some(0.5 * (lo + hi));
            }
        }
        (f(t1)? == 0.0).then_some(t1)
    }
}

fn run_microstate(config: &RunConfig, command: Command, index: usize, spec: &MicrostateSpec) -> MicrostateReport {
    let mut report = MicrostateReport {
        index,
        microstate: spec.clone(),
        routes: Vec::new(),
        probe: None,
        comparisons: Vec::new(),
        checks: Vec::new(),
        limit: None,
        errors: Vec::new(),
        data: Vec::new(),
        basis: None,
    };
    let bounds = &config.bounds;

    if command == Command::Limit {
        limit_study(config, spec, &mut report);
        return report;
    }

    let setup = match setup(config, spec) {
        Ok(s) => s,
        Err(e) => {
            report.errors.push(format!("setup: {e}"));
            return report;
        }
    };

    if matches!(command, Command::Basis | Command::Residuals) {
        let w = setup.pair.wronskian();
        report.checks.push(Check::info("wronskian", Some(w.value)));
        report.checks.push(Check::bounded("wronskian_drift", Some(w.max_relative_drift), bounds.wronskian_drift));
        let [r1, r2] = setup.pair.schrodinger_residual();
        report.checks.push(Check::info("schrodinger_residual", Some(r1.max(r2))));
    }
    if command == Command::Basis {
        report.basis = Some(setup.pair.clone());
        return report;
    }
    if command == Command::Residuals {
        let scale = spec.energy.abs().max(1.0);
        report.checks.push(Check::bounded("qshje_rel", Some(setup.field.qshje_residual().max_abs / scale), bounds.qshje_rel));
    }

    let routes: Vec<RouteKind> = config.routes.iter().copied().filter(|r| command.routes().contains(r)).collect();
    let results: Vec<RouteData> = routes.par_iter().map(|&r| run_route(config, spec, &setup, r)).collect();

    if matches!(command, Command::Trajectory | Command::Compare | Command::Residuals) {
        let e = spec.energy.abs();
        for d in &results {
            let r = &d.report;
            if r.status != "ok" || r.route == RouteKind::Floyd {
                continue;
            }
            let name = r.route.name();
            if let Some(c) = r.max_conservation {
                report.checks.push(Check::bounded(format!("conservation_rel:{name}"), Some(c / e), bounds.conservation_rel));
            }
            if r.route != RouteKind::Classical {
                if let Some(f) = r.max_fiqnl {
                    report.checks.push(Check::bounded(format!("fiqnl:{name}"), Some(f), bounds.fiqnl));
                }
            }
        }
    }
    if command == Command::Residuals {
        report.checks.push(Check::info("energy_roundtrip_rel", energy_roundtrip(config, spec, &results)));
    }
    if command == Command::Compare {
        if let Some(x) = config.probe_x {
            report.probe = Some(probe(config, spec, &setup, &results, x));
        }
        report.comparisons = compare_paths(&results);
    }

    for d in results {
        report.data.push((d.report.route, d.rows));
        report.routes.push(d.report);
    }
    report
}

fn route_report(route: RouteKind) -> RouteReport {
    RouteReport { route, status: "ok", message: None, points: 0, start: None, end: None, max_conservation: None, max_fiqnl: None }
}

fn failed(route: RouteKind, status: &'static str, message: String) -> RouteData {
    RouteData { rows: Vec::new(), path: None, report: RouteReport { status, message: Some(message), ..route_report(route) } }
}

fn from_trajectory(route: RouteKind, traj: Trajectory) -> RouteData {
    let rows = traj.states.iter().zip(&traj.diagnostics).map(|(s, d)| Row::from_state(s, d)).collect();
    let report = RouteReport {
        points: traj.states.len(),
        start: Some([traj.start().t, traj.start().x]),
        end: Some([traj.end().t, traj.end().x]),
        max_conservation: traj.max_conservation(),
        max_fiqnl: traj.max_fiqnl(),
        ..route_report(route)
    };
    RouteData { rows, path: Some(Path::Sampled(traj)), report }
}

/// a against (sin kx, cos kx): the slope-one theta1 is sin(kx) / k.
fn wave_a(config: &RunConfig, spec: &MicrostateSpec) -> f64 {
    match config.convention {
        Convention::FloydWave => spec.a,
        Convention::SlopeOne => spec.a / config.units.wavenumber(spec.energy),
    }
}

fn floyd_microstate(config: &RunConfig, spec: &MicrostateSpec) -> Result<Microstate, String> {
    Microstate::new(spec.energy, wave_a(config, spec), spec.b).map(|m| m.with_lambda(spec.lambda)).map_err(|e| e.to_string())
}

fn closed_form_params(config: &RunConfig, spec: &MicrostateSpec) -> Result<FreeTrajectoryParams, String> {
    if !config.potential.is_free() {
        return Err("closed form exists only for the free particle".into());
    }
    if spec.mu.is_some() {
        return Err("closed form needs microstates given as (a, b)".into());
    }
    let x_min = config.grid.x_min();
    let mut p = FreeTrajectoryParams::from_microstate(wave_a(config, spec), spec.b, spec.energy, config.units, config.span.x_start - x_min, 0.0)
        .map_err(|e| e.to_string())?;
    p.x0 += x_min;
    Ok(p)
}

fn run_route(config: &RunConfig, spec: &MicrostateSpec, setup: &Setup, route: RouteKind) -> RouteData {
    let e = spec.energy;
    let units = config.units;
    let pot = &config.potential;
    let control = StepControl::adaptive(config.tolerances.ode_tol);
    let need_t_end = || setup.t_end.ok_or_else(|| "span.t_end is required when the quadrature arc fails".to_string());
    let outcome: Result<RouteData, String> = match route {
        RouteKind::Quadrature => setup.quadrature.clone().map(|t| from_trajectory(route, t)).map_err(|e| e.to_string()),
        RouteKind::Fiqnl => need_t_end().and_then(|t_end| {
            let initial = derive_initial_state(&setup.field, config.span.x_start).map_err(|e| e.to_string())?;
            integrate_fiqnl(initial, pot, e, units, t_end, control, Some(&setup.field))
                .map(|t| from_trajectory(route, t))
                .map_err(|e| e.to_string())
        }),
        RouteKind::Classical => need_t_end().and_then(|t_end| {
            let direction = setup.arc_end - config.span.x_start;
            integrate_classical(pot, e, units, config.span.x_start, direction, 0.0, t_end, control)
                .map(|t| from_trajectory(route, t))
                .map_err(|e| e.to_string())
        }),
        RouteKind::ClosedForm => match closed_form_params(config, spec) {
            Err(msg) => return failed(route, "skipped", msg),
            Ok(p) => need_t_end().map(|t_end| closed_form_route(config, setup, p, t_end)),
        },
        RouteKind::Floyd if spec.mu.is_some() => return failed(route, "skipped", "Jacobi-theorem times need microstates given as (a, b)".into()),
        RouteKind::Floyd => floyd_microstate(config, spec).and_then(|ms| {
            let n = config.span.samples;
            let (x0, x1) = (config.span.x_start, setup.arc_end);
            let xs: Vec<f64> = (0..n).map(|i| if i + 1 == n { x1 } else { x0 + (x1 - x0) * i as f64 / (n - 1) as f64 }).collect();
            let factory = |en: f64| solve_basis(pot, en, config.grid, units, Convention::FloydWave);
            let step = Some(config.tolerances.energy_step_rel * e.abs());
            let pts = floyd_trajectory(factory, ms, &xs, step, config.stencil).map_err(|e| e.to_string())?;
            let rows: Vec<Row> = pts.iter().map(|p| Row { t: Some(p.t_minus_t0), x: Some(p.x), ..Row::default() }).collect();
            let report = RouteReport {
                points: rows.len(),
                start: pts.first().map(|p| [p.t_minus_t0, p.x]),
                end: pts.last().map(|p| [p.t_minus_t0, p.x]),
                ..route_report(route)
            };
            Ok(RouteData { rows, path: None, report })
        }),
    };
    outcome.unwrap_or_else(|msg| failed(route, "failed", msg))
}

fn closed_form_route(config: &RunConfig, setup: &Setup, p: FreeTrajectoryParams, t_end: f64) -> RouteData {
    let n = config.span.samples;
    let units = config.units;
    let states: Vec<TrajectoryState> = (0..n).map(|i| free_state(&p, units, t_end * i as f64 / (n - 1) as f64)).collect();
    let diagnostics: Vec<Diagnostics> = states
        .iter()
        .map(|s| Diagnostics {
            conservation: setup.field.grid().contains(s.x).then(|| qtraj_core::conservation_residual(s, &setup.field).ok()).flatten(),
            fiqnl: qtraj_core::fiqnl_residual(s, &config.potential, p.energy, units).ok(),
        })
        .collect();
    let traj = Trajectory { route: qtraj_core::Route::ClosedForm, energy: p.energy, microstate: None, states, diagnostics };
    let mut data = from_trajectory(RouteKind::ClosedForm, traj);
    data.path = Some(Path::Closed(p, units, [0.0, t_end]));
    data
}

fn probe(config: &RunConfig, spec: &MicrostateSpec, setup: &Setup, results: &[RouteData], x: f64) -> Probe {
    let times = results
        .iter()
        .map(|d| {
            let route = d.report.route;
            let t: Result<f64, String> = match route {
                _ if d.report.status != "ok" => Err(format!("route {}", d.report.status)),
                RouteKind::Quadrature => integrate_quadrature(&setup.field, config.span.x_start, x, 0.0, config.tolerances.quad_tol)
                    .map(|q| q.end().t)
                    .map_err(|e| e.to_string()),
        RouteKind::Floyd => floyd_microstate(config, spec).and_then(|ms| {
                    let factory = |en: f64| solve_basis(&config.potential, en, config.grid, config.units, Convention::FloydWave);
                    let step = Some(config.tolerances.energy_step_rel * spec.energy.abs());
                    floyd_time_numeric(factory, ms, x, step, config.stencil).map_err(|e| e.to_string())
                }),
                _ => d.path.as_ref().and_then(|p| p.time_at(x)).ok_or_else(|| format!("path does not reach x = {x}")),
            };
            match t {
                Ok(t) => ProbeTime { route, t: Some(t), error: None },
                Err(e) => ProbeTime { route, t: None, error: Some(e) },
            }
        })
        .collect();
    Probe { x, times }
}

fn compare_paths(results: &[RouteData]) -> Vec<Comparison> {
    let paths: Vec<(RouteKind, &Path)> = results.iter().filter_map(|d| d.path.as_ref().map(|p| (d.report.route, p))).collect();
    let mut out = Vec::new();
    for (i, (ra, pa)) in paths.iter().enumerate() {
        for (rb, pb) in &paths[i + 1..] {
            let ([a0, a1], [b0, b1]) = (pa.span(), pb.span());
            let (lo, hi) = (a0.max(b0), a1.min(b1));
            if hi <= lo {
                continue;
            }
            let n = 400;
            let max_dx = (0..=n)
                .filter_map(|k| {
                    let t = lo + (hi - lo) * k as f64 / n as f64;
                    Some((pa.x(t)? - pb.x(t)?).abs())
                })
                .fold(0.0, f64::max);
            out.push(Comparison { routes: [*ra, *rb], t_range: [lo, hi], max_dx });
        }
    }
    out
}

/// Largest relative error of the energy recovered from trajectory states.
fn energy_roundtrip(config: &RunConfig, spec: &MicrostateSpec, results: &[RouteData]) -> Option<f64> {
    let e = spec.energy;
    results
        .iter()
        .filter_map(|d| match &d.path {
            Some(Path::Sampled(t)) => Some(t),
            _ => None,
        })
        .flat_map(|t| &t.states)
        .map(|s| {
            solve_energy(s, &config.potential, config.units, RootPolicy::ClosestToClassical)
                .map(|r| ((r.selected - e) / e).abs())
                .unwrap_or(f64::INFINITY)
        })
        .reduce(f64::max)
}

fn limit_study(config: &RunConfig, spec: &MicrostateSpec, report: &mut MicrostateReport) {
    if !config.potential.is_free() {
        report.errors.push("the cycle-averaged limit is defined for the free particle only".into());
        return;
    }
    if spec.mu.is_some() {
        report.errors.push("the cycle-averaged limit needs microstates given as (a, b)".into());
        return;
    }
    match cycle_average_classical_limit(wave_a(config, spec), spec.b, spec.energy, config.units, config.limit_halvings, config.limit_centre) {
        Ok(c) => {
            let samples: Vec<LimitSample> = c
                .samples
                .iter()
                .map(|s| LimitSample { halvings: s.halvings, hbar: s.hbar, average: s.average, ratio: s.average / c.classical })
                .collect();
            let gap = samples.last().map(|s| (s.ratio - 1.0).abs());
            report.checks.push(Check::bounded("classical_limit_rel", gap, config.bounds.limit_rel));
            report.limit = Some(Limit { centre: c.centre, classical: c.classical, samples });
        }
        Err(e) => report.errors.push(format!("limit: {e}")),
    }
}
