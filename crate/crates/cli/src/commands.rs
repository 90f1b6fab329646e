//! Command implementations. Each run writes its resolved configuration,
//! then composes the library: controls from the synthesis module, states
//! from the solvers, scores from the metrics module. Nothing here computes
//! physics on its own.

use crate::config::{self, fmt_float, Engine, ModelKind, Resolved, ScenarioConfig, StateSpec};
use crate::output::{write_report, CsvBuilder, RunReport};
use crate::scenario::{self, ModelRun};
use crate::{CliError, CliResult, SweepArgs};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use shuttlesim::classical::{comoving_frame, integrate_trajectory, DEFAULT_TRAJECTORY_INTERVALS};
use shuttlesim::control::kinematic_phase;
use shuttlesim::metrics::{
    instantaneous_ground_fidelity, mixed_state_fidelity, transport_fidelity, FidelityTrace,
    MixtureSpec,
};
use shuttlesim::quantum::{
    analytic_evolve, eigenstate, expectation, numeric_evolve, superpose, Observable, SpatialGrid,
    WaveFunction,
};

/// Rows kept per phase-space curve; the integrator runs much finer.
const TRAJECTORY_ROWS: usize = 1024;
const CIRCLE_SAMPLES: usize = 257;
const SNAPSHOT_PANELS: usize = 6;

fn prepare(resolved: &Resolved) -> CliResult<Vec<ModelRun>> {
    std::fs::create_dir_all(&resolved.config.outdir)?;
    std::fs::write(resolved.config.outdir.join("resolved.conf"), &resolved.canonical)?;
    scenario::build_models(&resolved.config)
}

fn run_in_pool<T, F>(jobs: usize, work: F) -> CliResult<T>
where
    T: Send,
    F: FnOnce() -> CliResult<T> + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("jobs: {e}")))?;
    pool.install(work)
}

pub fn synth(resolved: &Resolved) -> CliResult<()> {
    let config = &resolved.config;
    let runs = prepare(resolved)?;
    let mut csv = CsvBuilder::new(&resolved.hash, config.seed);
    if config.models.contains(&ModelKind::Fourier) {
        csv.comment("fourier amplitudes are seeded stand-ins drawn uniformly from [-1, 1]");
    }
    let mut columns = vec!["t"];
    columns.extend(runs.iter().map(|run| run.kind.name()));
    csv.header(&columns);
    let samples = config.control_samples;
    let mut row = Vec::with_capacity(columns.len());
    for i in 0..samples {
        let t = config.duration * i as f64 / (samples - 1) as f64;
        row.clear();
        row.push(t);
        for run in &runs {
            row.push(run.control.value(t)?);
        }
        csv.row(&row);
    }
    csv.write_to(&config.outdir.join("controls.csv"))
}

pub fn classical(resolved: &Resolved) -> CliResult<()> {
    let config = &resolved.config;
    let runs = prepare(resolved)?;
    let step = config.duration / DEFAULT_TRAJECTORY_INTERVALS as f64;
    for run in &runs {
        let lab = integrate_trajectory(config.x0, config.p0, &run.control, step)?;
        let curve = comoving_frame(&lab, &run.control)?;
        let mut csv = CsvBuilder::new(&resolved.hash, config.seed);
        csv.header(&["t", "x", "p"]);
        let len = curve.points.len();
        let stride = (len - 1).div_ceil(TRAJECTORY_ROWS).max(1);
        for i in (0..len).step_by(stride) {
            let pt = curve.points[i];
            csv.row(&[pt.t, pt.x, pt.p]);
        }
        if (len - 1) % stride != 0 {
            let pt = curve.points[len - 1];
            csv.row(&[pt.t, pt.x, pt.p]);
        }
        csv.write_to(&config.outdir.join(format!("phase_{}.csv", run.kind.name())))?;
    }

    let radius = config.x0.hypot(config.p0);
    let mut csv = CsvBuilder::new(&resolved.hash, config.seed);
    csv.comment("constant-energy circle of the undistorted comoving motion");
    csv.header(&["x", "p"]);
    for j in 0..CIRCLE_SAMPLES {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / (CIRCLE_SAMPLES - 1) as f64;
        csv.row(&[radius * theta.cos(), radius * theta.sin()]);
    }
    csv.write_to(&config.outdir.join("energy_circle.csv"))
}

pub fn evolve(resolved: &Resolved) -> CliResult<()> {
    let config = &resolved.config;
    let runs = prepare(resolved)?;
    let spec = scenario::transport_spec(config)?;
    let times: Vec<f64> = (0..SNAPSHOT_PANELS)
        .map(|i| config.duration * i as f64 / (SNAPSHOT_PANELS - 1) as f64)
        .collect();
    run_in_pool(config.jobs, || {
        for run in &runs {
            let grid = scenario::grid_for(config, &run.control)?;
            let ev = evolve_state(config, run, grid, &times)?;

            let mut csv = CsvBuilder::new(&resolved.hash, config.seed);
            let stamps: Vec<String> = times.iter().map(|t| fmt_float(*t)).collect();
            csv.comment(&format!("snapshot_times={}", stamps.join(",")));
            csv.comment(&format!("engine={}", config.engine.name()));
            let labels: Vec<String> = (0..SNAPSHOT_PANELS).map(|i| format!("rho_{i}")).collect();
            let mut columns = vec!["x"];
            columns.extend(labels.iter().map(String::as_str));
            csv.header(&columns);
            let panels = density_panels(&ev)?;
            let mut row = Vec::with_capacity(columns.len());
            for i in 0..grid.points {
                row.clear();
                row.push(grid.position(i));
                for panel in &panels {
                    row.push(panel[i]);
                }
                csv.row(&row);
            }
            csv.write_to(&config.outdir.join(format!("snapshots_{}.csv", run.kind.name())))?;

            let trace = trace_of(&ev, run)?;
            let report = build_report(resolved, run, spec, &ev, &trace)?;
            write_report(&config.outdir, &report)?;
        }
        Ok(())
    })
}

pub fn fidelity(resolved: &Resolved) -> CliResult<()> {
    let config = &resolved.config;
    let runs = prepare(resolved)?;
    let spec = scenario::transport_spec(config)?;
    let times = trace_times(config);
    run_in_pool(config.jobs, || {
        for run in &runs {
            let grid = scenario::grid_for(config, &run.control)?;
            let ev = evolve_state(config, run, grid, &times)?;
            let trace = trace_of(&ev, run)?;

            let mut csv = CsvBuilder::new(&resolved.hash, config.seed);
            csv.comment(&format!("engine={}", config.engine.name()));
            csv.header(&["t", "fidelity"]);
            for &(t, f) in &trace.points {
                csv.row(&[t, f]);
            }
            csv.write_to(&config.outdir.join(format!("fidelity_{}.csv", run.kind.name())))?;

            let report = build_report(resolved, run, spec, &ev, &trace)?;
            write_report(&config.outdir, &report)?;
        }
        Ok(())
    })
}

pub fn report(resolved: &Resolved) -> CliResult<()> {
    let config = &resolved.config;
    let runs = prepare(resolved)?;
    let spec = scenario::transport_spec(config)?;
    let times = trace_times(config);
    run_in_pool(config.jobs, || {
        for run in &runs {
            let grid = scenario::grid_for(config, &run.control)?;
            let ev = evolve_state(config, run, grid, &times)?;
            let trace = trace_of(&ev, run)?;
            let report = build_report(resolved, run, spec, &ev, &trace)?;
            write_report(&config.outdir, &report)?;
        }
        Ok(())
    })
}

pub fn sweep(resolved: &Resolved, args: &SweepArgs) -> CliResult<()> {
    let config = &resolved.config;
    prepare(resolved)?;
    let key = match args.parameter.as_str() {
        "duration" | "alpha" | "steps" | "fourier_period" => args.parameter.as_str(),
        other => {
            return Err(CliError::Config(format!(
                "sweep parameter must be duration, alpha, steps, or fourier_period, got `{other}`"
            )))
        }
    };
    let values = sweep_values(args, key)?;

    let rows: Vec<Vec<f64>> = run_in_pool(config.jobs, || {
        values
            .par_iter()
            .map(|&value| {
                let point = config::resolve_with(resolved, key, &format_sweep_value(key, value))?;
                sweep_point(&point)
            })
            .collect()
    })?;

    let mut csv = CsvBuilder::new(&resolved.hash, config.seed);
    csv.comment(&format!("parameter={key}"));
    let mut columns = vec![key];
    columns.extend(config.models.iter().map(|m| m.name()));
    csv.header(&columns);
    let mut row = Vec::with_capacity(columns.len());
    for (value, fidelities) in values.iter().zip(&rows) {
        row.clear();
        row.push(*value);
        row.extend_from_slice(fidelities);
        csv.row(&row);
    }
    csv.write_to(&config.outdir.join("sweep.csv"))
}

fn sweep_point(resolved: &Resolved) -> CliResult<Vec<f64>> {
    let config = &resolved.config;
    let spec = scenario::transport_spec(config)?;
    let runs = scenario::build_models(config)?;
    let times = [config.duration];
    runs.iter()
        .map(|run| {
            let grid = scenario::grid_for(config, &run.control)?;
            let ev = evolve_state(config, run, grid, &times)?;
            let (fidelity, _, _) = verdict_of(config, spec, run, &ev)?;
            Ok(fidelity)
        })
        .collect()
}

fn sweep_values(args: &SweepArgs, key: &str) -> CliResult<Vec<f64>> {
    let values: Vec<f64> = if let Some(list) = &args.values {
        if args.from.is_some() || args.to.is_some() || args.points.is_some() {
            return Err(CliError::Config(
                "--values replaces --from/--to/--points".into(),
            ));
        }
        list.split(',')
            .map(config::parse_pi_float)
            .collect::<Result<_, String>>()
            .map_err(CliError::Config)?
    } else {
        let from = args
            .from
            .as_deref()
            .ok_or_else(|| CliError::Config("sweep needs --from/--to/--points or --values".into()))?;
        let to = args
            .to
            .as_deref()
            .ok_or_else(|| CliError::Config("sweep needs --to".into()))?;
        let points = args
            .points
            .ok_or_else(|| CliError::Config("sweep needs --points".into()))?;
        if points < 2 {
            return Err(CliError::Config("sweep needs at least 2 points".into()));
        }
        let from = config::parse_pi_float(from).map_err(CliError::Config)?;
        let to = config::parse_pi_float(to).map_err(CliError::Config)?;
        (0..points)
            .map(|i| from + (to - from) * i as f64 / (points - 1) as f64)
            .collect()
    };
    if values.is_empty() {
        return Err(CliError::Config("sweep range is empty".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config("sweep values must be finite".into()));
    }
    if key == "steps" && values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
        return Err(CliError::Config("steps values must be positive integers".into()));
    }
    Ok(values)
}

fn format_sweep_value(key: &str, value: f64) -> String {
    if key == "steps" {
        format!("{}", value as usize)
    } else {
        fmt_float(value)
    }
}

enum Weighting {
    Pure(Vec<C64>),
    Mixed(Vec<f64>),
}

struct StateEvolution {
    orders: Vec<usize>,
    weighting: Weighting,
    /// snapshots[component][time index]
    snapshots: Vec<Vec<WaveFunction>>,
}

fn state_components(state: &StateSpec) -> CliResult<(Vec<usize>, Weighting)> {
    match state {
        StateSpec::Eigenstate(n) => Ok((vec![*n], Weighting::Pure(vec![C64::new(1.0, 0.0)]))),
        StateSpec::Superposition(coeffs) => Ok((
            (0..coeffs.len()).collect(),
            Weighting::Pure(coeffs.iter().map(|c| C64::new(*c, 0.0)).collect()),
        )),
        StateSpec::Thermal { theta, max_level } => {
            let mix = MixtureSpec::thermal(*theta, *max_level)
                .map_err(|e| CliError::Config(e.to_string()))?;
            Ok(((0..=*max_level).collect(), Weighting::Mixed(mix.weights)))
        }
        StateSpec::Mixture(weights) => Ok((
            (0..weights.len()).collect(),
            Weighting::Mixed(weights.clone()),
        )),
    }
}

fn evolve_component(
    config: &ScenarioConfig,
    run: &ModelRun,
    grid: SpatialGrid,
    n: usize,
    times: &[f64],
) -> CliResult<Vec<WaveFunction>> {
    match config.engine {
        Engine::Analytic => times
            .iter()
            .map(|&t| analytic_evolve(n, &run.profile, t, grid).map_err(CliError::from))
            .collect(),
        Engine::Numeric => {
            let psi0 = eigenstate(n, grid, 0.0)?;
            Ok(numeric_evolve(
                &psi0,
                &run.control,
                config.duration,
                config.dt,
                times,
            )?)
        }
    }
}

/// Evolves every component of the configured initial state to the given
/// times; components run in parallel.
fn evolve_state(
    config: &ScenarioConfig,
    run: &ModelRun,
    grid: SpatialGrid,
    times: &[f64],
) -> CliResult<StateEvolution> {
    let (orders, weighting) = state_components(&config.state)?;
    let snapshots: Vec<Vec<WaveFunction>> = orders
        .par_iter()
        .map(|&n| evolve_component(config, run, grid, n, times))
        .collect::<CliResult<_>>()?;
    Ok(StateEvolution {
        orders,
        weighting,
        snapshots,
    })
}

fn trace_times(config: &ScenarioConfig) -> Vec<f64> {
    (0..config.trace_samples)
        .map(|i| config.duration * i as f64 / (config.trace_samples - 1) as f64)
        .collect()
}

/// Probability density per snapshot time: coherent sum for pure states,
/// weight-averaged densities for mixtures.
fn density_panels(ev: &StateEvolution) -> CliResult<Vec<Vec<f64>>> {
    let count = ev.snapshots[0].len();
    let mut panels = Vec::with_capacity(count);
    for t_idx in 0..count {
        match &ev.weighting {
            Weighting::Pure(coeffs) => {
                if ev.snapshots.len() == 1 {
                    panels.push(ev.snapshots[0][t_idx].density());
                } else {
                    let at_t: Vec<WaveFunction> = ev
                        .snapshots
                        .iter()
                        .map(|s| s[t_idx].clone())
                        .collect();
                    panels.push(superpose(coeffs, &at_t)?.density());
                }
            }
            Weighting::Mixed(weights) => {
                let n_points = ev.snapshots[0][t_idx].amplitudes.len();
                let mut sum = vec![0.0; n_points];
                for (w, snaps) in weights.iter().zip(&ev.snapshots) {
                    for (acc, d) in sum.iter_mut().zip(snaps[t_idx].density()) {
                        *acc += w * d;
                    }
                }
                panels.push(sum);
            }
        }
    }
    Ok(panels)
}

/// Fidelity against the instantaneous ground state at each snapshot time.
/// For mixtures this is the ground-state population of the density matrix,
/// the weighted sum of the component traces.
fn trace_of(ev: &StateEvolution, run: &ModelRun) -> CliResult<FidelityTrace> {
    match &ev.weighting {
        Weighting::Pure(coeffs) => {
            if ev.snapshots.len() == 1 {
                Ok(instantaneous_ground_fidelity(&ev.snapshots[0], &run.control)?)
            } else {
                let count = ev.snapshots[0].len();
                let mut supers = Vec::with_capacity(count);
                for t_idx in 0..count {
                    let at_t: Vec<WaveFunction> = ev
                        .snapshots
                        .iter()
                        .map(|s| s[t_idx].clone())
                        .collect();
                    supers.push(superpose(coeffs, &at_t)?);
                }
                Ok(instantaneous_ground_fidelity(&supers, &run.control)?)
            }
        }
        Weighting::Mixed(weights) => {
            let mut combined: Vec<(f64, f64)> = Vec::new();
            for (idx, (w, snaps)) in weights.iter().zip(&ev.snapshots).enumerate() {
                let trace = instantaneous_ground_fidelity(snaps, &run.control)?;
                if idx == 0 {
                    combined = trace.points.iter().map(|&(t, f)| (t, w * f)).collect();
                } else {
                    for (acc, &(_, f)) in combined.iter_mut().zip(&trace.points) {
                        acc.1 += w * f;
                    }
                }
            }
            Ok(FidelityTrace { points: combined })
        }
    }
}

/// Final fidelity, energy, and leakage of the evolved state. Requires the
/// evolution's last snapshot time to be the transport end.
fn verdict_of(
    config: &ScenarioConfig,
    spec: shuttlesim::control::TransportSpec,
    run: &ModelRun,
    ev: &StateEvolution,
) -> CliResult<(f64, f64, Option<f64>)> {
    let finals: Vec<WaveFunction> = ev
        .snapshots
        .iter()
        .map(|s| s.last().expect("snapshot list is never empty").clone())
        .collect();
    let well = run.control.value(config.duration)?;
    match &ev.weighting {
        Weighting::Pure(coeffs) => {
            let (fidelity, final_state) = if ev.orders.len() == 1 {
                (
                    transport_fidelity(&finals[0], ev.orders[0], spec)?,
                    finals[0].clone(),
                )
            } else {
                let superposed = superpose(coeffs, &finals)?;
                let targets: Vec<WaveFunction> = ev
                    .orders
                    .iter()
                    .map(|&n| eigenstate(n, superposed.grid, spec.distance))
                    .collect::<shuttlesim::Result<_>>()?;
                let target = superpose(coeffs, &targets)?;
                let raw = target.inner(&superposed)?.norm_sqr();
                (raw.clamp(0.0, 1.0), superposed)
            };
            let energy = expectation(&final_state, Observable::Energy { well_center: well })?;
            Ok((fidelity, energy, None))
        }
        Weighting::Mixed(weights) => {
            let mix =
                MixtureSpec::new(weights.clone()).map_err(|e| CliError::Config(e.to_string()))?;
            let scored = mixed_state_fidelity(&mix, &finals, spec)?;
            let mut energy = 0.0;
            for (w, state) in weights.iter().zip(&finals) {
                energy += w * expectation(state, Observable::Energy { well_center: well })?;
            }
            Ok((scored.fidelity, energy, Some(scored.leakage)))
        }
    }
}

fn build_report(
    resolved: &Resolved,
    run: &ModelRun,
    spec: shuttlesim::control::TransportSpec,
    ev: &StateEvolution,
    trace: &FidelityTrace,
) -> CliResult<RunReport> {
    let config = &resolved.config;
    let (final_fidelity, final_energy, leakage) = verdict_of(config, spec, run, ev)?;
    let phase = kinematic_phase(&run.profile, config.duration)?;
    let residuals = run.profile.boundary().residuals(config.delta_x);
    let (trace_minimum_time, trace_minimum) =
        trace.minimum().expect("trace has at least one point");
    Ok(RunReport {
        model: run.kind.name().to_string(),
        engine: config.engine.name().to_string(),
        config_hash: resolved.hash.clone(),
        seed: config.seed,
        final_fidelity,
        kinematic_phase: phase,
        final_energy,
        trace_minimum_time,
        trace_minimum,
        boundary_residuals: residuals,
        leakage,
    })
}
