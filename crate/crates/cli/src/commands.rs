use optocool::evolve::CycleCarry;
use optocool::moments::{idx, MOMENT_LABELS, N_MOMENTS};
use optocool::oracle::OracleOptions;
use optocool::pulses::detunings;
use optocool::sideband::{sideband_outcome, SidebandOutcome};
use optocool::spectral::{PropagatorOptions, StokesBranch};
use optocool::tuner::{Bound, Param};
use optocool::{
    default_window, evolve_density, find_crossings_and_gap, integrate, iterate_cooling, stability, tune, unitary_transfer,
    Cplx, DensityState, EvolveOptions, FockConfig, Moments, Params, Report, Scenario, Schedule, Traj, TuneSpec, Window,
    WindowRule,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{options_of, Axis, ConfigFile, Overrides, Resolved};
use crate::error::CliError;
use crate::output::{num, Artifacts, Manifest, Table};

pub struct Context {
    pub cfg: ConfigFile,
    pub ov: Overrides,
    pub art: Artifacts,
    pub manifest: Manifest,
}

const SPECTRUM_RESOLUTION: usize = 4000;
const DEFAULT_CYCLES: usize = 10;
/// Largest initial occupancy handed to the Fock-space oracle.
const ORACLE_MAX_OCCUPANCY: f64 = 0.1;

fn params_json(p: &Params) -> Value {
    json!({
        "omega_b": p.omega_b,
        "kappa_a": p.kappa_a,
        "kappa_c": p.kappa_c,
        "kappa_b": p.kappa_b,
        "q_b": p.quality_factor(),
        "g_ca": p.g_ca,
        "nbar_a": p.nbar_a,
        "nbar_c": p.nbar_c,
        "nbar_b": p.nbar_b,
    })
}

fn schedule_json(s: &Schedule) -> Value {
    let (lo, hi) = s.domain();
    json!({
        "omega0": s.omega0,
        "t_c": s.t_c,
        "width": s.width,
        "kappa_delta": s.kappa_delta,
        "h_delta": s.h_delta,
        "tau": s.tau,
        "tau_ch": s.tau_ch,
        "domain": [lo, hi],
    })
}

fn options_json(o: &EvolveOptions) -> Value {
    json!({
        "rtol": o.rtol,
        "atol": o.atol,
        "counter_rotating": o.counter_rotating,
        "max_step": o.max_step,
        "sample_dt": o.sample_dt,
        "physicality_tol": o.physicality_tol,
        "hold": o.hold,
        "carry": match o.carry {
            CycleCarry::Full => "full",
            CycleCarry::PhononsOnly => "phonons_only",
        },
    })
}

fn window_json(w: &Window) -> Value {
    json!({ "t_start": w.t_start, "t_end": w.t_end, "n_cycles": w.n_cycles })
}

fn report_json(r: &Report) -> Value {
    json!({
        "initial_n_b": r.initial_n_b,
        "n_b_min": r.n_b_min,
        "t_min": r.t_min,
        "final_n_b": r.final_n_b,
        "cycles": r.cycles,
        "steps": r.steps,
        "rejected_steps": r.rejected_steps,
    })
}

fn record_resolved(m: &mut Manifest, r: &Resolved) {
    m.insert("name", json!(r.name));
    m.insert("system", params_json(&r.params));
    m.insert("pulse", schedule_json(&r.schedule));
    m.insert("initial", json!({ "n_a": r.initial[0], "n_c": r.initial[1], "n_b": r.initial[2] }));
    m.insert("options", options_json(&r.opts));
}

fn trajectory_table(traj: &Traj, full: bool) -> Table {
    let mut header: Vec<String> = [
        "t", "t_shifted", "N_a", "N_c", "N_b", "re_ac", "im_ac", "re_cb", "im_cb", "re_cb_anom", "im_cb_anom",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    if full {
        for l in MOMENT_LABELS {
            header.push(format!("re_{l}"));
            header.push(format!("im_{l}"));
        }
    }
    let mut table = Table::new(&header);
    let t0 = traj.samples.first().map_or(0.0, |s| s.t);
    for (s, o) in traj.samples.iter().zip(&traj.occupancies) {
        let mut row = vec![num(s.t), num(s.t - t0), num(o[0]), num(o[1]), num(o[2])];
        for k in [idx::AD_C, idx::CD_B, idx::C_B] {
            row.push(num(s.m[k].re));
            row.push(num(s.m[k].im));
        }
        if full {
            for z in &s.m {
                row.push(num(z.re));
                row.push(num(z.im));
            }
        }
        table.push(row);
    }
    table
}

/// Window of an iterated run: explicit, or derived from the gap when only a
/// cycle count is given. `None` means a single pass over the span.
fn cool_window(r: &Resolved) -> Result<Option<Window>, CliError> {
    match (r.window, r.cycles) {
        (Some((a, b)), n) => Window::new(a, b, n.unwrap_or(DEFAULT_CYCLES))
            .map(Some)
            .map_err(CliError::invalid),
        (None, Some(n)) => {
            let spec = find_crossings_and_gap(&r.schedule, SPECTRUM_RESOLUTION)?;
            let rule = WindowRule {
                n_cycles: n,
                ..WindowRule::default()
            };
            Ok(Some(default_window(&r.schedule, &spec, &rule)?))
        }
        (None, None) => Ok(None),
    }
}

fn thermal(r: &Resolved, t: f64) -> Moments {
    Moments::thermal(t, r.initial[0], r.initial[1], r.initial[2])
}

pub fn transfer(ctx: &mut Context) -> Result<(), CliError> {
    let s = crate::config::schedule_of(&ctx.cfg.pulse)?;
    ctx.manifest.insert("pulse", schedule_json(&s));
    ctx.manifest.insert("model", json!("closed single-excitation dynamics, rotating-wave Hamiltonian"));
    let one = Cplx::new(1.0, 0.0);
    let zero = Cplx::new(0.0, 0.0);
    let tr = unitary_transfer(&s, [one, zero, zero], &PropagatorOptions::default())?;

    let mut table = Table::new(&["t", "t_shifted", "omega_p", "delta_s", "delta_c", "delta_a", "N_a", "N_c", "N_b"]);
    let t0 = tr.times[0];
    for (&t, p) in tr.times.iter().zip(&tr.populations) {
        let (dc, da) = detunings(t, &s);
        table.push(vec![
            num(t),
            num(t - t0),
            num(s.omega_p(t)),
            num(s.delta_s(t)),
            num(dc),
            num(da),
            num(p[2]),
            num(p[1]),
            num(p[0]),
        ]);
    }
    ctx.art.write_csv("transfer.csv", &table)?;
    let last = tr.populations.last().copied().unwrap_or([f64::NAN; 3]);
    ctx.manifest.insert(
        "summary",
        json!({
            "final_n_a": last[2],
            "final_n_c": last[1],
            "final_n_b": last[0],
            "max_norm_drift": tr.max_norm_drift,
            "steps": tr.steps,
            "rejected_steps": tr.rejected,
        }),
    );
    Ok(())
}

pub fn cool(ctx: &mut Context) -> Result<(), CliError> {
    let r = Resolved::new(&ctx.cfg, &ctx.ov)?;
    record_resolved(&mut ctx.manifest, &r);
    let window = cool_window(&r)?;
    let check_span = match window {
        Some(w) => {
            ctx.manifest.insert("window", window_json(&w));
            let (traj, report) = iterate_cooling(&thermal(&r, w.t_start), &r.schedule, &w, &r.params, &r.opts)?;
            ctx.art.write_csv("trajectory.csv", &trajectory_table(&traj, r.full_moments))?;
            let mut cycles = Table::new(&["cycle", "N_b_end", "N_b_min"]);
            for (k, (e, m)) in report.cycle_end_n_b.iter().zip(&report.cycle_min_n_b).enumerate() {
                cycles.push(vec![(k + 1).to_string(), num(*e), num(*m)]);
            }
            ctx.art.write_csv("cycles.csv", &cycles)?;
            ctx.manifest.insert("summary", report_json(&report));
            (w.t_start, w.t_end)
        }
        None => {
            let span = r.t_span.unwrap_or_else(|| r.schedule.domain());
            ctx.manifest.insert("t_span", json!([span.0, span.1]));
            let traj = integrate(&thermal(&r, span.0), &r.schedule, &r.params, span, &r.opts)?;
            ctx.art.write_csv("trajectory.csv", &trajectory_table(&traj, r.full_moments))?;
            let last = traj.occupancies.last().copied().unwrap_or([f64::NAN; 3]);
            let n_b_min = traj.occupancies.iter().map(|o| o[2]).fold(f64::INFINITY, f64::min);
            ctx.manifest.insert(
                "summary",
                json!({
                    "final_n_a": last[0],
                    "final_n_c": last[1],
                    "final_n_b": last[2],
                    "n_b_min": n_b_min,
                    "min_uncertainty_margin": traj.min_uncertainty_margin,
                    "steps": traj.stats.steps,
                    "rejected_steps": traj.stats.rejected,
                }),
            );
            span
        }
    };
    if r.oracle_check {
        let span = ctx.cfg.oracle.t_span.map_or(check_span, |s| (s[0], s[1]));
        run_oracle(ctx, &r, span)?;
    }
    Ok(())
}

pub fn oracle_check(ctx: &mut Context) -> Result<(), CliError> {
    let r = Resolved::new(&ctx.cfg, &ctx.ov)?;
    record_resolved(&mut ctx.manifest, &r);
    let span = ctx
        .cfg
        .oracle
        .t_span
        .map(|s| (s[0], s[1]))
        .or(r.window)
        .or(r.t_span)
        .ok_or_else(|| CliError::config("oracle-check needs oracle.t_span, run.window or run.t_span"))?;
    run_oracle(ctx, &r, span)
}

/// Runs both engines over `span` and writes `oracle.csv`.
///
/// The scenario's own initial occupancies are used when the truncated Fock
/// space can hold them; otherwise the check starts from a thermal phonon
/// state with `N_b = 0.05`.
fn run_oracle(ctx: &mut Context, r: &Resolved, span: (f64, f64)) -> Result<(), CliError> {
    let o = &ctx.cfg.oracle;
    let cut = o.cutoffs.unwrap_or([4, 4, 4]);
    let fock = FockConfig::new(cut[0], cut[1], cut[2]).map_err(CliError::invalid)?;
    let samples = o.samples.unwrap_or(40).max(1);
    let tolerance = o.tolerance.unwrap_or(1e-3);
    if !(span.0 < span.1) {
        return Err(CliError::config(format!("oracle span must be increasing, got {span:?}")));
    }
    let initial = if r.initial.iter().all(|&n| n <= ORACLE_MAX_OCCUPANCY) {
        r.initial
    } else {
        [0.0, 0.0, 0.05]
    };
    let dt = (span.1 - span.0) / samples as f64;
    let oopts = OracleOptions {
        rtol: 1e-10,
        atol: 1e-12,
        counter_rotating: r.opts.counter_rotating,
        sample_dt: dt,
        ..OracleOptions::default()
    };
    let rho = DensityState::thermal(fock, span.0, initial[0], initial[1], initial[2]).map_err(CliError::invalid)?;
    let oracle = evolve_density(&rho, &r.schedule, &r.params, span, &oopts)?;
    let mopts = EvolveOptions {
        sample_dt: dt,
        ..r.opts
    }
    .with_tolerances(1e-10, 1e-12);
    let mut start = rho.moments();
    start.t = span.0;
    let cov = integrate(&start, &r.schedule, &r.params, span, &mopts)?;
    if cov.samples.len() != oracle.samples.len() {
        return Err(CliError::Check(format!(
            "engines sampled {} and {} points",
            cov.samples.len(),
            oracle.samples.len()
        )));
    }

    let scale = oracle
        .samples
        .iter()
        .flat_map(|s| s.m.iter().map(|z| z.norm()))
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut header = vec!["t".to_string(), "t_shifted".into(), "max_rel_error".into()];
    for l in MOMENT_LABELS {
        header.push(format!("re_{l}"));
        header.push(format!("im_{l}"));
        header.push(format!("re_{l}_fock"));
        header.push(format!("im_{l}_fock"));
    }
    let mut table = Table::new(&header);
    let mut worst = 0.0f64;
    for (a, b) in cov.samples.iter().zip(&oracle.samples) {
        let err = (0..N_MOMENTS)
            .map(|k| (a.m[k] - b.m[k]).norm() / scale)
            .fold(0.0, f64::max);
        worst = worst.max(err);
        let mut row = vec![num(a.t), num(a.t - span.0), num(err)];
        for k in 0..N_MOMENTS {
            row.extend([num(a.m[k].re), num(a.m[k].im), num(b.m[k].re), num(b.m[k].im)]);
        }
        table.push(row);
    }
    ctx.art.write_csv("oracle.csv", &table)?;
    ctx.manifest.insert(
        "oracle",
        json!({
            "cutoffs": cut,
            "dimension": fock.dimension(),
            "t_span": [span.0, span.1],
            "initial": initial,
            "samples": table.len(),
            "max_rel_error": worst,
            "scale": scale,
            "tolerance": tolerance,
            "max_top_population": oracle.max_top_population,
            "passed": worst <= tolerance,
        }),
    );
    if worst > tolerance {
        return Err(CliError::Check(format!(
            "moment engine and Fock oracle differ by {worst:e} (tolerance {tolerance:e})"
        )));
    }
    Ok(())
}

pub fn spectrum(ctx: &mut Context) -> Result<(), CliError> {
    let s = crate::config::schedule_of(&ctx.cfg.pulse)?;
    ctx.manifest.insert("pulse", schedule_json(&s));
    let resolution = ctx.cfg.spectrum.resolution.unwrap_or(SPECTRUM_RESOLUTION);
    ctx.manifest.insert("resolution", json!(resolution));
    let spec = find_crossings_and_gap(&s, resolution).map_err(|e| match e {
        optocool::Error::InvalidParameter { .. } => CliError::invalid(e),
        e => CliError::Simulation(e),
    })?;

    let mut table = Table::new(&[
        "t", "t_shifted", "omega_p", "lambda_0", "lambda_1", "lambda_2", "dark", "branch_plus", "branch_minus", "S_0",
        "S_plus", "S_minus",
    ]);
    let t0 = spec.times[0];
    for (k, &t) in spec.times.iter().enumerate() {
        let mut row = vec![num(t), num(t - t0), num(s.omega_p(t))];
        row.extend(spec.eigenvalues[k].iter().map(|&v| num(v)));
        row.extend(spec.branches[k].iter().map(|&v| num(v)));
        row.extend(spec.stokes[k].iter().map(|&v| num(v)));
        table.push(row);
    }
    ctx.art.write_csv("spectrum.csv", &table)?;

    let branch = |b: StokesBranch| match b {
        StokesBranch::Plus => "plus",
        StokesBranch::Minus => "minus",
    };
    let mut gaps = Table::new(&["crossing_time", "branch", "location", "width"]);
    for g in &spec.gaps {
        gaps.push(vec![num(g.crossing.time), branch(g.crossing.branch).into(), num(g.location), num(g.width)]);
    }
    ctx.art.write_csv("gaps.csv", &gaps)?;

    let widest = spec.widest_gap().map(|g| {
        json!({ "crossing_time": g.crossing.time, "branch": branch(g.crossing.branch), "location": g.location, "width": g.width })
    });
    let window = default_window(&s, &spec, &WindowRule::default()).ok().map(|w| window_json(&w));
    ctx.manifest.insert(
        "summary",
        json!({
            "crossings": spec.crossings.iter().map(|c| json!({ "time": c.time, "branch": branch(c.branch) })).collect::<Vec<_>>(),
            "widest_gap": widest,
            "default_window": window,
        }),
    );
    Ok(())
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    if jobs == Some(0) {
        return Err(CliError::config("--jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))
}

pub fn compare(ctx: &mut Context) -> Result<(), CliError> {
    let section = ctx
        .cfg
        .compare
        .clone()
        .ok_or_else(|| CliError::config("compare needs a [compare] section with [[compare.rows]]"))?;
    if section.rows.is_empty() {
        return Err(CliError::config("[compare] lists no rows"));
    }
    let nbar_b = section.nbar_b.unwrap_or(optocool::sideband::BENCHMARK_NBAR_B);
    let cycles = ctx.ov.cycles.or(section.cycles).unwrap_or(DEFAULT_CYCLES);
    let opts = options_of(&ctx.cfg.run, &ctx.ov)?;
    ctx.manifest.insert("options", options_json(&opts));
    ctx.manifest.insert(
        "compare",
        json!({ "nbar_b": nbar_b, "cycles": cycles, "analytic_only": section.analytic_only, "rows": section.rows.len() }),
    );

    let scenarios = section
        .rows
        .iter()
        .map(|row| {
            let w = Window::new(row.window[0], row.window[1], cycles)?;
            Scenario::canonical(row.g, row.kappa_c, row.kappa_a, row.q_b, nbar_b, w)
        })
        .collect::<optocool::Result<Vec<_>>>()
        .map_err(CliError::invalid)?;

    let reports: Vec<Option<optocool::Result<Report>>> = if section.analytic_only {
        vec![None; scenarios.len()]
    } else {
        pool(ctx.ov.jobs)?.install(|| scenarios.par_iter().map(|s| Some(s.run(&opts))).collect())
    };

    let mut table = Table::new(&[
        "g", "kappa_c", "kappa_a", "q_b", "t_start", "t_end", "stability", "n_min_nc", "n_min_sc", "reported_nc",
        "reported_sc", "error",
    ]);
    let mut failed = 0;
    for ((row, sc), rep) in section.rows.iter().zip(&scenarios).zip(&reports) {
        let stable = stability(sc.g, &sc.params);
        let nc = match sideband_outcome(sc.g, &sc.params)? {
            SidebandOutcome::Limit(v) => num(v),
            SidebandOutcome::Unstable => "unstable".into(),
        };
        let (n_sc, err) = match rep {
            None => (String::new(), String::new()),
            Some(Ok(r)) => (num(r.n_b_min), String::new()),
            Some(Err(e)) => {
                failed += 1;
                (String::new(), e.to_string())
            }
        };
        table.push(vec![
            num(row.g),
            num(row.kappa_c),
            num(row.kappa_a),
            num(row.q_b),
            num(row.window[0]),
            num(row.window[1]),
            if stable { "stable" } else { "unstable" }.into(),
            nc,
            n_sc,
            row.reported_nc.clone().unwrap_or_default(),
            row.reported_sc.clone().unwrap_or_default(),
            err,
        ]);
    }
    ctx.art.write_csv("compare.csv", &table)?;
    if failed > 0 {
        return Err(CliError::Partial {
            failed,
            total: scenarios.len(),
        });
    }
    Ok(())
}

pub fn tune_cmd(ctx: &mut Context) -> Result<(), CliError> {
    let r = Resolved::new(&ctx.cfg, &ctx.ov)?;
    record_resolved(&mut ctx.manifest, &r);
    let section = ctx
        .cfg
        .tune
        .clone()
        .ok_or_else(|| CliError::config("tune needs a [tune] section"))?;
    let (a, b) = r.window.ok_or_else(|| CliError::config("tune needs a seed window (run.window or --window)"))?;
    let seed_window = Window::new(a, b, r.cycles.unwrap_or(DEFAULT_CYCLES)).map_err(CliError::invalid)?;
    let mut spec = TuneSpec::new(r.schedule, seed_window, r.initial[2]);
    spec.budget = section.budget.unwrap_or(spec.budget);
    spec.restarts = section.restarts.unwrap_or(spec.restarts);

    let parse = |name: &str| {
        Param::parse(name).ok_or_else(|| {
            let names: Vec<_> = Param::ALL.iter().map(|p| p.name()).collect();
            CliError::config(format!("unknown tuning parameter `{name}` (expected one of {})", names.join(", ")))
        })
    };
    let fraction = section.fraction.unwrap_or(0.2);
    for name in &section.params {
        let p = parse(name)?;
        spec.free.push(Bound::relative(p, p.get(&r.schedule, &seed_window), fraction));
    }
    for b in &section.bounds {
        let p = parse(&b.param)?;
        let bound = Bound {
            param: p,
            lower: b.lower,
            upper: b.upper,
        };
        match spec.free.iter_mut().find(|f| f.param == p) {
            Some(f) => *f = bound,
            None => spec.free.push(bound),
        }
    }
    spec.validate().map_err(CliError::invalid)?;
    ctx.manifest.insert("window", window_json(&seed_window));
    ctx.manifest.insert(
        "tune",
        json!({
            "budget": spec.budget,
            "restarts": spec.restarts,
            "bounds": spec.free.iter().map(|b| json!({ "param": b.param.name(), "lower": b.lower, "upper": b.upper })).collect::<Vec<_>>(),
        }),
    );

    let out = tune(&spec, &r.params, &r.opts)?;
    let mut header = vec!["evaluation".to_string(), "objective".into(), "best_so_far".into()];
    header.extend(spec.free.iter().map(|b| b.param.name().to_string()));
    let mut table = Table::new(&header);
    for (k, e) in out.log.iter().enumerate() {
        let (s, w) = spec.decode(&e.point);
        let mut row = vec![(k + 1).to_string(), num(e.objective), num(e.best_so_far)];
        row.extend(spec.free.iter().map(|b| num(b.param.get(&s, &w))));
        table.push(row);
    }
    ctx.art.write_csv("tune_log.csv", &table)?;
    let best: serde_json::Map<String, Value> = spec
        .free
        .iter()
        .map(|b| (b.param.name().to_string(), json!(b.param.get(&out.schedule, &out.window))))
        .collect();
    ctx.manifest.insert(
        "summary",
        json!({
            "objective": out.objective,
            "seed_objective": out.seed_objective,
            "evaluations": out.log.len(),
            "budget_exhausted": out.budget_exhausted,
            "best": best,
            "pulse": schedule_json(&out.schedule),
            "window": window_json(&out.window),
        }),
    );
    Ok(())
}

struct SweepPoint {
    values: Vec<f64>,
    outcome: Result<[f64; 3], String>,
}

/// `(N_b_min, t_min, final N_b)` of one configuration.
fn sweep_one(cfg: &ConfigFile, ov: &Overrides) -> Result<[f64; 3], CliError> {
    let r = Resolved::new(cfg, ov)?;
    match cool_window(&r)? {
        Some(w) => {
            let (_, rep) = iterate_cooling(&thermal(&r, w.t_start), &r.schedule, &w, &r.params, &r.opts)?;
            Ok([rep.n_b_min, rep.t_min, rep.final_n_b])
        }
        None => {
            let span = r.t_span.unwrap_or_else(|| r.schedule.domain());
            let traj = integrate(&thermal(&r, span.0), &r.schedule, &r.params, span, &r.opts)?;
            let (t_min, n_min) = traj
                .samples
                .iter()
                .zip(&traj.occupancies)
                .map(|(s, o)| (s.t, o[2]))
                .fold((f64::NAN, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            let last = traj.occupancies.last().map_or(f64::NAN, |o| o[2]);
            Ok([n_min, t_min, last])
        }
    }
}

pub fn sweep(ctx: &mut Context) -> Result<(), CliError> {
    let section = ctx
        .cfg
        .sweep
        .clone()
        .ok_or_else(|| CliError::config("sweep needs a [sweep] section with one or two [[sweep.axes]]"))?;
    let axes: &[Axis] = &section.axes;
    if axes.is_empty() || axes.len() > 2 {
        return Err(CliError::config(format!("sweep takes one or two axes, got {}", axes.len())));
    }
    let grids = axes.iter().map(Axis::points).collect::<Result<Vec<_>, _>>()?;
    // Reject unknown keys before any run starts.
    for a in axes {
        ctx.cfg.clone().set(&a.param, 0.0)?;
    }
    let mut points: Vec<Vec<f64>> = grids[0].iter().map(|&v| vec![v]).collect();
    if let Some(second) = grids.get(1) {
        points = points
            .into_iter()
            .flat_map(|p| second.iter().map(move |&v| [p.clone(), vec![v]].concat()))
            .collect();
    }
    let base = Resolved::new(&ctx.cfg, &ctx.ov)?;
    record_resolved(&mut ctx.manifest, &base);
    ctx.manifest.insert(
        "sweep",
        json!({
            "axes": axes.iter().zip(&grids).map(|(a, g)| json!({ "param": a.param, "values": g })).collect::<Vec<_>>(),
            "points": points.len(),
        }),
    );

    let cfg = &ctx.cfg;
    let ov = &ctx.ov;
    let results: Vec<SweepPoint> = pool(ov.jobs)?.install(|| {
        points
            .par_iter()
            .map(|values| {
                let mut c = cfg.clone();
                let outcome = axes
                    .iter()
                    .zip(values)
                    .try_for_each(|(a, &v)| c.set(&a.param, v))
                    .and_then(|_| sweep_one(&c, ov))
                    .map_err(|e| e.to_string());
                SweepPoint {
                    values: values.clone(),
                    outcome,
                }
            })
            .collect()
    });

    let mut header: Vec<String> = axes.iter().map(|a| a.param.clone()).collect();
    header.extend(["N_b_min", "t_min", "N_b_final", "status", "error"].map(String::from));
    let mut table = Table::new(&header);
    let mut failed = 0;
    for p in &results {
        let mut row: Vec<String> = p.values.iter().map(|&v| num(v)).collect();
        match &p.outcome {
            Ok(v) => {
                row.extend(v.iter().map(|&x| num(x)));
                row.extend(["ok".to_string(), String::new()]);
            }
            Err(e) => {
                failed += 1;
                row.extend([String::new(), String::new(), String::new(), "failed".into(), e.clone()]);
            }
        }
        table.push(row);
    }
    ctx.art.write_csv("sweep.csv", &table)?;
    ctx.manifest.insert("summary", json!({ "points": results.len(), "failed": failed }));
    if failed > 0 {
        return Err(CliError::Partial {
            failed,
            total: results.len(),
        });
    }
    Ok(())
}
