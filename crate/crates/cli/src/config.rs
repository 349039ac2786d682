//! Scenario files and their resolution into simulator inputs.

use std::fs;
use std::path::{Path, PathBuf};

use optocool::evolve::CycleCarry;
use optocool::{canonical_schedule, EvolveOptions, Params, Schedule};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub name: Option<String>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub pulse: PulseSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub oracle: OracleSection,
    pub compare: Option<CompareSection>,
    pub tune: Option<TuneSection>,
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub omega_b: Option<f64>,
    pub kappa_a: Option<f64>,
    pub kappa_c: Option<f64>,
    pub kappa_b: Option<f64>,
    pub q_b: Option<f64>,
    /// Defaults to `omega0 / 2`.
    pub g_ca: Option<f64>,
    pub nbar_a: Option<f64>,
    pub nbar_c: Option<f64>,
    pub nbar_b: Option<f64>,
}

/// Canonical schedule for `omega0`, with optional per-field overrides.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    pub omega0: Option<f64>,
    pub t_c: Option<f64>,
    pub width: Option<f64>,
    pub kappa_delta: Option<f64>,
    pub h_delta: Option<f64>,
    pub tau: Option<f64>,
    pub tau_ch: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub n_a: Option<f64>,
    pub n_c: Option<f64>,
    pub n_b: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub window: Option<[f64; 2]>,
    pub cycles: Option<usize>,
    /// Integration span of a non-iterated run; the schedule domain if unset.
    pub t_span: Option<[f64; 2]>,
    #[serde(default)]
    pub rwa: bool,
    #[serde(default)]
    pub oracle_check: bool,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub sample_dt: Option<f64>,
    pub hold: Option<f64>,
    pub carry: Option<Carry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Carry {
    Full,
    PhononsOnly,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub resolution: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    /// Fock cutoffs `[a, c, b]`.
    pub cutoffs: Option<[usize; 3]>,
    pub t_span: Option<[f64; 2]>,
    pub samples: Option<usize>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub nbar_b: Option<f64>,
    pub cycles: Option<usize>,
    /// Skip the iterated STIRAP runs and report only the sideband analysis.
    #[serde(default)]
    pub analytic_only: bool,
    #[serde(default)]
    pub rows: Vec<CompareRow>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CompareRow {
    pub g: f64,
    pub kappa_c: f64,
    pub kappa_a: f64,
    pub q_b: f64,
    pub window: [f64; 2],
    /// Reference values, copied verbatim into the report.
    pub reported_nc: Option<String>,
    pub reported_sc: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TuneSection {
    #[serde(default)]
    pub params: Vec<String>,
    /// Relative half-width of the default bound box.
    pub fraction: Option<f64>,
    #[serde(default)]
    pub bounds: Vec<BoundEntry>,
    pub budget: Option<usize>,
    pub restarts: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoundEntry {
    pub param: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub axes: Vec<Axis>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: String,
    pub values: Option<Vec<f64>>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub steps: Option<usize>,
}

impl Axis {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        match (&self.values, self.from, self.to, self.steps) {
            (Some(v), None, None, None) if !v.is_empty() => Ok(v.clone()),
            (None, Some(a), Some(b), Some(n)) if n >= 2 => {
                Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
            }
            (None, Some(a), _, Some(1)) => Ok(vec![a]),
            _ => Err(CliError::config(format!(
                "sweep axis `{}` needs either a non-empty `values` list or `from`, `to` and `steps`",
                self.param
            ))),
        }
    }
}

/// Sweepable keys, as written in `[[sweep.axes]]`.
pub const SWEEP_PARAMS: [&str; 18] = [
    "omega0", "omega_b", "kappa_a", "kappa_c", "kappa_b", "q_b", "g_ca", "nbar_a", "nbar_c", "nbar_b", "t_c",
    "width", "kappa_delta", "h_delta", "tau", "tau_ch", "t_start", "t_end",
];

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config_at(path, format!("cannot read config: {e}")))?;
        toml::from_str(&text).map_err(|e| CliError::config_at(path, format!("malformed config: {}", e.message())))
    }

    /// Sets one sweepable key.
    pub fn set(&mut self, key: &str, v: f64) -> Result<(), CliError> {
        let s = &mut self.system;
        let p = &mut self.pulse;
        match key {
            "omega0" => p.omega0 = Some(v),
            "omega_b" => s.omega_b = Some(v),
            "kappa_a" => s.kappa_a = Some(v),
            "kappa_c" => s.kappa_c = Some(v),
            "kappa_b" => {
                s.kappa_b = Some(v);
                s.q_b = None;
            }
            "q_b" => {
                s.q_b = Some(v);
                s.kappa_b = None;
            }
            "g_ca" => s.g_ca = Some(v),
            "nbar_a" => s.nbar_a = Some(v),
            "nbar_c" => s.nbar_c = Some(v),
            "nbar_b" => s.nbar_b = Some(v),
            "t_c" => p.t_c = Some(v),
            "width" => p.width = Some(v),
            "kappa_delta" => p.kappa_delta = Some(v),
            "h_delta" => p.h_delta = Some(v),
            "tau" => p.tau = Some(v),
            "tau_ch" => p.tau_ch = Some(v),
            "t_start" | "t_end" => {
                let w = self
                    .run
                    .window
                    .as_mut()
                    .ok_or_else(|| CliError::config(format!("sweeping `{key}` requires run.window")))?;
                w[usize::from(key == "t_end")] = v;
            }
            _ => {
                return Err(CliError::config(format!(
                    "unknown sweep parameter `{key}` (expected one of {})",
                    SWEEP_PARAMS.join(", ")
                )))
            }
        }
        Ok(())
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub rwa: bool,
    pub cycles: Option<usize>,
    pub window: Option<(f64, f64)>,
    pub full_moments: bool,
    pub tol: Option<(f64, f64)>,
    pub jobs: Option<usize>,
}

/// Everything a subcommand needs, after defaults and overrides.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub name: String,
    pub params: Params,
    pub schedule: Schedule,
    /// `(N_a, N_c, N_b)` of the thermal initial state.
    pub initial: [f64; 3],
    pub window: Option<(f64, f64)>,
    pub cycles: Option<usize>,
    pub t_span: Option<(f64, f64)>,
    pub opts: EvolveOptions,
    pub oracle_check: bool,
    pub full_moments: bool,
}

fn nonneg(name: &str, v: Option<f64>) -> Result<f64, CliError> {
    let v = v.unwrap_or(0.0);
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(CliError::config(format!("`{name}` must be finite and non-negative, got {v}")))
    }
}

fn span(name: &str, v: [f64; 2]) -> Result<(f64, f64), CliError> {
    if v[0].is_finite() && v[1].is_finite() && v[0] < v[1] {
        Ok((v[0], v[1]))
    } else {
        Err(CliError::config(format!("`{name}` must be an increasing pair of finite times, got {v:?}")))
    }
}

pub fn schedule_of(pulse: &PulseSection) -> Result<Schedule, CliError> {
    let omega0 = pulse
        .omega0
        .ok_or_else(|| CliError::config("pulse.omega0 is required"))?;
    let mut s = canonical_schedule(omega0).map_err(CliError::invalid)?;
    s.t_c = pulse.t_c.unwrap_or(s.t_c);
    s.width = pulse.width.unwrap_or(s.width);
    s.kappa_delta = pulse.kappa_delta.unwrap_or(s.kappa_delta);
    s.h_delta = pulse.h_delta.unwrap_or(s.h_delta);
    s.tau = pulse.tau.unwrap_or(s.tau);
    s.tau_ch = pulse.tau_ch.unwrap_or(s.tau_ch);
    s.validate().map_err(CliError::invalid)?;
    Ok(s)
}

pub fn params_of(sys: &SystemSection, omega0: f64) -> Result<Params, CliError> {
    let mut p = Params {
        omega_b: sys.omega_b.unwrap_or(1.0),
        kappa_a: nonneg("system.kappa_a", sys.kappa_a)?,
        kappa_c: nonneg("system.kappa_c", sys.kappa_c)?,
        kappa_b: nonneg("system.kappa_b", sys.kappa_b)?,
        g_ca: sys.g_ca.unwrap_or(omega0 / 2.0),
        nbar_a: nonneg("system.nbar_a", sys.nbar_a)?,
        nbar_b: nonneg("system.nbar_b", sys.nbar_b)?,
        nbar_c: nonneg("system.nbar_c", sys.nbar_c)?,
    };
    if let Some(q) = sys.q_b {
        if sys.kappa_b.is_some() {
            return Err(CliError::config("give either system.kappa_b or system.q_b, not both"));
        }
        p = p.with_quality_factor(q).map_err(CliError::invalid)?;
    }
    p.validate().map_err(CliError::invalid)?;
    Ok(p)
}

/// Integrator options from `[run]` and the command line.
pub fn options_of(run: &RunSection, ov: &Overrides) -> Result<EvolveOptions, CliError> {
    let mut opts = EvolveOptions::default();
    if ov.rwa || run.rwa {
        opts = opts.rwa();
    }
    let (rtol, atol) = ov
        .tol
        .unwrap_or((run.rtol.unwrap_or(opts.rtol), run.atol.unwrap_or(opts.atol)));
    opts = opts.with_tolerances(rtol, atol);
    if let Some(dt) = run.sample_dt {
        opts = opts.with_sample_dt(dt);
    }
    opts.hold = run.hold.unwrap_or(0.0);
    opts.carry = match run.carry.unwrap_or(Carry::Full) {
        Carry::Full => CycleCarry::Full,
        Carry::PhononsOnly => CycleCarry::PhononsOnly,
    };
    opts.validate().map_err(CliError::invalid)?;
    Ok(opts)
}

impl Resolved {
    pub fn new(cfg: &ConfigFile, ov: &Overrides) -> Result<Self, CliError> {
        let schedule = schedule_of(&cfg.pulse)?;
        let params = params_of(&cfg.system, schedule.omega0)?;
        let run = &cfg.run;
        let window = match ov.window {
            Some(w) => Some(span("--window", [w.0, w.1])?),
            None => run.window.map(|w| span("run.window", w)).transpose()?,
        };
        let cycles = ov.cycles.or(run.cycles);
        if cycles == Some(0) {
            return Err(CliError::config("cycle count must be at least 1"));
        }
        let t_span = run.t_span.map(|w| span("run.t_span", w)).transpose()?;

        let opts = options_of(run, ov)?;

        let i = &cfg.initial;
        Ok(Self {
            name: cfg.name.clone().unwrap_or_else(|| "scenario".into()),
            params,
            schedule,
            initial: [
                nonneg("initial.n_a", i.n_a)?,
                nonneg("initial.n_c", i.n_c)?,
                nonneg("initial.n_b", i.n_b)?,
            ],
            window,
            cycles,
            t_span,
            opts,
            oracle_check: run.oracle_check,
            full_moments: ov.full_moments,
        })
    }
}

/// Output directory: `--out`, then the config's `out`, then `out/<name>`.
pub fn out_dir(cfg: Option<&ConfigFile>, ov: &Overrides) -> PathBuf {
    if let Some(o) = &ov.out {
        return o.clone();
    }
    match cfg {
        Some(ConfigFile { out: Some(o), .. }) => o.clone(),
        Some(ConfigFile { name: Some(n), .. }) => Path::new("out").join(n),
        _ => PathBuf::from("out"),
    }
}
