//! Derivative-free search over pulse-shape and window parameters.

use crate::error::{invalid, Error, Result};
use crate::evolve::{iterate_cooling, EvolveOptions};
use crate::model::SystemParams;
use crate::moments::MomentState;
use crate::pulses::{PulseSchedule, TruncationWindow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    KappaDelta,
    HDelta,
    Tau,
    TauCh,
    TC,
    Width,
    TStart,
    TEnd,
}

impl Param {
    pub const ALL: [Param; 8] = [
        Param::KappaDelta,
        Param::HDelta,
        Param::Tau,
        Param::TauCh,
        Param::TC,
        Param::Width,
        Param::TStart,
        Param::TEnd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::KappaDelta => "kappa_delta",
            Param::HDelta => "h_delta",
            Param::Tau => "tau",
            Param::TauCh => "tau_ch",
            Param::TC => "t_c",
            Param::Width => "T",
            Param::TStart => "t_start",
            Param::TEnd => "t_end",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    pub fn get(self, s: &PulseSchedule<f64>, w: &TruncationWindow<f64>) -> f64 {
        match self {
            Param::KappaDelta => s.kappa_delta,
            Param::HDelta => s.h_delta,
            Param::Tau => s.tau,
            Param::TauCh => s.tau_ch,
            Param::TC => s.t_c,
            Param::Width => s.width,
            Param::TStart => w.t_start,
            Param::TEnd => w.t_end,
        }
    }

    fn set(self, s: &mut PulseSchedule<f64>, w: &mut TruncationWindow<f64>, v: f64) {
        match self {
            Param::KappaDelta => s.kappa_delta = v,
            Param::HDelta => s.h_delta = v,
            Param::Tau => s.tau = v,
            Param::TauCh => s.tau_ch = v,
            Param::TC => s.t_c = v,
            Param::Width => s.width = v,
            Param::TStart => w.t_start = v,
            Param::TEnd => w.t_end = v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub param: Param,
    pub lower: f64,
    pub upper: f64,
}

impl Bound {
    /// Symmetric relative bounds around `value`.
    pub fn relative(param: Param, value: f64, fraction: f64) -> Self {
        let d = (value * fraction).abs();
        Self {
            param,
            lower: value - d,
            upper: value + d,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneSpec {
    pub free: Vec<Bound>,
    pub budget: usize,
    pub seed_schedule: PulseSchedule<f64>,
    pub seed_window: TruncationWindow<f64>,
    /// Initial phonon occupancy of every evaluation.
    pub initial_n_b: f64,
    pub restarts: usize,
}

impl TuneSpec {
    pub fn new(seed_schedule: PulseSchedule<f64>, seed_window: TruncationWindow<f64>, initial_n_b: f64) -> Self {
        Self {
            free: Vec::new(),
            budget: 200,
            seed_schedule,
            seed_window,
            initial_n_b,
            restarts: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(invalid("budget", "must be at least 1"));
        }
        if self.free.is_empty() {
            return Err(invalid("free", "no free parameters"));
        }
        for (k, b) in self.free.iter().enumerate() {
            if !(b.lower.is_finite() && b.upper.is_finite() && b.lower < b.upper) {
                return Err(invalid(b.param.name(), "bounds must be finite with lower < upper"));
            }
            if self.free[..k].iter().any(|o| o.param == b.param) {
                return Err(invalid(b.param.name(), "listed twice"));
            }
        }
        self.seed_schedule.validate()?;
        self.seed_window.validate()
    }

    /// Unit-cube coordinates of the seed, clamped into the bounds.
    ///
    /// Each parameter is mapped affinely from its bounds onto `[0, 1]`.
    /// This also absorbs the `Omega0 * t` scaling of the time parameters,
    /// so a relative bound box behaves the same for every pulse strength.
    pub fn seed_point(&self) -> Vec<f64> {
        self.free
            .iter()
            .map(|b| {
                let v = b.param.get(&self.seed_schedule, &self.seed_window);
                ((v - b.lower) / (b.upper - b.lower)).clamp(0.0, 1.0)
            })
            .collect()
    }

    /// Schedule and window at unit-cube point `x`.
    pub fn decode(&self, x: &[f64]) -> (PulseSchedule<f64>, TruncationWindow<f64>) {
        let mut s = self.seed_schedule;
        let mut w = self.seed_window;
        for (b, &u) in self.free.iter().zip(x) {
            b.param.set(&mut s, &mut w, b.lower + u * (b.upper - b.lower));
        }
        (s, w)
    }

    /// Minimum `N_b` of the iterated protocol for a schedule and window.
    pub fn objective(&self, s: &PulseSchedule<f64>, w: &TruncationWindow<f64>, p: &SystemParams<f64>, opts: &EvolveOptions<f64>) -> Result<f64> {
        s.validate()?;
        w.validate()?;
        let init = MomentState::thermal(w.t_start, 0.0, 0.0, self.initial_n_b);
        iterate_cooling(&init, s, w, p, opts).map(|(_, r)| r.n_b_min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Unit-cube coordinates.
    pub point: Vec<f64>,
    /// `+inf` when the candidate was invalid or its simulation failed.
    pub objective: f64,
    pub best_so_far: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub log: Vec<Evaluation>,
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub budget: usize,
    pub restarts: usize,
    /// Initial simplex edge, as a fraction of the unit box.
    pub step: f64,
    pub x_tol: f64,
    pub f_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            budget: 200,
            restarts: 3,
            step: 0.1,
            x_tol: 1e-6,
            f_tol: 1e-10,
        }
    }
}

/// Folds `x` back into `[0, 1]` by reflecting at the walls.
fn reflect(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r > 1.0 {
        2.0 - r
    } else {
        r
    }
}

struct Counter<'a, F> {
    f: F,
    log: &'a mut Vec<Evaluation>,
    budget: usize,
    best: f64,
}

impl<F: FnMut(&[f64]) -> f64> Counter<'_, F> {
    fn exhausted(&self) -> bool {
        self.log.len() >= self.budget
    }

    fn eval(&mut self, x: Vec<f64>) -> Option<(Vec<f64>, f64)> {
        if self.exhausted() {
            return None;
        }
        let v = (self.f)(&x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        self.best = self.best.min(v);
        self.log.push(Evaluation {
            point: x.clone(),
            objective: v,
            best_so_far: self.best,
        });
        Some((x, v))
    }
}

/// Bounded Nelder-Mead on the unit cube, restarted from the incumbent with
/// a shrinking simplex.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let n = x0.len();
    let mut log = Vec::new();
    let mut c = Counter {
        f,
        log: &mut log,
        budget: opts.budget.max(1),
        best: f64::INFINITY,
    };
    let start: Vec<f64> = x0.iter().map(|&x| reflect(x)).collect();
    let Some(mut incumbent) = c.eval(start) else {
        unreachable!("budget is at least one")
    };
    let mut step = opts.step;
    'outer: for _ in 0..=opts.restarts {
        let mut simplex = vec![incumbent.clone()];
        for k in 0..n {
            let mut x = incumbent.0.clone();
            x[k] = if x[k] + step <= 1.0 { x[k] + step } else { x[k] - step };
            match c.eval(x) {
                Some(e) => simplex.push(e),
                None => break 'outer,
            }
        }
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (lo, hi) = (simplex[0].1, simplex[n].1);
            let size = simplex[1..]
                .iter()
                .flat_map(|v| v.0.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0f64, f64::max);
            if (hi - lo).abs() <= opts.f_tol * (1.0 + lo.abs()) && size <= opts.x_tol || size <= opts.x_tol * 1e-3 {
                break;
            }
            let centroid: Vec<f64> = (0..n)
                .map(|k| simplex[..n].iter().map(|v| v.0[k]).sum::<f64>() / n as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(&m, &w)| reflect(m + t * (m - w)))
                    .collect()
            };
            let Some(r) = c.eval(along(1.0)) else { break 'outer };
            if r.1 < simplex[0].1 {
                let Some(e) = c.eval(along(2.0)) else {
                    simplex[n] = r;
                    break 'outer;
                };
                simplex[n] = if e.1 < r.1 { e } else { r };
                continue;
            }
            if r.1 < simplex[n - 1].1 {
                simplex[n] = r;
                continue;
            }
            let t = if r.1 < simplex[n].1 { 0.5 } else { -0.5 };
            let Some(k) = c.eval(along(t)) else { break 'outer };
            if k.1 < r.1.min(simplex[n].1) {
                simplex[n] = k;
                continue;
            }
            let best = simplex[0].0.clone();
            for v in simplex.iter_mut().skip(1) {
                let x: Vec<f64> = v.0.iter().zip(&best).map(|(a, b)| b + 0.5 * (a - b)).collect();
                match c.eval(x) {
                    Some(e) => *v = e,
                    None => break 'outer,
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < incumbent.1 {
            incumbent = simplex[0].clone();
        }
        step *= 0.5;
    }
    let budget_exhausted = c.exhausted();
    // The incumbent may lag the log when the budget ran out mid-step.
    if let Some(e) = log.iter().filter(|e| e.objective < incumbent.1).min_by(|a, b| a.objective.total_cmp(&b.objective)) {
        incumbent = (e.point.clone(), e.objective);
    }
    Minimum {
        point: incumbent.0,
        value: incumbent.1,
        log,
        budget_exhausted,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub schedule: PulseSchedule<f64>,
    pub window: TruncationWindow<f64>,
    pub objective: f64,
    pub seed_objective: f64,
    pub log: Vec<Evaluation>,
    pub budget_exhausted: bool,
}

impl TuneOutcome {
    /// Turns an exhausted budget into [`Error::BudgetExhausted`].
    pub fn require_converged(self) -> Result<Self> {
        if self.budget_exhausted {
            Err(Error::BudgetExhausted(self.log.len()))
        } else {
            Ok(self)
        }
    }
}

/// Minimizes the minimum phonon number of iterated cooling over the free
/// parameters of `spec`.
///
/// The seed is evaluated first, so the result is never worse than the seed.
/// Runs are deterministic for a given spec and parameter set.
pub fn tune(spec: &TuneSpec, p: &SystemParams<f64>, opts: &EvolveOptions<f64>) -> Result<TuneOutcome> {
    spec.validate()?;
    p.validate()?;
    let x0 = spec.seed_point();
    let objective = |x: &[f64]| {
        let (s, w) = spec.decode(x);
        spec.objective(&s, &w, p, opts).unwrap_or(f64::INFINITY)
    };
    let nm = NelderMeadOptions {
        budget: spec.budget,
        restarts: spec.restarts,
        ..NelderMeadOptions::default()
    };
    let seed_objective = spec.objective(&spec.seed_schedule, &spec.seed_window, p, opts).unwrap_or(f64::INFINITY);
    let m = nelder_mead(objective, &x0, &nm);
    let (schedule, window, objective) = if m.value < seed_objective {
        let (s, w) = spec.decode(&m.point);
        (s, w, m.value)
    } else {
        (spec.seed_schedule, spec.seed_window, seed_objective)
    };
    Ok(TuneOutcome {
        schedule,
        window,
        objective,
        seed_objective,
        log: m.log,
        budget_exhausted: m.budget_exhausted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::canonical_schedule;

    #[test]
    fn quadratic_bowl() {
        let bowl = |x: &[f64]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] - 0.7).powi(2);
        let m = nelder_mead(bowl, &[0.9, 0.1], &NelderMeadOptions::default());
        assert!(m.log.len() <= 200);
        assert!((m.point[0] - 0.3).abs() < 1e-4 && (m.point[1] - 0.7).abs() < 1e-4, "{:?}", m.point);
        assert!(m.log.windows(2).all(|w| w[1].best_so_far <= w[0].best_so_far));
    }

    #[test]
    fn minimum_on_the_wall() {
        let f = |x: &[f64]| x[0] + (x[1] - 0.5).powi(2);
        let m = nelder_mead(f, &[0.5, 0.5], &NelderMeadOptions::default());
        assert!(m.point[0] < 1e-3 && m.point.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn budget_is_respected() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let m = nelder_mead(f, &[0.5; 4], &NelderMeadOptions { budget: 7, ..NelderMeadOptions::default() });
        assert_eq!(m.log.len(), 7);
        assert!(m.budget_exhausted);
    }

    #[test]
    fn reflection_folds_into_box() {
        for (x, want) in [(-0.2, 0.2), (1.3, 0.7), (0.4, 0.4), (2.5, 0.5)] {
            assert!((reflect(x) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn decode_roundtrip() {
        let s = canonical_schedule(0.9).unwrap();
        let w = TruncationWindow::new(50.0, 90.0, 2).unwrap();
        let mut spec = TuneSpec::new(s, w, 10.0);
        spec.free = vec![Bound::relative(Param::TC, s.t_c, 0.2), Bound::relative(Param::HDelta, s.h_delta, 0.2)];
        spec.validate().unwrap();
        let (s2, w2) = spec.decode(&spec.seed_point());
        assert!((s2.t_c - s.t_c).abs() < 1e-9 && (s2.h_delta - s.h_delta).abs() < 1e-12);
        assert_eq!(w2, w);
    }

    #[test]
    fn invalid_specs() {
        let s = canonical_schedule(0.9).unwrap();
        let w = TruncationWindow::new(50.0, 90.0, 2).unwrap();
        let mut spec = TuneSpec::new(s, w, 10.0);
        assert!(spec.validate().is_err());
        spec.free = vec![Bound { param: Param::Tau, lower: 1.0, upper: 1.0 }];
        assert!(spec.validate().is_err());
        spec.free = vec![Bound { param: Param::Tau, lower: 1.0, upper: 2.0 }];
        spec.budget = 0;
        assert!(spec.validate().is_err());
    }
}
