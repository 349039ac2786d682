//! Time integration of the moment equations, full-pulse runs and the
//! iterated truncated-pulse cooling protocol.

use crate::error::{invalid, Result};
use crate::model::SystemParams;
use crate::moments::{moment_derivative, Couplings, MomentState, N_MOMENTS};
use crate::ode::{self, OdeOptions, OdeStats};
use crate::pulses::{Modulation, PulseSchedule, TruncationWindow};
use crate::scalar::{c, Cplx, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions<T = f64> {
    pub rtol: T,
    pub atol: T,
    /// Keep the `exp(+-2 i omega_b t)` pair-creation terms.
    pub counter_rotating: bool,
    /// Step cap; defaults to `pi / (20 omega_b)` with counter-rotating terms
    /// and to no cap otherwise.
    pub max_step: Option<T>,
    /// Spacing of recorded samples.
    pub sample_dt: T,
    /// Reject samples whose uncertainty margin falls below
    /// `-physicality_tol * max(1, occupancy)`.
    pub physicality_tol: T,
    /// Pump-off dwell between consecutive truncated cycles.
    pub hold: T,
    pub carry: CycleCarry,
}

/// What survives from one truncated cycle into the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CycleCarry {
    /// The full moment state.
    #[default]
    Full,
    /// Only the phonon number; the cavities restart empty and all
    /// correlations are dropped.
    PhononsOnly,
}

impl<T: Real> Default for EvolveOptions<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-8),
            atol: T::lit(1e-10),
            counter_rotating: true,
            max_step: None,
            sample_dt: T::lit(0.1),
            physicality_tol: T::lit(1e-4),
            hold: T::zero(),
            carry: CycleCarry::Full,
        }
    }
}

impl<T: Real> EvolveOptions<T> {
    pub fn rwa(mut self) -> Self {
        self.counter_rotating = false;
        self
    }

    pub fn with_tolerances(mut self, rtol: T, atol: T) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_sample_dt(mut self, dt: T) -> Self {
        self.sample_dt = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > T::zero()) || !(self.atol > T::zero()) {
            return Err(invalid("tolerance", "rtol and atol must be positive"));
        }
        if !(self.sample_dt > T::zero()) {
            return Err(invalid("sample_dt", "must be positive"));
        }
        if self.hold < T::zero() {
            return Err(invalid("hold", "must be non-negative"));
        }
        Ok(())
    }

    fn ode_options(&self, p: &SystemParams<T>) -> OdeOptions<T> {
        let cap = self.max_step.or_else(|| {
            self.counter_rotating
                .then(|| T::PI() / (T::lit(20.0) * p.omega_b))
        });
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            max_step: cap,
            ..OdeOptions::default()
        }
    }
}

/// Time-ordered moment samples of one run.
#[derive(Debug, Clone)]
pub struct Trajectory<T = f64> {
    pub samples: Vec<MomentState<T>>,
    /// `(N_a, N_c, N_b)` per sample.
    pub occupancies: Vec<[T; 3]>,
    pub schedule: Option<PulseSchedule<T>>,
    pub params: SystemParams<T>,
    pub stats: OdeStats,
    /// Smallest uncertainty margin seen over all samples.
    pub min_uncertainty_margin: T,
}

impl<T: Real> Trajectory<T> {
    fn new(params: SystemParams<T>, schedule: Option<PulseSchedule<T>>) -> Self {
        Self {
            samples: Vec::new(),
            occupancies: Vec::new(),
            schedule,
            params,
            stats: OdeStats::default(),
            min_uncertainty_margin: T::infinity(),
        }
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn last(&self) -> Option<&MomentState<T>> {
        self.samples.last()
    }

    pub fn n_b(&self) -> impl Iterator<Item = T> + '_ {
        self.occupancies.iter().map(|o| o[2])
    }

    fn push(&mut self, s: MomentState<T>, tol: T) -> Result<()> {
        s.check_physical(tol, tol)?;
        self.min_uncertainty_margin = self.min_uncertainty_margin.min(s.uncertainty_margin());
        self.occupancies.push([s.n_a(), s.n_c(), s.n_b()]);
        self.samples.push(s);
        Ok(())
    }

    fn append(&mut self, other: Trajectory<T>) {
        let skip = match (self.samples.last(), other.samples.first()) {
            (Some(a), Some(b)) if a.t == b.t => 1,
            _ => 0,
        };
        self.samples.extend(other.samples.into_iter().skip(skip));
        self.occupancies.extend(other.occupancies.into_iter().skip(skip));
        self.stats += other.stats;
        self.min_uncertainty_margin = self.min_uncertainty_margin.min(other.min_uncertainty_margin);
    }
}

fn sample_grid<T: Real>(t0: T, t1: T, dt: T) -> Vec<T> {
    let span = (t1 - t0).abs();
    let dir = (t1 - t0).signum();
    let n = (span / dt).floor().to_usize().unwrap_or(0);
    let mut v: Vec<T> = (0..=n).map(|k| t0 + dir * dt * T::from_usize_lossy(k)).collect();
    // Drop a grid point that would duplicate the end point up to rounding.
    if let Some(&last) = v.last() {
        if (t1 - last).abs() <= dt * T::lit(1e-9) {
            v.pop();
        }
    }
    v.push(t1);
    v
}

/// Maps physical time onto the modulation clock.
struct Segment<'a, T, M: ?Sized> {
    modulation: &'a M,
    /// Modulation time at `physical_start`.
    clock_start: T,
    physical_start: T,
    pump_on: bool,
    frozen_at: Option<T>,
}

impl<'a, T: Real, M: Modulation<T> + ?Sized> Segment<'a, T, M> {
    fn couplings(&self, t: T, p: &SystemParams<T>) -> Couplings<T> {
        let clock = self.frozen_at.unwrap_or(self.clock_start + (t - self.physical_start));
        let mut k = Couplings::at(clock, self.modulation, p);
        if !self.pump_on {
            k.g_cb = T::zero();
        }
        k.phase_time = t;
        k
    }
}

fn run_segment<T: Real, M: Modulation<T> + ?Sized>(
    initial: &MomentState<T>,
    seg: &Segment<'_, T, M>,
    p: &SystemParams<T>,
    t1: T,
    opts: &EvolveOptions<T>,
    traj: &mut Trajectory<T>,
) -> Result<MomentState<T>> {
    let t0 = initial.t;
    let grid = sample_grid(t0, t1, opts.sample_dt);
    let cr = opts.counter_rotating;
    let rhs = |t: T, y: &[T], dy: &mut [T]| {
        let mut m = [c(T::zero(), T::zero()); N_MOMENTS];
        for (k, z) in m.iter_mut().enumerate() {
            *z = Cplx::new(y[2 * k], y[2 * k + 1]);
        }
        let d = moment_derivative(&m, &seg.couplings(t, p), p, cr);
        for (k, z) in d.iter().enumerate() {
            dy[2 * k] = z.re;
            dy[2 * k + 1] = z.im;
        }
    };
    let tol = opts.physicality_tol;
    let (end, stats) = ode::integrate(rhs, t0, &initial.to_real(), t1, &grid, &opts.ode_options(p), |t, y| {
        traj.push(MomentState::from_real(t, y), tol)
    })?;
    traj.stats += stats;
    Ok(MomentState::from_real(t1, &end))
}

/// Evolves `initial` over `t_span` under a pulse schedule.
pub fn integrate<T: Real>(
    initial: &MomentState<T>,
    s: &PulseSchedule<T>,
    p: &SystemParams<T>,
    t_span: (T, T),
    opts: &EvolveOptions<T>,
) -> Result<Trajectory<T>> {
    let mut traj = integrate_with(initial, s, p, t_span, opts)?;
    traj.schedule = Some(*s);
    Ok(traj)
}

/// [`integrate`] for an arbitrary [`Modulation`].
pub fn integrate_with<T: Real, M: Modulation<T> + ?Sized>(
    initial: &MomentState<T>,
    modulation: &M,
    p: &SystemParams<T>,
    t_span: (T, T),
    opts: &EvolveOptions<T>,
) -> Result<Trajectory<T>> {
    opts.validate()?;
    p.validate()?;
    let (t0, t1) = t_span;
    if !(t0 != t1) || !t0.is_finite() || !t1.is_finite() {
        return Err(invalid("t_span", "interval must be finite and non-empty"));
    }
    let seg = Segment {
        modulation,
        clock_start: t0,
        physical_start: t0,
        pump_on: true,
        frozen_at: None,
    };
    let mut traj = Trajectory::new(*p, None);
    let mut start = *initial;
    start.t = t0;
    run_segment(&start, &seg, p, t1, opts, &mut traj)?;
    Ok(traj)
}

/// Summary of an iterated cooling run.
#[derive(Debug, Clone, PartialEq)]
pub struct CoolingReport<T = f64> {
    pub initial_n_b: T,
    pub n_b_min: T,
    pub t_min: T,
    /// `N_b` at the end of each cycle.
    pub cycle_end_n_b: Vec<T>,
    /// Smallest `N_b` within each cycle.
    pub cycle_min_n_b: Vec<T>,
    pub final_n_b: T,
    pub cycles: usize,
    pub steps: usize,
    pub rejected_steps: usize,
}

impl<T: Real> CoolingReport<T> {
    fn from_trajectory(traj: &Trajectory<T>, cycle_end_n_b: Vec<T>, cycle_min_n_b: Vec<T>) -> Self {
        let mut n_b_min = T::infinity();
        let mut t_min = T::nan();
        for (s, o) in traj.samples.iter().zip(&traj.occupancies) {
            if o[2] < n_b_min {
                n_b_min = o[2];
                t_min = s.t;
            }
        }
        Self {
            initial_n_b: traj.occupancies.first().map_or(T::nan(), |o| o[2]),
            n_b_min,
            t_min,
            final_n_b: traj.occupancies.last().map_or(T::nan(), |o| o[2]),
            cycles: cycle_end_n_b.len(),
            cycle_end_n_b,
            cycle_min_n_b,
            steps: traj.stats.steps,
            rejected_steps: traj.stats.rejected,
        }
    }
}

/// Replays the window `[t_start, t_end]` of the schedule `n_cycles` times.
///
/// The state at the end of one cycle seeds the next. Each cycle restarts the
/// modulation clock at `t_start`, while the physical time that enters the
/// counter-rotating phases runs on continuously from `t_start`. With a
/// non-zero `opts.hold` the pump is switched off between cycles and the
/// detunings are frozen at their `t_end` values.
pub fn iterate_cooling<T: Real>(
    initial: &MomentState<T>,
    s: &PulseSchedule<T>,
    w: &TruncationWindow<T>,
    p: &SystemParams<T>,
    opts: &EvolveOptions<T>,
) -> Result<(Trajectory<T>, CoolingReport<T>)> {
    let (mut traj, report) = iterate_cooling_with(initial, s, w, p, opts)?;
    traj.schedule = Some(*s);
    Ok((traj, report))
}

/// [`iterate_cooling`] for an arbitrary [`Modulation`].
pub fn iterate_cooling_with<T: Real, M: Modulation<T> + ?Sized>(
    initial: &MomentState<T>,
    modulation: &M,
    w: &TruncationWindow<T>,
    p: &SystemParams<T>,
    opts: &EvolveOptions<T>,
) -> Result<(Trajectory<T>, CoolingReport<T>)> {
    w.validate()?;
    opts.validate()?;
    p.validate()?;
    let mut traj = Trajectory::new(*p, None);
    let mut state = *initial;
    state.t = w.t_start;
    let mut ends = Vec::with_capacity(w.n_cycles);
    let mut mins = Vec::with_capacity(w.n_cycles);
    let duration = w.duration();
    for cycle in 0..w.n_cycles {
        let mut part = Trajectory::new(*p, None);
        let seg = Segment {
            modulation,
            clock_start: w.t_start,
            physical_start: state.t,
            pump_on: true,
            frozen_at: None,
        };
        if cycle > 0 && opts.carry == CycleCarry::PhononsOnly {
            state = MomentState::thermal(state.t, T::zero(), T::zero(), state.n_b());
        }
        let t1 = state.t + duration;
        state = run_segment(&state, &seg, p, t1, opts, &mut part)?;
        mins.push(part.n_b().fold(T::infinity(), |a, b| a.min(b)));
        ends.push(state.n_b());
        traj.append(part);
        if opts.hold > T::zero() && cycle + 1 < w.n_cycles {
            let hold = Segment {
                modulation,
                clock_start: w.t_end,
                physical_start: state.t,
                pump_on: false,
                frozen_at: Some(w.t_end),
            };
            let mut part = Trajectory::new(*p, None);
            let t1 = state.t + opts.hold;
            state = run_segment(&state, &hold, p, t1, opts, &mut part)?;
            traj.append(part);
        }
    }
    let report = CoolingReport::from_trajectory(&traj, ends, mins);
    Ok((traj, report))
}
