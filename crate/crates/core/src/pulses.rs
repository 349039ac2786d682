//! Pump and detuning modulation, and truncation windows for iterated cooling.

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::spectral::AdiabaticSpectrum;

/// Time-dependent control fields seen by the linearized three-mode system.
///
/// Implemented by [`PulseSchedule`]; other pulse shapes can be plugged into
/// the moment and oracle integrators through this trait.
pub trait Modulation<T: Real>: Sync {
    /// Pump coupling `Omega_p(t)`; the optomechanical coupling is half of it.
    fn pump(&self, t: T) -> T;
    /// `(delta_c, delta_a)` at time `t`.
    fn detunings(&self, t: T) -> (T, T);
}

/// Gaussian pump plus double-tanh detuning sweep.
///
/// Times are absolute in a frame symmetric about the sweep midpoint
/// (`delta_s(0) = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSchedule<T = f64> {
    /// Peak pump coupling; also the Stokes coupling `Omega_s`.
    pub omega0: T,
    /// Pump centre.
    pub t_c: T,
    /// Pump Gaussian width `T`.
    pub width: T,
    pub kappa_delta: T,
    pub h_delta: T,
    /// Offset of the two tanh steps.
    pub tau: T,
    /// Timescale of the tanh steps.
    pub tau_ch: T,
}

impl<T: Real> PulseSchedule<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > T::zero()) || !self.omega0.is_finite() {
            return Err(Error::NonPositiveAmplitude(self.omega0.as_f64()));
        }
        if !(self.width > T::zero()) || !self.width.is_finite() {
            return Err(invalid("width", "must be positive"));
        }
        if !(self.tau_ch > T::zero()) || !self.tau_ch.is_finite() {
            return Err(invalid("tau_ch", "must be positive"));
        }
        for (name, v) in [
            ("t_c", self.t_c),
            ("kappa_delta", self.kappa_delta),
            ("h_delta", self.h_delta),
            ("tau", self.tau),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// Half-length `t_f = tau + 5 tau_ch` of the symmetric schedule domain.
    pub fn half_duration(&self) -> T {
        self.tau.abs() + T::lit(5.0) * self.tau_ch
    }

    /// The full schedule domain `[-t_f, t_f]`.
    pub fn domain(&self) -> (T, T) {
        let tf = self.half_duration();
        (-tf, tf)
    }

    pub fn omega_p(&self, t: T) -> T {
        omega_p(t, self)
    }

    /// Linearized optomechanical coupling `G_cb(t) = Omega_p(t) / 2`.
    pub fn g_cb(&self, t: T) -> T {
        omega_p(t, self) / T::lit(2.0)
    }

    pub fn delta_s(&self, t: T) -> T {
        delta_s(t, self)
    }
}

impl<T: Real> Modulation<T> for PulseSchedule<T> {
    fn pump(&self, t: T) -> T {
        omega_p(t, self)
    }

    fn detunings(&self, t: T) -> (T, T) {
        detunings(t, self)
    }
}

/// Gaussian pump coupling `Omega0 exp(-((t - t_c) / T)^2)`.
pub fn omega_p<T: Real>(t: T, s: &PulseSchedule<T>) -> T {
    let x = (t - s.t_c) / s.width;
    s.omega0 * (-x * x).exp()
}

/// Common detuning sweep
/// `-h_delta Omega0 / 2 [tanh((t - tau)/tau_ch) + tanh((t + tau)/tau_ch)]`.
pub fn delta_s<T: Real>(t: T, s: &PulseSchedule<T>) -> T {
    let sum = ((t - s.tau) / s.tau_ch).tanh() + ((t + s.tau) / s.tau_ch).tanh();
    -s.h_delta * s.omega0 / T::lit(2.0) * sum
}

/// `(delta_c, delta_a) = (kappa_delta, kappa_delta - 1) * delta_s(t)`.
pub fn detunings<T: Real>(t: T, s: &PulseSchedule<T>) -> (T, T) {
    let ds = delta_s(t, s);
    (s.kappa_delta * ds, (s.kappa_delta - T::one()) * ds)
}

/// Segment of the schedule that is replayed `n_cycles` times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationWindow<T = f64> {
    pub t_start: T,
    pub t_end: T,
    pub n_cycles: usize,
}

impl<T: Real> TruncationWindow<T> {
    pub fn new(t_start: T, t_end: T, n_cycles: usize) -> Result<Self> {
        let w = Self {
            t_start,
            t_end,
            n_cycles,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start < self.t_end) || !self.t_start.is_finite() || !self.t_end.is_finite() {
            return Err(invalid(
                "window",
                format!("need t_start < t_end, got [{}, {}]", self.t_start, self.t_end),
            ));
        }
        if self.n_cycles == 0 {
            return Err(invalid("n_cycles", "must be at least 1"));
        }
        Ok(())
    }

    pub fn duration(&self) -> T {
        self.t_end - self.t_start
    }
}

/// Rule used by [`default_window`] to size the truncated sub-pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRule<T = f64> {
    /// The window spans where the pump exceeds this fraction of its peak,
    /// measured from the gap location.
    pub pump_fraction: T,
    pub n_cycles: usize,
}

impl<T: Real> Default for WindowRule<T> {
    fn default() -> Self {
        Self {
            pump_fraction: T::lit(0.99),
            n_cycles: 10,
        }
    }
}

/// Truncation window centred on the Stokes crossing that carries the widest
/// avoided-crossing gap in `spectrum`.
///
/// The half-width is `T sqrt(ln(1 / pump_fraction))`, the distance over which
/// the Gaussian pump stays above `pump_fraction * Omega0`; the result is
/// clipped to the schedule domain.
pub fn default_window<T: Real>(
    s: &PulseSchedule<T>,
    spectrum: &AdiabaticSpectrum<T>,
    rule: &WindowRule<T>,
) -> Result<TruncationWindow<T>> {
    if !(rule.pump_fraction > T::zero() && rule.pump_fraction < T::one()) {
        return Err(invalid("pump_fraction", "must lie in (0, 1)"));
    }
    let gap = spectrum.widest_gap().ok_or(Error::NoGapFound)?;
    let half = s.width * (T::one() / rule.pump_fraction).ln().sqrt();
    let (lo, hi) = s.domain();
    TruncationWindow::new(
        (gap.crossing.time - half).max(lo),
        (gap.crossing.time + half).min(hi),
        rule.n_cycles,
    )
}
