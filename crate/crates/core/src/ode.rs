//! Adaptive Dormand-Prince 5(4) integrator with continuous output.
//!
//! State vectors are flat real slices; complex systems interleave real and
//! imaginary parts.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions<T = f64> {
    pub rtol: T,
    pub atol: T,
    /// Upper bound on |h|.
    pub max_step: Option<T>,
    pub initial_step: Option<T>,
    /// Accepted plus rejected step attempts before giving up.
    pub max_attempts: usize,
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-8),
            atol: T::lit(1e-10),
            max_step: None,
            initial_step: None,
            max_attempts: 5_000_000,
        }
    }
}

impl<T: Real> OdeOptions<T> {
    pub fn with_tolerances(mut self, rtol: T, atol: T) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_max_step(mut self, h: T) -> Self {
        self.max_step = Some(h);
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl std::ops::AddAssign for OdeStats {
    fn add_assign(&mut self, rhs: Self) {
        self.steps += rhs.steps;
        self.rejected += rhs.rejected;
        self.evaluations += rhs.evaluations;
    }
}

// Dormand-Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Error coefficients b - b*.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates `dy/dt = f(t, y)` from `t0` to `t1` (either direction).
///
/// `on_sample` is invoked with the interpolated state at every time in
/// `samples`, which must lie between `t0` and `t1` and be ordered in the
/// direction of integration. Returns the state at `t1`.
pub fn integrate<T, F, S>(
    mut f: F,
    t0: T,
    y0: &[T],
    t1: T,
    samples: &[T],
    opts: &OdeOptions<T>,
    mut on_sample: S,
) -> Result<(Vec<T>, OdeStats)>
where
    T: Real,
    F: FnMut(T, &[T], &mut [T]),
    S: FnMut(T, &[T]) -> Result<()>,
{
    let n = y0.len();
    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    if t1 == t0 {
        for &ts in samples {
            on_sample(ts, &y)?;
        }
        return Ok((y, stats));
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let hmax = opts.max_step.unwrap_or(span).min(span).abs();
    let lit = T::lit;

    let mut k1 = vec![T::zero(); n];
    let mut k2 = vec![T::zero(); n];
    let mut k3 = vec![T::zero(); n];
    let mut k4 = vec![T::zero(); n];
    let mut k5 = vec![T::zero(); n];
    let mut k6 = vec![T::zero(); n];
    let mut k7 = vec![T::zero(); n];
    let mut ys = vec![T::zero(); n];
    let mut ynew = vec![T::zero(); n];
    let mut cont = vec![T::zero(); 5 * n];
    let mut interp = vec![T::zero(); n];

    f(t0, &y, &mut k1);
    stats.evaluations += 1;

    let mut h = match opts.initial_step {
        Some(h) => h.abs().min(hmax),
        None => initial_step(&mut f, t0, &y, &k1, dir, hmax, opts, &mut stats),
    };
    let mut t = t0;
    let mut next_sample = 0usize;
    let mut attempts = 0usize;
    let mut last_rejected = false;
    let tiny = lit(1e-14) * (t0.abs().max(t1.abs()).max(T::one()));

    loop {
        attempts += 1;
        if attempts > opts.max_attempts {
            return Err(Error::ToleranceNotMet {
                t: t.as_f64(),
                step: h.as_f64(),
            });
        }
        let mut last = false;
        if (t + dir * h - t1) * dir >= T::zero() {
            h = (t1 - t).abs();
            last = true;
        }
        if h < tiny {
            return Err(Error::ToleranceNotMet {
                t: t.as_f64(),
                step: h.as_f64(),
            });
        }
        let hs = dir * h;

        for i in 0..n {
            ys[i] = y[i] + hs * lit(A21) * k1[i];
        }
        f(t + lit(C2) * hs, &ys, &mut k2);
        for i in 0..n {
            ys[i] = y[i] + hs * (lit(A31) * k1[i] + lit(A32) * k2[i]);
        }
        f(t + lit(C3) * hs, &ys, &mut k3);
        for i in 0..n {
            ys[i] = y[i] + hs * (lit(A41) * k1[i] + lit(A42) * k2[i] + lit(A43) * k3[i]);
        }
        f(t + lit(C4) * hs, &ys, &mut k4);
        for i in 0..n {
            ys[i] = y[i]
                + hs * (lit(A51) * k1[i] + lit(A52) * k2[i] + lit(A53) * k3[i] + lit(A54) * k4[i]);
        }
        f(t + lit(C5) * hs, &ys, &mut k5);
        for i in 0..n {
            ys[i] = y[i]
                + hs * (lit(A61) * k1[i]
                    + lit(A62) * k2[i]
                    + lit(A63) * k3[i]
                    + lit(A64) * k4[i]
                    + lit(A65) * k5[i]);
        }
        let tnew = if last { t1 } else { t + hs };
        f(tnew, &ys, &mut k6);
        for i in 0..n {
            ynew[i] = y[i]
                + hs * (lit(A71) * k1[i]
                    + lit(A73) * k3[i]
                    + lit(A74) * k4[i]
                    + lit(A75) * k5[i]
                    + lit(A76) * k6[i]);
        }
        f(tnew, &ynew, &mut k7);
        stats.evaluations += 6;

        let mut err = T::zero();
        for i in 0..n {
            let e = hs
                * (lit(E1) * k1[i]
                    + lit(E3) * k3[i]
                    + lit(E4) * k4[i]
                    + lit(E5) * k5[i]
                    + lit(E6) * k6[i]
                    + lit(E7) * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            let r = e / sc;
            err += r * r;
        }
        err = (err / T::from_usize_lossy(n.max(1))).sqrt();
        if !err.is_finite() {
            stats.rejected += 1;
            h = h * lit(0.2);
            last_rejected = true;
            continue;
        }

        if err <= T::one() {
            stats.steps += 1;
            // Continuous output coefficients for this step.
            for i in 0..n {
                let ydiff = ynew[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                cont[i] = y[i];
                cont[n + i] = ydiff;
                cont[2 * n + i] = bspl;
                cont[3 * n + i] = ydiff - hs * k7[i] - bspl;
                cont[4 * n + i] = hs
                    * (lit(D1) * k1[i]
                        + lit(D3) * k3[i]
                        + lit(D4) * k4[i]
                        + lit(D5) * k5[i]
                        + lit(D6) * k6[i]
                        + lit(D7) * k7[i]);
            }
            while next_sample < samples.len() && (samples[next_sample] - tnew) * dir <= T::zero() {
                let ts = samples[next_sample];
                if ts == tnew {
                    on_sample(ts, &ynew)?;
                } else {
                    let theta = (ts - t) / hs;
                    let theta1 = T::one() - theta;
                    for i in 0..n {
                        interp[i] = cont[i]
                            + theta
                                * (cont[n + i]
                                    + theta1
                                        * (cont[2 * n + i]
                                            + theta * (cont[3 * n + i] + theta1 * cont[4 * n + i])));
                    }
                    on_sample(ts, &interp)?;
                }
                next_sample += 1;
            }
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            t = tnew;
            if last {
                break;
            }
            let mut fac = lit(0.9) * err.powf(lit(-0.2));
            fac = fac.min(lit(5.0)).max(lit(0.2));
            if last_rejected {
                fac = fac.min(T::one());
            }
            h = (h * fac).min(hmax);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            let fac = (lit(0.9) * err.powf(lit(-0.2))).max(lit(0.1));
            h = h * fac;
            last_rejected = true;
        }
    }
    // Samples beyond t1 (only possible through rounding) get the end state.
    while next_sample < samples.len() {
        on_sample(samples[next_sample], &y)?;
        next_sample += 1;
    }
    Ok((y, stats))
}

#[allow(clippy::too_many_arguments)]
fn initial_step<T, F>(
    f: &mut F,
    t0: T,
    y0: &[T],
    f0: &[T],
    dir: T,
    hmax: T,
    opts: &OdeOptions<T>,
    stats: &mut OdeStats,
) -> T
where
    T: Real,
    F: FnMut(T, &[T], &mut [T]),
{
    let n = y0.len();
    let nf = T::from_usize_lossy(n.max(1));
    let mut d0 = T::zero();
    let mut d1 = T::zero();
    for i in 0..n {
        let sc = opts.atol + opts.rtol * y0[i].abs();
        d0 += (y0[i] / sc).powi(2);
        d1 += (f0[i] / sc).powi(2);
    }
    d0 = (d0 / nf).sqrt();
    d1 = (d1 / nf).sqrt();
    let mut h0 = if d0 < T::lit(1e-5) || d1 < T::lit(1e-5) {
        T::lit(1e-6)
    } else {
        T::lit(0.01) * d0 / d1
    };
    h0 = h0.min(hmax);
    let y1: Vec<T> = (0..n).map(|i| y0[i] + dir * h0 * f0[i]).collect();
    let mut f1 = vec![T::zero(); n];
    f(t0 + dir * h0, &y1, &mut f1);
    stats.evaluations += 1;
    let mut d2 = T::zero();
    for i in 0..n {
        let sc = opts.atol + opts.rtol * y0[i].abs();
        d2 += ((f1[i] - f0[i]) / sc).powi(2);
    }
    d2 = (d2 / nf).sqrt() / h0;
    let h1 = if d1.max(d2) <= T::lit(1e-15) {
        (h0 * T::lit(1e-3)).max(T::lit(1e-6))
    } else {
        (T::lit(0.01) / d1.max(d2)).powf(T::lit(0.2))
    };
    (T::lit(100.0) * h0).min(h1).min(hmax)
}
