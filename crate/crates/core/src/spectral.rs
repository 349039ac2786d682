//! Instantaneous spectrum of the three-mode RWA Hamiltonian, avoided-crossing
//! location, and coherent single-excitation transfer.
//!
//! Basis order throughout is `(b, c, a)`.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::linalg::{symmetric_eigen, unitary_exp};
use crate::pulses::{detunings, omega_p, PulseSchedule};
use crate::scalar::{c, Cplx, Real};

pub type Matrix3<T> = [[T; 3]; 3];

/// Single-excitation Hamiltonian in the rotating-wave approximation:
/// `[[0, Op/2, 0], [Op/2, dc, Os/2], [0, Os/2, da]]` with `Os = Omega0`.
pub fn rwa_hamiltonian<T: Real>(t: T, s: &PulseSchedule<T>) -> Matrix3<T> {
    let half = T::lit(0.5);
    let (dc, da) = detunings(t, s);
    let p = omega_p(t, s) * half;
    let st = s.omega0 * half;
    let z = T::zero();
    [[z, p, z], [p, dc, st], [z, st, da]]
}

/// Eigenvalues `(S_0, S_+, S_-)` of the Stokes block (pump switched off).
pub fn stokes_eigenvalues<T: Real>(t: T, s: &PulseSchedule<T>) -> (T, T, T) {
    let (dc, da) = detunings(t, s);
    let half = T::lit(0.5);
    let mean = (da + dc) * half;
    let root = ((da - dc) * (da - dc) + s.omega0 * s.omega0).sqrt() * half;
    (T::zero(), mean + root, mean - root)
}

fn flatten<T: Real>(h: &Matrix3<T>) -> [T; 9] {
    [h[0][0], h[0][1], h[0][2], h[1][0], h[1][1], h[1][2], h[2][0], h[2][1], h[2][2]]
}

/// Ascending eigenvalues and eigenvectors (columns) of the RWA Hamiltonian.
pub fn rwa_eigen<T: Real>(t: T, s: &PulseSchedule<T>) -> ([T; 3], [[T; 3]; 3]) {
    let e = symmetric_eigen(&flatten(&rwa_hamiltonian(t, s)), 3);
    let mut vecs = [[T::zero(); 3]; 3];
    for (k, v) in vecs.iter_mut().enumerate() {
        for i in 0..3 {
            v[i] = e.vectors[i * 3 + k];
        }
    }
    ([e.values[0], e.values[1], e.values[2]], vecs)
}

/// Which Stokes eigenvalue crosses zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StokesBranch {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing<T = f64> {
    pub time: T,
    pub branch: StokesBranch,
}

/// Smallest separation between the tracked dark branch and the branch that
/// crosses it, near one Stokes crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap<T = f64> {
    pub crossing: Crossing<T>,
    /// Time of the minimum separation.
    pub location: T,
    pub width: T,
}

/// Sampled spectrum of the RWA Hamiltonian over the schedule domain.
#[derive(Debug, Clone)]
pub struct AdiabaticSpectrum<T = f64> {
    pub times: Vec<T>,
    /// Ascending eigenvalues `(lambda_0, lambda_1, lambda_2)` with the pump on.
    pub eigenvalues: Vec<[T; 3]>,
    /// Eigenvalues tracked by eigenvector continuity. Index 0 continues the
    /// mechanical (dark) state, 1 continues `S_+` and 2 continues `S_-`.
    pub branches: Vec<[T; 3]>,
    /// `(S_0, S_+, S_-)` with the pump off.
    pub stokes: Vec<[T; 3]>,
    pub crossings: Vec<Crossing<T>>,
    pub gaps: Vec<Gap<T>>,
}

impl<T: Real> AdiabaticSpectrum<T> {
    /// The gap with the largest width, i.e. the avoided crossing that drives
    /// the transfer.
    pub fn widest_gap(&self) -> Option<&Gap<T>> {
        self.gaps
            .iter()
            .max_by(|a, b| a.width.partial_cmp(&b.width).unwrap_or(std::cmp::Ordering::Equal))
    }

    pub fn gap_near(&self, t: T) -> Option<&Gap<T>> {
        self.gaps.iter().min_by(|a, b| {
            (a.crossing.time - t)
                .abs()
                .partial_cmp(&(b.crossing.time - t).abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    }
}

fn stokes_value<T: Real>(t: T, s: &PulseSchedule<T>, b: StokesBranch) -> T {
    let (_, plus, minus) = stokes_eigenvalues(t, s);
    match b {
        StokesBranch::Plus => plus,
        StokesBranch::Minus => minus,
    }
}

fn bisect_root<T: Real>(s: &PulseSchedule<T>, b: StokesBranch, mut lo: T, mut hi: T) -> T {
    let target = T::lit(1e-10) * s.omega0.abs();
    let mut flo = stokes_value(lo, s, b);
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        let fm = stokes_value(mid, s, b);
        if fm.abs() <= target || (hi - lo).abs() <= T::epsilon() * mid.abs().max(T::one()) {
            return mid;
        }
        if (fm < T::zero()) == (flo < T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * T::lit(0.5)
}

fn best_assignment<T: Real>(prev: &[[T; 3]; 3], cur: &[[T; 3]; 3]) -> [usize; 3] {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let overlap = |a: &[T; 3], b: &[T; 3]| (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).abs();
    let mut best = PERMS[0];
    let mut best_score = -T::one();
    for p in PERMS {
        let score = overlap(&prev[0], &cur[p[0]]) + overlap(&prev[1], &cur[p[1]]) + overlap(&prev[2], &cur[p[2]]);
        if score > best_score {
            best_score = score;
            best = p;
        }
    }
    best
}

/// Samples the spectrum on `resolution` points over the schedule domain,
/// refines every zero of `S_+` and `S_-` by bisection, and measures the gap
/// the pump opens at each of them.
pub fn find_crossings_and_gap<T: Real>(s: &PulseSchedule<T>, resolution: usize) -> Result<AdiabaticSpectrum<T>> {
    if resolution < 100 {
        return Err(invalid("resolution", format!("need at least 100 samples, got {resolution}")));
    }
    let (lo, hi) = s.domain();
    let dt = (hi - lo) / T::from_usize_lossy(resolution - 1);
    let times: Vec<T> = (0..resolution).map(|k| lo + dt * T::from_usize_lossy(k)).collect();
    let stokes: Vec<[T; 3]> = times
        .iter()
        .map(|&t| {
            let (a, b, c) = stokes_eigenvalues(t, s);
            [a, b, c]
        })
        .collect();

    let mut crossings = Vec::new();
    for k in 0..resolution - 1 {
        for (idx, branch) in [(1, StokesBranch::Plus), (2, StokesBranch::Minus)] {
            let (f0, f1) = (stokes[k][idx], stokes[k + 1][idx]);
            if f0 == T::zero() && f1 == T::zero() {
                continue;
            }
            if (f0 < T::zero()) != (f1 < T::zero()) || (f1 == T::zero() && f0 != T::zero()) {
                crossings.push(Crossing {
                    time: bisect_root(s, branch, times[k], times[k + 1]),
                    branch,
                });
            }
        }
    }
    if crossings.is_empty() {
        return Err(Error::NoGapFound);
    }

    let eig: Vec<([T; 3], [[T; 3]; 3])> = times.par_iter().map(|&t| rwa_eigen(t, s)).collect();
    let eigenvalues: Vec<[T; 3]> = eig.iter().map(|e| e.0).collect();

    // Initial labelling: the dark branch has the largest mechanical weight,
    // S_+ is the upper of the two cavity branches.
    let (vals0, vecs0) = &eig[0];
    let dark = (0..3)
        .max_by(|&i, &j| vecs0[i][0].abs().partial_cmp(&vecs0[j][0].abs()).unwrap())
        .unwrap();
    let others: Vec<usize> = (0..3).filter(|&k| k != dark).collect();
    let (plus, minus) = if vals0[others[0]] >= vals0[others[1]] {
        (others[0], others[1])
    } else {
        (others[1], others[0])
    };
    let mut label = [dark, plus, minus];
    let mut prev = [vecs0[dark], vecs0[plus], vecs0[minus]];
    let mut branches = Vec::with_capacity(resolution);
    let mut ranks = Vec::with_capacity(resolution);
    branches.push([vals0[dark], vals0[plus], vals0[minus]]);
    ranks.push(label);
    for (vals, vecs) in eig.iter().skip(1) {
        label = best_assignment(&prev, vecs);
        for (b, v) in prev.iter_mut().enumerate() {
            let mut nv = vecs[label[b]];
            let dot = nv[0] * v[0] + nv[1] * v[1] + nv[2] * v[2];
            if dot < T::zero() {
                nv = [-nv[0], -nv[1], -nv[2]];
            }
            *v = nv;
        }
        branches.push([vals[label[0]], vals[label[1]], vals[label[2]]]);
        ranks.push(label);
    }

    let mut gaps = Vec::new();
    for cr in &crossings {
        let other = match cr.branch {
            StokesBranch::Plus => 1,
            StokesBranch::Minus => 2,
        };
        let reach = T::lit(3.0) * s.width + T::lit(4.0) * dt;
        let mut best: Option<(usize, T)> = None;
        for (k, &t) in times.iter().enumerate() {
            if (t - cr.time).abs() > reach {
                continue;
            }
            let g = (branches[k][0] - branches[k][other]).abs();
            if best.map_or(true, |(_, bg)| g < bg) {
                best = Some((k, g));
            }
        }
        let (k, g) = match best {
            Some(b) => b,
            None => {
                // Crossing falls between samples further than `reach` from any;
                // fall back to the nearest sample.
                let k = times
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (*a.1 - cr.time).abs().partial_cmp(&(*b.1 - cr.time).abs()).unwrap())
                    .unwrap()
                    .0;
                (k, (branches[k][0] - branches[k][other]).abs())
            }
        };
        let (r1, r2) = (ranks[k][0], ranks[k][other]);
        let sep = |t: T| {
            let (v, _) = rwa_eigen(t, s);
            (v[r1] - v[r2]).abs()
        };
        let a = if k > 0 { times[k - 1] } else { times[k] };
        let b = if k + 1 < resolution { times[k + 1] } else { times[k] };
        let (loc, width) = golden_min(sep, a, b, times[k], g);
        gaps.push(Gap {
            crossing: *cr,
            location: loc,
            width,
        });
    }

    Ok(AdiabaticSpectrum {
        times,
        eigenvalues,
        branches,
        stokes,
        crossings,
        gaps,
    })
}

fn golden_min<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T, x0: T, f0: T) -> (T, T) {
    let r = T::lit(0.618_033_988_749_894_8);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..80 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    let (x, fx) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    if fx <= f0 {
        (x, fx)
    } else {
        (x0, f0)
    }
}

/// Options of the exponential propagator used by [`unitary_transfer`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorOptions<T = f64> {
    /// Local error tolerance per step (step-doubling estimate).
    pub tol: T,
    pub max_step: T,
    pub max_attempts: usize,
    /// Number of evenly spaced output samples, including both end points.
    pub samples: usize,
}

impl<T: Real> Default for PropagatorOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-11),
            max_step: T::lit(2.0),
            max_attempts: 2_000_000,
            samples: 2001,
        }
    }
}

/// Populations of a coherent single-excitation run.
#[derive(Debug, Clone)]
pub struct TransferTrajectory<T = f64> {
    pub times: Vec<T>,
    /// `(|psi_b|^2, |psi_c|^2, |psi_a|^2)` per sample.
    pub populations: Vec<[T; 3]>,
    pub final_state: [Cplx<T>; 3],
    /// Largest deviation of the norm from its initial value over the run.
    pub max_norm_drift: T,
    pub steps: usize,
    pub rejected: usize,
}

fn apply3<T: Real>(u: &[Cplx<T>], psi: &[Cplx<T>; 3]) -> [Cplx<T>; 3] {
    let mut out = [c(T::zero(), T::zero()); 3];
    for (i, o) in out.iter_mut().enumerate() {
        *o = u[i * 3] * psi[0] + u[i * 3 + 1] * psi[1] + u[i * 3 + 2] * psi[2];
    }
    out
}

/// Fourth-order commutator Magnus step `exp(-i K) psi` over `[t, t + h]`.
fn magnus_step<T: Real>(s: &PulseSchedule<T>, t: T, h: T, psi: &[Cplx<T>; 3]) -> [Cplx<T>; 3] {
    let sq3 = T::lit(3.0).sqrt();
    let half = T::lit(0.5);
    let t1 = t + h * (half - sq3 / T::lit(6.0));
    let t2 = t + h * (half + sq3 / T::lit(6.0));
    let h1 = rwa_hamiltonian(t1, s);
    let h2 = rwa_hamiltonian(t2, s);
    let coef = sq3 / T::lit(12.0) * h * h;
    let mut k = [c(T::zero(), T::zero()); 9];
    for i in 0..3 {
        for j in 0..3 {
            // [H2, H1]_ij, real antisymmetric for real symmetric H.
            let mut comm = T::zero();
            for l in 0..3 {
                comm += h2[i][l] * h1[l][j] - h1[i][l] * h2[l][j];
            }
            k[i * 3 + j] = c(half * h * (h1[i][j] + h2[i][j]), -coef * comm);
        }
    }
    apply3(&unitary_exp(&k, 3), psi)
}

/// Integrates `i dpsi/dt = H(t) psi` with the RWA Hamiltonian over the full
/// schedule domain.
///
/// The propagator is a product of exact exponentials, so the norm is
/// preserved to rounding regardless of the step size.
pub fn unitary_transfer<T: Real>(
    s: &PulseSchedule<T>,
    initial: [Cplx<T>; 3],
    opts: &PropagatorOptions<T>,
) -> Result<TransferTrajectory<T>> {
    let norm0: T = initial.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b);
    if (norm0 - T::one()).abs() > T::lit(1e-9) {
        return Err(invalid("initial", format!("state must be normalized, |psi|^2 = {norm0}")));
    }
    if opts.samples < 2 {
        return Err(invalid("samples", "need at least 2 output samples"));
    }
    let (lo, hi) = s.domain();
    let n = opts.samples;
    let times: Vec<T> = (0..n)
        .map(|k| lo + (hi - lo) * T::from_usize_lossy(k) / T::from_usize_lossy(n - 1))
        .collect();
    let pops = |p: &[Cplx<T>; 3]| [p[0].norm_sqr(), p[1].norm_sqr(), p[2].norm_sqr()];

    let mut psi = initial;
    let mut t = lo;
    let mut h = opts.max_step.min(T::lit(0.1));
    let mut populations = vec![pops(&psi)];
    let mut drift = T::zero();
    let (mut steps, mut rejected, mut attempts) = (0usize, 0usize, 0usize);
    for &target in times.iter().skip(1) {
        while t < target {
            attempts += 1;
            if attempts > opts.max_attempts {
                return Err(Error::ToleranceNotMet {
                    t: t.as_f64(),
                    step: h.as_f64(),
                });
            }
            let clipped = target - t < h;
            let hs = if clipped { target - t } else { h };
            let full = magnus_step(s, t, hs, &psi);
            let half = hs * T::lit(0.5);
            let mid = magnus_step(s, t, half, &psi);
            let fine = magnus_step(s, t + half, half, &mid);
            let err = (0..3)
                .map(|i| (full[i] - fine[i]).norm_sqr())
                .fold(T::zero(), |a, b| a + b)
                .sqrt();
            let fac = if err > T::zero() {
                (T::lit(0.9) * (opts.tol / err).powf(T::lit(0.2))).min(T::lit(2.0)).max(T::lit(0.2))
            } else {
                T::lit(2.0)
            };
            if err <= opts.tol {
                psi = fine;
                t = if clipped { target } else { t + hs };
                steps += 1;
                let nrm: T = psi.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b);
                drift = drift.max((nrm - norm0).abs());
                h = if clipped { h.max(hs * fac) } else { hs * fac }.min(opts.max_step);
            } else {
                rejected += 1;
                h = hs * fac;
                if h < T::lit(1e-12) {
                    return Err(Error::ToleranceNotMet {
                        t: t.as_f64(),
                        step: h.as_f64(),
                    });
                }
            }
        }
        populations.push(pops(&psi));
    }
    Ok(TransferTrajectory {
        times,
        populations,
        final_state: psi,
        max_norm_drift: drift,
        steps,
        rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::canonical_schedule;
    use approx::assert_relative_eq;

    #[test]
    fn pump_off_block_structure() {
        let mut s = canonical_schedule(0.3_f64).unwrap();
        let t = -400.0; // pump negligible far before t_c
        let h = rwa_hamiltonian(t, &s);
        assert!(h[0][1] < 1e-100);
        s.omega0 = 0.3;
        let (dc, da) = detunings(t, &s);
        assert_eq!(h[1][1], dc);
        assert_eq!(h[2][2], da);
        assert_eq!(h[1][2], 0.15);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(h[i][j], h[j][i]);
            }
        }
    }

    #[test]
    fn resonant_tridiagonal_spectrum() {
        // delta_a = delta_c = 0 at t = 0; pump at its peak there.
        let mut s = canonical_schedule(0.4_f64).unwrap();
        s.t_c = 0.0;
        let (vals, _) = rwa_eigen(0.0, &s);
        let r = 0.4 / 2f64.sqrt();
        assert_relative_eq!(vals[0], -r, epsilon = 1e-14);
        assert_relative_eq!(vals[1], 0.0, epsilon = 1e-14);
        assert_relative_eq!(vals[2], r, epsilon = 1e-14);
    }

    #[test]
    fn stokes_values() {
        let s = canonical_schedule(0.1_f64).unwrap();
        let (s0, sp, sm) = stokes_eigenvalues(0.0, &s);
        assert_eq!(s0, 0.0);
        assert_relative_eq!(sp, 0.05, epsilon = 1e-15);
        assert_relative_eq!(sm, -0.05, epsilon = 1e-15);

        let (_, sp, sm) = stokes_eigenvalues(-1e5, &s);
        assert!((sp - 19.59).abs() / 19.59 < 0.01, "{sp}");
        assert!((sm - 18.19).abs() / 18.19 < 0.01, "{sm}");

        for t in [-700.0, -100.0, 30.0, 612.0] {
            let (dc, da) = detunings(t, &s);
            let (_, sp, sm) = stokes_eigenvalues(t, &s);
            assert_relative_eq!(sp * sm, da * dc - 0.1 * 0.1 / 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn stokes_matches_pump_free_eigenvalues() {
        let mut s = canonical_schedule(0.9_f64).unwrap();
        s.t_c = 1e6;
        for t in [-200.0, -68.0, -1.0, 40.0, 68.0, 150.0] {
            let (vals, _) = rwa_eigen(t, &s);
            let (_, sp, sm) = stokes_eigenvalues(t, &s);
            let mut want = [0.0, sp, sm];
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for k in 0..3 {
                assert!((vals[k] - want[k]).abs() < 1e-12, "t={t}: {vals:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn crossings_sit_near_plus_minus_tc() {
        let s = canonical_schedule(0.1_f64).unwrap();
        let spec = find_crossings_and_gap(&s, 4000).unwrap();
        assert_eq!(spec.crossings.len(), 2);
        let mut ts: Vec<f64> = spec.crossings.iter().map(|c| c.time).collect();
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ts[0] + 612.26).abs() < 0.05 * 612.26, "{ts:?}");
        assert!((ts[1] - 612.26).abs() < 0.05 * 612.26, "{ts:?}");
        assert!((ts[0] + ts[1]).abs() < 1e-6);
        for c in &spec.crossings {
            assert!(stokes_value(c.time, &s, c.branch).abs() <= 1e-10 * s.omega0 * 1.0001);
        }
        let gap = spec.gap_near(612.26).unwrap();
        assert!(gap.width > 0.0);
        assert_eq!(gap.crossing.branch, StokesBranch::Plus);
        assert!(spec.gap_near(-612.26).unwrap().width < 1e-6);
    }

    #[test]
    fn branches_are_continuous() {
        let s = canonical_schedule(0.9_f64).unwrap();
        let spec = find_crossings_and_gap(&s, 4000).unwrap();
        for k in 1..spec.times.len() {
            let ev = spec.eigenvalues[k];
            let spacing = (ev[1] - ev[0]).max(ev[2] - ev[1]);
            for b in 0..3 {
                let jump = (spec.branches[k][b] - spec.branches[k - 1][b]).abs();
                assert!(jump <= 0.5 * spacing, "branch {b} jumps {jump} at {}", spec.times[k]);
            }
        }
    }

    #[test]
    fn gap_grows_with_coupling() {
        let s1 = canonical_schedule(0.3_f64).unwrap();
        let mut s2 = s1;
        s2.omega0 *= 2.0;
        s2.h_delta /= 2.0; // keep the detuning profile fixed
        let g1 = find_crossings_and_gap(&s1, 4000).unwrap();
        let g2 = find_crossings_and_gap(&s2, 4000).unwrap();
        let w1 = g1.widest_gap().unwrap().width;
        let w2 = g2.widest_gap().unwrap().width;
        assert!(w2 > w1, "{w1} -> {w2}");
    }

    #[test]
    fn too_coarse_resolution_rejected() {
        let s = canonical_schedule(0.1_f64).unwrap();
        assert!(find_crossings_and_gap(&s, 10).is_err());
    }

    #[test]
    fn pump_off_keeps_phonon() {
        let mut s = canonical_schedule(0.9_f64).unwrap();
        s.t_c = 1e7;
        let one = c(1.0, 0.0);
        let z = c(0.0, 0.0);
        let tr = unitary_transfer(&s, [one, z, z], &PropagatorOptions { samples: 101, ..Default::default() }).unwrap();
        for p in &tr.populations {
            assert!((p[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_unnormalized_state() {
        let s = canonical_schedule(0.9_f64).unwrap();
        let z = c(0.0, 0.0);
        assert!(unitary_transfer(&s, [c(2.0, 0.0), z, z], &PropagatorOptions::default()).is_err());
    }
}
