//! Closed equations of motion for the twelve second-order moments of the
//! linearized three-mode system under the Lindblad master equation.
//!
//! The generator is assembled from the first-moment drift matrix `A` of the
//! ladder operators `x = (a, c, b, a+, c+, b+)` and the diffusion matrix `D`:
//!
//! ```text
//! d<x_i x_j>/dt = sum_k A_ik <x_k x_j> + A_jk <x_i x_k> + D_ij
//! D_ij = sum_L gamma_L [L+, x_i][x_j, L]
//! ```
//!
//! Products outside the tracked set are recovered by commutation
//! (`<x_j x_i> = <x_i x_j> - [x_i, x_j]`) or conjugation
//! (`<x_i x_j>* = <x_j+ x_i+>`). Conjugation makes the map real-linear, so a
//! snapshot carries both `M` and a conjugate block `K`:
//! `dm/dt = M m + K conj(m) + v`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::model::SystemParams;
use crate::pulses::Modulation;
use crate::scalar::{c, cis, cr, i_unit, Cplx, Real};

/// Number of tracked moments.
pub const N_MOMENTS: usize = 12;

/// Indices of the tracked moments inside [`MomentState::m`].
pub mod idx {
    pub const AD_A: usize = 0;
    pub const CD_C: usize = 1;
    pub const BD_B: usize = 2;
    pub const AD_C: usize = 3;
    pub const AD_B: usize = 4;
    pub const CD_B: usize = 5;
    pub const C_B: usize = 6;
    pub const AD_CD: usize = 7;
    pub const AD_BD: usize = 8;
    pub const B_B: usize = 9;
    pub const CD_CD: usize = 10;
    pub const AD_AD: usize = 11;
}

/// Human-readable labels in storage order.
pub const MOMENT_LABELS: [&str; N_MOMENTS] = [
    "ad_a", "cd_c", "bd_b", "ad_c", "ad_b", "cd_b", "c_b", "ad_cd", "ad_bd", "b_b", "cd_cd", "ad_ad",
];

// Ladder operator indices.
const A: usize = 0;
const C: usize = 1;
const B: usize = 2;
const AD: usize = 3;
const CD: usize = 4;
const BD: usize = 5;

/// `(left, right)` operator pair of each tracked moment.
const TRACKED: [(usize, usize); N_MOMENTS] = [
    (AD, A),
    (CD, C),
    (BD, B),
    (AD, C),
    (AD, B),
    (CD, B),
    (C, B),
    (AD, CD),
    (AD, BD),
    (B, B),
    (CD, CD),
    (AD, AD),
];

#[inline]
fn dagger(i: usize) -> usize {
    (i + 3) % 6
}

/// c-number `[x_i, x_j]`.
fn commutator(i: usize, j: usize) -> f64 {
    if i % 3 != j % 3 || (i < 3) == (j < 3) {
        0.0
    } else if i < 3 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy)]
struct Source {
    moment: usize,
    conj: bool,
    offset: f64,
}

fn resolve(i: usize, j: usize) -> Source {
    let find = |p: (usize, usize)| TRACKED.iter().position(|&q| q == p);
    if let Some(k) = find((i, j)) {
        return Source { moment: k, conj: false, offset: 0.0 };
    }
    if let Some(k) = find((j, i)) {
        return Source { moment: k, conj: false, offset: commutator(i, j) };
    }
    // <x_i x_j> = conj <x_j+ x_i+>
    let (di, dj) = (dagger(i), dagger(j));
    if let Some(k) = find((dj, di)) {
        return Source { moment: k, conj: true, offset: 0.0 };
    }
    if let Some(k) = find((di, dj)) {
        return Source { moment: k, conj: true, offset: commutator(dj, di) };
    }
    unreachable!("moment <x{i} x{j}> not reachable from the tracked set")
}

fn table() -> &'static [[Source; 6]; 6] {
    static TABLE: OnceLock<[[Source; 6]; 6]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [[Source { moment: 0, conj: false, offset: 0.0 }; 6]; 6];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = resolve(i, j);
            }
        }
        t
    })
}

/// Second-order moments at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentState<T = f64> {
    pub t: T,
    pub m: [Cplx<T>; N_MOMENTS],
}

impl<T: Real> MomentState<T> {
    pub fn vacuum(t: T) -> Self {
        Self {
            t,
            m: [c(T::zero(), T::zero()); N_MOMENTS],
        }
    }

    /// Uncorrelated thermal state with the given occupancies.
    pub fn thermal(t: T, n_a: T, n_c: T, n_b: T) -> Self {
        let mut s = Self::vacuum(t);
        s.m[idx::AD_A] = cr(n_a);
        s.m[idx::CD_C] = cr(n_c);
        s.m[idx::BD_B] = cr(n_b);
        s
    }

    pub fn n_a(&self) -> T {
        self.m[idx::AD_A].re
    }

    pub fn n_c(&self) -> T {
        self.m[idx::CD_C].re
    }

    pub fn n_b(&self) -> T {
        self.m[idx::BD_B].re
    }

    /// Full `6 x 6` matrix `S_ij = <x_i x_j>` with `x = (a, c, b, a+, c+, b+)`.
    pub fn second_moment_matrix(&self) -> [[Cplx<T>; 6]; 6] {
        full_moments(&self.m)
    }

    /// Symmetrized quadrature covariance `sigma_kl = <{R_k, R_l}>/2` with
    /// `R = (q_a, q_c, q_b, p_a, p_c, p_b)`, `q = (x + x+)/sqrt2`,
    /// `p = -i (x - x+)/sqrt2`. Vacuum gives `I / 2`.
    pub fn covariance(&self) -> [[T; 6]; 6] {
        let g = self.quadrature_gram();
        let mut out = [[T::zero(); 6]; 6];
        for k in 0..6 {
            for l in 0..6 {
                out[k][l] = (g[k][l].re + g[l][k].re) * T::lit(0.5);
            }
        }
        out
    }

    /// `G_kl = <R_k R_l> = sigma_kl + (i/2) Omega_kl`, Hermitian and positive
    /// semidefinite for every physical state.
    pub fn quadrature_gram(&self) -> [[Cplx<T>; 6]; 6] {
        let s = self.second_moment_matrix();
        let r = T::one() / T::lit(2.0).sqrt();
        let z = c(T::zero(), T::zero());
        let mut tr = [[z; 6]; 6];
        for j in 0..3 {
            tr[j][j] = cr(r);
            tr[j][j + 3] = cr(r);
            tr[j + 3][j] = c(T::zero(), -r);
            tr[j + 3][j + 3] = c(T::zero(), r);
        }
        let mut ts = [[z; 6]; 6];
        for k in 0..6 {
            for n in 0..6 {
                let mut acc = z;
                for m in 0..6 {
                    acc += tr[k][m] * s[m][n];
                }
                ts[k][n] = acc;
            }
        }
        let mut g = [[z; 6]; 6];
        for k in 0..6 {
            for l in 0..6 {
                let mut acc = z;
                for n in 0..6 {
                    acc += ts[k][n] * tr[l][n];
                }
                g[k][l] = acc;
            }
        }
        g
    }

    /// Smallest eigenvalue of `sigma + (i/2) Omega`; non-negative for any
    /// state allowed by the uncertainty principle.
    pub fn uncertainty_margin(&self) -> T {
        let g = self.quadrature_gram();
        let mut flat = Vec::with_capacity(36);
        for k in 0..6 {
            for l in 0..6 {
                // Symmetrize away rounding in the Hermitian part.
                flat.push((g[k][l] + g[l][k].conj()) * T::lit(0.5));
            }
        }
        hermitian_eigenvalues(&flat, 6)[0]
    }

    /// Checks realness and positivity of the number moments and the
    /// uncertainty relation. Number-moment tolerances scale with the largest
    /// occupancy.
    pub fn check_physical(&self, number_tol: T, uncertainty_tol: T) -> Result<()> {
        let scale = [self.n_a(), self.n_c(), self.n_b()]
            .iter()
            .fold(T::one(), |acc, v| acc.max(v.abs()));
        for (k, name) in [(idx::AD_A, "N_a"), (idx::CD_C, "N_c"), (idx::BD_B, "N_b")] {
            let z = self.m[k];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(self.unphysical(format!("{name} is not finite")));
            }
            if z.im.abs() > number_tol * scale {
                return Err(self.unphysical(format!("{name} has imaginary part {}", z.im)));
            }
            if z.re < -number_tol * scale {
                return Err(self.unphysical(format!("{name} = {} is negative", z.re)));
            }
        }
        let margin = self.uncertainty_margin();
        if margin < -uncertainty_tol * scale {
            return Err(self.unphysical(format!("uncertainty relation violated, min eigenvalue {margin}")));
        }
        Ok(())
    }

    fn unphysical(&self, reason: String) -> Error {
        Error::UnphysicalState {
            t: self.t.as_f64(),
            reason,
        }
    }

    pub(crate) fn to_real(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(2 * N_MOMENTS);
        for z in &self.m {
            v.push(z.re);
            v.push(z.im);
        }
        v
    }

    pub(crate) fn from_real(t: T, y: &[T]) -> Self {
        let mut m = [c(T::zero(), T::zero()); N_MOMENTS];
        for (k, z) in m.iter_mut().enumerate() {
            *z = c(y[2 * k], y[2 * k + 1]);
        }
        Self { t, m }
    }
}

/// Default tolerances of [`MomentState::check_physical`] and [`occupancies`].
pub const NUMBER_TOL: f64 = 1e-7;
pub const UNCERTAINTY_TOL: f64 = 1e-6;

/// `(N_a, N_c, N_b)`.
pub fn occupancies<T: Real>(m: &MomentState<T>) -> Result<(T, T, T)> {
    m.check_physical(T::lit(NUMBER_TOL), T::lit(UNCERTAINTY_TOL))?;
    Ok((m.n_a(), m.n_c(), m.n_b()))
}

fn full_moments<T: Real>(m: &[Cplx<T>; N_MOMENTS]) -> [[Cplx<T>; 6]; 6] {
    let tab = table();
    let mut s = [[c(T::zero(), T::zero()); 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            let src = tab[i][j];
            let mut v = m[src.moment];
            if src.conj {
                v = v.conj();
            }
            s[i][j] = v + T::lit(src.offset);
        }
    }
    s
}

/// Instantaneous control values entering the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings<T = f64> {
    pub delta_a: T,
    pub delta_c: T,
    /// Linearized optomechanical coupling `G_cb`.
    pub g_cb: T,
    pub g_ca: T,
    /// Time entering the counter-rotating phases `exp(+-2 i omega_b t)`.
    pub phase_time: T,
}

impl<T: Real> Couplings<T> {
    /// Controls of `modulation` at `t`, with the Stokes coupling taken from
    /// the system parameters.
    pub fn at<M: Modulation<T> + ?Sized>(t: T, modulation: &M, p: &SystemParams<T>) -> Self {
        let (delta_c, delta_a) = modulation.detunings(t);
        Self {
            delta_a,
            delta_c,
            g_cb: modulation.pump(t) * T::lit(0.5),
            g_ca: p.g_ca,
            phase_time: t,
        }
    }
}

/// Drift matrix `A` of the ladder operators: `d<x>/dt = A <x>`.
pub fn drift_matrix<T: Real>(k: &Couplings<T>, p: &SystemParams<T>, counter_rotating: bool) -> [[Cplx<T>; 6]; 6] {
    let i = i_unit::<T>();
    let half = T::lit(0.5);
    let z = c(T::zero(), T::zero());
    let mut a = [[z; 6]; 6];
    let g = k.g_ca;
    let gm = k.g_cb;

    a[A][A] = -i * k.delta_a - p.kappa_a * half;
    a[A][C] = -i * g;
    a[C][C] = -i * k.delta_c - p.kappa_c * half;
    a[C][A] = -i * g;
    a[C][B] = -i * gm;
    a[B][B] = cr(-p.kappa_b * half);
    a[B][C] = -i * gm;

    if counter_rotating {
        // H_cr = G (exp(2i w t) c b + exp(-2i w t) c+ b+)
        let phase = cis(-T::lit(2.0) * p.omega_b * k.phase_time);
        a[C][BD] = -i * gm * phase;
        a[B][CD] = -i * gm * phase;
    }
    // Creation operators follow by conjugation.
    for r in 0..3 {
        for col in 0..6 {
            a[dagger(r)][dagger(col)] = a[r][col].conj();
        }
    }
    a
}

/// Diffusion matrix `D_ij = sum_L gamma_L [L+, x_i][x_j, L]`.
pub fn diffusion_matrix<T: Real>(p: &SystemParams<T>) -> [[T; 6]; 6] {
    let mut d = [[T::zero(); 6]; 6];
    for (mode, kappa, nbar) in [(A, p.kappa_a, p.nbar_a), (C, p.kappa_c, p.nbar_c), (B, p.kappa_b, p.nbar_b)] {
        d[mode][dagger(mode)] = kappa * (nbar + T::one());
        d[dagger(mode)][mode] = kappa * nbar;
    }
    d
}

/// `dm/dt` for the given controls.
pub fn moment_derivative<T: Real>(
    m: &[Cplx<T>; N_MOMENTS],
    k: &Couplings<T>,
    p: &SystemParams<T>,
    counter_rotating: bool,
) -> [Cplx<T>; N_MOMENTS] {
    let a = drift_matrix(k, p, counter_rotating);
    let d = diffusion_matrix(p);
    derivative_with(m, &a, &d)
}

fn derivative_with<T: Real>(m: &[Cplx<T>; N_MOMENTS], a: &[[Cplx<T>; 6]; 6], d: &[[T; 6]; 6]) -> [Cplx<T>; N_MOMENTS] {
    let s = full_moments(m);
    let mut out = [c(T::zero(), T::zero()); N_MOMENTS];
    for (o, &(i, j)) in out.iter_mut().zip(TRACKED.iter()) {
        let mut acc = cr(d[i][j]);
        for k in 0..6 {
            acc += a[i][k] * s[k][j] + a[j][k] * s[i][k];
        }
        *o = acc;
    }
    out
}

/// Affine generator `dm/dt = M m + K conj(m) + v` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSnapshot<T = f64> {
    pub m: [[Cplx<T>; N_MOMENTS]; N_MOMENTS],
    pub k: [[Cplx<T>; N_MOMENTS]; N_MOMENTS],
    pub v: [Cplx<T>; N_MOMENTS],
}

impl<T: Real> GeneratorSnapshot<T> {
    pub fn apply(&self, x: &[Cplx<T>; N_MOMENTS]) -> [Cplx<T>; N_MOMENTS] {
        let mut out = self.v;
        for r in 0..N_MOMENTS {
            for col in 0..N_MOMENTS {
                out[r] += self.m[r][col] * x[col] + self.k[r][col] * x[col].conj();
            }
        }
        out
    }

    /// True when the conjugate block vanishes identically.
    pub fn is_complex_linear(&self) -> bool {
        self.k.iter().flatten().all(|z| *z == c(T::zero(), T::zero()))
    }
}

/// Generator from explicit controls.
pub fn generator_from<T: Real>(k: &Couplings<T>, p: &SystemParams<T>, counter_rotating: bool) -> GeneratorSnapshot<T> {
    let a = drift_matrix(k, p, counter_rotating);
    let d = diffusion_matrix(p);
    let z = c(T::zero(), T::zero());
    let zero = [z; N_MOMENTS];
    let v = derivative_with(&zero, &a, &d);
    // Probe the linear part with the diffusion switched off; commutator
    // offsets still leave an affine remainder that is subtracted explicitly.
    let no_diffusion = [[T::zero(); 6]; 6];
    let offset = derivative_with(&zero, &a, &no_diffusion);
    let mut gm = [[z; N_MOMENTS]; N_MOMENTS];
    let mut gk = [[z; N_MOMENTS]; N_MOMENTS];
    let half = T::lit(0.5);
    let i = i_unit::<T>();
    for col in 0..N_MOMENTS {
        let mut e = zero;
        e[col] = cr(T::one());
        let lr = derivative_with(&e, &a, &no_diffusion);
        e[col] = i;
        let li = derivative_with(&e, &a, &no_diffusion);
        for r in 0..N_MOMENTS {
            // L(e) = M + K, L(i e) = i (M - K)
            let (lr, li) = (lr[r] - offset[r], li[r] - offset[r]);
            gm[r][col] = (lr - i * li) * half;
            gk[r][col] = (lr + i * li) * half;
        }
    }
    GeneratorSnapshot { m: gm, k: gk, v }
}

/// Generator at schedule time `t`.
pub fn build_generator<T: Real, M: Modulation<T> + ?Sized>(
    t: T,
    modulation: &M,
    p: &SystemParams<T>,
    include_counter_rotating: bool,
) -> GeneratorSnapshot<T> {
    generator_from(&Couplings::at(t, modulation, p), p, include_counter_rotating)
}
