//! Brute-force master-equation integrator on a truncated Fock space.
//!
//! Serves as ground truth for the moment equations at small occupancy. The
//! three modes are ordered `(a, c, b)` in the Kronecker product, so the basis
//! index of `|n_a, n_c, n_b>` is `(n_a * (N_c + 1) + n_c) * (N_b + 1) + n_b`.

use crate::error::{invalid, Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::model::SystemParams;
use crate::moments::{idx, Couplings, MomentState, N_MOMENTS};
use crate::ode::{self, OdeOptions, OdeStats};
use crate::pulses::Modulation;
use crate::scalar::{c, cis, Cplx, Real};

/// Largest Hilbert-space dimension the oracle accepts.
pub const MAX_DIMENSION: usize = 4096;

/// Per-mode Fock cutoffs (highest retained number state).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockConfig {
    pub n_max_a: usize,
    pub n_max_c: usize,
    pub n_max_b: usize,
}

impl Default for FockConfig {
    fn default() -> Self {
        Self::uniform(4)
    }
}

impl FockConfig {
    pub fn new(n_max_a: usize, n_max_c: usize, n_max_b: usize) -> Result<Self> {
        let f = Self { n_max_a, n_max_c, n_max_b };
        f.validate()?;
        Ok(f)
    }

    pub fn uniform(n_max: usize) -> Self {
        Self {
            n_max_a: n_max,
            n_max_c: n_max,
            n_max_b: n_max,
        }
    }

    pub fn dimension(&self) -> usize {
        (self.n_max_a + 1)
            .saturating_mul(self.n_max_c + 1)
            .saturating_mul(self.n_max_b + 1)
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dimension();
        if dim > MAX_DIMENSION {
            return Err(Error::DimensionGuard { dim, max: MAX_DIMENSION });
        }
        Ok(())
    }

    fn levels(&self) -> [usize; 3] {
        [self.n_max_a + 1, self.n_max_c + 1, self.n_max_b + 1]
    }

    pub fn index(&self, n: [usize; 3]) -> usize {
        let [_, lc, lb] = self.levels();
        (n[0] * lc + n[1]) * lb + n[2]
    }

    pub fn numbers(&self, k: usize) -> [usize; 3] {
        let [_, lc, lb] = self.levels();
        [k / (lc * lb), (k / lb) % lc, k % lb]
    }
}

/// Mode labels in Kronecker order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    A = 0,
    C = 1,
    B = 2,
}

impl Mode {
    pub fn letter(self) -> char {
        ['a', 'c', 'b'][self as usize]
    }
}

/// Sparse complex matrix as a list of `(row, col, value)` triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp<T> {
    pub dim: usize,
    pub entries: Vec<(usize, usize, Cplx<T>)>,
}

impl<T: Real> SparseOp<T> {
    pub fn zero(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    /// Annihilation operator of `mode`.
    pub fn lowering(f: &FockConfig, mode: Mode) -> Self {
        let dim = f.dimension();
        let mut entries = Vec::new();
        for k in 0..dim {
            let mut n = f.numbers(k);
            let nm = n[mode as usize];
            if nm > 0 {
                n[mode as usize] = nm - 1;
                let amp = T::from_usize_lossy(nm).sqrt();
                entries.push((f.index(n), k, c(amp, T::zero())));
            }
        }
        Self { dim, entries }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: (0..dim).map(|k| (k, k, c(T::one(), T::zero()))).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&(r, col, v)| (col, r, v.conj())).collect(),
        }
    }

    pub fn scaled(&self, s: Cplx<T>) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&(r, col, v)| (r, col, v * s)).collect(),
        }
    }

    pub fn extend(&mut self, other: &Self) {
        self.entries.extend_from_slice(&other.entries);
    }

    pub fn to_dense(&self) -> Vec<Cplx<T>> {
        let mut m = vec![c(T::zero(), T::zero()); self.dim * self.dim];
        for &(r, col, v) in &self.entries {
            m[r * self.dim + col] += v;
        }
        m
    }

    /// Matrix product, with duplicate entries merged.
    pub fn mul(&self, other: &Self) -> Self {
        let d = self.dim;
        let mut acc = std::collections::BTreeMap::new();
        let mut by_row: Vec<Vec<(usize, Cplx<T>)>> = vec![Vec::new(); d];
        for &(r, col, v) in &other.entries {
            by_row[r].push((col, v));
        }
        for &(r, k, v) in &self.entries {
            for &(col, w) in &by_row[k] {
                *acc.entry((r, col)).or_insert(c(T::zero(), T::zero())) += v * w;
            }
        }
        Self {
            dim: d,
            entries: acc.into_iter().map(|((r, col), v)| (r, col, v)).collect(),
        }
    }

    /// `out += self * rho` for a dense row-major `rho`.
    fn left_mul_add(&self, rho: &[Cplx<T>], s: Cplx<T>, out: &mut [Cplx<T>]) {
        let d = self.dim;
        for &(r, k, v) in &self.entries {
            let f = v * s;
            let (dst, src) = (r * d, k * d);
            for j in 0..d {
                out[dst + j] += f * rho[src + j];
            }
        }
    }

    /// `out += rho * self`.
    fn right_mul_add(&self, rho: &[Cplx<T>], s: Cplx<T>, out: &mut [Cplx<T>]) {
        let d = self.dim;
        for &(k, col, v) in &self.entries {
            let f = v * s;
            for i in 0..d {
                out[i * d + col] += rho[i * d + k] * f;
            }
        }
    }

    /// `tr(rho * self)`.
    pub fn expectation(&self, rho: &[Cplx<T>]) -> Cplx<T> {
        let d = self.dim;
        self.entries
            .iter()
            .fold(c(T::zero(), T::zero()), |acc, &(r, col, v)| acc + rho[col * d + r] * v)
    }
}

/// Dense density matrix on a truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState<T = f64> {
    pub t: T,
    pub config: FockConfig,
    /// Row-major, `dim x dim`.
    pub rho: Vec<Cplx<T>>,
}

pub const TRACE_TOL: f64 = 1e-8;
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-7;
/// Top-level population above which a run is aborted.
pub const LEAK_TOL: f64 = 1e-4;

fn thermal_weights<T: Real>(n: T, levels: usize) -> Vec<T> {
    if n <= T::zero() {
        let mut w = vec![T::zero(); levels];
        w[0] = T::one();
        return w;
    }
    let q = n / (n + T::one());
    let mut w: Vec<T> = (0..levels).map(|k| q.powi(k as i32)).collect();
    let s: T = w.iter().fold(T::zero(), |a, &b| a + b);
    w.iter_mut().for_each(|x| *x /= s);
    w
}

impl<T: Real> DensityState<T> {
    pub fn dim(&self) -> usize {
        self.config.dimension()
    }

    pub fn vacuum(config: FockConfig, t: T) -> Result<Self> {
        Self::fock(config, t, [0, 0, 0])
    }

    pub fn fock(config: FockConfig, t: T, n: [usize; 3]) -> Result<Self> {
        config.validate()?;
        if n.iter().zip(config.levels()).any(|(&k, l)| k >= l) {
            return Err(invalid("fock", "number state above the cutoff"));
        }
        let d = config.dimension();
        let mut rho = vec![c(T::zero(), T::zero()); d * d];
        let k = config.index(n);
        rho[k * d + k] = c(T::one(), T::zero());
        Ok(Self { t, config, rho })
    }

    /// Normalized pure state `|psi><psi|`.
    pub fn pure(config: FockConfig, t: T, psi: &[Cplx<T>]) -> Result<Self> {
        config.validate()?;
        let d = config.dimension();
        if psi.len() != d {
            return Err(invalid("psi", format!("expected length {d}, got {}", psi.len())));
        }
        let norm = psi.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
        if !(norm > T::zero()) {
            return Err(invalid("psi", "zero vector"));
        }
        let mut rho = vec![c(T::zero(), T::zero()); d * d];
        for i in 0..d {
            for j in 0..d {
                rho[i * d + j] = psi[i] * psi[j].conj() / norm;
            }
        }
        Ok(Self { t, config, rho })
    }

    /// Product of truncated thermal states, renormalized on the cutoff.
    pub fn thermal(config: FockConfig, t: T, n_a: T, n_c: T, n_b: T) -> Result<Self> {
        config.validate()?;
        let [la, lc, lb] = config.levels();
        let (wa, wc, wb) = (thermal_weights(n_a, la), thermal_weights(n_c, lc), thermal_weights(n_b, lb));
        let d = config.dimension();
        let mut rho = vec![c(T::zero(), T::zero()); d * d];
        for k in 0..d {
            let [ia, ic, ib] = config.numbers(k);
            rho[k * d + k] = c(wa[ia] * wc[ic] * wb[ib], T::zero());
        }
        Ok(Self { t, config, rho })
    }

    /// Convex combination `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &Self, w: T) -> Result<Self> {
        if self.config != other.config {
            return Err(invalid("mix", "Fock configurations differ"));
        }
        if !(w >= T::zero() && w <= T::one()) {
            return Err(invalid("mix", "weight must lie in [0, 1]"));
        }
        let rho = self
            .rho
            .iter()
            .zip(&other.rho)
            .map(|(a, b)| *a * w + *b * (T::one() - w))
            .collect();
        Ok(Self { t: self.t, config: self.config, rho })
    }

    pub fn trace(&self) -> Cplx<T> {
        let d = self.dim();
        (0..d).fold(c(T::zero(), T::zero()), |a, k| a + self.rho[k * d + k])
    }

    /// Largest `|rho_ij - conj(rho_ji)|`.
    pub fn hermiticity_error(&self) -> T {
        let d = self.dim();
        let mut e = T::zero();
        for i in 0..d {
            for j in i..d {
                e = e.max((self.rho[i * d + j] - self.rho[j * d + i].conj()).norm());
            }
        }
        e
    }

    pub fn min_eigenvalue(&self) -> T {
        let d = self.dim();
        let mut h = self.rho.clone();
        for i in 0..d {
            for j in i..d {
                let avg = (h[i * d + j] + h[j * d + i].conj()) * T::lit(0.5);
                h[i * d + j] = avg;
                h[j * d + i] = avg.conj();
            }
        }
        hermitian_eigenvalues(&h, d)[0]
    }

    /// Checks trace, Hermiticity and positivity.
    pub fn check(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - c(T::one(), T::zero())).norm() > T::lit(TRACE_TOL) {
            return Err(self.unphysical(format!("trace {tr}")));
        }
        let h = self.hermiticity_error();
        if h > T::lit(HERMITICITY_TOL) {
            return Err(self.unphysical(format!("hermiticity error {h}")));
        }
        let e = self.min_eigenvalue();
        if e < -T::lit(POSITIVITY_TOL) {
            return Err(self.unphysical(format!("minimum eigenvalue {e}")));
        }
        Ok(())
    }

    fn unphysical(&self, reason: String) -> Error {
        Error::UnphysicalState {
            t: self.t.as_f64(),
            reason,
        }
    }

    /// Population of the highest retained Fock level of each mode; zero for
    /// modes truncated to the vacuum.
    pub fn top_populations(&self) -> [T; 3] {
        let d = self.dim();
        let levels = self.config.levels();
        let mut p = [T::zero(); 3];
        for k in 0..d {
            let n = self.config.numbers(k);
            for m in 0..3 {
                if levels[m] > 1 && n[m] + 1 == levels[m] {
                    p[m] += self.rho[k * d + k].re;
                }
            }
        }
        p
    }

    /// The twelve second moments of the state.
    pub fn moments(&self) -> MomentState<T> {
        MomentExtractor::new(&self.config).extract(self.t, &self.rho)
    }
}

struct MomentExtractor<T> {
    products: Vec<(usize, SparseOp<T>)>,
}

impl<T: Real> MomentExtractor<T> {
    fn new(f: &FockConfig) -> Self {
        let a = SparseOp::lowering(f, Mode::A);
        let cc = SparseOp::lowering(f, Mode::C);
        let b = SparseOp::lowering(f, Mode::B);
        let (ad, cd, bd) = (a.adjoint(), cc.adjoint(), b.adjoint());
        let products = vec![
            (idx::AD_A, ad.mul(&a)),
            (idx::CD_C, cd.mul(&cc)),
            (idx::BD_B, bd.mul(&b)),
            (idx::AD_C, ad.mul(&cc)),
            (idx::AD_B, ad.mul(&b)),
            (idx::CD_B, cd.mul(&b)),
            (idx::C_B, cc.mul(&b)),
            (idx::AD_CD, ad.mul(&cd)),
            (idx::AD_BD, ad.mul(&bd)),
            (idx::B_B, b.mul(&b)),
            (idx::CD_CD, cd.mul(&cd)),
            (idx::AD_AD, ad.mul(&ad)),
        ];
        Self { products }
    }

    fn extract(&self, t: T, rho: &[Cplx<T>]) -> MomentState<T> {
        let mut m = [c(T::zero(), T::zero()); N_MOMENTS];
        for (k, op) in &self.products {
            m[*k] = op.expectation(rho);
        }
        MomentState { t, m }
    }
}

/// Ladder operators of the truncated space.
#[derive(Debug, Clone)]
pub struct Ladders<T> {
    pub a: SparseOp<T>,
    pub c: SparseOp<T>,
    pub b: SparseOp<T>,
}

impl<T: Real> Ladders<T> {
    pub fn new(f: &FockConfig) -> Self {
        Self {
            a: SparseOp::lowering(f, Mode::A),
            c: SparseOp::lowering(f, Mode::C),
            b: SparseOp::lowering(f, Mode::B),
        }
    }
}

/// Lindblad generator at a fixed time, applied matrix-free.
///
/// `drho/dt = -i[H, rho] + sum_L (L rho L+ - {L+ L, rho} / 2)` with
///
/// ```text
/// H = d_a a+a + d_c c+c + G (c+b + c b+) + g (c+a + c a+)
///   + G (exp(2i w t) c b + exp(-2i w t) c+ b+)
/// ```
///
/// and jump operators `sqrt(k (n+1)) x`, `sqrt(k n) x+` for each mode.
#[derive(Debug, Clone)]
pub struct Liouvillian<T> {
    pub dim: usize,
    pub hamiltonian: SparseOp<T>,
    pub jumps: Vec<SparseOp<T>>,
    /// `sum_L L+ L`.
    pub decay: SparseOp<T>,
}

impl<T: Real> Liouvillian<T> {
    pub fn apply(&self, rho: &[Cplx<T>], out: &mut [Cplx<T>]) {
        let zero = c(T::zero(), T::zero());
        out.iter_mut().for_each(|z| *z = zero);
        let mi = c(T::zero(), -T::one());
        self.hamiltonian.left_mul_add(rho, mi, out);
        self.hamiltonian.right_mul_add(rho, -mi, out);
        let mut tmp = vec![zero; self.dim * self.dim];
        dissipate(&self.jumps, &self.decay, self.dim, rho, out, &mut tmp);
    }

    /// Dense `dim^2 x dim^2` superoperator acting on row-major `vec(rho)`.
    pub fn to_dense(&self) -> Vec<Cplx<T>> {
        let n = self.dim * self.dim;
        let zero = c(T::zero(), T::zero());
        let mut m = vec![zero; n * n];
        let mut e = vec![zero; n];
        let mut col = vec![zero; n];
        for k in 0..n {
            e[k] = c(T::one(), T::zero());
            self.apply(&e, &mut col);
            for r in 0..n {
                m[r * n + k] = col[r];
            }
            e[k] = zero;
        }
        m
    }
}

/// Time-independent operator pieces of the generator.
#[derive(Debug, Clone)]
struct OperatorSet<T> {
    dim: usize,
    num_a: SparseOp<T>,
    num_c: SparseOp<T>,
    beam: SparseOp<T>,
    stokes: SparseOp<T>,
    pair_down: SparseOp<T>,
    pair_up: SparseOp<T>,
    jumps: Vec<SparseOp<T>>,
    decay: SparseOp<T>,
}

impl<T: Real> OperatorSet<T> {
    fn new(f: &FockConfig, p: &SystemParams<T>) -> Self {
        let ops = Ladders::new(f);
        let dim = ops.a.dim;
        let one = c(T::one(), T::zero());
        let (ad, cd, bd) = (ops.a.adjoint(), ops.c.adjoint(), ops.b.adjoint());
        let mut beam = cd.mul(&ops.b);
        beam.extend(&ops.c.mul(&bd));
        let mut stokes = cd.mul(&ops.a);
        stokes.extend(&ops.c.mul(&ad));
        let mut jumps = Vec::new();
        let mut decay = SparseOp::zero(dim);
        for (x, kappa, nbar) in [(&ops.a, p.kappa_a, p.nbar_a), (&ops.c, p.kappa_c, p.nbar_c), (&ops.b, p.kappa_b, p.nbar_b)] {
            for (op, rate) in [(x.clone(), kappa * (nbar + T::one())), (x.adjoint(), kappa * nbar)] {
                if rate > T::zero() {
                    let l = op.scaled(one * rate.sqrt());
                    decay.extend(&l.adjoint().mul(&l));
                    jumps.push(l);
                }
            }
        }
        Self {
            dim,
            num_a: ad.mul(&ops.a),
            num_c: cd.mul(&ops.c),
            beam,
            stokes,
            pair_down: ops.c.mul(&ops.b),
            pair_up: cd.mul(&bd),
            jumps,
            decay: decay.mul(&SparseOp::identity(dim)),
        }
    }

    fn hamiltonian_terms(&self, k: &Couplings<T>, p: &SystemParams<T>, counter_rotating: bool) -> Vec<(&SparseOp<T>, Cplx<T>)> {
        let one = c(T::one(), T::zero());
        let mut terms = vec![
            (&self.num_a, one * k.delta_a),
            (&self.num_c, one * k.delta_c),
            (&self.beam, one * k.g_cb),
            (&self.stokes, one * k.g_ca),
        ];
        if counter_rotating {
            let phase = cis(T::lit(2.0) * p.omega_b * k.phase_time);
            terms.push((&self.pair_down, phase * k.g_cb));
            terms.push((&self.pair_up, phase.conj() * k.g_cb));
        }
        terms
    }

    fn hamiltonian(&self, k: &Couplings<T>, p: &SystemParams<T>, counter_rotating: bool) -> SparseOp<T> {
        let mut h = SparseOp::zero(self.dim);
        for (op, s) in self.hamiltonian_terms(k, p, counter_rotating) {
            h.extend(&op.scaled(s));
        }
        h.mul(&SparseOp::identity(self.dim))
    }

    /// `out = L(rho)` without materializing the Hamiltonian.
    fn apply(
        &self,
        k: &Couplings<T>,
        p: &SystemParams<T>,
        counter_rotating: bool,
        rho: &[Cplx<T>],
        out: &mut [Cplx<T>],
        tmp: &mut [Cplx<T>],
    ) {
        let zero = c(T::zero(), T::zero());
        out.iter_mut().for_each(|z| *z = zero);
        let mi = c(T::zero(), -T::one());
        for (op, s) in self.hamiltonian_terms(k, p, counter_rotating) {
            if s != zero {
                op.left_mul_add(rho, mi * s, out);
                op.right_mul_add(rho, -(mi * s), out);
            }
        }
        dissipate(&self.jumps, &self.decay, self.dim, rho, out, tmp);
    }
}

fn dissipate<T: Real>(jumps: &[SparseOp<T>], decay: &SparseOp<T>, d: usize, rho: &[Cplx<T>], out: &mut [Cplx<T>], tmp: &mut [Cplx<T>]) {
    let zero = c(T::zero(), T::zero());
    let mhalf = c(-T::lit(0.5), T::zero());
    decay.left_mul_add(rho, mhalf, out);
    decay.right_mul_add(rho, mhalf, out);
    let one = c(T::one(), T::zero());
    for l in jumps {
        tmp.iter_mut().for_each(|z| *z = zero);
        l.left_mul_add(rho, one, tmp);
        // (L rho) L+: column r of L+ is the conjugate of row r of L.
        for &(r, col, v) in &l.entries {
            let f = v.conj();
            for i in 0..d {
                out[i * d + r] += tmp[i * d + col] * f;
            }
        }
    }
}

/// Generator of the master equation at time `t`.
pub fn build_liouvillian<T: Real, M: Modulation<T> + ?Sized>(
    t: T,
    modulation: &M,
    p: &SystemParams<T>,
    f: &FockConfig,
    include_counter_rotating: bool,
) -> Result<Liouvillian<T>> {
    f.validate()?;
    p.validate()?;
    let k = Couplings::at(t, modulation, p);
    let set = OperatorSet::new(f, p);
    Ok(Liouvillian {
        dim: set.dim,
        hamiltonian: set.hamiltonian(&k, p, include_counter_rotating),
        jumps: set.jumps,
        decay: set.decay,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions<T = f64> {
    pub rtol: T,
    pub atol: T,
    pub counter_rotating: bool,
    /// Step cap; defaults as in the moment integrator.
    pub max_step: Option<T>,
    pub sample_dt: T,
    pub leak_tol: T,
}

impl<T: Real> Default for OracleOptions<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-8),
            atol: T::lit(1e-10),
            counter_rotating: true,
            max_step: None,
            sample_dt: T::lit(0.5),
            leak_tol: T::lit(LEAK_TOL),
        }
    }
}

impl<T: Real> OracleOptions<T> {
    pub fn rwa_only(mut self) -> Self {
        self.counter_rotating = false;
        self
    }
}

/// Moments extracted from a density-matrix run.
#[derive(Debug, Clone)]
pub struct OracleTrajectory<T = f64> {
    pub samples: Vec<MomentState<T>>,
    pub traces: Vec<T>,
    pub max_hermiticity_error: T,
    /// Largest top-level population seen per mode `(a, c, b)`.
    pub max_top_population: [T; 3],
    pub final_state: DensityState<T>,
    pub stats: OdeStats,
}

/// Integrates the master equation and records the twelve second moments.
pub fn evolve_density<T: Real, M: Modulation<T> + ?Sized>(
    initial: &DensityState<T>,
    modulation: &M,
    p: &SystemParams<T>,
    t_span: (T, T),
    opts: &OracleOptions<T>,
) -> Result<OracleTrajectory<T>> {
    initial.config.validate()?;
    p.validate()?;
    let (t0, t1) = t_span;
    if !(t0 != t1) || !t0.is_finite() || !t1.is_finite() {
        return Err(invalid("t_span", "interval must be finite and non-empty"));
    }
    if !(opts.rtol > T::zero()) || !(opts.atol > T::zero()) || !(opts.sample_dt > T::zero()) {
        return Err(invalid("oracle options", "tolerances and sample spacing must be positive"));
    }
    let mut start = initial.clone();
    start.t = t0;
    start.check()?;

    let f = initial.config;
    let d = f.dimension();
    let set = OperatorSet::new(&f, p);
    let extractor = MomentExtractor::new(&f);
    let zero = c(T::zero(), T::zero());
    let mut rho = vec![zero; d * d];
    let mut drho = vec![zero; d * d];
    let mut tmp = vec![zero; d * d];
    let rhs = |t: T, y: &[T], dy: &mut [T]| {
        for (k, z) in rho.iter_mut().enumerate() {
            *z = Cplx::new(y[2 * k], y[2 * k + 1]);
        }
        let k = Couplings::at(t, modulation, p);
        set.apply(&k, p, opts.counter_rotating, &rho, &mut drho, &mut tmp);
        for (k, z) in drho.iter().enumerate() {
            dy[2 * k] = z.re;
            dy[2 * k + 1] = z.im;
        }
    };

    let y0: Vec<T> = start.rho.iter().flat_map(|z| [z.re, z.im]).collect();
    let n = ((t1 - t0).abs() / opts.sample_dt).ceil().to_usize().unwrap_or(1).max(1);
    let grid: Vec<T> = (0..=n)
        .map(|k| t0 + (t1 - t0) * T::from_usize_lossy(k) / T::from_usize_lossy(n))
        .collect();
    let cap = opts.max_step.or_else(|| {
        opts.counter_rotating
            .then(|| T::PI() / (T::lit(20.0) * p.omega_b))
    });
    let ode_opts = OdeOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        max_step: cap,
        ..OdeOptions::default()
    };

    let mut samples = Vec::with_capacity(grid.len());
    let mut traces = Vec::with_capacity(grid.len());
    let mut herm = T::zero();
    let mut top = [T::zero(); 3];
    let mut state = DensityState {
        t: t0,
        config: f,
        rho: vec![zero; d * d],
    };
    let (end, stats) = ode::integrate(rhs, t0, &y0, t1, &grid, &ode_opts, |t, y| {
        state.t = t;
        for (k, z) in state.rho.iter_mut().enumerate() {
            *z = Cplx::new(y[2 * k], y[2 * k + 1]);
        }
        let pops = state.top_populations();
        for m in 0..3 {
            top[m] = top[m].max(pops[m]);
            if pops[m] > opts.leak_tol {
                return Err(Error::TruncationLeak {
                    mode: [Mode::A, Mode::C, Mode::B][m].letter(),
                    population: pops[m].as_f64(),
                    t: t.as_f64(),
                });
            }
        }
        let tr = state.trace();
        if (tr - c(T::one(), T::zero())).norm() > T::lit(TRACE_TOL) {
            return Err(state.unphysical(format!("trace {tr}")));
        }
        herm = herm.max(state.hermiticity_error());
        traces.push(tr.re);
        samples.push(extractor.extract(t, &state.rho));
        Ok(())
    })?;
    let final_state = DensityState {
        t: t1,
        config: f,
        rho: end.chunks(2).map(|z| Cplx::new(z[0], z[1])).collect(),
    };
    Ok(OracleTrajectory {
        samples,
        traces,
        max_hermiticity_error: herm,
        max_top_population: top,
        final_state,
        stats,
    })
}
