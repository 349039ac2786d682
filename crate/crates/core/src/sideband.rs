//! Standard red-sideband cooling baseline and the STIRAP-versus-sideband
//! comparison harness.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolve::{iterate_cooling, CoolingReport, EvolveOptions};
use crate::model::{canonical_schedule, SystemParams};
use crate::moments::MomentState;
use crate::pulses::{PulseSchedule, TruncationWindow};
use crate::scalar::Real;

/// Cooperativity below which the steady-state formula is flagged as
/// outside its validity regime.
pub const LOW_COOPERATIVITY: f64 = 10.0;

/// Routh-Hurwitz bound on `G^2`: `omega_b^2 / 4 + kappa_c^2 / 16`.
pub fn stability_bound<T: Real>(p: &SystemParams<T>) -> T {
    p.omega_b * p.omega_b / T::lit(4.0) + p.kappa_c * p.kappa_c / T::lit(16.0)
}

/// Whether continuous sideband cooling at coupling `g` reaches a steady state.
pub fn stability<T: Real>(g: T, p: &SystemParams<T>) -> bool {
    g * g < stability_bound(p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandVerdict<T = f64> {
    pub stable: bool,
    /// Steady-state phonon number, present when stable.
    pub n_limit: Option<T>,
    /// Thermal contribution, linear in `nbar_b`.
    pub first_term: T,
    /// Quantum back-action contribution.
    pub second_term: T,
    pub cooperativity: T,
    /// Set when the cooperativity is below [`LOW_COOPERATIVITY`], where the
    /// formula is only indicative.
    pub low_cooperativity: bool,
}

/// Steady-state phonon number of resolved-sideband cooling on the red
/// sideband:
///
/// ```text
/// n = (4G^2 + kc^2) / (4G^2 (kc + kb)) * kb * nbar_b
///   + ((4wb^2 - kc^2)(8G^2 + kc^2) + 2kc^4) / (16wb^2 (4wb^2 + kc^2 - 16G^2))
/// ```
pub fn cooling_limit<T: Real>(g: T, p: &SystemParams<T>) -> Result<SidebandVerdict<T>> {
    p.validate()?;
    let g2 = g * g;
    let bound = stability_bound(p);
    if !(g2 < bound) {
        return Err(Error::Unstable {
            g2: g2.as_f64(),
            bound: bound.as_f64(),
        });
    }
    let (wb, kc, kb) = (p.omega_b, p.kappa_c, p.kappa_b);
    let four = T::lit(4.0);
    let first = (four * g2 + kc * kc) / (four * g2 * (kc + kb)) * kb * p.nbar_b;
    let wb2 = wb * wb;
    let kc2 = kc * kc;
    let second = ((four * wb2 - kc2) * (T::lit(8.0) * g2 + kc2) + T::lit(2.0) * kc2 * kc2)
        / (T::lit(16.0) * wb2 * (four * wb2 + kc2 - T::lit(16.0) * g2));
    let cooperativity = four * g2 / (kb * kc);
    Ok(SidebandVerdict {
        stable: true,
        n_limit: Some(first + second),
        first_term: first,
        second_term: second,
        cooperativity,
        low_cooperativity: !(cooperativity >= T::lit(LOW_COOPERATIVITY)),
    })
}

/// One comparison case: a sideband coupling `g` together with the pulse and
/// window used for iterated STIRAP cooling.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T = f64> {
    pub label: String,
    pub g: T,
    pub params: SystemParams<T>,
    pub schedule: PulseSchedule<T>,
    pub window: TruncationWindow<T>,
    /// Initial phonon occupancy; the optical modes start empty.
    pub initial_n_b: T,
}

impl<T: Real> Scenario<T> {
    /// Canonical pulse at `Omega0 = g`, Stokes coupling `g / 2`, thermal
    /// mechanics starting at its bath occupancy.
    pub fn canonical(g: T, kappa_c: T, kappa_a: T, q_b: T, nbar_b: T, window: TruncationWindow<T>) -> Result<Self> {
        let schedule = canonical_schedule(g)?;
        let params = SystemParams::cooling(g, kappa_c, kappa_a, q_b, nbar_b)?;
        Ok(Self {
            label: format!("G={g} kc={kappa_c} ka={kappa_a} Q={q_b}"),
            g,
            params,
            schedule,
            window,
            initial_n_b: nbar_b,
        })
    }

    pub fn initial_state(&self) -> MomentState<T> {
        MomentState::thermal(self.window.t_start, T::zero(), T::zero(), self.initial_n_b)
    }

    /// Runs the iterated truncated-pulse protocol for this scenario.
    pub fn run(&self, opts: &EvolveOptions<T>) -> Result<CoolingReport<T>> {
        iterate_cooling(&self.initial_state(), &self.schedule, &self.window, &self.params, opts).map(|(_, r)| r)
    }
}

/// Sideband column of a comparison row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SidebandOutcome<T = f64> {
    Limit(T),
    Unstable,
}

impl<T: Real> SidebandOutcome<T> {
    pub fn is_stable(&self) -> bool {
        matches!(self, SidebandOutcome::Limit(_))
    }

    pub fn value(&self) -> Option<T> {
        match self {
            SidebandOutcome::Limit(v) => Some(*v),
            SidebandOutcome::Unstable => None,
        }
    }
}

impl<T: Real> std::fmt::Display for SidebandOutcome<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SidebandOutcome::Limit(v) => write!(f, "{v}"),
            SidebandOutcome::Unstable => f.write_str("unstable"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ComparisonRow<T = f64> {
    pub scenario: Scenario<T>,
    pub sideband: Result<SidebandOutcome<T>>,
    pub stirap: Result<CoolingReport<T>>,
}

impl<T: Real> ComparisonRow<T> {
    /// Minimum phonon number reached by iterated STIRAP cooling.
    pub fn stirap_min(&self) -> Option<T> {
        self.stirap.as_ref().ok().map(|r| r.n_b_min)
    }
}

/// Sideband outcome for a scenario; instability is a regular outcome, other
/// failures are errors.
pub fn sideband_outcome<T: Real>(g: T, p: &SystemParams<T>) -> Result<SidebandOutcome<T>> {
    match cooling_limit(g, p) {
        Ok(v) => Ok(SidebandOutcome::Limit(v.first_term + v.second_term)),
        Err(Error::Unstable { .. }) => Ok(SidebandOutcome::Unstable),
        Err(e) => Err(e),
    }
}

/// Evaluates both cooling methods for every scenario, in parallel across
/// rows. Row order follows the input; failures stay local to their row.
pub fn compare<T: Real>(scenarios: &[Scenario<T>], opts: &EvolveOptions<T>) -> Vec<ComparisonRow<T>> {
    scenarios
        .par_iter()
        .map(|s| ComparisonRow {
            scenario: s.clone(),
            sideband: sideband_outcome(s.g, &s.params),
            stirap: s.run(opts),
        })
        .collect()
}

/// A row of the published comparison grid, with its reported values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkRow {
    pub g: f64,
    pub kappa_c: f64,
    pub kappa_a: f64,
    pub q_b: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// Reported sideband limit; `None` where the sideband scheme is unstable.
    pub sideband: Option<f64>,
    /// Reported minimum of iterated STIRAP cooling.
    pub stirap: f64,
}

impl BenchmarkRow {
    pub fn scenario(&self, nbar_b: f64, n_cycles: usize) -> Result<Scenario<f64>> {
        let w = TruncationWindow::new(self.t_start, self.t_end, n_cycles)?;
        Scenario::canonical(self.g, self.kappa_c, self.kappa_a, self.q_b, nbar_b, w)
    }
}

macro_rules! rows {
    ($(($g:expr, $kc:expr, $ka:expr, $q:expr, $ts:expr, $te:expr, $nc:expr, $sc:expr)),* $(,)?) => {
        [$(BenchmarkRow { g: $g, kappa_c: $kc, kappa_a: $ka, q_b: $q, t_start: $ts, t_end: $te, sideband: $nc, stirap: $sc }),*]
    };
}

/// The 40-row comparison grid: eight `(G, kappa_c)` families, each at
/// `kappa_a in {0.01, 2}` and `Q_b in {1e5, 1e7}`.
pub const BENCHMARK: [BenchmarkRow; 40] = rows![
    (0.02, 0.05, 0.01, 1e5, 3000.0, 3180.0, Some(0.51), 2.11),
    (0.02, 0.05, 2.0, 1e5, 3000.0, 3180.0, Some(0.51), 1.98),
    (0.02, 0.05, 0.01, 1e7, 3000.0, 3180.0, Some(0.005), 0.021),
    (0.02, 0.05, 2.0, 1e7, 3000.0, 3180.0, Some(0.005), 0.020),
    (0.1, 0.1, 0.01, 1e5, 500.0, 600.0, Some(0.13), 0.52),
    (0.1, 0.1, 2.0, 1e5, 500.0, 600.0, Some(0.13), 0.39),
    (0.1, 0.1, 0.01, 1e7, 500.0, 600.0, Some(0.0070), 0.0077),
    (0.1, 0.1, 2.0, 1e7, 500.0, 600.0, Some(0.0070), 0.0058),
    (0.3, 0.1, 0.01, 1e5, 150.0, 186.0, Some(0.173), 0.442),
    (0.3, 0.1, 2.0, 1e5, 150.0, 186.0, Some(0.173), 0.219),
    (0.3, 0.1, 0.01, 1e7, 150.0, 186.0, Some(0.071), 0.016),
    (0.3, 0.1, 2.0, 1e7, 150.0, 186.0, Some(0.071), 0.008),
    (0.5, 0.2, 0.01, 1e5, 100.0, 115.0, Some(12.679), 0.184),
    (0.5, 0.2, 2.0, 1e5, 100.0, 115.0, Some(12.679), 0.114),
    (0.5, 0.2, 0.01, 1e7, 100.0, 115.0, Some(12.628), 0.046),
    (0.5, 0.2, 2.0, 1e7, 100.0, 115.0, Some(12.628), 0.030),
    (0.6, 0.3, 0.01, 1e5, 90.0, 100.0, None, 0.179),
    (0.6, 0.3, 2.0, 1e5, 90.0, 100.0, None, 0.136),
    (0.6, 0.3, 0.01, 1e7, 90.0, 100.0, None, 0.097),
    (0.6, 0.3, 2.0, 1e7, 90.0, 100.0, None, 0.080),
    (0.9, 0.5, 0.01, 1e5, 50.0, 90.0, None, 0.300),
    (0.9, 0.5, 2.0, 1e5, 50.0, 90.0, None, 0.266),
    (0.9, 0.5, 0.01, 1e7, 50.0, 90.0, None, 0.161),
    (0.9, 0.5, 2.0, 1e7, 50.0, 90.0, None, 0.149),
    (1.2, 0.5, 0.01, 1e5, 55.0, 62.0, None, 1.574),
    (1.2, 0.5, 2.0, 1e5, 55.0, 62.0, None, 0.717),
    (1.2, 0.5, 0.01, 1e7, 55.0, 62.0, None, 0.441),
    (1.2, 0.5, 2.0, 1e7, 55.0, 62.0, None, 0.451),
    (1.5, 0.5, 0.01, 1e5, 44.0, 51.0, None, 1.574),
    (1.5, 0.5, 2.0, 1e5, 44.0, 51.0, None, 1.44),
    (1.5, 0.5, 0.01, 1e7, 44.0, 51.0, None, 1.143),
    (1.5, 0.5, 2.0, 1e7, 44.0, 51.0, None, 1.03),
    (0.2, 4.0, 0.01, 1e5, 280.0, 350.0, Some(1.273), 3.512),
    (0.2, 4.0, 2.0, 1e5, 280.0, 350.0, Some(1.273), 3.46),
    (0.2, 4.0, 0.01, 1e7, 280.0, 350.0, Some(1.023), 0.953),
    (0.2, 4.0, 2.0, 1e7, 280.0, 350.0, Some(1.023), 0.940),
    (0.5, 10.0, 0.01, 1e5, 100.0, 150.0, Some(6.480), 10.09),
    (0.5, 10.0, 2.0, 1e5, 100.0, 150.0, Some(6.480), 9.91),
    (0.5, 10.0, 0.01, 1e7, 100.0, 150.0, Some(6.381), 5.37),
    (0.5, 10.0, 2.0, 1e7, 100.0, 150.0, Some(6.381), 5.277),
];

/// Bath and initial phonon occupancy used with [`BENCHMARK`].
pub const BENCHMARK_NBAR_B: f64 = 1e3;

/// Scenarios for the full benchmark grid.
pub fn benchmark_scenarios(n_cycles: usize) -> Result<Vec<Scenario<f64>>> {
    BENCHMARK.iter().map(|r| r.scenario(BENCHMARK_NBAR_B, n_cycles)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(kappa_c: f64, q_b: f64, nbar_b: f64) -> SystemParams<f64> {
        SystemParams::cooling(1.0, kappa_c, 2.0, q_b, nbar_b).unwrap()
    }

    #[test]
    fn stability_examples() {
        assert!(stability(0.5, &params(0.2, 1e5, 1e3)));
        assert!(!stability(0.6, &params(0.3, 1e5, 1e3)));
        assert!(stability(0.0, &params(0.3, 1e5, 1e3)));
    }

    #[test]
    fn limit_examples() {
        let cases = [(0.02, 0.05, 1e5, 0.51), (0.5, 0.2, 1e5, 12.679), (0.5, 0.2, 1e7, 12.628)];
        for (g, kc, q, want) in cases {
            let v = cooling_limit(g, &params(kc, q, 1e3)).unwrap();
            let n = v.n_limit.unwrap();
            assert!((n - want).abs() <= 0.01, "{g} {kc} {q}: {n}");
            assert_eq!(n, v.first_term + v.second_term);
        }
    }

    #[test]
    fn unstable_is_an_error() {
        let e = cooling_limit(0.6, &params(0.3, 1e5, 1e3)).unwrap_err();
        assert!(matches!(e, Error::Unstable { .. }));
        assert_eq!(sideband_outcome(0.6, &params(0.3, 1e5, 1e3)).unwrap(), SidebandOutcome::Unstable);
        assert_eq!(SidebandOutcome::<f64>::Unstable.to_string(), "unstable");
    }

    #[test]
    fn low_cooperativity_is_flagged() {
        let v = cooling_limit(1e-4, &params(0.2, 1e5, 1e3)).unwrap();
        assert!(v.low_cooperativity);
        let v = cooling_limit(0.5, &params(0.2, 1e5, 1e3)).unwrap();
        assert!(!v.low_cooperativity);
    }

    #[test]
    fn benchmark_stability_column_is_analytic() {
        for r in &BENCHMARK {
            let p = SystemParams::cooling(r.g, r.kappa_c, r.kappa_a, r.q_b, 1e3).unwrap();
            assert_eq!(stability(r.g, &p), r.sideband.is_some(), "{r:?}");
        }
    }

    #[test]
    fn empty_comparison() {
        assert!(compare::<f64>(&[], &EvolveOptions::default()).is_empty());
    }

    proptest! {
        #[test]
        fn monotone_in_bath_occupancy(g in 0.01f64..0.45, kc in 0.01f64..2.0, n1 in 0.0f64..1e4, dn in 1e-3f64..1e3) {
            let p1 = params(kc, 1e5, n1);
            let p2 = params(kc, 1e5, n1 + dn);
            let a = cooling_limit(g, &p1).unwrap();
            let b = cooling_limit(g, &p2).unwrap();
            prop_assert!(b.n_limit.unwrap() > a.n_limit.unwrap());
            prop_assert!((a.second_term - b.second_term).abs() <= 1e-12 * a.second_term.abs().max(1.0));
        }

        #[test]
        fn back_action_diverges_at_threshold(kc in 0.01f64..1.0) {
            let p = params(kc, 1e5, 1e3);
            let gmax = stability_bound(&p).sqrt();
            let near = cooling_limit(gmax * (1.0 - 1e-9), &p).unwrap().second_term;
            let far = cooling_limit(gmax * 0.9, &p).unwrap().second_term;
            prop_assert!(near > 1e6 * far.abs().max(1e-3));
        }

        #[test]
        fn thermal_term_strong_coupling_limit(kc in 0.01f64..1.0, q in 1e3f64..1e8) {
            let mut p = params(kc, q, 1e3);
            p.omega_b = 1e9;
            let v = cooling_limit(1e5, &p).unwrap();
            let want = p.kappa_b * p.nbar_b / (kc + p.kappa_b);
            prop_assert!((v.first_term - want).abs() <= 1e-6 * want);
        }
    }
}
