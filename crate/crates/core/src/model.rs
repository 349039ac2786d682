//! Physical parameters, mean-field steady state and the canonical pulse family.
//!
//! All rates and times are measured in units of the mechanical frequency
//! `omega_b` (so `omega_b = 1` unless explicitly overridden).

use crate::error::{invalid, Error, Result};
use crate::pulses::PulseSchedule;
use crate::scalar::{c, cr, i_unit, Cplx, Real};

/// Static rates and bath occupancies of the auxiliary cavity `a`, the
/// mechanical mode `b` and the primary cavity `c`.
///
/// Decay rates are energy decay rates: a free damped mode relaxes as
/// `dN/dt = -kappa (N - nbar)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams<T = f64> {
    pub omega_b: T,
    pub kappa_a: T,
    pub kappa_c: T,
    pub kappa_b: T,
    pub g_ca: T,
    pub nbar_a: T,
    pub nbar_b: T,
    pub nbar_c: T,
}

impl<T: Real> SystemParams<T> {
    /// Lossless, zero-temperature system with `omega_b = 1` and no
    /// cavity-cavity coupling.
    pub fn closed() -> Self {
        Self {
            omega_b: T::one(),
            kappa_a: T::zero(),
            kappa_c: T::zero(),
            kappa_b: T::zero(),
            g_ca: T::zero(),
            nbar_a: T::zero(),
            nbar_b: T::zero(),
            nbar_c: T::zero(),
        }
    }

    /// Parameter set used throughout the cooling comparisons: optical baths
    /// empty, Stokes coupling `g_ca = Omega0 / 2`, mechanical damping given
    /// through the quality factor.
    pub fn cooling(omega0: T, kappa_c: T, kappa_a: T, q_b: T, nbar_b: T) -> Result<Self> {
        let p = Self {
            g_ca: omega0 / T::lit(2.0),
            kappa_c,
            kappa_a,
            nbar_b,
            ..Self::closed()
        }
        .with_quality_factor(q_b)?;
        p.validate()?;
        Ok(p)
    }

    /// Sets `kappa_b = omega_b / q_b`.
    pub fn with_quality_factor(mut self, q_b: T) -> Result<Self> {
        if !(q_b > T::zero()) || !q_b.is_finite() {
            return Err(invalid("q_b", format!("must be positive and finite, got {q_b}")));
        }
        self.kappa_b = self.omega_b / q_b;
        Ok(self)
    }

    /// Ties the Stokes coupling to a pulse schedule (`g_ca = Omega0 / 2`).
    pub fn with_stokes_of(mut self, s: &PulseSchedule<T>) -> Self {
        self.g_ca = s.omega0 / T::lit(2.0);
        self
    }

    pub fn quality_factor(&self) -> T {
        self.omega_b / self.kappa_b
    }

    /// Checks finiteness, positivity of `omega_b` and non-negativity of all
    /// rates and occupancies.
    ///
    /// Zero decay rates are accepted: closed-system runs switch dissipation
    /// off entirely.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega_b", self.omega_b),
            ("kappa_a", self.kappa_a),
            ("kappa_c", self.kappa_c),
            ("kappa_b", self.kappa_b),
            ("g_ca", self.g_ca),
            ("nbar_a", self.nbar_a),
            ("nbar_b", self.nbar_b),
            ("nbar_c", self.nbar_c),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
            if v < T::zero() {
                return Err(invalid(name, format!("must be non-negative, got {v}")));
            }
        }
        if !(self.omega_b > T::zero()) {
            return Err(invalid("omega_b", "must be positive"));
        }
        Ok(())
    }
}

impl<T: Real> Default for SystemParams<T> {
    fn default() -> Self {
        Self::closed()
    }
}

/// Coherent drive of the primary cavity in the frame rotating at the drive
/// frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams<T = f64> {
    pub eps_p: Cplx<T>,
    /// `omega_a - omega_p`
    pub delta_a: T,
    /// `omega_c - omega_p`
    pub delta_c: T,
    /// Single-photon optomechanical coupling.
    pub g_cb: T,
}

/// Steady-state classical amplitudes of the three modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFields<T = f64> {
    pub alpha: Cplx<T>,
    pub beta: Cplx<T>,
    pub eta: Cplx<T>,
}

impl<T: Real> MeanFields<T> {
    /// Residuals of the three classical steady-state equations, in the order
    /// `(a, b, c)`. The radiation-pressure shift of the primary detuning is
    /// neglected, as in [`mean_fields`].
    pub fn residuals(&self, d: &DriveParams<T>, p: &SystemParams<T>) -> [Cplx<T>; 3] {
        let i = i_unit::<T>();
        let ra = (-i * d.delta_a - p.kappa_a) * self.alpha - i * p.g_ca * self.eta;
        let rb = (-i * p.omega_b - p.kappa_b) * self.beta - i * d.g_cb * self.eta.norm_sqr();
        let rc = (-i * d.delta_c - p.kappa_c) * self.eta - i * p.g_ca * self.alpha + d.eps_p;
        [ra, rb, rc]
    }
}

const SINGULAR_EPS: f64 = 1e-12;

/// Classical steady state of the driven three-mode system.
///
/// Uses the amplitude-decay convention of the Langevin equations. This only
/// translates a physical drive into the linearized coupling; the moment
/// dynamics use energy decay rates.
pub fn mean_fields<T: Real>(d: &DriveParams<T>, p: &SystemParams<T>) -> Result<MeanFields<T>> {
    let i = i_unit::<T>();
    let la = i * d.delta_a + p.kappa_a;
    let lc = i * d.delta_c + p.kappa_c;
    let den = cr(p.g_ca * p.g_ca) + lc * la;
    if den.norm().as_f64() < SINGULAR_EPS {
        return Err(Error::SingularDenominator {
            magnitude: den.norm().as_f64(),
        });
    }
    let eta = d.eps_p * la / den;
    // kappa_a = delta_a = 0 gives eta = 0 and a free alpha; alpha = 0 keeps the
    // a-mode equation satisfied only in that degenerate case, so solve the
    // c-mode equation for it instead.
    let alpha = if la.norm().as_f64() < SINGULAR_EPS {
        if p.g_ca == T::zero() {
            c(T::zero(), T::zero())
        } else {
            (d.eps_p - lc * eta) / (i * p.g_ca)
        }
    } else {
        -i * p.g_ca * eta / la
    };
    let lb = i * p.omega_b + p.kappa_b;
    let beta = -i * d.g_cb * eta.norm_sqr() / lb;
    Ok(MeanFields { alpha, beta, eta })
}

/// Drive-enhanced linearized optomechanical coupling `G_cb = eta * g_cb`.
pub fn linearized_coupling<T: Real>(d: &DriveParams<T>, p: &SystemParams<T>) -> Result<Cplx<T>> {
    Ok(mean_fields(d, p)?.eta * d.g_cb)
}

/// Scaled schedule constants of the canonical pulse family. Every time is
/// `constant / (Omega0 / omega_b)` in units of `1 / omega_b`.
pub mod canonical {
    pub const KAPPA_DELTA: f64 = 14.05;
    pub const H_DELTA: f64 = 13.94;
    pub const TAU_CH: f64 = 16.50;
    pub const TAU: f64 = 110.17;
    pub const WIDTH: f64 = 10.88;
    pub const CENTER: f64 = 61.23;
}

/// Canonical pulse family parameterized by the peak coupling
/// `Omega0 / omega_b`, with `omega_b = 1`.
pub fn canonical_schedule<T: Real>(omega0_over_wb: T) -> Result<PulseSchedule<T>> {
    if !(omega0_over_wb > T::zero()) || !omega0_over_wb.is_finite() {
        return Err(Error::NonPositiveAmplitude(omega0_over_wb.as_f64()));
    }
    let x = omega0_over_wb;
    Ok(PulseSchedule {
        omega0: x,
        t_c: T::lit(canonical::CENTER) / x,
        width: T::lit(canonical::WIDTH) / x,
        kappa_delta: T::lit(canonical::KAPPA_DELTA),
        h_delta: T::lit(canonical::H_DELTA),
        tau: T::lit(canonical::TAU) / x,
        tau_ch: T::lit(canonical::TAU_CH) / x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn generic_drive() -> (DriveParams<f64>, SystemParams<f64>) {
        let d = DriveParams {
            eps_p: c(1.0, 0.0),
            delta_a: 0.2,
            delta_c: 1.0,
            g_cb: 1e-4,
        };
        let p = SystemParams {
            kappa_a: 2.0,
            kappa_c: 0.5,
            kappa_b: 1e-5,
            g_ca: 0.45,
            ..SystemParams::closed()
        };
        (d, p)
    }

    #[test]
    fn decoupled_cavity_field() {
        let d = DriveParams {
            eps_p: c(1.0, 0.0),
            delta_a: 0.3,
            delta_c: 0.0,
            g_cb: 0.0,
        };
        let p = SystemParams {
            kappa_c: 0.5,
            kappa_a: 1.0,
            ..SystemParams::closed()
        };
        let mf = mean_fields(&d, &p).unwrap();
        assert_relative_eq!(mf.eta.re, 2.0, epsilon = 1e-15);
        assert_relative_eq!(mf.eta.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn lossless_resonant_auxiliary_blocks_the_drive() {
        let d = DriveParams {
            eps_p: c(1.0, 0.0),
            delta_a: 0.0,
            delta_c: 0.7,
            g_cb: 0.01,
        };
        let p = SystemParams {
            kappa_c: 0.5,
            g_ca: 0.45,
            ..SystemParams::closed()
        };
        let mf = mean_fields(&d, &p).unwrap();
        assert_eq!(mf.eta.norm(), 0.0);
        let r = mf.residuals(&d, &p);
        assert!(r.iter().all(|z| z.norm() < 1e-14), "{r:?}");
    }

    #[test]
    fn generic_drive_satisfies_steady_state() {
        let (d, p) = generic_drive();
        let mf = mean_fields(&d, &p).unwrap();
        let norm: f64 = mf.residuals(&d, &p).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm < 1e-12, "residual {norm}");
    }

    #[test]
    fn singular_denominator_is_reported() {
        // g_ca^2 + (i dc + kc)(i da + ka) = 0 for kc = ka = 0, dc * da = g_ca^2.
        let d = DriveParams {
            eps_p: c(1.0, 0.0),
            delta_a: 0.5,
            delta_c: 0.5,
            g_cb: 0.0,
        };
        let p = SystemParams {
            g_ca: 0.5,
            ..SystemParams::closed()
        };
        assert!(matches!(mean_fields(&d, &p), Err(Error::SingularDenominator { .. })));
        assert!(matches!(linearized_coupling(&d, &p), Err(Error::SingularDenominator { .. })));
    }

    #[test]
    fn coupling_is_product_of_field_and_single_photon_rate() {
        let (mut d, p) = generic_drive();
        d.g_cb = 0.0;
        assert_eq!(linearized_coupling(&d, &p).unwrap().norm(), 0.0);

        let d = DriveParams {
            eps_p: c(1.0, 0.0),
            delta_a: 0.3,
            delta_c: 0.0,
            g_cb: 0.05,
        };
        let p = SystemParams {
            kappa_c: 0.5,
            kappa_a: 1.0,
            ..SystemParams::closed()
        };
        let g = linearized_coupling(&d, &p).unwrap();
        assert_relative_eq!(g.re, 0.1, epsilon = 1e-15);

        let (d, p) = generic_drive();
        let g = linearized_coupling(&d, &p).unwrap();
        let eta = mean_fields(&d, &p).unwrap().eta;
        assert!((g.norm() - eta.norm() * d.g_cb.abs()).abs() < 1e-14);
    }

    #[test]
    fn canonical_rows_match_table() {
        // (Omega0, tau_ch, tau, T, t_c)
        let rows: [(f64, f64, f64, f64, f64); 7] = [
            (0.1, 164.99, 1101.69, 108.76, 612.26),
            (0.9, 18.33, 122.41, 12.08, 68.03),
            (0.3, 54.99, 367.23, 36.25, 204.08),
            (0.5, 32.99, 220.34, 21.75, 122.45),
            (0.6, 27.49, 183.62, 18.13, 102.04),
            (1.2, 13.74, 91.81, 9.06, 51.02),
            (0.2, 82.49, 550.85, 54.38, 306.13),
        ];
        for (x, tau_ch, tau, width, t_c) in rows {
            let s = canonical_schedule(x).unwrap();
            for (got, want) in [(s.tau_ch, tau_ch), (s.tau, tau), (s.width, width), (s.t_c, t_c)] {
                assert!((got - want).abs() / want < 1e-3, "x={x}: {got} vs {want}");
            }
            assert_eq!(s.kappa_delta, 14.05);
            assert_eq!(s.h_delta, 13.94);
        }
    }

    #[test]
    fn canonical_rejects_non_positive_amplitude() {
        assert!(matches!(canonical_schedule(0.0_f64), Err(Error::NonPositiveAmplitude(_))));
        assert!(matches!(canonical_schedule(-0.3_f64), Err(Error::NonPositiveAmplitude(_))));
        assert!(canonical_schedule(f64::NAN).is_err());
    }

    #[test]
    fn canonical_works_in_single_precision() {
        let s = canonical_schedule(0.9f32).unwrap();
        assert!((s.t_c - 68.03).abs() < 0.01);
    }

    #[test]
    fn quality_factor_sets_mechanical_damping() {
        let p = SystemParams::<f64>::cooling(0.9, 0.5, 2.0, 1e7, 1e3).unwrap();
        assert_relative_eq!(p.kappa_b * 1e7, p.omega_b, max_relative = 1e-15);
        assert_relative_eq!(p.quality_factor(), 1e7, max_relative = 1e-12);
        assert_eq!(p.g_ca, 0.45);
        assert!(SystemParams::<f64>::closed().with_quality_factor(0.0).is_err());
        let bad = SystemParams::<f64> {
            nbar_b: -1.0,
            ..SystemParams::closed()
        };
        assert!(bad.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn mean_fields_solve_the_steady_state(
                eps_re in -5.0..5.0f64, eps_im in -5.0..5.0f64,
                da in -20.0..20.0f64, dc in -20.0..20.0f64,
                ka in 0.01..5.0f64, kc in 0.01..5.0f64, kb in 1e-7..1e-2f64,
                g_ca in 0.0..2.0f64, g_cb in 0.0..1e-2f64,
            ) {
                let d = DriveParams { eps_p: c(eps_re, eps_im), delta_a: da, delta_c: dc, g_cb };
                let p = SystemParams { kappa_a: ka, kappa_c: kc, kappa_b: kb, g_ca, ..SystemParams::closed() };
                let mf = mean_fields(&d, &p).unwrap();
                for r in mf.residuals(&d, &p) {
                    prop_assert!(r.norm() < 1e-10, "residual {}", r.norm());
                }
            }

            #[test]
            fn canonical_times_scale_inversely_with_amplitude(x1 in 0.01..3.0f64, x2 in 0.01..3.0f64) {
                let a = canonical_schedule(x1).unwrap();
                let b = canonical_schedule(x2).unwrap();
                for (u, v) in [(a.tau_ch, b.tau_ch), (a.tau, b.tau), (a.width, b.width), (a.t_c, b.t_c)] {
                    prop_assert!((u * x1 - v * x2).abs() < 1e-12 * (u * x1).abs().max(1.0));
                }
                prop_assert_eq!(a.kappa_delta, b.kappa_delta);
                prop_assert_eq!(a.h_delta, b.h_delta);
            }
        }
    }
}
