//! Simulation toolkit for STIRAP-assisted optomechanical cooling.
//!
//! A mechanical mode `b` couples to a driven primary cavity `c`, which in
//! turn couples to a lossy auxiliary cavity `a`. Modulating the drive
//! amplitude and the two cavity detunings moves phonons adiabatically from
//! `b` into `a`, where they leak out. The crate evolves the closed set of
//! second-order moments under the Lindblad master equation, replays truncated
//! transfer pulses to cool the mechanics, and compares the result against the
//! analytic sideband-cooling limit.
//!
//! Every numerical type is generic over a [`Real`] scalar (`f32` or `f64`);
//! the aliases at the crate root fix it to `f64`.

pub mod error;
pub mod evolve;
pub mod linalg;
pub mod model;
pub mod moments;
pub mod ode;
pub mod oracle;
pub mod pulses;
pub mod scalar;
pub mod sideband;
pub mod spectral;
pub mod tuner;

pub use error::{Error, Result};
pub use evolve::{integrate, iterate_cooling, CoolingReport, EvolveOptions, Trajectory};
pub use scalar::{Cplx, Real};
pub use model::{canonical_schedule, linearized_coupling, mean_fields, DriveParams, MeanFields, SystemParams};
pub use moments::{build_generator, occupancies, GeneratorSnapshot, MomentState};
pub use oracle::{build_liouvillian, evolve_density, DensityState, FockConfig};
pub use pulses::{default_window, Modulation, PulseSchedule, TruncationWindow, WindowRule};
pub use sideband::{compare, cooling_limit, stability, Scenario, SidebandVerdict};
pub use spectral::{find_crossings_and_gap, rwa_hamiltonian, stokes_eigenvalues, unitary_transfer, AdiabaticSpectrum};
pub use tuner::{tune, TuneOutcome, TuneSpec};

/// Double-precision complex number.
pub type C64 = Cplx<f64>;

pub type Params = SystemParams<f64>;
pub type Schedule = PulseSchedule<f64>;
pub type Window = TruncationWindow<f64>;
pub type Moments = MomentState<f64>;
pub type Spectrum = AdiabaticSpectrum<f64>;
pub type Traj = Trajectory<f64>;
pub type Report = CoolingReport<f64>;
pub type Verdict = SidebandVerdict<f64>;

pub type Params32 = SystemParams<f32>;
pub type Schedule32 = PulseSchedule<f32>;
pub type Moments32 = MomentState<f32>;
