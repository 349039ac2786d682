#![allow(dead_code)]

use optocool::moments::{MomentState, N_MOMENTS};
use optocool::oracle::{evolve_density, DensityState, FockConfig, OracleOptions};
use optocool::{canonical_schedule, integrate, C64, EvolveOptions, Params, Schedule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A small random problem both engines can solve.
#[derive(Debug, Clone)]
pub struct Instance {
    pub schedule: Schedule,
    pub params: Params,
    pub t_span: (f64, f64),
    pub initial: DensityState<f64>,
    pub counter_rotating: bool,
}

pub fn random_instance(seed: u64, counter_rotating: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega0 = if counter_rotating { rng.gen_range(0.05..0.25) } else { rng.gen_range(0.05..0.5) };
    let schedule = canonical_schedule(omega0).unwrap();
    let mut params = Params::closed().with_stokes_of(&schedule);
    params.kappa_a = rng.gen_range(0.0..0.5);
    params.kappa_c = rng.gen_range(0.0..0.5);
    params.kappa_b = rng.gen_range(0.0..0.05);
    if rng.gen_bool(0.5) {
        params.nbar_b = rng.gen_range(0.0..0.02);
        params.nbar_c = rng.gen_range(0.0..0.005);
    }
    let cutoff = if counter_rotating { 4 } else { 3 };
    let f = FockConfig::uniform(cutoff);
    // Random superposition of the vacuum and the three single-excitation
    // states, mixed with a dilute thermal background.
    let mut psi = vec![C64::new(0.0, 0.0); f.dimension()];
    for n in [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]] {
        psi[f.index(n)] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    psi[f.index([0, 0, 0])] += C64::new(1.0, 0.0);
    let pure = DensityState::pure(f, 0.0, &psi).unwrap();
    let th = DensityState::thermal(f, 0.0, 0.0, rng.gen_range(0.0..0.02), rng.gen_range(0.0..0.05)).unwrap();
    let initial = pure.mix(&th, rng.gen_range(0.3..1.0)).unwrap();
    let len = rng.gen_range(5.0..25.0) / omega0.sqrt();
    let t0 = schedule.t_c + rng.gen_range(-1.5..0.5) * schedule.width;
    Instance {
        schedule,
        params,
        t_span: (t0, t0 + len),
        initial,
        counter_rotating,
    }
}

pub struct Comparison {
    pub max_rel_error: f64,
    pub scale: f64,
    pub samples: usize,
    pub covariance: Vec<MomentState<f64>>,
}

/// Runs both engines on the same sample grid and returns the largest
/// moment deviation relative to the largest moment magnitude on the
/// trajectory.
pub fn compare_engines(inst: &Instance) -> Comparison {
    let dt = (inst.t_span.1 - inst.t_span.0) / 40.0;
    let oracle_opts = OracleOptions {
        rtol: 1e-10,
        atol: 1e-12,
        counter_rotating: inst.counter_rotating,
        sample_dt: dt,
        ..OracleOptions::default()
    };
    let oracle = evolve_density(&inst.initial, &inst.schedule, &inst.params, inst.t_span, &oracle_opts).unwrap();
    let mut start = inst.initial.moments();
    start.t = inst.t_span.0;
    let opts = EvolveOptions {
        counter_rotating: inst.counter_rotating,
        sample_dt: dt,
        ..EvolveOptions::default()
    }
    .with_tolerances(1e-10, 1e-12);
    let cov = integrate(&start, &inst.schedule, &inst.params, inst.t_span, &opts).unwrap();
    assert_eq!(cov.samples.len(), oracle.samples.len());
    let scale = oracle
        .samples
        .iter()
        .flat_map(|s| s.m.iter().map(|z| z.norm()))
        .fold(0.0f64, f64::max);
    let mut worst = 0.0f64;
    for (a, b) in cov.samples.iter().zip(&oracle.samples) {
        assert!((a.t - b.t).abs() < 1e-9);
        for k in 0..N_MOMENTS {
            worst = worst.max((a.m[k] - b.m[k]).norm() / scale);
        }
    }
    Comparison {
        max_rel_error: worst,
        scale,
        samples: cov.samples.len(),
        covariance: cov.samples,
    }
}
