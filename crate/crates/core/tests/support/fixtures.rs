//! Configuration fixtures shared by integration tests.

use std::f64::consts::{PI, TAU};

use gradsense::basis::ModeTruncation;
use gradsense::model::{AnalysisConfig, BoundaryArc, SensorSpec, WeightProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Unit-disk configuration with the default tolerances.
pub fn unit_config(sensors: Vec<SensorSpec>, gamma: BoundaryArc, trunc: (usize, usize)) -> AnalysisConfig {
    let mut config = AnalysisConfig::new(1.0, gamma, sensors);
    config.trunc = ModeTruncation { n_max: trunc.0, m_max: trunc.1 };
    config
}

/// Two boundary point sensors at `0` and `diff`.
pub fn boundary_pair(diff: f64) -> Vec<SensorSpec> {
    vec![SensorSpec::pointwise(1.0, 0.0), SensorSpec::pointwise(1.0, diff)]
}

fn profile(rng: &mut ChaCha8Rng) -> WeightProfile {
    if rng.random_bool(0.5) {
        WeightProfile::Uniform
    } else {
        WeightProfile::CosineBump
    }
}

/// One sensor of a uniformly drawn kind on the unit disk.
pub fn random_sensor(rng: &mut ChaCha8Rng) -> SensorSpec {
    let theta = rng.random_range(0.0..TAU);
    match rng.random_range(0..4) {
        0 => SensorSpec::pointwise(rng.random_range(0.2..0.95), theta),
        1 => SensorSpec::pointwise(1.0, theta),
        2 => {
            let r1 = rng.random_range(0.0..0.6);
            let r2 = rng.random_range(r1 + 0.1..1.0);
            let p = profile(rng);
            SensorSpec::internal_zone(r1, r2, theta, theta + rng.random_range(0.1..1.5), p)
        }
        _ => {
            let p = profile(rng);
            SensorSpec::boundary_zone(theta, theta + rng.random_range(0.05..1.0), p)
        }
    }
}

/// A random configuration with 2 to 4 sensors of mixed kinds on a random arc.
/// A quarter of the draws start with two boundary point sensors a rational
/// multiple of pi apart, so rank-deficient cases are represented.
pub fn random_config(rng: &mut ChaCha8Rng, trunc: (usize, usize)) -> AnalysisConfig {
    let q = rng.random_range(2..=4);
    let mut sensors = Vec::with_capacity(q);
    if rng.random_bool(0.25) {
        let base = rng.random_range(0.0..TAU);
        let d = rng.random_range(2..=5) as f64;
        sensors.push(SensorSpec::pointwise(1.0, base));
        sensors.push(SensorSpec::pointwise(1.0, base + PI / d));
    }
    while sensors.len() < q {
        sensors.push(random_sensor(rng));
    }
    let lo = rng.random_range(0.0..TAU - 0.3);
    let gamma = BoundaryArc::new(lo, rng.random_range(lo + 0.3..=TAU)).expect("valid arc");
    let mut config = unit_config(sensors, gamma, trunc);
    config.validate().expect("fixture configuration is valid");
    config
}

/// `count` reproducible configurations.
pub fn seeded_configs(seed: u64, count: usize, trunc: (usize, usize)) -> Vec<AnalysisConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_config(&mut rng, trunc)).collect()
}
