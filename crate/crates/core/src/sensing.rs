//! Per-mode sensor functionals: what each sensor reads from a unit-amplitude
//! mode and from that mode's gradient. Computed once per (sensor, basis).

use rayon::prelude::*;

use crate::basis::{bessel_j_upto, derivative_from_table, Branch, EigenMode, Eigenbasis};
use crate::model::SensorSpec;
use crate::quadrature::Rule;

/// Readings of one sensor against every mode of a basis, indexed by mode position.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorResponse {
    /// `<phi, f>`, or `phi(b)` for a point sensor, times the gain.
    pub state: Vec<f64>,
    /// `<grad phi, f>` in Cartesian components, or `grad phi(b)` for a point sensor.
    pub gradient: Vec<[f64; 2]>,
}

/// Responses of a list of sensors against one basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorBank {
    responses: Vec<SensorResponse>,
}

impl SensorBank {
    pub fn new(sensors: &[SensorSpec], basis: &Eigenbasis) -> SensorBank {
        SensorBank { responses: sensors.par_iter().map(|s| sensor_response(s, basis)).collect() }
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn responses(&self) -> &[SensorResponse] {
        &self.responses
    }

    pub fn response(&self, sensor: usize) -> &SensorResponse {
        &self.responses[sensor]
    }
}

/// Angular moments of a weighted support for one angular index.
#[derive(Default, Clone, Copy)]
struct AngularMoments {
    plain: f64,
    times_cos: f64,
    times_sin: f64,
    derivative_cos: f64,
    derivative_sin: f64,
}

fn angular_moments(n: usize, branch: Branch, nodes: &[(f64, f64)]) -> AngularMoments {
    let probe = EigenMode { n, m: 1, branch, beta: 0.0, rate: 0.0, norm_const: 1.0 };
    let mut acc = AngularMoments::default();
    for &(theta, w) in nodes {
        let t = probe.angular(theta);
        let dt = probe.angular_derivative(theta);
        let (s, c) = theta.sin_cos();
        acc.plain += w * t;
        acc.times_cos += w * t * c;
        acc.times_sin += w * t * s;
        acc.derivative_cos += w * dt * c;
        acc.derivative_sin += w * dt * s;
    }
    acc
}

/// Moments for every angular index and both branches.
fn moment_table(n_max: usize, nodes: &[(f64, f64)]) -> Vec<[AngularMoments; 2]> {
    (0..=n_max)
        .map(|n| [angular_moments(n, Branch::Cosine, nodes), angular_moments(n, Branch::Sine, nodes)])
        .collect()
}

fn moments_of(table: &[[AngularMoments; 2]], mode: &EigenMode) -> AngularMoments {
    table[mode.n][usize::from(mode.branch == Branch::Sine)]
}

/// Angular nodes paired with `weight * profile shape`.
fn weighted_angles(theta1: f64, theta2: f64, spec: &SensorSpec, n_max: usize) -> Vec<(f64, f64)> {
    let width = theta2 - theta1;
    let mid = theta1 + 0.5 * width;
    let points = 40 + ((n_max + 2) as f64 * width).ceil() as usize;
    let rule = Rule::gauss_legendre(points, theta1, theta2);
    let profile = spec.weight().profile;
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&t, &w)| (t, w * profile.shape(t - mid, width)))
        .collect()
}

/// Readings of one sensor against every mode of `basis`.
pub fn sensor_response(sensor: &SensorSpec, basis: &Eigenbasis) -> SensorResponse {
    let a = basis.radius();
    let modes = basis.modes();
    let gain = sensor.gain();
    let n_max = basis.truncation().n_max;
    let mut state = Vec::with_capacity(modes.len());
    let mut gradient = Vec::with_capacity(modes.len());
    match *sensor {
        SensorSpec::Pointwise { location, .. } => {
            let r = location.r.min(a);
            for mode in modes {
                let value = basis.eval_eigenfunction(mode, r, location.theta).expect("validated sensor");
                let g = basis.eval_eigengradient(mode, r, location.theta).expect("validated sensor");
                state.push(gain * value);
                gradient.push([gain * g[0], gain * g[1]]);
            }
        }
        SensorSpec::InternalZone { support, .. } => {
            let scale = gain / sensor.support_measure(a);
            let angles = weighted_angles(support.theta1, support.theta2, sensor, n_max);
            let beta_max = modes.iter().map(|m| m.beta).fold(0.0, f64::max);
            let radial_points = 40 + (beta_max * (support.r2 - support.r1) / a).ceil() as usize;
            let radial = Rule::gauss_legendre(radial_points, support.r1, support.r2);
            let table = moment_table(n_max, &angles);
            for mode in modes {
                let moments = moments_of(&table, mode);
                let k = mode.beta / a;
                let (mut r0, mut r1, mut r2) = (0.0, 0.0, 0.0);
                for (&r, &w) in radial.nodes.iter().zip(&radial.weights) {
                    let values = bessel_j_upto(k * r, mode.n + 1);
                    let j = values[mode.n];
                    r0 += w * j * r;
                    r1 += w * derivative_from_table(&values, mode.n) * r;
                    r2 += w * j;
                }
                let s = scale * mode.norm_const;
                state.push(s * r0 * moments.plain);
                gradient.push([
                    s * (k * r1 * moments.times_cos - r2 * moments.derivative_sin),
                    s * (k * r1 * moments.times_sin + r2 * moments.derivative_cos),
                ]);
            }
        }
        SensorSpec::BoundaryZone { support, .. } => {
            let scale = gain / (support.theta2 - support.theta1);
            let angles = weighted_angles(support.theta1, support.theta2, sensor, n_max);
            let table = moment_table(n_max, &angles);
            for mode in modes {
                let moments = moments_of(&table, mode);
                let values = bessel_j_upto(mode.beta, mode.n + 1);
                let j = values[mode.n];
                let k = mode.beta / a;
                let dj = derivative_from_table(&values, mode.n);
                let s = scale * mode.norm_const;
                state.push(s * j * moments.plain);
                gradient.push([
                    s * (k * dj * moments.times_cos - j / a * moments.derivative_sin),
                    s * (k * dj * moments.times_sin + j / a * moments.derivative_cos),
                ]);
            }
        }
    }
    SensorResponse { state, gradient }
}
