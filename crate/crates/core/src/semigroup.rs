//! Exact modal evolution of the state and synthesis of sensor outputs.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{bessel_j, bessel_j_upto, bessel_jprime_zero, Branch, Eigenbasis, MAX_ZERO_ORDER};
use crate::model::{config_digest, AnalysisConfig, SensorSpec};
use crate::quadrature::{Rule, REFERENCE_ANGULAR_POINTS, REFERENCE_RADIAL_POINTS};
use crate::report::{format_float, to_json_bytes};
use crate::sensing::{sensor_response, SensorBank};

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("unknown initial-state preset `{0}`; expected mode:n,m,branch | bump:center,width | poly:rcos")]
    UnknownPreset(String),
    #[error("mode ({n}, {m}, {branch}) is not in the active truncation")]
    ModeOutsideBasis { n: usize, m: usize, branch: &'static str },
    #[error("measurement file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Modal coordinates of the state at a time; `coeffs[k]` multiplies mode `k`
/// of the basis it was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalState {
    pub coeffs: Vec<f64>,
    pub time: f64,
}

impl ModalState {
    pub fn zeros(len: usize) -> ModalState {
        ModalState { coeffs: vec![0.0; len], time: 0.0 }
    }

    /// Unit coefficient on mode `k`.
    pub fn unit(len: usize, k: usize) -> ModalState {
        let mut state = ModalState::zeros(len);
        state.coeffs[k] = 1.0;
        state
    }
}

/// L2 projection of a field onto the basis with the reference tensor rule.
pub fn project_initial(z0: &(dyn Fn(f64, f64) -> f64 + Sync), basis: &Eigenbasis) -> ModalState {
    project_initial_with(z0, basis, REFERENCE_RADIAL_POINTS, REFERENCE_ANGULAR_POINTS)
}

/// L2 projection with a Gauss-Legendre radial rule and a periodic angular rule
/// of the given sizes.
pub fn project_initial_with(
    z0: &(dyn Fn(f64, f64) -> f64 + Sync),
    basis: &Eigenbasis,
    radial_points: usize,
    angular_points: usize,
) -> ModalState {
    let a = basis.radius();
    let n_max = basis.truncation().n_max;
    let radial = Rule::gauss_legendre(radial_points, 0.0, a);
    let angular = Rule::periodic(angular_points, 0.0);
    // Fourier moments of z0 on every radial ring: [cos, sin] per angular index.
    let rings: Vec<Vec<[f64; 2]>> = radial
        .nodes
        .par_iter()
        .map(|&r| {
            let values: Vec<f64> = angular.nodes.iter().map(|&t| z0(r, t)).collect();
            (0..=n_max)
                .map(|n| {
                    let mut acc = [0.0, 0.0];
                    for ((&t, &w), &v) in angular.nodes.iter().zip(&angular.weights).zip(&values) {
                        let (s, c) = (n as f64 * t).sin_cos();
                        acc[0] += w * v * c;
                        acc[1] += w * v * s;
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let coeffs = basis
        .modes()
        .par_iter()
        .map(|mode| {
            let b = usize::from(mode.branch == Branch::Sine);
            let k = mode.beta / a;
            let sum: f64 = radial
                .nodes
                .iter()
                .zip(&radial.weights)
                .zip(&rings)
                .map(|((&r, &w), ring)| w * r * bessel_j_upto(k * r, mode.n)[mode.n] * ring[mode.n][b])
                .sum();
            mode.norm_const * sum
        })
        .collect();
    ModalState { coeffs, time: 0.0 }
}

/// Advances every coefficient by `exp(rate * dt)`.
pub fn evolve(state: &ModalState, dt: f64, basis: &Eigenbasis) -> Result<ModalState, SimulationError> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(SimulationError::Argument(format!("time step must be finite and nonnegative, got {dt}")));
    }
    if state.coeffs.len() != basis.len() {
        return Err(SimulationError::Argument("state does not match the basis".into()));
    }
    let coeffs = state
        .coeffs
        .iter()
        .zip(basis.modes())
        .map(|(&c, mode)| c * (mode.rate * dt).exp())
        .collect();
    Ok(ModalState { coeffs, time: state.time + dt })
}

/// Output of one sensor for a modal state.
pub fn measure(state: &ModalState, sensor: &SensorSpec, basis: &Eigenbasis) -> f64 {
    dot(&sensor_response(sensor, basis).state, &state.coeffs)
}

/// Output of sensor `index` of a bank for a modal state.
pub fn measure_with(bank: &SensorBank, index: usize, state: &ModalState) -> f64 {
    dot(&bank.response(index).state, &state.coeffs)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sampled sensor outputs: `values[i][k]` is sensor `i` at `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSeries {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Sidecar metadata written next to a measurement CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetadata {
    pub noise_sigma: f64,
    pub seed: u64,
    pub config_digest: String,
    pub samples: usize,
    pub sensors: usize,
}

/// `count` equispaced instants covering `[0, horizon]`.
pub fn sample_times(horizon: f64, count: usize) -> Vec<f64> {
    let last = (count - 1) as f64;
    (0..count).map(|k| horizon * k as f64 / last).collect()
}

/// Outputs of every configured sensor on a uniform time grid, starting from a
/// field `z0`.
pub fn synthesize_measurements(
    config: &AnalysisConfig,
    basis: &Eigenbasis,
    z0: &(dyn Fn(f64, f64) -> f64 + Sync),
    sample_count: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<MeasurementSeries, SimulationError> {
    let initial = project_initial(z0, basis);
    synthesize_from_state(config, basis, &initial, sample_count, noise_sigma, seed)
}

/// As [`synthesize_measurements`] from modal coordinates. Noise draws are taken
/// time-major: all sensors at the first instant, then the next instant.
pub fn synthesize_from_state(
    config: &AnalysisConfig,
    basis: &Eigenbasis,
    initial: &ModalState,
    sample_count: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<MeasurementSeries, SimulationError> {
    if sample_count < 2 {
        return Err(SimulationError::Argument(format!("need at least 2 samples, got {sample_count}")));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(SimulationError::Argument(format!("noise sigma must be finite and nonnegative, got {noise_sigma}")));
    }
    let bank = SensorBank::new(&config.sensors, basis);
    let times = sample_times(config.horizon, sample_count);
    let states: Vec<ModalState> = times
        .iter()
        .map(|&t| evolve(initial, t, basis))
        .collect::<Result<_, _>>()?;
    let mut values: Vec<Vec<f64>> = (0..bank.len())
        .map(|i| states.iter().map(|s| measure_with(&bank, i, s)).collect())
        .collect();
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_sigma).expect("valid sigma");
        for k in 0..times.len() {
            for row in values.iter_mut() {
                row[k] += normal.sample(&mut rng);
            }
        }
    }
    Ok(MeasurementSeries { times, values, noise_sigma, seed })
}

impl MeasurementSeries {
    pub fn sensor_count(&self) -> usize {
        self.values.len()
    }

    /// CSV with header `t,y1,...,yq`, one row per instant.
    pub fn write_csv(&self, out: impl Write) -> Result<(), SimulationError> {
        let mut writer = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.sensor_count()).map(|i| format!("y{i}")));
        writer.write_record(&header).map_err(|e| SimulationError::Format(e.to_string()))?;
        for (k, &t) in self.times.iter().enumerate() {
            let mut row = vec![format_float(t)];
            row.extend(self.values.iter().map(|v| format_float(v[k])));
            writer.write_record(&row).map_err(|e| SimulationError::Format(e.to_string()))?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Reads a CSV written by [`MeasurementSeries::write_csv`]. Noise level and
    /// seed are not part of the CSV and come back as zero.
    pub fn read_csv(input: impl Read) -> Result<MeasurementSeries, SimulationError> {
        let fail = |msg: String| SimulationError::Format(msg);
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let header = reader.headers().map_err(|e| fail(e.to_string()))?.clone();
        let q = header.len().saturating_sub(1);
        if q == 0 || &header[0] != "t" || (1..=q).any(|i| header[i] != format!("y{i}")) {
            return Err(fail("header must read t,y1,...,yq".into()));
        }
        let mut times = Vec::new();
        let mut values = vec![Vec::new(); q];
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| fail(e.to_string()))?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| fail(format!("row {}: `{s}` is not a finite number", line + 2)))
            };
            if record.len() != q + 1 {
                return Err(fail(format!("row {}: expected {} fields", line + 2, q + 1)));
            }
            times.push(parse(&record[0])?);
            for i in 0..q {
                values[i].push(parse(&record[i + 1])?);
            }
        }
        if times.len() < 2 || times.windows(2).any(|w| w[1] <= w[0]) || times[0] < 0.0 {
            return Err(fail("need at least two strictly increasing nonnegative times".into()));
        }
        Ok(MeasurementSeries { times, values, noise_sigma: 0.0, seed: 0 })
    }

    pub fn metadata(&self, config: &AnalysisConfig) -> SeriesMetadata {
        SeriesMetadata {
            noise_sigma: self.noise_sigma,
            seed: self.seed,
            config_digest: config_digest(config),
            samples: self.times.len(),
            sensors: self.sensor_count(),
        }
    }

    pub fn write_metadata(&self, config: &AnalysisConfig, mut out: impl Write) -> Result<(), SimulationError> {
        out.write_all(&to_json_bytes(&self.metadata(config)))?;
        Ok(())
    }
}

/// Built-in initial states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialField {
    /// A single basis eigenfunction.
    Mode { n: usize, m: usize, branch: Branch },
    /// Smooth angular bump concentrated near the boundary: on the circle it
    /// equals `cos(u / 2)^(2p)` for angular offset `u` from `center`, and each
    /// angular harmonic continues inward along its first radial eigenfunction.
    /// `p` is the smallest order whose half width at half maximum is at most
    /// `width`.
    Bump { center: f64, width: f64 },
    /// `r cos(theta)`.
    RCos,
}

/// Highest harmonic a bump can carry.
pub const MAX_BUMP_ORDER: usize = MAX_ZERO_ORDER;

impl InitialField {
    /// Parses `mode:n,m,branch`, `bump:center,width` or `poly:rcos`.
    pub fn parse(text: &str) -> Result<InitialField, SimulationError> {
        let unknown = || SimulationError::UnknownPreset(text.to_string());
        let (kind, args) = text.split_once(':').ok_or_else(unknown)?;
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        match (kind.trim(), parts.as_slice()) {
            ("mode", [n, m, branch]) => {
                let n = n.parse().map_err(|_| unknown())?;
                let m = m.parse().map_err(|_| unknown())?;
                let branch = Branch::parse(branch).ok_or_else(unknown)?;
                if m == 0 || (n == 0 && branch == Branch::Sine) {
                    return Err(unknown());
                }
                Ok(InitialField::Mode { n, m, branch })
            }
            ("bump", [center, width]) => {
                let center: f64 = center.parse().map_err(|_| unknown())?;
                let width: f64 = width.parse().map_err(|_| unknown())?;
                if !(center.is_finite() && width.is_finite() && width > 0.0) {
                    return Err(unknown());
                }
                bump_order(width)?;
                Ok(InitialField::Bump { center, width })
            }
            ("poly", ["rcos"]) => Ok(InitialField::RCos),
            _ => Err(unknown()),
        }
    }

    /// Modal coordinates of the field. Single modes are exact; other presets
    /// are projected with the reference quadrature.
    pub fn modal_state(&self, basis: &Eigenbasis) -> Result<ModalState, SimulationError> {
        match *self {
            InitialField::Mode { n, m, branch } => {
                let k = basis.index_of(n, m, branch).ok_or(SimulationError::ModeOutsideBasis {
                    n,
                    m,
                    branch: branch.label(),
                })?;
                Ok(ModalState::unit(basis.len(), k))
            }
            _ => {
                let field = self.sampler(basis)?;
                Ok(project_initial(field.as_ref(), basis))
            }
        }
    }

    /// Pointwise evaluator of the field on the disk of `basis`.
    pub fn sampler<'a>(&self, basis: &'a Eigenbasis) -> Result<Box<dyn Fn(f64, f64) -> f64 + Sync + 'a>, SimulationError> {
        match *self {
            InitialField::Mode { n, m, branch } => {
                let k = basis.index_of(n, m, branch).ok_or(SimulationError::ModeOutsideBasis {
                    n,
                    m,
                    branch: branch.label(),
                })?;
                let mode = basis.modes()[k];
                Ok(Box::new(move |r, t| basis.eval_eigenfunction(&mode, r.min(basis.radius()), t).unwrap_or(0.0)))
            }
            InitialField::Bump { center, width } => {
                let bump = BumpProfile::new(center, width, basis.radius())?;
                Ok(Box::new(move |r, t| bump.eval(r, t)))
            }
            InitialField::RCos => Ok(Box::new(|r, t| r * t.cos())),
        }
    }
}

/// Smallest bump order whose half width at half maximum is at most `width`.
pub fn bump_order(width: f64) -> Result<usize, SimulationError> {
    (1..=MAX_BUMP_ORDER)
        .find(|&p| 2.0 * (0.5f64).powf(0.5 / p as f64).acos() <= width)
        .ok_or_else(|| SimulationError::Argument(format!("bump width {width} is narrower than order {MAX_BUMP_ORDER} resolves")))
}

/// Harmonic expansion of the bump preset.
#[derive(Debug, Clone)]
pub struct BumpProfile {
    center: f64,
    radius: f64,
    /// `(harmonic amplitude on the circle, radial root, J_k at the root)` per harmonic `k`.
    harmonics: Vec<(f64, f64, f64)>,
}

impl BumpProfile {
    pub fn new(center: f64, width: f64, radius: f64) -> Result<BumpProfile, SimulationError> {
        let p = bump_order(width)?;
        // cos(u/2)^(2p) = 4^-p [C(2p, p) + 2 sum_k C(2p, p - k) cos(k u)]
        let mut binomial = vec![1.0f64; 2 * p + 1];
        for i in 1..=2 * p {
            binomial[i] = binomial[i - 1] * (2 * p + 1 - i) as f64 / i as f64;
        }
        let scale = 0.25f64.powi(p as i32);
        let harmonics = (0..=p)
            .map(|k| {
                let amplitude = if k == 0 { binomial[p] } else { 2.0 * binomial[p - k] } * scale;
                let beta = bessel_jprime_zero(k, 1).expect("order within envelope");
                let edge = bessel_j(k, beta).expect("root within envelope");
                (amplitude, beta, edge)
            })
            .collect();
        Ok(BumpProfile { center, radius, harmonics })
    }

    pub fn order(&self) -> usize {
        self.harmonics.len() - 1
    }

    /// Amplitude of harmonic `k` on the boundary circle.
    pub fn harmonic_amplitude(&self, k: usize) -> f64 {
        self.harmonics[k].0
    }

    pub fn eval(&self, r: f64, theta: f64) -> f64 {
        let u = theta - self.center;
        self.harmonics
            .iter()
            .enumerate()
            .map(|(k, &(amplitude, beta, edge))| {
                let radial = bessel_j_upto(beta * r / self.radius, k)[k] / edge;
                amplitude * radial * (k as f64 * u).cos()
            })
            .sum()
    }
}
