//! Recovery of the tangential boundary gradient of the initial state on the
//! observed arc: ridge-regularized modal inversion of the sampled outputs,
//! then the gradient trace of the estimate.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::basis::{Branch, Eigenbasis, ModeLabel};
use crate::model::{AnalysisConfig, BoundaryArc, DiskDomain};
use crate::quadrature::Rule;
use crate::semigroup::MeasurementSeries;
use crate::sensing::SensorBank;

#[derive(Debug, Error)]
pub enum ReconstructionError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("normal equations are numerically singular; use a positive regularization parameter")]
    SingularSystem,
}

/// Collar of boundary points within `r_thickness` of the observed arc,
/// realized as a polar box clipped to the disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InnerRegion {
    pub r_thickness: f64,
    pub r_inner: f64,
    pub r_outer: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub area: f64,
}

/// Points of the collar are `a - r <= rho <= a` and
/// `theta_lo - r/a <= theta <= theta_hi + r/a`, clipped to one turn.
pub fn build_inner_region(gamma: &BoundaryArc, r: f64, domain: &DiskDomain) -> Result<InnerRegion, ReconstructionError> {
    let a = domain.a;
    if !(r.is_finite() && r > 0.0 && r < a) {
        return Err(ReconstructionError::Argument(format!("collar thickness must lie in (0, {a}), got {r}")));
    }
    let pad = r / a;
    let (mut lo, mut hi) = (gamma.theta_lo - pad, gamma.theta_hi + pad);
    if hi - lo >= std::f64::consts::TAU {
        let mid = 0.5 * (lo + hi);
        lo = mid - std::f64::consts::PI;
        hi = mid + std::f64::consts::PI;
    }
    let radial = Rule::gauss_legendre(8, a - r, a);
    let area = (hi - lo) * radial.integrate(|rho| rho);
    Ok(InnerRegion { r_thickness: r, r_inner: a - r, r_outer: a, theta_lo: lo, theta_hi: hi, area })
}

/// Default collar thickness: a quarter of the radius.
pub fn default_thickness(domain: &DiskDomain) -> f64 {
    0.25 * domain.a
}

/// Tuning of the modal inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionOptions {
    /// Ridge weight on the squared coefficient norm.
    pub reg_param: f64,
    /// Highest angular index fitted; `None` picks it from the data.
    pub max_angular: Option<usize>,
    /// Largest ridge bias tolerated on a fitted direction when picking the
    /// angular limit automatically.
    pub bias_tol: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        InversionOptions { reg_param: 1e-10, max_angular: None, bias_tol: 1e-6 }
    }
}

/// Smallest singular value accepted relative to the largest when picking the
/// angular limit.
pub const RELATIVE_CONDITION_FLOOR: f64 = 1e-7;

/// Estimated initial state over the whole basis; zero off the fitted modes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModalEstimate {
    pub coeffs: Vec<f64>,
    pub used_modes: Vec<ModeLabel>,
    pub angular_limit: usize,
    pub residual: f64,
    pub reg_param: f64,
    /// Extreme singular values of the fitted forward map.
    pub sigma_max: f64,
    pub sigma_min: f64,
}

/// Columns fitted for angular limit `k`: first radial modes, `n = 0..=k`.
fn fitted_columns(basis: &Eigenbasis, k: usize) -> Vec<usize> {
    (0..=k)
        .flat_map(|n| {
            let branches: &[Branch] = if n == 0 { &[Branch::Cosine] } else { &[Branch::Cosine, Branch::Sine] };
            branches.iter().map(move |&b| basis.index_of(n, 1, b).expect("n within truncation"))
        })
        .collect()
}

fn extreme_singular_values(m: &DMatrix<f64>) -> (f64, f64) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0.0, 0.0);
    }
    let s = m.clone().svd(false, false).singular_values;
    let min = if m.ncols() > m.nrows() { 0.0 } else { s.min() };
    (s.max(), min)
}

/// Ridge least squares `min |M c - y|^2 + reg |c|^2` over the first radial
/// modes up to an angular limit, where `M` maps initial coefficients to the
/// sampled outputs.
pub fn invert_measurements(
    series: &MeasurementSeries,
    config: &AnalysisConfig,
    basis: &Eigenbasis,
    options: &InversionOptions,
) -> Result<ModalEstimate, ReconstructionError> {
    let q = config.sensors.len();
    if series.sensor_count() != q || series.values.iter().any(|v| v.len() != series.times.len()) {
        return Err(ReconstructionError::Argument(format!(
            "series has {} sensor columns, configuration has {q} sensors",
            series.sensor_count()
        )));
    }
    if !(options.reg_param.is_finite() && options.reg_param >= 0.0) {
        return Err(ReconstructionError::Argument(format!("reg_param must be finite and nonnegative, got {}", options.reg_param)));
    }
    let n_max = basis.truncation().n_max;
    if let Some(k) = options.max_angular {
        if k > n_max {
            return Err(ReconstructionError::Argument(format!("max_angular {k} exceeds n_max {n_max}")));
        }
    }
    let bank = SensorBank::new(&config.sensors, basis);
    let samples = series.times.len();
    let all_columns = fitted_columns(basis, n_max);
    // Rows run over sensors, then samples.
    let rows: Vec<Vec<f64>> = (0..q * samples)
        .into_par_iter()
        .map(|row| {
            let (i, k) = (row / samples, row % samples);
            let t = series.times[k];
            let response = bank.response(i);
            all_columns.iter().map(|&c| response.state[c] * (basis.modes()[c].rate * t).exp()).collect()
        })
        .collect();
    let forward = DMatrix::from_fn(q * samples, all_columns.len(), |r, c| rows[r][c]);
    let data = DVector::from_iterator(q * samples, series.values.iter().flatten().copied());

    let width = |k: usize| 2 * k + 1;
    let limit = match options.max_angular {
        Some(k) => k,
        None => {
            let floor_abs = if options.bias_tol > 0.0 { (options.reg_param / options.bias_tol).sqrt() } else { 0.0 };
            let mut chosen = 0;
            for k in 0..=n_max {
                let (top, bottom) = extreme_singular_values(&forward.columns(0, width(k)).into_owned());
                if top > 0.0 && bottom >= floor_abs.max(RELATIVE_CONDITION_FLOOR * top) {
                    chosen = k;
                } else {
                    break;
                }
            }
            chosen
        }
    };
    let m = forward.columns(0, width(limit)).into_owned();
    let (sigma_max, sigma_min) = extreme_singular_values(&m);
    let mut normal = m.transpose() * &m;
    let rhs = m.transpose() * &data;
    if options.reg_param == 0.0 {
        let eig = normal.clone().symmetric_eigenvalues();
        // Written so that a NaN spectrum also counts as singular.
        let well_posed = eig.min() > 1e-14 * eig.max();
        if !well_posed {
            return Err(ReconstructionError::SingularSystem);
        }
    }
    for d in 0..normal.nrows() {
        normal[(d, d)] += options.reg_param;
    }
    let solution = normal.cholesky().ok_or(ReconstructionError::SingularSystem)?.solve(&rhs);
    let residual = (&m * &solution - &data).norm();
    let mut coeffs = vec![0.0; basis.len()];
    let mut used_modes = Vec::with_capacity(width(limit));
    for (j, &c) in all_columns[..width(limit)].iter().enumerate() {
        coeffs[c] = solution[j];
        used_modes.push(basis.modes()[c].label());
    }
    Ok(ModalEstimate { coeffs, used_modes, angular_limit: limit, residual, reg_param: options.reg_param, sigma_max, sigma_min })
}

/// Quadrature nodes on the observed arc for an angular truncation.
pub fn trace_nodes(n_max: usize) -> usize {
    (4 * n_max + 32).max(64)
}

/// Gradient of a modal field on the boundary, sampled along the arc.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryTrace {
    pub theta: Vec<f64>,
    pub tangential: Vec<f64>,
    /// Identically zero under the Neumann condition.
    pub normal: Vec<f64>,
}

/// Tangential derivative `(1/a) dz/dtheta` of `sum c_k phi_k` at `grid_size`
/// equispaced angles covering the arc, endpoints included.
pub fn trace_gradient_to_gamma(
    coeffs: &[f64],
    gamma: &BoundaryArc,
    basis: &Eigenbasis,
    grid_size: usize,
) -> Result<BoundaryTrace, ReconstructionError> {
    if grid_size < 2 {
        return Err(ReconstructionError::Argument(format!("grid size must be at least 2, got {grid_size}")));
    }
    if coeffs.len() != basis.len() {
        return Err(ReconstructionError::Argument("estimate does not match the basis".into()));
    }
    let span = gamma.theta_hi - gamma.theta_lo;
    let theta: Vec<f64> = (0..grid_size).map(|j| gamma.theta_lo + span * j as f64 / (grid_size - 1) as f64).collect();
    let tangential = theta.iter().map(|&t| tangential_at(coeffs, basis, t)).collect();
    Ok(BoundaryTrace { normal: vec![0.0; grid_size], theta, tangential })
}

fn tangential_at(coeffs: &[f64], basis: &Eigenbasis, theta: f64) -> f64 {
    coeffs
        .iter()
        .zip(basis.modes())
        .filter(|(c, _)| **c != 0.0)
        .map(|(c, mode)| c * basis.boundary_tangential(mode, theta))
        .sum()
}

/// `|T(estimate - reference)| / |T reference|` in L2 of the arc, where `T`
/// is the tangential boundary gradient.
pub fn relative_trace_error(estimate: &[f64], reference: &[f64], gamma: &BoundaryArc, basis: &Eigenbasis) -> f64 {
    let rule = Rule::gauss_legendre(trace_nodes(basis.truncation().n_max), gamma.theta_lo, gamma.theta_hi);
    let diff: Vec<f64> = estimate.iter().zip(reference).map(|(e, r)| e - r).collect();
    let err = rule.integrate(|t| tangential_at(&diff, basis, t).powi(2));
    let norm = rule.integrate(|t| tangential_at(reference, basis, t).powi(2));
    (err / norm).sqrt()
}

/// Output of the full pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionResult {
    pub inner_region: InnerRegion,
    pub modal_estimate: ModalEstimate,
    pub boundary_gradient: BoundaryTrace,
    pub residual: f64,
    pub reg_param: f64,
}

/// Inversion followed by the boundary trace on the configured arc.
pub fn reconstruct(
    series: &MeasurementSeries,
    config: &AnalysisConfig,
    basis: &Eigenbasis,
    options: &InversionOptions,
    grid_size: usize,
    thickness: Option<f64>,
) -> Result<ReconstructionResult, ReconstructionError> {
    let inner_region = build_inner_region(&config.gamma, thickness.unwrap_or_else(|| default_thickness(&config.domain)), &config.domain)?;
    let modal_estimate = invert_measurements(series, config, basis, options)?;
    let boundary_gradient = trace_gradient_to_gamma(&modal_estimate.coeffs, &config.gamma, basis, grid_size)?;
    Ok(ReconstructionResult {
        inner_region,
        residual: modal_estimate.residual,
        reg_param: modal_estimate.reg_param,
        modal_estimate,
        boundary_gradient,
    })
}
