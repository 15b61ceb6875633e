//! Neumann eigenbasis of the disk: `phi = N J_n(beta r / a) cos(n theta)` or
//! `sin(n theta)`, with `J_n'(beta) = 0` and growth rate `1 - (beta / a)^2`.

mod bessel;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::Rule;

pub use bessel::{
    bessel_j, bessel_jprime_zero, bessel_jprime_zeros, MAX_ARGUMENT, MAX_ORDER, MAX_ZERO_INDEX,
    MAX_ZERO_ORDER,
};
pub(crate) use bessel::{bessel_j_upto, derivative_from_table};
#[cfg(test)]
pub(crate) use bessel::value_and_derivative;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BasisError {
    #[error("J_{order}({x}) is outside the supported envelope (order <= 60, 0 <= x <= 200)")]
    BesselDomain { order: usize, x: f64 },
    #[error("derivative zero {index} of J_{order} is outside the supported envelope (order <= 40, 1 <= index <= 40)")]
    ZeroDomain { order: usize, index: usize },
    #[error("root search for J_{order}' left the envelope near x = {near}")]
    RootSearch { order: usize, near: f64 },
    #[error("disk radius must be finite and positive, got {0}")]
    InvalidRadius(f64),
    #[error("point (r = {r}, theta = {theta}) is outside the disk of radius {radius}")]
    OutsideDisk { r: f64, theta: f64, radius: f64 },
}

/// Which trigonometric factor a mode carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Cosine,
    Sine,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Cosine => "cosine",
            Branch::Sine => "sine",
        }
    }

    pub fn parse(text: &str) -> Option<Branch> {
        match text {
            "cos" | "cosine" | "c" => Some(Branch::Cosine),
            "sin" | "sine" | "s" => Some(Branch::Sine),
            _ => None,
        }
    }
}

/// Angular and radial truncation of the eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeTruncation {
    pub n_max: usize,
    pub m_max: usize,
}

impl Default for ModeTruncation {
    fn default() -> Self {
        ModeTruncation { n_max: 12, m_max: 8 }
    }
}

impl ModeTruncation {
    pub fn mode_count(&self) -> usize {
        self.m_max * (2 * self.n_max + 1)
    }

    pub fn check(&self) -> Result<(), BasisError> {
        if self.n_max > MAX_ZERO_ORDER || self.m_max == 0 || self.m_max > MAX_ZERO_INDEX {
            return Err(BasisError::ZeroDomain { order: self.n_max, index: self.m_max });
        }
        Ok(())
    }
}

/// One normalized eigenpair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenMode {
    pub n: usize,
    pub m: usize,
    pub branch: Branch,
    /// Root of `J_n'`, dimensionless.
    pub beta: f64,
    /// Growth rate `1 - (beta / a)^2`.
    pub rate: f64,
    pub norm_const: f64,
}

impl EigenMode {
    /// Angular factor `cos(n theta)` or `sin(n theta)`.
    pub fn angular(&self, theta: f64) -> f64 {
        let arg = self.n as f64 * theta;
        match self.branch {
            Branch::Cosine => arg.cos(),
            Branch::Sine => arg.sin(),
        }
    }

    /// Derivative of the angular factor with respect to theta.
    pub fn angular_derivative(&self, theta: f64) -> f64 {
        let n = self.n as f64;
        let arg = n * theta;
        match self.branch {
            Branch::Cosine => -n * arg.sin(),
            Branch::Sine => n * arg.cos(),
        }
    }

    /// Integral of the squared angular factor over one period.
    pub fn angular_mass(&self) -> f64 {
        if self.n == 0 {
            2.0 * PI
        } else {
            PI
        }
    }
}

/// Mode identity without its numerical data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeLabel {
    pub n: usize,
    pub m: usize,
    pub branch: Branch,
}

impl EigenMode {
    pub fn label(&self) -> ModeLabel {
        ModeLabel { n: self.n, m: self.m, branch: self.branch }
    }
}

/// Ordered truncated eigenbasis of a disk of fixed radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenbasis {
    radius: f64,
    trunc: ModeTruncation,
    modes: Vec<EigenMode>,
}

/// Radial Gauss-Legendre points used for normalization of a mode with root `beta`.
fn normalization_points(beta: f64) -> usize {
    64 + 2 * beta.ceil() as usize
}

/// `int_0^a J_n(beta r / a)^2 r dr` by Gauss-Legendre quadrature.
pub fn radial_mass(n: usize, beta: f64, radius: f64) -> f64 {
    let rule = Rule::gauss_legendre(normalization_points(beta), 0.0, radius);
    rule.integrate(|r| {
        let j = bessel_j_upto(beta * r / radius, n)[n];
        j * j * r
    })
}

/// Builds every mode with `n <= n_max`, `m <= m_max`, ordered by `(n, m, branch)`.
pub fn build_eigenbasis(radius: f64, trunc: ModeTruncation) -> Result<Eigenbasis, BasisError> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(BasisError::InvalidRadius(radius));
    }
    trunc.check()?;
    let per_order: Vec<Vec<EigenMode>> = (0..=trunc.n_max)
        .into_par_iter()
        .map(|n| -> Result<Vec<EigenMode>, BasisError> {
            let zeros = bessel_jprime_zeros(n, trunc.m_max)?;
            let mut modes = Vec::with_capacity(2 * trunc.m_max);
            for (k, &beta) in zeros.iter().enumerate() {
                let angular = if n == 0 { 2.0 * PI } else { PI };
                let norm_const = 1.0 / (radial_mass(n, beta, radius) * angular).sqrt();
                let rate = 1.0 - (beta / radius).powi(2);
                let branches: &[Branch] = if n == 0 { &[Branch::Cosine] } else { &[Branch::Cosine, Branch::Sine] };
                for &branch in branches {
                    modes.push(EigenMode { n, m: k + 1, branch, beta, rate, norm_const });
                }
            }
            Ok(modes)
        })
        .collect::<Result<_, _>>()?;
    Ok(Eigenbasis { radius, trunc, modes: per_order.into_iter().flatten().collect() })
}

impl Eigenbasis {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn truncation(&self) -> ModeTruncation {
        self.trunc
    }

    pub fn modes(&self) -> &[EigenMode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Number of modes with nonnegative growth rate.
    pub fn unstable_count(&self) -> usize {
        self.modes.iter().filter(|m| m.rate >= 0.0).count()
    }

    /// Position of mode `(n, m, branch)` in the ordered list.
    pub fn index_of(&self, n: usize, m: usize, branch: Branch) -> Option<usize> {
        let mm = self.trunc.m_max;
        if n > self.trunc.n_max || m == 0 || m > mm || (n == 0 && branch == Branch::Sine) {
            return None;
        }
        if n == 0 {
            return Some(m - 1);
        }
        let b = usize::from(branch == Branch::Sine);
        Some(mm + (n - 1) * 2 * mm + (m - 1) * 2 + b)
    }

    fn check_point(&self, r: f64, theta: f64) -> Result<(), BasisError> {
        if !(r.is_finite() && theta.is_finite() && r >= 0.0 && r <= self.radius * (1.0 + 1e-12)) {
            return Err(BasisError::OutsideDisk { r, theta, radius: self.radius });
        }
        Ok(())
    }

    /// `phi(r, theta)` for a mode of this basis.
    pub fn eval_eigenfunction(&self, mode: &EigenMode, r: f64, theta: f64) -> Result<f64, BasisError> {
        self.check_point(r, theta)?;
        let j = bessel_j_upto(mode.beta * r / self.radius, mode.n)[mode.n];
        Ok(mode.norm_const * j * mode.angular(theta))
    }

    /// `(d phi / dr, (1/r) d phi / dtheta)` at a point.
    pub fn eval_polar_gradient(&self, mode: &EigenMode, r: f64, theta: f64) -> Result<[f64; 2], BasisError> {
        self.check_point(r, theta)?;
        let scale = mode.beta / self.radius;
        if r == 0.0 {
            // J_1(x) ~ x/2; every other order has a vanishing gradient at the centre.
            if mode.n != 1 {
                return Ok([0.0, 0.0]);
            }
            let slope = mode.norm_const * scale / 2.0;
            return Ok([slope * mode.angular(theta), slope * mode.angular_derivative(theta)]);
        }
        let table = bessel_j_upto(scale * r, mode.n + 1);
        let radial = mode.norm_const * scale * derivative_from_table(&table, mode.n) * mode.angular(theta);
        let angular = mode.norm_const * table[mode.n] / r * mode.angular_derivative(theta);
        Ok([radial, angular])
    }

    /// Cartesian gradient `(g_x, g_y)` at a point.
    pub fn eval_eigengradient(&self, mode: &EigenMode, r: f64, theta: f64) -> Result<[f64; 2], BasisError> {
        let [radial, angular] = self.eval_polar_gradient(mode, r, theta)?;
        Ok(polar_to_cartesian(radial, angular, theta))
    }

    /// Tangential derivative `(1/a) d phi / dtheta` on the boundary circle.
    pub fn boundary_tangential(&self, mode: &EigenMode, theta: f64) -> f64 {
        let j = bessel_j_upto(mode.beta, mode.n)[mode.n];
        mode.norm_const * j * mode.angular_derivative(theta) / self.radius
    }
}

/// Rotates polar gradient components at angle `theta` into Cartesian ones.
pub fn polar_to_cartesian(radial: f64, angular: f64, theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [radial * c - angular * s, radial * s + angular * c]
}
