//! Disk domain, target boundary arc, sensors, and the analysis configuration
//! document.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::basis::{ModeTruncation, MAX_ZERO_INDEX, MAX_ZERO_ORDER};

/// Relative slack for points that should sit exactly on the boundary circle.
pub const BOUNDARY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("malformed configuration at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), reason: reason.into() }
}

/// Maps an angle into `[0, 2 pi)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Signed difference `theta - reference` wrapped into `[-pi, pi)`.
pub fn wrap_offset(theta: f64, reference: f64) -> f64 {
    (theta - reference + PI).rem_euclid(TAU) - PI
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskDomain {
    pub a: f64,
}

/// Target arc `[theta_lo, theta_hi]` on the boundary circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryArc {
    pub theta_lo: f64,
    pub theta_hi: f64,
}

impl BoundaryArc {
    pub fn full_circle() -> BoundaryArc {
        BoundaryArc { theta_lo: 0.0, theta_hi: TAU }
    }

    /// Validated arc; the lower end is shifted into `[0, 2 pi)` and the arc may
    /// not wrap past `2 pi`.
    pub fn new(theta_lo: f64, theta_hi: f64) -> Result<BoundaryArc, ConfigError> {
        if !(theta_lo.is_finite() && theta_hi.is_finite()) {
            return Err(invalid("gamma", "angles must be finite"));
        }
        if theta_hi <= theta_lo {
            return Err(invalid("gamma", "empty arc: theta_hi must exceed theta_lo"));
        }
        let turns = (theta_lo / TAU).floor();
        let (mut lo, mut hi) = (theta_lo, theta_hi);
        if turns != 0.0 {
            lo -= turns * TAU;
            hi -= turns * TAU;
        }
        if lo >= TAU {
            lo = 0.0;
        }
        if hi > TAU {
            if hi <= TAU * (1.0 + BOUNDARY_SLACK) {
                hi = TAU;
            } else {
                return Err(invalid("gamma", "arc crosses theta = 0; rotate the configuration instead"));
            }
        }
        if hi <= lo {
            return Err(invalid("gamma", "empty arc after normalization"));
        }
        Ok(BoundaryArc { theta_lo: lo, theta_hi: hi })
    }

    pub fn angular_length(&self) -> f64 {
        self.theta_hi - self.theta_lo
    }

    pub fn contains(&self, theta: f64) -> bool {
        let t = normalize_angle(theta);
        (self.theta_lo..=self.theta_hi).contains(&t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightProfile {
    /// Constant density `1 / measure`.
    #[default]
    Uniform,
    /// `(1 + cos(2 pi u / w)) / measure` for angular offset `u` from the
    /// midpoint of a support of angular width `w`; zero at the edges and
    /// twice the uniform density at the midpoint.
    #[serde(alias = "cosine-bump")]
    CosineBump,
}

impl WeightProfile {
    /// Density shape relative to the uniform one at angular offset `offset`
    /// from the midpoint; depends on `|offset|` only.
    pub fn shape(self, offset: f64, width: f64) -> f64 {
        let u = offset.abs();
        if u > 0.5 * width {
            return 0.0;
        }
        match self {
            WeightProfile::Uniform => 1.0,
            WeightProfile::CosineBump => 1.0 + (TAU * u / width).cos(),
        }
    }
}

fn unit_gain() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorWeight {
    #[serde(default)]
    pub profile: WeightProfile,
    /// Overall multiplier of the density; point sensors use it as the amplitude
    /// of their Dirac mass.
    #[serde(default = "unit_gain")]
    pub gain: f64,
}

impl Default for SensorWeight {
    fn default() -> Self {
        SensorWeight { profile: WeightProfile::Uniform, gain: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarPoint {
    pub r: f64,
    pub theta: f64,
}

/// Polar rectangle `[r1, r2] x [theta1, theta2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sector {
    pub r1: f64,
    pub r2: f64,
    pub theta1: f64,
    pub theta2: f64,
}

/// Angular interval `[theta1, theta2]` on the boundary circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcSupport {
    pub theta1: f64,
    pub theta2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    Pointwise,
    InternalZone,
    BoundaryZone,
}

/// A sensor: where it looks and how it weights what it sees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SensorSpec {
    Pointwise {
        location: PolarPoint,
        #[serde(default)]
        weight: SensorWeight,
    },
    InternalZone {
        support: Sector,
        #[serde(default)]
        weight: SensorWeight,
    },
    BoundaryZone {
        support: ArcSupport,
        #[serde(default)]
        weight: SensorWeight,
    },
}

impl SensorSpec {
    pub fn pointwise(r: f64, theta: f64) -> SensorSpec {
        SensorSpec::Pointwise { location: PolarPoint { r, theta }, weight: SensorWeight::default() }
    }

    pub fn internal_zone(r1: f64, r2: f64, theta1: f64, theta2: f64, profile: WeightProfile) -> SensorSpec {
        SensorSpec::InternalZone {
            support: Sector { r1, r2, theta1, theta2 },
            weight: SensorWeight { profile, gain: 1.0 },
        }
    }

    pub fn boundary_zone(theta1: f64, theta2: f64, profile: WeightProfile) -> SensorSpec {
        SensorSpec::BoundaryZone {
            support: ArcSupport { theta1, theta2 },
            weight: SensorWeight { profile, gain: 1.0 },
        }
    }

    pub fn kind(&self) -> SensorKind {
        match self {
            SensorSpec::Pointwise { .. } => SensorKind::Pointwise,
            SensorSpec::InternalZone { .. } => SensorKind::InternalZone,
            SensorSpec::BoundaryZone { .. } => SensorKind::BoundaryZone,
        }
    }

    pub fn weight(&self) -> SensorWeight {
        match *self {
            SensorSpec::Pointwise { weight, .. }
            | SensorSpec::InternalZone { weight, .. }
            | SensorSpec::BoundaryZone { weight, .. } => weight,
        }
    }

    fn weight_mut(&mut self) -> &mut SensorWeight {
        match self {
            SensorSpec::Pointwise { weight, .. }
            | SensorSpec::InternalZone { weight, .. }
            | SensorSpec::BoundaryZone { weight, .. } => weight,
        }
    }

    pub fn gain(&self) -> f64 {
        self.weight().gain
    }

    /// Copy with the weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> SensorSpec {
        let mut out = *self;
        out.weight_mut().gain *= factor;
        out
    }

    /// Angular position: the location of a point sensor or the midpoint of a
    /// zone, in `[0, 2 pi)`.
    pub fn center_angle(&self) -> f64 {
        match *self {
            SensorSpec::Pointwise { location, .. } => normalize_angle(location.theta),
            SensorSpec::InternalZone { support, .. } => normalize_angle(0.5 * (support.theta1 + support.theta2)),
            SensorSpec::BoundaryZone { support, .. } => normalize_angle(0.5 * (support.theta1 + support.theta2)),
        }
    }

    /// Copy moved so that its angular position is `theta`; shape and radial
    /// extent are kept.
    pub fn placed_at(&self, theta: f64) -> SensorSpec {
        let theta = normalize_angle(theta);
        let recenter = |t1: f64, t2: f64| {
            let width = t2 - t1;
            let lo = normalize_angle(theta - 0.5 * width);
            (lo, lo + width)
        };
        match *self {
            SensorSpec::Pointwise { location, weight } => {
                SensorSpec::Pointwise { location: PolarPoint { r: location.r, theta }, weight }
            }
            SensorSpec::InternalZone { support, weight } => {
                let (theta1, theta2) = recenter(support.theta1, support.theta2);
                SensorSpec::InternalZone { support: Sector { theta1, theta2, ..support }, weight }
            }
            SensorSpec::BoundaryZone { support, weight } => {
                let (theta1, theta2) = recenter(support.theta1, support.theta2);
                SensorSpec::BoundaryZone { support: ArcSupport { theta1, theta2 }, weight }
            }
        }
    }

    /// Copy rotated by `delta` about the disk centre.
    pub fn rotated(&self, delta: f64) -> SensorSpec {
        let shift = |t: f64| t + delta;
        match *self {
            SensorSpec::Pointwise { location, weight } => SensorSpec::Pointwise {
                location: PolarPoint { r: location.r, theta: normalize_angle(location.theta + delta) },
                weight,
            },
            SensorSpec::InternalZone { support, weight } => {
                let lo = normalize_angle(shift(support.theta1));
                let theta2 = lo + (support.theta2 - support.theta1);
                SensorSpec::InternalZone { support: Sector { theta1: lo, theta2, ..support }, weight }
            }
            SensorSpec::BoundaryZone { support, weight } => {
                let lo = normalize_angle(shift(support.theta1));
                let theta2 = lo + (support.theta2 - support.theta1);
                SensorSpec::BoundaryZone { support: ArcSupport { theta1: lo, theta2 }, weight }
            }
        }
    }

    /// True for a point sensor sitting on the boundary circle.
    pub fn is_boundary_pointwise(&self, radius: f64) -> bool {
        match *self {
            SensorSpec::Pointwise { location, .. } => (location.r - radius).abs() <= BOUNDARY_SLACK * radius,
            _ => false,
        }
    }

    /// Measure of the support: area for an internal zone, arc length for a
    /// boundary zone, zero for a point.
    pub fn support_measure(&self, radius: f64) -> f64 {
        match *self {
            SensorSpec::Pointwise { .. } => 0.0,
            SensorSpec::InternalZone { support, .. } => {
                0.5 * (support.theta2 - support.theta1) * (support.r2 * support.r2 - support.r1 * support.r1)
            }
            SensorSpec::BoundaryZone { support, .. } => radius * (support.theta2 - support.theta1),
        }
    }

    fn validate(&mut self, radius: f64, field: &str) -> Result<(), ConfigError> {
        let gain = self.gain();
        if !(gain.is_finite() && gain > 0.0) {
            return Err(invalid(format!("{field}.weight.gain"), "gain must be finite and positive"));
        }
        let angular = |t1: f64, t2: f64| -> Result<(f64, f64), ConfigError> {
            if !(t1.is_finite() && t2.is_finite()) {
                return Err(invalid(format!("{field}.support"), "angles must be finite"));
            }
            let width = t2 - t1;
            if !(width > 0.0 && width <= TAU) {
                return Err(invalid(format!("{field}.support"), "angular width must lie in (0, 2 pi]"));
            }
            let lo = normalize_angle(t1);
            if lo == t1 {
                Ok((t1, t2))
            } else {
                Ok((lo, lo + width))
            }
        };
        match self {
            SensorSpec::Pointwise { location, .. } => {
                if !(location.r.is_finite() && location.theta.is_finite()) {
                    return Err(invalid(format!("{field}.location"), "coordinates must be finite"));
                }
                if location.r < 0.0 || location.r > radius * (1.0 + BOUNDARY_SLACK) {
                    return Err(invalid(format!("{field}.location"), "point lies outside the closed disk"));
                }
                location.theta = normalize_angle(location.theta);
            }
            SensorSpec::InternalZone { support, .. } => {
                if !(support.r1.is_finite() && support.r2.is_finite()) {
                    return Err(invalid(format!("{field}.support"), "radii must be finite"));
                }
                if support.r1 < 0.0 || support.r2 <= support.r1 {
                    return Err(invalid(format!("{field}.support"), "need 0 <= r1 < r2"));
                }
                if support.r2 > radius {
                    return Err(invalid(format!("{field}.support"), "r2 exceeds the disk radius"));
                }
                let (t1, t2) = angular(support.theta1, support.theta2)?;
                support.theta1 = t1;
                support.theta2 = t2;
            }
            SensorSpec::BoundaryZone { support, .. } => {
                let (t1, t2) = angular(support.theta1, support.theta2)?;
                support.theta1 = t1;
                support.theta2 = t2;
            }
        }
        Ok(())
    }
}

/// How a sensor responds to a mode gradient in the rank test and Gramian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientFunctional {
    /// Both Cartesian components, one row each.
    #[default]
    Components,
    /// The scalar sum of the Cartesian components.
    Sum,
}

fn default_horizon() -> f64 {
    1.0
}
fn default_rank_tol() -> f64 {
    1e-8
}
fn default_gram_tol() -> f64 {
    1e-10
}

/// Validated analysis input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub domain: DiskDomain,
    pub gamma: BoundaryArc,
    pub sensors: Vec<SensorSpec>,
    #[serde(default)]
    pub trunc: ModeTruncation,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
    #[serde(default = "default_gram_tol")]
    pub gram_tol: f64,
    #[serde(default)]
    pub gradient_functional: GradientFunctional,
}

impl AnalysisConfig {
    /// Config with default truncation, horizon and tolerances.
    pub fn new(radius: f64, gamma: BoundaryArc, sensors: Vec<SensorSpec>) -> AnalysisConfig {
        AnalysisConfig {
            domain: DiskDomain { a: radius },
            gamma,
            sensors,
            trunc: ModeTruncation::default(),
            horizon: default_horizon(),
            rank_tol: default_rank_tol(),
            gram_tol: default_gram_tol(),
            gradient_functional: GradientFunctional::default(),
        }
    }

    pub fn radius(&self) -> f64 {
        self.domain.a
    }

    /// Checks every invariant and normalizes angles in place.
    pub fn validate(&mut self) -> Result<(), ConfigError> {
        let a = self.domain.a;
        if !(a.is_finite() && a > 0.0) {
            return Err(invalid("domain.a", "radius must be finite and positive"));
        }
        self.gamma = BoundaryArc::new(self.gamma.theta_lo, self.gamma.theta_hi)?;
        if self.sensors.is_empty() {
            return Err(invalid("sensors", "at least one sensor is required"));
        }
        for (i, sensor) in self.sensors.iter_mut().enumerate() {
            sensor.validate(a, &format!("sensors[{i}]"))?;
        }
        if self.trunc.m_max == 0 || self.trunc.m_max > MAX_ZERO_INDEX || self.trunc.n_max > MAX_ZERO_ORDER {
            return Err(invalid("trunc", format!("need n_max <= {MAX_ZERO_ORDER} and 1 <= m_max <= {MAX_ZERO_INDEX}")));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(invalid("horizon", "horizon must be finite and positive"));
        }
        for (name, tol) in [("rank_tol", self.rank_tol), ("gram_tol", self.gram_tol)] {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(invalid(name, "tolerance must lie in (0, 1)"));
            }
        }
        Ok(())
    }
}

/// Parses and validates a JSON configuration document.
pub fn parse_config(text: &str) -> Result<AnalysisConfig, ConfigError> {
    let mut config: AnalysisConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

/// Canonical JSON document for a configuration, with every default spelled out.
pub fn emit_config(config: &AnalysisConfig) -> String {
    let mut text = serde_json::to_string_pretty(config).expect("configuration serializes");
    text.push('\n');
    text
}

/// Hex SHA-256 of the canonical configuration document.
pub fn config_digest(config: &AnalysisConfig) -> String {
    format!("{:x}", Sha256::digest(emit_config(config).as_bytes()))
}

/// Density of a sensor's weight at a polar point; zero off the support and
/// for point sensors, whose weight is a Dirac mass.
pub fn sensor_weight(sensor: &SensorSpec, radius: f64, r: f64, theta: f64) -> f64 {
    let weight = sensor.weight();
    let measure = sensor.support_measure(radius);
    match *sensor {
        SensorSpec::Pointwise { .. } => 0.0,
        SensorSpec::InternalZone { support, .. } => {
            if r < support.r1 || r > support.r2 {
                return 0.0;
            }
            let width = support.theta2 - support.theta1;
            let offset = wrap_offset(theta, support.theta1 + 0.5 * width);
            weight.gain * weight.profile.shape(offset, width) / measure
        }
        SensorSpec::BoundaryZone { support, .. } => {
            if (r - radius).abs() > BOUNDARY_SLACK * radius {
                return 0.0;
            }
            let width = support.theta2 - support.theta1;
            let offset = wrap_offset(theta, support.theta1 + 0.5 * width);
            weight.gain * weight.profile.shape(offset, width) / measure
        }
    }
}
