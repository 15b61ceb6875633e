//! Fixed quadrature rules used by every integral in the crate.

use std::f64::consts::TAU;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Nodes and weights of a one-dimensional rule on a concrete interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Gauss-Legendre rule with `points` nodes on `[lo, hi]`.
    ///
    /// Nodes are mirrored exactly about the midpoint, so odd integrands about
    /// the midpoint cancel to rounding.
    pub fn gauss_legendre(points: usize, lo: f64, hi: f64) -> Rule {
        let points = points.max(1);
        let reference = GaussLegendre::new(NonZeroUsize::new(points).expect("points >= 1"));
        let mut pairs: Vec<(f64, f64)> = reference.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Symmetrize: node k and node points-1-k become exact negatives.
        for k in 0..points / 2 {
            let mirror = points - 1 - k;
            let x = 0.5 * (pairs[mirror].0 - pairs[k].0);
            let w = 0.5 * (pairs[mirror].1 + pairs[k].1);
            pairs[k] = (-x, w);
            pairs[mirror] = (x, w);
        }
        if points % 2 == 1 {
            pairs[points / 2].0 = 0.0;
        }
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        Rule {
            nodes: pairs.iter().map(|&(x, _)| mid + half * x).collect(),
            weights: pairs.iter().map(|&(_, w)| half * w).collect(),
        }
    }

    /// Equispaced trapezoid rule over one full period starting at `start`.
    /// Exact for trigonometric polynomials of degree below `points`.
    pub fn periodic(points: usize, start: f64) -> Rule {
        let points = points.max(1);
        let h = TAU / points as f64;
        Rule {
            nodes: (0..points).map(|k| start + h * k as f64).collect(),
            weights: vec![h; points],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Radial points of the reference disk quadrature.
pub const REFERENCE_RADIAL_POINTS: usize = 200;
/// Angular points of the reference disk quadrature.
pub const REFERENCE_ANGULAR_POINTS: usize = 400;
