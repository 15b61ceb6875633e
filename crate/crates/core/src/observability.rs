//! Mode-wise rank test of the gradient sensor matrices and the truncated
//! gradient observability Gramian on the observed arc.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::basis::{bessel_j, Branch, EigenMode, Eigenbasis, ModeLabel, ModeTruncation};
use crate::model::{AnalysisConfig, GradientFunctional, SensorSpec};
use crate::sensing::{sensor_response, SensorBank};

/// Relative cutoff on the diagonal of the pivoted QR of the trace amplitudes.
pub const TRACE_RANK_TOL: f64 = 1e-10;

/// Which radial indices contribute rows to a sensor matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialPolicy {
    /// Only `m = 1`. Exact for boundary point sensors, whose radial factor is
    /// a common scalar per column.
    First,
    /// Rows for every `m <= m_max`, stacked.
    Exhaustive,
}

impl RadialPolicy {
    /// `First` when every sensor is a boundary point sensor, else `Exhaustive`.
    pub fn for_sensors(sensors: &[SensorSpec], radius: f64) -> RadialPolicy {
        if sensors.iter().all(|s| s.is_boundary_pointwise(radius)) {
            RadialPolicy::First
        } else {
            RadialPolicy::Exhaustive
        }
    }

    fn radial_indices(self, m_max: usize) -> std::ops::RangeInclusive<usize> {
        match self {
            RadialPolicy::First => 1..=1,
            RadialPolicy::Exhaustive => 1..=m_max,
        }
    }
}

/// Sensor matrix of one angular index. Columns are the cosine then sine
/// branch (one column for `n = 0`); rows run over radial indices, then
/// sensors, then functional components.
#[derive(Debug, Clone, PartialEq)]
pub struct GnMatrix {
    pub n: usize,
    pub entries: DMatrix<f64>,
    /// Nonincreasing.
    pub singular_values: Vec<f64>,
}

impl GnMatrix {
    pub fn multiplicity(&self) -> usize {
        self.entries.ncols()
    }

    /// Number of singular values above `rel_tol` times the largest.
    pub fn rank(&self, rel_tol: f64) -> usize {
        numerical_rank(&self.singular_values, rel_tol)
    }
}

fn numerical_rank(sorted_desc: &[f64], rel_tol: f64) -> usize {
    match sorted_desc.first() {
        Some(&top) if top > 0.0 => sorted_desc.iter().filter(|&&s| s > rel_tol * top).count(),
        _ => 0,
    }
}

fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return vec![0.0; m.ncols()];
    }
    let mut values: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// The scalar gradient reading of a sensor against a mode: the sum of the
/// Cartesian components of the gradient at the point, or of its weighted
/// average over the support.
pub fn gradient_functional(mode: &EigenMode, sensor: &SensorSpec, basis: &Eigenbasis) -> f64 {
    let k = basis.index_of(mode.n, mode.m, mode.branch).expect("mode of this basis");
    let g = sensor_response(sensor, basis).gradient[k];
    g[0] + g[1]
}

/// Rows contributed by one gradient reading.
fn functional_rows(g: [f64; 2], functional: GradientFunctional) -> impl Iterator<Item = f64> {
    let rows: [Option<f64>; 2] = match functional {
        GradientFunctional::Sum => [Some(g[0] + g[1]), None],
        GradientFunctional::Components => [Some(g[0]), Some(g[1])],
    };
    rows.into_iter().flatten()
}

/// Rows per sensor per radial index.
pub fn rows_per_reading(functional: GradientFunctional) -> usize {
    match functional {
        GradientFunctional::Sum => 1,
        GradientFunctional::Components => 2,
    }
}

/// Sensor matrix for angular index `n`.
pub fn assemble_gn(
    n: usize,
    sensors: &[SensorSpec],
    basis: &Eigenbasis,
    policy: RadialPolicy,
    functional: GradientFunctional,
) -> GnMatrix {
    assemble_gn_from_bank(n, &SensorBank::new(sensors, basis), basis, policy, functional)
}

/// As [`assemble_gn`] with precomputed sensor responses.
pub fn assemble_gn_from_bank(
    n: usize,
    bank: &SensorBank,
    basis: &Eigenbasis,
    policy: RadialPolicy,
    functional: GradientFunctional,
) -> GnMatrix {
    let branches: &[Branch] = if n == 0 { &[Branch::Cosine] } else { &[Branch::Cosine, Branch::Sine] };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for m in policy.radial_indices(basis.truncation().m_max) {
        let columns: Vec<usize> = branches.iter().map(|&b| basis.index_of(n, m, b).expect("n within truncation")).collect();
        for response in bank.responses() {
            let per_column: Vec<Vec<f64>> =
                columns.iter().map(|&k| functional_rows(response.gradient[k], functional).collect()).collect();
            for r in 0..rows_per_reading(functional) {
                rows.push(per_column.iter().map(|c| c[r]).collect());
            }
        }
    }
    let entries = DMatrix::from_fn(rows.len(), branches.len(), |i, j| rows[i][j]);
    let singular_values = singular_values(&entries);
    GnMatrix { n, entries, singular_values }
}

/// Truncated Gramian in orthonormal coordinates of the observable trace span.
#[derive(Debug, Clone, PartialEq)]
pub struct GramianMatrix {
    pub dim: usize,
    pub entries: DMatrix<f64>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// The mode whose trace column was selected for each coordinate.
    pub coordinate_index: Vec<ModeLabel>,
}

impl GramianMatrix {
    /// `lambda_min > tol * lambda_max` with a nonzero spectrum.
    pub fn is_positive_definite(&self, tol: f64) -> bool {
        self.dim > 0 && self.lambda_max > 0.0 && self.lambda_min > tol * self.lambda_max
    }
}

/// Time-weighted Gram of per-mode functionals:
/// `(F^T F)_{ab} * integral_0^T exp((rate_a + rate_b) s) ds`.
pub fn modal_gramian(functionals: &DMatrix<f64>, rates: &[f64], horizon: f64) -> DMatrix<f64> {
    assert_eq!(functionals.ncols(), rates.len());
    let gram = functionals.transpose() * functionals;
    DMatrix::from_fn(rates.len(), rates.len(), |a, b| gram[(a, b)] * time_kernel(rates[a] + rates[b], horizon))
}

fn time_kernel(rate: f64, horizon: f64) -> f64 {
    if rate == 0.0 {
        horizon
    } else {
        (rate * horizon).exp_m1() / rate
    }
}

/// Businger-Golub Householder QR with column-norm pivoting. Returns the
/// pivot order and the leading `rank` rows of `R` (columns in pivot order),
/// where rows stop once `|R_kk| <= rel_tol * |R_00|`.
pub fn pivoted_qr(matrix: &DMatrix<f64>, rel_tol: f64) -> (Vec<usize>, DMatrix<f64>) {
    let (rows, cols) = matrix.shape();
    let mut a = matrix.clone();
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut rank = 0;
    let mut lead = 0.0;
    for k in 0..rows.min(cols) {
        let norms: Vec<f64> = (k..cols).map(|j| a.view((k, j), (rows - k, 1)).norm()).collect();
        let (offset, &best) = norms.iter().enumerate().fold((0, &norms[0]), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
        if k == 0 {
            lead = best;
        }
        if best == 0.0 || best <= rel_tol * lead {
            break;
        }
        a.swap_columns(k, k + offset);
        perm.swap(k, k + offset);
        // Householder reflector zeroing a[k+1.., k].
        let x0 = a[(k, k)];
        let alpha = if x0 >= 0.0 { -best } else { best };
        let mut v: Vec<f64> = (k..rows).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..cols {
                let dot: f64 = v.iter().enumerate().map(|(i, vi)| vi * a[(k + i, j)]).sum();
                let f = 2.0 * dot / vnorm2;
                for (i, vi) in v.iter().enumerate() {
                    a[(k + i, j)] -= f * vi;
                }
            }
        }
        rank = k + 1;
    }
    let r = DMatrix::from_fn(rank, cols, |i, j| if j < i { 0.0 } else { a[(i, j)] });
    (perm, r)
}

/// Orthonormal basis (columns) of the row space of `matrix`, as revealed by
/// [`pivoted_qr`], plus the pivot columns that span it.
pub fn row_space_basis(matrix: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, Vec<usize>) {
    let cols = matrix.ncols();
    let (perm, r) = pivoted_qr(matrix, rel_tol);
    let rank = r.nrows();
    if rank == 0 {
        return (DMatrix::zeros(cols, 0), Vec::new());
    }
    let mut unpermuted = DMatrix::zeros(rank, cols);
    for (j, &p) in perm.iter().enumerate() {
        unpermuted.set_column(p, &r.column(j));
    }
    let q = unpermuted.transpose().qr().q();
    (q.columns(0, rank).into_owned(), perm[..rank].to_vec())
}

/// `(1/a) N J_n(beta)`: the tangential trace of a mode on the circle is this
/// times the theta-derivative of its angular factor.
fn trace_amplitude(mode: &EigenMode, radius: f64) -> f64 {
    mode.norm_const * bessel_j(mode.n, mode.beta).expect("zero inside the Bessel envelope") / radius
}

/// Gramian of the configured sensors over the `n >= 1` modes, compressed to
/// the span of their tangential gradient traces on the observed arc. That
/// span is the same for every arc of positive length.
pub fn assemble_gramian(config: &AnalysisConfig, basis: &Eigenbasis) -> GramianMatrix {
    assemble_gramian_from_bank(config, basis, &SensorBank::new(&config.sensors, basis))
}

/// As [`assemble_gramian`] with precomputed sensor responses.
pub fn assemble_gramian_from_bank(config: &AnalysisConfig, basis: &Eigenbasis, bank: &SensorBank) -> GramianMatrix {
    let coords: Vec<usize> = (0..basis.len()).filter(|&k| basis.modes()[k].n >= 1).collect();
    let rates: Vec<f64> = coords.iter().map(|&k| basis.modes()[k].rate).collect();
    let per = rows_per_reading(config.gradient_functional);
    let row_values: Vec<f64> = bank
        .responses()
        .iter()
        .flat_map(|response| {
            let rows: Vec<Vec<f64>> = coords
                .iter()
                .map(|&k| functional_rows(response.gradient[k], config.gradient_functional).collect())
                .collect();
            (0..per).flat_map(move |r| rows.iter().map(|c| c[r]).collect::<Vec<_>>())
        })
        .collect();
    let functionals = DMatrix::from_row_slice(bank.len() * per, coords.len(), &row_values);
    let full = modal_gramian(&functionals, &rates, config.horizon);

    // The tangential trace of mode (n, m, b) is its amplitude times the
    // derivative of cos/sin(n theta). Those derivatives are linearly
    // independent on every arc of positive length, so the trace span is the
    // row space of the amplitude map from modes to (n, b) profiles. Sampling
    // the traces instead would lose profiles to roundoff on short arcs.
    let profiles: Vec<(usize, Branch)> = coords.iter().map(|&k| (basis.modes()[k].n, basis.modes()[k].branch)).collect();
    let mut distinct = profiles.clone();
    distinct.sort();
    distinct.dedup();
    let amplitudes = DMatrix::from_fn(distinct.len(), coords.len(), |i, j| {
        if profiles[j] == distinct[i] {
            trace_amplitude(&basis.modes()[coords[j]], basis.radius())
        } else {
            0.0
        }
    });
    let (span, pivots) = row_space_basis(&amplitudes, TRACE_RANK_TOL);
    let compressed = span.transpose() * &full * &span;
    let entries = (&compressed + compressed.transpose()) * 0.5;
    let dim = entries.nrows();
    let mut eigenvalues: Vec<f64> = if dim == 0 {
        Vec::new()
    } else {
        SymmetricEigen::new(entries.clone()).eigenvalues.iter().copied().collect()
    };
    eigenvalues.sort_by(f64::total_cmp);
    let lambda_min = eigenvalues.first().copied().unwrap_or(0.0);
    let lambda_max = eigenvalues.last().copied().unwrap_or(0.0);
    let coordinate_index = pivots.iter().map(|&j| basis.modes()[coords[j]].label()).collect();
    GramianMatrix { dim, entries, eigenvalues, lambda_min, lambda_max, coordinate_index }
}

/// Estimate of the observability constant from the smallest Gramian eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NuEstimate {
    Finite(f64),
    /// The Gramian is singular: no finite constant exists in these coordinates.
    Unbounded,
}

impl NuEstimate {
    pub fn value(self) -> f64 {
        match self {
            NuEstimate::Finite(v) => v,
            NuEstimate::Unbounded => f64::INFINITY,
        }
    }
}

impl Serialize for NuEstimate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match *self {
            NuEstimate::Finite(v) => serializer.serialize_f64(v),
            NuEstimate::Unbounded => serializer.serialize_str("inf"),
        }
    }
}

/// `1 / sqrt(lambda_min)`, or unbounded when `lambda_min <= 0`.
pub fn nu_estimate(lambda_min: f64) -> NuEstimate {
    if lambda_min > 0.0 {
        NuEstimate::Finite(1.0 / lambda_min.sqrt())
    } else {
        NuEstimate::Unbounded
    }
}

/// Rank diagnostics of one angular index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeRank {
    pub n: usize,
    pub rank: usize,
    pub required: usize,
    pub singular_values: Vec<f64>,
}

/// Outcome of the strategic test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategicVerdict {
    pub strategic: bool,
    pub q_check: bool,
    pub sensor_count: usize,
    pub required_sensors: usize,
    pub failing_modes: Vec<ModeRank>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub gramian_dim: usize,
    pub nu_estimate: NuEstimate,
    pub trunc_used: ModeTruncation,
    pub rank_tol: f64,
    pub gram_tol: f64,
    pub radial_policy: RadialPolicy,
    pub gradient_functional: GradientFunctional,
    pub modes: Vec<ModeRank>,
}

impl StrategicVerdict {
    /// The rank half of the verdict: enough sensors and no failing mode.
    pub fn rank_condition(&self) -> bool {
        self.q_check && self.failing_modes.is_empty()
    }

    /// The Gramian half of the verdict.
    pub fn gramian_condition(&self) -> bool {
        self.gramian_dim > 0 && self.lambda_max > 0.0 && self.lambda_min > self.gram_tol * self.lambda_max
    }

    /// Smallest failing angular index, if any.
    pub fn first_failing_mode(&self) -> Option<usize> {
        self.failing_modes.first().map(|f| f.n)
    }
}

/// Rank test for every `1 <= n <= n_max` plus the Gramian, with the radial
/// policy picked from the sensor kinds.
pub fn strategic_check(config: &AnalysisConfig, basis: &Eigenbasis) -> StrategicVerdict {
    strategic_check_with(config, basis, RadialPolicy::for_sensors(&config.sensors, config.radius()))
}

pub fn strategic_check_with(config: &AnalysisConfig, basis: &Eigenbasis, policy: RadialPolicy) -> StrategicVerdict {
    let trunc = basis.truncation();
    let bank = SensorBank::new(&config.sensors, basis);
    let modes: Vec<ModeRank> = (1..=trunc.n_max)
        .into_par_iter()
        .map(|n| {
            let gn = assemble_gn_from_bank(n, &bank, basis, policy, config.gradient_functional);
            ModeRank { n, rank: gn.rank(config.rank_tol), required: gn.multiplicity(), singular_values: gn.singular_values }
        })
        .collect();
    let failing_modes: Vec<ModeRank> = modes.iter().filter(|m| m.rank < m.required).cloned().collect();
    let required_sensors = if trunc.n_max >= 1 { 2 } else { 1 };
    let q_check = config.sensors.len() >= required_sensors;
    let gramian = assemble_gramian_from_bank(config, basis, &bank);
    let gramian_ok = gramian.is_positive_definite(config.gram_tol);
    StrategicVerdict {
        strategic: q_check && failing_modes.is_empty() && gramian_ok,
        q_check,
        sensor_count: config.sensors.len(),
        required_sensors,
        failing_modes,
        lambda_min: gramian.lambda_min,
        lambda_max: gramian.lambda_max,
        gramian_dim: gramian.dim,
        nu_estimate: nu_estimate(gramian.lambda_min),
        trunc_used: trunc,
        rank_tol: config.rank_tol,
        gram_tol: config.gram_tol,
        radial_policy: policy,
        gradient_functional: config.gradient_functional,
        modes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{bessel_j, build_eigenbasis};
    use crate::model::{BoundaryArc, WeightProfile};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn basis(n_max: usize, m_max: usize) -> Eigenbasis {
        build_eigenbasis(1.0, ModeTruncation { n_max, m_max }).unwrap()
    }

    fn config(sensors: Vec<SensorSpec>, trunc: (usize, usize)) -> AnalysisConfig {
        let mut c = AnalysisConfig::new(1.0, BoundaryArc::full_circle(), sensors);
        c.trunc = ModeTruncation { n_max: trunc.0, m_max: trunc.1 };
        c
    }

    fn boundary_pair(diff: f64) -> Vec<SensorSpec> {
        vec![SensorSpec::pointwise(1.0, 0.3), SensorSpec::pointwise(1.0, 0.3 + diff)]
    }

    #[test]
    fn functional_examples() {
        let b = basis(3, 2);
        let constant = b.modes()[0];
        let zone = SensorSpec::internal_zone(0.2, 0.9, -0.4, 0.4, WeightProfile::Uniform);
        for s in [SensorSpec::pointwise(0.5, 1.0), zone, SensorSpec::boundary_zone(1.0, 2.0, WeightProfile::CosineBump)] {
            assert_eq!(gradient_functional(&constant, &s, &b), 0.0);
        }
        let k = b.index_of(1, 1, Branch::Cosine).unwrap();
        let mode = b.modes()[k];
        let at_zero = b.eval_eigengradient(&mode, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(gradient_functional(&mode, &SensorSpec::pointwise(1.0, 0.0), &b), at_zero[0] + at_zero[1], epsilon = 1e-15);
        let peak = mode.norm_const * bessel_j(1, mode.beta).unwrap();
        assert_abs_diff_eq!(gradient_functional(&mode, &SensorSpec::pointwise(1.0, FRAC_PI_2), &b), peak, epsilon = 1e-14);
    }

    #[test]
    fn symmetric_zone_kills_only_the_axis_component_of_sine_modes() {
        let b = basis(6, 2);
        let zone = SensorSpec::internal_zone(0.3, 0.8, -0.5, 0.5, WeightProfile::Uniform);
        let response = sensor_response(&zone, &b);
        for (k, mode) in b.modes().iter().enumerate().filter(|(_, m)| m.branch == Branch::Sine) {
            assert!(response.state[k].abs() <= 1e-14);
            assert!(response.gradient[k][0].abs() <= 1e-14, "axis component of {mode:?}");
            if mode.n <= 4 {
                assert!(response.gradient[k][1].abs() > 1e-3, "cross component of {mode:?} is even");
            }
        }
    }

    #[test]
    fn gn_examples() {
        let b = basis(4, 3);
        let boundary = [SensorSpec::pointwise(1.0, 0.0), SensorSpec::pointwise(1.0, FRAC_PI_2)];
        for functional in [GradientFunctional::Components, GradientFunctional::Sum] {
            let g0 = assemble_gn(0, &boundary, &b, RadialPolicy::First, functional);
            assert_eq!(g0.multiplicity(), 1);
            assert!(g0.entries.iter().all(|&x| x.abs() <= 1e-15));
            assert_eq!(g0.rank(1e-8), 0);
            let g2 = assemble_gn(2, &boundary, &b, RadialPolicy::First, functional);
            assert!(g2.entries.column(0).iter().all(|&x| x.abs() <= 1e-14));
            assert_eq!(g2.rank(1e-8), 1);
            let g1 = assemble_gn(1, &[SensorSpec::pointwise(1.0, 0.0), SensorSpec::pointwise(1.0, 1.0)], &b, RadialPolicy::First, functional);
            assert_eq!(g1.rank(1e-8), 2);
        }
        let g = assemble_gn(3, &boundary, &b, RadialPolicy::Exhaustive, GradientFunctional::Components);
        assert_eq!(g.entries.nrows(), 3 * 2 * 2);
        assert!(g.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn literal_sum_is_blind_at_quarter_angles() {
        let b = basis(4, 1);
        let sensors = [SensorSpec::pointwise(1.0, FRAC_PI_4), SensorSpec::pointwise(1.0, FRAC_PI_4 + 1.0)];
        let sum = assemble_gn(1, &sensors, &b, RadialPolicy::First, GradientFunctional::Sum);
        assert!(sum.entries.row(0).iter().all(|&x| x.abs() <= 1e-15));
        assert_eq!(sum.rank(1e-8), 1);
        let components = assemble_gn(1, &sensors, &b, RadialPolicy::First, GradientFunctional::Components);
        assert_eq!(components.rank(1e-8), 2);
    }

    #[test]
    fn strategic_examples() {
        let single = config(vec![SensorSpec::pointwise(1.0, 0.0)], (4, 2));
        let v = strategic_check(&single, &basis(4, 2));
        assert!(!v.strategic && !v.q_check);

        let quarter = config(boundary_pair(FRAC_PI_2), (4, 2));
        let v = strategic_check(&quarter, &basis(4, 2));
        assert!(!v.strategic);
        assert_eq!(v.first_failing_mode(), Some(2));
        assert_eq!(v.failing_modes.iter().map(|f| f.n).collect::<Vec<_>>(), vec![2, 4]);
        assert!(v.lambda_min <= v.gram_tol * v.lambda_max);
        assert_eq!(v.radial_policy, RadialPolicy::First);

        let generic = config(boundary_pair(1.0), (6, 3));
        let v = strategic_check(&generic, &basis(6, 3));
        assert!(v.strategic && v.failing_modes.is_empty());
        assert_eq!(v.gramian_dim, 12);
        assert!(matches!(v.nu_estimate, NuEstimate::Finite(x) if x > 0.0));

        // At (12, 8) every mode passes the rank test, but two channels per
        // angular index leave twelve decay rates to be told apart in time
        // alone; the Gramian condition then sits near 1e-13 < gram_tol.
        let v = strategic_check(&config(boundary_pair(1.0), (12, 8)), &basis(12, 8));
        assert!(v.rank_condition());
        assert_eq!(v.gramian_dim, 24);
        let ratio = v.lambda_min / v.lambda_max;
        assert!(ratio > 1e-15 && ratio < 1e-12, "{ratio}");
        assert!(!v.strategic);
    }

    #[test]
    fn gramian_examples() {
        let b = basis(3, 2);
        let mut empty = config(vec![], (3, 2));
        empty.sensors.clear();
        let g = assemble_gramian(&empty, &b);
        assert!(g.entries.iter().all(|&x| x == 0.0));
        assert_eq!(g.lambda_min, 0.0);

        let (c, mu, t) = (0.7, -3.2, 1.5);
        let single = modal_gramian(&DMatrix::from_element(1, 1, c), &[mu], t);
        assert_abs_diff_eq!(single[(0, 0)], c * c * ((2.0 * mu * t).exp() - 1.0) / (2.0 * mu), epsilon = 1e-15);
        assert_eq!(modal_gramian(&DMatrix::from_element(1, 1, c), &[0.0], t)[(0, 0)], c * c * t);

        let cfg = config(vec![SensorSpec::pointwise(0.6, 1.0), SensorSpec::boundary_zone(2.0, 3.0, WeightProfile::CosineBump)], (3, 2));
        let g = assemble_gramian(&cfg, &b);
        assert_eq!(g.dim, 6);
        assert!((&g.entries - g.entries.transpose()).amax() <= 1e-12);
        let direct = SymmetricEigen::new(g.entries.clone()).eigenvalues.min();
        assert_abs_diff_eq!(g.lambda_min, direct, epsilon = 1e-15 * g.lambda_max);
        assert!(g.coordinate_index.iter().all(|l| l.n >= 1));
    }

    #[test]
    fn nu_examples() {
        assert_eq!(nu_estimate(1.0), NuEstimate::Finite(1.0));
        assert_eq!(nu_estimate(4.0), NuEstimate::Finite(0.5));
        assert_eq!(nu_estimate(0.0), NuEstimate::Unbounded);
        assert_eq!(serde_json::to_string(&NuEstimate::Unbounded).unwrap(), "\"inf\"");
    }

    #[test]
    fn pivoted_qr_reveals_rank_and_row_space() {
        // 6 x 5 matrix of rank 3 with one dominant column.
        let left = DMatrix::from_fn(6, 3, |i, j| ((i * 3 + j * 7) % 5) as f64 - 1.5 + 0.1 * i as f64);
        let right = DMatrix::from_fn(3, 5, |i, j| if i == j { 1.0 } else { 0.3 * (i + 2 * j) as f64 - 0.4 });
        let mut m = &left * &right;
        m.column_mut(4).scale_mut(1e3);
        let (span, pivots) = row_space_basis(&m, 1e-10);
        assert_eq!(span.ncols(), 3);
        assert_eq!(pivots[0], 4);
        assert!((span.transpose() * &span - DMatrix::identity(3, 3)).amax() <= 1e-12);
        // Every row of m lies in the span.
        let projected = &m * &span * span.transpose();
        assert!((projected - &m).amax() <= 1e-9 * m.amax());
        assert_eq!(row_space_basis(&DMatrix::zeros(3, 4), 1e-10).0.ncols(), 0);
    }

    #[test]
    fn gramian_is_arc_independent() {
        let b = basis(6, 3);
        let sensors = vec![SensorSpec::pointwise(0.7, 0.4), SensorSpec::boundary_zone(2.0, 2.8, WeightProfile::Uniform)];
        let mut wide = config(sensors.clone(), (6, 3));
        let mut narrow = config(sensors, (6, 3));
        wide.gamma = BoundaryArc::new(0.0, 5.0).unwrap();
        narrow.gamma = BoundaryArc::new(1.0, 1.2).unwrap();
        let (gw, gn) = (assemble_gramian(&wide, &b), assemble_gramian(&narrow, &b));
        assert_eq!(gw.dim, 12);
        assert_eq!(gn, gw);
    }

    #[test]
    fn short_arcs_still_see_rank_deficient_pairs() {
        // A third-turn pair misses one n = 3 direction; its trace on a short
        // arc is nearly a combination of the other profiles but not quite.
        let b = basis(8, 4);
        let mut c = config(boundary_pair(PI / 3.0).iter().map(|s| s.rotated(2.48)).collect(), (8, 4));
        c.gamma = BoundaryArc::new(2.07, 2.6).unwrap();
        let v = strategic_check(&c, &b);
        assert_eq!(v.first_failing_mode(), Some(3));
        assert_eq!(v.gramian_dim, 16);
        assert!(!v.gramian_condition(), "ratio {:e}", v.lambda_min / v.lambda_max);
    }

    fn seeded_sensor(seed: u64) -> SensorSpec {
        let u = |k: u64| ((seed.wrapping_mul(6364136223846793005).wrapping_add(k * 1442695040888963407) >> 11) as f64) / (1u64 << 53) as f64;
        let theta = 2.0 * PI * u(1);
        match seed % 3 {
            0 => SensorSpec::pointwise(0.3 + 0.7 * u(2), theta),
            1 => SensorSpec::internal_zone(0.2 * u(2), 0.4 + 0.5 * u(3), theta, theta + 0.2 + u(4), WeightProfile::CosineBump),
            _ => SensorSpec::boundary_zone(theta, theta + 0.1 + u(3), WeightProfile::Uniform),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn rotation_preserves_singular_values(seed in 0u64..1000, delta in -PI..PI, n in 1usize..=5) {
            let b = basis(5, 2);
            let sensors: Vec<SensorSpec> = (0..3).map(|i| seeded_sensor(seed * 3 + i)).collect();
            let rotated: Vec<SensorSpec> = sensors.iter().map(|s| s.rotated(delta)).collect();
            for functional in [GradientFunctional::Components] {
                let a = assemble_gn(n, &sensors, &b, RadialPolicy::Exhaustive, functional);
                let r = assemble_gn(n, &rotated, &b, RadialPolicy::Exhaustive, functional);
                for (x, y) in a.singular_values.iter().zip(&r.singular_values) {
                    prop_assert!((x - y).abs() <= 1e-9 * a.singular_values[0].max(1e-300));
                }
            }
        }

        #[test]
        fn scaling_weights_scales_matrices(seed in 0u64..1000, c in 0.01f64..100.0) {
            let b = basis(4, 2);
            let sensors: Vec<SensorSpec> = (0..3).map(|i| seeded_sensor(seed * 5 + i)).collect();
            let scaled: Vec<SensorSpec> = sensors.iter().map(|s| s.scaled(c)).collect();
            let g = assemble_gn(2, &sensors, &b, RadialPolicy::Exhaustive, GradientFunctional::Components);
            let gs = assemble_gn(2, &scaled, &b, RadialPolicy::Exhaustive, GradientFunctional::Components);
            prop_assert!((&gs.entries - &g.entries * c).amax() <= 1e-12 * c * g.entries.amax());
            let (cfg, cfg_scaled) = (config(sensors, (4, 2)), config(scaled, (4, 2)));
            let (v, vs) = (strategic_check(&cfg, &b), strategic_check(&cfg_scaled, &b));
            prop_assert_eq!(v.strategic, vs.strategic);
            prop_assert!((vs.lambda_min - c * c * v.lambda_min).abs() <= 1e-9 * c * c * v.lambda_max);
        }

        #[test]
        fn adding_a_sensor_never_lowers_lambda_min(seed in 0u64..1000) {
            let b = basis(4, 2);
            let mut sensors: Vec<SensorSpec> = (0..2).map(|i| seeded_sensor(seed * 7 + i)).collect();
            let before = assemble_gramian(&config(sensors.clone(), (4, 2)), &b);
            sensors.push(seeded_sensor(seed * 7 + 2));
            let after = assemble_gramian(&config(sensors, (4, 2)), &b);
            prop_assert!(after.lambda_min >= before.lambda_min - 1e-12 * after.lambda_max);
        }
    }
}
