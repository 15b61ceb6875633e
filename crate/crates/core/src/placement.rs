//! Angle-rationality predictor for pairs of boundary sensors and a placement
//! sweep ranked by the smallest Gramian eigenvalue.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::basis::{build_eigenbasis, BasisError};
use crate::model::{normalize_angle, AnalysisConfig};
use crate::observability::strategic_check;
use crate::report::format_float;

#[derive(Debug, Error)]
pub enum PlacementError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("angle grid line {line}: {message}")]
    Grid { line: usize, message: String },
    #[error(transparent)]
    Basis(#[from] BasisError),
}

/// Best rational approximation `p/q` of `x` with `1 <= q <= max_den`, from
/// the convergents and semiconvergents of the continued fraction of `|x|`.
pub fn best_rational(x: f64, max_den: u64) -> (i128, i128) {
    assert!(x.is_finite() && max_den >= 1);
    let sign = if x < 0.0 { -1 } else { 1 };
    let target = x.abs();
    let bound = max_den as i128;
    // (h, k) of the two previous convergents.
    let (mut h_prev, mut k_prev) = (1i128, 0i128);
    let (mut h, mut k) = (target.floor() as i128, 1i128);
    let mut rest = target - target.floor();
    while rest > 0.0 {
        let inv = 1.0 / rest;
        if !inv.is_finite() || inv > 1e18 {
            break;
        }
        let a = inv.floor() as i128;
        rest = inv - inv.floor();
        let k_next = a * k + k_prev;
        if k_next > bound {
            // Largest admissible semiconvergent; keep it only if it is closer.
            let t = (bound - k_prev) / k;
            if t > 0 {
                let (hs, ks) = (t * h + h_prev, t * k + k_prev);
                let err = |p: i128, q: i128| (target - p as f64 / q as f64).abs();
                if err(hs, ks) < err(h, k) {
                    return (sign * hs, ks);
                }
            }
            break;
        }
        let h_next = a * h + h_prev;
        (h_prev, k_prev, h, k) = (h, k, h_next, k_next);
    }
    (sign * h, k)
}

/// Rationality verdict for one multiple `n0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultipleVerdict {
    pub n0: usize,
    /// `n0 * (theta1 - theta2) / pi`.
    pub x: f64,
    pub numerator: i128,
    pub denominator: i128,
    pub error: f64,
    pub rational: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalityReport {
    pub theta_diff: f64,
    pub unstable_modes: usize,
    pub q_max: u64,
    pub tol: f64,
    pub verdicts: Vec<MultipleVerdict>,
    /// True when no multiple up to `unstable_modes` is rational.
    pub predicted_strategic: bool,
}

impl RationalityReport {
    /// Smallest multiple marked rational.
    pub fn first_rational(&self) -> Option<usize> {
        self.verdicts.iter().find(|v| v.rational).map(|v| v.n0)
    }

    /// Smallest multiple whose approximant is an integer: the angular index
    /// at which the two sensors' readings become proportional.
    pub fn predicted_failing_mode(&self) -> Option<usize> {
        self.verdicts.iter().find(|v| v.rational && v.denominator == 1).map(|v| v.n0)
    }
}

/// Marks `n0 (theta1 - theta2) / pi` rational for each `1 <= n0 <= unstable_modes`
/// when its best approximant with denominator at most `q_max` lies within `tol`.
pub fn rationality_predicate(
    theta1: f64,
    theta2: f64,
    unstable_modes: usize,
    q_max: u64,
    tol: f64,
) -> Result<RationalityReport, PlacementError> {
    if unstable_modes < 1 {
        return Err(PlacementError::Argument("J must be at least 1".into()));
    }
    if q_max < 2 {
        return Err(PlacementError::Argument(format!("q_max must be at least 2, got {q_max}")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(PlacementError::Argument(format!("tolerance must be finite and positive, got {tol}")));
    }
    if !(theta1.is_finite() && theta2.is_finite()) {
        return Err(PlacementError::Argument("angles must be finite".into()));
    }
    let theta_diff = theta1 - theta2;
    let verdicts: Vec<MultipleVerdict> = (1..=unstable_modes)
        .map(|n0| {
            let x = n0 as f64 * theta_diff / PI;
            let (numerator, denominator) = best_rational(x, q_max);
            let error = (x - numerator as f64 / denominator as f64).abs();
            MultipleVerdict { n0, x, numerator, denominator, error, rational: error <= tol }
        })
        .collect();
    let predicted_strategic = verdicts.iter().all(|v| !v.rational);
    Ok(RationalityReport { theta_diff, unstable_modes, q_max, tol, verdicts, predicted_strategic })
}

/// One evaluated placement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub angles: Vec<f64>,
    pub lambda_min: f64,
    pub strategic: bool,
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(a.len().cmp(&b.len()))
}

/// Moves sensor `i` of the template to angle `i` of each tuple and ranks the
/// placements by `lambda_min`, largest first, ties broken by the angles.
/// Duplicate tuples (after normalizing to `[0, 2 pi)`) are evaluated once.
pub fn sweep_placements(template: &AnalysisConfig, grid: &[Vec<f64>]) -> Result<Vec<SweepEntry>, PlacementError> {
    if grid.is_empty() {
        return Err(PlacementError::Argument("angle grid is empty".into()));
    }
    let q = template.sensors.len();
    let mut tuples = Vec::with_capacity(grid.len());
    for (i, tuple) in grid.iter().enumerate() {
        if tuple.len() != q {
            return Err(PlacementError::Argument(format!("tuple {} has {} angles, the template has {q} sensors", i + 1, tuple.len())));
        }
        if tuple.iter().any(|t| !t.is_finite()) {
            return Err(PlacementError::Argument(format!("tuple {} has a non-finite angle", i + 1)));
        }
        tuples.push(tuple.iter().map(|&t| normalize_angle(t)).collect::<Vec<f64>>());
    }
    tuples.sort_by(|a, b| lexicographic(a, b));
    tuples.dedup();
    let basis = build_eigenbasis(template.radius(), template.trunc)?;
    let mut entries: Vec<SweepEntry> = tuples
        .into_par_iter()
        .map(|angles| {
            let mut config = template.clone();
            config.sensors = template.sensors.iter().zip(&angles).map(|(s, &t)| s.placed_at(t)).collect();
            let verdict = strategic_check(&config, &basis);
            SweepEntry { angles, lambda_min: verdict.lambda_min, strategic: verdict.strategic }
        })
        .collect();
    entries.sort_by(|a, b| b.lambda_min.total_cmp(&a.lambda_min).then_with(|| lexicographic(&a.angles, &b.angles)));
    Ok(entries)
}

/// Reads candidate tuples: one comma-separated list of angles per line;
/// blank lines and `#` comments are skipped.
pub fn parse_angle_grid(text: &str) -> Result<Vec<Vec<f64>>, PlacementError> {
    let mut grid = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tuple = line
            .split(',')
            .map(|field| {
                let field = field.trim();
                field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| PlacementError::Grid {
                    line: i + 1,
                    message: format!("`{field}` is not a finite angle"),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        grid.push(tuple);
    }
    Ok(grid)
}

/// CSV `theta1,...,thetaq,lambda_min,strategic` in ranked order.
pub fn sweep_csv(entries: &[SweepEntry]) -> Vec<u8> {
    let q = entries.first().map_or(0, |e| e.angles.len());
    let mut out = Vec::new();
    {
        let mut writer = csv::Writer::from_writer(&mut out);
        let mut header: Vec<String> = (1..=q).map(|i| format!("theta{i}")).collect();
        header.push("lambda_min".into());
        header.push("strategic".into());
        writer.write_record(&header).expect("in-memory write");
        for entry in entries {
            let mut row: Vec<String> = entry.angles.iter().map(|&t| format_float(t)).collect();
            row.push(format_float(entry.lambda_min));
            row.push(entry.strategic.to_string());
            writer.write_record(&row).expect("in-memory write");
        }
        writer.flush().expect("in-memory write");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::ModeTruncation;
    use crate::model::{BoundaryArc, SensorSpec};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn pair_template(trunc: (usize, usize)) -> AnalysisConfig {
        let mut c = AnalysisConfig::new(1.0, BoundaryArc::full_circle(), vec![SensorSpec::pointwise(1.0, 0.0); 2]);
        c.trunc = ModeTruncation { n_max: trunc.0, m_max: trunc.1 };
        c
    }

    #[test]
    fn best_rational_examples() {
        assert_eq!(best_rational(0.5, 10), (1, 2));
        assert_eq!(best_rational(-0.75, 10), (-3, 4));
        assert_eq!(best_rational(0.0, 10), (0, 1));
        assert_eq!(best_rational(3.0, 2), (3, 1));
        assert_eq!(best_rational(PI, 7), (22, 7));
        assert_eq!(best_rational(PI, 113), (355, 113));
        // Below 106 the semiconvergent 311/99 beats the convergent 22/7.
        assert_eq!(best_rational(PI, 100), (311, 99));
        assert_eq!(best_rational(PI, 110), (333, 106));
        assert_eq!(best_rational(1.0 / 3.0, 2), (1, 2));
    }

    #[test]
    fn best_rational_is_optimal_by_brute_force() {
        use std::f64::consts::{E, FRAC_1_PI, SQRT_2};
        for (x, bound) in [(FRAC_1_PI, 50u64), (E, 80), (-SQRT_2, 40), (0.999, 30), (0.6180339887, 90)] {
            let (p, q) = best_rational(x, bound);
            let got = (x - p as f64 / q as f64).abs();
            for den in 1..=bound as i128 {
                let num = (x * den as f64).round() as i128;
                assert!(got <= (x - num as f64 / den as f64).abs() + 1e-15, "{x}: {p}/{q} beaten by {num}/{den}");
            }
        }
    }

    #[test]
    fn predicate_examples() {
        let quarter = rationality_predicate(FRAC_PI_2, 0.0, 2, 12, 1e-9).unwrap();
        assert!(quarter.verdicts[1].rational);
        assert_eq!((quarter.verdicts[1].numerator, quarter.verdicts[1].denominator), (1, 1));
        assert!(!quarter.predicted_strategic);

        let same = rationality_predicate(0.7, 0.7, 3, 12, 1e-9).unwrap();
        assert!(same.verdicts.iter().all(|v| v.rational && v.numerator == 0 && v.denominator == 1));
        assert!(!same.predicted_strategic);

        // With a tight denominator bound 1 rad is never a rational multiple of pi.
        let generic = rationality_predicate(1.0, 0.0, 5, 12, 1e-9).unwrap();
        assert!(generic.predicted_strategic);

        // With a bound of 10^6 every n0/pi for n0 <= 5 has an approximant within
        // about 1e-12, so the predicate calls them rational.
        let loose = rationality_predicate(1.0, 0.0, 5, 1_000_000, 1e-9).unwrap();
        assert!(loose.verdicts.iter().all(|v| v.rational && v.error < 2e-12));
        assert_eq!((loose.verdicts[0].numerator, loose.verdicts[0].denominator), (265381, 833719));
        assert!(!loose.predicted_strategic);

        assert!(rationality_predicate(1.0, 0.0, 0, 12, 1e-9).is_err());
        assert!(rationality_predicate(1.0, 0.0, 3, 1, 1e-9).is_err());
        assert!(rationality_predicate(1.0, 0.0, 3, 12, 0.0).is_err());
    }

    #[test]
    fn predicate_agrees_with_the_rank_test() {
        let basis = crate::basis::build_eigenbasis(1.0, ModeTruncation { n_max: 12, m_max: 2 }).unwrap();
        let rational = [(1, 2), (1, 3), (2, 5), (3, 7), (5, 12), (1, 11)];
        for (k, d) in rational {
            let diff = k as f64 * PI / d as f64;
            let report = rationality_predicate(diff, 0.0, 12, 12, 1e-9).unwrap();
            assert!(!report.predicted_strategic);
            assert_eq!(report.first_rational(), Some(1));
            assert_eq!(report.predicted_failing_mode(), Some(d));
            let mut cfg = pair_template((12, 2));
            cfg.sensors = vec![SensorSpec::pointwise(1.0, 0.2), SensorSpec::pointwise(1.0, 0.2 + diff)];
            let verdict = strategic_check(&cfg, &basis);
            assert!(!verdict.strategic);
            assert_eq!(verdict.first_failing_mode(), Some(d));
        }
        for diff in [1.0, 2f64.sqrt(), (5f64.sqrt() - 1.0) / 2.0] {
            let report = rationality_predicate(diff, 0.0, 12, 12, 1e-9).unwrap();
            assert!(report.predicted_strategic);
            let mut cfg = pair_template((12, 2));
            cfg.sensors = vec![SensorSpec::pointwise(1.0, 0.2), SensorSpec::pointwise(1.0, 0.2 + diff)];
            assert!(strategic_check(&cfg, &basis).rank_condition());
        }
    }

    #[test]
    fn sweep_examples() {
        let template = pair_template((12, 8));
        let single = sweep_placements(&template, &[vec![0.0, 1.0]]).unwrap();
        assert_eq!(single.len(), 1);

        let ranked = sweep_placements(&template, &[vec![0.0, FRAC_PI_2], vec![0.0, 1.0]]).unwrap();
        assert_eq!(ranked[0].angles, vec![0.0, 1.0]);
        assert!(ranked[0].lambda_min > ranked[1].lambda_min);
        assert!(!ranked[1].strategic);

        let small = sweep_placements(&pair_template((6, 3)), &[vec![0.0, FRAC_PI_2], vec![0.0, 1.0]]).unwrap();
        assert!(small[0].strategic && !small[1].strategic);

        let rotations: Vec<Vec<f64>> = (0..5).map(|k| vec![0.3 * k as f64, 0.3 * k as f64 + 1.0]).collect();
        let rotated = sweep_placements(&pair_template((6, 3)), &rotations).unwrap();
        let top = rotated[0].lambda_min;
        assert!(rotated.iter().all(|e| (e.lambda_min - top).abs() <= 1e-9 * top));

        assert!(sweep_placements(&template, &[]).is_err());
        assert!(sweep_placements(&template, &[vec![0.0]]).is_err());
    }

    #[test]
    fn grid_parsing_and_csv() {
        let grid = parse_angle_grid("# header\n0, 1.5\n\n 2.0,3 # trailing\n").unwrap();
        assert_eq!(grid, vec![vec![0.0, 1.5], vec![2.0, 3.0]]);
        assert!(matches!(parse_angle_grid("0,x\n"), Err(PlacementError::Grid { line: 1, .. })));
        let entries = vec![
            SweepEntry { angles: vec![0.0, 1.0], lambda_min: 0.5, strategic: true },
            SweepEntry { angles: vec![0.0, 2.0], lambda_min: 0.25, strategic: false },
        ];
        let text = String::from_utf8(sweep_csv(&entries)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "theta1,theta2,lambda_min,strategic");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].ends_with("5.0000000000000000e-1,true"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]

        #[test]
        fn sweep_ignores_grid_order(shift in 0usize..4, a in 0.1f64..3.0, b in 0.1f64..3.0) {
            let template = pair_template((4, 2));
            let mut grid = vec![vec![0.0, a], vec![0.0, b], vec![1.0, 1.0 + a], vec![0.0, FRAC_PI_2], vec![0.0, a]];
            let reference = sweep_placements(&template, &grid).unwrap();
            grid.rotate_left(shift);
            grid.reverse();
            prop_assert_eq!(sweep_placements(&template, &grid).unwrap(), reference);
        }
    }
}
