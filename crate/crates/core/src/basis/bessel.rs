//! Bessel functions of the first kind and the zeros of their derivatives.

use super::BasisError;

/// Largest order accepted by [`bessel_j`].
pub const MAX_ORDER: usize = 60;
/// Largest argument accepted by [`bessel_j`].
pub const MAX_ARGUMENT: f64 = 200.0;
/// Largest order accepted by the derivative-zero search.
pub const MAX_ZERO_ORDER: usize = 40;
/// Largest root index accepted by the derivative-zero search.
pub const MAX_ZERO_INDEX: usize = 40;

const SCAN_STEP: f64 = 0.1;
const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

/// `J_order(x)` for `order <= 60` and `0 <= x <= 200`.
pub fn bessel_j(order: usize, x: f64) -> Result<f64, BasisError> {
    if order > MAX_ORDER || !(0.0..=MAX_ARGUMENT).contains(&x) {
        return Err(BasisError::BesselDomain { order, x });
    }
    Ok(bessel_j_upto(x, order)[order])
}

/// `J_0(x), ..., J_top(x)` by Miller's backward recurrence normalized with
/// `J_0 + 2 sum J_2k = 1`. No envelope check; `x` must be finite and `>= 0`.
pub(crate) fn bessel_j_upto(x: f64, top: usize) -> Vec<f64> {
    let mut out = vec![0.0; top + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let reach = top.max(x.ceil() as usize);
    let start = 2 * ((reach + 20 + ((160 * reach) as f64).sqrt() as usize) / 2 + 1);
    let mut seq = vec![0.0; start + 2];
    seq[start] = 1.0;
    let two_over_x = 2.0 / x;
    for k in (1..=start).rev() {
        seq[k - 1] = two_over_x * k as f64 * seq[k] - seq[k + 1];
        if seq[k - 1].abs() > RESCALE_ABOVE {
            for v in &mut seq[k - 1..] {
                *v *= RESCALE_BY;
            }
        }
    }
    let norm: f64 = seq[0] + 2.0 * seq.iter().step_by(2).skip(1).sum::<f64>();
    for (dst, src) in out.iter_mut().zip(&seq) {
        *dst = src / norm;
    }
    out
}

/// `J_n'(x)` from a table holding at least `J_0..=J_{n+1}`.
pub(crate) fn derivative_from_table(table: &[f64], n: usize) -> f64 {
    if n == 0 {
        -table[1]
    } else {
        0.5 * (table[n - 1] - table[n + 1])
    }
}

/// `J_n(x)`, `J_n'(x)` in one recurrence pass.
#[cfg(test)]
pub(crate) fn value_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let table = bessel_j_upto(x, n + 1);
    (table[n], derivative_from_table(&table, n))
}

/// The `index`-th nonnegative root of `J_order'`, counting `0` as the first
/// root of `J_0'`.
pub fn bessel_jprime_zero(order: usize, index: usize) -> Result<f64, BasisError> {
    if index == 0 {
        return Err(BasisError::ZeroDomain { order, index });
    }
    Ok(bessel_jprime_zeros(order, index)?[index - 1])
}

/// The first `count` nonnegative roots of `J_order'` in increasing order.
pub fn bessel_jprime_zeros(order: usize, count: usize) -> Result<Vec<f64>, BasisError> {
    if order > MAX_ZERO_ORDER || count > MAX_ZERO_INDEX {
        return Err(BasisError::ZeroDomain { order, index: count });
    }
    let slope = |x: f64| derivative_from_table(&bessel_j_upto(x, order + 1), order);
    let mut zeros = Vec::with_capacity(count);
    // J_n' > 0 on (0, n] for n >= 1; -J_1 < 0 on (0, 3.8).
    let mut lo = if order == 0 {
        if count > 0 {
            zeros.push(0.0);
        }
        0.5
    } else {
        order as f64
    };
    let mut f_lo = slope(lo);
    while zeros.len() < count {
        let hi = lo + SCAN_STEP;
        if hi > MAX_ARGUMENT {
            return Err(BasisError::RootSearch { order, near: lo });
        }
        let f_hi = slope(hi);
        if (f_lo < 0.0) != (f_hi < 0.0) {
            zeros.push(bisect(&slope, lo, hi, f_lo));
        }
        lo = hi;
        f_lo = f_hi;
    }
    Ok(zeros)
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        let f_mid = f(mid);
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
}
