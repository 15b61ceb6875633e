//! Independent Bessel oracle: the ascending series summed exactly in
//! big-integer fixed point, with the argument taken as an exact binary
//! rational. Shares no code with the library.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

/// Fractional bits of the fixed-point representation.
const FRAC_BITS: i64 = 320;

/// `x = mantissa * 2^exponent` exactly, for finite `x > 0`.
fn decompose(x: f64) -> (BigInt, i64) {
    let bits = x.to_bits();
    let exponent = ((bits >> 52) & 0x7ff) as i64;
    let fraction = bits & ((1u64 << 52) - 1);
    if exponent == 0 {
        (BigInt::from(fraction), -1074)
    } else {
        (BigInt::from(fraction | (1u64 << 52)), exponent - 1075)
    }
}

fn shift(v: BigInt, by: i64) -> BigInt {
    if by >= 0 {
        v << (by as usize)
    } else {
        v >> ((-by) as usize)
    }
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::from(1u8), |acc, k| acc * BigInt::from(k))
}

/// `J_n(x) * 2^FRAC_BITS`, truncated.
pub fn series_fixed(n: usize, x: f64) -> BigInt {
    assert!(x >= 0.0 && x.is_finite());
    if x == 0.0 {
        return if n == 0 { BigInt::from(1u8) << FRAC_BITS as usize } else { BigInt::zero() };
    }
    let (mant, exp) = decompose(x);
    // (x/2)^n / n!
    let mut term = shift(mant.pow(n as u32), n as i64 * (exp - 1) + FRAC_BITS) / factorial(n);
    let square = &mant * &mant;
    let mut sum = term.clone();
    let mut k = 1usize;
    while !term.is_zero() {
        term = -shift(term * &square, 2 * (exp - 1)) / BigInt::from(k * (k + n));
        sum += &term;
        k += 1;
    }
    sum
}

fn to_f64(v: &BigInt) -> f64 {
    v.to_f64().expect("finite") * 2f64.powi(-(FRAC_BITS as i32))
}

pub fn bessel_j(n: usize, x: f64) -> f64 {
    to_f64(&series_fixed(n, x))
}

/// Sign of `J_n'(x)` from `(J_{n-1} - J_{n+1}) / 2`, or `-J_1` for `n = 0`,
/// evaluated before rounding.
pub fn jprime_negative(n: usize, x: f64) -> bool {
    let d = if n == 0 {
        -series_fixed(1, x)
    } else {
        series_fixed(n - 1, x) - series_fixed(n + 1, x)
    };
    d.is_negative()
}

/// First `count` nonnegative roots of `J_n'`, with `0` first for `n = 0`.
pub fn jprime_zeros(n: usize, count: usize) -> Vec<f64> {
    let step = 0.2;
    let mut zeros = Vec::new();
    if n == 0 {
        zeros.push(0.0);
    }
    let mut lo = step;
    let mut neg_lo = jprime_negative(n, lo);
    while zeros.len() < count {
        let hi = lo + step;
        let neg_hi = jprime_negative(n, hi);
        if neg_hi != neg_lo {
            let (mut a, mut b) = (lo, hi);
            let neg_a = neg_lo;
            while b - a > 1e-15 * b {
                let mid = 0.5 * (a + b);
                if jprime_negative(n, mid) == neg_a {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            zeros.push(0.5 * (a + b));
        }
        lo = hi;
        neg_lo = neg_hi;
    }
    zeros.truncate(count);
    zeros
}

/// Roots of `J_n'` for `n <= 8`, `m <= 8`, frozen from an independent
/// 30-digit evaluation.
#[allow(clippy::excessive_precision)]
pub const FROZEN_JPRIME_ZEROS: [[f64; 8]; 9] = [
    [0.0, 3.8317059702075123, 7.0155866698156188, 10.173468135062722, 13.323691936314223, 16.470630050877633, 19.615858510468242, 22.760084380592772],
    [1.8411837813406593, 5.3314427735250326, 8.5363163663462858, 11.706004902592064, 14.863588633909033, 18.015527862681804, 21.16436985918879, 24.311326857210776],
    [3.0542369282271403, 6.7061331941584591, 9.9694678230875958, 13.170370856016123, 16.347522318321783, 19.512912782488205, 22.671581772477426, 25.826037141785263],
    [4.2011889412105285, 8.0152365983759522, 11.345924310743006, 14.585848286167028, 17.78874786606647, 20.9724769365377, 24.144897432909265, 27.310057930204349],
    [5.3175531260839944, 9.2823962852416123, 12.681908442638891, 15.964107037731551, 19.196028800048905, 22.401032267689004, 25.589759681386733, 28.767836217666503],
    [6.4156163757002403, 10.519860873772308, 13.9871886301403, 17.312842487884625, 20.575514521386888, 23.803581476593863, 27.01030789777772, 30.20284907898166],
    [7.501266144684147, 11.734935953042708, 15.268181461097873, 18.637443009666202, 21.931715017802236, 25.183925599499626, 28.409776362510085, 31.617875716105035],
    [8.5778364897140741, 12.932386237089576, 16.529365884366944, 19.941853366527342, 23.268052926457571, 26.545032061823576, 29.790748583196614, 33.015178641375142],
    [9.6474216519972168, 14.115518907894618, 17.774012366915256, 21.229062622853124, 24.587197486317681, 27.889269427955092, 31.155326556188325, 34.39662855427218],
];

/// `(order, x, J_order(x))` frozen from an independent 30-digit evaluation.
#[allow(clippy::excessive_precision)]
pub const FROZEN_J_VALUES: [(usize, f64, f64); 10] = [
    (0, 1.0, 0.76519768655796655145),
    (1, 2.5, 0.49709410246427403801),
    (5, 10.0, -0.23406152818679364044),
    (20, 35.5, -0.13912865058540303547),
    (0, 35.0, -0.12684568275631256981),
    (3, 0.001, 2.0833332031250033853e-11),
    (40, 150.0, -0.053178029743433989334),
    (60, 200.0, 0.034156500001271929933),
    (0, 200.0, -0.015437439930565091592),
    (12, 36.7, 0.13300415551062697808),
];
