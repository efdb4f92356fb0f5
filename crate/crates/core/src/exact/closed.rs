//! Closed-form costs, used as independent oracles for the generic evaluator.

use crate::scalar::{consts, Real};

/// `x mod 2^{-ℓ}`, computed as `(x·2^ℓ − ⌊x·2^ℓ⌋)·2^{-ℓ}`.
fn cell_offset<T: Real>(x: T, bits: u32) -> T {
    let scaled = x * T::pow2(bits);
    (scaled - scaled.floor()) / T::pow2(bits)
}

/// Variance of the unbiased `ℓ`-bit shared-randomness algorithm:
/// `1/12·(1 − 4^{-ℓ}) + 2^{-ℓ}·m − m²` with `m = x mod 2^{-ℓ}`.
pub fn variance_closed_unbiased<T: Real>(x: T, bits: u32) -> T {
    let m = cell_offset(x, bits);
    let step = T::one() / T::pow2(bits);
    (T::one() - step * step) / T::lit(12.0) + step * m - m * m
}

/// `1/6·(1/2 + 4^{-ℓ})`.
pub fn worst_variance_unbiased<T: Real>(bits: u32) -> T {
    let step = T::one() / T::pow2(bits);
    (T::half() + step * step) / T::lit(6.0)
}

pub fn randomized_rounding_mse<T: Real>(x: T) -> T {
    x * (T::one() - x)
}

/// Expected squared error of dithering truncated to `[z, 1 − z]`, for `z ≤ 1/4`.
pub fn truncated_dithering_mse<T: Real>(z: T, x: T) -> T {
    let x = if x > T::half() { T::one() - x } else { x };
    let three = T::lit(3.0);
    let low = (T::half() + z - x) * (z - x).powi(2);
    if x < T::half() - z {
        low + (T::lit(0.125) - (z - x).powi(3)) / three
    } else {
        let top = T::one() - z - x;
        low + (z + x - T::half()) * top * top + (top.powi(3) - (z - x).powi(3)) / three
    }
}

/// Worst case of truncated dithering, attained at `x ∈ {0, 1}` once `z` balances the branches.
pub fn truncated_dithering_cost<T: Real>(z: T) -> T {
    T::lit(2.0) / T::lit(3.0) * z.powi(3) + z * z / T::lit(2.0) + T::one() / T::lit(24.0)
}

/// `x − x² − 3xα + 3x²α + α²/3 + xα² − x²α²`.
pub fn convex_dithered_mse<T: Real>(alpha: T, x: T) -> T {
    let a = alpha;
    let three = T::lit(3.0);
    x - x * x - three * x * a + three * x * x * a + a * a / three + x * a * a - x * x * a * a
}

/// Three-branch quadratic of the limit biased algorithm for general `α`.
pub fn limit_biased_mse<T: Real>(alpha: T, x: T) -> T {
    let a = alpha;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let lo = (T::one() - a) / two;
    if x < lo {
        x * x + a * a / three - x * a
    } else if x < (T::one() + a) / two {
        (three * a - T::one()) / (T::lit(4.0) * a)
            + x * x / a
            + (T::lit(7.0) * a * a - T::lit(9.0) * a) / T::lit(12.0)
            - x * a
            - two * x * (T::one() - a) * (x - lo) / a
    } else {
        x * x + a * a / three + T::one() - a - two * x * (T::one() - a / two)
    }
}

/// The same three branches specialised to `α = 2 − φ`.
pub fn limit_biased_golden_mse<T: Real>(x: T) -> T {
    let phi = consts::phi::<T>();
    let two = T::lit(2.0);
    let alpha = two - phi;
    if x < (T::one() - alpha) / two {
        x * x + (phi - two) * x + (T::lit(5.0) / T::lit(3.0) - phi)
    } else if x < (T::one() + alpha) / two {
        (two * phi - T::lit(3.0)) / (phi - two) * x * x
            + (phi - T::one()) * x
            + (T::lit(23.0) - T::lit(15.0) * phi) / T::lit(12.0)
    } else {
        x * x - phi * x + two / T::lit(3.0)
    }
}

/// Piecewise quadratic of the `ℓ`-bit biased interval algorithm with weight `α`.
pub fn biased_shared_mse<T: Real>(bits: u32, alpha: T, x: T) -> T {
    let a = alpha;
    let two_l = T::pow2(bits);
    let cells = two_l - T::one();
    let psi = a * a * (T::lit(2.0) * two_l - T::one()) / (T::lit(6.0) * cells);
    let lo = (T::one() - a) / T::lit(2.0);
    let hi = (T::one() + a) / T::lit(2.0);
    if x < lo {
        psi - x * a + x * x
    } else if x >= hi {
        psi - (T::one() - x) * a + (T::one() - x) * (T::one() - x)
    } else {
        let i = ((x - lo) * cells / a).floor().min(cells - T::one());
        let gamma = a * (T::one() - a) * i * (i + T::one()) / (two_l * cells)
            + (T::one() - a) * (T::one() - a) * (i + T::one()) / two_l;
        psi + gamma - x * a - x * (T::one() - a) * (i + T::one()) / (two_l / T::lit(2.0)) + x * x
    }
}

/// `½[min(x², (x − (1−α))²) + min((x − α)², (1 − x)²)]`, the greedy three-point biased sender.
pub fn three_point_biased_mse<T: Real>(alpha: T, x: T) -> T {
    let h0 = x.powi(2).min((x - (T::one() - alpha)).powi(2));
    let h1 = (x - alpha).powi(2).min((T::one() - x).powi(2));
    (h0 + h1) / T::lit(2.0)
}

/// Variance of the `k`-bit unbiased algorithm: the one-bit law at the
/// fractional grid position, scaled by `1/R²`. `bits = None` is the limit `1/(12R²)`.
pub fn kbit_variance<T: Real>(k: u32, bits: Option<u32>, x: T) -> T {
    let r = T::pow2(k) - T::one();
    let scaled = r * x;
    let c = scaled.floor().min(r - T::one());
    let p = scaled - c;
    let one_bit = match bits {
        Some(b) => variance_closed_unbiased(p, b),
        None => T::one() / T::lit(12.0),
    };
    one_bit / (r * r)
}
