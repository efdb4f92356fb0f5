//! Minimax lower bounds from discrete input priors.
//!
//! Against a fixed prior `q`, the best deterministic `k`-bit algorithm
//! partitions the support into `2^k` groups and decodes each group to its
//! weighted mean. Optimal squared-error clusters on a line are contiguous in
//! sorted order, so the optimum is a 1-D dynamic program over split points.
//! Its cost lower-bounds the worst-case cost of every randomized algorithm.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{consts, Real};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Finite prior on `[0, 1]`: strictly increasing points with positive weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDistribution<T> {
    points: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> DiscreteDistribution<T> {
    /// Validates and sorts `(point, weight)` pairs.
    pub fn new(points: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::MalformedDistribution(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.len() < 2 {
            return Err(Error::MalformedDistribution(
                "at least 2 points are required".into(),
            ));
        }
        let mut pairs: Vec<(T, T)> = points.into_iter().zip(weights).collect();
        for &(p, w) in &pairs {
            if !(p >= T::zero() && p <= T::one()) {
                return Err(Error::MalformedDistribution(format!(
                    "point {p} is outside [0, 1]"
                )));
            }
            if !(w > T::zero() && w.is_finite()) {
                return Err(Error::MalformedDistribution(format!(
                    "weight {w} is not positive"
                )));
            }
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite points"));
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::MalformedDistribution(
                "points must be distinct".into(),
            ));
        }
        let total = pairs.iter().fold(T::zero(), |acc, p| acc + p.1);
        if (total - T::one()).abs() > T::lit(WEIGHT_SUM_TOLERANCE) {
            return Err(Error::MalformedDistribution(format!(
                "weights sum to {total}, not 1"
            )));
        }
        let (points, weights) = pairs.into_iter().unzip();
        Ok(DiscreteDistribution { points, weights })
    }

    /// Like [`new`](Self::new) but rescales the weights to sum to one first.
    pub fn normalized(points: Vec<T>, weights: Vec<T>) -> Result<Self> {
        let total = weights.iter().fold(T::zero(), |acc, &w| acc + w);
        if total.is_nan() || total <= T::zero() {
            return Err(Error::MalformedDistribution(
                "weights must have a positive sum".into(),
            ));
        }
        Self::new(points, weights.into_iter().map(|w| w / total).collect())
    }

    /// Parses `point weight` lines; `#` starts a comment. Points and weights
    /// may be written as fractions.
    pub fn parse(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::MalformedDistribution(format!(
                    "line {}: expected `point weight`, got `{line}`",
                    n + 1
                )));
            }
            let num = |s: &str| {
                crate::protocols::parse_number(s)
                    .map_err(|e| Error::MalformedDistribution(format!("line {}: {e}", n + 1)))
            };
            points.push(T::lit(num(fields[0])?));
            weights.push(T::lit(num(fields[1])?));
        }
        Self::new(points, weights)
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Optimal deterministic algorithm against a prior, and its cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCertificate<T> {
    pub k: u32,
    pub bound: T,
    /// One decode value per non-empty group, increasing. Fewer than `2^k`
    /// when the prior has fewer than `2^k` points.
    pub centroids: Vec<T>,
    /// Index into `centroids` for each support point, non-decreasing.
    pub partition: Vec<usize>,
}

fn group_count<T>(q: &DiscreteDistribution<T>, k: u32) -> usize {
    if k >= usize::BITS - 1 {
        q.points.len()
    } else {
        (1usize << k).min(q.points.len())
    }
}

/// Builds the certificate for groups given as exclusive end indices.
fn certificate<T: Real>(
    q: &DiscreteDistribution<T>,
    k: u32,
    ends: &[usize],
) -> BoundCertificate<T> {
    let mut centroids = Vec::with_capacity(ends.len());
    let mut partition = Vec::with_capacity(q.len());
    let mut bound = T::zero();
    let mut start = 0;
    for (g, &end) in ends.iter().enumerate() {
        let (mut w, mut wx) = (T::zero(), T::zero());
        for i in start..end {
            w = w + q.weights[i];
            wx = wx + q.weights[i] * q.points[i];
        }
        let c = wx / w;
        for i in start..end {
            bound = bound + q.weights[i] * (q.points[i] - c).powi(2);
            partition.push(g);
        }
        centroids.push(c);
        start = end;
    }
    BoundCertificate {
        k,
        bound,
        centroids,
        partition,
    }
}

/// Weighted within-group squared error of `points[i..j]`, from prefix sums.
struct SegmentCosts<T> {
    w: Vec<T>,
    wx: Vec<T>,
    wxx: Vec<T>,
}

impl<T: Real> SegmentCosts<T> {
    fn new(q: &DiscreteDistribution<T>) -> Self {
        let n = q.len();
        let (mut w, mut wx, mut wxx) = (
            vec![T::zero(); n + 1],
            vec![T::zero(); n + 1],
            vec![T::zero(); n + 1],
        );
        for i in 0..n {
            let (p, m) = (q.points[i], q.weights[i]);
            w[i + 1] = w[i] + m;
            wx[i + 1] = wx[i] + m * p;
            wxx[i + 1] = wxx[i] + m * p * p;
        }
        SegmentCosts { w, wx, wxx }
    }

    fn cost(&self, i: usize, j: usize) -> T {
        let w = self.w[j] - self.w[i];
        let wx = self.wx[j] - self.wx[i];
        let wxx = self.wxx[j] - self.wxx[i];
        (wxx - wx * wx / w).max(T::zero())
    }
}

/// Exactly optimal deterministic `k`-bit algorithm against `q`.
pub fn optimal_deterministic_cost<T: Real>(
    q: &DiscreteDistribution<T>,
    k: u32,
) -> BoundCertificate<T> {
    let n = q.len();
    let m = group_count(q, k);
    let seg = SegmentCosts::new(q);
    // best[g][j]: cost of covering points[..j] with g groups
    let inf = T::infinity();
    let mut best = vec![vec![inf; n + 1]; m + 1];
    let mut cut = vec![vec![0usize; n + 1]; m + 1];
    best[0][0] = T::zero();
    for g in 1..=m {
        for j in g..=n {
            for i in (g - 1)..j {
                if best[g - 1][i] == inf {
                    continue;
                }
                let c = best[g - 1][i] + seg.cost(i, j);
                if c < best[g][j] {
                    best[g][j] = c;
                    cut[g][j] = i;
                }
            }
        }
    }
    let mut ends = vec![0; m];
    let mut j = n;
    for g in (1..=m).rev() {
        ends[g - 1] = j;
        j = cut[g][j];
    }
    certificate(q, k, &ends)
}

/// Exhaustive search over every contiguous partition into `min(2^k, n)`
/// groups. Exponential; an oracle for small supports.
pub fn brute_force_cost<T: Real>(q: &DiscreteDistribution<T>, k: u32) -> BoundCertificate<T> {
    let n = q.len();
    let m = group_count(q, k);
    let mut best: Option<BoundCertificate<T>> = None;
    // every (m − 1)-subset of the n − 1 gaps, as a bitmask
    for mask in 0u64..(1u64 << (n - 1)) {
        if mask.count_ones() as usize != m - 1 {
            continue;
        }
        let mut ends: Vec<usize> = (0..n - 1)
            .filter(|g| mask >> g & 1 == 1)
            .map(|g| g + 1)
            .collect();
        ends.push(n);
        let c = certificate(q, k, &ends);
        if best.as_ref().is_none_or(|b| c.bound < b.bound) {
            best = Some(c);
        }
    }
    best.expect("at least one partition")
}

/// Three-point lemma: `q(0)·q(1/2) / (4(q(0) + q(1/2)))`, for priors on
/// `{0, 1/2, 1}` with `q(0) ≤ q(1)`.
pub fn three_point_bound_closed<T: Real>(q0: T, q_half: T) -> Result<T> {
    let q1 = T::one() - q0 - q_half;
    let valid = q0 >= T::zero() && q_half >= T::zero() && q1 >= -T::lit(WEIGHT_SUM_TOLERANCE);
    if !valid {
        return Err(Error::MalformedDistribution(format!(
            "q(0) = {q0}, q(1/2) = {q_half} is not a prior"
        )));
    }
    if q0 > q1 + T::lit(WEIGHT_SUM_TOLERANCE) {
        return Err(Error::Invalid(
            "the three-point lemma assumes q(0) ≤ q(1)".into(),
        ));
    }
    let s = q0 + q_half;
    if s == T::zero() {
        return Ok(T::zero());
    }
    Ok(q0 * q_half / (T::lit(4.0) * s))
}

pub const NAMED_DISTRIBUTIONS: [&str; 4] = ["uniform3", "sqrt2-3", "uniform4", "golden4"];

/// The priors behind the published one-bit bounds.
pub fn named_distribution<T: Real>(name: &str) -> Result<DiscreteDistribution<T>> {
    let third = T::one() / T::lit(3.0);
    let (points, weights) = match name {
        "uniform3" => (vec![T::zero(), T::half(), T::one()], vec![third; 3]),
        "sqrt2-3" => {
            let mid = consts::sqrt2::<T>() - T::one();
            let side = (T::lit(2.0) - consts::sqrt2::<T>()) / T::lit(2.0);
            (vec![T::zero(), T::half(), T::one()], vec![side, mid, side])
        }
        "uniform4" => {
            let r = T::one() / consts::sqrt3::<T>();
            (
                vec![T::zero(), T::one() - r, r, T::one()],
                vec![T::lit(0.25); 4],
            )
        }
        "golden4" => {
            let phi = consts::phi::<T>();
            let outer = (T::lit(3.0) - phi) / T::lit(5.0);
            let inner = (T::lit(2.0) * phi - T::one()) / T::lit(10.0);
            (
                vec![
                    T::zero(),
                    (T::lit(3.0) * phi - T::lit(4.0)) / T::lit(2.0),
                    (T::lit(6.0) - T::lit(3.0) * phi) / T::lit(2.0),
                    T::one(),
                ],
                vec![outer, inner, inner, outer],
            )
        }
        other => return Err(Error::UnknownDistribution(other.to_string())),
    };
    DiscreteDistribution::new(points, weights)
}

/// Equally spaced comb of `3·2^{k−1}` points whose consecutive triplets
/// each carry the √2 three-point prior scaled by `2^{1−k}`.
pub fn kbit_comb<T: Real>(k: u32) -> Result<DiscreteDistribution<T>> {
    if k == 0 || k > 16 {
        return Err(Error::Invalid(format!("comb needs 1 ≤ k ≤ 16, got {k}")));
    }
    let triplets = 1u64 << (k - 1);
    let n = 3 * triplets;
    let scale = T::one() / T::from_count(triplets);
    let mid = (consts::sqrt2::<T>() - T::one()) * scale;
    let side = (T::lit(2.0) - consts::sqrt2::<T>()) / T::lit(2.0) * scale;
    let last = T::from_count(n - 1);
    let points = (0..n).map(|i| T::from_count(i) / last).collect();
    let weights = (0..n)
        .map(|i| if i % 3 == 1 { mid } else { side })
        .collect();
    DiscreteDistribution::normalized(points, weights)
}

/// Optimal deterministic `k`-bit cost against [`kbit_comb`].
pub fn kbit_triplet_bound<T: Real>(k: u32) -> Result<BoundCertificate<T>> {
    Ok(optimal_deterministic_cost(&kbit_comb(k)?, k))
}

/// Published value `(3 − 2√2) / (3·2^{k−1} − 1)²`, which assumes the optimum
/// places two decode values inside every triplet.
pub fn kbit_triplet_bound_closed<T: Real>(k: u32) -> T {
    let d = T::lit(3.0) * T::pow2(k - 1) - T::one();
    (T::lit(3.0) - T::lit(2.0) * consts::sqrt2::<T>()) / (d * d)
}

/// A prior found by [`maximize_bound`] together with its certificate.
#[derive(Debug, Clone, Serialize)]
pub struct MaximizedBound<T> {
    pub distribution: DiscreteDistribution<T>,
    pub certificate: BoundCertificate<T>,
}

/// Derivative-free coordinate ascent on the prior: each round perturbs every
/// point and every weight up and down by the current step, keeps any change
/// that raises the bound, and halves the step after a round with no gain.
/// Never returns a bound below the initial prior's.
pub fn maximize_bound<T: Real>(
    initial: &DiscreteDistribution<T>,
    k: u32,
    iterations: usize,
) -> MaximizedBound<T> {
    let mut best_q = initial.clone();
    let mut best = optimal_deterministic_cost(&best_q, k);
    let mut step = T::lit(0.05);
    let floor = T::lit(1e-12);
    for _ in 0..iterations {
        if step < floor {
            break;
        }
        let mut improved = false;
        let n = best_q.len();
        for coord in 0..2 * n {
            for sign in [T::one(), -T::one()] {
                let (mut points, mut weights) = (best_q.points.clone(), best_q.weights.clone());
                if coord < n {
                    points[coord] = (points[coord] + sign * step).max(T::zero()).min(T::one());
                } else {
                    weights[coord - n] = weights[coord - n] * (T::one() + sign * step);
                }
                let candidate = match DiscreteDistribution::normalized(points, weights) {
                    Ok(q) => q,
                    Err(_) => continue,
                };
                let cert = optimal_deterministic_cost(&candidate, k);
                if cert.bound > best.bound {
                    best = cert;
                    best_q = candidate;
                    improved = true;
                }
            }
        }
        if !improved {
            step = step / T::lit(2.0);
        }
    }
    MaximizedBound {
        distribution: best_q,
        certificate: best,
    }
}
