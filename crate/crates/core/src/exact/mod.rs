//! Exact bias, variance and expected squared error.
//!
//! Protocols with `ℓ` shared bits are evaluated by summing over all `2^ℓ`
//! shared values, weighting each decode value by the sender's exact message
//! law. Protocols with a continuous shared draw are integrated piece by
//! piece between the protocol's breakpoints; on each piece the message is
//! fixed and the squared error is a quadratic in the draw, so Simpson's
//! rule is exact. Hybrids with a real-valued selector are evaluated as the
//! mixture of their sub-protocols.

pub mod closed;

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::protocols::{Domain, Protocol, Selector, SharedRequirement};
use crate::randomness::SharedDraw;
use crate::scalar::Real;

pub use closed::variance_closed_unbiased;

/// Largest shared budget the evaluator will enumerate.
pub const MAX_EXACT_BITS: u32 = 26;

/// Default grid size for worst-case search and profiles.
pub const DEFAULT_GRID_POINTS: usize = 4097;

const MAX_SEARCH_GRID_POINTS: usize = (1 << 18) + 1;
const REFINED_MAXIMA: usize = 16;
const ARGMAX_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointCost<T> {
    pub x: T,
    pub mse: T,
    pub bias: T,
    pub variance: T,
}

/// Neumaier-compensated accumulator.
#[derive(Default, Clone, Copy)]
struct Sum<T> {
    total: T,
    carry: T,
}

impl<T: Real> Sum<T> {
    fn add(&mut self, v: T) {
        let t = self.total + v;
        if self.total.abs() >= v.abs() {
            self.carry = self.carry + ((self.total - t) + v);
        } else {
            self.carry = self.carry + ((v - t) + self.total);
        }
        self.total = t;
    }

    fn value(&self) -> T {
        self.total + self.carry
    }
}

/// `(E[x̂ − c], E[(x̂ − c)²])` for the estimate of `x`.
fn moments<T: Real>(p: &Protocol<T>, x: T, c: T) -> Result<(T, T)> {
    if let Some(h) = p.hybrid_parts() {
        if let Selector::Real(prob) = h.selector {
            let (fa, sa) = moments(&h.a, x, c)?;
            let (fb, sb) = moments(&h.b, x, c)?;
            let q = T::one() - prob;
            return Ok((prob * fa + q * fb, prob * sa + q * sb));
        }
    }
    match p.shared_requirement() {
        SharedRequirement::None => enumerate(p, x, c, 0),
        SharedRequirement::Bits(bits) => enumerate(p, x, c, bits),
        SharedRequirement::Continuous => integrate(p, x, c),
    }
}

fn enumerate<T: Real>(p: &Protocol<T>, x: T, c: T, bits: u32) -> Result<(T, T)> {
    if bits > MAX_EXACT_BITS {
        return Err(Error::EnumerationTooLarge(bits));
    }
    let n = 1u64 << bits;
    let (mut first, mut second) = (Sum::default(), Sum::default());
    for value in 0..n {
        let s = SharedDraw::Bits { bits, value };
        let t = p.transition(x, &s);
        let q = t.p_high;
        if q > T::zero() {
            let d = p.value(t.high, &s) - c;
            first.add(q * d);
            second.add(q * d * d);
        }
        if q < T::one() {
            let d = p.value(t.low, &s) - c;
            first.add((T::one() - q) * d);
            second.add((T::one() - q) * d * d);
        }
    }
    let w = T::one() / T::from_count(n);
    Ok((first.value() * w, second.value() * w))
}

fn integrate<T: Real>(p: &Protocol<T>, x: T, c: T) -> Result<(T, T)> {
    let mut cuts = vec![T::zero()];
    let mut inner = p.breakpoints(x);
    inner.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    cuts.extend(inner);
    cuts.push(T::one());
    cuts.dedup();

    let (mut first, mut second) = (Sum::default(), Sum::default());
    let six = T::lit(6.0);
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        if len <= T::zero() {
            continue;
        }
        let mid = (a + b) / T::lit(2.0);
        let t = p.transition(x, &SharedDraw::Continuous(mid));
        let q = t.p_high;
        let mut piece = |m, weight: T| {
            if weight <= T::zero() {
                return;
            }
            let at = |u| p.value(m, &SharedDraw::Continuous(u)) - c;
            let (da, dm, db) = (at(a), at(mid), at(b));
            first.add(weight * len * (da + T::lit(4.0) * dm + db) / six);
            second.add(weight * len * (da * da + T::lit(4.0) * dm * dm + db * db) / six);
        };
        piece(t.high, q);
        piece(t.low, T::one() - q);
    }
    Ok((first.value(), second.value()))
}

fn check_domain<T: Real>(p: &Protocol<T>, x: T) -> Result<()> {
    if p.accepts(x) {
        Ok(())
    } else {
        Err(Error::OutsideDomain {
            protocol: p.to_string(),
            x: x.to_f64_lossy(),
        })
    }
}

/// Exact error decomposition at one input.
pub fn evaluate<T: Real>(p: &Protocol<T>, x: T) -> Result<PointCost<T>> {
    check_domain(p, x)?;
    let (bias, mse) = moments(p, x, x)?;
    let (_, variance) = moments(p, x, x + bias)?;
    Ok(PointCost {
        x,
        mse,
        bias,
        variance,
    })
}

pub fn mse_at<T: Real>(p: &Protocol<T>, x: T) -> Result<T> {
    check_domain(p, x)?;
    moments(p, x, x).map(|m| m.1)
}

pub fn bias_at<T: Real>(p: &Protocol<T>, x: T) -> Result<T> {
    check_domain(p, x)?;
    moments(p, x, x).map(|m| m.0)
}

pub fn variance_at<T: Real>(p: &Protocol<T>, x: T) -> Result<T> {
    evaluate(p, x).map(|c| c.variance)
}

/// Evaluates a hybrid of any selector kind as `p·A + (1 − p)·B`, without
/// enumerating the selector bits.
pub fn evaluate_as_mixture<T: Real>(p: &Protocol<T>, x: T) -> Result<PointCost<T>> {
    let h = p
        .hybrid_parts()
        .ok_or_else(|| Error::Invalid(format!("`{p}` is not a hybrid")))?;
    check_domain(p, x)?;
    let prob = h.selector.probability();
    let a = evaluate(&h.a, x)?;
    let b = evaluate(&h.b, x)?;
    let q = T::one() - prob;
    let bias = prob * a.bias + q * b.bias;
    let mse = prob * a.mse + q * b.mse;
    let variance =
        prob * (a.variance + (a.bias - bias).powi(2)) + q * (b.variance + (b.bias - bias).powi(2));
    Ok(PointCost {
        x,
        mse,
        bias,
        variance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstCase<T> {
    pub cost: T,
    pub argmax: Vec<T>,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    /// Uniform grid size on `[0, 1]`; `None` picks a size from the shared budget.
    pub grid_points: Option<usize>,
    /// Golden-section tolerance in `x`.
    pub refine_tolerance: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            grid_points: None,
            refine_tolerance: 1e-10,
        }
    }
}

/// `max(4097, 2^(ℓ+12) + 1)`, capped at `2^18 + 1`.
pub fn default_grid_points<T: Real>(p: &Protocol<T>) -> usize {
    let bits = match p.shared_requirement() {
        SharedRequirement::Bits(b) => b,
        _ => 0,
    };
    let wanted = if bits + 12 >= 18 {
        MAX_SEARCH_GRID_POINTS
    } else {
        (1usize << (bits + 12)) + 1
    };
    wanted.clamp(DEFAULT_GRID_POINTS, MAX_SEARCH_GRID_POINTS)
}

fn grid<T: Real>(n: usize) -> Vec<T> {
    let last = T::from_count((n - 1) as u64);
    (0..n).map(|i| T::from_count(i as u64) / last).collect()
}

fn golden_max<T: Real>(f: &dyn Fn(T) -> T, mut a: T, mut b: T, tol: T) -> (T, T) {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Worst-case expected squared error over the protocol's domain.
pub fn worst_case<T: Real>(p: &Protocol<T>) -> Result<WorstCase<T>> {
    worst_case_with(p, &SearchOptions::default())
}

pub fn worst_case_with<T: Real>(p: &Protocol<T>, opts: &SearchOptions) -> Result<WorstCase<T>> {
    let mut seen: Vec<(T, T)> = Vec::new();
    if p.domain() == Domain::ThreePoint {
        // the contract, and the published cost, is on the three points
        for x in [T::zero(), T::half(), T::one()] {
            seen.push((x, mse_at(p, x)?));
        }
        return Ok(summarize(seen));
    }

    for x in p.worst_case_candidates() {
        seen.push((x, mse_at(p, x)?));
    }

    let n = opts
        .grid_points
        .unwrap_or_else(|| default_grid_points(p))
        .max(3);
    let xs = grid::<T>(n);
    let values = xs
        .iter()
        .map(|&x| mse_at(p, x))
        .collect::<Result<Vec<T>>>()?;

    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || values[i] >= values[i - 1];
            let right = i + 1 == n || values[i] >= values[i + 1];
            left && right
        })
        .collect();
    peaks.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).expect("finite"));
    peaks.truncate(REFINED_MAXIMA);

    let f = |x: T| mse_at(p, x).unwrap_or(T::neg_infinity());
    let tol = T::lit(opts.refine_tolerance);
    for i in peaks {
        seen.push((xs[i], values[i]));
        let a = if i == 0 { xs[0] } else { xs[i - 1] };
        let b = if i + 1 == n { xs[n - 1] } else { xs[i + 1] };
        seen.push(golden_max(&f, a, b, tol));
    }
    Ok(summarize(seen))
}

/// Collapses near-duplicate maximizers, keeping the earliest-pushed point of
/// each cluster so analytic candidates win over refined approximations.
fn summarize<T: Real>(seen: Vec<(T, T)>) -> WorstCase<T> {
    let cost = seen.iter().map(|s| s.1).fold(T::neg_infinity(), T::max);
    let tol = T::lit(ARGMAX_TOLERANCE);
    let mut hits: Vec<(usize, T)> = seen
        .iter()
        .enumerate()
        .filter(|(_, s)| cost - s.1 <= tol)
        .map(|(i, s)| (i, s.0))
        .collect();
    hits.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"));
    let mut clusters: Vec<(usize, T, T)> = Vec::new();
    for (i, x) in hits {
        match clusters.last_mut() {
            Some(last) if x - last.2 <= T::lit(1e-7) => {
                last.2 = x;
                if i < last.0 {
                    last.0 = i;
                    last.1 = x;
                }
            }
            _ => clusters.push((i, x, x)),
        }
    }
    WorstCase {
        cost,
        argmax: clusters.into_iter().map(|c| c.1).collect(),
    }
}

/// Dense per-`x` cost table, the data behind cost-vs-`x` plots.
#[derive(Debug, Clone, Serialize)]
pub struct CostProfile<T> {
    pub protocol: String,
    pub records: Vec<PointCost<T>>,
    /// Maximum over the grid and the protocol's analytic candidates.
    pub worst: WorstCase<T>,
}

/// Profile on a uniform grid of `points` values (or on `{0, 1/2, 1}` for
/// protocols that only accept those).
pub fn profile<T: Real>(p: &Protocol<T>, points: usize) -> Result<CostProfile<T>> {
    if points < 2 {
        return Err(Error::Invalid(
            "a profile needs at least 2 grid points".into(),
        ));
    }
    let xs: Vec<T> = if p.accepts(T::lit(0.25)) {
        grid(points)
    } else {
        vec![T::zero(), T::half(), T::one()]
    };
    let records = xs
        .iter()
        .map(|&x| evaluate(p, x))
        .collect::<Result<Vec<_>>>()?;
    let mut seen: Vec<(T, T)> = records.iter().map(|r| (r.x, r.mse)).collect();
    for x in p.worst_case_candidates() {
        if p.accepts(x) {
            seen.push((x, mse_at(p, x)?));
        }
    }
    Ok(CostProfile {
        protocol: p.to_string(),
        records,
        worst: summarize(seen),
    })
}

impl<T: Real> CostProfile<T> {
    /// Writes `x,mse,bias,variance` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,mse,bias,variance")?;
        for r in &self.records {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                r.x.to_f64_lossy(),
                r.mse.to_f64_lossy(),
                r.bias.to_f64_lossy(),
                r.variance.to_f64_lossy()
            )?;
        }
        Ok(())
    }
}
