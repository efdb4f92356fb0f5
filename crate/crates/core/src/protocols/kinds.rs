//! Per-protocol sender and receiver rules.

use super::{hybrid_route, Kind, Message, Protocol, Transition};
use crate::randomness::SharedDraw;
use crate::scalar::Real;

/// Largest candidate set generated by enumerating quantization cells.
const MAX_ENUMERATED_CANDIDATES: u64 = 1 << 16;

fn bits_value<T: Real>(s: &SharedDraw<T>) -> (u32, u64) {
    match *s {
        SharedDraw::Bits { bits, value } => (bits, value),
        SharedDraw::Continuous(_) => unreachable!("validated as a bit draw"),
    }
}

fn unit<T: Real>(s: &SharedDraw<T>) -> T {
    match *s {
        SharedDraw::Continuous(u) => u,
        SharedDraw::Bits { .. } => unreachable!("validated as a continuous draw"),
    }
}

fn bit(b: bool) -> Message {
    b as Message
}

/// `h·2^{-ℓ}` offset centred on zero, shared by the unbiased `ℓ`-bit decoders.
fn centred_offset<T: Real>(bits: u32, h: u64) -> T {
    (T::from_count(h) - T::half() * (T::pow2(bits) - T::one())) / T::pow2(bits)
}

/// Integer part and fractional position of `x` on the `k`-bit grid. The
/// integer part is capped at `R − 1` so `x = 1` maps to `(R − 1, 1)`.
fn kbit_cell<T: Real>(k: u32, x: T) -> (u64, T) {
    let r = (1u64 << k) - 1;
    let scaled = T::from_count(r) * x;
    let c = scaled.floor().to_u64().unwrap_or(0).min(r - 1);
    (c, scaled - T::from_count(c))
}

fn biased_interval<T: Real>(bits: u32, alpha: T, x: T) -> Option<u64> {
    let lo = (T::one() - alpha) / T::lit(2.0);
    let hi = (T::one() + alpha) / T::lit(2.0);
    if x < lo || x >= hi {
        return None;
    }
    let cells = (1u64 << bits) - 1;
    let i = ((x - lo) * T::from_count(cells) / alpha)
        .floor()
        .to_u64()
        .unwrap_or(0);
    Some(i.min(cells - 1))
}

fn limit_threshold<T: Real>(alpha: T, x: T) -> Option<T> {
    let lo = (T::one() - alpha) / T::lit(2.0);
    let hi = (T::one() + alpha) / T::lit(2.0);
    if x < lo || x >= hi {
        None
    } else {
        Some((x - lo) / alpha)
    }
}

impl<T: Real> Protocol<T> {
    /// Sender rule exactly as each algorithm states it, including tie handling.
    pub(crate) fn encode_raw(&self, x: T, s: &SharedDraw<T>, r: T) -> Message {
        match &self.kind {
            Kind::RandomizedRounding => bit(r < x),
            Kind::DeterministicRounding => bit(x >= T::half()),
            Kind::SharedUnbiased { bits } => {
                let (_, h) = bits_value(s);
                bit(x >= (r + T::from_count(h)) / T::pow2(*bits))
            }
            Kind::SubtractiveDithering
            | Kind::TruncatedDithering { .. }
            | Kind::ConvexDithered { .. } => bit(x >= unit(s)),
            Kind::ThreePointUnbiased => {
                let (_, h) = bits_value(s);
                if x == T::zero() {
                    0
                } else if x == T::one() {
                    1
                } else {
                    1 - h
                }
            }
            Kind::BiasedShared { bits, alpha } => {
                let (_, h) = bits_value(s);
                match biased_interval(*bits, *alpha, x) {
                    Some(i) => bit(h <= i),
                    None => bit(x >= (T::one() + *alpha) / T::lit(2.0)),
                }
            }
            Kind::ThreePointBiased { alpha } => {
                let (_, h) = bits_value(s);
                let v0 = *alpha * T::from_count(h);
                let v1 = v0 + T::one() - *alpha;
                bit((x - v1).abs() < (x - v0).abs())
            }
            Kind::LimitBiased { alpha } => match limit_threshold(*alpha, x) {
                Some(t) => bit(unit(s) <= t),
                None => bit(x >= (T::one() + *alpha) / T::lit(2.0)),
            },
            Kind::KBit { k, bits } => {
                let (c, p) = kbit_cell(*k, x);
                let up = match bits {
                    Some(b) => {
                        let (_, h) = bits_value(s);
                        p >= (r + T::from_count(h)) / T::pow2(*b)
                    }
                    None => p >= unit(s),
                };
                c + up as u64
            }
            Kind::Hybrid(hy) => {
                let (use_a, sub) = hybrid_route(hy, s);
                if use_a {
                    hy.a.encode_raw(x, &sub, r)
                } else {
                    hy.b.encode_raw(x, &sub, r)
                }
            }
        }
    }

    /// Law of the message over the private randomness for a fixed shared draw.
    pub(crate) fn transition(&self, x: T, s: &SharedDraw<T>) -> Transition<T> {
        match &self.kind {
            Kind::RandomizedRounding => Transition::bit(x),
            Kind::SharedUnbiased { bits } => {
                let (_, h) = bits_value(s);
                Transition::bit(
                    (x * T::pow2(*bits) - T::from_count(h))
                        .max(T::zero())
                        .min(T::one()),
                )
            }
            Kind::KBit { k, bits: Some(b) } => {
                let (c, p) = kbit_cell(*k, x);
                let (_, h) = bits_value(s);
                let q = (p * T::pow2(*b) - T::from_count(h))
                    .max(T::zero())
                    .min(T::one());
                Transition {
                    low: c,
                    high: c + 1,
                    p_high: q,
                }
            }
            Kind::KBit { k, bits: None } => {
                let (c, p) = kbit_cell(*k, x);
                let up = p >= unit(s);
                Transition {
                    low: c,
                    high: c + 1,
                    p_high: if up { T::one() } else { T::zero() },
                }
            }
            Kind::Hybrid(hy) => {
                let (use_a, sub) = hybrid_route(hy, s);
                if use_a {
                    hy.a.transition(x, &sub)
                } else {
                    hy.b.transition(x, &sub)
                }
            }
            // the rest are deterministic given the shared draw
            _ => Transition::deterministic(self.encode_raw(x, s, T::zero()) == 1),
        }
    }

    /// Receiver rule. Does not validate `u < 1`, so the integrator can
    /// evaluate decode values at the closed end of a piece.
    pub(crate) fn value(&self, m: Message, s: &SharedDraw<T>) -> T {
        let mf = T::from_count(m);
        match &self.kind {
            Kind::RandomizedRounding => mf,
            Kind::DeterministicRounding => mf / T::lit(2.0) + T::lit(0.25),
            Kind::SharedUnbiased { bits } => {
                let (_, h) = bits_value(s);
                mf + centred_offset::<T>(*bits, h)
            }
            Kind::SubtractiveDithering => mf + unit(s) - T::half(),
            Kind::ThreePointUnbiased => {
                let (_, h) = bits_value(s);
                mf + (T::from_count(h) - T::half()) / T::lit(2.0)
            }
            Kind::TruncatedDithering { z } => (mf + unit(s) - T::half()).max(*z).min(T::one() - *z),
            Kind::ConvexDithered { alpha } | Kind::LimitBiased { alpha } => {
                *alpha * unit(s) + (T::one() - *alpha) * mf
            }
            Kind::BiasedShared { bits, alpha } => {
                let (_, h) = bits_value(s);
                *alpha * T::from_count(h) / (T::pow2(*bits) - T::one()) + (T::one() - *alpha) * mf
            }
            Kind::ThreePointBiased { alpha } => {
                let (_, h) = bits_value(s);
                *alpha * T::from_count(h) + (T::one() - *alpha) * mf
            }
            Kind::KBit { k, bits } => {
                let r = T::pow2(*k) - T::one();
                let offset = match bits {
                    Some(b) => centred_offset::<T>(*b, bits_value(s).1),
                    None => unit(s) - T::half(),
                };
                (mf + offset) / r
            }
            Kind::Hybrid(hy) => {
                let (use_a, sub) = hybrid_route(hy, s);
                if use_a {
                    hy.a.value(m, &sub)
                } else {
                    hy.b.value(m, &sub)
                }
            }
        }
    }

    /// Values of the continuous shared draw where, for this `x`, the sent
    /// message or a decode clamp changes. Between consecutive breakpoints
    /// the message is fixed and every decode value is affine in `u`.
    pub(crate) fn breakpoints(&self, x: T) -> Vec<T> {
        let mut b = match &self.kind {
            Kind::SubtractiveDithering | Kind::ConvexDithered { .. } => vec![x],
            Kind::TruncatedDithering { z } => vec![x, T::half() - *z, T::half() + *z],
            Kind::LimitBiased { alpha } => limit_threshold(*alpha, x).into_iter().collect(),
            Kind::KBit { k, bits: None } => vec![kbit_cell(*k, x).1],
            _ => Vec::new(),
        };
        b.retain(|&v| v > T::zero() && v < T::one());
        b
    }
}

fn push_mirrored<T: Real>(out: &mut Vec<T>, v: T) {
    out.push(v);
    out.push(T::one() - v);
}

pub(super) fn candidates<T: Real>(p: &Protocol<T>) -> Vec<T> {
    let mut out = vec![T::zero(), T::half(), T::one()];
    match &p.kind {
        Kind::SharedUnbiased { bits }
        | Kind::KBit {
            k: 1,
            bits: Some(bits),
        } => {
            if *bits < 17 {
                let n = 1u64 << bits;
                for i in 0..n {
                    out.push((T::from_count(i) + T::half()) / T::from_count(n));
                }
            }
        }
        Kind::KBit { k, bits } => {
            let r = (1u64 << k) - 1;
            let cells = bits.map_or(1, |b| if b < 17 { 1u64 << b } else { 0 });
            if cells > 0 && r.saturating_mul(cells) <= MAX_ENUMERATED_CANDIDATES {
                for c in 0..r {
                    for j in 0..cells {
                        let frac = (T::from_count(j) + T::half()) / T::from_count(cells);
                        out.push((T::from_count(c) + frac) / T::from_count(r));
                    }
                }
            }
        }
        Kind::TruncatedDithering { z } => {
            let z = *z;
            push_mirrored(&mut out, z);
            push_mirrored(&mut out, T::half() - z);
        }
        Kind::BiasedShared { bits, alpha } => {
            let alpha = *alpha;
            let lo = (T::one() - alpha) / T::lit(2.0);
            let cells = (1u64 << (*bits).min(40)) - 1;
            let step = alpha / T::from_count(cells);
            let half = 1u64 << (bits - 1);
            out.push(lo + T::from_count(half - 1) * step);
            out.push(lo + T::from_count(half) * step);
            if cells <= MAX_ENUMERATED_CANDIDATES {
                for i in 0..=cells {
                    out.push(lo + T::from_count(i) * step);
                }
            }
        }
        Kind::LimitBiased { alpha } | Kind::ThreePointBiased { alpha } => {
            push_mirrored(&mut out, (T::one() - *alpha) / T::lit(2.0));
        }
        Kind::Hybrid(h) => {
            out.extend(candidates(&h.a));
            out.extend(candidates(&h.b));
        }
        _ => {}
    }
    out.retain(|v| *v >= T::zero() && *v <= T::one());
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    out.dedup();
    out
}
