//! Sender/receiver pairs for transmitting `x ∈ [0, 1]` with one (or `k`) bits.
//!
//! Every protocol is a [`Protocol`] value exposing the same four operations:
//! [`Protocol::encode`], [`Protocol::decode`], [`Protocol::send_one_probability`]
//! and [`Protocol::decode_pair`]. The sender's behaviour for a fixed shared
//! value is summarised by a [`Transition`]: it emits `high` with probability
//! `p_high` over its private randomness and `low` otherwise. Decoded values
//! depend only on the message and the shared value, which is what lets the
//! exact evaluator enumerate (or integrate) every outcome.

mod kinds;
mod spec;

pub use spec::{parse_number, parse_ratio, ProtocolSpec, Ratio};

use std::fmt;

use crate::error::{Error, Result};
use crate::randomness::{low_mask, split_budget, PrivateDraw, SharedDraw, MAX_SHARED_BITS};
use crate::scalar::{consts, Real};

/// Encoded message: `0`/`1` for one-bit protocols, `0..=2^k−1` for `k` bits.
pub type Message = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SharedRequirement {
    None,
    Bits(u32),
    Continuous,
}

impl fmt::Display for SharedRequirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SharedRequirement::None => f.write_str("no"),
            SharedRequirement::Bits(b) => write!(f, "{b}-bit"),
            SharedRequirement::Continuous => f.write_str("continuous"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    FullInterval,
    /// Contracts hold on `{0, 1/2, 1}` only.
    ThreePoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<T> {
    pub low: Message,
    pub high: Message,
    pub p_high: T,
}

impl<T: Real> Transition<T> {
    fn bit(p_one: T) -> Self {
        Transition {
            low: 0,
            high: 1,
            p_high: p_one,
        }
    }

    fn deterministic(send_one: bool) -> Self {
        Self::bit(if send_one { T::one() } else { T::zero() })
    }
}

/// Receiver outputs for `X = 0` and `X = 1` under one fixed shared value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodePair<T> {
    pub v0: T,
    pub v1: T,
}

/// How a hybrid picks its sub-protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selector<T> {
    /// Run `a` iff the top `bits` shared bits are `< numerator`.
    Dyadic { bits: u32, numerator: u64 },
    /// Run `a` with real probability `p`, from a continuous shared draw.
    Real(T),
}

impl<T: Real> Selector<T> {
    pub fn probability(&self) -> T {
        match *self {
            Selector::Dyadic { bits, numerator } => T::from_count(numerator) / T::pow2(bits),
            Selector::Real(p) => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hybrid<T> {
    pub selector: Selector<T>,
    pub a: Protocol<T>,
    pub b: Protocol<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Kind<T> {
    RandomizedRounding,
    DeterministicRounding,
    SharedUnbiased { bits: u32 },
    SubtractiveDithering,
    ThreePointUnbiased,
    TruncatedDithering { z: T },
    ConvexDithered { alpha: T },
    BiasedShared { bits: u32, alpha: T },
    ThreePointBiased { alpha: T },
    LimitBiased { alpha: T },
    Hybrid(Box<Hybrid<T>>),
    KBit { k: u32, bits: Option<u32> },
}

/// A configured encoder/decoder pair. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol<T> {
    pub(crate) kind: Kind<T>,
}

fn param_err(protocol: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        protocol: protocol.to_string(),
        reason: reason.into(),
    }
}

fn check_bits(protocol: &str, bits: u32) -> Result<()> {
    if bits == 0 || bits > MAX_SHARED_BITS {
        return Err(param_err(
            protocol,
            format!("l must be in 1..={MAX_SHARED_BITS}, got {bits}"),
        ));
    }
    Ok(())
}

/// Optimal mixing weight of the `ℓ`-bit biased interval algorithm.
pub fn alpha_opt<T: Real>(bits: u32) -> T {
    let two_l = T::pow2(bits);
    let four_l = two_l * two_l;
    let root = (T::pow2(bits) / T::lit(4.0)
        * (two_l - T::one()).powi(2)
        * (T::lit(5.0) * two_l - T::lit(8.0)))
    .sqrt();
    (T::one() - T::lit(5.0) * two_l / T::lit(2.0) + T::lit(1.5) * four_l - root)
        / (four_l - two_l + T::one())
}

/// Worst-case squared error of the `ℓ`-bit biased interval algorithm at its optimal `α`.
pub fn biased_shared_cost_closed<T: Real>(bits: u32) -> T {
    let two_l = T::pow2(bits);
    let four_l = two_l * two_l;
    let inner = T::lit(2.0) - T::lit(3.0) * two_l
        + T::pow2(bits).sqrt() * (T::lit(5.0) * two_l - T::lit(8.0)).sqrt();
    (two_l - T::one()) * (T::lit(2.0) * two_l - T::one()) * inner * inner
        / (T::lit(24.0) * (four_l - two_l + T::one()).powi(2))
}

/// Truncation level `z` that balances the two branch maxima of truncated
/// dithering, found by bisection on `(2/3)z³ − (3/2)z² + 1/24`.
pub fn optimal_truncation<T: Real>() -> T {
    let f = |z: f64| 2.0 / 3.0 * z.powi(3) - 1.5 * z * z + 1.0 / 24.0;
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    // f(0) > 0 > f(1/2), single root in between
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    T::lit(0.5 * (lo + hi))
}

impl<T: Real> Protocol<T> {
    fn from_kind(kind: Kind<T>) -> Self {
        Protocol { kind }
    }

    /// Sends `X ~ Bernoulli(x)`; estimates `x̂ = X`.
    pub fn randomized_rounding() -> Self {
        Self::from_kind(Kind::RandomizedRounding)
    }

    /// Sends `X = 1` iff `x ≥ 1/2`; estimates `X/2 + 1/4`.
    pub fn deterministic_rounding() -> Self {
        Self::from_kind(Kind::DeterministicRounding)
    }

    /// Unbiased `ℓ`-bit shared-randomness algorithm with private randomness.
    pub fn shared_unbiased(bits: u32) -> Result<Self> {
        check_bits("shared-unbiased", bits)?;
        Ok(Self::from_kind(Kind::SharedUnbiased { bits }))
    }

    pub fn subtractive_dithering() -> Self {
        Self::from_kind(Kind::SubtractiveDithering)
    }

    pub fn three_point_unbiased() -> Self {
        Self::from_kind(Kind::ThreePointUnbiased)
    }

    pub fn truncated_dithering(z: T) -> Result<Self> {
        if !(z >= T::zero() && z <= T::half()) {
            return Err(param_err(
                "trunc-dither",
                format!("z must be in [0, 1/2], got {z}"),
            ));
        }
        Ok(Self::from_kind(Kind::TruncatedDithering { z }))
    }

    pub fn truncated_dithering_optimal() -> Self {
        Self::from_kind(Kind::TruncatedDithering {
            z: optimal_truncation(),
        })
    }

    pub fn convex_dithered_biased(alpha: T) -> Result<Self> {
        if !(alpha >= T::zero() && alpha <= T::one()) {
            return Err(param_err(
                "convex-dither",
                format!("alpha must be in [0, 1], got {alpha}"),
            ));
        }
        Ok(Self::from_kind(Kind::ConvexDithered { alpha }))
    }

    /// Convex dithering at `α = 2 − φ`, whose error is flat in `x`.
    pub fn convex_dithered_optimal() -> Self {
        Self::from_kind(Kind::ConvexDithered {
            alpha: T::lit(2.0) - consts::phi::<T>(),
        })
    }

    pub fn biased_shared(bits: u32) -> Result<Self> {
        check_bits("biased-shared", bits)?;
        Ok(Self::from_kind(Kind::BiasedShared {
            bits,
            alpha: alpha_opt(bits),
        }))
    }

    /// One shared bit, `x ∈ {0, 1/2, 1}`, `α = 1 − 1/√2`. Other `x` use the
    /// nearest-decode-value sender.
    pub fn three_point_biased() -> Self {
        Self::from_kind(Kind::ThreePointBiased {
            alpha: T::one() - T::FRAC_1_SQRT_2(),
        })
    }

    /// The `ℓ → ∞` biased interval algorithm at `α = 2 − φ`.
    pub fn limit_biased() -> Self {
        Self::from_kind(Kind::LimitBiased {
            alpha: T::lit(2.0) - consts::phi::<T>(),
        })
    }

    pub fn limit_biased_with(alpha: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha <= T::one()) {
            return Err(param_err(
                "limit-biased",
                format!("alpha must be in (0, 1], got {alpha}"),
            ));
        }
        Ok(Self::from_kind(Kind::LimitBiased { alpha }))
    }

    /// `k`-bit unbiased algorithm; `bits = None` is the continuous-draw limit.
    pub fn kbit_unbiased(k: u32, bits: Option<u32>) -> Result<Self> {
        if k == 0 || k > 32 {
            return Err(param_err("kbit", format!("k must be in 1..=32, got {k}")));
        }
        if let Some(b) = bits {
            check_bits("kbit", b)?;
        }
        Ok(Self::from_kind(Kind::KBit { k, bits }))
    }

    /// Runs `a` with probability `numerator / 2^selector_bits`, else `b`.
    /// Both sub-protocols read the low bits left after the selector.
    pub fn hybrid_dyadic(numerator: u64, selector_bits: u32, a: Self, b: Self) -> Result<Self> {
        Self::hybrid(
            Selector::Dyadic {
                bits: selector_bits,
                numerator,
            },
            a,
            b,
        )
    }

    /// Runs `a` with real probability `p` using a continuous shared draw.
    pub fn hybrid_real(p: T, a: Self, b: Self) -> Result<Self> {
        Self::hybrid(Selector::Real(p), a, b)
    }

    pub fn hybrid(selector: Selector<T>, a: Self, b: Self) -> Result<Self> {
        match selector {
            Selector::Dyadic { bits, numerator } => {
                if numerator > 1u64 << bits.min(MAX_SHARED_BITS) {
                    return Err(param_err(
                        "hybrid",
                        format!("p = {numerator}/2^{bits} exceeds 1"),
                    ));
                }
                let mut need = 0;
                for sub in [&a, &b] {
                    match sub.shared_requirement() {
                        SharedRequirement::None => {}
                        SharedRequirement::Bits(n) => need = need.max(n),
                        SharedRequirement::Continuous => {
                            return Err(param_err(
                                "hybrid",
                                format!(
                                    "dyadic selector cannot feed continuous sub-protocol `{sub}`"
                                ),
                            ))
                        }
                    }
                }
                if bits + need > MAX_SHARED_BITS {
                    return Err(param_err("hybrid", "total shared budget exceeds 62 bits"));
                }
            }
            Selector::Real(p) => {
                if !(p >= T::zero() && p <= T::one()) {
                    return Err(param_err("hybrid", format!("p must be in [0, 1], got {p}")));
                }
            }
        }
        Ok(Self::from_kind(Kind::Hybrid(Box::new(Hybrid {
            selector,
            a,
            b,
        }))))
    }

    /// `p = φ − 1` mix of [`limit_biased`](Self::limit_biased) and
    /// [`three_point_biased`](Self::three_point_biased).
    pub fn hybrid_limit() -> Self {
        Self::hybrid_real(
            consts::phi::<T>() - T::one(),
            Self::limit_biased(),
            Self::three_point_biased(),
        )
        .expect("valid preset")
    }

    /// Four shared bits: `p = 3/4` over the 2-bit biased algorithm.
    pub fn hybrid_four_bits() -> Self {
        Self::hybrid_dyadic(
            3,
            2,
            Self::biased_shared(2).expect("valid"),
            Self::three_point_biased(),
        )
        .expect("valid preset")
    }

    /// One shared byte: `p = 11/16` over the 4-bit biased algorithm.
    pub fn hybrid_one_byte() -> Self {
        Self::hybrid_dyadic(
            11,
            4,
            Self::biased_shared(4).expect("valid"),
            Self::three_point_biased(),
        )
        .expect("valid preset")
    }

    /// `p = 2/3` over the 3-bit biased algorithm, selector from a continuous draw.
    pub fn hybrid_three_bit() -> Self {
        Self::hybrid_real(
            T::lit(2.0) / T::lit(3.0),
            Self::biased_shared(3).expect("valid"),
            Self::three_point_biased(),
        )
        .expect("valid preset")
    }

    pub fn id(&self) -> &'static str {
        match self.kind {
            Kind::RandomizedRounding => "rr",
            Kind::DeterministicRounding => "dr",
            Kind::SharedUnbiased { .. } => "shared-unbiased",
            Kind::SubtractiveDithering => "dither",
            Kind::ThreePointUnbiased => "three-unbiased",
            Kind::TruncatedDithering { .. } => "trunc-dither",
            Kind::ConvexDithered { .. } => "convex-dither",
            Kind::BiasedShared { .. } => "biased-shared",
            Kind::ThreePointBiased { .. } => "three-biased",
            Kind::LimitBiased { .. } => "limit-biased",
            Kind::Hybrid(_) => "hybrid",
            Kind::KBit { .. } => "kbit",
        }
    }

    pub fn shared_requirement(&self) -> SharedRequirement {
        match &self.kind {
            Kind::RandomizedRounding | Kind::DeterministicRounding => SharedRequirement::None,
            Kind::SharedUnbiased { bits } | Kind::BiasedShared { bits, .. } => {
                SharedRequirement::Bits(*bits)
            }
            Kind::ThreePointUnbiased | Kind::ThreePointBiased { .. } => SharedRequirement::Bits(1),
            Kind::SubtractiveDithering
            | Kind::TruncatedDithering { .. }
            | Kind::ConvexDithered { .. }
            | Kind::LimitBiased { .. } => SharedRequirement::Continuous,
            Kind::KBit { bits, .. } => match bits {
                Some(b) => SharedRequirement::Bits(*b),
                None => SharedRequirement::Continuous,
            },
            Kind::Hybrid(h) => match h.selector {
                Selector::Real(_) => SharedRequirement::Continuous,
                Selector::Dyadic { bits, .. } => {
                    SharedRequirement::Bits(bits + h.a.sub_bits().max(h.b.sub_bits()))
                }
            },
        }
    }

    fn sub_bits(&self) -> u32 {
        match self.shared_requirement() {
            SharedRequirement::Bits(b) => b,
            _ => 0,
        }
    }

    pub fn uses_private(&self) -> bool {
        match &self.kind {
            Kind::RandomizedRounding | Kind::SharedUnbiased { .. } => true,
            Kind::KBit { bits, .. } => bits.is_some(),
            Kind::Hybrid(h) => h.a.uses_private() || h.b.uses_private(),
            _ => false,
        }
    }

    pub fn domain(&self) -> Domain {
        match &self.kind {
            Kind::ThreePointUnbiased | Kind::ThreePointBiased { .. } => Domain::ThreePoint,
            Kind::Hybrid(h) => {
                if h.a.domain() == Domain::FullInterval || h.b.domain() == Domain::FullInterval {
                    if h.a.accepts_interval() && h.b.accepts_interval() {
                        Domain::FullInterval
                    } else {
                        Domain::ThreePoint
                    }
                } else {
                    Domain::ThreePoint
                }
            }
            _ => Domain::FullInterval,
        }
    }

    fn accepts_interval(&self) -> bool {
        match &self.kind {
            Kind::ThreePointUnbiased => false,
            Kind::Hybrid(h) => h.a.accepts_interval() && h.b.accepts_interval(),
            _ => true,
        }
    }

    /// Whether `x` may be passed to [`encode`](Self::encode). The biased
    /// three-point protocol extends greedily to all of `[0, 1]`; the
    /// unbiased one does not.
    pub fn accepts(&self, x: T) -> bool {
        if !(x >= T::zero() && x <= T::one()) {
            return false;
        }
        self.accepts_interval() || is_three_point(x)
    }

    /// Guaranteed `E[x̂] = x` for every accepted `x`.
    pub fn is_unbiased(&self) -> bool {
        match &self.kind {
            Kind::RandomizedRounding
            | Kind::SharedUnbiased { .. }
            | Kind::SubtractiveDithering
            | Kind::ThreePointUnbiased
            | Kind::KBit { .. } => true,
            Kind::Hybrid(h) => h.a.is_unbiased() && h.b.is_unbiased(),
            _ => false,
        }
    }

    /// Number of message bits.
    pub fn message_bits(&self) -> u32 {
        match &self.kind {
            Kind::KBit { k, .. } => *k,
            Kind::Hybrid(h) => h.a.message_bits().max(h.b.message_bits()),
            _ => 1,
        }
    }

    pub(crate) fn hybrid_parts(&self) -> Option<&Hybrid<T>> {
        match &self.kind {
            Kind::Hybrid(h) => Some(h),
            _ => None,
        }
    }

    fn check_x(&self, x: T) -> Result<()> {
        if self.accepts(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain {
                protocol: self.to_string(),
                x: x.to_f64_lossy(),
            })
        }
    }

    fn check_draw(&self, s: &SharedDraw<T>) -> Result<()> {
        let ok = match (self.shared_requirement(), s) {
            (SharedRequirement::None, SharedDraw::Bits { bits: 0, .. }) => true,
            (SharedRequirement::Bits(n), SharedDraw::Bits { bits, value }) => {
                *bits == n && value >> n == 0
            }
            (SharedRequirement::Continuous, SharedDraw::Continuous(u)) => {
                *u >= T::zero() && *u < T::one()
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::SharedMismatch {
                protocol: self.to_string(),
                expected: self.shared_requirement().to_string(),
            })
        }
    }

    /// Sender: maps `x` and the draws to a message.
    pub fn encode(&self, x: T, s: &SharedDraw<T>, r: &PrivateDraw<T>) -> Result<Message> {
        self.check_x(x)?;
        self.check_draw(s)?;
        Ok(self.encode_raw(x, s, r.value()))
    }

    /// Receiver: maps a message and the shared draw to an estimate.
    pub fn decode(&self, message: Message, s: &SharedDraw<T>) -> Result<T> {
        self.check_draw(s)?;
        if message >> self.message_bits() != 0 {
            return Err(Error::InvalidMessage {
                protocol: self.to_string(),
                message,
            });
        }
        Ok(self.value(message, s))
    }

    /// Probability over the private randomness that the message is `1`.
    pub fn send_one_probability(&self, x: T, s: &SharedDraw<T>) -> Result<T> {
        self.check_x(x)?;
        self.check_draw(s)?;
        let t = self.transition(x, s);
        let mut p = T::zero();
        if t.high == 1 {
            p = p + t.p_high;
        }
        if t.low == 1 && t.low != t.high {
            p = p + (T::one() - t.p_high);
        }
        Ok(p)
    }

    /// Sender law for a fixed shared draw.
    pub fn message_law(&self, x: T, s: &SharedDraw<T>) -> Result<Transition<T>> {
        self.check_x(x)?;
        self.check_draw(s)?;
        Ok(self.transition(x, s))
    }

    pub fn decode_pair(&self, s: &SharedDraw<T>) -> Result<DecodePair<T>> {
        self.check_draw(s)?;
        Ok(DecodePair {
            v0: self.value(0, s),
            v1: self.value(1, s),
        })
    }

    /// Points worth checking when searching for the worst-case `x`.
    pub fn worst_case_candidates(&self) -> Vec<T> {
        kinds::candidates(self)
    }
}

pub(crate) fn is_three_point<T: Real>(x: T) -> bool {
    x == T::zero() || x == T::half() || x == T::one()
}

/// Routes a shared draw through a hybrid's selector.
pub(crate) fn hybrid_route<T: Real>(h: &Hybrid<T>, s: &SharedDraw<T>) -> (bool, SharedDraw<T>) {
    match (h.selector, s) {
        (Selector::Dyadic { bits, numerator }, SharedDraw::Bits { .. }) => {
            let split = split_budget(*s, bits).expect("validated budget");
            let use_a = split.selector_value < numerator;
            let sub = if use_a { &h.a } else { &h.b };
            (use_a, narrow(split.remainder, sub.sub_bits()))
        }
        (Selector::Real(p), SharedDraw::Continuous(u)) => {
            let use_a = *u < p;
            let rescaled = if use_a {
                *u / p
            } else {
                (*u - p) / (T::one() - p)
            };
            let rescaled = if rescaled >= T::one() {
                T::one() - T::epsilon()
            } else {
                rescaled
            };
            let sub = if use_a { &h.a } else { &h.b };
            let draw = match sub.shared_requirement() {
                SharedRequirement::None => SharedDraw::none(),
                SharedRequirement::Continuous => SharedDraw::Continuous(rescaled),
                SharedRequirement::Bits(n) => {
                    let v = (rescaled * T::pow2(n))
                        .floor()
                        .to_u64()
                        .unwrap_or(0)
                        .min(low_mask(n));
                    SharedDraw::Bits { bits: n, value: v }
                }
            };
            (use_a, draw)
        }
        _ => unreachable!("draw validated against the hybrid's requirement"),
    }
}

/// Keeps the top `bits` bits of a draw.
fn narrow<T: Real>(d: SharedDraw<T>, bits: u32) -> SharedDraw<T> {
    match d {
        SharedDraw::Bits { bits: have, value } if have >= bits => SharedDraw::Bits {
            bits,
            value: value >> (have - bits),
        },
        _ => unreachable!("sub-protocol budget checked at construction"),
    }
}

impl<T: Real> fmt::Display for Protocol<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::SharedUnbiased { bits } | Kind::BiasedShared { bits, .. } => {
                write!(f, "{}(l={bits})", self.id())
            }
            Kind::TruncatedDithering { z } => write!(f, "trunc-dither(z={z})"),
            Kind::ConvexDithered { alpha } => write!(f, "convex-dither(alpha={alpha})"),
            Kind::LimitBiased { alpha } => write!(f, "limit-biased(alpha={alpha})"),
            Kind::KBit { k, bits } => match bits {
                Some(b) => write!(f, "kbit(k={k},l={b})"),
                None => write!(f, "kbit(k={k},l=inf)"),
            },
            Kind::Hybrid(h) => match h.selector {
                Selector::Dyadic { bits, numerator } => {
                    write!(
                        f,
                        "hybrid(p={numerator}/{},a={},b={})",
                        1u64 << bits,
                        h.a,
                        h.b
                    )
                }
                Selector::Real(p) => write!(f, "hybrid(p={p},mode=real,a={},b={})", h.a, h.b),
            },
            _ => f.write_str(self.id()),
        }
    }
}
