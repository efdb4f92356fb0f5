//! Shared and private randomness as explicit values.
//!
//! Every protocol receives its randomness as arguments rather than pulling
//! it from a global generator, so the exact evaluator can enumerate (or
//! integrate over) the shared value while the Monte Carlo harness samples it.
//!
//! Sampling goes through [`SeedStream`], a ChaCha8 generator keyed by
//! `rand_chacha`'s `seed_from_u64` expansion of a 64-bit seed. Shards of a
//! simulation use the same key on distinct ChaCha stream ids
//! (see [`SeedStream::fork`]), which keeps results independent of the order
//! in which shards run.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest number of explicit shared bits a draw may carry.
pub const MAX_SHARED_BITS: u32 = 62;

/// Shared random value `h`, known to both sender and receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SharedDraw<T> {
    /// `bits` uniform bits, `value ∈ {0, …, 2^bits − 1}`.
    Bits { bits: u32, value: u64 },
    /// The unbounded limit: a uniform draw on `[0, 1)`.
    Continuous(T),
}

impl<T: Real> SharedDraw<T> {
    pub fn bits(bits: u32, value: u64) -> Result<Self> {
        if bits > MAX_SHARED_BITS {
            return Err(Error::BitsOutOfRange {
                bits,
                max: MAX_SHARED_BITS,
            });
        }
        if value >> bits != 0 {
            return Err(Error::SharedValueOutOfRange { bits, value });
        }
        Ok(SharedDraw::Bits { bits, value })
    }

    pub fn continuous(u: T) -> Result<Self> {
        if !(u >= T::zero() && u < T::one()) {
            return Err(Error::DrawOutOfRange(u.to_f64_lossy()));
        }
        Ok(SharedDraw::Continuous(u))
    }

    /// A zero-bit draw, for protocols that use no shared randomness.
    pub fn none() -> Self {
        SharedDraw::Bits { bits: 0, value: 0 }
    }

    pub fn bit_count(&self) -> Option<u32> {
        match *self {
            SharedDraw::Bits { bits, .. } => Some(bits),
            SharedDraw::Continuous(_) => None,
        }
    }
}

/// Sender-only randomness `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivateDraw<T>(T);

impl<T: Real> PrivateDraw<T> {
    pub fn new(r: T) -> Result<Self> {
        if !(r >= T::zero() && r < T::one()) {
            return Err(Error::DrawOutOfRange(r.to_f64_lossy()));
        }
        Ok(PrivateDraw(r))
    }

    pub fn value(&self) -> T {
        self.0
    }
}

/// Result of carving selector bits off the top of a shared draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetSplit<T> {
    pub selector_bits: u32,
    pub selector_value: u64,
    pub remainder: SharedDraw<T>,
}

/// Splits `draw` into its `selector_bits` most-significant bits and the
/// remaining low bits. Enumerating every value of a draw visits every
/// `(selector, remainder)` pair exactly once.
pub fn split_budget<T: Real>(draw: SharedDraw<T>, selector_bits: u32) -> Result<BudgetSplit<T>> {
    let (bits, value) = match draw {
        SharedDraw::Bits { bits, value } => (bits, value),
        SharedDraw::Continuous(_) => {
            return Err(Error::Invalid(
                "cannot split bits from a continuous draw".into(),
            ))
        }
    };
    if selector_bits > bits {
        return Err(Error::InsufficientBits {
            requested: selector_bits,
            available: bits,
        });
    }
    let rest = bits - selector_bits;
    Ok(BudgetSplit {
        selector_bits,
        selector_value: value >> rest,
        remainder: SharedDraw::Bits {
            bits: rest,
            value: value & low_mask(rest),
        },
    })
}

/// `true` iff `selector_value < threshold_numerator`; over a uniform
/// selector this fires with probability exactly `numerator / 2^bits`.
pub fn dyadic_bernoulli(
    selector_value: u64,
    selector_bits: u32,
    threshold_numerator: u64,
) -> Result<bool> {
    if selector_bits > MAX_SHARED_BITS {
        return Err(Error::BitsOutOfRange {
            bits: selector_bits,
            max: MAX_SHARED_BITS,
        });
    }
    if threshold_numerator > 1u64 << selector_bits {
        return Err(Error::NumeratorOutOfRange {
            numerator: threshold_numerator,
            bits: selector_bits,
        });
    }
    Ok(selector_value < threshold_numerator)
}

pub(crate) fn low_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Deterministic, cloneable source of draws.
#[derive(Debug, Clone)]
pub struct SeedStream {
    rng: ChaCha8Rng,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for shard `index` of the same master seed.
    pub fn fork(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        SeedStream { rng }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn unit<T: Real>(&mut self) -> T {
        let u = T::lit(self.unit_f64());
        // f32 rounding can land on 1.0
        if u >= T::one() {
            T::one() - T::epsilon()
        } else {
            u
        }
    }

    pub fn draw_private<T: Real>(&mut self) -> PrivateDraw<T> {
        PrivateDraw(self.unit())
    }

    pub fn draw_continuous<T: Real>(&mut self) -> SharedDraw<T> {
        SharedDraw::Continuous(self.unit())
    }
}

/// Uniform `bits`-bit shared draw taken from the top of the next word.
pub fn draw_shared<T: Real>(bits: u32, stream: &mut SeedStream) -> Result<SharedDraw<T>> {
    if bits > MAX_SHARED_BITS {
        return Err(Error::BitsOutOfRange {
            bits,
            max: MAX_SHARED_BITS,
        });
    }
    let value = if bits == 0 {
        0
    } else {
        stream.next_u64() >> (64 - bits)
    };
    Ok(SharedDraw::Bits { bits, value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_bits_always_zero() {
        let mut s = SeedStream::new(1);
        for _ in 0..100 {
            assert_eq!(
                draw_shared::<f64>(0, &mut s).unwrap(),
                SharedDraw::Bits { bits: 0, value: 0 }
            );
        }
    }

    #[test]
    fn one_bit_is_balanced() {
        let mut s = SeedStream::new(7);
        let n = 100_000;
        let ones = (0..n)
            .filter(|_| {
                matches!(
                    draw_shared::<f64>(1, &mut s).unwrap(),
                    SharedDraw::Bits { value: 1, .. }
                )
            })
            .count();
        let sigma = (n as f64 * 0.25).sqrt();
        assert!(
            (ones as f64 - n as f64 / 2.0).abs() < 3.0 * sigma,
            "ones = {ones}"
        );
    }

    #[test]
    fn byte_draws_pass_chi_square() {
        for seed in 0..8 {
            let mut s = SeedStream::new(seed);
            let n = 1_000_000u64;
            let mut counts = [0u64; 256];
            for _ in 0..n {
                if let SharedDraw::Bits { value, .. } = draw_shared::<f64>(8, &mut s).unwrap() {
                    counts[value as usize] += 1;
                }
            }
            let expected = n as f64 / 256.0;
            let chi2: f64 = counts
                .iter()
                .map(|&c| (c as f64 - expected).powi(2) / expected)
                .sum();
            // 255 degrees of freedom; 0.999 quantile is about 330.5
            assert!(chi2 < 330.5, "seed {seed}: chi2 = {chi2}");
        }
    }

    #[test]
    fn too_many_bits_rejected() {
        let mut s = SeedStream::new(0);
        assert!(matches!(
            draw_shared::<f64>(63, &mut s),
            Err(Error::BitsOutOfRange { .. })
        ));
    }

    #[test]
    fn split_examples() {
        let d = SharedDraw::<f64>::bits(4, 0b1101).unwrap();
        let sp = split_budget(d, 2).unwrap();
        assert_eq!(sp.selector_value, 0b11);
        assert_eq!(
            sp.remainder,
            SharedDraw::Bits {
                bits: 2,
                value: 0b01
            }
        );

        let sp = split_budget(SharedDraw::<f64>::bits(8, 0).unwrap(), 4).unwrap();
        assert_eq!(sp.selector_value, 0);
        assert_eq!(sp.remainder, SharedDraw::Bits { bits: 4, value: 0 });

        for h in 0..2 {
            let d = SharedDraw::<f64>::bits(1, h).unwrap();
            assert!(matches!(
                split_budget(d, 2),
                Err(Error::InsufficientBits { .. })
            ));
        }
    }

    #[test]
    fn split_is_a_bijection() {
        for bits in 0..=10u32 {
            for sel in 0..=bits {
                let mut seen = std::collections::HashSet::new();
                for h in 0..(1u64 << bits) {
                    let sp = split_budget(SharedDraw::<f64>::Bits { bits, value: h }, sel).unwrap();
                    assert!(sp.selector_value < 1 << sel);
                    assert_eq!(sp.remainder.bit_count(), Some(bits - sel));
                    let SharedDraw::Bits { value, .. } = sp.remainder else {
                        unreachable!()
                    };
                    assert!(seen.insert((sp.selector_value, value)));
                }
                assert_eq!(seen.len() as u64, 1u64 << bits);
            }
        }
    }

    #[test]
    fn dyadic_bernoulli_examples() {
        assert!(dyadic_bernoulli(10, 4, 11).unwrap());
        for v in 0..4 {
            assert!(dyadic_bernoulli(v, 2, 4).unwrap());
        }
        let hits = (0..4)
            .filter(|&v| dyadic_bernoulli(v, 2, 3).unwrap())
            .count();
        assert_eq!(hits, 3);
        assert!(matches!(
            dyadic_bernoulli(0, 2, 5),
            Err(Error::NumeratorOutOfRange { .. })
        ));
    }

    #[test]
    fn dyadic_frequency_is_exact() {
        for bits in 0..=8u32 {
            for num in 0..=(1u64 << bits) {
                let hits = (0..1u64 << bits)
                    .filter(|&v| dyadic_bernoulli(v, bits, num).unwrap())
                    .count();
                assert_eq!(hits as u64, num);
            }
        }
    }

    #[test]
    fn streams_reproduce_and_fork() {
        let mut a = SeedStream::new(99);
        let mut b = a.clone();
        assert_eq!(a.next_u64(), b.next_u64());
        let mut f0 = SeedStream::fork(99, 0);
        let mut f1 = SeedStream::fork(99, 1);
        assert_ne!(f0.next_u64(), f1.next_u64());
    }

    #[test]
    fn draw_validation() {
        assert!(SharedDraw::<f64>::continuous(1.0).is_err());
        assert!(SharedDraw::<f64>::continuous(-0.1).is_err());
        assert!(SharedDraw::<f64>::bits(2, 4).is_err());
        assert!(PrivateDraw::<f64>::new(1.0).is_err());
        assert!(PrivateDraw::<f64>::new(0.0).is_ok());
    }
}
