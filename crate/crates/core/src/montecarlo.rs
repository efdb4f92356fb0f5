//! End-to-end simulation: fresh draws, encode, decode, accumulate error.
//!
//! Trials run in shards of [`SHARD_TRIALS`]; shard `i` draws from
//! `SeedStream::fork(seed, i)`, so a report depends only on the seed and the
//! trial count. Within a trial the shared draw is taken before the private one.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact;
use crate::protocols::{Protocol, SharedRequirement};
use crate::randomness::{draw_shared, SeedStream, SharedDraw};
use crate::scalar::Real;

pub const SHARD_TRIALS: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub protocol: String,
    pub x: f64,
    pub trials: u64,
    pub seed: u64,
    pub mse: f64,
    pub bias: f64,
    /// Sample standard deviation of the squared errors over `√trials`.
    pub mse_std_error: f64,
}

/// Error sum plus Welford mean and centred second moment of squared errors.
#[derive(Default)]
struct Moments {
    n: f64,
    sum_e: f64,
    mean_sq: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, e: f64) {
        let s = e * e;
        self.n += 1.0;
        self.sum_e += e;
        let d = s - self.mean_sq;
        self.mean_sq += d / self.n;
        self.m2 += d * (s - self.mean_sq);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0.0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean_sq - self.mean_sq;
        self.mean_sq += d * o.n / n;
        self.m2 += o.m2 + d * d * self.n * o.n / n;
        self.sum_e += o.sum_e;
        self.n = n;
    }
}

fn draw_for<T: Real>(p: &Protocol<T>, stream: &mut SeedStream) -> Result<SharedDraw<T>> {
    match p.shared_requirement() {
        SharedRequirement::None => Ok(SharedDraw::none()),
        SharedRequirement::Bits(n) => draw_shared(n, stream),
        SharedRequirement::Continuous => Ok(stream.draw_continuous()),
    }
}

/// One encode/decode round trip with fresh randomness.
fn run_once<T: Real>(p: &Protocol<T>, x: T, stream: &mut SeedStream) -> Result<T> {
    let s = draw_for(p, stream)?;
    let r = stream.draw_private();
    let m = p.encode(x, &s, &r)?;
    p.decode(m, &s)
}

pub fn simulate<T: Real>(p: &Protocol<T>, x: T, trials: u64, seed: u64) -> Result<SimReport> {
    if trials == 0 {
        return Err(Error::Invalid("trials must be at least 1".into()));
    }
    if !p.accepts(x) {
        return Err(Error::OutsideDomain {
            protocol: p.to_string(),
            x: x.to_f64_lossy(),
        });
    }
    let mut total = Moments::default();
    let shards = trials.div_ceil(SHARD_TRIALS);
    for shard in 0..shards {
        let mut stream = SeedStream::fork(seed, shard);
        let n = SHARD_TRIALS.min(trials - shard * SHARD_TRIALS);
        let mut part = Moments::default();
        for _ in 0..n {
            let e = (run_once(p, x, &mut stream)? - x).to_f64_lossy();
            part.push(e);
        }
        total.merge(&part);
    }
    let n = trials as f64;
    let mse = total.mean_sq;
    let var = if trials > 1 {
        total.m2 / (n - 1.0)
    } else {
        0.0
    };
    Ok(SimReport {
        protocol: p.to_string(),
        x: x.to_f64_lossy(),
        trials,
        seed,
        mse,
        bias: total.sum_e / n,
        mse_std_error: (var / n).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanEstimationReport {
    pub protocol: String,
    pub n_senders: usize,
    pub true_mean: f64,
    pub estimated_mean: f64,
    pub squared_error: f64,
    /// `Σ Var_i / n²` from the exact evaluator.
    pub predicted_variance: f64,
}

fn check_senders<T: Real>(xs: &[T], p: &Protocol<T>) -> Result<()> {
    if !p.is_unbiased() {
        return Err(Error::BiasedProtocol(p.to_string()));
    }
    if xs.is_empty() {
        return Err(Error::Invalid("at least one sender is required".into()));
    }
    if let Some(&x) = xs.iter().find(|&&x| !p.accepts(x)) {
        return Err(Error::OutsideDomain {
            protocol: p.to_string(),
            x: x.to_f64_lossy(),
        });
    }
    Ok(())
}

fn predicted_variance<T: Real>(xs: &[T], p: &Protocol<T>) -> Result<f64> {
    let mut total = 0.0;
    for &x in xs {
        total += exact::variance_at(p, x)?.to_f64_lossy();
    }
    Ok(total / (xs.len() as f64).powi(2))
}

fn one_round<T: Real>(xs: &[T], p: &Protocol<T>, seed: u64) -> Result<(f64, f64)> {
    let mut truth = 0.0;
    let mut estimate = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        // each sender has its own channel, hence its own independent draws
        let mut stream = SeedStream::fork(seed, i as u64);
        estimate += run_once(p, x, &mut stream)?.to_f64_lossy();
        truth += x.to_f64_lossy();
    }
    let n = xs.len() as f64;
    Ok((truth / n, estimate / n))
}

/// Each sender transmits its value once; the aggregator averages the estimates.
pub fn mean_estimation<T: Real>(
    xs: &[T],
    p: &Protocol<T>,
    seed: u64,
) -> Result<MeanEstimationReport> {
    check_senders(xs, p)?;
    let (true_mean, estimated_mean) = one_round(xs, p, seed)?;
    Ok(MeanEstimationReport {
        protocol: p.to_string(),
        n_senders: xs.len(),
        true_mean,
        estimated_mean,
        squared_error: (estimated_mean - true_mean).powi(2),
        predicted_variance: predicted_variance(xs, p)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepeatedMeanEstimation {
    pub protocol: String,
    pub n_senders: usize,
    pub repetitions: usize,
    pub mean_squared_error: f64,
    pub predicted_variance: f64,
}

/// Repeats [`mean_estimation`] with per-repetition seeds drawn from `seed`.
pub fn mean_estimation_repeated<T: Real>(
    xs: &[T],
    p: &Protocol<T>,
    seed: u64,
    repetitions: usize,
) -> Result<RepeatedMeanEstimation> {
    check_senders(xs, p)?;
    if repetitions == 0 {
        return Err(Error::Invalid("repetitions must be at least 1".into()));
    }
    let mut seeds = SeedStream::new(seed);
    let mut total = 0.0;
    for _ in 0..repetitions {
        let (truth, estimate) = one_round(xs, p, seeds.next_u64())?;
        total += (estimate - truth).powi(2);
    }
    Ok(RepeatedMeanEstimation {
        protocol: p.to_string(),
        n_senders: xs.len(),
        repetitions,
        mean_squared_error: total / repetitions as f64,
        predicted_variance: predicted_variance(xs, p)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn randomized_rounding_half() {
        let p = Protocol::<f64>::randomized_rounding();
        let r = simulate(&p, 0.5, 1_000_000, 11).unwrap();
        assert!(
            (r.mse - 0.25).abs() <= 4.0 * r.mse_std_error + 1e-12,
            "{r:?}"
        );
        assert!(r.bias.abs() <= 4.0 * (r.mse / r.trials as f64).sqrt());
    }

    #[test]
    fn deterministic_protocol_has_no_spread() {
        let p = Protocol::<f64>::deterministic_rounding();
        let r = simulate(&p, 0.3, 1000, 1).unwrap();
        assert_eq!(r.mse_std_error, 0.0);
        assert!((r.mse - 0.0025).abs() < 1e-15);
    }

    #[test]
    fn biased_shared_matches_exact_at_zero() {
        let p = Protocol::<f64>::biased_shared(3).unwrap();
        let r = simulate(&p, 0.0, 1_000_000, 5).unwrap();
        let want = exact::mse_at(&p, 0.0).unwrap();
        assert!(
            (r.mse - want).abs() < 4.0 * r.mse_std_error + 1e-12,
            "{r:?} vs {want}"
        );
    }

    #[test]
    fn reproducible_and_shard_independent() {
        let p = Protocol::<f64>::subtractive_dithering();
        let a = simulate(&p, 0.3, 200_000, 42).unwrap();
        let b = simulate(&p, 0.3, 200_000, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate(&p, 0.3, 200_000, 43).unwrap();
        assert_ne!(a.mse, c.mse);
    }

    #[test]
    fn rejects_bad_input() {
        let p = Protocol::<f64>::three_point_unbiased();
        assert!(simulate(&p, 0.3, 10, 0).is_err());
        assert!(simulate(&p, 0.5, 0, 0).is_err());
    }

    #[test]
    fn mean_estimation_contracts() {
        let dither = Protocol::<f64>::subtractive_dithering();
        let xs = vec![0.5; 40];
        let r = mean_estimation(&xs, &dither, 3).unwrap();
        assert!((r.predicted_variance - 1.0 / (12.0 * 40.0)).abs() < 1e-15);

        let rr = Protocol::<f64>::randomized_rounding();
        let r = mean_estimation(&[0.0, 1.0], &rr, 9).unwrap();
        assert_eq!(r.squared_error, 0.0);
        assert_eq!(r.estimated_mean, 0.5);

        let biased = Protocol::<f64>::limit_biased();
        assert!(matches!(
            mean_estimation(&xs, &biased, 0),
            Err(Error::BiasedProtocol(_))
        ));
    }
}
