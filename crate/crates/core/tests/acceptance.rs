//! Acceptance suite: one PASS/FAIL line per criterion.

use std::process::{Command, ExitCode};
use std::time::Instant;

use onebit::exact::{self, closed};
use onebit::lowerbound::{
    brute_force_cost, kbit_triplet_bound, kbit_triplet_bound_closed, named_distribution,
    optimal_deterministic_cost, DiscreteDistribution,
};
use onebit::montecarlo::simulate;
use onebit::protocols::{alpha_opt, optimal_truncation};
use onebit::randomness::{PrivateDraw, SeedStream, SharedDraw};
use onebit::scalar::consts;
use onebit::{Protocol, Result};

type Criterion = (&'static str, fn() -> Result<Outcome>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| i as f64 / (n - 1) as f64)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn has_point(set: &[f64], x: f64, tol: f64) -> bool {
    set.iter().any(|&v| (v - x).abs() <= tol)
}

fn c1() -> Result<Outcome> {
    let w = exact::worst_case(&Protocol::randomized_rounding())?;
    outcome(
        close(w.cost, 0.25, 1e-12) && w.argmax == [0.5],
        format!("cost {:.17} argmax {:?}", w.cost, w.argmax),
    )
}

fn c2() -> Result<Outcome> {
    let w = exact::worst_case(&Protocol::deterministic_rounding())?;
    let at = [0.0, 0.5, 1.0]
        .iter()
        .all(|&x| has_point(&w.argmax, x, 0.0));
    outcome(
        close(w.cost, 1.0 / 16.0, 1e-12) && at,
        format!("cost {:.17} argmax {:?}", w.cost, w.argmax),
    )
}

fn c3() -> Result<Outcome> {
    let mut worst_dev: f64 = 0.0;
    let mut costs = Vec::new();
    for l in 1..=10 {
        let p = Protocol::shared_unbiased(l)?;
        let w = exact::worst_case(&p)?;
        let v = exact::variance_at(&p, w.argmax[0])?;
        worst_dev = worst_dev.max((w.cost - closed::worst_variance_unbiased::<f64>(l)).abs());
        worst_dev = worst_dev.max((v - w.cost).abs());
        costs.push(w.cost);
    }
    let pinned =
        close(costs[0], 0.125, 1e-12) && close(costs[7], 1.0 / 12.0 + 1.0 / 393216.0, 1e-12);
    outcome(
        worst_dev < 1e-12 && pinned,
        format!(
            "max deviation {worst_dev:.2e}; l=1 {:.15}, l=8 {:.15}",
            costs[0], costs[7]
        ),
    )
}

fn c4() -> Result<Outcome> {
    let mut dev: f64 = 0.0;
    for l in 1..=8 {
        let p = Protocol::shared_unbiased(l)?;
        for x in grid(1001) {
            dev =
                dev.max((exact::variance_at(&p, x)? - exact::variance_closed_unbiased(x, l)).abs());
        }
    }
    outcome(
        dev < 1e-12,
        format!("max deviation {dev:.2e} over 1001 points x l=1..8"),
    )
}

fn c5() -> Result<Outcome> {
    let mut stream = SeedStream::new(5);
    let mut dev: f64 = 0.0;
    for _ in 0..512 {
        let l = 1 + (stream.next_u64() % 10) as u32;
        let step = 0.5f64.powi(l as i32);
        let x = stream.unit_f64() * (1.0 - step);
        let p = Protocol::shared_unbiased(l)?;
        dev = dev.max((exact::variance_at(&p, x)? - exact::variance_at(&p, x + step)?).abs());
    }
    outcome(
        dev < 1e-12,
        format!("max |Var(x) - Var(x + 2^-l)| = {dev:.2e} over 512 pairs"),
    )
}

/// Exact CDF of the dithered estimate at `t`: on each piece of the shared
/// draw where the message is fixed the estimate is affine in `u`.
fn dither_cdf(p: &Protocol, x: f64, t: f64) -> Result<f64> {
    let mut total = 0.0;
    for (a, b) in [(0.0, x), (x, 1.0)] {
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        let s_mid = SharedDraw::continuous(mid)?;
        let m = p.encode(x, &s_mid, &PrivateDraw::new(0.0)?)?;
        let va = p.decode(m, &SharedDraw::continuous(a)?)?;
        let vm = p.decode(m, &s_mid)?;
        let slope = (vm - va) / (mid - a);
        let vb = va + slope * (b - a);
        total += ((t - va) / (vb - va)).clamp(0.0, 1.0) * (b - a);
    }
    Ok(total)
}

fn c6() -> Result<Outcome> {
    let p = Protocol::subtractive_dithering();
    let mut var_dev: f64 = 0.0;
    for x in grid(1001) {
        let c = exact::evaluate(&p, x)?;
        var_dev = var_dev
            .max((c.variance - 1.0 / 12.0).abs())
            .max(c.bias.abs());
    }
    let mut cdf_dev: f64 = 0.0;
    for x in [0.0, 0.1, 0.3, 0.5, 0.77, 1.0] {
        for i in 0..=400 {
            let t = x - 0.6 + 1.2 * i as f64 / 400.0;
            let uniform = (t - (x - 0.5)).clamp(0.0, 1.0);
            cdf_dev = cdf_dev.max((dither_cdf(&p, x, t)? - uniform).abs());
        }
    }
    outcome(
        var_dev < 1e-12 && cdf_dev < 1e-12,
        format!("variance deviation {var_dev:.2e}; CDF deviation {cdf_dev:.2e}"),
    )
}

fn c7() -> Result<Outcome> {
    let p = Protocol::three_point_unbiased();
    let vars = [0.0, 0.5, 1.0]
        .iter()
        .map(|&x| exact::evaluate(&p, x))
        .collect::<Result<Vec<_>>>()?;
    let ok = vars
        .iter()
        .all(|c| close(c.variance, 1.0 / 16.0, 1e-12) && c.bias.abs() < 1e-12);
    outcome(
        ok,
        format!(
            "variances {:?}",
            vars.iter().map(|c| c.variance).collect::<Vec<_>>()
        ),
    )
}

fn c8() -> Result<Outcome> {
    let z: f64 = optimal_truncation();
    let w = exact::worst_case(&Protocol::truncated_dithering(z)?)?;
    let want = closed::truncated_dithering_cost(z);
    let ok = (0.1734..=0.1736).contains(&z) && close(w.cost, want, 1e-6);
    outcome(
        ok,
        format!("z = {z:.12}, cost {:.12} vs {want:.12}", w.cost),
    )
}

fn c9() -> Result<Outcome> {
    let p = Protocol::convex_dithered_optimal();
    let want = 5.0 / 3.0 - consts::phi::<f64>();
    let mut dev: f64 = 0.0;
    for x in grid(1001) {
        dev = dev.max((exact::mse_at(&p, x)? - want).abs());
    }
    outcome(
        dev < 1e-12,
        format!("max deviation from 5/3 - phi: {dev:.2e}"),
    )
}

fn c10() -> Result<Outcome> {
    let s3 = consts::sqrt3::<f64>();
    let triples = [
        (1, 1.0 / 3.0, 1.0 / 18.0),
        (2, (15.0 - 6.0 * s3) / 13.0, (259.0 - 140.0 * s3) / 338.0),
        (3, 7.0 / 19.0, 35.0 / 722.0),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (l, alpha, cost) in triples {
        let a: f64 = alpha_opt(l);
        let w = exact::worst_case(&Protocol::biased_shared(l)?)?;
        ok &= close(a, alpha, 1e-12) && close(w.cost, cost, 1e-12);
        detail.push(format!(
            "l={l}: {:.2e}/{:.2e}",
            (a - alpha).abs(),
            (w.cost - cost).abs()
        ));
    }
    let mut costs = Vec::new();
    for l in 3..=8 {
        costs.push(exact::worst_case(&Protocol::biased_shared(l)?)?.cost);
    }
    let non_improving = costs.windows(2).all(|w| w[1] >= w[0]);
    ok &= non_improving;
    detail.push(format!(
        "l=3..8 costs {:?}",
        costs.iter().map(|c| format!("{c:.9}")).collect::<Vec<_>>()
    ));
    outcome(ok, detail.join("; "))
}

fn c11() -> Result<Outcome> {
    let w = exact::worst_case(&Protocol::three_point_biased())?;
    let want = 0.75 - std::f64::consts::FRAC_1_SQRT_2;
    let lb = optimal_deterministic_cost(&named_distribution::<f64>("sqrt2-3")?, 1).bound;
    outcome(
        close(w.cost, want, 1e-12) && close(w.cost, lb, 1e-12),
        format!("cost {:.17}, bound {lb:.17}", w.cost),
    )
}

fn c12() -> Result<Outcome> {
    let (s2, s3, s5, s10) = (
        consts::sqrt2::<f64>(),
        consts::sqrt3::<f64>(),
        consts::sqrt5::<f64>(),
        consts::sqrt10::<f64>(),
    );
    let cases = [
        (
            "limit",
            Protocol::hybrid_limit(),
            (6.0 * s10 + 11.0 * s5 - 18.0 * s2 - 17.0) / 24.0,
        ),
        (
            "l=4",
            Protocol::hybrid_four_bits(),
            (1049.0 - 169.0 * s2 - 430.0 * s3) / 1352.0,
        ),
        (
            "l=8",
            Protocol::hybrid_one_byte(),
            (1830635.0 - 1232945.0 * s2) / 1858592.0,
        ),
        (
            "l=3",
            Protocol::hybrid_three_bit(),
            102.0 / 361.0 - 1.0 / (3.0 * s2),
        ),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, p, want) in cases {
        let w = exact::worst_case(&p)?;
        ok &= close(w.cost, want, 1e-9);
        if name == "l=8" {
            let argmax = (109.0 + 6.0 * s2) / 241.0;
            let hit = has_point(&w.argmax, argmax, 1e-8);
            ok &= hit;
            detail.push(format!(
                "{name}: {:.2e} (argmax {argmax:.9} found: {hit})",
                (w.cost - want).abs()
            ));
        } else {
            detail.push(format!("{name}: {:.2e}", (w.cost - want).abs()));
        }
    }
    outcome(ok, detail.join("; "))
}

fn random_prior(stream: &mut SeedStream) -> Result<DiscreteDistribution<f64>> {
    let n = 2 + (stream.next_u64() % 11) as usize;
    let mut points: Vec<f64> = (0..n).map(|_| stream.unit_f64()).collect();
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();
    let weights = points.iter().map(|_| 0.05 + stream.unit_f64()).collect();
    DiscreteDistribution::normalized(points, weights)
}

fn c13() -> Result<Outcome> {
    let phi = consts::phi::<f64>();
    let named = [
        ("uniform3", 1.0 / 24.0),
        ("sqrt2-3", 0.75 - std::f64::consts::FRAC_1_SQRT_2),
        ("uniform4", (2.0 - consts::sqrt3::<f64>()) / 6.0),
        ("golden4", (5.0 * phi - 8.0) / 2.0),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    let mut named_dev: f64 = 0.0;
    for (name, want) in named {
        named_dev = named_dev.max(
            (optimal_deterministic_cost(&named_distribution::<f64>(name)?, 1).bound - want).abs(),
        );
    }
    ok &= named_dev < 1e-12;
    detail.push(format!("named priors {named_dev:.2e}"));

    let mut stream = SeedStream::new(13);
    let mut brute_dev: f64 = 0.0;
    for i in 0..200 {
        let q = random_prior(&mut stream)?;
        let k = 1 + (i % 2) as u32;
        brute_dev = brute_dev
            .max((optimal_deterministic_cost(&q, k).bound - brute_force_cost(&q, k).bound).abs());
    }
    ok &= brute_dev < 1e-12;
    detail.push(format!("DP vs brute force {brute_dev:.2e}"));

    for k in 1..=3 {
        let dp = kbit_triplet_bound::<f64>(k)?.bound;
        let published = kbit_triplet_bound_closed::<f64>(k);
        let hit = close(dp, published, 1e-10);
        ok &= hit;
        detail.push(format!(
            "comb k={k}: optimum {dp:.12} vs published {published:.12}"
        ));
    }
    outcome(ok, detail.join("; "))
}

fn c14() -> Result<Outcome> {
    let cost = exact::worst_case(&Protocol::hybrid_limit())?.cost;
    let bound = optimal_deterministic_cost(&named_distribution::<f64>("golden4")?, 1).bound;
    let ratio = cost / bound;
    outcome(
        ratio <= 1.0302,
        format!("{cost:.6} / {bound:.6} = {ratio:.6}"),
    )
}

fn c15() -> Result<Outcome> {
    let mut ok = true;
    let mut detail = Vec::new();
    let mut mismatches = 0;
    for l in 1..=6 {
        let a = Protocol::kbit_unbiased(1, Some(l))?;
        let b = Protocol::shared_unbiased(l)?;
        for h in 0..(1u64 << l) {
            let s = SharedDraw::bits(l, h)?;
            for x in grid(257) {
                for j in 0..16 {
                    let r = PrivateDraw::new(j as f64 / 16.0)?;
                    let (ma, mb) = (a.encode(x, &s, &r)?, b.encode(x, &s, &r)?);
                    if ma != mb || a.decode(ma, &s)? != b.decode(mb, &s)? {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    ok &= mismatches == 0;
    detail.push(format!("k=1 reduction mismatches: {mismatches}"));

    let mut dev: f64 = 0.0;
    for k in 1..=3 {
        let p = Protocol::kbit_unbiased(k, None)?;
        let want = 1.0 / (12.0 * ((1u64 << k) - 1).pow(2) as f64);
        for x in grid(1001) {
            dev = dev.max((exact::variance_at(&p, x)? - want).abs());
        }
    }
    ok &= dev < 1e-10;
    detail.push(format!("limit variance deviation {dev:.2e}"));

    let k = 6;
    let variance = exact::worst_case(&Protocol::kbit_unbiased(k, None)?)?.cost;
    let target = (9.0 + 6.0 * consts::sqrt2::<f64>()) / 16.0;
    let ratio = variance / kbit_triplet_bound_closed::<f64>(k);
    let within = (ratio / target - 1.0).abs() <= 0.02;
    ok &= within;
    let optimum_ratio = variance / kbit_triplet_bound::<f64>(k)?.bound;
    detail.push(format!(
        "k=6 variance / published bound = {ratio:.4} vs {target:.4}; against the comb's optimal cost the ratio is {optimum_ratio:.4}"
    ));
    outcome(ok, detail.join("; "))
}

fn sample_x(p: &Protocol, stream: &mut SeedStream) -> f64 {
    if p.accepts(0.25) {
        stream.unit_f64()
    } else {
        [0.0, 0.5, 1.0][(stream.next_u64() % 3) as usize]
    }
}

fn c16() -> Result<Outcome> {
    let start = Instant::now();
    let protocols = vec![
        Protocol::randomized_rounding(),
        Protocol::deterministic_rounding(),
        Protocol::shared_unbiased(1)?,
        Protocol::shared_unbiased(4)?,
        Protocol::subtractive_dithering(),
        Protocol::three_point_unbiased(),
        Protocol::truncated_dithering_optimal(),
        Protocol::convex_dithered_optimal(),
        Protocol::biased_shared(1)?,
        Protocol::biased_shared(2)?,
        Protocol::biased_shared(3)?,
        Protocol::three_point_biased(),
        Protocol::limit_biased(),
        Protocol::hybrid_limit(),
        Protocol::hybrid_four_bits(),
        Protocol::hybrid_one_byte(),
        Protocol::hybrid_three_bit(),
        Protocol::kbit_unbiased(2, Some(3))?,
        Protocol::kbit_unbiased(3, None)?,
    ];
    let mut stream = SeedStream::new(16);
    let mut failures = Vec::new();
    let mut worst_z: f64 = 0.0;
    let mut checks = 0;
    for p in &protocols {
        for _ in 0..20 {
            let x = sample_x(p, &mut stream);
            let r = simulate(p, x, 1_000_000, stream.next_u64())?;
            let exact = exact::mse_at(p, x)?;
            let gap = (r.mse - exact).abs();
            if r.mse_std_error > 0.0 {
                worst_z = worst_z.max(gap / r.mse_std_error);
            }
            checks += 1;
            if gap > 4.0 * r.mse_std_error + 1e-12 {
                failures.push(format!("{p} at x={x}: {} vs {exact}", r.mse));
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed.as_secs_f64() < 60.0;
    let mut detail = format!(
        "{checks} checks over {} protocols, largest gap {worst_z:.2} standard errors, {:.1}s",
        protocols.len(),
        elapsed.as_secs_f64()
    );
    if !failures.is_empty() {
        detail.push_str(&format!("; failures: {}", failures.join(", ")));
    }
    outcome(ok, detail)
}

fn c17() -> Result<Outcome> {
    let out = Command::new(env!("CARGO_BIN_EXE_onebit"))
        .arg("table1")
        .output()
        .expect("run onebit table1");
    let text = String::from_utf8_lossy(&out.stdout);
    let failing = text.lines().filter(|l| l.ends_with("FAIL")).count();
    outcome(
        out.status.success() && failing == 0,
        format!("exit {:?}, {failing} failing cells", out.status.code()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 17] = [
        ("randomized rounding worst case 1/4 at x=1/2", c1),
        ("deterministic rounding worst case 1/16 at {0,1/2,1}", c2),
        (
            "l-bit unbiased worst-case variance 1/6(1/2+4^-l), l=1..10",
            c3,
        ),
        ("l-bit unbiased variance matches closed form on a grid", c4),
        ("l-bit unbiased variance is 2^-l periodic", c5),
        ("subtractive dithering: variance 1/12, estimate uniform", c6),
        ("three-point unbiased variance 1/16", c7),
        ("truncated dithering z and cost", c8),
        ("convex dithering at alpha=2-phi has flat mse 5/3-phi", c9),
        (
            "biased l-bit (l, alpha, cost) triples and monotone cost",
            c10,
        ),
        (
            "three-point biased cost 3/4-1/sqrt2 equals its lower bound",
            c11,
        ),
        ("hybrid costs (limit, l=4, l=8, l=3)", c12),
        ("lower-bound solver values and comb bound", c13),
        ("hybrid limit within 3.02% of the golden-ratio bound", c14),
        ("k-bit reduction, limit variance and bound ratio", c15),
        ("Monte Carlo agrees with exact mse", c16),
        ("table1 command exits 0 with all cells matching", c17),
    ];
    let skip = std::env::args().any(|a| a == "--list");
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if skip {
            println!("criterion {:>2}: {name}", i + 1);
            continue;
        }
        let start = Instant::now();
        let result = check().unwrap_or_else(|e| Outcome {
            pass: false,
            detail: format!("error: {e}"),
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2}: {} {name} [{}] ({:.1}s)",
            i + 1,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        println!("acceptance: all 17 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 17 criteria FAIL");
        ExitCode::FAILURE
    }
}
