//! Average-case reconstruction: locate the longest zero run by linear
//! stepping from 0^{⌊log2 n⌋}, then finish with `basic(0^d, 0^{d+1})`.
//! Also houses the exact distribution of the longest zero run (f, α, β)
//! and the exact expected query count.

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::basic::basic;
use crate::bitstr::BitString;
use crate::oracle::{Oracle, Phase};

/// Length of the longest 0-run of the hidden string, found by querying
/// 0^{⌊log2 n⌋} and stepping up on yes / down on no. Returns (d, cost).
/// d = 0 is concluded as soon as 0^1 answers no.
pub fn find_max_zero_run(o: &mut Oracle) -> (usize, u64) {
    let n = o.n();
    assert!(n >= 2);
    let start = o.total_queries();
    let l = n.ilog2() as usize;
    let mut j = l;
    if o.query(&BitString::zeros(j)) {
        while o.query(&BitString::zeros(j + 1)) {
            j += 1;
        }
    } else {
        loop {
            j -= 1;
            if j == 0 || o.query(&BitString::zeros(j)) {
                break;
            }
        }
    }
    (j, o.total_queries() - start)
}

/// Deterministic reconstruction: seed search, then `basic(0^d, 0^{d+1})`.
/// The basic call always costs exactly n + 2 with this seed pair, so the
/// per-string total is seedcost(d) + n + 2.
pub fn reconstruct_average(o: &mut Oracle) -> BitString {
    let n = o.n();
    if n == 1 {
        let one = BitString::ones(1);
        return if o.query(&one) { one } else { BitString::zeros(1) };
    }
    o.set_phase(Phase::Seed);
    let (d, _) = find_max_zero_run(o);
    o.set_phase(Phase::Finish);
    let out = basic(o, &BitString::zeros(d), &BitString::zeros(d + 1));
    o.set_phase(Phase::Default);
    out
}

/// g_i(m) for m = 0..=n: the number of length-m strings whose 0-runs all
/// have length ≤ i, via the last-run recurrence with a sliding window sum.
fn run_limited_counts(n: usize, i: usize) -> Vec<BigUint> {
    let mut g: Vec<BigUint> = Vec::with_capacity(n + 1);
    g.push(BigUint::one());
    let mut win = BigUint::one();
    for m in 1..=n {
        let mut gm = win.clone();
        if m <= i {
            gm += 1u32;
        }
        g.push(gm);
        win += &g[m];
        if m > i {
            win -= &g[m - 1 - i];
        }
    }
    g
}

/// Number of length-n strings whose longest 0-run is exactly i.
pub fn count_max_run_exact(n: usize, i: usize) -> BigUint {
    assert!(i <= n, "run length out of range");
    let gi = run_limited_counts(n, i)[n].clone();
    if i == 0 {
        gi
    } else {
        gi - &run_limited_counts(n, i - 1)[n]
    }
}

/// The full vector f(0..=n); Σ f(i) = 2^n.
pub fn max_run_counts(n: usize) -> Vec<BigUint> {
    let mut prev = BigUint::zero();
    (0..=n)
        .map(|i| {
            let gi = run_limited_counts(n, i)[n].clone();
            let f = &gi - &prev;
            prev = gi;
            f
        })
        .collect()
}

/// Seed-phase cost for max-run d, measured by running the stepping loop
/// against a synthetic string realizing that run length.
pub fn measured_seed_cost(n: usize, d: usize) -> u64 {
    assert!(n >= 2 && d <= n);
    let mut hidden = BitString::zeros(d);
    hidden.extend_from(&BitString::ones(n - d));
    let mut o = Oracle::new(hidden);
    let (found, cost) = find_max_zero_run(&mut o);
    assert_eq!(found, d);
    cost
}

/// Closed-form seed cost as charged in the expectation; differs from the
/// measured count only at d = 0 (by one query).
pub fn closed_form_seed_cost(n: usize, d: usize) -> u64 {
    let l = n.ilog2() as u64;
    let d = d as u64;
    if d >= l {
        d - l + 2
    } else {
        l - d + 1
    }
}

/// Tail bounds on the run-length distribution:
/// α(ℓ) = (n−ℓ+1)·2^{n−ℓ} ≥ Σ_{i≥ℓ} f(i) for all 1 ≤ ℓ ≤ n (union bound),
/// and β(ℓ) = (1 − 1/2^{ℓ+1})^{n−ℓ+1}·2^n.
///
/// β(ℓ) does *not* dominate Σ_{i=1..ℓ} f(i) on ℓ ≤ log2(n) − 1: the
/// per-window product underestimates the count of strings avoiding
/// 0^{ℓ+1} because window events are positively correlated, so β is a
/// lower bound on that count (see the `beta_prefix_sum_inequality_fails`
/// test). What does hold, and what the downstream expectation argument
/// actually uses, is the geometric decrease β(ℓ−1) ≤ β(ℓ)/2 on
/// ℓ ≤ log2(n) − 1.
pub fn tail_bounds(n: usize, ell: usize) -> (BigUint, Ratio<BigUint>) {
    assert!(ell >= 1 && ell <= n);
    let alpha = BigUint::from(n - ell + 1) * (BigUint::one() << (n - ell));
    let exp = n - ell + 1;
    let num = ((BigUint::one() << (ell + 1)) - BigUint::one()).pow(exp as u32);
    let den = BigUint::one() << ((ell + 1) * exp);
    let beta = Ratio::new(num, den) * Ratio::from_integer(BigUint::one() << n);
    (alpha, beta)
}

/// Exact analytic expectation of the total query count:
/// Σ_d f(d)·(seedcost(d) + n + 2) / 2^n. Because the basic call costs
/// exactly n + 2 for every string, this equals the exhaustive mean.
pub fn expected_queries(n: usize) -> Ratio<BigUint> {
    let f = max_run_counts(n);
    let mut total = BigUint::zero();
    for (d, fd) in f.iter().enumerate() {
        let per = BigUint::from(measured_seed_cost(n, d) + n as u64 + 2);
        total += fd * per;
    }
    Ratio::new(total, BigUint::one() << n)
}

/// Exact run-length accounting for one n.
#[derive(Debug, Clone)]
pub struct AverageStats {
    pub n: usize,
    /// f[i] = number of strings with longest 0-run exactly i.
    pub f: Vec<BigUint>,
    /// Exact expected total query count of `reconstruct_average`.
    pub exact_mean: Ratio<BigUint>,
    /// Exact expected seed-phase cost.
    pub seed_mean: Ratio<BigUint>,
    /// alpha[ℓ] for ℓ = 1..=n (index ℓ−1).
    pub alpha: Vec<BigUint>,
    /// beta[ℓ] for ℓ = 1..=n (index ℓ−1); the bound it implies is only
    /// claimed for ℓ ≤ log2(n) − 1.
    pub beta: Vec<Ratio<BigUint>>,
}

pub fn average_stats(n: usize) -> AverageStats {
    let f = max_run_counts(n);
    let mut total = BigUint::zero();
    let mut seed_total = BigUint::zero();
    for (d, fd) in f.iter().enumerate() {
        let seed = measured_seed_cost(n, d);
        seed_total += fd * BigUint::from(seed);
        total += fd * BigUint::from(seed + n as u64 + 2);
    }
    let pow = BigUint::one() << n;
    let (alpha, beta) = (1..=n).map(|ell| tail_bounds(n, ell)).unzip();
    AverageStats {
        n,
        f,
        exact_mean: Ratio::new(total, pow.clone()),
        seed_mean: Ratio::new(seed_total, pow),
        alpha,
        beta,
    }
}

/// One row of the per-d table surfaced by the `expect` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct ExpectRow {
    pub d: usize,
    pub count: String,
    pub seed_measured: u64,
    pub seed_closed_form: u64,
    pub total_per_string: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpectReport {
    pub n: usize,
    pub exact_mean: RationalOut,
    pub mean_bound: u64,
    pub seed_mean: RationalOut,
    pub rows: Vec<ExpectRow>,
}

/// Exact rational rendered for JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct RationalOut {
    pub num: String,
    pub den: String,
    pub approx: f64,
}

pub fn ratio_out(r: &Ratio<BigUint>) -> RationalOut {
    let approx = big_to_f64(r.numer()) / big_to_f64(r.denom());
    RationalOut {
        num: r.numer().to_string(),
        den: r.denom().to_string(),
        approx,
    }
}

fn big_to_f64(b: &BigUint) -> f64 {
    b.to_string().parse().unwrap_or(f64::INFINITY)
}

pub fn expect_report(n: usize) -> ExpectReport {
    let stats = average_stats(n);
    let rows = stats
        .f
        .iter()
        .enumerate()
        .map(|(d, fd)| {
            let seed = measured_seed_cost(n, d);
            ExpectRow {
                d,
                count: fd.to_string(),
                seed_measured: seed,
                seed_closed_form: closed_form_seed_cost(n, d),
                total_per_string: seed + n as u64 + 2,
            }
        })
        .collect();
    ExpectReport {
        n,
        exact_mean: ratio_out(&stats.exact_mean),
        mean_bound: n as u64 + 6,
        seed_mean: ratio_out(&stats.seed_mean),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn run_seed(hidden: &str) -> (usize, u64) {
        let mut o = Oracle::new(bs(hidden));
        find_max_zero_run(&mut o)
    }

    #[test]
    fn seed_search_cases() {
        assert_eq!(run_seed("1111011110000111"), (4, 2));
        assert_eq!(run_seed("1111011110000011"), (5, 3));
        assert_eq!(run_seed("1111111111111111"), (0, 4));
    }

    #[test]
    fn seed_search_exhaustive_matches_max_run() {
        for n in 2..=11usize {
            let l = n.ilog2() as usize;
            for v in 0u64..(1 << n) {
                let hidden = BitString::from_u64(v, n);
                let d = hidden.max_run(false);
                let mut o = Oracle::new(hidden.clone());
                let (found, cost) = find_max_zero_run(&mut o);
                assert_eq!(found, d, "hidden {hidden}");
                let want = if d >= l {
                    (d - l + 2) as u64
                } else if d >= 1 {
                    (l - d + 1) as u64
                } else {
                    l as u64
                };
                assert_eq!(cost, want, "hidden {hidden}");
            }
        }
    }

    #[test]
    fn reconstruct_examples() {
        let mut o = Oracle::new(BitString::ones(16));
        assert_eq!(reconstruct_average(&mut o), BitString::ones(16));
        assert_eq!(o.phase_count(Phase::Seed), 4);
        assert!(o.phase_count(Phase::Finish) <= 18);

        let mut o = Oracle::new(BitString::zeros(16));
        assert_eq!(reconstruct_average(&mut o), BitString::zeros(16));

        let mut o = Oracle::new(bs("1"));
        assert_eq!(reconstruct_average(&mut o), bs("1"));
        assert_eq!(o.total_queries(), 1);
        let mut o = Oracle::new(bs("0"));
        assert_eq!(reconstruct_average(&mut o), bs("0"));
        assert_eq!(o.total_queries(), 1);
    }

    #[test]
    fn reconstruct_exhaustive_small() {
        for n in 2..=11usize {
            for v in 0u64..(1 << n) {
                let hidden = BitString::from_u64(v, n);
                let mut o = Oracle::with_options(hidden.clone(), false, true);
                assert_eq!(reconstruct_average(&mut o), hidden, "hidden {hidden}");
            }
        }
    }

    #[test]
    fn f_counts_match_brute_force() {
        for n in 1..=14usize {
            let mut brute = vec![0u64; n + 1];
            for v in 0u64..(1 << n) {
                brute[BitString::from_u64(v, n).max_run(false)] += 1;
            }
            let f = max_run_counts(n);
            for i in 0..=n {
                assert_eq!(f[i], BigUint::from(brute[i]), "n={n} i={i}");
                assert_eq!(count_max_run_exact(n, i), f[i]);
            }
        }
    }

    #[test]
    fn f_small_values_and_partition() {
        let f3 = max_run_counts(3);
        let want: Vec<BigUint> = [1u32, 4, 2, 1].iter().map(|&x| x.into()).collect();
        assert_eq!(f3, want);
        for n in [1usize, 5, 9, 20, 33] {
            let f = max_run_counts(n);
            assert_eq!(f[n], BigUint::one(), "only the all-zero string");
            let sum: BigUint = f.iter().sum();
            assert_eq!(sum, BigUint::one() << n);
        }
    }

    #[test]
    fn tail_bound_examples() {
        let (a, _) = tail_bounds(16, 16);
        assert_eq!(a, BigUint::one());
        let (a, _) = tail_bounds(16, 5);
        assert_eq!(a, BigUint::from(24576u32));
        let (_, b) = tail_bounds(16, 3);
        let approx = b.numer().to_u64().unwrap() as f64 / b.denom().to_u64().unwrap() as f64;
        assert!((26500.0..26600.0).contains(&approx), "beta(3) ~ {approx}");
    }

    #[test]
    fn alpha_dominates_upper_tail() {
        for n in 1..=20usize {
            let f = max_run_counts(n);
            for ell in 1..=n {
                let (alpha, _) = tail_bounds(n, ell);
                let upper: BigUint = f[ell..].iter().sum();
                assert!(upper <= alpha, "alpha n={n} ell={ell}");
            }
        }
    }

    #[test]
    fn beta_halves_on_valid_range() {
        for n in 2..=20usize {
            let logn = n.ilog2() as usize;
            for ell in 2..logn {
                let (_, lo) = tail_bounds(n, ell - 1);
                let (_, hi) = tail_bounds(n, ell);
                let two = Ratio::from_integer(BigUint::from(2u32));
                assert!(lo * two <= hi, "beta halving n={n} ell={ell}");
            }
        }
    }

    #[test]
    fn beta_prefix_sum_inequality_fails() {
        // The tempting strengthening Σ_{i=1..ℓ} f(i) ≤ β(ℓ) for
        // ℓ ≤ log2(n) − 1 is false: at n=16, ℓ=3 the left side is 39647
        // against β(3) ≈ 26551. Pinned here so the discrepancy stays
        // visible instead of silently patched.
        let f = max_run_counts(16);
        let lower: BigUint = f[1..=3].iter().sum();
        assert_eq!(lower, BigUint::from(39647u32));
        let (_, beta) = tail_bounds(16, 3);
        assert!(Ratio::from_integer(lower) > beta);
    }

    #[test]
    fn expected_matches_exhaustive_mean() {
        for n in 2..=12usize {
            let mut total = 0u64;
            for v in 0u64..(1 << n) {
                let hidden = BitString::from_u64(v, n);
                let mut o = Oracle::new(hidden.clone());
                assert_eq!(reconstruct_average(&mut o), hidden);
                total += o.total_queries();
            }
            let empirical = Ratio::new(BigUint::from(total), BigUint::one() << n);
            assert_eq!(empirical, expected_queries(n), "n={n}");
        }
    }

    #[test]
    fn seed_cost_edges() {
        assert_eq!(measured_seed_cost(16, 0), 4);
        assert_eq!(closed_form_seed_cost(16, 0), 5);
        for d in 1..=16usize {
            assert_eq!(measured_seed_cost(16, d), closed_form_seed_cost(16, d));
        }
        assert_eq!(measured_seed_cost(16, 16), 14);
    }

    #[test]
    fn expect_report_shape() {
        let rep = expect_report(8);
        assert_eq!(rep.rows.len(), 9);
        assert_eq!(rep.mean_bound, 14);
        assert!(rep.exact_mean.approx <= 14.0);
        let total: BigUint = rep.rows.iter().map(|r| r.count.parse::<BigUint>().unwrap()).sum();
        assert_eq!(total, BigUint::from(256u32));
        let js = serde_json::to_string(&rep).unwrap();
        assert!(js.contains("\"seed_measured\""));
    }
}
