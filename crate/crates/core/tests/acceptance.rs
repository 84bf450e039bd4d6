//! Acceptance suite: one test per stated criterion, each printing a single
//! PASS line (run with `--nocapture` to see them; a failed assertion prints
//! the offending numbers). The hours-scale exact DP at n = 10,000 is behind
//! `#[ignore]`; run it explicitly with `cargo test -- --ignored`.

use hiring_core::analysis;
use hiring_core::distributions::Distribution;
use hiring_core::dp;
use hiring_core::engine::run_episode;
use hiring_core::markov::{self, ChainSpec, Family};
use hiring_core::policies::{two_concurrent, PolicySpec};
use hiring_core::rng::RngStream;
use hiring_core::run_batch;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn criterion_01_offline_optimum_uniform() {
    let d = Distribution::uniform01();
    let spec = PolicySpec::Alg1;
    let factory = spec.factory(Some(100), &d).unwrap();
    let report = run_batch(|| factory.make(), &d, 100, 100_000, 1, false).unwrap();
    let exact = analysis::opt_uniform(100); // H_101 - 1 = 4.19727850774
    let sigma = report.stderr_opt.unwrap();
    assert!(
        (report.mean_opt - exact).abs() <= 3.0 * sigma,
        "mean_opt {} vs exact {} (sigma {})",
        report.mean_opt,
        exact,
        sigma
    );
    println!(
        "PASS criterion 1: uniform offline optimum {:.5} within 3 sigma of {:.5}",
        report.mean_opt, exact
    );
}

#[test]
fn criterion_02_offline_optimum_exponential() {
    let d = Distribution::exponential(1.0).unwrap();
    let spec = PolicySpec::Alg3;
    let factory = spec.factory(Some(50), &d).unwrap();
    let report = run_batch(|| factory.make(), &d, 50, 100_000, 2, false).unwrap();
    let exact = analysis::harmonic(50); // the survival powers integrate to H_n
    assert!((exact - 4.499_205_338_3).abs() < 1e-9);
    let sigma = report.stderr_opt.unwrap();
    assert!(
        (report.mean_opt - exact).abs() <= 3.0 * sigma,
        "mean_opt {} vs exact {} (sigma {})",
        report.mean_opt,
        exact,
        sigma
    );
    println!(
        "PASS criterion 2: exponential offline optimum {:.5} within 3 sigma of H_50 = {:.5}",
        report.mean_opt, exact
    );
}

fn ratio_bound_check(spec: PolicySpec, d: &Distribution, ns: &[u64], reps: u64, bound: f64) {
    for &n in ns {
        let factory = spec.factory(Some(n), d).unwrap();
        let report = run_batch(|| factory.make(), d, n, reps, 5 + n, false).unwrap();
        let slack = 3.0 * report.stderr_ratio.unwrap();
        assert!(
            report.ratio_of_means <= bound + slack,
            "{} on {} at n={}: ratio {} > {} + {}",
            spec.name(),
            d.label(),
            n,
            report.ratio_of_means,
            bound,
            slack
        );
    }
}

#[test]
fn criterion_03_doubling_policy_ratio() {
    let d = Distribution::uniform01();
    ratio_bound_check(PolicySpec::Alg1, &d, &[256, 1024, 4096], 10_000, 8.122);
    println!("PASS criterion 3: doubling policy ratio <= 8.122 (3 sigma) at n in {{256,1024,4096}}");
}

#[test]
fn criterion_04_halving_policy_ratio() {
    let d = Distribution::uniform01();
    let spec = PolicySpec::Alg2 { c: 0.75 };
    ratio_bound_check(spec, &d, &[256, 1024, 4096], 10_000, 2.965);
    // Analytic sweep over every horizon up to 1e6.
    let sweep = analysis::verify_ratio_constants()
        .into_iter()
        .find(|r| r.name == "halving_ratio_sweep")
        .unwrap();
    assert!(sweep.satisfied, "sweep max {} at n={:?}", sweep.value, sweep.n);
    println!(
        "PASS criterion 4: halving policy ratio <= 2.965 (3 sigma); analytic sweep max {:.4} <= 2.965",
        sweep.value
    );
}

#[test]
fn criterion_05_known_law_policy_ratio() {
    for d in [
        Distribution::exponential(1.0).unwrap(),
        Distribution::pareto(3.0, 1.0).unwrap(),
    ] {
        ratio_bound_check(PolicySpec::Alg3, &d, &[256, 4096], 10_000, 6.052);
    }
    println!("PASS criterion 5: known-law policy ratio <= 6.052 (3 sigma) on exp(1) and pareto(3,1)");
}

#[test]
fn criterion_06_sampling_policy_ratio() {
    for d in [Distribution::uniform01(), Distribution::exponential(1.0).unwrap()] {
        ratio_bound_check(PolicySpec::Alg4 { lambda: 3 }, &d, &[4096], 10_000, 48.0);
    }
    println!("PASS criterion 6: sampling policy (lambda=3) ratio <= 48 (3 sigma) at n=4096");
}

#[test]
fn criterion_07_dp_exact_values() {
    let table = dp::compute_table(2, dp::default_denominator_bound(), false).unwrap();
    assert_eq!(table.first_column()[0], rational(1, 2));
    assert_eq!(table.first_column()[1], rational(7, 8));
    let exact_ratio = rational(7, 8) / (analysis::harmonic_exact(3) - BigRational::one());
    assert_eq!(exact_ratio, rational(21, 20));
    assert!((dp::lower_bound_ratio(&table) - 1.05).abs() < 1e-12);

    for n in 1..=5u64 {
        let exact = dp::compute_table(n, dp::default_denominator_bound(), false)
            .unwrap()
            .value()
            .to_f64()
            .unwrap();
        let oracle = dp::grid_oracle(n, 4000);
        assert!((exact - oracle).abs() < 1e-4, "n={n}: exact {exact} vs oracle {oracle}");
    }

    // Standard tier: the lower-bound ratio never decreases up to n = 500.
    let table = dp::compute_table(500, dp::default_denominator_bound(), false).unwrap();
    let mut prev = 0.0;
    for i in 1..=500 {
        let r = dp::ratio_at(&table, i);
        assert!(r >= prev - 1e-12, "ratio dips at n={i}: {r} < {prev}");
        prev = r;
    }
    println!(
        "PASS criterion 7: DP exact values (C(1,0)=1/2, C(2,0)=7/8, ratio(2)=21/20), grid oracle \
         within 1e-4 for n<=5, ratio monotone to n=500 (value {:.4})",
        prev
    );
}

/// Hours-scale: the exact DP at n = 10,000 certifies the 2.14 lower bound.
#[test]
#[ignore]
fn criterion_07_full_tier_dp_lower_bound() {
    let table = dp::compute_table(10_000, dp::default_denominator_bound(), false).unwrap();
    let ratio = dp::lower_bound_ratio(&table);
    assert!(ratio >= 2.14, "ratio {ratio}");
    println!("PASS criterion 7 (full tier): DP ratio at n=10,000 is {ratio:.4} >= 2.14");
}

#[test]
fn criterion_08_single_stopping_curve() {
    let at_target = analysis::gilbert_mosteller_lower_curve(10_000);
    assert!(at_target < 1.8, "curve at 1e4 is {at_target}");
    let mut prev = 0.0;
    let mut n = 24u64;
    while n <= 10_000 {
        let v = analysis::gilbert_mosteller_lower_curve(n);
        assert!(v >= prev - 1e-12, "curve dips at n={n}");
        prev = v;
        n = (n as f64 * 1.25) as u64;
    }
    println!(
        "PASS criterion 8: single-stopping lower-bound curve nondecreasing, {:.4} < 1.8 at n=1e4",
        at_target
    );
}

#[test]
fn criterion_09_markov_closed_forms() {
    // Exact-rational residuals of the visit-count recurrence (stronger than
    // the 1e-20 relative target: identically zero).
    for (pn, pd) in [(3i64, 4i64), (2, 3), (9, 10)] {
        for k in 2..=10usize {
            let p = rational(pn, pd);
            let one = BigRational::one();
            let beta = &one / &p - &one;
            let denom = rational(2, 1) * &p - &one;
            let mut v = vec![BigRational::zero(); k + 1];
            v[k] = one.clone();
            for j in 1..k {
                let mut beta_pow = BigRational::one();
                for _ in 0..(k - j) {
                    beta_pow *= &beta;
                }
                v[j] = (&beta - beta_pow) / &denom + &one / &p;
            }
            v[0] = &one + (&one - &p) * &v[1];
            assert_eq!(v[k], &p * &v[k - 1]);
            for j in 2..k.saturating_sub(1) {
                assert_eq!(v[j], (&one - &p) * &v[j + 1] + &p * &v[j - 1]);
            }
        }
    }

    // Monte Carlo agreement at 1e6 replications.
    let stats = markov::simulate_chain(ChainSpec::new(Family::MHat, 0.75, 3).unwrap(), 1_000_000, 9)
        .unwrap();
    let visits = markov::mhat_visits(0.75, 3).unwrap();
    assert!((visits[0] - 13.0 / 9.0).abs() < 1e-12);
    for (j, (emp, expect)) in stats.visits.iter().zip(&visits).enumerate() {
        assert!(emp.sigmas_from(*expect) < 4.0, "state {j}: {} vs {}", emp.mean, expect);
    }
    let hitting = markov::mhat_hitting_time(0.75, 3, 0).unwrap();
    assert!(stats.total_transitions.sigmas_from(hitting) < 4.0);

    let stats = markov::simulate_chain(ChainSpec::new(Family::NHat, 0.5, 6).unwrap(), 1_000_000, 10)
        .unwrap();
    let (h, _, _) = markov::nhat_ab_transitions(0.5, 6).unwrap();
    assert!((h - (6.0 + (2.0f64 / 3.0).powi(6))).abs() < 1e-12);
    let ab = stats.ab_transitions.unwrap();
    assert!(ab.sigmas_from(h) < 4.0, "{} vs {}", ab.mean, h);
    println!(
        "PASS criterion 9: Markov recurrence residuals exactly zero; 1e6-rep simulations within \
         4 sigma of v_0=13/9 and h=6+(2/3)^6"
    );
}

#[test]
fn criterion_10_sequential_employment() {
    let d = Distribution::uniform01();
    let (costs, _) = analysis::sequential_expected_cost(&d, 1_000_000).unwrap();
    assert!((costs[0] - 0.5).abs() < 1e-15);
    for (idx, e) in costs.iter().enumerate() {
        let n = (idx + 1) as f64;
        assert!(
            (n + 1.0).sqrt() - 1.0 - 1e-9 <= *e && *e <= n.sqrt() + 1e-9,
            "sandwich fails at n={n}: {e}"
        );
    }

    for &n in &[10u64, 100, 1000] {
        let factory = PolicySpec::Alg5.factory(Some(n), &d).unwrap();
        let report = run_batch(|| factory.make(), &d, n, 100_000, 20 + n, false).unwrap();
        let expect = costs[n as usize - 1];
        let sigma = report.stderr_cost.unwrap();
        assert!(
            (report.mean_cost - expect).abs() <= 3.0 * sigma,
            "n={n}: {} vs {}",
            report.mean_cost,
            expect
        );
    }

    // Exhaustive small-n oracle on a 200-point midpoint grid: the optimal
    // policy's value function and the threshold policy's value agree with
    // the recursion within the discretization error.
    let m = 200usize;
    let grid: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
    let (exact, taus) = analysis::sequential_expected_cost(&d, 4).unwrap();
    let mut optimal = vec![0.0f64; 5]; // optimal[m] = value with m steps left
    let mut threshold = vec![0.0f64; 5];
    for steps in 1..=4usize {
        optimal[steps] = grid
            .iter()
            .map(|&x| (x * steps as f64).min(x + optimal[steps - 1]))
            .sum::<f64>()
            / m as f64;
        threshold[steps] = grid
            .iter()
            .map(|&x| {
                // taus[j] holds tau_{j+1}; with `steps` draws left the rule
                // compares against tau_{steps-1}.
                let stop = if steps == 1 { true } else { x < taus[steps - 2] };
                if stop {
                    x * steps as f64
                } else {
                    x + threshold[steps - 1]
                }
            })
            .sum::<f64>()
            / m as f64;
    }
    for n in 1..=4usize {
        assert!((optimal[n] - exact[n - 1]).abs() < 1e-2, "optimal n={n}");
        assert!((threshold[n] - exact[n - 1]).abs() < 1e-2, "threshold n={n}");
    }
    println!(
        "PASS criterion 10: E_1=1/2, sandwich holds to n=1e6, Monte Carlo within 3 sigma, \
         small-n grid oracle within 1e-2"
    );
}

#[test]
fn criterion_11_two_concurrent_wrapper() {
    let d = Distribution::uniform01();
    for spec in [
        PolicySpec::Alg1,
        PolicySpec::Alg2 { c: 0.75 },
        PolicySpec::Alg3,
        PolicySpec::Alg4 { lambda: 3 },
    ] {
        // 1000 fuzz episodes with varying horizons: never more than two
        // simultaneously active contracts.
        for rep in 0..1000u64 {
            let n = 1 + (rep * 37) % 512;
            let mut rng = RngStream::new(31, rep);
            let mut policy = two_concurrent(spec.build(Some(n), &d).unwrap());
            let out = run_episode(policy.as_mut(), &d, n, &mut rng, false).unwrap();
            assert!(
                out.max_concurrency <= 2,
                "{} n={n} rep={rep}: concurrency {}",
                spec.name(),
                out.max_concurrency
            );
        }

        // Wrapped cost at most twice the base cost, within Monte Carlo noise.
        let n = 256;
        let factory = spec.factory(Some(n), &d).unwrap();
        let base = run_batch(|| factory.make(), &d, n, 4000, 77, false).unwrap();
        let wrapped =
            run_batch(|| two_concurrent(factory.make()), &d, n, 4000, 77, false).unwrap();
        let ratio = wrapped.mean_cost / base.mean_cost;
        let rel = (wrapped.stderr_cost.unwrap() / wrapped.mean_cost).hypot(
            base.stderr_cost.unwrap() / base.mean_cost,
        );
        assert!(
            ratio <= 2.0 + 3.0 * ratio * rel,
            "{}: wrapped/base {} exceeds 2",
            spec.name(),
            ratio
        );
    }
    println!("PASS criterion 11: wrapper keeps concurrency <= 2 and at most doubles cost (3 sigma)");
}

#[test]
fn criterion_12_ratio_constants() {
    let reports = analysis::verify_ratio_constants();
    assert_eq!(reports.len(), 5);
    for r in &reports {
        assert!(r.satisfied, "{}: {} vs {}", r.name, r.value, r.bound);
    }
    println!("PASS criterion 12: all five ratio-constant chains satisfied");
}

#[test]
fn criterion_13_coverage_fuzz_matrix() {
    let unit_laws = [Distribution::uniform01()];
    let all_laws = [
        Distribution::uniform01(),
        Distribution::exponential(1.0).unwrap(),
        Distribution::exponential(0.2).unwrap(),
        Distribution::pareto(3.0, 1.0).unwrap(),
        Distribution::pareto(1.5, 2.0).unwrap(),
        Distribution::empirical(vec![0.05, 0.2, 0.2, 0.7, 0.93]).unwrap(),
    ];
    let specs = [
        PolicySpec::Alg1,
        PolicySpec::Alg2 { c: 0.75 },
        PolicySpec::Alg2 { c: 0.5 },
        PolicySpec::Alg3,
        PolicySpec::Alg4 { lambda: 3 },
        PolicySpec::Alg4 { lambda: 2 },
        PolicySpec::Alg5,
    ];
    let mut episodes = 0u64;
    for spec in &specs {
        let laws: &[Distribution] =
            if spec.requires_unit_support() { &unit_laws } else { &all_laws };
        for d in laws {
            for rep in 0..1000u64 {
                let n = 1 + (rep * 97 + 13) % 512;
                let mut rng = RngStream::new(1000 + rep, rep);
                let mut policy = spec.build(Some(n), d).unwrap();
                run_episode(policy.as_mut(), d, n, &mut rng, false)
                    .unwrap_or_else(|e| panic!("{} on {} n={n}: {e}", spec.name(), d.label()));
                episodes += 1;
            }
        }
    }
    // Table policy: full tables for a fixed horizon set (table construction
    // dominates above; coverage logic is horizon-uniform).
    for &n in &[1u64, 2, 3, 5, 8, 16, 37, 64] {
        let d = Distribution::uniform01();
        let factory = PolicySpec::Dp.factory(Some(n), &d).unwrap();
        for law in &all_laws {
            for rep in 0..125u64 {
                let mut rng = RngStream::new(2000 + rep, rep);
                let mut policy = factory.make();
                run_episode(policy.as_mut(), law, n, &mut rng, false)
                    .unwrap_or_else(|e| panic!("dp on {} n={n}: {e}", law.label()));
                episodes += 1;
            }
        }
    }
    println!("PASS criterion 13: zero coverage violations across {episodes} fuzz episodes");
}
