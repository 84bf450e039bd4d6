//! Discrete-time simulation core: runs a policy against a sampled cost
//! sequence, enforces the covering constraint, and computes the paired
//! clairvoyant optimum on the same sequence.

use rayon::prelude::*;

use crate::distributions::Distribution;
use crate::policies::Policy;
use crate::rng::RngStream;
use crate::{Error, Result};

/// A hire event: the applicant arriving at `start` is employed for `duration`
/// steps, covering `start ..= start + duration - 1`. The booked cost is
/// `unit_cost * duration` — the full contracted duration counts even where it
/// extends past the horizon (policies that want horizon-exact billing shorten
/// the contract themselves).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contract {
    pub start: u64,
    pub duration: u64,
    pub unit_cost: f64,
}

impl Contract {
    pub fn end(&self) -> u64 {
        self.start + self.duration - 1
    }

    pub fn booked_cost(&self) -> f64 {
        self.unit_cost * self.duration as f64
    }
}

/// Everything observed in one episode.
#[derive(Clone, Debug)]
pub struct EpisodeOutcome {
    pub alg_cost: f64,
    pub opt_cost: f64,
    pub hires: u64,
    pub max_concurrency: u64,
    pub contracts: Vec<Contract>,
    /// Step at which the policy signalled stop, if it did.
    pub stopped_at: Option<u64>,
}

/// Aggregated statistics over a batch of replications.
#[derive(Clone, Debug)]
pub struct SimulationReport {
    pub replications: u64,
    pub mean_cost: f64,
    /// Undefined (None) for a single replication.
    pub stderr_cost: Option<f64>,
    pub mean_opt: f64,
    pub stderr_opt: Option<f64>,
    pub ratio_of_means: f64,
    /// Standard error of the paired per-episode cost difference scaled by the
    /// optimum mean; a conservative spread measure for the ratio estimate.
    pub stderr_ratio: Option<f64>,
    pub max_concurrency: u64,
    pub mean_hires: f64,
    pub seed: u64,
}

/// Run one episode of `n` steps. Costs are drawn i.i.d. from `d`; at each step
/// the policy returns an employment duration (0 = pass). After every decision
/// the engine checks that the current step is covered, and when the policy
/// signals stop it checks that the active contract reaches the horizon; the
/// remaining steps are then attributed to that final contract.
///
/// The paired optimum re-hires the cheapest applicant seen so far for one step
/// each, so `opt_cost` is the running-minimum sum over the same sequence.
///
/// When `truncate_at_n` is set, booked costs count only the portion of each
/// contract that lies inside the horizon (a sensitivity knob; default billing
/// charges full durations).
pub fn run_episode(
    policy: &mut dyn Policy,
    d: &Distribution,
    n: u64,
    rng: &mut RngStream,
    truncate_at_n: bool,
) -> Result<EpisodeOutcome> {
    assert!(n >= 1, "horizon must be at least 1");
    let (seed, stream) = (rng.seed(), rng.stream());

    let mut contracts: Vec<Contract> = Vec::new();
    let mut frontier: u64 = 0; // largest covered step so far
    let mut alg_cost = 0.0;
    let mut opt_cost = 0.0;
    let mut running_min = f64::INFINITY;
    let mut stopped_at = None;

    for i in 1..=n {
        let x = d.sample(rng);
        running_min = running_min.min(x);
        opt_cost += running_min;

        let decision = policy.decide(i, frontier, x);
        if decision.duration > 0 {
            let contract = Contract { start: i, duration: decision.duration, unit_cost: x };
            frontier = frontier.max(contract.end());
            let billed = if truncate_at_n {
                decision.duration.min(n - i + 1)
            } else {
                decision.duration
            };
            alg_cost += x * billed as f64;
            contracts.push(contract);
        }
        if frontier < i {
            return Err(Error::CoverageViolation { step: i, seed, stream });
        }
        if decision.stop {
            if frontier < n {
                return Err(Error::CoverageViolation { step: n, seed, stream });
            }
            stopped_at = Some(i);
            // Remaining steps are covered by the final contract; the optimum
            // still sees the rest of the sequence.
            for _ in i + 1..=n {
                let y = d.sample(rng);
                running_min = running_min.min(y);
                opt_cost += running_min;
            }
            break;
        }
    }

    Ok(EpisodeOutcome {
        alg_cost,
        opt_cost,
        hires: contracts.len() as u64,
        max_concurrency: max_concurrency(&contracts),
        contracts,
        stopped_at,
    })
}

/// Maximum number of simultaneously active contracts over the timeline.
pub fn max_concurrency(contracts: &[Contract]) -> u64 {
    // Sweep over start/end events; contract counts are tiny, so sorting the
    // event list is plenty.
    let mut events: Vec<(u64, i64)> = Vec::with_capacity(contracts.len() * 2);
    for c in contracts {
        events.push((c.start, 1));
        events.push((c.end() + 1, -1));
    }
    events.sort_unstable();
    let mut active = 0i64;
    let mut best = 0i64;
    for (_, delta) in events {
        active += delta;
        best = best.max(active);
    }
    best.max(0) as u64
}

/// Run `reps` independent episodes on streams `(seed, 0..reps)`, in parallel,
/// and aggregate. Alg and optimum are computed on the same sequence per
/// episode (paired estimation), which makes the ratio estimate far tighter
/// than independent sampling would.
pub fn run_batch<F>(
    make_policy: F,
    d: &Distribution,
    n: u64,
    reps: u64,
    seed: u64,
    truncate_at_n: bool,
) -> Result<SimulationReport>
where
    F: Fn() -> Box<dyn Policy> + Sync,
{
    assert!(reps >= 1, "need at least one replication");

    let episodes: Vec<(f64, f64, u64, u64)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut policy = make_policy();
            let mut rng = RngStream::new(seed, rep);
            let out = run_episode(policy.as_mut(), d, n, &mut rng, truncate_at_n)?;
            Ok((out.alg_cost, out.opt_cost, out.hires, out.max_concurrency))
        })
        .collect::<Result<_>>()?;

    let m = reps as f64;
    let mean_cost = episodes.iter().map(|e| e.0).sum::<f64>() / m;
    let mean_opt = episodes.iter().map(|e| e.1).sum::<f64>() / m;
    let mean_hires = episodes.iter().map(|e| e.2 as f64).sum::<f64>() / m;
    let max_concurrency = episodes.iter().map(|e| e.3).max().unwrap_or(0);

    let (stderr_cost, stderr_opt, stderr_ratio) = if reps >= 2 {
        let var = |f: &dyn Fn(&(f64, f64, u64, u64)) -> f64, mean: f64| {
            episodes.iter().map(|e| (f(e) - mean).powi(2)).sum::<f64>() / (m - 1.0)
        };
        let var_cost = var(&|e| e.0, mean_cost);
        let var_opt = var(&|e| e.1, mean_opt);
        let mean_diff = mean_cost - mean_opt;
        let var_diff = var(&|e| e.0 - e.1, mean_diff);
        (
            Some((var_cost / m).sqrt()),
            Some((var_opt / m).sqrt()),
            Some((var_diff / m).sqrt() / mean_opt),
        )
    } else {
        (None, None, None)
    };

    Ok(SimulationReport {
        replications: reps,
        mean_cost,
        stderr_cost,
        mean_opt,
        stderr_opt,
        ratio_of_means: mean_cost / mean_opt,
        stderr_ratio,
        max_concurrency,
        mean_hires,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::{Decision, Policy, PolicySpec};

    /// Replays a fixed duration script; for oracle sequences in tests.
    struct Scripted {
        durations: Vec<u64>,
        at: usize,
    }

    impl Policy for Scripted {
        fn decide(&mut self, _i: u64, _frontier: u64, _x: f64) -> Decision {
            let d = self.durations[self.at];
            self.at += 1;
            Decision { duration: d, stop: false }
        }
    }

    /// Distribution that makes `sample` deterministic by seeding an empirical
    /// law whose atoms we can predict is awkward; instead drive run_episode
    /// through a uniform law and only test sequence-independent facts, and use
    /// the opt accumulator directly for the fixed-sequence oracle.
    #[test]
    fn running_minimum_oracle() {
        let xs = [0.9, 0.3, 0.5];
        let mut running = f64::INFINITY;
        let mut opt = 0.0;
        for x in xs {
            running = running.min(x);
            opt += running;
        }
        assert!((opt - 1.5).abs() < 1e-12);
    }

    #[test]
    fn scripted_coverage_violation_is_reported() {
        let d = Distribution::uniform01();
        let mut rng = RngStream::new(3, 5);
        let mut p = Scripted { durations: vec![1, 0, 1], at: 0 };
        let err = run_episode(&mut p, &d, 3, &mut rng, false).unwrap_err();
        match err {
            Error::CoverageViolation { step, seed, stream } => {
                assert_eq!((step, seed, stream), (2, 3, 5));
            }
            other => panic!("expected coverage violation, got {other:?}"),
        }
    }

    #[test]
    fn single_step_threshold_doubling_hire() {
        // Horizon 1: the doubling policy hires the first applicant for 4/tau = 4
        // steps at tau = 1, so the booked cost is 4x.
        let d = Distribution::uniform01();
        for stream in 0..32 {
            let mut rng = RngStream::new(11, stream);
            let x = d.sample(&mut RngStream::new(11, stream));
            let mut p = PolicySpec::Alg1.build(Some(1), &d).unwrap();
            let out = run_episode(p.as_mut(), &d, 1, &mut rng, false).unwrap();
            assert_eq!(out.hires, 1);
            assert!((out.alg_cost - 4.0 * x).abs() < 1e-12);
            assert_eq!(out.max_concurrency, 1);
        }
    }

    #[test]
    fn truncated_billing_stops_at_horizon() {
        let d = Distribution::uniform01();
        let mut rng = RngStream::new(11, 0);
        let x = d.sample(&mut RngStream::new(11, 0));
        let mut p = PolicySpec::Alg1.build(Some(1), &d).unwrap();
        let out = run_episode(p.as_mut(), &d, 1, &mut rng, true).unwrap();
        assert!((out.alg_cost - x).abs() < 1e-12);
    }

    #[test]
    fn batch_is_deterministic() {
        let d = Distribution::uniform01();
        let make = || PolicySpec::Alg1.build(Some(64), &d).unwrap();
        let a = run_batch(make, &d, 64, 200, 42, false).unwrap();
        let b = run_batch(make, &d, 64, 200, 42, false).unwrap();
        assert_eq!(a.mean_cost.to_bits(), b.mean_cost.to_bits());
        assert_eq!(a.mean_opt.to_bits(), b.mean_opt.to_bits());
    }

    #[test]
    fn single_replication_has_undefined_stderr() {
        let d = Distribution::uniform01();
        let make = || PolicySpec::Alg1.build(Some(16), &d).unwrap();
        let r = run_batch(make, &d, 16, 1, 0, false).unwrap();
        assert!(r.stderr_cost.is_none());
        assert!(r.stderr_opt.is_none());
    }

    #[test]
    fn max_concurrency_sweep() {
        let c = |start, duration| Contract { start, duration, unit_cost: 0.0 };
        assert_eq!(max_concurrency(&[]), 0);
        assert_eq!(max_concurrency(&[c(1, 3)]), 1);
        assert_eq!(max_concurrency(&[c(1, 3), c(3, 2), c(4, 1)]), 2);
        assert_eq!(max_concurrency(&[c(1, 5), c(2, 1), c(2, 2)]), 3);
    }
}
