//! The birth-death-style Markov chains that bound hiring counts.
//!
//! `Mhat(p, k)`: states 0..=k on a line; state 0 steps to 1 with probability
//! 1, interior states step up with probability p and down with 1-p, state k
//! absorbs. A step up is a hire (threshold halves), a step down is a
//! countdown expiry (threshold doubles); the expected visit counts bound the
//! number of hires of the single-halving threshold scheme.
//!
//! `Nhat(p, k)`: paired states A_j / B_j. A_0 moves to B_0 with probability
//! 1; A_j moves to B_j with probability p and otherwise falls back to
//! A_{j-1}; B_j splits evenly between A_{j+1} and B_{j+1}; B_k absorbs.
//! A-to-B transitions count hires of the repeated-halving schemes.
//!
//! Closed forms are evaluated in f64 (verified elsewhere against the defining
//! recurrences in exact rational arithmetic); `simulate_chain` cross-checks
//! them by Monte Carlo.

use rayon::prelude::*;

use crate::rng::RngStream;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    MHat,
    NHat,
}

#[derive(Clone, Copy, Debug)]
pub struct ChainSpec {
    pub family: Family,
    pub p: f64,
    pub k: u32,
}

impl ChainSpec {
    pub fn new(family: Family, p: f64, k: u32) -> Result<Self> {
        if k < 1 {
            return Err(Error::Domain("chain needs at least one level".into()));
        }
        let floor = match family {
            Family::MHat => 0.5,
            Family::NHat => 1.0 / 3.0,
        };
        if !(p > floor && p <= 1.0) {
            return Err(Error::Domain(format!(
                "transition probability must lie in ({floor}, 1], got {p}"
            )));
        }
        Ok(Self { family, p, k })
    }
}

/// A mean together with its Monte Carlo standard error.
#[derive(Clone, Copy, Debug)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    /// |mean - reference| in units of the standard error.
    pub fn sigmas_from(&self, reference: f64) -> f64 {
        (self.mean - reference).abs() / self.stderr.max(1e-300)
    }
}

#[derive(Clone, Debug)]
pub struct ChainStats {
    pub replications: u64,
    /// Expected visits per state: states 0..=k for MHat; A_0..A_k followed by
    /// B_0..B_k for NHat.
    pub visits: Vec<Estimate>,
    /// Expected steps until absorption.
    pub total_transitions: Estimate,
    /// NHat only: expected number of A-state to B-state transitions.
    pub ab_transitions: Option<Estimate>,
    /// NHat only: expected B_j -> A_{j+1} transitions per level j in 0..k.
    pub bj_to_a: Option<Vec<Estimate>>,
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

/// Expected visit counts v_0..v_k of `Mhat(p, k)` started in state 0:
/// v_k = 1, v_j = [(1/p - 1) - (1/p - 1)^(k-j)] / (2p - 1) + 1/p for interior
/// j, and v_0 = 1 + (1-p) v_1. All are at most 1/(2p-1).
pub fn mhat_visits(p: f64, k: u32) -> Result<Vec<f64>> {
    if !(p > 0.5 && p <= 1.0) {
        return Err(Error::Domain(format!("mhat needs p in (1/2, 1], got {p}")));
    }
    let k = k as usize;
    let mut v = vec![0.0; k + 1];
    v[k] = 1.0;
    if k == 1 {
        // State 1 is absorbing: the fall-back term of the interior formula
        // does not apply.
        v[0] = 1.0;
        return Ok(v);
    }
    let beta = 1.0 / p - 1.0;
    for j in 1..k {
        v[j] = (beta - beta.powi((k - j) as i32)) / (2.0 * p - 1.0) + 1.0 / p;
    }
    v[0] = 1.0 + (1.0 - p) * v[1];
    Ok(v)
}

/// Expected total steps to absorption of `Mhat(p, k)` from state j
/// (the hitting-time closed form).
pub fn mhat_hitting_time(p: f64, k: u32, j: u32) -> Result<f64> {
    if !(p > 0.5 && p <= 1.0) {
        return Err(Error::Domain(format!("mhat needs p in (1/2, 1], got {p}")));
    }
    if j > k {
        return Err(Error::Domain("start state beyond the absorbing state".into()));
    }
    let beta = 1.0 / p - 1.0;
    let d = 2.0 * p - 1.0;
    Ok((k - j) as f64 / d - 2.0 * p * (1.0 - p) * (beta.powi(j as i32) - beta.powi(k as i32)) / (d * d))
}

/// Per-level A->B transition profile of `Nhat(p, k)`: returns
/// (h, a_0..a_k, b_0..b_k) where a_j (b_j) is the expected number of A-to-B
/// transitions when starting from A_j (B_j) and h = a_0.
pub fn nhat_ab_transitions(p: f64, k: u32) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if !(p > 1.0 / 3.0 && p <= 1.0) {
        return Err(Error::Domain(format!("nhat needs p in (1/3, 1], got {p}")));
    }
    let beta = 2.0 * (1.0 - p) / (1.0 + p);
    let d = 3.0 * p - 1.0;
    let tail = beta.powi(k as i32) * (1.0 - p) * (1.0 - p) / (d * d);
    let a: Vec<f64> = (0..=k)
        .map(|j| (k - j + 2) as f64 * p / d - beta.powi(j as i32) * 2.0 * p * (1.0 - p) / (d * d) + tail)
        .collect();
    let b: Vec<f64> = (0..=k)
        .map(|j| (k - j) as f64 * p / d - beta.powi(j as i32) * (1.0 - p) * (1.0 - p) / (d * d) + tail)
        .collect();
    Ok((a[0], a, b))
}

/// Bounds from the B-state analysis of `Nhat`: the expected number of
/// B_j -> A_{j+1} transitions is at most p/(3p-1), and the expected number of
/// visits to any B_j is at most 2p/(3p-1).
pub fn nhat_bj_transitions(p: f64) -> Result<(f64, f64)> {
    if !(p > 1.0 / 3.0 && p <= 1.0) {
        return Err(Error::Domain(format!("nhat needs p in (1/3, 1], got {p}")));
    }
    let d = 3.0 * p - 1.0;
    Ok((p / d, 2.0 * p / d))
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

const STEP_LIMIT: u64 = 1_000_000_000;

struct Accumulator {
    sums: Vec<f64>,
    sq_sums: Vec<f64>,
}

impl Accumulator {
    fn new(width: usize) -> Self {
        Self { sums: vec![0.0; width], sq_sums: vec![0.0; width] }
    }

    fn add(&mut self, counts: &[f64]) {
        for (i, c) in counts.iter().enumerate() {
            self.sums[i] += c;
            self.sq_sums[i] += c * c;
        }
    }

    fn merge(mut self, other: Accumulator) -> Accumulator {
        for i in 0..self.sums.len() {
            self.sums[i] += other.sums[i];
            self.sq_sums[i] += other.sq_sums[i];
        }
        self
    }

    fn estimates(&self, reps: u64) -> Vec<Estimate> {
        let m = reps as f64;
        self.sums
            .iter()
            .zip(&self.sq_sums)
            .map(|(s, sq)| {
                let mean = s / m;
                let var = ((sq - s * s / m) / (m - 1.0)).max(0.0);
                Estimate { mean, stderr: (var / m).sqrt() }
            })
            .collect()
    }
}

/// Monte Carlo estimate of the visit/transition statistics of a chain,
/// averaging over `reps` runs from state 0 (resp. A_0) to absorption.
pub fn simulate_chain(spec: ChainSpec, reps: u64, seed: u64) -> Result<ChainStats> {
    assert!(reps >= 1);
    let k = spec.k as usize;
    // Per-replication count layout:
    //   MHat: visits(k+1) | steps
    //   NHat: visitsA(k+1) | visitsB(k+1) | steps | ab | bj_to_a(k)
    let width = match spec.family {
        Family::MHat => k + 2,
        Family::NHat => 2 * (k + 1) + 2 + k,
    };

    let chunk = 4096u64;
    let chunks: Vec<u64> = (0..reps.div_ceil(chunk)).collect();
    let acc = chunks
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(reps);
            let mut acc = Accumulator::new(width);
            let mut counts = vec![0.0; width];
            for rep in lo..hi {
                let mut rng = RngStream::new(seed, rep);
                counts.iter_mut().for_each(|v| *v = 0.0);
                match spec.family {
                    Family::MHat => run_mhat(spec, &mut rng, &mut counts)?,
                    Family::NHat => run_nhat(spec, &mut rng, &mut counts)?,
                }
                acc.add(&counts);
            }
            Ok(acc)
        })
        .try_reduce(|| Accumulator::new(width), |a, b| Ok(a.merge(b)))?;

    let est = acc.estimates(reps);
    Ok(match spec.family {
        Family::MHat => ChainStats {
            replications: reps,
            visits: est[..=k].to_vec(),
            total_transitions: est[k + 1],
            ab_transitions: None,
            bj_to_a: None,
        },
        Family::NHat => ChainStats {
            replications: reps,
            visits: est[..2 * (k + 1)].to_vec(),
            total_transitions: est[2 * (k + 1)],
            ab_transitions: Some(est[2 * (k + 1) + 1]),
            bj_to_a: Some(est[2 * (k + 1) + 2..].to_vec()),
        },
    })
}

fn run_mhat(spec: ChainSpec, rng: &mut RngStream, counts: &mut [f64]) -> Result<()> {
    let k = spec.k as usize;
    let mut state = 0usize;
    counts[state] += 1.0;
    let mut steps = 0u64;
    while state != k {
        if steps >= STEP_LIMIT {
            return Err(Error::StepLimit(STEP_LIMIT));
        }
        steps += 1;
        state = if state == 0 || rng.uniform() < spec.p { state + 1 } else { state - 1 };
        counts[state] += 1.0;
    }
    counts[k + 1] = steps as f64;
    Ok(())
}

fn run_nhat(spec: ChainSpec, rng: &mut RngStream, counts: &mut [f64]) -> Result<()> {
    let k = spec.k as usize;
    // State encoding: A_j and B_j tracked separately.
    let mut in_b = false;
    let mut level = 0usize;
    counts[level] += 1.0;
    let mut steps = 0u64;
    let (steps_slot, ab_slot, bj_base) = (2 * (k + 1), 2 * (k + 1) + 1, 2 * (k + 1) + 2);
    loop {
        if steps >= STEP_LIMIT {
            return Err(Error::StepLimit(STEP_LIMIT));
        }
        steps += 1;
        if !in_b {
            if level == 0 || rng.uniform() < spec.p {
                in_b = true;
                counts[ab_slot] += 1.0;
            } else {
                level -= 1;
            }
        } else {
            if rng.uniform() < 0.5 {
                in_b = false;
                counts[bj_base + level] += 1.0;
            }
            level += 1;
        }
        counts[if in_b { k + 1 + level } else { level }] += 1.0;
        if in_b && level == k {
            break;
        }
    }
    counts[steps_slot] = steps as f64;
    Ok(())
}

/// The level-dependent chain the homogeneous one dominates: states 0..=k,
/// upward probability 1 - (1 - 2^-j)^(2^j) at level j (state 0 moves up with
/// probability 1), absorbing at k. Returns per-run total transitions.
pub fn simulate_inhomogeneous_total(k: u32, reps: u64, seed: u64) -> Result<Estimate> {
    assert!(reps >= 1);
    let k = k as usize;
    let down: Vec<f64> = (0..=k)
        .map(|j| {
            let tau = 0.5f64.powi(j as i32);
            (1.0 - tau).powf(1.0 / tau)
        })
        .collect();
    let totals: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = RngStream::new(seed, rep);
            let mut state = 0usize;
            let mut steps = 0u64;
            while state != k {
                if steps >= STEP_LIMIT {
                    return Err(Error::StepLimit(STEP_LIMIT));
                }
                steps += 1;
                state = if state == 0 || rng.uniform() >= down[state] { state + 1 } else { state - 1 };
            }
            Ok(steps as f64)
        })
        .collect::<Result<_>>()?;
    let m = reps as f64;
    let mean = totals.iter().sum::<f64>() / m;
    let var = totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(Estimate { mean, stderr: (var / m).sqrt() })
}
