//! The online hiring policies as resumable state machines behind one trait.
//!
//! All threshold policies share the same skeleton: a geometric acceptance
//! threshold that halves on every hire and doubles when a countdown expires
//! without a hire, with hire durations sized so the current contract outlasts
//! every later threshold-relaxation phase (the geometric budget identity).
//! The variants differ in how the threshold is expressed (absolute power of
//! two for uniform costs, quantile `delta_q` for a known general law, running
//! sample minimum for an unknown law) and in the duration constants.

use std::sync::Arc;

use serde::Deserialize;

use crate::distributions::Distribution;
use crate::dp::DpTable;
use crate::{Error, Result};

/// One step's outcome: employment duration for the arriving applicant
/// (0 = pass) and whether the policy commits to coast to the horizon on its
/// current contract.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decision {
    pub duration: u64,
    pub stop: bool,
}

impl Decision {
    pub fn pass() -> Self {
        Decision { duration: 0, stop: false }
    }

    pub fn hire(duration: u64, stop: bool) -> Self {
        Decision { duration, stop }
    }
}

/// A resumable decision state machine. `frontier` is the largest step covered
/// by contracts signed so far (0 when none); most policies track their own
/// countdowns and ignore it, the table-driven policy reads its covered-ahead
/// count from it.
pub trait Policy: Send {
    fn decide(&mut self, i: u64, frontier: u64, x: f64) -> Decision;
}

/// `ceil(2^e)` saturated to u64; exponents below 0 round up to a 1-step floor.
fn pow2_ceil_sat(e: i64) -> u64 {
    if e <= 0 {
        1
    } else if e >= 63 {
        u64::MAX
    } else {
        1u64 << e
    }
}

/// `ceil((num/den) * 2^e)` in exact integer arithmetic, saturated to u64.
fn ceil_ratio_pow2(num: u64, den: u64, e: i64) -> u64 {
    debug_assert!(num > 0 && den > 0);
    let (n, d): (u128, u128) = if e >= 0 {
        if e >= 96 {
            return u64::MAX;
        }
        ((num as u128) << e, den as u128)
    } else {
        if e <= -96 {
            return 1;
        }
        (num as u128, (den as u128) << (-e))
    };
    let q = n.div_ceil(d);
    u64::try_from(q).unwrap_or(u64::MAX)
}

/// Hard cap on threshold-halving levels; only reachable on measure-zero or
/// out-of-model inputs (x = 0), where it keeps the loops finite.
const MAX_LEVEL: i64 = 1100;

// ---------------------------------------------------------------------------
// Threshold doubling scheme for uniform costs, one halving per hire,
// durations 4/tau.
// ---------------------------------------------------------------------------

pub struct Alg1 {
    /// Threshold is 2^(-j).
    j: i64,
    /// Steps left on the current countdown.
    t: i64,
    horizon: Option<u64>,
    levels_used: std::collections::BTreeSet<i64>,
}

impl Alg1 {
    pub fn new(horizon: Option<u64>) -> Self {
        Self { j: 0, t: 1, horizon, levels_used: Default::default() }
    }

    /// Number of distinct threshold values this run has compared against.
    pub fn distinct_levels(&self) -> usize {
        self.levels_used.len()
    }
}

impl Policy for Alg1 {
    fn decide(&mut self, i: u64, _frontier: u64, x: f64) -> Decision {
        self.t -= 1;
        self.levels_used.insert(self.j);
        let tau = (-self.j as f64).exp2();
        if x <= tau {
            let duration = pow2_ceil_sat(self.j + 2); // 4 / tau
            let stop = self.horizon.is_some_and(|n| i.saturating_add(duration) > n);
            self.j += 1;
            self.t = pow2_ceil_sat(self.j) as i64; // 1 / new tau
            Decision::hire(duration, stop)
        } else if self.t <= 0 {
            self.j -= 1;
            self.t = pow2_ceil_sat(self.j) as i64;
            Decision::pass()
        } else {
            Decision::pass()
        }
    }
}

// ---------------------------------------------------------------------------
// Tighter uniform-cost scheme: halve repeatedly until the threshold undercuts
// the observed cost, durations ceil(2c/tau) with countdown ceil(c/tau).
// ---------------------------------------------------------------------------

pub struct Alg2 {
    c_num: u64,
    c_den: u64,
    j: i64,
    t: i64,
    horizon: Option<u64>,
}

impl Alg2 {
    pub fn new(c: f64, horizon: Option<u64>) -> Result<Self> {
        let (c_num, c_den) = small_ratio_from_f64(c)?;
        Ok(Self { c_num, c_den, j: 0, t: 1, horizon })
    }

    fn tau(&self) -> f64 {
        (-self.j as f64).exp2()
    }
}

impl Policy for Alg2 {
    fn decide(&mut self, i: u64, _frontier: u64, x: f64) -> Decision {
        self.t -= 1;
        if x <= self.tau() {
            while x <= self.tau() && self.j < MAX_LEVEL {
                self.j += 1;
            }
            let duration = ceil_ratio_pow2(2 * self.c_num, self.c_den, self.j);
            let stop = self.horizon.is_some_and(|n| i.saturating_add(duration) > n);
            self.t = ceil_ratio_pow2(self.c_num, self.c_den, self.j) as i64;
            Decision::hire(duration, stop)
        } else if self.t <= 0 {
            self.j -= 1;
            self.t = ceil_ratio_pow2(self.c_num, self.c_den, self.j) as i64;
            Decision::pass()
        } else {
            Decision::pass()
        }
    }
}

/// Convert a policy parameter like 3/4 into an exact small fraction.
fn small_ratio_from_f64(c: f64) -> Result<(u64, u64)> {
    if !(c > 0.0 && c <= 4.0 && c.is_finite()) {
        return Err(Error::Domain(format!("parameter c must be in (0, 4], got {c}")));
    }
    // Continued-fraction walk; parameters of interest (3/4, 1, ...) terminate
    // immediately.
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut frac = c;
    for _ in 0..64 {
        let a = frac.floor();
        if !(0.0..1e9).contains(&a) {
            break;
        }
        let (p2, q2) = (a as u64 * p1 + p0, a as u64 * q1 + q0);
        if q2 > 1 << 20 {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let rem = frac - a;
        if (p1 as f64 / q1 as f64 - c).abs() < 1e-12 || rem < 1e-12 {
            break;
        }
        frac = 1.0 / rem;
    }
    if q1 == 0 || (p1 as f64 / q1 as f64 - c).abs() > 1e-9 {
        return Err(Error::Domain(format!("parameter c={c} is not a small rational")));
    }
    Ok((p1, q1))
}

// ---------------------------------------------------------------------------
// Quantile scheme for an arbitrary known law: threshold delta_q with q the
// geometric acceptance mass; durations 2/q, countdown 1/q. The final hire is
// shortened to reach exactly the horizon.
// ---------------------------------------------------------------------------

pub struct Alg3 {
    /// Acceptance mass is 2^(-j).
    j: i64,
    tau: f64,
    t: i64,
    dist: Distribution,
    horizon: Option<u64>,
}

impl Alg3 {
    pub fn new(dist: &Distribution, horizon: Option<u64>) -> Self {
        // q = 1 first: delta_1 accepts every first applicant.
        let tau = dist.quantile(1.0).expect("q=1 is always valid");
        Self { j: 0, tau, t: 1, dist: dist.clone(), horizon }
    }

    fn set_level(&mut self, j: i64) {
        self.j = j.max(0);
        // 2^-j underflows to zero past j ~ 1074 (reachable on laws with an
        // atom at the support minimum); clamp to the smallest positive mass.
        let q = (-self.j as f64).exp2().max(f64::MIN_POSITIVE);
        self.tau = self.dist.quantile(q).expect("positive q stays in (0,1]");
    }
}

impl Policy for Alg3 {
    fn decide(&mut self, i: u64, _frontier: u64, x: f64) -> Decision {
        self.t -= 1;
        if x <= self.tau {
            while x <= self.tau && self.j < MAX_LEVEL {
                self.set_level(self.j + 1);
            }
            let needed = pow2_ceil_sat(self.j + 1); // 2 / q
            if let Some(n) = self.horizon {
                if i.saturating_add(needed) > n {
                    // Hire until time n: exactly the n - i + 1 remaining steps.
                    return Decision::hire(n - i + 1, true);
                }
            }
            self.t = pow2_ceil_sat(self.j) as i64; // 1 / q
            Decision::hire(needed, false)
        } else if self.t <= 0 {
            self.set_level(self.j - 1);
            self.t = pow2_ceil_sat(self.j) as i64;
            Decision::pass()
        } else {
            Decision::pass()
        }
    }
}

// ---------------------------------------------------------------------------
// Distribution-free scheme: learn the threshold by sampling phases (running
// minimum over t_sample steps), then wait up to t_wait = lambda * t_sample
// steps for a cost below it.
// ---------------------------------------------------------------------------

pub struct Alg4 {
    lambda: u64,
    j: u64,
    tau: f64,
    t_sample: u64,
    t_wait: u64,
    horizon: Option<u64>,
}

impl Alg4 {
    pub fn new(lambda: u64, horizon: Option<u64>) -> Result<Self> {
        if lambda < 2 {
            return Err(Error::Domain(format!("lambda must exceed 1, got {lambda}")));
        }
        Ok(Self { lambda, j: 0, tau: f64::INFINITY, t_sample: 0, t_wait: 1, horizon })
    }

    fn enter_level(&mut self, j: u64) {
        self.j = j;
        self.tau = f64::INFINITY;
        if j == 0 {
            // Level-0 re-entry restores the initial state: no sampling, a
            // single always-accepting waiting step. (The literal countdown
            // arithmetic would give empty phases here and underflow the level.)
            self.t_sample = 0;
            self.t_wait = 1;
        } else {
            self.t_sample = (1u64 << j) - 1;
            self.t_wait = self.lambda * self.t_sample;
        }
    }
}

impl Policy for Alg4 {
    fn decide(&mut self, i: u64, _frontier: u64, x: f64) -> Decision {
        if self.t_sample > 0 {
            self.tau = self.tau.min(x);
            self.t_sample -= 1;
            Decision::pass()
        } else if self.t_wait > 0 {
            self.t_wait -= 1;
            if x <= self.tau {
                let duration = (1 + self.lambda) * pow2_ceil_sat(self.j as i64 + 2);
                let stop = self.horizon.is_some_and(|n| i.saturating_add(duration) > n);
                self.enter_level(self.j + 1);
                Decision::hire(duration, stop)
            } else {
                Decision::pass()
            }
        } else {
            // Waiting phase expired without a hire: drop a level. This step's
            // applicant is not inspected.
            self.enter_level(self.j.saturating_sub(1));
            Decision::pass()
        }
    }
}

// ---------------------------------------------------------------------------
// Sequential employment: exactly one active contract at a time. Hire the
// arriving applicant for all remaining time when their cost beats the
// threshold tau_m = E_m / m (m steps still ahead), else for a single step.
// ---------------------------------------------------------------------------

pub struct Alg5 {
    n: u64,
    /// thresholds[m] = tau_m for m in 1..n; thresholds[0] is the sentinel
    /// tau_1 + 1 (any constant above tau_1 gives the same behavior: the last
    /// step hires for exactly one step either way).
    thresholds: Arc<Vec<f64>>,
}

impl Alg5 {
    pub fn new(dist: &Distribution, n: u64) -> Result<Self> {
        Ok(Self { n, thresholds: Arc::new(Self::thresholds(dist, n)?) })
    }

    /// The threshold table, computed once and shareable across episodes.
    pub fn thresholds(dist: &Distribution, n: u64) -> Result<Vec<f64>> {
        let (costs, mut taus) = crate::analysis::sequential_expected_cost(dist, n.max(1))?;
        debug_assert_eq!(costs.len() as u64, n.max(1));
        // taus currently holds tau_1..tau_{n-1}; prepend the sentinel.
        let sentinel = taus.first().copied().unwrap_or(0.0) + 1.0;
        taus.insert(0, sentinel);
        Ok(taus)
    }

    pub fn from_thresholds(n: u64, thresholds: Arc<Vec<f64>>) -> Self {
        Self { n, thresholds }
    }
}

impl Policy for Alg5 {
    fn decide(&mut self, i: u64, _frontier: u64, x: f64) -> Decision {
        let m = (self.n - i) as usize;
        if x < self.thresholds[m] {
            Decision::hire(self.n - i + 1, true)
        } else {
            Decision::hire(1, false)
        }
    }
}

// ---------------------------------------------------------------------------
// Table-driven optimal policy for uniform costs.
// ---------------------------------------------------------------------------

pub struct DpPolicy {
    n: u64,
    /// costs[i][j]: expected cost-to-go with i steps remaining, j of them
    /// already covered.
    costs: Arc<Vec<Vec<f64>>>,
}

impl DpPolicy {
    pub fn new(table: &DpTable, n: u64) -> Result<Self> {
        if table.horizon() != n {
            return Err(Error::TableMismatch { table_n: table.horizon(), n });
        }
        let costs = table
            .rows_f64()
            .ok_or_else(|| Error::InvalidInput("policy table must be built with full storage".into()))?;
        Ok(Self { n, costs: Arc::new(costs) })
    }

    pub fn from_costs(n: u64, costs: Arc<Vec<Vec<f64>>>) -> Self {
        Self { n, costs }
    }
}

/// One decision of the table-driven optimal policy: with `remaining` steps
/// left (including the current one) and the next `covered` of them already
/// under contract, pick the duration minimizing cost-to-go; ties break toward
/// the smallest duration, and passing wins ties against hiring.
pub fn dp_decide(costs: &[Vec<f64>], remaining: u64, covered: u64, x: f64) -> u64 {
    let i = remaining as usize;
    let j = covered as usize;
    debug_assert!(i >= 1 && j <= i);
    if j == i {
        return 0;
    }
    let prev = &costs[i - 1];
    let hire_floor = j.max(0) + 1; // j = 0 forces a hire of at least 1
    let mut best_r = 0u64;
    let mut best = if j == 0 { f64::INFINITY } else { prev[j - 1] };
    for r in hire_floor..=i {
        let cost = r as f64 * x + prev[r - 1];
        if cost < best {
            best = cost;
            best_r = r as u64;
        }
    }
    best_r
}

impl Policy for DpPolicy {
    fn decide(&mut self, i: u64, frontier: u64, x: f64) -> Decision {
        let remaining = self.n - i + 1;
        let covered = frontier.min(self.n).saturating_sub(i - 1).min(remaining);
        let duration = dp_decide(&self.costs, remaining, covered, x);
        Decision { duration, stop: false }
    }
}

// ---------------------------------------------------------------------------
// Two-concurrent wrapper: double every hire and idle through the first half.
// ---------------------------------------------------------------------------

/// Wraps a base policy so that at most two contracts are ever active: every
/// base hire duration is doubled, and while the first (original) half of a
/// hire runs, arriving applicants are discarded without being shown to the
/// base policy — its countdowns are frozen, so the base resumes exactly where
/// it left off and its future hires land after the current original duration
/// has elapsed. Booked cost per hire is exactly twice the base policy's.
pub struct TwoConcurrent {
    base: Box<dyn Policy>,
    idle_remaining: u64,
    /// End steps of the two most recent (doubled) contracts.
    older_end: u64,
    newer_end: u64,
}

pub fn two_concurrent(base: Box<dyn Policy>) -> Box<dyn Policy> {
    Box::new(TwoConcurrent { base, idle_remaining: 0, older_end: 0, newer_end: 0 })
}

impl Policy for TwoConcurrent {
    fn decide(&mut self, i: u64, frontier: u64, x: f64) -> Decision {
        if self.idle_remaining > 0 {
            self.idle_remaining -= 1;
            return Decision::pass();
        }
        // A hire now would be a third overlapping contract if the older of
        // the last two is still running; with nondecreasing base durations
        // the half-duration idle already rules this out, but the guarantee
        // must hold for any base.
        if i <= self.older_end {
            return Decision::pass();
        }
        let inner = self.base.decide(i, frontier, x);
        if inner.duration > 0 {
            let doubled = inner.duration.saturating_mul(2);
            self.idle_remaining = inner.duration;
            self.older_end = self.newer_end;
            self.newer_end = i.saturating_add(doubled) - 1;
            Decision { duration: doubled, stop: inner.stop }
        } else {
            inner
        }
    }
}

// ---------------------------------------------------------------------------
// Policy selection / configuration
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub enum PolicySpec {
    Alg1,
    Alg2 { c: f64 },
    Alg3,
    Alg4 { lambda: u64 },
    Alg5,
    Dp,
}

impl PolicySpec {
    pub const DEFAULT_C: f64 = 0.75;
    pub const DEFAULT_LAMBDA: u64 = 3;

    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Alg1 => "alg1",
            PolicySpec::Alg2 { .. } => "alg2",
            PolicySpec::Alg3 => "alg3",
            PolicySpec::Alg4 { .. } => "alg4",
            PolicySpec::Alg5 => "alg5",
            PolicySpec::Dp => "dp",
        }
    }

    /// Parse `{"policy": "alg2", "c": 0.75}`-style configuration.
    pub fn from_config(value: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            policy: String,
            c: Option<f64>,
            lambda: Option<u64>,
        }
        let raw: Raw = serde_json::from_value(value.clone())
            .map_err(|e| Error::InvalidInput(format!("policy config: {e}")))?;
        Self::from_name(&raw.policy, raw.c, raw.lambda)
    }

    pub fn from_name(name: &str, c: Option<f64>, lambda: Option<u64>) -> Result<Self> {
        match name {
            "alg1" => Ok(PolicySpec::Alg1),
            "alg2" => Ok(PolicySpec::Alg2 { c: c.unwrap_or(Self::DEFAULT_C) }),
            "alg3" => Ok(PolicySpec::Alg3),
            "alg4" => Ok(PolicySpec::Alg4 { lambda: lambda.unwrap_or(Self::DEFAULT_LAMBDA) }),
            "alg5" => Ok(PolicySpec::Alg5),
            "dp" => Ok(PolicySpec::Dp),
            other => Err(Error::InvalidInput(format!("unknown policy {other:?}"))),
        }
    }

    /// Instantiate a fresh policy. `horizon = None` is the unknown-n mode:
    /// every stop-check that references n disappears (meaningful only under
    /// the two-concurrent wrapper; alg5 and dp are defined by the horizon and
    /// reject None).
    pub fn build(&self, horizon: Option<u64>, d: &Distribution) -> Result<Box<dyn Policy>> {
        match self {
            PolicySpec::Alg1 => Ok(Box::new(Alg1::new(horizon))),
            PolicySpec::Alg2 { c } => Ok(Box::new(Alg2::new(*c, horizon)?)),
            PolicySpec::Alg3 => Ok(Box::new(Alg3::new(d, horizon))),
            PolicySpec::Alg4 { lambda } => Ok(Box::new(Alg4::new(*lambda, horizon)?)),
            PolicySpec::Alg5 => {
                let n = horizon
                    .ok_or_else(|| Error::Domain("sequential policy needs a known horizon".into()))?;
                Ok(Box::new(Alg5::new(d, n)?))
            }
            PolicySpec::Dp => {
                let n = horizon
                    .ok_or_else(|| Error::Domain("table policy needs a known horizon".into()))?;
                let table = crate::dp::compute_table(n, crate::dp::default_denominator_bound(), true)?;
                Ok(Box::new(DpPolicy::new(&table, n)?))
            }
        }
    }

    /// Whether the policy's acceptance thresholds assume costs in [0, 1].
    pub fn requires_unit_support(&self) -> bool {
        matches!(self, PolicySpec::Alg1 | PolicySpec::Alg2 { .. })
    }

    /// Base policies the two-concurrent wrapper is defined for.
    pub fn supports_wrapper(&self) -> bool {
        matches!(
            self,
            PolicySpec::Alg1 | PolicySpec::Alg2 { .. } | PolicySpec::Alg3 | PolicySpec::Alg4 { .. }
        )
    }

    /// Validate the configuration once and precompute any shared state (the
    /// exact DP table, the sequential threshold list) so that stamping out a
    /// per-episode policy is cheap.
    pub fn factory(&self, horizon: Option<u64>, d: &Distribution) -> Result<PolicyFactory> {
        let prebuilt = match self {
            PolicySpec::Alg5 => {
                let n = horizon
                    .ok_or_else(|| Error::Domain("sequential policy needs a known horizon".into()))?;
                Prebuilt::Alg5 { n, thresholds: Arc::new(Alg5::thresholds(d, n)?) }
            }
            PolicySpec::Dp => {
                let n = horizon
                    .ok_or_else(|| Error::Domain("table policy needs a known horizon".into()))?;
                let table = crate::dp::compute_table(n, crate::dp::default_denominator_bound(), true)?;
                let policy = DpPolicy::new(&table, n)?;
                Prebuilt::Dp { n, costs: policy.costs }
            }
            _ => {
                // Surface parameter errors (bad c, bad lambda) eagerly.
                self.build(horizon, d)?;
                Prebuilt::None
            }
        };
        Ok(PolicyFactory { spec: self.clone(), horizon, dist: d.clone(), prebuilt })
    }
}

enum Prebuilt {
    None,
    Alg5 { n: u64, thresholds: Arc<Vec<f64>> },
    Dp { n: u64, costs: Arc<Vec<Vec<f64>>> },
}

/// Cheap per-episode policy construction with shared precomputed state.
pub struct PolicyFactory {
    spec: PolicySpec,
    horizon: Option<u64>,
    dist: Distribution,
    prebuilt: Prebuilt,
}

impl PolicyFactory {
    pub fn make(&self) -> Box<dyn Policy> {
        match &self.prebuilt {
            Prebuilt::Alg5 { n, thresholds } => {
                Box::new(Alg5::from_thresholds(*n, Arc::clone(thresholds)))
            }
            Prebuilt::Dp { n, costs } => Box::new(DpPolicy::from_costs(*n, Arc::clone(costs))),
            Prebuilt::None => self
                .spec
                .build(self.horizon, &self.dist)
                .expect("validated at factory construction"),
        }
    }
}
