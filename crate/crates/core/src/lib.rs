//! Online hiring over time: an applicant with i.i.d. cost `x_i` arrives at every
//! step `i` of a discrete horizon `1..=n`, and the decision maker must fix an
//! irrevocable employment duration on arrival so that at least one contract is
//! active at every step. The goal is to minimize the total booked cost
//! `sum t_i * x_i` relative to the clairvoyant schedule that always employs the
//! cheapest applicant seen so far.
//!
//! The crate is organized around:
//! - [`distributions`]: the cost-law abstraction (sampling, CDF, quantiles,
//!   conditional expectations, survival-power integrals),
//! - [`engine`]: the timeline simulator with coverage enforcement and paired
//!   offline-optimum accounting,
//! - [`policies`]: the online policies (threshold doubling/halving schemes for
//!   known and unknown laws, the sequential-employment rule, the table-driven
//!   optimal policy) plus the two-concurrent wrapper,
//! - [`dp`]: the exact-rational backward induction for uniform costs and the
//!   computational lower bound it yields,
//! - [`markov`]: visit/transition closed forms for the birth-death chains that
//!   bound hiring counts, with Monte Carlo cross-checks,
//! - [`analysis`]: closed-form optimum values, lower-bound curves, and the
//!   numeric verification of every competitive-ratio constant.

pub mod analysis;
pub mod distributions;
pub mod dp;
pub mod engine;
pub mod markov;
pub mod policies;
pub mod rng;

mod error;

pub use distributions::Distribution;
pub use engine::{run_batch, run_episode, SimulationReport};
pub use error::Error;
pub use policies::{Decision, Policy, PolicySpec};
pub use rng::RngStream;

pub type Result<T> = std::result::Result<T, Error>;
