//! Reverting clocks, reverting random walks and reverting branching processes.
//!
//! A reverting process takes its next step from a state chosen at random
//! from its own history. With time-homogeneous steps such a process is an
//! ordinary Markov process observed at a random operational time, the
//! *reverting clock* `T_n`, defined by `T_1 = 0` and `T_{n+1} = 1 + T_{U(n)}`.
//!
//! The crate provides:
//!
//! * [`clock`]: the uniform reverting clock (three sampling routes, exact
//!   pmf, moments, Stirling numbers, CLT diagnostics);
//! * [`walk`]: reverting random walks and their subordination to the clock;
//! * [`integral`]: the time integral `S_n` and its martingale;
//! * [`nonuniform`]: weighted reversions;
//! * [`occasional`]: reversions gated by independent Bernoulli draws;
//! * [`branching`]: the reverting Galton-Watson process;
//! * [`verify`]: brute-force enumeration oracles and goodness-of-fit tools;
//! * [`cli`]: the `revert` command-line driver.
//!
//! All indices in the public API are 1-based.

pub mod branching;
pub mod cli;
pub mod clock;
pub mod error;
pub mod integral;
pub mod law;
pub mod montecarlo;
pub mod nonuniform;
pub mod occasional;
pub mod pmf;
pub mod poly;
pub mod rng;
pub mod suite;
pub mod verify;
pub mod walk;

pub use error::{Error, Result};
pub use law::{ReversionLaw, StepLaw};
pub use pmf::Pmf;
pub use rng::RandomStream;

/// Largest `n` for which exact rational distributions are produced.
pub const EXACT_MAX_N: usize = 13;

/// Crate version embedded in CLI output.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
