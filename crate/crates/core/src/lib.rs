//! # ddcap
//!
//! Capacity bounds for the one-bit deletion/duplication channel and the
//! segmented deletion/duplication channel.
//!
//! A block of `ℓ` bits loses one uniformly chosen bit with probability `p`,
//! has one uniformly chosen bit duplicated with probability `q`, and passes
//! unchanged otherwise. The segmented channel applies this independently to
//! consecutive blocks.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`seq`] | binary words, run-length descriptions, run-count combinatorics |
//! | [`channel`] | transition law, Markov inputs, exact output laws and mutual information, sampler |
//! | [`bounds`] | closed-form lower bounds `L^α_SI`, `L^0.5_SI`, `L^α`, upper bound `U`, α optimization |
//! | [`capacity`] | Blahut–Arimoto on the sparse law, extremal distributions, relative-gap sweeps |
//! | [`asymptotics`] | large-block expansions, the constants `K`, `K₁`, `K₂`, Bernoulli transforms |
//! | [`figures`] | figure and sweep row generation shared with the command-line tool |
//!
//! All logarithms are base 2 and entropies are in bits.
//!
//! ```
//! use ddcap::{bounds, channel::ChannelParams};
//!
//! let params = ChannelParams::new(8, 0.3, 0.1).unwrap();
//! let lower = bounds::lower_bound_uniform(&params).unwrap();
//! let upper = bounds::upper_bound_u(&params).unwrap();
//! assert!(lower <= upper);
//! ```

pub mod asymptotics;
pub mod bounds;
pub mod capacity;
pub mod channel;
pub mod error;
pub mod figures;
pub mod info;
pub mod seq;

pub use channel::{ChannelParams, Distribution, MarkovInput};
pub use error::{Error, Result};
pub use seq::{BinaryWord, RunLengths};
