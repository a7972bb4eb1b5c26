//! Rényi-entropy security measures for hashed keys over finite sources.
//!
//! The crate computes conditional Rényi entropies and the derived security
//! criteria of a joint source P_AE, their asymptotic limits (equivocation,
//! exponents, second-order rates), and checks one-shot bounds for universal₂
//! hash families by exact enumeration.
//!
//! All logarithms are natural; values are in nats unless a function says
//! otherwise.

pub mod asymptotics;
pub mod cli;
pub mod dist;
pub mod error;
pub mod hashing;
pub mod measures;
pub mod oneshot;
pub mod second_order;
pub mod spectrum;

pub use dist::{condition, load_joint, random_joint, tensor_power, CondView, JointSource, SParameter, S_EPS};
pub use error::{Error, Result};
pub use measures::Form;
