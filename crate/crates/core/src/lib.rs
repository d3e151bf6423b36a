//! Wireless networked control with variable-length packets.
//!
//! A controller closes a feedback loop over an erasure channel whose packet
//! error probability `g(l)` falls with the packet length `l`, trading delay
//! against reliability. This crate models the loop end to end:
//!
//! - [`lti`]: the plant `(A, B, K, R, Q)` and the open-loop cost kernel
//!   `Tr(Q H(d))` as a function of the age of information `d`;
//! - [`channel`]: the error-probability model `g(l)`;
//! - [`smdp`]: the AoI-indexed decision process over packet lengths, its
//!   unit-step transformation, relative value iteration, and exact policy
//!   evaluation;
//! - [`stability`]: closed-form stabilizability verdicts from the products
//!   `g(l) rho^{2l}(A)`;
//! - [`oracle`]: analytic average cost of fixed-length policies on scalar
//!   plants, used as ground truth for the solver and the simulator;
//! - [`sim`]: a seeded Monte Carlo simulator of the closed loop.
//!
//! All numerics are generic over the scalar type via [`num::Real`]; the
//! aliases below pin `f64`, which is what the CLI uses.

pub mod channel;
pub mod error;
pub mod lti;
pub mod num;
pub mod oracle;
pub mod sim;
pub mod smdp;
pub mod stability;

pub use error::{Error, Result};

/// `f64` matrix.
pub type Matrix64 = lti::Matrix<f64>;
/// `f64` plant model.
pub type SystemModel64 = lti::SystemModel<f64>;
/// `f64` channel model.
pub type ChannelModel64 = channel::ChannelModel<f64>;
/// `f64` decision-process description.
pub type SmdpSpec64 = smdp::SmdpSpec<f64>;
/// `f64` policy.
pub type Policy64 = smdp::Policy<f64>;
/// `f64` simulator configuration.
pub type SimConfig64 = sim::SimConfig<f64>;
/// `f64` simulation report.
pub type SimReport64 = sim::SimReport<f64>;
