#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
//! Policy-gradient algorithms for Bernoulli multi-armed bandits.
//!
//! Two learners are provided: the softmax policy gradient
//! ([`policy_gradient`]) and SAMBA, a direct stochastic gradient on the
//! probability simplex with importance-weighted rewards ([`samba`]). For each
//! one, [`ode`] integrates the mean-field ODE and checks its regret against
//! the analytic bounds, and [`experiment`] runs seeded Monte-Carlo and ODE
//! experiments end to end.

pub mod bandit;
pub mod error;
pub mod experiment;
pub mod matrix;
pub mod ode;
pub mod policy_gradient;
pub mod samba;
pub mod schedules;

pub use bandit::{BanditInstance, RegretLedger, RngStream};
pub use error::{Error, Result};
pub use policy_gradient::{Baseline, SoftmaxState};
pub use samba::SambaState;
pub use schedules::{Schedule, ScheduleKind};
