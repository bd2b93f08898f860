//! Neural-network model reference adaptive control of a tendon-driven soft
//! wrist segment.
//!
//! The crate covers the whole offline workflow:
//!
//! 1. [`beam`]: shear-corrected cantilever model of the wrist and its static
//!    force-to-deflection gain.
//! 2. [`lti`]: reference model and plant dynamics as SISO state-space
//!    systems stepped with RK4.
//! 3. [`adaptive`]: MIT-rule MRAC run whose (error, force) samples form the
//!    training data.
//! 4. [`nn`]: feedforward network trained with Levenberg–Marquardt.
//! 5. [`closed_loop`]: the trained network closing the loop for each wrist
//!    direction.
//! 6. [`metrics`]: RMSE, settling time and steady-state error.
//!
//! [`config`] and [`pipeline`] tie the stages together for the command-line
//! front end.

pub mod adaptive;
pub mod beam;
pub mod closed_loop;
pub mod config;
pub mod lti;
pub mod metrics;
pub mod nn;
pub mod pipeline;

pub use config::Config;
