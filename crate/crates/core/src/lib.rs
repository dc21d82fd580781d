//! Exact transition probabilities and moments for time-inhomogeneous linear
//! birth-death processes with immigration proportional to the birth rate,
//! together with the operator algebra that makes them solvable and two
//! independent numerical oracles.

pub mod analytic;
pub mod boson;
pub mod distributions;
pub mod error;
pub mod ode;
pub mod oracles;
pub mod quadrature;
pub mod rates;
pub mod wei_norman;

pub use analytic::{compute_gauge, constant_rate_gauge, riccati_residual, GaugeState};
pub use distributions::{log_transition_prob, mean_from_one, moment_numeric, transition_pmf, MomentResult, TransitionPmf};
pub use error::{Error, Result};
pub use rates::{ProcessSpec, RateFamily};
