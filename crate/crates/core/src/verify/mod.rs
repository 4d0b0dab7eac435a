//! Finite-temperature numerics that test the limit objects of the
//! hierarchy: Metropolis rates, exit laws, resolvent equations and Monte
//! Carlo surrogates.

pub mod exit;
pub mod random;
pub mod rates;
pub mod report;
pub mod resolvent;
pub mod simulate;

pub use exit::{exit_distribution_exact, exit_distribution_limit, ExitDistribution};
pub use random::random_landscape;
pub use rates::{rate_system, BetaParams, RateSystem};
pub use report::{CheckReport, VerificationReport};
pub use resolvent::{macroscopic_resolvent, microscopic_resolvent, resolvent_deviation, resolvent_deviations};
pub use simulate::{first_hit, next_valley, occupation_outside, simulate, Stop, StopReason, Trajectory};
