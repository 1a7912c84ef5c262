//! Systemic risk measures on a finite scenario space.
//!
//! A position `X` assigns each of `d` institutions an outcome in each of `n`
//! scenarios. An aggregation function `Lambda` compresses the institutions into
//! one systemic outcome per scenario and an acceptance set `A` says which
//! systemic outcomes are acceptable. Two risk measures follow:
//!
//! * [`primal::rho`] allocates capital first: the least total `sum(m)` over
//!   vectors `m` with `Lambda(X + m)` acceptable.
//! * [`primal::rho_tilde`] aggregates first: the least cash `c` with
//!   `Lambda(X) + c` acceptable.
//!
//! Both come with dual representations in [`dual`], evaluated through the
//! penalty functions of [`penalty`], and with grid references in [`oracle`].
//! [`shortfall`] covers the single-institution utility-based shortfall risk.
//!
//! ```
//! use sysrisk::{AcceptanceSpec, AggregationSpec, RandomVector, ScenarioSpace, SolverOptions};
//!
//! let space = ScenarioSpace::new(vec![0.5, 0.5])?;
//! let x = RandomVector::from_rows(vec![vec![1.0, -2.0], vec![0.0, 1.0]])?;
//! let r = sysrisk::dual::dual_rho(&x, &AggregationSpec::sum(2), &AcceptanceSpec::Nonnegative, &space, &SolverOptions::default())?;
//! assert!((r.primal.value.to_f64() - 1.0).abs() < 1e-6);
//! assert!(r.gap_abs.unwrap() < 1e-6);
//! # Ok::<(), sysrisk::Error>(())
//! ```

pub mod acceptance;
pub mod aggregation;
pub mod dual;
pub mod error;
pub mod extended;
pub mod instance;
pub mod lp;
pub mod oracle;
pub mod penalty;
pub mod primal;
pub mod report;
pub mod scenario;
pub mod shortfall;
pub mod utility;

pub use acceptance::AcceptanceSpec;
pub use aggregation::AggregationSpec;
pub use dual::{DualityReport, Mode};
pub use error::{Error, Result};
pub use extended::ExtReal;
pub use instance::{load_instance, parse_instance, Instance};
pub use primal::{PrimalResult, SolverOptions};
pub use report::Report;
pub use scenario::{
    essential_inf, essential_sup, in_dual_simplex, pairing, DualVector, RandomVector, ScenarioSpace,
};
pub use shortfall::ShortfallSpec;
pub use utility::Utility;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/scenarios.md")]
mod book_scenarios {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/aggregation.md")]
mod book_aggregation {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/acceptance.md")]
mod book_acceptance {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/measures.md")]
mod book_measures {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/duality.md")]
mod book_duality {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/shortfall.md")]
mod book_shortfall {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/oracles.md")]
mod book_oracles {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
