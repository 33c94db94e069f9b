//! Verification toolkit for the second Hardy-Littlewood conjecture
//! pi(m+n) <= pi(m) + pi(n): exact prime counting, the Segal-criterion
//! scanner, explicit pi(x) bounds with empirical audits, region threshold
//! formulas, and the rho*(m) window statistic.

pub mod bounds;
pub mod dd;
pub mod error;
pub mod regions;
pub mod rho_star;
pub mod segal;
pub mod sieve;

pub use dd::Dd;
pub use error::{Error, Result};
pub use sieve::{PrimeTable, SieveConfig};
