//! Exchangeable Gibbs partitions of type α.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`] : signed log-domain scalars and generalized rising factorials.
//! * [`stirling`] : partial Bell polynomials and the generalized Stirling numbers
//!   `S(n, k; α)` (central and non-central) together with generalized factorial
//!   coefficients.
//! * [`gibbs`] : Gibbs EPPFs `V(n, k) ∏ (1-α)_{n_j-1↑}`, weight providers and the
//!   single-customer predictive rule.
//! * [`crp`] : the group-sequential Chinese restaurant construction: laws of the
//!   number of new blocks `K*` and of the number `S` of customers seated at new
//!   blocks, Bayes estimators, table avoidance and deletion of classes.
//! * [`oracle`] : exhaustive enumeration used as ground truth in tests.
//! * [`verify`] : named invariant suites shared by the test-suite and the CLI.

pub mod crp;
pub mod error;
pub mod gibbs;
pub mod numerics;
pub mod oracle;
pub mod pmf;
pub mod stirling;
pub mod verify;

pub use error::{Error, Result};
pub use gibbs::{GibbsModel, PartitionState, VTable, Weights};
pub use numerics::SignedLogValue;
pub use pmf::Pmf;
pub use stirling::StirlingTable;
