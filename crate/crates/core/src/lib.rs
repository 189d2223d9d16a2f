//! Spanning-tree entropy of the Erdős–Rényi giant component, approached
//! through Poisson Galton-Watson trees conditioned to survive.
//!
//! The crate is organised around the objects of that theory:
//!
//! * [`analytic`]: extinction probabilities, the Borel law, the root-degree
//!   law of PGW*(c) and the resulting bounds on `f(c)` and `f'(c)`.
//! * [`trees`]: an arena [`trees::RootedTree`] and samplers for PGW(c), the
//!   two-type description of PGW*(c), and uniformly rooted uniform trees.
//! * [`domination`]: exact tail checks for sums of Poisson variables and the
//!   explicit coupling in which PGW*(λ) sits inside PGW*(μ).
//! * [`walk`]: return probabilities of simple random walk, killed walks and
//!   the Monte Carlo estimator of `f(c)` built from them.
//! * [`spanning`]: G(n, p), its giant component and the Matrix-Tree
//!   log-determinant, an independent estimator of `f(c)`.
//!
//! The `book/` directory at the repository root walks through the same
//! material with runnable snippets; they are compiled as doctests of this
//! crate.

pub mod analytic;
pub mod dist;
pub mod domination;
pub mod error;
pub mod report;
pub mod rng;
pub mod spanning;
pub mod trees;
pub mod walk;

pub use analytic::{BoundsRecord, GWParams};
pub use error::{Error, Result};
pub use report::EstimateReport;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/extinction.md")]
    pub mod extinction {}
    #[doc = include_str!("../../../book/src/trees.md")]
    pub mod trees {}
    #[doc = include_str!("../../../book/src/domination.md")]
    pub mod domination {}
    #[doc = include_str!("../../../book/src/walks.md")]
    pub mod walks {}
    #[doc = include_str!("../../../book/src/spanning.md")]
    pub mod spanning {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}

/// Version string embedded in every experiment artifact.
pub const VERSION: &str = concat!("gwtree ", env!("CARGO_PKG_VERSION"));
