//! Finite-model engine for partial actions of finite groups on sets and on
//! bundles of matrix algebras.
//!
//! The crate builds enveloping (globalized) actions, orbit bundles, induced
//! algebras and partial crossed products as concrete matrix algebras, and
//! checks Morita equivalence through Artin–Wedderburn block counts and an
//! explicit imprimitivity bimodule.

pub mod bundle;
pub mod crossed_product;
pub mod error;
pub mod generator;
pub mod group;
pub mod harness;
pub mod imprimitivity;
pub mod linalg;
pub mod matrix_algebra;
pub mod partial_action;
pub mod report;
pub mod system;
pub mod union_find;

pub use error::Error;
pub use group::FiniteGroup;
pub use partial_action::PartialAction;
