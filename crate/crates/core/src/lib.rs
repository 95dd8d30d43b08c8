//! Self-improving sorting engine.
//!
//! The engine learns structure of an input distribution in a training phase
//! and then sorts fresh instances with entropy-near-optimal expected
//! comparison counts. Two hidden-structure models are supported:
//!
//! - hidden linear classes: groups of positions whose values are distinct
//!   linear functions of one shared random parameter per group, learned via
//!   collinearity tests and served by per-class slab indexes;
//! - hidden mixtures of product distributions: an unknown mixture of at most
//!   m product distributions, served by a fine-grained interval list with
//!   per-position frequency trees and per-bucket van Emde Boas traversal.
//!
//! Both sorters verify their output and fall back to a standard sort on any
//! violation, so returned permutations always sort the input.

pub mod baseline;
pub mod counter;
pub mod error;
pub mod freq_bst;
pub mod generators;
pub mod instance;
pub mod learner;
pub mod linear_sorter;
pub mod mixture_sorter;
pub mod serde_util;
pub mod slab;
pub mod stream;
pub mod veb;
pub mod vlist;

pub use counter::{ComparisonCounter, SortStats};
pub use error::{CoreError, Result};
pub use instance::InputInstance;
pub use vlist::{build_vlist, VList};
