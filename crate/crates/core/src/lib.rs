//! Random walks on Galton–Watson trees with degree-dependent random
//! conductances.
//!
//! * [`laws`]: offspring and conductance laws.
//! * [`tree`]: seeded lazy trees, finite views ([`view`]).
//! * [`walk`]: the conductance-biased walk and its observables.
//! * [`conductance`]: effective conductance brackets and escape laws.
//! * [`speed`]: rate-of-escape estimators and the checks built on them.

pub mod conductance;
pub mod laws;
pub mod seed;
pub mod speed;
pub mod stats;
pub mod tree;
pub mod view;
pub mod walk;

pub use conductance::{Boundary, BracketOptions, CondError, CondInterval, Interval};
pub use laws::{ConductanceLaw, ConductanceLawTable, LawError, Mean, OffspringLaw};
pub use tree::{LazyTree, NodeId, NodeRecord, TreeError, TreeLaws, TreeMode};
pub use view::FiniteWeightedTree;
