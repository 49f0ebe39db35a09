//! Rule-based meaning manipulation over AMR graphs and a benchmark harness for
//! text embedding models built on the resulting hard negatives.

pub mod backends;
pub mod bench;
pub mod config;
pub mod graph;
pub mod penman;
pub mod pipeline;
pub mod transforms;
pub mod wordnet;

pub use graph::{AmrGraph, Attribute, Constant, Relation, Role, Triple, TripleTarget, Variable};
