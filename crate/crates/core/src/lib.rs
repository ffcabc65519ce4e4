//! KMS phase structure of Toeplitz and Cuntz–Pimsner algebras of finite directed multigraphs.

pub mod entropy;
pub mod error;
pub mod fixtures;
pub mod fock;
pub mod graph;
pub mod report;
pub mod spectral;
pub mod states;

pub use entropy::GraphAnalysis;
pub use error::{Error, ParseError, Result};
pub use graph::{parse_graph, parse_graph_value, ComponentDecomposition, MultiGraph, Path, Trace};
pub use states::{Algebra, Monomial};
