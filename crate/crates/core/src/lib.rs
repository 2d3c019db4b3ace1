//! Polynomial-delay enumeration of (projected) CSP solutions by enforcing
//! pairwise consistency over the views of a decomposition method.
//!
//! The pieces, bottom up:
//!
//! - [`structures`]: relational structures, homomorphisms, cores, pinning.
//! - [`hypergraphs`]: acyclicity, join trees, tree projections, tp-coverage.
//! - [`decomposition`]: view structures for `tw_k` and `hw_k`.
//! - [`consistency`]: the pairwise-consistency fixpoint.
//! - [`enumeration`]: the plain and the certified enumeration streams.
//! - [`testkit`]: brute-force oracles and instance generators.
//! - [`io`]: the instance format and the command line.

pub mod consistency;
pub mod decomposition;
pub mod enumeration;
pub mod hypergraphs;
pub mod io;
pub mod structures;
pub mod testkit;

pub use consistency::{gac, is_pairwise_consistent};
pub use decomposition::{build_views, tp_covered_through_dm, Method, MethodSpec, ViewPair};
pub use enumeration::{enumerate_all, enumerate_certified, EventKind, SolutionEvent, SolutionStream};
pub use hypergraphs::{find_tree_projection, hypergraph_of, is_acyclic, is_tp_covered, Hypergraph};
pub use structures::{compute_cores, is_homomorphism, validate_instance, PartialMap, RelationalStructure, Vocabulary};
