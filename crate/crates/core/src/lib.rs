//! A laboratory for distributed construction of purely additive graph spanners.
//!
//! The crate has five parts:
//!
//! * [`graph`]: immutable undirected graphs, deterministic generators
//!   (including projective-plane incidence graphs and the pendant-augmented
//!   families used by the communication lower bound), and sequential oracles
//!   (BFS, girth, diameter) that serve as ground truth.
//! * [`congest`]: a deterministic, round-based executor of the synchronous
//!   CONGEST model: per-round message exchange over the graph edges, message
//!   size enforcement, round/bit accounting, and optional per-message traces.
//! * [`spanners`]: the spanner construction algorithms (`2S`, `2P`, `4P`,
//!   `4AP`, `8AP`, `SUB2`, `SUB4`) expressed as node programs over the
//!   executor, built from four shared distributed phases: randomized
//!   clustering, pipelined multi-source BFS, prefix/suffix edge buying, and
//!   threshold path buying.
//! * [`verify`]: centralized validation of spanner outputs: subgraph checks,
//!   additive stretch against a BFS oracle, and edge/round budget reports.
//! * [`lowerbound`]: the executable side of the round lower bound: the
//!   partial-complement relation, forced-edge checks on incidence graphs, the
//!   spanner-to-relation reduction, and two-party cut-bit accounting.

pub mod congest;
pub mod graph;
pub mod lowerbound;
pub mod spanners;
pub mod verify;

pub use graph::{EdgeSet, Graph, NodeId, PairSet};
