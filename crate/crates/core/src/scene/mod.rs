//! The derivation tree, shape-path queries, Booleans on queried shapes, and statistics.

mod boolean;
mod query;
mod stats;
mod tree;

pub use boolean::{geometric_boolean, operand_mesh, BooleanError, BooleanOutcome, Operand};
pub use query::{instances, resolve_path, terminals, ShapePath};
pub use stats::{collect_stats, leaf_stats, StatsRow, StatsTable};
pub use tree::{Node, NodeId, NodeKind, ParseTree};
