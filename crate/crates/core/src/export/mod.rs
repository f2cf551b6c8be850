//! Wavefront OBJ/MTL serialization and statistics reports.

mod obj;
mod stats;

pub use obj::{material_name, write_obj, ExportError, ExportOptions, GroupBy, ObjOutput};
pub use stats::{write_stats, StatsFormat};

/// Shortest decimal that parses back to the same `f64`, with `-0` printed as `0`.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x}")
}
