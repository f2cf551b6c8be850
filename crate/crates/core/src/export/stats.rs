use std::fmt::Write;

use super::format_float;
use crate::scene::StatsTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatsFormat {
    Text,
    Csv,
}

/// Renders the table; CSV columns are `pattern,count,volume`.
pub fn write_stats(table: &StatsTable, format: StatsFormat) -> String {
    match format {
        StatsFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["pattern", "count", "volume"]).unwrap();
            for r in &table.rows {
                w.write_record([r.name.as_str(), &r.count.to_string(), &format_float(r.volume)]).unwrap();
            }
            String::from_utf8(w.into_inner().unwrap()).unwrap()
        }
        StatsFormat::Text => {
            let name_w = table.rows.iter().map(|r| r.name.len()).chain([7]).max().unwrap();
            let mut out = String::new();
            writeln!(out, "{:<name_w$}  {:>8}  {:>16}", "pattern", "count", "volume").unwrap();
            for r in &table.rows {
                writeln!(out, "{:<name_w$}  {:>8}  {:>16.6}", r.name, r.count, r.volume).unwrap();
            }
            if table.empty_nonterminals > 0 {
                writeln!(out, "({} empty nonterminals)", table.empty_nonterminals).unwrap();
            }
            out
        }
    }
}
