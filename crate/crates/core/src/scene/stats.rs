use std::collections::BTreeMap;

use super::query::resolve_path;
use super::tree::{NodeKind, ParseTree};

#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub name: String,
    pub count: usize,
    pub volume: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StatsTable {
    /// Sorted by descending volume, then name.
    pub rows: Vec<StatsRow>,
    /// Nonterminals whose leaves were all deleted by Booleans.
    pub empty_nonterminals: usize,
}

impl StatsTable {
    fn sorted(mut rows: Vec<StatsRow>, tree: &ParseTree) -> Self {
        rows.sort_by(|a, b| b.volume.total_cmp(&a.volume).then_with(|| a.name.cmp(&b.name)));
        Self { rows, empty_nonterminals: tree.empty_nonterminals().len() }
    }

    pub fn row(&self, name: &str) -> Option<&StatsRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// One row per pattern: the leaves matched by the path and their summed volume.
pub fn collect_stats(tree: &ParseTree, patterns: &[String]) -> StatsTable {
    let rows = patterns
        .iter()
        .map(|p| {
            let leaves: Vec<_> =
                resolve_path(tree, tree.root(), p).into_iter().filter(|&n| tree.node(n).kind.is_leaf()).collect();
            StatsRow {
                name: p.clone(),
                count: leaves.len(),
                volume: leaves.iter().map(|&n| tree.node(n).shape.volume()).sum(),
            }
        })
        .collect();
    StatsTable::sorted(rows, tree)
}

/// One row per leaf symbol; void leaves are reported as `symbol (void)`.
pub fn leaf_stats(tree: &ParseTree) -> StatsTable {
    let mut groups: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for n in tree.leaves() {
        let node = tree.node(n);
        let name = match node.kind {
            NodeKind::VoidTerminal => format!("{} (void)", node.symbol),
            _ => node.symbol.clone(),
        };
        let e = groups.entry(name).or_default();
        e.0 += 1;
        e.1 += node.shape.volume();
    }
    let rows = groups.into_iter().map(|(name, (count, volume))| StatsRow { name, count, volume }).collect();
    StatsTable::sorted(rows, tree)
}
