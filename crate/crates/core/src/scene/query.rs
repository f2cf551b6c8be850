use super::tree::{NodeId, ParseTree};

/// A parsed shape path: `/`-separated elements, optionally rooted with a leading `/`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapePath {
    pub anchored: bool,
    pub elements: Vec<String>,
}

impl ShapePath {
    pub fn parse(path: &str) -> Self {
        let anchored = path.starts_with('/');
        let body = path.trim_start_matches('/');
        let elements = if body.is_empty() { Vec::new() } else { body.split('/').map(str::to_string).collect() };
        Self { anchored, elements }
    }

    /// Whether the ancestry contains, in order and on distinct levels,
    /// symbols containing each element as a substring.
    pub fn matches(&self, ancestry: &[&str]) -> bool {
        if self.elements.is_empty() {
            return false;
        }
        let mut k = 0;
        for seg in ancestry {
            if seg.contains(self.elements[k].as_str()) {
                k += 1;
                if k == self.elements.len() {
                    return true;
                }
            }
        }
        false
    }
}

/// Live nodes under `scope` (or the whole tree for anchored paths) whose ancestry matches `path`.
pub fn resolve_path(tree: &ParseTree, scope: NodeId, path: &str) -> Vec<NodeId> {
    let p = ShapePath::parse(path);
    let start = if p.anchored { tree.root() } else { scope };
    tree.subtree(start).into_iter().filter(|&n| p.matches(&tree.ancestry(n))).collect()
}

/// Topmost matches: matched nodes whose parent is not itself matched.
pub fn instances(tree: &ParseTree, scope: NodeId, path: &str) -> Vec<NodeId> {
    let matched = resolve_path(tree, scope, path);
    let set: std::collections::HashSet<NodeId> = matched.iter().copied().collect();
    matched.into_iter().filter(|&n| tree.node(n).parent.is_none_or(|p| !set.contains(&p))).collect()
}

/// Leaves (visible or void) in the subtrees of all matches, in preorder without repeats.
pub fn terminals(tree: &ParseTree, scope: NodeId, path: &str) -> Vec<NodeId> {
    let mut seen = vec![false; tree.capacity()];
    let mut out = Vec::new();
    for m in instances(tree, scope, path) {
        for n in tree.subtree(m) {
            if tree.node(n).kind.is_leaf() && !seen[n] {
                seen[n] = true;
                out.push(n);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;
    use crate::scene::NodeKind;

    #[test]
    fn element_order_and_levels() {
        let p = ShapePath::parse("wall/Bricks");
        assert!(p.matches(&["Axiom", "wall", "Bricks", "brick"]));
        assert!(p.matches(&["Axiom", "stonewall", "x", "Bricks2"]));
        assert!(!p.matches(&["Axiom", "Bricks", "wall"]));
        assert!(!ShapePath::parse("a/a").matches(&["a"]));
        assert!(!ShapePath::parse("").matches(&["a"]));
    }

    #[test]
    fn instances_are_topmost_and_terminals_are_leaves() {
        let mut t = ParseTree::new("Axiom", Shape::unit_cube());
        let wall = t.add_child(0, "wall", Shape::unit_cube(), NodeKind::NonTerminal);
        let b = t.add_child(wall, "Bricks", Shape::unit_cube(), NodeKind::NonTerminal);
        let even = t.add_child(b, "even", Shape::unit_cube(), NodeKind::NonTerminal);
        let b1 = t.add_child(even, "brick", Shape::unit_cube(), NodeKind::Terminal);
        let b2 = t.add_child(even, "brick", Shape::unit_cube(), NodeKind::Terminal);
        assert_eq!(instances(&t, 0, "wall/Bricks"), vec![b]);
        assert_eq!(resolve_path(&t, 0, "wall/Bricks"), vec![b, even, b1, b2]);
        assert_eq!(terminals(&t, 0, "Axiom/wall/Bricks/brick"), vec![b1, b2]);
        assert!(terminals(&t, 0, "nonexistent").is_empty());
        assert_eq!(resolve_path(&t, even, "Axiom"), vec![even, b1, b2]);
        assert_eq!(resolve_path(&t, even, "/wall"), vec![wall, b, even, b1, b2]);
    }
}
