use crate::geometry::Shape;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    NonTerminal,
    Terminal,
    VoidTerminal,
}

impl NodeKind {
    pub fn is_leaf(self) -> bool {
        !matches!(self, NodeKind::NonTerminal)
    }
}

#[derive(Debug, Clone)]
pub struct Node {
    pub symbol: String,
    pub shape: Shape,
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Preorder timestamp assigned when expansion of the node begins.
    pub stamp: Option<u64>,
    /// Set when a Boolean deleted the node; removed nodes are unreachable from the root.
    pub removed: bool,
}

/// Derivation tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone)]
pub struct ParseTree {
    nodes: Vec<Node>,
    clock: u64,
}

impl ParseTree {
    pub fn new(symbol: &str, mut shape: Shape) -> Self {
        shape.symbol = symbol.to_string();
        let root = Node {
            symbol: symbol.to_string(),
            shape,
            kind: NodeKind::NonTerminal,
            parent: None,
            children: Vec::new(),
            stamp: None,
            removed: false,
        };
        Self { nodes: vec![root], clock: 0 }
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id]
    }

    /// Number of arena slots, including removed nodes.
    pub fn capacity(&self) -> usize {
        self.nodes.len()
    }

    pub fn add_child(&mut self, parent: NodeId, symbol: &str, mut shape: Shape, kind: NodeKind) -> NodeId {
        shape.symbol = symbol.to_string();
        if kind == NodeKind::VoidTerminal {
            shape.is_void = true;
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            symbol: symbol.to_string(),
            shape,
            kind,
            parent: Some(parent),
            children: Vec::new(),
            stamp: None,
            removed: false,
        });
        self.nodes[parent].children.push(id);
        id
    }

    pub fn stamp(&mut self, id: NodeId) {
        if self.nodes[id].stamp.is_none() {
            self.nodes[id].stamp = Some(self.clock);
            self.clock += 1;
        }
    }

    /// Detaches `id` from its parent and marks its whole subtree removed.
    pub fn remove(&mut self, id: NodeId) {
        if let Some(p) = self.nodes[id].parent {
            self.nodes[p].children.retain(|&c| c != id);
        }
        for n in self.subtree(id) {
            self.nodes[n].removed = true;
        }
    }

    pub fn depth(&self, mut id: NodeId) -> usize {
        let mut d = 0;
        while let Some(p) = self.nodes[id].parent {
            d += 1;
            id = p;
        }
        d
    }

    /// Symbols from the root down to `id`.
    pub fn ancestry(&self, mut id: NodeId) -> Vec<&str> {
        let mut out = vec![self.nodes[id].symbol.as_str()];
        while let Some(p) = self.nodes[id].parent {
            out.push(self.nodes[p].symbol.as_str());
            id = p;
        }
        out.reverse();
        out
    }

    pub fn path(&self, id: NodeId) -> String {
        self.ancestry(id).join("/")
    }

    /// Preorder listing of the subtree rooted at `id`.
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }

    /// All live nodes in preorder.
    pub fn preorder(&self) -> Vec<NodeId> {
        self.subtree(self.root())
    }

    /// Live leaves (terminal or void) in preorder.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.preorder().into_iter().filter(|&n| self.nodes[n].kind.is_leaf()).collect()
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.preorder().into_iter().filter(|&n| self.nodes[n].kind == kind).count()
    }

    /// Nonterminals left without children, which only Boolean deletions produce.
    pub fn empty_nonterminals(&self) -> Vec<NodeId> {
        self.preorder()
            .into_iter()
            .filter(|&n| self.nodes[n].kind == NodeKind::NonTerminal && self.nodes[n].children.is_empty())
            .collect()
    }

    /// Summed volume of live visible terminals.
    pub fn visible_volume(&self) -> f64 {
        self.preorder()
            .into_iter()
            .filter(|&n| self.nodes[n].kind == NodeKind::Terminal)
            .map(|n| self.nodes[n].shape.volume())
            .sum()
    }
}
