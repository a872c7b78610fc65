//! Agent memories: a bounded FIFO log of past choices and a tree of what was
//! seen after each choice.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

pub const DEFAULT_MEMORY_HORIZON: usize = 50;

/// One observation list and the object chosen from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub objects: Vec<String>,
    pub action: String,
}

/// FIFO buffer holding at most `horizon` entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryBuffer {
    entries: VecDeque<MemoryEntry>,
    horizon: usize,
}

impl Default for MemoryBuffer {
    fn default() -> Self {
        MemoryBuffer::new(DEFAULT_MEMORY_HORIZON)
    }
}

impl MemoryBuffer {
    pub fn new(horizon: usize) -> Self {
        MemoryBuffer { entries: VecDeque::with_capacity(horizon), horizon }
    }

    pub fn push(&mut self, entry: MemoryEntry) {
        if self.horizon == 0 {
            return;
        }
        if self.entries.len() == self.horizon {
            self.entries.pop_front();
        }
        self.entries.push_back(entry);
    }

    pub fn entries(&self) -> impl ExactSizeIterator<Item = &MemoryEntry> + Clone {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

pub const ROOT_LABEL: &str = "<root>";
pub const START_LABEL: &str = "<start>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    /// Last timestep at which this object was seen from the parent.
    pub timestep: u32,
    pub object: String,
    /// Scan node where the object was seen; empty for the root.
    pub graph_node: String,
    pub portable: bool,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// Observations organized by the choice that led to them.
///
/// The root is virtual. Its children are start anchors, one per start node;
/// every other node is an object seen from its parent's location. Each tree
/// edge therefore joins two adjacent scan nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryTree {
    nodes: Vec<TreeNode>,
    by_object: BTreeMap<String, Vec<usize>>,
    by_place: BTreeMap<String, Vec<usize>>,
    current: usize,
}

impl Default for MemoryTree {
    fn default() -> Self {
        MemoryTree::new()
    }
}

/// A path through the tree to a node flagged portable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TracebackPlan {
    pub object_chain: Vec<String>,
    pub node_chain: Vec<String>,
    /// Tree nodes after the source, aligned with `node_chain`.
    pub tree_path: Vec<usize>,
    pub cost: usize,
}

impl TracebackPlan {
    pub fn target_object(&self) -> &str {
        self.object_chain.last().map(String::as_str).unwrap_or("")
    }

    pub fn target_node(&self) -> &str {
        self.node_chain.last().map(String::as_str).unwrap_or("")
    }
}

impl MemoryTree {
    pub fn new() -> Self {
        MemoryTree {
            nodes: vec![TreeNode {
                timestep: 0,
                object: ROOT_LABEL.into(),
                graph_node: String::new(),
                portable: false,
                parent: None,
                children: Vec::new(),
            }],
            by_object: BTreeMap::new(),
            by_place: BTreeMap::new(),
            current: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn set_current(&mut self, i: usize) {
        assert!(i < self.nodes.len());
        self.current = i;
    }

    /// Tree nodes recording `object`.
    pub fn occurrences(&self, object: &str) -> &[usize] {
        self.by_object.get(object).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Tree nodes located at scan node `graph_node`.
    pub fn nodes_at(&self, graph_node: &str) -> &[usize] {
        self.by_place.get(graph_node).map(Vec::as_slice).unwrap_or(&[])
    }

    fn push(&mut self, node: TreeNode) -> usize {
        let i = self.nodes.len();
        self.by_object.entry(node.object.clone()).or_default().push(i);
        self.by_place.entry(node.graph_node.clone()).or_default().push(i);
        if let Some(p) = node.parent {
            self.nodes[p].children.push(i);
        }
        self.nodes.push(node);
        i
    }

    /// Moves to the start anchor for `graph_node`, creating it if needed.
    pub fn anchor(&mut self, graph_node: &str, t: u32) -> usize {
        let existing = self.nodes[0].children.iter().copied().find(|&c| self.nodes[c].graph_node == graph_node);
        self.current = existing.unwrap_or_else(|| {
            self.push(TreeNode {
                timestep: t,
                object: START_LABEL.into(),
                graph_node: graph_node.into(),
                portable: false,
                parent: Some(0),
                children: Vec::new(),
            })
        });
        self.current
    }

    pub fn child(&self, parent: usize, object: &str, graph_node: &str) -> Option<usize> {
        self.nodes[parent].children.iter().copied().find(|&c| {
            let n = &self.nodes[c];
            n.object == object && n.graph_node == graph_node
        })
    }

    /// Records `(object, scan node, portable)` sightings as children of the
    /// current node. Known pairs only refresh their timestep. Returns the
    /// number of new tree nodes.
    pub fn record<'a>(&mut self, t: u32, seen: impl IntoIterator<Item = (&'a str, &'a str, bool)>) -> usize {
        let parent = self.current;
        let mut added = 0;
        for (object, graph_node, portable) in seen {
            match self.child(parent, object, graph_node) {
                Some(c) => self.nodes[c].timestep = t,
                None => {
                    self.push(TreeNode {
                        timestep: t,
                        object: object.into(),
                        graph_node: graph_node.into(),
                        portable,
                        parent: Some(parent),
                        children: Vec::new(),
                    });
                    added += 1;
                }
            }
        }
        added
    }

    /// Steps into the child for `(object, graph_node)` if it exists.
    pub fn descend(&mut self, object: &str, graph_node: &str) -> Option<usize> {
        let c = self.child(self.current, object, graph_node)?;
        self.current = c;
        Some(c)
    }

    fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let n = &self.nodes[i];
        n.parent.filter(|&p| p != 0).into_iter().chain(n.children.iter().copied())
    }
}

/// Nearest portable-flagged node from `from`, walking tree edges (never
/// through the virtual root).
pub fn find_nearest_portable_path(tree: &MemoryTree, from: usize) -> Option<TracebackPlan> {
    find_nearest_path(tree, &[from], |n, _| n.portable)
}

/// Breadth-first search from all `sources` at once for nodes accepted by
/// `accept`. The smallest cost wins; ties go to the lexicographically
/// smallest target object, then scan node, then tree index.
pub fn find_nearest_path(
    tree: &MemoryTree,
    sources: &[usize],
    accept: impl Fn(&TreeNode, usize) -> bool,
) -> Option<TracebackPlan> {
    let mut prev: Vec<Option<usize>> = vec![None; tree.len()];
    let mut seen = vec![false; tree.len()];
    let mut frontier: Vec<usize> = Vec::new();
    for &s in sources {
        if s != 0 && !seen[s] {
            seen[s] = true;
            frontier.push(s);
        }
    }
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &v in &frontier {
            for u in tree.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    prev[u] = Some(v);
                    next.push(u);
                }
            }
        }
        let best = next
            .iter()
            .copied()
            .filter(|&u| accept(tree.node(u), u))
            .min_by(|&a, &b| {
                let (na, nb) = (tree.node(a), tree.node(b));
                (&na.object, &na.graph_node, a).cmp(&(&nb.object, &nb.graph_node, b))
            });
        if let Some(target) = best {
            let mut path = vec![target];
            while let Some(p) = prev[*path.last().unwrap()] {
                path.push(p);
            }
            path.pop();
            path.reverse();
            return Some(TracebackPlan {
                object_chain: path.iter().map(|&i| tree.node(i).object.clone()).collect(),
                node_chain: path.iter().map(|&i| tree.node(i).graph_node.clone()).collect(),
                cost: path.len(),
                tree_path: path,
            });
        }
        frontier = next;
    }
    None
}
