//! Finite snapshots of weighted trees.

use std::fmt;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::seed::{derive, mix64};
use crate::tree::{NodeId, TreeError};

/// Version tag written into every JSON snapshot.
pub const SNAPSHOT_SCHEMA: &str = "v1";

#[derive(Debug, Clone, PartialEq)]
pub struct ViewNode {
    pub id: NodeId,
    /// Index of the vertex in the underlying infinite tree (degree minus one).
    pub index: u32,
    pub depth: u32,
    pub parent: Option<usize>,
    /// Set on vertices whose descendants were cut off by truncation.
    pub frontier: bool,
}

/// A finite weighted tree with a distinguished root. Vertices keep their
/// storage position under re-rooting; only orientation and depths change.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteWeightedTree {
    nodes: Vec<ViewNode>,
    /// Neighbor lists in a fixed order, independent of the orientation.
    adjacency: Vec<Vec<(usize, f64)>>,
    root: usize,
    lookup: FxHashMap<NodeId, usize>,
}

impl FiniteWeightedTree {
    /// Assembles a view from vertices and undirected edges `(a, b, xi)` given
    /// by storage position. Parent pointers and depths are recomputed from
    /// `root`.
    pub fn from_parts(
        mut nodes: Vec<ViewNode>,
        edges: &[(usize, usize, f64)],
        root: usize,
    ) -> Result<Self, TreeError> {
        let n = nodes.len();
        if root >= n || edges.len() + 1 != n {
            return Err(TreeError::Malformed(format!(
                "{n} vertices, {} edges, root {root}",
                edges.len()
            )));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b, xi) in edges {
            if a >= n || b >= n || a == b {
                return Err(TreeError::Malformed(format!("bad edge ({a}, {b})")));
            }
            adjacency[a].push((b, xi));
            adjacency[b].push((a, xi));
        }
        let mut lookup = FxHashMap::default();
        for (i, node) in nodes.iter_mut().enumerate() {
            if lookup.insert(node.id, i).is_some() {
                return Err(TreeError::Malformed(format!("duplicate id {}", node.id)));
            }
        }
        let mut view = Self {
            nodes,
            adjacency,
            root,
            lookup,
        };
        if view.orient(root) != n {
            return Err(TreeError::Malformed("edges do not span a tree".into()));
        }
        Ok(view)
    }

    /// Hand-built tree: `parents[i]` is the parent of vertex `i` and `xi[i]`
    /// the conductance of that edge (ignored for the root). Leaves are
    /// flagged as frontier, indices are degree minus one.
    pub fn from_parent_list(parents: &[Option<usize>], xi: &[f64]) -> Result<Self, TreeError> {
        let root = parents
            .iter()
            .position(Option::is_none)
            .ok_or_else(|| TreeError::Malformed("no root".into()))?;
        let edges: Vec<(usize, usize, f64)> = parents
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (p, i, xi[i])))
            .collect();
        let nodes = (0..parents.len())
            .map(|i| ViewNode {
                id: NodeId(i as u64),
                index: 0,
                depth: 0,
                parent: None,
                frontier: false,
            })
            .collect();
        let mut view = Self::from_parts(nodes, &edges, root)?;
        for i in 0..view.len() {
            let degree = view.adjacency[i].len() as u32;
            view.nodes[i].index = degree.saturating_sub(1);
            view.nodes[i].frontier = i != root && degree == 1;
        }
        Ok(view)
    }

    fn orient(&mut self, root: usize) -> usize {
        self.root = root;
        self.nodes[root].parent = None;
        self.nodes[root].depth = 0;
        let mut seen = vec![false; self.nodes.len()];
        seen[root] = true;
        let mut stack = vec![root];
        let mut count = 1;
        while let Some(x) = stack.pop() {
            let depth = self.nodes[x].depth + 1;
            for k in 0..self.adjacency[x].len() {
                let y = self.adjacency[x][k].0;
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    self.nodes[y].parent = Some(x);
                    self.nodes[y].depth = depth;
                    stack.push(y);
                }
            }
        }
        count
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, i: usize) -> &ViewNode {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[ViewNode] {
        &self.nodes
    }

    pub fn position(&self, id: NodeId) -> Option<usize> {
        self.lookup.get(&id).copied()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn children(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let parent = self.nodes[i].parent;
        self.adjacency[i]
            .iter()
            .copied()
            .filter(move |&(y, _)| Some(y) != parent)
    }

    pub fn parent_conductance(&self, i: usize) -> Option<f64> {
        let p = self.nodes[i].parent?;
        self.adjacency[i]
            .iter()
            .find(|&&(y, _)| y == p)
            .map(|&(_, xi)| xi)
    }

    /// Reversible measure `pi_x`: total conductance at `x`.
    pub fn pi(&self, i: usize) -> f64 {
        self.adjacency[i].iter().map(|&(_, xi)| xi).sum()
    }

    /// Undirected edges `(parent, child, xi)` in storage order of the child.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.len()).filter_map(move |i| {
            let p = self.nodes[i].parent?;
            Some((p, i, self.parent_conductance(i)?))
        })
    }

    /// Children before parents.
    pub fn postorder(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(x) = stack.pop() {
            order.push(x);
            stack.extend(self.children(x).map(|(y, _)| y));
        }
        order.reverse();
        order
    }

    pub fn max_depth(&self) -> u32 {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Same weighted graph seen from `new_root`.
    pub fn reroot(&self, new_root: NodeId) -> Result<Self, TreeError> {
        let r = self.position(new_root).ok_or(TreeError::NodeUnknown(new_root))?;
        let mut view = self.clone();
        view.orient(r);
        Ok(view)
    }

    /// Keeps the vertices within `depth` of the root; cut vertices become
    /// frontier.
    pub fn restrict(&self, depth: u32) -> Self {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.nodes[i].depth <= depth)
            .collect();
        let mut new_pos = vec![usize::MAX; self.len()];
        for (j, &i) in keep.iter().enumerate() {
            new_pos[i] = j;
        }
        let nodes = keep
            .iter()
            .map(|&i| {
                let node = &self.nodes[i];
                let cut = node.depth == depth && self.children(i).next().is_some();
                ViewNode {
                    frontier: node.frontier || cut,
                    ..node.clone()
                }
            })
            .collect();
        let edges: Vec<_> = self
            .edges()
            .filter(|&(a, b, _)| new_pos[a] != usize::MAX && new_pos[b] != usize::MAX)
            .map(|(a, b, xi)| (new_pos[a], new_pos[b], xi))
            .collect();
        Self::from_parts(nodes, &edges, new_pos[self.root]).expect("restriction of a tree is a tree")
    }

    /// Hash of structure and weights in storage order.
    pub fn fingerprint(&self) -> u64 {
        let mut h = mix64(self.len() as u64);
        for (i, node) in self.nodes.iter().enumerate() {
            h = derive(h, node.id.0);
            h = derive(h, u64::from(node.index) << 1 | u64::from(node.frontier));
            h = derive(h, node.parent.map_or(u64::MAX, |p| p as u64));
            if let Some(xi) = self.parent_conductance(i) {
                h = derive(h, xi.to_bits());
            }
        }
        h
    }

    pub fn to_snapshot(&self) -> Snapshot {
        Snapshot {
            schema: SNAPSHOT_SCHEMA.to_string(),
            root: self.nodes[self.root].id,
            nodes: self
                .nodes
                .iter()
                .map(|n| SnapshotNode {
                    id: n.id,
                    parent: n.parent.map(|p| self.nodes[p].id),
                    index: n.index,
                    depth: n.depth,
                    frontier: n.frontier,
                })
                .collect(),
            edges: self
                .edges()
                .map(|(a, b, xi)| SnapshotEdge {
                    a: self.nodes[a].id,
                    b: self.nodes[b].id,
                    xi,
                })
                .collect(),
        }
    }

    pub fn from_snapshot(snapshot: &Snapshot) -> Result<Self, TreeError> {
        let nodes: Vec<ViewNode> = snapshot
            .nodes
            .iter()
            .map(|n| ViewNode {
                id: n.id,
                index: n.index,
                depth: 0,
                parent: None,
                frontier: n.frontier,
            })
            .collect();
        let pos: FxHashMap<NodeId, usize> =
            nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let find = |id: NodeId| pos.get(&id).copied().ok_or(TreeError::NodeUnknown(id));
        let edges = snapshot
            .edges
            .iter()
            .map(|e| Ok((find(e.a)?, find(e.b)?, e.xi)))
            .collect::<Result<Vec<_>, TreeError>>()?;
        Self::from_parts(nodes, &edges, find(snapshot.root)?)
    }
}

impl fmt::Display for FiniteWeightedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "tree({} vertices, depth {}, root {})",
            self.len(),
            self.max_depth(),
            self.nodes[self.root].id
        )
    }
}

/// JSON form of a [`FiniteWeightedTree`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub schema: String,
    pub root: NodeId,
    pub nodes: Vec<SnapshotNode>,
    pub edges: Vec<SnapshotEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub index: u32,
    pub depth: u32,
    pub frontier: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEdge {
    pub a: NodeId,
    pub b: NodeId,
    pub xi: f64,
}
