//! Seeded, lazily expanded weighted Galton–Watson trees.
//!
//! A vertex is identified by a hash of its child-position path from the
//! root, and everything drawn for it (its offspring count and the
//! conductance of the edge to its parent) comes from a stream keyed by
//! `(master seed, id)`. Records are therefore pure functions of the key and
//! the memo store is only a cache: expanding in any order, from any number of
//! threads, yields bit-identical trees.

use std::fmt;
use std::sync::Arc;

use parking_lot::RwLock;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::laws::{conductance_floor, mean_gamma, ConductanceLawTable, Mean, OffspringLaw};
use crate::seed::{derive, mix64, node_stream};
use crate::view::{FiniteWeightedTree, ViewNode};

/// Default cap on the (expected) number of vertices in a materialized view.
pub const DEFAULT_NODE_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error("unknown node {0}")]
    NodeUnknown(NodeId),
    #[error("truncation would need about {estimated:.3e} vertices, cap is {cap}")]
    BudgetExceeded { estimated: f64, cap: u64 },
    #[error("malformed tree: {0}")]
    Malformed(String),
}

/// Stable vertex identifier (hash of the child-position path).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u64);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0x6777_7263_726f_6f74);

    #[inline]
    pub fn child(self, position: u32) -> NodeId {
        NodeId(derive(self.0, u64::from(position)))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

// Hex strings: JSON consumers without 64-bit integers would mangle the ids.
impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        u64::from_str_radix(&s, 16)
            .map(NodeId)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeMode {
    /// Rooted Galton–Watson tree: the root has `k` children with probability `p_k`.
    Plain,
    /// Two independent Galton–Watson trees joined by an edge: the root has
    /// index `k` (so `k + 1` neighbors) with probability `p_k`.
    Augmented,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeRecord {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    /// Children in the rooted orientation.
    pub offspring_count: u32,
    /// Degree minus one.
    pub index: u32,
    pub depth: u32,
    pub edge_to_parent: Option<f64>,
    /// Index used to key the conductance laws of the edges to the children.
    /// Equals `index` except at a plain root, which is keyed by its offspring
    /// count as if it hung below a parent.
    pub edge_key: u32,
}

/// The laws of a weighted tree, shared by every handle built from them.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeLaws {
    pub offspring: OffspringLaw,
    pub table: ConductanceLawTable,
}

impl TreeLaws {
    pub fn new(offspring: OffspringLaw, table: ConductanceLawTable) -> Self {
        Self { offspring, table }
    }

    pub fn gamma(&self) -> Mean {
        mean_gamma(&self.table, &self.offspring)
    }

    pub fn conductance_floor(&self) -> f64 {
        conductance_floor(&self.table, &self.offspring)
    }
}

/// One child as drawn by its parent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChildDraw {
    pub id: NodeId,
    pub offspring_count: u32,
    pub xi: f64,
}

/// Pure record generator; the memo store of [`LazyTree`] only caches it.
#[derive(Debug, Clone)]
pub struct Generator {
    mode: TreeMode,
    seed: u64,
    laws: Arc<TreeLaws>,
}

impl Generator {
    pub fn new(mode: TreeMode, laws: Arc<TreeLaws>, seed: u64) -> Self {
        Self { mode, seed, laws }
    }

    pub fn laws(&self) -> &TreeLaws {
        &self.laws
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> TreeMode {
        self.mode
    }

    pub fn root(&self) -> NodeRecord {
        let mut rng = node_stream(self.seed, mix64(NodeId::ROOT.0));
        let k = self.laws.offspring.sample(&mut rng);
        let (offspring_count, index) = match self.mode {
            TreeMode::Plain => (k, k - 1),
            TreeMode::Augmented => (k + 1, k),
        };
        NodeRecord {
            id: NodeId::ROOT,
            parent: None,
            offspring_count,
            index,
            depth: 0,
            edge_to_parent: None,
            edge_key: k,
        }
    }

    /// The `position`-th child of a vertex: its offspring count is drawn
    /// first, then the edge conductance from the law keyed by both indices.
    #[inline]
    pub fn child(&self, parent: NodeId, parent_key: u32, position: u32) -> ChildDraw {
        let id = parent.child(position);
        let mut rng = node_stream(self.seed, id.0);
        let m = self.laws.offspring.sample(&mut rng);
        let xi = self.laws.table.sample(parent_key, m, &mut rng);
        ChildDraw {
            id,
            offspring_count: m,
            xi,
        }
    }

    pub fn child_record(&self, parent: &NodeRecord, position: u32) -> NodeRecord {
        let c = self.child(parent.id, parent.edge_key, position);
        NodeRecord {
            id: c.id,
            parent: Some(parent.id),
            offspring_count: c.offspring_count,
            index: c.offspring_count,
            depth: parent.depth + 1,
            edge_to_parent: Some(c.xi),
            edge_key: c.offspring_count,
        }
    }
}

#[derive(Debug)]
struct Slot {
    record: NodeRecord,
    children: Option<Arc<[(NodeId, f64)]>>,
}

/// Memoized infinite tree. Safe to share between threads; concurrent
/// expansion of the same vertex is idempotent.
#[derive(Debug)]
pub struct LazyTree {
    generator: Generator,
    store: RwLock<FxHashMap<NodeId, Slot>>,
}

impl LazyTree {
    /// Tree handle with only the root materialized.
    pub fn new(mode: TreeMode, laws: Arc<TreeLaws>, seed: u64) -> Self {
        let generator = Generator::new(mode, laws, seed);
        let root = generator.root();
        let mut store = FxHashMap::default();
        store.insert(
            root.id,
            Slot {
                record: root,
                children: None,
            },
        );
        Self {
            generator,
            store: RwLock::new(store),
        }
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn laws(&self) -> &TreeLaws {
        self.generator.laws()
    }

    pub fn mode(&self) -> TreeMode {
        self.generator.mode
    }

    pub fn seed(&self) -> u64 {
        self.generator.seed
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    pub fn root_record(&self) -> NodeRecord {
        self.record(NodeId::ROOT).expect("root is always materialized")
    }

    pub fn record(&self, id: NodeId) -> Result<NodeRecord, TreeError> {
        self.store
            .read()
            .get(&id)
            .map(|slot| slot.record)
            .ok_or(TreeError::NodeUnknown(id))
    }

    /// Number of materialized vertices.
    pub fn materialized(&self) -> usize {
        self.store.read().len()
    }

    /// Children of `id` with the conductances of their edges, materializing
    /// them on first use.
    pub fn expand(&self, id: NodeId) -> Result<Arc<[(NodeId, f64)]>, TreeError> {
        let record = {
            let store = self.store.read();
            let slot = store.get(&id).ok_or(TreeError::NodeUnknown(id))?;
            if let Some(children) = &slot.children {
                return Ok(children.clone());
            }
            slot.record
        };
        let records: Vec<NodeRecord> = (0..record.offspring_count)
            .map(|pos| self.generator.child_record(&record, pos))
            .collect();
        let children: Arc<[(NodeId, f64)]> = records
            .iter()
            .map(|r| (r.id, r.edge_to_parent.expect("child has a parent edge")))
            .collect();
        let mut store = self.store.write();
        for r in records {
            store.entry(r.id).or_insert(Slot {
                record: r,
                children: None,
            });
        }
        let slot = store.get_mut(&id).expect("present above");
        Ok(slot.children.get_or_insert(children).clone())
    }

    /// Runs `f(record, children)` on an expanded vertex under one read lock.
    #[inline]
    pub fn with_expanded<R>(
        &self,
        id: NodeId,
        f: impl FnOnce(&NodeRecord, &[(NodeId, f64)]) -> R,
    ) -> Result<R, TreeError> {
        {
            let store = self.store.read();
            let slot = store.get(&id).ok_or(TreeError::NodeUnknown(id))?;
            if let Some(children) = &slot.children {
                return Ok(f(&slot.record, children));
            }
        }
        let children = self.expand(id)?;
        let record = self.record(id)?;
        Ok(f(&record, &children))
    }

    /// Expected number of vertices in the subtree of `record` down to
    /// `depth` levels below it.
    pub fn expected_size(&self, record: &NodeRecord, depth: u32) -> f64 {
        expected_subtree_size(self.laws().offspring.mean(), record.offspring_count, depth)
    }
}

/// `1 + c (1 + mu + ... + mu^(depth - 1))` for a vertex with `c` children.
pub fn expected_subtree_size(mu: f64, children: u32, depth: u32) -> f64 {
    if depth == 0 {
        return 1.0;
    }
    let levels = (mu.powi(depth as i32) - 1.0) / (mu - 1.0);
    1.0 + f64::from(children) * levels
}

pub fn new_tree(
    mode: TreeMode,
    offspring: OffspringLaw,
    table: ConductanceLawTable,
    seed: u64,
) -> LazyTree {
    LazyTree::new(mode, Arc::new(TreeLaws::new(offspring, table)), seed)
}

pub fn expand(tree: &LazyTree, node: NodeId) -> Result<Arc<[(NodeId, f64)]>, TreeError> {
    tree.expand(node)
}

/// All vertices within `depth` of the root.
pub fn truncate_view(tree: &LazyTree, depth: u32) -> Result<FiniteWeightedTree, TreeError> {
    truncate_view_capped(tree, NodeId::ROOT, depth, DEFAULT_NODE_CAP)
}

/// All descendants of `node` within `depth` levels below it, with `node` as
/// the root of the view. Vertices at the last level are flagged frontier.
pub fn truncate_view_capped(
    tree: &LazyTree,
    node: NodeId,
    depth: u32,
    cap: u64,
) -> Result<FiniteWeightedTree, TreeError> {
    let top = tree.record(node)?;
    let estimated = tree.expected_size(&top, depth);
    if estimated > cap as f64 {
        return Err(TreeError::BudgetExceeded { estimated, cap });
    }
    let generator = tree.generator();
    let mut nodes = vec![ViewNode {
        id: top.id,
        index: top.index,
        depth: 0,
        parent: None,
        frontier: depth == 0,
    }];
    let mut edges = Vec::new();
    let mut records = vec![top];
    let mut head = 0;
    while head < records.len() {
        let parent = records[head];
        let level = parent.depth - top.depth;
        if level < depth {
            for pos in 0..parent.offspring_count {
                let child = generator.child_record(&parent, pos);
                let i = nodes.len();
                nodes.push(ViewNode {
                    id: child.id,
                    index: child.index,
                    depth: level + 1,
                    parent: Some(head),
                    frontier: level + 1 == depth,
                });
                edges.push((head, i, child.edge_to_parent.expect("non-root")));
                records.push(child);
            }
        }
        head += 1;
    }
    FiniteWeightedTree::from_parts(nodes, &edges, 0)
}

pub fn reroot(view: &FiniteWeightedTree, new_root: NodeId) -> Result<FiniteWeightedTree, TreeError> {
    view.reroot(new_root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::ConductanceLaw;

    fn binary(mode: TreeMode, seed: u64) -> LazyTree {
        new_tree(
            mode,
            OffspringLaw::degenerate(2).unwrap(),
            ConductanceLawTable::constant(1.0).unwrap(),
            seed,
        )
    }

    #[test]
    fn augmented_binary_root() {
        let t = binary(TreeMode::Augmented, 1);
        let r = t.root_record();
        assert_eq!((r.index, r.offspring_count), (2, 3));
        assert_eq!(t.expand(t.root()).unwrap().len(), 3);
    }

    #[test]
    fn plain_binary_root() {
        let t = binary(TreeMode::Plain, 1);
        let r = t.root_record();
        assert_eq!((r.index, r.offspring_count), (1, 2));
    }

    #[test]
    fn same_seed_same_root() {
        let law = OffspringLaw::new([(1, 0.3), (2, 0.3), (5, 0.4)]).unwrap();
        let table = ConductanceLawTable::new(ConductanceLaw::Exponential { rate: 1.0 }).unwrap();
        for seed in 0..20 {
            let a = new_tree(TreeMode::Augmented, law.clone(), table.clone(), seed);
            let b = new_tree(TreeMode::Augmented, law.clone(), table.clone(), seed);
            assert_eq!(a.root_record(), b.root_record());
            assert_eq!(a.expand(a.root()).unwrap(), b.expand(b.root()).unwrap());
        }
    }

    #[test]
    fn expand_is_memoized() {
        let t = binary(TreeMode::Augmented, 3);
        let a = t.expand(t.root()).unwrap();
        let b = t.expand(t.root()).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        for &(child, xi) in a.iter() {
            assert_eq!(xi, 1.0);
            assert_eq!(t.expand(child).unwrap().len(), 2);
        }
    }

    #[test]
    fn expand_unknown_node() {
        let t = binary(TreeMode::Plain, 3);
        assert!(matches!(
            t.expand(NodeId(5)),
            Err(TreeError::NodeUnknown(NodeId(5)))
        ));
    }

    #[test]
    fn child_records_follow_index_rule() {
        let law = OffspringLaw::new([(1, 0.5), (3, 0.5)]).unwrap();
        let t = new_tree(TreeMode::Augmented, law, ConductanceLawTable::constant(2.0).unwrap(), 9);
        for &(child, _) in t.expand(t.root()).unwrap().iter() {
            let r = t.record(child).unwrap();
            assert_eq!(r.index, r.offspring_count);
            assert_eq!(r.depth, 1);
            assert_eq!(r.parent, Some(t.root()));
        }
    }

    #[test]
    fn view_sizes() {
        let t = binary(TreeMode::Augmented, 5);
        assert_eq!(truncate_view(&t, 0).unwrap().len(), 1);
        for d in 1..8u32 {
            let v = truncate_view(&t, d).unwrap();
            assert_eq!(v.len(), 3 * ((1 << d) - 1) + 1);
            assert_eq!(v.nodes().iter().filter(|n| n.frontier).count(), 3 << (d - 1));
        }
    }

    #[test]
    fn view_budget() {
        let t = binary(TreeMode::Augmented, 5);
        assert!(matches!(
            truncate_view(&t, 40),
            Err(TreeError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn view_matches_lazy_expansion() {
        let law = OffspringLaw::new([(1, 0.4), (2, 0.3), (4, 0.3)]).unwrap();
        let table = ConductanceLawTable::new(ConductanceLaw::LogNormal { mu_log: 0.0, sigma_log: 1.0 }).unwrap();
        let t = new_tree(TreeMode::Augmented, law, table, 77);
        let v = truncate_view(&t, 4).unwrap();
        for (p, c, xi) in v.edges() {
            let children = t.expand(v.node(p).id).unwrap();
            assert!(children.contains(&(v.node(c).id, xi)));
        }
    }

    #[test]
    fn reroot_preserves_degrees_and_weights() {
        let t = binary(TreeMode::Augmented, 5);
        let v = truncate_view(&t, 3).unwrap();
        let w0 = v.node(1).id;
        let r = reroot(&v, w0).unwrap();
        assert_eq!(r.node(0).depth, 1);
        for i in 0..v.len() {
            assert_eq!(v.neighbors(i), r.neighbors(i));
            assert_eq!(v.pi(i), r.pi(i));
        }
        assert_eq!(reroot(&r, v.node(0).id).unwrap(), v);
    }
}
