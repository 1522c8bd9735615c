//! Effective conductance to infinity, bracketed between truncations.
//!
//! On a finite view the series/parallel recursion is exact. On the infinite
//! lazy tree we truncate at increasing depths: shorting the cut vertices to
//! infinity gives an upper bound, and giving each of them a known lower
//! bound on its own conductance to infinity (the law's a priori floor, or
//! zero) gives a lower bound. Rayleigh monotonicity makes both bounds
//! monotone in the depth.

use thiserror::Error;

use crate::tree::{expected_subtree_size, Generator, LazyTree, NodeId, TreeError, DEFAULT_NODE_CAP};
use crate::view::FiniteWeightedTree;

/// Guards the relative-width division.
pub const RELATIVE_WIDTH_EPS: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CondError {
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("all escape-direction denominators are zero")]
    DegenerateDenominator,
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// What the frontier of a truncated tree is connected to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// Frontier shorted to infinity.
    Wired,
    /// Frontier left open.
    Free,
    /// Each frontier vertex has this conductance to infinity.
    Floor(f64),
}

impl Boundary {
    fn frontier_value(self) -> f64 {
        match self {
            Boundary::Wired => f64::INFINITY,
            Boundary::Free => 0.0,
            Boundary::Floor(c) => c,
        }
    }
}

/// Conductance of an edge `xi` in series with a network of conductance `c`.
/// `1/inf = 0`, and a zero conductance anywhere in series gives zero.
#[inline]
pub fn series(xi: f64, c: f64) -> f64 {
    if c == 0.0 || xi == 0.0 {
        0.0
    } else if c == f64::INFINITY {
        xi
    } else if xi == f64::INFINITY {
        c
    } else {
        1.0 / (1.0 / xi + 1.0 / c)
    }
}

/// Closed interval of non-negative reals, possibly unbounded above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn mid(&self) -> f64 {
        if self.hi == f64::INFINITY {
            f64::INFINITY
        } else {
            0.5 * (self.lo + self.hi)
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// `series(xi, .)` is increasing, so it maps endpoints to endpoints.
    pub fn series(&self, xi: f64) -> Interval {
        Interval::new(series(xi, self.lo), series(xi, self.hi))
    }

    pub fn scale(&self, s: f64) -> Interval {
        Interval::new(self.lo * s, self.hi * s)
    }
}

impl std::ops::Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::new(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl std::iter::Sum for Interval {
    fn sum<I: Iterator<Item = Interval>>(iter: I) -> Interval {
        iter.fold(Interval::point(0.0), |a, b| a + b)
    }
}

/// Bounds on `a / (a + b)`, which increases in `a` and decreases in `b`.
pub fn share(a: Interval, b: Interval) -> Interval {
    Interval::new(share_lower(a.lo, b.hi), share_upper(a.hi, b.lo))
}

fn share_lower(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == f64::INFINITY {
        0.0
    } else if a == f64::INFINITY {
        1.0
    } else {
        a / (a + b)
    }
}

fn share_upper(a: f64, b: f64) -> f64 {
    if a == f64::INFINITY || b == 0.0 {
        1.0
    } else if b == f64::INFINITY {
        0.0
    } else {
        a / (a + b)
    }
}

/// Effective conductance from the root of a finite view to its frontier,
/// by a post-order series/parallel fold. Leaves that are not frontier are
/// dead ends and contribute nothing.
pub fn effective_conductance_exact(
    view: &FiniteWeightedTree,
    boundary: Boundary,
) -> Result<f64, CondError> {
    let frontier = boundary.frontier_value();
    let mut value = vec![0.0; view.len()];
    for x in view.postorder() {
        let node = view.node(x);
        let mut total = 0.0;
        let mut leaf = true;
        for (y, xi) in view.children(x) {
            if !(xi > 0.0 && xi.is_finite()) {
                return Err(CondError::MalformedTree(format!(
                    "edge {} -> {} has conductance {xi}",
                    node.id,
                    view.node(y).id
                )));
            }
            leaf = false;
            total += series(xi, value[y]);
        }
        value[x] = match (node.frontier, leaf) {
            (true, true) => frontier,
            (true, false) => {
                return Err(CondError::MalformedTree(format!(
                    "frontier vertex {} has children",
                    node.id
                )))
            }
            (false, _) => total,
        };
    }
    Ok(value[view.root()])
}

/// Certified bracket on an effective conductance to infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondInterval {
    pub lower: f64,
    /// May be infinite before the first non-trivial truncation.
    pub upper: f64,
    pub depth_used: u32,
    pub tolerance_met: bool,
}

impl CondInterval {
    pub fn interval(&self) -> Interval {
        Interval::new(self.lower, self.upper)
    }

    pub fn relative_width(&self) -> f64 {
        relative_width(self.lower, self.upper)
    }
}

pub fn relative_width(lower: f64, upper: f64) -> f64 {
    if upper == f64::INFINITY {
        return f64::INFINITY;
    }
    (upper - lower) / upper.max(RELATIVE_WIDTH_EPS)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketOptions {
    /// Relative bracket width at which deepening stops.
    pub tolerance: f64,
    pub max_depth: u32,
    /// Depth increment per round.
    pub stride: u32,
    /// Cap on the expected number of vertices visited by one round.
    pub node_cap: u64,
    /// Conductance to infinity credited to each cut vertex for the lower
    /// bound. `None` uses the laws' a priori floor.
    pub floor: Option<f64>,
}

impl Default for BracketOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-3,
            max_depth: 60,
            stride: 5,
            node_cap: DEFAULT_NODE_CAP,
            floor: None,
        }
    }
}

impl BracketOptions {
    /// Deepest truncation of a subtree with `children` children that stays
    /// within the node cap.
    pub fn affordable_depth(&self, mu: f64, children: u32) -> u32 {
        let mut depth = 0;
        while depth < self.max_depth
            && expected_subtree_size(mu, children, depth + 1) <= self.node_cap as f64
        {
            depth += 1;
        }
        depth
    }
}

/// Lower and upper conductance of the subtree below `id`, truncated
/// `depth` levels down, without touching any memo store.
fn fold_truncated(gen: &Generator, id: NodeId, key: u32, children: u32, depth: u32, floor: f64) -> (f64, f64) {
    if depth == 0 {
        return (floor, f64::INFINITY);
    }
    let mut lo = 0.0;
    let mut hi = 0.0;
    for pos in 0..children {
        let c = gen.child(id, key, pos);
        let (clo, chi) = fold_truncated(gen, c.id, c.offspring_count, c.offspring_count, depth - 1, floor);
        lo += series(c.xi, clo);
        hi += series(c.xi, chi);
    }
    (lo, hi)
}

/// Brackets the conductance from `subtree_root` to infinity through its
/// descendants, deepening by `stride` until the relative width is within
/// `tolerance` or `max_depth` is reached.
pub fn conductance_bounds(
    tree: &LazyTree,
    subtree_root: NodeId,
    opts: &BracketOptions,
) -> Result<CondInterval, CondError> {
    let record = tree.record(subtree_root)?;
    let floor = opts.floor.unwrap_or_else(|| tree.laws().conductance_floor());
    let mu = tree.laws().offspring.mean();
    let stride = opts.stride.max(1);
    let mut depth = 0;
    let mut bracket = CondInterval {
        lower: floor,
        upper: f64::INFINITY,
        depth_used: 0,
        tolerance_met: false,
    };
    while depth < opts.max_depth {
        depth = (depth + stride).min(opts.max_depth);
        let estimated = expected_subtree_size(mu, record.offspring_count, depth);
        if estimated > opts.node_cap as f64 {
            return Err(TreeError::BudgetExceeded {
                estimated,
                cap: opts.node_cap,
            }
            .into());
        }
        let (lo, hi) = fold_truncated(
            tree.generator(),
            record.id,
            record.edge_key,
            record.offspring_count,
            depth,
            floor,
        );
        // With no positive floor the lower bound of a leafless tree is stuck
        // at zero; stop once the upper bound has settled.
        let stalled = lo == 0.0
            && bracket.upper.is_finite()
            && bracket.upper - hi <= opts.tolerance * hi;
        // Rayleigh: deeper truncations only tighten the bracket.
        bracket = CondInterval {
            lower: lo.max(bracket.lower),
            upper: hi.min(bracket.upper),
            depth_used: depth,
            tolerance_met: false,
        };
        if bracket.relative_width() <= opts.tolerance {
            bracket.tolerance_met = true;
            break;
        }
        if stalled {
            break;
        }
    }
    if opts.max_depth == 0 {
        bracket.tolerance_met = bracket.relative_width() <= opts.tolerance;
    }
    Ok(bracket)
}

/// Brackets for every subtree hanging off the root, in child order, with the
/// conductance of the connecting edge.
pub fn root_subtree_bounds(
    tree: &LazyTree,
    opts: &BracketOptions,
) -> Result<Vec<(f64, CondInterval)>, CondError> {
    tree.expand(tree.root())?
        .iter()
        .map(|&(child, xi)| Ok((xi, conductance_bounds(tree, child, opts)?)))
        .collect()
}

/// Probability that the walk started at the root-neighbor `w_j` never hits
/// the root: `C(T_j) / (xi_j + C(T_j))`, increasing in `C(T_j)`.
pub fn escape_probability(
    tree: &LazyTree,
    child_edge: usize,
    opts: &BracketOptions,
) -> Result<Interval, CondError> {
    let children = tree.expand(tree.root())?;
    let &(child, xi) = children.get(child_edge).ok_or_else(|| {
        CondError::MalformedTree(format!("root has no edge {child_edge}"))
    })?;
    let bracket = conductance_bounds(tree, child, opts)?;
    Ok(escape_from_bracket(xi, bracket.interval()))
}

pub fn escape_from_bracket(xi: f64, c: Interval) -> Interval {
    share(c, Interval::point(xi))
}

/// `P[escape direction = k]` bracket for one root neighbor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaInterval {
    pub lower: f64,
    pub upper: f64,
    /// Interval midpoints renormalized to sum to one.
    pub normalized_mid: f64,
}

impl ThetaInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `C(T*_k) / C(T)` for every root neighbor `k`, by monotone interval
/// arithmetic on the per-subtree brackets.
pub fn theta_distribution(
    tree: &LazyTree,
    opts: &BracketOptions,
) -> Result<Vec<ThetaInterval>, CondError> {
    let subtrees = root_subtree_bounds(tree, opts)?;
    let stars: Vec<Interval> = subtrees
        .iter()
        .map(|(xi, b)| b.interval().series(*xi))
        .collect();
    theta_from_stars(&stars)
}

pub fn theta_from_stars(stars: &[Interval]) -> Result<Vec<ThetaInterval>, CondError> {
    if stars.iter().all(|s| s.hi == 0.0) {
        return Err(CondError::DegenerateDenominator);
    }
    let raw: Vec<Interval> = (0..stars.len())
        .map(|k| {
            let rest: Interval = stars
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, s)| *s)
                .sum();
            share(stars[k], rest)
        })
        .collect();
    let total: f64 = raw.iter().map(Interval::mid).sum();
    Ok(raw
        .iter()
        .map(|p| ThetaInterval {
            lower: p.lo,
            upper: p.hi,
            normalized_mid: p.mid() / total,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{ConductanceLaw, ConductanceLawTable, OffspringLaw};
    use crate::tree::{new_tree, truncate_view, TreeMode};

    fn unit_tree(d: u32, mode: TreeMode) -> LazyTree {
        new_tree(
            mode,
            OffspringLaw::degenerate(d).unwrap(),
            ConductanceLawTable::constant(1.0).unwrap(),
            1,
        )
    }

    #[test]
    fn depth_one_binary() {
        let t = unit_tree(2, TreeMode::Plain);
        let v = truncate_view(&t, 1).unwrap();
        assert_eq!(effective_conductance_exact(&v, Boundary::Wired).unwrap(), 2.0);
        assert_eq!(effective_conductance_exact(&v, Boundary::Free).unwrap(), 0.0);
    }

    #[test]
    fn depth_two_binary_wired() {
        // children: C = 2 each, C* = (1 + 1/2)^-1 = 2/3, total 4/3
        let t = unit_tree(2, TreeMode::Plain);
        let v = truncate_view(&t, 2).unwrap();
        let c = effective_conductance_exact(&v, Boundary::Wired).unwrap();
        assert!((c - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn root_only_view() {
        let t = unit_tree(2, TreeMode::Plain);
        let v = truncate_view(&t, 0).unwrap();
        assert_eq!(effective_conductance_exact(&v, Boundary::Wired).unwrap(), f64::INFINITY);
        assert_eq!(effective_conductance_exact(&v, Boundary::Floor(0.5)).unwrap(), 0.5);
    }

    #[test]
    fn series_conventions() {
        assert_eq!(series(2.0, f64::INFINITY), 2.0);
        assert_eq!(series(2.0, 0.0), 0.0);
        assert!((series(1.0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn frontier_with_children_is_malformed() {
        let mut v = FiniteWeightedTree::from_parent_list(&[None, Some(0), Some(1)], &[0.0, 1.0, 1.0]).unwrap();
        let mut snap = v.to_snapshot();
        snap.nodes[1].frontier = true;
        v = FiniteWeightedTree::from_snapshot(&snap).unwrap();
        assert!(matches!(
            effective_conductance_exact(&v, Boundary::Wired),
            Err(CondError::MalformedTree(_))
        ));
    }

    #[test]
    fn binary_bracket_converges_to_one() {
        let t = unit_tree(2, TreeMode::Plain);
        let b = conductance_bounds(&t, t.root(), &BracketOptions { tolerance: 1e-6, ..Default::default() }).unwrap();
        assert!(b.tolerance_met);
        assert!(b.lower <= 1.0 && 1.0 <= b.upper && b.upper - b.lower <= 1e-6, "{b:?}");
    }

    #[test]
    fn bracket_without_floor_keeps_zero_lower() {
        let t = unit_tree(2, TreeMode::Plain);
        let opts = BracketOptions { floor: Some(0.0), max_depth: 10, ..Default::default() };
        let b = conductance_bounds(&t, t.root(), &opts).unwrap();
        assert_eq!(b.lower, 0.0);
        assert!(!b.tolerance_met);
        assert_eq!(b.depth_used, 10);
    }

    #[test]
    fn heavy_tail_stops_at_max_depth() {
        let t = new_tree(
            TreeMode::Plain,
            OffspringLaw::degenerate(2).unwrap(),
            ConductanceLawTable::new(ConductanceLaw::Pareto { alpha: 0.5, x_min: 1.0 }).unwrap(),
            4,
        );
        let opts = BracketOptions { tolerance: 1e-12, max_depth: 7, ..Default::default() };
        let b = conductance_bounds(&t, t.root(), &opts).unwrap();
        assert_eq!(b.depth_used, 7);
        assert!(!b.tolerance_met);
        assert!(b.lower <= b.upper);
    }

    #[test]
    fn bracket_budget() {
        let t = unit_tree(2, TreeMode::Plain);
        let opts = BracketOptions { tolerance: 0.0, node_cap: 1000, ..Default::default() };
        assert!(matches!(
            conductance_bounds(&t, t.root(), &opts),
            Err(CondError::Tree(TreeError::BudgetExceeded { .. }))
        ));
        assert_eq!(opts.affordable_depth(2.0, 2), 8);
    }

    #[test]
    fn escape_probability_of_unit_binary_subtree() {
        let t = unit_tree(2, TreeMode::Augmented);
        let eta = escape_probability(&t, 0, &BracketOptions { tolerance: 1e-6, ..Default::default() }).unwrap();
        assert!(eta.contains(0.5) && eta.half_width() < 1e-6, "{eta:?}");
    }

    #[test]
    fn escape_interval_is_monotone() {
        let eta = escape_from_bracket(1.0, Interval::new(0.0, 3.0));
        assert_eq!(eta, Interval::new(0.0, 0.75));
        let a = escape_from_bracket(2.0, Interval::new(1.0, 2.0));
        let b = escape_from_bracket(20.0, Interval::new(1.0, 2.0));
        assert!(b.lo < a.lo && b.hi < a.hi);
    }

    #[test]
    fn symmetric_theta() {
        let t = unit_tree(3, TreeMode::Augmented);
        let theta = theta_distribution(&t, &BracketOptions::default()).unwrap();
        assert_eq!(theta.len(), 4);
        for p in &theta {
            assert!(p.lower <= 0.25 && 0.25 <= p.upper);
            assert!((p.normalized_mid - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn heavier_edge_gets_more_mass() {
        let base = [Interval::new(0.9, 1.0); 3];
        let mut heavier = base;
        heavier[0] = Interval::new(0.95, 1.05);
        let a = theta_from_stars(&base).unwrap();
        let b = theta_from_stars(&heavier).unwrap();
        assert!(b[0].normalized_mid > a[0].normalized_mid);
    }

    #[test]
    fn degenerate_denominator() {
        assert_eq!(
            theta_from_stars(&[Interval::point(0.0); 2]),
            Err(CondError::DegenerateDenominator)
        );
    }
}
