//! The conductance-biased random walk: from `x` it moves to a neighbor `y`
//! with probability `xi(x, y) / pi_x`, where `pi_x` is the total conductance
//! at `x`.

use std::io::{self, Write};

use rand::Rng;

use crate::seed::RandomStream;
use crate::tree::{LazyTree, NodeId, TreeError};
use crate::view::FiniteWeightedTree;

/// Index of the entry of `weights` selected by `u * total`, `u` uniform in
/// `[0, 1)`. Shared by the tree walk and the finite-view walk so both use one
/// selection rule.
#[inline]
pub fn select_weighted<I: IntoIterator<Item = f64>>(weights: I, total: f64, u: f64) -> usize {
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.into_iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
        if w > 0.0 {
            last = i;
        }
    }
    // rounding pushed the target past the final partial sum
    last
}

#[derive(Debug, Clone)]
pub struct WalkState {
    pub current: NodeId,
    pub step_count: u64,
    /// Graph distance from the root, `|X_n|`.
    pub distance: u32,
    /// Position of the root neighbor whose subtree holds the walk, `None` at
    /// the root.
    pub branch: Option<u32>,
    pub rng: RandomStream,
}

impl WalkState {
    pub fn at_root(tree: &LazyTree, rng: RandomStream) -> Self {
        Self {
            current: tree.root(),
            step_count: 0,
            distance: 0,
            branch: None,
            rng,
        }
    }
}

enum Move {
    Up(NodeId),
    Down(u32, NodeId),
}

/// One transition; children are expanded on demand.
pub fn step(tree: &LazyTree, state: &mut WalkState) -> Result<(), TreeError> {
    let u: f64 = state.rng.random();
    let mv = tree.with_expanded(state.current, |record, children| {
        let up = record.edge_to_parent.unwrap_or(0.0);
        let total = up + children.iter().map(|c| c.1).sum::<f64>();
        let weights = std::iter::once(up).chain(children.iter().map(|c| c.1));
        match select_weighted(weights, total, u) {
            0 if record.parent.is_some() => Move::Up(record.parent.expect("checked")),
            0 => Move::Down(0, children[0].0),
            i => Move::Down(i as u32 - 1, children[i - 1].0),
        }
    })?;
    match mv {
        Move::Up(parent) => {
            state.current = parent;
            state.distance -= 1;
            if state.distance == 0 {
                state.branch = None;
            }
        }
        Move::Down(pos, child) => {
            if state.distance == 0 {
                state.branch = Some(pos);
            }
            state.current = child;
            state.distance += 1;
        }
    }
    state.step_count += 1;
    Ok(())
}

/// When to record `(n, |X_n|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckpointSchedule {
    /// `n, 2n, 3n, ...`
    Every(u64),
    /// `n, 2n, 4n, ...`
    Geometric(u64),
}

impl Default for CheckpointSchedule {
    fn default() -> Self {
        CheckpointSchedule::Geometric(1000)
    }
}

impl CheckpointSchedule {
    /// Checkpoint steps up to and including `n_steps`.
    pub fn steps(&self, n_steps: u64) -> Vec<u64> {
        let mut out = Vec::new();
        match *self {
            CheckpointSchedule::Every(gap) => {
                let gap = gap.max(1);
                out.extend((1..=n_steps / gap).map(|i| i * gap));
            }
            CheckpointSchedule::Geometric(first) => {
                let mut n = first.max(1);
                while n < n_steps {
                    out.push(n);
                    n = n.saturating_mul(2);
                }
            }
        }
        if out.last() != Some(&n_steps) {
            out.push(n_steps);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Checkpoint {
    pub step: u64,
    pub distance: u32,
}

impl Checkpoint {
    pub fn ratio(&self) -> f64 {
        f64::from(self.distance) / self.step as f64
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub checkpoints: Vec<Checkpoint>,
    pub final_state: WalkState,
    pub first_step: Option<NodeId>,
}

impl Trajectory {
    pub fn final_ratio(&self) -> f64 {
        self.checkpoints.last().map_or(0.0, Checkpoint::ratio)
    }

    /// Root-neighbor subtree holding `X_n` at the end.
    pub fn final_branch(&self) -> Option<u32> {
        self.final_state.branch
    }
}

/// Walk of `n_steps` from the root.
pub fn run_trajectory(
    tree: &LazyTree,
    n_steps: u64,
    schedule: CheckpointSchedule,
    rng: RandomStream,
) -> Result<Trajectory, TreeError> {
    let mut state = WalkState::at_root(tree, rng);
    let marks = schedule.steps(n_steps);
    let mut checkpoints = Vec::with_capacity(marks.len());
    let mut first_step = None;
    for mark in marks {
        while state.step_count < mark {
            step(tree, &mut state)?;
            if state.step_count == 1 {
                first_step = Some(state.current);
            }
        }
        checkpoints.push(Checkpoint {
            step: mark,
            distance: state.distance,
        });
    }
    Ok(Trajectory {
        checkpoints,
        final_state: state,
        first_step,
    })
}

/// CSV rows `replica_id,step,distance,ratio`.
pub fn write_trajectories_csv<W: Write>(
    out: &mut W,
    trajectories: &[(u64, Trajectory)],
) -> io::Result<()> {
    writeln!(out, "replica_id,step,distance,ratio")?;
    for (replica, t) in trajectories {
        for c in &t.checkpoints {
            writeln!(out, "{replica},{},{},{}", c.step, c.distance, c.ratio())?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HittingTime {
    Reached(u64),
    /// Level not reached within the step cap.
    Capped,
}

impl HittingTime {
    pub fn steps(self) -> Option<u64> {
        match self {
            HittingTime::Reached(n) => Some(n),
            HittingTime::Capped => None,
        }
    }
}

/// First `n` with `|X_n| = level`.
pub fn hitting_time_level(
    tree: &LazyTree,
    level: u32,
    cap: u64,
    rng: RandomStream,
) -> Result<HittingTime, TreeError> {
    let mut state = WalkState::at_root(tree, rng);
    if level == 0 {
        return Ok(HittingTime::Reached(0));
    }
    while state.step_count < cap {
        step(tree, &mut state)?;
        if state.distance == level {
            return Ok(HittingTime::Reached(state.step_count));
        }
    }
    Ok(HittingTime::Capped)
}

/// Runs the walk until it first stands at distance `confirm_level` and
/// returns the root neighbor whose subtree it is in. As the level grows
/// this converges to the escape direction of the transient walk.
pub fn escape_direction(
    tree: &LazyTree,
    confirm_level: u32,
    rng: RandomStream,
) -> Result<u32, TreeError> {
    let mut state = WalkState::at_root(tree, rng);
    let level = confirm_level.max(1);
    loop {
        step(tree, &mut state)?;
        if state.distance == level {
            return Ok(state.branch.expect("away from the root"));
        }
    }
}

/// Transition probabilities out of vertex `x` of a finite view.
pub fn view_kernel(view: &FiniteWeightedTree, x: usize) -> Vec<(usize, f64)> {
    let pi = view.pi(x);
    view.neighbors(x).iter().map(|&(y, xi)| (y, xi / pi)).collect()
}

/// One transition on a finite view; frontier vertices reflect.
pub fn step_view(view: &FiniteWeightedTree, x: usize, rng: &mut RandomStream) -> usize {
    let u: f64 = rng.random();
    let nbrs = view.neighbors(x);
    let i = select_weighted(nbrs.iter().map(|n| n.1), view.pi(x), u);
    nbrs[i].0
}

/// Largest violation of `pi_x q(x,y) = xi(x,y) = pi_y q(y,x)` over all edges,
/// for the walk's own kernel.
pub fn reversibility_check(view: &FiniteWeightedTree) -> f64 {
    reversibility_defect(view, |x, y| {
        let xi = view
            .neighbors(x)
            .iter()
            .find(|n| n.0 == y)
            .map_or(0.0, |n| n.1);
        xi / view.pi(x)
    })
}

/// Same check for an arbitrary kernel `q(x, y)`.
pub fn reversibility_defect(view: &FiniteWeightedTree, q: impl Fn(usize, usize) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, b, xi) in view.edges() {
        let flow_ab = view.pi(a) * q(a, b);
        let flow_ba = view.pi(b) * q(b, a);
        worst = worst
            .max((flow_ab - xi).abs())
            .max((flow_ba - xi).abs())
            .max((flow_ab - flow_ba).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{ConductanceLawTable, OffspringLaw};
    use crate::seed::{label, stream};
    use crate::tree::{new_tree, truncate_view, TreeMode};

    fn unit_binary(mode: TreeMode) -> LazyTree {
        new_tree(
            mode,
            OffspringLaw::degenerate(2).unwrap(),
            ConductanceLawTable::constant(1.0).unwrap(),
            2,
        )
    }

    #[test]
    fn selection_matches_weights() {
        // star with weights (1, 2, 3)
        let w = [1.0, 2.0, 3.0];
        assert_eq!(select_weighted(w, 6.0, 0.0), 0);
        assert_eq!(select_weighted(w, 6.0, 1.0 / 6.0 - 1e-12), 0);
        assert_eq!(select_weighted(w, 6.0, 1.0 / 6.0 + 1e-12), 1);
        assert_eq!(select_weighted(w, 6.0, 0.5 + 1e-12), 2);
        assert_eq!(select_weighted(w, 6.0, 1.0), 2);
    }

    #[test]
    fn star_kernel() {
        let v = FiniteWeightedTree::from_parent_list(
            &[None, Some(0), Some(0), Some(0)],
            &[0.0, 1.0, 2.0, 3.0],
        )
        .unwrap();
        let q: Vec<f64> = view_kernel(&v, 0).iter().map(|p| p.1).collect();
        assert_eq!(q, vec![1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]);
    }

    #[test]
    fn equal_conductances_give_uniform_kernel() {
        let t = unit_binary(TreeMode::Augmented);
        let v = truncate_view(&t, 2).unwrap();
        for x in 0..v.len() {
            let q = view_kernel(&v, x);
            for (_, p) in &q {
                assert!((p - 1.0 / q.len() as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn first_step_leaves_root() {
        let t = unit_binary(TreeMode::Augmented);
        for r in 0..20 {
            let traj = run_trajectory(&t, 1, CheckpointSchedule::Every(1), stream(5, label::WALK, r)).unwrap();
            assert_eq!(traj.checkpoints, vec![Checkpoint { step: 1, distance: 1 }]);
            assert_eq!(traj.final_branch().map(|b| b < 3), Some(true));
            assert_eq!(traj.first_step, Some(traj.final_state.current));
        }
    }

    #[test]
    fn parity_and_unit_increments() {
        let law = OffspringLaw::new([(1, 0.5), (3, 0.5)]).unwrap();
        let t = new_tree(TreeMode::Augmented, law, ConductanceLawTable::constant(1.0).unwrap(), 8);
        let mut s = WalkState::at_root(&t, stream(1, label::WALK, 0));
        let mut last = 0i64;
        for n in 1..=5000u64 {
            step(&t, &mut s).unwrap();
            let d = i64::from(s.distance);
            assert_eq!((d - last).abs(), 1);
            assert_eq!(d as u64 % 2, n % 2);
            assert_eq!(t.record(s.current).unwrap().depth, s.distance);
            last = d;
        }
    }

    #[test]
    fn schedules() {
        assert_eq!(CheckpointSchedule::Geometric(10).steps(100), vec![10, 20, 40, 80, 100]);
        assert_eq!(CheckpointSchedule::Every(30).steps(100), vec![30, 60, 90, 100]);
        assert_eq!(CheckpointSchedule::Every(50).steps(100), vec![50, 100]);
    }

    #[test]
    fn hitting_level_one_and_cap() {
        let t = unit_binary(TreeMode::Augmented);
        let rng = || stream(3, label::WALK, 1);
        assert_eq!(hitting_time_level(&t, 1, 10, rng()).unwrap(), HittingTime::Reached(1));
        assert_eq!(hitting_time_level(&t, 20, 19, rng()).unwrap(), HittingTime::Capped);
    }

    #[test]
    fn confirm_level_one_is_first_step() {
        let t = unit_binary(TreeMode::Augmented);
        let children = t.expand(t.root()).unwrap();
        for r in 0..10 {
            let dir = escape_direction(&t, 1, stream(4, label::WALK, r)).unwrap();
            let traj = run_trajectory(&t, 1, CheckpointSchedule::Every(1), stream(4, label::WALK, r)).unwrap();
            assert_eq!(Some(children[dir as usize].0), traj.first_step);
        }
    }

    #[test]
    fn reversibility_on_hand_built_path() {
        let v = FiniteWeightedTree::from_parent_list(&[None, Some(0), Some(1)], &[0.0, 2.0, 5.0]).unwrap();
        assert_eq!(reversibility_check(&v), 0.0);
        // perturb q on one directed edge
        let perturbed = reversibility_defect(&v, |x, y| {
            let base = view_kernel(&v, x).into_iter().find(|p| p.0 == y).unwrap().1;
            if (x, y) == (1, 2) { base * 1.01 } else { base }
        });
        assert!(perturbed > 0.0);
    }

    #[test]
    fn csv_layout() {
        let t = unit_binary(TreeMode::Augmented);
        let traj = run_trajectory(&t, 4, CheckpointSchedule::Every(2), stream(1, label::WALK, 1)).unwrap();
        let mut buf = Vec::new();
        write_trajectories_csv(&mut buf, &[(7, traj)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "replica_id,step,distance,ratio");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("7,2,"));
    }
}
