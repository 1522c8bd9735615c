//! Dense linear-algebra oracles for finite weighted trees.
//!
//! These solve the electrical and Markov-chain problems directly as linear
//! systems, with no use of the tree structure, so they can check the
//! series/parallel recursion and the escape-direction formula.

use gwrc::conductance::Boundary;
use gwrc::walk::view_kernel;
use gwrc::FiniteWeightedTree;
use nalgebra::{DMatrix, DVector};

/// Effective conductance from the root to the frontier, from the harmonic
/// voltages of the Dirichlet problem: root held at 1, ground at 0.
///
/// `Wired` grounds frontier vertices directly, `Floor(c)` connects each of
/// them to ground through conductance `c`, `Free` leaves them open.
pub fn dirichlet_conductance(view: &FiniteWeightedTree, boundary: Boundary) -> f64 {
    let root = view.root();
    let ground_link = |x: usize| -> Option<f64> {
        if !view.node(x).frontier {
            return None;
        }
        match boundary {
            Boundary::Wired => Some(f64::INFINITY),
            Boundary::Free => None,
            Boundary::Floor(c) if c > 0.0 => Some(c),
            Boundary::Floor(_) => None,
        }
    };
    if ground_link(root) == Some(f64::INFINITY) {
        return f64::INFINITY;
    }
    // current leaving the root through its own ground link
    let root_leak = ground_link(root).unwrap_or(0.0);
    if (0..view.len()).all(|x| ground_link(x).is_none()) {
        return 0.0;
    }

    // unknown voltages: everything except the root and wired vertices
    let mut slot = vec![usize::MAX; view.len()];
    let mut unknowns = Vec::new();
    for x in 0..view.len() {
        if x != root && ground_link(x) != Some(f64::INFINITY) {
            slot[x] = unknowns.len();
            unknowns.push(x);
        }
    }
    let n = unknowns.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for (i, &x) in unknowns.iter().enumerate() {
        a[(i, i)] = view.pi(x) + ground_link(x).unwrap_or(0.0);
        for &(y, xi) in view.neighbors(x) {
            if y == root {
                b[i] += xi;
            } else if slot[y] != usize::MAX {
                a[(i, slot[y])] -= xi;
            }
        }
    }
    let v = if n == 0 {
        DVector::zeros(0)
    } else {
        a.lu().solve(&b).expect("grounded Laplacian is nonsingular")
    };
    let voltage = |y: usize| if slot[y] == usize::MAX { 0.0 } else { v[slot[y]] };
    root_leak
        + view
            .neighbors(root)
            .iter()
            .map(|&(y, xi)| xi * (1.0 - voltage(y)))
            .sum::<f64>()
}

/// For each root neighbor `k`, the probability that the walk from the root
/// is absorbed at the frontier inside the subtree of `k` (frontier vertices
/// absorbing, everything else transient).
pub fn absorption_by_subtree(view: &FiniteWeightedTree) -> Vec<f64> {
    let root = view.root();
    let branches: Vec<usize> = view.children(root).map(|(y, _)| y).collect();
    let mut branch_of = vec![usize::MAX; view.len()];
    for (k, &w) in branches.iter().enumerate() {
        let mut stack = vec![w];
        while let Some(x) = stack.pop() {
            branch_of[x] = k;
            stack.extend(view.children(x).map(|(y, _)| y));
        }
    }
    let mut slot = vec![usize::MAX; view.len()];
    let mut transient = Vec::new();
    for x in 0..view.len() {
        if !view.node(x).frontier {
            slot[x] = transient.len();
            transient.push(x);
        }
    }
    let n = transient.len();
    let mut a = DMatrix::<f64>::identity(n, n);
    let mut b = DMatrix::<f64>::zeros(n, branches.len());
    for (i, &x) in transient.iter().enumerate() {
        for (y, q) in view_kernel(view, x) {
            if slot[y] != usize::MAX {
                a[(i, slot[y])] -= q;
            } else {
                b[(i, branch_of[y])] += q;
            }
        }
    }
    let h = a.lu().solve(&b).expect("absorption is certain");
    (0..branches.len()).map(|k| h[(slot[root], k)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_in_series() {
        // root -2- a -5- frontier: 1/(1/2 + 1/5) = 10/7
        let v = FiniteWeightedTree::from_parent_list(&[None, Some(0), Some(1)], &[0.0, 2.0, 5.0]).unwrap();
        assert!((dirichlet_conductance(&v, Boundary::Wired) - 10.0 / 7.0).abs() < 1e-14);
        assert_eq!(dirichlet_conductance(&v, Boundary::Free), 0.0);
        // floor 5 acts like a third resistor in series
        let expected = 1.0 / (0.5 + 0.2 + 0.2);
        assert!((dirichlet_conductance(&v, Boundary::Floor(5.0)) - expected).abs() < 1e-14);
    }

    #[test]
    fn symmetric_star_absorption() {
        let v = FiniteWeightedTree::from_parent_list(&[None, Some(0), Some(0), Some(0)], &[0.0, 1.0, 1.0, 1.0]).unwrap();
        for p in absorption_by_subtree(&v) {
            assert!((p - 1.0 / 3.0).abs() < 1e-14);
        }
    }
}
