//! Rate of escape `v = lim |X_n| / n`.
//!
//! Four routes to the same number:
//!
//! * direct simulation of walks on independent augmented trees;
//! * the conductance formula `v = 1 - (2/gamma) E[xi_0 C(T*_0) / C(T)]`
//!   over samples of the augmented tree, with `C` bracketed by
//!   [`conductance_bounds`];
//! * the covariance form `v = v_SRW - (2/gamma) Cov(xi_0, C(T*_0) / C(T))`
//!   on the same samples;
//! * the closed form `v_SRW = sum_k p_k (k - 1) / (k + 1)` for constant
//!   conductances.
//!
//! Every sample and replica draws from its own hash-derived stream and the
//! reductions run in index order, so results do not depend on the number of
//! worker threads.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conductance::{conductance_bounds, share, BracketOptions, CondError, Interval, effective_conductance_exact, Boundary};
use crate::laws::{ConductanceLaw, Mean, OffspringLaw};
use crate::seed::{label, stream, sub_seed};
use crate::stats;
use crate::tree::{truncate_view, LazyTree, TreeError, TreeLaws, TreeMode};
use crate::view::FiniteWeightedTree;
use crate::walk::{hitting_time_level, run_trajectory, CheckpointSchedule, HittingTime};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpeedError {
    #[error("gamma is infinite: the conductance formula does not apply")]
    InfiniteGamma,
    #[error("conductance means differ across index pairs: {0}")]
    UnequalMeans(String),
    #[error("conductance law is degenerate")]
    DegenerateLaw,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Conductance(#[from] CondError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Formula,
    Covariance,
    SrwClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedEstimate {
    pub method: Method,
    pub point: f64,
    /// 95% unless configured otherwise.
    pub ci_halfwidth: f64,
    pub replicas: u64,
    pub steps_or_samples: u64,
    pub diagnostics: BTreeMap<String, f64>,
}

impl SpeedEstimate {
    pub fn lower(&self) -> f64 {
        self.point - self.ci_halfwidth
    }

    pub fn upper(&self) -> f64 {
        self.point + self.ci_halfwidth
    }

    /// Whether the two estimates overlap within their combined half-widths.
    pub fn agrees_with(&self, other: &SpeedEstimate) -> bool {
        (self.point - other.point).abs()
            <= stats::quadrature(self.ci_halfwidth, other.ci_halfwidth)
    }
}

/// Speed of simple random walk on the Galton–Watson tree.
pub fn srw_speed(offspring: &OffspringLaw) -> f64 {
    offspring
        .atoms()
        .iter()
        .map(|&(k, p)| p * f64::from(k - 1) / f64::from(k + 1))
        .sum()
}

pub fn srw_estimate(offspring: &OffspringLaw) -> SpeedEstimate {
    SpeedEstimate {
        method: Method::SrwClosedForm,
        point: srw_speed(offspring),
        ci_halfwidth: 0.0,
        replicas: 0,
        steps_or_samples: 0,
        diagnostics: BTreeMap::new(),
    }
}

fn finite_gamma(laws: &TreeLaws) -> Result<f64, SpeedError> {
    laws.gamma().finite().ok_or(SpeedError::InfiniteGamma)
}

// ---------------------------------------------------------------- direct

#[derive(Debug, Clone)]
pub struct DirectConfig {
    pub laws: Arc<TreeLaws>,
    pub n_steps: u64,
    pub replicas: u64,
    pub seed: u64,
    pub mode: TreeMode,
    pub schedule: CheckpointSchedule,
    pub level: f64,
}

impl DirectConfig {
    pub fn new(laws: Arc<TreeLaws>, seed: u64) -> Self {
        Self {
            laws,
            n_steps: 100_000,
            replicas: 200,
            seed,
            mode: TreeMode::Augmented,
            schedule: CheckpointSchedule::default(),
            level: 0.95,
        }
    }
}

/// Mean of `|X_n| / n` across replicas at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub step: u64,
    pub mean_ratio: f64,
    pub ci_halfwidth: f64,
}

#[derive(Debug, Clone)]
pub struct DirectOutcome {
    pub estimate: SpeedEstimate,
    pub curve: Vec<CurvePoint>,
    /// `(step, distance)` checkpoints per replica, in replica order.
    pub replica_checkpoints: Vec<Vec<(u64, u32)>>,
}

/// `R` independent trees, one walk of `n` steps on each.
pub fn direct_speed(config: &DirectConfig) -> Result<DirectOutcome, SpeedError> {
    if config.n_steps == 0 || config.replicas == 0 {
        return Err(SpeedError::InvalidConfig("n_steps and replicas must be >= 1".into()));
    }
    let runs: Vec<(Vec<(u64, u32)>, usize)> = (0..config.replicas)
        .into_par_iter()
        .map(|r| {
            let tree = LazyTree::new(
                config.mode,
                config.laws.clone(),
                sub_seed(config.seed, label::TREE, r),
            );
            let traj = run_trajectory(
                &tree,
                config.n_steps,
                config.schedule,
                stream(config.seed, label::WALK, r),
            )?;
            let marks = traj.checkpoints.iter().map(|c| (c.step, c.distance)).collect();
            Ok((marks, tree.materialized()))
        })
        .collect::<Result<_, TreeError>>()?;

    let steps: Vec<u64> = runs[0].0.iter().map(|c| c.0).collect();
    let z = stats::z(config.level);
    let curve: Vec<CurvePoint> = steps
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let ratios: Vec<f64> = runs.iter().map(|r| f64::from(r.0[i].1) / n as f64).collect();
            CurvePoint {
                step: n,
                mean_ratio: stats::mean(&ratios),
                ci_halfwidth: z * stats::standard_error(&ratios),
            }
        })
        .collect();
    let last = *curve.last().expect("at least one checkpoint");
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert(
        "mean_vertices_materialized".to_string(),
        runs.iter().map(|r| r.1 as f64).sum::<f64>() / runs.len() as f64,
    );
    if let Mean::Finite(g) = config.laws.gamma() {
        diagnostics.insert("gamma".to_string(), g);
    }
    Ok(DirectOutcome {
        estimate: SpeedEstimate {
            method: Method::Direct,
            point: last.mean_ratio,
            ci_halfwidth: last.ci_halfwidth,
            replicas: config.replicas,
            steps_or_samples: config.n_steps,
            diagnostics,
        },
        curve,
        replica_checkpoints: runs.into_iter().map(|r| r.0).collect(),
    })
}

/// Hitting times of `level` on `replicas` independent trees.
pub fn hitting_times(
    laws: &Arc<TreeLaws>,
    level: u32,
    cap: u64,
    replicas: u64,
    seed: u64,
) -> Result<Vec<HittingTime>, SpeedError> {
    Ok((0..replicas)
        .into_par_iter()
        .map(|r| {
            let tree = LazyTree::new(TreeMode::Augmented, laws.clone(), sub_seed(seed, label::TREE, r));
            hitting_time_level(&tree, level, cap, stream(seed, label::WALK, r))
        })
        .collect::<Result<_, TreeError>>()?)
}

/// Median of hitting times with capped runs counted as `+inf`.
pub fn censored_median(times: &[HittingTime]) -> f64 {
    let mut xs: Vec<f64> = times
        .iter()
        .map(|t| t.steps().map_or(f64::INFINITY, |n| n as f64))
        .collect();
    stats::median(&mut xs)
}

// ---------------------------------------------------------------- formula

#[derive(Debug, Clone)]
pub struct FormulaConfig {
    pub laws: Arc<TreeLaws>,
    pub samples: u64,
    pub seed: u64,
    pub bracket: BracketOptions,
    pub batches: usize,
    pub level: f64,
    /// Average over the law of `xi_0` given the rest of the sample, exactly
    /// for discrete laws. Keeps rare large conductances from dominating the
    /// variance.
    pub integrate_xi0: bool,
}

impl FormulaConfig {
    pub fn new(laws: Arc<TreeLaws>, seed: u64) -> Self {
        Self {
            laws,
            samples: 50_000,
            seed,
            // one level at a time: overshooting the needed depth costs a
            // factor of mu per extra level
            bracket: BracketOptions {
                stride: 1,
                ..BracketOptions::default()
            },
            batches: 50,
            level: 0.95,
            integrate_xi0: true,
        }
    }
}

/// One augmented tree seen through the conductances of its root subtrees.
#[derive(Debug, Clone, PartialEq)]
pub struct FormulaSample {
    /// Index of the root.
    pub k: u32,
    /// Index of the distinguished neighbor `w_0`.
    pub m0: u32,
    pub xi0: f64,
    pub c_t0_star: Interval,
    pub c_total: Interval,
    /// `C(T*_0) / C(T)`.
    pub ratio: Interval,
    /// `xi_0 C(T*_0) / C(T)`.
    pub ratio_term: Interval,
    /// `pi_o / (k + 1)`.
    pub weight: f64,
    /// `E[xi_0 C(T*_0)/C(T) | rest]`, or `ratio_term` if not integrating.
    pub cond_term: Interval,
    /// `E[C(T*_0)/C(T) | rest]`, or `ratio`.
    pub cond_ratio: Interval,
    /// `E[xi_0 | k, m0]`, or `xi0`.
    pub cond_xi: f64,
    /// `(1/(k+1)) sum_i xi_i C(T*_i) / C(T)`.
    pub symmetrized: Interval,
    /// Largest relative width among the subtree brackets.
    pub max_relative_width: f64,
    pub all_tolerances_met: bool,
}

/// Draws the `index`-th augmented tree of the stream and brackets every
/// quantity the estimators need.
pub fn formula_sample(
    laws: &Arc<TreeLaws>,
    seed: u64,
    index: u64,
    bracket: &BracketOptions,
    integrate_xi0: bool,
) -> Result<FormulaSample, SpeedError> {
    let tree = LazyTree::new(TreeMode::Augmented, laws.clone(), sub_seed(seed, label::SAMPLE, index));
    let root = tree.root_record();
    let k = root.index;
    let children = tree.expand(root.id)?;
    let mu = laws.offspring.mean();

    let mut subtree = Vec::with_capacity(children.len());
    let mut max_relative_width: f64 = 0.0;
    let mut all_tolerances_met = true;
    for &(child, xi) in children.iter() {
        let record = tree.record(child)?;
        let opts = BracketOptions {
            max_depth: bracket.affordable_depth(mu, record.offspring_count),
            ..*bracket
        };
        let b = conductance_bounds(&tree, child, &opts)?;
        max_relative_width = max_relative_width.max(b.relative_width());
        all_tolerances_met &= b.tolerance_met;
        subtree.push((xi, record.index, b.interval()));
    }
    let stars: Vec<Interval> = subtree.iter().map(|(xi, _, c)| c.series(*xi)).collect();
    let c_total: Interval = stars.iter().copied().sum();
    let rest_of = |j: usize| -> Interval {
        stars
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, s)| *s)
            .sum()
    };
    let rest0 = rest_of(0);
    let (xi0, m0, c0) = subtree[0];
    let ratio = share(stars[0], rest0);
    let ratio_term = ratio.scale(xi0);

    let law0 = laws.table.law(k, m0);
    let atoms = if integrate_xi0 { law0.atoms() } else { None };
    let (cond_term, cond_ratio, cond_xi) = match atoms {
        Some(atoms) => {
            let mut term = Interval::point(0.0);
            let mut rat = Interval::point(0.0);
            let mut mean = 0.0;
            for (x, p) in atoms {
                let r = share(c0.series(x), rest0);
                term = term + r.scale(p * x);
                rat = rat + r.scale(p);
                mean += p * x;
            }
            (term, rat, mean)
        }
        None => (ratio_term, ratio, xi0),
    };

    let symmetrized = (0..stars.len())
        .map(|i| share(stars[i], rest_of(i)).scale(subtree[i].0))
        .sum::<Interval>()
        .scale(1.0 / f64::from(k + 1));
    let pi: f64 = subtree.iter().map(|s| s.0).sum();

    Ok(FormulaSample {
        k,
        m0,
        xi0,
        c_t0_star: stars[0],
        c_total,
        ratio,
        ratio_term,
        weight: pi / f64::from(k + 1),
        cond_term,
        cond_ratio,
        cond_xi,
        symmetrized,
        max_relative_width,
        all_tolerances_met,
    })
}

/// The shared sample stream behind the formula and covariance estimators.
#[derive(Debug, Clone)]
pub struct FormulaRun {
    pub gamma: f64,
    pub v_srw: f64,
    pub samples: Vec<FormulaSample>,
    pub batches: usize,
    pub level: f64,
}

pub fn formula_run(config: &FormulaConfig) -> Result<FormulaRun, SpeedError> {
    let gamma = finite_gamma(&config.laws)?;
    if config.samples < 2 {
        return Err(SpeedError::InvalidConfig("need at least 2 samples".into()));
    }
    let samples = (0..config.samples)
        .into_par_iter()
        .map(|i| formula_sample(&config.laws, config.seed, i, &config.bracket, config.integrate_xi0))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FormulaRun {
        gamma,
        v_srw: srw_speed(&config.laws.offspring),
        samples,
        batches: config.batches,
        level: config.level,
    })
}

/// Covariance of `xi_0` and `C(T*_0)/C(T)` with its half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceEstimate {
    pub covariance: f64,
    pub ci_halfwidth: f64,
}

impl CovarianceEstimate {
    pub fn lower(&self) -> f64 {
        self.covariance - self.ci_halfwidth
    }
}

impl FormulaRun {
    fn column(&self, f: impl Fn(&FormulaSample) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }

    fn base_diagnostics(&self) -> BTreeMap<String, f64> {
        let n = self.samples.len() as f64;
        let mut d = BTreeMap::new();
        d.insert("gamma".into(), self.gamma);
        d.insert("v_srw".into(), self.v_srw);
        d.insert("mean_ratio".into(), stats::mean(&self.column(|s| s.ratio.mid())));
        d.insert("mean_root_weight".into(), stats::mean(&self.column(|s| s.weight)));
        d.insert(
            "mean_ratio_interval_width".into(),
            stats::mean(&self.column(|s| s.ratio.hi - s.ratio.lo)),
        );
        d.insert(
            "max_relative_bracket_width".into(),
            self.samples.iter().map(|s| s.max_relative_width).fold(0.0, f64::max),
        );
        d.insert(
            "fraction_tolerance_met".into(),
            self.samples.iter().filter(|s| s.all_tolerances_met).count() as f64 / n,
        );
        d
    }

    /// `v = 1 - (2/gamma) E[xi_0 C(T*_0)/C(T)]`; the half-width adds the
    /// Monte Carlo part and the mean bracket half-width in quadrature.
    pub fn formula_estimate(&self) -> SpeedEstimate {
        let scale = 2.0 / self.gamma;
        let terms = self.column(|s| s.cond_term.mid());
        let mc = scale * stats::batch_means_halfwidth(&terms, self.batches, self.level);
        let bracket = scale * stats::mean(&self.column(|s| s.cond_term.half_width()));
        let mut diagnostics = self.base_diagnostics();
        diagnostics.insert("mc_halfwidth".into(), mc);
        diagnostics.insert("bracket_halfwidth".into(), bracket);
        let sym = self.symmetrized_estimate();
        diagnostics.insert("symmetrized_point".into(), sym.0);
        diagnostics.insert("symmetrized_ci_halfwidth".into(), sym.1);
        let cov = self.covariance();
        diagnostics.insert("covariance".into(), cov.covariance);
        diagnostics.insert("covariance_ci_halfwidth".into(), cov.ci_halfwidth);
        SpeedEstimate {
            method: Method::Formula,
            point: 1.0 - scale * stats::mean(&terms),
            ci_halfwidth: stats::quadrature(mc, bracket),
            replicas: 1,
            steps_or_samples: self.samples.len() as u64,
            diagnostics,
        }
    }

    /// Variant averaging `xi_i C(T*_i)/C(T)` over all root edges.
    pub fn symmetrized_estimate(&self) -> (f64, f64) {
        let scale = 2.0 / self.gamma;
        let terms = self.column(|s| s.symmetrized.mid());
        let mc = scale * stats::batch_means_halfwidth(&terms, self.batches, self.level);
        let bracket = scale * stats::mean(&self.column(|s| s.symmetrized.half_width()));
        (1.0 - scale * stats::mean(&terms), stats::quadrature(mc, bracket))
    }

    pub fn covariance(&self) -> CovarianceEstimate {
        let a = self.column(|s| s.cond_term.mid());
        let b = self.column(|s| s.cond_ratio.mid());
        let x = self.column(|s| s.cond_xi);
        let (ma, mb, mx) = (stats::mean(&a), stats::mean(&b), stats::mean(&x));
        // influence function of mean(a) - mean(x) mean(b)
        let psi: Vec<f64> = (0..a.len()).map(|i| a[i] - mx * b[i] - mb * x[i]).collect();
        let mc = stats::batch_means_halfwidth(&psi, self.batches, self.level);
        let bracket = stats::mean(&self.column(|s| s.cond_term.half_width()))
            + mx * stats::mean(&self.column(|s| s.cond_ratio.half_width()));
        CovarianceEstimate {
            covariance: ma - mx * mb,
            ci_halfwidth: stats::quadrature(mc, bracket),
        }
    }

    /// `v = v_SRW - (2/gamma) Cov(xi_0, C(T*_0)/C(T))`.
    pub fn covariance_estimate(&self) -> SpeedEstimate {
        let scale = 2.0 / self.gamma;
        let cov = self.covariance();
        let mut diagnostics = self.base_diagnostics();
        diagnostics.insert("covariance".into(), cov.covariance);
        diagnostics.insert("covariance_ci_halfwidth".into(), cov.ci_halfwidth);
        SpeedEstimate {
            method: Method::Covariance,
            point: self.v_srw - scale * cov.covariance,
            ci_halfwidth: scale * cov.ci_halfwidth,
            replicas: 1,
            steps_or_samples: self.samples.len() as u64,
            diagnostics,
        }
    }

    /// Mean of `C(T*_0)/C(T)` among samples whose root has index `k`:
    /// `k -> (mean, standard error, count)`.
    pub fn mean_ratio_by_index(&self) -> BTreeMap<u32, (f64, f64, usize)> {
        let mut groups: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for s in &self.samples {
            groups.entry(s.k).or_default().push(s.ratio.mid());
        }
        groups
            .into_iter()
            .map(|(k, xs)| (k, (stats::mean(&xs), stats::standard_error(&xs), xs.len())))
            .collect()
    }
}

pub fn formula_speed(config: &FormulaConfig) -> Result<SpeedEstimate, SpeedError> {
    Ok(formula_run(config)?.formula_estimate())
}

pub fn covariance_speed(config: &FormulaConfig) -> Result<SpeedEstimate, SpeedError> {
    Ok(formula_run(config)?.covariance_estimate())
}

// ---------------------------------------------------------------- slowdown

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Slowdown,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlowdownReport {
    pub v_srw: f64,
    pub formula: SpeedEstimate,
    pub covariance: CovarianceEstimate,
    pub covariance_speed: SpeedEstimate,
    pub verdict: Verdict,
    /// Samples that would likely settle an inconclusive run.
    pub suggested_samples: Option<u64>,
}

/// Common mean of the laws reachable under the offspring law, or the
/// reason the comparison hypothesis fails.
pub fn equal_mean_check(laws: &TreeLaws) -> Result<f64, SpeedError> {
    let mut common: Option<f64> = None;
    let mut all_degenerate = true;
    for (k, m, law) in laws.table.laws_on_support(&laws.offspring) {
        let mean = law
            .mean()
            .finite()
            .ok_or(SpeedError::InfiniteGamma)?;
        match common {
            None => common = Some(mean),
            Some(c) if (c - mean).abs() > 1e-12 * c.abs().max(1.0) => {
                return Err(SpeedError::UnequalMeans(format!(
                    "gamma_({k},{m}) = {mean} but another pair has {c}"
                )))
            }
            Some(_) => {}
        }
        all_degenerate &= law.is_degenerate();
    }
    if all_degenerate {
        return Err(SpeedError::DegenerateLaw);
    }
    Ok(common.expect("offspring support is not empty"))
}

/// Tests `v < v_SRW` for an equal-mean, nondegenerate conductance table.
pub fn slowdown_test(config: &FormulaConfig) -> Result<SlowdownReport, SpeedError> {
    equal_mean_check(&config.laws)?;
    let run = formula_run(config)?;
    let formula = run.formula_estimate();
    let covariance = run.covariance();
    let covariance_speed = run.covariance_estimate();
    let verdict = if formula.upper() < run.v_srw {
        Verdict::Slowdown
    } else {
        Verdict::Inconclusive
    };
    let suggested_samples = match verdict {
        Verdict::Slowdown => None,
        Verdict::Inconclusive => {
            let gap = run.v_srw - formula.point;
            (gap > 0.0).then(|| {
                let shrink = formula.ci_halfwidth / gap;
                (config.samples as f64 * shrink * shrink * 1.5).ceil() as u64
            })
        }
    };
    Ok(SlowdownReport {
        v_srw: run.v_srw,
        formula,
        covariance,
        covariance_speed,
        verdict,
        suggested_samples,
    })
}

// ---------------------------------------------------------------- binary-tree example

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ex1Row {
    pub eps: f64,
    pub a: f64,
    pub eta: f64,
    pub v_hat: f64,
    pub ci: f64,
    /// Limit speed `1 / (3 (eta + 1))`.
    pub reference: f64,
    pub direct: Option<SpeedEstimate>,
}

/// Binary tree with conductance `1` w.p. `1 - eps` and `a` w.p. `eps`, for
/// each `(eps, a)` pair. `template` supplies sample counts, seed and
/// bracket options; its laws are replaced.
pub fn ex1_curve(
    pairs: &[(f64, f64)],
    template: &FormulaConfig,
    direct: Option<&DirectConfig>,
) -> Result<Vec<Ex1Row>, SpeedError> {
    pairs
        .iter()
        .map(|&(eps, a)| {
            let laws = Arc::new(ex1_laws(eps, a)?);
            let config = FormulaConfig {
                laws: laws.clone(),
                ..template.clone()
            };
            let est = formula_speed(&config)?;
            let direct = direct
                .map(|d| {
                    direct_speed(&DirectConfig {
                        laws: laws.clone(),
                        ..d.clone()
                    })
                })
                .transpose()?
                .map(|o| o.estimate);
            let eta = eps * a;
            Ok(Ex1Row {
                eps,
                a,
                eta,
                v_hat: est.point,
                ci: est.ci_halfwidth,
                reference: 1.0 / (3.0 * (eta + 1.0)),
                direct,
            })
        })
        .collect()
}

pub fn ex1_laws(eps: f64, a: f64) -> Result<TreeLaws, SpeedError> {
    let offspring = OffspringLaw::degenerate(2).map_err(|e| SpeedError::InvalidConfig(e.to_string()))?;
    let table = crate::laws::ConductanceLawTable::new(ConductanceLaw::TwoPoint { v1: 1.0, v2: a, p2: eps })
        .map_err(|e| SpeedError::InvalidConfig(e.to_string()))?;
    Ok(TreeLaws::new(offspring, table))
}

// ---------------------------------------------------------------- stationarity

/// Functions of a rooted weighted tree used to probe stationarity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    One,
    RootIndex,
    RootPi,
    /// Midpoint of the wired/floor bracket on the conductance from the root,
    /// truncated `depth` levels away.
    ConductanceMidpoint { depth: u32 },
}

impl Probe {
    fn reach(self) -> u32 {
        match self {
            Probe::One | Probe::RootIndex => 0,
            Probe::RootPi => 1,
            Probe::ConductanceMidpoint { depth } => depth,
        }
    }

    fn eval(self, view: &FiniteWeightedTree, x: usize, floor: f64) -> Result<f64, CondError> {
        Ok(match self {
            Probe::One => 1.0,
            Probe::RootIndex => f64::from(view.node(x).index),
            Probe::RootPi => view.pi(x),
            Probe::ConductanceMidpoint { depth } => {
                let local = view.reroot(view.node(x).id)?.restrict(depth);
                let hi = effective_conductance_exact(&local, Boundary::Wired)?;
                let lo = effective_conductance_exact(&local, Boundary::Floor(floor))?;
                0.5 * (lo + hi)
            }
        })
    }
}

/// Weight applied to the root edge `xi_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeWeight {
    One,
    /// `min(xi_0, cap)`.
    Clipped { cap: f64 },
}

impl EdgeWeight {
    fn eval(self, xi0: f64) -> f64 {
        match self {
            EdgeWeight::One => 1.0,
            EdgeWeight::Clipped { cap } => xi0.min(cap),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbePair {
    pub f: Probe,
    pub g: Probe,
    pub u: EdgeWeight,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDifference {
    pub pair: ProbePair,
    pub mean_difference: f64,
    pub ci_halfwidth: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityReport {
    pub samples: u64,
    pub level: f64,
    pub pairs: Vec<PairDifference>,
    pub pass: bool,
}

/// The default battery: every pair of distinct probes among root index,
/// depth-5 conductance midpoint and root `pi`, with `u = 1` and `u = xi_0`
/// clipped at the 0.99 quantile of the default conductance law.
pub fn default_probe_pairs(laws: &TreeLaws) -> Vec<ProbePair> {
    let probes = [
        Probe::RootIndex,
        Probe::ConductanceMidpoint { depth: 5 },
        Probe::RootPi,
    ];
    let cap = laws.table.default_law().quantile(0.99);
    let mut pairs = Vec::new();
    for u in [EdgeWeight::One, EdgeWeight::Clipped { cap }] {
        for i in 0..probes.len() {
            for j in i + 1..probes.len() {
                pairs.push(ProbePair { f: probes[i], g: probes[j], u });
            }
        }
    }
    pairs
}

/// Paired Monte Carlo check of
/// `E[f(T,o) g(T,w_0) u(xi_0)] = E[g(T,o) f(T,w_0) u(xi_0)]` under the
/// augmented-tree law: both orderings are evaluated on the same sample.
pub fn stationarity_check(
    laws: &Arc<TreeLaws>,
    pairs: &[ProbePair],
    samples: u64,
    seed: u64,
    level: f64,
) -> Result<StationarityReport, SpeedError> {
    if samples < 2 {
        return Err(SpeedError::InvalidConfig("need at least 2 samples".into()));
    }
    let reach = pairs
        .iter()
        .map(|p| p.f.reach().max(p.g.reach()))
        .max()
        .unwrap_or(0);
    let floor = laws.conductance_floor();
    let diffs: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let tree = LazyTree::new(TreeMode::Augmented, laws.clone(), sub_seed(seed, label::SAMPLE, i));
            // everything within `reach` of w_0 lies within `reach + 1` of o
            let view = truncate_view(&tree, reach + 1)?;
            let o = view.root();
            let (w0, xi0) = view.children(o).next().expect("root has neighbors");
            pairs
                .iter()
                .map(|p| {
                    let u = p.u.eval(xi0);
                    let lhs = p.f.eval(&view, o, floor)? * p.g.eval(&view, w0, floor)?;
                    let rhs = p.g.eval(&view, o, floor)? * p.f.eval(&view, w0, floor)?;
                    Ok(u * (lhs - rhs))
                })
                .collect::<Result<Vec<f64>, CondError>>()
                .map_err(SpeedError::from)
        })
        .collect::<Result<_, SpeedError>>()?;
    let z = stats::z(level);
    let results: Vec<PairDifference> = pairs
        .iter()
        .enumerate()
        .map(|(j, &pair)| {
            let column: Vec<f64> = diffs.iter().map(|d| d[j]).collect();
            let mean = stats::mean(&column);
            let half = z * stats::standard_error(&column);
            PairDifference {
                pair,
                mean_difference: mean,
                ci_halfwidth: half,
                pass: mean.abs() <= half || (mean == 0.0 && half == 0.0),
            }
        })
        .collect();
    Ok(StationarityReport {
        samples,
        level,
        pass: results.iter().all(|r| r.pass),
        pairs: results,
    })
}

// ---------------------------------------------------------------- root weight

/// `m = pi_o / (index(o) + 1)`, the mean conductance at the root.
pub fn root_weight(tree: &LazyTree) -> Result<f64, TreeError> {
    tree.with_expanded(tree.root(), |record, children| {
        let pi = record.edge_to_parent.unwrap_or(0.0) + children.iter().map(|c| c.1).sum::<f64>();
        pi / f64::from(record.index + 1)
    })
}

/// Root weights of `samples` independent augmented trees.
pub fn root_weights(laws: &Arc<TreeLaws>, samples: u64, seed: u64) -> Result<Vec<f64>, TreeError> {
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let tree = LazyTree::new(TreeMode::Augmented, laws.clone(), sub_seed(seed, label::SAMPLE, i));
            root_weight(&tree)
        })
        .collect()
}
