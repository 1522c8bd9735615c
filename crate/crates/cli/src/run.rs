//! Dispatch from a validated configuration to the estimators and checks.

use std::fmt::Write as _;

use gwrc::conductance::{
    conductance_bounds, effective_conductance_exact, theta_distribution, Boundary, BracketOptions,
};
use gwrc::seed::{label, stream, sub_seed};
use gwrc::speed::{
    default_probe_pairs, direct_speed, ex1_curve, formula_run, slowdown_test, srw_speed,
    stationarity_check, DirectConfig, FormulaConfig, SpeedEstimate, Verdict,
};
use gwrc::tree::{truncate_view_capped, LazyTree, NodeId, DEFAULT_NODE_CAP};
use gwrc::walk::{escape_direction, reversibility_check, CheckpointSchedule};
use gwrc::FiniteWeightedTree;
use gwrc_oracle::dirichlet_conductance;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Format, Method};
use crate::error::CliError;
use crate::SCHEMA;

/// Confidence level of the stationarity check.
pub const STATIONARITY_LEVEL: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// The run finished but its verdict is not affirmative.
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Inconclusive => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub body: String,
    pub status: Status,
}

struct Envelope<'a> {
    cfg: &'a ExperimentConfig,
    hash: String,
}

impl Envelope<'_> {
    fn json(&self, result: Value) -> String {
        let mut map = Map::new();
        map.insert("schema".into(), json!(SCHEMA));
        map.insert("command".into(), json!(self.cfg.method.name()));
        map.insert("config_hash".into(), json!(self.hash));
        map.insert("seed".into(), json!(self.cfg.seed));
        map.insert("config".into(), serde_json::to_value(self.cfg.effective()).expect("serializable"));
        if let Value::Object(fields) = result {
            map.extend(fields);
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("serializable");
        s.push('\n');
        s
    }

    /// Fixed-column CSV with `config_hash` and `seed` appended to each row.
    fn csv(&self, header: &str, rows: impl IntoIterator<Item = String>) -> String {
        let mut s = format!("{header},config_hash,seed\n");
        for row in rows {
            let _ = writeln!(s, "{row},{},{}", self.hash, self.cfg.seed);
        }
        s
    }

    /// Consolidated row per estimate: `method,point,ci,replicas`.
    fn estimates_csv(&self, estimates: &[(&str, &SpeedEstimate)]) -> String {
        let mut s = String::from("config_hash,method,point,ci,replicas,seed\n");
        for (name, e) in estimates {
            let _ = writeln!(
                s,
                "{},{name},{},{},{},{}",
                self.hash, e.point, e.ci_halfwidth, e.replicas, self.cfg.seed
            );
        }
        s
    }
}

fn value(x: impl Serialize) -> Value {
    serde_json::to_value(x).expect("serializable")
}

pub fn bracket_options(cfg: &ExperimentConfig) -> BracketOptions {
    BracketOptions {
        tolerance: cfg.tolerance,
        max_depth: cfg.max_depth,
        ..BracketOptions::default()
    }
}

pub fn formula_config(cfg: &ExperimentConfig) -> FormulaConfig {
    let base = FormulaConfig::new(cfg.laws.clone(), cfg.seed);
    FormulaConfig {
        samples: cfg.samples,
        bracket: BracketOptions {
            tolerance: cfg.tolerance,
            max_depth: cfg.max_depth,
            ..base.bracket
        },
        ..base
    }
}

pub fn direct_config(cfg: &ExperimentConfig) -> DirectConfig {
    DirectConfig {
        n_steps: cfg.n_steps,
        replicas: cfg.replicas,
        mode: cfg.mode,
        schedule: cfg
            .checkpoint_every
            .map_or_else(CheckpointSchedule::default, CheckpointSchedule::Every),
        ..DirectConfig::new(cfg.laws.clone(), cfg.seed)
    }
}

fn tree(cfg: &ExperimentConfig) -> LazyTree {
    LazyTree::new(cfg.mode, cfg.laws.clone(), cfg.seed)
}

/// Follows child positions from the root.
fn resolve_path(tree: &LazyTree, path: &[u32]) -> Result<NodeId, CliError> {
    let mut node = tree.root();
    for (depth, &pos) in path.iter().enumerate() {
        let children = tree.expand(node)?;
        node = children.get(pos as usize).map(|c| c.0).ok_or_else(|| {
            CliError::InvalidConfig(format!(
                "path[{depth}] = {pos} but the vertex has {} children",
                children.len()
            ))
        })?;
    }
    Ok(node)
}

/// Runs the configured method and renders its output in the configured
/// format. Results depend only on the configuration and seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let env = Envelope { cfg, hash: cfg.hash() };
    let csv = cfg.format == Format::Csv;
    let mut status = Status::Ok;
    let body = match cfg.method {
        Method::Srw => {
            let v = srw_speed(&cfg.laws.offspring);
            if csv {
                let e = gwrc::speed::srw_estimate(&cfg.laws.offspring);
                env.estimates_csv(&[("srw", &e)])
            } else {
                env.json(json!({ "method": "srw", "v_srw": v }))
            }
        }
        Method::Direct => {
            let out = direct_speed(&direct_config(cfg))?;
            if csv {
                env.estimates_csv(&[("direct", &out.estimate)])
            } else {
                env.json(json!({ "estimate": value(&out.estimate), "curve": value(&out.curve) }))
            }
        }
        Method::Formula | Method::Covariance => {
            let run = formula_run(&formula_config(cfg))?;
            let (name, est) = if cfg.method == Method::Formula {
                ("formula", run.formula_estimate())
            } else {
                ("covariance", run.covariance_estimate())
            };
            if csv {
                env.estimates_csv(&[(name, &est)])
            } else {
                let by_index: Map<String, Value> = run
                    .mean_ratio_by_index()
                    .into_iter()
                    .map(|(k, (mean, se, n))| {
                        (k.to_string(), json!({ "mean_ratio": mean, "standard_error": se, "samples": n }))
                    })
                    .collect();
                env.json(json!({ "estimate": value(&est), "ratio_by_index": by_index }))
            }
        }
        Method::Slowdown => {
            let report = slowdown_test(&formula_config(cfg))?;
            if report.verdict == Verdict::Inconclusive {
                status = Status::Inconclusive;
            }
            if csv {
                env.estimates_csv(&[("formula", &report.formula), ("covariance", &report.covariance_speed)])
            } else {
                env.json(value(&report))
            }
        }
        Method::Ex1 => {
            let rows = ex1_curve(&cfg.ex1_grid, &formula_config(cfg), None)?;
            if csv {
                env.csv(
                    "eps,a,eta,v_hat,ci,reference",
                    rows.iter().map(|r| format!("{},{},{},{},{},{}", r.eps, r.a, r.eta, r.v_hat, r.ci, r.reference)),
                )
            } else {
                env.json(json!({ "rows": value(&rows) }))
            }
        }
        Method::Theta => {
            let t = tree(cfg);
            let theta = theta_distribution(&t, &bracket_options(cfg))?;
            let mut counts = vec![0u64; theta.len()];
            let branches: Vec<u32> = (0..cfg.walks)
                .into_par_iter()
                .map(|r| escape_direction(&t, cfg.confirm_level, stream(cfg.seed, label::WALK, r)))
                .collect::<Result<_, _>>()?;
            for b in branches {
                counts[b as usize] += 1;
            }
            let empirical = |k: usize| (cfg.walks > 0).then(|| counts[k] as f64 / cfg.walks as f64);
            if csv {
                env.csv(
                    "k,lower,upper,normalized_mid,empirical",
                    theta.iter().enumerate().map(|(k, th)| {
                        let emp = empirical(k).map_or(String::new(), |x| x.to_string());
                        format!("{k},{},{},{},{emp}", th.lower, th.upper, th.normalized_mid)
                    }),
                )
            } else {
                let rows: Vec<Value> = theta
                    .iter()
                    .enumerate()
                    .map(|(k, th)| {
                        json!({
                            "k": k,
                            "lower": th.lower,
                            "upper": th.upper,
                            "normalized_mid": th.normalized_mid,
                            "empirical": empirical(k),
                        })
                    })
                    .collect();
                env.json(json!({ "theta": rows, "walks": cfg.walks, "confirm_level": cfg.confirm_level }))
            }
        }
        Method::Bounds => {
            let t = tree(cfg);
            let node = resolve_path(&t, &cfg.path)?;
            let b = conductance_bounds(&t, node, &bracket_options(cfg))?;
            if csv {
                env.csv(
                    "node,lower,upper,depth_used,tolerance_met",
                    [format!("{node},{},{},{},{}", b.lower, b.upper, b.depth_used, b.tolerance_met)],
                )
            } else {
                env.json(json!({
                    "node": node.to_string(),
                    "lower": b.lower,
                    "upper": b.upper,
                    "depth_used": b.depth_used,
                    "tolerance_met": b.tolerance_met,
                }))
            }
        }
        Method::Stationarity => {
            let pairs = default_probe_pairs(&cfg.laws);
            let report = stationarity_check(&cfg.laws, &pairs, cfg.samples, cfg.seed, STATIONARITY_LEVEL)?;
            if !report.pass {
                status = Status::Inconclusive;
            }
            if csv {
                env.csv(
                    "f,g,u,mean_difference,ci,pass",
                    report.pairs.iter().map(|p| {
                        format!(
                            "{},{},{},{},{},{}",
                            compact(&p.pair.f),
                            compact(&p.pair.g),
                            compact(&p.pair.u),
                            p.mean_difference,
                            p.ci_halfwidth,
                            p.pass
                        )
                    }),
                )
            } else {
                env.json(value(&report))
            }
        }
        Method::Selfcheck => {
            let items = selfcheck(cfg)?;
            if items.iter().any(|i| !i.pass) {
                status = Status::Inconclusive;
            }
            if csv {
                env.csv(
                    "item,pass,detail",
                    items.iter().map(|i| format!("{},{},{}", i.name, i.pass, i.detail)),
                )
            } else {
                env.json(json!({ "pass": status == Status::Ok, "items": value(&items) }))
            }
        }
        Method::DumpTree => {
            let view = dump_tree(cfg)?;
            if csv {
                env.csv(
                    "parent,child,xi",
                    view.edges().map(|(a, b, xi)| format!("{},{},{xi}", view.node(a).id, view.node(b).id)),
                )
            } else {
                env.json(json!({ "tree": value(view.to_snapshot()) }))
            }
        }
    };
    Ok(Report { body, status })
}

/// JSON text of a small value with `,` replaced so it fits in a CSV cell.
fn compact(x: &impl Serialize) -> String {
    serde_json::to_string(x).expect("serializable").replace(',', ";").replace('"', "")
}

/// The subtree below `cfg.path`, `cfg.depth` levels deep.
pub fn dump_tree(cfg: &ExperimentConfig) -> Result<FiniteWeightedTree, CliError> {
    let t = tree(cfg);
    let node = resolve_path(&t, &cfg.path)?;
    Ok(truncate_view_capped(&t, node, cfg.depth, DEFAULT_NODE_CAP)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

const SELFCHECK_TREES: u64 = 20;
const SELFCHECK_VIEW_NODES: f64 = 5000.0;

/// Views of independent trees small enough for dense linear algebra.
fn selfcheck_views(cfg: &ExperimentConfig) -> Result<Vec<FiniteWeightedTree>, CliError> {
    (0..SELFCHECK_TREES)
        .map(|i| {
            let t = LazyTree::new(cfg.mode, cfg.laws.clone(), sub_seed(cfg.seed, label::SAMPLE, i));
            let root = t.root_record();
            let depth = (1..=6)
                .take_while(|&d| t.expected_size(&root, d) <= SELFCHECK_VIEW_NODES)
                .last()
                .unwrap_or(1);
            Ok(truncate_view_capped(&t, t.root(), depth, DEFAULT_NODE_CAP)?)
        })
        .collect()
}

/// Invariant battery: reversibility of the walk kernel, Rayleigh
/// monotonicity of the truncation bounds, agreement of the fold with the
/// linear-solve oracle, and thread-count independence of a replayed run.
pub fn selfcheck(cfg: &ExperimentConfig) -> Result<Vec<CheckItem>, CliError> {
    let views = selfcheck_views(cfg)?;
    let mut items = Vec::new();

    let defect = views.iter().map(reversibility_check).fold(0.0, f64::max);
    items.push(CheckItem {
        name: "reversibility".into(),
        pass: defect <= 1e-12,
        detail: format!("max defect {defect:e}"),
    });

    let floor = cfg.laws.conductance_floor();
    let mut monotone = true;
    for view in &views {
        let mut prev = (0.0, f64::INFINITY);
        for d in 1..=view.max_depth() {
            let cut = view.restrict(d);
            let hi = effective_conductance_exact(&cut, Boundary::Wired)?;
            let lo = effective_conductance_exact(&cut, Boundary::Floor(floor))?;
            monotone &= lo <= hi * (1.0 + 1e-12)
                && lo >= prev.0 * (1.0 - 1e-12)
                && hi <= prev.1 * (1.0 + 1e-12);
            prev = (lo, hi);
        }
    }
    items.push(CheckItem {
        name: "bracket_monotonicity".into(),
        pass: monotone,
        detail: format!("{} trees", views.len()),
    });

    let mut worst: f64 = 0.0;
    for view in &views {
        for boundary in [Boundary::Wired, Boundary::Free, Boundary::Floor(floor)] {
            let fold = effective_conductance_exact(view, boundary)?;
            let oracle = dirichlet_conductance(view, boundary);
            worst = worst.max((fold - oracle).abs() / oracle.abs().max(1.0));
        }
    }
    items.push(CheckItem {
        name: "oracle_equivalence".into(),
        pass: worst <= 1e-10,
        detail: format!("max relative error {worst:e}"),
    });

    let digests = [1, 4, 8]
        .into_iter()
        .map(|workers| replay_digest(cfg, workers))
        .collect::<Result<Vec<_>, _>>()?;
    items.push(CheckItem {
        name: "replay_determinism".into(),
        pass: digests.iter().all(|d| d == &digests[0]),
        detail: format!("sha256 {} with 1, 4 and 8 workers", &digests[0][..16]),
    });
    Ok(items)
}

/// Digest of a reduced direct + formula run on a pool of `workers` threads.
fn replay_digest(cfg: &ExperimentConfig, workers: usize) -> Result<String, CliError> {
    let small = ExperimentConfig {
        n_steps: cfg.n_steps.min(2000),
        replicas: cfg.replicas.min(16),
        samples: cfg.samples.min(64),
        ..cfg.clone()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::InvalidConfig(e.to_string()))?;
    pool.install(|| {
        let direct = direct_speed(&direct_config(&small))?;
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&direct.estimate).expect("serializable"));
        hasher.update(serde_json::to_vec(&direct.replica_checkpoints).expect("serializable"));
        if cfg.laws.gamma().finite().is_some() {
            let run = formula_run(&formula_config(&small))?;
            hasher.update(serde_json::to_vec(&run.formula_estimate()).expect("serializable"));
        }
        Ok(hex::encode(hasher.finalize()))
    })
}
