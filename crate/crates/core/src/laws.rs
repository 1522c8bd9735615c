//! Offspring distributions and degree-indexed conductance distributions.
//!
//! Both kinds of law are immutable after validation and can be shared freely
//! between workers; all randomness comes from the caller's stream.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Pareto};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// Normalization slack accepted by [`OffspringLaw::new`] before renormalizing.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Default support cap for truncated parametric offspring families.
pub const DEFAULT_MAX_OFFSPRING: u32 = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LawError {
    #[error("p_0 = {0} > 0: trees with leaves are not supported")]
    ZeroNotAllowed(f64),
    #[error("offspring mean {0} is not strictly greater than 1")]
    NotSupercritical(f64),
    #[error("offspring probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("invalid probability {p} for offspring count {k}")]
    InvalidProbability { k: u32, p: f64 },
    #[error("invalid conductance law: {0}")]
    InvalidConductanceLaw(String),
}

/// A mean that may be infinite. Infinity is a distinguished value, never an
/// overflowed float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mean {
    Finite(f64),
    Infinite,
}

impl Mean {
    pub fn is_infinite(self) -> bool {
        matches!(self, Mean::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Mean::Finite(m) => Some(m),
            Mean::Infinite => None,
        }
    }
}

impl fmt::Display for Mean {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mean::Finite(m) => write!(f, "{m}"),
            Mean::Infinite => f.write_str("INFINITE"),
        }
    }
}

/// Galton–Watson offspring law on `{1, 2, ...}` with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    /// `(k, p_k)` sorted by `k`, zero-probability atoms dropped.
    atoms: Vec<(u32, f64)>,
    cumulative: Vec<f64>,
    mean: f64,
}

impl OffspringLaw {
    /// Validates a raw probability map. Sums within
    /// [`NORMALIZATION_TOLERANCE`] of one are renormalized.
    pub fn new<I>(probabilities: I) -> Result<Self, LawError>
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let mut merged: BTreeMap<u32, f64> = BTreeMap::new();
        for (k, p) in probabilities {
            if !p.is_finite() || p < 0.0 {
                return Err(LawError::InvalidProbability { k, p });
            }
            *merged.entry(k).or_insert(0.0) += p;
        }
        if let Some(&p0) = merged.get(&0) {
            if p0 > 0.0 {
                return Err(LawError::ZeroNotAllowed(p0));
            }
        }
        let total: f64 = merged.values().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(LawError::NotNormalized(total));
        }
        let atoms: Vec<(u32, f64)> = merged
            .into_iter()
            .filter(|&(k, p)| k > 0 && p > 0.0)
            .map(|(k, p)| (k, p / total))
            .collect();
        let mean: f64 = atoms.iter().map(|&(k, p)| f64::from(k) * p).sum();
        if mean <= 1.0 {
            return Err(LawError::NotSupercritical(mean));
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = atoms
            .iter()
            .map(|&(_, p)| {
                acc += p;
                acc
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(Self {
            atoms,
            cumulative,
            mean,
        })
    }

    /// Every vertex has exactly `k` children.
    pub fn degenerate(k: u32) -> Result<Self, LawError> {
        Self::new([(k, 1.0)])
    }

    /// `1 + Poisson(lambda)` truncated to `{1, ..., max_k}` and renormalized.
    pub fn shifted_poisson(lambda: f64, max_k: u32) -> Result<Self, LawError> {
        if !(lambda > 0.0 && lambda.is_finite()) || max_k < 2 {
            return Err(LawError::InvalidProbability {
                k: max_k,
                p: lambda,
            });
        }
        let mut weights = Vec::with_capacity(max_k as usize);
        let mut term = (-lambda).exp();
        for j in 0..max_k {
            weights.push((j + 1, term));
            term *= lambda / f64::from(j + 1);
        }
        Self::from_weights(weights)
    }

    /// Geometric law `P[k] = (1-q) q^(k-1)` on `{1, ..., max_k}`, renormalized.
    pub fn geometric(q: f64, max_k: u32) -> Result<Self, LawError> {
        if !(q > 0.0 && q < 1.0) || max_k < 2 {
            return Err(LawError::InvalidProbability { k: max_k, p: q });
        }
        let weights = (1..=max_k).map(|k| (k, (1.0 - q) * q.powi(k as i32 - 1)));
        Self::from_weights(weights.collect())
    }

    fn from_weights(weights: Vec<(u32, f64)>) -> Result<Self, LawError> {
        let total: f64 = weights.iter().map(|&(_, w)| w).sum();
        Self::new(weights.into_iter().map(|(k, w)| (k, w / total)))
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn atoms(&self) -> &[(u32, f64)] {
        &self.atoms
    }

    pub fn prob(&self, k: u32) -> f64 {
        self.atoms
            .binary_search_by_key(&k, |&(j, _)| j)
            .map(|i| self.atoms[i].1)
            .unwrap_or(0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = u32> + '_ {
        self.atoms.iter().map(|&(k, _)| k)
    }

    pub fn min_offspring(&self) -> u32 {
        self.atoms[0].0
    }

    pub fn max_offspring(&self) -> u32 {
        self.atoms[self.atoms.len() - 1].0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        if self.atoms.len() == 1 {
            return self.atoms[0].0;
        }
        let u: f64 = rng.random();
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.atoms[i.min(self.atoms.len() - 1)].0
    }
}

/// Validates a raw offspring map; see [`OffspringLaw::new`].
pub fn validate_offspring<I>(probabilities: I) -> Result<OffspringLaw, LawError>
where
    I: IntoIterator<Item = (u32, f64)>,
{
    OffspringLaw::new(probabilities)
}

/// Law of a single edge conductance. New families are added here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ConductanceLaw {
    Constant { c: f64 },
    /// `v1` with probability `1 - p2`, `v2` with probability `p2`.
    TwoPoint { v1: f64, v2: f64, p2: f64 },
    Exponential { rate: f64 },
    #[serde(rename = "lognormal")]
    LogNormal { mu_log: f64, sigma_log: f64 },
    Pareto { alpha: f64, x_min: f64 },
}

impl ConductanceLaw {
    pub fn validate(self) -> Result<Self, LawError> {
        let ok = match self {
            Self::Constant { c } => c > 0.0 && c.is_finite(),
            Self::TwoPoint { v1, v2, p2 } => {
                v1 > 0.0 && v2 > 0.0 && v1.is_finite() && v2.is_finite() && (0.0..=1.0).contains(&p2)
            }
            Self::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            Self::LogNormal { mu_log, sigma_log } => {
                mu_log.is_finite() && sigma_log >= 0.0 && sigma_log.is_finite()
            }
            Self::Pareto { alpha, x_min } => {
                alpha > 0.0 && alpha.is_finite() && x_min > 0.0 && x_min.is_finite()
            }
        };
        if ok {
            Ok(self)
        } else {
            Err(LawError::InvalidConductanceLaw(format!("{self:?}")))
        }
    }

    pub fn mean(&self) -> Mean {
        match *self {
            Self::Constant { c } => Mean::Finite(c),
            Self::TwoPoint { v1, v2, p2 } => Mean::Finite((1.0 - p2) * v1 + p2 * v2),
            Self::Exponential { rate } => Mean::Finite(1.0 / rate),
            Self::LogNormal { mu_log, sigma_log } => {
                Mean::Finite((mu_log + 0.5 * sigma_log * sigma_log).exp())
            }
            Self::Pareto { alpha, x_min } => {
                if alpha <= 1.0 {
                    Mean::Infinite
                } else {
                    Mean::Finite(alpha * x_min / (alpha - 1.0))
                }
            }
        }
    }

    /// Variance, `None` when infinite.
    pub fn variance(&self) -> Option<f64> {
        match *self {
            Self::Constant { .. } => Some(0.0),
            Self::TwoPoint { v1, v2, p2 } => Some(p2 * (1.0 - p2) * (v2 - v1) * (v2 - v1)),
            Self::Exponential { rate } => Some(1.0 / (rate * rate)),
            Self::LogNormal { mu_log, sigma_log } => {
                let s2 = sigma_log * sigma_log;
                Some((s2.exp() - 1.0) * (2.0 * mu_log + s2).exp())
            }
            Self::Pareto { alpha, x_min } => (alpha > 2.0)
                .then(|| x_min * x_min * alpha / ((alpha - 1.0) * (alpha - 1.0) * (alpha - 2.0))),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        match *self {
            Self::Constant { .. } => true,
            Self::TwoPoint { v1, v2, p2 } => v1 == v2 || p2 == 0.0 || p2 == 1.0,
            Self::LogNormal { sigma_log, .. } => sigma_log == 0.0,
            Self::Exponential { .. } | Self::Pareto { .. } => false,
        }
    }

    /// Infimum of the support; zero when the law accumulates at zero.
    pub fn support_floor(&self) -> f64 {
        match *self {
            Self::Constant { c } => c,
            Self::TwoPoint { v1, v2, p2 } => {
                if p2 == 0.0 {
                    v1
                } else if p2 == 1.0 {
                    v2
                } else {
                    v1.min(v2)
                }
            }
            Self::Exponential { .. } => 0.0,
            Self::LogNormal { sigma_log, mu_log } => {
                if sigma_log == 0.0 {
                    mu_log.exp()
                } else {
                    0.0
                }
            }
            Self::Pareto { x_min, .. } => x_min,
        }
    }

    /// The finitely many atoms of a discrete law, `None` for continuous ones.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match *self {
            Self::Constant { c } => Some(vec![(c, 1.0)]),
            Self::TwoPoint { v1, v2, p2 } => Some(
                [(v1, 1.0 - p2), (v2, p2)]
                    .into_iter()
                    .filter(|&(_, p)| p > 0.0)
                    .collect(),
            ),
            _ => None,
        }
    }

    /// Quantile function (left-continuous inverse of the CDF), `p` in `(0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            Self::Constant { c } => c,
            Self::TwoPoint { v1, v2, p2 } => {
                let (lo, hi, p_hi) = if v1 <= v2 { (v1, v2, p2) } else { (v2, v1, 1.0 - p2) };
                if p <= 1.0 - p_hi {
                    lo
                } else {
                    hi
                }
            }
            Self::Exponential { rate } => -(1.0 - p).ln() / rate,
            Self::LogNormal { mu_log, sigma_log } => {
                if sigma_log == 0.0 {
                    return mu_log.exp();
                }
                let z = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p);
                (mu_log + sigma_log * z).exp()
            }
            Self::Pareto { alpha, x_min } => x_min * (1.0 - p).powf(-1.0 / alpha),
        }
    }

    /// Draws one conductance; always strictly positive.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Constant { c } => c,
            Self::TwoPoint { v1, v2, p2 } => {
                if rng.random::<f64>() < p2 {
                    v2
                } else {
                    v1
                }
            }
            Self::Exponential { rate } => {
                let d = Exp::new(rate).expect("validated rate");
                loop {
                    let x = d.sample(rng);
                    if x > 0.0 {
                        return x;
                    }
                }
            }
            Self::LogNormal { mu_log, sigma_log } => {
                let d = LogNormal::new(mu_log, sigma_log).expect("validated lognormal");
                loop {
                    let x = d.sample(rng);
                    if x > 0.0 && x.is_finite() {
                        return x;
                    }
                }
            }
            Self::Pareto { alpha, x_min } => {
                let d = Pareto::new(x_min, alpha).expect("validated pareto");
                loop {
                    let x = d.sample(rng);
                    if x.is_finite() {
                        return x;
                    }
                }
            }
        }
    }
}

/// Symmetric family `(k, m) -> law` keyed by the indices of both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductanceLawTable {
    default: ConductanceLaw,
    overrides: BTreeMap<(u32, u32), ConductanceLaw>,
}

impl ConductanceLawTable {
    pub fn new(default: ConductanceLaw) -> Result<Self, LawError> {
        Ok(Self {
            default: default.validate()?,
            overrides: BTreeMap::new(),
        })
    }

    pub fn constant(c: f64) -> Result<Self, LawError> {
        Self::new(ConductanceLaw::Constant { c })
    }

    /// Sets the law on the unordered pair `{k, m}`.
    pub fn with_override(mut self, k: u32, m: u32, law: ConductanceLaw) -> Result<Self, LawError> {
        self.overrides.insert(ordered(k, m), law.validate()?);
        Ok(self)
    }

    pub fn default_law(&self) -> &ConductanceLaw {
        &self.default
    }

    pub fn overrides(&self) -> impl Iterator<Item = ((u32, u32), &ConductanceLaw)> {
        self.overrides.iter().map(|(&key, law)| (key, law))
    }

    pub fn law(&self, k: u32, m: u32) -> &ConductanceLaw {
        self.overrides.get(&ordered(k, m)).unwrap_or(&self.default)
    }

    pub fn sample<R: Rng + ?Sized>(&self, k: u32, m: u32, rng: &mut R) -> f64 {
        self.law(k, m).sample(rng)
    }

    /// Laws actually used between vertices of the given offspring support.
    pub fn laws_on_support<'a>(
        &'a self,
        offspring: &'a OffspringLaw,
    ) -> impl Iterator<Item = (u32, u32, &'a ConductanceLaw)> + 'a {
        offspring.support().flat_map(move |k| {
            offspring
                .support()
                .filter(move |&m| m >= k)
                .map(move |m| (k, m, self.law(k, m)))
        })
    }

    /// Smallest support floor among the laws reachable under `offspring`.
    pub fn support_floor(&self, offspring: &OffspringLaw) -> f64 {
        self.laws_on_support(offspring)
            .map(|(_, _, law)| law.support_floor())
            .fold(f64::INFINITY, f64::min)
    }
}

fn ordered(k: u32, m: u32) -> (u32, u32) {
    (k.min(m), k.max(m))
}

/// Sample through the table: `sample_conductance(t, k, m, rng) == sample_conductance(t, m, k, rng)`.
pub fn sample_conductance<R: Rng + ?Sized>(
    table: &ConductanceLawTable,
    k: u32,
    m: u32,
    rng: &mut R,
) -> f64 {
    table.sample(k, m, rng)
}

/// `gamma = sum_{k,m} p_k p_m gamma_{k,m}`; infinite as soon as one reachable
/// pair has infinite mean.
pub fn mean_gamma(table: &ConductanceLawTable, offspring: &OffspringLaw) -> Mean {
    let mut gamma = 0.0;
    for &(k, pk) in offspring.atoms() {
        for &(m, pm) in offspring.atoms() {
            match table.law(k, m).mean() {
                Mean::Infinite => return Mean::Infinite,
                Mean::Finite(g) => gamma += pk * pm * g,
            }
        }
    }
    Mean::Finite(gamma)
}

/// A priori lower bound on the effective conductance to infinity of any
/// subtree: it contains a `d_min`-ary tree whose edges are all at least
/// `c_min`, and the unit `d`-ary tree has conductance `d - 1`.
pub fn conductance_floor(table: &ConductanceLawTable, offspring: &OffspringLaw) -> f64 {
    let branching = f64::from(offspring.min_offspring() - 1);
    if branching == 0.0 {
        return 0.0;
    }
    table.support_floor(offspring) * branching
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn rng(seed: u64) -> Xoshiro256PlusPlus {
        Xoshiro256PlusPlus::seed_from_u64(seed)
    }

    #[test]
    fn single_atom_law() {
        let law = validate_offspring([(2, 1.0)]).unwrap();
        assert_eq!(law.mean(), 2.0);
        assert_eq!(law.sample(&mut rng(1)), 2);
    }

    #[test]
    fn two_atom_law_mean() {
        let law = validate_offspring([(1, 0.5), (3, 0.5)]).unwrap();
        assert_eq!(law.mean(), 2.0);
    }

    #[test]
    fn rejects_leaves() {
        assert_eq!(
            validate_offspring([(0, 0.1), (2, 0.9)]),
            Err(LawError::ZeroNotAllowed(0.1))
        );
        // an explicit zero is fine
        assert!(validate_offspring([(0, 0.0), (2, 1.0)]).is_ok());
    }

    #[test]
    fn rejects_subcritical_and_unnormalized() {
        assert!(matches!(
            validate_offspring([(1, 1.0)]),
            Err(LawError::NotSupercritical(_))
        ));
        assert!(matches!(
            validate_offspring([(1, 0.5), (2, 0.4)]),
            Err(LawError::NotNormalized(_))
        ));
        assert!(matches!(
            validate_offspring([(2, -0.5), (3, 1.5)]),
            Err(LawError::InvalidProbability { .. })
        ));
    }

    #[test]
    fn renormalizes_within_tolerance() {
        let law = validate_offspring([(2, 0.5 + 4e-10), (3, 0.5)]).unwrap();
        let total: f64 = law.atoms().iter().map(|a| a.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncated_families() {
        let pois = OffspringLaw::shifted_poisson(1.5, DEFAULT_MAX_OFFSPRING).unwrap();
        assert!((pois.mean() - 2.5).abs() < 1e-9);
        assert_eq!(pois.min_offspring(), 1);
        let geo = OffspringLaw::geometric(0.5, DEFAULT_MAX_OFFSPRING).unwrap();
        assert!((geo.mean() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn offspring_draws_are_reproducible() {
        let law = validate_offspring([(1, 0.5), (3, 0.5)]).unwrap();
        let a: Vec<u32> = {
            let mut r = rng(7);
            (0..100).map(|_| law.sample(&mut r)).collect()
        };
        let b: Vec<u32> = {
            let mut r = rng(7);
            (0..100).map(|_| law.sample(&mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn offspring_frequency_binomial_band() {
        // 10^6 fair draws: standard error 5e-4, so +-0.002 is four of them.
        let law = validate_offspring([(1, 0.5), (3, 0.5)]).unwrap();
        let mut r = rng(11);
        let n = 1_000_000;
        let threes = (0..n).filter(|_| law.sample(&mut r) == 3).count();
        let freq = threes as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.002, "freq {freq}");
    }

    #[test]
    fn constant_law_samples_constant() {
        let t = ConductanceLawTable::constant(1.0).unwrap();
        assert_eq!(sample_conductance(&t, 2, 5, &mut rng(3)), 1.0);
    }

    #[test]
    fn two_point_mean_clt() {
        let (a, eps) = (10.0, 0.05);
        let law = ConductanceLaw::TwoPoint { v1: 1.0, v2: a, p2: eps };
        let mut r = rng(5);
        let n = 1_000_000;
        let mean = (0..n).map(|_| law.sample(&mut r)).sum::<f64>() / n as f64;
        let expected = 1.0 - eps + eps * a;
        let se = law.variance().unwrap().sqrt() / (n as f64).sqrt();
        assert!((mean - expected).abs() < 3.0 * se, "{mean} vs {expected}");
    }

    #[test]
    fn table_lookup_is_symmetric() {
        let t = ConductanceLawTable::constant(1.0)
            .unwrap()
            .with_override(2, 3, ConductanceLaw::Exponential { rate: 2.0 })
            .unwrap();
        assert_eq!(t.law(2, 3), t.law(3, 2));
        let x = t.sample(2, 3, &mut rng(9));
        let y = t.sample(3, 2, &mut rng(9));
        assert_eq!(x, y);
        assert_eq!(t.law(2, 2), &ConductanceLaw::Constant { c: 1.0 });
    }

    #[test]
    fn gamma_examples() {
        let binary = OffspringLaw::degenerate(2).unwrap();
        let t = ConductanceLawTable::constant(1.5).unwrap();
        assert_eq!(mean_gamma(&t, &binary), Mean::Finite(1.5));

        let heavy = ConductanceLawTable::new(ConductanceLaw::Pareto { alpha: 0.5, x_min: 1.0 }).unwrap();
        assert_eq!(mean_gamma(&heavy, &binary), Mean::Infinite);

        // c_{k,m} = k + m on {1, 3}: 0.25 * (2 + 4 + 4 + 6) = 4
        let law = validate_offspring([(1, 0.5), (3, 0.5)]).unwrap();
        let mut t = ConductanceLawTable::constant(99.0).unwrap();
        for (k, m) in [(1, 1), (1, 3), (3, 3)] {
            t = t
                .with_override(k, m, ConductanceLaw::Constant { c: f64::from(k + m) })
                .unwrap();
        }
        assert_eq!(mean_gamma(&t, &law), Mean::Finite(4.0));
    }

    #[test]
    fn infinite_gamma_only_on_reachable_pairs() {
        let binary = OffspringLaw::degenerate(2).unwrap();
        let t = ConductanceLawTable::constant(1.0)
            .unwrap()
            .with_override(3, 3, ConductanceLaw::Pareto { alpha: 0.5, x_min: 1.0 })
            .unwrap();
        assert_eq!(mean_gamma(&t, &binary), Mean::Finite(1.0));
    }

    #[test]
    fn floor_combines_support_and_branching() {
        let binary = OffspringLaw::degenerate(2).unwrap();
        let t = ConductanceLawTable::new(ConductanceLaw::TwoPoint { v1: 0.5, v2: 1.5, p2: 0.5 }).unwrap();
        assert_eq!(conductance_floor(&t, &binary), 0.5);
        let ternary = OffspringLaw::degenerate(3).unwrap();
        assert_eq!(conductance_floor(&ConductanceLawTable::constant(1.0).unwrap(), &ternary), 2.0);
        let with_ones = validate_offspring([(1, 0.5), (3, 0.5)]).unwrap();
        assert_eq!(conductance_floor(&t, &with_ones), 0.0);
    }

    #[test]
    fn quantiles_invert_cdf() {
        let exp = ConductanceLaw::Exponential { rate: 2.0 };
        assert!((exp.quantile(0.5) - 2f64.ln() / 2.0).abs() < 1e-12);
        let par = ConductanceLaw::Pareto { alpha: 2.0, x_min: 1.0 };
        assert!((par.quantile(0.75) - 2.0).abs() < 1e-12);
        let ln = ConductanceLaw::LogNormal { mu_log: 0.0, sigma_log: 1.0 };
        assert!((ln.quantile(0.5) - 1.0).abs() < 1e-9);
        let tp = ConductanceLaw::TwoPoint { v1: 1.0, v2: 5.0, p2: 0.1 };
        assert_eq!(tp.quantile(0.85), 1.0);
        assert_eq!(tp.quantile(0.95), 5.0);
    }

    #[test]
    fn rejects_nonpositive_conductance_laws() {
        assert!(ConductanceLaw::Constant { c: 0.0 }.validate().is_err());
        assert!(ConductanceLaw::TwoPoint { v1: -1.0, v2: 1.0, p2: 0.5 }.validate().is_err());
        assert!(ConductanceLaw::Pareto { alpha: 0.0, x_min: 1.0 }.validate().is_err());
    }

    #[test]
    fn law_json_shape() {
        let law: ConductanceLaw =
            serde_json::from_str(r#"{"family":"two_point","v1":1,"v2":100,"p2":0.01}"#).unwrap();
        assert_eq!(law, ConductanceLaw::TwoPoint { v1: 1.0, v2: 100.0, p2: 0.01 });
        let law: ConductanceLaw =
            serde_json::from_str(r#"{"family":"lognormal","mu_log":0,"sigma_log":1}"#).unwrap();
        assert!(matches!(law, ConductanceLaw::LogNormal { .. }));
    }
}
