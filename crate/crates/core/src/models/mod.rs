//! Occupancy models: configurations, statistics, means, coupling constants and
//! size-bias pair samplers.
//!
//! A statistic is `Y = sum_a w_a 1(M_a >= d_a)` (`ge`) or `sum_a w_a 1(M_a != d_a)`
//! (`ne`). Urns whose indicator is almost surely constant are removed when a
//! sampler is built; their weights form the reported offset, and the coupled
//! pairs hold the statistic of the remaining urns.

pub mod config;
mod engine;
mod er;
mod germ_grain;
mod hypergeometric;
mod multinomial;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::bounds::BoundInputs;
use crate::error::{Error, Result};
use crate::lattice::LatticePmf;

pub use config::{ModelConfig, ModelDocument, PerUrn};
pub use er::ErGraph;
pub use germ_grain::{kappa1, sigma_d, unit_ball_volume, Density, Field, GgNeighbors, GgVolume, Torus};
pub use hypergeometric::Hypergeometric;
pub use multinomial::Multinomial;

/// Configurations with more outcomes than this are not enumerated.
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// Which threshold indicator a statistic sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticKind {
    Ge,
    Ne,
}

impl StatisticKind {
    pub const ALL: [StatisticKind; 2] = [StatisticKind::Ge, StatisticKind::Ne];

    pub fn name(self) -> &'static str {
        match self {
            StatisticKind::Ge => "ge",
            StatisticKind::Ne => "ne",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ge" => Ok(StatisticKind::Ge),
            "ne" => Ok(StatisticKind::Ne),
            _ => Err(Error::invalid(format!("unknown statistic {s:?}; expected ge or ne"))),
        }
    }

    pub fn indicator(self, m: i64, d: i64) -> bool {
        match self {
            StatisticKind::Ge => m >= d,
            StatisticKind::Ne => m != d,
        }
    }

    /// `P(indicator)` under `pmf`.
    pub fn probability(self, pmf: &LatticePmf, d: i64) -> f64 {
        match self {
            StatisticKind::Ge => pmf.tail_ge(d),
            StatisticKind::Ne => pmf.prob_ne(d),
        }
    }
}

/// A realized pair `(Y, Y^s)` together with the chosen urn (or grid cell).
///
/// Both values are statistics of the non-constant urns only; add the model's
/// offset to recover the full statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledSample {
    pub y: f64,
    pub y_s: f64,
    pub alpha: usize,
    pub statistic: StatisticKind,
}

/// A mean and a bound on its numerical error (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub value: f64,
    pub error_estimate: f64,
}

impl MeanEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            error_estimate: 0.0,
        }
    }
}

/// `Y' = offset + sign * Y`; the complementary count has its tails swapped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complement {
    pub offset: f64,
    pub sign: f64,
}

/// Urns kept after stripping almost surely constant indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub active: Vec<usize>,
    /// Total weight of the indicators that are almost surely one.
    pub offset: f64,
}

impl Reduction {
    pub(crate) fn from_marginals(marginals: &[LatticePmf], weights: &[f64], d: &[i64], kind: StatisticKind) -> Self {
        let mut active = Vec::new();
        let mut offset = 0.0;
        for (a, pmf) in marginals.iter().enumerate() {
            let p = kind.probability(pmf, d[a]);
            if p >= 1.0 {
                offset += weights[a];
            } else if p > 0.0 {
                active.push(a);
            }
        }
        Self { active, offset }
    }

    pub(crate) fn max_weight(&self, weights: &[f64]) -> f64 {
        self.active.iter().map(|&a| weights[a]).fold(0.0, f64::max)
    }

    pub(crate) fn max_threshold(&self, d: &[i64]) -> i64 {
        self.active.iter().map(|&a| d[a].abs()).max().unwrap_or(0)
    }
}

/// Raw randomness of one draw of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Configuration {
    /// Edge indicators of the pairs `i < j` in lexicographic order.
    Graph { vertices: usize, edges: Vec<bool> },
    /// Germ locations.
    Points { points: Vec<Vec<f64>> },
    /// Urn of each ball.
    Balls { locations: Vec<usize> },
    /// Sorted labels of the sampled balls; colors occupy consecutive label ranges.
    Sample { labels: Vec<usize> },
}

/// Draws coupled pairs for one statistic of one model.
pub trait PairSampler: Send + Sync {
    fn sample(&self, rng: &mut dyn RngCore) -> Result<CoupledSample>;

    /// Mean of the reduced statistic the sampler couples.
    fn reduced_mean(&self) -> f64;

    fn coupling_constant(&self) -> f64;
}

pub(crate) fn weighted_statistic(counts: &[i64], weights: &[f64], d: &[i64], urns: &[usize], kind: StatisticKind) -> f64 {
    urns.iter()
        .filter(|&&a| kind.indicator(counts[a], d[a]))
        .map(|&a| weights[a])
        .sum()
}

pub(crate) fn check_weights(weights: &[f64]) -> Result<()> {
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::invalid(format!("weight {w} must be positive and finite")));
    }
    Ok(())
}

/// A validated model.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    ErGraph(ErGraph),
    GgVolume(GgVolume),
    GgNeighbors(GgNeighbors),
    Multinomial(Multinomial),
    Hypergeometric(Hypergeometric),
}

macro_rules! dispatch {
    ($self:expr, $m:ident => $body:expr) => {
        match $self {
            ModelSpec::ErGraph($m) => $body,
            ModelSpec::GgVolume($m) => $body,
            ModelSpec::GgNeighbors($m) => $body,
            ModelSpec::Multinomial($m) => $body,
            ModelSpec::Hypergeometric($m) => $body,
        }
    };
}

impl ModelSpec {
    pub fn from_config(config: &ModelConfig) -> Result<Self> {
        config.build()
    }

    pub fn variant(&self) -> &'static str {
        match self {
            ModelSpec::ErGraph(_) => "er_graph",
            ModelSpec::GgVolume(_) => "gg_volume",
            ModelSpec::GgNeighbors(_) => "gg_neighbors",
            ModelSpec::Multinomial(_) => "multinomial",
            ModelSpec::Hypergeometric(_) => "hypergeometric",
        }
    }

    /// Mean of the full statistic.
    pub fn mean(&self, kind: StatisticKind) -> Result<MeanEstimate> {
        dispatch!(self, m => m.mean(kind))
    }

    /// Total weight of the indicators that are almost surely one.
    pub fn offset(&self, kind: StatisticKind) -> Result<f64> {
        dispatch!(self, m => m.offset(kind))
    }

    /// Bound `c` with `Y^s <= Y + c` for the coupling this crate samples.
    pub fn coupling_constant(&self, kind: StatisticKind) -> Result<f64> {
        dispatch!(self, m => m.coupling_constant(kind))
    }

    pub fn complement(&self, kind: StatisticKind) -> Result<Complement> {
        let _ = kind;
        Ok(Complement {
            offset: dispatch!(self, m => m.total_weight()),
            sign: -1.0,
        })
    }

    pub fn marginal_pmf(&self, alpha: usize) -> Result<LatticePmf> {
        match self {
            ModelSpec::ErGraph(m) => m.marginal_pmf(alpha),
            ModelSpec::Multinomial(m) => m.marginal_pmf(alpha),
            ModelSpec::Hypergeometric(m) => m.marginal_pmf(alpha),
            ModelSpec::GgNeighbors(_) => Err(Error::Unsupported(
                "neighbor counts are Poisson Binomial only given a location; use marginal_pmf_at".into(),
            )),
            ModelSpec::GgVolume(_) => Err(Error::Unsupported("the volume model has no urn marginals".into())),
        }
    }

    /// Law of `M_alpha` given the location `u` of ball `alpha`; location-free
    /// models ignore `u`.
    pub fn marginal_pmf_at(&self, alpha: usize, u: &[f64]) -> Result<LatticePmf> {
        match self {
            ModelSpec::GgNeighbors(m) => m.marginal_pmf_at(alpha, u),
            _ => self.marginal_pmf(alpha),
        }
    }

    pub fn sample_configuration(&self, rng: &mut dyn RngCore) -> Result<Configuration> {
        dispatch!(self, m => m.sample_configuration(rng))
    }

    /// Full statistic of a configuration.
    pub fn statistic(&self, config: &Configuration, kind: StatisticKind) -> Result<f64> {
        dispatch!(self, m => m.statistic(config, kind))
    }

    pub fn pair_sampler(&self, kind: StatisticKind) -> Result<Box<dyn PairSampler>> {
        dispatch!(self, m => m.pair_sampler(kind))
    }

    /// Exact law of the full statistic as `(value, probability)` atoms.
    pub fn enumerate_law(&self, kind: StatisticKind) -> Result<Vec<(f64, f64)>> {
        match self {
            ModelSpec::ErGraph(m) => m.enumerate_law(kind),
            ModelSpec::Multinomial(m) => m.enumerate_law(kind),
            ModelSpec::Hypergeometric(m) => m.enumerate_law(kind),
            _ => Err(Error::Unsupported(
                "germ-grain statistics are continuous and cannot be enumerated".into(),
            )),
        }
    }

    /// Inputs for the tail bounds of `Y - EY`, with `mu` the mean of the reduced statistic.
    pub fn bound_inputs(&self, kind: StatisticKind) -> Result<BoundInputs> {
        let mu = self.mean(kind)?.value - self.offset(kind)?;
        if !(mu > 0.0) {
            return Err(Error::invalid(format!(
                "the {} statistic is almost surely constant",
                kind.name()
            )));
        }
        let mut inputs = BoundInputs::new(mu, self.coupling_constant(kind)?);
        match self {
            ModelSpec::ErGraph(m) => {
                inputs.mcdiarmid_sum_sq = m.mcdiarmid_sum_sq(kind);
                inputs.certificate = m.certificate(kind);
            }
            ModelSpec::Multinomial(m) => {
                inputs.mcdiarmid_sum_sq = m.mcdiarmid_sum_sq(kind);
                inputs.negatively_associated = kind == StatisticKind::Ge && unit_weights(m.weights());
            }
            ModelSpec::Hypergeometric(m) => {
                inputs.negatively_associated = kind == StatisticKind::Ge && unit_weights(m.weights());
            }
            _ => {}
        }
        Ok(inputs)
    }
}

fn unit_weights(w: &[f64]) -> bool {
    w.iter().all(|&x| x == 1.0)
}

/// Sorts atoms and merges values within `1e-9` (relative above one).
pub(crate) fn merge_atoms(mut atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    atoms.retain(|a| a.1 > 0.0);
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (y, p) in atoms {
        if let Some(last) = out.last_mut() {
            if (y - last.0).abs() <= ATOM_TOLERANCE * y.abs().max(1.0) {
                last.1 += p;
                continue;
            }
        }
        out.push((y, p));
    }
    out
}

pub(crate) const ATOM_TOLERANCE: f64 = 1e-9;
