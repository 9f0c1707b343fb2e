//! Degree counts of an inhomogeneous random graph.

use rand::{Rng, RngCore};

use super::config::ErGraphConfig;
use super::engine::{chain_pair, Engine};
use super::{
    check_weights, merge_atoms, weighted_statistic, Configuration, CoupledSample, MeanEstimate, PairSampler,
    Reduction, StatisticKind, ENUMERATION_LIMIT,
};
use crate::bounds::Certificate;
use crate::couplings::MonotoneChain;
use crate::error::{Error, Result};
use crate::lattice::LatticePmf;

/// Independent edges with probabilities `p_ab`; urn `a` counts the degree of vertex `a`.
#[derive(Debug, Clone)]
pub struct ErGraph {
    m: usize,
    p: Vec<f64>,
    weights: Vec<f64>,
    thresholds: Vec<i64>,
    marginals: Vec<LatticePmf>,
    /// Vertices joined to each vertex with positive probability.
    neighbors: Vec<Vec<usize>>,
}

pub(crate) fn edge_index(m: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * m - i * (i + 1) / 2 + (j - i - 1)
}

impl ErGraph {
    /// `p` is a symmetric matrix with zero diagonal and entries in `[0, 1)`.
    pub fn new(p: &[Vec<f64>], weights: Vec<f64>, thresholds: Vec<i64>) -> Result<Self> {
        let m = p.len();
        if m < 2 {
            return Err(Error::invalid("a graph needs at least two vertices"));
        }
        if weights.len() != m || thresholds.len() != m {
            return Err(Error::invalid("weights and thresholds need one entry per vertex"));
        }
        check_weights(&weights)?;
        let mut flat = vec![0.0; m * m];
        for (i, row) in p.iter().enumerate() {
            if row.len() != m {
                return Err(Error::invalid(format!("edge probability row {i} has {} entries, expected {m}", row.len())));
            }
            for (j, &q) in row.iter().enumerate() {
                if i == j && q != 0.0 {
                    return Err(Error::invalid("edge probability matrix must have a zero diagonal"));
                }
                if !(0.0..1.0).contains(&q) {
                    return Err(Error::invalid(format!("edge probability {q} is not in [0, 1)")));
                }
                if q != p[j][i] {
                    return Err(Error::invalid("edge probability matrix must be symmetric"));
                }
                flat[i * m + j] = q;
            }
        }
        let neighbors: Vec<Vec<usize>> = (0..m)
            .map(|a| (0..m).filter(|&b| flat[a * m + b] > 0.0).collect())
            .collect();
        let marginals = neighbors
            .iter()
            .enumerate()
            .map(|(a, nb)| {
                if nb.is_empty() {
                    Ok(LatticePmf::point_mass(0))
                } else {
                    LatticePmf::poisson_binomial(&nb.iter().map(|&b| flat[a * m + b]).collect::<Vec<_>>())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            m,
            p: flat,
            weights,
            thresholds,
            marginals,
            neighbors,
        })
    }

    pub fn homogeneous(m: usize, p: f64, weights: Vec<f64>, thresholds: Vec<i64>) -> Result<Self> {
        let matrix: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..m).map(|j| if i == j { 0.0 } else { p }).collect())
            .collect();
        Self::new(&matrix, weights, thresholds)
    }

    pub(crate) fn from_config(c: &ErGraphConfig) -> Result<Self> {
        let matrix = match (&c.edge_probabilities, c.vertices, c.edge_probability) {
            (Some(matrix), None, None) => matrix.clone(),
            (None, Some(m), Some(p)) => (0..m)
                .map(|i| (0..m).map(|j| if i == j { 0.0 } else { p }).collect())
                .collect(),
            _ => {
                return Err(Error::invalid(
                    "er_graph needs either edge_probabilities, or vertices with edge_probability",
                ))
            }
        };
        let m = matrix.len();
        Self::new(&matrix, c.weights.expand(m, "weights")?, c.thresholds.expand(m, "thresholds")?)
    }

    pub fn vertices(&self) -> usize {
        self.m
    }

    pub fn edge_probability(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.m + j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn thresholds(&self) -> &[i64] {
        &self.thresholds
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn marginal_pmf(&self, alpha: usize) -> Result<LatticePmf> {
        self.marginals
            .get(alpha)
            .cloned()
            .ok_or_else(|| Error::invalid(format!("vertex {alpha} out of range")))
    }

    pub fn reduction(&self, kind: StatisticKind) -> Reduction {
        Reduction::from_marginals(&self.marginals, &self.weights, &self.thresholds, kind)
    }

    pub fn mean(&self, kind: StatisticKind) -> Result<MeanEstimate> {
        Ok(MeanEstimate::exact(
            (0..self.m)
                .map(|a| self.weights[a] * kind.probability(&self.marginals[a], self.thresholds[a]))
                .sum(),
        ))
    }

    pub fn offset(&self, kind: StatisticKind) -> Result<f64> {
        Ok(self.reduction(kind).offset)
    }

    /// `|w|(|d| + 1)` for `ge` and `2|w|` for `ne`, over the non-constant urns.
    pub fn coupling_constant(&self, kind: StatisticKind) -> Result<f64> {
        let r = self.reduction(kind);
        let w = r.max_weight(&self.weights);
        Ok(match kind {
            StatisticKind::Ge => w * (r.max_threshold(&self.thresholds) as f64 + 1.0),
            StatisticKind::Ne => 2.0 * w,
        })
    }

    /// Each random edge moves two degrees, so it changes `Y` by at most `2|w|`.
    pub fn mcdiarmid_sum_sq(&self, kind: StatisticKind) -> Option<f64> {
        let w = self.reduction(kind).max_weight(&self.weights);
        let edges = self.random_edges().len();
        (edges > 0 && w > 0.0).then(|| edges as f64 * (2.0 * w).powi(2))
    }

    /// Unit weights and a common threshold make `Y_ge` certifiable with `(2, d, 0)`.
    pub fn certificate(&self, kind: StatisticKind) -> Option<Certificate> {
        let d = self.thresholds[0];
        let unit = self.weights.iter().all(|&w| w == 1.0);
        let common = self.thresholds.iter().all(|&x| x == d);
        (kind == StatisticKind::Ge && unit && common && d >= 1).then_some(Certificate {
            c: 2.0,
            a: d as f64,
            b: 0.0,
        })
    }

    fn random_edges(&self) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for i in 0..self.m {
            for j in i + 1..self.m {
                if self.edge_probability(i, j) > 0.0 {
                    e.push((i, j));
                }
            }
        }
        e
    }

    pub fn degrees(&self, config: &Configuration) -> Result<Vec<i64>> {
        let edges = match config {
            Configuration::Graph { vertices, edges } if *vertices == self.m && edges.len() == self.m * (self.m - 1) / 2 => {
                edges
            }
            _ => return Err(Error::invalid("configuration is not a graph on this vertex set")),
        };
        let mut deg = vec![0i64; self.m];
        for i in 0..self.m {
            for j in i + 1..self.m {
                if edges[edge_index(self.m, i, j)] {
                    deg[i] += 1;
                    deg[j] += 1;
                }
            }
        }
        Ok(deg)
    }

    pub fn sample_configuration(&self, rng: &mut dyn RngCore) -> Result<Configuration> {
        let mut edges = vec![false; self.m * (self.m - 1) / 2];
        for i in 0..self.m {
            for j in i + 1..self.m {
                let q = self.edge_probability(i, j);
                if q > 0.0 && rng.gen::<f64>() < q {
                    edges[edge_index(self.m, i, j)] = true;
                }
            }
        }
        Ok(Configuration::Graph {
            vertices: self.m,
            edges,
        })
    }

    pub fn statistic(&self, config: &Configuration, kind: StatisticKind) -> Result<f64> {
        let deg = self.degrees(config)?;
        let all: Vec<usize> = (0..self.m).collect();
        Ok(weighted_statistic(&deg, &self.weights, &self.thresholds, &all, kind))
    }

    pub fn enumerate_law(&self, kind: StatisticKind) -> Result<Vec<(f64, f64)>> {
        let edges = self.random_edges();
        let count = 2f64.powi(edges.len() as i32);
        if count > ENUMERATION_LIMIT {
            return Err(Error::EnumerationTooLarge {
                count,
                limit: ENUMERATION_LIMIT,
            });
        }
        let all: Vec<usize> = (0..self.m).collect();
        let mut atoms = Vec::with_capacity(count as usize);
        for mask in 0u64..(1u64 << edges.len()) {
            let mut deg = vec![0i64; self.m];
            let mut prob = 1.0;
            for (k, &(i, j)) in edges.iter().enumerate() {
                let q = self.edge_probability(i, j);
                if mask >> k & 1 == 1 {
                    deg[i] += 1;
                    deg[j] += 1;
                    prob *= q;
                } else {
                    prob *= 1.0 - q;
                }
            }
            atoms.push((weighted_statistic(&deg, &self.weights, &self.thresholds, &all, kind), prob));
        }
        Ok(merge_atoms(atoms))
    }

    pub fn pair_sampler(&self, kind: StatisticKind) -> Result<Box<dyn PairSampler>> {
        let reduction = self.reduction(kind);
        let engine = Engine::new(
            reduction
                .active
                .iter()
                .map(|&a| (&self.marginals[a], self.thresholds[a], self.weights[a])),
            kind,
        )?;
        let chains = reduction
            .active
            .iter()
            .map(|&a| self.vertex_chain(a))
            .collect::<Result<Vec<_>>>()?;
        Ok(Box::new(ErPairs {
            c: self.coupling_constant(kind)?,
            model: self.clone(),
            kind,
            active: reduction.active,
            engine,
            chains,
        }))
    }

    /// Chain over the random edges at `alpha`, ordered as `neighbors[alpha]`.
    fn vertex_chain(&self, alpha: usize) -> Result<MonotoneChain> {
        let p: Vec<f64> = self.neighbors[alpha]
            .iter()
            .map(|&b| self.edge_probability(alpha, b))
            .collect();
        MonotoneChain::new(&p)
    }
}

struct ErPairs {
    model: ErGraph,
    kind: StatisticKind,
    active: Vec<usize>,
    engine: Engine,
    chains: Vec<MonotoneChain>,
    c: f64,
}

impl PairSampler for ErPairs {
    fn sample(&self, rng: &mut dyn RngCore) -> Result<CoupledSample> {
        let g = &self.model;
        let (slot, n, t) = self.engine.draw(rng);
        let alpha = self.active[slot];
        let (base_bits, lifted_bits) = chain_pair(&self.chains[slot], n, t, rng)?;
        let mut base = vec![0i64; g.m];
        for i in 0..g.m {
            for j in i + 1..g.m {
                if i == alpha || j == alpha {
                    continue;
                }
                let q = g.edge_probability(i, j);
                if q > 0.0 && rng.gen::<f64>() < q {
                    base[i] += 1;
                    base[j] += 1;
                }
            }
        }
        let mut lifted = base.clone();
        for (k, &b) in g.neighbors[alpha].iter().enumerate() {
            if base_bits[k] {
                base[alpha] += 1;
                base[b] += 1;
            }
            if lifted_bits[k] {
                lifted[alpha] += 1;
                lifted[b] += 1;
            }
        }
        Ok(CoupledSample {
            y: weighted_statistic(&base, &g.weights, &g.thresholds, &self.active, self.kind),
            y_s: weighted_statistic(&lifted, &g.weights, &g.thresholds, &self.active, self.kind),
            alpha,
            statistic: self.kind,
        })
    }

    fn reduced_mean(&self) -> f64 {
        self.engine.total()
    }

    fn coupling_constant(&self) -> f64 {
        self.c
    }
}
