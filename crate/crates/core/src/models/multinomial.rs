//! Multinomial occupancy: independent balls placed among urns.

use rand::distributions::{Distribution, WeightedIndex};
use rand::RngCore;

use super::config::MultinomialConfig;
use super::engine::{chain_pair, Engine};
use super::{
    check_weights, merge_atoms, weighted_statistic, Configuration, CoupledSample, MeanEstimate, PairSampler,
    Reduction, StatisticKind, ENUMERATION_LIMIT,
};
use crate::couplings::MonotoneChain;
use crate::error::{Error, Result};
use crate::lattice::LatticePmf;

/// Ball `j` lands in urn `a` with probability `p[a][j]`.
#[derive(Debug, Clone)]
pub struct Multinomial {
    m: usize,
    n: usize,
    /// Urn-major: `p[a * n + j]`.
    p: Vec<f64>,
    weights: Vec<f64>,
    thresholds: Vec<i64>,
    marginals: Vec<LatticePmf>,
    columns: Vec<WeightedIndex<f64>>,
}

impl Multinomial {
    /// `placement[a][j]` in `[0, 1)`, each column summing to one.
    pub fn new(placement: &[Vec<f64>], weights: Vec<f64>, thresholds: Vec<i64>) -> Result<Self> {
        let m = placement.len();
        if m < 2 {
            return Err(Error::invalid("multinomial occupancy needs at least two urns"));
        }
        let n = placement[0].len();
        if n == 0 {
            return Err(Error::invalid("multinomial occupancy needs at least one ball"));
        }
        if weights.len() != m || thresholds.len() != m {
            return Err(Error::invalid("weights and thresholds need one entry per urn"));
        }
        check_weights(&weights)?;
        let mut p = vec![0.0; m * n];
        for (a, row) in placement.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!("placement row {a} has {} entries, expected {n}", row.len())));
            }
            for (j, &q) in row.iter().enumerate() {
                if !(0.0..1.0).contains(&q) {
                    return Err(Error::invalid(format!("placement probability {q} is not in [0, 1)")));
                }
                p[a * n + j] = q;
            }
        }
        let mut columns = Vec::with_capacity(n);
        for j in 0..n {
            let col: Vec<f64> = (0..m).map(|a| p[a * n + j]).collect();
            let total: f64 = col.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("placement column {j} sums to {total}, not 1")));
            }
            columns.push(WeightedIndex::new(&col).map_err(|e| Error::invalid(e.to_string()))?);
        }
        let marginals = (0..m)
            .map(|a| {
                let q: Vec<f64> = (0..n).map(|j| p[a * n + j]).filter(|&q| q > 0.0).collect();
                if q.is_empty() {
                    Ok(LatticePmf::point_mass(0))
                } else {
                    LatticePmf::poisson_binomial(&q)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            m,
            n,
            p,
            weights,
            thresholds,
            marginals,
            columns,
        })
    }

    pub fn uniform(m: usize, n: usize, weights: Vec<f64>, thresholds: Vec<i64>) -> Result<Self> {
        let placement = vec![vec![1.0 / m as f64; n]; m];
        Self::new(&placement, weights, thresholds)
    }

    pub(crate) fn from_config(c: &MultinomialConfig) -> Result<Self> {
        let placement = match (&c.placement, c.urns, c.balls) {
            (Some(p), None, None) => p.clone(),
            (None, Some(m), Some(n)) => vec![vec![1.0 / m as f64; n]; m],
            _ => return Err(Error::invalid("multinomial needs either placement, or urns with balls")),
        };
        let m = placement.len();
        Self::new(&placement, c.weights.expand(m, "weights")?, c.thresholds.expand(m, "thresholds")?)
    }

    pub fn urns(&self) -> usize {
        self.m
    }

    pub fn balls(&self) -> usize {
        self.n
    }

    pub fn placement(&self, urn: usize, ball: usize) -> f64 {
        self.p[urn * self.n + ball]
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
            .ok_or_else(|| Error::invalid(format!("urn {alpha} out of range")))
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

    /// `|w|` for `ge` and `2|w|` for `ne`.
    pub fn coupling_constant(&self, kind: StatisticKind) -> Result<f64> {
        let w = self.reduction(kind).max_weight(&self.weights);
        Ok(match kind {
            StatisticKind::Ge => w,
            StatisticKind::Ne => 2.0 * w,
        })
    }

    /// Moving one ball changes two counts, hence `Y` by at most `2|w|`.
    pub fn mcdiarmid_sum_sq(&self, kind: StatisticKind) -> Option<f64> {
        let w = self.reduction(kind).max_weight(&self.weights);
        let random = (0..self.n).filter(|&j| self.support(j).len() > 1).count();
        (random > 0 && w > 0.0).then(|| random as f64 * (2.0 * w).powi(2))
    }

    fn support(&self, ball: usize) -> Vec<usize> {
        (0..self.m).filter(|&a| self.placement(a, ball) > 0.0).collect()
    }

    pub fn counts(&self, config: &Configuration) -> Result<Vec<i64>> {
        match config {
            Configuration::Balls { locations } if locations.len() == self.n => {
                let mut counts = vec![0i64; self.m];
                for &l in locations {
                    if l >= self.m {
                        return Err(Error::invalid(format!("ball location {l} out of range")));
                    }
                    counts[l] += 1;
                }
                Ok(counts)
            }
            _ => Err(Error::invalid("configuration is not a ball placement for this model")),
        }
    }

    pub fn sample_configuration(&self, rng: &mut dyn RngCore) -> Result<Configuration> {
        Ok(Configuration::Balls {
            locations: self.columns.iter().map(|c| c.sample(rng)).collect(),
        })
    }

    pub fn statistic(&self, config: &Configuration, kind: StatisticKind) -> Result<f64> {
        let counts = self.counts(config)?;
        let all: Vec<usize> = (0..self.m).collect();
        Ok(weighted_statistic(&counts, &self.weights, &self.thresholds, &all, kind))
    }

    pub fn enumerate_law(&self, kind: StatisticKind) -> Result<Vec<(f64, f64)>> {
        let supports: Vec<Vec<usize>> = (0..self.n).map(|j| self.support(j)).collect();
        let count: f64 = supports.iter().map(|s| s.len() as f64).product();
        if count > ENUMERATION_LIMIT {
            return Err(Error::EnumerationTooLarge {
                count,
                limit: ENUMERATION_LIMIT,
            });
        }
        let all: Vec<usize> = (0..self.m).collect();
        let mut atoms = Vec::with_capacity(count as usize);
        let mut pos = vec![0usize; self.n];
        loop {
            let mut counts = vec![0i64; self.m];
            let mut prob = 1.0;
            for j in 0..self.n {
                let a = supports[j][pos[j]];
                counts[a] += 1;
                prob *= self.placement(a, j);
            }
            atoms.push((weighted_statistic(&counts, &self.weights, &self.thresholds, &all, kind), prob));
            let mut j = 0;
            loop {
                if j == self.n {
                    return Ok(merge_atoms(atoms));
                }
                pos[j] += 1;
                if pos[j] < supports[j].len() {
                    break;
                }
                pos[j] = 0;
                j += 1;
            }
        }
    }

    /// Balls that can land in `alpha`, in label order.
    fn candidates(&self, alpha: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.placement(alpha, j) > 0.0).collect()
    }

    fn urn_chain(&self, alpha: usize) -> Result<MonotoneChain> {
        let p: Vec<f64> = self.candidates(alpha).iter().map(|&j| self.placement(alpha, j)).collect();
        MonotoneChain::new(&p)
    }

    /// Location of `ball` conditioned to avoid `alpha`.
    fn land_elsewhere(&self, ball: usize, alpha: usize, rng: &mut dyn RngCore) -> usize {
        loop {
            let a = self.columns[ball].sample(rng);
            if a != alpha {
                return a;
            }
        }
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
            .map(|&a| Ok((self.candidates(a), self.urn_chain(a)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Box::new(MultinomialPairs {
            c: self.coupling_constant(kind)?,
            model: self.clone(),
            kind,
            active: reduction.active,
            engine,
            chains,
        }))
    }
}

struct MultinomialPairs {
    model: Multinomial,
    kind: StatisticKind,
    active: Vec<usize>,
    engine: Engine,
    chains: Vec<(Vec<usize>, MonotoneChain)>,
    c: f64,
}

impl PairSampler for MultinomialPairs {
    fn sample(&self, rng: &mut dyn RngCore) -> Result<CoupledSample> {
        let mm = &self.model;
        let (slot, n, t) = self.engine.draw(rng);
        let alpha = self.active[slot];
        let (candidates, chain) = &self.chains[slot];
        let (base_bits, lifted_bits) = chain_pair(chain, n, t, rng)?;
        let mut base = vec![0i64; mm.m];
        let mut lifted = vec![0i64; mm.m];
        let mut next = 0;
        for j in 0..mm.n {
            if next < candidates.len() && candidates[next] == j {
                let (b, l) = (base_bits[next], lifted_bits[next]);
                next += 1;
                let other = if b && l { alpha } else { mm.land_elsewhere(j, alpha, rng) };
                base[if b { alpha } else { other }] += 1;
                lifted[if l { alpha } else { other }] += 1;
            } else {
                let a = mm.columns[j].sample(rng);
                base[a] += 1;
                lifted[a] += 1;
            }
        }
        Ok(CoupledSample {
            y: weighted_statistic(&base, &mm.weights, &mm.thresholds, &self.active, self.kind),
            y_s: weighted_statistic(&lifted, &mm.weights, &mm.thresholds, &self.active, self.kind),
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

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_marginal_and_means() {
        let mm = Multinomial::uniform(3, 3, vec![1.0; 3], vec![1; 3]).unwrap();
        let b = LatticePmf::poisson_binomial(&[1.0 / 3.0; 3]).unwrap();
        assert!(crate::lattice::max_abs_diff(&mm.marginal_pmf(0).unwrap(), &b) < 1e-15);
        assert!((mm.mean(StatisticKind::Ge).unwrap().value - 3.0 * b.tail_ge(1)).abs() < 1e-14);

        let (m, n) = (20.0f64, 40.0f64);
        let mm = Multinomial::uniform(20, 40, vec![1.0; 20], vec![1; 20]).unwrap();
        let expected = m * (1.0 - (n / m) * (1.0 - 1.0 / m).powf(n - 1.0));
        assert!((mm.mean(StatisticKind::Ne).unwrap().value - expected).abs() < 1e-11);
    }

    #[test]
    fn enumeration_of_uniform_placements() {
        let mm = Multinomial::uniform(3, 3, vec![1.0; 3], vec![1; 3]).unwrap();
        let law = mm.enumerate_law(StatisticKind::Ge).unwrap();
        // Y_ge counts occupied urns: 3 placements with one urn, 18 with two, 6 with three.
        let expect = [(1.0, 3.0 / 27.0), (2.0, 18.0 / 27.0), (3.0, 6.0 / 27.0)];
        assert_eq!(law.len(), 3);
        for (a, e) in law.iter().zip(expect) {
            assert_eq!(a.0, e.0);
            assert!((a.1 - e.1).abs() < 1e-15);
        }
    }

    #[test]
    fn inhomogeneous_enumeration_matches_means() {
        let placement = vec![vec![0.5, 0.0, 0.2, 0.6], vec![0.3, 0.5, 0.3, 0.2], vec![0.2, 0.5, 0.5, 0.2]];
        let mm = Multinomial::new(&placement, vec![1.0, 0.5, 2.0], vec![2, 1, 1]).unwrap();
        for kind in StatisticKind::ALL {
            let law = mm.enumerate_law(kind).unwrap();
            let mean: f64 = law.iter().map(|a| a.0 * a.1).sum();
            assert!((mean - mm.mean(kind).unwrap().value).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_degenerate_placements() {
        let sure = vec![vec![1.0, 0.5], vec![0.0, 0.5]];
        assert!(Multinomial::new(&sure, vec![1.0; 2], vec![1; 2]).is_err());
        let short = vec![vec![0.5, 0.5], vec![0.4, 0.5]];
        assert!(Multinomial::new(&short, vec![1.0; 2], vec![1; 2]).is_err());
    }

    /// Raising the level of urn `alpha` only moves balls into it, so no other
    /// count increases.
    #[test]
    fn other_counts_never_increase_along_the_chain() {
        let placement = vec![vec![0.5, 0.1, 0.2, 0.6], vec![0.3, 0.5, 0.3, 0.2], vec![0.2, 0.4, 0.5, 0.2]];
        let mm = Multinomial::new(&placement, vec![1.0; 3], vec![1; 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for alpha in 0..3 {
            let chain = mm.urn_chain(alpha).unwrap();
            let cand = mm.candidates(alpha);
            for _ in 0..200 {
                let others: Vec<usize> = cand.iter().map(|&j| mm.land_elsewhere(j, alpha, &mut rng)).collect();
                let states = chain.sample(&mut rng).states;
                let counts: Vec<Vec<i64>> = states
                    .iter()
                    .map(|x| {
                        let mut c = vec![0i64; 3];
                        for k in 0..cand.len() {
                            c[if x[k] { alpha } else { others[k] }] += 1;
                        }
                        c
                    })
                    .collect();
                for w in counts.windows(2) {
                    for b in (0..3).filter(|&b| b != alpha) {
                        assert!(w[1][b] <= w[0][b]);
                    }
                }
            }
        }
    }

    #[test]
    fn pairs_respect_the_bound() {
        let mm = Multinomial::uniform(4, 6, vec![1.0, 2.0, 1.0, 0.5], vec![2, 1, 1, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for kind in StatisticKind::ALL {
            let s = mm.pair_sampler(kind).unwrap();
            for _ in 0..20_000 {
                let p = s.sample(&mut rng).unwrap();
                assert!(p.y_s - p.y <= s.coupling_constant() + 1e-9);
                if kind == StatisticKind::Ne {
                    assert!((p.y_s - p.y).abs() <= s.coupling_constant() + 1e-9);
                }
            }
        }
    }
}
