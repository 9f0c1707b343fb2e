//! Color counts of a uniform sample drawn without replacement.

use rand::seq::index;
use rand::{Rng, RngCore};

use super::config::HypergeometricConfig;
use super::engine::Engine;
use super::{
    check_weights, merge_atoms, weighted_statistic, Configuration, CoupledSample, MeanEstimate, PairSampler,
    Reduction, StatisticKind, ENUMERATION_LIMIT,
};
use crate::error::{Error, Result};
use crate::lattice::LatticePmf;

/// `colors[a]` balls of color `a`; a sample of `s` distinct balls.
#[derive(Debug, Clone)]
pub struct Hypergeometric {
    colors: Vec<u64>,
    s: u64,
    n: u64,
    /// First label of each color.
    starts: Vec<u64>,
    weights: Vec<f64>,
    thresholds: Vec<i64>,
    marginals: Vec<LatticePmf>,
}

impl Hypergeometric {
    pub fn new(colors: Vec<u64>, sample_size: u64, weights: Vec<f64>, thresholds: Vec<i64>) -> Result<Self> {
        let m = colors.len();
        if m == 0 {
            return Err(Error::invalid("at least one color is required"));
        }
        if colors.contains(&0) {
            return Err(Error::invalid("every color needs at least one ball"));
        }
        if weights.len() != m || thresholds.len() != m {
            return Err(Error::invalid("weights and thresholds need one entry per color"));
        }
        check_weights(&weights)?;
        let n: u64 = colors.iter().sum();
        if sample_size > n {
            return Err(Error::invalid(format!("sample size {sample_size} exceeds the population {n}")));
        }
        let mut starts = Vec::with_capacity(m);
        let mut acc = 0;
        for &c in &colors {
            starts.push(acc);
            acc += c;
        }
        let marginals = colors
            .iter()
            .map(|&c| LatticePmf::hypergeometric(c, sample_size, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            colors,
            s: sample_size,
            n,
            starts,
            weights,
            thresholds,
            marginals,
        })
    }

    pub(crate) fn from_config(c: &HypergeometricConfig) -> Result<Self> {
        let m = c.colors.len();
        Self::new(
            c.colors.clone(),
            c.sample_size,
            c.weights.expand(m, "weights")?,
            c.thresholds.expand(m, "thresholds")?,
        )
    }

    pub fn colors(&self) -> &[u64] {
        &self.colors
    }

    pub fn sample_size(&self) -> u64 {
        self.s
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
            .ok_or_else(|| Error::invalid(format!("color {alpha} out of range")))
    }

    pub fn reduction(&self, kind: StatisticKind) -> Reduction {
        Reduction::from_marginals(&self.marginals, &self.weights, &self.thresholds, kind)
    }

    pub fn mean(&self, kind: StatisticKind) -> Result<MeanEstimate> {
        Ok(MeanEstimate::exact(
            (0..self.colors.len())
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

    fn color_of(&self, label: u64) -> usize {
        self.starts.partition_point(|&s| s <= label) - 1
    }

    pub fn counts(&self, config: &Configuration) -> Result<Vec<i64>> {
        match config {
            Configuration::Sample { labels } if labels.len() as u64 == self.s => {
                let mut counts = vec![0i64; self.colors.len()];
                for &l in labels {
                    if l as u64 >= self.n {
                        return Err(Error::invalid(format!("ball label {l} out of range")));
                    }
                    counts[self.color_of(l as u64)] += 1;
                }
                Ok(counts)
            }
            _ => Err(Error::invalid("configuration is not a sample of this size")),
        }
    }

    pub fn sample_configuration(&self, rng: &mut dyn RngCore) -> Result<Configuration> {
        let mut labels = index::sample(rng, self.n as usize, self.s as usize).into_vec();
        labels.sort_unstable();
        Ok(Configuration::Sample { labels })
    }

    pub fn statistic(&self, config: &Configuration, kind: StatisticKind) -> Result<f64> {
        let counts = self.counts(config)?;
        let all: Vec<usize> = (0..self.colors.len()).collect();
        Ok(weighted_statistic(&counts, &self.weights, &self.thresholds, &all, kind))
    }

    /// Enumerates count vectors with probability `prod C(n_a, k_a) / C(n, s)`.
    pub fn enumerate_law(&self, kind: StatisticKind) -> Result<Vec<(f64, f64)>> {
        let bound: f64 = self.colors.iter().map(|&c| (c.min(self.s) + 1) as f64).product();
        if bound > ENUMERATION_LIMIT {
            return Err(Error::EnumerationTooLarge {
                count: bound,
                limit: ENUMERATION_LIMIT,
            });
        }
        let mut ln_fact = vec![0.0f64; self.n as usize + 1];
        for i in 1..ln_fact.len() {
            ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
        }
        let ln_choose = |a: u64, b: u64| ln_fact[a as usize] - ln_fact[b as usize] - ln_fact[(a - b) as usize];
        let ln_total = ln_choose(self.n, self.s);
        let m = self.colors.len();
        let all: Vec<usize> = (0..m).collect();
        let mut atoms = Vec::new();
        let mut k = vec![0i64; m];
        // Balls still available in colors after index `a`.
        let mut after = vec![0u64; m + 1];
        for a in (0..m).rev() {
            after[a] = after[a + 1] + self.colors[a];
        }
        fn rec(
            a: usize,
            left: u64,
            model: &Hypergeometric,
            after: &[u64],
            k: &mut Vec<i64>,
            ln_acc: f64,
            ln_choose: &dyn Fn(u64, u64) -> f64,
            out: &mut Vec<(Vec<i64>, f64)>,
        ) {
            if a == model.colors.len() {
                if left == 0 {
                    out.push((k.clone(), ln_acc));
                }
                return;
            }
            let hi = left.min(model.colors[a]);
            let lo = left.saturating_sub(after[a + 1]);
            for j in lo..=hi {
                k[a] = j as i64;
                rec(a + 1, left - j, model, after, k, ln_acc + ln_choose(model.colors[a], j), ln_choose, out);
            }
            k[a] = 0;
        }
        let mut vectors = Vec::new();
        rec(0, self.s, self, &after, &mut k, 0.0, &ln_choose, &mut vectors);
        for (counts, ln_p) in vectors {
            atoms.push((
                weighted_statistic(&counts, &self.weights, &self.thresholds, &all, kind),
                (ln_p - ln_total).exp(),
            ));
        }
        Ok(merge_atoms(atoms))
    }

    /// Counts of a uniform sample holding exactly `a` balls of color `alpha`.
    fn conditional_counts(&self, alpha: usize, a: u64, rng: &mut dyn RngCore) -> Vec<i64> {
        let mut counts = vec![0i64; self.colors.len()];
        counts[alpha] = a as i64;
        let others = self.n - self.colors[alpha];
        for r in index::sample(rng, others as usize, (self.s - a) as usize) {
            // Relabel the non-alpha balls consecutively.
            let mut label = r as u64;
            if label >= self.starts[alpha] {
                label += self.colors[alpha];
            }
            counts[self.color_of(label)] += 1;
        }
        counts
    }

    /// Replaces a uniform non-`alpha` ball of the sample by an unsampled ball of color `alpha`.
    fn step_up(&self, alpha: usize, counts: &mut [i64], rng: &mut dyn RngCore) {
        let non_alpha = self.s as i64 - counts[alpha];
        let mut r = rng.gen_range(0..non_alpha);
        for (b, c) in counts.iter_mut().enumerate() {
            if b == alpha {
                continue;
            }
            if r < *c {
                *c -= 1;
                break;
            }
            r -= *c;
        }
        counts[alpha] += 1;
    }

    /// Replaces a sampled ball of color `alpha` by a uniform unsampled ball of another color.
    fn step_down(&self, alpha: usize, counts: &mut [i64], rng: &mut dyn RngCore) {
        let free = (self.n - self.colors[alpha]) as i64 - (self.s as i64 - counts[alpha]);
        let mut r = rng.gen_range(0..free);
        for b in 0..counts.len() {
            if b == alpha {
                continue;
            }
            let avail = self.colors[b] as i64 - counts[b];
            if r < avail {
                counts[b] += 1;
                break;
            }
            r -= avail;
        }
        counts[alpha] -= 1;
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
        Ok(Box::new(HypergeometricPairs {
            c: self.coupling_constant(kind)?,
            model: self.clone(),
            kind,
            active: reduction.active,
            engine,
        }))
    }
}

struct HypergeometricPairs {
    model: Hypergeometric,
    kind: StatisticKind,
    active: Vec<usize>,
    engine: Engine,
    c: f64,
}

impl PairSampler for HypergeometricPairs {
    fn sample(&self, rng: &mut dyn RngCore) -> Result<CoupledSample> {
        let h = &self.model;
        let (slot, n, t) = self.engine.draw(rng);
        let alpha = self.active[slot];
        let base = h.conditional_counts(alpha, n as u64, rng);
        let mut lifted = base.clone();
        if t >= n {
            for _ in n..t {
                h.step_up(alpha, &mut lifted, rng);
            }
        } else {
            for _ in t..n {
                h.step_down(alpha, &mut lifted, rng);
            }
        }
        Ok(CoupledSample {
            y: weighted_statistic(&base, &h.weights, &h.thresholds, &self.active, self.kind),
            y_s: weighted_statistic(&lifted, &h.weights, &h.thresholds, &self.active, self.kind),
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
    fn marginal_example() {
        let h = Hypergeometric::new(vec![2, 2], 2, vec![1.0; 2], vec![1; 2]).unwrap();
        let pmf = h.marginal_pmf(0).unwrap();
        assert_eq!(pmf.lo(), 0);
        for (p, e) in pmf.probs().iter().zip([1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0]) {
            assert!((p - e).abs() < 1e-14);
        }
    }

    #[test]
    fn exhaustive_sample_is_sure() {
        let h = Hypergeometric::new(vec![2, 2], 4, vec![1.0; 2], vec![1; 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = h.sample_configuration(&mut rng).unwrap();
        assert_eq!(h.counts(&c).unwrap(), vec![2, 2]);
        // Every indicator is constant, so nothing is left to couple.
        assert_eq!(h.reduction(StatisticKind::Ge).offset, 2.0);
        assert!(h.pair_sampler(StatisticKind::Ge).is_err());
    }

    #[test]
    fn enumeration_of_six_samples() {
        let h = Hypergeometric::new(vec![2, 2], 2, vec![1.0; 2], vec![1; 2]).unwrap();
        let law = h.enumerate_law(StatisticKind::Ge).unwrap();
        // Counts (2,0) and (0,2) give Y = 1; the four mixed samples give Y = 2.
        assert_eq!(law.len(), 2);
        assert!((law[0].1 - 2.0 / 6.0).abs() < 1e-14);
        assert!((law[1].1 - 4.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn enumeration_matches_means() {
        let h = Hypergeometric::new(vec![3, 1, 4, 2], 5, vec![1.0, 2.0, 0.5, 1.0], vec![2, 1, 2, 1]).unwrap();
        for kind in StatisticKind::ALL {
            let law = h.enumerate_law(kind).unwrap();
            let total: f64 = law.iter().map(|a| a.1).sum();
            let mean: f64 = law.iter().map(|a| a.0 * a.1).sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!((mean - h.mean(kind).unwrap().value).abs() < 1e-12);
        }
    }

    #[test]
    fn walk_moves_one_other_color() {
        let h = Hypergeometric::new(vec![3, 4, 5], 6, vec![1.0; 3], vec![2; 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let mut c = h.conditional_counts(0, 0, &mut rng);
            assert_eq!(c.iter().sum::<i64>(), 6);
            for _ in 0..3 {
                let before = c.clone();
                h.step_up(0, &mut c, &mut rng);
                assert_eq!(c[0], before[0] + 1);
                assert!(c[1] <= before[1] && c[2] <= before[2]);
                assert_eq!(c[1] + c[2], before[1] + before[2] - 1);
            }
        }
    }

    #[test]
    fn ne_pairs_differ_by_at_most_two_weights() {
        let h = Hypergeometric::new(vec![3, 4, 5, 2], 6, vec![1.0, 1.5, 0.5, 1.0], vec![1, 2, 2, 0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for kind in StatisticKind::ALL {
            let s = h.pair_sampler(kind).unwrap();
            for _ in 0..20_000 {
                let p = s.sample(&mut rng).unwrap();
                assert!(p.y_s - p.y <= s.coupling_constant() + 1e-9);
                if kind == StatisticKind::Ne {
                    assert!((p.y_s - p.y).abs() <= 2.0 * 1.5 + 1e-9);
                }
            }
        }
    }
}
