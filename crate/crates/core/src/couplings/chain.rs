//! Monotone chains `X_0 <= X_1 <= ... <= X_m` with `X_a ~ L(X | sum X = a)`.
//!
//! Between consecutive levels the chain moves by a transition kernel obtained
//! from a max-flow between the two level laws, allowing only the arcs
//! `x -> x + e_i`. The kernels are solved once per probability vector.
//! Exchangeable vectors skip the flow: the first `a` entries of a uniform
//! random permutation already form a monotone chain of the right laws.

use rand::seq::SliceRandom;
use rand::Rng;

use super::bernoulli::{level_masks, ConditionalBernoulli};
use super::flow::FlowNetwork;
use crate::error::{Error, Result};

/// Default cap on the number of coordinates for the flow-based construction.
pub const DEFAULT_CHAIN_LIMIT: usize = 12;

/// One sampled chain: `states[a]` has exactly `a` ones.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingChain {
    pub p: Vec<f64>,
    pub states: Vec<Vec<bool>>,
}

impl CouplingChain {
    pub fn is_monotone(&self) -> bool {
        self.states.iter().enumerate().all(|(a, x)| x.iter().filter(|&&b| b).count() == a)
            && self
                .states
                .windows(2)
                .all(|w| w[0].iter().zip(&w[1]).all(|(&lo, &hi)| !lo || hi))
    }
}

#[derive(Debug, Clone)]
struct Kernel {
    /// Per source mask (position in its level): targets with cumulative probabilities.
    rows: Vec<Vec<(u64, f64)>>,
}

#[derive(Debug, Clone)]
struct KernelChain {
    m: usize,
    levels: Vec<Vec<u64>>,
    /// Cumulative level laws, aligned with `levels`.
    level_cdf: Vec<Vec<f64>>,
    /// Position of every mask within its level.
    position: Vec<usize>,
    kernels: Vec<Kernel>,
    residuals: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Construction {
    Exchangeable,
    Kernels(Box<KernelChain>),
}

/// Sampler of monotone conditional-Bernoulli chains.
#[derive(Debug, Clone)]
pub struct MonotoneChain {
    p: Vec<f64>,
    construction: Construction,
}

fn mask_to_bits(mask: u64, m: usize) -> Vec<bool> {
    (0..m).map(|j| mask >> j & 1 == 1).collect()
}

fn pick(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().expect("nonempty cumulative table");
    let target = u * total;
    cdf.iter().position(|&c| target < c).unwrap_or(cdf.len() - 1)
}

impl KernelChain {
    fn build(p: &[f64]) -> Result<Self> {
        let m = p.len();
        let mut levels = Vec::with_capacity(m + 1);
        let mut laws = Vec::with_capacity(m + 1);
        let mut position = vec![0usize; 1 << m];
        for a in 0..=m {
            let law = ConditionalBernoulli::new(p, a)?.exact_law()?;
            let masks: Vec<u64> = law.iter().map(|&(x, _)| x).collect();
            debug_assert_eq!(masks, level_masks(m, a));
            for (k, &x) in masks.iter().enumerate() {
                position[x as usize] = k;
            }
            levels.push(masks);
            laws.push(law.into_iter().map(|(_, q)| q).collect::<Vec<f64>>());
        }
        let mut kernels = Vec::with_capacity(m);
        let mut residuals = Vec::with_capacity(m);
        for a in 0..m {
            let (kernel, residual) =
                solve_step(m, &levels[a], &laws[a], &levels[a + 1], &laws[a + 1], &position)?;
            kernels.push(kernel);
            residuals.push(residual);
        }
        let level_cdf = laws
            .iter()
            .map(|law| {
                let mut acc = 0.0;
                law.iter()
                    .map(|q| {
                        acc += q;
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            m,
            levels,
            level_cdf,
            position,
            kernels,
            residuals,
        })
    }

    fn step<R: Rng + ?Sized>(&self, a: usize, x: u64, rng: &mut R) -> u64 {
        let row = &self.kernels[a].rows[self.position[x as usize]];
        let u: f64 = rng.gen();
        row.iter()
            .find(|&&(_, c)| u < c)
            .map_or(row[row.len() - 1].0, |&(y, _)| y)
    }

    fn level<R: Rng + ?Sized>(&self, a: usize, rng: &mut R) -> u64 {
        self.levels[a][pick(&self.level_cdf[a], rng.gen())]
    }
}

/// Solves the transport from level `a` to level `a + 1` and returns the
/// kernel with its total-variation residual against the exact upper law.
fn solve_step(
    m: usize,
    lower: &[u64],
    lower_law: &[f64],
    upper: &[u64],
    upper_law: &[f64],
    position: &[usize],
) -> Result<(Kernel, f64)> {
    let (nl, nu) = (lower.len(), upper.len());
    let source = 0;
    let sink = nl + nu + 1;
    let mut net = FlowNetwork::new(nl + nu + 2);
    for (k, &q) in lower_law.iter().enumerate() {
        net.add_arc(source, 1 + k, q);
    }
    let mut arcs = Vec::with_capacity(nl * (m - lower.first().map_or(0, |x| x.count_ones() as usize)));
    for (k, &x) in lower.iter().enumerate() {
        for i in 0..m {
            if x >> i & 1 == 0 {
                let y = x | 1 << i;
                let id = net.add_arc(1 + k, 1 + nl + position[y as usize], f64::INFINITY);
                arcs.push((k, y, id));
            }
        }
    }
    for (k, &q) in upper_law.iter().enumerate() {
        net.add_arc(1 + nl + k, sink, q);
    }
    let total = net.max_flow(source, sink);
    if !(total > 0.0) {
        return Err(Error::Internal("monotone transport carries no flow".into()));
    }

    let mut outflow: Vec<Vec<(u64, f64)>> = vec![Vec::new(); nl];
    let mut inflow = vec![0.0; nu];
    for &(k, y, id) in &arcs {
        let f = net.flow(id);
        if f > 0.0 {
            outflow[k].push((y, f));
            inflow[position[y as usize]] += f;
        }
    }
    let mut rows = Vec::with_capacity(nl);
    for (k, out) in outflow.into_iter().enumerate() {
        let sum: f64 = out.iter().map(|&(_, f)| f).sum();
        if sum > 0.0 {
            let mut acc = 0.0;
            let row: Vec<(u64, f64)> = out
                .into_iter()
                .map(|(y, f)| {
                    acc += f / sum;
                    (y, acc)
                })
                .collect();
            rows.push(row);
        } else {
            // Unrouted source: send it to the neighbour with the largest unmet demand.
            let x = lower[k];
            let y = (0..m)
                .filter(|&i| x >> i & 1 == 0)
                .map(|i| x | 1 << i)
                .max_by(|&u, &v| {
                    let du = upper_law[position[u as usize]] - inflow[position[u as usize]];
                    let dv = upper_law[position[v as usize]] - inflow[position[v as usize]];
                    du.total_cmp(&dv).then(v.cmp(&u))
                })
                .ok_or_else(|| Error::Internal("top level has no upward neighbour".into()))?;
            rows.push(vec![(y, 1.0)]);
        }
    }
    let kernel = Kernel { rows };

    // Propagate the exact lower law through the kernel.
    let mut pushed = vec![0.0; nu];
    for (k, row) in kernel.rows.iter().enumerate() {
        let mut prev = 0.0;
        for &(y, c) in row {
            pushed[position[y as usize]] += lower_law[k] * (c - prev);
            prev = c;
        }
    }
    let residual = 0.5
        * pushed
            .iter()
            .zip(upper_law)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    Ok((kernel, residual))
}

impl MonotoneChain {
    pub fn new(p: &[f64]) -> Result<Self> {
        Self::with_limit(p, DEFAULT_CHAIN_LIMIT)
    }

    /// Builds the chain, refusing the flow construction above `limit` coordinates.
    pub fn with_limit(p: &[f64], limit: usize) -> Result<Self> {
        if let Some(&bad) = p.iter().find(|&&q| !(q > 0.0 && q < 1.0)) {
            return Err(Error::invalid(format!(
                "success probability {bad} is not in the open interval (0, 1)"
            )));
        }
        let exchangeable = p.windows(2).all(|w| w[0] == w[1]);
        let construction = if exchangeable {
            Construction::Exchangeable
        } else if p.len() > limit {
            return Err(Error::ChainTooLarge {
                size: p.len(),
                limit,
            });
        } else {
            Construction::Kernels(Box::new(KernelChain::build(p)?))
        };
        Ok(Self {
            p: p.to_vec(),
            construction,
        })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn is_exchangeable(&self) -> bool {
        matches!(self.construction, Construction::Exchangeable)
    }

    /// Total-variation gap between the kernel-propagated level law and the
    /// exact conditional law, one entry per step `a -> a + 1`.
    pub fn residuals(&self) -> Vec<f64> {
        match &self.construction {
            Construction::Exchangeable => vec![0.0; self.len()],
            Construction::Kernels(k) => k.residuals.clone(),
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals().into_iter().fold(0.0, f64::max)
    }

    /// Draws a full chain `X_0, ..., X_m`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CouplingChain {
        let m = self.len();
        let states = match &self.construction {
            Construction::Exchangeable => {
                let mut order: Vec<usize> = (0..m).collect();
                order.shuffle(rng);
                let mut x = vec![false; m];
                let mut states = vec![x.clone()];
                for &j in &order {
                    x[j] = true;
                    states.push(x.clone());
                }
                states
            }
            Construction::Kernels(k) => {
                let mut x = 0u64;
                let mut states = vec![mask_to_bits(x, m)];
                for a in 0..m {
                    x = k.step(a, x, rng);
                    states.push(mask_to_bits(x, m));
                }
                states
            }
        };
        CouplingChain {
            p: self.p.clone(),
            states,
        }
    }

    /// Draws the pair `(X_a, X_b)` of one chain, for `a <= b <= m`.
    pub fn segment<R: Rng + ?Sized>(&self, a: usize, b: usize, rng: &mut R) -> Result<(Vec<bool>, Vec<bool>)> {
        let m = self.len();
        if a > b || b > m {
            return Err(Error::invalid(format!(
                "chain segment ({a}, {b}) outside 0 <= a <= b <= {m}"
            )));
        }
        match &self.construction {
            Construction::Exchangeable => {
                let mut order: Vec<usize> = (0..m).collect();
                let (head, _) = order.partial_shuffle(rng, b);
                let mut x = vec![false; m];
                for &j in &head[..a] {
                    x[j] = true;
                }
                let mut y = x.clone();
                for &j in &head[a..b] {
                    y[j] = true;
                }
                Ok((x, y))
            }
            Construction::Kernels(k) => {
                debug_assert_eq!(k.m, m);
                let lower = k.level(a, rng);
                let mut upper = lower;
                for level in a..b {
                    upper = k.step(level, upper, rng);
                }
                Ok((mask_to_bits(lower, m), mask_to_bits(upper, m)))
            }
        }
    }
}
