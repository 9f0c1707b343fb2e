//! Bound-domination and coupling audits.

use serde::{Deserialize, Serialize};

use super::{brute_force_law, derive_seed, exact_size_bias_law, sample_pairs, sample_statistics};
use super::{DiscreteLaw, EmpiricalTail, WILSON_Z};
use crate::bounds::{BoundFamily, BoundInputs, Side};
use crate::error::{Error, Result};
use crate::models::{MeanEstimate, ModelSpec, StatisticKind};

/// Largest total-variation distance accepted between sampled and exact laws.
pub const TV_TOLERANCE: f64 = 0.01;

/// Header of the CSV matrix written for domination audits.
pub const CSV_HEADER: &str = "model,statistic,bound,t,bound_value,empirical,halfwidth,pass";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationRow {
    pub family: BoundFamily,
    pub side: Side,
    pub t: f64,
    pub bound_value: f64,
    pub empirical: f64,
    pub halfwidth: f64,
    pub pass: bool,
}

impl DominationRow {
    /// Family and side, e.g. `sub_poisson_left` or `bernstein`.
    pub fn bound_name(&self) -> String {
        self.family.label(self.side)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub model: String,
    pub statistic: StatisticKind,
    pub mean: MeanEstimate,
    pub inputs: BoundInputs,
    pub n_samples: usize,
    pub seed: u64,
    pub rows: Vec<DominationRow>,
    pub pass: bool,
}

impl DominationReport {
    pub fn failures(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter(|r| !r.pass)
            .map(|r| {
                format!(
                    "{} {}: {} at t = {} is {:.6e}, below the empirical tail {:.6e} (half-width {:.2e})",
                    self.model,
                    self.statistic.name(),
                    r.bound_name(),
                    r.t,
                    r.bound_value,
                    r.empirical,
                    r.halfwidth
                )
            })
            .collect()
    }

    /// CSV lines without header, LF terminated, floats in `{:.16e}`.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                self.model,
                self.statistic.name(),
                r.bound_name(),
                r.t,
                r.bound_value,
                r.empirical,
                r.halfwidth,
                r.pass
            ));
        }
        out
    }
}

/// Checks that every available bound family lies above the empirical tail
/// of `Y - EY`, up to a Wilson half-width, at each `t`.
pub fn audit_domination(
    model: &ModelSpec,
    kind: StatisticKind,
    t_grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<DominationReport> {
    let inputs = model.bound_inputs(kind)?;
    let mean = model.mean(kind)?;
    let tail = EmpiricalTail::new(sample_statistics(model, kind, n_samples, seed)?)?;
    let mut rows = Vec::new();
    for &t in t_grid {
        for family in BoundFamily::ALL {
            for &side in family.sides() {
                let Some(bound_value) = inputs.evaluate(family, side, t)? else {
                    continue;
                };
                let est = tail.tail(mean.value, mean.error_estimate, t, side);
                rows.push(DominationRow {
                    family,
                    side,
                    t,
                    bound_value,
                    empirical: est.probability,
                    halfwidth: est.halfwidth,
                    pass: est.probability - est.halfwidth <= bound_value + 1e-12,
                });
            }
        }
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(DominationReport {
        model: model.variant().to_string(),
        statistic: kind,
        mean,
        inputs,
        n_samples,
        seed,
        rows,
        pass,
    })
}

/// Monte Carlo check of `E[Y f(Y)] = EY E[f(Y^s)]` for one test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub function: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub standard_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub model: String,
    pub statistic: StatisticKind,
    pub n_samples: usize,
    pub seed: u64,
    pub coupling_constant: f64,
    /// Mean of the coupled (reduced) statistic; the model mean minus `offset`.
    pub reduced_mean: f64,
    pub offset: f64,
    pub max_increase: f64,
    pub min_increase: f64,
    pub bound_holds: bool,
    pub identities: Vec<IdentityCheck>,
    /// Distance between the sampled `Y^s` and the exact size-bias law, when enumerable.
    pub tv_size_biased: Option<f64>,
    /// Distance between the sampled `Y` and the exact law, when enumerable.
    pub tv_base: Option<f64>,
    pub tv_tolerance: f64,
    pub pass: bool,
}

impl CouplingReport {
    pub fn failures(&self) -> Vec<String> {
        let name = format!("{} {}", self.model, self.statistic.name());
        let mut out = Vec::new();
        if !self.bound_holds {
            out.push(format!(
                "{name}: Y^s - Y reached {} above the coupling constant {}",
                self.max_increase, self.coupling_constant
            ));
        }
        for id in self.identities.iter().filter(|i| !i.pass) {
            out.push(format!(
                "{name}: size-bias identity for {} off by {:.3e} (standard error {:.3e})",
                id.function, id.residual, id.standard_error
            ));
        }
        for (what, tv) in [("Y^s", self.tv_size_biased), ("Y", self.tv_base)] {
            if let Some(tv) = tv.filter(|&tv| tv > self.tv_tolerance) {
                out.push(format!("{name}: law of sampled {what} is {tv:.4} from exact in total variation"));
            }
        }
        out
    }
}

fn mean_and_se(d: &[f64]) -> (f64, f64) {
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    if d.len() < 2 {
        return (mean, 0.0);
    }
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Draws coupled pairs and checks the increment bound, the size-bias identity
/// on a fixed family of test functions, and (for enumerable models) the laws.
pub fn audit_coupling(model: &ModelSpec, kind: StatisticKind, n_samples: usize, seed: u64) -> Result<CouplingReport> {
    if n_samples == 0 {
        return Err(Error::invalid("at least one sample is required"));
    }
    let sampler = model.pair_sampler(kind)?;
    let pairs = sample_pairs(sampler.as_ref(), n_samples, seed)?;
    let c = sampler.coupling_constant();
    let mu = sampler.reduced_mean();
    let offset = model.offset(kind)?;
    let incr: Vec<f64> = pairs.iter().map(|p| p.y_s - p.y).collect();
    let max_increase = incr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_increase = incr.iter().copied().fold(f64::INFINITY, f64::min);
    let bound_holds = max_increase <= c + 1e-9 * c.max(1.0);

    let exact = match brute_force_law(model, kind) {
        Ok(law) => Some(law.shift(-offset)),
        Err(Error::Unsupported(_)) | Err(Error::EnumerationTooLarge { .. }) => None,
        Err(e) => return Err(e),
    };

    let scale = mu.max(1.0);
    let mut tests: Vec<(String, Box<dyn Fn(f64) -> f64>)> = vec![
        ("constant".into(), Box::new(|_| 1.0)),
        ("identity".into(), Box::new(move |y| y / scale)),
        ("square".into(), Box::new(move |y| (y / scale).powi(2))),
    ];
    match &exact {
        Some(law) => {
            for &(a, _) in law.atoms() {
                let a_law = DiscreteLaw::point_mass(a);
                tests.push((format!("indicator_{a}"), Box::new(move |y| a_law.prob(y))));
            }
        }
        None => tests.push(("indicator_above_mean".into(), Box::new(move |y| if y >= mu { 1.0 } else { 0.0 }))),
    }
    let identities = tests
        .iter()
        .map(|(name, f)| {
            let lhs_terms: Vec<f64> = pairs.iter().map(|p| p.y * f(p.y)).collect();
            let rhs_terms: Vec<f64> = pairs.iter().map(|p| mu * f(p.y_s)).collect();
            let diff: Vec<f64> = lhs_terms.iter().zip(&rhs_terms).map(|(a, b)| a - b).collect();
            let (residual, standard_error) = mean_and_se(&diff);
            IdentityCheck {
                function: name.clone(),
                lhs: mean_and_se(&lhs_terms).0,
                rhs: mean_and_se(&rhs_terms).0,
                residual: residual.abs(),
                standard_error,
                pass: residual.abs() <= WILSON_Z * standard_error + 1e-12 * scale,
            }
        })
        .collect::<Vec<_>>();

    let (tv_size_biased, tv_base) = match &exact {
        Some(reduced) => {
            let sb = exact_size_bias_law(reduced)?;
            let ys: Vec<f64> = pairs.iter().map(|p| p.y).collect();
            let yss: Vec<f64> = pairs.iter().map(|p| p.y_s).collect();
            (
                Some(DiscreteLaw::from_samples(&yss)?.total_variation(&sb)),
                Some(DiscreteLaw::from_samples(&ys)?.total_variation(reduced)),
            )
        }
        None => (None, None),
    };
    let tv_ok = [tv_size_biased, tv_base].iter().flatten().all(|&tv| tv <= TV_TOLERANCE);
    let pass = bound_holds && tv_ok && identities.iter().all(|i| i.pass);
    Ok(CouplingReport {
        model: model.variant().to_string(),
        statistic: kind,
        n_samples,
        seed,
        coupling_constant: c,
        reduced_mean: mu,
        offset,
        max_increase,
        min_increase,
        bound_holds,
        identities,
        tv_size_biased,
        tv_base,
        tv_tolerance: TV_TOLERANCE,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub statistic: StatisticKind,
    pub domination: Option<DominationReport>,
    pub coupling: Option<CouplingReport>,
    /// Why an audit was not run.
    pub skipped: Vec<String>,
}

/// Both audits for each requested statistic of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub model: String,
    pub seed: u64,
    pub n_samples: usize,
    pub t_grid: Vec<f64>,
    pub entries: Vec<SuiteEntry>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for e in &self.entries {
            if let Some(d) = &e.domination {
                out.extend(d.failures());
            }
            if let Some(c) = &e.coupling {
                out.extend(c.failures());
            }
        }
        out
    }

    /// The domination matrix as CSV with header.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for d in self.entries.iter().filter_map(|e| e.domination.as_ref()) {
            out.push_str(&d.csv_rows());
        }
        out
    }
}

/// Runs [`audit_domination`] and [`audit_coupling`] for each statistic, with
/// seeds derived from `seed`. Audits that do not apply are listed as skipped.
pub fn run_suite(
    model: &ModelSpec,
    kinds: &[StatisticKind],
    t_grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<SuiteReport> {
    let mut entries = Vec::new();
    for (k, &kind) in kinds.iter().enumerate() {
        let mut entry = SuiteEntry {
            statistic: kind,
            domination: None,
            coupling: None,
            skipped: Vec::new(),
        };
        let reduced = model.mean(kind)?.value - model.offset(kind)?;
        if !(reduced > 0.0) {
            entry.skipped.push("statistic is almost surely constant".into());
            entries.push(entry);
            continue;
        }
        entry.domination = Some(audit_domination(model, kind, t_grid, n_samples, derive_seed(seed, 2 * k as u64))?);
        match audit_coupling(model, kind, n_samples, derive_seed(seed, 2 * k as u64 + 1)) {
            Ok(r) => entry.coupling = Some(r),
            Err(Error::Unsupported(why)) => entry.skipped.push(format!("coupling: {why}")),
            Err(e) => return Err(e),
        }
        entries.push(entry);
    }
    let pass = entries.iter().all(|e| {
        e.domination.as_ref().is_none_or(|d| d.pass) && e.coupling.as_ref().is_none_or(|c| c.pass)
    });
    Ok(SuiteReport {
        model: model.variant().to_string(),
        seed,
        n_samples,
        t_grid: t_grid.to_vec(),
        entries,
        pass,
    })
}
