use serde::Serialize;

use sizebias::bounds::{crossover, BoundFamily, BoundInputs, TailBoundReport};
use sizebias::models::MeanEstimate;
use sizebias::verify::{derive_seed, run_suite, sample_pairs, sample_statistics};
use sizebias::{CoupledSample, ModelSpec, Side, StatisticKind};

use crate::args::{BoundsArgs, CompareArgs, Format, SimulateArgs, VerifyArgs};
use crate::util::{float, json, kinds, load, parse_t_grid, seed, write_output};
use crate::CliError;

#[derive(Serialize)]
struct BoundsEntry {
    statistic: StatisticKind,
    mean: MeanEstimate,
    offset: f64,
    report: TailBoundReport,
}

#[derive(Serialize)]
struct BoundsDocument {
    model: String,
    entries: Vec<BoundsEntry>,
}

/// Bound inputs for each requested statistic; constant statistics are
/// skipped when both were requested and rejected when named.
fn resolved(model: &ModelSpec, requested: &[StatisticKind]) -> Result<Vec<(StatisticKind, BoundInputs)>, CliError> {
    let mut out = Vec::new();
    for &kind in requested {
        match model.bound_inputs(kind) {
            Ok(inputs) => out.push((kind, inputs)),
            Err(e) if requested.len() > 1 && e.is_validation() => {
                log::warn!("skipping {}: {e}", kind.name());
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

pub fn bounds(args: &BoundsArgs) -> Result<(), CliError> {
    let doc = load(&args.common)?;
    let model = doc.model.build()?;
    let grid = parse_t_grid(&args.t_grid)?;
    let mut entries = Vec::new();
    for (kind, inputs) in resolved(&model, &kinds(args.common.statistic))? {
        entries.push(BoundsEntry {
            statistic: kind,
            mean: model.mean(kind)?,
            offset: model.offset(kind)?,
            report: TailBoundReport::build(inputs, &grid, &BoundFamily::ALL)?,
        });
    }
    let body = match args.common.format {
        Format::Json => json(&BoundsDocument {
            model: model.variant().into(),
            entries,
        })?,
        Format::Csv => {
            let mut s = String::from("model,statistic,mean,mu,c,t,bound,side,value\n");
            for e in &entries {
                for r in &e.report.rows {
                    s.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{}\n",
                        model.variant(),
                        e.statistic.name(),
                        float(e.mean.value),
                        float(e.report.inputs.mu),
                        float(e.report.inputs.c),
                        float(r.t),
                        r.family.label(r.side),
                        r.side.name(),
                        float(r.value)
                    ));
                }
            }
            s
        }
    };
    write_output(args.common.out.as_deref(), &body)
}

#[derive(Serialize)]
struct Summary {
    mean: f64,
    std_dev: f64,
}

fn summary(ys: impl Iterator<Item = f64> + Clone) -> Summary {
    let n = ys.clone().count() as f64;
    let mean = ys.clone().sum::<f64>() / n;
    let var = if n > 1.0 {
        ys.map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Summary {
        mean,
        std_dev: var.sqrt(),
    }
}

#[derive(Serialize)]
struct SimulateEntry {
    statistic: StatisticKind,
    seed: u64,
    /// Add to pair values to recover the full statistic.
    offset: f64,
    summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pairs: Option<Vec<CoupledSample>>,
}

#[derive(Serialize)]
struct SimulateDocument {
    model: String,
    seed: u64,
    samples: usize,
    entries: Vec<SimulateEntry>,
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let doc = load(&args.common)?;
    let model = doc.model.build()?;
    let seed = seed(args.seed, &doc)?;
    if args.samples == 0 {
        return Err(CliError::Validation("--samples must be positive".into()));
    }
    let mut entries = Vec::new();
    for (k, kind) in kinds(args.common.statistic).into_iter().enumerate() {
        let sub = derive_seed(seed, k as u64);
        let offset = model.offset(kind)?;
        let entry = if args.pairs {
            let sampler = model.pair_sampler(kind)?;
            let pairs = sample_pairs(sampler.as_ref(), args.samples, sub)?;
            SimulateEntry {
                statistic: kind,
                seed: sub,
                offset,
                summary: summary(pairs.iter().map(|p| p.y)),
                values: None,
                pairs: Some(pairs),
            }
        } else {
            let values = sample_statistics(&model, kind, args.samples, sub)?;
            SimulateEntry {
                statistic: kind,
                seed: sub,
                offset,
                summary: summary(values.iter().copied()),
                values: Some(values),
                pairs: None,
            }
        };
        log::info!(
            "{} {}: sample mean {}, sd {}",
            model.variant(),
            kind.name(),
            entry.summary.mean,
            entry.summary.std_dev
        );
        entries.push(entry);
    }
    let body = match args.common.format {
        Format::Json => json(&SimulateDocument {
            model: model.variant().into(),
            seed,
            samples: args.samples,
            entries,
        })?,
        Format::Csv if args.pairs => {
            let mut s = String::from("index,statistic,alpha,y,y_s\n");
            for e in &entries {
                for (i, p) in e.pairs.iter().flatten().enumerate() {
                    s.push_str(&format!("{i},{},{},{},{}\n", e.statistic.name(), p.alpha, float(p.y), float(p.y_s)));
                }
            }
            s
        }
        Format::Csv => {
            let mut s = String::from("index,statistic,y\n");
            for e in &entries {
                for (i, y) in e.values.iter().flatten().enumerate() {
                    s.push_str(&format!("{i},{},{}\n", e.statistic.name(), float(*y)));
                }
            }
            s
        }
    };
    write_output(args.common.out.as_deref(), &body)
}

pub fn verify(args: &VerifyArgs) -> Result<(), CliError> {
    let doc = load(&args.common)?;
    let model = doc.model.build()?;
    let seed = seed(args.seed, &doc)?;
    let grid = parse_t_grid(&args.t_grid)?;
    if args.samples == 0 {
        return Err(CliError::Validation("--samples must be positive".into()));
    }
    let report = run_suite(&model, &kinds(args.common.statistic), &grid, args.samples, seed)?;
    for entry in &report.entries {
        for why in &entry.skipped {
            log::warn!("{} {}: skipped {why}", report.model, entry.statistic.name());
        }
    }
    let body = match args.common.format {
        Format::Json => json(&report)?,
        Format::Csv => report.to_csv(),
    };
    write_output(args.common.out.as_deref(), &body)?;
    let failures = report.failures();
    for f in &failures {
        log::error!("{f}");
    }
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Failed(failures.len()))
    }
}

fn parse_bound(name: &str) -> Result<(BoundFamily, Side), CliError> {
    BoundFamily::parse_label(name).map_err(|e| CliError::Validation(e.to_string()))
}

#[derive(Serialize)]
struct CompareRow {
    t: f64,
    value_a: f64,
    value_b: f64,
}

#[derive(Serialize)]
struct CompareEntry {
    statistic: Option<StatisticKind>,
    inputs: BoundInputs,
    rows: Vec<CompareRow>,
    /// Points in the grid range where the two bounds swap order.
    crossovers: Vec<f64>,
}

#[derive(Serialize)]
struct CompareDocument {
    model: String,
    bound_a: String,
    bound_b: String,
    entries: Vec<CompareEntry>,
}

pub fn compare(args: &CompareArgs) -> Result<(), CliError> {
    let grid = parse_t_grid(&args.t_grid)?;
    let a = parse_bound(&args.bound_a)?;
    let b = parse_bound(&args.bound_b)?;
    let (model_name, cases): (String, Vec<(Option<StatisticKind>, BoundInputs)>) = match (args.mu, args.c) {
        (Some(mu), Some(c)) => {
            let mut inputs = BoundInputs::new(mu, c);
            inputs.mcdiarmid_sum_sq = args.mcdiarmid_sum_sq;
            ("custom".into(), vec![(None, inputs)])
        }
        _ => {
            let doc = load(&args.common)?;
            let model = doc.model.build()?;
            let cases = resolved(&model, &kinds(args.common.statistic))?
                .into_iter()
                .map(|(k, i)| (Some(k), i))
                .collect();
            (model.variant().into(), cases)
        }
    };
    let name = |(f, s): (BoundFamily, Side)| f.label(s);
    let mut entries = Vec::new();
    for (kind, inputs) in cases {
        let eval = |(f, s): (BoundFamily, Side), t: f64| -> Result<f64, CliError> {
            inputs.evaluate(f, s, t)?.ok_or_else(|| {
                CliError::Validation(format!("{} is not available for this model and statistic", name((f, s))))
            })
        };
        let rows = grid
            .iter()
            .map(|&t| {
                Ok(CompareRow {
                    t,
                    value_a: eval(a, t)?,
                    value_b: eval(b, t)?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let crossovers = match (grid.first(), grid.last()) {
            (Some(&lo), Some(&hi)) if hi > lo => crossover(
                |t| eval(a, t).unwrap_or(f64::NAN),
                |t| eval(b, t).unwrap_or(f64::NAN),
                lo,
                hi,
                1e-9,
            ),
            _ => Vec::new(),
        };
        for t in &crossovers {
            log::info!("{} and {} cross at t = {t}", name(a), name(b));
        }
        entries.push(CompareEntry {
            statistic: kind,
            inputs,
            rows,
            crossovers,
        });
    }
    let body = match args.common.format {
        Format::Json => json(&CompareDocument {
            model: model_name,
            bound_a: name(a),
            bound_b: name(b),
            entries,
        })?,
        Format::Csv => {
            let mut s = String::from("model,statistic,t,bound_a,value_a,bound_b,value_b,tighter\n");
            for e in &entries {
                let stat = e.statistic.map_or("none", |k| k.name());
                for r in &e.rows {
                    let tighter = if r.value_a < r.value_b {
                        "a"
                    } else if r.value_b < r.value_a {
                        "b"
                    } else {
                        "tie"
                    };
                    s.push_str(&format!(
                        "{model_name},{stat},{},{},{},{},{},{tighter}\n",
                        float(r.t),
                        name(a),
                        float(r.value_a),
                        name(b),
                        float(r.value_b)
                    ));
                }
            }
            s
        }
    };
    write_output(args.common.out.as_deref(), &body)
}
