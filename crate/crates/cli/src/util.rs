use std::fs;
use std::io::Write;
use std::path::Path;

use sizebias::models::ModelDocument;
use sizebias::StatisticKind;

use crate::args::{Common, StatisticArg};
use crate::CliError;

/// Parses `start:stop:step`, a comma-separated list, or an empty string.
pub fn parse_t_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| CliError::Validation(format!("bad number {s:?} in t-grid {spec:?}")))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) {
                return Err(CliError::Validation(format!("t-grid step must be positive, got {step}")));
            }
            if stop < start {
                Vec::new()
            } else {
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..n).map(|i| start + i as f64 * step).collect()
            }
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(CliError::Validation(format!("t-grid {spec:?} is not start:stop:step"))),
    };
    if let Some(t) = grid.iter().find(|t| **t < 0.0) {
        return Err(CliError::Validation(format!("deviations must be nonnegative, got {t}")));
    }
    Ok(grid)
}

pub fn kinds(s: StatisticArg) -> Vec<StatisticKind> {
    match s {
        StatisticArg::Ge => vec![StatisticKind::Ge],
        StatisticArg::Ne => vec![StatisticKind::Ne],
        StatisticArg::Both => StatisticKind::ALL.to_vec(),
    }
}

pub fn load(common: &Common) -> Result<ModelDocument, CliError> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| CliError::Validation("--config is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok(ModelDocument::from_json(&text)?)
}

pub fn seed(flag: Option<u64>, doc: &ModelDocument) -> Result<u64, CliError> {
    flag.or(doc.seed)
        .ok_or_else(|| CliError::Validation("a seed is required: pass --seed or set \"seed\" in the model document".into()))
}

/// 17 significant digits, enough to round-trip any double.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_output(out: Option<&Path>, body: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, body).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            log::info!("wrote {}", path.display());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Runtime(e.to_string()))?;
        }
    }
    Ok(())
}

pub fn json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_t_grid("1:12:1").unwrap().len(), 12);
        assert_eq!(parse_t_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_t_grid("0:0.3:0.1").unwrap().len(), 4);
        assert!(parse_t_grid("").unwrap().is_empty());
        assert!(parse_t_grid("5:1:1").unwrap().is_empty());
        assert_eq!(parse_t_grid("1, 2.5,4").unwrap(), vec![1.0, 2.5, 4.0]);
        assert!(parse_t_grid("1:2").is_err());
        assert!(parse_t_grid("1:2:0").is_err());
        assert!(parse_t_grid("-1:2:1").is_err());
        assert!(parse_t_grid("a:2:1").is_err());
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
