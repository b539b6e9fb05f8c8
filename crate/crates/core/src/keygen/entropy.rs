use std::collections::HashMap;

use crate::error::{Error, Result};

use super::quantize::{QuantRange, Quantizer, QuantizerConfig};

/// Smallest trial count accepted by [`key_entropy_rate`].
pub const DEFAULT_MIN_TRIALS: usize = 2000;

/// Plug-in Shannon entropy in bits of an empirical distribution.
///
/// Counts are summed in sorted order so equal histograms give bit-identical
/// results regardless of how they were collected.
pub fn plugin_entropy(counts: impl IntoIterator<Item = usize>) -> f64 {
    let mut c: Vec<usize> = counts.into_iter().filter(|&x| x > 0).collect();
    c.sort_unstable();
    let total: usize = c.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    -c.iter()
        .map(|&x| {
            let p = x as f64 / t;
            p * p.log2()
        })
        .sum::<f64>()
}

/// Cell indices of one probe stream. A calibrated range that collapses to a
/// point maps everything to cell 0.
fn cells(row: &[f64], cfg: &QuantizerConfig) -> Result<Vec<u32>> {
    match Quantizer::fit(row, cfg) {
        Ok(q) => Ok(row.iter().map(|&x| q.cell(x) as u32).collect()),
        Err(Error::DegenerateRange { .. }) if matches!(cfg.range, QuantRange::Calibrated { .. }) => {
            Ok(vec![0; row.len()])
        }
        Err(e) => Err(e),
    }
}

/// Joint entropy of the quantized probes over mean single-probe entropy.
///
/// `samples[i][t]` is probe `i` in trial `t`. Each probe stream is quantized
/// with its own calibrated range.
pub fn key_entropy_rate(samples: &[Vec<f64>], cfg: &QuantizerConfig) -> Result<f64> {
    key_entropy_rate_with_min(samples, cfg, DEFAULT_MIN_TRIALS)
}

pub fn key_entropy_rate_with_min(samples: &[Vec<f64>], cfg: &QuantizerConfig, min_trials: usize) -> Result<f64> {
    cfg.validate()?;
    let first = samples.first().ok_or(Error::EmptyInput("probe streams"))?;
    let trials = first.len();
    if let Some(row) = samples.iter().find(|r| r.len() != trials) {
        return Err(Error::LengthMismatch(trials, row.len()));
    }
    if trials < min_trials {
        return Err(Error::InsufficientSamples {
            got: trials,
            min: min_trials,
        });
    }
    let rows = samples.iter().map(|r| cells(r, cfg)).collect::<Result<Vec<_>>>()?;

    let singles: Vec<f64> = rows
        .iter()
        .map(|r| {
            let mut hist = vec![0usize; cfg.levels as usize];
            for &c in r {
                hist[c as usize] += 1;
            }
            plugin_entropy(hist)
        })
        .collect();
    // equal entries average to themselves exactly
    let single = if singles.iter().all(|&h| h == singles[0]) {
        singles[0]
    } else {
        singles.iter().sum::<f64>() / singles.len() as f64
    };
    if single <= 0.0 {
        return Err(Error::ZeroEntropy);
    }

    let mut joint: HashMap<Vec<u32>, usize> = HashMap::new();
    for t in 0..trials {
        *joint.entry(rows.iter().map(|r| r[t]).collect()).or_default() += 1;
    }
    Ok(plugin_entropy(joint.into_values()) / single)
}
