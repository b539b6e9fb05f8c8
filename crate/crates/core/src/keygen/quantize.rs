use crate::error::{Error, Result};

use super::bits::{gray_encode, BitString};

/// Where the quantizer range comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantRange {
    Fixed {
        min: f64,
        max: f64,
    },
    /// Percentiles (fractions in `[0, 1]`) of the samples being quantized.
    Calibrated {
        lo: f64,
        hi: f64,
    },
}

impl Default for QuantRange {
    fn default() -> Self {
        QuantRange::Calibrated { lo: 0.01, hi: 0.99 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerConfig {
    pub levels: u32,
    pub range: QuantRange,
}

impl Default for QuantizerConfig {
    fn default() -> Self {
        Self {
            levels: 16,
            range: QuantRange::default(),
        }
    }
}

impl QuantizerConfig {
    pub fn with_levels(levels: u32) -> Self {
        Self {
            levels,
            ..Self::default()
        }
    }

    pub fn fixed(levels: u32, min: f64, max: f64) -> Self {
        Self {
            levels,
            range: QuantRange::Fixed { min, max },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 || !self.levels.is_power_of_two() {
            return Err(Error::InvalidParams(format!(
                "quantizer levels = {} must be a power of two >= 2",
                self.levels
            )));
        }
        if let QuantRange::Calibrated { lo, hi } = self.range {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
                return Err(Error::InvalidParams(format!(
                    "calibration percentiles ({lo}, {hi}) must satisfy 0 <= lo < hi <= 1"
                )));
            }
        }
        Ok(())
    }

    pub fn bits_per_sample(&self) -> u32 {
        self.levels.trailing_zeros()
    }
}

/// Linear-interpolated quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    match sorted.get(i + 1) {
        Some(next) => sorted[i] + frac * (next - sorted[i]),
        None => sorted[i],
    }
}

/// Uniform-width quantizer over a fixed interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    pub levels: u32,
    pub min: f64,
    pub max: f64,
}

impl Quantizer {
    pub fn new(levels: u32, min: f64, max: f64) -> Result<Self> {
        QuantizerConfig::fixed(levels, min, max).validate()?;
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::DegenerateRange { min, max });
        }
        Ok(Self { levels, min, max })
    }

    /// Resolves the configured range against `samples`.
    pub fn fit(samples: &[f64], cfg: &QuantizerConfig) -> Result<Self> {
        cfg.validate()?;
        match cfg.range {
            QuantRange::Fixed { min, max } => Self::new(cfg.levels, min, max),
            QuantRange::Calibrated { lo, hi } => {
                if samples.is_empty() {
                    return Err(Error::EmptyInput("calibration samples"));
                }
                let mut sorted = samples.to_vec();
                sorted.sort_by(f64::total_cmp);
                Self::new(cfg.levels, quantile_sorted(&sorted, lo), quantile_sorted(&sorted, hi))
            }
        }
    }

    /// Cell index in `0..levels`, clamped at both edges.
    pub fn cell(&self, x: f64) -> u64 {
        let t = (x - self.min) / (self.max - self.min) * self.levels as f64;
        if t.is_nan() || t < 0.0 {
            0
        } else {
            (t.floor() as u64).min(self.levels as u64 - 1)
        }
    }

    pub fn bits_per_sample(&self) -> u32 {
        self.levels.trailing_zeros()
    }

    /// Appends the Gray-coded cell index of `x`.
    pub fn encode_into(&self, x: f64, out: &mut BitString) {
        out.push_word(gray_encode(self.cell(x)), self.bits_per_sample());
    }

    pub fn encode(&self, samples: &[f64]) -> BitString {
        let mut out = BitString::new();
        for &x in samples {
            self.encode_into(x, &mut out);
        }
        out
    }
}

/// Quantizes every sample to `log2(levels)` Gray-coded bits.
pub fn quantize(samples: &[f64], cfg: &QuantizerConfig) -> Result<BitString> {
    Ok(Quantizer::fit(samples, cfg)?.encode(samples))
}

/// Removes the sample mean.
pub fn extract_randomness(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("probe samples"));
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    Ok(samples.iter().map(|x| x - mean).collect())
}
