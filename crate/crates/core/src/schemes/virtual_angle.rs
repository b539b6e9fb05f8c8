use crate::channel::{channel_matrix, evolve, sample_channel, virtual_channel, ArrayGeometry, CMatrix};
use crate::error::{Error, Result};
use crate::keygen::{BitString, Quantizer, QuantizerConfig};

use super::{estimate_channel, uniform_bits, SchemeId, SchemeResult, SessionConfig};

fn index_width(n: usize) -> u32 {
    n.next_power_of_two().trailing_zeros()
}

/// Positions of the `paths` strongest angular-domain entries as bits.
///
/// The `(row, col)` pairs are sorted lexicographically, so the output does
/// not depend on the magnitude order, and each pair is written as
/// `ceil(log2 Nr) + ceil(log2 Nt)` plain binary bits.
pub fn virtual_angle_bits(
    h_hat: &CMatrix,
    paths: usize,
    tx_geom: &ArrayGeometry,
    rx_geom: &ArrayGeometry,
) -> Result<BitString> {
    let hv = virtual_channel(h_hat, tx_geom, rx_geom)?;
    let bins = hv.len();
    if paths == 0 || paths > bins {
        return Err(Error::InvalidParams(format!(
            "cannot take {paths} entries from {bins} virtual bins"
        )));
    }
    let ncols = hv.ncols();
    let mags: Vec<f64> = hv.iter().map(|x| x.norm_sqr()).collect();
    let mut order: Vec<usize> = (0..bins).collect();
    let by_mag = |a: &usize, b: &usize| mags[*b].total_cmp(&mags[*a]).then(a.cmp(b));
    if paths < bins {
        order.select_nth_unstable_by(paths - 1, by_mag);
    }
    let mut top: Vec<(usize, usize)> = order[..paths].iter().map(|&i| (i / ncols, i % ncols)).collect();
    top.sort_unstable();
    let (wr, wc) = (index_width(hv.nrows()), index_width(ncols));
    let mut bits = BitString::new();
    for (r, c) in top {
        bits.push_word(r as u64, wr);
        bits.push_word(c as u64, wc);
    }
    Ok(bits)
}

/// Real and imaginary parts of every entry, Gray-quantized with a range
/// calibrated on this matrix alone.
fn entry_bits(h_hat: &CMatrix, levels: u32) -> Result<BitString> {
    let samples: Vec<f64> = h_hat.iter().flat_map(|x| [x.re, x.im]).collect();
    let q = Quantizer::fit(&samples, &QuantizerConfig::with_levels(levels))?;
    Ok(q.encode(&samples))
}

/// Common driver: one channel, independent estimates per party per round.
fn estimate_session(
    cfg: &SessionConfig,
    expected: SchemeId,
    extract: impl Fn(&CMatrix) -> Result<BitString>,
) -> Result<SchemeResult> {
    cfg.validate()?;
    if cfg.scheme != expected {
        return Err(Error::InvalidParams(format!(
            "{} config passed to {} session",
            cfg.scheme, expected
        )));
    }
    let mut ch = sample_channel(&cfg.channel, &cfg.alice, &cfg.bob, &mut cfg.stream("channel"))?;
    let mut evolve_rng = cfg.stream("evolve");
    let mut rng_a = cfg.stream("estimate-alice");
    let mut rng_b = cfg.stream("estimate-bob");
    let mut rng_e = cfg.stream("estimate-eve");
    let eve_snr = cfg.eve.snr_db.unwrap_or(cfg.snr_db);

    let mut bits_a = BitString::new();
    let mut bits_b = BitString::new();
    let mut bits_e = BitString::new();
    for round in 0..cfg.rounds {
        if round > 0 {
            ch = evolve(&ch, cfg.channel.temporal_rho, &mut evolve_rng)?;
        }
        let h = channel_matrix(&ch);
        bits_a.extend(&extract(&estimate_channel(&h, cfg.snr_db, &mut rng_a))?);
        bits_b.extend(&extract(&estimate_channel(&h, cfg.snr_db, &mut rng_b))?);
        if cfg.eve.colocated_with.is_some() {
            // sharing the host's channel, Eve sounds the same matrix
            bits_e.extend(&extract(&estimate_channel(&h, eve_snr, &mut rng_e))?);
        }
    }
    let (bits_eve, guess) = if cfg.eve.colocated_with.is_some() {
        (Some(bits_e.clone()), bits_e)
    } else {
        (None, uniform_bits(bits_a.len(), &mut cfg.stream("eve-guess")))
    };
    SchemeResult::new(bits_a.clone(), bits_b.clone(), bits_eve, bits_a, bits_b, guess)
}

/// Key bits from the strongest angular-domain entries of each party's own
/// noisy channel estimate. `cfg.channel.num_paths` entries are kept.
pub fn virtual_angle_session(cfg: &SessionConfig) -> Result<SchemeResult> {
    let paths = cfg.channel.num_paths;
    estimate_session(cfg, SchemeId::VirtualAngle, |h| {
        virtual_angle_bits(h, paths, &cfg.alice, &cfg.bob)
    })
}

/// Per-entry quantization of the estimated channel matrix with
/// `cfg.levels` levels per real dimension.
pub fn baseline_channel_quant_session(cfg: &SessionConfig) -> Result<SchemeResult> {
    estimate_session(cfg, SchemeId::Baseline, |h| entry_bits(h, cfg.levels))
}
