use num_complex::Complex64;

use crate::beamforming::{beam_gain, hierarchical_codebook, max_levels, select_beams, BeamId, Beamformer};
use crate::channel::{awgn, evolve, sample_channel, ChannelRealization};
use crate::error::{Error, Result};
use crate::keygen::{extract_randomness, key_entropy_rate, QuantizerConfig};

use super::{SchemeId, SessionConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct MultiresResult {
    pub ker_multires: f64,
    pub ker_fixed: f64,
    /// Alice's probing beams, strongest first.
    pub selected: Vec<BeamId>,
}

/// Bob's fixed receive beam: the codeword of his own hierarchical codebook
/// at `cfg.rx_level` (finest when unset) that collects the most path power.
fn receive_beam(cfg: &SessionConfig, ch: &ChannelRealization) -> Result<Beamformer> {
    let depth = max_levels(&cfg.bob);
    let level = cfg.rx_level.unwrap_or(depth);
    let codebook = hierarchical_codebook(&cfg.bob, level, cfg.hybrid)?;
    let power = |bf: &Beamformer| -> f64 {
        ch.paths
            .iter()
            .map(|p| p.gain.norm_sqr() * beam_gain(bf, &cfg.bob, p.aoa_az, p.aoa_el).map_or(0.0, |g| g.norm_sqr()))
            .sum()
    };
    codebook
        .level(level)
        .ok_or(Error::CodebookTooDeep {
            levels: level,
            elements: cfg.bob.cols,
        })?
        .iter()
        .map(|bf| (power(bf), bf))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, bf)| bf.clone())
        .ok_or(Error::EmptyInput("receive codebook"))
}

/// Key entropy rate of probing `beams` codewords of different resolutions
/// per coherence block, against probing the strongest codeword as many times.
///
/// Alice transmits from her hierarchical codebook, Bob receives on a fixed
/// beam. Every block both arms measure `|w^T H f| + noise`; the channel then
/// takes one AR(1) step. Each probe stream is mean-removed and quantized
/// with `cfg.levels` levels before the entropy ratio is estimated over
/// `cfg.blocks` blocks.
pub fn multires_session(cfg: &SessionConfig) -> Result<MultiresResult> {
    cfg.validate()?;
    if cfg.scheme != SchemeId::Multires {
        return Err(Error::InvalidParams(format!(
            "{} config passed to multires_session",
            cfg.scheme
        )));
    }
    let codebook = hierarchical_codebook(&cfg.alice, max_levels(&cfg.alice), cfg.hybrid)?;
    let mut ch = sample_channel(&cfg.channel, &cfg.alice, &cfg.bob, &mut cfg.stream("channel"))?;
    let w = receive_beam(cfg, &ch)?;
    let selected = select_beams(&codebook, &ch, &w, cfg.beams, cfg.window_db)?;
    let strongest = select_beams(&codebook, &ch, &w, 1, cfg.window_db)?[0];

    let link = ch.link();
    let project = |id: BeamId| -> Vec<Complex64> {
        let f = codebook.get(id).expect("selected from this codebook");
        link.path_coefficients(w.as_slice(), f.as_slice())
    };
    let multi: Vec<Vec<Complex64>> = selected.iter().map(|&id| project(id)).collect();
    let fixed = project(strongest);

    let mut evolve_rng = cfg.stream("evolve");
    let mut noise_multi = cfg.stream("noise-multires");
    let mut noise_fixed = cfg.stream("noise-fixed");
    let p = cfg.beams;
    let mut rows_multi = vec![Vec::with_capacity(cfg.blocks); p];
    let mut rows_fixed = vec![Vec::with_capacity(cfg.blocks); p];
    let response =
        |coeffs: &[Complex64], gains: &[Complex64]| -> Complex64 { coeffs.iter().zip(gains).map(|(c, g)| c * g).sum() };
    let mut gains: Vec<Complex64> = ch.paths.iter().map(|x| x.gain).collect();
    for t in 0..cfg.blocks {
        if t > 0 {
            ch = evolve(&ch, cfg.channel.temporal_rho, &mut evolve_rng)?;
            gains.iter_mut().zip(&ch.paths).for_each(|(g, x)| *g = x.gain);
        }
        for (row, coeffs) in rows_multi.iter_mut().zip(&multi) {
            row.push(awgn(response(coeffs, &gains), cfg.snr_db, &mut noise_multi).norm());
        }
        let clean = response(&fixed, &gains);
        for row in rows_fixed.iter_mut() {
            row.push(awgn(clean, cfg.snr_db, &mut noise_fixed).norm());
        }
    }

    let qcfg = QuantizerConfig::with_levels(cfg.levels);
    let ker = |rows: Vec<Vec<f64>>| -> Result<f64> {
        let rows = rows.iter().map(|r| extract_randomness(r)).collect::<Result<Vec<_>>>()?;
        key_entropy_rate(&rows, &qcfg)
    };
    Ok(MultiresResult {
        ker_multires: ker(rows_multi)?,
        ker_fixed: ker(rows_fixed)?,
        selected,
    })
}
