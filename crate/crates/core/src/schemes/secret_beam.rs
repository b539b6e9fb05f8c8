use num_complex::Complex64;
use rand::Rng;

use crate::beamforming::{perturb, steering_beamformer, Beamformer};
use crate::channel::{evolve, sample_channel, PathLink};
use crate::error::{Error, Result};
use crate::keygen::{gray_encode, xor_combine, BitString};
use crate::probing::{bidirectional_probe, BeamTag, EveConfig, Party};

use super::{uniform_bits, SchemeId, SchemeResult, SessionConfig};

/// One party's beams: nominal toward the LoS path plus the perturbed set.
struct Side {
    nominal: Beamformer,
    perturbed: Vec<Beamformer>,
}

impl Side {
    fn new(geom: &crate::channel::ArrayGeometry, az: f64, el: f64, levels: usize, delta_max: f64) -> Result<Self> {
        let perturbed = (0..levels)
            .map(|k| perturb(geom, az, el, perturbation_angle(k, levels, delta_max), delta_max))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            nominal: steering_beamformer(geom, az, el)?,
            perturbed,
        })
    }
}

/// Angle of perturbation level `k`: `delta_max * (k + 1) / K`.
fn perturbation_angle(k: usize, levels: usize, delta_max: f64) -> f64 {
    delta_max * (k + 1) as f64 / levels as f64
}

/// Per-path response terms of a beam pair, so the noiseless response for any
/// gains is a short dot product.
struct Projection(Vec<Complex64>);

impl Projection {
    fn new(link: &PathLink, rx: &Beamformer, tx: &Beamformer) -> Self {
        Self(link.path_coefficients(rx.as_slice(), tx.as_slice()))
    }

    fn response(&self, gains: &[Complex64]) -> Complex64 {
        self.0.iter().zip(gains).map(|(c, g)| c * g).sum()
    }
}

/// Noiseless responses of one direction: calibration beam and every level.
struct Pattern {
    calibration: Projection,
    levels: Vec<Projection>,
}

impl Pattern {
    /// Magnitude ratios `|y_k| / |y_0|` the receiver expects for each level
    /// under the current gains.
    fn ratios(&self, gains: &[Complex64]) -> Vec<f64> {
        let base = self.calibration.response(gains).norm();
        self.levels.iter().map(|p| p.response(gains).norm() / base).collect()
    }
}

/// Nearest expected ratio to the measured one; ties go to the lower level.
fn invert(calibration: Complex64, perturbed: Complex64, expected: &[f64]) -> usize {
    let measured = perturbed.norm() / calibration.norm();
    let dist = |r: f64| {
        let d = (r - measured).abs();
        if d.is_nan() {
            f64::INFINITY
        } else {
            d
        }
    };
    (0..expected.len())
        .min_by(|&a, &b| dist(expected[a]).total_cmp(&dist(expected[b])).then(a.cmp(&b)))
        .unwrap_or(0)
}

/// Beam-perturbation key generation with XOR of both parties' secrets.
///
/// Each round both parties pick a secret level `k` in `0..levels` and send a
/// calibration pilot on their nominal LoS beam followed by a pilot on the
/// beam steered `delta_max * (k + 1) / levels` further in azimuth. The
/// receiver divides the two magnitudes and picks the level whose expected
/// ratio through the block's channel is closest. Both final keys are
/// `bits_A XOR bits_B`, each party using its own exact half.
///
/// A co-located Eve hears her host's inbound pilots with her own noise,
/// recovers the far party's half the same way, and guesses the host's half.
pub fn secret_beam_session(cfg: &SessionConfig) -> Result<SchemeResult> {
    cfg.validate()?;
    if cfg.scheme != SchemeId::SecretBeam {
        return Err(Error::InvalidParams(format!(
            "{} config passed to secret_beam_session",
            cfg.scheme
        )));
    }
    let levels = cfg.levels as usize;
    let width = cfg.levels.trailing_zeros();

    let mut ch = sample_channel(&cfg.channel, &cfg.alice, &cfg.bob, &mut cfg.stream("channel"))?;
    let los = ch.paths.iter().find(|p| p.is_los).copied().unwrap_or(ch.paths[0]);
    let alice = Side::new(&cfg.alice, los.aod_az, los.aod_el, levels, cfg.delta_max)?;
    let bob = Side::new(&cfg.bob, los.aoa_az, los.aoa_el, levels, cfg.delta_max)?;

    let mut link = ch.link();
    // Bob listens to Alice's pilots with his nominal beam, Alice to Bob's;
    // the reverse link is the forward link with the beam roles swapped
    let toward_bob = Pattern {
        calibration: Projection::new(&link, &bob.nominal, &alice.nominal),
        levels: alice
            .perturbed
            .iter()
            .map(|f| Projection::new(&link, &bob.nominal, f))
            .collect(),
    };
    let toward_alice = Pattern {
        calibration: Projection::new(&link, &bob.nominal, &alice.nominal),
        levels: bob
            .perturbed
            .iter()
            .map(|g| Projection::new(&link, g, &alice.nominal))
            .collect(),
    };
    let mut evolve_rng = cfg.stream("evolve");
    let mut secret_rng = cfg.stream("perturbation");
    let mut noise_rng = cfg.stream("noise");
    let mut guess_rng = cfg.stream("eve-guess");

    let mut bits_a = BitString::new();
    let mut bits_b = BitString::new();
    let mut est_a = BitString::new();
    let mut est_b = BitString::new();
    let mut eve_half = BitString::new();
    let mut probes = Vec::new();

    for round in 0..cfg.rounds {
        if round > 0 {
            ch = evolve(&ch, cfg.channel.temporal_rho, &mut evolve_rng)?;
            link.update_gains(&ch);
        }
        let ka = secret_rng.random_range(0..levels);
        let kb = secret_rng.random_range(0..levels);

        let cal = bidirectional_probe(
            &alice.nominal,
            &alice.nominal,
            &bob.nominal,
            &bob.nominal,
            &link,
            cfg.snr_db,
            &cfg.eve,
            &mut noise_rng,
        )?;
        let pert = bidirectional_probe(
            &alice.perturbed[ka],
            &alice.nominal,
            &bob.perturbed[kb],
            &bob.nominal,
            &link,
            cfg.snr_db,
            &cfg.eve,
            &mut noise_rng,
        )?;
        if cfg.record_probes {
            probes.extend(cal.records(round, BeamTag::Nominal, BeamTag::Nominal, cfg.snr_db));
            probes.extend(pert.records(round, BeamTag::Perturbed(ka), BeamTag::Perturbed(kb), cfg.snr_db));
        }

        let ratios_a = toward_bob.ratios(link.gains());
        let ratios_b = toward_alice.ratios(link.gains());
        let ka_hat = invert(cal.at_bob, pert.at_bob, &ratios_a);
        let kb_hat = invert(cal.at_alice, pert.at_alice, &ratios_b);

        bits_a.push_word(gray_encode(ka as u64), width);
        bits_b.push_word(gray_encode(kb as u64), width);
        est_a.push_word(gray_encode(ka_hat as u64), width);
        est_b.push_word(gray_encode(kb_hat as u64), width);

        if let (Some(host), Some(e_cal), Some(e_pert)) = (cfg.eve.colocated_with, cal.at_eve, pert.at_eve) {
            let k = match host {
                Party::Bob => invert(e_cal, e_pert, &ratios_a),
                Party::Alice => invert(e_cal, e_pert, &ratios_b),
            };
            eve_half.push_word(gray_encode(k as u64), width);
        }
    }

    let final_a = xor_combine(&bits_a, &est_b)?;
    let final_b = xor_combine(&est_a, &bits_b)?;
    let guess = uniform_bits(final_a.len(), &mut guess_rng);
    let (bits_eve, eve_guess) = match cfg.eve {
        EveConfig {
            colocated_with: Some(_),
            ..
        } => {
            let g = xor_combine(&eve_half, &guess)?;
            (Some(eve_half), g)
        }
        _ => (None, guess),
    };
    let mut result = SchemeResult::new(bits_a, bits_b, bits_eve, final_a, final_b, eve_guess)?;
    result.probes = probes;
    Ok(result)
}
