//! End-to-end key-generation schemes built on the lower layers.
//!
//! - [`secret_beam_session`]: both parties perturb their beams by secret
//!   quantized angles, estimate the other side's angle from magnitude ratios
//!   and XOR the two halves.
//! - [`virtual_angle_session`]: bits from the positions of the strongest
//!   angular-domain channel entries.
//! - [`baseline_channel_quant_session`]: per-entry quantization of the
//!   estimated channel matrix, for comparison.
//! - [`multires_session`]: key entropy rate of multi-resolution beam probing
//!   against repeated probing of one fixed beam.

mod multires;
mod secret_beam;
mod virtual_angle;

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

use crate::beamforming::{HybridConfig, DEFAULT_DELTA_MAX};
use crate::channel::{awgn_in_place, AngleDistribution, ArrayGeometry, CMatrix, ChannelParams};
use crate::error::{Error, Result};
use crate::keygen::{bar, privacy_amplify, reconcile, BitString, KeyMaterial, DEFAULT_SAFETY_MARGIN};
use crate::probing::{EveConfig, ProbeRecord};
use crate::seeds;

pub use multires::{multires_session, MultiresResult};
pub use secret_beam::secret_beam_session;
pub use virtual_angle::{baseline_channel_quant_session, virtual_angle_bits, virtual_angle_session};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeId {
    SecretBeam,
    VirtualAngle,
    Baseline,
    Multires,
}

impl SchemeId {
    pub const ALL: [SchemeId; 4] = [
        SchemeId::SecretBeam,
        SchemeId::VirtualAngle,
        SchemeId::Baseline,
        SchemeId::Multires,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::SecretBeam => "secret_beam",
            SchemeId::VirtualAngle => "virtual_angle",
            SchemeId::Baseline => "baseline",
            SchemeId::Multires => "multires",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.name() == s)
    }
}

impl std::fmt::Display for SchemeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything one session needs. A session is a pure function of this value.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub scheme: SchemeId,
    /// Alice's array; she is the transmit side of the channel matrix.
    pub alice: ArrayGeometry,
    pub bob: ArrayGeometry,
    pub snr_db: f64,
    pub rounds: usize,
    /// Path count, NLoS offset, angle law and AR(1) coefficient.
    pub channel: ChannelParams,
    /// Quantizer levels; for beam perturbation also the number of angles.
    pub levels: u32,
    /// Beams probed per block in the multi-resolution scheme.
    pub beams: usize,
    pub eve: EveConfig,
    pub seed: u64,
    pub delta_max: f64,
    /// Gain window for multi-resolution beam selection.
    pub window_db: f64,
    /// Coherence blocks per multi-resolution session.
    pub blocks: usize,
    /// Codebook level of Bob's fixed beam in the multi-resolution scheme;
    /// `None` uses his finest level.
    pub rx_level: Option<u32>,
    pub hybrid: HybridConfig,
    /// Keep every legitimate measurement in [`SchemeResult::probes`].
    pub record_probes: bool,
}

impl SessionConfig {
    /// Beam perturbation on two equal UPAs, LoS plus one NLoS path.
    pub fn secret_beam(rows: usize, cols: usize, snr_db: f64, seed: u64) -> Result<Self> {
        let g = ArrayGeometry::new(rows, cols)?;
        Ok(Self {
            scheme: SchemeId::SecretBeam,
            alice: g,
            bob: g,
            snr_db,
            rounds: 4,
            channel: ChannelParams::with_paths(2),
            levels: 16,
            beams: 1,
            eve: EveConfig::none(),
            seed,
            delta_max: DEFAULT_DELTA_MAX,
            window_db: 30.0,
            blocks: 0,
            rx_level: None,
            hybrid: HybridConfig::default(),
            record_probes: false,
        })
    }

    /// Angular-domain bits on two `n`-element linear arrays with `paths`
    /// grid-aligned, equal-power paths.
    pub fn virtual_angle(n: usize, paths: usize, snr_db: f64, seed: u64) -> Result<Self> {
        let g = ArrayGeometry::new(n, 1)?;
        Ok(Self {
            scheme: SchemeId::VirtualAngle,
            alice: g,
            bob: g,
            snr_db,
            rounds: 1,
            channel: ChannelParams {
                num_paths: paths,
                nlos_offset_db: 0.0,
                angles: AngleDistribution::VirtualGrid,
                ..ChannelParams::default()
            },
            levels: 2,
            beams: 1,
            eve: EveConfig::none(),
            seed,
            delta_max: DEFAULT_DELTA_MAX,
            window_db: 30.0,
            blocks: 0,
            rx_level: None,
            hybrid: HybridConfig::default(),
            record_probes: false,
        })
    }

    /// Multi-resolution probing, Alice 1x64 and Bob 1x32.
    pub fn multires(beams: usize, snr_db: f64, seed: u64) -> Result<Self> {
        Ok(Self {
            scheme: SchemeId::Multires,
            alice: ArrayGeometry::ula(64)?,
            bob: ArrayGeometry::ula(32)?,
            snr_db,
            rounds: 1,
            channel: ChannelParams {
                num_paths: 8,
                nlos_offset_db: 0.0,
                ..ChannelParams::default()
            },
            levels: 2,
            beams,
            eve: EveConfig::none(),
            seed,
            delta_max: DEFAULT_DELTA_MAX,
            window_db: 60.0,
            blocks: 5000,
            rx_level: None,
            hybrid: HybridConfig::default(),
            record_probes: false,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.alice.validate()?;
        self.bob.validate()?;
        self.channel.validate()?;
        if self.snr_db.is_nan() {
            return Err(Error::InvalidParams("snr_db is NaN".into()));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidParams("rounds must be at least 1".into()));
        }
        if self.levels < 2 || !self.levels.is_power_of_two() {
            return Err(Error::InvalidParams(format!(
                "levels = {} must be a power of two >= 2",
                self.levels
            )));
        }
        if self.beams == 0 {
            return Err(Error::InvalidParams("beams must be at least 1".into()));
        }
        if !(self.delta_max.is_finite() && self.delta_max > 0.0) {
            return Err(Error::InvalidParams(format!(
                "delta_max = {} must be > 0",
                self.delta_max
            )));
        }
        Ok(())
    }

    pub(crate) fn stream(&self, label: &str) -> rand_chacha::ChaCha20Rng {
        seeds::stream(self.seed, 0, label)
    }
}

/// Bits and agreement figures of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeResult {
    pub bits_alice: BitString,
    pub bits_bob: BitString,
    pub bits_eve: Option<BitString>,
    pub final_key_alice: BitString,
    pub final_key_bob: BitString,
    pub eve_guess: BitString,
    pub bar_legit: f64,
    /// Agreement between Eve's guess and Alice's final key.
    pub bar_eve: f64,
    pub bdr: f64,
    pub leaked_bits: usize,
    pub probes: Vec<ProbeRecord>,
}

impl SchemeResult {
    /// Fills the agreement figures from the key strings.
    pub(crate) fn new(
        bits_alice: BitString,
        bits_bob: BitString,
        bits_eve: Option<BitString>,
        final_key_alice: BitString,
        final_key_bob: BitString,
        eve_guess: BitString,
    ) -> Result<Self> {
        let bar_legit = bar(&final_key_alice, &final_key_bob)?;
        let bar_eve = bar(&eve_guess, &final_key_alice)?;
        Ok(Self {
            bits_alice,
            bits_bob,
            bits_eve,
            final_key_alice,
            final_key_bob,
            eve_guess,
            bar_legit,
            bar_eve,
            bdr: 1.0 - bar_legit,
            leaked_bits: 0,
            probes: Vec::new(),
        })
    }
}

/// Idealized channel sounding: `H + E` with i.i.d. complex Gaussian `E` of
/// variance `10^(-snr_db/10)` per entry, drawn in row-major order.
pub fn estimate_channel<R: Rng + ?Sized>(h: &CMatrix, snr_db: f64, rng: &mut R) -> CMatrix {
    let mut out: Array2<Complex64> = h.as_standard_layout().into_owned();
    awgn_in_place(out.as_slice_mut().expect("standard layout"), snr_db, rng);
    out
}

fn uniform_bits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> BitString {
    (0..n).map(|_| rng.random::<bool>()).collect()
}

/// Reconciles Bob's string toward Alice's and hashes both to final keys.
///
/// A 10% sample is disclosed to estimate the error rate; the sample and every
/// Cascade parity count as leaked before privacy amplification.
pub fn distill(alice: &BitString, bob: &BitString, seed: u64) -> Result<(KeyMaterial, KeyMaterial)> {
    let r = reconcile(alice, bob, 0.1, seeds::derive_u64(seed, 0, "cascade"))?;
    let pa_seed = seeds::derive_u64(seed, 0, "toeplitz");
    let leaked = r.leaked_bits();
    // leakage is counted against the full raw length
    let budget = alice.len().saturating_sub(r.alice.len());
    let ka = privacy_amplify(&r.alice, leaked - budget, DEFAULT_SAFETY_MARGIN, pa_seed);
    let kb = privacy_amplify(&r.bob, leaked - budget, DEFAULT_SAFETY_MARGIN, pa_seed);
    Ok((
        KeyMaterial {
            leaked_bits: leaked,
            ..ka
        },
        KeyMaterial {
            leaked_bits: leaked,
            ..kb
        },
    ))
}
