//! Bidirectional pilot exchange over a reciprocal channel.
//!
//! Measurements use the transpose convention `y = w_rx^T H f_tx + n`, so the
//! noiseless forward and reverse probes between the same pair of beams are
//! the same scalar.

use num_complex::Complex64;
use rand::Rng;

use crate::beamforming::{BeamId, Beamformer};
use crate::channel::{awgn, bilinear, CMatrix, PathLink};
use crate::error::{Error, Result};

/// Anything that maps a transmit beam and a receive beam to a noiseless
/// scalar response.
pub trait Propagation {
    fn tx_len(&self) -> usize;
    fn rx_len(&self) -> usize;
    /// `w_rx^T H f_tx`.
    fn forward(&self, w_rx: &[Complex64], f_tx: &[Complex64]) -> Complex64;
    /// `w^T H^T f`, the response for a probe travelling the other way.
    fn reverse(&self, w: &[Complex64], f: &[Complex64]) -> Complex64 {
        self.forward(f, w)
    }
}

impl Propagation for CMatrix {
    fn tx_len(&self) -> usize {
        self.ncols()
    }

    fn rx_len(&self) -> usize {
        self.nrows()
    }

    fn forward(&self, w_rx: &[Complex64], f_tx: &[Complex64]) -> Complex64 {
        self.outer_iter()
            .zip(w_rx)
            .map(|(row, w)| match row.as_slice() {
                Some(r) => w * bilinear(r, f_tx),
                None => w * row.iter().zip(f_tx).map(|(h, f)| h * f).sum::<Complex64>(),
            })
            .sum()
    }
}

impl Propagation for PathLink {
    fn tx_len(&self) -> usize {
        self.tx_geom.len()
    }

    fn rx_len(&self) -> usize {
        self.rx_geom.len()
    }

    fn forward(&self, w_rx: &[Complex64], f_tx: &[Complex64]) -> Complex64 {
        self.response(w_rx, f_tx)
    }
}

fn check_dims<P: Propagation + ?Sized>(h: &P, f_tx: &Beamformer, w_rx: &Beamformer) -> Result<()> {
    if f_tx.len() != h.tx_len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} transmit weights", h.tx_len()),
            got: f_tx.len().to_string(),
        });
    }
    if w_rx.len() != h.rx_len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} receive weights", h.rx_len()),
            got: w_rx.len().to_string(),
        });
    }
    Ok(())
}

/// One noisy measurement `w_rx^T H f_tx + n`.
pub fn probe<P, R>(f_tx: &Beamformer, w_rx: &Beamformer, h: &P, snr_db: f64, rng: &mut R) -> Result<Complex64>
where
    P: Propagation + ?Sized,
    R: Rng + ?Sized,
{
    check_dims(h, f_tx, w_rx)?;
    Ok(awgn(h.forward(w_rx.as_slice(), f_tx.as_slice()), snr_db, rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Party {
    Alice,
    Bob,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    AliceToBob,
    BobToAlice,
}

/// Where a passive eavesdropper sits and how noisy her receiver is.
///
/// A co-located Eve shares her host's channel and hears every signal inbound
/// to the host, through her own receiver noise. `snr_db = None` uses the
/// legitimate SNR; `f64::INFINITY` disables her noise.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EveConfig {
    pub colocated_with: Option<Party>,
    pub snr_db: Option<f64>,
}

impl EveConfig {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn at(party: Party) -> Self {
        Self {
            colocated_with: Some(party),
            snr_db: None,
        }
    }

    pub fn with_snr(mut self, snr_db: f64) -> Self {
        self.snr_db = Some(snr_db);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BidirectionalProbe {
    pub at_bob: Complex64,
    pub at_alice: Complex64,
    pub at_eve: Option<Complex64>,
}

/// One round of pilots in both directions over the same channel.
///
/// Alice sends with `f_a` and Bob listens with `w_b`; Bob sends with `f_b`
/// and Alice listens with `w_a`. Noise is drawn for Bob, then Alice, then Eve.
#[allow(clippy::too_many_arguments)]
pub fn bidirectional_probe<P, R>(
    f_a: &Beamformer,
    w_a: &Beamformer,
    f_b: &Beamformer,
    w_b: &Beamformer,
    h: &P,
    snr_db: f64,
    eve: &EveConfig,
    rng: &mut R,
) -> Result<BidirectionalProbe>
where
    P: Propagation + ?Sized,
    R: Rng + ?Sized,
{
    check_dims(h, f_a, w_b)?;
    check_dims(h, w_a, f_b)?;
    let clean_bob = h.forward(w_b.as_slice(), f_a.as_slice());
    let clean_alice = h.reverse(w_a.as_slice(), f_b.as_slice());
    let at_bob = awgn(clean_bob, snr_db, rng);
    let at_alice = awgn(clean_alice, snr_db, rng);
    let eve_snr = eve.snr_db.unwrap_or(snr_db);
    let at_eve = eve.colocated_with.map(|host| {
        let clean = match host {
            Party::Alice => clean_alice,
            Party::Bob => clean_bob,
        };
        awgn(clean, eve_snr, rng)
    });
    Ok(BidirectionalProbe {
        at_bob,
        at_alice,
        at_eve,
    })
}

/// Identifies the beam used on one end of a probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BeamTag {
    Nominal,
    Perturbed(usize),
    Codeword(BeamId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRecord {
    pub round: usize,
    pub direction: Direction,
    pub tx_beam: BeamTag,
    pub rx_beam: BeamTag,
    pub value: Complex64,
    pub snr_db: f64,
}

impl BidirectionalProbe {
    /// Records for the two legitimate measurements of this exchange.
    pub fn records(&self, round: usize, alice_tx: BeamTag, bob_tx: BeamTag, snr_db: f64) -> [ProbeRecord; 2] {
        [
            ProbeRecord {
                round,
                direction: Direction::AliceToBob,
                tx_beam: alice_tx,
                rx_beam: BeamTag::Nominal,
                value: self.at_bob,
                snr_db,
            },
            ProbeRecord {
                round,
                direction: Direction::BobToAlice,
                tx_beam: bob_tx,
                rx_beam: BeamTag::Nominal,
                value: self.at_alice,
                snr_db,
            },
        ]
    }
}
