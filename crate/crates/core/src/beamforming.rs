//! Analog beamformers, perturbed beams and the hierarchical codebook.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::{bilinear, ArrayGeometry, CVector, ChannelRealization};
use crate::error::{Error, Result};

/// Default perturbation limit, 2 degrees.
pub const DEFAULT_DELTA_MAX: f64 = 2.0 * PI / 180.0;

/// Default phase-shifter resolution.
pub const DEFAULT_PHASE_BITS: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BeamId {
    pub level: u32,
    pub index: usize,
}

impl std::fmt::Display for BeamId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "L{}#{}", self.level, self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeamMeta {
    Steered { az: f64, el: f64 },
    Codeword(BeamId),
    Unspecified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    pub weights: CVector,
    /// Phase resolution when the weights sit on a phase grid.
    pub phase_bits: Option<u32>,
    pub meta: BeamMeta,
}

impl Beamformer {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        self.weights.as_slice().expect("beamformer weights are contiguous")
    }

    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HybridConfig {
    pub num_rf_chains: usize,
    pub phase_bits: u32,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            num_rf_chains: 1,
            phase_bits: DEFAULT_PHASE_BITS,
        }
    }
}

impl HybridConfig {
    pub fn validate(&self, geom: &ArrayGeometry) -> Result<()> {
        if self.num_rf_chains == 0 || self.num_rf_chains > geom.len() {
            return Err(Error::InvalidParams(format!(
                "num_rf_chains = {} must be in 1..={}",
                self.num_rf_chains,
                geom.len()
            )));
        }
        if self.phase_bits == 0 || self.phase_bits > 30 {
            return Err(Error::InvalidParams(format!(
                "phase_bits = {} must be in 1..=30",
                self.phase_bits
            )));
        }
        Ok(())
    }
}

/// Conjugate-matched beam toward `(az, el)`.
pub fn steering_beamformer(geom: &ArrayGeometry, az: f64, el: f64) -> Result<Beamformer> {
    let a = crate::channel::array_response(geom, az, el)?;
    Ok(Beamformer {
        weights: a.mapv(|x| x.conj()),
        phase_bits: None,
        meta: BeamMeta::Steered { az, el },
    })
}

/// Snaps every weight to modulus `1/sqrt(N)` and the nearest of `2^bits` phases.
pub fn quantize_phases(bf: &Beamformer, bits: u32) -> Result<Beamformer> {
    if bits == 0 || bits > 30 {
        return Err(Error::InvalidParams(format!("phase bits {bits} must be in 1..=30")));
    }
    let n = bf.len();
    if n == 0 {
        return Err(Error::EmptyInput("beamformer weights"));
    }
    let levels = 1u64 << bits;
    let step = 2.0 * PI / levels as f64;
    let modulus = 1.0 / (n as f64).sqrt();
    let weights = bf.weights.mapv(|w| {
        let k = (w.arg() / step).round().rem_euclid(levels as f64);
        Complex64::from_polar(modulus, k * step)
    });
    Ok(Beamformer {
        weights,
        phase_bits: Some(bits),
        meta: bf.meta,
    })
}

/// Steering beam at `(nominal_az + delta, nominal_el)`.
pub fn perturb(
    geom: &ArrayGeometry,
    nominal_az: f64,
    nominal_el: f64,
    delta: f64,
    delta_max: f64,
) -> Result<Beamformer> {
    if !delta.is_finite() || delta.abs() > delta_max {
        return Err(Error::InvalidPerturbation { delta, max: delta_max });
    }
    steering_beamformer(geom, nominal_az + delta, nominal_el)
}

/// Pattern value `sum_n w_n * a_n(az, el)` of a beam toward a direction.
pub fn beam_gain(bf: &Beamformer, geom: &ArrayGeometry, az: f64, el: f64) -> Result<Complex64> {
    if bf.len() != geom.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} weights for {geom}", geom.len()),
            got: bf.len().to_string(),
        });
    }
    let a = crate::channel::array_response(geom, az, el)?;
    Ok(bilinear(bf.as_slice(), a.as_slice().expect("contiguous")))
}

/// Pattern value at a direction given by its azimuth spatial frequency
/// `sin(az)cos(el)` and elevation frequency `sin(el)`.
pub fn beam_gain_sine(bf: &Beamformer, geom: &ArrayGeometry, u_az: f64, u_el: f64) -> Complex64 {
    let a = crate::channel::steering_sines(geom, u_az, u_el);
    bilinear(bf.as_slice(), a.as_slice().expect("contiguous"))
}

/// Sine-space sector `[start, end)` covered by a codeword.
///
/// Boundaries are dyadic rationals and therefore exact in `f64`.
pub fn sector(id: BeamId) -> (f64, f64) {
    let width = 2.0 / (1u64 << id.level) as f64;
    let start = -1.0 + width * id.index as f64;
    (start, start + width)
}

/// Azimuth-only multi-resolution codebook. Level `s` has `2^s` beams whose
/// sectors partition `[-1, 1)` in `sin(az)`.
#[derive(Debug, Clone)]
pub struct Codebook {
    pub geom: ArrayGeometry,
    pub hybrid: HybridConfig,
    levels: Vec<Vec<Beamformer>>,
}

impl Codebook {
    pub fn depth(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn level(&self, level: u32) -> Option<&[Beamformer]> {
        let idx = (level as usize).checked_sub(1)?;
        self.levels.get(idx).map(Vec::as_slice)
    }

    pub fn get(&self, id: BeamId) -> Option<&Beamformer> {
        self.level(id.level)?.get(id.index)
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// All codewords in `(level, index)` order.
    pub fn iter(&self) -> impl Iterator<Item = (BeamId, &Beamformer)> {
        self.levels.iter().enumerate().flat_map(|(s, beams)| {
            beams.iter().enumerate().map(move |(index, bf)| {
                (
                    BeamId {
                        level: s as u32 + 1,
                        index,
                    },
                    bf,
                )
            })
        })
    }

    /// Finest-level codeword whose sector contains `sin(az)`.
    pub fn finest_covering(&self, az: f64) -> BeamId {
        let level = self.depth();
        let count = 1usize << level;
        let pos = ((az.sin() + 1.0) / 2.0 * count as f64).floor() as isize;
        BeamId {
            level,
            index: pos.clamp(0, count as isize - 1) as usize,
        }
    }
}

/// Builds codeword `id` for an azimuth axis of `cols` elements.
///
/// The ideal beam is the sum of steering vectors on `G = cols / 2^level` grid
/// points inside the sector. It is realized at constant modulus by splitting
/// the axis into `G` contiguous sub-arrays, each steered at one grid point,
/// with the phase carried continuously across sub-array boundaries.
fn codeword(geom: &ArrayGeometry, id: BeamId, phase_bits: u32) -> Result<Beamformer> {
    let (start, end) = sector(id);
    let cols = geom.cols;
    let groups = (cols >> id.level).max(1);
    let group_len = cols / groups;
    let step = (end - start) / groups as f64;
    let k = 2.0 * PI * geom.spacing;
    let mut phase = 0.0;
    let mut row = Vec::with_capacity(cols);
    for n in 0..cols {
        row.push(phase);
        let j = (n / group_len).min(groups - 1);
        phase -= k * (start + (j as f64 + 0.5) * step);
    }
    let norm = 1.0 / (geom.len() as f64).sqrt();
    let weights = CVector::from_shape_fn(geom.len(), |i| Complex64::from_polar(norm, row[i % cols]));
    let raw = Beamformer {
        weights,
        phase_bits: None,
        meta: BeamMeta::Codeword(id),
    };
    quantize_phases(&raw, phase_bits)
}

/// Hierarchical codebook with levels `1..=levels` along the azimuth axis.
pub fn hierarchical_codebook(geom: &ArrayGeometry, levels: u32, hybrid: HybridConfig) -> Result<Codebook> {
    geom.validate()?;
    hybrid.validate(geom)?;
    if levels == 0 || levels >= usize::BITS || (1usize << levels) > geom.cols {
        return Err(Error::CodebookTooDeep {
            levels,
            elements: geom.cols,
        });
    }
    let levels = (1..=levels)
        .map(|level| {
            (0..1usize << level)
                .map(|index| codeword(geom, BeamId { level, index }, hybrid.phase_bits))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Codebook {
        geom: *geom,
        hybrid,
        levels,
    })
}

/// Deepest level supported by an azimuth axis of `cols` elements.
pub fn max_levels(geom: &ArrayGeometry) -> u32 {
    geom.cols.max(1).ilog2()
}

struct Candidate {
    id: BeamId,
    gain: f64,
    /// Per-path terms scaled by the path's RMS amplitude.
    weighted: Vec<Complex64>,
}

/// Correlation above which two probing beams count as redundant.
const CORRELATION_LIMIT: f64 = 0.5;

/// Magnitude of the correlation coefficient between two beams' responses
/// over independent path gains.
fn correlation(a: &Candidate, b: &Candidate) -> f64 {
    let cross: Complex64 = a.weighted.iter().zip(&b.weighted).map(|(x, y)| x * y.conj()).sum();
    let pa: f64 = a.weighted.iter().map(|x| x.norm_sqr()).sum();
    let pb: f64 = b.weighted.iter().map(|x| x.norm_sqr()).sum();
    if pa > 0.0 && pb > 0.0 {
        cross.norm() / (pa * pb).sqrt()
    } else {
        1.0
    }
}

fn overlaps(a: BeamId, b: BeamId) -> bool {
    let (a0, a1) = sector(a);
    let (b0, b1) = sector(b);
    a0 < b1 && b0 < a1
}

/// Picks `count` transmit codewords for probing toward a fixed receive beam.
///
/// Candidates are the codewords whose noiseless composite gain
/// `|w_rx^T H f|` is within `window_db` of the strongest one. Starting from
/// the strongest, beams are added greedily so that their responses are
/// weakly correlated over independent path gains, preferring disjoint
/// sectors. When all picks share a level, the last pick is replaced by a
/// beam of another level if one exists. Ties resolve by `(level, index)`.
pub fn select_beams(
    codebook: &Codebook,
    ch: &ChannelRealization,
    rx_beam: &Beamformer,
    count: usize,
    window_db: f64,
) -> Result<Vec<BeamId>> {
    if count == 0 {
        return Err(Error::InvalidParams("beam count must be at least 1".into()));
    }
    if !(window_db.is_finite() && window_db >= 0.0) {
        return Err(Error::InvalidParams(format!("window_db = {window_db} must be >= 0")));
    }
    if codebook.geom != ch.tx_geom {
        return Err(Error::DimensionMismatch {
            expected: format!("codebook for {}", ch.tx_geom),
            got: codebook.geom.to_string(),
        });
    }
    if rx_beam.len() != ch.rx_geom.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} receive weights", ch.rx_geom.len()),
            got: rx_beam.len().to_string(),
        });
    }

    let link = ch.link();
    let rms: Vec<f64> = ch
        .paths
        .iter()
        .map(|p| if p.is_los { 1.0 } else { ch.nlos_power.sqrt() })
        .collect();
    let mut cands: Vec<Candidate> = codebook
        .iter()
        .map(|(id, f)| {
            let coeffs = link.path_coefficients(rx_beam.as_slice(), f.as_slice());
            let terms: Vec<Complex64> = coeffs.iter().zip(link.gains()).map(|(c, g)| c * g).collect();
            let weighted = coeffs.iter().zip(&rms).map(|(c, r)| c * r).collect();
            let gain = terms.iter().sum::<Complex64>().norm();
            Candidate { id, gain, weighted }
        })
        .collect();
    cands.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.id.cmp(&b.id)));

    let best = cands[0].gain;
    let floor = best * 10f64.powf(-window_db / 20.0);
    cands.retain(|c| c.gain >= floor && c.gain > 0.0);
    if cands.len() < count {
        return Err(Error::SelectionInfeasible {
            requested: count,
            available: cands.len(),
            window_db,
        });
    }

    // greedy: after the strongest beam, take the strongest candidate whose
    // correlation with every pick is at most CORRELATION_LIMIT, otherwise the
    // least correlated one; disjoint sectors are preferred throughout
    let score = |picked: &[usize], i: usize| {
        picked
            .iter()
            .map(|&p| correlation(&cands[i], &cands[p]))
            .fold(0.0, f64::max)
    };
    let next = |picked: &[usize], allowed: &dyn Fn(usize) -> bool| -> Option<usize> {
        let free: Vec<usize> = (0..cands.len())
            .filter(|&i| !picked.contains(&i) && allowed(i))
            .collect();
        let disjoint: Vec<usize> = free
            .iter()
            .copied()
            .filter(|&i| picked.iter().all(|&p| !overlaps(cands[p].id, cands[i].id)))
            .collect();
        let pool = if disjoint.is_empty() { free } else { disjoint };
        pool.iter()
            .copied()
            .find(|&i| score(picked, i) <= CORRELATION_LIMIT)
            .or_else(|| {
                pool.iter()
                    .copied()
                    .min_by(|&a, &b| score(picked, a).total_cmp(&score(picked, b)).then(a.cmp(&b)))
            })
    };
    let mut picked: Vec<usize> = vec![0];
    while picked.len() < count {
        let i = next(&picked, &|_| true).expect("enough candidates");
        picked.push(i);
    }

    if count >= 2 && picked.iter().all(|&p| cands[p].id.level == cands[0].id.level) {
        let level = cands[0].id.level;
        if let Some(i) = next(&picked[..count - 1], &|i| cands[i].id.level != level) {
            picked[count - 1] = i;
        }
    }

    let mut ids: Vec<BeamId> = picked.iter().map(|&p| cands[p].id).collect();
    ids.sort_by(|a, b| {
        let ga = cands.iter().find(|c| c.id == *a).map_or(0.0, |c| c.gain);
        let gb = cands.iter().find(|c| c.id == *b).map_or(0.0, |c| c.gain);
        gb.total_cmp(&ga).then(a.cmp(b))
    });
    Ok(ids)
}
