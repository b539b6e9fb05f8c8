//! Clustered narrowband mmWave channel model.
//!
//! A [`ChannelRealization`] is a small set of rays, each with a complex gain
//! and departure/arrival directions. The matrix form is
//! `H = sqrt(Nt*Nr/L) * sum_l gain_l * a_rx(aoa_l) * a_tx(aod_l)^T`, built from
//! unit-norm planar-array responses. Everything here is a pure function of its
//! inputs and an explicit RNG.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayViewMut, Axis, Dimension};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};

pub type CVector = Array1<Complex64>;
pub type CMatrix = Array2<Complex64>;

/// Uniform planar array, `rows x cols` elements with row-major element order.
///
/// The column axis carries azimuth, the row axis elevation. A ULA is `1 x n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub rows: usize,
    pub cols: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
}

impl ArrayGeometry {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        Self::with_spacing(rows, cols, 0.5)
    }

    pub fn with_spacing(rows: usize, cols: usize, spacing: f64) -> Result<Self> {
        let geom = Self { rows, cols, spacing };
        geom.validate()?;
        Ok(geom)
    }

    /// Linear array along the azimuth axis.
    pub fn ula(elements: usize) -> Result<Self> {
        Self::new(1, elements)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidGeometry(format!(
                "{}x{} has a zero dimension",
                self.rows, self.cols
            )));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "element spacing {} must be positive",
                self.spacing
            )));
        }
        Ok(())
    }

    /// Total element count.
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl std::fmt::Display for ArrayGeometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

/// Unit-norm response of `geom` toward `(az, el)`.
///
/// Entry `(m, n)` is `exp(j*2*pi*d*(m*sin(el) + n*sin(az)*cos(el))) / sqrt(N)`.
pub fn array_response(geom: &ArrayGeometry, az: f64, el: f64) -> Result<CVector> {
    geom.validate()?;
    if !(az.is_finite() && el.is_finite()) {
        return Err(Error::InvalidParams(format!("non-finite steering angle ({az}, {el})")));
    }
    Ok(steering(geom, az, el))
}

pub(crate) fn steering(geom: &ArrayGeometry, az: f64, el: f64) -> CVector {
    let (sin_el, cos_el) = el.sin_cos();
    steering_sines(geom, az.sin() * cos_el, sin_el)
}

/// Response for directly given spatial frequencies (`sin(az)cos(el)`, `sin(el)`).
pub(crate) fn steering_sines(geom: &ArrayGeometry, u_az: f64, u_el: f64) -> CVector {
    let norm = 1.0 / (geom.len() as f64).sqrt();
    let k = 2.0 * PI * geom.spacing;
    let mut v = CVector::zeros(geom.len());
    for m in 0..geom.rows {
        for n in 0..geom.cols {
            let phase = k * (m as f64 * u_el + n as f64 * u_az);
            v[m * geom.cols + n] = Complex64::from_polar(norm, phase);
        }
    }
    v
}

/// Unconjugated bilinear product `sum_i a_i * b_i`.
#[inline]
pub(crate) fn bilinear(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub gain: Complex64,
    pub aod_az: f64,
    pub aod_el: f64,
    pub aoa_az: f64,
    pub aoa_el: f64,
    pub is_los: bool,
}

/// How path directions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AngleDistribution {
    /// Uniform in sine space over `[-1, 1)` on each active axis.
    #[default]
    UniformSine,
    /// Uniform over the DFT grid of each array, so every path falls on a
    /// single angular-domain bin.
    VirtualGrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub num_paths: usize,
    /// NLoS power below the LoS path, in dB.
    pub nlos_offset_db: f64,
    pub angles: AngleDistribution,
    /// AR(1) coefficient used by [`evolve`] between coherence blocks.
    pub temporal_rho: f64,
    pub carrier_ghz: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            num_paths: 2,
            nlos_offset_db: 10.0,
            angles: AngleDistribution::UniformSine,
            temporal_rho: 0.9,
            carrier_ghz: 28.0,
        }
    }
}

impl ChannelParams {
    pub fn with_paths(num_paths: usize) -> Self {
        Self {
            num_paths,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_paths == 0 {
            return Err(Error::InvalidParams("number of paths must be at least 1".into()));
        }
        if !(self.nlos_offset_db.is_finite() && self.nlos_offset_db >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "nlos_offset_db = {} must be >= 0",
                self.nlos_offset_db
            )));
        }
        check_rho(self.temporal_rho)
    }

    /// Expected NLoS path power relative to the unit-power LoS path.
    pub fn nlos_power(&self) -> f64 {
        db_to_linear(-self.nlos_offset_db)
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("rho = {rho} outside [0, 1]")))
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Noise variance for a unit-power signal at `snr_db`.
pub fn noise_variance(snr_db: f64) -> f64 {
    db_to_linear(-snr_db)
}

/// One coherence-block channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub paths: Vec<PathComponent>,
    pub carrier_ghz: f64,
    pub tx_geom: ArrayGeometry,
    pub rx_geom: ArrayGeometry,
    /// Expected power of each NLoS gain, used when drawing innovations.
    pub nlos_power: f64,
}

impl ChannelRealization {
    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    /// `sqrt(Nt*Nr/L)`, the per-path amplitude scaling of the matrix form.
    pub fn scale(&self) -> f64 {
        ((self.tx_geom.len() * self.rx_geom.len()) as f64 / self.paths.len() as f64).sqrt()
    }

    /// Precomputes per-path steering vectors for repeated evaluation.
    pub fn link(&self) -> PathLink {
        PathLink::new(self)
    }
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

fn unit_phasor<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>())
}

fn draw_gain<R: Rng + ?Sized>(rng: &mut R, is_los: bool, nlos_power: f64) -> Complex64 {
    if is_los {
        unit_phasor(rng)
    } else {
        complex_normal(rng, nlos_power)
    }
}

fn uniform_sine<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(-1.0..1.0)
}

/// A DFT-grid spatial frequency `2j/(n*2d)` wrapped into `[-1, 1)`.
fn grid_sine<R: Rng + ?Sized>(rng: &mut R, n: usize, spacing: f64) -> f64 {
    let j = rng.random_range(0..n) as f64;
    let mut u = j / (n as f64 * spacing);
    if u >= 1.0 {
        u -= 2.0;
    }
    u
}

/// Draws `(az, el)` for one side. Elevation is only randomized on planar
/// arrays (`rows > 1`); linear arrays keep `el = 0`.
fn draw_direction<R: Rng + ?Sized>(rng: &mut R, geom: &ArrayGeometry, dist: AngleDistribution) -> (f64, f64) {
    match dist {
        AngleDistribution::UniformSine => {
            let el = if geom.rows > 1 { uniform_sine(rng).asin() } else { 0.0 };
            (uniform_sine(rng).asin(), el)
        }
        AngleDistribution::VirtualGrid => loop {
            let u_el = if geom.rows > 1 {
                grid_sine(rng, geom.rows, geom.spacing)
            } else {
                0.0
            };
            let el = u_el.asin();
            let u_az = grid_sine(rng, geom.cols, geom.spacing);
            let s = u_az / el.cos();
            if s.abs() < 1.0 || u_az == -1.0 && el == 0.0 {
                break (s.clamp(-1.0, 1.0).asin(), el);
            }
        },
    }
}

/// Draws one channel: a unit-modulus LoS path followed by `L - 1` Rayleigh
/// NLoS paths of power `10^(-offset/10)`.
pub fn sample_channel<R: Rng + ?Sized>(
    params: &ChannelParams,
    tx_geom: &ArrayGeometry,
    rx_geom: &ArrayGeometry,
    rng: &mut R,
) -> Result<ChannelRealization> {
    params.validate()?;
    tx_geom.validate()?;
    rx_geom.validate()?;
    let nlos_power = params.nlos_power();
    let paths = (0..params.num_paths)
        .map(|l| {
            let is_los = l == 0;
            let gain = draw_gain(rng, is_los, nlos_power);
            let (aod_az, aod_el) = draw_direction(rng, tx_geom, params.angles);
            let (aoa_az, aoa_el) = draw_direction(rng, rx_geom, params.angles);
            PathComponent {
                gain,
                aod_az,
                aod_el,
                aoa_az,
                aoa_el,
                is_los,
            }
        })
        .collect();
    Ok(ChannelRealization {
        paths,
        carrier_ghz: params.carrier_ghz,
        tx_geom: *tx_geom,
        rx_geom: *rx_geom,
        nlos_power,
    })
}

/// Dense `Nr x Nt` channel matrix.
pub fn channel_matrix(ch: &ChannelRealization) -> CMatrix {
    let scale = ch.scale();
    let mut h = CMatrix::zeros((ch.rx_geom.len(), ch.tx_geom.len()));
    for p in &ch.paths {
        let a_rx = steering(&ch.rx_geom, p.aoa_az, p.aoa_el) * (p.gain * scale);
        let a_tx = steering(&ch.tx_geom, p.aod_az, p.aod_el);
        for (mut row, r) in h.outer_iter_mut().zip(a_rx.iter()) {
            row.scaled_add(*r, &a_tx);
        }
    }
    h
}

/// Advances every path gain by one AR(1) step with coefficient `rho`.
/// Angles are unchanged and the marginal power is preserved.
pub fn evolve<R: Rng + ?Sized>(ch: &ChannelRealization, rho: f64, rng: &mut R) -> Result<ChannelRealization> {
    check_rho(rho)?;
    let innovation = (1.0 - rho * rho).sqrt();
    let mut next = ch.clone();
    for p in &mut next.paths {
        let eps = draw_gain(rng, p.is_los, ch.nlos_power);
        p.gain = p.gain * rho + eps * innovation;
    }
    Ok(next)
}

/// Unitary DFT matrix, entry `(j, k) = exp(-2*pi*i*j*k/n) / sqrt(n)`.
pub fn dft_matrix(n: usize) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::InvalidParams("DFT size must be positive".into()));
    }
    let norm = 1.0 / (n as f64).sqrt();
    Ok(CMatrix::from_shape_fn((n, n), |(j, k)| {
        // reduce j*k mod n first to keep the phase argument small
        let jk = (j * k) % n;
        Complex64::from_polar(norm, -2.0 * PI * jk as f64 / n as f64)
    }))
}

/// Angular-domain basis of a planar array: Kronecker product of the per-axis
/// DFT matrices, matching the row-major element order.
pub fn angular_basis(geom: &ArrayGeometry) -> Result<CMatrix> {
    geom.validate()?;
    let a = dft_matrix(geom.rows)?;
    let b = dft_matrix(geom.cols)?;
    let n = geom.len();
    Ok(CMatrix::from_shape_fn((n, n), |(r, c)| {
        let (m, i) = (r / geom.cols, r % geom.cols);
        let (j, k) = (c / geom.cols, c % geom.cols);
        a[(m, j)] * b[(i, k)]
    }))
}

fn check_shape(h: &CMatrix, tx: &ArrayGeometry, rx: &ArrayGeometry) -> Result<()> {
    if h.dim() != (rx.len(), tx.len()) {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", rx.len(), tx.len()),
            got: format!("{}x{}", h.nrows(), h.ncols()),
        });
    }
    Ok(())
}

/// Unnormalized FFT along one axis of an n-dimensional array, in place.
fn fft_axis<D: Dimension>(
    data: &mut ArrayViewMut<'_, Complex64, D>,
    axis: usize,
    direction: FftDirection,
    planner: &mut FftPlanner<f64>,
) {
    let len = data.len_of(Axis(axis));
    if len <= 1 {
        return;
    }
    let fft = planner.plan_fft(len, direction);
    let mut buf = vec![Complex64::default(); len];
    for mut lane in data.lanes_mut(Axis(axis)) {
        buf.iter_mut().zip(lane.iter()).for_each(|(b, x)| *b = *x);
        fft.process(&mut buf);
        lane.iter_mut().zip(&buf).for_each(|(x, b)| *x = *b);
    }
}

/// `H_v = U_r^H * H * U_t` with the Kronecker DFT bases of both arrays.
///
/// Computed with per-axis FFTs; [`angular_basis`] gives the explicit form.
pub fn virtual_channel(h: &CMatrix, tx_geom: &ArrayGeometry, rx_geom: &ArrayGeometry) -> Result<CMatrix> {
    check_shape(h, tx_geom, rx_geom)?;
    let mut planner = FftPlanner::new();
    let mut cube = h
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((rx_geom.rows, rx_geom.cols, tx_geom.rows, tx_geom.cols))
        .expect("shape checked above");
    {
        let mut view = cube.view_mut();
        // H * U_t: forward transform over both transmit axes
        fft_axis(&mut view, 3, FftDirection::Forward, &mut planner);
        fft_axis(&mut view, 2, FftDirection::Forward, &mut planner);
        // U_r^H * H: conjugate basis, i.e. the inverse transform
        fft_axis(&mut view, 1, FftDirection::Inverse, &mut planner);
        fft_axis(&mut view, 0, FftDirection::Inverse, &mut planner);
    }
    let norm = 1.0 / ((tx_geom.len() * rx_geom.len()) as f64).sqrt();
    cube.mapv_inplace(|x| x * norm);
    Ok(cube
        .into_shape_with_order((rx_geom.len(), tx_geom.len()))
        .expect("element count unchanged"))
}

/// Inverse of [`virtual_channel`]: `H = U_r * H_v * U_t^H`.
pub fn from_virtual(hv: &CMatrix, tx_geom: &ArrayGeometry, rx_geom: &ArrayGeometry) -> Result<CMatrix> {
    check_shape(hv, tx_geom, rx_geom)?;
    let mut planner = FftPlanner::new();
    let mut cube = hv
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((rx_geom.rows, rx_geom.cols, tx_geom.rows, tx_geom.cols))
        .expect("shape checked above");
    {
        let mut view = cube.view_mut();
        fft_axis(&mut view, 3, FftDirection::Inverse, &mut planner);
        fft_axis(&mut view, 2, FftDirection::Inverse, &mut planner);
        fft_axis(&mut view, 1, FftDirection::Forward, &mut planner);
        fft_axis(&mut view, 0, FftDirection::Forward, &mut planner);
    }
    let norm = 1.0 / ((tx_geom.len() * rx_geom.len()) as f64).sqrt();
    cube.mapv_inplace(|x| x * norm);
    Ok(cube
        .into_shape_with_order((rx_geom.len(), tx_geom.len()))
        .expect("element count unchanged"))
}

/// Adds circularly-symmetric Gaussian noise of variance `10^(-snr_db/10)`.
pub fn awgn<R: Rng + ?Sized>(x: Complex64, snr_db: f64, rng: &mut R) -> Complex64 {
    x + complex_normal(rng, noise_variance(snr_db))
}

/// Vector form of [`awgn`], noise drawn in element order.
pub fn awgn_in_place<R: Rng + ?Sized>(xs: &mut [Complex64], snr_db: f64, rng: &mut R) {
    let var = noise_variance(snr_db);
    for x in xs {
        *x += complex_normal(rng, var);
    }
}

/// Per-path steering vectors of a realization, cached for fast repeated
/// evaluation of `w^T H f` without forming `H`.
#[derive(Debug, Clone)]
pub struct PathLink {
    pub tx_geom: ArrayGeometry,
    pub rx_geom: ArrayGeometry,
    scale: f64,
    gains: Vec<Complex64>,
    a_tx: Vec<CVector>,
    a_rx: Vec<CVector>,
}

impl PathLink {
    pub fn new(ch: &ChannelRealization) -> Self {
        Self {
            tx_geom: ch.tx_geom,
            rx_geom: ch.rx_geom,
            scale: ch.scale(),
            gains: ch.paths.iter().map(|p| p.gain).collect(),
            a_tx: ch
                .paths
                .iter()
                .map(|p| steering(&ch.tx_geom, p.aod_az, p.aod_el))
                .collect(),
            a_rx: ch
                .paths
                .iter()
                .map(|p| steering(&ch.rx_geom, p.aoa_az, p.aoa_el))
                .collect(),
        }
    }

    /// Replaces the gains after an [`evolve`] step; angles must be unchanged.
    pub fn update_gains(&mut self, ch: &ChannelRealization) {
        debug_assert_eq!(ch.paths.len(), self.gains.len());
        for (g, p) in self.gains.iter_mut().zip(&ch.paths) {
            *g = p.gain;
        }
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    /// Gain-free per-path terms `scale * (w^T a_rx,l) * (a_tx,l^T f)`, so that
    /// the response is `sum_l gain_l * coeff_l`.
    pub fn path_coefficients(&self, w_rx: &[Complex64], f_tx: &[Complex64]) -> Vec<Complex64> {
        self.a_rx
            .iter()
            .zip(&self.a_tx)
            .map(|(ar, at)| {
                bilinear(w_rx, ar.as_slice().expect("contiguous"))
                    * bilinear(at.as_slice().expect("contiguous"), f_tx)
                    * self.scale
            })
            .collect()
    }

    pub fn response(&self, w_rx: &[Complex64], f_tx: &[Complex64]) -> Complex64 {
        self.path_coefficients(w_rx, f_tx)
            .iter()
            .zip(&self.gains)
            .map(|(c, g)| c * g)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn fro(h: &CMatrix) -> f64 {
        h.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn broadside_response_is_flat() {
        let g = ArrayGeometry::new(4, 4).unwrap();
        let a = array_response(&g, 0.0, 0.0).unwrap();
        for x in a.iter() {
            assert!((x - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_dimension_is_rejected() {
        assert!(matches!(ArrayGeometry::new(0, 4), Err(Error::InvalidGeometry(_))));
        let bad = ArrayGeometry {
            rows: 2,
            cols: 0,
            spacing: 0.5,
        };
        assert!(array_response(&bad, 0.1, 0.0).is_err());
    }

    #[test]
    fn orthogonal_ula_responses() {
        // sin(az) in {0, 1/4} on an 8-element half-wavelength ULA: the
        // geometric series sum_n exp(j*pi*n/4) over n = 0..8 is zero.
        let g = ArrayGeometry::ula(8).unwrap();
        let a0 = array_response(&g, 0.0, 0.0).unwrap();
        let a1 = array_response(&g, 0.25f64.asin(), 0.0).unwrap();
        let ip: Complex64 = a0.iter().zip(a1.iter()).map(|(x, y)| x.conj() * y).sum();
        let oracle: Complex64 = (0..8)
            .map(|n| Complex64::from_polar(1.0, PI * n as f64 * 0.25) / 8.0)
            .sum();
        assert!(oracle.norm() < 1e-12);
        assert!(ip.norm() < 1e-12);
    }

    #[test]
    fn single_path_channel_is_rank_one_with_full_norm() {
        let tx = ArrayGeometry::ula(8).unwrap();
        let rx = ArrayGeometry::new(2, 4).unwrap();
        let ch = ChannelRealization {
            paths: vec![PathComponent {
                gain: Complex64::new(1.0, 0.0),
                aod_az: 0.3,
                aod_el: 0.0,
                aoa_az: -0.2,
                aoa_el: 0.1,
                is_los: true,
            }],
            carrier_ghz: 28.0,
            tx_geom: tx,
            rx_geom: rx,
            nlos_power: 0.1,
        };
        let h = channel_matrix(&ch);
        assert!((fro(&h) - 8.0).abs() < 1e-12);
        // rank one: every 2x2 minor vanishes
        for i in 0..h.nrows() {
            for j in 0..h.ncols() {
                let minor = h[(0, 0)] * h[(i, j)] - h[(0, j)] * h[(i, 0)];
                assert!(minor.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn single_path_sample_is_los() {
        let g = ArrayGeometry::ula(4).unwrap();
        let ch = sample_channel(&ChannelParams::with_paths(1), &g, &g, &mut rng(3)).unwrap();
        assert_eq!(ch.paths.len(), 1);
        assert!(ch.paths[0].is_los);
        assert!((ch.paths[0].gain.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_paths_rejected() {
        let g = ArrayGeometry::ula(4).unwrap();
        let r = sample_channel(&ChannelParams::with_paths(0), &g, &g, &mut rng(0));
        assert!(matches!(r, Err(Error::InvalidParams(_))));
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = ArrayGeometry::new(4, 8).unwrap();
        let p = ChannelParams::with_paths(3);
        let a = sample_channel(&p, &g, &g, &mut rng(9)).unwrap();
        let b = sample_channel(&p, &g, &g, &mut rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nlos_power_is_ten_db_below_los() {
        let g = ArrayGeometry::ula(2).unwrap();
        let p = ChannelParams::with_paths(2);
        let mut r = rng(11);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| {
                let ch = sample_channel(&p, &g, &g, &mut r).unwrap();
                ch.paths[1].gain.norm_sqr() / ch.paths[0].gain.norm_sqr()
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.1).abs() < 0.01, "mean ratio {mean}");
    }

    #[test]
    fn expected_frobenius_power() {
        let g = ArrayGeometry::ula(4).unwrap();
        let p = ChannelParams::with_paths(3);
        let mut r = rng(5);
        let n = 10_000;
        let mean = (0..n)
            .map(|_| fro(&channel_matrix(&sample_channel(&p, &g, &g, &mut r).unwrap())).powi(2))
            .sum::<f64>()
            / n as f64;
        let expected = 16.0 * (1.0 + 2.0 * 0.1) / 3.0;
        assert!((mean / expected - 1.0).abs() < 0.02, "{mean} vs {expected}");
    }

    #[test]
    fn evolve_rho_one_keeps_gains() {
        let g = ArrayGeometry::ula(4).unwrap();
        let ch = sample_channel(&ChannelParams::with_paths(3), &g, &g, &mut rng(1)).unwrap();
        let next = evolve(&ch, 1.0, &mut rng(2)).unwrap();
        assert_eq!(ch, next);
        assert!(evolve(&ch, 1.5, &mut rng(2)).is_err());
        assert!(evolve(&ch, -0.1, &mut rng(2)).is_err());
    }

    #[test]
    fn evolve_rho_zero_decorrelates() {
        let g = ArrayGeometry::ula(2).unwrap();
        let p = ChannelParams {
            num_paths: 2,
            nlos_offset_db: 0.0,
            ..ChannelParams::default()
        };
        let mut r = rng(21);
        let n = 10_000;
        let pairs: Vec<(Complex64, Complex64)> = (0..n)
            .map(|_| {
                let ch = sample_channel(&p, &g, &g, &mut r).unwrap();
                let next = evolve(&ch, 0.0, &mut r).unwrap();
                (ch.paths[1].gain, next.paths[1].gain)
            })
            .collect();
        let cross: Complex64 = pairs.iter().map(|(a, b)| a * b.conj()).sum::<Complex64>() / n as f64;
        let pa = pairs.iter().map(|(a, _)| a.norm_sqr()).sum::<f64>() / n as f64;
        let pb = pairs.iter().map(|(_, b)| b.norm_sqr()).sum::<f64>() / n as f64;
        let corr = cross.norm() / (pa * pb).sqrt();
        assert!(corr < 0.02, "correlation {corr}");
    }

    #[test]
    fn evolve_preserves_power() {
        let g = ArrayGeometry::ula(2).unwrap();
        let p = ChannelParams::with_paths(2);
        for &rho in &[0.0, 0.5, 0.9, 0.99] {
            let mut r = rng(31);
            let n = 10_000;
            let (mut before, mut after) = ([0.0; 2], [0.0; 2]);
            for _ in 0..n {
                let ch = sample_channel(&p, &g, &g, &mut r).unwrap();
                let next = evolve(&ch, rho, &mut r).unwrap();
                for l in 0..2 {
                    before[l] += ch.paths[l].gain.norm_sqr();
                    after[l] += next.paths[l].gain.norm_sqr();
                }
            }
            for l in 0..2 {
                assert!((after[l] / before[l] - 1.0).abs() < 0.02, "rho {rho} path {l}");
            }
        }
    }

    #[test]
    fn dft_small_cases() {
        let d1 = dft_matrix(1).unwrap();
        assert_eq!(d1[(0, 0)], Complex64::new(1.0, 0.0));
        let d2 = dft_matrix(2).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let expect = [[s, s], [s, -s]];
        for j in 0..2 {
            for k in 0..2 {
                assert!((d2[(j, k)] - Complex64::new(expect[j][k], 0.0)).norm() < 1e-15);
            }
        }
        assert!(dft_matrix(0).is_err());
    }

    #[test]
    fn dft_is_unitary() {
        let u = dft_matrix(8).unwrap();
        let g = u.t().mapv(|x| x.conj()).dot(&u);
        for ((j, k), x) in g.indexed_iter() {
            let target = if j == k { 1.0 } else { 0.0 };
            assert!((x - Complex64::new(target, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn virtual_transform_matches_explicit_bases() {
        let tx = ArrayGeometry::new(2, 4).unwrap();
        let rx = ArrayGeometry::new(3, 2).unwrap();
        let mut r = rng(7);
        let h = CMatrix::from_shape_fn((6, 8), |_| complex_normal(&mut r, 1.0));
        let fast = virtual_channel(&h, &tx, &rx).unwrap();
        let ut = angular_basis(&tx).unwrap();
        let ur = angular_basis(&rx).unwrap();
        let slow = ur.t().mapv(|x| x.conj()).dot(&h).dot(&ut);
        for (a, b) in fast.iter().zip(slow.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
        let back = from_virtual(&fast, &tx, &rx).unwrap();
        for (a, b) in back.iter().zip(h.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn virtual_transform_shape_mismatch() {
        let g = ArrayGeometry::ula(4).unwrap();
        let h = CMatrix::zeros((3, 4));
        assert!(matches!(
            virtual_channel(&h, &g, &g),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn grid_aligned_path_occupies_one_bin() {
        let g = ArrayGeometry::ula(16).unwrap();
        let ch = ChannelRealization {
            paths: vec![PathComponent {
                gain: Complex64::new(0.6, -0.8),
                aod_az: (2.0 * 3.0 / 16.0f64).asin(),
                aod_el: 0.0,
                aoa_az: (-2.0 * 5.0 / 16.0f64).asin(),
                aoa_el: 0.0,
                is_los: true,
            }],
            carrier_ghz: 28.0,
            tx_geom: g,
            rx_geom: g,
            nlos_power: 0.1,
        };
        let hv = virtual_channel(&channel_matrix(&ch), &g, &g).unwrap();
        let big = hv.iter().filter(|x| x.norm() > 1e-9).count();
        assert_eq!(big, 1);
    }

    #[test]
    fn awgn_limits() {
        let x = Complex64::new(0.3, -0.7);
        let y = awgn(x, 200.0, &mut rng(1));
        assert!((y - x).norm() < 1e-9);
        assert_eq!(awgn(x, 3.0, &mut rng(4)), awgn(x, 3.0, &mut rng(4)));

        let mut r = rng(2);
        let n = 100_000;
        let var = (0..n)
            .map(|_| awgn(Complex64::default(), 0.0, &mut r).norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((var - 1.0).abs() < 0.03, "variance {var}");
    }

    #[test]
    fn path_link_matches_matrix() {
        let tx = ArrayGeometry::new(2, 8).unwrap();
        let rx = ArrayGeometry::ula(8).unwrap();
        let mut r = rng(13);
        let ch = sample_channel(&ChannelParams::with_paths(3), &tx, &rx, &mut r).unwrap();
        let h = channel_matrix(&ch);
        let w = CVector::from_shape_fn(8, |_| complex_normal(&mut r, 1.0));
        let f = CVector::from_shape_fn(16, |_| complex_normal(&mut r, 1.0));
        let dense = w.dot(&h.dot(&f));
        let fast = ch.link().response(w.as_slice().unwrap(), f.as_slice().unwrap());
        assert!((dense - fast).norm() < 1e-9 * dense.norm().max(1.0));
    }
}
