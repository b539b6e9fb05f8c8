use mmkeygen::channel::{
    angular_basis, array_response, channel_matrix, dft_matrix, sample_channel, virtual_channel, AngleDistribution,
    ArrayGeometry, CMatrix, ChannelParams, ChannelRealization, PathComponent,
};
use mmkeygen::keygen::{gray_decode, gray_encode, xor_combine, BitString, Quantizer};
use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn frob(m: &CMatrix) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `U_r^H H U_t` by explicit matrix products.
fn virtual_by_matmul(h: &CMatrix, tx: &ArrayGeometry, rx: &ArrayGeometry) -> CMatrix {
    let ut = angular_basis(tx).unwrap();
    let ur = angular_basis(rx).unwrap();
    let urh = ur.t().mapv(|x| x.conj());
    urh.dot(h).dot(&ut)
}

fn geometry() -> impl Strategy<Value = ArrayGeometry> {
    (1usize..=8, 1usize..=16).prop_map(|(r, c)| ArrayGeometry::new(r, c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn responses_unit_norm(g in geometry(), az in -1.5f64..1.5, el in -1.5f64..1.5) {
        let a = array_response(&g, az, el).unwrap();
        let n: f64 = a.iter().map(|x| x.norm_sqr()).sum();
        prop_assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn virtual_transform_preserves_norm(tx in geometry(), rx in geometry(), seed in any::<u64>(), paths in 1usize..5) {
        let params = ChannelParams { num_paths: paths, ..ChannelParams::default() };
        let ch = sample_channel(&params, &tx, &rx, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let h = channel_matrix(&ch);
        let hv = virtual_channel(&h, &tx, &rx).unwrap();
        prop_assert!((frob(&hv) - frob(&h)).abs() <= 1e-10 * frob(&h).max(1.0));
        let oracle = virtual_by_matmul(&h, &tx, &rx);
        let diff = &hv - &oracle;
        prop_assert!(frob(&diff) <= 1e-10 * frob(&h).max(1.0));
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit(x in 0u64..(1 << 40)) {
        prop_assert_eq!((gray_encode(x) ^ gray_encode(x + 1)).count_ones(), 1);
        prop_assert_eq!(gray_decode(gray_encode(x)), x);
    }

    #[test]
    fn xor_is_an_involution(a in proptest::collection::vec(any::<bool>(), 0..300), seed in any::<u64>()) {
        let a: BitString = a.into_iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: BitString = (0..a.len()).map(|_| rand::Rng::random::<bool>(&mut rng)).collect();
        let once = xor_combine(&a, &b).unwrap();
        prop_assert_eq!(xor_combine(&once, &b).unwrap(), a);
    }
}

#[test]
fn dft_unitary() {
    for n in [1usize, 2, 7, 16, 64, 128] {
        let u = dft_matrix(n).unwrap();
        let prod = u.t().mapv(|x| x.conj()).dot(&u);
        let eye = Array2::from_shape_fn((n, n), |(i, j)| Complex64::new((i == j) as u8 as f64, 0.0));
        assert!(frob(&(&prod - &eye)) < 1e-10, "n = {n}");
    }
    for (r, c) in [(4, 8), (16, 1), (1, 32)] {
        let u = angular_basis(&ArrayGeometry::new(r, c).unwrap()).unwrap();
        let prod = u.t().mapv(|x| x.conj()).dot(&u);
        let n = r * c;
        let eye = Array2::from_shape_fn((n, n), |(i, j)| Complex64::new((i == j) as u8 as f64, 0.0));
        assert!(frob(&(&prod - &eye)) < 1e-10);
    }
}

fn dominant_share(g: &ArrayGeometry, u_tx: f64, u_rx: f64) -> f64 {
    let ch = ChannelRealization {
        paths: vec![PathComponent {
            gain: Complex64::new(1.0, 0.0),
            aod_az: u_tx.asin(),
            aod_el: 0.0,
            aoa_az: u_rx.asin(),
            aoa_el: 0.0,
            is_los: true,
        }],
        carrier_ghz: 28.0,
        tx_geom: *g,
        rx_geom: *g,
        nlos_power: 0.1,
    };
    let hv = virtual_channel(&channel_matrix(&ch), g, g).unwrap();
    let total: f64 = hv.iter().map(|x| x.norm_sqr()).sum();
    hv.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max) / total
}

#[test]
fn off_grid_leakage_bounded() {
    // an off-grid direction keeps at least 40% of its energy in one bin per
    // axis; off-grid at both ends the shares multiply
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [32usize, 64, 128] {
        let g = ArrayGeometry::ula(n).unwrap();
        let half_bin = 1.0 / n as f64;
        assert!(dominant_share(&g, half_bin, 0.0) >= 0.4);
        for _ in 0..50 {
            let u: f64 = rand::Rng::random_range(&mut rng, -0.95..0.95);
            let v: f64 = rand::Rng::random_range(&mut rng, -0.95..0.95);
            assert!(dominant_share(&g, u, 0.0) >= 0.4, "n {n}, u {u}");
            assert!(dominant_share(&g, 0.0, v) >= 0.4, "n {n}, v {v}");
            assert!(dominant_share(&g, u, v) >= 0.4 * 0.4, "n {n}, u {u}, v {v}");
        }
    }
}

#[test]
fn grid_paths_hit_single_bins() {
    let g = ArrayGeometry::new(32, 1).unwrap();
    let params = ChannelParams {
        num_paths: 1,
        angles: AngleDistribution::VirtualGrid,
        ..ChannelParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let ch = sample_channel(&params, &g, &g, &mut rng).unwrap();
        let hv = virtual_channel(&channel_matrix(&ch), &g, &g).unwrap();
        assert_eq!(hv.iter().filter(|x| x.norm() > 1e-9).count(), 1);
    }
}

#[test]
fn quantizer_adjacent_cells_one_bit_apart() {
    let q = Quantizer::new(16, 0.0, 16.0).unwrap();
    for k in 0..15 {
        let a = q.encode(&[k as f64 + 0.5]);
        let b = q.encode(&[k as f64 + 1.5]);
        assert_eq!(a.hamming(&b).unwrap(), 1, "cells {k} and {}", k + 1);
    }
}
