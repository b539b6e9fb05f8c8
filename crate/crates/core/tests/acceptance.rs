//! Reproduction criteria. Runs as a plain binary: one PASS/FAIL line per
//! criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use mmkeygen::channel::{
    angular_basis, channel_matrix, dft_matrix, sample_channel, virtual_channel, ArrayGeometry, CMatrix, ChannelParams,
};
use mmkeygen::experiments::{run_scenario, to_csv_bytes, ExperimentConfig, Metric, ResultTable, Row, Scenario};
use mmkeygen::keygen::{gray_encode, key_entropy_rate, xor_combine, BitString, Quantizer, QuantizerConfig};
use mmkeygen::schemes::{
    baseline_channel_quant_session, secret_beam_session, virtual_angle_session, SchemeId, SessionConfig,
};
use mmkeygen::seeds;
use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

const SEED: u64 = 2018;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn rows<'a>(t: &'a ResultTable, metric: Metric, case: &str) -> Vec<&'a Row> {
    t.rows.iter().filter(|r| r.metric == metric && r.case == case).collect()
}

fn fig2_table() -> ResultTable {
    run_scenario(&ExperimentConfig::preset(Scenario::Fig2, SEED)).expect("fig2 runs")
}

fn eve_defeat(t: &ResultTable) -> Verdict {
    // final-key bits per point: trials x rounds x log2(levels)
    let probe = SessionConfig::secret_beam(32, 16, 0.0, 0).unwrap();
    let bits = 1000 * probe.rounds * probe.levels.trailing_zeros() as usize;
    let eve: Vec<&Row> = t.rows.iter().filter(|r| r.metric == Metric::BarEve).collect();
    let cases: std::collections::BTreeSet<&str> = eve.iter().map(|r| r.case.as_str()).collect();
    let (lo, hi) = eve
        .iter()
        .fold((1.0f64, 0.0f64), |(lo, hi), r| (lo.min(r.value), hi.max(r.value)));
    let pass = cases.len() == 4 && eve.len() == 20 && bits >= 10_000 && lo >= 0.47 && hi <= 0.53;
    verdict(
        pass,
        format!(
            "{} cases, {} points, {bits} key bits each, bar_eve in [{lo:.4}, {hi:.4}]",
            cases.len(),
            eve.len()
        ),
    )
}

fn fig2_ordering(t: &ResultTable) -> Verdict {
    // a comparison fails only if it is reversed by more than one combined stderr
    let (mut checks, mut reversed, mut violations) = (0, 0, 0);
    let mut tally = |hi: &Row, lo: &Row| {
        checks += 1;
        let gap = hi.value - lo.value;
        if gap < 0.0 {
            reversed += 1;
            if -gap > hi.stderr.hypot(lo.stderr) {
                violations += 1;
            }
        }
    };
    for eve in ["eve=alice", "eve=bob"] {
        let big = rows(t, Metric::BarLegit, &format!("32x16 {eve}"));
        let small = rows(t, Metric::BarLegit, &format!("16x8 {eve}"));
        for (b, s) in big.iter().zip(&small) {
            tally(b, s);
        }
        for curve in [&big, &small] {
            for w in curve.windows(2) {
                tally(w[1], w[0]);
            }
        }
    }
    let fmt = |case: &str| -> String {
        rows(t, Metric::BarLegit, case)
            .iter()
            .map(|r| format!("{:.3}", r.value))
            .collect::<Vec<_>>()
            .join(", ")
    };
    verdict(
        checks == 26 && violations == 0,
        format!(
            "bar_legit 32x16 [{}], 16x8 [{}]; {checks} comparisons, {reversed} reversed, {violations} beyond 1 stderr",
            fmt("32x16 eve=alice"),
            fmt("16x8 eve=alice")
        ),
    )
}

fn fig3_threshold() -> Verdict {
    let mut cfg = ExperimentConfig::preset(Scenario::Fig3, SEED);
    cfg.overrides.dims = Some(vec![(128, 1)]);
    cfg.overrides.paths = Some(vec![3]);
    let t = run_scenario(&cfg).expect("fig3 runs");
    let virt: Vec<&Row> = t.rows.iter().filter(|r| r.scheme == "virtual_angle").collect();
    let base: Vec<&Row> = t.rows.iter().filter(|r| r.scheme == "baseline").collect();
    let bits = cfg.trials * 3 * 14;
    let at10 = virt.iter().find(|r| r.snr_db == Some(-10.0)).expect("-10 dB point");
    let separated = virt.iter().zip(&base).all(|(v, b)| v.value < b.value);
    let curve: Vec<String> = virt.iter().map(|r| format!("{:.4}", r.value)).collect();
    verdict(
        bits >= 10_000 && at10.value <= 1e-2 && separated,
        format!(
            "bdr(virtual, -10 dB, 128, L=3) = {:.4} +- {:.4} over {bits} bits (limit 0.01); virtual [{}] below baseline at every SNR: {separated}",
            at10.value,
            at10.stderr,
            curve.join(", ")
        ),
    )
}

fn fig4_ratios() -> Verdict {
    let t = run_scenario(&ExperimentConfig::preset(Scenario::Fig4, SEED)).expect("fig4 runs");
    let m: Vec<&Row> = t.rows.iter().filter(|r| r.metric == Metric::KerMultires).collect();
    let f: Vec<&Row> = t.rows.iter().filter(|r| r.metric == Metric::KerFixed).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for (a, b) in m.iter().zip(&f) {
        let snr = a.snr_db.unwrap();
        if snr >= 10.0 {
            let r = a.value / b.value;
            ok &= (3.5..=5.0).contains(&r);
            parts.push(format!("{snr} dB {r:.2}"));
        }
    }
    let fixed20 = f.iter().find(|r| r.snr_db == Some(20.0)).expect("20 dB point").value;
    ok &= (0.9..=1.3).contains(&fixed20);
    verdict(
        ok,
        format!(
            "ratio {} (limit [3.5, 5.0]); ker_fixed at 20 dB {fixed20:.3} (limit [0.9, 1.3])",
            parts.join(", ")
        ),
    )
}

fn cascade_bench() -> Verdict {
    let mut cfg = ExperimentConfig::preset(Scenario::CascadeBench, SEED);
    cfg.overrides.error_rates = Some(vec![0.1]);
    cfg.overrides.n_bits = Some(4096);
    cfg.trials = 100;
    let t = run_scenario(&cfg).expect("cascade bench runs");
    let leak = t.rows.iter().find(|r| r.metric == Metric::LeakFraction).unwrap().value;
    let residual = t
        .rows
        .iter()
        .find(|r| r.metric == Metric::ResidualMismatch)
        .unwrap()
        .value;
    let failures = (residual * cfg.trials as f64).round() as usize;
    verdict(
        failures <= 1 && (0.45..=0.70).contains(&leak),
        format!(
            "{} of 100 trials clean, leaked fraction {leak:.3} (limit [0.45, 0.70])",
            100 - failures
        ),
    )
}

fn frob(m: &CMatrix) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn property_suites() -> Verdict {
    let mut failed = Vec::new();

    let mut unitary = true;
    for n in [16usize, 64, 128] {
        let u = dft_matrix(n).unwrap();
        let eye = Array2::from_shape_fn((n, n), |(i, j)| Complex64::new((i == j) as u8 as f64, 0.0));
        unitary &= frob(&(&u.t().mapv(|x| x.conj()).dot(&u) - &eye)) < 1e-10;
    }
    let mut rng = seeds::stream(SEED, 0, "acceptance-properties");
    for _ in 0..50 {
        let tx = ArrayGeometry::new(rng.random_range(1..9), rng.random_range(1..17)).unwrap();
        let rx = ArrayGeometry::new(rng.random_range(1..9), rng.random_range(1..17)).unwrap();
        let ch = sample_channel(&ChannelParams::with_paths(3), &tx, &rx, &mut rng).unwrap();
        let h = channel_matrix(&ch);
        let hv = virtual_channel(&h, &tx, &rx).unwrap();
        let ur = angular_basis(&rx).unwrap();
        let oracle = ur.t().mapv(|x| x.conj()).dot(&h).dot(&angular_basis(&tx).unwrap());
        unitary &= (frob(&hv) - frob(&h)).abs() <= 1e-10 * frob(&h);
        unitary &= frob(&(&hv - &oracle)) <= 1e-10 * frob(&h);
    }
    if !unitary {
        failed.push("unitarity");
    }

    let mut reciprocal = true;
    for seed in 0..10 {
        let s = SessionConfig::secret_beam(32, 16, f64::INFINITY, seed).unwrap();
        reciprocal &= secret_beam_session(&s).unwrap().bar_legit == 1.0;
        let v = SessionConfig::virtual_angle(128, 3, f64::INFINITY, seed).unwrap();
        reciprocal &= virtual_angle_session(&v).unwrap().bar_legit == 1.0;
        let b = SessionConfig {
            scheme: SchemeId::Baseline,
            ..v
        };
        reciprocal &= baseline_channel_quant_session(&b).unwrap().bar_legit == 1.0;
    }
    if !reciprocal {
        failed.push("reciprocity");
    }

    let q = Quantizer::new(16, 0.0, 16.0).unwrap();
    let gray = (0..15).all(|k| {
        let (a, b) = (q.encode(&[k as f64 + 0.5]), q.encode(&[k as f64 + 1.5]));
        a.hamming(&b).unwrap() == 1
    }) && (0..4096u64).all(|x| (gray_encode(x) ^ gray_encode(x + 1)).count_ones() == 1);
    if !gray {
        failed.push("gray adjacency");
    }

    let xor = (0..100).all(|_| {
        let n = rng.random_range(0..500);
        let a: BitString = (0..n).map(|_| rng.random::<bool>()).collect();
        let b: BitString = (0..n).map(|_| rng.random::<bool>()).collect();
        xor_combine(&xor_combine(&a, &b).unwrap(), &b).unwrap() == a
    });
    if !xor {
        failed.push("xor involution");
    }

    let mut small = ExperimentConfig::preset(Scenario::Fig2, SEED);
    small.trials = 50;
    let once = to_csv_bytes(&run_scenario(&small).unwrap()).unwrap();
    let twice = to_csv_bytes(&run_scenario(&small).unwrap()).unwrap();
    if once != twice {
        failed.push("csv determinism");
    }

    let mut kers = Vec::new();
    for p in [1usize, 2, 5] {
        let samples: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..100_000).map(|_| rng.random::<f64>()).collect())
            .collect();
        let ker = key_entropy_rate(&samples, &QuantizerConfig::with_levels(4)).unwrap();
        if (ker - p as f64).abs() > 0.1 {
            failed.push("ker oracle");
        }
        kers.push(format!("P={p}: {ker:.3}"));
    }

    verdict(
        failed.is_empty(),
        format!(
            "unitarity, reciprocity, gray, xor, csv determinism checked; KER {}; failing: {}",
            kers.join(", "),
            if failed.is_empty() {
                "none".to_string()
            } else {
                failed.join(", ")
            }
        ),
    )
}

fn report(n: usize, name: &str, limit: Duration, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = f();
    let took = start.elapsed();
    let in_time = took <= limit;
    let pass = v.pass && in_time;
    println!(
        "criterion {n} {name}: {} ({}; {:.1} s of {} s allowed)",
        if pass { "PASS" } else { "FAIL" },
        v.detail,
        took.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn main() -> ExitCode {
    let min = |m: u64| Duration::from_secs(60 * m);
    let mut fig2 = None;
    let mut results = vec![report(1, "fig2 eve defeat", min(5), || {
        let t = fig2_table();
        let v = eve_defeat(&t);
        fig2 = Some(t);
        v
    })];
    let fig2 = fig2.expect("fig2 table");
    results.push(report(2, "fig2 ordering", min(5), || fig2_ordering(&fig2)));
    results.push(report(3, "fig3 threshold", min(10), fig3_threshold));
    results.push(report(4, "fig4 ratios", min(10), fig4_ratios));
    results.push(report(5, "cascade bench", min(1), cascade_bench));
    results.push(report(6, "property suites", min(10), property_suites));
    let passed = results.iter().filter(|&&p| p).count();
    println!("{passed} of {} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
