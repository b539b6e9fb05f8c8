//! Monte-Carlo sweeps behind each scenario.
//!
//! Trial `t` of every point uses the session seed
//! `derive_u64(master_seed, t, "trial")`, independent of SNR and case, so
//! curves within one table share their random numbers and points can be
//! compared pairwise.

use std::path::Path;

use rand::Rng;

use crate::channel::ArrayGeometry;
use crate::error::{Error, Result};
use crate::keygen::{reconcile, BitString};
use crate::probing::{EveConfig, Party};
use crate::schemes::{
    baseline_channel_quant_session, multires_session, secret_beam_session, virtual_angle_session, SchemeId,
    SessionConfig,
};
use crate::seeds;

use super::config::{ExperimentConfig, Overrides, Scenario};
use super::par::{map_trials, Execution};
use super::table::{format_real, mean_stderr, Metric, ResultTable, Row};

/// Session seed of trial `trial`.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    seeds::derive_u64(master, trial as u64, "trial")
}

/// One per-trial value, as written by the raw dump.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialValue {
    pub scheme: String,
    pub case: String,
    pub snr_db: Option<f64>,
    pub trial: usize,
    pub seed: u64,
    pub metric: Metric,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub table: ResultTable,
    pub raw: Vec<TrialValue>,
}

#[derive(Debug, Clone)]
enum Job {
    Session(SessionConfig),
    Cascade { p: f64, n_bits: usize },
}

/// One aggregated point of a sweep.
struct Point {
    scheme: String,
    case: String,
    snr_db: Option<f64>,
    job: Job,
}

pub fn run_scenario(cfg: &ExperimentConfig) -> Result<ResultTable> {
    run_scenario_with(cfg, Execution::Parallel).map(|o| o.table)
}

/// Runs every point of the scenario; `exec` only affects speed.
pub fn run_scenario_with(cfg: &ExperimentConfig, exec: Execution) -> Result<RunOutput> {
    cfg.validate()?;
    let points = plan(cfg).map_err(|e| context(cfg, "planning", e))?;
    let mut out = RunOutput::default();
    for pt in &points {
        let label = format!(
            "{} {} snr {}",
            pt.scheme,
            pt.case,
            pt.snr_db.map_or("-".to_string(), format_real)
        );
        log::info!("{}: {label}", cfg.scenario);
        let per_trial = map_trials(cfg.trials, exec, |t| {
            let seed = trial_seed(cfg.seed, t);
            run_job(&pt.job, seed).map(|v| (seed, v))
        });
        let per_trial = per_trial
            .into_iter()
            .collect::<Result<Vec<_>>>()
            .map_err(|e| context(cfg, &label, e))?;

        let metrics: Vec<Metric> = per_trial[0].1.iter().map(|(m, _)| *m).collect();
        for (k, metric) in metrics.into_iter().enumerate() {
            let xs: Vec<f64> = per_trial.iter().map(|(_, v)| v[k].1).collect();
            let (value, stderr) = mean_stderr(&xs);
            out.table.rows.push(Row {
                scenario: cfg.scenario.name().to_string(),
                scheme: pt.scheme.clone(),
                case: pt.case.clone(),
                snr_db: pt.snr_db,
                metric,
                value,
                stderr,
                trials: cfg.trials,
                seed: cfg.seed,
            });
            out.raw
                .extend(per_trial.iter().enumerate().map(|(t, (seed, v))| TrialValue {
                    scheme: pt.scheme.clone(),
                    case: pt.case.clone(),
                    snr_db: pt.snr_db,
                    trial: t,
                    seed: *seed,
                    metric,
                    value: v[k].1,
                }));
        }
    }
    Ok(out)
}

fn context(cfg: &ExperimentConfig, what: &str, e: Error) -> Error {
    Error::Scenario {
        scenario: format!("{} ({what})", cfg.scenario),
        source: Box::new(e),
    }
}

fn run_job(job: &Job, seed: u64) -> Result<Vec<(Metric, f64)>> {
    match job {
        Job::Session(base) => {
            let cfg = SessionConfig { seed, ..base.clone() };
            match cfg.scheme {
                SchemeId::SecretBeam => {
                    let r = secret_beam_session(&cfg)?;
                    Ok(vec![(Metric::BarLegit, r.bar_legit), (Metric::BarEve, r.bar_eve)])
                }
                SchemeId::VirtualAngle => Ok(vec![(Metric::Bdr, virtual_angle_session(&cfg)?.bdr)]),
                SchemeId::Baseline => Ok(vec![(Metric::Bdr, baseline_channel_quant_session(&cfg)?.bdr)]),
                SchemeId::Multires => {
                    let r = multires_session(&cfg)?;
                    Ok(vec![
                        (Metric::KerMultires, r.ker_multires),
                        (Metric::KerFixed, r.ker_fixed),
                    ])
                }
            }
        }
        Job::Cascade { p, n_bits } => {
            let mut rng = seeds::stream(seed, 0, "cascade-bench");
            let a: BitString = (0..*n_bits).map(|_| rng.random::<bool>()).collect();
            let b: BitString = a.iter().map(|x| x ^ rng.random_bool(*p)).collect();
            let r = reconcile(&a, &b, 0.1, seeds::derive_u64(seed, 0, "cascade"))?;
            Ok(vec![
                (Metric::LeakFraction, r.leaked_bits() as f64 / *n_bits as f64),
                (Metric::ResidualMismatch, if r.alice == r.bob { 0.0 } else { 1.0 }),
            ])
        }
    }
}

fn apply(o: &Overrides, s: &mut SessionConfig) {
    if let Some(x) = o.levels {
        s.levels = x;
    }
    if let Some(x) = o.rounds {
        s.rounds = x;
    }
    if let Some(x) = o.rho {
        s.channel.temporal_rho = x;
    }
    if let Some(x) = o.nlos_offset_db {
        s.channel.nlos_offset_db = x;
    }
    if let Some(x) = o.blocks {
        s.blocks = x;
    }
    if let Some(x) = o.window_db {
        s.window_db = x;
    }
    if let Some(x) = o.beams {
        s.beams = x;
    }
}

fn dims_label((r, c): (usize, usize)) -> String {
    format!("{r}x{c}")
}

fn eve_label(e: &EveConfig) -> &'static str {
    match e.colocated_with {
        Some(Party::Alice) => "eve=alice",
        Some(Party::Bob) => "eve=bob",
        None => "eve=none",
    }
}

fn same_arrays(s: &mut SessionConfig, (r, c): (usize, usize)) -> Result<()> {
    let g = ArrayGeometry::new(r, c)?;
    s.alice = g;
    s.bob = g;
    Ok(())
}

fn plan(cfg: &ExperimentConfig) -> Result<Vec<Point>> {
    let o = &cfg.overrides;
    let mut points = Vec::new();
    let mut push = |scheme: &str, case: String, snr: Option<f64>, job: Job| {
        points.push(Point {
            scheme: scheme.to_string(),
            case,
            snr_db: snr,
            job,
        })
    };
    match cfg.scenario {
        Scenario::Fig2 => {
            let dims = o.dims.clone().unwrap_or_else(|| vec![(32, 16), (16, 8)]);
            let eves = o.eve.clone().unwrap_or_else(|| vec![Party::Alice, Party::Bob]);
            for &d in &dims {
                for &e in &eves {
                    let eve = EveConfig::at(e);
                    let case = format!("{} {}", dims_label(d), eve_label(&eve));
                    for &snr in &cfg.snr_grid {
                        let mut s = SessionConfig::secret_beam(d.0, d.1, snr, cfg.seed)?;
                        if let Some(p) = &o.paths {
                            s.channel.num_paths = p[0];
                        }
                        s.eve = eve;
                        apply(o, &mut s);
                        push("secret_beam", case.clone(), Some(snr), Job::Session(s));
                    }
                }
            }
        }
        Scenario::Fig3 => {
            let dims = o.dims.clone().unwrap_or_else(|| vec![(128, 1), (64, 1)]);
            let paths = o.paths.clone().unwrap_or_else(|| vec![2, 3]);
            for scheme in [SchemeId::VirtualAngle, SchemeId::Baseline] {
                for &d in &dims {
                    for &l in &paths {
                        let case = format!("{} L={l}", dims_label(d));
                        for &snr in &cfg.snr_grid {
                            let mut s = SessionConfig::virtual_angle(d.0, l, snr, cfg.seed)?;
                            same_arrays(&mut s, d)?;
                            s.scheme = scheme;
                            apply(o, &mut s);
                            push(scheme.name(), case.clone(), Some(snr), Job::Session(s));
                        }
                    }
                }
            }
        }
        Scenario::Fig4 => {
            let beams = o.beams.unwrap_or(5);
            for &snr in &cfg.snr_grid {
                let mut s = SessionConfig::multires(beams, snr, cfg.seed)?;
                if let Some(d) = &o.dims {
                    s.alice = ArrayGeometry::new(d[0].0, d[0].1)?;
                    if let Some(&b) = d.get(1) {
                        s.bob = ArrayGeometry::new(b.0, b.1)?;
                    }
                }
                if let Some(p) = &o.paths {
                    s.channel.num_paths = p[0];
                }
                apply(o, &mut s);
                let case = format!("{} to {} P={}", s.alice, s.bob, s.beams);
                push("multires", case, Some(snr), Job::Session(s));
            }
        }
        Scenario::CascadeBench => {
            let rates = o.error_rates.clone().unwrap_or_else(|| vec![0.02, 0.05, 0.1, 0.15]);
            let n_bits = o.n_bits.unwrap_or(4096);
            for &p in &rates {
                push("cascade", format!("p={p} n={n_bits}"), None, Job::Cascade { p, n_bits });
            }
        }
        Scenario::Custom => {
            let scheme = o
                .scheme
                .ok_or_else(|| Error::Validation(vec!["scheme: required".into()]))?;
            let eves: Vec<EveConfig> = match &o.eve {
                Some(v) => v.iter().map(|&p| EveConfig::at(p)).collect(),
                None => vec![EveConfig::none()],
            };
            for eve in eves {
                for &snr in &cfg.snr_grid {
                    let mut s = match scheme {
                        SchemeId::SecretBeam => SessionConfig::secret_beam(32, 16, snr, cfg.seed)?,
                        SchemeId::VirtualAngle | SchemeId::Baseline => {
                            let mut s = SessionConfig::virtual_angle(128, 3, snr, cfg.seed)?;
                            s.scheme = scheme;
                            s
                        }
                        SchemeId::Multires => SessionConfig::multires(5, snr, cfg.seed)?,
                    };
                    if let Some(d) = &o.dims {
                        s.alice = ArrayGeometry::new(d[0].0, d[0].1)?;
                        s.bob = match d.get(1) {
                            Some(&b) => ArrayGeometry::new(b.0, b.1)?,
                            None => s.alice,
                        };
                    }
                    if let Some(p) = &o.paths {
                        s.channel.num_paths = p[0];
                    }
                    s.eve = eve;
                    apply(o, &mut s);
                    let case = format!("{} to {} {}", s.alice, s.bob, eve_label(&eve));
                    push(scheme.name(), case, Some(snr), Job::Session(s));
                }
            }
        }
    }
    Ok(points)
}

/// Writes per-trial values as CSV: one line per trial and metric.
pub fn write_raw(raw: &[TrialValue], scenario: Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let wrap = |source: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(wrap)?;
    w.write_record([
        "scenario", "scheme", "case", "snr_db", "trial", "seed", "metric", "value",
    ])
    .map_err(wrap)?;
    for r in raw {
        w.write_record([
            scenario.name().to_string(),
            r.scheme.clone(),
            r.case.clone(),
            r.snr_db.map(format_real).unwrap_or_default(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.metric.name().to_string(),
            // full precision so the aggregates can be recomputed exactly
            format!("{:?}", r.value),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
