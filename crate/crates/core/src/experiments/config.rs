//! Line-oriented `key = value` experiment files.
//!
//! ```text
//! # Eve defeat sweep
//! scenario = "fig2"
//! seed = 7
//! trials = 1000
//! snr_grid = 0, 5, 10, 15, 20
//!
//! [scheme]
//! dims = "32x16, 16x8"
//! eve = "alice, bob"
//! ```
//!
//! Top-level keys: `scenario`, `seed` (required), `trials`, `snr_grid`,
//! `output`. Keys under `[scheme]` override the scenario's session
//! parameters. Unknown keys and sections are reported as warnings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::probing::Party;
use crate::schemes::SchemeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Fig2,
    Fig3,
    Fig4,
    CascadeBench,
    Custom,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Fig2,
        Scenario::Fig3,
        Scenario::Fig4,
        Scenario::CascadeBench,
        Scenario::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig2 => "fig2",
            Scenario::Fig3 => "fig3",
            Scenario::Fig4 => "fig4",
            Scenario::CascadeBench => "cascade-bench",
            Scenario::Custom => "custom",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }

    /// One-line description for `scenarios`.
    pub fn summary(self) -> &'static str {
        match self {
            Scenario::Fig2 => "Fig. 2: beam-perturbation BAR, legitimate and co-located Eve, 32x16 and 16x8 UPAs",
            Scenario::Fig3 => "Fig. 3: BDR of virtual-angle bits vs per-entry quantization, 128 and 64 element ULAs",
            Scenario::Fig4 => "Fig. 4: key entropy rate of multi-resolution vs fixed-beam probing, P = 5",
            Scenario::CascadeBench => "Cascade leakage and residual mismatch at n = 4096",
            Scenario::Custom => "one scheme over the SNR grid with explicit [scheme] settings",
        }
    }

    pub fn default_trials(self) -> usize {
        match self {
            Scenario::Fig2 => 1000,
            Scenario::Fig3 => 500,
            Scenario::Fig4 => 20,
            Scenario::CascadeBench => 100,
            Scenario::Custom => 100,
        }
    }

    pub fn default_snr_grid(self) -> Vec<f64> {
        match self {
            Scenario::Fig3 => vec![-20.0, -15.0, -10.0, -5.0, 0.0],
            _ => vec![0.0, 5.0, 10.0, 15.0, 20.0],
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Optional session parameters from the `[scheme]` section. Unset fields
/// take the scenario's defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub scheme: Option<SchemeId>,
    /// Array shapes as `(rows, cols)`; for ULAs `cols` is 1.
    pub dims: Option<Vec<(usize, usize)>>,
    pub paths: Option<Vec<usize>>,
    pub beams: Option<usize>,
    pub levels: Option<u32>,
    pub rho: Option<f64>,
    pub eve: Option<Vec<Party>>,
    pub nlos_offset_db: Option<f64>,
    pub blocks: Option<usize>,
    pub rounds: Option<usize>,
    pub window_db: Option<f64>,
    pub error_rates: Option<Vec<f64>>,
    pub n_bits: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub trials: usize,
    pub snr_grid: Vec<f64>,
    pub output: Option<PathBuf>,
    pub overrides: Overrides,
}

impl ExperimentConfig {
    /// Scenario defaults with the given master seed.
    pub fn preset(scenario: Scenario, seed: u64) -> Self {
        Self {
            scenario,
            seed,
            trials: scenario.default_trials(),
            snr_grid: scenario.default_snr_grid(),
            output: None,
            overrides: Overrides::default(),
        }
    }

    /// Where `run` writes when no `--out` is given.
    pub fn output_path(&self) -> PathBuf {
        self.output
            .clone()
            .unwrap_or_else(|| Path::new("results").join(format!("{}.csv", self.scenario)))
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.trials == 0 {
            errs.push("trials: must be at least 1".to_string());
        }
        if self.snr_grid.is_empty() {
            errs.push("snr_grid: must not be empty".to_string());
        }
        if self.snr_grid.iter().any(|x| !x.is_finite()) {
            errs.push("snr_grid: values must be finite".to_string());
        }
        let o = &self.overrides;
        if self.scenario == Scenario::Custom && o.scheme.is_none() {
            errs.push("scheme: required for the custom scenario".to_string());
        }
        if let Some(d) = &o.dims {
            if d.is_empty() || d.iter().any(|&(r, c)| r == 0 || c == 0) {
                errs.push("dims: every shape needs positive rows and cols".to_string());
            }
        }
        if let Some(p) = &o.paths {
            if p.is_empty() || p.contains(&0) {
                errs.push("paths: values must be at least 1".to_string());
            }
        }
        if o.beams == Some(0) {
            errs.push("beams: must be at least 1".to_string());
        }
        if let Some(l) = o.levels {
            if l < 2 || !l.is_power_of_two() {
                errs.push(format!("levels: {l} is not a power of two >= 2"));
            }
        }
        if let Some(r) = o.rho {
            if !(0.0..=1.0).contains(&r) {
                errs.push(format!("rho: {r} outside [0, 1]"));
            }
        }
        if let Some(e) = &o.eve {
            if e.is_empty() {
                errs.push("eve: needs at least one placement".to_string());
            }
        }
        if let Some(x) = o.nlos_offset_db {
            if !(x.is_finite() && x >= 0.0) {
                errs.push(format!("nlos_offset_db: {x} must be >= 0"));
            }
        }
        if o.blocks == Some(0) {
            errs.push("blocks: must be at least 1".to_string());
        }
        if o.rounds == Some(0) {
            errs.push("rounds: must be at least 1".to_string());
        }
        if let Some(w) = o.window_db {
            if !(w.is_finite() && w >= 0.0) {
                errs.push(format!("window_db: {w} must be >= 0"));
            }
        }
        if let Some(p) = &o.error_rates {
            if p.is_empty() || p.iter().any(|&x| !(x > 0.0 && x < 0.5)) {
                errs.push("error_rates: values must lie in (0, 0.5)".to_string());
            }
        }
        if o.n_bits == Some(0) {
            errs.push("n_bits: must be at least 1".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// Text form that [`parse`] reads back to an equal value.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario = \"{}\"", self.scenario);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "snr_grid = {}", join(&self.snr_grid));
        if let Some(p) = &self.output {
            let _ = writeln!(s, "output = \"{}\"", p.display());
        }
        let o = &self.overrides;
        let mut sec = String::new();
        if let Some(x) = o.scheme {
            let _ = writeln!(sec, "scheme = \"{x}\"");
        }
        if let Some(d) = &o.dims {
            let v: Vec<String> = d.iter().map(|(r, c)| format!("{r}x{c}")).collect();
            let _ = writeln!(sec, "dims = \"{}\"", v.join(", "));
        }
        if let Some(x) = &o.paths {
            let _ = writeln!(sec, "paths = {}", join(x));
        }
        if let Some(x) = o.beams {
            let _ = writeln!(sec, "beams = {x}");
        }
        if let Some(x) = o.levels {
            let _ = writeln!(sec, "levels = {x}");
        }
        if let Some(x) = o.rho {
            let _ = writeln!(sec, "rho = {x:?}");
        }
        if let Some(e) = &o.eve {
            let v: Vec<&str> = e.iter().map(|p| party_name(*p)).collect();
            let _ = writeln!(sec, "eve = \"{}\"", v.join(", "));
        }
        if let Some(x) = o.nlos_offset_db {
            let _ = writeln!(sec, "nlos_offset_db = {x:?}");
        }
        if let Some(x) = o.blocks {
            let _ = writeln!(sec, "blocks = {x}");
        }
        if let Some(x) = o.rounds {
            let _ = writeln!(sec, "rounds = {x}");
        }
        if let Some(x) = o.window_db {
            let _ = writeln!(sec, "window_db = {x:?}");
        }
        if let Some(x) = &o.error_rates {
            let _ = writeln!(sec, "error_rates = {}", join(x));
        }
        if let Some(x) = o.n_bits {
            let _ = writeln!(sec, "n_bits = {x}");
        }
        if !sec.is_empty() {
            s.push_str("\n[scheme]\n");
            s.push_str(&sec);
        }
        s
    }
}

fn join<T: std::fmt::Debug>(xs: &[T]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

fn party_name(p: Party) -> &'static str {
    match p {
        Party::Alice => "alice",
        Party::Bob => "bob",
    }
}

/// Result of parsing: the config plus any warnings about ignored input.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub config: ExperimentConfig,
    pub warnings: Vec<String>,
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Loaded> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, &path.display().to_string())
}

/// Parses config text; `origin` names the source in error messages.
pub fn parse(text: &str, origin: &str) -> Result<Loaded> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    let mut warnings = Vec::new();
    let mut section = String::new();
    let mut scenario = None;
    let mut seed = None;
    let mut trials = None;
    let mut snr_grid = None;
    let mut output = None;
    let mut o = Overrides::default();

    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(n, format!("unterminated section header `{line}`")))?
                .trim();
            if name != "scheme" {
                warnings.push(format!("{origin}:{n}: unknown section [{name}]"));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(n, format!("expected `key = value`, found `{line}`")))?;
        let (key, value) = (key.trim(), Value::parse(value.trim()).map_err(|m| err(n, m))?);
        let bad = |what: &str| err(n, format!("{key}: expected {what}"));
        match (section.as_str(), key) {
            ("", "scenario") => {
                let s = value.string().ok_or_else(|| bad("a string"))?;
                scenario = Some(Scenario::from_name(&s).ok_or_else(|| err(n, format!("unknown scenario `{s}`")))?);
            }
            ("", "seed") => seed = Some(value.int().ok_or_else(|| bad("an unsigned integer"))?),
            ("", "trials") => trials = Some(value.int().ok_or_else(|| bad("an integer"))? as usize),
            ("", "snr_grid") => snr_grid = Some(value.reals().ok_or_else(|| bad("numbers"))?),
            ("", "output") => output = Some(PathBuf::from(value.string().ok_or_else(|| bad("a string"))?)),
            ("scheme", "scheme") => {
                let s = value.string().ok_or_else(|| bad("a string"))?;
                o.scheme = Some(SchemeId::from_name(&s).ok_or_else(|| err(n, format!("unknown scheme `{s}`")))?);
            }
            ("scheme", "dims") => {
                let s = value.string().ok_or_else(|| bad("a string like \"32x16, 16x8\""))?;
                o.dims = Some(parse_dims(&s).map_err(|m| err(n, m))?);
            }
            ("scheme", "paths") => o.paths = Some(value.ints().ok_or_else(|| bad("integers"))?),
            ("scheme", "beams") => o.beams = Some(value.int().ok_or_else(|| bad("an integer"))? as usize),
            ("scheme", "levels") => {
                let v = value.int().ok_or_else(|| bad("an integer"))?;
                o.levels = Some(u32::try_from(v).map_err(|_| bad("a 32-bit integer"))?);
            }
            ("scheme", "rho") => o.rho = Some(value.real().ok_or_else(|| bad("a number"))?),
            ("scheme", "eve") => {
                let s = value.string().ok_or_else(|| bad("a string like \"alice, bob\""))?;
                o.eve = Some(parse_parties(&s).map_err(|m| err(n, m))?);
            }
            ("scheme", "nlos_offset_db") => o.nlos_offset_db = Some(value.real().ok_or_else(|| bad("a number"))?),
            ("scheme", "blocks") => o.blocks = Some(value.int().ok_or_else(|| bad("an integer"))? as usize),
            ("scheme", "rounds") => o.rounds = Some(value.int().ok_or_else(|| bad("an integer"))? as usize),
            ("scheme", "window_db") => o.window_db = Some(value.real().ok_or_else(|| bad("a number"))?),
            ("scheme", "error_rates") => o.error_rates = Some(value.reals().ok_or_else(|| bad("numbers"))?),
            ("scheme", "n_bits") => o.n_bits = Some(value.int().ok_or_else(|| bad("an integer"))? as usize),
            _ => {
                let place = if section.is_empty() {
                    String::new()
                } else {
                    format!(" in [{section}]")
                };
                warnings.push(format!("{origin}:{n}: unknown key `{key}`{place}"));
            }
        }
    }

    let mut missing = Vec::new();
    if scenario.is_none() {
        missing.push("scenario: required key missing".to_string());
    }
    if seed.is_none() {
        missing.push("seed: required key missing".to_string());
    }
    let (Some(scenario), Some(seed)) = (scenario, seed) else {
        return Err(Error::Validation(missing));
    };
    let mut config = ExperimentConfig::preset(scenario, seed);
    if let Some(t) = trials {
        config.trials = t;
    }
    if let Some(g) = snr_grid {
        config.snr_grid = g;
    }
    config.output = output;
    config.overrides = o;
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Loaded { config, warnings })
}

fn strip_comment(line: &str) -> &str {
    // `#` outside quotes starts a comment
    let mut quoted = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_dims(s: &str) -> std::result::Result<Vec<(usize, usize)>, String> {
    s.split(',')
        .map(|d| {
            let d = d.trim();
            let (r, c) = d.split_once('x').unwrap_or((d, "1"));
            match (r.trim().parse(), c.trim().parse()) {
                (Ok(r), Ok(c)) => Ok((r, c)),
                _ => Err(format!("dims: cannot read `{d}` as ROWSxCOLS")),
            }
        })
        .collect()
}

fn parse_parties(s: &str) -> std::result::Result<Vec<Party>, String> {
    s.split(',')
        .map(|p| match p.trim().to_ascii_lowercase().as_str() {
            "alice" => Ok(Party::Alice),
            "bob" => Ok(Party::Bob),
            other => Err(format!("eve: unknown placement `{other}`")),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Str(String),
    Nums(Vec<f64>),
    /// Integers are kept exactly; `Nums` alone would lose 64-bit seeds.
    Ints(Vec<u64>),
}

impl Value {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        if let Some(rest) = s.strip_prefix('"') {
            let inner = rest
                .strip_suffix('"')
                .ok_or_else(|| format!("unterminated string `{s}`"))?;
            if inner.contains('"') {
                return Err(format!("stray quote in `{s}`"));
            }
            return Ok(Value::Str(inner.to_string()));
        }
        if s.is_empty() {
            return Err("missing value".to_string());
        }
        let items: Vec<&str> = s.split(',').map(str::trim).collect();
        if let Ok(v) = items
            .iter()
            .map(|x| x.parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
        {
            return Ok(Value::Ints(v));
        }
        items
            .iter()
            .map(|x| x.parse::<f64>().map_err(|_| format!("cannot read `{x}` as a number")))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Value::Nums)
    }

    fn string(&self) -> Option<String> {
        match self {
            Value::Str(s) => Some(s.clone()),
            _ => None,
        }
    }

    fn ints(&self) -> Option<Vec<usize>> {
        match self {
            Value::Ints(v) => v.iter().map(|&x| usize::try_from(x).ok()).collect(),
            _ => None,
        }
    }

    fn int(&self) -> Option<u64> {
        match self {
            Value::Ints(v) if v.len() == 1 => Some(v[0]),
            _ => None,
        }
    }

    fn reals(&self) -> Option<Vec<f64>> {
        match self {
            Value::Ints(v) => Some(v.iter().map(|&x| x as f64).collect()),
            Value::Nums(v) => Some(v.clone()),
            Value::Str(_) => None,
        }
    }

    fn real(&self) -> Option<f64> {
        self.reals().filter(|v| v.len() == 1).map(|v| v[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_gets_defaults() {
        let c = parse("scenario = \"fig2\"\nseed = 3\n", "t").unwrap().config;
        assert_eq!(c.trials, 1000);
        assert_eq!(c.snr_grid, vec![0.0, 5.0, 10.0, 15.0, 20.0]);
        assert_eq!(c.output_path(), Path::new("results/fig2.csv"));
    }

    #[test]
    fn error_cites_line() {
        let text = "scenario = \"fig2\"\nseed = 1\n\n# note\n[scheme]\nlevels = 4\nthis line is wrong\n";
        match parse(text, "bad.cfg") {
            Err(Error::Parse { line, path, .. }) => {
                assert_eq!(line, 7);
                assert_eq!(path, "bad.cfg");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_keys_listed() {
        match parse("trials = 4\n", "t") {
            Err(Error::Validation(v)) => {
                assert_eq!(v.len(), 2);
                assert!(v[0].starts_with("scenario") && v[1].starts_with("seed"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_warns() {
        let l = parse("scenario = \"fig3\"\nseed = 1\ncolour = 3\n[plot]\nx = 1\n", "t").unwrap();
        assert_eq!(l.warnings.len(), 3);
    }

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig::preset(Scenario::Custom, u64::MAX);
        c.snr_grid = vec![-7.5, 0.1, 3.0];
        c.output = Some("out dir/x.csv".into());
        c.overrides = Overrides {
            scheme: Some(SchemeId::Multires),
            dims: Some(vec![(32, 16), (128, 1)]),
            paths: Some(vec![3, 8]),
            beams: Some(5),
            levels: Some(4),
            rho: Some(0.95),
            eve: Some(vec![Party::Bob, Party::Alice]),
            nlos_offset_db: Some(10.0),
            blocks: Some(2000),
            rounds: Some(6),
            window_db: Some(12.5),
            error_rates: Some(vec![0.05, 0.1]),
            n_bits: Some(4096),
        };
        let back = parse(&c.serialize(), "t").unwrap();
        assert!(back.warnings.is_empty());
        assert_eq!(back.config, c);
        let p = ExperimentConfig::preset(Scenario::Fig4, 9);
        assert_eq!(parse(&p.serialize(), "t").unwrap().config, p);
    }

    #[test]
    fn comments_and_quotes() {
        let c = parse("scenario = \"fig4\" # trailing\nseed = 2\noutput = \"a#b.csv\"\n", "t")
            .unwrap()
            .config;
        assert_eq!(c.output, Some(PathBuf::from("a#b.csv")));
    }

    #[test]
    fn validation_names_field() {
        let mut c = ExperimentConfig::preset(Scenario::Fig2, 1);
        c.trials = 0;
        c.overrides.levels = Some(6);
        let Err(Error::Validation(v)) = c.validate() else {
            panic!()
        };
        assert!(v.iter().any(|m| m.starts_with("trials")));
        assert!(v.iter().any(|m| m.starts_with("levels")));
        let c = ExperimentConfig::preset(Scenario::Custom, 1);
        assert!(c.validate().is_err());
    }
}
