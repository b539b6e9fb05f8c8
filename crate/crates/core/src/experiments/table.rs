//! Result tables and their CSV form.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    BarLegit,
    BarEve,
    Bdr,
    KerMultires,
    KerFixed,
    LeakFraction,
    ResidualMismatch,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::BarLegit,
        Metric::BarEve,
        Metric::Bdr,
        Metric::KerMultires,
        Metric::KerFixed,
        Metric::LeakFraction,
        Metric::ResidualMismatch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::BarLegit => "bar_legit",
            Metric::BarEve => "bar_eve",
            Metric::Bdr => "bdr",
            Metric::KerMultires => "ker_multires",
            Metric::KerFixed => "ker_fixed",
            Metric::LeakFraction => "leak_fraction",
            Metric::ResidualMismatch => "residual_mismatch",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// One aggregated point. `case` distinguishes the sub-sweeps of a scenario
/// (array shape, Eve placement, path count).
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub scenario: String,
    pub scheme: String,
    pub case: String,
    pub snr_db: Option<f64>,
    pub metric: Metric,
    pub value: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

pub const COLUMNS: [&str; 9] = [
    "scenario", "scheme", "case", "snr_db", "metric", "value", "stderr", "trials", "seed",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<Row>,
}

impl ResultTable {
    pub fn columns(&self) -> &'static [&'static str] {
        &COLUMNS
    }

    /// Rows matching `metric` and `case`, in table order.
    pub fn select<'a>(&'a self, metric: Metric, case: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.metric == metric && r.case == case)
    }
}

/// Mean and standard error (sample sd over `sqrt(n)`) of per-trial values.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// `x` with 9 significant digits; plain notation for moderate exponents.
pub fn format_real(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.8e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..15).contains(&exp) {
        return sci;
    }
    let (sign, mant) = mant.strip_prefix('-').map_or(("", mant), |m| ("-", m));
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    let body = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    } else {
        let point = exp as usize + 1;
        if point >= digits.len() {
            format!("{digits}{}", "0".repeat(point - digits.len()))
        } else {
            format!("{}.{}", &digits[..point], &digits[point..])
        }
    };
    format!("{sign}{body}")
}

pub fn write_csv(table: &ResultTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let bytes = to_csv_bytes(table).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn to_csv_bytes(table: &ResultTable) -> std::result::Result<Vec<u8>, csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(COLUMNS)?;
    for r in &table.rows {
        w.write_record([
            r.scenario.clone(),
            r.scheme.clone(),
            r.case.clone(),
            r.snr_db.map(format_real).unwrap_or_default(),
            r.metric.name().to_string(),
            format_real(r.value),
            format_real(r.stderr),
            r.trials.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<ResultTable> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_csv_bytes(&bytes, &path.display().to_string())
}

pub fn from_csv_bytes(bytes: &[u8], origin: &str) -> Result<ResultTable> {
    let bad = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header = rd.headers().map_err(|e| bad(1, e.to_string()))?;
    if header.iter().ne(COLUMNS) {
        return Err(bad(1, format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| bad(line, e.to_string()))?;
        let real = |k: usize| {
            rec[k]
                .parse::<f64>()
                .map_err(|e| bad(line, format!("{}: {e}", COLUMNS[k])))
        };
        let int = |k: usize| {
            rec[k]
                .parse::<u64>()
                .map_err(|e| bad(line, format!("{}: {e}", COLUMNS[k])))
        };
        rows.push(Row {
            scenario: rec[0].to_string(),
            scheme: rec[1].to_string(),
            case: rec[2].to_string(),
            snr_db: if rec[3].is_empty() { None } else { Some(real(3)?) },
            metric: Metric::from_name(&rec[4]).ok_or_else(|| bad(line, format!("unknown metric {}", &rec[4])))?,
            value: real(5)?,
            stderr: real(6)?,
            trials: int(7)? as usize,
            seed: int(8)?,
        });
    }
    Ok(ResultTable { rows })
}
