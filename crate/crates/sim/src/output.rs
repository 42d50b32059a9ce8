//! Result records and their CSV form.
//!
//! One header row, then one row per record with the columns in field order.
//! Reals carry 12 significant digits; missing values are empty fields and a
//! zero interference is written as `-inf`. Lines end in LF.

use std::{
    fmt,
    io::{Read, Write},
    path::{Path, PathBuf},
};

use crate::config::Method;

/// How a trial's solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Ok,
    /// Iterative sum-rate hit `max_outer`; the row holds the last iterate.
    OuterNonconverged,
    DualNonconverged,
    BdInfeasible,
    /// The modified codebook for this `(P, Q)` could not be built.
    CodebookFailed,
    Error,
}

impl Status {
    const ALL: [Status; 6] = [
        Status::Ok,
        Status::OuterNonconverged,
        Status::DualNonconverged,
        Status::BdInfeasible,
        Status::CodebookFailed,
        Status::Error,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::OuterNonconverged => "outer_nonconverged",
            Status::DualNonconverged => "dual_nonconverged",
            Status::BdInfeasible => "bd_infeasible",
            Status::CodebookFailed => "codebook_failed",
            Status::Error => "error",
        }
    }

    /// A hard failure leaves no usable design in the row.
    pub fn is_failure(self) -> bool {
        !matches!(self, Status::Ok | Status::OuterNonconverged)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Status::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| format!("unknown status '{s}'"))
    }
}

/// One trial of one method at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub method: Method,
    pub p_dbm: f64,
    pub q_dbm: f64,
    /// Users; 1 for the single-user methods.
    pub k: usize,
    /// Boundary samples per region, `L`.
    pub samples: usize,
    pub trial: usize,
    /// Channel seed of the trial.
    pub seed: u64,
    /// Capacity or sum-rate in bits/s/Hz.
    pub rate: Option<f64>,
    pub worst_sample_interference_dbm: Option<f64>,
    pub worst_probe_interference_dbm: Option<f64>,
    pub outer_iterations: Option<usize>,
    pub inner_iterations: Option<usize>,
    pub kkt_residual: Option<f64>,
    pub wall_time_ms: Option<f64>,
    pub status: Status,
    /// Sum-rate after each outer iteration (iterative sum-rate only). Not
    /// part of the results table; see [`write_traces`].
    pub rate_trace: Vec<f64>,
}

pub const HEADER: [&str; 15] = [
    "method",
    "p_dbm",
    "q_dbm",
    "k",
    "samples",
    "trial",
    "seed",
    "rate",
    "worst_sample_interference_dbm",
    "worst_probe_interference_dbm",
    "outer_iterations",
    "inner_iterations",
    "kkt_residual",
    "wall_time_ms",
    "status",
];

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}, record {record}: {msg}")]
    Field { path: PathBuf, record: usize, msg: String },
}

/// `%.12g`-style formatting; infinities become `inf` / `-inf`.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_owned()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_real(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

impl ExperimentResult {
    fn fields(&self) -> [String; 15] {
        [
            self.method.name().to_owned(),
            fmt_real(self.p_dbm),
            fmt_real(self.q_dbm),
            self.k.to_string(),
            self.samples.to_string(),
            self.trial.to_string(),
            self.seed.to_string(),
            opt_real(self.rate),
            opt_real(self.worst_sample_interference_dbm),
            opt_real(self.worst_probe_interference_dbm),
            opt(self.outer_iterations),
            opt(self.inner_iterations),
            opt_real(self.kkt_residual),
            opt_real(self.wall_time_ms),
            self.status.name().to_owned(),
        ]
    }
}

/// Writes the results table to any sink.
pub fn write_results<W: Write>(results: &[ExperimentResult], sink: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(HEADER)?;
    for r in results {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(results: &[ExperimentResult], path: &Path) -> Result<(), CsvError> {
    let file = std::fs::File::create(path).map_err(|source| CsvError::Io { path: path.to_owned(), source })?;
    write_results(results, std::io::BufWriter::new(file)).map_err(|source| CsvError::Csv { path: path.to_owned(), source })
}

/// Rate traces, one row per `(record, iteration)`.
pub fn write_traces<W: Write>(results: &[ExperimentResult], sink: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(["method", "p_dbm", "q_dbm", "k", "samples", "trial", "iteration", "rate"])?;
    for r in results {
        for (i, rate) in r.rate_trace.iter().enumerate() {
            w.write_record([
                r.method.name().to_owned(),
                fmt_real(r.p_dbm),
                fmt_real(r.q_dbm),
                r.k.to_string(),
                r.samples.to_string(),
                r.trial.to_string(),
                (i + 1).to_string(),
                fmt_real(*rate),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_opt<T: std::str::FromStr>(s: &str) -> Result<Option<T>, String> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| format!("cannot parse '{s}'"))
    }
}

fn parse_req<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    parse_opt(s)?.ok_or_else(|| "missing value".to_owned())
}

/// Parses a results table (rate traces are not part of it and come back
/// empty).
pub fn read_results<R: Read>(source: R, path: &Path) -> Result<Vec<ExperimentResult>, CsvError> {
    let mut rdr = csv::Reader::from_reader(source);
    let headers = rdr.headers().map_err(|source| CsvError::Csv { path: path.to_owned(), source })?.clone();
    if headers.iter().ne(HEADER) {
        return Err(CsvError::Field { path: path.to_owned(), record: 0, msg: "unexpected header".into() });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|source| CsvError::Csv { path: path.to_owned(), source })?;
        let field = |msg: String| CsvError::Field { path: path.to_owned(), record: i + 1, msg };
        let f = |j: usize| rec.get(j).unwrap_or("");
        let row = (|| -> Result<ExperimentResult, String> {
            Ok(ExperimentResult {
                method: f(0).parse()?,
                p_dbm: parse_req(f(1))?,
                q_dbm: parse_req(f(2))?,
                k: parse_req(f(3))?,
                samples: parse_req(f(4))?,
                trial: parse_req(f(5))?,
                seed: parse_req(f(6))?,
                rate: parse_opt(f(7))?,
                worst_sample_interference_dbm: parse_opt(f(8))?,
                worst_probe_interference_dbm: parse_opt(f(9))?,
                outer_iterations: parse_opt(f(10))?,
                inner_iterations: parse_opt(f(11))?,
                kkt_residual: parse_opt(f(12))?,
                wall_time_ms: parse_opt(f(13))?,
                status: f(14).parse()?,
                rate_trace: Vec::new(),
            })
        })()
        .map_err(field)?;
        out.push(row);
    }
    Ok(out)
}

pub fn parse_csv(path: &Path) -> Result<Vec<ExperimentResult>, CsvError> {
    let file = std::fs::File::open(path).map_err(|source| CsvError::Io { path: path.to_owned(), source })?;
    read_results(std::io::BufReader::new(file), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn record() -> ExperimentResult {
        ExperimentResult {
            method: Method::MuBd,
            p_dbm: 37.5,
            q_dbm: -80.0,
            k: 6,
            samples: 50,
            trial: 3,
            seed: u64::MAX - 5,
            rate: Some(163.123456789012345),
            worst_sample_interference_dbm: Some(-80.00000001234),
            worst_probe_interference_dbm: Some(f64::NEG_INFINITY),
            outer_iterations: None,
            inner_iterations: Some(412),
            kkt_residual: Some(3.25e-13),
            wall_time_ms: None,
            status: Status::Ok,
            rate_trace: Vec::new(),
        }
    }

    #[test]
    fn real_formatting() {
        assert_eq!(fmt_real(0.0), "0");
        assert_eq!(fmt_real(1.0), "1");
        assert_eq!(fmt_real(-80.0), "-80");
        assert_eq!(fmt_real(0.1), "0.1");
        assert_eq!(fmt_real(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_real(123456.7890123456), "123456.789012");
        assert_eq!(fmt_real(3.25e-13), "3.25e-13");
        assert_eq!(fmt_real(6.02e23), "6.02e23");
        assert_eq!(fmt_real(9.9999999999999), "10");
        assert_eq!(fmt_real(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn empty_results_give_header_only() {
        let mut buf = Vec::new();
        write_results(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), HEADER.join(",") + "\n");
    }

    #[test]
    fn one_record_two_lines() {
        let mut buf = Vec::new();
        write_results(&[record()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(!text.contains('\r'));
        assert!(text.ends_with(",ok\n"));
    }

    #[test]
    fn parse_back_matches_printed_precision() {
        let r = record();
        let mut buf = Vec::new();
        write_results(&[r.clone()], &mut buf).unwrap();
        let back = read_results(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(back.len(), 1);
        let b = &back[0];
        assert_eq!(b.method, r.method);
        assert_eq!(b.seed, r.seed);
        assert_eq!(b.inner_iterations, Some(412));
        assert_eq!(b.outer_iterations, None);
        assert_eq!(b.worst_probe_interference_dbm, Some(f64::NEG_INFINITY));
        let rel = (b.rate.unwrap() - r.rate.unwrap()).abs() / r.rate.unwrap();
        assert!(rel < 5e-12);
        assert_eq!(fmt_real(b.rate.unwrap()), fmt_real(r.rate.unwrap()));
    }

    #[test]
    fn bad_rows_name_the_record() {
        let text = HEADER.join(",") + "\nmu_bd,x,-80,6,50,3,1,,,,,,,,ok\n";
        let err = read_results(text.as_bytes(), Path::new("t.csv")).unwrap_err();
        assert!(err.to_string().contains("record 1"), "{err}");
    }
}
