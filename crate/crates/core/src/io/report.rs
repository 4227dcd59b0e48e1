//! Suite reports and their JSON/CSV serialization.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
    NotApplicable,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioResult {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "type")]
    pub type_tag: &'static str,
    pub property: &'static str,
    pub seed: u64,
    /// Raw outcome of the check before any expectation is applied.
    pub outcome: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<super::scenario::Expect>,
    pub verdict: Verdict,
    pub residuals: BTreeMap<String, f64>,
    /// Headline residual compared against the tolerance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub nonconvergence: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip)]
    pub trajectory: Option<Vec<Vec<f64>>>,
    #[serde(skip)]
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Counts {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    pub not_applicable: usize,
    pub error: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub crate_version: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
}

impl Environment {
    pub fn current() -> Self {
        Self { crate_version: env!("CARGO_PKG_VERSION"), os: std::env::consts::OS, arch: std::env::consts::ARCH }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub counts: Counts,
    pub results: Vec<ScenarioResult>,
    /// Property tag → indices of the scenarios certifying it.
    pub traceability: BTreeMap<&'static str, Vec<usize>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub defaults_applied: Vec<String>,
    pub environment: Environment,
    /// Wall-clock milliseconds per scenario, kept apart from the verdicts.
    pub timings_ms: Vec<f64>,
}

impl SuiteReport {
    pub fn new(seed: u64, results: Vec<ScenarioResult>, defaults_applied: Vec<String>) -> Self {
        let mut counts = Counts { total: results.len(), ..Counts::default() };
        let mut traceability: BTreeMap<&'static str, Vec<usize>> = BTreeMap::new();
        for r in &results {
            match r.verdict {
                Verdict::Pass => counts.pass += 1,
                Verdict::Fail => counts.fail += 1,
                Verdict::Inconclusive => counts.inconclusive += 1,
                Verdict::NotApplicable => counts.not_applicable += 1,
                Verdict::Error => counts.error += 1,
            }
            traceability.entry(r.property).or_default().push(r.index);
        }
        let timings_ms = results.iter().map(|r| r.elapsed_ms).collect();
        Self { seed, counts, results, traceability, defaults_applied, environment: Environment::current(), timings_ms }
    }

    /// 0 all applicable pass, 1 a verified failure, 4 only nonconvergence.
    pub fn exit_code(&self) -> i32 {
        let failed = self.results.iter().any(|r| r.verdict == Verdict::Fail || (r.verdict == Verdict::Error && !r.nonconvergence));
        if failed {
            1
        } else if self.results.iter().any(|r| r.verdict == Verdict::Error) {
            4
        } else {
            0
        }
    }

    /// JSON body without the timing section.
    pub fn body_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("timings_ms");
        }
        to_json_string(&v)
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }

    pub fn write_json(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["index", "name", "type", "property", "verdict", "violation"])?;
        for r in &self.results {
            let verdict = serde_json::to_value(r.verdict).expect("verdict serializes");
            w.write_record([
                r.index.to_string(),
                r.name.clone().unwrap_or_default(),
                r.type_tag.to_string(),
                r.property.to_string(),
                verdict.as_str().unwrap_or_default().to_string(),
                r.violation.filter(|v| v.is_finite()).map(format_float).unwrap_or_default(),
            ])?;
        }
        w.flush()
    }
}

/// 17 significant digits, round-trip exact.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON writer printing every float with 17 significant digits.
struct FloatFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for FloatFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_float(value).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FloatFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serialization to memory");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// Writes `(step, atom, mass)` rows for one trajectory.
pub fn write_trajectory_csv<W: Write>(out: W, measures: &[Vec<f64>]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "atom", "mass"])?;
    for (step, m) in measures.iter().enumerate() {
        for (atom, v) in m.iter().enumerate() {
            w.write_record([step.to_string(), atom.to_string(), format_float(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            let s = to_json_string(&x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            assert_eq!(serde_json::from_str::<f64>(&s).unwrap(), x);
        }
        assert_eq!(to_json_string(&vec![1.0]), "[\n  1.0000000000000000e0\n]");
    }

    #[test]
    fn trajectory_rows() {
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &[vec![0.5, 0.5], vec![0.25, 0.75]]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 5);
        assert!(s.starts_with("step,atom,mass\n0,0,5.0000000000000000e-1"));
    }
}
