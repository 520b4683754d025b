//! Run reports in table, CSV and JSON form. CSV and JSON round-trip
//! bit-for-bit.

use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use fockport_core::teleport::PipelineResult;
use fockport_core::State;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub pattern: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRow {
    pub label: String,
    pub probability: f64,
}

/// How a computed value is compared with its expected value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "tolerance", rename_all = "snake_case")]
pub enum Rule {
    /// Equal after rounding both to one significant figure.
    OneFigure,
    /// `|computed - expected| < tolerance`.
    Within(f64),
    /// `computed < expected`.
    Below,
}

impl Rule {
    pub fn check(self, expected: f64, computed: f64) -> bool {
        match self {
            Rule::OneFigure => fockport_core::sigfig::rounds_to(computed, expected),
            Rule::Within(tol) => (computed - expected).abs() < tol,
            Rule::Below => computed < expected,
        }
    }

    fn describe(self) -> String {
        match self {
            Rule::OneFigure => "1 significant figure".into(),
            Rule::Within(tol) => format!("within {tol:e}"),
            Rule::Below => "below".into(),
        }
    }

    fn to_field(self) -> String {
        match self {
            Rule::OneFigure => "one_figure".into(),
            Rule::Within(tol) => format!("within:{tol:?}"),
            Rule::Below => "below".into(),
        }
    }

    fn from_field(s: &str) -> Result<Self> {
        match s {
            "one_figure" => Ok(Rule::OneFigure),
            "below" => Ok(Rule::Below),
            _ => match s.strip_prefix("within:") {
                Some(t) => Ok(Rule::Within(t.parse().with_context(|| format!("rule `{s}`"))?)),
                None => bail!("unknown rule `{s}`"),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub name: String,
    pub expected: f64,
    pub computed: f64,
    #[serde(flatten)]
    pub rule: Rule,
    pub pass: bool,
}

impl Comparison {
    pub fn new(name: impl Into<String>, expected: f64, computed: f64, rule: Rule) -> Self {
        Comparison {
            name: name.into(),
            expected,
            computed,
            rule,
            pass: rule.check(expected, computed),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub output: Vec<Term>,
    pub stages: Vec<StageRow>,
    pub net: Option<f64>,
    pub comparisons: Vec<Comparison>,
}

/// Flat CSV record; every report row fits this shape.
#[derive(Debug, Serialize, Deserialize)]
struct Record {
    section: String,
    label: String,
    value: f64,
    im: Option<f64>,
    expected: Option<f64>,
    rule: Option<String>,
    pass: Option<bool>,
}

fn pattern_label(p: &[u32]) -> String {
    p.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ")
}

impl RunReport {
    pub fn from_result(result: &PipelineResult<f64>) -> Self {
        RunReport {
            output: terms(&result.output),
            stages: result
                .stages
                .iter()
                .map(|s| StageRow {
                    label: s.label.clone(),
                    probability: s.probability,
                })
                .collect(),
            net: Some(result.net),
            comparisons: Vec::new(),
        }
    }

    pub fn from_comparisons(comparisons: Vec<Comparison>) -> Self {
        RunReport {
            comparisons,
            ..Default::default()
        }
    }

    pub fn all_pass(&self) -> bool {
        self.comparisons.iter().all(|c| c.pass)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Table => Ok(self.to_table()),
            Format::Json => Ok(serde_json::to_string_pretty(self)? + "\n"),
            Format::Csv => self.to_csv(),
        }
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        if !self.output.is_empty() {
            out.push_str("output state\n");
            for t in &self.output {
                let _ = writeln!(out, "  |{}>  {:+.12e} {:+.12e}i", pattern_label(&t.pattern), t.re, t.im);
            }
        }
        if !self.stages.is_empty() {
            out.push_str("stage probabilities\n");
            let w = self.stages.iter().map(|s| s.label.len()).max().unwrap_or(0);
            for s in &self.stages {
                let _ = writeln!(out, "  {:<w$}  {:.6e}", s.label, s.probability);
            }
        }
        if let Some(net) = self.net {
            let _ = writeln!(out, "net probability  {net:.6e}");
        }
        if !self.comparisons.is_empty() {
            let w = self.comparisons.iter().map(|c| c.name.len()).max().unwrap_or(0);
            for c in &self.comparisons {
                let _ = writeln!(
                    out,
                    "{:<4}  {:<w$}  expected {:<10}  computed {:<12.6e}  ({})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    format!("{:e}", c.expected),
                    c.computed,
                    c.rule.describe()
                );
            }
            let passed = self.comparisons.iter().filter(|c| c.pass).count();
            let _ = writeln!(out, "{passed}/{} passed", self.comparisons.len());
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for t in &self.output {
            w.serialize(Record {
                section: "amplitude".into(),
                label: pattern_label(&t.pattern),
                value: t.re,
                im: Some(t.im),
                expected: None,
                rule: None,
                pass: None,
            })?;
        }
        for s in &self.stages {
            w.serialize(Record {
                section: "stage".into(),
                label: s.label.clone(),
                value: s.probability,
                im: None,
                expected: None,
                rule: None,
                pass: None,
            })?;
        }
        if let Some(net) = self.net {
            w.serialize(Record {
                section: "net".into(),
                label: "net".into(),
                value: net,
                im: None,
                expected: None,
                rule: None,
                pass: None,
            })?;
        }
        for c in &self.comparisons {
            w.serialize(Record {
                section: "check".into(),
                label: c.name.clone(),
                value: c.computed,
                im: None,
                expected: Some(c.expected),
                rule: Some(c.rule.to_field()),
                pass: Some(c.pass),
            })?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut report = RunReport::default();
        let mut r = csv::Reader::from_reader(text.as_bytes());
        for (i, rec) in r.deserialize::<Record>().enumerate() {
            let rec = rec.with_context(|| format!("record {}", i + 1))?;
            match rec.section.as_str() {
                "amplitude" => report.output.push(Term {
                    pattern: rec
                        .label
                        .split_whitespace()
                        .map(|n| n.parse())
                        .collect::<Result<_, _>>()
                        .with_context(|| format!("pattern `{}`", rec.label))?,
                    re: rec.value,
                    im: rec.im.ok_or_else(|| anyhow!("amplitude `{}` lacks im", rec.label))?,
                }),
                "stage" => report.stages.push(StageRow {
                    label: rec.label,
                    probability: rec.value,
                }),
                "net" => report.net = Some(rec.value),
                "check" => report.comparisons.push(Comparison {
                    expected: rec.expected.ok_or_else(|| anyhow!("check `{}` lacks expected", rec.label))?,
                    rule: Rule::from_field(rec.rule.as_deref().unwrap_or_default())?,
                    pass: rec.pass.ok_or_else(|| anyhow!("check `{}` lacks pass", rec.label))?,
                    name: rec.label,
                    computed: rec.value,
                }),
                other => bail!("unknown section `{other}`"),
            }
        }
        Ok(report)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn terms(state: &State) -> Vec<Term> {
    state
        .terms()
        .map(|(occ, a)| Term {
            pattern: occ.counts().to_vec(),
            re: a.re,
            im: a.im,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunReport {
        RunReport {
            output: vec![
                Term {
                    pattern: vec![0, 1],
                    re: 0.1 + 0.2,
                    im: -1.0 / 3.0,
                },
                Term {
                    pattern: vec![2, 0],
                    re: 5e-324,
                    im: 0.0,
                },
            ],
            stages: vec![StageRow {
                label: "1: (a) reversal+scaling lambda=0.7 N~=1: detector".into(),
                probability: 0.375,
            }],
            net: Some(std::f64::consts::PI * 1e-7),
            comparisons: vec![
                Comparison::new("p(N~=2)", 0.375, 0.5000000000000002, Rule::Within(1e-12)),
                Comparison::new("source", 7e-2, 0.0703125, Rule::OneFigure),
                Comparison::new("cross-talk", 1e-12, 0.0, Rule::Below),
            ],
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let r = sample();
        let text = r.to_csv().unwrap();
        assert_eq!(RunReport::from_csv(&text).unwrap(), r);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let r = sample();
        let text = r.render(Format::Json).unwrap();
        assert_eq!(RunReport::from_json(&text).unwrap(), r);
    }

    #[test]
    fn rules() {
        assert!(!Rule::Within(1e-12).check(0.375, 0.5));
        assert!(Rule::OneFigure.check(6e-3, 5.93e-3));
        assert!(!Rule::OneFigure.check(1e-2, 2.37e-2));
        assert!(Rule::Below.check(1e-12, 0.0));
        let table = sample().to_table();
        assert!(table.contains("FAIL  p(N~=2)"));
        assert!(table.contains("2/3 passed"));
    }
}
