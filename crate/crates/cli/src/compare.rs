use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use bubblelab::analyze::parse_metrics_csv;

use crate::CliError;

/// Relative tolerance under which two areas count as equal.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    FirstLower,
    SecondLower,
    Tie,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::FirstLower => "a",
            Verdict::SecondLower => "b",
            Verdict::Tie => "tie",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub labels: [String; 2],
    pub areas: [f64; 2],
    pub verdict: Verdict,
}

impl Comparison {
    /// Human-readable summary followed by the machine-readable verdict
    /// line `verdict,<a|b|tie>,<area a>,<area b>`.
    pub fn report(&self) -> String {
        let [la, lb] = &self.labels;
        let [a, b] = self.areas;
        let summary = match self.verdict {
            Verdict::FirstLower => format!("{la} is lower by {:.8} ({:.3}%)", b - a, 100.0 * (b - a) / b),
            Verdict::SecondLower => format!("{lb} is lower by {:.8} ({:.3}%)", a - b, 100.0 * (a - b) / a),
            Verdict::Tie => format!("{la} and {lb} tie within {TIE_TOLERANCE:e}"),
        };
        format!("a: {la} weighted_area {a:.12}\nb: {lb} weighted_area {b:.12}\n{summary}\nverdict,{},{a:e},{b:e}\n", self.verdict)
    }
}

fn number(map: &BTreeMap<String, String>, key: &str, which: &str) -> Result<f64, CliError> {
    map.get(key)
        .ok_or_else(|| CliError::Config(format!("report {which} has no '{key}'")))?
        .parse()
        .map_err(|_| CliError::Config(format!("report {which}: '{key}' is not a number")))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

/// Label for a report: its scenario and topology when recorded.
fn label(map: &BTreeMap<String, String>, fallback: &str) -> String {
    match (map.get("scenario"), map.get("topology")) {
        (Some(s), Some(t)) => format!("{s} ({t})"),
        (Some(s), None) => s.clone(),
        _ => fallback.to_string(),
    }
}

/// Compares two metrics reports, which must share `p`, `epsilon` and the
/// multiset of target volumes.
pub fn compare_reports(a: &str, b: &str, names: [&str; 2]) -> Result<Comparison, CliError> {
    let ma = parse_metrics_csv(a).map_err(|e| CliError::Config(format!("{}: {e}", names[0])))?;
    let mb = parse_metrics_csv(b).map_err(|e| CliError::Config(format!("{}: {e}", names[1])))?;
    for key in ["p", "epsilon"] {
        let (x, y) = (number(&ma, key, "a")?, number(&mb, key, "b")?);
        if !(x == y || close(x, y)) {
            return Err(CliError::Config(format!("mismatched scenarios: {key} = {x} vs {y}")));
        }
    }
    let volumes = |m: &BTreeMap<String, String>, which: &str| -> Result<Vec<f64>, CliError> {
        let n = number(m, "regions", which)? as usize;
        let mut v = (1..=n).map(|i| number(m, &format!("target_volume_{i}"), which)).collect::<Result<Vec<_>, _>>()?;
        v.sort_by(f64::total_cmp);
        Ok(v)
    };
    let (va, vb) = (volumes(&ma, "a")?, volumes(&mb, "b")?);
    if va.len() != vb.len() || va.iter().zip(&vb).any(|(x, y)| !close(*x, *y)) {
        return Err(CliError::Config(format!("mismatched scenarios: volumes {va:?} vs {vb:?}")));
    }
    let areas = [number(&ma, "weighted_area", "a")?, number(&mb, "weighted_area", "b")?];
    let verdict = if close(areas[0], areas[1]) {
        Verdict::Tie
    } else if areas[0] < areas[1] {
        Verdict::FirstLower
    } else {
        Verdict::SecondLower
    };
    Ok(Comparison { labels: [label(&ma, names[0]), label(&mb, names[1])], areas, verdict })
}

pub fn compare_files(a: &Path, b: &Path) -> Result<Comparison, CliError> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())));
    compare_reports(&read(a)?, &read(b)?, [&a.display().to_string(), &b.display().to_string()])
}
