//! Scenario files.
//!
//! A file holds either one scenario at top level or a batch of
//! `[[scenario]]` tables:
//!
//! ```toml
//! name = "fig4a"
//!
//! [bubble]
//! topology = "triple"
//! volumes = [10, 10, 1]
//! p = 2
//!
//! [evolve]              # optional overrides of the defaults
//! max_iterations = 3000
//!
//! [outputs]             # all default to true
//! obj = false
//!
//! [sweep]               # optional; expands into one run per entry
//! p = [0.5, 2, 3]
//! ```

use std::collections::HashSet;
use std::path::Path;

use bubblelab::{BubbleSpec, EvolveConfig};
use serde::Deserialize;

use crate::CliError;

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "yes")]
    pub obj: bool,
    #[serde(default = "yes")]
    pub trace: bool,
    #[serde(default = "yes")]
    pub metrics: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { obj: true, trace: true, metrics: true }
    }
}

/// Variations on the base scenario. When both lists are given every
/// combination runs.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default)]
    pub p: Vec<f64>,
    #[serde(default)]
    pub volumes: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub bubble: BubbleSpec,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub sweep: Option<Sweep>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Batch {
    scenario: Vec<Scenario>,
}

/// Command-line overrides applied to every scenario of a file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub refine_level: Option<u32>,
    pub max_iter: Option<usize>,
    pub seed_jitter: Option<f64>,
}

impl Scenario {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(level) = o.refine_level {
            self.bubble.refinement_level = level;
        }
        if let Some(n) = o.max_iter {
            self.evolve.max_iterations = n;
        }
        if let Some(j) = o.seed_jitter {
            self.bubble.seed_jitter = j;
        }
    }

    /// The concrete runs: the scenario itself, or one per sweep entry with
    /// the value appended to the name (`fig2a_p0.5`, `fig3_v2`, ...).
    pub fn expand(&self) -> Vec<Scenario> {
        let Some(sweep) = &self.sweep else {
            return vec![self.clone()];
        };
        let ps: Vec<Option<f64>> = if sweep.p.is_empty() { vec![None] } else { sweep.p.iter().map(|p| Some(*p)).collect() };
        let vs: Vec<Option<(usize, &Vec<f64>)>> =
            if sweep.volumes.is_empty() { vec![None] } else { sweep.volumes.iter().enumerate().map(Some).collect() };
        let mut out = Vec::new();
        for v in &vs {
            for p in &ps {
                let mut run = self.clone();
                run.sweep = None;
                if let Some((i, volumes)) = v {
                    run.bubble.volumes = (*volumes).clone();
                    run.name = format!("{}_v{}", run.name, i + 1);
                }
                if let Some(p) = p {
                    run.bubble.p = *p;
                    run.name = format!("{}_p{}", run.name, p);
                }
                out.push(run);
            }
        }
        out
    }

    fn validate(&self) -> Result<(), String> {
        if self.name.trim().is_empty() {
            return Err("scenario name must not be empty".into());
        }
        if self.name.contains(['/', '\\']) {
            return Err(format!("scenario name '{}' must not contain path separators", self.name));
        }
        for run in self.expand() {
            run.bubble.validate().map_err(|e| e.to_string())?;
        }
        self.evolve.validate().map_err(|e| e.to_string())
    }
}

/// 1-based line of the first `name = "<name>"` assignment, for messages.
fn line_of_name(text: &str, name: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.starts_with("name") && l.contains(&format!("\"{name}\""))
    })
    .map(|i| i + 1)
}

/// Parses and validates a scenario file.
pub fn parse_scenarios(text: &str) -> Result<Vec<Scenario>, CliError> {
    if text.trim().is_empty() {
        return Err(CliError::Config("empty scenario file".into()));
    }
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    let scenarios = if table.contains_key("scenario") {
        toml::from_str::<Batch>(text).map_err(|e| CliError::Config(e.to_string()))?.scenario
    } else {
        vec![toml::from_str::<Scenario>(text).map_err(|e| CliError::Config(e.to_string()))?]
    };
    let mut names = HashSet::new();
    for s in &scenarios {
        let at = line_of_name(text, &s.name).map(|l| format!(" (line {l})")).unwrap_or_default();
        s.validate().map_err(|e| CliError::Config(format!("scenario '{}'{at}: {e}", s.name)))?;
        for run in s.expand() {
            if !names.insert(run.name.clone()) {
                return Err(CliError::Config(format!("duplicate scenario name '{}'{at}", run.name)));
            }
        }
    }
    Ok(scenarios)
}

pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_scenarios(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
