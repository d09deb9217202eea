use std::fmt::Write as _;
use std::path::Path;

use bubblelab::{StopReason, Topology};
use rayon::prelude::*;

use crate::run::run_scenario;
use crate::scenario::Scenario;
use crate::CliError;

pub const SWEEP_HEADER: &str = "p,diameter,min_separation,normalized_separation,stop_reason";

/// Singular-vertex separation of one evolved triple bubble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub p: f64,
    pub diameter: f64,
    /// Smallest pairwise distance between singular vertices (NaN when the
    /// evolved mesh has fewer than two).
    pub min_separation: f64,
    pub stop: StopReason,
}

impl SweepRow {
    pub fn normalized_separation(&self) -> f64 {
        self.min_separation / self.diameter
    }
}

/// Evolves `base` once per density exponent and tabulates how far apart
/// its singular vertices end up, relative to the cluster diameter.
pub fn sweep_vertex_separation(base: &Scenario, ps: &[f64], out_dir: &Path) -> Result<Vec<SweepRow>, CliError> {
    if base.bubble.topology != Topology::Triple {
        return Err(CliError::Config(format!(
            "vertex-separation sweeps need a triple bubble, '{}' is {}",
            base.name, base.bubble.topology
        )));
    }
    let runs: Vec<Scenario> = ps
        .iter()
        .map(|&p| {
            let mut s = base.clone();
            s.sweep = None;
            s.bubble.p = p;
            s.name = format!("{}_p{p}", base.name);
            s
        })
        .collect();
    for s in &runs {
        s.bubble.validate().map_err(|e| CliError::Config(format!("p = {}: {e}", s.bubble.p)))?;
    }
    runs.par_iter()
        .map(|s| {
            let out = run_scenario(s, out_dir)?;
            let min_separation = out.metrics.vertex_separation.iter().cloned().fold(f64::NAN, f64::min);
            Ok(SweepRow { p: s.bubble.p, diameter: out.metrics.diameter, min_separation, stop: out.stop })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.17e},{:.17e},{:.17e},{}",
            r.p,
            r.diameter,
            r.min_separation,
            r.normalized_separation(),
            r.stop.as_str()
        );
    }
    out
}
