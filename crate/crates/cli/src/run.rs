use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bubblelab::evolve::{evolve, EvolveTrace};
use bubblelab::mesh::write_obj;
use bubblelab::{ClusterMesh, MetricsReport, StopReason, Topology};
use rayon::prelude::*;

use crate::scenario::Scenario;
use crate::{stop_exit_code, CliError};

/// What one evolution produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub name: String,
    pub topology: Topology,
    pub stop: StopReason,
    pub accepted_steps: usize,
    pub refinements: usize,
    pub weighted_area: f64,
    pub seconds: f64,
    pub mesh: ClusterMesh,
    pub trace: EvolveTrace,
    pub metrics: MetricsReport,
    pub written: Vec<PathBuf>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        stop_exit_code(self.stop)
    }

    pub fn line(&self) -> String {
        format!(
            "{}: {} after {} steps ({} refinements), weighted area {:.8}, {:.1}s",
            self.name,
            self.stop.as_str(),
            self.accepted_steps,
            self.refinements,
            self.weighted_area,
            self.seconds
        )
    }
}

/// Evolves one concrete (already expanded) scenario and writes its
/// artifacts into `out_dir`.
pub fn run_scenario(scenario: &Scenario, out_dir: &Path) -> Result<RunSummary, CliError> {
    let started = Instant::now();
    let density = scenario.bubble.density().map_err(|e| CliError::Config(e.to_string()))?;
    let outcome = evolve(&scenario.bubble, &scenario.evolve)?;
    let mut metrics = MetricsReport::compute(&outcome.mesh, &density).map_err(|e| CliError::Other(e.to_string()))?;
    metrics.run.extend([
        ("scenario".to_string(), scenario.name.clone()),
        ("topology".to_string(), scenario.bubble.topology.to_string()),
        ("stop_reason".to_string(), outcome.stop.as_str().to_string()),
        ("accepted_steps".to_string(), outcome.accepted_steps.to_string()),
        ("refinements".to_string(), outcome.refinements.to_string()),
        ("max_volume_residual".to_string(), format!("{:e}", outcome.trace.max_residual())),
    ]);
    // The settings that decide when a run stops, so reports stay comparable.
    let (b, e) = (&scenario.bubble, &scenario.evolve);
    let schedule: Vec<String> = e.refine_schedule.iter().map(usize::to_string).collect();
    metrics.run.extend(
        [
            ("refinement_level", b.refinement_level.to_string()),
            ("seed_jitter", format!("{:e}", b.seed_jitter)),
            ("max_iterations", e.max_iterations.to_string()),
            ("step0", e.step0.map(|h| format!("{h:e}")).unwrap_or_else(|| "auto".into())),
            ("backtrack_factor", format!("{:e}", e.backtrack_factor)),
            ("constraint_tol", format!("{:e}", e.constraint_tol)),
            ("refine_schedule", schedule.join(";")),
            ("converge_rel_energy", format!("{:e}", e.converge_rel_energy)),
            ("converge_window", e.converge_window.to_string()),
            // The gradient term f·∇ψ ~ p·r^(p−1) is unbounded at the origin for p < 1.
            ("regularization_sensitive", (b.p > 0.0 && b.p < 1.0 && b.epsilon == 0.0).to_string()),
        ]
        .map(|(k, v)| (k.to_string(), v)),
    );

    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let path = |ext: &str| out_dir.join(format!("{}.{ext}", scenario.name));
    if scenario.outputs.obj {
        let p = path("obj");
        write_obj(&outcome.mesh, BufWriter::new(File::create(&p)?))?;
        written.push(p);
    }
    if scenario.outputs.trace {
        let p = path("trace.csv");
        outcome.trace.write_csv(BufWriter::new(File::create(&p)?))?;
        written.push(p);
    }
    if scenario.outputs.metrics {
        let p = path("metrics.csv");
        std::fs::write(&p, metrics.to_csv())?;
        written.push(p);
    }

    Ok(RunSummary {
        name: scenario.name.clone(),
        topology: scenario.bubble.topology,
        stop: outcome.stop,
        accepted_steps: outcome.accepted_steps,
        refinements: outcome.refinements,
        weighted_area: outcome.weighted_area,
        seconds: started.elapsed().as_secs_f64(),
        mesh: outcome.mesh,
        trace: outcome.trace,
        metrics,
        written,
    })
}

/// Expands every scenario's sweep and runs all of them, in parallel, in
/// file order.
pub fn run_all(scenarios: &[Scenario], out_dir: &Path) -> Vec<(String, Result<RunSummary, CliError>)> {
    let runs: Vec<Scenario> = scenarios.iter().flat_map(Scenario::expand).collect();
    runs.par_iter().map(|s| (s.name.clone(), run_scenario(s, out_dir))).collect()
}

/// Worst exit status over a batch: errors outrank stalls.
pub fn batch_exit_code(results: &[(String, Result<RunSummary, CliError>)]) -> i32 {
    results
        .iter()
        .map(|(_, r)| match r {
            Ok(s) => s.exit_code(),
            Err(e) => e.exit_code(),
        })
        .max_by_key(|code| match code {
            0 => 0,
            2 => 1,
            _ => 2 + code,
        })
        .unwrap_or(0)
}
