//! Volume-constrained descent of the weighted area.
//!
//! Each step moves the vertices against the area gradient projected onto the
//! tangent space of the volume constraints, then pulls the volumes back to
//! their targets with Newton iterations. The step size backtracks until the
//! constrained energy strictly decreases and grows again after every
//! accepted step.
//!
//! The descent direction is taken in the metric of lumped (barycentric)
//! vertex areas, i.e. `d = M⁻¹(∇A − Σ μᵢ ∇Vᵢ)`. This keeps the velocity of a
//! vertex comparable to the local mean curvature on graded meshes such as
//! the (0.3, 0.3, 300) triples, and does not change what counts as a
//! stationary point.

mod trace;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use trace::{EvolveTrace, TraceRow, TRACE_HEADER};

use crate::density::{Density, DensityError};
use crate::mesh::{cleanup, equiangulate, refine, relaxed_positions, vertex_frames, ClusterMesh, MeshError};
use crate::shapes::{seed_mesh_with_tolerance, BubbleSpec, ShapeError};
use crate::Vec3;

pub const DEFAULT_CONSTRAINT_TOL: f64 = 1e-9;

/// Gram matrices with a larger condition number are treated as singular.
/// Below this smallest facet angle a tidy pass is applied regardless of its
/// energy cost.
pub const POOR_ANGLE_DEGREES: f64 = 15.0;

/// Descent steps may not push a facet angle below this (unless it already
/// was smaller); the tidy pass gets a chance to repair the mesh instead.
pub const SLIVER_ANGLE_DEGREES: f64 = 1.0;

pub const MAX_GRAM_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolveError {
    #[error("volume-gradient Gram matrix is singular (condition number {condition:e})")]
    SingularGram { condition: f64 },
    #[error("volume projection did not converge in {iterations} Newton iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid evolve configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("seeding failed: {0}")]
    Seed(Box<ShapeError>),
}

impl From<ShapeError> for EvolveError {
    fn from(e: ShapeError) -> Self {
        EvolveError::Seed(Box::new(e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    /// Upper bound on accepted descent steps.
    pub max_iterations: usize,
    /// Initial step size; `None` picks one from the seed so that the first
    /// trial moves the fastest vertex by a fifth of the mean edge length.
    pub step0: Option<f64>,
    pub backtrack_factor: f64,
    /// Bound on every relative weighted-volume error.
    pub constraint_tol: f64,
    /// Accepted-step counts at which the mesh is refined, equiangulated and
    /// cleaned up.
    pub refine_schedule: Vec<usize>,
    pub converge_rel_energy: f64,
    pub converge_window: usize,
    pub max_newton_iterations: usize,
    /// Edges shorter than this fraction of the mean are collapsed after each
    /// refinement.
    pub cleanup_fraction: f64,
    /// Every this many accepted steps, equiangulate and relax the vertices
    /// tangentially (0 disables).
    pub equiangulate_every: usize,
    /// Fraction of the tangential offset to the neighbour centroid applied
    /// per relaxation pass.
    pub relax_factor: f64,
    /// Bring scheduled refinements forward when the run converges or stalls
    /// before reaching them.
    pub refine_early: bool,
    /// Every this many accepted steps, try translating the whole cluster
    /// along its constrained area gradient (0 disables).
    pub drift_every: usize,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            max_iterations: 3000,
            step0: None,
            backtrack_factor: 0.5,
            constraint_tol: DEFAULT_CONSTRAINT_TOL,
            refine_schedule: vec![200, 600, 1400],
            converge_rel_energy: 1e-8,
            converge_window: 100,
            max_newton_iterations: 20,
            cleanup_fraction: 0.2,
            equiangulate_every: 20,
            relax_factor: 0.5,
            refine_early: true,
            drift_every: 10,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<(), EvolveError> {
        let bad = |what: &str| Err(EvolveError::InvalidConfig(what.to_string()));
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if !(self.constraint_tol > 0.0) || !(self.converge_rel_energy > 0.0) {
            return bad("tolerances must be positive");
        }
        if matches!(self.step0, Some(h) if !(h > 0.0 && h.is_finite())) {
            return bad("step0 must be positive");
        }
        if self.converge_window == 0 || self.max_newton_iterations == 0 {
            return bad("converge_window and max_newton_iterations must be positive");
        }
        if !(self.relax_factor >= 0.0 && self.relax_factor <= 1.0) {
            return bad("relax_factor must lie in [0, 1]");
        }
        if !(self.cleanup_fraction >= 0.0 && self.cleanup_fraction < 1.0) {
            return bad("cleanup_fraction must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The energy dropped by less than `converge_rel_energy` (relative)
    /// over the last `converge_window` descent steps, or the projected
    /// gradient vanished.
    Converged,
    /// Backtracking exhausted the step size.
    Stalled,
    MaxIterations,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::Stalled => "stalled",
            StopReason::MaxIterations => "max_iterations",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub mesh: ClusterMesh,
    pub trace: EvolveTrace,
    pub stop: StopReason,
    pub accepted_steps: usize,
    pub refinements: usize,
    pub weighted_area: f64,
}

/// Result of [`project_volumes`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub iterations: usize,
    pub max_relative_residual: f64,
    /// Euclidean norm of the total displacement.
    pub displacement: f64,
}

fn relative_residuals(volumes: &[f64], targets: &[f64]) -> f64 {
    volumes
        .iter()
        .zip(targets)
        .map(|(v, t)| ((v - t) / t).abs())
        .fold(0.0, f64::max)
}

fn dot(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

/// Solves `M x = rhs` for a symmetric positive semidefinite Gram matrix,
/// rejecting it when its condition number exceeds [`MAX_GRAM_CONDITION`].
fn solve_gram(gram: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>, EvolveError> {
    let eig = gram.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition < MAX_GRAM_CONDITION) {
        return Err(EvolveError::SingularGram { condition });
    }
    gram.cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or(EvolveError::SingularGram { condition })
}

/// Newton projection of `positions` onto the constraint set
/// `V(x) = targets`, moving along the volume gradients.
pub fn project_positions(
    mesh: &ClusterMesh,
    density: &Density,
    targets: &[f64],
    positions: &mut [Vec3],
    tol: f64,
    max_iterations: usize,
) -> Result<Projection, EvolveError> {
    let start = positions.to_vec();
    let mut work = mesh.clone();
    let mut residual = relative_residuals(&density.region_volumes_at(mesh, positions), targets);
    let mut iterations = 0;
    while residual >= tol {
        if iterations == max_iterations {
            return Err(EvolveError::NoConvergence { iterations, residual });
        }
        work.positions_mut().copy_from_slice(positions);
        let grads = density.volume_gradients(&work)?;
        let volumes = density.region_volumes(&work);
        let m = grads.len();
        let gram = DMatrix::from_fn(m, m, |i, j| dot(&grads[i], &grads[j]));
        let rhs = DVector::from_fn(m, |i, _| targets[i] - volumes[i]);
        let lambda = solve_gram(gram, rhs)?;
        for (i, g) in grads.iter().enumerate() {
            for (x, gv) in positions.iter_mut().zip(g) {
                *x += lambda[i] * gv;
            }
        }
        iterations += 1;
        residual = relative_residuals(&density.region_volumes_at(mesh, positions), targets);
        if !residual.is_finite() {
            return Err(EvolveError::NoConvergence { iterations, residual });
        }
    }
    let displacement = start
        .iter()
        .zip(positions.iter())
        .map(|(a, b)| (a - b).norm_squared())
        .sum::<f64>()
        .sqrt();
    Ok(Projection { iterations, max_relative_residual: residual, displacement })
}

/// Projects the mesh onto its own target volumes (see
/// [`ClusterMesh::targets`]) with at most 20 Newton iterations.
pub fn project_volumes(mesh: &mut ClusterMesh, density: &Density, tol: f64) -> Result<Projection, EvolveError> {
    let targets = mesh.targets();
    let mut positions = mesh.positions().to_vec();
    let out = project_positions(mesh, density, &targets, &mut positions, tol, 20)?;
    mesh.positions_mut().copy_from_slice(&positions);
    Ok(out)
}

/// Lumped vertex masses: one third of the Euclidean area of every incident
/// facet.
pub fn vertex_masses(mesh: &ClusterMesh) -> Vec<f64> {
    let mut mass = vec![0.0; mesh.vertex_count()];
    for (i, f) in mesh.facets().iter().enumerate() {
        let a = mesh.facet_area(i as u32) / 3.0;
        for &v in &f.vertices {
            mass[v as usize] += a;
        }
    }
    mass
}

/// Descent direction `K(∇A − Σ μᵢ ∇Vᵢ)` with μ chosen so that the direction
/// is tangent to every volume constraint.
///
/// `K` divides by the lumped vertex mass and projects onto the vertex
/// frames of [`vertex_frames`]: interface vertices move along their normal,
/// singular-curve vertices perpendicular to the curve, junctions freely.
/// Sliding motion changes the discrete energy through the quadrature alone
/// and, left in, drags vertices towards the origin until triangles
/// degenerate.
pub fn descent_direction(mesh: &ClusterMesh, density: &Density) -> Result<Vec<Vec3>, EvolveError> {
    let g = density.area_gradient(mesh)?;
    let grads = density.volume_gradients(mesh)?;
    let frames = vertex_frames(mesh);
    let inv_mass: Vec<f64> = vertex_masses(mesh).iter().map(|m| if *m > 0.0 { 1.0 / m } else { 0.0 }).collect();
    let apply = |w: &[Vec3]| -> Vec<Vec3> {
        w.iter().zip(&frames).zip(&inv_mass).map(|((x, f), m)| f.project(x) * *m).collect()
    };
    let k_grads: Vec<Vec<Vec3>> = grads.iter().map(|gi| apply(gi)).collect();
    let m = grads.len();
    let gram = DMatrix::from_fn(m, m, |i, j| dot(&grads[i], &k_grads[j]));
    let rhs = DVector::from_fn(m, |i, _| dot(&k_grads[i], &g));
    let mu = solve_gram(gram, rhs)?;
    let mut d = apply(&g);
    for (i, kg) in k_grads.iter().enumerate() {
        for (dv, kv) in d.iter_mut().zip(kg) {
            *dv -= mu[i] * kv;
        }
    }
    Ok(d)
}

/// Outcome of one [`descent_step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepResult {
    /// The step `h` was accepted, lowering the weighted area to `area`.
    Accepted { h: f64, area: f64 },
    /// No trial step above `min_step` lowered the energy.
    Stalled,
    /// The projected gradient vanished.
    Stationary,
}

/// One backtracking descent step starting from step size `h`.
pub fn descent_step(
    mesh: &mut ClusterMesh,
    density: &Density,
    config: &EvolveConfig,
    h: f64,
    min_step: f64,
) -> Result<StepResult, EvolveError> {
    let energy = density.weighted_area(mesh);
    let direction = descent_direction(mesh, density)?;
    if direction.iter().all(|d| *d == Vec3::zeros()) {
        return Ok(StepResult::Stationary);
    }
    let targets = mesh.targets();
    let mut h = h;
    while h >= min_step {
        let mut trial: Vec<Vec3> = mesh.positions().iter().zip(&direction).map(|(x, d)| x - h * d).collect();
        let ok = !mesh.folds_relative_to(&trial)
            && project_positions(mesh, density, &targets, &mut trial, config.constraint_tol, config.max_newton_iterations)
                .is_ok()
            && !mesh.folds_relative_to(&trial)
            && !mesh.slivers_relative_to(&trial, SLIVER_ANGLE_DEGREES)
            && !density.is_singular_on(mesh, &trial);
        if ok {
            let area = density.weighted_area_at(mesh, &trial);
            if area < energy {
                mesh.positions_mut().copy_from_slice(&trial);
                return Ok(StepResult::Accepted { h, area });
            }
        }
        h *= config.backtrack_factor;
    }
    Ok(StepResult::Stalled)
}

/// Translation of the whole cluster that lowers the area at fixed volumes
/// to first order: minus the vertex sum of `∇A − Σ νᵢ ∇Vᵢ`, with `ν` the
/// Euclidean Lagrange multipliers.
///
/// The per-vertex flow moves a cluster as a whole only very slowly, since
/// its step is limited by the shortest edges.
pub fn drift_direction(mesh: &ClusterMesh, density: &Density) -> Result<Vec3, EvolveError> {
    let g = density.area_gradient(mesh)?;
    let grads = density.volume_gradients(mesh)?;
    let m = grads.len();
    let gram = DMatrix::from_fn(m, m, |i, j| dot(&grads[i], &grads[j]));
    let rhs = DVector::from_fn(m, |i, _| dot(&grads[i], &g));
    let nu = solve_gram(gram, rhs)?;
    let total = |w: &[Vec3]| w.iter().fold(Vec3::zeros(), |acc, v| acc + v);
    let mut r = total(&g);
    for (i, gi) in grads.iter().enumerate() {
        r -= nu[i] * total(gi);
    }
    Ok(-r)
}

const DRIFT_BACKTRACKS: usize = 6;

/// Tries to translate the cluster by `length` along [`drift_direction`],
/// backtracking a few times. Returns the length used and the new area.
pub fn drift_step(
    mesh: &mut ClusterMesh,
    density: &Density,
    config: &EvolveConfig,
    length: f64,
) -> Result<Option<(f64, f64)>, EvolveError> {
    let energy = density.weighted_area(mesh);
    let t = drift_direction(mesh, density)?;
    let norm = t.norm();
    if !(norm > 0.0) {
        return Ok(None);
    }
    let dir = t / norm;
    let targets = mesh.targets();
    let mut length = length;
    for _ in 0..DRIFT_BACKTRACKS {
        let mut trial: Vec<Vec3> = mesh.positions().iter().map(|x| x + length * dir).collect();
        let ok = project_positions(mesh, density, &targets, &mut trial, config.constraint_tol, config.max_newton_iterations)
            .is_ok()
            && !mesh.folds_relative_to(&trial)
            && !mesh.slivers_relative_to(&trial, SLIVER_ANGLE_DEGREES)
            && !density.is_singular_on(mesh, &trial);
        if ok {
            let area = density.weighted_area_at(mesh, &trial);
            if area < energy {
                mesh.positions_mut().copy_from_slice(&trial);
                return Ok(Some((length, area)));
            }
        }
        length *= config.backtrack_factor;
    }
    Ok(None)
}

fn max_residual(mesh: &ClusterMesh, density: &Density) -> f64 {
    relative_residuals(&density.region_volumes(mesh), &mesh.targets())
}

fn remesh(mesh: &ClusterMesh, density: &Density, config: &EvolveConfig) -> Result<ClusterMesh, EvolveError> {
    let refined = equiangulate(&refine(mesh));
    let mut cleaned = cleanup(&refined, config.cleanup_fraction)?.mesh;
    project_volumes(&mut cleaned, density, config.constraint_tol)?;
    Ok(cleaned)
}

/// Seeds the cluster described by `spec` and evolves it.
pub fn evolve(spec: &BubbleSpec, config: &EvolveConfig) -> Result<EvolveOutcome, EvolveError> {
    config.validate()?;
    let density = spec.density()?;
    let mesh = seed_mesh_with_tolerance(spec, config.constraint_tol)?;
    evolve_mesh(mesh, &density, config)
}

/// Equiangulates and relaxes the mesh tangentially, then restores the
/// volumes. Returns `None` when relaxation would fold a facet.
pub fn tidy(mesh: &ClusterMesh, density: &Density, config: &EvolveConfig) -> Result<Option<ClusterMesh>, EvolveError> {
    let mut out = equiangulate(mesh);
    let relaxed = relaxed_positions(&out, config.relax_factor);
    if out.folds_relative_to(&relaxed) || density.is_singular_on(&out, &relaxed) {
        return Ok(None);
    }
    out.positions_mut().copy_from_slice(&relaxed);
    project_volumes(&mut out, density, config.constraint_tol)?;
    if density.is_singular_on(&out, out.positions()) {
        return Ok(None);
    }
    Ok(Some(out))
}

fn row(mesh: &ClusterMesh, density: &Density, iter: usize, area: f64, step: f64) -> TraceRow {
    TraceRow { iter, area, max_vol_resid: max_residual(mesh, density), step, nverts: mesh.vertex_count() }
}

/// Evolves an existing mesh whose targets are already set.
pub fn evolve_mesh(mut mesh: ClusterMesh, density: &Density, config: &EvolveConfig) -> Result<EvolveOutcome, EvolveError> {
    config.validate()?;
    project_volumes(&mut mesh, density, config.constraint_tol)?;
    let mut trace = EvolveTrace::default();
    let mut area = density.weighted_area(&mesh);
    trace.push(row(&mesh, density, 0, area, 0.0));

    let step0 = match config.step0 {
        Some(h) => h,
        None => {
            let d = descent_direction(&mesh, density)?;
            let fastest = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if fastest > 0.0 {
                0.2 * mesh.mean_edge_length() / fastest
            } else {
                1.0
            }
        }
    };
    let min_step = 1e-14 * step0;
    let mut h = step0;
    let mut pending: Vec<usize> = config.refine_schedule.clone();
    pending.sort_unstable();
    pending.dedup();
    pending.reverse();
    let mut refinements = 0;
    let mut accepted = 0;
    // Energy decrease of each accepted step since the last refinement.
    // Remeshing jumps are not descent progress and are left out.
    let mut decreases: Vec<f64> = Vec::new();
    // Whether a stall has already been answered with a tidy pass since the
    // last accepted step.
    let mut rescued = false;
    let mut drift = 0.5 * mesh.mean_edge_length();

    let stop = loop {
        if accepted >= config.max_iterations {
            break StopReason::MaxIterations;
        }
        let finished = match descent_step(&mut mesh, density, config, h, min_step)? {
            StepResult::Accepted { h: used, area: new_area } => {
                rescued = false;
                accepted += 1;
                decreases.push(area - new_area);
                area = new_area;
                trace.push(row(&mesh, density, accepted, area, used));
                h = used * 2.0;
                let every = config.equiangulate_every;
                if every > 0 && accepted % every == 0 {
                    // A tidy pass may give back at most half of what descent
                    // gained since the previous one, so the net energy keeps
                    // falling. On a mesh close to degenerating it is taken
                    // whenever it improves the worst triangle instead.
                    let gained: f64 = decreases.iter().rev().take(every).sum();
                    let quality = mesh.min_angle_degrees();
                    if let Some(tidied) = tidy(&mesh, density, config)? {
                        let tidied_area = density.weighted_area(&tidied);
                        let accept = if quality < POOR_ANGLE_DEGREES {
                            tidied.min_angle_degrees() > quality
                        } else {
                            tidied_area <= area + 0.5 * gained
                        };
                        if accept {
                            mesh = tidied;
                            area = tidied_area;
                            trace.push(row(&mesh, density, accepted, area, 0.0));
                        }
                    }
                }
                if config.drift_every > 0 && accepted % config.drift_every == 0 {
                    let floor = 1e-9 * mesh.diameter();
                    match drift_step(&mut mesh, density, config, drift)? {
                        Some((used, moved)) => {
                            if let Some(last) = decreases.last_mut() {
                                *last += area - moved;
                            }
                            area = moved;
                            trace.push(row(&mesh, density, accepted, area, used));
                            drift = (2.0 * used).min(0.1 * mesh.diameter());
                        }
                        None => drift = (drift * config.backtrack_factor.powi(DRIFT_BACKTRACKS as i32)).max(floor),
                    }
                }
                let n = decreases.len();
                let w = config.converge_window;
                let converged = n >= w && decreases[n - w..].iter().sum::<f64>() <= config.converge_rel_energy * area.abs();
                converged.then_some(StopReason::Converged)
            }
            StepResult::Stalled => {
                // A stall is often a single sliver blocking every trial
                // step; untangle it once before giving up.
                let quality = mesh.min_angle_degrees();
                match tidy(&mesh, density, config)? {
                    Some(tidied) if !rescued && tidied.min_angle_degrees() > quality => {
                        mesh = tidied;
                        area = density.weighted_area(&mesh);
                        trace.push(row(&mesh, density, accepted, area, 0.0));
                        rescued = true;
                        h = step0.min(h.max(min_step * 1e6));
                        None
                    }
                    _ => Some(StopReason::Stalled),
                }
            }
            StepResult::Stationary => Some(StopReason::Converged),
        };
        let due = pending.last().is_some_and(|&at| accepted >= at);
        let early = finished.is_some() && config.refine_early && !pending.is_empty();
        if due || early {
            pending.pop();
            mesh = remesh(&mesh, density, config)?;
            refinements += 1;
            area = density.weighted_area(&mesh);
            trace.push(row(&mesh, density, accepted, area, 0.0));
            decreases.clear();
            // Halving the edges quarters the stable step of the
            // mass-normalized flow.
            h = (h * 0.25).max(min_step * 1e3);
            continue;
        }
        if let Some(reason) = finished {
            break reason;
        }
    };

    Ok(EvolveOutcome { weighted_area: area, mesh, trace, stop, accepted_steps: accepted, refinements })
}
