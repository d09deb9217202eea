//! Analytic seed geometries and exact reference shapes.
//!
//! [`seed_mesh`] turns a [`BubbleSpec`] into a triangulated cluster whose
//! weighted volumes match the targets: it meshes a family of analytic shapes
//! (icosphere, exact double bubble, chain of double-bubble interfaces, or the
//! power diagram of three spheres), rescales the sphere radii by a fixed-point
//! iteration until every volume is within 5%, then restores the constraints
//! exactly with [`crate::evolve::project_volumes`].

mod builder;
mod geometry;
mod oracle;
pub mod quadrature;
mod seeds;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use builder::{hex_disk, icosphere, MeshBuilder};
pub use geometry::{double_bubble_geometry, BulgeRadius, DoubleBubbleGeometry, Placement, Profile};
pub use oracle::{
    oracle_weighted_area, oracle_weighted_volumes, patch_weighted_area, patch_weighted_flux, placement_scan,
    sphere_oracle, sphere_through_origin_radius, ScanSample, ORACLE_REL_TOL,
};

use crate::density::{Density, DensityError};
use crate::evolve::{project_volumes, EvolveError};
use crate::mesh::{ClusterMesh, MeshError};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Single,
    Double,
    Triple,
    #[serde(alias = "chain")]
    Chain3,
}

impl Topology {
    pub fn region_count(self) -> usize {
        match self {
            Topology::Single => 1,
            Topology::Double => 2,
            Topology::Triple | Topology::Chain3 => 3,
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Single => "single",
            Topology::Double => "double",
            Topology::Triple => "triple",
            Topology::Chain3 => "chain3",
        })
    }
}

impl FromStr for Topology {
    type Err = ShapeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "single" => Ok(Topology::Single),
            "double" => Ok(Topology::Double),
            "triple" => Ok(Topology::Triple),
            "chain3" | "chain" => Ok(Topology::Chain3),
            _ => Err(ShapeError::UnsupportedTopology(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShapeError {
    #[error("unsupported topology '{0}'")]
    UnsupportedTopology(String),
    #[error("{topology} needs {expected} volumes, got {found}")]
    VolumeCount { topology: Topology, expected: usize, found: usize },
    #[error("target volumes must be positive and finite, got {0:?}")]
    BadVolume(Vec<f64>),
    #[error("cannot construct seed: {0}")]
    Construction(String),
    #[error("seed volumes did not reach 5% of the targets (worst ratio {worst_ratio})")]
    VolumeFit { worst_ratio: f64 },
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("constraint projection of the seed failed: {0}")]
    Projection(#[from] Box<EvolveError>),
}

fn default_level() -> u32 {
    2
}

fn default_jitter_seed() -> u64 {
    1
}

/// Declarative description of a cluster to seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BubbleSpec {
    pub topology: Topology,
    /// Target weighted volumes, region 1 first.
    pub volumes: Vec<f64>,
    pub p: f64,
    #[serde(default)]
    pub epsilon: f64,
    /// Extra rigid motion applied after the canonical placement, which puts
    /// the conjectured contact locus (sphere point, singular circle point,
    /// singular vertex) on the origin.
    #[serde(default)]
    pub placement: Placement,
    #[serde(default = "default_level")]
    pub refinement_level: u32,
    /// Random vertex displacement, as a fraction of the cluster diameter.
    #[serde(default)]
    pub seed_jitter: f64,
    #[serde(default = "default_jitter_seed")]
    pub jitter_seed: u64,
}

impl BubbleSpec {
    pub fn new(topology: Topology, volumes: Vec<f64>, p: f64) -> Self {
        BubbleSpec {
            topology,
            volumes,
            p,
            epsilon: 0.0,
            placement: Placement::identity(),
            refinement_level: default_level(),
            seed_jitter: 0.0,
            jitter_seed: default_jitter_seed(),
        }
    }

    pub fn with_level(mut self, level: u32) -> Self {
        self.refinement_level = level;
        self
    }

    pub fn with_placement(mut self, placement: Placement) -> Self {
        self.placement = placement;
        self
    }

    pub fn density(&self) -> Result<Density, DensityError> {
        Density::regularized(self.p, self.epsilon)
    }

    pub fn validate(&self) -> Result<(), ShapeError> {
        let expected = self.topology.region_count();
        if self.volumes.len() != expected {
            return Err(ShapeError::VolumeCount {
                topology: self.topology,
                expected,
                found: self.volumes.len(),
            });
        }
        if self.volumes.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(ShapeError::BadVolume(self.volumes.clone()));
        }
        self.density()?;
        Ok(())
    }
}

/// Meshes the topology's analytic family at the given sphere radii, then
/// applies canonical placement and `extra`.
fn build_family(topology: Topology, radii: &[f64], level: u32, extra: &Placement) -> Result<ClusterMesh, ShapeError> {
    let seed = match topology {
        Topology::Single => seeds::single(radii[0], level),
        Topology::Double => seeds::double(radii[0], radii[1], level),
        Topology::Chain3 => seeds::chain([radii[0], radii[1], radii[2]], level)?,
        Topology::Triple => seeds::triple([radii[0], radii[1], radii[2]], level)?,
    };
    let mut mesh = seed.builder.build(seed.regions)?;
    let canonical = seed.canonical;
    mesh.transform(|x| extra.apply(&canonical.apply(x)));
    Ok(mesh)
}

/// Builds the seed cluster for `spec`, with volumes projected onto the
/// targets to the default constraint tolerance.
pub fn seed_mesh(spec: &BubbleSpec) -> Result<ClusterMesh, ShapeError> {
    seed_mesh_with_tolerance(spec, crate::evolve::DEFAULT_CONSTRAINT_TOL)
}

pub fn seed_mesh_with_tolerance(spec: &BubbleSpec, constraint_tol: f64) -> Result<ClusterMesh, ShapeError> {
    spec.validate()?;
    let density = spec.density()?;
    let exponent = 1.0 / (spec.p + 3.0);
    let mut radii: Vec<f64> = spec.volumes.iter().map(|v| v.powf(exponent)).collect();
    let mut mesh = build_family(spec.topology, &radii, spec.refinement_level, &spec.placement)?;
    let mut worst = f64::INFINITY;
    // Under a strong density the regions' volumes depend on each other's
    // radii through the placement, and the plain fixed-point update can
    // overshoot; damp it whenever the fit gets worse.
    let mut damping = 1.0;
    for _ in 0..120 {
        let volumes = density.region_volumes(&mesh);
        let ratios: Vec<f64> = spec.volumes.iter().zip(&volumes).map(|(t, v)| t / v).collect();
        let current = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
        if current > worst {
            damping *= 0.5;
        }
        worst = current;
        if worst < 1e-3 {
            break;
        }
        for (r, q) in radii.iter_mut().zip(&ratios) {
            // A negative or absurd volume means the family broke down; fall
            // back to a gentle uniform scaling.
            *r *= if q.is_finite() && *q > 0.0 { q.powf(damping * exponent).clamp(0.5, 2.0) } else { 1.1 };
        }
        mesh = build_family(spec.topology, &radii, spec.refinement_level, &spec.placement)?;
    }
    if !(worst < 0.05) {
        return Err(ShapeError::VolumeFit { worst_ratio: worst });
    }
    if spec.seed_jitter > 0.0 {
        let amplitude = spec.seed_jitter * mesh.diameter();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.jitter_seed);
        for x in mesh.positions_mut() {
            let d = loop {
                let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                if v.norm_squared() <= 1.0 {
                    break v;
                }
            };
            *x += amplitude * d;
        }
    }
    mesh.set_targets(&spec.volumes);
    project_volumes(&mut mesh, &density, constraint_tol).map_err(Box::new)?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topology_parsing() {
        assert_eq!("Chain3".parse::<Topology>().unwrap(), Topology::Chain3);
        assert!(matches!("quad".parse::<Topology>(), Err(ShapeError::UnsupportedTopology(_))));
    }

    #[test]
    fn volume_count_checked() {
        let spec = BubbleSpec::new(Topology::Triple, vec![1.0, 2.0], 2.0);
        assert!(matches!(seed_mesh(&spec), Err(ShapeError::VolumeCount { expected: 3, found: 2, .. })));
        let spec = BubbleSpec::new(Topology::Single, vec![-1.0], 2.0);
        assert!(matches!(seed_mesh(&spec), Err(ShapeError::BadVolume(_))));
    }
}
