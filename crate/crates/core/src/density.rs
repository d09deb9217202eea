//! Radial density `f(r) = r^p` and the weighted area / volume functionals.
//!
//! Facet integrals use the three-point edge-midpoint rule, which is exact for
//! quadratic integrands on a triangle and commutes with scaling about the
//! origin. Weighted volumes come from the divergence identity
//! `div(f(|x|) x) = (p + 3) f(|x|)`, valid for `f = r^p`, so that
//!
//! ```text
//! V(Ω) = 1/(p+3) ∮_{∂Ω} f(x) (x · n_out) dA
//! ```
//!
//! On a flat triangle `x · n` is constant, hence the facet contribution is
//! `det[a, b, c] · mean_f / (2 (p + 3))`.
//!
//! All reductions run in facet-index order so that energies are bit-identical
//! across runs and thread counts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{ClusterMesh, RegionId};
use crate::Vec3;

/// Distance below which a quadrature point counts as sitting on the origin.
pub const ORIGIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DensityError {
    #[error("degenerate triangle (zero area)")]
    DegenerateTriangle,
    #[error("quadrature point at distance {distance:e} from the origin; ∇f is singular for p = {p} < 1 without regularization")]
    OriginSingularity { p: f64, distance: f64 },
    #[error("invalid density parameters: p = {p}, epsilon = {epsilon}")]
    InvalidParameters { p: f64, epsilon: f64 },
}

/// Radial density `f(x) = (|x|² + ε²)^{p/2}`; `ε = 0` gives `r^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub p: f64,
    #[serde(default)]
    pub epsilon: f64,
}

impl Default for Density {
    fn default() -> Self {
        Density { p: 0.0, epsilon: 0.0 }
    }
}

impl Density {
    pub fn new(p: f64) -> Result<Self, DensityError> {
        Self::regularized(p, 0.0)
    }

    pub fn regularized(p: f64, epsilon: f64) -> Result<Self, DensityError> {
        if !(p >= 0.0 && p.is_finite() && epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(DensityError::InvalidParameters { p, epsilon });
        }
        Ok(Density { p, epsilon })
    }

    /// Uniform density (`p = 0`).
    pub fn euclidean() -> Self {
        Density { p: 0.0, epsilon: 0.0 }
    }

    fn r2(&self, x: &Vec3) -> f64 {
        x.norm_squared() + self.epsilon * self.epsilon
    }

    /// `f(x)`.
    pub fn value(&self, x: &Vec3) -> f64 {
        if self.p == 0.0 {
            return 1.0;
        }
        self.r2(x).powf(0.5 * self.p)
    }

    /// `∇f(x) = p (r² + ε²)^{p/2 - 1} x`.
    ///
    /// At the exact origin with `ε = 0` the gradient is taken as zero; callers
    /// that need the `p < 1` singularity reported use [`Density::checked_gradient`].
    pub fn gradient(&self, x: &Vec3) -> Vec3 {
        if self.p == 0.0 {
            return Vec3::zeros();
        }
        let r2 = self.r2(x);
        if r2 == 0.0 {
            return Vec3::zeros();
        }
        x * (self.p * r2.powf(0.5 * self.p - 1.0))
    }

    /// [`Density::gradient`], failing where `∇f` blows up.
    pub fn checked_gradient(&self, x: &Vec3) -> Result<Vec3, DensityError> {
        if self.is_singular_at(x) {
            return Err(DensityError::OriginSingularity { p: self.p, distance: x.norm() });
        }
        Ok(self.gradient(x))
    }

    fn is_singular_at(&self, x: &Vec3) -> bool {
        self.p > 0.0 && self.p < 1.0 && self.epsilon == 0.0 && x.norm() < ORIGIN_TOLERANCE
    }

    /// Whether any quadrature point of `mesh` at `positions` sits where
    /// [`Density::checked_gradient`] would fail.
    pub fn is_singular_on(&self, mesh: &ClusterMesh, positions: &[Vec3]) -> bool {
        if !(self.p > 0.0 && self.p < 1.0 && self.epsilon == 0.0) {
            return false;
        }
        mesh.facets().par_iter().any(|f| {
            let [a, b, c] = f.vertices.map(|v| &positions[v as usize]);
            [(a, b), (b, c), (c, a)].iter().any(|(u, w)| self.is_singular_at(&(0.5 * (*u + *w))))
        })
    }

    /// `∇ψ = ∇ log f = p x / (r² + ε²)`.
    pub fn log_gradient(&self, x: &Vec3) -> Result<Vec3, DensityError> {
        if self.p == 0.0 {
            return Ok(Vec3::zeros());
        }
        let r2 = self.r2(x);
        if r2.sqrt() < ORIGIN_TOLERANCE {
            return Err(DensityError::OriginSingularity { p: self.p, distance: x.norm() });
        }
        Ok(x * (self.p / r2))
    }

    /// Mean of `f` over the three edge midpoints.
    fn midpoint_mean(&self, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
        if self.p == 0.0 {
            return 1.0;
        }
        let mab = 0.5 * (a + b);
        let mbc = 0.5 * (b + c);
        let mca = 0.5 * (c + a);
        (self.value(&mab) + self.value(&mbc) + self.value(&mca)) / 3.0
    }

    /// Weighted area of one triangle (Euclidean area times midpoint-rule mean of `f`).
    pub fn weighted_facet_area(&self, a: &Vec3, b: &Vec3, c: &Vec3) -> Result<f64, DensityError> {
        let area = 0.5 * (b - a).cross(&(c - a)).norm();
        if !(area > 0.0) {
            return Err(DensityError::DegenerateTriangle);
        }
        Ok(area * self.midpoint_mean(a, b, c))
    }

    /// Gradient of the facet weighted area with respect to the three corners.
    fn facet_area_gradient(&self, a: &Vec3, b: &Vec3, c: &Vec3) -> Result<[Vec3; 3], DensityError> {
        let n = (b - a).cross(&(c - a));
        let twice_area = n.norm();
        let area = 0.5 * twice_area;
        let nhat = n / twice_area;
        let da = 0.5 * nhat.cross(&(c - b));
        let db = 0.5 * nhat.cross(&(a - c));
        let dc = 0.5 * nhat.cross(&(b - a));
        if self.p == 0.0 {
            return Ok([da, db, dc]);
        }
        let mab = 0.5 * (a + b);
        let mbc = 0.5 * (b + c);
        let mca = 0.5 * (c + a);
        let fmean = (self.value(&mab) + self.value(&mbc) + self.value(&mca)) / 3.0;
        let gab = self.checked_gradient(&mab)?;
        let gbc = self.checked_gradient(&mbc)?;
        let gca = self.checked_gradient(&mca)?;
        // d(mean f)/d(corner): each midpoint moves with half the corner displacement.
        let w = area / 6.0;
        Ok([
            da * fmean + (gab + gca) * w,
            db * fmean + (gab + gbc) * w,
            dc * fmean + (gbc + gca) * w,
        ])
    }

    /// Signed flux term `det[a,b,c] · mean_f / (2 (p+3))` of one facet:
    /// its weighted-volume contribution to the region behind it.
    pub fn facet_volume_term(&self, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
        let det = a.dot(&b.cross(c));
        det * self.midpoint_mean(a, b, c) / (2.0 * (self.p + 3.0))
    }

    fn facet_volume_gradient(&self, a: &Vec3, b: &Vec3, c: &Vec3) -> Result<[Vec3; 3], DensityError> {
        let k = 1.0 / (2.0 * (self.p + 3.0));
        let det = a.dot(&b.cross(c));
        let fmean = self.midpoint_mean(a, b, c);
        let ga = b.cross(c) * fmean;
        let gb = c.cross(a) * fmean;
        let gc = a.cross(b) * fmean;
        if self.p == 0.0 {
            return Ok([ga * k, gb * k, gc * k]);
        }
        let gab = self.checked_gradient(&(0.5 * (a + b)))?;
        let gbc = self.checked_gradient(&(0.5 * (b + c)))?;
        let gca = self.checked_gradient(&(0.5 * (c + a)))?;
        let w = det / 6.0;
        Ok([
            (ga + (gab + gca) * w) * k,
            (gb + (gab + gbc) * w) * k,
            (gc + (gbc + gca) * w) * k,
        ])
    }

    /// Total weighted area of the mesh.
    pub fn weighted_area(&self, mesh: &ClusterMesh) -> f64 {
        self.weighted_area_at(mesh, mesh.positions())
    }

    /// Weighted area of `mesh`'s connectivity evaluated at other positions.
    pub fn weighted_area_at(&self, mesh: &ClusterMesh, positions: &[Vec3]) -> f64 {
        let terms: Vec<f64> = mesh
            .facets()
            .par_iter()
            .map(|f| {
                let [a, b, c] = f.vertices.map(|v| &positions[v as usize]);
                0.5 * (b - a).cross(&(c - a)).norm() * self.midpoint_mean(a, b, c)
            })
            .collect();
        terms.iter().sum()
    }

    /// Weighted volume of one region (signed; positive for a properly
    /// oriented bounded region).
    pub fn weighted_region_volume(&self, mesh: &ClusterMesh, region: RegionId) -> f64 {
        self.region_volumes_at(mesh, mesh.positions())[region.index() - 1]
    }

    /// Weighted volumes of all bounded regions, indexed `region - 1`.
    pub fn region_volumes(&self, mesh: &ClusterMesh) -> Vec<f64> {
        self.region_volumes_at(mesh, mesh.positions())
    }

    pub fn region_volumes_at(&self, mesh: &ClusterMesh, positions: &[Vec3]) -> Vec<f64> {
        let terms: Vec<f64> = mesh
            .facets()
            .par_iter()
            .map(|f| {
                let [a, b, c] = f.vertices.map(|v| &positions[v as usize]);
                self.facet_volume_term(a, b, c)
            })
            .collect();
        let mut out = vec![0.0; mesh.region_count()];
        for (f, t) in mesh.facets().iter().zip(&terms) {
            // The normal leaves `back`, so the flux counts positively there.
            if f.back != RegionId::EXTERIOR {
                out[f.back.index() - 1] += t;
            }
            if f.front != RegionId::EXTERIOR {
                out[f.front.index() - 1] -= t;
            }
        }
        out
    }

    /// Exact gradient of [`Density::weighted_area`] at every vertex.
    pub fn area_gradient(&self, mesh: &ClusterMesh) -> Result<Vec<Vec3>, DensityError> {
        let positions = mesh.positions();
        let per_facet: Vec<[Vec3; 3]> = mesh
            .facets()
            .par_iter()
            .map(|f| {
                let [a, b, c] = f.vertices.map(|v| &positions[v as usize]);
                self.facet_area_gradient(a, b, c)
            })
            .collect::<Result<_, _>>()?;
        let mut grad = vec![Vec3::zeros(); positions.len()];
        for (f, g) in mesh.facets().iter().zip(&per_facet) {
            for k in 0..3 {
                grad[f.vertices[k] as usize] += g[k];
            }
        }
        Ok(grad)
    }

    /// Exact gradient of the weighted volume of `region`.
    pub fn volume_gradient(&self, mesh: &ClusterMesh, region: RegionId) -> Result<Vec<Vec3>, DensityError> {
        Ok(self.volume_gradients(mesh)?.swap_remove(region.index() - 1))
    }

    /// Gradients of every region's weighted volume, indexed `region - 1`.
    pub fn volume_gradients(&self, mesh: &ClusterMesh) -> Result<Vec<Vec<Vec3>>, DensityError> {
        let positions = mesh.positions();
        let per_facet: Vec<[Vec3; 3]> = mesh
            .facets()
            .par_iter()
            .map(|f| {
                let [a, b, c] = f.vertices.map(|v| &positions[v as usize]);
                self.facet_volume_gradient(a, b, c)
            })
            .collect::<Result<_, _>>()?;
        let mut grads = vec![vec![Vec3::zeros(); positions.len()]; mesh.region_count()];
        for (f, g) in mesh.facets().iter().zip(&per_facet) {
            for (region, sign) in [(f.back, 1.0), (f.front, -1.0)] {
                if region == RegionId::EXTERIOR {
                    continue;
                }
                let target = &mut grads[region.index() - 1];
                for k in 0..3 {
                    target[f.vertices[k] as usize] += g[k] * sign;
                }
            }
        }
        Ok(grads)
    }
}
