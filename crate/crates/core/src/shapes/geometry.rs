//! Exact standard double bubble and axisymmetric surface profiles.
//!
//! Everything here lives in a canonical frame with the symmetry axis along
//! `+x`. A point on a surface of revolution is `(x, ρ cos φ, ρ sin φ)` where
//! the meridian `(x(τ), ρ(τ))` is parametrised by `τ ∈ [0, 1]`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::Vec3;

/// Meridian of an axisymmetric surface patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// Zone of the sphere with centre `(center_x, 0, 0)`. The polar angle is
    /// measured from the pole at `center_x + sigma·radius` and runs linearly
    /// from `theta0` (τ = 0) to `theta1` (τ = 1).
    SphereZone { center_x: f64, radius: f64, sigma: f64, theta0: f64, theta1: f64 },
    /// Spherical (or flat, `kappa = 0`) cap spanning the circle of radius
    /// `rho_c` in the plane `x = x_c`. `kappa` is the signed curvature; with
    /// `kappa > 0` the apex sits on the `−x` side of the plane. τ = ρ / ρ_c.
    Bulge { x_c: f64, rho_c: f64, kappa: f64 },
}

/// `κρ² / (1 + √(1 − κ²ρ²))`: height of a circular arc of curvature κ above
/// its tangent at radius ρ, in a form that stays accurate as κ → 0.
fn sag(kappa: f64, rho: f64) -> f64 {
    kappa * rho * rho / (1.0 + (1.0 - (kappa * rho).powi(2)).max(0.0).sqrt())
}

fn sag_slope(kappa: f64, rho: f64) -> f64 {
    let kr = kappa * rho;
    kr / (1.0 - kr * kr).max(1e-300).sqrt()
}

impl Profile {
    /// `(x, ρ)` at parameter τ.
    pub fn meridian(&self, tau: f64) -> (f64, f64) {
        match *self {
            Profile::SphereZone { center_x, radius, sigma, theta0, theta1 } => {
                let t = theta0 + tau * (theta1 - theta0);
                (center_x + sigma * radius * t.cos(), radius * t.sin())
            }
            Profile::Bulge { x_c, rho_c, kappa } => {
                let rho = tau * rho_c;
                (x_c - sag(kappa, rho_c) + sag(kappa, rho), rho)
            }
        }
    }

    /// `(dx/dτ, dρ/dτ)`.
    pub fn meridian_derivative(&self, tau: f64) -> (f64, f64) {
        match *self {
            Profile::SphereZone { radius, sigma, theta0, theta1, .. } => {
                let t = theta0 + tau * (theta1 - theta0);
                let dt = theta1 - theta0;
                (-sigma * radius * t.sin() * dt, radius * t.cos() * dt)
            }
            Profile::Bulge { rho_c, kappa, .. } => (sag_slope(kappa, tau * rho_c) * rho_c, rho_c),
        }
    }

    pub fn point(&self, tau: f64, phi: f64) -> Vec3 {
        let (x, rho) = self.meridian(tau);
        Vec3::new(x, rho * phi.cos(), rho * phi.sin())
    }

    /// `∂P/∂τ × ∂P/∂φ`; its length is the area element.
    pub fn area_vector(&self, tau: f64, phi: f64) -> Vec3 {
        let (_, rho) = self.meridian(tau);
        let (dx, drho) = self.meridian_derivative(tau);
        Vec3::new(rho * drho, -dx * rho * phi.cos(), -dx * rho * phi.sin())
    }
}

/// Rigid motion `x ↦ R x + t`, with `R` given as an axis-angle vector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    #[serde(default)]
    pub translation: [f64; 3],
    /// Rotation axis scaled by the angle in radians.
    #[serde(default)]
    pub rotation: [f64; 3],
}

impl Placement {
    pub fn identity() -> Self {
        Placement::default()
    }

    pub fn translation(t: Vec3) -> Self {
        Placement { translation: [t.x, t.y, t.z], rotation: [0.0; 3] }
    }

    pub fn rotation_matrix(&self) -> nalgebra::Rotation3<f64> {
        nalgebra::Rotation3::new(Vec3::from(self.rotation))
    }

    pub fn apply(&self, x: &Vec3) -> Vec3 {
        self.rotation_matrix() * x + Vec3::from(self.translation)
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation_matrix() * v
    }

    /// Scales the translation part, so that scaling a geometry by λ and then
    /// placing it with `scaled(λ)` equals scaling the placed geometry.
    pub fn scaled(&self, lambda: f64) -> Self {
        Placement {
            translation: self.translation.map(|t| t * lambda),
            rotation: self.rotation,
        }
    }
}

/// Middle interface of a double bubble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BulgeRadius {
    Flat,
    Radius(f64),
}

/// Standard double bubble with cap radii `r1` (region 1, centre at the
/// origin) and `r2` (region 2, centre at `(d, 0, 0)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleBubbleGeometry {
    pub r1: f64,
    pub r2: f64,
    pub center_distance: f64,
    pub bulge_radius: BulgeRadius,
    /// x-coordinate of the bulge sphere centre, when there is one.
    pub bulge_center_x: Option<f64>,
    pub circle_center: Vec3,
    pub circle_radius: f64,
    pub circle_normal: Vec3,
    /// Polar angle of the circle seen from each sphere centre, measured from
    /// that sphere's outer pole.
    pub cap_angles: [f64; 2],
    /// Half-angle subtended by the bulge at its centre (0 when flat).
    pub bulge_angle: f64,
}

/// Builds the standard double bubble from its two cap radii.
///
/// At a point of the singular circle the outward normals of the two outer
/// caps meet at 60°, so the triangle (centre 1, centre 2, circle point) has
/// the angle 60° between the radii and the law of cosines gives
/// `d² = r1² + r2² − r1 r2`.
pub fn double_bubble_geometry(r1: f64, r2: f64) -> DoubleBubbleGeometry {
    let d = (r1 * r1 + r2 * r2 - r1 * r2).sqrt();
    let x_c = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    let rho_c = (r1 * r1 - x_c * x_c).max(0.0).sqrt();
    let (bulge_radius, bulge_center_x, bulge_angle) = if r1 == r2 {
        (BulgeRadius::Flat, None, 0.0)
    } else {
        let rb = 1.0 / (1.0 / r1 - 1.0 / r2).abs();
        // The bulge centre lies on the side of the smaller bubble.
        let h = (rb * rb - rho_c * rho_c).max(0.0).sqrt();
        let cx = if r1 > r2 { x_c + h } else { x_c - h };
        (BulgeRadius::Radius(rb), Some(cx), (rho_c / rb).asin())
    };
    DoubleBubbleGeometry {
        r1,
        r2,
        center_distance: d,
        bulge_radius,
        bulge_center_x,
        circle_center: Vec3::new(x_c, 0.0, 0.0),
        circle_radius: rho_c,
        circle_normal: Vec3::x(),
        cap_angles: [rho_c.atan2(-x_c), rho_c.atan2(x_c - d)],
        bulge_angle,
    }
}

impl DoubleBubbleGeometry {
    /// Signed curvature of the middle interface; positive when it bows
    /// towards −x into region 1 (which happens when `r1 > r2`).
    pub fn bulge_curvature(&self) -> f64 {
        1.0 / self.r2 - 1.0 / self.r1
    }

    /// The three interfaces as `(profile, low region, high region)`, in
    /// canonical frame.
    pub fn profiles(&self) -> [(Profile, u16, u16); 3] {
        [
            (
                Profile::SphereZone {
                    center_x: 0.0,
                    radius: self.r1,
                    sigma: -1.0,
                    theta0: 0.0,
                    theta1: self.cap_angles[0],
                },
                0,
                1,
            ),
            (
                Profile::SphereZone {
                    center_x: self.center_distance,
                    radius: self.r2,
                    sigma: 1.0,
                    theta0: 0.0,
                    theta1: self.cap_angles[1],
                },
                0,
                2,
            ),
            (
                Profile::Bulge {
                    x_c: self.circle_center.x,
                    rho_c: self.circle_radius,
                    kappa: self.bulge_curvature(),
                },
                1,
                2,
            ),
        ]
    }

    /// Point of the singular circle at azimuth φ.
    pub fn circle_point(&self, phi: f64) -> Vec3 {
        self.circle_center + self.circle_radius * Vec3::new(0.0, phi.cos(), phi.sin())
    }

    /// Placement (pure translation) that puts the circle point at azimuth
    /// −90° on the origin, with the symmetry axis along x.
    pub fn circle_through_origin(&self) -> Placement {
        Placement::translation(-self.circle_point(-0.5 * PI))
    }

    /// Unit tangents of the three interfaces' meridians at the circle,
    /// pointing away from it into each sheet (cap 1, cap 2, middle).
    pub fn circle_tangents(&self) -> [Vec3; 3] {
        let mut out = [Vec3::zeros(); 3];
        for (k, (profile, _, _)) in self.profiles().iter().enumerate() {
            let (dx, drho) = profile.meridian_derivative(1.0);
            // Moving towards τ = 0 leaves the circle.
            out[k] = -Vec3::new(dx, drho, 0.0).normalize();
        }
        out
    }

    /// The three dihedral angles at the circle (radians).
    pub fn dihedral_angles(&self) -> [f64; 3] {
        let [a, b, c] = self.circle_tangents();
        let angle = |u: Vec3, v: Vec3| u.dot(&v).clamp(-1.0, 1.0).acos();
        [angle(a, b), angle(b, c), angle(c, a)]
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        double_bubble_geometry(self.r1 * lambda, self.r2 * lambda)
    }

    /// Euclidean volumes of the two regions (closed-form sums of spherical
    /// caps).
    pub fn euclidean_volumes(&self) -> [f64; 2] {
        let cap = |r: f64, h: f64| PI * h * h * (3.0 * r - h) / 3.0;
        let x_c = self.circle_center.x;
        let d = self.center_distance;
        let outer1 = cap(self.r1, self.r1 + x_c);
        let outer2 = cap(self.r2, self.r2 + d - x_c);
        let lens = match (self.bulge_radius, self.bulge_center_x) {
            (BulgeRadius::Radius(rb), Some(_)) => cap(rb, rb - (rb * rb - self.circle_radius.powi(2)).sqrt()),
            _ => 0.0,
        };
        if self.bulge_curvature() > 0.0 {
            [outer1 - lens, outer2 + lens]
        } else {
            [outer1 + lens, outer2 - lens]
        }
    }
}
