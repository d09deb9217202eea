//! Weighted area and volume of exact (curved) interfaces by adaptive
//! quadrature, used as ground truth for the polyhedral functionals.

use std::f64::consts::PI;

use super::geometry::{DoubleBubbleGeometry, Placement, Profile};
use super::quadrature::integrate_2d;
use crate::density::Density;
use crate::Vec3;

/// Relative tolerance requested from the quadrature.
pub const ORACLE_REL_TOL: f64 = 1e-9;

fn density(p: f64) -> Density {
    Density { p, epsilon: 0.0 }
}

/// `∫ f dA` over a placed axisymmetric patch.
pub fn patch_weighted_area(profile: &Profile, placement: &Placement, p: f64) -> f64 {
    let f = density(p);
    integrate_2d(
        |tau, phi| f.value(&placement.apply(&profile.point(tau, phi))) * profile.area_vector(tau, phi).norm(),
        (0.0, 1.0),
        (0.0, 2.0 * PI),
        ORACLE_REL_TOL,
    )
}

/// `∫ f (x · n) dA` over a placed patch, with `n` the parametrisation normal
/// `∂P/∂τ × ∂P/∂φ`.
pub fn patch_weighted_flux(profile: &Profile, placement: &Placement, p: f64) -> f64 {
    let f = density(p);
    integrate_2d(
        |tau, phi| {
            let x = placement.apply(&profile.point(tau, phi));
            let n = placement.apply_vector(&profile.area_vector(tau, phi));
            f.value(&x) * x.dot(&n)
        },
        (0.0, 1.0),
        (0.0, 2.0 * PI),
        ORACLE_REL_TOL,
    )
}

/// +1 if the parametrisation normal of `profile` points from the lower into
/// the higher region, for the interfaces produced by this module.
fn normal_sign(profile: &Profile) -> f64 {
    match *profile {
        // The area vector points towards the centre when sigma = −1, and
        // outer caps have the bubble (higher label) inside.
        Profile::SphereZone { sigma, .. } => -sigma,
        // Always has positive x-component: from region 1 into region 2.
        Profile::Bulge { .. } => 1.0,
    }
}

/// Weighted area of the exact double bubble under `placement`.
///
/// `placement` acts on the canonical frame of [`DoubleBubbleGeometry`].
pub fn oracle_weighted_area(geometry: &DoubleBubbleGeometry, placement: &Placement, p: f64) -> f64 {
    geometry
        .profiles()
        .iter()
        .map(|(profile, _, _)| patch_weighted_area(profile, placement, p))
        .sum()
}

/// Weighted volumes of the two regions of the exact double bubble.
pub fn oracle_weighted_volumes(geometry: &DoubleBubbleGeometry, placement: &Placement, p: f64) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (profile, lo, hi) in geometry.profiles() {
        let flux = normal_sign(&profile) * patch_weighted_flux(&profile, placement, p) / (p + 3.0);
        if lo > 0 {
            out[lo as usize - 1] += flux;
        }
        out[hi as usize - 1] -= flux;
    }
    out
}

fn sphere_profile(radius: f64) -> Profile {
    Profile::SphereZone { center_x: 0.0, radius, sigma: 1.0, theta0: 0.0, theta1: PI }
}

/// `(weighted area, weighted volume)` of the round sphere of `radius`
/// centred at `center`.
pub fn sphere_oracle(radius: f64, center: Vec3, p: f64) -> (f64, f64) {
    let profile = sphere_profile(radius);
    let placement = Placement::translation(center);
    let area = patch_weighted_area(&profile, &placement, p);
    // sigma = +1: the area vector points outward.
    let volume = patch_weighted_flux(&profile, &placement, p) / (p + 3.0);
    (area, volume)
}

/// Radius of the sphere through the origin with weighted volume `volume`.
///
/// The weighted volume of such a sphere is `c·R^{p+3}`; `c` is measured once
/// at `R = 1` with the quadrature oracle.
pub fn sphere_through_origin_radius(volume: f64, p: f64) -> f64 {
    let (_, unit) = sphere_oracle(1.0, Vec3::x(), p);
    (volume / unit).powf(1.0 / (p + 3.0))
}

/// One row of the placement scan of the equal double bubble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSample {
    /// Distance of the origin from the axis, in units of the circle radius;
    /// 1 means the singular circle passes through the origin.
    pub offset: f64,
    pub weighted_area: f64,
    pub weighted_volume: f64,
    /// `A / V^{(p+2)/(p+3)}`, the energy after rescaling to a fixed total
    /// weighted volume.
    pub normalized_area: f64,
}

/// Scans the origin across the symmetry plane of the equal double bubble of
/// unit radius, from the disk centre (`offset = 0`) out to `max_offset`
/// circle radii.
pub fn placement_scan(p: f64, step: f64, max_offset: f64) -> Vec<ScanSample> {
    let g = super::geometry::double_bubble_geometry(1.0, 1.0);
    let n = (max_offset / step).round() as usize;
    (0..=n)
        .map(|k| {
            let offset = k as f64 * step;
            let origin = g.circle_center - Vec3::new(0.0, 0.0, offset * g.circle_radius);
            let placement = Placement::translation(-origin);
            let a = oracle_weighted_area(&g, &placement, p);
            let v: f64 = oracle_weighted_volumes(&g, &placement, p).iter().sum();
            ScanSample {
                offset,
                weighted_area: a,
                weighted_volume: v,
                normalized_area: a / v.powf((p + 2.0) / (p + 3.0)),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::geometry::double_bubble_geometry;
    use approx::assert_relative_eq;

    #[test]
    fn equal_double_bubble_euclidean_area() {
        let g = double_bubble_geometry(1.0, 1.0);
        // Caps: 2πr²(1 + cos θ) with cos θ = 1/2 for the outer polar angle
        // 120°; disk: π (√3/2)².
        let expected = 2.0 * 2.0 * PI * 1.5 + PI * 0.75;
        assert_relative_eq!(oracle_weighted_area(&g, &Placement::identity(), 0.0), expected, max_relative = 1e-10);
    }

    #[test]
    fn euclidean_volumes_match_closed_form() {
        for (r1, r2) in [(1.0, 1.0), (2.0, 1.0), (0.6, 1.7)] {
            let g = double_bubble_geometry(r1, r2);
            let v = oracle_weighted_volumes(&g, &Placement::identity(), 0.0);
            let e = g.euclidean_volumes();
            assert_relative_eq!(v[0], e[0], max_relative = 1e-9);
            assert_relative_eq!(v[1], e[1], max_relative = 1e-9);
        }
    }

    #[test]
    fn ball_through_origin_p2() {
        let r: f64 = 1.3;
        let (a, v) = sphere_oracle(r, Vec3::new(0.0, r, 0.0), 2.0);
        // |c + y|² integrated over the sphere / ball.
        assert_relative_eq!(a, 8.0 * PI * r.powi(4), max_relative = 1e-9);
        assert_relative_eq!(v, 32.0 * PI * r.powi(5) / 15.0, max_relative = 1e-9);
    }

    #[test]
    fn centred_sphere() {
        let (a, v) = sphere_oracle(2.0, Vec3::zeros(), 3.0);
        assert_relative_eq!(a, 4.0 * PI * 2f64.powi(5), max_relative = 1e-9);
        assert_relative_eq!(v, 4.0 * PI * 2f64.powi(6) / 6.0, max_relative = 1e-9);
    }
}
