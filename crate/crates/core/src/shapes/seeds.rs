//! Seed triangulations in canonical frame.
//!
//! Each constructor takes the free size parameters of its family (sphere
//! radii) and returns the builder together with the canonical placement that
//! puts the conjectured contact locus on the origin.

use std::f64::consts::PI;

use super::builder::{hex_disk, icosphere, MeshBuilder};
use super::geometry::{double_bubble_geometry, Placement, Profile};
use super::ShapeError;
use crate::mesh::VertexId;
use crate::Vec3;

/// Generic rotation applied to the icosphere so that no vertex sits on the
/// coordinate axes.
const ICOSPHERE_TILT: [f64; 3] = [0.31, -0.17, 0.23];

/// Fraction of one azimuthal step by which surfaces of revolution are turned,
/// so the circle point on the origin falls between two vertices.
const AZIMUTH_OFFSET: f64 = 0.3;

pub struct Seed {
    pub builder: MeshBuilder,
    pub regions: usize,
    pub canonical: Placement,
}

pub fn single(radius: f64, level: u32) -> Seed {
    let (verts, faces) = icosphere(level);
    let tilt = nalgebra::Rotation3::new(Vec3::from(ICOSPHERE_TILT));
    let center = Vec3::new(radius, 0.0, 0.0);
    let mut b = MeshBuilder::default();
    for v in &verts {
        b.vertex(center + radius * (tilt * v));
    }
    for f in faces {
        b.triangle(f, 0, 1, |x| center - x);
    }
    Seed { builder: b, regions: 1, canonical: Placement::identity() }
}

fn shift(profile: Profile, dx: f64) -> Profile {
    match profile {
        Profile::SphereZone { center_x, radius, sigma, theta0, theta1 } => {
            Profile::SphereZone { center_x: center_x + dx, radius, sigma, theta0, theta1 }
        }
        Profile::Bulge { x_c, rho_c, kappa } => Profile::Bulge { x_c: x_c + dx, rho_c, kappa },
    }
}

struct Revolution {
    rings: usize,
    phi0: f64,
}

impl Revolution {
    fn new(level: u32) -> Self {
        let rings = 1usize << level;
        Revolution { rings, phi0: AZIMUTH_OFFSET * 2.0 * PI / (6 * rings) as f64 }
    }

    fn n(&self) -> usize {
        6 * self.rings
    }

    fn circle(&self, b: &mut MeshBuilder, x: f64, rho: f64) -> Vec<VertexId> {
        (0..self.n())
            .map(|j| {
                let phi = 2.0 * PI * j as f64 / self.n() as f64 + self.phi0;
                b.vertex(Vec3::new(x, rho * phi.cos(), rho * phi.sin()))
            })
            .collect()
    }

    /// Meshes a cap whose τ = 1 rim is `circle`.
    fn cap(
        &self,
        b: &mut MeshBuilder,
        profile: &Profile,
        circle: &[VertexId],
        lo: u16,
        hi: u16,
        into_hi: impl Fn(&Vec3) -> Vec3,
    ) {
        let (pts, tris) = hex_disk(self.rings);
        let rim_start = pts.len() - self.n();
        let ids: Vec<VertexId> = pts
            .iter()
            .enumerate()
            .map(|(i, &(tau, phi))| {
                if i >= rim_start {
                    circle[i - rim_start]
                } else {
                    b.vertex(profile.point(tau, phi + self.phi0))
                }
            })
            .collect();
        for t in tris {
            b.triangle(t.map(|i| ids[i]), lo, hi, &into_hi);
        }
    }

    /// Meshes a sphere zone between two rims (τ = 0 at `first`).
    #[allow(clippy::too_many_arguments)]
    fn band(
        &self,
        b: &mut MeshBuilder,
        profile: &Profile,
        first: &[VertexId],
        last: &[VertexId],
        rows: usize,
        lo: u16,
        hi: u16,
        into_hi: impl Fn(&Vec3) -> Vec3,
    ) {
        let mut grid = vec![first.to_vec()];
        for k in 1..rows {
            let tau = k as f64 / rows as f64;
            grid.push(
                (0..self.n())
                    .map(|j| {
                        let phi = 2.0 * PI * j as f64 / self.n() as f64 + self.phi0;
                        b.vertex(profile.point(tau, phi))
                    })
                    .collect(),
            );
        }
        grid.push(last.to_vec());
        let n = self.n();
        for k in 0..rows {
            for j in 0..n {
                let (a, c) = (grid[k][j], grid[k][(j + 1) % n]);
                let (d, e) = (grid[k + 1][j], grid[k + 1][(j + 1) % n]);
                b.triangle([a, d, c], lo, hi, &into_hi);
                b.triangle([c, d, e], lo, hi, &into_hi);
            }
        }
    }
}

pub fn double(r1: f64, r2: f64, level: u32) -> Seed {
    let g = double_bubble_geometry(r1, r2);
    let rev = Revolution::new(level);
    let mut b = MeshBuilder::default();
    let circle = rev.circle(&mut b, g.circle_center.x, g.circle_radius);
    let [cap1, cap2, wall] = g.profiles();
    let c2 = Vec3::new(g.center_distance, 0.0, 0.0);
    rev.cap(&mut b, &cap1.0, &circle, 0, 1, |x| -x);
    rev.cap(&mut b, &cap2.0, &circle, 0, 2, |x| c2 - x);
    rev.cap(&mut b, &wall.0, &circle, 1, 2, |_| Vec3::x());
    Seed { builder: b, regions: 2, canonical: g.circle_through_origin() }
}

/// Three bubbles in a row along x; region 2 in the middle.
pub fn chain(r: [f64; 3], level: u32) -> Result<Seed, ShapeError> {
    let g12 = double_bubble_geometry(r[0], r[1]);
    let g23 = double_bubble_geometry(r[1], r[2]);
    let d12 = g12.center_distance;
    let (x12, rho12) = (g12.circle_center.x, g12.circle_radius);
    let (x23, rho23) = (d12 + g23.circle_center.x, g23.circle_radius);
    let theta_a = rho12.atan2(d12 - x12);
    let theta_b = rho23.atan2(d12 - x23);
    if !(theta_a < theta_b) {
        return Err(ShapeError::Construction(format!(
            "chain radii {r:?} leave no outer band on the middle bubble"
        )));
    }
    let rev = Revolution::new(level);
    let mut b = MeshBuilder::default();
    let circle12 = rev.circle(&mut b, x12, rho12);
    let circle23 = rev.circle(&mut b, x23, rho23);
    let c2 = Vec3::new(d12, 0.0, 0.0);
    let c3 = Vec3::new(d12 + g23.center_distance, 0.0, 0.0);
    rev.cap(&mut b, &g12.profiles()[0].0, &circle12, 0, 1, |x| -x);
    rev.cap(&mut b, &g12.profiles()[2].0, &circle12, 1, 2, |_| Vec3::x());
    rev.cap(&mut b, &shift(g23.profiles()[2].0, d12), &circle23, 2, 3, |_| Vec3::x());
    rev.cap(&mut b, &shift(g23.profiles()[1].0, d12), &circle23, 0, 3, |x| c3 - x);

    let band = Profile::SphereZone { center_x: d12, radius: r[1], sigma: -1.0, theta0: theta_a, theta1: theta_b };
    let spacing = 2.0 * PI * rho12.max(rho23) / rev.n() as f64;
    let rows = (((theta_b - theta_a) * r[1] / spacing).round() as usize).max(1);
    rev.band(&mut b, &band, &circle12, &circle23, rows, 0, 2, |x| c2 - x);

    let canonical = Placement::translation(-Vec3::new(x12, 0.0, -rho12));
    Ok(Seed { builder: b, regions: 3, canonical })
}

/// Three overlapping spheres cut by their power diagram.
///
/// The pairwise centre distances follow the double-bubble relation
/// `d² = Ri² + Rj² − Ri Rj`; the three radical planes share one axis, which
/// meets every sphere in the two poles `A` and `B`. The walls are flat
/// half-planes bounded by that axis, so the cluster has the combinatorics of
/// the standard triple bubble: four singular curves (the axis and three
/// arcs) joining two singular vertices.
pub fn triple(r: [f64; 3], level: u32) -> Result<Seed, ShapeError> {
    let dist = |i: usize, j: usize| (r[i] * r[i] + r[j] * r[j] - r[i] * r[j]).sqrt();
    let (d12, d13, d23) = (dist(0, 1), dist(0, 2), dist(1, 2));
    let x3 = (d13 * d13 - d23 * d23 + d12 * d12) / (2.0 * d12);
    let y3 = d13 * d13 - x3 * x3;
    if !(y3 > 0.0) {
        return Err(ShapeError::Construction(format!("triple radii {r:?} give collinear centres")));
    }
    let c = [Vec3::zeros(), Vec3::new(d12, 0.0, 0.0), Vec3::new(x3, y3.sqrt(), 0.0)];

    // Radical centre: 2 x·(cj − c1) = |cj|² − |c1|² − Rj² + R1² for j = 2, 3.
    let rhs = |j: usize| c[j].norm_squared() - r[j] * r[j] + r[0] * r[0];
    let m = nalgebra::Matrix2::new(2.0 * c[1].x, 2.0 * c[1].y, 2.0 * c[2].x, 2.0 * c[2].y);
    let sol = m
        .try_inverse()
        .ok_or_else(|| ShapeError::Construction("degenerate triple centres".into()))?
        * nalgebra::Vector2::new(rhs(1), rhs(2));
    let rc = Vec3::new(sol.x, sol.y, 0.0);
    let h2 = r[0] * r[0] - (rc - c[0]).norm_squared();
    if !(h2 > 0.0) {
        return Err(ShapeError::Construction(format!("triple radii {r:?}: spheres share no common circle")));
    }
    let h = h2.sqrt();
    let pole_a = rc + Vec3::new(0.0, 0.0, h);
    let pole_b = rc - Vec3::new(0.0, 0.0, h);

    let dir = |omega: f64| Vec3::new(omega.cos(), omega.sin(), 0.0);
    let pairs = [(0usize, 1usize, 2usize), (0, 2, 1), (1, 2, 0)];
    // Wall (i, j) is the half-plane from the axis in direction u ⊥ ci − cj on
    // the side away from ck.
    let wall_angle: Vec<f64> = pairs
        .iter()
        .map(|&(i, j, k)| {
            let mut u = Vec3::z().cross(&(c[i] - c[j])).normalize();
            if u.dot(&(c[i] - c[k])) < 0.0 {
                u = -u;
            }
            u.y.atan2(u.x)
        })
        .collect();
    let wall_of = |i: usize, j: usize| pairs.iter().position(|&(a, b, _)| (a, b) == (i.min(j), i.max(j))).unwrap();

    // Point of sphere i's outer arc in the pencil plane of direction ω.
    let arc_point = |i: usize, omega: f64, t: f64| {
        let u = dir(omega);
        let y_c = (c[i] - rc).dot(&u);
        let rho = (h2 + y_c * y_c).sqrt();
        let beta_a = (-y_c).atan2(h);
        let beta = beta_a + t * (PI - 2.0 * beta_a);
        rc + rho * beta.cos() * Vec3::z() + (y_c + rho * beta.sin()) * u
    };

    let rows = 1usize << (level + 2);
    let spacing = PI * r.iter().cloned().fold(f64::INFINITY, f64::min) / rows as f64;
    let mut b = MeshBuilder::default();
    let va = b.vertex(pole_a);
    let vb = b.vertex(pole_b);
    let curve = |b: &mut MeshBuilder, f: &dyn Fn(f64) -> Vec3| -> Vec<VertexId> {
        let mut out = vec![va];
        for k in 1..rows {
            out.push(b.vertex(f(k as f64 / rows as f64)));
        }
        out.push(vb);
        out
    };
    let axis = curve(&mut b, &|t| rc + h * (1.0 - 2.0 * t) * Vec3::z());
    let arcs: Vec<Vec<VertexId>> = pairs
        .iter()
        .zip(&wall_angle)
        .map(|(&(i, _, _), &omega)| curve(&mut b, &|t| arc_point(i, omega, t)))
        .collect();

    // Interior points of a row between two boundary vertices.
    let fill_row = |b: &mut MeshBuilder, from: VertexId, to: VertexId, f: &dyn Fn(f64) -> Vec3| {
        let (p, q) = (b.positions[from as usize], b.positions[to as usize]);
        let samples = 16;
        let len: f64 = (0..samples)
            .map(|s| (f((s + 1) as f64 / samples as f64) - f(s as f64 / samples as f64)).norm())
            .sum::<f64>()
            .max((q - p).norm());
        let segments = ((len / spacing).round() as usize).max(1);
        let mut row = vec![from];
        for s in 1..segments {
            row.push(b.vertex(f(s as f64 / segments as f64)));
        }
        row.push(to);
        row
    };

    // Walls.
    for (w, &(i, j, _)) in pairs.iter().enumerate() {
        let (ci, cj) = (c[i], c[j]);
        let into_hi = move |_: &Vec3| cj - ci;
        let mut prev = vec![va];
        for k in 1..=rows {
            let row = if k == rows {
                vec![vb]
            } else {
                let (p, q) = (b.positions[axis[k] as usize], b.positions[arcs[w][k] as usize]);
                fill_row(&mut b, axis[k], arcs[w][k], &|s| p + s * (q - p))
            };
            b.zipper(&prev, &row, (i + 1) as u16, (j + 1) as u16, &into_hi);
            prev = row;
        }
    }

    // Outer patches.
    for i in 0..3 {
        let others: Vec<usize> = (0..3).filter(|&k| k != i).collect();
        let (j, k) = (others[0], others[1]);
        let (mut w0, mut w1) = (wall_of(i, j), wall_of(i, k));
        let mut start = wall_angle[w0];
        let mut sweep = (wall_angle[w1] - start).rem_euclid(2.0 * PI);
        let mid = dir(start + 0.5 * sweep);
        if mid.dot(&(c[i] - c[j])) <= 0.0 || mid.dot(&(c[i] - c[k])) <= 0.0 {
            std::mem::swap(&mut w0, &mut w1);
            start = wall_angle[w0];
            sweep = (wall_angle[w1] - start).rem_euclid(2.0 * PI);
        }
        let ci = c[i];
        let into_hi = move |x: &Vec3| ci - x;
        let mut prev = vec![va];
        for t in 1..=rows {
            let row = if t == rows {
                vec![vb]
            } else {
                let tt = t as f64 / rows as f64;
                fill_row(&mut b, arcs[w0][t], arcs[w1][t], &|s| arc_point(i, start + s * sweep, tt))
            };
            b.zipper(&prev, &row, 0, (i + 1) as u16, &into_hi);
            prev = row;
        }
    }

    Ok(Seed { builder: b, regions: 3, canonical: Placement::translation(-pole_a) })
}
