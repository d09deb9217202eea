//! Post-hoc metrics for evolved clusters: junction angles, generalized mean
//! curvature, distances of the singular locus to the origin, and scaling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};

use crate::density::{Density, DensityError};
use crate::mesh::{ClusterMesh, EdgeKey, FacetId, RegionId, VertexId};
use crate::Vec3;

/// `cos⁻¹(−1/3)` in degrees: the angle between singular curves at a
/// tetrahedral junction.
pub fn tetrahedral_angle_degrees() -> f64 {
    (-1.0f64 / 3.0).acos().to_degrees()
}

/// Deviations (degrees) of a family of angles from their ideal value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AngleStats {
    pub count: usize,
    pub mean_deviation: f64,
    pub max_deviation: f64,
}

impl AngleStats {
    fn from_deviations(devs: &[f64]) -> Self {
        if devs.is_empty() {
            return AngleStats::default();
        }
        AngleStats {
            count: devs.len(),
            mean_deviation: devs.iter().sum::<f64>() / devs.len() as f64,
            max_deviation: devs.iter().cloned().fold(0.0, f64::max),
        }
    }
}

/// Tangent of one sheet at a singular edge, perpendicular to the edge.
///
/// The chord to the opposite vertex tilts away from the true tangent by
/// about half the normal curvature times the facet height, so the sheet is
/// fitted by a quadric `m = c0 + c1 s + c2 t + c3 s² + c4 s t + c5 t²` over
/// its two-ring in the frame (edge direction `t`, chord direction `s`,
/// normal `m`), and the tangent is read off as `s + c1 m`. Too few
/// samples leave the chord direction.
fn sheet_tangent(mesh: &ClusterMesh, vf: &[Vec<FacetId>], edge: EdgeKey, f: FacetId, mid: &Vec3, t: &Vec3) -> Option<Vec3> {
    let facet = &mesh.facets()[f as usize];
    let interface = facet.interface();
    let o = facet.opposite(edge)?;
    let w = mesh.position(o) - mid;
    let s_dir = (w - w.dot(t) * t).normalize();
    let m_dir = t.cross(&s_dir);

    let mut ring: BTreeSet<VertexId> = [edge.0, edge.1, o].into_iter().collect();
    for _ in 0..2 {
        let grown: Vec<VertexId> = ring
            .iter()
            .flat_map(|&v| vf[v as usize].iter())
            .map(|&g| &mesh.facets()[g as usize])
            .filter(|g| g.interface() == interface)
            .flat_map(|g| g.vertices)
            .collect();
        ring.extend(grown);
    }
    if ring.len() < 9 {
        return Some(s_dir);
    }
    let rows = ring.len();
    let mut a = DMatrix::zeros(rows, 6);
    let mut b = DVector::zeros(rows);
    for (r, &v) in ring.iter().enumerate() {
        let d = mesh.position(v) - mid;
        let (ts, ss) = (d.dot(t), d.dot(&s_dir));
        for (c, value) in [1.0, ss, ts, ss * ss, ss * ts, ts * ts].into_iter().enumerate() {
            a[(r, c)] = value;
        }
        b[r] = d.dot(&m_dir);
    }
    let fit = a.svd(true, true).solve(&b, 1e-12).ok()?;
    Some((s_dir + fit[1] * m_dir).normalize())
}

fn sheet_angles_with(mesh: &ClusterMesh, vf: &[Vec<FacetId>], edge: EdgeKey) -> Option<[f64; 3]> {
    let e = mesh.edge(edge)?;
    if e.incidence() != 3 {
        return None;
    }
    let a = mesh.position(edge.0);
    let b = mesh.position(edge.1);
    let t = (b - a).normalize();
    let mid = (a + b) / 2.0;
    let mut dirs = Vec::with_capacity(3);
    for &f in &e.facets {
        let d = sheet_tangent(mesh, vf, edge, f, &mid, &t)?;
        dirs.push((d - d.dot(&t) * t).normalize());
    }
    let e1 = dirs[0];
    let e2 = t.cross(&e1);
    let mut theta: Vec<f64> = dirs
        .iter()
        .map(|w| w.dot(&e2).atan2(w.dot(&e1)).rem_euclid(2.0 * std::f64::consts::PI))
        .collect();
    theta.sort_by(f64::total_cmp);
    let full = 2.0 * std::f64::consts::PI;
    Some([theta[1] - theta[0], theta[2] - theta[1], full - (theta[2] - theta[0])].map(f64::to_degrees))
}

/// The three angles (degrees, summing to 360) between the sheets meeting at
/// a singular edge, measured in the plane perpendicular to the edge.
pub fn sheet_angles(mesh: &ClusterMesh, edge: EdgeKey) -> Option<[f64; 3]> {
    sheet_angles_with(mesh, &mesh.vertex_facets(), edge)
}

/// Deviation from 120° of every sheet angle along the singular edges.
pub fn junction_angles(mesh: &ClusterMesh) -> AngleStats {
    let vf = mesh.vertex_facets();
    let devs: Vec<f64> = mesh
        .singular_edges()
        .into_iter()
        .filter_map(|e| sheet_angles_with(mesh, &vf, e))
        .flat_map(|angles| angles.map(|a| (a - 120.0).abs()))
        .collect();
    AngleStats::from_deviations(&devs)
}

/// Deviation from `cos⁻¹(−1/3)` of the angles between the singular edges
/// leaving each singular vertex.
pub fn quad_angles(mesh: &ClusterMesh) -> AngleStats {
    let singular = mesh.singular_edges();
    let mut out_edges: BTreeMap<VertexId, Vec<Vec3>> = BTreeMap::new();
    for e in &singular {
        let d = mesh.position(e.1) - mesh.position(e.0);
        out_edges.entry(e.0).or_default().push(d.normalize());
        out_edges.entry(e.1).or_default().push(-d.normalize());
    }
    let ideal = tetrahedral_angle_degrees();
    let mut devs = Vec::new();
    for v in mesh.singular_vertices() {
        let dirs = &out_edges[&v];
        for i in 0..dirs.len() {
            for j in (i + 1)..dirs.len() {
                let angle = dirs[i].dot(&dirs[j]).clamp(-1.0, 1.0).acos().to_degrees();
                devs.push((angle - ideal).abs());
            }
        }
    }
    AngleStats::from_deviations(&devs)
}

/// H_ψ statistics on one interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceCurvature {
    pub interface: (RegionId, RegionId),
    pub vertices: usize,
    pub mean: f64,
    pub std_dev: f64,
}

impl InterfaceCurvature {
    /// `std / |mean|`.
    pub fn relative_spread(&self) -> f64 {
        self.std_dev / self.mean.abs()
    }
}

fn cot(u: &Vec3, v: &Vec3) -> f64 {
    u.dot(v) / u.cross(v).norm()
}

/// Per-vertex generalized mean curvature `H_ψ = H − ⟨∇ψ, N⟩` on the interior
/// vertices of every interface.
///
/// `H` comes from the cotangent formula with mixed Voronoi areas and is the
/// sum of principal curvatures, signed so that a round sphere is positive
/// when `N` points inward. `N` is the interface normal of the mesh
/// convention (from the lower into the higher region), averaged over the
/// vertex star with area weights. Vertices on singular curves and vertices
/// whose star spans several interfaces are skipped.
pub fn vertex_curvatures(mesh: &ClusterMesh, density: &Density) -> Result<Vec<(VertexId, (RegionId, RegionId), f64)>, DensityError> {
    let vf = mesh.vertex_facets();
    let degree = mesh.singular_degree();
    let mut out = Vec::new();
    for (v, star) in vf.iter().enumerate() {
        if star.is_empty() || degree[v] > 0 {
            continue;
        }
        let interface = mesh.facets()[star[0] as usize].interface();
        if star.iter().any(|&f| mesh.facets()[f as usize].interface() != interface) {
            continue;
        }
        let x = mesh.position(v as VertexId);
        let mut k = Vec3::zeros();
        let mut area = 0.0;
        let mut normal = Vec3::zeros();
        for &f in star {
            let facet = &mesh.facets()[f as usize];
            let i = facet.vertices.iter().position(|&w| w as usize == v).unwrap();
            let q = mesh.position(facet.vertices[(i + 1) % 3]);
            let r = mesh.position(facet.vertices[(i + 2) % 3]);
            let (cot_q, cot_r) = (cot(&(x - q), &(r - q)), cot(&(x - r), &(q - r)));
            k += cot_r * (x - q) + cot_q * (x - r);
            let tri = 0.5 * (q - x).cross(&(r - x)).norm();
            normal += (q - x).cross(&(r - x));
            let obtuse_at_x = (q - x).dot(&(r - x)) < 0.0;
            let obtuse_elsewhere = (x - q).dot(&(r - q)) < 0.0 || (x - r).dot(&(q - r)) < 0.0;
            area += if obtuse_at_x {
                tri / 2.0
            } else if obtuse_elsewhere {
                tri / 4.0
            } else {
                ((x - q).norm_squared() * cot_r + (x - r).norm_squared() * cot_q) / 8.0
            };
        }
        let n = normal.normalize();
        let k = k / (2.0 * area);
        // k is the mean-curvature normal, (κ1 + κ2) times the outward normal
        // of a convex surface; n points inward there.
        let h = -k.dot(&n);
        let grad_psi = density.log_gradient(&x)?;
        out.push((v as VertexId, interface, h - grad_psi.dot(&n)));
    }
    Ok(out)
}

/// Interface-wise mean and standard deviation of `H_ψ`.
pub fn generalized_curvature(mesh: &ClusterMesh, density: &Density) -> Result<Vec<InterfaceCurvature>, DensityError> {
    let mut groups: BTreeMap<(RegionId, RegionId), Vec<f64>> = BTreeMap::new();
    for (_, interface, h) in vertex_curvatures(mesh, density)? {
        groups.entry(interface).or_default().push(h);
    }
    Ok(groups
        .into_iter()
        .map(|(interface, hs)| {
            let n = hs.len() as f64;
            let mean = hs.iter().sum::<f64>() / n;
            let var = hs.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / n;
            InterfaceCurvature { interface, vertices: hs.len(), mean, std_dev: var.sqrt() }
        })
        .collect())
}

/// Closest point of segment `[a, b]` to the origin, as a distance.
pub fn origin_segment_distance(a: &Vec3, b: &Vec3) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    let t = if len2 > 0.0 { (-a.dot(&d) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (a + t * d).norm()
}

/// Distance from the origin to triangle `abc`.
pub fn origin_triangle_distance(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let n = (b - a).cross(&(c - a));
    let nn = n.norm_squared();
    if nn > 0.0 {
        // Project the origin onto the plane and test the barycentrics.
        let p = n * (a.dot(&n) / nn);
        let inside = [(a, b), (b, c), (c, a)].iter().all(|(u, v)| (*v - *u).cross(&(p - *u)).dot(&n) >= 0.0);
        if inside {
            return p.norm();
        }
    }
    origin_segment_distance(a, b)
        .min(origin_segment_distance(b, c))
        .min(origin_segment_distance(c, a))
}

/// Distances of the nearest singular-curve point, singular vertex and
/// surface point to the origin (`None` when the mesh has no such feature).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OriginContact {
    pub singular_curve: Option<f64>,
    pub singular_vertex: Option<f64>,
    pub surface: f64,
}

pub fn origin_contact(mesh: &ClusterMesh) -> OriginContact {
    let singular_curve = mesh
        .singular_edges()
        .iter()
        .map(|e| origin_segment_distance(&mesh.position(e.0), &mesh.position(e.1)))
        .reduce(f64::min);
    let singular_vertex = mesh.singular_vertices().iter().map(|&v| mesh.position(v).norm()).reduce(f64::min);
    let surface = (0..mesh.facet_count())
        .map(|f| {
            let [a, b, c] = mesh.triangle(f as u32);
            origin_triangle_distance(&a, &b, &c)
        })
        .fold(f64::INFINITY, f64::min);
    OriginContact { singular_curve, singular_vertex, surface }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingCheck {
    pub lambda: f64,
    pub area_ratio: f64,
    pub volume_ratios: Vec<f64>,
}

impl ScalingCheck {
    /// Largest relative deviation from the exact ratios λ^{p+2}, λ^{p+3}.
    pub fn max_relative_error(&self, p: f64) -> f64 {
        let a = self.lambda.powf(p + 2.0);
        let v = self.lambda.powf(p + 3.0);
        self.volume_ratios
            .iter()
            .map(|r| (r / v - 1.0).abs())
            .fold((self.area_ratio / a - 1.0).abs(), f64::max)
    }
}

/// Ratios of the functionals after and before scaling all positions by λ.
pub fn scaling_check(mesh: &ClusterMesh, density: &Density, lambda: f64) -> ScalingCheck {
    let scaled = mesh.scaled(lambda);
    let v0 = density.region_volumes(mesh);
    let v1 = density.region_volumes(&scaled);
    ScalingCheck {
        lambda,
        area_ratio: density.weighted_area(&scaled) / density.weighted_area(mesh),
        volume_ratios: v1.iter().zip(&v0).map(|(b, a)| b / a).collect(),
    }
}

/// Least-squares sphere through a point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereFit {
    pub center: Vec3,
    pub radius: f64,
    /// `max distance / min distance − 1` over the points.
    pub sphericity_error: f64,
}

/// Fits `|x|² = 2 c·x + k` in the least-squares sense.
pub fn fit_sphere(points: &[Vec3]) -> SphereFit {
    let mut ata = Matrix4::zeros();
    let mut atb = Vector4::zeros();
    for x in points {
        let row = Vector4::new(2.0 * x.x, 2.0 * x.y, 2.0 * x.z, 1.0);
        ata += row * row.transpose();
        atb += row * x.norm_squared();
    }
    let sol = ata.lu().solve(&atb).unwrap_or_else(Vector4::zeros);
    let center = Vec3::new(sol[0], sol[1], sol[2]);
    let radius = (sol[3] + center.norm_squared()).max(0.0).sqrt();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for x in points {
        let d = (x - center).norm();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    SphereFit { center, radius, sphericity_error: hi / lo - 1.0 }
}

/// Pairwise distances between singular vertices.
pub fn vertex_separations(mesh: &ClusterMesh) -> Vec<f64> {
    let sv = mesh.singular_vertices();
    let mut out = Vec::new();
    for i in 0..sv.len() {
        for j in (i + 1)..sv.len() {
            out.push((mesh.position(sv[i]) - mesh.position(sv[j])).norm());
        }
    }
    out
}

/// Everything the scenario runner reports about a final mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub p: f64,
    pub epsilon: f64,
    pub target_volumes: Vec<f64>,
    pub weighted_area: f64,
    pub euclidean_area: f64,
    pub weighted_volumes: Vec<f64>,
    pub diameter: f64,
    pub vertices: usize,
    pub facets: usize,
    pub junction: AngleStats,
    pub quad: AngleStats,
    pub origin: OriginContact,
    pub curvature: Vec<InterfaceCurvature>,
    pub vertex_separation: Vec<f64>,
    /// Free-form run information appended after the geometric metrics
    /// (stop reason, step counts, ...).
    pub run: Vec<(String, String)>,
}

impl MetricsReport {
    pub fn compute(mesh: &ClusterMesh, density: &Density) -> Result<Self, DensityError> {
        Ok(MetricsReport {
            p: density.p,
            epsilon: density.epsilon,
            target_volumes: mesh.targets(),
            weighted_area: density.weighted_area(mesh),
            euclidean_area: mesh.euclidean_area(),
            weighted_volumes: density.region_volumes(mesh),
            diameter: mesh.diameter(),
            vertices: mesh.vertex_count(),
            facets: mesh.facet_count(),
            junction: junction_angles(mesh),
            quad: quad_angles(mesh),
            origin: origin_contact(mesh),
            curvature: generalized_curvature(mesh, density)?,
            vertex_separation: vertex_separations(mesh),
            run: Vec::new(),
        })
    }

    /// `(key, value)` rows in their fixed output order.
    pub fn rows(&self) -> Vec<(String, String)> {
        let mut rows: Vec<(String, String)> = Vec::new();
        let mut put = |k: String, v: String| rows.push((k, v));
        let num = |x: f64| format!("{x:.17e}");
        let opt = |x: Option<f64>| x.map(num).unwrap_or_else(|| "nan".into());
        put("p".into(), num(self.p));
        put("epsilon".into(), num(self.epsilon));
        put("regions".into(), self.target_volumes.len().to_string());
        for (i, v) in self.target_volumes.iter().enumerate() {
            put(format!("target_volume_{}", i + 1), num(*v));
        }
        put("weighted_area".into(), num(self.weighted_area));
        put("euclidean_area".into(), num(self.euclidean_area));
        for (i, v) in self.weighted_volumes.iter().enumerate() {
            put(format!("weighted_volume_{}", i + 1), num(*v));
        }
        put("diameter".into(), num(self.diameter));
        put("vertices".into(), self.vertices.to_string());
        put("facets".into(), self.facets.to_string());
        put("junction_edges".into(), (self.junction.count / 3).to_string());
        put("junction_mean_deviation_deg".into(), num(self.junction.mean_deviation));
        put("junction_max_deviation_deg".into(), num(self.junction.max_deviation));
        put("quad_angles".into(), self.quad.count.to_string());
        put("quad_mean_deviation_deg".into(), num(self.quad.mean_deviation));
        put("quad_max_deviation_deg".into(), num(self.quad.max_deviation));
        put("origin_distance_singular_curve".into(), opt(self.origin.singular_curve));
        put("origin_distance_singular_vertex".into(), opt(self.origin.singular_vertex));
        put("origin_distance_surface".into(), num(self.origin.surface));
        for c in &self.curvature {
            let tag = format!("{}_{}", c.interface.0, c.interface.1);
            put(format!("curvature_{tag}_mean"), num(c.mean));
            put(format!("curvature_{tag}_std"), num(c.std_dev));
        }
        for (i, s) in self.vertex_separation.iter().enumerate() {
            put(format!("vertex_separation_{}", i + 1), num(*s));
        }
        for (k, v) in &self.run {
            put(k.clone(), v.clone());
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        for (k, v) in self.rows() {
            let _ = writeln!(out, "{k},{v}");
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "density r^{} (epsilon {})", self.p, self.epsilon);
        let _ = writeln!(out, "weighted area    {:.8}", self.weighted_area);
        let _ = writeln!(out, "euclidean area   {:.8}", self.euclidean_area);
        for (i, (v, t)) in self.weighted_volumes.iter().zip(&self.target_volumes).enumerate() {
            let _ = writeln!(out, "volume {}         {:.8} (target {})", i + 1, v, t);
        }
        let _ = writeln!(out, "diameter         {:.6}", self.diameter);
        let _ = writeln!(out, "mesh             {} vertices, {} facets", self.vertices, self.facets);
        if self.junction.count > 0 {
            let _ = writeln!(
                out,
                "junction angles  mean |θ−120°| {:.3}°, max {:.3}°",
                self.junction.mean_deviation, self.junction.max_deviation
            );
        }
        if self.quad.count > 0 {
            let _ = writeln!(
                out,
                "quad angles      mean |θ−109.47°| {:.3}°, max {:.3}°",
                self.quad.mean_deviation, self.quad.max_deviation
            );
        }
        let show = |x: Option<f64>| x.map(|d| format!("{d:.6}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "origin distance  curve {}, vertex {}, surface {:.6}",
            show(self.origin.singular_curve),
            show(self.origin.singular_vertex),
            self.origin.surface
        );
        for c in &self.curvature {
            let _ = writeln!(
                out,
                "H_psi {}|{}        mean {:.6}, std {:.6} ({} vertices)",
                c.interface.0, c.interface.1, c.mean, c.std_dev, c.vertices
            );
        }
        if !self.vertex_separation.is_empty() {
            let seps: Vec<String> = self.vertex_separation.iter().map(|s| format!("{s:.6}")).collect();
            let _ = writeln!(out, "vertex separation {}", seps.join(", "));
        }
        for (k, v) in &self.run {
            let _ = writeln!(out, "{k:<16} {v}");
        }
        out
    }
}

/// Parses a `key,value` metrics file into an ordered map.
pub fn parse_metrics_csv(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("key,value") {
        return Err("missing 'key,value' header".into());
    }
    let mut map = BTreeMap::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line.split_once(',').ok_or_else(|| format!("line {}: expected key,value", n + 2))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}
