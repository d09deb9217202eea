//! Local remeshing: 1→4 refinement, equiangulation by edge flips, and
//! short-edge collapse.

use std::collections::{HashMap, HashSet};

use super::{ClusterMesh, EdgeKey, Facet, FacetId, MeshError, VertexId};
use crate::Vec3;

/// Splits every facet at its edge midpoints into four.
///
/// Existing vertices keep their ids; one new vertex per edge is appended in
/// edge-index order. Facet `i` becomes facets `4i..4i+4`.
pub fn refine(mesh: &ClusterMesh) -> ClusterMesh {
    let mut positions = mesh.positions().to_vec();
    let base = positions.len() as VertexId;
    for e in mesh.edges() {
        positions.push(0.5 * (mesh.position(e.key.0) + mesh.position(e.key.1)));
    }
    let mid = |a: VertexId, b: VertexId| -> VertexId {
        let key = EdgeKey::new(a, b);
        base + mesh.edge_lookup[&key] as VertexId
    };
    let mut facets = Vec::with_capacity(mesh.facet_count() * 4);
    for f in mesh.facets() {
        let [a, b, c] = f.vertices;
        let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
        for vs in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
            facets.push(Facet::new(vs, f.back, f.front));
        }
    }
    ClusterMesh::build(positions, facets, mesh.regions().to_vec())
        .expect("midpoint subdivision preserves mesh validity")
}

fn triangle_angles(a: &Vec3, b: &Vec3, c: &Vec3) -> [f64; 3] {
    let corner = |p: &Vec3, q: &Vec3, r: &Vec3| {
        let u = q - p;
        let v = r - p;
        u.cross(&v).norm().atan2(u.dot(&v))
    };
    [corner(a, b, c), corner(b, c, a), corner(c, a, b)]
}

fn min_angle(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let [x, y, z] = triangle_angles(a, b, c);
    x.min(y).min(z)
}

fn raw_normal(p: &[Vec3], f: [VertexId; 3]) -> Vec3 {
    let [a, b, c] = f.map(|v| p[v as usize]);
    (b - a).cross(&(c - a))
}

/// Flips interior manifold edges while the flip strictly increases the
/// smallest of the affected triangle angles.
///
/// Only edges with two incident facets of the same interface are candidates;
/// singular edges are never touched. The quad must be nearly planar
/// (dihedral below 60°) and the flip must not fold either new triangle.
/// The total number of flips is capped at ten times the edge count.
pub fn equiangulate(mesh: &ClusterMesh) -> ClusterMesh {
    let positions = mesh.positions();
    let mut facets = mesh.facets().to_vec();
    let mut edge_facets: HashMap<EdgeKey, Vec<FacetId>> =
        mesh.edges().iter().map(|e| (e.key, e.facets.clone())).collect();
    let mut degree = vec![0u32; positions.len()];
    for f in &facets {
        for &v in &f.vertices {
            degree[v as usize] += 1;
        }
    }
    let cap = 10 * mesh.edges().len();
    let mut flips = 0usize;
    loop {
        let mut keys: Vec<EdgeKey> = edge_facets.keys().copied().collect();
        keys.sort_unstable();
        let mut flipped_this_pass = 0usize;
        for key in keys {
            if flips >= cap {
                break;
            }
            let Some(list) = edge_facets.get(&key) else { continue };
            if list.len() != 2 {
                continue;
            }
            let (f1, f2) = (list[0], list[1]);
            let (fa, fb) = (facets[f1 as usize], facets[f2 as usize]);
            if fa.back != fb.back || fa.front != fb.front {
                continue;
            }
            // Orient so that f1 traverses a -> b and f2 traverses b -> a.
            let (a, b) = if fa.has_directed_edge(key.0, key.1) {
                (key.0, key.1)
            } else {
                (key.1, key.0)
            };
            if !fb.has_directed_edge(b, a) {
                continue;
            }
            let c = fa.opposite(key).unwrap();
            let d = fb.opposite(key).unwrap();
            if c == d || edge_facets.contains_key(&EdgeKey::new(c, d)) {
                continue;
            }
            if degree[a as usize] <= 3 || degree[b as usize] <= 3 {
                continue;
            }
            let n1 = raw_normal(positions, [a, b, c]);
            let n2 = raw_normal(positions, [b, a, d]);
            if n1.normalize().dot(&n2.normalize()) < 0.5 {
                continue;
            }
            let m1 = raw_normal(positions, [a, d, c]);
            let m2 = raw_normal(positions, [d, b, c]);
            let avg = n1 + n2;
            if !(m1.dot(&avg) > 0.0 && m2.dot(&avg) > 0.0 && m1.dot(&m2) > 0.0) {
                continue;
            }
            let p = |v: VertexId| &positions[v as usize];
            let before = min_angle(p(a), p(b), p(c)).min(min_angle(p(b), p(a), p(d)));
            let after = min_angle(p(a), p(d), p(c)).min(min_angle(p(d), p(b), p(c)));
            if !(after > before) {
                continue;
            }
            facets[f1 as usize].vertices = [a, d, c];
            facets[f2 as usize].vertices = [d, b, c];
            edge_facets.remove(&key);
            edge_facets.insert(EdgeKey::new(c, d), vec![f1, f2]);
            // Edge b-c moves from f1 to f2, edge a-d from f2 to f1.
            for (edge, from, to) in [(EdgeKey::new(b, c), f1, f2), (EdgeKey::new(a, d), f2, f1)] {
                if let Some(l) = edge_facets.get_mut(&edge) {
                    for x in l.iter_mut() {
                        if *x == from {
                            *x = to;
                        }
                    }
                }
            }
            degree[a as usize] -= 1;
            degree[b as usize] -= 1;
            degree[c as usize] += 1;
            degree[d as usize] += 1;
            flips += 1;
            flipped_this_pass += 1;
        }
        if flipped_this_pass == 0 || flips >= cap {
            break;
        }
    }
    ClusterMesh::build(positions.to_vec(), facets, mesh.regions().to_vec())
        .expect("edge flips preserve mesh validity")
}

/// Result of [`cleanup`]: the compacted mesh and the old→new vertex map.
#[derive(Debug, Clone)]
pub struct CleanupResult {
    pub mesh: ClusterMesh,
    /// `vertex_map[old]` is the new id; a merged vertex maps to its survivor.
    /// `None` only for vertices that no facet referenced.
    pub vertex_map: Vec<Option<VertexId>>,
    pub collapsed: usize,
}

struct Collapser {
    positions: Vec<Vec3>,
    facets: Vec<Facet>,
    alive: Vec<bool>,
    incident: Vec<Vec<FacetId>>,
    merged_into: Vec<VertexId>,
}

impl Collapser {
    fn shared_facets(&self, u: VertexId, v: VertexId) -> Vec<FacetId> {
        self.incident[u as usize]
            .iter()
            .copied()
            .filter(|&f| self.facets[f as usize].contains(v))
            .collect()
    }

    fn neighbours(&self, u: VertexId) -> HashSet<VertexId> {
        let mut out = HashSet::new();
        for &f in &self.incident[u as usize] {
            for &w in &self.facets[f as usize].vertices {
                if w != u {
                    out.insert(w);
                }
            }
        }
        out
    }

    fn singular_degree(&self, u: VertexId) -> usize {
        self.neighbours(u)
            .into_iter()
            .filter(|&w| self.shared_facets(u, w).len() == 3)
            .count()
    }

    /// Attempts to merge `v` into `u` with `u` moving to `target`.
    fn try_collapse(&mut self, u: VertexId, v: VertexId, target: Vec3) -> bool {
        let shared = self.shared_facets(u, v);
        let wings: HashSet<VertexId> = shared
            .iter()
            .map(|&f| self.facets[f as usize].opposite(EdgeKey::new(u, v)).unwrap())
            .collect();
        if wings.len() != shared.len() {
            return false;
        }
        // Link condition: common neighbours are exactly the wing vertices.
        let nu = self.neighbours(u);
        let nv = self.neighbours(v);
        let common: HashSet<VertexId> = nu.intersection(&nv).copied().collect();
        if common != wings {
            return false;
        }
        // No surviving facet may fold or vanish.
        let mut moved = Vec::new();
        for &f in self.incident[u as usize].iter().chain(&self.incident[v as usize]) {
            if shared.contains(&f) {
                continue;
            }
            let old = raw_normal(&self.positions, self.facets[f as usize].vertices);
            let verts = self.facets[f as usize].vertices.map(|w| if w == v { u } else { w });
            let pts = verts.map(|w| if w == u { target } else { self.positions[w as usize] });
            let new = (pts[1] - pts[0]).cross(&(pts[2] - pts[0]));
            if !(old.dot(&new) > 0.0) || !(new.norm() > 1e-12 * old.norm()) {
                return false;
            }
            moved.push((f, verts));
        }
        for &f in &shared {
            self.alive[f as usize] = false;
            for &w in &self.facets[f as usize].vertices {
                self.incident[w as usize].retain(|&g| g != f);
            }
        }
        for (f, verts) in moved {
            self.facets[f as usize].vertices = verts;
        }
        let from_v = std::mem::take(&mut self.incident[v as usize]);
        for f in from_v {
            if !self.incident[u as usize].contains(&f) {
                self.incident[u as usize].push(f);
            }
        }
        self.positions[u as usize] = target;
        self.merged_into[v as usize] = u;
        true
    }
}

/// Collapses edges shorter than `min_edge_fraction` × the local mean edge
/// length (the average, over the two endpoints, of the mean length of the
/// edges at each). A local scale keeps small bubbles of a cluster with very
/// unequal volumes from being collapsed wholesale.
///
/// Manifold edges collapse to their midpoint, or onto their endpoint lying on
/// a singular curve. Singular edges collapse along their curve, and a
/// junction vertex never moves. Edges joining two distinct curves (or two
/// junction vertices) are left alone, as is any collapse that would break the
/// link condition or fold a neighbouring facet.
pub fn cleanup(mesh: &ClusterMesh, min_edge_fraction: f64) -> Result<CleanupResult, MeshError> {
    let n = mesh.vertex_count();
    let mut length_sum = vec![0.0; n];
    let mut degree = vec![0usize; n];
    for e in mesh.edges() {
        let len = (mesh.position(e.key.0) - mesh.position(e.key.1)).norm();
        for v in [e.key.0, e.key.1] {
            length_sum[v as usize] += len;
            degree[v as usize] += 1;
        }
    }
    let local = |v: VertexId| length_sum[v as usize] / degree[v as usize].max(1) as f64;
    let mut col = Collapser {
        positions: mesh.positions().to_vec(),
        facets: mesh.facets().to_vec(),
        alive: vec![true; mesh.facet_count()],
        incident: mesh.vertex_facets(),
        merged_into: (0..mesh.vertex_count() as VertexId).collect(),
    };
    let mut candidates: Vec<(f64, f64, EdgeKey)> = mesh
        .edges()
        .iter()
        .map(|e| {
            let len = (mesh.position(e.key.0) - mesh.position(e.key.1)).norm();
            (len, min_edge_fraction * 0.5 * (local(e.key.0) + local(e.key.1)), e.key)
        })
        .filter(|(len, threshold, _)| len < threshold)
        .collect();
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.2.cmp(&y.2)));

    let mut collapsed = 0;
    for (_, threshold, key) in candidates {
        let (a, b) = (key.0, key.1);
        if col.incident[a as usize].is_empty() || col.incident[b as usize].is_empty() {
            continue;
        }
        let incidence = col.shared_facets(a, b).len();
        if incidence == 0 {
            continue;
        }
        let (pa, pb) = (col.positions[a as usize], col.positions[b as usize]);
        if (pa - pb).norm() >= threshold {
            continue;
        }
        let (sa, sb) = (col.singular_degree(a), col.singular_degree(b));
        let plan = match incidence {
            2 => match (sa > 0, sb > 0) {
                (false, false) => Some((a, b, 0.5 * (pa + pb))),
                (true, false) => Some((a, b, pa)),
                (false, true) => Some((b, a, pb)),
                (true, true) => None,
            },
            3 => match (sa >= 3, sb >= 3) {
                (false, false) => Some((a, b, 0.5 * (pa + pb))),
                (true, false) => Some((a, b, pa)),
                (false, true) => Some((b, a, pb)),
                (true, true) => None,
            },
            _ => None,
        };
        if let Some((keep, drop, target)) = plan {
            if col.try_collapse(keep, drop, target) {
                collapsed += 1;
            }
        }
    }

    let mut vertex_map = vec![None; col.positions.len()];
    let mut positions = Vec::new();
    let mut facets = Vec::new();
    for (f, alive) in col.facets.iter().zip(&col.alive) {
        if !alive {
            continue;
        }
        let mut vs = [0; 3];
        for k in 0..3 {
            let old = f.vertices[k] as usize;
            vs[k] = *vertex_map[old].get_or_insert_with(|| {
                positions.push(col.positions[old]);
                (positions.len() - 1) as VertexId
            });
        }
        facets.push(Facet::new(vs, f.back, f.front));
    }
    // Merged vertices report the id of the vertex they collapsed into.
    for v in 0..vertex_map.len() {
        if vertex_map[v].is_none() {
            let mut root = v;
            while col.merged_into[root] as usize != root {
                root = col.merged_into[root] as usize;
            }
            vertex_map[v] = vertex_map[root];
        }
    }
    let mesh = ClusterMesh::build(positions, facets, mesh.regions().to_vec())?;
    Ok(CleanupResult { mesh, vertex_map, collapsed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Region, RegionId};

    /// Closed "pillow": a flat n×n grid on top, its mirror below, glued on the rim.
    fn pillow(n: usize, bulge: f64) -> ClusterMesh {
        let mut positions = Vec::new();
        let idx = |i: usize, j: usize| (i * (n + 1) + j) as VertexId;
        for i in 0..=n {
            for j in 0..=n {
                let (x, y) = (i as f64 / n as f64, j as f64 / n as f64);
                let rim = i == 0 || j == 0 || i == n || j == n;
                let z = if rim { 0.0 } else { bulge * (x * (1.0 - x) * y * (1.0 - y)).sqrt() };
                positions.push(Vec3::new(x, y, z));
            }
        }
        let mut bottom = vec![0 as VertexId; (n + 1) * (n + 1)];
        for i in 0..=n {
            for j in 0..=n {
                let rim = i == 0 || j == 0 || i == n || j == n;
                bottom[i * (n + 1) + j] = if rim {
                    idx(i, j)
                } else {
                    let p = positions[idx(i, j) as usize];
                    positions.push(Vec3::new(p.x, p.y, -p.z));
                    (positions.len() - 1) as VertexId
                };
            }
        }
        let (e, r) = (RegionId(0), RegionId(1));
        let mut facets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                let bi = |k: VertexId| bottom[k as usize];
                // Corner cells split along the other diagonal so that no
                // interior edge joins two rim vertices.
                let corner = (i == 0 && j == n - 1) || (i == n - 1 && j == 0);
                let (t1, t2) = if corner { ([a, d, b], [b, d, c]) } else { ([a, c, b], [a, d, c]) };
                // Top normals point down (into the pillow), bottom normals up.
                facets.push(Facet::new(t1, e, r));
                facets.push(Facet::new(t2, e, r));
                facets.push(Facet::new([bi(t1[0]), bi(t1[2]), bi(t1[1])], e, r));
                facets.push(Facet::new([bi(t2[0]), bi(t2[2]), bi(t2[1])], e, r));
            }
        }
        ClusterMesh::build(positions, facets, vec![Region { id: r, target_volume: 1.0 }]).unwrap()
    }

    #[test]
    fn refine_quadruples_and_preserves_euler() {
        let m = pillow(3, 0.5);
        let r1 = refine(&m);
        let r2 = refine(&r1);
        assert_eq!(r1.facet_count(), 4 * m.facet_count());
        assert_eq!(r2.facet_count(), 16 * m.facet_count());
        assert_eq!(r1.euler_characteristic(), m.euler_characteristic());
        assert_eq!(r2.euler_characteristic(), m.euler_characteristic());
        // Old vertices are untouched.
        assert_eq!(&r1.positions()[..m.vertex_count()], m.positions());
    }

    /// Flat rhombus split along its long diagonal on top of a pyramid.
    fn rhombus_pyramid() -> ClusterMesh {
        let positions = vec![
            Vec3::new(-2.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(0.0, 0.5, 0.0),
            Vec3::new(0.0, -0.5, 0.0),
            Vec3::new(0.0, 0.0, -1.0),
        ];
        let (e, r) = (RegionId(0), RegionId(1));
        let (a, b, c, d, apex) = (0, 1, 2, 3, 4);
        let facets = vec![
            Facet::new([a, c, b], e, r),
            Facet::new([a, b, d], e, r),
            Facet::new([c, a, apex], e, r),
            Facet::new([b, c, apex], e, r),
            Facet::new([d, b, apex], e, r),
            Facet::new([a, d, apex], e, r),
        ];
        ClusterMesh::build(positions, facets, vec![Region { id: r, target_volume: 1.0 }]).unwrap()
    }

    #[test]
    fn equiangulate_flips_skinny_diagonal() {
        let a = Vec3::new(-2.0, 0.0, 0.0);
        let b = Vec3::new(2.0, 0.0, 0.0);
        let c = Vec3::new(0.0, 0.5, 0.0);
        let d = Vec3::new(0.0, -0.5, 0.0);
        let before = min_angle(&a, &b, &c).min(min_angle(&b, &a, &d));
        let after = min_angle(&a, &d, &c).min(min_angle(&d, &b, &c));
        // Direct computation: atan(0.5/2) before; 2·atan(0.25) after.
        assert!((before.to_degrees() - 14.036243467926479).abs() < 1e-9);
        assert!((after.to_degrees() - 28.072486935852957).abs() < 1e-9);

        let m = rhombus_pyramid();
        assert!(m.edge(EdgeKey::new(0, 1)).is_some());
        let q = equiangulate(&m);
        assert!(q.edge(EdgeKey::new(0, 1)).is_none());
        assert_eq!(q.edge(EdgeKey::new(2, 3)).unwrap().incidence(), 2);
        assert_eq!(q.euler_characteristic(), 2);
    }

    #[test]
    fn equiangulate_flat_pillow_stays_valid() {
        let m = pillow(4, 0.2);
        let q = equiangulate(&m);
        assert_eq!(q.facet_count(), m.facet_count());
        assert_eq!(q.euler_characteristic(), m.euler_characteristic());
        // Fixed point: a second pass changes nothing.
        let q2 = equiangulate(&q);
        assert_eq!(q.facets(), q2.facets());
    }

    #[test]
    fn cleanup_uniform_mesh_unchanged() {
        let m = pillow(4, 0.3);
        let r = cleanup(&m, 0.1).unwrap();
        assert_eq!(r.collapsed, 0);
        assert_eq!(r.mesh.facet_count(), m.facet_count());
    }

    #[test]
    fn cleanup_collapses_needle() {
        let m = pillow(4, 0.3);
        let mut positions = m.positions().to_vec();
        // Move interior top vertex (2,2) next to (2,3).
        let n = 4;
        let v = 2 * (n + 1) + 2;
        let w = 2 * (n + 1) + 3;
        let mean = m.mean_edge_length();
        let dir = (positions[w] - positions[v]).normalize();
        positions[v] = positions[w] - dir * 1e-6 * mean;
        let needle = ClusterMesh::build(positions, m.facets().to_vec(), m.regions().to_vec()).unwrap();
        let r = cleanup(&needle, 0.01).unwrap();
        assert_eq!(r.collapsed, 1);
        assert_eq!(r.mesh.facet_count(), m.facet_count() - 2);
        assert_eq!(r.mesh.euler_characteristic(), 2);
        assert_eq!(r.vertex_map[v], r.vertex_map[w]);
    }
}
