//! Triangulation helpers shared by the seed constructions.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::mesh::{ClusterMesh, Facet, MeshError, Region, RegionId, VertexId};
use crate::Vec3;

/// Accumulates vertices and facets; every facet is oriented on insertion so
/// that its normal has positive component along a caller-supplied direction
/// pointing into the higher-numbered region.
#[derive(Debug, Default)]
pub struct MeshBuilder {
    pub positions: Vec<Vec3>,
    pub facets: Vec<Facet>,
}

impl MeshBuilder {
    pub fn vertex(&mut self, x: Vec3) -> VertexId {
        self.positions.push(x);
        (self.positions.len() - 1) as VertexId
    }

    pub fn triangle(&mut self, v: [VertexId; 3], lo: u16, hi: u16, into_hi: impl Fn(&Vec3) -> Vec3) {
        let [a, b, c] = v.map(|i| self.positions[i as usize]);
        let n = (b - a).cross(&(c - a));
        let dir = into_hi(&((a + b + c) / 3.0));
        let v = if n.dot(&dir) >= 0.0 { v } else { [v[0], v[2], v[1]] };
        self.facets.push(Facet::new(v, RegionId(lo), RegionId(hi)));
    }

    pub fn build(self, n_regions: usize) -> Result<ClusterMesh, MeshError> {
        let regions = (1..=n_regions)
            .map(|i| Region { id: RegionId(i as u16), target_volume: 0.0 })
            .collect();
        ClusterMesh::build(self.positions, self.facets, regions)
    }

    /// Triangulates the strip between two polylines that run side by side,
    /// always cutting the shorter diagonal. Either row may be a single point.
    pub fn zipper(&mut self, a: &[VertexId], b: &[VertexId], lo: u16, hi: u16, into_hi: &impl Fn(&Vec3) -> Vec3) {
        let (mut i, mut j) = (0, 0);
        let dist = |s: &Self, u: VertexId, v: VertexId| (s.positions[u as usize] - s.positions[v as usize]).norm();
        while i + 1 < a.len() || j + 1 < b.len() {
            let advance_a = if i + 1 == a.len() {
                false
            } else if j + 1 == b.len() {
                true
            } else {
                dist(self, a[i + 1], b[j]) <= dist(self, a[i], b[j + 1])
            };
            if advance_a {
                self.triangle([a[i], b[j], a[i + 1]], lo, hi, into_hi);
                i += 1;
            } else {
                self.triangle([a[i], b[j], b[j + 1]], lo, hi, into_hi);
                j += 1;
            }
        }
    }
}

/// Unit icosphere subdivided `level` times (vertices projected back to the
/// sphere after every split).
pub fn icosphere(level: u32) -> (Vec<Vec3>, Vec<[VertexId; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[VertexId; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(VertexId, VertexId), VertexId> = HashMap::new();
        let mut mid = |a: VertexId, b: VertexId, verts: &mut Vec<Vec3>| {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a as usize] + verts[b as usize]) * 0.5).normalize());
                (verts.len() - 1) as VertexId
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        faces = next;
    }
    (verts, faces)
}

/// Hexagonal disk with `rings` rings: ring `k` has `6k` vertices at radius
/// `k / rings`. Returns `(polar coordinates, triangles)`; the outer ring is
/// the last `6·rings` entries, in increasing angle starting at φ = 0.
pub fn hex_disk(rings: usize) -> (Vec<(f64, f64)>, Vec<[usize; 3]>) {
    let start = |k: usize| if k == 0 { 0 } else { 1 + 3 * k * (k - 1) };
    let idx = |k: usize, j: usize| if k == 0 { 0 } else { start(k) + j % (6 * k) };
    let mut pts = vec![(0.0, 0.0)];
    for k in 1..=rings {
        for j in 0..6 * k {
            pts.push((k as f64 / rings as f64, 2.0 * PI * j as f64 / (6 * k) as f64));
        }
    }
    let mut tris = Vec::new();
    for k in 1..=rings {
        // Sector s of ring k spans outer vertices k·s ..= k·(s+1) and inner
        // vertices (k−1)·s ..= (k−1)·(s+1).
        for s in 0..6 {
            for t in 0..k {
                let o0 = idx(k, k * s + t);
                let o1 = idx(k, k * s + t + 1);
                let i0 = idx(k - 1, (k - 1) * s + t);
                tris.push([i0, o0, o1]);
                if t + 1 < k {
                    let i1 = idx(k - 1, (k - 1) * s + t + 1);
                    tris.push([i0, o1, i1]);
                }
            }
        }
    }
    (pts, tris)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts() {
        for level in 0..4 {
            let (v, f) = icosphere(level);
            assert_eq!(f.len(), 20 * 4usize.pow(level));
            assert_eq!(v.len() as i64 - (f.len() * 3 / 2) as i64 + f.len() as i64, 2);
        }
    }

    #[test]
    fn hex_disk_is_a_disk() {
        for rings in 1..5 {
            let (pts, tris) = hex_disk(rings);
            assert_eq!(tris.len(), 6 * rings * rings);
            // χ = 1 for a disk.
            let mut edges = std::collections::HashSet::new();
            for t in &tris {
                for k in 0..3 {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    edges.insert((a.min(b), a.max(b)));
                }
            }
            assert_eq!(pts.len() as i64 - edges.len() as i64 + tris.len() as i64, 1);
            // Flat triangles all have positive orientation in (x, y).
            for t in &tris {
                let p = t.map(|i| {
                    let (r, phi) = pts[i];
                    (r * phi.cos(), r * phi.sin())
                });
                let area = (p[1].0 - p[0].0) * (p[2].1 - p[0].1) - (p[2].0 - p[0].0) * (p[1].1 - p[0].1);
                assert!(area.abs() > 1e-6);
            }
        }
    }
}
