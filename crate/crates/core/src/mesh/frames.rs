//! Per-vertex frames separating shape-changing from sliding motion.

use super::{ClusterMesh, VertexId};
use crate::Vec3;

/// Directions in which a vertex may move without merely sliding along the
/// surface it samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VertexFrame {
    /// Interior vertex of one interface: only the unit normal direction.
    Normal(Vec3),
    /// Vertex inside a singular curve: the plane perpendicular to the unit
    /// curve tangent.
    Curve(Vec3),
    /// Junction vertex (or anything irregular): unconstrained.
    Free,
}

impl VertexFrame {
    /// Orthogonal projection of `w` onto the allowed directions.
    pub fn project(&self, w: &Vec3) -> Vec3 {
        match self {
            VertexFrame::Normal(n) => n * n.dot(w),
            VertexFrame::Curve(t) => w - t * t.dot(w),
            VertexFrame::Free => *w,
        }
    }

    /// The complementary (sliding) part of `w`.
    pub fn tangential(&self, w: &Vec3) -> Vec3 {
        match self {
            VertexFrame::Free => Vec3::zeros(),
            _ => w - self.project(w),
        }
    }
}

/// Frame of every vertex. Unused vertices get [`VertexFrame::Free`].
pub fn vertex_frames(mesh: &ClusterMesh) -> Vec<VertexFrame> {
    let n = mesh.vertex_count();
    let degree = mesh.singular_degree();
    let mut normal = vec![Vec3::zeros(); n];
    let mut single_interface = vec![true; n];
    let mut first_interface = vec![None; n];
    for (i, f) in mesh.facets().iter().enumerate() {
        let raw = {
            let [a, b, c] = mesh.triangle(i as u32);
            (b - a).cross(&(c - a))
        };
        for &v in &f.vertices {
            let v = v as usize;
            normal[v] += raw;
            match first_interface[v] {
                None => first_interface[v] = Some(f.interface()),
                Some(iface) if iface != f.interface() => single_interface[v] = false,
                _ => {}
            }
        }
    }
    let mut curve_nbrs: Vec<Vec<VertexId>> = vec![Vec::new(); n];
    for e in mesh.singular_edges() {
        curve_nbrs[e.0 as usize].push(e.1);
        curve_nbrs[e.1 as usize].push(e.0);
    }
    (0..n)
        .map(|v| match degree[v] {
            0 if single_interface[v] && normal[v].norm() > 0.0 => VertexFrame::Normal(normal[v].normalize()),
            2 => {
                let [a, b] = [curve_nbrs[v][0], curve_nbrs[v][1]];
                let t = mesh.position(b) - mesh.position(a);
                if t.norm() > 0.0 {
                    VertexFrame::Curve(t.normalize())
                } else {
                    VertexFrame::Free
                }
            }
            _ => VertexFrame::Free,
        })
        .collect()
}

/// Positions after one pass of tangential Laplacian relaxation.
///
/// Every interface vertex moves by `factor` times the sliding part of the
/// offset to the centroid of its neighbours; singular-curve vertices move
/// along the curve towards the midpoint of their two curve neighbours.
/// Junction vertices stay put. Shape changes are second order in the offset.
pub fn relaxed_positions(mesh: &ClusterMesh, factor: f64) -> Vec<Vec3> {
    let frames = vertex_frames(mesh);
    let n = mesh.vertex_count();
    let mut sum = vec![Vec3::zeros(); n];
    let mut count = vec![0usize; n];
    for e in mesh.edges() {
        let (a, b) = (e.key.0 as usize, e.key.1 as usize);
        sum[a] += mesh.position(e.key.1);
        sum[b] += mesh.position(e.key.0);
        count[a] += 1;
        count[b] += 1;
    }
    let mut curve_sum = vec![Vec3::zeros(); n];
    for e in mesh.singular_edges() {
        curve_sum[e.0 as usize] += mesh.position(e.1);
        curve_sum[e.1 as usize] += mesh.position(e.0);
    }
    (0..n)
        .map(|v| {
            let x = mesh.position(v as VertexId);
            let target = match frames[v] {
                VertexFrame::Normal(_) if count[v] > 0 => sum[v] / count[v] as f64,
                VertexFrame::Curve(_) => curve_sum[v] / 2.0,
                _ => return x,
            };
            x + factor * frames[v].tangential(&(target - x))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::{seed_mesh, BubbleSpec, Topology};

    #[test]
    fn frames_split_motion() {
        let mesh = seed_mesh(&BubbleSpec::new(Topology::Triple, vec![3.0, 3.0, 3.0], 0.0).with_level(1)).unwrap();
        let frames = vertex_frames(&mesh);
        let degree = mesh.singular_degree();
        let w = Vec3::new(0.3, -1.2, 0.7);
        for (v, f) in frames.iter().enumerate() {
            match (degree[v], f) {
                (0, VertexFrame::Normal(_)) | (2, VertexFrame::Curve(_)) => {}
                (d, f) if d > 2 => assert_eq!(*f, VertexFrame::Free),
                (d, f) => panic!("vertex {v}: degree {d} with {f:?}"),
            }
            let (p, t) = (f.project(&w), f.tangential(&w));
            assert!(p.dot(&t).abs() < 1e-12);
            assert!((p + t - w).norm() < 1e-12 || *f == VertexFrame::Free);
        }
        assert_eq!(frames.iter().filter(|f| **f == VertexFrame::Free).count(), 2);
    }

    #[test]
    fn relaxation_slides_along_a_sphere() {
        let mesh = seed_mesh(&BubbleSpec::new(Topology::Single, vec![1.0], 0.0).with_level(2)).unwrap();
        let center = mesh.centroid();
        let radius = (mesh.position(0) - center).norm();
        // Jitter tangentially so relaxation has something to undo.
        let mut jittered = mesh.clone();
        for (i, x) in jittered.positions_mut().iter_mut().enumerate() {
            let n = (*x - center).normalize();
            let kick = Vec3::new((i as f64 * 1.7).sin(), (i as f64 * 2.3).cos(), (i as f64 * 0.9).sin());
            *x += 0.02 * radius * (kick - n * n.dot(&kick));
        }
        let relaxed = relaxed_positions(&jittered, 0.5);
        let mut moved = 0.0f64;
        let mut off_sphere = 0.0f64;
        for (a, b) in jittered.positions().iter().zip(&relaxed) {
            moved = moved.max((a - b).norm());
            off_sphere = off_sphere.max(((b - center).norm() - (a - center).norm()).abs());
        }
        assert!(moved > 1e-3 * radius);
        assert!(off_sphere < 0.1 * moved, "{off_sphere} vs {moved}");
    }
}
