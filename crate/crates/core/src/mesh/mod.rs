//! Triangulated multi-region surface complex.
//!
//! Storage is a facet soup: a flat list of positions, a flat list of oriented
//! facets labelled by the two regions they separate, and a derived edge
//! incidence index that is rebuilt whenever the connectivity changes.
//! Positions may be moved freely through [`ClusterMesh::positions_mut`]; the
//! connectivity is only changed by the remeshing operations, which return a
//! fresh, re-validated mesh.
//!
//! # Orientation convention
//!
//! Every facet stores `back < front`. Its right-hand normal
//! `(v1 - v0) × (v2 - v0)` points from `back` into `front`. Region `0` is the
//! exterior, so an exterior facet of bubble `k` has its normal pointing into
//! the bubble. [`ClusterMesh::build`] canonicalises facets given with
//! `back > front` by swapping the labels and reversing the vertex order.

mod frames;
mod obj;
mod remesh;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Vec3;

pub use frames::{relaxed_positions, vertex_frames, VertexFrame};
pub use obj::write_obj;
pub use remesh::{cleanup, equiangulate, refine, CleanupResult};

/// Dense vertex handle (index into the position list).
pub type VertexId = u32;
/// Dense facet handle (index into the facet list).
pub type FacetId = u32;

/// Region label. `RegionId(0)` is the unbounded exterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RegionId(pub u16);

impl RegionId {
    pub const EXTERIOR: RegionId = RegionId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Unordered vertex pair, stored with the smaller id first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey(pub VertexId, pub VertexId);

impl EdgeKey {
    pub fn new(a: VertexId, b: VertexId) -> Self {
        if a <= b {
            EdgeKey(a, b)
        } else {
            EdgeKey(b, a)
        }
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.0 == v || self.1 == v
    }

    pub fn other(&self, v: VertexId) -> VertexId {
        if self.0 == v {
            self.1
        } else {
            self.0
        }
    }
}

/// Oriented triangle separating `back` (below the normal) from `front`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Facet {
    pub vertices: [VertexId; 3],
    pub back: RegionId,
    pub front: RegionId,
}

impl Facet {
    pub fn new(vertices: [VertexId; 3], back: RegionId, front: RegionId) -> Self {
        Facet { vertices, back, front }
    }

    /// The unordered region pair `(low, high)`.
    pub fn interface(&self) -> (RegionId, RegionId) {
        (self.back.min(self.front), self.back.max(self.front))
    }

    pub fn touches(&self, region: RegionId) -> bool {
        self.back == region || self.front == region
    }

    pub fn edges(&self) -> [EdgeKey; 3] {
        let [a, b, c] = self.vertices;
        [EdgeKey::new(a, b), EdgeKey::new(b, c), EdgeKey::new(c, a)]
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    /// Vertex opposite to the edge `e`, if `e` belongs to this facet.
    pub fn opposite(&self, e: EdgeKey) -> Option<VertexId> {
        if !(self.contains(e.0) && self.contains(e.1)) {
            return None;
        }
        self.vertices.iter().copied().find(|&v| !e.contains(v))
    }

    /// `true` if the facet traverses `a -> b` in its cyclic order.
    pub fn has_directed_edge(&self, a: VertexId, b: VertexId) -> bool {
        let v = self.vertices;
        (0..3).any(|i| v[i] == a && v[(i + 1) % 3] == b)
    }
}

/// A bubble (bounded region) and the weighted volume it must enclose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub id: RegionId,
    pub target_volume: f64,
}

/// One entry of the edge incidence index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub key: EdgeKey,
    pub facets: Vec<FacetId>,
}

impl Edge {
    pub fn incidence(&self) -> usize {
        self.facets.len()
    }

    pub fn is_singular(&self) -> bool {
        self.facets.len() == 3
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("mesh has no facets")]
    Empty,
    #[error("facet {facet} references vertex {vertex}, but only {count} positions exist")]
    IndexOutOfRange { facet: usize, vertex: VertexId, count: usize },
    #[error("facet {facet} is degenerate (repeated vertex or zero area)")]
    DegenerateFacet { facet: usize },
    #[error("facet {facet} has an invalid region label ({back}, {front})")]
    BadRegionLabel { facet: usize, back: RegionId, front: RegionId },
    #[error("regions must be numbered 1..=n in order; found id {found} at position {position}")]
    BadRegionList { position: usize, found: RegionId },
    #[error("boundary of region {region} is not closed and consistently oriented at edge ({}, {})", .edge.0, .edge.1)]
    OpenBoundary { region: RegionId, edge: EdgeKey },
    #[error("edge ({}, {}) is incident to {count} facets (at most 4 allowed)", .edge.0, .edge.1)]
    OverloadedEdge { edge: EdgeKey, count: usize },
}

/// Validated multi-region surface complex.
#[derive(Debug, Clone)]
pub struct ClusterMesh {
    positions: Vec<Vec3>,
    facets: Vec<Facet>,
    regions: Vec<Region>,
    edges: Vec<Edge>,
    edge_lookup: HashMap<EdgeKey, usize>,
}

impl ClusterMesh {
    /// Validates and assembles a mesh.
    ///
    /// Checks index ranges, region labels, degenerate facets, edge
    /// overload, and that the oriented boundary of every region (the
    /// exterior included) is closed.
    pub fn build(
        positions: Vec<Vec3>,
        facets: Vec<Facet>,
        regions: Vec<Region>,
    ) -> Result<Self, MeshError> {
        if facets.is_empty() {
            return Err(MeshError::Empty);
        }
        for (position, r) in regions.iter().enumerate() {
            if r.id.index() != position + 1 {
                return Err(MeshError::BadRegionList { position, found: r.id });
            }
        }
        let n_regions = regions.len();
        let mut canonical = Vec::with_capacity(facets.len());
        for (i, f) in facets.into_iter().enumerate() {
            for &v in &f.vertices {
                if v as usize >= positions.len() {
                    return Err(MeshError::IndexOutOfRange {
                        facet: i,
                        vertex: v,
                        count: positions.len(),
                    });
                }
            }
            if f.back == f.front || f.back.index() > n_regions || f.front.index() > n_regions {
                return Err(MeshError::BadRegionLabel { facet: i, back: f.back, front: f.front });
            }
            let [a, b, c] = f.vertices;
            if a == b || b == c || c == a {
                return Err(MeshError::DegenerateFacet { facet: i });
            }
            let normal = (positions[b as usize] - positions[a as usize])
                .cross(&(positions[c as usize] - positions[a as usize]));
            if !(normal.norm() > 0.0) {
                return Err(MeshError::DegenerateFacet { facet: i });
            }
            canonical.push(if f.back < f.front {
                f
            } else {
                Facet::new([a, c, b], f.front, f.back)
            });
        }

        let mut mesh = ClusterMesh {
            positions,
            facets: canonical,
            regions,
            edges: Vec::new(),
            edge_lookup: HashMap::new(),
        };
        mesh.rebuild_edges();
        for e in &mesh.edges {
            if e.facets.len() > 4 {
                return Err(MeshError::OverloadedEdge { edge: e.key, count: e.facets.len() });
            }
        }
        mesh.check_closed()?;
        Ok(mesh)
    }

    fn rebuild_edges(&mut self) {
        let mut pairs: Vec<(EdgeKey, FacetId)> = Vec::with_capacity(self.facets.len() * 3);
        for (i, f) in self.facets.iter().enumerate() {
            for e in f.edges() {
                pairs.push((e, i as FacetId));
            }
        }
        pairs.sort_unstable();
        let mut edges: Vec<Edge> = Vec::with_capacity(pairs.len() / 2 + 1);
        for (key, facet) in pairs {
            match edges.last_mut() {
                Some(last) if last.key == key => last.facets.push(facet),
                _ => edges.push(Edge { key, facets: vec![facet] }),
            }
        }
        self.edge_lookup = edges.iter().enumerate().map(|(i, e)| (e.key, i)).collect();
        self.edges = edges;
    }

    fn check_closed(&self) -> Result<(), MeshError> {
        for region in 0..=self.regions.len() {
            let region = RegionId(region as u16);
            for e in &self.edges {
                let mut balance = 0i32;
                for &fi in &e.facets {
                    let f = &self.facets[fi as usize];
                    // Outward orientation for `region`: facets with back == region
                    // already have their normal leaving the region.
                    let sign = if f.back == region {
                        1
                    } else if f.front == region {
                        -1
                    } else {
                        continue;
                    };
                    let forward = if f.has_directed_edge(e.key.0, e.key.1) { 1 } else { -1 };
                    balance += sign * forward;
                }
                if balance != 0 {
                    return Err(MeshError::OpenBoundary { region, edge: e.key });
                }
            }
        }
        Ok(())
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    /// Mutable access to vertex positions. Connectivity is unaffected.
    pub fn positions_mut(&mut self) -> &mut [Vec3] {
        &mut self.positions
    }

    pub fn position(&self, v: VertexId) -> Vec3 {
        self.positions[v as usize]
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    pub fn set_targets(&mut self, targets: &[f64]) {
        assert_eq!(targets.len(), self.regions.len(), "one target per region");
        for (r, &t) in self.regions.iter_mut().zip(targets) {
            r.target_volume = t;
        }
    }

    pub fn targets(&self) -> Vec<f64> {
        self.regions.iter().map(|r| r.target_volume).collect()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, key: EdgeKey) -> Option<&Edge> {
        self.edge_lookup.get(&key).map(|&i| &self.edges[i])
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn facet_count(&self) -> usize {
        self.facets.len()
    }

    /// Corner positions of a facet.
    pub fn triangle(&self, f: FacetId) -> [Vec3; 3] {
        let [a, b, c] = self.facets[f as usize].vertices;
        [self.positions[a as usize], self.positions[b as usize], self.positions[c as usize]]
    }

    /// Unit right-hand normal of a facet (points from back into front).
    pub fn facet_normal(&self, f: FacetId) -> Vec3 {
        let [a, b, c] = self.triangle(f);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn facet_area(&self, f: FacetId) -> f64 {
        let [a, b, c] = self.triangle(f);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Euclidean (unweighted) total area.
    /// Smallest interior angle over all facets, in degrees.
    pub fn min_angle_degrees(&self) -> f64 {
        let mut best = f64::INFINITY;
        for f in 0..self.facets.len() {
            let t = self.triangle(f as FacetId);
            for k in 0..3 {
                let u = t[(k + 1) % 3] - t[k];
                let v = t[(k + 2) % 3] - t[k];
                best = best.min(u.cross(&v).norm().atan2(u.dot(&v)).to_degrees());
            }
        }
        best
    }

    pub fn euclidean_area(&self) -> f64 {
        (0..self.facets.len() as FacetId).map(|f| self.facet_area(f)).sum()
    }

    /// `V - E + F`, counting only vertices referenced by some facet.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.positions.len()];
        for f in &self.facets {
            for &v in &f.vertices {
                used[v as usize] = true;
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - self.edges.len() as i64 + self.facets.len() as i64
    }

    /// Edges with exactly three incident facets (triple junction curves).
    pub fn singular_edges(&self) -> Vec<EdgeKey> {
        self.edges.iter().filter(|e| e.is_singular()).map(|e| e.key).collect()
    }

    /// Number of singular edges at each vertex.
    pub fn singular_degree(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.positions.len()];
        for e in self.edges.iter().filter(|e| e.is_singular()) {
            deg[e.key.0 as usize] += 1;
            deg[e.key.1 as usize] += 1;
        }
        deg
    }

    /// Vertices where at least three singular edges meet (tetrahedral
    /// junctions of four singular curves).
    pub fn singular_vertices(&self) -> Vec<VertexId> {
        self.singular_degree()
            .iter()
            .enumerate()
            .filter(|(_, &d)| d >= 3)
            .map(|(v, _)| v as VertexId)
            .collect()
    }

    /// Splits the singular edge set into connected polylines.
    ///
    /// Curves are cut at singular vertices, so a closed circle comes back as
    /// a single closed chain (first == last) and a curve between two
    /// junction points as an open chain.
    pub fn singular_curves(&self) -> Vec<Vec<VertexId>> {
        let singular = self.singular_edges();
        let deg = self.singular_degree();
        let mut adjacency: HashMap<VertexId, Vec<VertexId>> = HashMap::new();
        for e in &singular {
            adjacency.entry(e.0).or_default().push(e.1);
            adjacency.entry(e.1).or_default().push(e.0);
        }
        for list in adjacency.values_mut() {
            list.sort_unstable();
        }
        let mut used: std::collections::HashSet<EdgeKey> = std::collections::HashSet::new();
        let mut curves = Vec::new();
        let walk = |start: VertexId,
                    next: VertexId,
                    used: &mut std::collections::HashSet<EdgeKey>|
         -> Vec<VertexId> {
            let mut chain = vec![start, next];
            used.insert(EdgeKey::new(start, next));
            let mut prev = start;
            let mut cur = next;
            while deg[cur as usize] == 2 && cur != start {
                let nbrs = &adjacency[&cur];
                let Some(&n) = nbrs.iter().find(|&&n| n != prev && !used.contains(&EdgeKey::new(cur, n)))
                else {
                    break;
                };
                used.insert(EdgeKey::new(cur, n));
                chain.push(n);
                prev = cur;
                cur = n;
            }
            chain
        };
        // Open curves start at junction (or dangling) vertices.
        let mut starts: Vec<VertexId> =
            adjacency.keys().copied().filter(|&v| deg[v as usize] != 2).collect();
        starts.sort_unstable();
        for s in starts {
            for &n in &adjacency[&s] {
                if !used.contains(&EdgeKey::new(s, n)) {
                    curves.push(walk(s, n, &mut used));
                }
            }
        }
        // Remaining edges form closed loops.
        for e in &singular {
            if !used.contains(e) {
                curves.push(walk(e.0, e.1, &mut used));
            }
        }
        curves
    }

    /// Facets incident to each vertex.
    pub fn vertex_facets(&self) -> Vec<Vec<FacetId>> {
        let mut out = vec![Vec::new(); self.positions.len()];
        for (i, f) in self.facets.iter().enumerate() {
            for &v in &f.vertices {
                out[v as usize].push(i as FacetId);
            }
        }
        out
    }

    /// Mean Euclidean edge length.
    pub fn mean_edge_length(&self) -> f64 {
        let total: f64 = self
            .edges
            .iter()
            .map(|e| (self.position(e.key.0) - self.position(e.key.1)).norm())
            .sum();
        total / self.edges.len() as f64
    }

    /// Largest distance between two vertices.
    pub fn diameter(&self) -> f64 {
        let p = &self.positions;
        let mut best = 0.0f64;
        for i in 0..p.len() {
            for j in (i + 1)..p.len() {
                best = best.max((p[i] - p[j]).norm_squared());
            }
        }
        best.sqrt()
    }

    /// Mean of the vertex positions.
    pub fn centroid(&self) -> Vec3 {
        let sum: Vec3 = self.positions.iter().sum();
        sum / self.positions.len() as f64
    }

    /// Applies `x -> map(x)` to every vertex position.
    pub fn transform(&mut self, map: impl Fn(&Vec3) -> Vec3) {
        for p in &mut self.positions {
            *p = map(p);
        }
    }

    /// Copy with all positions multiplied by `lambda` (about the origin).
    pub fn scaled(&self, lambda: f64) -> ClusterMesh {
        let mut out = self.clone();
        out.transform(|x| x * lambda);
        out
    }

    /// Returns `true` if some facet of `moved` has a corner angle below
    /// `floor_degrees` that is also smaller than its worst angle in `self`.
    pub fn slivers_relative_to(&self, moved: &[Vec3], floor_degrees: f64) -> bool {
        let worst = |p: &[Vec3], f: &Facet| {
            let t = f.vertices.map(|v| p[v as usize]);
            (0..3)
                .map(|k| {
                    let u = t[(k + 1) % 3] - t[k];
                    let v = t[(k + 2) % 3] - t[k];
                    u.cross(&v).norm().atan2(u.dot(&v)).to_degrees()
                })
                .fold(180.0, f64::min)
        };
        self.facets.iter().any(|f| {
            let after = worst(moved, f);
            after < floor_degrees && after < worst(&self.positions, f)
        })
    }

    /// Returns `true` if some facet normal reverses (or vanishes) between
    /// `self` and `moved`, which must share connectivity.
    pub fn folds_relative_to(&self, moved: &[Vec3]) -> bool {
        self.facets.iter().any(|f| {
            let [a, b, c] = f.vertices.map(|v| v as usize);
            let old = (self.positions[b] - self.positions[a])
                .cross(&(self.positions[c] - self.positions[a]));
            let new = (moved[b] - moved[a]).cross(&(moved[c] - moved[a]));
            !(old.dot(&new) > 0.0)
        })
    }
}
