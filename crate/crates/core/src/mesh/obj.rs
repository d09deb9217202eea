//! Wavefront OBJ export.

use std::collections::BTreeMap;
use std::io::{self, Write};

use super::{ClusterMesh, RegionId};

/// Writes the mesh as OBJ: all vertices with 17 significant digits, then one
/// `o interface_<low>_<high>` object per region pair (ascending), each
/// listing its facets in facet-index order with 1-based indices.
pub fn write_obj<W: Write>(mesh: &ClusterMesh, mut out: W) -> io::Result<()> {
    writeln!(out, "# bubblelab cluster: {} vertices, {} facets", mesh.vertex_count(), mesh.facet_count())?;
    for p in mesh.positions() {
        writeln!(out, "v {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z)?;
    }
    let mut groups: BTreeMap<(RegionId, RegionId), Vec<usize>> = BTreeMap::new();
    for (i, f) in mesh.facets().iter().enumerate() {
        groups.entry(f.interface()).or_default().push(i);
    }
    for ((lo, hi), facets) in groups {
        writeln!(out, "o interface_{lo}_{hi}")?;
        for i in facets {
            let [a, b, c] = mesh.facets()[i].vertices;
            writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1)?;
        }
    }
    Ok(())
}
