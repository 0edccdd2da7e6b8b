use std::collections::BTreeMap;

use super::ImmersedMesh;
use crate::error::{Error, Result};

/// The boundary of a surface mesh as closed polylines.
///
/// Loops list global vertex indices in the direction induced by the
/// triangle orientation (interior on the left).
#[derive(Clone, Debug)]
pub struct BoundaryCurve {
    pub loops: Vec<Vec<usize>>,
    /// Oriented edges `(a, b)` in loop order.
    pub edges: Vec<(usize, usize)>,
    /// Geodesic edge lengths, aligned with `edges`.
    pub lengths: Vec<f64>,
}

impl BoundaryCurve {
    pub fn total_length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// `(previous, next)` neighbour along the curve for each loop vertex.
    pub fn neighbours(&self) -> BTreeMap<usize, (usize, usize)> {
        let mut out = BTreeMap::new();
        for lp in &self.loops {
            let n = lp.len();
            for i in 0..n {
                out.insert(lp[i], (lp[(i + n - 1) % n], lp[(i + 1) % n]));
            }
        }
        out
    }
}

pub fn boundary_complex(mesh: &ImmersedMesh) -> Result<BoundaryCurve> {
    if mesh.is_closed() {
        return Err(Error::ClosedMesh("a closed mesh has no boundary".into()));
    }
    let mut next: BTreeMap<usize, usize> = BTreeMap::new();
    for &(a, b) in mesh.boundary_edges() {
        if next.insert(a, b).is_some() {
            return Err(Error::NonManifold(format!("boundary pinches at vertex {a}")));
        }
    }
    let mut loops = Vec::new();
    let mut edges = Vec::new();
    let mut remaining = next.clone();
    while let Some((&start, _)) = remaining.iter().next() {
        let mut lp = vec![start];
        let mut v = start;
        loop {
            let w = remaining
                .remove(&v)
                .ok_or_else(|| Error::NonManifold(format!("boundary is not a closed loop at vertex {v}")))?;
            edges.push((v, w));
            if w == start {
                break;
            }
            lp.push(w);
            v = w;
        }
        loops.push(lp);
    }
    let space = mesh.space();
    let verts = mesh.vertices();
    let lengths = edges.iter().map(|&(a, b)| space.distance_unchecked(&verts[a], &verts[b])).collect();
    Ok(BoundaryCurve { loops, edges, lengths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_shape, ShapeKind, ShapeSpec};

    #[test]
    fn closed_mesh_has_no_boundary() {
        let m = generate_shape(&ShapeSpec::new(ShapeKind::RoundSphere { radius: 1.0, center: vec![] }, 1)).unwrap();
        assert!(matches!(boundary_complex(&m), Err(Error::ClosedMesh(_))));
    }

    #[test]
    fn hemisphere_boundary_is_equator() {
        let m = generate_shape(&ShapeSpec::new(ShapeKind::Hemisphere, 2)).unwrap();
        let b = boundary_complex(&m).unwrap();
        assert_eq!(b.loops.len(), 1);
        for &v in &b.loops[0] {
            assert!(m.vertices()[v][2].abs() < 1e-15);
        }
        assert!((b.total_length() - m.boundary_length()).abs() < 1e-12);
    }
}
