use std::fmt::Write as _;

use nalgebra::DVector;

use super::ImmersedMesh;
use crate::error::{Error, Result};
use crate::spaceform::{ModelKind, SpaceForm};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parse a WMESH document.
///
/// ```text
/// WMESH <EUCLIDEAN|SPHERE|HYPERBOLIC> <delta>
/// <num_vertices> <num_triangles> <ambient_coord_count>
/// <coords...> <f>        (one line per vertex)
/// <i> <j> <k>            (one line per triangle, 0-based)
/// ```
/// Lines starting with `#` and blank lines are skipped.
pub fn parse_mesh(text: &str) -> Result<ImmersedMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 3 || head[0] != "WMESH" {
        return Err(parse_err(ln, "expected `WMESH <model> <delta>`"));
    }
    let model = match head[1] {
        "EUCLIDEAN" => ModelKind::Euclidean,
        "SPHERE" => ModelKind::Sphere,
        "HYPERBOLIC" => ModelKind::Hyperbolic,
        other => return Err(parse_err(ln, format!("unknown model `{other}`"))),
    };
    let delta: f64 = head[2].parse().map_err(|_| parse_err(ln, "delta is not a number"))?;
    let consistent = match model {
        ModelKind::Euclidean => delta == 0.0,
        ModelKind::Sphere => delta > 0.0,
        ModelKind::Hyperbolic => delta < 0.0,
    };
    if !consistent || !delta.is_finite() {
        return Err(parse_err(ln, format!("delta {delta} does not match model {}", head[1])));
    }

    let (ln, counts) = lines.next().ok_or_else(|| parse_err(ln + 1, "missing counts line"))?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(ln, "counts must be non-negative integers"))?;
    if counts.len() != 3 {
        return Err(parse_err(ln, "expected `<num_vertices> <num_triangles> <ambient_coord_count>`"));
    }
    let (nv, nt, nc) = (counts[0], counts[1], counts[2]);
    let ambient_dim = match model {
        ModelKind::Euclidean => nc,
        _ => nc.checked_sub(1).unwrap_or(0),
    };
    let space = SpaceForm::new(delta, ambient_dim).map_err(|e| parse_err(ln, e.to_string()))?;

    let mut vertices = Vec::with_capacity(nv);
    let mut density = Vec::with_capacity(nv);
    let mut last = ln;
    for i in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(last + 1, format!("missing vertex line {i}")))?;
        last = ln;
        let vals: Vec<f64> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(ln, "vertex values must be decimals"))?;
        if vals.len() != nc + 1 {
            return Err(parse_err(ln, format!("expected {} values, found {}", nc + 1, vals.len())));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(parse_err(ln, "non-finite vertex value"));
        }
        let p = DVector::from_column_slice(&vals[..nc]);
        space.check_point(&p).map_err(|e| parse_err(ln, e.to_string()))?;
        vertices.push(p);
        density.push(vals[nc]);
    }
    let mut triangles = Vec::with_capacity(nt);
    for t in 0..nt {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(last + 1, format!("missing triangle line {t}")))?;
        last = ln;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(ln, "triangle indices must be non-negative integers"))?;
        if idx.len() != 3 {
            return Err(parse_err(ln, "expected three vertex indices"));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= nv) {
            return Err(parse_err(ln, format!("vertex index {bad} out of range")));
        }
        triangles.push([idx[0], idx[1], idx[2]]);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "unexpected trailing content"));
    }
    ImmersedMesh::new(space, vertices, triangles, density)
}

/// Serialize to WMESH with round-trip float formatting.
pub fn write_mesh(mesh: &ImmersedMesh) -> String {
    let space = mesh.space();
    let mut out = String::new();
    let _ = writeln!(out, "WMESH {} {}", space.kind().keyword(), space.delta);
    let _ = writeln!(out, "{} {} {}", mesh.num_vertices(), mesh.triangles().len(), space.repr_dim());
    for (v, f) in mesh.vertices().iter().zip(mesh.density()) {
        for x in v.iter() {
            let _ = write!(out, "{x} ");
        }
        let _ = writeln!(out, "{f}");
    }
    for t in mesh.triangles() {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TET: &str = "# regular tetrahedron\nWMESH EUCLIDEAN 0\n4 4 3\n1 1 1 0\n1 -1 -1 0\n-1 1 -1 0\n-1 -1 1 0\n0 1 2\n0 3 1\n0 2 3\n1 3 2\n";

    #[test]
    fn parses_tetrahedron() {
        let m = parse_mesh(TET).unwrap();
        assert!(m.is_closed());
        assert_eq!(m.triangles().len(), 4);
        let again = parse_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(again.vertices(), m.vertices());
    }

    #[test]
    fn reports_line_numbers() {
        let bad = TET.replace("-1 1 -1 0", "-1 1 x 0");
        match parse_mesh(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_off_model_points() {
        let text = "WMESH SPHERE 1\n3 1 3\n1 0 0 0\n0 1 0 0\n0 0 1.1 0\n0 1 2\n";
        assert!(matches!(parse_mesh(text), Err(Error::Parse { line: 5, .. })));
    }

    #[test]
    fn rejects_model_delta_mismatch() {
        assert!(parse_mesh("WMESH SPHERE -1\n").is_err());
    }
}
