//! ASCII OFF reading and writing for triangle meshes.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::Vector3;

use super::mesh::TriMesh;
use crate::error::{Error, Result};

pub fn parse_off(text: &str) -> Result<TriMesh> {
    // (line number, tokens) with comments and blank lines dropped
    let mut lines = text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
    });
    let parse_err = |line: usize, msg: &str| Error::Parse {
        line,
        msg: msg.to_string(),
    };

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    if header[0] != "OFF" {
        return Err(parse_err(hline, "missing OFF header"));
    }
    // Counts may share the header line.
    let (cline, counts) = if header.len() > 1 {
        (hline, header[1..].to_vec())
    } else {
        lines.next().ok_or_else(|| parse_err(hline, "missing counts line"))?
    };
    if counts.len() < 2 {
        return Err(parse_err(cline, "counts line needs vertex and face counts"));
    }
    let nv: usize = counts[0].parse().map_err(|_| parse_err(cline, "bad vertex count"))?;
    let nf: usize = counts[1].parse().map_err(|_| parse_err(cline, "bad face count"))?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, tok) = lines.next().ok_or_else(|| parse_err(cline, "truncated vertex list"))?;
        if tok.len() < 3 {
            return Err(parse_err(line, "vertex needs three coordinates"));
        }
        let mut p = [0.0; 3];
        for (k, t) in tok.iter().take(3).enumerate() {
            p[k] = t.parse().map_err(|_| parse_err(line, "bad coordinate"))?;
        }
        vertices.push(Vector3::new(p[0], p[1], p[2]));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, tok) = lines.next().ok_or_else(|| parse_err(cline, "truncated face list"))?;
        let arity: usize = tok[0].parse().map_err(|_| parse_err(line, "bad face arity"))?;
        if arity != 3 {
            return Err(parse_err(line, "only triangular faces are supported"));
        }
        if tok.len() < 4 {
            return Err(parse_err(line, "face needs three indices"));
        }
        let mut f = [0usize; 3];
        for k in 0..3 {
            f[k] = tok[k + 1].parse().map_err(|_| parse_err(line, "bad vertex index"))?;
        }
        faces.push(f);
    }
    TriMesh::new(vertices, faces)
}

pub fn read_off(path: impl AsRef<Path>) -> Result<TriMesh> {
    let file = std::fs::File::open(path)?;
    let mut text = String::new();
    for line in std::io::BufReader::new(file).lines() {
        text.push_str(&line?);
        text.push('\n');
    }
    parse_off(&text)
}

/// Coordinates are written with 17 significant digits.
pub fn format_off(mesh: &TriMesh) -> String {
    let mut out = String::new();
    out.push_str("OFF\n");
    let _ = writeln!(out, "{} {} 0", mesh.vertex_count(), mesh.face_count());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
    }
    out
}

pub fn write_off(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(format_off(mesh).as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypersurface::mesh::icosphere;

    #[test]
    fn round_trip_is_exact() {
        let m = icosphere(2.0, 2);
        let back = parse_off(&format_off(&m)).unwrap();
        assert_eq!(back.faces(), m.faces());
        assert_eq!(back.vertices(), m.vertices());
    }

    #[test]
    fn accepts_counts_on_header_line_and_comments() {
        let text = "OFF 3 1 0\n# a triangle\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        let m = parse_off(text).unwrap();
        assert_eq!(m.face_count(), 1);
        assert!(!m.is_closed());
    }

    #[test]
    fn rejects_quads_and_bad_headers() {
        let quad = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        assert!(matches!(parse_off(quad), Err(Error::Parse { line: 7, .. })));
        assert!(matches!(parse_off("PLY\n"), Err(Error::Parse { .. })));
        assert!(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n").is_err());
    }
}
