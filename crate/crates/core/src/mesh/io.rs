//! IMM4 text format.
//!
//! ```text
//! IMM4 4 <nv> <nf>
//! <nv lines of 4 floats>
//! <nf lines of 3 zero-based vertex indices>
//! ```
//! Lines starting with `#` are skipped (but still counted for error lines).

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use super::{DiscreteImmersion, ParamMesh};
use crate::error::{Error, Result};

pub fn parse_imm4(text: &str) -> Result<DiscreteImmersion> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.starts_with('#') && !l.is_empty());
    let total_lines = text.lines().count();
    let eof = |what: &str| Error::Parse {
        line: total_lines + 1,
        msg: format!("unexpected end of file, expected {what}"),
    };

    let (hline, header) = lines.next().ok_or_else(|| eof("header"))?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.len() != 4 || tok[0] != "IMM4" {
        return Err(Error::Parse {
            line: hline,
            msg: "expected 'IMM4 <m> <nv> <nf>'".into(),
        });
    }
    let num = |s: &str| {
        s.parse::<usize>().map_err(|_| Error::Parse {
            line: hline,
            msg: format!("bad count '{s}'"),
        })
    };
    let (m, nv, nf) = (num(tok[1])?, num(tok[2])?, num(tok[3])?);
    if m != 4 {
        return Err(Error::UnsupportedAmbient(m));
    }

    let mut coords = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| eof("vertex line"))?;
        let vals: Vec<f64> = l
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: ln,
                msg: format!("bad float: {e}"),
            })?;
        if vals.len() != 4 {
            return Err(Error::Parse {
                line: ln,
                msg: format!("expected 4 coordinates, found {}", vals.len()),
            });
        }
        coords.push([vals[0], vals[1], vals[2], vals[3]]);
    }

    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| eof("face line"))?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: ln,
                msg: format!("bad index: {e}"),
            })?;
        if idx.len() != 3 {
            return Err(Error::Parse {
                line: ln,
                msg: format!("expected 3 indices, found {}", idx.len()),
            });
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= nv) {
            return Err(Error::Parse {
                line: ln,
                msg: format!("vertex index {bad} out of range"),
            });
        }
        faces.push([idx[0], idx[1], idx[2]]);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::Parse {
            line: ln,
            msg: "trailing content after faces".into(),
        });
    }
    DiscreteImmersion::new(Arc::new(ParamMesh::new(nv, faces)?), coords)
}

pub fn write_imm4(imm: &DiscreteImmersion) -> String {
    let mut s = String::with_capacity(imm.n_vertices() * 100 + imm.n_faces() * 24);
    let _ = writeln!(s, "IMM4 4 {} {}", imm.n_vertices(), imm.n_faces());
    for y in imm.coords() {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e} {:.16e}", y[0], y[1], y[2], y[3]);
    }
    for f in imm.mesh().faces() {
        let _ = writeln!(s, "{} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn load(path: impl AsRef<Path>) -> Result<DiscreteImmersion> {
    parse_imm4(&std::fs::read_to_string(path)?)
}

pub fn save(imm: &DiscreteImmersion, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_imm4(imm))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate;
    use crate::mesh::Shape;

    #[test]
    fn round_trip_is_bit_exact() {
        let e = generate(Shape::Equator { level: 3 }).unwrap();
        let back = parse_imm4(&write_imm4(&e)).unwrap();
        assert_eq!(back.coords(), e.coords());
        assert_eq!(back.mesh().faces(), e.mesh().faces());
    }

    #[test]
    fn short_vertex_table_reports_physical_line() {
        let e = generate(Shape::Equator { level: 0 }).unwrap();
        let text = write_imm4(&e);
        let mut lines: Vec<&str> = text.lines().collect();
        lines.remove(12); // drop the last vertex line
        let err = parse_imm4(&lines.join("\n")).unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 13,
                msg: "expected 4 coordinates, found 3".into()
            }
        );
    }

    #[test]
    fn comments_count_toward_line_numbers() {
        let text = "# hi\nIMM4 4 1 0\n# c\n1 0 0\n";
        match parse_imm4(text) {
            Err(Error::Parse { line: 4, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn open_mesh_fails_validation() {
        let text = "IMM4 4 4 3\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n0 2 1\n0 1 3\n1 2 3\n";
        match parse_imm4(text) {
            Err(Error::Validation(msg)) => assert!(msg.starts_with("closed")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn other_ambient_dimension_is_rejected() {
        assert_eq!(
            parse_imm4("IMM4 3 0 0\n").unwrap_err(),
            Error::UnsupportedAmbient(3)
        );
    }
}
