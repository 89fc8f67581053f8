//! Plain-text mesh and checkpoint formats.
//!
//! Mesh file:
//! ```text
//! <N> nodes <T> triangles <B> edges
//! x y              (N rows)
//! a b c            (T rows)
//! a b TagName      (B rows)
//! ```
//! A checkpoint is the same format with a third column on the node rows
//! holding the nodal coefficient. Floats are printed with the shortest
//! round-trip representation, so export → import → export is stable.

use crate::assembly::Field;
use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

pub fn mesh_to_text(mesh: &Mesh) -> String {
    render(mesh, None)
}

/// Field checkpoint: the mesh text format plus a coefficient column.
pub fn field_to_text(field: &Field) -> String {
    render(field.mesh(), Some(field.values()))
}

fn render(mesh: &Mesh, coeffs: Option<&[f64]>) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{} nodes {} triangles {} edges",
        mesh.n_nodes(),
        mesh.n_triangles(),
        mesh.boundary_edges.len()
    )
    .unwrap();
    for (i, &(x, y)) in mesh.nodes.iter().enumerate() {
        match coeffs {
            Some(c) => writeln!(out, "{} {} {}", x, y, c[i]).unwrap(),
            None => writeln!(out, "{} {}", x, y).unwrap(),
        }
    }
    for tri in &mesh.triangles {
        writeln!(out, "{} {} {}", tri[0], tri[1], tri[2]).unwrap();
    }
    for e in &mesh.boundary_edges {
        writeln!(out, "{} {} {}", e.a, e.b, e.tag.name()).unwrap();
    }
    out
}

pub fn mesh_from_text(text: &str) -> Result<Arc<Mesh>> {
    parse(text, false).map(|(mesh, _)| mesh)
}

pub fn field_from_text(text: &str) -> Result<Field> {
    let (mesh, coeffs) = parse(text, true)?;
    Field::from_values(&mesh, coeffs.expect("coefficients requested"))
}

fn parse(text: &str, with_coeffs: bool) -> Result<(Arc<Mesh>, Option<Vec<f64>>)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty mesh file".into()))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || Error::Parse(format!("malformed header line '{header}'"));
    if tokens.len() != 6 || tokens[1] != "nodes" || tokens[3] != "triangles" || tokens[5] != "edges"
    {
        return Err(bad_header());
    }
    let n: usize = tokens[0].parse().map_err(|_| bad_header())?;
    let t: usize = tokens[2].parse().map_err(|_| bad_header())?;
    let b: usize = tokens[4].parse().map_err(|_| bad_header())?;

    let mut take = |what: &str| -> Result<(usize, &str)> {
        lines
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| Error::Parse(format!("unexpected end of file while reading {what}")))
    };

    let mut nodes = Vec::with_capacity(n);
    let mut coeffs = if with_coeffs { Some(Vec::with_capacity(n)) } else { None };
    for _ in 0..n {
        let (lineno, line) = take("nodes")?;
        let cols: Vec<&str> = line.split_whitespace().collect();
        let expect = if with_coeffs { 3 } else { 2 };
        if cols.len() != expect {
            return Err(Error::Parse(format!(
                "line {lineno}: expected {expect} columns, got {}",
                cols.len()
            )));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Parse(format!("line {lineno}: bad number '{s}'")))
        };
        nodes.push((parse_f(cols[0])?, parse_f(cols[1])?));
        if let Some(c) = coeffs.as_mut() {
            c.push(parse_f(cols[2])?);
        }
    }
    let mut triangles = Vec::with_capacity(t);
    for _ in 0..t {
        let (lineno, line) = take("triangles")?;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 3 {
            return Err(Error::Parse(format!("line {lineno}: triangle row needs 3 indices")));
        }
        let parse_i = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::Parse(format!("line {lineno}: bad index '{s}'")))
        };
        triangles.push([parse_i(cols[0])?, parse_i(cols[1])?, parse_i(cols[2])?]);
    }
    let mut tags = Vec::with_capacity(b);
    for _ in 0..b {
        let (lineno, line) = take("edges")?;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 3 {
            return Err(Error::Parse(format!(
                "line {lineno}: edge row needs two indices and a tag"
            )));
        }
        let parse_i = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::Parse(format!("line {lineno}: bad index '{s}'")))
        };
        tags.push((parse_i(cols[0])?, parse_i(cols[1])?, BoundaryTag::parse(cols[2])?));
    }

    let mesh = Mesh::from_parts(nodes, triangles, &tags)?;
    if mesh.boundary_edges.len() != b {
        return Err(Error::Parse(format!(
            "file lists {b} boundary edges but the triangulation has {}",
            mesh.boundary_edges.len()
        )));
    }
    for &(a, bb, _) in &tags {
        let key = (a.min(bb), a.max(bb));
        if !mesh
            .boundary_edges
            .iter()
            .any(|e| (e.a.min(e.b), e.a.max(e.b)) == key)
        {
            return Err(Error::Parse(format!(
                "edge ({a}, {bb}) is not a boundary edge of the triangulation"
            )));
        }
    }
    Ok((mesh, coeffs))
}

pub fn write_mesh(path: &Path, mesh: &Mesh) -> Result<()> {
    std::fs::write(path, mesh_to_text(mesh))?;
    Ok(())
}

pub fn read_mesh(path: &Path) -> Result<Arc<Mesh>> {
    mesh_from_text(&std::fs::read_to_string(path)?)
}

pub fn write_checkpoint(path: &Path, field: &Field) -> Result<()> {
    std::fs::write(path, field_to_text(field))?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Field> {
    field_from_text(&std::fs::read_to_string(path)?)
}
