//! Plain-text mesh format and nodal field CSV.
//!
//! ```text
//! $nodes
//! <count>
//! <id> <x> <y>
//! $triangles
//! <count>
//! <id> <n1> <n2> <n3> <tag +|->
//! $boundary
//! <count>
//! <id> <n1> <n2> <marker>
//! ```
//! The `$boundary` section is optional; without it boundary edges are
//! recovered from the triangles with marker 0.

use std::io::{BufRead, Write};

use nalgebra::Point2;

use super::{BoundaryEdge, DiscreteField, Mesh, Result, SolverError};
use crate::geometry::Side;

pub fn write_mesh(mesh: &Mesh, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "$nodes")?;
    writeln!(w, "{}", mesh.n_nodes())?;
    for (i, p) in mesh.nodes.iter().enumerate() {
        writeln!(w, "{i} {} {}", p.x, p.y)?;
    }
    writeln!(w, "$triangles")?;
    writeln!(w, "{}", mesh.n_triangles())?;
    for (i, (t, s)) in mesh.triangles.iter().zip(&mesh.sides).enumerate() {
        writeln!(w, "{i} {} {} {} {}", t[0], t[1], t[2], s.tag())?;
    }
    writeln!(w, "$boundary")?;
    writeln!(w, "{}", mesh.boundary_edges.len())?;
    for (i, e) in mesh.boundary_edges.iter().enumerate() {
        writeln!(w, "{i} {} {} {}", e.nodes[0], e.nodes[1], e.marker)?;
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> SolverError {
    SolverError::Parse(format!("line {line}: {msg}"))
}

pub fn read_mesh(r: impl BufRead) -> Result<Mesh> {
    let lines: Vec<(usize, String)> = r
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l.trim().to_string())))
        .collect::<std::io::Result<_>>()
        .map_err(|e| SolverError::Io(e.to_string()))?;
    let mut it = lines.into_iter().filter(|(_, l)| !l.is_empty());
    let mut nodes = Vec::new();
    let mut tris = Vec::new();
    let mut sides = Vec::new();
    let mut boundary = None;
    while let Some((ln, header)) = it.next() {
        let (cl, count) = it.next().ok_or_else(|| parse_err(ln, "missing count"))?;
        let count: usize = count.parse().map_err(|e| parse_err(cl, e))?;
        let mut rows = Vec::with_capacity(count);
        for _ in 0..count {
            let (rl, row) = it.next().ok_or_else(|| parse_err(cl, "truncated section"))?;
            rows.push((rl, row.split_whitespace().map(str::to_string).collect::<Vec<_>>()));
        }
        match header.as_str() {
            "$nodes" => {
                for (rl, f) in rows {
                    if f.len() != 3 {
                        return Err(parse_err(rl, "expected `id x y`"));
                    }
                    let x: f64 = f[1].parse().map_err(|e| parse_err(rl, e))?;
                    let y: f64 = f[2].parse().map_err(|e| parse_err(rl, e))?;
                    nodes.push(Point2::new(x, y));
                }
            }
            "$triangles" => {
                for (rl, f) in rows {
                    if f.len() != 5 {
                        return Err(parse_err(rl, "expected `id n1 n2 n3 tag`"));
                    }
                    let mut t = [0usize; 3];
                    for k in 0..3 {
                        t[k] = f[k + 1].parse().map_err(|e| parse_err(rl, e))?;
                    }
                    let side = f[4]
                        .chars()
                        .next()
                        .and_then(Side::from_tag)
                        .ok_or_else(|| parse_err(rl, "tag must be + or -"))?;
                    tris.push(t);
                    sides.push(side);
                }
            }
            "$boundary" => {
                let mut edges = Vec::with_capacity(count);
                for (rl, f) in rows {
                    if f.len() != 4 {
                        return Err(parse_err(rl, "expected `id n1 n2 marker`"));
                    }
                    let a: usize = f[1].parse().map_err(|e| parse_err(rl, e))?;
                    let b: usize = f[2].parse().map_err(|e| parse_err(rl, e))?;
                    let marker: u32 = f[3].parse().map_err(|e| parse_err(rl, e))?;
                    edges.push(BoundaryEdge { nodes: [a, b], marker });
                }
                boundary = Some(edges);
            }
            other => return Err(parse_err(ln, format!("unknown section {other}"))),
        }
    }
    let mut mesh = Mesh::from_parts(nodes, tris, sides)?;
    if let Some(edges) = boundary {
        mesh.boundary_edges = edges;
    }
    Ok(mesh)
}

pub fn write_field_csv(field: &DiscreteField, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "node_id,value")?;
    for (i, v) in field.values.iter().enumerate() {
        writeln!(w, "{i},{v}")?;
    }
    Ok(())
}
