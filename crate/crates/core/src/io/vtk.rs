//! Legacy ASCII VTK unstructured grids. Floats are written with 17
//! significant digits so a written mesh reads back bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::mesh::{Point, SurfaceMesh};

use super::write_atomic;

const VTK_TRIANGLE: u32 = 5;

/// Named nodal data attached to a written mesh.
#[derive(Debug, Clone, Copy)]
pub enum PointData<'a> {
    Scalar(&'a str, &'a [f64]),
    Vector(&'a str, &'a [Vector3<f64>]),
}

/// Contents of a VTK file as read back.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VtkMesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub point_scalars: Vec<(String, Vec<f64>)>,
    pub point_vectors: Vec<(String, Vec<Vector3<f64>>)>,
    pub cell_scalars: Vec<(String, Vec<f64>)>,
}

impl VtkMesh {
    pub fn point_vectors(&self, name: &str) -> Option<&[Vector3<f64>]> {
        self.point_vectors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn point_scalars(&self, name: &str) -> Option<&[f64]> {
        self.point_scalars
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn cell_scalars(&self, name: &str) -> Option<&[f64]> {
        self.cell_scalars
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

fn float(out: &mut String, x: f64) {
    write!(out, "{x:.16e}").expect("writing to a string");
}

/// Renders `mesh` with σ per triangle as cell data and `fields` as point
/// data.
pub fn render_mesh(mesh: &SurfaceMesh, title: &str, fields: &[PointData<'_>]) -> Result<String> {
    let n = mesh.vertex_count();
    let m = mesh.triangle_count();
    for f in fields {
        let len = match f {
            PointData::Scalar(_, v) => v.len(),
            PointData::Vector(_, v) => v.len(),
        };
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    let mut out = String::with_capacity(64 * (n + m));
    let title = title.replace('\n', " ");
    writeln!(
        out,
        "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID"
    )
    .unwrap();
    writeln!(out, "POINTS {n} double").unwrap();
    for p in mesh.vertices() {
        for c in 0..3 {
            if c > 0 {
                out.push(' ');
            }
            float(&mut out, p[c]);
        }
        out.push('\n');
    }
    writeln!(out, "CELLS {m} {}", 4 * m).unwrap();
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(out, "CELL_TYPES {m}").unwrap();
    for _ in 0..m {
        writeln!(out, "{VTK_TRIANGLE}").unwrap();
    }
    writeln!(out, "CELL_DATA {m}\nSCALARS sigma double 1\nLOOKUP_TABLE default").unwrap();
    for t in 0..m {
        float(&mut out, mesh.triangle_quality(t)?);
        out.push('\n');
    }
    if !fields.is_empty() {
        writeln!(out, "POINT_DATA {n}").unwrap();
    }
    for f in fields {
        match f {
            PointData::Scalar(name, values) => {
                writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
                for &v in values.iter() {
                    float(&mut out, v);
                    out.push('\n');
                }
            }
            PointData::Vector(name, values) => {
                writeln!(out, "VECTORS {name} double").unwrap();
                for v in values.iter() {
                    float(&mut out, v.x);
                    out.push(' ');
                    float(&mut out, v.y);
                    out.push(' ');
                    float(&mut out, v.z);
                    out.push('\n');
                }
            }
        }
    }
    Ok(out)
}

pub fn write_mesh(path: &Path, mesh: &SurfaceMesh, title: &str, fields: &[PointData<'_>]) -> Result<()> {
    write_atomic(path, &render_mesh(mesh, title, fields)?)
}

pub fn read_mesh(path: &Path) -> Result<VtkMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text, path)
}

/// Token stream over the body of the file that remembers line numbers.
struct Tokens<'a> {
    path: &'a Path,
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        let line = self
            .items
            .get(self.pos.min(self.items.len().saturating_sub(1)))
            .map_or(0, |t| t.0);
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Result<&'a str> {
        let t = self
            .items
            .get(self.pos)
            .map(|t| t.1)
            .ok_or_else(|| self.err("unexpected end of file"))?;
        self.pos += 1;
        Ok(t)
    }

    fn peek(&self) -> Option<&'a str> {
        self.items.get(self.pos).map(|t| t.1)
    }

    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let t = self.next()?;
        t.parse().map_err(|_| {
            self.pos -= 1;
            self.err(format!("expected {what}, got '{t}'"))
        })
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        let t = self.next()?;
        if t.eq_ignore_ascii_case(word) {
            Ok(())
        } else {
            self.pos -= 1;
            Err(self.err(format!("expected {word}, got '{t}'")))
        }
    }
}

pub fn parse_mesh(text: &str, path: &Path) -> Result<VtkMesh> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if !header.starts_with("# vtk DataFile") {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "not a legacy VTK file".into(),
        });
    }
    // the title line is free text
    lines.next();
    let items = text
        .lines()
        .enumerate()
        .skip(2)
        .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
        .collect();
    let mut tk = Tokens { path, items, pos: 0 };
    tk.expect("ASCII")?;
    tk.expect("DATASET")?;
    tk.expect("UNSTRUCTURED_GRID")?;
    let mut mesh = VtkMesh::default();
    let mut section: Option<(bool, usize)> = None;
    while let Some(word) = tk.peek() {
        tk.next()?;
        match word.to_ascii_uppercase().as_str() {
            "POINTS" => {
                let n: usize = tk.parse("point count")?;
                tk.next()?;
                mesh.vertices.reserve(n);
                for _ in 0..n {
                    let x = tk.parse("coordinate")?;
                    let y = tk.parse("coordinate")?;
                    let z = tk.parse("coordinate")?;
                    mesh.vertices.push(Point::new(x, y, z));
                }
            }
            "CELLS" => {
                let m: usize = tk.parse("cell count")?;
                tk.next()?;
                for _ in 0..m {
                    let k: usize = tk.parse("cell size")?;
                    if k != 3 {
                        return Err(tk.err(format!("only triangles are supported, got a cell of size {k}")));
                    }
                    mesh.triangles
                        .push([tk.parse("index")?, tk.parse("index")?, tk.parse("index")?]);
                }
            }
            "CELL_TYPES" => {
                let m: usize = tk.parse("cell count")?;
                for _ in 0..m {
                    let t: u32 = tk.parse("cell type")?;
                    if t != VTK_TRIANGLE {
                        return Err(tk.err(format!("only triangles are supported, got cell type {t}")));
                    }
                }
            }
            "CELL_DATA" => section = Some((false, tk.parse("cell count")?)),
            "POINT_DATA" => section = Some((true, tk.parse("point count")?)),
            "SCALARS" => {
                let (on_points, n) = section.ok_or_else(|| tk.err("SCALARS outside a data section"))?;
                let name = tk.next()?.to_string();
                tk.next()?;
                if tk.peek().is_some_and(|t| t.parse::<u32>().is_ok()) {
                    tk.next()?;
                }
                tk.expect("LOOKUP_TABLE")?;
                tk.next()?;
                let values = (0..n).map(|_| tk.parse("value")).collect::<Result<Vec<f64>>>()?;
                if on_points {
                    mesh.point_scalars.push((name, values));
                } else {
                    mesh.cell_scalars.push((name, values));
                }
            }
            "VECTORS" => {
                let (on_points, n) = section.ok_or_else(|| tk.err("VECTORS outside a data section"))?;
                if !on_points {
                    return Err(tk.err("cell vectors are not supported"));
                }
                let name = tk.next()?.to_string();
                tk.next()?;
                let mut values = Vec::with_capacity(n);
                for _ in 0..n {
                    values.push(Vector3::new(tk.parse("value")?, tk.parse("value")?, tk.parse("value")?));
                }
                mesh.point_vectors.push((name, values));
            }
            other => return Err(tk.err(format!("unsupported section '{other}'"))),
        }
    }
    Ok(mesh)
}
