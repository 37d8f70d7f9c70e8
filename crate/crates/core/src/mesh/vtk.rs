//! Legacy ASCII VTK (unstructured grid) export and import.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

use super::{MachineGeometry, Mesh, Region};

const TRIANGLE: u8 = 5;

/// Attribute array attached to points or cells.
#[derive(Clone, Copy, Debug)]
pub enum Field<'a> {
    Scalar(&'a [f64]),
    Vector(&'a [[f64; 2]]),
}

impl Field<'_> {
    fn len(&self) -> usize {
        match self {
            Field::Scalar(v) => v.len(),
            Field::Vector(v) => v.len(),
        }
    }
}

fn write_field<W: Write>(w: &mut W, name: &str, f: Field<'_>) -> Result<()> {
    match f {
        Field::Scalar(v) => {
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for x in v {
                writeln!(w, "{x:e}")?;
            }
        }
        Field::Vector(v) => {
            writeln!(w, "VECTORS {name} double")?;
            for x in v {
                writeln!(w, "{:e} {:e} 0", x[0], x[1])?;
            }
        }
    }
    Ok(())
}

/// Writes the mesh with region ids as cell data plus optional fields.
pub fn write_vtk<W: Write>(
    mut w: W,
    mesh: &Mesh,
    title: &str,
    point_fields: &[(&str, Field<'_>)],
    cell_fields: &[(&str, Field<'_>)],
) -> Result<()> {
    for (name, f) in point_fields {
        if f.len() != mesh.n_nodes() {
            return Err(Error::InvalidInput(format!("point field {name} has wrong length")));
        }
    }
    for (name, f) in cell_fields {
        if f.len() != mesh.n_triangles() {
            return Err(Error::InvalidInput(format!("cell field {name} has wrong length")));
        }
    }
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.replace('\n', " "))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_nodes())?;
    for p in &mesh.nodes {
        writeln!(w, "{:e} {:e} 0", p[0], p[1])?;
    }
    let nt = mesh.n_triangles();
    writeln!(w, "CELLS {} {}", nt, 4 * nt)?;
    for t in &mesh.triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "{TRIANGLE}")?;
    }
    writeln!(w, "CELL_DATA {nt}")?;
    writeln!(w, "SCALARS region int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for r in &mesh.regions {
        writeln!(w, "{}", r.id())?;
    }
    for (name, f) in cell_fields {
        write_field(&mut w, name, *f)?;
    }
    if !point_fields.is_empty() {
        writeln!(w, "POINT_DATA {}", mesh.n_nodes())?;
        for (name, f) in point_fields {
            write_field(&mut w, name, *f)?;
        }
    }
    Ok(())
}

struct Tokens<R> {
    reader: R,
    line: usize,
    buf: Vec<String>,
}

impl<R: BufRead> Tokens<R> {
    fn next_line(&mut self) -> Result<Option<String>> {
        let mut s = String::new();
        loop {
            s.clear();
            if self.reader.read_line(&mut s)? == 0 {
                return Ok(None);
            }
            self.line += 1;
            if !s.trim().is_empty() {
                return Ok(Some(s.trim().to_string()));
            }
        }
    }

    fn token(&mut self) -> Result<String> {
        while self.buf.is_empty() {
            let l = self.next_line()?.ok_or_else(|| self.err("unexpected end of file"))?;
            self.buf = l.split_whitespace().rev().map(str::to_string).collect();
        }
        Ok(self.buf.pop().unwrap())
    }

    fn parse<T: std::str::FromStr>(&mut self) -> Result<T> {
        let t = self.token()?;
        t.parse().map_err(|_| self.err(&format!("cannot parse {t:?}")))
    }

    fn err(&self, m: &str) -> Error {
        Error::Parse {
            line: self.line,
            message: m.to_string(),
        }
    }
}

/// Reads a mesh written by [`write_vtk`] (or any triangle-only legacy file
/// with an integer `region` cell array) and re-derives boundary labels from
/// `geometry`.
pub fn read_vtk<R: BufRead>(reader: R, geometry: &MachineGeometry) -> Result<Mesh> {
    let mut tk = Tokens {
        reader,
        line: 0,
        buf: Vec::new(),
    };
    let header = tk.next_line()?.ok_or_else(|| tk.err("empty file"))?;
    if !header.starts_with("# vtk DataFile") {
        return Err(tk.err("missing VTK header"));
    }
    tk.next_line()?;
    let format = tk.next_line()?.unwrap_or_default();
    if format != "ASCII" {
        return Err(tk.err("only ASCII files are supported"));
    }
    let mut nodes = Vec::new();
    let mut triangles = Vec::new();
    let mut regions = Vec::new();
    while let Ok(key) = tk.token() {
        match key.as_str() {
            "DATASET" => {
                let kind = tk.token()?;
                if kind != "UNSTRUCTURED_GRID" {
                    return Err(tk.err("dataset must be UNSTRUCTURED_GRID"));
                }
            }
            "POINTS" => {
                let n: usize = tk.parse()?;
                tk.token()?;
                for _ in 0..n {
                    let x: f64 = tk.parse()?;
                    let y: f64 = tk.parse()?;
                    let _z: f64 = tk.parse()?;
                    nodes.push([x, y]);
                }
            }
            "CELLS" => {
                let n: usize = tk.parse()?;
                tk.token()?;
                for _ in 0..n {
                    let k: usize = tk.parse()?;
                    if k != 3 {
                        return Err(tk.err("only triangle cells are supported"));
                    }
                    triangles.push([tk.parse()?, tk.parse()?, tk.parse()?]);
                }
            }
            "CELL_TYPES" => {
                let n: usize = tk.parse()?;
                for _ in 0..n {
                    let t: u8 = tk.parse()?;
                    if t != TRIANGLE {
                        return Err(tk.err("only triangle cells are supported"));
                    }
                }
            }
            "CELL_DATA" | "POINT_DATA" => {
                tk.token()?;
            }
            "SCALARS" => {
                let name = tk.token()?;
                let _ty = tk.token()?;
                // optional component count
                let mut next = tk.token()?;
                if next != "LOOKUP_TABLE" {
                    next = tk.token()?;
                }
                if next != "LOOKUP_TABLE" {
                    return Err(tk.err("expected LOOKUP_TABLE"));
                }
                tk.token()?;
                if name == "region" {
                    for _ in 0..triangles.len() {
                        let id: u8 = tk.parse()?;
                        regions.push(Region::from_id(id)?);
                    }
                } else {
                    // other arrays are skipped; their size follows the last DATA section
                    skip_until_keyword(&mut tk)?;
                }
            }
            "VECTORS" => {
                tk.token()?;
                tk.token()?;
                skip_until_keyword(&mut tk)?;
            }
            _ => return Err(tk.err(&format!("unexpected keyword {key}"))),
        }
    }
    if regions.len() != triangles.len() {
        return Err(Error::Parse {
            line: tk.line,
            message: "missing region cell data".into(),
        });
    }
    Mesh::from_raw(geometry, nodes, triangles, regions)
}

fn skip_until_keyword<R: BufRead>(tk: &mut Tokens<R>) -> Result<()> {
    loop {
        let Ok(t) = tk.token() else {
            return Ok(());
        };
        if t.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) && t != "inf" && t != "NaN" && t != "nan" {
            tk.buf.push(t);
            return Ok(());
        }
    }
}
