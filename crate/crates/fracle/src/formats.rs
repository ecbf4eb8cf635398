//! On-disk formats: solution JSON, dense binary matrices, CSV tables and SVG.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use fracle_core::exponents::RegionGrid;
use fracle_core::solver::TraceEntry;
use fracle_core::spectral::ProductElement;
use fracle_core::{make_grid, DomainGrid, GridFunction};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SOLUTION_FORMAT: &str = "fracle-solution";
pub const MATRIX_MAGIC: &[u8; 8] = b"FRACLEMX";
pub const MATRIX_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDescriptor {
    pub dim: usize,
    pub extent: Vec<[f64; 2]>,
    pub n_interior: Vec<usize>,
}

impl GridDescriptor {
    pub fn of(g: &DomainGrid) -> Self {
        Self {
            dim: g.dim(),
            extent: g.extent().iter().map(|e| [e.0, e.1]).collect(),
            n_interior: g.n_interior().to_vec(),
        }
    }

    pub fn build(&self) -> Result<DomainGrid, CliError> {
        if self.extent.len() != self.dim || self.n_interior.len() != self.dim {
            return Err(CliError::Invalid(format!("grid descriptor: dim {} does not match its axes", self.dim)));
        }
        let extent: Vec<(f64, f64)> = self.extent.iter().map(|e| (e[0], e[1])).collect();
        make_grid(self.dim, &extent, &self.n_interior).map_err(|e| CliError::Invalid(format!("grid descriptor: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub format: String,
    pub version: u32,
    pub grid: GridDescriptor,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Invalid(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn solution_json(z: &ProductElement) -> String {
    to_json(&SolutionFile {
        format: SOLUTION_FORMAT.to_string(),
        version: 1,
        grid: GridDescriptor::of(z.grid()),
        u: z.u.values().to_vec(),
        v: z.v.values().to_vec(),
    })
}

pub fn read_solution(path: &Path) -> Result<ProductElement, CliError> {
    let bad = |msg: String| CliError::Invalid(format!("solution {}: {msg}", path.display()));
    let text = fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let file: SolutionFile = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    if file.format != SOLUTION_FORMAT || file.version != 1 {
        return Err(bad(format!("unsupported format {} v{}", file.format, file.version)));
    }
    let grid = file.grid.build()?;
    let u = GridFunction::new(grid, file.u).map_err(|e| bad(e.to_string()))?;
    let v = GridFunction::new(grid, file.v).map_err(|e| bad(e.to_string()))?;
    if u.values().iter().chain(v.values()).any(|x| !x.is_finite()) {
        return Err(bad(String::from("non-finite nodal value")));
    }
    Ok(ProductElement { u, v })
}

/// Dense matrix with header `{N, kind, s}` and an auxiliary vector.
///
/// Layout (little endian): magic, `u32` version, `u64` N, `u32` kind length,
/// kind bytes, `f64` s (NaN when absent), N*N row-major `f64` entries,
/// `u64` aux length, aux `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMatrix {
    pub n: usize,
    pub kind: String,
    pub s: Option<f64>,
    pub entries: Vec<f64>,
    pub aux: Vec<f64>,
}

impl BinaryMatrix {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(40 + self.kind.len() + 8 * (self.entries.len() + self.aux.len()));
        out.extend_from_slice(MATRIX_MAGIC);
        out.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&(self.kind.len() as u32).to_le_bytes());
        out.extend_from_slice(self.kind.as_bytes());
        out.extend_from_slice(&self.s.unwrap_or(f64::NAN).to_le_bytes());
        for x in &self.entries {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&(self.aux.len() as u64).to_le_bytes());
        for x in &self.aux {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CliError> {
        let mut r = Reader(bytes);
        if r.take(8)? != MATRIX_MAGIC {
            return Err(malformed("bad magic"));
        }
        if r.u32()? != MATRIX_VERSION {
            return Err(malformed("unsupported version"));
        }
        let n = r.u64()? as usize;
        let klen = r.u32()? as usize;
        let kind = String::from_utf8(r.take(klen)?.to_vec()).map_err(|_| malformed("kind is not UTF-8"))?;
        let s = r.f64s(1)?[0];
        let entries = r.f64s(n.checked_mul(n).ok_or_else(|| malformed("size overflow"))?)?;
        let alen = r.u64()? as usize;
        let aux = r.f64s(alen)?;
        if !r.0.is_empty() {
            return Err(malformed("trailing bytes"));
        }
        Ok(Self { n, kind, s: (!s.is_nan()).then_some(s), entries, aux })
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::Invalid(format!("cannot create {}: {e}", dir.display())))?;
        }
        let mut f = fs::File::create(path).map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))?;
        f.write_all(&self.encode()).map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::decode(&bytes)
    }
}

fn malformed(what: &str) -> CliError {
    CliError::Invalid(format!("matrix file: {what}"))
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8], CliError> {
        if self.0.len() < k {
            return Err(malformed("truncated"));
        }
        let (head, tail) = self.0.split_at(k);
        self.0 = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32, CliError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CliError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, k: usize) -> Result<Vec<f64>, CliError> {
        let raw = self.take(k.checked_mul(8).ok_or_else(|| malformed("size overflow"))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn matrix_csv(n: usize, entries: &[f64]) -> String {
    let mut out = String::new();
    for row in entries.chunks(n) {
        let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn solution_csv(z: &ProductElement) -> String {
    let g = z.grid();
    let mut out = String::from(if g.dim() == 1 { "x,u,v\n" } else { "x,y,u,v\n" });
    for (i, x) in g.nodes().enumerate() {
        let (u, v) = (z.u.values()[i], z.v.values()[i]);
        if g.dim() == 1 {
            writeln!(out, "{},{u},{v}", x[0]).unwrap();
        } else {
            writeln!(out, "{},{},{u},{v}", x[0], x[1]).unwrap();
        }
    }
    out
}

pub fn trace_csv(trace: &[TraceEntry]) -> String {
    let mut out = String::from("iteration,energy,grad_norm,e_norm\n");
    for (k, t) in trace.iter().enumerate() {
        writeln!(out, "{k},{},{},{}", t.energy, t.grad_norm, t.e_norm).unwrap();
    }
    out
}

pub fn region_csv(r: &RegionGrid) -> String {
    let mut out = String::from("i,j,p,q,pq0,pq1,corollary,window\n");
    for (k, c) in r.cells.iter().enumerate() {
        let (i, j) = (k % r.resolution, k / r.resolution);
        writeln!(out, "{i},{j},{},{},{},{},{},{}", c.p, c.q, c.pq0 as u8, c.pq1 as u8, c.corollary as u8, c.window as u8).unwrap();
    }
    out
}

/// Shaded membership grid: `p` to the right, `q` upward, one square per cell.
pub fn region_svg(r: &RegionGrid) -> String {
    const CELL: usize = 4;
    let side = r.resolution * CELL;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{side}" height="{side}" viewBox="0 0 {side} {side}">"#
    )
    .unwrap();
    writeln!(out, "<title>n={} s={} p=[{},{}] q=[{},{}]</title>", r.n, r.s, r.p_range.0, r.p_range.1, r.q_range.0, r.q_range.1).unwrap();
    writeln!(out, r##"<rect x="0" y="0" width="{side}" height="{side}" fill="#ffffff"/>"##).unwrap();
    for (k, c) in r.cells.iter().enumerate() {
        let fill = match (c.window, c.corollary, c.pq0) {
            (true, true, _) => "#1f4e9c",
            (true, false, _) => "#8fb3e8",
            (false, _, true) => "#f2c48d",
            _ => continue,
        };
        let (i, j) = (k % r.resolution, k / r.resolution);
        let (x, y) = (i * CELL, (r.resolution - 1 - j) * CELL);
        writeln!(out, r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}"/>"#).unwrap();
    }
    out.push_str("</svg>\n");
    out
}
