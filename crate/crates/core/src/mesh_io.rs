//! Mesh file formats: ASCII OBJ and PLY (ascii or binary little-endian),
//! plus a PLY writer with per-face colors.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::math::Vec3;
use crate::mesh::{MeshError, TriangleMesh};

#[derive(Debug, Error)]
pub enum MeshIoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path} at byte {offset}: {message}")]
    Binary { path: String, offset: usize, message: String },
    #[error("{path}: {source}")]
    Mesh { path: String, source: MeshError },
    #[error("{path}: unsupported mesh extension {ext:?} (expected obj or ply)")]
    Extension { path: String, ext: String },
}

/// Loads a triangle mesh from `.obj` or `.ply` by extension.
///
/// Polygons with more than three corners are fan-triangulated. Degenerate
/// faces are dropped by mesh construction; the count is available through
/// [`TriangleMesh::dropped_face_count`].
pub fn load_mesh(path: &Path) -> Result<TriangleMesh, MeshIoError> {
    let display = path.display().to_string();
    match extension(path).as_str() {
        "obj" => load_obj(path),
        "ply" => load_ply(path),
        ext => Err(MeshIoError::Extension { path: display, ext: ext.to_string() }),
    }
}

/// Saves a triangle mesh as `.obj` (ASCII) or `.ply` (binary little-endian)
/// by extension.
pub fn save_mesh(path: &Path, mesh: &TriangleMesh) -> Result<(), MeshIoError> {
    let display = path.display().to_string();
    match extension(path).as_str() {
        "obj" => save_obj(path, mesh),
        "ply" => save_ply(path, mesh, None),
        ext => Err(MeshIoError::Extension { path: display, ext: ext.to_string() }),
    }
}

/// Saves a binary little-endian PLY with one RGB color per face.
pub fn save_colored_ply(
    path: &Path,
    mesh: &TriangleMesh,
    colors: &[[u8; 3]],
) -> Result<(), MeshIoError> {
    assert_eq!(colors.len(), mesh.face_count(), "one color per face");
    save_ply(path, mesh, Some(colors))
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default()
}

fn io_err(path: &Path, source: std::io::Error) -> MeshIoError {
    MeshIoError::Io { path: path.display().to_string(), source }
}

fn load_obj(path: &Path) -> Result<TriangleMesh, MeshIoError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let parse = |line: usize, message: String| MeshIoError::Parse {
        path: display.clone(),
        line,
        message,
    };
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next().unwrap() {
            "v" => {
                let mut coords = [0.0f64; 3];
                for c in coords.iter_mut() {
                    let tok = parts
                        .next()
                        .ok_or_else(|| parse(line_no, "vertex needs 3 coordinates".into()))?;
                    *c = tok
                        .parse()
                        .map_err(|_| parse(line_no, format!("bad vertex coordinate {tok:?}")))?;
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            "f" => {
                let mut corners: Vec<u32> = Vec::new();
                for tok in parts {
                    // accept i, i/j, i/j/k forms; only the position index is used
                    let ix_str = tok.split('/').next().unwrap();
                    let ix: i64 = ix_str
                        .parse()
                        .map_err(|_| parse(line_no, format!("bad face index {tok:?}")))?;
                    if ix < 1 {
                        return Err(parse(
                            line_no,
                            format!("face index {ix} out of range (indices are 1-based)"),
                        ));
                    }
                    corners.push((ix - 1) as u32);
                }
                if corners.len() < 3 {
                    return Err(parse(line_no, "face needs at least 3 indices".into()));
                }
                for i in 1..corners.len() - 1 {
                    faces.push([corners[0], corners[i], corners[i + 1]]);
                }
            }
            // normals, texcoords, groups, and materials are irrelevant here
            _ => {}
        }
    }
    TriangleMesh::new(vertices, faces).map_err(|source| MeshIoError::Mesh { path: display, source })
}

fn save_obj(path: &Path, mesh: &TriangleMesh) -> Result<(), MeshIoError> {
    let mut out = String::new();
    for v in mesh.vertices() {
        // {:?} prints the shortest decimal that parses back to the same f64
        out.push_str(&format!("v {:?} {:?} {:?}\n", v.x, v.y, v.z));
    }
    for f in mesh.faces() {
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(tok: &str) -> Option<Scalar> {
        Some(match tok {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read(self, bytes: &[u8]) -> f64 {
        match self {
            Scalar::I8 => bytes[0] as i8 as f64,
            Scalar::U8 => bytes[0] as f64,
            Scalar::I16 => i16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(bytes[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug)]
enum PlyProperty {
    Scalar { kind: Scalar, name: String },
    List { count: Scalar, elem: Scalar, name: String },
}

impl PlyProperty {
    fn name(&self) -> &str {
        match self {
            PlyProperty::Scalar { name, .. } | PlyProperty::List { name, .. } => name,
        }
    }
}

#[derive(Debug)]
struct PlyElement {
    name: String,
    count: usize,
    props: Vec<PlyProperty>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PlyFormat {
    Ascii,
    BinaryLe,
}

fn load_ply(path: &Path) -> Result<TriangleMesh, MeshIoError> {
    let display = path.display().to_string();
    let data = std::fs::read(path).map_err(|e| io_err(path, e))?;
    let parse = |line: usize, message: String| MeshIoError::Parse {
        path: display.clone(),
        line,
        message,
    };

    // header: ASCII lines up to and including end_header
    let mut offset = 0usize;
    let mut line_no = 0usize;
    let mut format: Option<PlyFormat> = None;
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut saw_magic = false;
    loop {
        let end = data[offset..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|p| offset + p)
            .ok_or_else(|| parse(line_no + 1, "unterminated header".into()))?;
        let line = std::str::from_utf8(&data[offset..end])
            .map_err(|_| parse(line_no + 1, "header is not valid UTF-8".into()))?
            .trim_end_matches('\r')
            .trim();
        offset = end + 1;
        line_no += 1;
        if line_no == 1 {
            if line != "ply" {
                return Err(parse(1, format!("bad magic {line:?} (expected \"ply\")")));
            }
            saw_magic = true;
            continue;
        }
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("comment") | Some("obj_info") | None => {}
            Some("format") => {
                let kind = toks.next().unwrap_or("");
                let version = toks.next().unwrap_or("");
                if version != "1.0" {
                    return Err(parse(line_no, format!("unsupported PLY version {version:?}")));
                }
                format = Some(match kind {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLe,
                    other => {
                        return Err(parse(
                            line_no,
                            format!("unsupported format {other:?} (expected ascii or binary_little_endian)"),
                        ))
                    }
                });
            }
            Some("element") => {
                let name = toks
                    .next()
                    .ok_or_else(|| parse(line_no, "element needs a name".into()))?;
                let count: usize = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| parse(line_no, "element needs a count".into()))?;
                elements.push(PlyElement { name: name.to_string(), count, props: Vec::new() });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| parse(line_no, "property before any element".into()))?;
                let first = toks
                    .next()
                    .ok_or_else(|| parse(line_no, "property needs a type".into()))?;
                if first == "list" {
                    let count = toks.next().and_then(Scalar::parse).ok_or_else(|| {
                        parse(line_no, "list property needs a count type".into())
                    })?;
                    let elem = toks.next().and_then(Scalar::parse).ok_or_else(|| {
                        parse(line_no, "list property needs an element type".into())
                    })?;
                    let name = toks
                        .next()
                        .ok_or_else(|| parse(line_no, "property needs a name".into()))?;
                    element
                        .props
                        .push(PlyProperty::List { count, elem, name: name.to_string() });
                } else {
                    let kind = Scalar::parse(first).ok_or_else(|| {
                        parse(line_no, format!("unknown property type {first:?}"))
                    })?;
                    let name = toks
                        .next()
                        .ok_or_else(|| parse(line_no, "property needs a name".into()))?;
                    element.props.push(PlyProperty::Scalar { kind, name: name.to_string() });
                }
            }
            Some("end_header") => break,
            Some(other) => {
                return Err(parse(line_no, format!("unknown header keyword {other:?}")));
            }
        }
    }
    if !saw_magic {
        return Err(parse(1, "missing ply magic".into()));
    }
    let format = format.ok_or_else(|| parse(line_no, "header has no format line".into()))?;

    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut reader = match format {
        PlyFormat::Ascii => PlyReader::Ascii {
            tokens: AsciiTokens::new(&data[offset..], line_no),
            path: &display,
        },
        PlyFormat::BinaryLe => PlyReader::Binary { data: &data, offset, path: &display },
    };
    for element in &elements {
        let is_vertex = element.name == "vertex";
        let is_face = element.name == "face";
        if is_vertex {
            let find = |name: &str| -> Result<usize, MeshIoError> {
                element
                    .props
                    .iter()
                    .position(|p| p.name() == name)
                    .ok_or_else(|| parse(line_no, format!("vertex element lacks property {name:?}")))
            };
            let (ix, iy, iz) = (find("x")?, find("y")?, find("z")?);
            for _ in 0..element.count {
                let row = reader.read_row(element)?;
                vertices.push(Vec3::new(row.scalar(ix), row.scalar(iy), row.scalar(iz)));
            }
        } else if is_face {
            let list_ix = element
                .props
                .iter()
                .position(|p| {
                    matches!(p, PlyProperty::List { name, .. }
                        if name == "vertex_indices" || name == "vertex_index")
                })
                .ok_or_else(|| {
                    parse(line_no, "face element lacks a vertex_indices list".into())
                })?;
            for _ in 0..element.count {
                let row = reader.read_row(element)?;
                let corners = row.list(list_ix);
                if corners.len() < 3 {
                    return Err(reader.error("face has fewer than 3 indices".into()));
                }
                let as_u32 = |v: f64| -> Result<u32, MeshIoError> {
                    if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
                        Err(reader.error(format!("bad face index {v}")))
                    } else {
                        Ok(v as u32)
                    }
                };
                let c0 = as_u32(corners[0])?;
                for i in 1..corners.len() - 1 {
                    faces.push([c0, as_u32(corners[i])?, as_u32(corners[i + 1])?]);
                }
            }
        } else {
            for _ in 0..element.count {
                reader.read_row(element)?;
            }
        }
    }
    TriangleMesh::new(vertices, faces).map_err(|source| MeshIoError::Mesh { path: display, source })
}

/// One parsed element row: scalars and lists by property position.
struct PlyRow {
    values: Vec<RowValue>,
}

enum RowValue {
    Scalar(f64),
    List(Vec<f64>),
}

impl PlyRow {
    fn scalar(&self, ix: usize) -> f64 {
        match &self.values[ix] {
            RowValue::Scalar(v) => *v,
            RowValue::List(_) => f64::NAN,
        }
    }
    fn list(&self, ix: usize) -> &[f64] {
        match &self.values[ix] {
            RowValue::List(v) => v,
            RowValue::Scalar(_) => &[],
        }
    }
}

struct AsciiTokens<'a> {
    data: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> AsciiTokens<'a> {
    fn new(data: &'a [u8], header_lines: usize) -> Self {
        AsciiTokens { data, pos: 0, line: header_lines + 1 }
    }

    fn next(&mut self) -> Option<(&'a str, usize)> {
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_whitespace() {
            if self.data[self.pos] == b'\n' {
                self.line += 1;
            }
            self.pos += 1;
        }
        if self.pos >= self.data.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .map(|t| (t, self.line))
    }
}

enum PlyReader<'a> {
    Ascii { tokens: AsciiTokens<'a>, path: &'a str },
    Binary { data: &'a [u8], offset: usize, path: &'a str },
}

impl<'a> PlyReader<'a> {
    fn error(&self, message: String) -> MeshIoError {
        match self {
            PlyReader::Ascii { tokens, path } => MeshIoError::Parse {
                path: path.to_string(),
                line: tokens.line,
                message,
            },
            PlyReader::Binary { offset, path, .. } => MeshIoError::Binary {
                path: path.to_string(),
                offset: *offset,
                message,
            },
        }
    }

    fn next_value(&mut self, kind: Scalar) -> Result<f64, MeshIoError> {
        match self {
            PlyReader::Ascii { tokens, path } => {
                let (tok, line) = tokens.next().ok_or_else(|| MeshIoError::Parse {
                    path: path.to_string(),
                    line: tokens.line,
                    message: "unexpected end of data".into(),
                })?;
                tok.parse::<f64>().map_err(|_| MeshIoError::Parse {
                    path: path.to_string(),
                    line,
                    message: format!("bad number {tok:?}"),
                })
            }
            PlyReader::Binary { data, offset, path } => {
                let size = kind.size();
                if *offset + size > data.len() {
                    return Err(MeshIoError::Binary {
                        path: path.to_string(),
                        offset: *offset,
                        message: "unexpected end of data".into(),
                    });
                }
                let v = kind.read(&data[*offset..]);
                *offset += size;
                Ok(v)
            }
        }
    }

    fn read_row(&mut self, element: &PlyElement) -> Result<PlyRow, MeshIoError> {
        let mut values = Vec::with_capacity(element.props.len());
        for prop in &element.props {
            match prop {
                PlyProperty::Scalar { kind, .. } => {
                    values.push(RowValue::Scalar(self.next_value(*kind)?));
                }
                PlyProperty::List { count, elem, .. } => {
                    let n = self.next_value(*count)?;
                    if n < 0.0 || n.fract() != 0.0 || n > 1_000_000.0 {
                        return Err(self.error(format!("bad list count {n}")));
                    }
                    let mut items = Vec::with_capacity(n as usize);
                    for _ in 0..n as usize {
                        items.push(self.next_value(*elem)?);
                    }
                    values.push(RowValue::List(items));
                }
            }
        }
        Ok(PlyRow { values })
    }
}

fn save_ply(
    path: &Path,
    mesh: &TriangleMesh,
    colors: Option<&[[u8; 3]]>,
) -> Result<(), MeshIoError> {
    let mut out: Vec<u8> = Vec::new();
    out.extend_from_slice(b"ply\nformat binary_little_endian 1.0\n");
    out.extend_from_slice(format!("element vertex {}\n", mesh.vertex_count()).as_bytes());
    out.extend_from_slice(b"property float x\nproperty float y\nproperty float z\n");
    out.extend_from_slice(format!("element face {}\n", mesh.face_count()).as_bytes());
    out.extend_from_slice(b"property list uchar int vertex_indices\n");
    if colors.is_some() {
        out.extend_from_slice(
            b"property uchar red\nproperty uchar green\nproperty uchar blue\n",
        );
    }
    out.extend_from_slice(b"end_header\n");
    for v in mesh.vertices() {
        for c in [v.x as f32, v.y as f32, v.z as f32] {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    for (fi, f) in mesh.faces().iter().enumerate() {
        out.push(3u8);
        for &ix in f {
            out.extend_from_slice(&(ix as i32).to_le_bytes());
        }
        if let Some(colors) = colors {
            out.extend_from_slice(&colors[fi]);
        }
    }
    let mut file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(&out).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> TriangleMesh {
        let vertices = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let faces = vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
        TriangleMesh::new(vertices, faces).unwrap()
    }

    #[test]
    fn obj_round_trip_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.obj");
        let mesh = tetra();
        save_mesh(&path, &mesh).unwrap();
        let back = load_mesh(&path).unwrap();
        assert_eq!(back.vertices(), mesh.vertices());
        assert_eq!(back.faces(), mesh.faces());
    }

    #[test]
    fn ply_round_trip_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ply");
        let mesh = tetra();
        save_mesh(&path, &mesh).unwrap();
        let back = load_mesh(&path).unwrap();
        assert_eq!(back.vertices(), mesh.vertices());
        assert_eq!(back.faces(), mesh.faces());
    }

    #[test]
    fn ascii_ply_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ply");
        let text = "ply\nformat ascii 1.0\ncomment test\n\
                    element vertex 3\nproperty float x\nproperty float y\nproperty float z\n\
                    element face 1\nproperty list uchar int vertex_indices\nend_header\n\
                    0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        std::fs::write(&path, text).unwrap();
        let mesh = load_mesh(&path).unwrap();
        assert_eq!(mesh.vertex_count(), 3);
        assert_eq!(mesh.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn obj_fan_triangulates_quads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.obj");
        std::fs::write(&path, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap();
        let mesh = load_mesh(&path).unwrap();
        assert_eq!(mesh.faces(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn obj_zero_area_face_is_dropped_with_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.obj");
        std::fs::write(
            &path,
            "v 0 0 0\nv 1 0 0\nv 2 0 0\nv 0 1 0\nf 1 2 3\nf 1 2 4\n",
        )
        .unwrap();
        let mesh = load_mesh(&path).unwrap();
        assert_eq!(mesh.face_count(), 1);
        assert_eq!(mesh.dropped_face_count(), 1);
    }

    #[test]
    fn obj_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.obj");
        std::fs::write(&path, "v 0 0 0\nv 1 0 zero\n").unwrap();
        match load_mesh(&path).unwrap_err() {
            MeshIoError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn truncated_binary_ply_reports_byte_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ply");
        let mut data = b"ply\nformat binary_little_endian 1.0\n\
                         element vertex 2\nproperty float x\nproperty float y\nproperty float z\n\
                         element face 0\nproperty list uchar int vertex_indices\nend_header\n"
            .to_vec();
        data.extend_from_slice(&1.0f32.to_le_bytes());
        std::fs::write(&path, data).unwrap();
        match load_mesh(&path).unwrap_err() {
            MeshIoError::Binary { offset, .. } => assert!(offset > 0),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn colored_ply_reads_back_with_colors_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ply");
        let mesh = tetra();
        let colors = vec![[255, 0, 0], [0, 255, 0], [0, 0, 255], [128, 128, 128]];
        save_colored_ply(&path, &mesh, &colors).unwrap();
        let back = load_mesh(&path).unwrap();
        assert_eq!(back.faces(), mesh.faces());
    }
}
