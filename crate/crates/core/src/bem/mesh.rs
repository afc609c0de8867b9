//! Closed triangulated surfaces and their OFF / MSMS readers.

use crate::{Error, Result, Vector3};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Triangles smaller than this (Å²) are rejected.
pub const MIN_PANEL_AREA: f64 = 1e-12;

/// A closed, consistently oriented triangulation with outward normals.
#[derive(Debug, Clone)]
pub struct PanelSurface {
    vertices: Vec<Vector3>,
    triangles: Vec<[usize; 3]>,
    centroids: Vec<Vector3>,
    normals: Vec<Vector3>,
    areas: Vec<f64>,
}

impl PanelSurface {
    /// Validate topology and geometry, then orient every normal outward.
    ///
    /// Each edge must be shared by exactly two triangles traversing it in
    /// opposite directions. If the signed enclosed volume comes out negative
    /// all triangles are flipped.
    pub fn new(vertices: Vec<Vector3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::Topology("surface has no triangles".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&v) = tri.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::Topology(format!(
                    "triangle {t} references vertex {v} but only {} vertices exist",
                    vertices.len()
                )));
            }
        }
        check_closed(&triangles)?;
        let mut surface = Self::from_parts(vertices, triangles)?;
        if surface.signed_volume() < 0.0 {
            let flipped = surface
                .triangles
                .iter()
                .map(|&[a, b, c]| [a, c, b])
                .collect();
            surface = Self::from_parts(surface.vertices, flipped)?;
        }
        Ok(surface)
    }

    fn from_parts(vertices: Vec<Vector3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let n = triangles.len();
        let mut centroids = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        let mut areas = Vec::with_capacity(n);
        for (t, &[a, b, c]) in triangles.iter().enumerate() {
            let (pa, pb, pc) = (vertices[a], vertices[b], vertices[c]);
            let cross = (pb - pa).cross(&(pc - pa));
            let area = 0.5 * cross.norm();
            if area.is_nan() || area < MIN_PANEL_AREA {
                return Err(Error::Geometry(format!(
                    "triangle {t} ({a}, {b}, {c}) is degenerate (area {area:e} Å²)"
                )));
            }
            centroids.push((pa + pb + pc) / 3.0);
            normals.push(cross / (2.0 * area));
            areas.push(area);
        }
        Ok(Self {
            vertices,
            triangles,
            centroids,
            normals,
            areas,
        })
    }

    /// Icosahedron refined `subdivisions` times and projected onto a sphere:
    /// `20 · 4^subdivisions` panels.
    pub fn icosphere(radius: f64, subdivisions: u32) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::domain(format!(
                "icosphere radius must be positive (got {radius})"
            )));
        }
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let mut vertices: Vec<Vector3> = [
            (-1.0, phi, 0.0),
            (1.0, phi, 0.0),
            (-1.0, -phi, 0.0),
            (1.0, -phi, 0.0),
            (0.0, -1.0, phi),
            (0.0, 1.0, phi),
            (0.0, -1.0, -phi),
            (0.0, 1.0, -phi),
            (phi, 0.0, -1.0),
            (phi, 0.0, 1.0),
            (-phi, 0.0, -1.0),
            (-phi, 0.0, 1.0),
        ]
        .iter()
        .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
        .collect();
        let mut faces: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
            let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vector3>| {
                *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                    vertices.push(((vertices[a] + vertices[b]) / 2.0).normalize());
                    vertices.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for &[a, b, c] in &faces {
                let ab = midpoint(a, b, &mut vertices);
                let bc = midpoint(b, c, &mut vertices);
                let ca = midpoint(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        let vertices = vertices.into_iter().map(|v| v * radius).collect();
        Self::new(vertices, faces)
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn vertices(&self) -> &[Vector3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn centroids(&self) -> &[Vector3] {
        &self.centroids
    }

    pub fn normals(&self) -> &[Vector3] {
        &self.normals
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Enclosed volume by the divergence theorem; positive for outward normals.
    pub fn signed_volume(&self) -> f64 {
        self.centroids
            .iter()
            .zip(&self.normals)
            .zip(&self.areas)
            .map(|((c, n), a)| a * n.dot(c) / 3.0)
            .sum()
    }

    /// Discrete solid-angle integral `Σ_j A_j n_j·(p − c_j) / (4π|p − c_j|³)`:
    /// about −1 for interior points, 0 outside.
    pub fn gauss_integral(&self, p: &Vector3) -> f64 {
        self.centroids
            .iter()
            .zip(&self.normals)
            .zip(&self.areas)
            .map(|((c, n), a)| {
                let d = p - c;
                a * n.dot(&d) / (4.0 * PI * d.norm().powi(3))
            })
            .sum()
    }

    pub fn contains(&self, p: &Vector3) -> bool {
        self.gauss_integral(p) < -0.5
    }

    /// Smallest distance from `p` to any triangle, with the triangle index.
    pub fn nearest_panel(&self, p: &Vector3) -> (usize, f64) {
        self.triangles
            .iter()
            .enumerate()
            .map(|(t, &[a, b, c])| {
                let q = closest_point_on_triangle(
                    p,
                    &self.vertices[a],
                    &self.vertices[b],
                    &self.vertices[c],
                );
                (t, (p - q).norm())
            })
            .fold(
                (0, f64::INFINITY),
                |best, cur| if cur.1 < best.1 { cur } else { best },
            )
    }

    /// Copy with every vertex multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_parts(
            self.vertices.iter().map(|v| v * factor).collect(),
            self.triangles.clone(),
        )
    }

    /// ASCII OFF serialization with zero-based indices.
    pub fn to_off(&self) -> String {
        let mut out = String::from("OFF\n");
        let _ = writeln!(out, "{} {} 0", self.vertices.len(), self.triangles.len());
        for v in &self.vertices {
            let _ = writeln!(out, "{} {} {}", v.x, v.y, v.z);
        }
        for [a, b, c] in &self.triangles {
            let _ = writeln!(out, "3 {a} {b} {c}");
        }
        out
    }
}

fn check_closed(triangles: &[[usize; 3]]) -> Result<()> {
    let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 3);
    for &[a, b, c] in triangles {
        for e in [(a, b), (b, c), (c, a)] {
            *directed.entry(e).or_insert(0) += 1;
        }
    }
    for (&(a, b), &count) in &directed {
        if count > 1 {
            return Err(Error::Topology(format!(
                "edge ({a}, {b}) is traversed {count} times in the same direction \
                 (non-manifold or inconsistently oriented)"
            )));
        }
        if !directed.contains_key(&(b, a)) {
            return Err(Error::Topology(format!(
                "edge ({a}, {b}) belongs to a single triangle: surface is open"
            )));
        }
    }
    Ok(())
}

/// Closest point to `p` on triangle `abc` (Ericson, Real-Time Collision Detection 5.1.5).
fn closest_point_on_triangle(p: &Vector3, a: &Vector3, b: &Vector3, c: &Vector3) -> Vector3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Supported mesh file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    /// ASCII Object File Format, zero-based indices, polygons fan-triangulated.
    Off,
    /// MSMS `.vert` / `.face` pair, one-based indices.
    Msms,
}

impl std::str::FromStr for MeshFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "off" => Ok(Self::Off),
            "msms" | "vert-face" | "msms-vert-face" => Ok(Self::Msms),
            other => Err(Error::Config(format!("unknown mesh format '{other}'"))),
        }
    }
}

/// Read a surface. For MSMS, `path` may name the `.vert` file, the `.face`
/// file or their common stem.
pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<PanelSurface> {
    let path = path.as_ref();
    match format {
        MeshFormat::Off => parse_off(&fs::read_to_string(path)?, path),
        MeshFormat::Msms => {
            let (vert, face) = msms_pair(path);
            parse_msms(
                &fs::read_to_string(&vert)?,
                &vert,
                &fs::read_to_string(&face)?,
                &face,
            )
        }
    }
}

/// The `.vert` and `.face` paths belonging to `path`.
pub fn msms_pair(path: &Path) -> (PathBuf, PathBuf) {
    let stem = match path.extension().and_then(|e| e.to_str()) {
        Some("vert") | Some("face") => path.with_extension(""),
        _ => path.to_owned(),
    };
    let with = |ext: &str| {
        let mut s = stem.clone().into_os_string();
        s.push(".");
        s.push(ext);
        PathBuf::from(s)
    };
    (with("vert"), with("face"))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

/// Non-empty lines with `#` comments removed, paired with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn parse_numbers<T: std::str::FromStr>(
    line: &str,
    count: usize,
    path: &Path,
    lineno: usize,
) -> Result<Vec<T>> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() < count {
        return Err(parse_err(
            path,
            lineno,
            format!("expected at least {count} fields, found {}", toks.len()),
        ));
    }
    toks[..count]
        .iter()
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| parse_err(path, lineno, format!("invalid number '{t}'")))
        })
        .collect()
}

fn parse_vertex(line: &str, path: &Path, lineno: usize) -> Result<Vector3> {
    let v: Vec<f64> = parse_numbers(line, 3, path, lineno)?;
    if !v.iter().all(|x| x.is_finite()) {
        return Err(parse_err(path, lineno, "non-finite coordinate"));
    }
    Ok(Vector3::new(v[0], v[1], v[2]))
}

/// Parse ASCII OFF text. `path` is only used in error messages.
pub fn parse_off(text: &str, path: &Path) -> Result<PanelSurface> {
    let mut lines = content_lines(text);
    let (mut lineno, mut line) = lines
        .next()
        .ok_or_else(|| Error::EmptyInput(path.to_owned()))?;
    if let Some(rest) = line.strip_prefix("OFF") {
        let rest = rest.trim();
        if rest.is_empty() {
            (lineno, line) = lines
                .next()
                .ok_or_else(|| parse_err(path, lineno, "missing vertex/face counts"))?;
        } else {
            line = rest;
        }
    }
    let counts: Vec<usize> = parse_numbers(line, 2, path, lineno)?;
    let (nv, nf) = (counts[0], counts[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(path, lineno, format!("expected {nv} vertices")))?;
        vertices.push(parse_vertex(l, path, ln)?);
        lineno = ln;
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(path, lineno, format!("expected {nf} faces")))?;
        lineno = ln;
        let k: Vec<usize> = parse_numbers(l, 1, path, ln)?;
        let k = k[0];
        if k < 3 {
            return Err(parse_err(path, ln, format!("face with {k} vertices")));
        }
        let idx: Vec<usize> = parse_numbers(l, k + 1, path, ln)?;
        let poly = &idx[1..];
        for i in 1..k - 1 {
            triangles.push([poly[0], poly[i], poly[i + 1]]);
        }
    }
    PanelSurface::new(vertices, triangles)
}

/// Skip an optional MSMS count line; returns the declared count if present.
fn msms_header<'a>(
    lines: &mut std::iter::Peekable<impl Iterator<Item = (usize, &'a str)>>,
) -> Option<usize> {
    let (_, first) = *lines.peek()?;
    let toks: Vec<&str> = first.split_whitespace().collect();
    if toks.len() <= 4 && toks.first()?.parse::<usize>().is_ok() {
        lines.next();
        return toks[0].parse().ok();
    }
    None
}

/// Parse an MSMS `.vert` / `.face` pair.
pub fn parse_msms(
    vert_text: &str,
    vert_path: &Path,
    face_text: &str,
    face_path: &Path,
) -> Result<PanelSurface> {
    let mut lines = content_lines(vert_text).peekable();
    let declared = msms_header(&mut lines);
    let vertices = lines
        .map(|(ln, l)| parse_vertex(l, vert_path, ln))
        .collect::<Result<Vec<_>>>()?;
    if vertices.is_empty() {
        return Err(Error::EmptyInput(vert_path.to_owned()));
    }
    if let Some(n) = declared.filter(|&n| n != vertices.len()) {
        return Err(parse_err(
            vert_path,
            0,
            format!("header declares {n} vertices, found {}", vertices.len()),
        ));
    }

    let mut lines = content_lines(face_text).peekable();
    let declared = msms_header(&mut lines);
    let mut triangles = Vec::new();
    for (ln, l) in lines {
        let idx: Vec<usize> = parse_numbers(l, 3, face_path, ln)?;
        if idx.contains(&0) {
            return Err(parse_err(face_path, ln, "MSMS face indices are 1-based"));
        }
        triangles.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
    }
    if triangles.is_empty() {
        return Err(Error::EmptyInput(face_path.to_owned()));
    }
    if let Some(n) = declared.filter(|&n| n != triangles.len()) {
        return Err(parse_err(
            face_path,
            0,
            format!("header declares {n} faces, found {}", triangles.len()),
        ));
    }
    PanelSurface::new(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TETRA: &str =
        "OFF\n4 4 6\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";

    fn cube_off(drop_last: bool) -> String {
        let mut s = String::from("OFF\n# unit cube\n8 ");
        let faces = [
            "4 0 3 2 1",
            "4 4 5 6 7",
            "4 0 1 5 4",
            "4 1 2 6 5",
            "4 2 3 7 6",
            "4 3 0 4 7",
        ];
        let used = if drop_last { 5 } else { 6 };
        s += &format!("{used} 0\n");
        for z in [0.0, 1.0] {
            for (x, y) in [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)] {
                s += &format!("{x} {y} {z}\n");
            }
        }
        for f in &faces[..used] {
            s += f;
            s += "\n";
        }
        s
    }

    #[test]
    fn tetrahedron() {
        let s = parse_off(TETRA, Path::new("t.off")).unwrap();
        assert_eq!(s.len(), 4);
        assert_relative_eq!(s.signed_volume(), 1.0 / 6.0, max_relative = 1e-14);
        assert!(s.contains(&Vector3::new(0.1, 0.1, 0.1)));
        assert!(!s.contains(&Vector3::new(2.0, 2.0, 2.0)));
    }

    #[test]
    fn inward_winding_is_flipped() {
        let inward = TETRA
            .replace("3 0 2 1", "3 0 1 2")
            .replace("3 0 1 3", "3 0 3 1")
            .replace("3 0 3 2", "3 0 2 3")
            .replace("3 1 2 3", "3 1 3 2");
        let s = parse_off(&inward, Path::new("t.off")).unwrap();
        assert_relative_eq!(s.signed_volume(), 1.0 / 6.0, max_relative = 1e-14);
        let inside = Vector3::new(0.25, 0.25, 0.25);
        for (c, n) in s.centroids().iter().zip(s.normals()) {
            assert!(n.dot(&(c - inside)) > 0.0);
        }
    }

    #[test]
    fn cube_quads_and_missing_face() {
        let closed = parse_off(&cube_off(false), Path::new("cube.off")).unwrap();
        assert_eq!(closed.len(), 12);
        assert_relative_eq!(closed.total_area(), 6.0, max_relative = 1e-14);
        assert_relative_eq!(closed.signed_volume(), 1.0, max_relative = 1e-14);
        let open = parse_off(&cube_off(true), Path::new("cube.off"));
        assert!(matches!(open, Err(Error::Topology(_))), "{open:?}");
    }

    #[test]
    fn degenerate_triangle_named() {
        let text = "OFF\n4 4 0\n0 0 0\n1 0 0\n2 0 0\n0 0 1\n3 0 1 2\n3 0 3 1\n3 1 3 2\n3 2 3 0\n";
        match parse_off(text, Path::new("d.off")) {
            Err(Error::Geometry(msg)) => assert!(msg.contains("triangle 0"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_off() {
        assert!(matches!(
            parse_off("", Path::new("e.off")),
            Err(Error::EmptyInput(_))
        ));
        let bad = "OFF\n3 1 0\n0 0 0\n1 x 0\n0 1 0\n3 0 1 2\n";
        assert!(matches!(
            parse_off(bad, Path::new("b.off")),
            Err(Error::Parse { line: 4, .. })
        ));
    }

    #[test]
    fn icosphere_area_and_gauss() {
        let s = PanelSurface::icosphere(5.0, 2).unwrap();
        assert_eq!(s.len(), 320);
        let exact = 4.0 * PI * 25.0;
        assert!(s.total_area() < exact && s.total_area() > 0.97 * exact);
        for n in s.normals() {
            assert!((n.norm() - 1.0).abs() < 1e-12);
        }
        for p in [Vector3::zeros(), Vector3::new(1.0, -2.0, 2.5)] {
            assert!((s.gauss_integral(&p) + 1.0).abs() < 2e-2);
        }
        assert!(s.gauss_integral(&Vector3::new(9.0, 0.0, 0.0)).abs() < 1e-2);
    }

    #[test]
    fn nearest_panel_distance() {
        let s = parse_off(TETRA, Path::new("t.off")).unwrap();
        let (_, d) = s.nearest_panel(&Vector3::new(0.2, 0.2, -0.5));
        assert_relative_eq!(d, 0.5, max_relative = 1e-14);
        let (_, d) = s.nearest_panel(&Vector3::new(-1.0, -1.0, -1.0));
        assert_relative_eq!(d, 3f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn off_round_trip_and_msms() {
        let s = PanelSurface::icosphere(2.0, 1).unwrap();
        let again = parse_off(&s.to_off(), Path::new("x.off")).unwrap();
        assert_eq!(again.triangles(), s.triangles());

        let mut vert = String::from(
            "# MSMS solvent excluded surface vertices\n#vertex #sphere density probe_r\n",
        );
        vert += &format!("{} 1 1.0 1.4\n", s.vertices().len());
        for v in s.vertices() {
            vert += &format!("{} {} {} 0 0 0 0 1 1\n", v.x, v.y, v.z);
        }
        let mut face =
            String::from("# MSMS solvent excluded surface faces\n#faces #sphere density probe_r\n");
        face += &format!("{} 1 1.0 1.4\n", s.len());
        for [a, b, c] in s.triangles() {
            face += &format!("{} {} {} 1 1\n", a + 1, b + 1, c + 1);
        }
        let m = parse_msms(&vert, Path::new("m.vert"), &face, Path::new("m.face")).unwrap();
        assert_eq!(m.len(), s.len());
        assert_relative_eq!(m.total_area(), s.total_area(), max_relative = 1e-14);

        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("mol.vert"), &vert).unwrap();
        fs::write(dir.path().join("mol.face"), &face).unwrap();
        for p in ["mol", "mol.vert", "mol.face"] {
            assert_eq!(
                load_mesh(dir.path().join(p), MeshFormat::Msms)
                    .unwrap()
                    .len(),
                s.len()
            );
        }
    }
}
