//! Two-dimensional polygonal meshes.
//!
//! Faces are stored once, globally, with a fixed unit normal `n_F`. Each
//! element keeps the list of its faces together with a sign so that the
//! outward normal is `n_TF = sign * n_F`. Interior faces are oriented from
//! the lower to the higher vertex index (normal on the right of that
//! direction); boundary faces carry the normal pointing out of the domain.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use crate::{Error, Point, Result};

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl BoundingBox {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        BoundingBox { x0, x1, y0, y1 }
    }

    pub fn unit_square() -> Self {
        BoundingBox::new(0.0, 1.0, 0.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub(crate) fn check(&self) -> Result<()> {
        let finite = [self.x0, self.x1, self.y0, self.y1].iter().all(|v| v.is_finite());
        if !finite || !(self.x1 > self.x0) || !(self.y1 > self.y0) {
            return Err(Error::invalid(format!("degenerate bounding box {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Face {
    /// End points. Interior faces are stored with `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    /// First incident element, and the second one for interfaces.
    pub elements: (usize, Option<usize>),
    /// Fixed unit normal `n_F`.
    pub normal: Point,
    /// Length of the face (diameter and measure coincide in 2D).
    pub length: f64,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.elements.1.is_none()
    }

    pub fn diameter(&self) -> f64 {
        self.length
    }
}

#[derive(Clone, Debug)]
pub struct Element {
    /// Counterclockwise vertex loop.
    pub vertices: Vec<usize>,
    /// `faces[i]` joins `vertices[i]` and `vertices[i + 1]`.
    pub faces: Vec<usize>,
    /// `+1.0` when `n_F` points out of this element, `-1.0` otherwise.
    pub face_signs: Vec<f64>,
    pub diameter: f64,
    pub area: f64,
    pub centroid: Point,
}

/// Immutable polygonal mesh.
#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    elements: Vec<Element>,
    faces: Vec<Face>,
}

fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let a = points[i];
            let b = points[(i + 1) % n];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        * 0.5
}

fn polygon_centroid(points: &[Point], area: f64) -> Point {
    let n = points.len();
    let mut c = [0.0; 2];
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        let cross = a[0] * b[1] - b[0] * a[1];
        c[0] += (a[0] + b[0]) * cross;
        c[1] += (a[1] + b[1]) * cross;
    }
    [c[0] / (6.0 * area), c[1] / (6.0 * area)]
}

fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Mesh {
    /// Builds the face topology of a polygonal mesh from counterclockwise
    /// vertex loops. Shared edges are matched by vertex pair.
    pub fn from_polygons(vertices: Vec<Point>, polygons: Vec<Vec<usize>>) -> Result<Mesh> {
        if polygons.is_empty() {
            return Err(Error::InvalidMesh("mesh has no elements".into()));
        }
        let mut faces: Vec<Face> = Vec::new();
        let mut elements = Vec::with_capacity(polygons.len());
        // (lo, hi) -> (face index, direction of first traversal lo->hi)
        let mut edge_map: HashMap<(usize, usize), (usize, bool)> = HashMap::new();

        for (t, poly) in polygons.into_iter().enumerate() {
            if poly.len() < 3 {
                return Err(Error::InvalidMesh(format!(
                    "element {t} has {} vertices",
                    poly.len()
                )));
            }
            if let Some(&bad) = poly.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "element {t} references vertex {bad} out of {}",
                    vertices.len()
                )));
            }
            let pts: Vec<Point> = poly.iter().map(|&v| vertices[v]).collect();
            let area = signed_area(&pts);
            if !(area > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "element {t} is not counterclockwise (signed area {area:e})"
                )));
            }
            let centroid = polygon_centroid(&pts, area);
            let mut diameter: f64 = 0.0;
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    diameter = diameter.max(distance(pts[i], pts[j]));
                }
            }

            let m = poly.len();
            let mut elem_faces = Vec::with_capacity(m);
            let mut signs = Vec::with_capacity(m);
            for i in 0..m {
                let (a, b) = (poly[i], poly[(i + 1) % m]);
                if a == b {
                    return Err(Error::InvalidMesh(format!("element {t} has a repeated vertex {a}")));
                }
                let key = (a.min(b), a.max(b));
                let forward = a < b;
                match edge_map.get(&key) {
                    None => {
                        let (pa, pb) = (vertices[a], vertices[b]);
                        let length = distance(pa, pb);
                        if !(length > 0.0) {
                            return Err(Error::InvalidMesh(format!(
                                "element {t} has a zero-length edge ({a}, {b})"
                            )));
                        }
                        // Outward normal of this element along a -> b.
                        let normal = [(pb[1] - pa[1]) / length, -(pb[0] - pa[0]) / length];
                        edge_map.insert(key, (faces.len(), forward));
                        elem_faces.push(faces.len());
                        signs.push(1.0);
                        faces.push(Face {
                            vertices: [a, b],
                            elements: (t, None),
                            normal,
                            length,
                        });
                    }
                    Some(&(f, first_forward)) => {
                        let face = &mut faces[f];
                        if face.elements.1.is_some() {
                            return Err(Error::InvalidMesh(format!(
                                "non-manifold edge ({}, {}) shared by more than two elements",
                                key.0, key.1
                            )));
                        }
                        if first_forward == forward {
                            return Err(Error::InvalidMesh(format!(
                                "inconsistent orientation: edge ({}, {}) traversed in the same direction by elements {} and {t}",
                                key.0, key.1, face.elements.0
                            )));
                        }
                        face.elements.1 = Some(t);
                        elem_faces.push(f);
                        signs.push(-1.0);
                    }
                }
            }
            elements.push(Element {
                vertices: poly,
                faces: elem_faces,
                face_signs: signs,
                diameter,
                area,
                centroid,
            });
        }

        // Canonical orientation of interfaces: lower vertex index first.
        for (f, face) in faces.iter_mut().enumerate() {
            if face.is_boundary() || face.vertices[0] < face.vertices[1] {
                continue;
            }
            face.vertices.swap(0, 1);
            face.normal = [-face.normal[0], -face.normal[1]];
            for t in [Some(face.elements.0), face.elements.1].into_iter().flatten() {
                let elem = &mut elements[t];
                for (ef, s) in elem.faces.iter().zip(elem.face_signs.iter_mut()) {
                    if *ef == f {
                        *s = -*s;
                    }
                }
            }
        }

        Ok(Mesh {
            vertices,
            elements,
            faces,
        })
    }

    /// Structured `nx x ny` grid of rectangles.
    pub fn generate_cartesian(nx: usize, ny: usize, bbox: BoundingBox) -> Result<Mesh> {
        let vertices = grid_vertices(nx, ny, &bbox)?;
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut polys = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                polys.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        Mesh::from_polygons(vertices, polys)
    }

    /// Structured grid with every rectangle split along its
    /// lower-left/upper-right diagonal.
    pub fn generate_triangular(nx: usize, ny: usize, bbox: BoundingBox) -> Result<Mesh> {
        let vertices = grid_vertices(nx, ny, &bbox)?;
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut polys = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                polys.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                polys.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        Mesh::from_polygons(vertices, polys)
    }

    /// Reads the plain-text polygonal format:
    ///
    /// ```text
    /// # comment
    /// npts nelems
    /// x y            (npts lines)
    /// m i1 ... im    (nelems lines, 0-based, counterclockwise)
    /// ```
    ///
    /// Vertices lying inside another element's edge (hanging nodes of
    /// nonmatching interfaces) are inserted into that element's loop, so the
    /// long edge is split into matching faces.
    pub fn read_polymesh(path: impl AsRef<Path>) -> Result<Mesh> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Mesh::parse_polymesh(&text).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::Parse {
                path: path.to_path_buf(),
                line,
                message,
            },
            other => other,
        })
    }

    /// Parses the polygonal text format from a string.
    pub fn parse_polymesh(text: &str) -> Result<Mesh> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: "<input>".into(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().filter_map(|(i, l)| {
            let content = l.split('#').next().unwrap_or("").trim();
            (!content.is_empty()).then_some((i + 1, content))
        });

        let (hline, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing header `npts nelems`".into()))?;
        let counts: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(hline, format!("bad header: {e}")))?;
        let [npts, nelems] = counts[..] else {
            return Err(parse_err(hline, "header must be `npts nelems`".into()));
        };

        let mut vertices = Vec::with_capacity(npts);
        for k in 0..npts {
            let (ln, content) = lines
                .next()
                .ok_or_else(|| parse_err(hline, format!("expected {npts} points, found {k}")))?;
            let xy: Vec<f64> = content
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(ln, format!("bad coordinate: {e}")))?;
            if xy.len() != 2 || !xy.iter().all(|v| v.is_finite()) {
                return Err(parse_err(ln, "point line must hold two finite numbers".into()));
            }
            vertices.push([xy[0], xy[1]]);
        }

        let mut polys = Vec::with_capacity(nelems);
        for k in 0..nelems {
            let (ln, content) = lines
                .next()
                .ok_or_else(|| parse_err(hline, format!("expected {nelems} elements, found {k}")))?;
            let ids: Vec<usize> = content
                .split_whitespace()
                .map(|s| s.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(ln, format!("bad element line: {e}")))?;
            let Some((&m, rest)) = ids.split_first() else {
                return Err(parse_err(ln, "empty element line".into()));
            };
            if m < 3 || rest.len() != m {
                return Err(parse_err(
                    ln,
                    format!("element declares {m} vertices but lists {}", rest.len()),
                ));
            }
            if let Some(&bad) = rest.iter().find(|&&v| v >= npts) {
                return Err(parse_err(ln, format!("vertex index {bad} out of range")));
            }
            polys.push(rest.to_vec());
        }
        if let Some((ln, _)) = lines.next() {
            return Err(parse_err(ln, "trailing content after element list".into()));
        }

        insert_hanging_vertices(&vertices, &mut polys);
        Mesh::from_polygons(vertices, polys)
    }

    /// Writes the mesh in the format read by [`Mesh::read_polymesh`].
    pub fn to_polymesh_string(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.vertices.len(), self.elements.len());
        for v in &self.vertices {
            let _ = writeln!(out, "{:.17e} {:.17e}", v[0], v[1]);
        }
        for e in &self.elements {
            let _ = write!(out, "{}", e.vertices.len());
            for v in &e.vertices {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    /// Applies an affine map sending `from` onto `to`.
    pub fn map_affine(&self, from: BoundingBox, to: BoundingBox) -> Result<Mesh> {
        from.check()?;
        to.check()?;
        let sx = to.width() / from.width();
        let sy = to.height() / from.height();
        let vertices = self
            .vertices
            .iter()
            .map(|v| [to.x0 + (v[0] - from.x0) * sx, to.y0 + (v[1] - from.y0) * sy])
            .collect();
        Mesh::from_polygons(vertices, self.elements.iter().map(|e| e.vertices.clone()).collect())
    }

    pub fn bounding_box(&self) -> BoundingBox {
        let mut b = BoundingBox::new(f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            b.x0 = b.x0.min(v[0]);
            b.x1 = b.x1.max(v[0]);
            b.y0 = b.y0.min(v[1]);
            b.y1 = b.y1.max(v[1]);
        }
        b
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i]
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, t: usize) -> &Element {
        &self.elements[t]
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> &Face {
        &self.faces[f]
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_interior_faces(&self) -> usize {
        self.faces.iter().filter(|f| !f.is_boundary()).count()
    }

    pub fn num_boundary_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.is_boundary()).count()
    }

    /// `h = max_T h_T`.
    pub fn meshsize(&self) -> f64 {
        self.elements.iter().map(|e| e.diameter).fold(0.0, f64::max)
    }

    pub fn measure(&self) -> f64 {
        self.elements.iter().map(|e| e.area).sum()
    }

    pub fn element_points(&self, t: usize) -> Vec<Point> {
        self.elements[t].vertices.iter().map(|&v| self.vertices[v]).collect()
    }

    /// Outward normal `n_TF` of the `i`-th face of element `t`.
    pub fn outward_normal(&self, t: usize, i: usize) -> Point {
        let e = &self.elements[t];
        let n = self.faces[e.faces[i]].normal;
        [e.face_signs[i] * n[0], e.face_signs[i] * n[1]]
    }

    /// Returns `true` if every centroid fan triangle of element `t` has
    /// positive area.
    pub fn is_centroid_star_shaped(&self, t: usize) -> bool {
        let e = &self.elements[t];
        let c = e.centroid;
        let pts = self.element_points(t);
        let m = pts.len();
        (0..m).all(|i| {
            let a = pts[i];
            let b = pts[(i + 1) % m];
            let cross = (a[0] - c[0]) * (b[1] - c[1]) - (a[1] - c[1]) * (b[0] - c[0]);
            cross > 1e-14 * e.diameter * e.diameter
        })
    }

    /// Measures regularity indicators. Never fails.
    pub fn validate(&self) -> MeshDiagnostics {
        let mut d = MeshDiagnostics {
            num_elements: self.num_elements(),
            num_faces: self.num_faces(),
            num_interior_faces: self.num_interior_faces(),
            num_boundary_faces: self.num_boundary_faces(),
            min_face_ratio: f64::INFINITY,
            max_face_ratio: 0.0,
            min_inradius_ratio: f64::INFINITY,
            max_closure_defect: 0.0,
            non_star_shaped: Vec::new(),
            meshsize: self.meshsize(),
        };
        for (t, e) in self.elements.iter().enumerate() {
            let mut closure = [0.0; 2];
            for (i, &f) in e.faces.iter().enumerate() {
                let face = &self.faces[f];
                let ratio = face.length / e.diameter;
                d.min_face_ratio = d.min_face_ratio.min(ratio);
                d.max_face_ratio = d.max_face_ratio.max(ratio);
                let n = self.outward_normal(t, i);
                closure[0] += face.length * n[0];
                closure[1] += face.length * n[1];
                // Distance from the centroid to the face line.
                let p = self.vertices[face.vertices[0]];
                let dist = ((e.centroid[0] - p[0]) * n[0] + (e.centroid[1] - p[1]) * n[1]).abs();
                d.min_inradius_ratio = d.min_inradius_ratio.min(dist / e.diameter);
            }
            d.max_closure_defect = d.max_closure_defect.max(closure[0].hypot(closure[1]));
            if !self.is_centroid_star_shaped(t) {
                d.non_star_shaped.push(t);
            }
        }
        d
    }
}

fn grid_vertices(nx: usize, ny: usize, bbox: &BoundingBox) -> Result<Vec<Point>> {
    if nx == 0 || ny == 0 {
        return Err(Error::invalid(format!("grid counts must be positive, got {nx} x {ny}")));
    }
    bbox.check()?;
    let mut v = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            v.push([
                bbox.x0 + bbox.width() * i as f64 / nx as f64,
                bbox.y0 + bbox.height() * j as f64 / ny as f64,
            ]);
        }
    }
    Ok(v)
}

/// Splits unmatched edges at vertices lying strictly inside them.
fn insert_hanging_vertices(vertices: &[Point], polys: &mut [Vec<usize>]) {
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for poly in polys.iter() {
        let m = poly.len();
        for i in 0..m {
            let (a, b) = (poly[i], poly[(i + 1) % m]);
            *count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut candidates: Vec<usize> = count
        .iter()
        .filter(|(_, &c)| c == 1)
        .flat_map(|(&(a, b), _)| [a, b])
        .collect();
    candidates.sort_unstable();
    candidates.dedup();
    if candidates.is_empty() {
        return;
    }

    for poly in polys.iter_mut() {
        let m = poly.len();
        let mut out = Vec::with_capacity(m);
        for i in 0..m {
            let (a, b) = (poly[i], poly[(i + 1) % m]);
            out.push(a);
            if count.get(&(a.min(b), a.max(b))) != Some(&1) {
                continue;
            }
            let (pa, pb) = (vertices[a], vertices[b]);
            let len2 = (pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2);
            let tol = 1e-10 * len2.sqrt();
            let mut inner: Vec<(f64, usize)> = candidates
                .iter()
                .filter(|&&v| v != a && v != b)
                .filter_map(|&v| {
                    let p = vertices[v];
                    let s = ((p[0] - pa[0]) * (pb[0] - pa[0]) + (p[1] - pa[1]) * (pb[1] - pa[1])) / len2;
                    let cross = (p[0] - pa[0]) * (pb[1] - pa[1]) - (p[1] - pa[1]) * (pb[0] - pa[0]);
                    (s > 1e-10 && s < 1.0 - 1e-10 && (cross.abs() / len2.sqrt()) < tol).then_some((s, v))
                })
                .collect();
            inner.sort_by(|x, y| x.0.total_cmp(&y.0));
            out.extend(inner.into_iter().map(|(_, v)| v));
        }
        *poly = out;
    }
}

/// Regularity indicators reported by [`Mesh::validate`].
#[derive(Clone, Debug)]
pub struct MeshDiagnostics {
    pub num_elements: usize,
    pub num_faces: usize,
    pub num_interior_faces: usize,
    pub num_boundary_faces: usize,
    /// Extremes of `h_F / h_T` over all element/face pairs.
    pub min_face_ratio: f64,
    pub max_face_ratio: f64,
    /// Smallest centroid-to-face-line distance divided by `h_T`.
    pub min_inradius_ratio: f64,
    /// Largest `|sum_F |F| n_TF|` over elements.
    pub max_closure_defect: f64,
    /// Elements whose centroid fan contains a non-positive triangle.
    pub non_star_shaped: Vec<usize>,
    pub meshsize: f64,
}

impl MeshDiagnostics {
    pub fn is_admissible(&self) -> bool {
        self.non_star_shaped.is_empty()
    }
}

impl fmt::Display for MeshDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "elements {}  faces {} (interior {}, boundary {})  h = {:.6e}",
            self.num_elements, self.num_faces, self.num_interior_faces, self.num_boundary_faces, self.meshsize
        )?;
        writeln!(
            f,
            "h_F/h_T in [{:.4}, {:.4}]  min inradius/h_T {:.4}  closure defect {:.2e}",
            self.min_face_ratio, self.max_face_ratio, self.min_inradius_ratio, self.max_closure_defect
        )?;
        write!(f, "non star-shaped elements: {:?}", self.non_star_shaped)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hexagon(side: f64) -> String {
        let mut s = String::from("# regular hexagon\n6 1\n");
        for i in 0..6 {
            let a = std::f64::consts::PI / 3.0 * i as f64;
            s.push_str(&format!("{} {}\n", side * a.cos(), side * a.sin()));
        }
        s.push_str("6 0 1 2 3 4 5\n");
        s
    }

    #[test]
    fn cartesian_counts() {
        let m = Mesh::generate_cartesian(2, 2, BoundingBox::unit_square()).unwrap();
        assert_eq!(m.num_elements(), 4);
        assert_eq!(m.num_faces(), 12);
        assert_eq!(m.num_interior_faces(), 4);
        assert_eq!(m.num_boundary_faces(), 8);

        let m = Mesh::generate_cartesian(1, 1, BoundingBox::unit_square()).unwrap();
        assert_eq!((m.num_elements(), m.num_faces(), m.num_interior_faces()), (1, 4, 0));
    }

    #[test]
    fn cartesian_diameters() {
        let m = Mesh::generate_cartesian(4, 4, BoundingBox::new(-0.5, 1.5, 0.0, 2.0)).unwrap();
        assert_eq!(m.num_elements(), 16);
        for e in m.elements() {
            assert!((e.diameter - (0.5f64 * 0.5 + 0.5 * 0.5).sqrt()).abs() < 1e-14);
        }
        assert!((m.measure() - 4.0).abs() < 1e-12 * 4.0);
    }

    #[test]
    fn triangular_counts_and_closure() {
        let m = Mesh::generate_triangular(1, 1, BoundingBox::unit_square()).unwrap();
        assert_eq!((m.num_elements(), m.num_faces(), m.num_interior_faces()), (2, 5, 1));
        let m = Mesh::generate_triangular(2, 2, BoundingBox::unit_square()).unwrap();
        assert_eq!(m.num_elements(), 8);
        let m = Mesh::generate_triangular(5, 3, BoundingBox::new(0.0, 3.0, -1.0, 1.0)).unwrap();
        assert!(m.validate().max_closure_defect < 1e-14);
        assert!((m.measure() - 6.0).abs() < 6e-12);
    }

    #[test]
    fn interior_faces_have_opposite_signs() {
        let m = Mesh::generate_triangular(3, 4, BoundingBox::unit_square()).unwrap();
        for (f, face) in m.faces().iter().enumerate() {
            let sign_in = |t: usize| {
                let e = m.element(t);
                let i = e.faces.iter().position(|&g| g == f).unwrap();
                e.face_signs[i]
            };
            match face.elements {
                (t1, Some(t2)) => {
                    assert_eq!(sign_in(t1) + sign_in(t2), 0.0);
                    assert!(face.vertices[0] < face.vertices[1]);
                }
                (t, None) => assert_eq!(sign_in(t), 1.0),
            }
        }
    }

    #[test]
    fn zero_counts_are_rejected() {
        let b = BoundingBox::unit_square();
        assert!(matches!(Mesh::generate_cartesian(0, 2, b), Err(Error::InvalidArgument(_))));
        assert!(matches!(Mesh::generate_triangular(2, 0, b), Err(Error::InvalidArgument(_))));
        let flat = BoundingBox::new(0.0, 1.0, 1.0, 1.0);
        assert!(matches!(Mesh::generate_cartesian(2, 2, flat), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn reader_round_trip() {
        let m = Mesh::generate_cartesian(2, 2, BoundingBox::unit_square()).unwrap();
        let r = Mesh::parse_polymesh(&m.to_polymesh_string()).unwrap();
        assert_eq!(r.num_elements(), 4);
        assert_eq!(r.num_faces(), 12);
        assert_eq!(r.num_interior_faces(), 4);
    }

    #[test]
    fn reader_hexagon_area() {
        let s = 0.7;
        let m = Mesh::parse_polymesh(&hexagon(s)).unwrap();
        assert_eq!(m.num_elements(), 1);
        assert_eq!(m.num_boundary_faces(), 6);
        let expected = 3.0 * 3f64.sqrt() / 2.0 * s * s;
        assert!((m.element(0).area - expected).abs() < 1e-14);
    }

    #[test]
    fn reader_rejects_non_manifold_edge() {
        let text = "5 3\n0 0\n1 0\n0 1\n0 -1\n1 1\n3 0 1 2\n3 1 0 3\n3 0 1 4\n";
        assert!(matches!(Mesh::parse_polymesh(text), Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn reader_rejects_inconsistent_orientation() {
        // Second triangle traverses the shared edge 0 -> 1 in the same direction.
        let text = "4 2\n0 0\n1 0\n0 1\n1 1\n3 0 1 2\n3 0 1 3\n";
        let err = Mesh::parse_polymesh(text).unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(_)), "{err}");
        // Clockwise element.
        let text = "3 1\n0 0\n0 1\n1 0\n3 0 1 2\n";
        assert!(matches!(Mesh::parse_polymesh(text), Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn reader_reports_line_numbers() {
        let text = "# header next\n2 1\n0 0\n1 x\n3 0 1 2\n";
        match Mesh::parse_polymesh(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reader_splits_hanging_nodes() {
        // Left: unit square; right: two squares of height 1/2 -> vertex (1, 0.5) hangs.
        let text = "\
8 3
0 0
1 0
1 1
0 1
2 0
2 0.5
1 0.5
2 1
4 0 1 2 3
4 1 4 5 6
4 6 5 7 2
";
        let m = Mesh::parse_polymesh(text).unwrap();
        assert_eq!(m.element(0).vertices.len(), 5);
        assert_eq!(m.num_interior_faces(), 3);
        assert!(m.validate().max_closure_defect < 1e-14);
    }

    #[test]
    fn validate_square_ratio() {
        let m = Mesh::generate_cartesian(2, 2, BoundingBox::unit_square()).unwrap();
        let d = m.validate();
        let r = 1.0 / 2f64.sqrt();
        assert!((d.min_face_ratio - r).abs() < 1e-14 && (d.max_face_ratio - r).abs() < 1e-14);
        assert!(d.is_admissible());
    }

    #[test]
    fn validate_triangles_not_flagged() {
        let m = Mesh::generate_triangular(4, 4, BoundingBox::unit_square()).unwrap();
        assert!(m.validate().non_star_shaped.is_empty());
    }

    #[test]
    fn validate_flags_thin_l_shape() {
        // Centroid (0.574, 0.574) lies outside the kernel [0, 0.2]^2.
        let text = "6 1\n0 0\n2 0\n2 0.2\n0.2 0.2\n0.2 2\n0 2\n6 0 1 2 3 4 5\n";
        let m = Mesh::parse_polymesh(text).unwrap();
        let c = m.element(0).centroid;
        assert!((c[0] - 0.436 / 0.76).abs() < 1e-12 && (c[1] - 0.436 / 0.76).abs() < 1e-12);
        assert_eq!(m.validate().non_star_shaped, vec![0]);
        // A fat L is star-shaped w.r.t. its centroid.
        let text = "6 1\n0 0\n2 0\n2 1\n1 1\n1 2\n0 2\n6 0 1 2 3 4 5\n";
        assert!(Mesh::parse_polymesh(text).unwrap().validate().is_admissible());
    }
}
