//! Polynomial spaces, quadrature, L2 projectors and hybrid velocity vectors.
//!
//! Vector-valued quantities share the scalar basis component-wise. Local
//! hybrid vectors are laid out as
//! `[v_T,x | v_T,y | v_F0,x | v_F0,y | v_F1,x | ...]`, following the order of
//! the element's face list.

pub mod basis;
pub mod quadrature;

use rayon::prelude::*;

use crate::mesh::Mesh;
use crate::{Error, Point, Result};

pub use basis::{dim_p2, ElementBasis, FaceBasis};
pub use quadrature::{face_quadrature, polygon_quadrature, triangle_quadrature, QuadratureRule};

/// Polynomial degree `k` of the element and face unknowns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisSpec {
    pub degree: usize,
}

impl BasisSpec {
    pub fn new(degree: usize) -> Self {
        BasisSpec { degree }
    }

    /// `dim P^k(T) = (k+1)(k+2)/2`.
    pub fn element_dim(&self) -> usize {
        dim_p2(self.degree)
    }

    /// `dim P^{k+1}(T)`.
    pub fn reconstruction_dim(&self) -> usize {
        dim_p2(self.degree + 1)
    }

    /// `dim P^k(F) = k + 1`.
    pub fn face_dim(&self) -> usize {
        self.degree + 1
    }

    pub fn element_quadrature_degree(&self) -> usize {
        let k = self.degree;
        (2 * (k + 1)).max(3 * k + 2)
    }

    pub fn face_quadrature_degree(&self) -> usize {
        let k = self.degree;
        (2 * k + 3).max(3 * k)
    }
}

/// Index helper for local hybrid vectors.
#[derive(Clone, Copy, Debug)]
pub struct LocalLayout {
    pub nk: usize,
    pub nf: usize,
    pub num_faces: usize,
}

impl LocalLayout {
    pub fn scalar_len(&self) -> usize {
        self.nk + self.num_faces * self.nf
    }

    pub fn vector_len(&self) -> usize {
        2 * self.scalar_len()
    }

    pub fn scalar_face(&self, i: usize, b: usize) -> usize {
        self.nk + i * self.nf + b
    }

    /// Vector index of element coefficient `a` of component `c`.
    pub fn elem(&self, c: usize, a: usize) -> usize {
        c * self.nk + a
    }

    /// Vector index of coefficient `b` of component `c` on local face `i`.
    pub fn face(&self, i: usize, c: usize, b: usize) -> usize {
        2 * self.nk + i * 2 * self.nf + c * self.nf + b
    }

    /// Maps scalar index `s` of component `c` to the vector layout.
    pub fn lift(&self, c: usize, s: usize) -> usize {
        if s < self.nk {
            self.elem(c, s)
        } else {
            let r = s - self.nk;
            self.face(r / self.nf, c, r % self.nf)
        }
    }
}

/// One face seen from an element, with cached basis evaluations.
#[derive(Clone, Debug)]
pub struct LocalFace {
    pub face: usize,
    /// Outward normal `n_TF`.
    pub normal: Point,
    pub length: f64,
    pub is_boundary: bool,
    pub basis: FaceBasis,
    pub quad: QuadratureRule,
    /// Element basis values at the face quadrature points.
    pub phi: Vec<Vec<f64>>,
    /// Face basis values at the face quadrature points.
    pub psi: Vec<Vec<f64>>,
}

/// Element-local basis, quadrature and cached evaluations.
#[derive(Clone, Debug)]
pub struct ElementSpace {
    pub index: usize,
    pub degree: usize,
    pub area: f64,
    pub diameter: f64,
    pub centroid: Point,
    pub vertices: Vec<Point>,
    pub basis: ElementBasis,
    pub quad: QuadratureRule,
    pub phi: Vec<Vec<f64>>,
    pub grad: Vec<Vec<[f64; 2]>>,
    pub faces: Vec<LocalFace>,
}

impl ElementSpace {
    /// Default space: basis up to `k + 1`, default quadrature degrees.
    pub fn new(mesh: &Mesh, t: usize, spec: BasisSpec) -> Result<Self> {
        Self::with_degrees(
            mesh,
            t,
            spec.degree,
            spec.degree + 1,
            spec.element_quadrature_degree(),
            spec.face_quadrature_degree(),
        )
    }

    /// Space with a basis of degree `basis_degree >= k + 1` and explicit
    /// quadrature exactness.
    pub fn with_degrees(
        mesh: &Mesh,
        t: usize,
        k: usize,
        basis_degree: usize,
        elem_quad: usize,
        face_quad: usize,
    ) -> Result<Self> {
        if basis_degree < k + 1 {
            return Err(Error::invalid("element basis must contain P^{k+1}"));
        }
        if !mesh.is_centroid_star_shaped(t) {
            return Err(Error::InvalidMesh(format!(
                "element {t} is not star-shaped with respect to its centroid"
            )));
        }
        let e = mesh.element(t);
        let vertices = mesh.element_points(t);
        let quad = polygon_quadrature(&vertices, e.centroid, elem_quad.max(2 * basis_degree))?;
        let basis = ElementBasis::new(basis_degree, e.centroid, e.diameter, &quad, t)?;
        let (phi, grad): (Vec<_>, Vec<_>) = quad.points.iter().map(|&p| basis.eval_with_gradients(p)).unzip();

        let mut faces = Vec::with_capacity(e.faces.len());
        for (i, &f) in e.faces.iter().enumerate() {
            let face = mesh.face(f);
            let (a, b) = (mesh.vertex(face.vertices[0]), mesh.vertex(face.vertices[1]));
            let fquad = face_quadrature(a, b, face_quad)?;
            let fbasis = FaceBasis::new(k, a, b);
            let phi_f = fquad.points.iter().map(|&p| basis.eval(p)).collect();
            let psi_f = fquad.points.iter().map(|&p| fbasis.eval(p)).collect();
            faces.push(LocalFace {
                face: f,
                normal: mesh.outward_normal(t, i),
                length: face.length,
                is_boundary: face.is_boundary(),
                basis: fbasis,
                quad: fquad,
                phi: phi_f,
                psi: psi_f,
            });
        }

        Ok(ElementSpace {
            index: t,
            degree: k,
            area: e.area,
            diameter: e.diameter,
            centroid: e.centroid,
            vertices,
            basis,
            quad,
            phi,
            grad,
            faces,
        })
    }

    pub fn layout(&self) -> LocalLayout {
        LocalLayout {
            nk: dim_p2(self.degree),
            nf: self.degree + 1,
            num_faces: self.faces.len(),
        }
    }

    /// Coefficients of the L2 projection of `f` onto `P^l(T)`.
    pub fn project(&self, f: impl Fn(Point) -> f64, l: usize) -> Result<Vec<f64>> {
        if l > self.basis.degree() {
            return Err(Error::invalid(format!(
                "projection degree {l} exceeds basis degree {}",
                self.basis.degree()
            )));
        }
        let n = dim_p2(l);
        let mut c = vec![0.0; n];
        for ((&p, &w), phi) in self.quad.points.iter().zip(&self.quad.weights).zip(&self.phi) {
            let v = w * f(p);
            for a in 0..n {
                c[a] += v * phi[a];
            }
        }
        Ok(c)
    }

    /// Coefficients of the L2 projection of `f` onto `P^k(F)` on local face `i`.
    pub fn project_face(&self, i: usize, f: impl Fn(Point) -> f64) -> Vec<f64> {
        let lf = &self.faces[i];
        let mut c = vec![0.0; lf.basis.len()];
        for ((&p, &w), psi) in lf.quad.points.iter().zip(&lf.quad.weights).zip(&lf.psi) {
            let v = w * f(p);
            for (cb, pb) in c.iter_mut().zip(psi) {
                *cb += v * pb;
            }
        }
        c
    }

    /// Evaluates a polynomial given by its leading basis coefficients.
    pub fn evaluate(&self, coeffs: &[f64], p: Point) -> f64 {
        self.basis.evaluate(coeffs, p)
    }
}

/// `P^l(T)` projection of `f`, with its own basis and quadrature.
pub fn l2_project_element(f: impl Fn(Point) -> f64, mesh: &Mesh, t: usize, degree: usize) -> Result<Vec<f64>> {
    let space = ElementSpace::with_degrees(mesh, t, degree.saturating_sub(1), degree.max(1), 2 * degree + 4, 2 * degree + 4)?;
    space.project(f, degree)
}

/// `P^l(F)` projection of `f` on the global face `f_index`, in the
/// orthonormal Legendre basis oriented along the face.
pub fn l2_project_face(f: impl Fn(Point) -> f64, mesh: &Mesh, f_index: usize, degree: usize) -> Result<Vec<f64>> {
    let face = mesh.face(f_index);
    let (a, b) = (mesh.vertex(face.vertices[0]), mesh.vertex(face.vertices[1]));
    let q = face_quadrature(a, b, 2 * degree + 4)?;
    let basis = FaceBasis::new(degree, a, b);
    let mut c = vec![0.0; degree + 1];
    for (p, w) in q.iter() {
        let v = w * f(p);
        for (cb, pb) in c.iter_mut().zip(basis.eval(p)) {
            *cb += v * pb;
        }
    }
    Ok(c)
}

/// The element spaces of a whole mesh.
#[derive(Clone, Debug)]
pub struct DiscreteSpace<'m> {
    pub mesh: &'m Mesh,
    pub spec: BasisSpec,
    pub elements: Vec<ElementSpace>,
}

impl<'m> DiscreteSpace<'m> {
    pub fn new(mesh: &'m Mesh, spec: BasisSpec) -> Result<Self> {
        let elements = (0..mesh.num_elements())
            .into_par_iter()
            .map(|t| ElementSpace::new(mesh, t, spec))
            .collect::<Result<Vec<_>>>()?;
        Ok(DiscreteSpace { mesh, spec, elements })
    }

    pub fn element(&self, t: usize) -> &ElementSpace {
        &self.elements[t]
    }
}

/// Element and face velocity coefficients of a hybrid vector.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridVelocity {
    pub spec: BasisSpec,
    /// `2 * dim P^k` coefficients per element (x block, then y block).
    pub element: Vec<f64>,
    /// `2 * (k + 1)` coefficients per face.
    pub face: Vec<f64>,
}

impl HybridVelocity {
    pub fn zeros(mesh: &Mesh, spec: BasisSpec) -> Self {
        HybridVelocity {
            spec,
            element: vec![0.0; mesh.num_elements() * 2 * spec.element_dim()],
            face: vec![0.0; mesh.num_faces() * 2 * spec.face_dim()],
        }
    }

    fn elem_block_len(&self) -> usize {
        2 * self.spec.element_dim()
    }

    fn face_block_len(&self) -> usize {
        2 * self.spec.face_dim()
    }

    pub fn num_elements(&self) -> usize {
        self.element.len() / self.elem_block_len()
    }

    pub fn num_faces(&self) -> usize {
        self.face.len() / self.face_block_len()
    }

    pub fn element_block(&self, t: usize) -> &[f64] {
        let n = self.elem_block_len();
        &self.element[t * n..(t + 1) * n]
    }

    pub fn element_block_mut(&mut self, t: usize) -> &mut [f64] {
        let n = self.elem_block_len();
        &mut self.element[t * n..(t + 1) * n]
    }

    /// Coefficients of component `c` on element `t`.
    pub fn element_component(&self, t: usize, c: usize) -> &[f64] {
        let nk = self.spec.element_dim();
        &self.element_block(t)[c * nk..(c + 1) * nk]
    }

    pub fn face_block(&self, f: usize) -> &[f64] {
        let n = self.face_block_len();
        &self.face[f * n..(f + 1) * n]
    }

    pub fn face_block_mut(&mut self, f: usize) -> &mut [f64] {
        let n = self.face_block_len();
        &mut self.face[f * n..(f + 1) * n]
    }

    /// Gathers the local vector `(v_T, (v_F)_{F in F_T})` of element `t`.
    pub fn local(&self, space: &ElementSpace) -> nalgebra::DVector<f64> {
        let mut v = Vec::with_capacity(space.layout().vector_len());
        v.extend_from_slice(self.element_block(space.index));
        for lf in &space.faces {
            v.extend_from_slice(self.face_block(lf.face));
        }
        nalgebra::DVector::from_vec(v)
    }

    pub fn axpy(&mut self, alpha: f64, other: &HybridVelocity) {
        for (a, b) in self.element.iter_mut().zip(&other.element) {
            *a += alpha * b;
        }
        for (a, b) in self.face.iter_mut().zip(&other.face) {
            *a += alpha * b;
        }
    }

    pub fn scaled(&self, alpha: f64) -> HybridVelocity {
        let mut out = self.clone();
        out.element.iter_mut().for_each(|v| *v *= alpha);
        out.face.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    pub fn sub(&self, other: &HybridVelocity) -> HybridVelocity {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Broken L2 norm of the element part (orthonormal basis).
    pub fn l2_norm(&self) -> f64 {
        self.element.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `I_h v`: element and face L2 projections of `v`, component-wise.
pub fn interpolate(v: impl Fn(Point) -> [f64; 2] + Sync, space: &DiscreteSpace) -> HybridVelocity {
    let mut out = HybridVelocity::zeros(space.mesh, space.spec);
    let k = space.spec.degree;
    type Blocks = (Vec<f64>, Vec<(usize, Vec<f64>)>);
    let blocks: Vec<Blocks> = space
        .elements
        .par_iter()
        .map(|es| {
            let mut eb = es.project(|p| v(p)[0], k).expect("k <= basis degree");
            eb.extend(es.project(|p| v(p)[1], k).expect("k <= basis degree"));
            let fb = (0..es.faces.len())
                .map(|i| {
                    let mut b = es.project_face(i, |p| v(p)[0]);
                    b.extend(es.project_face(i, |p| v(p)[1]));
                    (es.faces[i].face, b)
                })
                .collect();
            (eb, fb)
        })
        .collect();
    for (t, (eb, fbs)) in blocks.into_iter().enumerate() {
        out.element_block_mut(t).copy_from_slice(&eb);
        for (f, fb) in fbs {
            out.face_block_mut(f).copy_from_slice(&fb);
        }
    }
    out
}

/// Sets the boundary face blocks of `vh` to `pi_F^k g`.
pub fn interpolate_boundary(vh: &mut HybridVelocity, g: impl Fn(Point) -> [f64; 2], space: &DiscreteSpace) {
    for es in &space.elements {
        for (i, lf) in es.faces.iter().enumerate() {
            if !lf.is_boundary {
                continue;
            }
            let mut b = es.project_face(i, |p| g(p)[0]);
            b.extend(es.project_face(i, |p| g(p)[1]));
            vh.face_block_mut(lf.face).copy_from_slice(&b);
        }
    }
}

/// Squared local `||.||_{1,T}` seminorm.
pub fn norm_1t_squared(local: &[f64], es: &ElementSpace) -> f64 {
    let lay = es.layout();
    let mut total = 0.0;
    for c in 0..2 {
        let vt = &local[lay.elem(c, 0)..lay.elem(c, 0) + lay.nk];
        for (grads, &w) in es.grad.iter().zip(&es.quad.weights) {
            let mut g = [0.0; 2];
            for a in 0..lay.nk {
                g[0] += vt[a] * grads[a][0];
                g[1] += vt[a] * grads[a][1];
            }
            total += w * (g[0] * g[0] + g[1] * g[1]);
        }
        for (i, lf) in es.faces.iter().enumerate() {
            let vf = &local[lay.face(i, c, 0)..lay.face(i, c, 0) + lay.nf];
            let mut s = 0.0;
            for ((phi, psi), &w) in lf.phi.iter().zip(&lf.psi).zip(&lf.quad.weights) {
                let jump: f64 = (0..lay.nf).map(|b| vf[b] * psi[b]).sum::<f64>()
                    - (0..lay.nk).map(|a| vt[a] * phi[a]).sum::<f64>();
                s += w * jump * jump;
            }
            total += s / lf.length;
        }
    }
    total
}

/// `||v_h||_{1,h}`.
pub fn norm_1h(vh: &HybridVelocity, space: &DiscreteSpace) -> f64 {
    space
        .elements
        .par_iter()
        .map(|es| norm_1t_squared(vh.local(es).as_slice(), es))
        .sum::<f64>()
        .sqrt()
}
