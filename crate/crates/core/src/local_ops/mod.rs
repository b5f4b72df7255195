//! Element-local HHO operators.
//!
//! All matrices act on the local hybrid vector of an [`ElementSpace`] (see
//! [`LocalLayout`]) and return coefficients in the element's orthonormal
//! basis, so L2 inner products of outputs are plain dot products.
//!
//! Scalar operators are computed once and lifted block-diagonally to the two
//! velocity components.

mod convective;

use nalgebra::DMatrix;

use crate::fespace::{dim_p2, ElementSpace, LocalLayout};
use crate::{Error, Result};

pub use convective::{
    convective_apply, convective_jacobian, convective_matrix, hdg_convective_apply, ConvectiveForm,
};

/// Scalar gradient reconstruction: one `dim P^l x scalar_len` block per
/// direction.
fn scalar_gradient(es: &ElementSpace, l: usize) -> Result<[DMatrix<f64>; 2]> {
    if l > es.basis.degree() {
        return Err(Error::invalid(format!(
            "gradient degree {l} exceeds the element basis degree {}",
            es.basis.degree()
        )));
    }
    let lay = es.layout();
    let nl = dim_p2(l);
    let ns = lay.scalar_len();
    let mut g = [DMatrix::zeros(nl, ns), DMatrix::zeros(nl, ns)];
    for ((phi, grad), &w) in es.phi.iter().zip(&es.grad).zip(&es.quad.weights) {
        for (j, gj) in g.iter_mut().enumerate() {
            for a in 0..nl {
                let d = w * grad[a][j];
                for b in 0..lay.nk {
                    gj[(a, b)] -= d * phi[b];
                }
            }
        }
    }
    for (i, lf) in es.faces.iter().enumerate() {
        for ((phi, psi), &w) in lf.phi.iter().zip(&lf.psi).zip(&lf.quad.weights) {
            for (j, gj) in g.iter_mut().enumerate() {
                let wn = w * lf.normal[j];
                for a in 0..nl {
                    for b in 0..lay.nf {
                        gj[(a, lay.scalar_face(i, b))] += wn * phi[a] * psi[b];
                    }
                }
            }
        }
    }
    Ok(g)
}

/// Scalar potential reconstruction, `dim P^{k+1} x scalar_len`.
fn scalar_reconstruction(es: &ElementSpace, gk: &[DMatrix<f64>; 2]) -> Result<DMatrix<f64>> {
    let lay = es.layout();
    let n1 = dim_p2(es.degree + 1);
    let ns = lay.scalar_len();
    let mut stiff = DMatrix::<f64>::zeros(n1 - 1, n1 - 1);
    // m[j][(a, c)] = int d_j phi_a phi_c
    let mut m = [DMatrix::<f64>::zeros(n1, lay.nk), DMatrix::<f64>::zeros(n1, lay.nk)];
    for ((phi, grad), &w) in es.phi.iter().zip(&es.grad).zip(&es.quad.weights) {
        for a in 1..n1 {
            for b in 1..n1 {
                stiff[(a - 1, b - 1)] += w * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
            }
        }
        for (j, mj) in m.iter_mut().enumerate() {
            for a in 0..n1 {
                for c in 0..lay.nk {
                    mj[(a, c)] += w * grad[a][j] * phi[c];
                }
            }
        }
    }
    // Right-hand side equals int G^k v . grad w for w in P^{k+1}.
    let rhs = &m[0] * &gk[0] + &m[1] * &gk[1];
    let chol = stiff.cholesky().ok_or(Error::Singular {
        element: es.index,
        what: "reconstruction stiffness",
    })?;
    let sol = chol.solve(&rhs.rows(1, n1 - 1).into_owned());
    let mut p = DMatrix::zeros(n1, ns);
    // Mean-value closure: the constant mode copies v_T's.
    p[(0, 0)] = 1.0;
    p.rows_mut(1, n1 - 1).copy_from(&sol);
    Ok(p)
}

/// Scalar face residual `d_TF` on local face `i`, `(k+1) x scalar_len`.
fn scalar_face_residual(es: &ElementSpace, p: &DMatrix<f64>, i: usize) -> DMatrix<f64> {
    let lay = es.layout();
    let n1 = dim_p2(es.degree + 1);
    let ns = lay.scalar_len();
    let lf = &es.faces[i];
    // v_T + (p_T v - pi_T^k p_T v), in P^{k+1} coefficients.
    let mut inner = p.clone();
    inner.rows_mut(0, lay.nk).fill(0.0);
    for a in 0..lay.nk {
        inner[(a, a)] += 1.0;
    }
    let mut trace = DMatrix::<f64>::zeros(lay.nf, n1);
    for ((phi, psi), &w) in lf.phi.iter().zip(&lf.psi).zip(&lf.quad.weights) {
        for b in 0..lay.nf {
            for a in 0..n1 {
                trace[(b, a)] += w * psi[b] * phi[a];
            }
        }
    }
    let mut d = -(trace * inner);
    for b in 0..lay.nf {
        d[(b, lay.scalar_face(i, b))] += 1.0;
    }
    debug_assert_eq!(d.ncols(), ns);
    d
}

/// Lifts a scalar operator `r x scalar_len` to `2r x vector_len`.
fn lift_rows(lay: &LocalLayout, s: &DMatrix<f64>) -> DMatrix<f64> {
    let r = s.nrows();
    let mut out = DMatrix::zeros(2 * r, lay.vector_len());
    for c in 0..2 {
        for a in 0..r {
            for j in 0..s.ncols() {
                out[(c * r + a, lay.lift(c, j))] = s[(a, j)];
            }
        }
    }
    out
}

/// Lifts a scalar bilinear form to the vector layout.
fn lift_form(lay: &LocalLayout, s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = lay.vector_len();
    let mut out = DMatrix::zeros(n, n);
    for c in 0..2 {
        for i in 0..s.nrows() {
            for j in 0..s.ncols() {
                out[(lay.lift(c, i), lay.lift(c, j))] = s[(i, j)];
            }
        }
    }
    out
}

/// `G_T^l`: rows indexed by `(2 i + j) * dim P^l + a` for the `(i, j)`
/// entry (component `i`, derivative `j`) and basis function `a`.
pub fn gradient_reconstruction(es: &ElementSpace, l: usize) -> Result<DMatrix<f64>> {
    let g = scalar_gradient(es, l)?;
    let lay = es.layout();
    let nl = dim_p2(l);
    let mut out = DMatrix::zeros(4 * nl, lay.vector_len());
    for i in 0..2 {
        for (j, gj) in g.iter().enumerate() {
            for a in 0..nl {
                for s in 0..lay.scalar_len() {
                    out[((2 * i + j) * nl + a, lay.lift(i, s))] = gj[(a, s)];
                }
            }
        }
    }
    Ok(out)
}

/// `p_T`: rows `c * dim P^{k+1} + a`.
pub fn velocity_reconstruction(es: &ElementSpace) -> Result<DMatrix<f64>> {
    let g = scalar_gradient(es, es.degree)?;
    Ok(lift_rows(&es.layout(), &scalar_reconstruction(es, &g)?))
}

/// `D_T = tr(G_T^k)`, `dim P^k x vector_len`.
pub fn divergence_reconstruction(es: &ElementSpace) -> Result<DMatrix<f64>> {
    let g = scalar_gradient(es, es.degree)?;
    Ok(divergence_from(&es.layout(), &g))
}

fn divergence_from(lay: &LocalLayout, g: &[DMatrix<f64>; 2]) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(lay.nk, lay.vector_len());
    for (j, gj) in g.iter().enumerate() {
        for a in 0..lay.nk {
            for s in 0..lay.scalar_len() {
                d[(a, lay.lift(j, s))] += gj[(a, s)];
            }
        }
    }
    d
}

/// `d_TF` on local face `i`: rows `c * (k+1) + b`.
pub fn face_residual(es: &ElementSpace, i: usize) -> Result<DMatrix<f64>> {
    if i >= es.faces.len() {
        return Err(Error::invalid(format!("element {} has no local face {i}", es.index)));
    }
    let g = scalar_gradient(es, es.degree)?;
    let p = scalar_reconstruction(es, &g)?;
    Ok(lift_rows(&es.layout(), &scalar_face_residual(es, &p, i)))
}

/// `A_T`, realizing `a_T(u, v) = int G u : G v + s_T(u, v)`.
pub fn viscous_matrix(es: &ElementSpace) -> Result<DMatrix<f64>> {
    Ok(LocalOperatorPack::new(es)?.viscous)
}

/// `B_T`, realizing `b_T(v, q) = -int D_T v q` with rows over the `P^k`
/// pressure basis.
pub fn coupling_matrix(es: &ElementSpace) -> Result<DMatrix<f64>> {
    Ok(-divergence_reconstruction(es)?)
}

/// All linear local operators of one element.
#[derive(Clone, Debug)]
pub struct LocalOperatorPack {
    pub element: usize,
    pub layout: LocalLayout,
    /// `G_T^k`, see [`gradient_reconstruction`].
    pub gradient: DMatrix<f64>,
    /// `p_T`, see [`velocity_reconstruction`].
    pub reconstruction: DMatrix<f64>,
    pub divergence: DMatrix<f64>,
    /// One `d_TF` per local face.
    pub face_residuals: Vec<DMatrix<f64>>,
    /// `S_T = sum_F h_F^{-1} d_TF^T d_TF`.
    pub stabilization: DMatrix<f64>,
    /// `A_T = G^T G + S_T`.
    pub viscous: DMatrix<f64>,
    /// `B_T = -D_T`.
    pub coupling: DMatrix<f64>,
}

impl LocalOperatorPack {
    pub fn new(es: &ElementSpace) -> Result<Self> {
        let lay = es.layout();
        let g = scalar_gradient(es, es.degree)?;
        let p = scalar_reconstruction(es, &g)?;
        let ns = lay.scalar_len();
        let mut stab = DMatrix::<f64>::zeros(ns, ns);
        let mut residuals = Vec::with_capacity(es.faces.len());
        for (i, lf) in es.faces.iter().enumerate() {
            let d = scalar_face_residual(es, &p, i);
            stab += d.transpose() * &d / lf.length;
            residuals.push(lift_rows(&lay, &d));
        }
        let consistency = g[0].transpose() * &g[0] + g[1].transpose() * &g[1];
        let viscous = lift_form(&lay, &(consistency + &stab));
        let divergence = divergence_from(&lay, &g);
        let gradient = {
            let nk = lay.nk;
            let mut out = DMatrix::zeros(4 * nk, lay.vector_len());
            for i in 0..2 {
                for (j, gj) in g.iter().enumerate() {
                    for a in 0..nk {
                        for s in 0..ns {
                            out[((2 * i + j) * nk + a, lay.lift(i, s))] = gj[(a, s)];
                        }
                    }
                }
            }
            out
        };
        Ok(LocalOperatorPack {
            element: es.index,
            layout: lay,
            gradient,
            reconstruction: lift_rows(&lay, &p),
            coupling: -&divergence,
            divergence,
            face_residuals: residuals,
            stabilization: lift_form(&lay, &stab),
            viscous,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::{interpolate, BasisSpec, DiscreteSpace};
    use crate::mesh::{BoundingBox, Mesh};
    use nalgebra::DVector;

    fn square() -> Mesh {
        Mesh::generate_cartesian(1, 1, BoundingBox::unit_square()).unwrap()
    }

    fn local_interp(mesh: &Mesh, k: usize, v: impl Fn([f64; 2]) -> [f64; 2] + Sync) -> (ElementSpace, DVector<f64>) {
        let space = DiscreteSpace::new(mesh, BasisSpec::new(k)).unwrap();
        let vh = interpolate(v, &space);
        let es = space.elements[0].clone();
        let loc = vh.local(&es);
        (es, loc)
    }

    #[test]
    fn gradient_of_quadratic_interpolate() {
        let m = square();
        let (es, v) = local_interp(&m, 1, |p| [p[0] * p[0], p[0] * p[1]]);
        let g = gradient_reconstruction(&es, 1).unwrap() * v;
        let nl = 3;
        let exact = |p: [f64; 2]| [[2.0 * p[0], 0.0], [p[1], p[0]]];
        for &p in &es.quad.points {
            for i in 0..2 {
                for j in 0..2 {
                    let c = &g.as_slice()[(2 * i + j) * nl..(2 * i + j + 1) * nl];
                    assert!((es.evaluate(c, p) - exact(p)[i][j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gradient_of_rotation_at_degree_zero() {
        let m = Mesh::generate_triangular(1, 1, BoundingBox::unit_square()).unwrap();
        let (es, v) = local_interp(&m, 1, |p| [p[1], -p[0]]);
        let g = gradient_reconstruction(&es, 0).unwrap() * v;
        let scale = es.area.sqrt();
        let expected = [0.0, 1.0, -1.0, 0.0];
        for (gi, e) in g.iter().zip(expected) {
            assert!((gi / scale - e).abs() < 1e-12);
        }
        let (es, v) = local_interp(&m, 2, |_| [0.3, 2.0]);
        assert!((gradient_reconstruction(&es, 2).unwrap() * v).amax() < 1e-12);
    }

    #[test]
    fn reconstruction_closure_and_rejection_of_quadratics_at_k0() {
        let m = square();
        let (es, v) = local_interp(&m, 0, |p| [p[0] * p[0], p[1] * p[1]]);
        let p = velocity_reconstruction(&es).unwrap() * &v;
        let n1 = 3;
        for c in 0..2 {
            let pc = &p.as_slice()[c * n1..(c + 1) * n1];
            let mean_p = es.quad.integrate(|x| es.evaluate(pc, x));
            let mean_v = es.quad.integrate(|x| es.evaluate(&v.as_slice()[c..c + 1], x));
            assert!((mean_p - mean_v).abs() < 1e-13);
            // Not reproduced: x^2 is not in P^1.
            let err = es.quad.integrate(|x| (es.evaluate(pc, x) - x[c] * x[c]).powi(2));
            assert!(err > 1e-4);
        }
        let (es, v) = local_interp(&m, 1, |p| [p[0] * p[0], p[1] * p[1]]);
        let p = velocity_reconstruction(&es).unwrap() * &v;
        for c in 0..2 {
            for &x in &es.quad.points {
                assert!((es.evaluate(&p.as_slice()[c * 6..(c + 1) * 6], x) - x[c] * x[c]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn divergence_examples() {
        let m = square();
        let (es, v) = local_interp(&m, 2, |p| [p[0], p[1]]);
        let d = divergence_reconstruction(&es).unwrap() * &v;
        for &x in &es.quad.points {
            assert!((es.evaluate(d.as_slice(), x) - 2.0).abs() < 1e-12);
        }
        let b = coupling_matrix(&es).unwrap() * &v;
        // q = 1 = sqrt(|T|) phi_0
        assert!((b[0] * es.area.sqrt() + 2.0 * es.area).abs() < 1e-12);

        let (es, v) = local_interp(&m, 2, |p| [p[1], -p[0]]);
        assert!((coupling_matrix(&es).unwrap() * v).amax() < 1e-12);

        // k = 0: D_T I_T (x^2, 0) = 2 x_T.
        let m = Mesh::generate_triangular(1, 1, BoundingBox::new(0.0, 2.0, 0.0, 1.0)).unwrap();
        let space = DiscreteSpace::new(&m, BasisSpec::new(0)).unwrap();
        let vh = interpolate(|p| [p[0] * p[0], 0.0], &space);
        for es in &space.elements {
            let d = divergence_reconstruction(es).unwrap() * vh.local(es);
            let xc = es.quad.integrate(|p| p[0]) / es.area;
            assert!((es.evaluate(d.as_slice(), es.centroid) - 2.0 * xc).abs() < 1e-12);
        }
    }

    #[test]
    fn viscous_exactness_and_kernel() {
        let m = square();
        for k in 0..=3 {
            let (es, v) = local_interp(&m, k, |p| [p[0], 0.0]);
            let a = viscous_matrix(&es).unwrap();
            assert!((v.dot(&(&a * &v)) - 1.0).abs() < 1e-12, "k={k}");
            let (_, c) = local_interp(&m, k, |_| [0.7, -1.1]);
            assert!(c.dot(&(&a * &c)).abs() < 1e-12);
            assert!((&a - a.transpose()).amax() < 1e-12 * a.amax());
        }
    }

    #[test]
    fn face_residual_vanishes_on_constants() {
        let m = square();
        let (es, c) = local_interp(&m, 2, |_| [1.0, 2.0]);
        for i in 0..4 {
            assert!((face_residual(&es, i).unwrap() * &c).amax() < 1e-12);
        }
        assert!(face_residual(&es, 4).is_err());
    }
}
