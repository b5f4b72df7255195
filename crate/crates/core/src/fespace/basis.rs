//! Orthonormal polynomial bases on elements and faces.

use nalgebra::{DMatrix, DVector};

use super::quadrature::QuadratureRule;
use crate::{Error, Point, Result};

/// Dimension of `P^l` in two variables.
pub const fn dim_p2(l: usize) -> usize {
    (l + 1) * (l + 2) / 2
}

/// L2-orthonormal basis of `P^L(T)`.
///
/// Built from the scaled monomials `((x - x_T) / h_T)^a ((y - y_T) / h_T)^b`
/// ordered by total degree, orthonormalized by two passes of Cholesky-based
/// Gram-Schmidt. The coefficient matrix is lower triangular, so the first
/// `dim_p2(l)` functions span `P^l(T)` for every `l <= L`.
#[derive(Clone, Debug)]
pub struct ElementBasis {
    degree: usize,
    center: Point,
    scale: f64,
    /// Exponents of the monomials, by total degree.
    exponents: Vec<(usize, usize)>,
    /// Row `i` holds the monomial coefficients of basis function `i`.
    coefficients: DMatrix<f64>,
}

impl ElementBasis {
    /// `element` is used only to report failures.
    pub fn new(
        degree: usize,
        center: Point,
        scale: f64,
        quad: &QuadratureRule,
        element: usize,
    ) -> Result<Self> {
        if quad.degree < 2 * degree {
            return Err(Error::invalid(format!(
                "quadrature of degree {} cannot orthonormalize P^{degree}",
                quad.degree
            )));
        }
        let mut exponents = Vec::with_capacity(dim_p2(degree));
        for d in 0..=degree {
            for j in 0..=d {
                exponents.push((d - j, j));
            }
        }
        let n = exponents.len();
        let mut basis = ElementBasis {
            degree,
            center,
            scale,
            exponents,
            coefficients: DMatrix::identity(n, n),
        };
        for _ in 0..2 {
            let mut mass = DMatrix::zeros(n, n);
            let mut phi = DVector::zeros(n);
            for (p, w) in quad.iter() {
                basis.eval_into(p, phi.as_mut_slice());
                mass.ger(w, &phi, &phi, 1.0);
            }
            let chol = mass.cholesky().ok_or(Error::Singular {
                element,
                what: "element mass matrix",
            })?;
            let l = chol.l();
            // New coefficients C' = L^{-1} C.
            let c = l
                .solve_lower_triangular(&basis.coefficients)
                .ok_or(Error::Singular {
                    element,
                    what: "element mass matrix",
                })?;
            basis.coefficients = c;
        }
        Ok(basis)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    fn monomials(&self, p: Point, values: &mut [f64], grads: Option<&mut [[f64; 2]]>) {
        let x = (p[0] - self.center[0]) / self.scale;
        let y = (p[1] - self.center[1]) / self.scale;
        let deg = self.degree;
        let mut xp = vec![1.0; deg + 1];
        let mut yp = vec![1.0; deg + 1];
        for i in 1..=deg {
            xp[i] = xp[i - 1] * x;
            yp[i] = yp[i - 1] * y;
        }
        for (m, &(a, b)) in self.exponents.iter().enumerate() {
            values[m] = xp[a] * yp[b];
        }
        if let Some(g) = grads {
            for (m, &(a, b)) in self.exponents.iter().enumerate() {
                let dx = if a > 0 { a as f64 * xp[a - 1] * yp[b] } else { 0.0 };
                let dy = if b > 0 { b as f64 * xp[a] * yp[b - 1] } else { 0.0 };
                g[m] = [dx / self.scale, dy / self.scale];
            }
        }
    }

    /// Values of all basis functions at `p`.
    pub fn eval_into(&self, p: Point, out: &mut [f64]) {
        let n = self.len();
        let mut mono = vec![0.0; n];
        self.monomials(p, &mut mono, None);
        for i in 0..n {
            out[i] = (0..=i).map(|j| self.coefficients[(i, j)] * mono[j]).sum();
        }
    }

    pub fn eval(&self, p: Point) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(p, &mut out);
        out
    }

    /// Values and gradients of all basis functions at `p`.
    pub fn eval_with_gradients(&self, p: Point) -> (Vec<f64>, Vec<[f64; 2]>) {
        let n = self.len();
        let mut mono = vec![0.0; n];
        let mut mgrad = vec![[0.0; 2]; n];
        self.monomials(p, &mut mono, Some(&mut mgrad));
        let mut v = vec![0.0; n];
        let mut g = vec![[0.0; 2]; n];
        for i in 0..n {
            for j in 0..=i {
                let c = self.coefficients[(i, j)];
                v[i] += c * mono[j];
                g[i][0] += c * mgrad[j][0];
                g[i][1] += c * mgrad[j][1];
            }
        }
        (v, g)
    }

    /// Evaluates the polynomial with the given leading coefficients.
    pub fn evaluate(&self, coeffs: &[f64], p: Point) -> f64 {
        let phi = self.eval(p);
        coeffs.iter().zip(&phi).map(|(c, v)| c * v).sum()
    }
}

/// Orthonormal Legendre basis of `P^k(F)` on a segment, parametrized from
/// the face's first vertex to its second.
#[derive(Clone, Debug)]
pub struct FaceBasis {
    degree: usize,
    origin: Point,
    end: Point,
    length: f64,
}

impl FaceBasis {
    pub fn new(degree: usize, origin: Point, end: Point) -> Self {
        let length = (end[0] - origin[0]).hypot(end[1] - origin[1]);
        FaceBasis {
            degree,
            origin,
            end,
            length,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eval(&self, p: Point) -> Vec<f64> {
        let d = [self.end[0] - self.origin[0], self.end[1] - self.origin[1]];
        let t = ((p[0] - self.origin[0]) * d[0] + (p[1] - self.origin[1]) * d[1]) / (self.length * self.length);
        let s = 2.0 * t - 1.0;
        let mut out = Vec::with_capacity(self.len());
        let (mut p0, mut p1) = (1.0, s);
        for i in 0..=self.degree {
            let pi = match i {
                0 => 1.0,
                1 => s,
                _ => {
                    let p2 = ((2 * i - 1) as f64 * s * p1 - (i - 1) as f64 * p0) / i as f64;
                    p0 = p1;
                    p1 = p2;
                    p2
                }
            };
            out.push(pi * ((2 * i + 1) as f64 / self.length).sqrt());
        }
        out
    }

    pub fn evaluate(&self, coeffs: &[f64], p: Point) -> f64 {
        self.eval(p).iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::quadrature::{face_quadrature, polygon_quadrature};

    #[test]
    fn element_basis_is_orthonormal_on_stretched_cell() {
        let pts = [[0.0, 0.0], [4.0, 0.0], [4.0, 0.1], [0.0, 0.1]];
        let c = [2.0, 0.05];
        let h = (16.0f64 + 0.01).sqrt();
        for deg in 0..=6 {
            let q = polygon_quadrature(&pts, c, 2 * deg).unwrap();
            let b = ElementBasis::new(deg, c, h, &q, 0).unwrap();
            let n = b.len();
            let mut mass = DMatrix::<f64>::zeros(n, n);
            for (p, w) in q.iter() {
                let v = DVector::from_vec(b.eval(p));
                mass.ger(w, &v, &v, 1.0);
            }
            let err = (mass - DMatrix::identity(n, n)).amax();
            assert!(err < 1e-10, "degree {deg}: {err}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.2, 0.9]];
        let c = [0.4, 0.3];
        let q = polygon_quadrature(&pts, c, 6).unwrap();
        let b = ElementBasis::new(3, c, 1.0, &q, 0).unwrap();
        let p = [0.3, 0.2];
        let (_, g) = b.eval_with_gradients(p);
        let e = 1e-6;
        let fx: Vec<f64> = b.eval([p[0] + e, p[1]]).iter().zip(b.eval([p[0] - e, p[1]])).map(|(a, c)| (a - c) / (2.0 * e)).collect();
        for i in 0..b.len() {
            assert!((g[i][0] - fx[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn face_basis_is_orthonormal() {
        let (a, b) = ([0.3, 0.1], [1.1, -0.5]);
        let fb = FaceBasis::new(4, a, b);
        let q = face_quadrature(a, b, 8).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let m = q.integrate(|p| fb.eval(p)[i] * fb.eval(p)[j]);
                assert!((m - if i == j { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
        }
    }
}
