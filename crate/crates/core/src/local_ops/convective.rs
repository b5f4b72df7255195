//! Skew-symmetric convective trilinear form, element by element.
//!
//! `t_T(w, u, v)` is evaluated through its expanded form, with volume terms
//! on the element unknowns and face terms pairing face and element
//! unknowns, so the high-degree gradient reconstruction never appears.

use nalgebra::DMatrix;

use crate::fespace::{ElementSpace, LocalLayout};
use crate::{Error, Result};

/// Which trilinear form discretizes the convective term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConvectiveForm {
    /// Face terms advected by the element velocity `w_T`.
    Hho,
    /// Face terms advected by the face velocity `w_F`, plus the upwind-like
    /// penalty `eta / 2 sum_F int (u_F - u_T).(v_F - v_T) |w_F . n_TF|`.
    Hdg { eta: f64 },
}

impl ConvectiveForm {
    pub fn hdg(eta: f64) -> Result<Self> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::invalid(format!("HDG parameter eta must be nonnegative, got {eta}")));
        }
        Ok(ConvectiveForm::Hdg { eta })
    }

    fn eta(&self) -> f64 {
        match self {
            ConvectiveForm::Hho => 0.0,
            ConvectiveForm::Hdg { eta } => *eta,
        }
    }
}

/// Pointwise values of a local hybrid vector.
struct Eval<'a> {
    lay: LocalLayout,
    x: &'a [f64],
}

impl Eval<'_> {
    fn elem(&self, phi: &[f64]) -> [f64; 2] {
        let mut v = [0.0; 2];
        for (c, vc) in v.iter_mut().enumerate() {
            *vc = (0..self.lay.nk).map(|a| self.x[self.lay.elem(c, a)] * phi[a]).sum();
        }
        v
    }

    /// `grad[i][j] = d_j v_i`.
    fn elem_grad(&self, grad: &[[f64; 2]]) -> [[f64; 2]; 2] {
        let mut g = [[0.0; 2]; 2];
        for (c, gc) in g.iter_mut().enumerate() {
            for a in 0..self.lay.nk {
                let x = self.x[self.lay.elem(c, a)];
                gc[0] += x * grad[a][0];
                gc[1] += x * grad[a][1];
            }
        }
        g
    }

    fn face(&self, i: usize, psi: &[f64]) -> [f64; 2] {
        let mut v = [0.0; 2];
        for (c, vc) in v.iter_mut().enumerate() {
            *vc = (0..self.lay.nf).map(|b| self.x[self.lay.face(i, c, b)] * psi[b]).sum();
        }
        v
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn check_len(es: &ElementSpace, xs: &[&[f64]]) -> Result<LocalLayout> {
    let lay = es.layout();
    if xs.iter().any(|x| x.len() != lay.vector_len()) {
        return Err(Error::invalid(format!(
            "local vectors on element {} must have length {}",
            es.index,
            lay.vector_len()
        )));
    }
    Ok(lay)
}

fn evaluate(es: &ElementSpace, w: &[f64], u: &[f64], v: &[f64], form: ConvectiveForm) -> Result<f64> {
    let lay = check_len(es, &[w, u, v])?;
    let (we, ue, ve) = (Eval { lay, x: w }, Eval { lay, x: u }, Eval { lay, x: v });
    let mut total = 0.0;
    for ((phi, grad), &wt) in es.phi.iter().zip(&es.grad).zip(&es.quad.weights) {
        let wv = we.elem(phi);
        let (uv, vv) = (ue.elem(phi), ve.elem(phi));
        let (gu, gv) = (ue.elem_grad(grad), ve.elem_grad(grad));
        // v^T grad(u) w - u^T grad(v) w
        let mut s = 0.0;
        for i in 0..2 {
            s += vv[i] * dot(gu[i], wv) - uv[i] * dot(gv[i], wv);
        }
        total += 0.5 * wt * s;
    }
    let eta = form.eta();
    for (i, lf) in es.faces.iter().enumerate() {
        for ((phi, psi), &wt) in lf.phi.iter().zip(&lf.psi).zip(&lf.quad.weights) {
            let (ut, vt) = (ue.elem(phi), ve.elem(phi));
            let (uf, vf) = (ue.face(i, psi), ve.face(i, psi));
            let adv = match form {
                ConvectiveForm::Hho => dot(we.elem(phi), lf.normal),
                ConvectiveForm::Hdg { .. } => dot(we.face(i, psi), lf.normal),
            };
            let mut s = 0.5 * (dot(uf, vt) - dot(vf, ut)) * adv;
            if eta != 0.0 {
                let ju = [uf[0] - ut[0], uf[1] - ut[1]];
                let jv = [vf[0] - vt[0], vf[1] - vt[1]];
                s += 0.5 * eta * dot(ju, jv) * adv.abs();
            }
            total += wt * s;
        }
    }
    Ok(total)
}

/// `t_T(w, u, v)` for the HHO form.
pub fn convective_apply(es: &ElementSpace, w: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
    evaluate(es, w, u, v, ConvectiveForm::Hho)
}

/// `t_T^HDG(w, u, v)` with penalty parameter `eta >= 0`.
pub fn hdg_convective_apply(es: &ElementSpace, w: &[f64], u: &[f64], v: &[f64], eta: f64) -> Result<f64> {
    evaluate(es, w, u, v, ConvectiveForm::hdg(eta)?)
}

/// Matrix `C` with `v^T C u = t_T(w, u, v)`.
pub fn convective_matrix(es: &ElementSpace, w: &[f64], form: ConvectiveForm) -> Result<DMatrix<f64>> {
    let lay = check_len(es, &[w])?;
    let we = Eval { lay, x: w };
    let ns = lay.scalar_len();
    let mut cs = DMatrix::<f64>::zeros(ns, ns);
    for ((phi, grad), &wt) in es.phi.iter().zip(&es.grad).zip(&es.quad.weights) {
        let wv = we.elem(phi);
        for b in 0..lay.nk {
            let gb = dot(grad[b], wv);
            for a in 0..lay.nk {
                cs[(b, a)] += 0.5 * wt * (phi[b] * dot(grad[a], wv) - phi[a] * gb);
            }
        }
    }
    let eta = form.eta();
    for (i, lf) in es.faces.iter().enumerate() {
        for ((phi, psi), &wt) in lf.phi.iter().zip(&lf.psi).zip(&lf.quad.weights) {
            let adv = match form {
                ConvectiveForm::Hho => dot(we.elem(phi), lf.normal),
                ConvectiveForm::Hdg { .. } => dot(we.face(i, psi), lf.normal),
            };
            let h = 0.5 * wt * adv;
            for c in 0..lay.nf {
                let fc = lay.scalar_face(i, c);
                for a in 0..lay.nk {
                    cs[(a, fc)] += h * phi[a] * psi[c];
                    cs[(fc, a)] -= h * psi[c] * phi[a];
                }
            }
            if eta != 0.0 {
                let pen = 0.5 * wt * eta * adv.abs();
                // (v_F - v_T)(u_F - u_T)
                let jump = |s: usize| -> f64 {
                    if s < lay.nk {
                        -phi[s]
                    } else {
                        let r = s - lay.nk;
                        if r / lay.nf == i {
                            psi[r % lay.nf]
                        } else {
                            0.0
                        }
                    }
                };
                let support: Vec<usize> = (0..lay.nk).chain((0..lay.nf).map(|c| lay.scalar_face(i, c))).collect();
                for &r in &support {
                    for &s in &support {
                        cs[(r, s)] += pen * jump(r) * jump(s);
                    }
                }
            }
        }
    }
    let n = lay.vector_len();
    let mut out = DMatrix::zeros(n, n);
    for c in 0..2 {
        for r in 0..ns {
            for s in 0..ns {
                out[(lay.lift(c, r), lay.lift(c, s))] = cs[(r, s)];
            }
        }
    }
    Ok(out)
}

/// Matrix `W` with `v^T W d = t_T(d, u, v)`.
fn advection_derivative(es: &ElementSpace, u: &[f64], form: ConvectiveForm) -> Result<DMatrix<f64>> {
    let lay = check_len(es, &[u])?;
    let ue = Eval { lay, x: u };
    let n = lay.vector_len();
    let mut out = DMatrix::<f64>::zeros(n, n);
    for ((phi, grad), &wt) in es.phi.iter().zip(&es.grad).zip(&es.quad.weights) {
        let uv = ue.elem(phi);
        let gu = ue.elem_grad(grad);
        for i in 0..2 {
            for b in 0..lay.nk {
                let row = lay.elem(i, b);
                for j in 0..2 {
                    let coef = 0.5 * wt * (phi[b] * gu[i][j] - uv[i] * grad[b][j]);
                    for a in 0..lay.nk {
                        out[(row, lay.elem(j, a))] += coef * phi[a];
                    }
                }
            }
        }
    }
    let eta = form.eta();
    for (i, lf) in es.faces.iter().enumerate() {
        let n_tf = lf.normal;
        for ((phi, psi), &wt) in lf.phi.iter().zip(&lf.psi).zip(&lf.quad.weights) {
            let (ut, uf) = (ue.elem(phi), ue.face(i, psi));
            // Column entries of the advecting field d at this point.
            let cols: Vec<(usize, f64)> = match form {
                ConvectiveForm::Hho => (0..2)
                    .flat_map(|j| (0..lay.nk).map(move |a| (j, a)))
                    .map(|(j, a)| (lay.elem(j, a), phi[a] * n_tf[j]))
                    .collect(),
                ConvectiveForm::Hdg { .. } => (0..2)
                    .flat_map(|j| (0..lay.nf).map(move |c| (j, c)))
                    .map(|(j, c)| (lay.face(i, j, c), psi[c] * n_tf[j]))
                    .collect(),
            };
            for ci in 0..2 {
                for b in 0..lay.nk {
                    let r = lay.elem(ci, b);
                    let coef = 0.5 * wt * uf[ci] * phi[b];
                    for &(col, val) in &cols {
                        out[(r, col)] += coef * val;
                    }
                }
                for c in 0..lay.nf {
                    let r = lay.face(i, ci, c);
                    let coef = -0.5 * wt * ut[ci] * psi[c];
                    for &(col, val) in &cols {
                        out[(r, col)] += coef * val;
                    }
                }
            }
            if eta != 0.0 {
                let sign = dot(uf, n_tf).signum() * if dot(uf, n_tf) == 0.0 { 0.0 } else { 1.0 };
                for ci in 0..2 {
                    let jump = uf[ci] - ut[ci];
                    let coef = 0.5 * wt * eta * sign * jump;
                    for c in 0..lay.nf {
                        let r = lay.face(i, ci, c);
                        for &(col, val) in &cols {
                            out[(r, col)] += coef * psi[c] * val;
                        }
                    }
                    for b in 0..lay.nk {
                        let r = lay.elem(ci, b);
                        for &(col, val) in &cols {
                            out[(r, col)] -= coef * phi[b] * val;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Jacobian `J(u)` of `u -> t_T(u, u, .)`: `v^T J d = t_T(d, u, v) + t_T(u, d, v)`.
pub fn convective_jacobian(es: &ElementSpace, u: &[f64], form: ConvectiveForm) -> Result<DMatrix<f64>> {
    Ok(convective_matrix(es, u, form)? + advection_derivative(es, u, form)?)
}
