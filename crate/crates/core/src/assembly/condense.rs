//! Element-wise Schur complements and the global sparse solve.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{Discretization, LinearizedSystem, PressureField};
use crate::fespace::HybridVelocity;
use crate::{Error, Result};

/// Recovery data of one element: `d_I = y - X d_S`.
#[derive(Clone, Debug)]
pub struct ElementCondensation {
    pub element: usize,
    /// Local indices of the eliminated unknowns.
    pub inner: Vec<usize>,
    /// Local indices of the retained unknowns.
    pub skeleton: Vec<usize>,
    /// Condensed index of each retained unknown.
    pub global: Vec<usize>,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

/// Condensed Newton system on interior face velocities, pressure means and
/// the multiplier.
#[derive(Clone, Debug)]
pub struct CondensedSystem {
    pub dim: usize,
    /// Coordinate entries; duplicates are summed.
    pub triplets: Vec<(usize, usize, f64)>,
    pub rhs: DVector<f64>,
    pub recovery: Vec<ElementCondensation>,
}

/// Newton increment on all unknowns.
#[derive(Clone, Debug)]
pub struct Increment {
    pub velocity: HybridVelocity,
    pub pressure: PressureField,
    pub multiplier: f64,
}

fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Eliminates element velocities and pressure fluctuations element by
/// element.
pub fn static_condense(disc: &Discretization, sys: &LinearizedSystem) -> Result<CondensedSystem> {
    let dm = &disc.dofmap;
    let parts = sys
        .elements
        .par_iter()
        .map(|es_sys| -> Result<(ElementCondensation, DMatrix<f64>, DVector<f64>)> {
            let t = es_sys.element;
            let es = disc.space.element(t);
            let lay = es.layout();
            let (nv, nk, nf) = (lay.vector_len(), lay.nk, lay.nf);
            let mut inner: Vec<usize> = (0..2 * nk).collect();
            inner.extend(nv + 1..nv + nk);
            let mut skeleton = Vec::new();
            let mut global = Vec::new();
            for (i, lf) in es.faces.iter().enumerate() {
                if let Some(off) = dm.condensed_face(lf.face) {
                    for c in 0..2 {
                        for b in 0..nf {
                            skeleton.push(lay.face(i, c, b));
                            global.push(off + c * nf + b);
                        }
                    }
                }
            }
            skeleton.push(nv);
            global.push(dm.condensed_pressure(t));

            let k = &es_sys.matrix;
            let b = -&es_sys.residual;
            let (ni, ns) = (inner.len(), skeleton.len());
            let kii = select(k, &inner, &inner);
            let mut rhs = DMatrix::zeros(ni, ns + 1);
            rhs.view_mut((0, 0), (ni, ns)).copy_from(&select(k, &inner, &skeleton));
            for (r, &i) in inner.iter().enumerate() {
                rhs[(r, ns)] = b[i];
            }
            let singular = || Error::Singular {
                element: t,
                what: "element block of the Newton matrix",
            };
            let sol = kii.lu().solve(&rhs).ok_or_else(singular)?;
            if sol.iter().any(|v| !v.is_finite()) {
                return Err(singular());
            }
            let x = sol.columns(0, ns).into_owned();
            let y = sol.column(ns).into_owned();
            let ksi = select(k, &skeleton, &inner);
            let schur = select(k, &skeleton, &skeleton) - &ksi * &x;
            let bs = DVector::from_iterator(ns, skeleton.iter().map(|&s| b[s]));
            let g = bs - &ksi * &y;
            Ok((
                ElementCondensation {
                    element: t,
                    inner,
                    skeleton,
                    global,
                    x,
                    y,
                },
                schur,
                g,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let dim = dm.condensed_dim();
    let mut rhs = DVector::zeros(dim);
    let mut triplets = Vec::with_capacity(parts.iter().map(|p| p.1.len()).sum::<usize>() + 2 * dm.num_elements);
    let mut recovery = Vec::with_capacity(parts.len());
    for (rec, schur, g) in parts {
        for (j, &gj) in rec.global.iter().enumerate() {
            rhs[gj] += g[j];
            for (i, &gi) in rec.global.iter().enumerate() {
                triplets.push((gi, gj, schur[(i, j)]));
            }
        }
        recovery.push(rec);
    }
    let lam = dm.condensed_multiplier();
    for (t, &w) in sys.mean_weights.iter().enumerate() {
        let p0 = dm.condensed_pressure(t);
        triplets.push((p0, lam, w));
        triplets.push((lam, p0, w));
    }
    rhs[lam] = -sys.constraint_residual;
    Ok(CondensedSystem {
        dim,
        triplets,
        rhs,
        recovery,
    })
}

/// Solves a square sparse system given by coordinate entries (duplicates are
/// summed) with a sparse LU factorization.
pub fn solve_sparse(dim: usize, triplets: &[(usize, usize, f64)], rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if rhs.len() != dim {
        return Err(Error::invalid("right-hand side length does not match the matrix"));
    }
    let entries: Vec<Triplet<usize, usize, f64>> = triplets.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(dim, dim, &entries)
        .map_err(|e| Error::Solver(format!("sparse matrix construction failed: {e:?}")))?;
    let lu = mat
        .sp_lu()
        .map_err(|e| Error::Solver(format!("sparse LU factorization failed: {e:?}")))?;
    let b = faer::Col::<f64>::from_fn(dim, |i| rhs[i]);
    let x = lu.solve(&b);
    let out = DVector::from_fn(dim, |i, _| x[i]);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver("sparse solve produced non-finite values (singular system)".into()));
    }
    Ok(out)
}

impl CondensedSystem {
    pub fn solve(&self) -> Result<DVector<f64>> {
        solve_sparse(self.dim, &self.triplets, &self.rhs)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.triplets {
            m[(r, c)] += v;
        }
        m
    }

    pub fn rhs_norm(&self) -> f64 {
        self.rhs.norm()
    }

    /// Back-substitution of the eliminated unknowns.
    pub fn recover_local(&self, disc: &Discretization, ds: &DVector<f64>) -> Result<Increment> {
        if ds.len() != self.dim {
            return Err(Error::invalid("condensed solution has the wrong length"));
        }
        let dm = &disc.dofmap;
        let spec = disc.spec();
        let nk = spec.element_dim();
        let mut velocity = HybridVelocity::zeros(disc.mesh(), spec);
        let mut pressure = PressureField::zeros(dm.num_elements, spec);
        for f in 0..dm.num_faces {
            if let Some(off) = dm.condensed_face(f) {
                velocity.face_block_mut(f).copy_from_slice(ds.rows(off, dm.face_block()).as_slice());
            }
        }
        let locals: Vec<DVector<f64>> = self
            .recovery
            .par_iter()
            .map(|rec| {
                let d_s = DVector::from_iterator(rec.global.len(), rec.global.iter().map(|&g| ds[g]));
                &rec.y - &rec.x * d_s
            })
            .collect();
        for (rec, d_i) in self.recovery.iter().zip(&locals) {
            let t = rec.element;
            velocity.element_block_mut(t).copy_from_slice(&d_i.as_slice()[..2 * nk]);
            let p = pressure.element_mut(t);
            p[0] = ds[dm.condensed_pressure(t)];
            p[1..].copy_from_slice(&d_i.as_slice()[2 * nk..]);
        }
        Ok(Increment {
            velocity,
            pressure,
            multiplier: ds[dm.condensed_multiplier()],
        })
    }
}
