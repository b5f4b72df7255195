//! Global numbering, linearized element systems and static condensation.
//!
//! Two index spaces are used. The full space orders all unknowns as
//! `[element velocities | face velocities | element pressures | multiplier]`.
//! The condensed space keeps only the interior face velocities, one pressure
//! mean per element and the multiplier enforcing `int p_h = 0`.
//!
//! Dirichlet face values are imposed strongly: they are part of the current
//! iterate and the corresponding increments are identically zero.

mod condense;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::fespace::{BasisSpec, DiscreteSpace, ElementSpace, HybridVelocity};
use crate::local_ops::{convective_jacobian, ConvectiveForm, LocalOperatorPack};
use crate::mesh::Mesh;
use crate::{Error, Point, Result};

pub use condense::{solve_sparse, static_condense, CondensedSystem, ElementCondensation, Increment};

/// Body force or boundary data, `x -> value`.
pub type VectorField<'a> = &'a (dyn Fn(Point) -> [f64; 2] + Sync);

/// Global numbering of velocity, pressure and multiplier unknowns.
#[derive(Clone, Debug)]
pub struct DofMap {
    pub spec: BasisSpec,
    pub num_elements: usize,
    pub num_faces: usize,
    /// Per face: `true` on the Dirichlet boundary.
    pub boundary: Vec<bool>,
    /// Per face: rank among interior faces.
    interior: Vec<Option<usize>>,
    num_interior: usize,
}

impl DofMap {
    pub fn build(mesh: &Mesh, spec: BasisSpec) -> Self {
        let boundary: Vec<bool> = mesh.faces().iter().map(|f| f.is_boundary()).collect();
        let mut next = 0;
        let interior = boundary
            .iter()
            .map(|&b| {
                (!b).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        DofMap {
            spec,
            num_elements: mesh.num_elements(),
            num_faces: mesh.num_faces(),
            boundary,
            interior,
            num_interior: next,
        }
    }

    pub fn num_interior_faces(&self) -> usize {
        self.num_interior
    }

    /// `2 dim P^k`.
    pub fn element_block(&self) -> usize {
        2 * self.spec.element_dim()
    }

    /// `2 (k + 1)`.
    pub fn face_block(&self) -> usize {
        2 * self.spec.face_dim()
    }

    pub fn pressure_block(&self) -> usize {
        self.spec.element_dim()
    }

    pub fn velocity_dofs(&self) -> usize {
        self.num_elements * self.element_block() + self.num_faces * self.face_block()
    }

    pub fn pressure_dofs(&self) -> usize {
        self.num_elements * self.pressure_block()
    }

    pub fn full_dim(&self) -> usize {
        self.velocity_dofs() + self.pressure_dofs() + 1
    }

    pub fn element_offset(&self, t: usize) -> usize {
        t * self.element_block()
    }

    pub fn face_offset(&self, f: usize) -> usize {
        self.num_elements * self.element_block() + f * self.face_block()
    }

    pub fn pressure_offset(&self, t: usize) -> usize {
        self.velocity_dofs() + t * self.pressure_block()
    }

    pub fn multiplier(&self) -> usize {
        self.velocity_dofs() + self.pressure_dofs()
    }

    /// `2 |F_i| (k + 1) + |T| + 1`.
    pub fn condensed_dim(&self) -> usize {
        self.num_interior * self.face_block() + self.num_elements + 1
    }

    /// Offset of the face block in the condensed space, `None` on the boundary.
    pub fn condensed_face(&self, f: usize) -> Option<usize> {
        self.interior[f].map(|r| r * self.face_block())
    }

    pub fn condensed_pressure(&self, t: usize) -> usize {
        self.num_interior * self.face_block() + t
    }

    pub fn condensed_multiplier(&self) -> usize {
        self.num_interior * self.face_block() + self.num_elements
    }
}

/// Element-wise `P^k` pressure coefficients in the orthonormal bases.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureField {
    pub spec: BasisSpec,
    pub coefficients: Vec<f64>,
}

impl PressureField {
    pub fn zeros(num_elements: usize, spec: BasisSpec) -> Self {
        PressureField {
            spec,
            coefficients: vec![0.0; num_elements * spec.element_dim()],
        }
    }

    pub fn num_elements(&self) -> usize {
        self.coefficients.len() / self.spec.element_dim()
    }

    pub fn element(&self, t: usize) -> &[f64] {
        let n = self.spec.element_dim();
        &self.coefficients[t * n..(t + 1) * n]
    }

    pub fn element_mut(&mut self, t: usize) -> &mut [f64] {
        let n = self.spec.element_dim();
        &mut self.coefficients[t * n..(t + 1) * n]
    }

    /// `int_Omega p_h`; the constant basis function is `|T|^{-1/2}`.
    pub fn integral(&self, mesh: &Mesh) -> f64 {
        (0..self.num_elements())
            .map(|t| self.element(t)[0] * mesh.element(t).area.sqrt())
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Subtracts the constant `c` on every element.
    pub fn shift(&mut self, c: f64, mesh: &Mesh) {
        for t in 0..self.num_elements() {
            self.element_mut(t)[0] -= c * mesh.element(t).area.sqrt();
        }
    }

    pub fn axpy(&mut self, alpha: f64, other: &PressureField) {
        for (a, b) in self.coefficients.iter_mut().zip(&other.coefficients) {
            *a += alpha * b;
        }
    }
}

/// Spaces, local operators and numbering of one mesh and degree.
#[derive(Debug)]
pub struct Discretization<'m> {
    pub space: DiscreteSpace<'m>,
    pub packs: Vec<LocalOperatorPack>,
    pub dofmap: DofMap,
}

impl<'m> Discretization<'m> {
    pub fn new(mesh: &'m Mesh, spec: BasisSpec) -> Result<Self> {
        let space = DiscreteSpace::new(mesh, spec)?;
        let packs = space
            .elements
            .par_iter()
            .map(LocalOperatorPack::new)
            .collect::<Result<Vec<_>>>()?;
        Ok(Discretization {
            space,
            packs,
            dofmap: DofMap::build(mesh, spec),
        })
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.space.mesh
    }

    pub fn spec(&self) -> BasisSpec {
        self.space.spec
    }

    /// `(int f . phi_a)` per element, x block then y block.
    pub fn load(&self, f: VectorField) -> Vec<DVector<f64>> {
        let k = self.spec().degree;
        self.space
            .elements
            .par_iter()
            .map(|es| {
                let mut v = es.project(|p| f(p)[0], k).expect("k <= basis degree");
                v.extend(es.project(|p| f(p)[1], k).expect("k <= basis degree"));
                DVector::from_vec(v)
            })
            .collect()
    }

    /// Velocity with `pi_F^k g` on boundary faces and zeros elsewhere.
    pub fn boundary_lifting(&self, g: VectorField) -> HybridVelocity {
        let mut u = HybridVelocity::zeros(self.mesh(), self.spec());
        crate::fespace::interpolate_boundary(&mut u, g, &self.space);
        u
    }

    /// `a_h(u, v)`.
    pub fn viscous_form(&self, u: &HybridVelocity, v: &HybridVelocity) -> f64 {
        self.space
            .elements
            .par_iter()
            .zip(&self.packs)
            .map(|(es, pack)| v.local(es).dot(&(&pack.viscous * u.local(es))))
            .sum()
    }

    fn check(&self, u: &HybridVelocity, p: &PressureField) -> Result<()> {
        let spec = self.spec();
        if u.spec != spec || p.spec != spec {
            return Err(Error::invalid("field degree does not match the discretization"));
        }
        if u.num_elements() != self.dofmap.num_elements
            || u.num_faces() != self.dofmap.num_faces
            || p.num_elements() != self.dofmap.num_elements
        {
            return Err(Error::invalid("field size does not match the mesh"));
        }
        Ok(())
    }
}

/// Current iterate of the saddle-point problem.
#[derive(Clone, Debug)]
pub struct State {
    pub velocity: HybridVelocity,
    pub pressure: PressureField,
    pub multiplier: f64,
}

/// Which operator is linearized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Linearization {
    pub nu: f64,
    /// `None` for Stokes.
    pub convection: Option<ConvectiveForm>,
}

/// Newton matrix and residual of one element, on the local unknowns
/// `[hybrid velocity | P^k pressure]`.
#[derive(Clone, Debug)]
pub struct ElementSystem {
    pub element: usize,
    pub matrix: DMatrix<f64>,
    pub residual: DVector<f64>,
}

/// All element systems plus the multiplier row.
#[derive(Clone, Debug)]
pub struct LinearizedSystem {
    pub elements: Vec<ElementSystem>,
    /// `int p_h`, the residual of the zero-mean constraint.
    pub constraint_residual: f64,
    /// `|T|^{1/2}`, coupling of each pressure mean to the multiplier.
    pub mean_weights: Vec<f64>,
}

fn element_system(
    es: &ElementSpace,
    pack: &LocalOperatorPack,
    u: &DVector<f64>,
    p: &[f64],
    lambda: f64,
    load: &DVector<f64>,
    lin: Linearization,
) -> Result<ElementSystem> {
    let lay = pack.layout;
    let (nv, nk) = (lay.vector_len(), lay.nk);
    let mut a = &pack.viscous * lin.nu;
    let mut r_u = &a * u;
    if let Some(form) = lin.convection {
        // t(u, u, .) is 1-homogeneous in each argument, so J(u) u = 2 C(u) u.
        let j = convective_jacobian(es, u.as_slice(), form)?;
        r_u += (&j * u) * 0.5;
        a += j;
    }
    let p = DVector::from_column_slice(p);
    r_u += pack.coupling.transpose() * &p;
    for i in 0..2 * nk {
        r_u[i] -= load[i];
    }
    let mut r_p = &pack.coupling * u;
    r_p[0] += es.area.sqrt() * lambda;

    let mut matrix = DMatrix::zeros(nv + nk, nv + nk);
    matrix.view_mut((0, 0), (nv, nv)).copy_from(&a);
    matrix.view_mut((nv, 0), (nk, nv)).copy_from(&pack.coupling);
    matrix.view_mut((0, nv), (nv, nk)).copy_from(&pack.coupling.transpose());
    let mut residual = DVector::zeros(nv + nk);
    residual.rows_mut(0, nv).copy_from(&r_u);
    residual.rows_mut(nv, nk).copy_from(&r_p);
    Ok(ElementSystem {
        element: es.index,
        matrix,
        residual,
    })
}

/// Newton matrices and nonlinear residuals at `state`.
///
/// Momentum rows: `nu A u + C(u) u + B^T p - F`; mass rows: `B u + lambda m`
/// with `m` the element means; constraint row: `int p_h`.
pub fn assemble_linearized(
    disc: &Discretization,
    state: &State,
    loads: &[DVector<f64>],
    lin: Linearization,
) -> Result<LinearizedSystem> {
    disc.check(&state.velocity, &state.pressure)?;
    if loads.len() != disc.dofmap.num_elements {
        return Err(Error::invalid("one load vector per element expected"));
    }
    if !(lin.nu > 0.0) || !lin.nu.is_finite() {
        return Err(Error::invalid(format!("viscosity must be positive, got {}", lin.nu)));
    }
    let elements = disc
        .space
        .elements
        .par_iter()
        .zip(&disc.packs)
        .zip(loads)
        .map(|((es, pack), load)| {
            let u = state.velocity.local(es);
            element_system(es, pack, &u, state.pressure.element(es.index), state.multiplier, load, lin)
        })
        .collect::<Result<Vec<_>>>()?;
    let mesh = disc.mesh();
    Ok(LinearizedSystem {
        elements,
        constraint_residual: state.pressure.integral(mesh),
        mean_weights: (0..mesh.num_elements()).map(|t| mesh.element(t).area.sqrt()).collect(),
    })
}

/// Global index of each local unknown of element `t`, `None` for
/// Dirichlet face values.
pub fn local_to_full(disc: &Discretization, t: usize) -> Vec<Option<usize>> {
    let dm = &disc.dofmap;
    let es = disc.space.element(t);
    let lay = es.layout();
    let mut out = vec![None; lay.vector_len() + lay.nk];
    for c in 0..2 {
        for a in 0..lay.nk {
            out[lay.elem(c, a)] = Some(dm.element_offset(t) + c * lay.nk + a);
        }
    }
    for (i, lf) in es.faces.iter().enumerate() {
        if dm.boundary[lf.face] {
            continue;
        }
        for c in 0..2 {
            for b in 0..lay.nf {
                out[lay.face(i, c, b)] = Some(dm.face_offset(lf.face) + c * lay.nf + b);
            }
        }
    }
    for a in 0..lay.nk {
        out[lay.vector_len() + a] = Some(dm.pressure_offset(t) + a);
    }
    out
}

impl LinearizedSystem {
    /// Euclidean norm of the assembled nonlinear residual over all free
    /// unknowns, the multiplier row included.
    pub fn residual_norm(&self, disc: &Discretization) -> f64 {
        let mut r = vec![0.0; disc.dofmap.full_dim()];
        for sys in &self.elements {
            for (i, g) in local_to_full(disc, sys.element).into_iter().enumerate() {
                if let Some(g) = g {
                    r[g] += sys.residual[i];
                }
            }
        }
        r[disc.dofmap.multiplier()] = self.constraint_residual;
        r.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Uncondensed Newton system `K d = -r` in the full index space.
    /// Dirichlet rows are replaced by the identity with zero right-hand side.
    pub fn to_dense(&self, disc: &Discretization) -> (DMatrix<f64>, DVector<f64>) {
        let dm = &disc.dofmap;
        let n = dm.full_dim();
        let mut k = DMatrix::zeros(n, n);
        let mut b = DVector::zeros(n);
        for sys in &self.elements {
            let map = local_to_full(disc, sys.element);
            for (r, gr) in map.iter().enumerate() {
                let Some(gr) = *gr else { continue };
                b[gr] -= sys.residual[r];
                for (c, gc) in map.iter().enumerate() {
                    if let Some(gc) = *gc {
                        k[(gr, gc)] += sys.matrix[(r, c)];
                    }
                }
            }
        }
        let lam = dm.multiplier();
        for (t, &w) in self.mean_weights.iter().enumerate() {
            let p0 = dm.pressure_offset(t);
            k[(p0, lam)] += w;
            k[(lam, p0)] += w;
        }
        b[lam] = -self.constraint_residual;
        for f in (0..dm.num_faces).filter(|&f| dm.boundary[f]) {
            for j in 0..dm.face_block() {
                k[(dm.face_offset(f) + j, dm.face_offset(f) + j)] = 1.0;
            }
        }
        (k, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoundingBox;

    #[test]
    fn dofmap_counts() {
        let m = Mesh::generate_cartesian(2, 2, BoundingBox::unit_square()).unwrap();
        let dm = DofMap::build(&m, BasisSpec::new(1));
        assert_eq!(dm.condensed_dim(), 21);
        assert_eq!(dm.velocity_dofs(), 2 * (4 * 3 + 12 * 2));
        let m1 = Mesh::generate_cartesian(1, 1, BoundingBox::unit_square()).unwrap();
        assert_eq!(DofMap::build(&m1, BasisSpec::new(0)).condensed_dim(), 2);
        assert_eq!(DofMap::build(&m1, BasisSpec::new(3)).face_block(), 8);
        // Condensed indices are a bijection onto 0..dim.
        let mut seen = vec![false; dm.condensed_dim()];
        for f in 0..dm.num_faces {
            if let Some(o) = dm.condensed_face(f) {
                for j in 0..dm.face_block() {
                    assert!(!seen[o + j]);
                    seen[o + j] = true;
                }
            }
        }
        for t in 0..dm.num_elements {
            seen[dm.condensed_pressure(t)] = true;
        }
        seen[dm.condensed_multiplier()] = true;
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn zero_state_has_zero_residual() {
        let m = Mesh::generate_triangular(2, 2, BoundingBox::unit_square()).unwrap();
        let disc = Discretization::new(&m, BasisSpec::new(1)).unwrap();
        let state = State {
            velocity: HybridVelocity::zeros(&m, disc.spec()),
            pressure: PressureField::zeros(m.num_elements(), disc.spec()),
            multiplier: 0.0,
        };
        let loads = disc.load(&|_| [0.0, 0.0]);
        let lin = Linearization {
            nu: 1.0,
            convection: Some(ConvectiveForm::Hho),
        };
        let sys = assemble_linearized(&disc, &state, &loads, lin).unwrap();
        assert!(sys.elements.iter().all(|e| e.residual.amax() == 0.0));
        let stokes = assemble_linearized(&disc, &state, &loads, Linearization { nu: 2.0, convection: None }).unwrap();
        for e in &stokes.elements {
            assert!((&e.matrix - e.matrix.transpose()).amax() < 1e-12 * e.matrix.amax());
        }
    }

    #[test]
    fn mismatched_fields_are_rejected() {
        let m = Mesh::generate_cartesian(2, 2, BoundingBox::unit_square()).unwrap();
        let disc = Discretization::new(&m, BasisSpec::new(1)).unwrap();
        let state = State {
            velocity: HybridVelocity::zeros(&m, BasisSpec::new(2)),
            pressure: PressureField::zeros(m.num_elements(), disc.spec()),
            multiplier: 0.0,
        };
        let loads = disc.load(&|_| [0.0, 0.0]);
        let lin = Linearization { nu: 1.0, convection: None };
        assert!(matches!(
            assemble_linearized(&disc, &state, &loads, lin),
            Err(Error::InvalidArgument(_))
        ));
    }
}
