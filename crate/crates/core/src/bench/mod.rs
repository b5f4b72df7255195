//! Benchmark solutions, discrete error norms and convergence studies.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{error, info};

use crate::assembly::Discretization;
use crate::fespace::{interpolate, norm_1h, BasisSpec};
use crate::mesh::{BoundingBox, Mesh};
use crate::solver::{solve_navier_stokes, Solution, SolverConfig};
use crate::{Error, Point, Result};

type VectorFn = Box<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
type TensorFn = Box<dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync>;
type ScalarFn = Box<dyn Fn(Point) -> f64 + Send + Sync>;

/// Exact velocity, pressure and the matching body force.
pub struct ExactSolution {
    pub name: String,
    pub nu: f64,
    pub domain: BoundingBox,
    pub velocity: VectorFn,
    /// `grad[i][j] = d_j u_i`.
    pub gradient: TensorFn,
    pub pressure: ScalarFn,
    pub forcing: VectorFn,
    pub zero_forcing: bool,
}

impl std::fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExactSolution")
            .field("name", &self.name)
            .field("nu", &self.nu)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

/// `lambda = Re - sqrt(Re^2 + 4 pi^2)` with `Re = 1 / (2 nu)`.
pub fn kovasznay_lambda(nu: f64) -> f64 {
    let re = 0.5 / nu;
    re - (re * re + 4.0 * PI * PI).sqrt()
}

/// Kovasznay flow on `(-0.5, 1.5) x (0, 2)`; `f = 0`.
pub fn kovasznay(nu: f64) -> Result<ExactSolution> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::invalid(format!("viscosity must be positive, got {nu}")));
    }
    let l = kovasznay_lambda(nu);
    let tau = 2.0 * PI;
    Ok(ExactSolution {
        name: "kovasznay".into(),
        nu,
        domain: BoundingBox::new(-0.5, 1.5, 0.0, 2.0),
        velocity: Box::new(move |p| {
            let e = (l * p[0]).exp();
            [1.0 - e * (tau * p[1]).cos(), l / tau * e * (tau * p[1]).sin()]
        }),
        gradient: Box::new(move |p| {
            let e = (l * p[0]).exp();
            let (c, s) = ((tau * p[1]).cos(), (tau * p[1]).sin());
            [[-l * e * c, tau * e * s], [l * l / tau * e * s, l * e * c]]
        }),
        pressure: Box::new(move |p| -0.5 * (2.0 * l * p[0]).exp() + 0.5 * l * ((4.0 * l).exp() - 1.0)),
        forcing: Box::new(|_| [0.0, 0.0]),
        zero_forcing: true,
    })
}

/// Fields of a manufactured solution; `f` is derived from the strong form.
pub struct ManufacturedFields {
    pub velocity: VectorFn,
    pub gradient: TensorFn,
    pub laplacian: VectorFn,
    pub pressure: ScalarFn,
    pub pressure_gradient: VectorFn,
}

/// `f = -nu lap u + (grad u) u + grad p`. The velocity must be solenoidal,
/// which is checked on a lattice of sample points.
pub fn manufactured(name: &str, fields: ManufacturedFields, nu: f64, domain: BoundingBox) -> Result<ExactSolution> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::invalid(format!("viscosity must be positive, got {nu}")));
    }
    domain.check()?;
    let n = 9;
    for i in 0..n {
        for j in 0..n {
            let p = [
                domain.x0 + domain.width() * (i as f64 + 0.5) / n as f64,
                domain.y0 + domain.height() * (j as f64 + 0.5) / n as f64,
            ];
            let g = (fields.gradient)(p);
            let scale = 1.0 + g.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
            if (g[0][0] + g[1][1]).abs() > 1e-10 * scale {
                return Err(Error::invalid(format!(
                    "manufactured velocity '{name}' is not divergence-free at ({:.3}, {:.3})",
                    p[0], p[1]
                )));
            }
        }
    }
    let ManufacturedFields {
        velocity,
        gradient,
        laplacian,
        pressure,
        pressure_gradient,
    } = fields;
    let velocity: std::sync::Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync> = velocity.into();
    let gradient: std::sync::Arc<dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync> = gradient.into();
    let (u, gu) = (velocity.clone(), gradient.clone());
    let forcing = move |p: Point| {
        let (v, g, lap, gp) = (u(p), gu(p), laplacian(p), pressure_gradient(p));
        let mut f = [0.0; 2];
        for i in 0..2 {
            f[i] = -nu * lap[i] + g[i][0] * v[0] + g[i][1] * v[1] + gp[i];
        }
        f
    };
    Ok(ExactSolution {
        name: name.into(),
        nu,
        domain,
        velocity: Box::new(move |p| velocity(p)),
        gradient: Box::new(move |p| gradient(p)),
        pressure,
        forcing: Box::new(forcing),
        zero_forcing: false,
    })
}

/// One line of a convergence table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub meshsize: f64,
    /// `||u_h - I_h u||_{1,h}`.
    pub err_u: f64,
    /// `||u_T - pi_T^k u||_{L2}`.
    pub err_l2_u: f64,
    /// `||p_h - pi^k p||_{L2}`, both with zero mean.
    pub err_p: f64,
    pub iterations: usize,
}

/// Errors of a discrete solution against the interpolate of `exact`.
pub fn compute_errors(disc: &Discretization, solution: &Solution, exact: &ExactSolution) -> ConvergenceRow {
    let space = &disc.space;
    let mesh = disc.mesh();
    let k = disc.spec().degree;
    let iu = interpolate(|p| (exact.velocity)(p), space);
    let diff = solution.velocity.sub(&iu);
    let err_u = norm_1h(&diff, space);
    let err_l2_u = diff.l2_norm();

    let mut pk = crate::assembly::PressureField::zeros(mesh.num_elements(), disc.spec());
    for es in &space.elements {
        let c = es.project(|p| (exact.pressure)(p), k).expect("k <= basis degree");
        pk.element_mut(es.index).copy_from_slice(&c);
    }
    let mean = pk.integral(mesh) / mesh.measure();
    pk.shift(mean, mesh);
    let mut ph = solution.pressure.clone();
    let mean_h = ph.integral(mesh) / mesh.measure();
    ph.shift(mean_h, mesh);
    ph.axpy(-1.0, &pk);
    ConvergenceRow {
        meshsize: mesh.meshsize(),
        err_u,
        err_l2_u,
        err_p: ph.l2_norm(),
        iterations: solution.report.iterations,
    }
}

/// How the meshes of a study are produced.
#[derive(Clone, Debug, PartialEq)]
pub enum MeshFamily {
    Cartesian,
    Triangular,
    /// Mesh file affinely mapped from its bounding box onto the case domain.
    /// A `{}` in the path is replaced by the refinement number.
    File(PathBuf),
}

impl std::str::FromStr for MeshFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartesian" => Ok(MeshFamily::Cartesian),
            "triangular" => Ok(MeshFamily::Triangular),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(MeshFamily::File(PathBuf::from(p))),
                _ => Err(Error::invalid(format!(
                    "unknown mesh family '{s}' (expected cartesian, triangular or file:PATH)"
                ))),
            },
        }
    }
}

impl MeshFamily {
    pub fn build(&self, n: usize, domain: BoundingBox) -> Result<Mesh> {
        match self {
            MeshFamily::Cartesian => Mesh::generate_cartesian(n, n, domain),
            MeshFamily::Triangular => Mesh::generate_triangular(n, n, domain),
            MeshFamily::File(path) => {
                let s = path.to_string_lossy();
                let path = if s.contains("{}") {
                    PathBuf::from(s.replace("{}", &n.to_string()))
                } else {
                    path.clone()
                };
                let mesh = Mesh::read_polymesh(&path)?;
                mesh.map_affine(mesh.bounding_box(), domain)
            }
        }
    }
}

/// Least-squares slope of `log(err)` against `log(h)`.
pub fn fit_slope(h: &[f64], err: &[f64]) -> f64 {
    let n = h.len() as f64;
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Slopes of the three error columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Slopes {
    pub err_u: f64,
    pub err_l2_u: f64,
    pub err_p: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub degree: usize,
    pub rows: Vec<ConvergenceRow>,
}

pub const CSV_HEADER: [&str; 5] = ["meshsize", "err_u", "err_l2_u", "err_p", "iters"];

impl ConvergenceTable {
    /// Slopes over the last `count` rows, `None` with fewer than two.
    pub fn slopes_over(&self, count: usize) -> Option<Slopes> {
        let count = count.min(self.rows.len());
        if count < 2 {
            return None;
        }
        let rows = &self.rows[self.rows.len() - count..];
        let h: Vec<f64> = rows.iter().map(|r| r.meshsize).collect();
        let col = |f: fn(&ConvergenceRow) -> f64| fit_slope(&h, &rows.iter().map(f).collect::<Vec<_>>());
        Some(Slopes {
            err_u: col(|r| r.err_u),
            err_l2_u: col(|r| r.err_l2_u),
            err_p: col(|r| r.err_p),
        })
    }

    /// Slopes over the last three rows.
    pub fn slopes(&self) -> Option<Slopes> {
        self.slopes_over(3)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                format!("{:.12e}", r.meshsize),
                format!("{:.12e}", r.err_u),
                format!("{:.12e}", r.err_l2_u),
                format!("{:.12e}", r.err_p),
                r.iterations.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Solves `case` on each refinement and tabulates the errors.
pub fn convergence_study(
    case: &ExactSolution,
    spec: BasisSpec,
    family: &MeshFamily,
    refinements: &[usize],
    config: &SolverConfig,
) -> Result<ConvergenceTable> {
    if refinements.is_empty() {
        return Err(Error::invalid("empty refinement list"));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(refinements.len());
    for &n in refinements {
        let mesh = family.build(n, case.domain)?;
        let disc = Discretization::new(&mesh, spec)?;
        let solution = solve_navier_stokes(&disc, config, &*case.forcing, &*case.velocity).inspect_err(|e| {
            error!("{} with k = {} on refinement {n}: {e}", case.name, spec.degree);
        })?;
        let row = compute_errors(&disc, &solution, case);
        info!(
            "n = {n}: h = {:.4e}, err_u = {:.4e}, err_l2_u = {:.4e}, err_p = {:.4e}, iters = {}",
            row.meshsize, row.err_u, row.err_l2_u, row.err_p, row.iterations
        );
        if let Some(prev) = rows.last() {
            if row.meshsize >= prev.meshsize {
                return Err(Error::invalid("refinements must produce strictly decreasing meshsizes"));
            }
        }
        rows.push(row);
    }
    Ok(ConvergenceTable {
        degree: spec.degree,
        rows,
    })
}
