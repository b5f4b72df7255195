//! C interface to `hho-core`.
//!
//! Every entry point returns an [`HhoStatus`]. On failure a message is kept
//! per thread and can be read with [`hho_last_error_message`]. Meshes and
//! solutions are opaque handles released with their `_free` functions.
//! Panics never cross the boundary; they are reported as `HHO_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use hho_core::assembly::Discretization;
use hho_core::bench::{compute_errors, kovasznay};
use hho_core::fespace::BasisSpec;
use hho_core::local_ops::ConvectiveForm;
use hho_core::mesh::{BoundingBox, Mesh};
use hho_core::solver::{solve_navier_stokes, solve_stokes, Solution, SolverConfig};
use hho_core::{Error, Point};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HhoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMesh = 3,
    Parse = 4,
    Io = 5,
    Unsupported = 6,
    Singular = 7,
    LinearSolver = 8,
    Diverged = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Convective discretization.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HhoForm {
    Hho = 0,
    Hdg = 1,
}

/// Which problem [`hho_solve`] solves.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HhoProblem {
    Stokes = 0,
    NavierStokes = 1,
}

/// Discretization and solver parameters. Start from
/// [`hho_options_default`] and override fields.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct HhoOptions {
    pub degree: u32,
    pub nu: f64,
    pub tol: f64,
    pub max_iter: u32,
    pub form: HhoForm,
    /// Penalty of the HDG form; ignored for `HHO_FORM_HHO`.
    pub eta: f64,
    pub damping: f64,
    pub max_halvings: u32,
}

/// Summary of a solve.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct HhoReport {
    pub iterations: u32,
    pub converged: bool,
    pub halvings: u32,
    pub final_residual: f64,
    pub velocity_norm: f64,
    pub pressure_norm: f64,
    pub viscous_energy: f64,
    pub forcing_work: f64,
    pub energy_defect: f64,
    pub mass_residual: f64,
    pub multiplier: f64,
}

/// Discrete errors against an exact solution.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct HhoErrors {
    pub meshsize: f64,
    /// Discrete energy norm of `u_h - I_h u`.
    pub err_u: f64,
    /// L2 norm of the element part of `u_h - I_h u`.
    pub err_l2_u: f64,
    /// L2 norm of the zero-mean pressure error against its projection.
    pub err_p: f64,
}

/// Vector field callback: writes the value at `(x, y)` into `out[0..2]`.
/// It may be called concurrently from several threads.
pub type HhoVectorFn = Option<unsafe extern "C" fn(x: f64, y: f64, out: *mut f64, user: *mut c_void)>;

/// Opaque polygonal mesh.
pub struct HhoMesh {
    mesh: Arc<Mesh>,
}

/// Opaque discrete solution.
pub struct HhoSolution {
    mesh: Arc<Mesh>,
    degree: usize,
    solution: Solution,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> HhoStatus {
    match err {
        Error::InvalidArgument(_) => HhoStatus::InvalidArgument,
        Error::InvalidMesh(_) => HhoStatus::InvalidMesh,
        Error::Parse { .. } => HhoStatus::Parse,
        Error::Capability(_) => HhoStatus::Unsupported,
        Error::Singular { .. } => HhoStatus::Singular,
        Error::Solver(_) => HhoStatus::LinearSolver,
        Error::Diverged { .. } => HhoStatus::Diverged,
        Error::Io(_) => HhoStatus::Io,
    }
}

/// Runs `body`, converting errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), (HhoStatus, String)>) -> HhoStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            HhoStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            HhoStatus::Panic
        }
    }
}

fn core<T>(r: hho_core::Result<T>) -> Result<T, (HhoStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (HhoStatus, String) {
    (HhoStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (HhoStatus, String) {
    (HhoStatus::InvalidArgument, msg.into())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (HhoStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), (HhoStatus, String)> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// A C callback with its user pointer. The caller of [`hho_solve`] promises
/// the pair is safe to call from several threads.
struct Callback {
    f: unsafe extern "C" fn(f64, f64, *mut f64, *mut c_void),
    user: *mut c_void,
}

unsafe impl Sync for Callback {}

impl Callback {
    fn eval(&self, p: Point) -> [f64; 2] {
        let mut out = [0.0; 2];
        unsafe { (self.f)(p[0], p[1], out.as_mut_ptr(), self.user) };
        out
    }
}

fn config(options: &HhoOptions) -> Result<SolverConfig, (HhoStatus, String)> {
    let form = match options.form {
        HhoForm::Hho => ConvectiveForm::Hho,
        HhoForm::Hdg => core(ConvectiveForm::hdg(options.eta))?,
    };
    let config = SolverConfig {
        nu: options.nu,
        tol: options.tol,
        max_iter: options.max_iter as usize,
        form,
        damping: options.damping,
        max_halvings: options.max_halvings as usize,
    };
    core(config.validate())?;
    Ok(config)
}

fn bbox(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<BoundingBox, (HhoStatus, String)> {
    if !(x1 > x0 && y1 > y0) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
        return Err(invalid(format!("degenerate box [{x0}, {x1}] x [{y0}, {y1}]")));
    }
    Ok(BoundingBox::new(x0, x1, y0, y1))
}

/// Default options: k = 1, nu = 1, tol = 1e-10, 25 iterations, HHO form.
#[no_mangle]
pub extern "C" fn hho_options_default() -> HhoOptions {
    let c = SolverConfig::default();
    HhoOptions {
        degree: 1,
        nu: c.nu,
        tol: c.tol,
        max_iter: c.max_iter as u32,
        form: HhoForm::Hho,
        eta: 0.0,
        damping: c.damping,
        max_halvings: c.max_halvings as u32,
    }
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `len` bytes, into `buf`. Returns the full message length
/// excluding the terminator, so a call with `len = 0` sizes the buffer.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hho_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Uniform `nx x ny` quadrilateral mesh of `[x0, x1] x [y0, y1]`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn hho_mesh_cartesian(
    nx: u32,
    ny: u32,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    out: *mut *mut HhoMesh,
) -> HhoStatus {
    guard(|| {
        let mesh = core(Mesh::generate_cartesian(nx as usize, ny as usize, bbox(x0, x1, y0, y1)?))?;
        store(out, HhoMesh { mesh: Arc::new(mesh) })
    })
}

/// Uniform mesh of `2 nx ny` triangles of `[x0, x1] x [y0, y1]`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn hho_mesh_triangular(
    nx: u32,
    ny: u32,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    out: *mut *mut HhoMesh,
) -> HhoStatus {
    guard(|| {
        let mesh = core(Mesh::generate_triangular(nx as usize, ny as usize, bbox(x0, x1, y0, y1)?))?;
        store(out, HhoMesh { mesh: Arc::new(mesh) })
    })
}

/// Reads a mesh in the polymesh text format.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn hho_mesh_read(path: *const c_char, out: *mut *mut HhoMesh) -> HhoStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| invalid("path is not UTF-8"))?;
        let mesh = core(Mesh::read_polymesh(path))?;
        store(out, HhoMesh { mesh: Arc::new(mesh) })
    })
}

/// Releases a mesh. Solutions computed on it stay valid. Null is ignored.
///
/// # Safety
/// `mesh` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hho_mesh_free(mesh: *mut HhoMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Writes element, face and boundary-face counts and the mesh size.
/// Any output pointer may be null.
///
/// # Safety
/// `mesh` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn hho_mesh_info(
    mesh: *const HhoMesh,
    num_elements: *mut usize,
    num_faces: *mut usize,
    num_boundary_faces: *mut usize,
    meshsize: *mut f64,
) -> HhoStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.mesh;
        if let Some(o) = num_elements.as_mut() {
            *o = m.num_elements();
        }
        if let Some(o) = num_faces.as_mut() {
            *o = m.num_faces();
        }
        if let Some(o) = num_boundary_faces.as_mut() {
            *o = m.num_boundary_faces();
        }
        if let Some(o) = meshsize.as_mut() {
            *o = m.meshsize();
        }
        Ok(())
    })
}

/// Solves Stokes or Navier-Stokes with forcing `f` and Dirichlet data `g`.
/// A null `g` means homogeneous boundary conditions. When Newton fails to
/// converge `HHO_STATUS_DIVERGED` is returned and no solution is stored.
///
/// # Safety
/// `mesh` and `options` must be valid; callbacks must be thread-safe for
/// the given user pointers; `out` must be a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn hho_solve(
    mesh: *const HhoMesh,
    options: *const HhoOptions,
    problem: HhoProblem,
    f: HhoVectorFn,
    f_user: *mut c_void,
    g: HhoVectorFn,
    g_user: *mut c_void,
    out: *mut *mut HhoSolution,
) -> HhoStatus {
    guard(|| {
        let mesh = deref(mesh, "mesh")?.mesh.clone();
        let options = deref(options, "options")?;
        if out.is_null() {
            return Err(null("output handle"));
        }
        let config = config(options)?;
        let f = Callback { f: f.ok_or_else(|| null("forcing callback"))?, user: f_user };
        let g = g.map(|g| Callback { f: g, user: g_user });
        let ff = |p: Point| f.eval(p);
        let gg = |p: Point| g.as_ref().map_or([0.0, 0.0], |g| g.eval(p));
        let degree = options.degree as usize;
        let disc = core(Discretization::new(&mesh, BasisSpec::new(degree)))?;
        let solution = core(match problem {
            HhoProblem::Stokes => solve_stokes(&disc, &config, &ff, &gg),
            HhoProblem::NavierStokes => solve_navier_stokes(&disc, &config, &ff, &gg),
        })?;
        drop(disc);
        store(out, HhoSolution { mesh, degree, solution })
    })
}

/// Releases a solution. Null is ignored.
///
/// # Safety
/// `solution` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hho_solution_free(solution: *mut HhoSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Fills `report` with the solve summary.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hho_solution_report(solution: *const HhoSolution, report: *mut HhoReport) -> HhoStatus {
    guard(|| {
        let r = &deref(solution, "solution")?.solution.report;
        let out = report.as_mut().ok_or_else(|| null("report"))?;
        *out = HhoReport {
            iterations: r.iterations as u32,
            converged: r.converged,
            halvings: r.halvings as u32,
            final_residual: r.final_residual(),
            velocity_norm: r.velocity_norm,
            pressure_norm: r.pressure_norm,
            viscous_energy: r.viscous_energy,
            forcing_work: r.forcing_work,
            energy_defect: r.energy_defect,
            mass_residual: r.mass_residual,
            multiplier: r.multiplier,
        };
        Ok(())
    })
}

/// Which coefficient block [`hho_solution_copy`] reads.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HhoBlock {
    /// `2 dim P^k` velocity coefficients per element, x block then y block.
    ElementVelocity = 0,
    /// `2 (k + 1)` velocity coefficients per face.
    FaceVelocity = 1,
    /// `dim P^k` pressure coefficients per element.
    Pressure = 2,
    /// Residual history, one entry per linear solve.
    ResidualHistory = 3,
}

/// Copies a coefficient block into `buf` and writes its length to `len`.
/// With a null `buf` only the length is written. Coefficients refer to the
/// local orthonormal bases of the solver.
///
/// # Safety
/// `solution` and `len` must be valid; `buf` must be null or hold `capacity`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hho_solution_copy(
    solution: *const HhoSolution,
    block: HhoBlock,
    buf: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> HhoStatus {
    guard(|| {
        let s = &deref(solution, "solution")?.solution;
        let data: &[f64] = match block {
            HhoBlock::ElementVelocity => &s.velocity.element,
            HhoBlock::FaceVelocity => &s.velocity.face,
            HhoBlock::Pressure => &s.pressure.coefficients,
            HhoBlock::ResidualHistory => &s.report.residual_history,
        };
        *len.as_mut().ok_or_else(|| null("len"))? = data.len();
        if buf.is_null() {
            return Ok(());
        }
        if capacity < data.len() {
            return Err((
                HhoStatus::BufferTooSmall,
                format!("buffer holds {capacity} values, {} needed", data.len()),
            ));
        }
        std::ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
        Ok(())
    })
}

/// Errors of a solution against the Kovasznay flow with viscosity `nu`.
/// The solution should come from the Kovasznay data on `[-0.5, 1.5] x [0, 2]`.
///
/// # Safety
/// `solution` and `errors` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hho_kovasznay_errors(
    solution: *const HhoSolution,
    nu: f64,
    errors: *mut HhoErrors,
) -> HhoStatus {
    guard(|| {
        let s = deref(solution, "solution")?;
        let out = errors.as_mut().ok_or_else(|| null("errors"))?;
        let exact = core(kovasznay(nu))?;
        let disc = core(Discretization::new(&s.mesh, BasisSpec::new(s.degree)))?;
        let row = compute_errors(&disc, &s.solution, &exact);
        *out = HhoErrors {
            meshsize: row.meshsize,
            err_u: row.err_u,
            err_l2_u: row.err_l2_u,
            err_p: row.err_p,
        };
        Ok(())
    })
}

/// Kovasznay velocity, usable as the Dirichlet callback of [`hho_solve`]
/// (the Kovasznay forcing is zero). `user` points to the viscosity.
///
/// # Safety
/// `out` must hold two doubles; `user` must point to a double.
#[no_mangle]
pub unsafe extern "C" fn hho_kovasznay_velocity(x: f64, y: f64, out: *mut f64, user: *mut c_void) {
    let nu = *(user as *const f64);
    let lambda = hho_core::bench::kovasznay_lambda(nu);
    let e = (lambda * x).exp();
    let t = 2.0 * std::f64::consts::PI * y;
    *out = 1.0 - e * t.cos();
    *out.add(1) = lambda / (2.0 * std::f64::consts::PI) * e * t.sin();
}
