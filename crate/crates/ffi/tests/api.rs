use std::ffi::{c_void, CString};
use std::ptr;

use hho_ffi::*;

unsafe extern "C" fn zero(_x: f64, _y: f64, out: *mut f64, _user: *mut c_void) {
    *out = 0.0;
    *out.add(1) = 0.0;
}

unsafe extern "C" fn swirl(x: f64, y: f64, out: *mut f64, user: *mut c_void) {
    let a = *(user as *const f64);
    *out = a * (3.0 * y).sin();
    *out.add(1) = a * (2.0 * x).cos();
}

fn last_error() -> String {
    unsafe {
        let n = hho_last_error_message(ptr::null_mut(), 0);
        let mut buf = vec![0u8; n + 1];
        let m = hho_last_error_message(buf.as_mut_ptr().cast(), buf.len());
        assert_eq!(m, n);
        String::from_utf8(buf[..n].to_vec()).unwrap()
    }
}

fn unit_mesh(n: u32) -> *mut HhoMesh {
    let mut mesh = ptr::null_mut();
    assert_eq!(unsafe { hho_mesh_cartesian(n, n, 0.0, 1.0, 0.0, 1.0, &mut mesh) }, HhoStatus::Ok);
    mesh
}

#[test]
fn mesh_constructors_report_sizes() {
    unsafe {
        let mut tri = ptr::null_mut();
        assert_eq!(hho_mesh_triangular(3, 2, 0.0, 3.0, 0.0, 2.0, &mut tri), HhoStatus::Ok);
        let (mut ne, mut nf, mut nb, mut h) = (0, 0, 0, 0.0);
        assert_eq!(hho_mesh_info(tri, &mut ne, &mut nf, &mut nb, &mut h), HhoStatus::Ok);
        assert_eq!((ne, nb), (12, 10));
        assert_eq!(nf, 3 * 3 + 4 * 2 + 6);
        assert!((h - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(hho_mesh_info(tri, ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut()), HhoStatus::Ok);
        hho_mesh_free(tri);
        hho_mesh_free(ptr::null_mut());
    }
}

#[test]
fn invalid_inputs_map_to_status_codes() {
    unsafe {
        let mut mesh = ptr::null_mut();
        assert_eq!(hho_mesh_cartesian(0, 2, 0.0, 1.0, 0.0, 1.0, &mut mesh), HhoStatus::InvalidArgument);
        assert!(mesh.is_null());
        assert_eq!(hho_mesh_cartesian(2, 2, 1.0, 0.0, 0.0, 1.0, &mut mesh), HhoStatus::InvalidArgument);
        assert!(last_error().contains("degenerate"));
        assert_eq!(hho_mesh_cartesian(2, 2, 0.0, 1.0, 0.0, 1.0, ptr::null_mut()), HhoStatus::NullPointer);
        assert_eq!(hho_mesh_read(ptr::null(), &mut mesh), HhoStatus::NullPointer);
        let missing = CString::new("/nonexistent/mesh.txt").unwrap();
        assert_eq!(hho_mesh_read(missing.as_ptr(), &mut mesh), HhoStatus::Io);

        let mesh = unit_mesh(2);
        let mut sol = ptr::null_mut();
        let mut opts = hho_options_default();
        opts.nu = -1.0;
        let status = hho_solve(mesh, &opts, HhoProblem::Stokes, Some(zero), ptr::null_mut(), None, ptr::null_mut(), &mut sol);
        assert_eq!(status, HhoStatus::InvalidArgument);
        assert!(last_error().contains("viscosity"));
        opts = hho_options_default();
        opts.form = HhoForm::Hdg;
        opts.eta = -0.5;
        let status = hho_solve(mesh, &opts, HhoProblem::Stokes, Some(zero), ptr::null_mut(), None, ptr::null_mut(), &mut sol);
        assert_eq!(status, HhoStatus::InvalidArgument);
        let status = hho_solve(mesh, &hho_options_default(), HhoProblem::Stokes, None, ptr::null_mut(), None, ptr::null_mut(), &mut sol);
        assert_eq!(status, HhoStatus::NullPointer);
        assert!(sol.is_null());
        hho_mesh_free(mesh);
    }
}

#[test]
fn parse_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "3 1\n0 0\n1 0\nnot a vertex\n3 0 1 2\n").unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut mesh = ptr::null_mut();
    assert_eq!(unsafe { hho_mesh_read(c.as_ptr(), &mut mesh) }, HhoStatus::Parse);
    assert!(last_error().contains(":4:"), "{}", last_error());
}

#[test]
fn navier_stokes_solution_satisfies_energy_identity() {
    unsafe {
        let mesh = unit_mesh(4);
        let mut opts = hho_options_default();
        opts.degree = 1;
        let mut amp = 5.0f64;
        let mut sol = ptr::null_mut();
        let status = hho_solve(
            mesh,
            &opts,
            HhoProblem::NavierStokes,
            Some(swirl),
            (&mut amp as *mut f64).cast(),
            None,
            ptr::null_mut(),
            &mut sol,
        );
        assert_eq!(status, HhoStatus::Ok, "{}", last_error());
        hho_mesh_free(mesh);

        let mut report = HhoReport::default();
        assert_eq!(hho_solution_report(sol, &mut report), HhoStatus::Ok);
        assert!(report.converged && report.iterations >= 2);
        assert!(report.final_residual < opts.tol);
        assert!((report.viscous_energy - report.forcing_work).abs() <= 10.0 * opts.tol * report.forcing_work.abs());

        let mut len = 0;
        assert_eq!(hho_solution_copy(sol, HhoBlock::ResidualHistory, ptr::null_mut(), 0, &mut len), HhoStatus::Ok);
        assert_eq!(len, report.iterations as usize);
        for (block, expected) in [
            (HhoBlock::ElementVelocity, 16 * 2 * 3),
            (HhoBlock::FaceVelocity, 40 * 2 * 2),
            (HhoBlock::Pressure, 16 * 3),
        ] {
            assert_eq!(hho_solution_copy(sol, block, ptr::null_mut(), 0, &mut len), HhoStatus::Ok);
            assert_eq!(len, expected);
            let mut buf = vec![f64::NAN; len];
            assert_eq!(hho_solution_copy(sol, block, buf.as_mut_ptr(), len - 1, &mut len), HhoStatus::BufferTooSmall);
            assert_eq!(hho_solution_copy(sol, block, buf.as_mut_ptr(), buf.len(), &mut len), HhoStatus::Ok);
            assert!(buf.iter().all(|v| v.is_finite()));
        }
        hho_solution_free(sol);
        hho_solution_free(ptr::null_mut());
    }
}

#[test]
fn matches_the_rust_api_on_kovasznay() {
    use hho_core::assembly::Discretization;
    use hho_core::bench::{compute_errors, kovasznay};
    use hho_core::fespace::BasisSpec;
    use hho_core::mesh::Mesh;
    use hho_core::solver::{solve_navier_stokes, SolverConfig};

    let mut nu = 1.0f64;
    let exact = kovasznay(nu).unwrap();
    for p in [[-0.5, 0.0], [0.3, 1.7], [1.5, 0.25]] {
        let mut out = [0.0; 2];
        unsafe { hho_kovasznay_velocity(p[0], p[1], out.as_mut_ptr(), (&mut nu as *mut f64).cast()) };
        let u = (exact.velocity)(p);
        assert!((out[0] - u[0]).abs() < 1e-14 && (out[1] - u[1]).abs() < 1e-14);
    }

    let (mut mesh, mut sol) = (ptr::null_mut(), ptr::null_mut());
    let mut opts = hho_options_default();
    opts.degree = 2;
    opts.form = HhoForm::Hdg;
    opts.eta = 0.0;
    let mut errors = HhoErrors::default();
    unsafe {
        assert_eq!(hho_mesh_cartesian(4, 4, -0.5, 1.5, 0.0, 2.0, &mut mesh), HhoStatus::Ok);
        let nu_ptr = (&mut nu as *mut f64).cast();
        let status = hho_solve(mesh, &opts, HhoProblem::NavierStokes, Some(zero), ptr::null_mut(), Some(hho_kovasznay_velocity), nu_ptr, &mut sol);
        assert_eq!(status, HhoStatus::Ok, "{}", last_error());
        assert_eq!(hho_kovasznay_errors(sol, nu, &mut errors), HhoStatus::Ok);
        hho_solution_free(sol);
        hho_mesh_free(mesh);
    }

    let m = Mesh::generate_cartesian(4, 4, exact.domain).unwrap();
    let disc = Discretization::new(&m, BasisSpec::new(2)).unwrap();
    let config = SolverConfig { form: hho_core::local_ops::ConvectiveForm::Hdg { eta: 0.0 }, ..Default::default() };
    let reference = compute_errors(&disc, &solve_navier_stokes(&disc, &config, &*exact.forcing, &*exact.velocity).unwrap(), &exact);
    for (a, b) in [(errors.err_u, reference.err_u), (errors.err_l2_u, reference.err_l2_u), (errors.err_p, reference.err_p)] {
        assert!((a - b).abs() <= 1e-10 * b, "{a} vs {b}");
    }
    assert_eq!(errors.meshsize, reference.meshsize);
}

#[test]
fn divergence_is_reported_without_a_handle() {
    unsafe {
        let mesh = unit_mesh(2);
        let mut opts = hho_options_default();
        opts.tol = 1e-300;
        opts.max_iter = 3;
        let mut amp = 50.0f64;
        let mut sol = ptr::null_mut();
        let status = hho_solve(mesh, &opts, HhoProblem::NavierStokes, Some(swirl), (&mut amp as *mut f64).cast(), None, ptr::null_mut(), &mut sol);
        assert_eq!(status, HhoStatus::Diverged);
        assert!(sol.is_null());
        assert!(last_error().contains("did not converge"));
        hho_mesh_free(mesh);
    }
}
