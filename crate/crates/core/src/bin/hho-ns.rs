//! Command-line driver for convergence studies.
//!
//! Exit codes: 0 on success, 2 when a solve fails, 3 on invalid input.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hho_core::bench::{convergence_study, kovasznay, MeshFamily};
use hho_core::fespace::BasisSpec;
use hho_core::local_ops::ConvectiveForm;
use hho_core::solver::SolverConfig;
use hho_core::Error;

#[derive(Parser, Debug)]
#[command(name = "hho-ns", version, about = "HHO solver for the steady incompressible Navier-Stokes equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a convergence study and write the error table as CSV.
    Run(RunArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Case {
    Kovasznay,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Form {
    Hho,
    Hdg,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "kovasznay")]
    case: Case,
    /// Kinematic viscosity.
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    /// Polynomial degree k of the element and face unknowns.
    #[arg(long, default_value_t = 2)]
    degree: usize,
    /// cartesian, triangular or file:PATH (a `{}` in PATH takes the refinement number).
    #[arg(long, default_value = "cartesian")]
    mesh: String,
    /// Comma-separated refinement numbers.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
    refine: Vec<usize>,
    #[arg(long, value_enum, default_value = "hho")]
    form: Form,
    /// Penalty parameter of the HDG form.
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    /// Relative tolerance of the Newton iteration.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Diverged { .. } | Error::Solver(_) | Error::Singular { .. } => 2,
        _ => 3,
    }
}

fn run(args: RunArgs) -> Result<(), Error> {
    let case = match args.case {
        Case::Kovasznay => kovasznay(args.nu)?,
    };
    let family: MeshFamily = args.mesh.parse()?;
    if args.refine.contains(&0) {
        return Err(Error::InvalidArgument("refinement numbers must be positive".into()));
    }
    let form = match args.form {
        Form::Hho => ConvectiveForm::Hho,
        Form::Hdg => ConvectiveForm::hdg(args.eta)?,
    };
    let config = SolverConfig {
        nu: args.nu,
        tol: args.tol,
        form,
        ..Default::default()
    };
    config.validate()?;
    let table = convergence_study(&case, BasisSpec::new(args.degree), &family, &args.refine, &config)?;

    println!("{:>12} {:>12} {:>12} {:>12} {:>6}", "meshsize", "err_u", "err_l2_u", "err_p", "iters");
    for r in &table.rows {
        println!(
            "{:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>6}",
            r.meshsize, r.err_u, r.err_l2_u, r.err_p, r.iterations
        );
    }
    if let Some(s) = table.slopes() {
        println!(
            "slopes (last {} rows): err_u {:.3}, err_l2_u {:.3}, err_p {:.3}",
            table.rows.len().min(3),
            s.err_u,
            s.err_l2_u,
            s.err_p
        );
    }
    if let Some(out) = &args.out {
        table.save_csv(out)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run(args) => match run(args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_code(&e))
            }
        },
    }
}
