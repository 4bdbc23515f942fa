//! Command-line laboratory for Hamilton-Jacobi equations on star networks
//! with Kirchhoff junction conditions.
//!
//! Exit codes: 0 success, 2 configuration error (the message names the
//! field), 3 CFL violation (the message quotes the failing inequality),
//! 4 solver failure, 5 fitted order below the configured acceptance
//! threshold in rates / viscosity-sweep mode.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, RunConfig};
use hjnet::analysis::{
    certify_monotone_cauchy, certify_monotone_stationary, junction_residuals, junction_slopes,
    MonotoneCertificate, SlopeOrder,
};
use hjnet::cauchy::{check_cfl_cauchy, march_cauchy, suggest_dt, CauchyParams};
use hjnet::error::Error as CoreError;
use hjnet::lab::{
    refinement_study_cauchy, refinement_study_stationary, viscosity_sweep_cauchy,
    viscosity_sweep_stationary, RateReport,
};
use hjnet::par::Parallelism;
use hjnet::stationary::{solve_stationary, SchemeParams, SolveSeed};

#[derive(Parser)]
#[command(
    name = "hjnet",
    version,
    about = "Monotone finite-difference solvers and convergence studies for Hamilton-Jacobi equations on star networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the stationary Kirchhoff problem and write the solution CSV.
    SolveStationary(CommonArgs),
    /// March the Cauchy problem and write the space-time solution CSV.
    SolveCauchy(CommonArgs),
    /// Grid-refinement rate study (stationary or cauchy).
    Rates(StudyArgs),
    /// Vanishing-viscosity sweep (stationary or cauchy).
    ViscositySweep(StudyArgs),
    /// Solve the stationary problem and verify the reformulated junction
    /// conditions.
    VerifyJunction(CommonArgs),
    /// Empirical monotonicity certification of both schemes.
    CertifyMonotone(CertifyArgs),
    /// Print the full default configuration as TOML.
    PrintConfig,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Path to a TOML configuration file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dx: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out_dir: Option<String>,
    /// Worker threads: 0 = available parallelism, 1 = sequential.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Clone)]
struct StudyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Study kind: stationary | cauchy (overrides study.kind).
    #[arg(long)]
    kind: Option<String>,
    /// Acceptance threshold on the fitted order (overrides study.min_order).
    #[arg(long)]
    min_order: Option<f64>,
}

#[derive(Args, Clone)]
struct CertifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Random fields to test (overrides run.trials).
    #[arg(long)]
    trials: Option<usize>,
    /// Seed of the deterministic generator (overrides run.seed).
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Config(String),
    Cfl(String),
    Solver(String),
    Threshold(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Cfl(_) => 3,
            Failure::Solver(_) => 4,
            Failure::Threshold(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Cfl(m) | Failure::Solver(m) | Failure::Threshold(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::CflViolation { .. } => Failure::Cfl(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Solver(format!("i/o failure: {e}"))
    }
}

impl From<Box<dyn std::error::Error>> for Failure {
    fn from(e: Box<dyn std::error::Error>) -> Self {
        match e.downcast::<CoreError>() {
            Ok(core) => (*core).into(),
            Err(e) => match e.downcast::<ConfigError>() {
                Ok(cfg) => (*cfg).into(),
                Err(e) => Failure::Solver(e.to_string()),
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::PrintConfig => {
            print!("{}", RunConfig::default().emit());
            Ok(())
        }
        Command::SolveStationary(args) => {
            let (cfg, par) = load(&args)?;
            run_solve_stationary(&cfg, par)
        }
        Command::SolveCauchy(args) => {
            let (cfg, par) = load(&args)?;
            run_solve_cauchy(&cfg, par)
        }
        Command::Rates(args) => {
            let (mut cfg, par) = load(&args.common)?;
            if let Some(kind) = &args.kind {
                cfg.study.kind = kind.clone();
            }
            if let Some(th) = args.min_order {
                cfg.study.min_order = th;
            }
            cfg.validate()?;
            run_rates(&cfg, par)
        }
        Command::ViscositySweep(args) => {
            let (mut cfg, par) = load(&args.common)?;
            if let Some(kind) = &args.kind {
                cfg.study.kind = kind.clone();
            }
            if let Some(th) = args.min_order {
                cfg.study.min_order = th;
            }
            cfg.validate()?;
            run_viscosity(&cfg, par)
        }
        Command::VerifyJunction(args) => {
            let (cfg, par) = load(&args)?;
            run_verify_junction(&cfg, par)
        }
        Command::CertifyMonotone(args) => {
            let (mut cfg, par) = load(&args.common)?;
            if let Some(t) = args.trials {
                cfg.run.trials = t;
            }
            if let Some(s) = args.seed {
                cfg.run.seed = s;
            }
            run_certify(&cfg, par)
        }
    }
}

/// Load the config file, apply flag and environment overrides, validate,
/// and set up the worker pool.
fn load(args: &CommonArgs) -> Result<(RunConfig, Parallelism), Failure> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dx) = args.dx {
        cfg.numerics.dx = dx;
    }
    if let Some(eps) = args.eps {
        cfg.numerics.eps = eps;
    }
    if let Some(dt) = args.dt {
        cfg.numerics.dt = dt;
    }
    if let Some(dir) = &args.out_dir {
        cfg.output.dir = dir.clone();
    }
    let workers = args
        .workers
        .or_else(|| {
            std::env::var("HJNET_WORKERS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(cfg.run.workers);
    cfg.run.workers = workers;
    cfg.validate()?;

    let par = if workers == 1 {
        Parallelism::Sequential
    } else {
        if workers >= 2 {
            // a second build_global is an error only if a pool exists; fine
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build_global();
        }
        Parallelism::Threaded
    };
    Ok((cfg, par))
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    PathBuf::from(&cfg.output.dir).join(name)
}

fn stationary_params(
    cfg: &RunConfig,
    consts: &hjnet::hamiltonian::SchemeConstants,
) -> SchemeParams {
    let dx = cfg.numerics.dx;
    let eps = if cfg.numerics.eps > 0.0 {
        cfg.numerics.eps
    } else {
        2.0 * consts.l1 * dx
    };
    let mut params = SchemeParams::new(dx, eps, consts).with_max_sweeps(cfg.numerics.max_sweeps);
    if cfg.numerics.tol_solve > 0.0 {
        params = params.with_tolerance(cfg.numerics.tol_solve);
    }
    params
}

fn cauchy_params(cfg: &RunConfig, consts: &hjnet::hamiltonian::SchemeConstants) -> CauchyParams {
    let dx = cfg.numerics.dx;
    let eps = if cfg.numerics.eps > 0.0 {
        cfg.numerics.eps
    } else {
        2.0 * consts.l1 * dx
    };
    let dt = if cfg.numerics.dt > 0.0 {
        cfg.numerics.dt
    } else {
        suggest_dt(dx, eps, consts.l1)
    };
    CauchyParams { dx, dt, eps }
}

fn run_solve_stationary(cfg: &RunConfig, _par: Parallelism) -> Result<(), Failure> {
    let prob = cfg.stationary_problem()?;
    let params = stationary_params(cfg, &prob.consts);
    let (u, stats) = solve_stationary(&prob, &params, SolveSeed::Lower)?;

    let grid = *u.grid();
    let mut csv = String::from("edge,m,x,value\n");
    csv.push_str(&format!("0,0,0,{}\n", u.junction()));
    for i in 0..grid.edges() {
        for m in 1..=grid.nodes_per_edge() {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                i + 1,
                m,
                grid.x(m),
                u.value(i, m)
            ));
        }
    }
    let path = out_path(cfg, &cfg.output.solution);
    output::write_atomic(&path, &csv)?;
    println!(
        "solved stationary problem: {} nodes, {} sweeps, final update {:e}, monotone {}",
        grid.node_count(),
        stats.sweeps,
        stats.final_update,
        stats.monotone
    );
    println!("solution written to {}", path.display());
    Ok(())
}

fn run_solve_cauchy(cfg: &RunConfig, par: Parallelism) -> Result<(), Failure> {
    let prob = cfg.cauchy_problem()?;
    let params = cauchy_params(cfg, &prob.consts);
    check_cfl_cauchy(&params, &prob.consts)?;

    let stride = cfg.output.time_stride.max(1);
    let path = out_path(cfg, &cfg.output.solution);
    let mut steps = 0usize;
    let mut march_err: Option<CoreError> = None;
    output::write_atomic_streaming(&path, |w| {
        writeln!(w, "edge,m,x,s,t,value")?;
        let mut io_err = None;
        match march_cauchy(&prob, &params, par, |s, t, level| {
            if io_err.is_some() || s % stride != 0 {
                return;
            }
            let grid = level.grid();
            let mut emit = || -> std::io::Result<()> {
                writeln!(w, "0,0,0,{s},{t},{}", level.junction())?;
                for i in 0..grid.edges() {
                    for m in 1..=grid.nodes_per_edge() {
                        writeln!(
                            w,
                            "{},{},{},{s},{t},{}",
                            i + 1,
                            m,
                            grid.x(m),
                            level.value(i, m)
                        )?;
                    }
                }
                Ok(())
            };
            if let Err(e) = emit() {
                io_err = Some(e);
            }
        }) {
            Ok(n) => steps = n,
            Err(e) => {
                march_err = Some(e);
                return Err(std::io::Error::other("march failed"));
            }
        }
        if let Some(e) = io_err {
            return Err(e);
        }
        Ok(())
    })
    .map_err(|ioe| match march_err.take() {
        Some(core) => Failure::from(core),
        None => Failure::from(ioe),
    })?;
    println!("marched {steps} steps to t = {}", prob.horizon);
    println!("solution written to {}", path.display());
    Ok(())
}

fn write_report(
    cfg: &RunConfig,
    report: &RateReport,
    threshold: Option<f64>,
) -> Result<(), Failure> {
    let rates_path = out_path(cfg, &cfg.output.rates);
    output::write_atomic(&rates_path, &report.to_csv())?;
    let summary_path = out_path(cfg, &cfg.output.summary);
    output::write_atomic(&summary_path, &report.summary_csv(threshold))?;
    match &report.fit {
        Some(f) => println!(
            "fitted order {:.4} (intercept {:.4}, r² {:.4})",
            f.order, f.intercept, f.r_squared
        ),
        None => println!("errors at machine precision; no fit"),
    }
    if let Some(cf) = &report.cross_fit {
        println!("order against manufactured exact: {:.4}", cf.order);
    }
    println!(
        "report written to {} and {}",
        rates_path.display(),
        summary_path.display()
    );
    if let Some(th) = threshold {
        if !report.passes(th) {
            return Err(Failure::Threshold(format!(
                "fitted order {:?} below the acceptance threshold {th}",
                report.fit.as_ref().map(|f| f.order)
            )));
        }
        println!("acceptance threshold {th}: pass");
    }
    Ok(())
}

fn threshold_of(cfg: &RunConfig) -> Option<f64> {
    (cfg.study.min_order > 0.0).then_some(cfg.study.min_order)
}

fn require_manufactured(cfg: &RunConfig) -> Result<(), Failure> {
    if !cfg.is_manufactured() {
        return Err(Failure::Config(
            "config field `problem.source`: rate studies compare against the manufactured \
             reference and need source = \"manufactured\""
                .into(),
        ));
    }
    Ok(())
}

fn run_rates(cfg: &RunConfig, par: Parallelism) -> Result<(), Failure> {
    require_manufactured(cfg)?;
    let report = match cfg.study.kind.as_str() {
        "stationary" => {
            let m = cfg.manufactured_stationary()?;
            refinement_study_stationary(&m, &cfg.study.dx_list, cfg.study.node_budget, par)?
        }
        _ => {
            let m = cfg.manufactured_cauchy()?;
            refinement_study_cauchy(
                &m,
                &cfg.study.dx_list,
                cfg.study.ref_divisor,
                cfg.study.node_budget,
                par,
            )?
        }
    };
    write_report(cfg, &report, threshold_of(cfg))
}

fn run_viscosity(cfg: &RunConfig, par: Parallelism) -> Result<(), Failure> {
    require_manufactured(cfg)?;
    let rule = cfg.dx_rule();
    let report = match cfg.study.kind.as_str() {
        "stationary" => {
            let m = cfg.manufactured_stationary()?;
            viscosity_sweep_stationary(&m, &cfg.study.eps_list, rule, cfg.study.node_budget, par)?
        }
        _ => {
            let m = cfg.manufactured_cauchy()?;
            viscosity_sweep_cauchy(&m, &cfg.study.eps_list, rule, cfg.study.node_budget, par)?
        }
    };
    write_report(cfg, &report, threshold_of(cfg))
}

fn run_verify_junction(cfg: &RunConfig, _par: Parallelism) -> Result<(), Failure> {
    let prob = cfg.stationary_problem()?;
    let params = stationary_params(cfg, &prob.consts);
    let (u, _) = solve_stationary(&prob, &params, SolveSeed::Lower)?;
    let order = if cfg.numerics.slope_order == 1 {
        SlopeOrder::One
    } else {
        SlopeOrder::Two
    };
    let state = junction_slopes(&u, order);
    let res = junction_residuals(&state, &prob.spec, None, cfg.numerics.theta_points);

    let mut csv = String::from(
        "u0,flux,sub_residual,sub_edge,sub_theta,super_residual,super_edge,super_theta\n",
    );
    csv.push_str(&format!(
        "{},{},{},{},{},{},{},{}\n",
        state.u0,
        state.flux,
        res.sub.value,
        res.sub.edge + 1,
        res.sub.theta,
        res.sup.value,
        res.sup.edge + 1,
        res.sup.theta
    ));
    let path = out_path(cfg, &cfg.output.junction);
    output::write_atomic(&path, &csv)?;
    println!(
        "junction state: u(0) = {:.6}, flux = {:.3e}",
        state.u0, state.flux
    );
    println!(
        "sub residual {:.6e} (edge {}, θ = {:.3}); super residual {:.6e} (edge {}, θ = {:.3})",
        res.sub.value,
        res.sub.edge + 1,
        res.sub.theta,
        res.sup.value,
        res.sup.edge + 1,
        res.sup.theta
    );
    println!("report written to {}", path.display());
    Ok(())
}

fn certificate_row(kind: &str, cert: &MonotoneCertificate) -> String {
    match cert {
        MonotoneCertificate::Pass { checks } => {
            format!("{kind},pass,{checks},,,,,,\n")
        }
        MonotoneCertificate::Counterexample(ce) => format!(
            "{kind},counterexample,,{},{},{},{},{},{}\n",
            ce.perturbed_node.0 + 1,
            ce.perturbed_node.1,
            ce.output_node.0 + 1,
            ce.output_node.1,
            ce.delta,
            ce.decrease
        ),
    }
}

fn run_certify(cfg: &RunConfig, _par: Parallelism) -> Result<(), Failure> {
    let cprob = cfg.cauchy_problem()?;
    let cparams = cauchy_params(cfg, &cprob.consts);
    let cauchy_cert =
        certify_monotone_cauchy(&cprob, &cparams, cfg.run.trials, 1e-3, cfg.run.seed)?;

    let sprob = cfg.stationary_problem()?;
    let sparams = stationary_params(cfg, &sprob.consts);
    let stationary_cert =
        certify_monotone_stationary(&sprob, &sparams, cfg.run.trials, cfg.run.seed)?;

    let mut csv = String::from(
        "kind,status,checks,perturbed_edge,perturbed_node,output_edge,output_node,delta,decrease\n",
    );
    csv.push_str(&certificate_row("cauchy", &cauchy_cert));
    csv.push_str(&certificate_row("stationary", &stationary_cert));
    let path = out_path(cfg, &cfg.output.certificate);
    output::write_atomic(&path, &csv)?;

    for (kind, cert) in [("cauchy", &cauchy_cert), ("stationary", &stationary_cert)] {
        match cert {
            MonotoneCertificate::Pass { checks } => {
                println!("{kind}: monotone over {checks} checks")
            }
            MonotoneCertificate::Counterexample(ce) => println!(
                "{kind}: counterexample — bumping node ({}, {}) by {} decreased node ({}, {}) by {:.3e}",
                ce.perturbed_node.0 + 1,
                ce.perturbed_node.1,
                ce.delta,
                ce.output_node.0 + 1,
                ce.output_node.1,
                ce.decrease
            ),
        }
    }
    println!("certificate written to {}", path.display());
    Ok(())
}
