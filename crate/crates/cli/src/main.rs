use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hfgt_lca::equivalence::{
    decompose_conversion_transportation, transportation_dominance, verify_equivalence,
    DEFAULT_DOMINANCE_THRESHOLD,
};
use hfgt_lca::esn::Nonnegativity;
use hfgt_lca::ingest::{
    parse_demand, parse_firing, parse_model, parse_problem, parse_scenario, FiringMode,
};
use hfgt_lca::lca::{solve_lca, LcaProblem, SolveOptions};
use hfgt_lca::report::{
    emit_report, DecompositionOutput, Format, LcaReport, MatrixExport, Report, TrajectoryReport,
};
use hfgt_lca::scenario::{bind_demand, bind_firing, bind_scenario, run_scenario};
use hfgt_lca::{Analysis, Error};

#[derive(Parser)]
#[command(name = "hfgt-lca", version, about = "Life-cycle inventory and engineering system nets")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, env = "HFGT_LCA_FORMAT", default_value = "json")]
    format: Format,

    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scaling vector and aspects for a demand.
    Solve {
        #[arg(long, required_unless_present = "problem", requires = "demand")]
        model: Option<PathBuf>,
        #[arg(long)]
        demand: Option<PathBuf>,
        /// Flat A/B/Y problem (JSON or long-form CSV).
        #[arg(long, conflicts_with_all = ["model", "demand"])]
        problem: Option<PathBuf>,
    },
    /// Runs a scenario on the model's net.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, visible_alias = "schedule")]
        scenario: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        horizon: Option<u64>,
        #[arg(long, value_parser = positive)]
        dt: Option<f64>,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        enforce_nonnegative: bool,
    },
    /// Checks that the net reproduces the classical inventory.
    VerifyEquivalence {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        demand: PathBuf,
    },
    /// Splits M·U into conversion and transportation contributions.
    Decompose {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        firing: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DOMINANCE_THRESHOLD, value_parser = positive)]
        threshold: f64,
    },
    /// Graphviz description of the net, or its incidence matrix.
    ExportNet {
        #[arg(long)]
        model: PathBuf,
        /// Emit the incidence matrix in --format instead of DOT.
        #[arg(long)]
        matrix: Option<MatrixKind>,
        /// Include places no capability touches.
        #[arg(long)]
        all_places: bool,
    },
    /// Checks input files without running anything.
    Validate(ValidateArgs),
}

#[derive(Args)]
#[group(required = true, multiple = true)]
struct ValidateArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, requires = "model")]
    scenario: Option<PathBuf>,
    #[arg(long, requires = "model")]
    demand: Option<PathBuf>,
    #[arg(long, requires = "model")]
    firing: Option<PathBuf>,
    #[arg(long, conflicts_with = "model")]
    problem: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Instantaneous,
    Duration,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixKind {
    Full,
    Reduced,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("{v} must be positive and finite")),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Serialize)]
struct Validation {
    valid: bool,
    checked: Vec<Checked>,
}

#[derive(Serialize)]
struct Checked {
    file: String,
    kind: &'static str,
    summary: String,
}

impl Report for Validation {
    fn csv_records(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let rows = self
            .checked
            .iter()
            .map(|c| vec![c.file.clone(), c.kind.to_string(), c.summary.clone()])
            .collect();
        (vec!["file", "kind", "summary"], rows)
    }

    fn table(&self) -> String {
        self.checked
            .iter()
            .map(|c| format!("ok  {:<9} {}  ({})\n", c.kind, c.file, c.summary))
            .collect()
    }
}

fn checked(path: &Path, kind: &'static str, summary: String) -> Checked {
    Checked {
        file: path.display().to_string(),
        kind,
        summary,
    }
}

fn analysis(path: &Path) -> Result<Analysis, Error> {
    Analysis::new(&parse_model(path)?)
}

fn emit(report: &impl Report, cli: &Cli) -> Result<(), Error> {
    emit_report(report, cli.format, cli.out.as_deref()).map_err(|source| Error::Io {
        path: cli.out.as_ref().map_or("<stdout>".into(), |p| p.display().to_string()),
        source,
    })
}

fn write_text(text: &str, out: Option<&Path>) -> Result<(), Error> {
    use std::io::Write;
    let result = match out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    result.map_err(|source| Error::Io {
        path: out.map_or("<stdout>".into(), |p| p.display().to_string()),
        source,
    })
}

fn solve(model: Option<&Path>, demand: Option<&Path>, problem: Option<&Path>) -> Result<LcaReport, Error> {
    let problem: LcaProblem<f64> = match (model, demand, problem) {
        (_, _, Some(p)) => LcaProblem::from_file(&parse_problem(p)?)?,
        (Some(m), Some(d), None) => {
            let a = analysis(m)?;
            let products = a.product_assignment()?;
            let y = bind_demand(&a.model, &products, &parse_demand(d)?)?;
            a.lca_problem()?.with_demand(y)?
        }
        _ => unreachable!("clap enforces --model with --demand, or --problem"),
    };
    let result = solve_lca(&problem, SolveOptions::default())?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    Ok(LcaReport::new(&problem, &result))
}

fn validate(args: &ValidateArgs) -> Result<Validation, Error> {
    let mut out = Vec::new();
    if let Some(p) = &args.problem {
        let problem: LcaProblem<f64> = LcaProblem::from_file(&parse_problem(p)?)?;
        out.push(checked(
            p,
            "problem",
            format!(
                "{} processes, {} aspects",
                problem.process_labels.len(),
                problem.aspect_labels.len()
            ),
        ));
    }
    if let Some(m) = &args.model {
        let a = analysis(m)?;
        out.push(checked(
            m,
            "model",
            format!(
                "{} operands, {} processes, {} resources, {} capabilities, {} places",
                a.model.operands.len(),
                a.model.processes.len(),
                a.model.resources.len(),
                a.capabilities.len(),
                a.net.n_places()
            ),
        ));
        if let Some(s) = &args.scenario {
            let bound = bind_scenario(&a.model, &a.capabilities, &a.net, &parse_scenario(s)?)?;
            out.push(checked(s, "scenario", format!("K = {}, dt = {}, {}", bound.horizon, bound.dt, bound.mode)));
        }
        if let Some(d) = &args.demand {
            let products = a.product_assignment()?;
            let y = bind_demand(&a.model, &products, &parse_demand(d)?)?;
            let nonzero = y.iter().filter(|v| **v != 0.0).count();
            out.push(checked(d, "demand", format!("{nonzero} nonzero entries")));
        }
        if let Some(f) = &args.firing {
            let u = bind_firing(&a.capabilities, &parse_firing(f)?)?;
            let nonzero = u.iter().filter(|v| **v != 0.0).count();
            out.push(checked(f, "firing", format!("{nonzero} capabilities fired")));
        }
    }
    Ok(Validation {
        valid: true,
        checked: out,
    })
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Solve {
            model,
            demand,
            problem,
        } => emit(&solve(model.as_deref(), demand.as_deref(), problem.as_deref())?, cli),
        Command::Simulate {
            model,
            scenario,
            horizon,
            dt,
            mode,
            enforce_nonnegative,
        } => {
            let a = analysis(model)?;
            let mut file = parse_scenario(scenario)?;
            if let Some(k) = horizon {
                file.horizon = *k as usize;
            }
            if let Some(dt) = dt {
                file.dt = *dt;
            }
            if let Some(mode) = mode {
                file.mode = match mode {
                    Mode::Instantaneous => FiringMode::Instantaneous,
                    Mode::Duration => FiringMode::Duration,
                };
            }
            let mut bound = bind_scenario(&a.model, &a.capabilities, &a.net, &file)?;
            if *enforce_nonnegative {
                bound.options.nonnegativity = Nonnegativity::Enforce;
            }
            let result = run_scenario(&a.net, &bound)?;
            for w in &result.trajectory.warnings {
                eprintln!("warning: k={}: {} is negative ({})", w.k, w.place, w.value);
            }
            emit(&TrajectoryReport::new(&a.net, &result.trajectory, &result.in_flight), cli)
        }
        Command::VerifyEquivalence { model, demand } => {
            let a = analysis(model)?;
            let products = a.product_assignment()?;
            let y = bind_demand(&a.model, &products, &parse_demand(demand)?)?;
            let report = verify_equivalence(&a.model, &a.capabilities, &a.incidence, &products, &a.model.aspects, &y)?;
            emit(&report, cli)
        }
        Command::Decompose {
            model,
            firing,
            threshold,
        } => {
            let a = analysis(model)?;
            let u = bind_firing(&a.capabilities, &parse_firing(firing)?)?;
            let decomposition = decompose_conversion_transportation(&a.model, &a.capabilities, &a.incidence, &u);
            for w in &decomposition.warnings {
                eprintln!("warning: {w}");
            }
            let dominance = transportation_dominance(&decomposition, *threshold);
            emit(
                &DecompositionOutput {
                    decomposition,
                    threshold: *threshold,
                    dominance,
                },
                cli,
            )
        }
        Command::ExportNet {
            model,
            matrix,
            all_places,
        } => {
            let a = analysis(model)?;
            match matrix {
                None => write_text(&a.net.to_dot(!all_places), cli.out.as_deref()),
                Some(MatrixKind::Full) => emit(&MatrixExport::incidence(&a.incidence), cli),
                Some(MatrixKind::Reduced) => emit(&MatrixExport::reduced_incidence(&a.incidence), cli),
            }
        }
        Command::Validate(args) => emit(&validate(args)?, cli),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(hfgt_lca::EXIT_VALIDATION as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
