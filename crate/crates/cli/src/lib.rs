//! Command-line front end: run pipeline files, recompute the reference
//! figures, search for detector designs and print states.

pub mod document;
pub mod report;
pub mod reproduce;

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fockport_core::design::{design, verify_design, DesignProblem, DesignReport};
use fockport_core::teleport::RunOptions;

use document::{InputDoc, Overrides, PipelineDocument};
use report::{Format, RunReport};

#[derive(Debug, Parser)]
#[command(name = "fockport", version, about = "Photon-number manipulation by teleportation")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct GlobalArgs {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value = "table")]
    pub format: Format,
    /// Seed for randomized searches and checks.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Tail truncation of squeezed resources.
    #[arg(long = "tail-eps", global = true)]
    pub tail_eps: Option<f64>,
    /// Allowed gap between simulated and closed-form probabilities.
    #[arg(long = "tol", global = true)]
    pub tol: Option<f64>,
    /// `ideal`, `reference`, `optical`, or a detector design file.
    #[arg(long, global = true)]
    pub detector: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a pipeline document.
    Run {
        file: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Recompute the reference figures; exits 1 if any row fails.
    VerifyPaper,
    /// Search for a detector network.
    Design(DesignArgs),
    /// State utilities.
    #[command(subcommand)]
    State(StateCommand),
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Problem document.
    pub file: PathBuf,
    /// Ancilla counts to sweep, as `k` or `lo..hi` (inclusive).
    #[arg(long)]
    pub ancillas: Option<String>,
    /// Output file, or a directory when sweeping.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Also write the detector document of a single feasible design.
    #[arg(long)]
    pub emit_detector: Option<PathBuf>,
    /// Random inputs used to check each feasible design.
    #[arg(long, default_value_t = 50)]
    pub verify_trials: usize,
}

#[derive(Debug, Subcommand)]
pub enum StateCommand {
    /// Print a state in canonical text form.
    Print(StatePrintArgs),
}

#[derive(Debug, Args)]
pub struct StatePrintArgs {
    /// Pipeline document whose input is printed.
    pub file: Option<PathBuf>,
    /// Print the pipeline's output instead of its input.
    #[arg(long, requires = "file")]
    pub run: bool,
    /// `vacuum`, `squeezed_vacuum`, `photon_subtracted` or `number_phase_bell`.
    #[arg(long, conflicts_with = "file")]
    pub resource: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<i64>,
    /// Comma-separated real amplitudes.
    #[arg(long, conflicts_with_all = ["file", "resource"], value_delimiter = ',', allow_hyphen_values = true)]
    pub amplitudes: Option<Vec<f64>>,
}

/// Failure classes, mapped to exit codes by the binary.
#[derive(Debug)]
pub enum Outcome {
    Success,
    /// Exit 1: a check failed or a design is infeasible.
    Failed,
}

/// Error whose exit code is 2 (bad input) rather than 1.
#[derive(Debug)]
pub struct UsageError(pub anyhow::Error);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| UsageError(e).into())
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            tail_epsilon: self.tail_eps,
            tolerance: self.tol,
            detector: self.detector.clone(),
            seed: self.seed,
        }
    }

    fn run_options(&self) -> Result<RunOptions<f64>> {
        let d = RunOptions::<f64>::default();
        let opts = RunOptions {
            tail_epsilon: self.tail_eps.unwrap_or(d.tail_epsilon),
            tolerance: self.tol.unwrap_or(d.tolerance),
        };
        for (name, x) in [("--tail-eps", opts.tail_epsilon), ("--tol", opts.tolerance)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(UsageError(anyhow!("{name} = {x} must be positive")).into());
            }
        }
        Ok(opts)
    }
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<Outcome> {
    match &cli.command {
        Command::Run { file, out } => cmd_run(&cli.global, file, out.as_deref(), stdout),
        Command::VerifyPaper => cmd_verify(&cli.global, stdout),
        Command::Design(args) => cmd_design(&cli.global, args, stdout, stderr),
        Command::State(StateCommand::Print(args)) => cmd_state_print(&cli.global, args, stdout),
    }
}

pub fn cmd_run(global: &GlobalArgs, file: &Path, out: Option<&Path>, stdout: &mut dyn Write) -> Result<Outcome> {
    let doc = usage(PipelineDocument::load(file))?;
    let job = usage(doc.resolve(&global.overrides(), file.parent()))?;
    let result = job.pipeline.run(&job.input, &job.model, &job.options)?;
    let report = RunReport::from_result(&result);
    emit(&report.render(global.format)?, out, stdout)?;
    Ok(Outcome::Success)
}

pub fn cmd_verify(global: &GlobalArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let opts = global.run_options()?;
    let model = usage(document::load_model(global.detector.as_deref().unwrap_or("reference"), None))?;
    let report = RunReport::from_comparisons(reproduce::rows(&model, &opts)?);
    stdout.write_all(report.render(global.format)?.as_bytes())?;
    Ok(if report.all_pass() { Outcome::Success } else { Outcome::Failed })
}

/// `k` or `lo..hi`, inclusive.
pub fn parse_range(s: &str) -> Result<Vec<usize>> {
    let parse = |t: &str| t.trim().parse::<usize>().with_context(|| format!("ancillas: `{t}` is not a count"));
    match s.split_once("..") {
        Some((lo, hi)) => {
            let (lo, hi) = (parse(lo)?, parse(hi.trim_start_matches('='))?);
            if lo > hi {
                bail!("ancillas: empty range {s}");
            }
            Ok((lo..=hi).collect())
        }
        None => Ok(vec![parse(s)?]),
    }
}

fn render_design(report: &DesignReport, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        Format::Table => Ok(report.to_toml()),
        Format::Csv => bail!("design reports are written as TOML or JSON"),
    }
}

pub fn cmd_design(
    global: &GlobalArgs,
    args: &DesignArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<Outcome> {
    let text = usage(std::fs::read_to_string(&args.file).with_context(|| format!("reading {}", args.file.display())))?;
    let base = usage(DesignProblem::from_toml(&text).with_context(|| format!("parsing {}", args.file.display())))?;
    let counts = match &args.ancillas {
        Some(s) => usage(parse_range(s))?,
        None => vec![base.ancillas],
    };
    if global.format == Format::Csv {
        return Err(UsageError(anyhow!("design reports are written as TOML or JSON")).into());
    }
    let sweep = counts.len() > 1;
    if sweep && args.emit_detector.is_some() {
        return Err(UsageError(anyhow!("--emit-detector needs a single ancilla count")).into());
    }
    let mut all_feasible = true;
    for ancillas in counts {
        let mut problem = base.clone();
        problem.ancillas = ancillas;
        if args.ancillas.is_some() {
            // a sweep keeps the default accept pattern for each port count
            problem.accept = DesignProblem::new(base.n_tilde, ancillas).map_err(|e| UsageError(e.into()))?.accept;
        }
        if let Some(seed) = global.seed {
            problem.optimizer.seed = seed;
        }
        usage(problem.validate().map_err(Into::into))?;
        let report = design(&problem);
        let mut summary = format!(
            "N~={} ancillas={}: {} |g0|^2={:.6} cross-talk={:.2e}",
            report.n_tilde,
            ancillas,
            if report.feasible { "feasible" } else { "infeasible" },
            report.success_probability,
            report.max_cross_talk
        );
        if report.feasible {
            let v = verify_design(&report.to_detector()?, args.verify_trials, problem.optimizer.seed)?;
            summary.push_str(&format!(" verify max deviation={:.2e}", v.max_deviation));
            if let Some(p) = &args.emit_detector {
                std::fs::write(p, report.to_detector()?.to_toml()).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        writeln!(stderr, "{summary}")?;
        all_feasible &= report.feasible;

        let body = render_design(&report, global.format)?;
        match (&args.out, sweep) {
            (Some(dir), true) => {
                std::fs::create_dir_all(dir)?;
                let ext = if global.format == Format::Json { "json" } else { "toml" };
                let p = dir.join(format!("design_n{}_a{}.{ext}", report.n_tilde, ancillas));
                std::fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
            }
            (Some(p), false) => std::fs::write(p, body).with_context(|| format!("writing {}", p.display()))?,
            (None, _) => {
                if sweep {
                    writeln!(stdout, "# ancillas = {ancillas}")?;
                }
                stdout.write_all(body.as_bytes())?;
            }
        }
    }
    Ok(if all_feasible { Outcome::Success } else { Outcome::Failed })
}

pub fn cmd_state_print(global: &GlobalArgs, args: &StatePrintArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let state = match &args.file {
        Some(file) => {
            let doc = usage(PipelineDocument::load(file))?;
            if args.run {
                let job = usage(doc.resolve(&global.overrides(), file.parent()))?;
                job.pipeline.run(&job.input, &job.model, &job.options)?.output
            } else {
                usage(doc.input.build())?
            }
        }
        None => {
            let input = InputDoc {
                amplitudes: args
                    .amplitudes
                    .as_ref()
                    .map(|a| a.iter().map(|&x| document::Amplitude::Real(x)).collect()),
                resource: args.resource.clone(),
                lambda: args.lambda,
                n: args.n,
                m: args.m,
                basis: None,
            };
            usage(input.build())?
        }
    };
    match global.format {
        Format::Table => stdout.write_all(state.to_text().as_bytes())?,
        Format::Json => stdout.write_all((serde_json::to_string_pretty(&report::terms(&state))? + "\n").as_bytes())?,
        Format::Csv => {
            let report = RunReport {
                output: report::terms(&state),
                ..Default::default()
            };
            stdout.write_all(report.to_csv()?.as_bytes())?;
        }
    }
    Ok(Outcome::Success)
}
