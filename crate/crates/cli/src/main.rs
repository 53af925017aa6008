//! `tumorch`: run simulations, check model assumptions and drive experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tumorch::diagnostics::{attractor_probe, continuous_dependence_experiment, refinement_study};
use tumorch::io::{
    ensure_dir, load_config, simulate, write_json, write_outputs, write_text, RunConfig,
};
use tumorch::potentials::{validate_f, verify_lemma_bounds, YosidaPotential};
use tumorch::proliferation::validate_p;
use tumorch::{AssumptionReport, Error};

#[derive(Parser, Debug)]
#[command(
    name = "tumorch",
    version,
    about = "Spectral solver for a Cahn-Hilliard tumor growth model"
)]
struct Cli {
    /// JSON configuration; built-in defaults are used when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Seed for the initial data and the attractor ensemble.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,

    /// Suppress progress output on stdout.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Integrate the configured problem and write diagnostics and snapshots.
    Run,
    /// Check the growth assumptions of the split potential.
    VerifyPotential,
    /// Check the bounds of the Yosida-regularized potential for each `verify.yosida_m`.
    VerifyYosida,
    /// Check the proliferation law.
    VerifyP,
    /// Time and space refinement study.
    Convergence,
    /// Continuous dependence on the initial data.
    Compare,
    /// Absorbing-set probe over a seeded ensemble.
    Attractor,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::VerifyPotential => "verify-potential",
            Command::VerifyYosida => "verify-yosida",
            Command::VerifyP => "verify-p",
            Command::Convergence => "convergence",
            Command::Compare => "compare",
            Command::Attractor => "attractor",
        }
    }
}

enum Failure {
    Validation(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_solver_failure() {
            Failure::Solver(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    quiet: bool,
}

impl Ctx {
    fn say(&self, text: &str) {
        if !self.quiet {
            println!("{}", text.trim_end());
        }
    }

    fn write(&self, name: &str, text: &str) -> Result<(), Error> {
        write_text(&self.out.join(name), text)
    }
}

fn report_outcome(ctx: &Ctx, reports: &[&AssumptionReport]) -> Outcome {
    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.title.as_str())
        .collect();
    if failed.is_empty() {
        ctx.say("all checks passed");
        Ok(())
    } else {
        Err(Failure::Validation(format!(
            "failed: {}",
            failed.join("; ")
        )))
    }
}

fn cmd_run(ctx: &Ctx) -> Outcome {
    let output = simulate(&ctx.cfg)?;
    write_outputs(&ctx.out, &output)?;
    let s = &output.summary;
    ctx.say(&format!(
        "{} steps to t = {} in {:.2} s\nenergy {:e} -> {:e}\nmax mass deviation {:e}\noutputs in {}",
        s.steps,
        s.final_row.t,
        s.wall_time_s,
        s.initial.energy.total,
        s.final_row.energy.total,
        s.max_mass_deviation,
        ctx.out.display()
    ));
    Ok(())
}

fn cmd_verify_potential(ctx: &Ctx) -> Outcome {
    let v = &ctx.cfg.verify;
    let report = validate_f(&ctx.cfg.split_potential()?, v.bound, v.nsamples);
    ctx.write("potential_report.txt", &report.to_text())?;
    ctx.write("potential_report.csv", &report.to_csv())?;
    ctx.say(&report.to_text());
    report_outcome(ctx, &[&report])
}

fn cmd_verify_yosida(ctx: &Ctx) -> Outcome {
    let v = &ctx.cfg.verify;
    let base = ctx.cfg.split_potential()?;
    let mut reports = Vec::new();
    for &m in &v.yosida_m {
        let y = match ctx.cfg.potential.yosida_tol {
            Some(tol) => YosidaPotential::with_tolerance(base, m, tol)?,
            None => YosidaPotential::new(base, m)?,
        };
        reports.push(verify_lemma_bounds(&y, v.bound, v.nsamples)?);
    }
    let mut text = String::new();
    let mut csv = String::from("m,check,status,worst_slack,worst_at\n");
    for (m, r) in v.yosida_m.iter().zip(&reports) {
        text.push_str(&r.to_text());
        text.push('\n');
        for line in r.to_csv().lines().skip(1) {
            csv.push_str(&format!("{m:e},{line}\n"));
        }
    }
    ctx.write("yosida_report.txt", &text)?;
    ctx.write("yosida_report.csv", &csv)?;
    ctx.say(&text);
    report_outcome(ctx, &reports.iter().collect::<Vec<_>>())
}

fn cmd_verify_p(ctx: &Ctx) -> Outcome {
    let v = &ctx.cfg.verify;
    let report = validate_p(&ctx.cfg.proliferation()?, v.bound, v.nsamples);
    ctx.write("proliferation_report.txt", &report.to_text())?;
    ctx.write("proliferation_report.csv", &report.to_csv())?;
    ctx.say(&report.to_text());
    report_outcome(ctx, &[&report])
}

fn cmd_convergence(ctx: &Ctx) -> Outcome {
    let basis = ctx.cfg.basis()?;
    let report = refinement_study(
        &ctx.cfg.scheme()?,
        &ctx.cfg.initial_state(&basis)?,
        &ctx.cfg.refinement,
    )?;
    ctx.write("convergence.csv", &report.to_csv())?;
    write_json(&ctx.out.join("convergence.json"), &report)?;
    ctx.say(&format!(
        "residual ratios {:?}\ntemporal error ratios {:?}\nspatial errors {:?} at N = {:?}",
        report.residual.ratios, report.temporal.ratios, report.spatial.errors, report.spatial.modes
    ));
    Ok(())
}

fn cmd_compare(ctx: &Ctx) -> Outcome {
    let basis = ctx.cfg.basis()?;
    let report = continuous_dependence_experiment(
        &ctx.cfg.scheme()?,
        &ctx.cfg.initial_state(&basis)?,
        &ctx.cfg.compare,
    )?;
    ctx.write("compare.csv", &report.to_csv())?;
    write_json(&ctx.out.join("compare.json"), &report)?;
    for r in &report.runs {
        ctx.say(&format!(
            "delta {:e}: R(T) = {:.6}, max R = {:.6}, dual R(T) = {:.6}",
            r.delta, r.ratio_final, r.ratio_max, r.dual_ratio_final
        ));
    }
    ctx.say(&format!("ladder spread {:.6}", report.ladder_spread));
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Validation(
            "continuous-dependence checks failed".into(),
        ))
    }
}

fn cmd_attractor(ctx: &Ctx) -> Outcome {
    let basis = ctx.cfg.basis()?;
    let report = attractor_probe(
        &ctx.cfg.scheme()?,
        &ctx.cfg.initial_state(&basis)?,
        &ctx.cfg.attractor,
    )?;
    ctx.write("attractor.csv", &report.to_csv())?;
    write_json(&ctx.out.join("attractor.json"), &report)?;
    for (name, change) in &report.relative_change {
        ctx.say(&format!("{name}: relative change {change:e}"));
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Validation("absorbing-set checks failed".into()))
    }
}

fn load(cli: &Cli) -> Result<RunConfig, Error> {
    let cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    let cfg = match cli.seed {
        Some(seed) => cfg.with_seed(seed),
        None => cfg,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Outcome {
    let cfg = load(cli)?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| Path::new("tumorch-out").join(cli.command.name()));
    ensure_dir(&out)?;
    let ctx = Ctx {
        cfg,
        out,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Run => cmd_run(&ctx),
        Command::VerifyPotential => cmd_verify_potential(&ctx),
        Command::VerifyYosida => cmd_verify_yosida(&ctx),
        Command::VerifyP => cmd_verify_p(&ctx),
        Command::Convergence => cmd_convergence(&ctx),
        Command::Compare => cmd_compare(&ctx),
        Command::Attractor => cmd_attractor(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(2)
        }
    }
}
