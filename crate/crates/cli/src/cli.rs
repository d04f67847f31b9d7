//! Command-line surface. Flags and `CPPROT_*` variables override the config file.

use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use cpprot::cpp::Mode;

use crate::config::{parse_x_list, DemandSource, RunConfig, TopologySource};
use crate::pipeline::{run_pipeline, run_stage, FailChoice, Stage, StageReport};

#[derive(Debug, Parser)]
#[command(name = "cpprot", version, about = "Plan, convert, simulate and compare coded path protection")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// `key value` config file read before flags and environment.
    #[arg(long, global = true, env = "CPPROT_CONFIG")]
    pub config: Option<PathBuf>,
    /// Topology file, or `builtin:cost239` / `builtin:nsfnet`.
    #[arg(long, global = true, env = "CPPROT_TOPOLOGY")]
    pub topology: Option<String>,
    #[arg(long, global = true, env = "CPPROT_DEMANDS", conflicts_with = "uniform")]
    pub demands: Option<PathBuf>,
    /// One unit between every node pair.
    #[arg(long, global = true)]
    pub uniform: bool,
    /// Candidate path pairs per demand.
    #[arg(long, global = true, env = "CPPROT_K")]
    pub k: Option<usize>,
    #[arg(long, global = true, env = "CPPROT_MODE")]
    pub mode: Option<Mode>,
    /// Failure detection time, ms.
    #[arg(long = "F", global = true, env = "CPPROT_F")]
    pub f: Option<f64>,
    /// Node processing time, ms.
    #[arg(long = "M", global = true, env = "CPPROT_M")]
    pub m: Option<f64>,
    /// OXC configuration time, ms.
    #[arg(long = "X", global = true, env = "CPPROT_X")]
    pub x: Option<f64>,
    /// Synchronization delay, ms.
    #[arg(long = "S", global = true, env = "CPPROT_S")]
    pub s: Option<f64>,
    /// Comma-separated X values for the comparison table.
    #[arg(long, global = true, env = "CPPROT_X_LIST")]
    pub x_list: Option<String>,
    #[arg(long, global = true, env = "CPPROT_SEED")]
    pub seed: Option<u64>,
    /// Branch-and-bound node budget per ILP.
    #[arg(long, global = true, env = "CPPROT_BUDGET")]
    pub budget: Option<u64>,
    #[arg(long, global = true, env = "CPPROT_SLOTS")]
    pub slots: Option<usize>,
    #[arg(long, global = true, env = "CPPROT_MAX_HOPS")]
    pub max_hops: Option<usize>,
    #[arg(long, global = true, env = "CPPROT_MAX_CYCLES")]
    pub max_cycles: Option<usize>,
    /// Also write the SPP and conversion models in LP format.
    #[arg(long, global = true, env = "CPPROT_EXPORT_LP")]
    pub export_lp: bool,
    #[arg(long, global = true, env = "CPPROT_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    PlanSpp,
    ConvertCpp,
    BuildTrails,
    Simulate {
        /// Span id to fail, or `all` for the full single-failure sweep.
        #[arg(long, default_value = "all")]
        fail: FailChoice,
    },
    PlanPcycle,
    Compare,
    /// Every stage in order.
    Run,
    /// Print the resolved settings in config-file form.
    ShowConfig,
}

impl GlobalArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(file) = &self.config {
            cfg.apply_file(file)?;
        }
        if let Some(t) = &self.topology {
            cfg.topology = Some(TopologySource::parse(t));
        }
        if let Some(d) = &self.demands {
            cfg.demands = DemandSource::File(d.clone());
        }
        if self.uniform {
            cfg.demands = DemandSource::Uniform;
        }
        macro_rules! take {
            ($($field:ident => $($target:ident).+),*) => {
                $(if let Some(v) = self.$field.clone() { cfg.$($target).+ = v; })*
            };
        }
        take!(k => k, mode => mode, f => rt.f, m => rt.m, x => rt.x, s => rt.s, seed => seed,
              budget => budget, slots => slots, max_hops => max_hops, max_cycles => max_cycles, out => out);
        if let Some(xs) = &self.x_list {
            cfg.x_list = parse_x_list(xs)?;
        }
        cfg.export_lp |= self.export_lp;
        Ok(cfg)
    }
}

fn print(out: &mut impl Write, r: &StageReport) -> Result<()> {
    for line in r.summary.lines() {
        writeln!(out, "[{}] {line}", r.stage)?;
    }
    for p in &r.problems {
        writeln!(out, "[{}] FAIL {p}", r.stage)?;
    }
    Ok(())
}

/// Runs the parsed command, writing progress to `out`. Returns the exit code.
pub fn execute(cli: &Cli, out: &mut impl Write) -> Result<i32> {
    let cfg = cli.global.resolve()?;
    if let Command::ShowConfig = cli.command {
        out.write_all(cfg.to_text().as_bytes())?;
        return Ok(0);
    }
    cfg.validate()?;
    let stage = match cli.command {
        Command::Run => {
            let outcome = run_pipeline(&cfg)?;
            for r in &outcome.stages {
                print(out, r)?;
            }
            return Ok(outcome.exit_code());
        }
        Command::ShowConfig => unreachable!(),
        Command::PlanSpp => Stage::PlanSpp,
        Command::ConvertCpp => Stage::ConvertCpp,
        Command::BuildTrails => Stage::BuildTrails,
        Command::Simulate { fail } => Stage::Simulate(fail),
        Command::PlanPcycle => Stage::PlanPcycle,
        Command::Compare => Stage::Compare,
    };
    let r = run_stage(&cfg, stage)?;
    print(out, &r)?;
    Ok(if r.problems.is_empty() { 0 } else { 1 })
}
