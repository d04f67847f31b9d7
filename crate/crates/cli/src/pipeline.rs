//! The stages. Each one reads its predecessors' artifacts from the output
//! directory and writes its own, so any stage can be rerun on its own.

use std::fmt::{self, Write};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use cpprot::cpp::{build_conversion_model, convert, validate_groups, CodingPlan};
use cpprot::ilp::{export_lp, Limits};
use cpprot::net::{candidate_path_pairs, generate_uniform_demands, parse_demands, SpanId, Topology};
use cpprot::pcycle::{enumerate_cycles, plan_pcycle, PCycleSolution};
use cpprot::resto::worst_case_report;
use cpprot::sim::{compile_programs, simulate, sweep_all_failures, FailureScenario};
use cpprot::spp::{build_spp_model, plan_spp, SppSolution};
use cpprot::trail::{parse_trail_set, verify_topology, verify_trail_plan, TrailChoice, TrailSet};
use cpprot::RtReport64;

use crate::config::{DemandSource, RunConfig};
use crate::report::render_report;

pub const SPP_FILE: &str = "spp.txt";
pub const SPP_LP_FILE: &str = "spp.lp";
pub const CPP_FILE: &str = "cpp.txt";
pub const CPP_LP_FILE: &str = "cpp.lp";
pub const TRAILS_FILE: &str = "trails.txt";
pub const SIM_FILE: &str = "sim.txt";
pub const PCYCLE_FILE: &str = "pcycle.txt";
pub const RT_FILE: &str = "rt.txt";
pub const REPORT_FILE: &str = "report.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailChoice {
    All,
    Span(SpanId),
}

impl FromStr for FailChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(FailChoice::All);
        }
        s.parse().map(FailChoice::Span).map_err(|_| format!("expected a span id or `all`, got `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    PlanSpp,
    ConvertCpp,
    BuildTrails,
    Simulate(FailChoice),
    PlanPcycle,
    Compare,
}

impl Stage {
    pub const PIPELINE: [Stage; 6] = [
        Stage::PlanSpp,
        Stage::ConvertCpp,
        Stage::BuildTrails,
        Stage::Simulate(FailChoice::All),
        Stage::PlanPcycle,
        Stage::Compare,
    ];
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::PlanSpp => "plan-spp",
            Stage::ConvertCpp => "convert-cpp",
            Stage::BuildTrails => "build-trails",
            Stage::Simulate(_) => "simulate",
            Stage::PlanPcycle => "plan-pcycle",
            Stage::Compare => "compare",
        })
    }
}

/// What a stage found. Problems make the run exit nonzero; artifacts are
/// still written.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageReport {
    pub stage: String,
    pub summary: String,
    pub problems: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub stages: Vec<StageReport>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.stages.iter().all(|s| s.problems.is_empty())
    }

    /// 0 when every check passed, 1 when some sweep scenario or validator failed.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

fn limits(cfg: &RunConfig) -> Limits {
    Limits::with_nodes(cfg.budget)
}

fn read(cfg: &RunConfig, name: &str) -> Result<String> {
    let p = cfg.out.join(name);
    fs::read_to_string(&p).with_context(|| format!("cannot read {} (run the earlier stage first)", p.display()))
}

fn write(cfg: &RunConfig, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("cannot create {}", cfg.out.display()))?;
    let p = cfg.out.join(name);
    fs::write(&p, text).with_context(|| format!("cannot write {}", p.display()))
}

pub fn load_topology(cfg: &RunConfig) -> Result<Topology> {
    match &cfg.topology {
        Some(src) => src.load(),
        None => bail!("no topology given"),
    }
}

fn load_spp(cfg: &RunConfig, t: &Topology) -> Result<SppSolution> {
    SppSolution::from_text(t, &read(cfg, SPP_FILE)?).context(SPP_FILE)
}

fn load_trails(cfg: &RunConfig, t: &Topology) -> Result<TrailSet> {
    parse_trail_set(t, &read(cfg, TRAILS_FILE)?).context(TRAILS_FILE)
}

fn scp(working: i64, spare: i64) -> f64 {
    if working == 0 {
        0.0
    } else {
        100.0 * spare as f64 / working as f64
    }
}

fn plan_spp_stage(cfg: &RunConfig, t: &Topology) -> Result<StageReport> {
    let demands = match &cfg.demands {
        DemandSource::Uniform => generate_uniform_demands(t),
        DemandSource::File(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read demand file {}", p.display()))?;
            parse_demands(t, &text).with_context(|| format!("bad demand file {}", p.display()))?
        }
    };
    let cands = demands
        .iter()
        .map(|d| candidate_path_pairs(t, d, cfg.k).with_context(|| format!("demand {}", d.id)))
        .collect::<Result<Vec<_>>>()?;
    if cfg.export_lp {
        write(cfg, SPP_LP_FILE, &export_lp(&build_spp_model(t, &demands, &cands)?.model))?;
    }
    let spp = plan_spp(t, &demands, &cands, &limits(cfg))?;
    write(cfg, SPP_FILE, &spp.to_text(t))?;
    Ok(StageReport {
        summary: format!(
            "{} demands, SPP SCP {:.2}%{}",
            spp.demand_count(),
            scp(spp.working_cost, spp.spare_cost),
            if spp.optimal { "" } else { " (budget reached)" }
        ),
        ..Default::default()
    })
}

fn convert_stage(cfg: &RunConfig, t: &Topology) -> Result<StageReport> {
    let spp = load_spp(cfg, t)?;
    if cfg.export_lp {
        write(cfg, CPP_LP_FILE, &export_lp(&build_conversion_model(t, &spp, cfg.mode).model))?;
    }
    let plan = convert(t, &spp, cfg.mode, &limits(cfg))?;
    write(cfg, CPP_FILE, &plan.to_text())?;
    let problems = validate_groups(t, &plan, &spp, cfg.mode).iter().map(|v| v.to_string()).collect();
    Ok(StageReport {
        summary: format!(
            "{} coding groups, coded SCP {:.2}% ({} mode){}",
            plan.groups.len(),
            scp(spp.working_cost, plan.coded_spare_cost),
            cfg.mode,
            if plan.optimal { "" } else { " (budget reached)" }
        ),
        problems,
        ..Default::default()
    })
}

fn trails_stage(cfg: &RunConfig, t: &Topology) -> Result<StageReport> {
    let spp = load_spp(cfg, t)?;
    let coding = CodingPlan::from_text(t, &spp, &read(cfg, CPP_FILE)?).context(CPP_FILE)?;
    if coding.mode != cfg.mode {
        bail!("{CPP_FILE} was converted in {} mode, config asks for {}", coding.mode, cfg.mode);
    }
    let mut problems: Vec<String> = validate_groups(t, &coding, &spp, coding.mode).iter().map(|v| v.to_string()).collect();
    let (set, groups) = TrailSet::build_with_topologies(t, &spp, &coding, TrailChoice::LowestSpan)?;
    for g in &groups {
        for issue in verify_topology(t, g, &spp, coding.mode) {
            problems.push(format!("group {}: {issue:?}", g.group));
        }
        if let Some(plan) = set.plans.iter().find(|p| p.group == g.group) {
            for v in verify_trail_plan(plan, g) {
                problems.push(format!("group {}: {v}", g.group));
            }
        }
    }
    write(cfg, TRAILS_FILE, &set.to_text(t))?;
    Ok(StageReport {
        summary: format!(
            "{} trail plans, {} branch trails, coded SCP after cycle elimination {:.2}%, {} demands on 1+1",
            set.plans.len(),
            set.plans.iter().map(|p| p.branch_count()).sum::<usize>(),
            scp(spp.working_cost, set.spare_cost),
            set.fallback.len()
        ),
        problems,
        ..Default::default()
    })
}

fn simulate_stage(cfg: &RunConfig, t: &Topology, fail: FailChoice) -> Result<StageReport> {
    let spp = load_spp(cfg, t)?;
    let set = load_trails(cfg, t)?;
    let programs = compile_programs(&set, &spp, t)?;
    let mut out = format!("cpprot-sim 1\nslots {} seed {}\n", cfg.slots, cfg.seed);
    let mut problems = Vec::new();
    let summary = match fail {
        FailChoice::All => {
            let sweep = sweep_all_failures(&programs, t, cfg.slots, cfg.seed);
            out.push_str(&sweep.to_text(t));
            let ok = sweep.lines.iter().filter(|l| l.recovered && l.over_bound.is_empty()).count();
            for l in sweep.lines.iter().filter(|l| !(l.recovered && l.over_bound.is_empty())) {
                problems.push(format!(
                    "span {} {}: lost {:?}, over bound {:?}",
                    l.span,
                    t.span_label(l.span),
                    l.lost,
                    l.over_bound
                ));
            }
            let s = format!("scenarios {} recovered {ok} max_delay {}", sweep.lines.len(), sweep.max_delay());
            let _ = writeln!(out, "summary {s}");
            s
        }
        FailChoice::Span(span) => {
            let r = simulate(&programs, t, FailureScenario::span(span, cfg.slots / 4), cfg.slots, cfg.seed)?;
            for (d, dirs) in &r.demands {
                for x in dirs {
                    let verdict = if x.recovered() { "recovered" } else { "LOST" };
                    let _ = writeln!(
                        out,
                        "demand {d} receiver {} {verdict} delay {} from_protection {}",
                        x.receiver,
                        x.recovery_delay.map_or("-".to_string(), |v| v.to_string()),
                        x.from_protection
                    );
                }
            }
            problems.extend(r.lost().iter().map(|d| format!("demand {d} not recovered after span {span} failed")));
            let s = format!(
                "span {span} {}: {} demands disturbed, {} lost, max_delay {}",
                t.span_label(span),
                r.disturbed().len(),
                r.lost().len(),
                r.max_delay()
            );
            let _ = writeln!(out, "summary {s}");
            s
        }
    };
    write(cfg, SIM_FILE, &out)?;
    Ok(StageReport {
        summary,
        problems,
        ..Default::default()
    })
}

fn pcycle_stage(cfg: &RunConfig, t: &Topology) -> Result<StageReport> {
    let spp = load_spp(cfg, t)?;
    let cycles = enumerate_cycles(t, cfg.max_hops, cfg.max_cycles);
    let sol = plan_pcycle(t, &spp.working, &cycles, &limits(cfg))?;
    write(cfg, PCYCLE_FILE, &sol.to_text(t))?;
    Ok(StageReport {
        summary: format!(
            "{} candidate cycles, {} chosen, p-cycle SCP {:.2}%{}",
            cycles.len(),
            sol.cycles.len(),
            scp(spp.working_cost, sol.spare_cost),
            if sol.optimal { "" } else { " (budget reached)" }
        ),
        ..Default::default()
    })
}

/// `x X scheme S rt V demand D span E h_b H` per cell.
pub fn rt_to_text(rt: &RtReport64) -> String {
    let mut out = String::from("cpprot-rt 1\n");
    for row in &rt.rows {
        for c in &row.cells {
            let _ = writeln!(
                out,
                "x {} scheme {} rt {:.6} demand {} span {} h_b {}",
                row.x, c.scheme, c.rt, c.demand, c.span, c.h_b
            );
        }
    }
    out
}

fn compare_stage(cfg: &RunConfig, t: &Topology) -> Result<StageReport> {
    let spp = load_spp(cfg, t)?;
    let set = load_trails(cfg, t)?;
    let pc = PCycleSolution::from_text(t, &read(cfg, PCYCLE_FILE)?).context(PCYCLE_FILE)?;
    let rt = worst_case_report(&spp, &set, Some(&pc), t, &cfg.rt, &cfg.x_list)?;
    write(cfg, RT_FILE, &rt_to_text(&rt))?;
    let report = render_report(&spp, &set, Some(&pc), &rt);
    write(cfg, REPORT_FILE, &report)?;
    Ok(StageReport {
        summary: report.trim_end().to_string(),
        ..Default::default()
    })
}

/// Runs one stage; errors carry the stage name.
pub fn run_stage(cfg: &RunConfig, stage: Stage) -> Result<StageReport> {
    let go = || -> Result<StageReport> {
        let t = load_topology(cfg)?;
        match stage {
            Stage::PlanSpp => plan_spp_stage(cfg, &t),
            Stage::ConvertCpp => convert_stage(cfg, &t),
            Stage::BuildTrails => trails_stage(cfg, &t),
            Stage::Simulate(f) => simulate_stage(cfg, &t, f),
            Stage::PlanPcycle => pcycle_stage(cfg, &t),
            Stage::Compare => compare_stage(cfg, &t),
        }
    };
    let mut r = go().with_context(|| format!("stage {stage} failed"))?;
    r.stage = stage.to_string();
    Ok(r)
}

/// Every stage in order. Stops at the first error; artifacts written so far stay.
pub fn run_pipeline(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let mut outcome = Outcome::default();
    for stage in Stage::PIPELINE {
        outcome.stages.push(run_stage(cfg, stage)?);
    }
    Ok(outcome)
}

/// True if `dir` holds every artifact the full pipeline writes.
pub fn has_all_artifacts(dir: &Path) -> bool {
    [SPP_FILE, CPP_FILE, TRAILS_FILE, SIM_FILE, PCYCLE_FILE, RT_FILE, REPORT_FILE]
        .iter()
        .all(|f| dir.join(f).is_file())
}
