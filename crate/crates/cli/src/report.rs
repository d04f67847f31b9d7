//! Fixed-width comparison table: one row per scheme, SCP and worst-case
//! restoration time per X value.

use std::fmt::Write;

use cpprot::pcycle::PCycleSolution;
use cpprot::resto::Scheme;
use cpprot::spp::SppSolution;
use cpprot::trail::TrailSet;
use cpprot::RtReport64;

/// Costs in the integer units the planners use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeCosts {
    pub working: i64,
    pub spp_spare: i64,
    pub cpp_spare: i64,
    pub pcycle_spare: Option<i64>,
}

fn pct(working: i64, spare: i64) -> f64 {
    if working == 0 {
        0.0
    } else {
        100.0 * spare as f64 / working as f64
    }
}

pub fn render_report(spp: &SppSolution, trails: &TrailSet, pcycle: Option<&PCycleSolution>, rt: &RtReport64) -> String {
    render_table(
        &SchemeCosts {
            working: spp.working_cost,
            spp_spare: spp.spare_cost,
            cpp_spare: trails.spare_cost,
            pcycle_spare: pcycle.map(|p| p.spare_cost),
        },
        rt,
    )
}

pub fn render_table(costs: &SchemeCosts, rt: &RtReport64) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<10}{:>9}", "Scheme", "SCP(%)");
    for row in &rt.rows {
        let _ = write!(out, "{:>12}", format!("RT X={}", row.x));
    }
    out.push('\n');
    for scheme in Scheme::ALL {
        let spare = match scheme {
            Scheme::Cpp => Some(costs.cpp_spare),
            Scheme::Spp1 | Scheme::Spp2 => Some(costs.spp_spare),
            Scheme::PCycle => costs.pcycle_spare,
        };
        let Some(spare) = spare else { continue };
        let _ = write!(out, "{:<10}{:>9.2}", scheme.to_string(), pct(costs.working, spare));
        for row in &rt.rows {
            match row.cells.iter().find(|c| c.scheme == scheme) {
                Some(c) => {
                    let _ = write!(out, "{:>12.2}", c.rt);
                }
                None => {
                    let _ = write!(out, "{:>12}", "-");
                }
            }
        }
        out.push('\n');
    }
    let gap = pct(costs.working, costs.cpp_spare) - pct(costs.working, costs.spp_spare);
    let _ = writeln!(out, "CPP extra spare over SPP: {gap:.2} percentage points");
    out
}
