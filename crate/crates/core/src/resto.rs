//! Closed-form restoration times and worst cases over single span failures.
//!
//! All times are in milliseconds. Hop counts enter as plain integers.

use std::fmt;

use num_traits::{Float, FromPrimitive};
use rayon::prelude::*;

use crate::net::{propagation_delay_ms, DemandId, SpanId, Topology, DEFAULT_MS_PER_KM};
use crate::pcycle::PCycleSolution;
use crate::scalar::lit;
use crate::spp::SppSolution;
use crate::trail::TrailSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtParams<T> {
    /// Failure detection time.
    pub f: T,
    /// Node processing time.
    pub m: T,
    /// OXC configuration and test time.
    pub x: T,
    /// Synchronization delay.
    pub s: T,
    /// Propagation delay per km of fibre.
    pub ms_per_km: T,
}

impl<T: Float + FromPrimitive> Default for RtParams<T> {
    /// M = 0.3, F = 0.5, S = 0, X = 0.5 and 5 us per km.
    fn default() -> Self {
        RtParams {
            f: lit(0.5),
            m: lit(0.3),
            x: lit(0.5),
            s: T::zero(),
            ms_per_km: lit(DEFAULT_MS_PER_KM),
        }
    }
}

impl<T: Float> RtParams<T> {
    pub fn with_x(self, x: T) -> Self {
        RtParams { x, ..self }
    }

    pub fn is_valid(&self) -> bool {
        [self.f, self.m, self.x, self.s, self.ms_per_km].iter().all(|v| *v >= T::zero())
    }
}

fn n<T: FromPrimitive>(h: usize) -> T {
    T::from_usize(h).expect("hop count representable")
}

/// Coded protection: the faster of reading the parity directly and the
/// source-notified fallback.
pub fn rt_cpp<T: Float + FromPrimitive>(d_sd: T, h_b: usize, h_is: usize, p: &RtParams<T>) -> T {
    let direct = d_sd + n::<T>(h_b) * p.m + p.s;
    let notified = p.f + lit::<T>(2.0) * d_sd + n::<T>(h_is + 1) * p.m + n::<T>(h_b + 1) * p.m;
    direct.min(notified)
}

/// Shared protection with a separate control plane configuring all OXCs at once.
pub fn rt_spp1<T: Float + FromPrimitive>(d_sd: T, h_si: usize, h_b: usize, p: &RtParams<T>) -> T {
    p.f + lit::<T>(2.0) * d_sd + n::<T>(h_si + 1) * p.m + p.x + n::<T>(h_b + 1) * p.m
}

/// Shared protection with OXCs configured one after another along the backup.
pub fn rt_spp2<T: Float + FromPrimitive>(d_sd: T, h_is: usize, h_b: usize, p: &RtParams<T>) -> T {
    let hb1 = n::<T>(h_b + 1);
    p.f + d_sd + n::<T>(h_is + 1) * p.m + hb1 * p.x + lit::<T>(2.0) * d_sd + lit::<T>(2.0) * hb1 * p.m
}

/// `h` nodes on the restoring cycle, `d` its longest node-to-node delay.
pub fn rt_pcycle<T: Float + FromPrimitive>(h: usize, d: T, p: &RtParams<T>) -> T {
    p.f + p.x + n::<T>(h) * p.m + d
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Cpp,
    Spp1,
    Spp2,
    PCycle,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Cpp, Scheme::Spp1, Scheme::Spp2, Scheme::PCycle];
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Cpp => "CPP",
            Scheme::Spp1 => "SPP1",
            Scheme::Spp2 => "SPP2",
            Scheme::PCycle => "p-cycle",
        })
    }
}

/// Worst case of one scheme at one X value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCase<T> {
    pub scheme: Scheme,
    pub rt: T,
    pub demand: DemandId,
    /// Failed primary span.
    pub span: SpanId,
    /// Backup hops of the argmax scenario (coded route hops for CPP).
    pub h_b: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RtRow<T> {
    pub x: T,
    /// One entry per evaluated scheme, in [`Scheme::ALL`] order.
    pub cells: Vec<WorstCase<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RtReport<T> {
    pub params: RtParams<T>,
    pub rows: Vec<RtRow<T>>,
}

impl<T: Copy> RtReport<T> {
    pub fn column(&self, scheme: Scheme) -> Vec<WorstCase<T>> {
        self.rows
            .iter()
            .filter_map(|r| r.cells.iter().find(|c| c.scheme == scheme).copied())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RtError {
    #[error("plans disagree: {0}")]
    InconsistentPlans(String),
}

/// One `(demand, failed primary span)` pair with everything the formulas need.
#[derive(Debug, Clone, Copy)]
struct Scenario<T> {
    demand: DemandId,
    span: SpanId,
    d_sd: T,
    h_is: usize,
    h_b: usize,
    h_coded: usize,
    /// `(nodes, delay)` of the worst p-cycle restoring this span.
    cycle: Option<(usize, T)>,
}

fn scenarios<T: Float + FromPrimitive + Send + Sync>(
    spp: &SppSolution,
    trails: &TrailSet,
    pcycle: Option<&PCycleSolution>,
    topology: &Topology,
    params: &RtParams<T>,
) -> Result<Vec<Scenario<T>>, RtError> {
    let ms_per_km = params.ms_per_km;
    let bad = |m: String| Err(RtError::InconsistentPlans(m));
    if spp.working.len() != topology.span_count() {
        return bad("SPP solution belongs to another topology".into());
    }
    let mut coded = Vec::with_capacity(spp.demand_count());
    for d in 0..spp.demand_count() {
        let Some(plan) = trails.plan_for(d) else {
            return bad(format!("demand {d} has no trail plan"));
        };
        match plan.coded_hops(d) {
            Some(h) => coded.push(h),
            None => return bad(format!("demand {d} endpoints are not joined by its trail plan")),
        }
    }
    let stats = match pcycle {
        Some(p) if p.spare.len() != topology.span_count() => {
            return bad("p-cycle solution belongs to another topology".into())
        }
        Some(p) => p.stats(topology, ms_per_km),
        None => Vec::new(),
    };
    let pairs: Vec<(DemandId, usize)> = (0..spp.demand_count())
        .flat_map(|d| (0..spp.primary(d).hop_count()).map(move |j| (d, j)))
        .collect();
    pairs
        .par_iter()
        .map(|&(d, j)| {
            let prim = spp.primary(d);
            let span = prim.spans()[j];
            let cycle = match pcycle {
                None => None,
                Some(p) => {
                    let mut worst: Option<(usize, T)> = None;
                    for (k, (c, _)) in p.cycles.iter().enumerate() {
                        if c.protects(topology, span) > 0 {
                            let s = stats[k];
                            let key = |h: usize, d: T| n::<T>(h) * params.m + d;
                            if worst.map_or(true, |(h, dl)| key(s.nodes, s.delay_ms) > key(h, dl)) {
                                worst = Some((s.nodes, s.delay_ms));
                            }
                        }
                    }
                    match worst {
                        Some(w) => Some(w),
                        None => {
                            return Err(RtError::InconsistentPlans(format!(
                                "span {span} carries working traffic but no chosen cycle protects it"
                            )))
                        }
                    }
                }
            };
            Ok(Scenario {
                demand: d,
                span,
                d_sd: propagation_delay_ms(topology, prim, ms_per_km),
                h_is: j,
                h_b: spp.protection(d).hop_count(),
                h_coded: coded[d],
                cycle,
            })
        })
        .collect()
}

/// Worst restoration time of each scheme over every demand and every failure
/// of one of its primary spans, one row per X value.
pub fn worst_case_report<T: Float + FromPrimitive + Send + Sync>(
    spp: &SppSolution,
    trails: &TrailSet,
    pcycle: Option<&PCycleSolution>,
    topology: &Topology,
    params: &RtParams<T>,
    x_values: &[T],
) -> Result<RtReport<T>, RtError> {
    let all = scenarios(spp, trails, pcycle, topology, params)?;
    let mut rows = Vec::new();
    for &x in x_values {
        let p = params.with_x(x);
        let mut cells = Vec::new();
        for scheme in Scheme::ALL {
            if scheme == Scheme::PCycle && pcycle.is_none() {
                continue;
            }
            let mut best: Option<WorstCase<T>> = None;
            for sc in &all {
                let (rt, h_b) = match scheme {
                    Scheme::Cpp => (rt_cpp(sc.d_sd, sc.h_coded, sc.h_is, &p), sc.h_coded),
                    Scheme::Spp1 => (rt_spp1(sc.d_sd, sc.h_is, sc.h_b, &p), sc.h_b),
                    Scheme::Spp2 => (rt_spp2(sc.d_sd, sc.h_is, sc.h_b, &p), sc.h_b),
                    Scheme::PCycle => {
                        let (h, d) = sc.cycle.expect("checked above");
                        (rt_pcycle(h, d, &p), sc.h_b)
                    }
                };
                if best.map_or(true, |b| rt > b.rt) {
                    best = Some(WorstCase {
                        scheme,
                        rt,
                        demand: sc.demand,
                        span: sc.span,
                        h_b,
                    });
                }
            }
            if let Some(b) = best {
                cells.push(b);
            }
        }
        rows.push(RtRow { x, cells });
    }
    Ok(RtReport {
        params: *params,
        rows,
    })
}
