use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{GroupProgram, Programs, SimError, Stream, Symbol};
use crate::net::{DemandId, SpanId, Topology};
use crate::trail::{End, EndpointLabel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FailureScenario {
    /// `None` runs the network failure-free.
    pub span: Option<SpanId>,
    /// First slot at which the span outputs zeros.
    pub slot: usize,
}

impl FailureScenario {
    pub fn none() -> Self {
        FailureScenario { span: None, slot: 0 }
    }

    pub fn span(span: SpanId, slot: usize) -> Self {
        FailureScenario { span: Some(span), slot }
    }

    /// Whether a symbol sent on `span` at `time` is lost.
    fn hits(&self, span: SpanId, time: usize) -> bool {
        self.span == Some(span) && time >= self.slot
    }
}

/// One receiving endpoint's view of one run, indexed by symbol slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionReport {
    pub receiver: EndpointLabel,
    pub expected: Vec<Symbol>,
    pub delivered: Vec<Symbol>,
    pub first_divergence: Option<usize>,
    /// Slots from the failure until correct symbols flow again; `None` if
    /// that never happens inside the horizon.
    pub recovery_delay: Option<usize>,
    /// Symbols taken from the protection side because the primary was dark.
    pub from_protection: usize,
    /// Largest delay the coding structure should need.
    pub delay_bound: usize,
}

impl DirectionReport {
    pub fn recovered(&self) -> bool {
        self.recovery_delay.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimReport {
    pub scenario: FailureScenario,
    pub slots: usize,
    /// Source-bound and target-bound report per demand.
    pub demands: BTreeMap<DemandId, [DirectionReport; 2]>,
    /// Both directions of every coded link carry the same symbols.
    pub parity_consistent: bool,
}

impl SimReport {
    pub fn all_recovered(&self) -> bool {
        self.demands.values().flatten().all(DirectionReport::recovered)
    }

    pub fn max_delay(&self) -> usize {
        self.demands
            .values()
            .flatten()
            .filter_map(|d| d.recovery_delay)
            .max()
            .unwrap_or(0)
    }

    /// Demands that had to fall back on protection in at least one direction.
    pub fn disturbed(&self) -> Vec<DemandId> {
        self.demands
            .iter()
            .filter(|(_, r)| r.iter().any(|d| d.from_protection > 0))
            .map(|(&d, _)| d)
            .collect()
    }

    pub fn lost(&self) -> Vec<DemandId> {
        self.demands
            .iter()
            .filter(|(_, r)| r.iter().any(|d| !d.recovered()))
            .map(|(&d, _)| d)
            .collect()
    }
}

fn source_stream(seed: u64, demand: DemandId, end: End, slots: usize) -> Vec<Symbol> {
    let tag = (demand as u64) << 1 | matches!(end, End::Target) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    (0..slots).map(|_| rng.gen()).collect()
}

#[derive(Clone, Copy, Default)]
struct Frame {
    value: Symbol,
    /// The sender's primary was dark for this symbol.
    alarm: bool,
    /// A failed span zeroed something on the way.
    los: bool,
}

impl std::ops::BitXorAssign for Frame {
    fn bitxor_assign(&mut self, o: Frame) {
        self.value ^= o.value;
        self.alarm |= o.alarm;
        self.los |= o.los;
    }
}

/// What each endpoint sends and receives on its primary.
struct Endpoints {
    own: HashMap<EndpointLabel, Vec<Symbol>>,
    rx: HashMap<EndpointLabel, Vec<Frame>>,
    hops: HashMap<DemandId, usize>,
}

impl Endpoints {
    fn new(programs: &Programs, scenario: &FailureScenario, slots: usize, seed: u64) -> Self {
        let mut own = HashMap::new();
        let mut rx = HashMap::new();
        let mut hops = HashMap::new();
        for (&d, spans) in &programs.primaries {
            let s = EndpointLabel::source(d);
            let t = EndpointLabel::target(d);
            let up = source_stream(seed, d, End::Source, slots);
            let down = source_stream(seed, d, End::Target, slots);
            let h = spans.len();
            let carry = |data: &[Symbol], forward: bool| -> Vec<Frame> {
                (0..slots)
                    .map(|k| {
                        let lost = (0..h).any(|j| {
                            let span = if forward { spans[j] } else { spans[h - 1 - j] };
                            scenario.hits(span, k + j)
                        });
                        if lost {
                            Frame { value: 0, alarm: false, los: true }
                        } else {
                            Frame { value: data[k], ..Frame::default() }
                        }
                    })
                    .collect()
            };
            rx.insert(t, carry(&up, true));
            rx.insert(s, carry(&down, false));
            own.insert(s, up);
            own.insert(t, down);
            hops.insert(d, h);
        }
        Endpoints { own, rx, hops }
    }

    fn hop(&self, l: EndpointLabel) -> usize {
        self.hops.get(&l.demand).copied().unwrap_or(0)
    }

    /// Parity this endpoint sends for symbol `k`, unless it has stopped.
    fn parity(&self, l: EndpointLabel, k: usize, stopped_at: Option<usize>) -> Frame {
        if stopped_at.is_some_and(|t| k + self.hop(l) >= t) {
            return Frame::default();
        }
        let rx = self.rx[&l][k];
        Frame {
            value: self.own[&l][k] ^ rx.value,
            alarm: rx.los,
            los: false,
        }
    }
}

/// A group's rules flattened into stream indices with send offsets.
struct Compiled<'a> {
    group: &'a GroupProgram,
    streams: Vec<Stream>,
    inputs: Vec<Vec<usize>>,
    locals: Vec<Vec<EndpointLabel>>,
    offset: Vec<usize>,
    order: Vec<usize>,
    taps: Vec<(EndpointLabel, Vec<usize>, Vec<EndpointLabel>, usize)>,
    terminate: bool,
}

impl<'a> Compiled<'a> {
    fn new(group: &'a GroupProgram, ends: &Endpoints) -> Self {
        let mut streams = Vec::new();
        let mut index = HashMap::new();
        for n in &group.nodes {
            for r in &n.rules {
                index.insert(r.out, streams.len());
                streams.push(r.out);
            }
        }
        let mut inputs = vec![Vec::new(); streams.len()];
        let mut locals = vec![Vec::new(); streams.len()];
        for n in &group.nodes {
            for r in &n.rules {
                let i = index[&r.out];
                inputs[i] = r.inputs.iter().filter_map(|s| index.get(s).copied()).collect();
                locals[i] = r.local.clone();
            }
        }
        // Send offsets: a stream goes out one slot after its latest input
        // arrives, and no earlier than the local primaries deliver.
        let mut offset: Vec<Option<usize>> = vec![None; streams.len()];
        fn resolve(
            i: usize,
            inputs: &[Vec<usize>],
            locals: &[Vec<EndpointLabel>],
            ends: &Endpoints,
            offset: &mut Vec<Option<usize>>,
            depth: usize,
        ) -> usize {
            if let Some(o) = offset[i] {
                return o;
            }
            assert!(depth <= inputs.len(), "coding links form a cycle");
            let mut o = locals[i].iter().map(|&l| ends.hop(l)).max().unwrap_or(0);
            for &j in &inputs[i] {
                o = o.max(resolve(j, inputs, locals, ends, offset, depth + 1) + 1);
            }
            offset[i] = Some(o);
            o
        }
        for i in 0..streams.len() {
            resolve(i, &inputs, &locals, ends, &mut offset, 0);
        }
        let offset: Vec<usize> = offset.into_iter().map(|o| o.unwrap_or(0)).collect();
        let mut order: Vec<usize> = (0..streams.len()).collect();
        order.sort_by_key(|&i| offset[i]);
        let mut taps = Vec::new();
        let mut terminate = false;
        for n in &group.nodes {
            terminate |= n.terminate_on_los;
            for t in &n.taps {
                let ins: Vec<usize> = t.inputs.iter().filter_map(|s| index.get(s).copied()).collect();
                let at = ins
                    .iter()
                    .map(|&i| offset[i] + 1)
                    .chain(t.local.iter().map(|&l| ends.hop(l)))
                    .max()
                    .unwrap_or(0);
                taps.push((t.label, ins, t.local.clone(), at));
            }
        }
        Compiled {
            group,
            streams,
            inputs,
            locals,
            offset,
            order,
            taps,
            terminate,
        }
    }

    fn eval(
        &self,
        k: usize,
        ends: &Endpoints,
        scenario: &FailureScenario,
        stopped: &HashMap<EndpointLabel, usize>,
    ) -> Vec<Frame> {
        let mut out = vec![Frame::default(); self.streams.len()];
        for &i in &self.order {
            let mut f = Frame::default();
            for &j in &self.inputs[i] {
                f ^= out[j];
            }
            for &l in &self.locals[i] {
                f ^= ends.parity(l, k, stopped.get(&l).copied());
            }
            if scenario.hits(self.streams[i].span, k + self.offset[i]) {
                f = Frame { value: 0, alarm: false, los: true };
            }
            out[i] = f;
        }
        out
    }

    fn tap(
        &self,
        tap: &(EndpointLabel, Vec<usize>, Vec<EndpointLabel>, usize),
        frames: &[Frame],
        k: usize,
        ends: &Endpoints,
        stopped: &HashMap<EndpointLabel, usize>,
    ) -> Frame {
        let mut f = Frame::default();
        for &j in &tap.1 {
            f ^= frames[j];
        }
        for &l in &tap.2 {
            f ^= ends.parity(l, k, stopped.get(&l).copied());
        }
        f
    }

    fn hop_total(&self) -> usize {
        self.group.links.len()
    }
}

/// Runs every group for `slots` symbols under `scenario`.
pub fn simulate(
    programs: &Programs,
    topology: &Topology,
    scenario: FailureScenario,
    slots: usize,
    seed: u64,
) -> Result<SimReport, SimError> {
    if let Some(s) = scenario.span {
        if s >= topology.span_count() {
            return Err(SimError::UnknownSpan(s));
        }
    }
    let ends = Endpoints::new(programs, &scenario, slots, seed);
    let mut taps_out: HashMap<EndpointLabel, (Vec<Frame>, usize, usize)> = HashMap::new();
    let mut consistent = true;
    for group in &programs.groups {
        let c = Compiled::new(group, &ends);
        let none = HashMap::new();
        let mut stopped: HashMap<EndpointLabel, usize> = HashMap::new();
        if c.terminate {
            // An endpoint that sees loss on the protection side waits one
            // primary traversal; if its own primary is still lit by then the
            // failure is someone else's and it stops sending parity.
            let mut noticed: HashMap<EndpointLabel, usize> = HashMap::new();
            for k in 0..slots {
                let frames = c.eval(k, &ends, &scenario, &none);
                for tap in &c.taps {
                    if c.tap(tap, &frames, k, &ends, &none).los {
                        noticed.entry(tap.0).or_insert(k + tap.3);
                    }
                }
            }
            for (l, at) in noticed {
                let decide = at + ends.hop(l);
                let dark = (0..slots).any(|k| ends.rx[&l][k].los && k + ends.hop(l) <= decide);
                if !dark {
                    stopped.insert(l, decide);
                }
            }
        }
        let mut collected: HashMap<EndpointLabel, Vec<Frame>> = HashMap::new();
        let position: HashMap<Stream, usize> = c.streams.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        for k in 0..slots {
            let frames = c.eval(k, &ends, &scenario, &stopped);
            for &(s, a, b) in &group.links {
                let x = position.get(&Stream { span: s, from: a });
                let y = position.get(&Stream { span: s, from: b });
                if let (Some(&x), Some(&y)) = (x, y) {
                    consistent &= frames[x].value == frames[y].value;
                }
            }
            for tap in &c.taps {
                let f = c.tap(tap, &frames, k, &ends, &stopped);
                collected.entry(tap.0).or_default().push(f);
            }
        }
        for tap in &c.taps {
            let frames = collected.remove(&tap.0).unwrap_or_default();
            // Relaxed recovery also waits out every other member's hold-off.
            let wait = if c.terminate {
                group.members.iter().map(|&d| ends.hops.get(&d).copied().unwrap_or(0)).max().unwrap_or(0)
            } else {
                ends.hop(tap.0)
            };
            taps_out.insert(tap.0, (frames, tap.3, c.hop_total() + wait));
        }
    }

    let mut demands = BTreeMap::new();
    for &d in programs.primaries.keys() {
        let report = |receiver: EndpointLabel| -> DirectionReport {
            let sender = receiver.partner();
            let expected = ends.own[&sender].clone();
            let rx = &ends.rx[&receiver];
            let own = &ends.own[&receiver];
            let tap = taps_out.get(&receiver);
            let mut delivered = Vec::with_capacity(slots);
            let mut from_protection = 0;
            for k in 0..slots {
                if !rx[k].los {
                    delivered.push(rx[k].value);
                    continue;
                }
                from_protection += 1;
                delivered.push(match tap {
                    Some((frames, _, _)) => {
                        let f = frames[k];
                        if f.alarm {
                            f.value
                        } else {
                            f.value ^ own[k]
                        }
                    }
                    None => 0,
                });
            }
            let wrong: Vec<usize> = (0..slots).filter(|&k| delivered[k] != expected[k]).collect();
            let first_divergence = wrong.first().copied();
            let first_dark = (0..slots).find(|&k| rx[k].los);
            let tap_at = tap.map_or(0, |t| t.1);
            let recovery_delay = match (first_dark, wrong.last()) {
                (None, None) => Some(0),
                (None, Some(_)) => None,
                (Some(k0), last) => {
                    let k = last.map_or(k0, |&w| k0.max(w + 1));
                    (k < slots).then(|| (k + tap_at).saturating_sub(scenario.slot))
                }
            };
            DirectionReport {
                receiver,
                expected,
                delivered,
                first_divergence,
                recovery_delay,
                from_protection,
                delay_bound: 2 * tap.map_or(ends.hop(receiver), |t| t.2),
            }
        };
        demands.insert(d, [report(EndpointLabel::source(d)), report(EndpointLabel::target(d))]);
    }
    Ok(SimReport {
        scenario,
        slots,
        demands,
        parity_consistent: consistent,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepLine {
    pub span: SpanId,
    pub recovered: bool,
    pub max_delay: usize,
    pub lost: Vec<DemandId>,
    pub disturbed: Vec<DemandId>,
    /// Any direction whose recovery took longer than its bound.
    pub over_bound: Vec<DemandId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sweep {
    pub lines: Vec<SweepLine>,
}

impl Sweep {
    pub fn pass(&self) -> bool {
        self.lines.iter().all(|l| l.recovered && l.over_bound.is_empty())
    }

    pub fn max_delay(&self) -> usize {
        self.lines.iter().map(|l| l.max_delay).max().unwrap_or(0)
    }

    /// `span verdict max_delay` lines.
    pub fn to_text(&self, topology: &Topology) -> String {
        let mut out = String::new();
        for l in &self.lines {
            let verdict = match (l.recovered, l.over_bound.is_empty()) {
                (false, _) => "LOST",
                (true, false) => "SLOW",
                (true, true) => "recovered",
            };
            out.push_str(&format!(
                "span {} {} {verdict} max_delay {} disturbed {}\n",
                l.span,
                topology.span_label(l.span),
                l.max_delay,
                l.disturbed.len()
            ));
        }
        out
    }
}

/// Fails every span in turn at a quarter of the horizon and collects verdicts.
pub fn sweep_all_failures(programs: &Programs, topology: &Topology, slots: usize, seed: u64) -> Sweep {
    let at = slots / 4;
    let lines = (0..topology.span_count())
        .into_par_iter()
        .map(|span| {
            let r = simulate(programs, topology, FailureScenario::span(span, at), slots, seed)
                .expect("span exists");
            let over_bound = r
                .demands
                .iter()
                .filter(|(_, ds)| ds.iter().any(|d| d.recovery_delay.is_some_and(|x| x > d.delay_bound)))
                .map(|(&d, _)| d)
                .collect();
            SweepLine {
                span,
                recovered: r.all_recovered(),
                max_delay: r.max_delay(),
                lost: r.lost(),
                disturbed: r.disturbed(),
                over_bound,
            }
        })
        .collect();
    Sweep { lines }
}
