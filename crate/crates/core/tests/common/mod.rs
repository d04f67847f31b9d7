#![allow(dead_code)]

pub mod lp_reader;

use std::collections::BTreeMap;

use cpprot::cpp::{compatible, Mode};
use cpprot::net::{
    candidate_path_pairs, generate_uniform_demands, shortest_path, Demand, DemandId, NodeId, Path, PathConstraints,
    PathPair, Topology,
};
use cpprot::spp::SppSolution;
use cpprot::trail::{GroupTopology, Route};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Four connections in the shape of the classic sharing-vs-coding example:
/// span 5 (A-B) carries every protection path, S1/S4 primaries overlap on
/// U-V, and {S1,S2} / {S3,S4} each share a feeder span into A.
pub fn four_connection_topology() -> Topology {
    let names = [
        "S1", "S2", "S3", "S4", "D1", "D2", "D3", "D4", "A", "B", "P", "Q", "U", "V",
    ];
    let id = |n: &str| names.iter().position(|x| *x == n).unwrap();
    let spans = [
        ("S1", "P", 100.0),
        ("S2", "P", 100.0),
        ("P", "A", 150.0),
        ("S3", "Q", 100.0),
        ("S4", "Q", 100.0),
        ("A", "B", 300.0),
        ("Q", "A", 150.0),
        ("B", "D1", 100.0),
        ("B", "D2", 100.0),
        ("B", "D3", 100.0),
        ("B", "D4", 100.0),
        ("S1", "U", 120.0),
        ("S4", "U", 120.0),
        ("U", "V", 200.0),
        ("V", "D1", 120.0),
        ("V", "D4", 120.0),
        ("S2", "D2", 400.0),
        ("S3", "D3", 400.0),
    ];
    let spans: Vec<_> = spans.iter().map(|&(a, b, l)| (id(a), id(b), l)).collect();
    Topology::new(names.iter().map(|s| s.to_string()).collect(), &spans).unwrap()
}

pub fn four_connection_spp() -> (Topology, SppSolution) {
    let t = four_connection_topology();
    let n = |s: &str| t.node_id(s).unwrap();
    let route = |nodes: &[&str]| {
        let ids: Vec<_> = nodes.iter().map(|s| n(s)).collect();
        Path::from_nodes(&t, &ids).unwrap()
    };
    let demands: Vec<Demand> = (1..=4)
        .map(|k| Demand {
            id: k - 1,
            a: n(&format!("S{k}")),
            b: n(&format!("D{k}")),
            units: 1,
        })
        .collect();
    let routes = [
        (route(&["S1", "U", "V", "D1"]), route(&["S1", "P", "A", "B", "D1"])),
        (route(&["S2", "D2"]), route(&["S2", "P", "A", "B", "D2"])),
        (route(&["S3", "D3"]), route(&["S3", "Q", "A", "B", "D3"])),
        (route(&["S4", "U", "V", "D4"]), route(&["S4", "Q", "A", "B", "D4"])),
    ];
    let pairs = routes
        .into_iter()
        .enumerate()
        .map(|(i, (primary, protection))| PathPair {
            demand: i,
            primary,
            protection,
        })
        .collect();
    let spp = SppSolution::from_pairs(&t, &demands, pairs, vec![0; 4], true);
    (t, spp)
}

/// Two demands on a six-node ladder whose protections share the middle rung
/// span, as in the basic two-connection coding illustration.
pub fn two_connection_spp() -> (Topology, SppSolution) {
    let names = ["S1", "S2", "A", "B", "D1", "D2"];
    let id = |n: &str| names.iter().position(|x| *x == n).unwrap();
    let spans = [
        ("S1", "A", 100.0),
        ("S2", "A", 100.0),
        ("A", "B", 200.0),
        ("B", "D1", 100.0),
        ("B", "D2", 100.0),
        ("S1", "D1", 250.0),
        ("S2", "D2", 250.0),
    ];
    let spans: Vec<_> = spans.iter().map(|&(a, b, l)| (id(a), id(b), l)).collect();
    let t = Topology::new(names.iter().map(|s| s.to_string()).collect(), &spans).unwrap();
    let n = |s: &str| t.node_id(s).unwrap();
    let route = |nodes: &[&str]| {
        let ids: Vec<_> = nodes.iter().map(|s| n(s)).collect();
        Path::from_nodes(&t, &ids).unwrap()
    };
    let demands = vec![
        Demand { id: 0, a: n("S1"), b: n("D1"), units: 1 },
        Demand { id: 1, a: n("S2"), b: n("D2"), units: 1 },
    ];
    let pairs = vec![
        PathPair { demand: 0, primary: route(&["S1", "D1"]), protection: route(&["S1", "A", "B", "D1"]) },
        PathPair { demand: 1, primary: route(&["S2", "D2"]), protection: route(&["S2", "A", "B", "D2"]) },
    ];
    let spp = SppSolution::from_pairs(&t, &demands, pairs, vec![0; 2], true);
    (t, spp)
}

/// A network from node names and `(a, b, km)` spans.
pub fn network(names: &[&str], spans: &[(&str, &str, f64)]) -> Topology {
    let id = |n: &str| names.iter().position(|x| *x == n).unwrap_or_else(|| panic!("no node {n}"));
    let spans: Vec<_> = spans.iter().map(|&(a, b, l)| (id(a), id(b), l)).collect();
    Topology::new(names.iter().map(|s| s.to_string()).collect(), &spans).unwrap()
}

/// Shared-protection solution from explicit `(primary, protection)` node routes.
pub fn spp_from_routes(t: &Topology, routes: &[(&[&str], &[&str])]) -> SppSolution {
    let n = |s: &str| t.node_id(s).unwrap_or_else(|| panic!("no node {s}"));
    let path = |nodes: &[&str]| {
        let ids: Vec<_> = nodes.iter().map(|s| n(s)).collect();
        Path::from_nodes(t, &ids).unwrap()
    };
    let mut demands = Vec::new();
    let mut pairs = Vec::new();
    for (i, (p, q)) in routes.iter().enumerate() {
        demands.push(Demand { id: i, a: n(p[0]), b: n(p[p.len() - 1]), units: 1 });
        pairs.push(PathPair { demand: i, primary: path(p), protection: path(q) });
    }
    SppSolution::from_pairs(t, &demands, pairs, vec![0; routes.len()], true)
}

/// `count` distinct random demands, each on a random one of its first four
/// candidate pairs.
pub fn random_spp(t: &Topology, seed: u64, count: usize) -> SppSolution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all = generate_uniform_demands(t);
    let mut demands: Vec<Demand> = Vec::new();
    while demands.len() < count.min(all.len()) {
        let d = all[rng.gen_range(0..all.len())];
        if demands.iter().all(|x| (x.a, x.b) != (d.a, d.b)) {
            demands.push(Demand { id: demands.len(), ..d });
        }
    }
    let mut pairs = Vec::new();
    let mut choice = Vec::new();
    for d in &demands {
        let c = candidate_path_pairs(t, d, 4).unwrap();
        let p = rng.gen_range(0..c.len());
        choice.push(p);
        pairs.push(c[p].clone());
    }
    SppSolution::from_pairs(t, &demands, pairs, choice, false)
}

/// Random grouping where every group is pairwise compatible under `mode`.
pub fn random_groups(spp: &SppSolution, mode: Mode, seed: u64) -> Vec<Vec<DemandId>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<DemandId> = (0..spp.demand_count()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut groups: Vec<Vec<DemandId>> = Vec::new();
    for d in order {
        let fits: Vec<usize> = (0..groups.len())
            .filter(|&g| groups[g].iter().all(|&m| compatible(spp, d, m, mode)))
            .collect();
        if fits.is_empty() || rng.gen_bool(0.2) {
            groups.push(vec![d]);
        } else {
            groups[fits[rng.gen_range(0..fits.len())]].push(d);
        }
    }
    groups
}

/// Random connected graph: a random spanning tree plus `extra` chords.
pub fn random_network(seed: u64, nodes: usize, extra: usize) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..nodes).map(|i| format!("N{i}")).collect();
    let mut spans: Vec<(usize, usize, f64)> = Vec::new();
    for v in 1..nodes {
        spans.push((rng.gen_range(0..v), v, rng.gen_range(1..=20) as f64 * 10.0));
    }
    let mut tries = 0;
    while spans.len() < nodes - 1 + extra && tries < 1000 {
        tries += 1;
        let (a, b) = (rng.gen_range(0..nodes), rng.gen_range(0..nodes));
        if a != b && !spans.iter().any(|&(x, y, _)| (x, y) == (a, b) || (x, y) == (b, a)) {
            spans.push((a.min(b), a.max(b), rng.gen_range(1..=20) as f64 * 10.0));
        }
    }
    Topology::new(names, &spans).unwrap()
}

/// Random two-edge-connected graph: a ring in random order plus `chords`.
pub fn random_mesh(seed: u64, nodes: usize, chords: usize) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut order: Vec<usize> = (0..nodes).collect();
    for i in (1..nodes).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut spans: Vec<(usize, usize, f64)> = Vec::new();
    let add = |a: usize, b: usize, spans: &mut Vec<(usize, usize, f64)>, rng: &mut ChaCha8Rng| {
        if a != b && !spans.iter().any(|&(x, y, _)| (x, y) == (a.min(b), a.max(b))) {
            spans.push((a.min(b), a.max(b), rng.gen_range(1..=20) as f64 * 10.0));
        }
    };
    for i in 0..nodes {
        add(order[i], order[(i + 1) % nodes], &mut spans, &mut rng);
    }
    for _ in 0..chords * 4 {
        if spans.len() >= nodes + chords {
            break;
        }
        let (a, b) = (rng.gen_range(0..nodes), rng.gen_range(0..nodes));
        add(a, b, &mut spans, &mut rng);
    }
    let names: Vec<String> = (0..nodes).map(|i| format!("N{i}")).collect();
    Topology::new(names, &spans).unwrap()
}

/// Group topology over a physical tree whose member routes are the tree
/// paths between `(source, target)` vertex pairs. Spans no route uses are
/// left out. Demand ids are `first_id..`.
pub fn tree_group(t: &Topology, pairs: &[(NodeId, NodeId)], first_id: DemandId) -> GroupTopology {
    let mut edges = BTreeMap::new();
    let mut routes = BTreeMap::new();
    for (k, &(s, d)) in pairs.iter().enumerate() {
        let path = shortest_path(t, s, d, &PathConstraints::none()).expect("tree is connected");
        let nodes = path.nodes();
        for (i, &sp) in path.spans().iter().enumerate() {
            let (a, b) = (nodes[i], nodes[i + 1]);
            edges.insert(sp, (a.min(b), a.max(b)));
        }
        routes.insert(first_id + k, Route { source: s, target: d, spans: path.spans().to_vec() });
    }
    GroupTopology {
        group: 0,
        members: (first_id..first_id + pairs.len()).collect(),
        vnodes: (0..t.node_count()).collect(),
        edges,
        routes,
    }
}

/// Random tree of up to `max_nodes` vertices with random endpoint pairs;
/// endpoints may share vertices.
pub fn random_tree_group(seed: u64, max_nodes: usize) -> (Topology, GroupTopology) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_nodes.max(2));
    let t = random_network(seed.wrapping_mul(31).wrapping_add(7), n, 0);
    let k = rng.gen_range(1..=(n + 1));
    let pairs: Vec<(NodeId, NodeId)> = (0..k)
        .map(|_| {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            (a, b)
        })
        .collect();
    let g = tree_group(&t, &pairs, 0);
    (t, g)
}
