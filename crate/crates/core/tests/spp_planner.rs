mod common;

use cpprot::ilp::Limits;
use cpprot::net::{
    candidate_path_pairs, datasets, generate_uniform_demands, Demand, Path, PathPair, Topology,
};
use cpprot::spp::{
    capacity_cost, compute_scp, dedicated_spare, plan_spp, sharing_compatibility, SppError,
    SppSolution,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn triangle() -> Topology {
    Topology::new(
        vec!["A".into(), "B".into(), "C".into()],
        &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)],
    )
    .unwrap()
}

#[test]
fn single_demand_pays_full_protection() {
    let t = triangle();
    let d = vec![Demand { id: 0, a: 0, b: 1, units: 1 }];
    let cands = vec![candidate_path_pairs(&t, &d[0], 1).unwrap()];
    let s = plan_spp(&t, &d, &cands, &Limits::default()).unwrap();
    assert!(s.optimal);
    assert_eq!(s.spare_cost, s.pairs[0].protection.cost(&t));
    assert_eq!(s.working_cost, s.pairs[0].primary.cost(&t));
}

/// Square A-B-C-D with diagonal; both protections cross span A-C.
fn square_pairs(shared_primary: bool) -> (Topology, Vec<Demand>, Vec<PathPair>) {
    let t = Topology::new(
        ["A", "B", "C", "D", "E"].iter().map(|s| s.to_string()).collect(),
        &[
            (0, 1, 1.0),
            (1, 2, 1.0),
            (2, 3, 1.0),
            (3, 0, 1.0),
            (0, 2, 1.0),
            (1, 4, 1.0),
            (4, 3, 1.0),
        ],
    )
    .unwrap();
    let p = |nodes: &[usize]| Path::from_nodes(&t, nodes).unwrap();
    let (prim0, prim1) = if shared_primary {
        // both primaries use B-E
        (p(&[0, 1, 4, 3, 2]), p(&[1, 4, 3]))
    } else {
        (p(&[0, 1, 2]), p(&[0, 3, 2]))
    };
    let pairs = if shared_primary {
        vec![
            PathPair { demand: 0, primary: prim0, protection: p(&[0, 2]) },
            PathPair { demand: 1, primary: prim1, protection: p(&[1, 0, 2, 3]) },
        ]
    } else {
        vec![
            PathPair { demand: 0, primary: prim0, protection: p(&[0, 2]) },
            PathPair { demand: 1, primary: prim1, protection: p(&[0, 2]) },
        ]
    };
    let demands = pairs
        .iter()
        .enumerate()
        .map(|(i, pp)| Demand { id: i, a: pp.primary.source(), b: pp.primary.target(), units: 1 })
        .collect();
    (t, demands, pairs)
}

#[test]
fn disjoint_primaries_share_one_unit() {
    let (t, d, pairs) = square_pairs(false);
    let s = SppSolution::from_pairs(&t, &d, pairs, vec![0, 0], true);
    let ac = t.span_between(0, 2).unwrap();
    assert_eq!(s.spare[ac], 1);
    assert!(sharing_compatibility(&s, 0, 1).unwrap());
}

#[test]
fn overlapping_primaries_cannot_share() {
    let (t, d, pairs) = square_pairs(true);
    let s = SppSolution::from_pairs(&t, &d, pairs, vec![0, 0], true);
    let ac = t.span_between(0, 2).unwrap();
    assert_eq!(s.spare[ac], 2);
    assert!(!sharing_compatibility(&s, 1, 0).unwrap());
}

#[test]
fn four_connection_compatibility() {
    let (_, s) = common::four_connection_spp();
    assert!(!sharing_compatibility(&s, 0, 3).unwrap());
    assert!(sharing_compatibility(&s, 2, 0).unwrap());
    assert!(sharing_compatibility(&s, 2, 3).unwrap());
    assert_eq!(sharing_compatibility(&s, 1, 1), Err(SppError::SameDemand(1)));
    assert_eq!(sharing_compatibility(&s, 1, 9), Err(SppError::UnknownDemand(9)));
    // the span into which every protection converges holds two units
    assert_eq!(s.spare[5], 2);
}

#[test]
fn scp_percentages() {
    assert_eq!(compute_scp(10, 0).unwrap(), 0.0);
    assert_eq!(compute_scp(10, 10).unwrap(), 100.0);
    assert!(matches!(compute_scp(0, 5), Err(SppError::Domain(_))));
}

#[test]
fn empty_candidate_list_is_infeasible() {
    let t = triangle();
    let d = vec![Demand { id: 0, a: 0, b: 1, units: 1 }];
    assert_eq!(
        plan_spp(&t, &d, &[Vec::new()], &Limits::default()),
        Err(SppError::Infeasible(0))
    );
}

fn random_instance(t: &Topology, seed: u64, count: usize, k: usize) -> (Vec<Demand>, Vec<Vec<PathPair>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all = generate_uniform_demands(t);
    let mut demands: Vec<Demand> = Vec::new();
    while demands.len() < count {
        let d = all[rng.gen_range(0..all.len())];
        if demands.iter().all(|x| (x.a, x.b) != (d.a, d.b)) {
            demands.push(Demand { id: demands.len(), units: rng.gen_range(1..=2), ..d });
        }
    }
    let cands = demands
        .iter()
        .map(|d| candidate_path_pairs(t, d, k).unwrap())
        .collect();
    (demands, cands)
}

fn brute_force(t: &Topology, demands: &[Demand], cands: &[Vec<PathPair>]) -> i64 {
    let mut best = i64::MAX;
    let mut idx = vec![0usize; demands.len()];
    loop {
        let pairs = idx.iter().enumerate().map(|(i, &p)| cands[i][p].clone()).collect();
        let s = SppSolution::from_pairs(t, demands, pairs, idx.clone(), false);
        best = best.min(s.total_cost());
        let mut k = 0;
        loop {
            if k == idx.len() {
                return best;
            }
            idx[k] += 1;
            if idx[k] < cands[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn small_instances_match_exhaustive_search() {
    for (net, t) in [("cost239", datasets::cost239()), ("nsfnet", datasets::nsfnet())] {
        for seed in 0..15 {
            let count = 1 + (seed as usize % 3);
            let (demands, cands) = random_instance(&t, seed, count, 3);
            let s = plan_spp(&t, &demands, &cands, &Limits::default()).unwrap();
            assert!(s.optimal, "{net} seed {seed}");
            assert_eq!(s.total_cost(), brute_force(&t, &demands, &cands), "{net} seed {seed}");
        }
    }
}

#[test]
fn text_round_trip() {
    let t = datasets::nsfnet();
    let (demands, cands) = random_instance(&t, 4, 6, 3);
    let s = plan_spp(&t, &demands, &cands, &Limits::default()).unwrap();
    let text = s.to_text(&t);
    let back = SppSolution::from_text(&t, &text).unwrap();
    assert_eq!(back, s);
    let tampered = text.replacen("spare 1", "spare 7", 1);
    assert!(SppSolution::from_text(&t, &tampered).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn restorable_and_sharing_helps(seed in any::<u64>(), count in 2usize..9) {
        let t = datasets::cost239();
        let (demands, cands) = random_instance(&t, seed, count, 3);
        let s = plan_spp(&t, &demands, &cands, &Limits::with_nodes(200)).unwrap();
        for e in 0..t.span_count() {
            for f in 0..t.span_count() {
                if e == f {
                    continue;
                }
                let load: u32 = demands
                    .iter()
                    .zip(&s.pairs)
                    .filter(|(_, p)| p.primary.contains_span(f) && p.protection.contains_span(e))
                    .map(|(d, _)| d.units)
                    .sum();
                prop_assert!(load <= s.spare[e]);
            }
        }
        let dedicated = capacity_cost(&t, &dedicated_spare(&t, &demands, &s.pairs));
        prop_assert!(dedicated >= s.spare_cost);
        for i in 0..count {
            for j in 0..count {
                if i != j {
                    prop_assert_eq!(sharing_compatibility(&s, i, j).unwrap(),
                        sharing_compatibility(&s, j, i).unwrap());
                    prop_assert_eq!(s.d_table[i][0], s.pairs[i].protection.contains_span(0));
                }
            }
        }
    }
}
