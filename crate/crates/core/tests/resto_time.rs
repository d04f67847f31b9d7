mod common;

use common::{network, random_groups, random_mesh, random_spp, spp_from_routes};
use cpprot::cpp::{CodingPlan, Mode};
use cpprot::ilp::Limits;
use cpprot::pcycle::{enumerate_cycles, plan_pcycle};
use cpprot::resto::{rt_cpp, rt_pcycle, rt_spp1, rt_spp2, worst_case_report, RtError, RtParams, Scheme};
use cpprot::trail::{TrailChoice, TrailSet};
use cpprot::RtParams64;
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn params(f: f64, m: f64, x: f64, s: f64) -> RtParams64 {
    RtParams {
        f,
        m,
        x,
        s,
        ms_per_km: 0.005,
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL
}

#[test]
fn formulas_match_hand_evaluation() {
    let zero = params(0.0, 0.0, 0.0, 0.0);
    assert_eq!(rt_cpp(0.0, 0, 0, &zero), 0.0);
    assert_eq!(rt_spp1(0.0, 0, 0, &zero), 0.0);
    assert_eq!(rt_spp2(0.0, 0, 0, &zero), 0.0);
    assert_eq!(rt_pcycle(0, 0.0, &zero), 0.0);

    // direct branch 5 + 0.9 + 1 beats 0.5 + 10 + 0.9 + 1.2
    let p = params(0.5, 0.3, 0.0, 1.0);
    assert!(close(rt_cpp(5.0, 3, 2, &p), 6.9));
    assert!(close(rt_spp1(2.0, 1, 2, &params(1.0, 0.3, 5.0, 0.0)), 11.5));
    assert!(close(rt_spp2(1.0, 0, 1, &params(0.0, 0.1, 2.0, 0.0)), 7.5));
    assert!(close(rt_pcycle(6, 10.0, &params(0.5, 0.3, 1.0, 0.0)), 13.3));
}

#[test]
fn notified_branch_wins_when_sync_is_slow() {
    let p = params(0.5, 0.3, 0.0, 50.0);
    let notified = 0.5 + 2.0 * 5.0 + 3.0 * 0.3 + 4.0 * 0.3;
    assert!(close(rt_cpp(5.0, 3, 2, &p), notified));
}

#[test]
fn single_precision_agrees() {
    let p = RtParams::<f32> {
        f: 1.0,
        m: 0.3,
        x: 5.0,
        s: 0.0,
        ms_per_km: 0.005,
    };
    assert!((rt_spp1(2.0f32, 1, 2, &p) - 11.5).abs() < 1e-5);
    let d = RtParams64::default();
    assert_eq!((d.f, d.m, d.s), (0.5, 0.3, 0.0));
}

fn with(p: RtParams64, k: usize, v: f64) -> RtParams64 {
    let mut q = p;
    match k {
        0 => q.f += v,
        1 => q.m += v,
        2 => q.x += v,
        _ => q.s += v,
    }
    q
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]
    #[test]
    fn structural_properties(
        d in 0.0f64..50.0, hb in 0usize..12, his in 0usize..12, h in 3usize..15,
        f in 0.0f64..5.0, m in 0.0f64..2.0, x in 0.0f64..20.0, s in 0.0f64..5.0,
        dx in 0.0f64..10.0, bump in 0.0f64..3.0, which in 0usize..4,
    ) {
        let p = params(f, m, x, s);
        let q = p.with_x(x + dx);
        prop_assert_eq!(rt_cpp(d, hb, his, &p), rt_cpp(d, hb, his, &q));
        prop_assert!((rt_spp1(d, his, hb, &q) - rt_spp1(d, his, hb, &p) - dx).abs() < 1e-9);
        prop_assert!((rt_spp2(d, his, hb, &q) - rt_spp2(d, his, hb, &p) - (hb + 1) as f64 * dx).abs() < 1e-8);
        prop_assert!((rt_pcycle(h, d, &q) - rt_pcycle(h, d, &p) - dx).abs() < 1e-9);
        let notified = f + 2.0 * d + (his + 1) as f64 * m + (hb + 1) as f64 * m;
        prop_assert!(rt_cpp(d, hb, his, &p) <= notified);
        let r = with(p, which, bump);
        prop_assert!(rt_cpp(d, hb, his, &r) >= rt_cpp(d, hb, his, &p));
        prop_assert!(rt_spp1(d, his, hb, &r) >= rt_spp1(d, his, hb, &p));
        prop_assert!(rt_spp2(d, his, hb, &r) >= rt_spp2(d, his, hb, &p));
        prop_assert!(rt_pcycle(h, d, &r) >= rt_pcycle(h, d, &p));
        prop_assert!(rt_cpp(d + bump, hb + 1, his + 1, &p) >= rt_cpp(d, hb, his, &p));
        prop_assert!(rt_spp2(d + bump, his + 1, hb + 1, &p) >= rt_spp2(d, his, hb, &p));
        prop_assert!(rt_pcycle(h + 1, d + bump, &p) >= rt_pcycle(h, d, &p));
    }
}

#[test]
fn single_demand_triangle_report_is_the_hand_formula() {
    let t = network(&["A", "B", "C"], &[("A", "B", 100.0), ("B", "C", 200.0), ("C", "A", 300.0)]);
    let spp = spp_from_routes(&t, &[(&["A", "B"], &["A", "C", "B"])]);
    let coding = CodingPlan::from_groups(&t, &spp, Mode::Strict, vec![vec![0]], false);
    let set = TrailSet::build(&t, &spp, &coding, TrailChoice::LowestSpan).unwrap();
    let cycles = enumerate_cycles(&t, 8, 5000);
    let pc = plan_pcycle(&t, &spp.working, &cycles, &Limits::default()).unwrap();
    let p = params(0.5, 0.3, 0.0, 0.2);
    let xs = [0.5, 1.0, 5.0, 10.0];
    let r = worst_case_report(&spp, &set, Some(&pc), &t, &p, &xs).unwrap();
    assert_eq!(r.rows.len(), 4);
    let d_sd = 100.0 * 0.005;
    for row in &r.rows {
        let x = row.x;
        let want = [
            (Scheme::Cpp, (d_sd + 2.0 * 0.3 + 0.2_f64).min(0.5 + 2.0 * d_sd + 0.3 + 3.0 * 0.3)),
            (Scheme::Spp1, 0.5 + 2.0 * d_sd + 0.3 + x + 3.0 * 0.3),
            (Scheme::Spp2, 0.5 + d_sd + 0.3 + 3.0 * x + 2.0 * d_sd + 6.0 * 0.3),
            // three nodes; longest arc is the loop minus the 100 km span
            (Scheme::PCycle, 0.5 + x + 3.0 * 0.3 + 500.0 * 0.005),
        ];
        assert_eq!(row.cells.len(), 4);
        for (cell, (scheme, v)) in row.cells.iter().zip(want) {
            assert_eq!(cell.scheme, scheme);
            assert!(close(cell.rt, v), "{scheme} at {x}: {} vs {v}", cell.rt);
            assert_eq!((cell.demand, cell.span), (0, 0));
            assert_eq!(cell.h_b, 2);
        }
    }
}

#[test]
fn columns_follow_the_x_slopes_on_random_plans() {
    let xs = [0.5, 1.0, 5.0, 10.0];
    for seed in 0..40u64 {
        let t = random_mesh(seed, 7 + (seed % 5) as usize, 3 + (seed % 4) as usize);
        let spp = random_spp(&t, seed, 6 + (seed % 6) as usize);
        let mode = if seed % 2 == 0 { Mode::Strict } else { Mode::Relaxed };
        let coding = CodingPlan::from_groups(&t, &spp, mode, random_groups(&spp, mode, seed), false);
        let set = TrailSet::build(&t, &spp, &coding, TrailChoice::LowestSpan).unwrap();
        let pc = plan_pcycle(&t, &spp.working, &enumerate_cycles(&t, 8, 5000), &Limits::with_nodes(2000)).unwrap();
        let r = worst_case_report(&spp, &set, Some(&pc), &t, &RtParams64::default(), &xs).unwrap();
        let cpp = r.column(Scheme::Cpp);
        assert!(cpp.iter().all(|c| c.rt == cpp[0].rt && c.demand == cpp[0].demand));
        for scheme in [Scheme::Spp1, Scheme::PCycle] {
            let col = r.column(scheme);
            for k in 1..col.len() {
                assert!(close(col[k].rt - col[k - 1].rt, xs[k] - xs[k - 1]), "seed {seed} {scheme}");
            }
        }
        // the row maximum of an affine family: at least the previous argmax moved by its own slope
        let spp2 = r.column(Scheme::Spp2);
        for k in 1..spp2.len() {
            let moved = spp2[k - 1].rt + (spp2[k - 1].h_b + 1) as f64 * (xs[k] - xs[k - 1]);
            assert!(spp2[k].rt >= moved - TOL);
            if (spp2[k].demand, spp2[k].span) == (spp2[k - 1].demand, spp2[k - 1].span) {
                assert!(close(spp2[k].rt, moved));
            }
        }
    }
}

#[test]
fn mismatched_plans_are_rejected() {
    let (t, spp) = common::four_connection_spp();
    let (t2, spp2) = common::two_connection_spp();
    let coding = CodingPlan::from_groups(&t2, &spp2, Mode::Strict, vec![vec![0, 1]], false);
    let other = TrailSet::build(&t2, &spp2, &coding, TrailChoice::LowestSpan).unwrap();
    let err = worst_case_report(&spp, &other, None, &t, &RtParams64::default(), &[1.0]);
    assert!(matches!(err, Err(RtError::InconsistentPlans(_))));
    let coding = CodingPlan::from_groups(&t, &spp, Mode::Strict, vec![vec![0, 1], vec![2, 3]], false);
    let set = TrailSet::build(&t, &spp, &coding, TrailChoice::LowestSpan).unwrap();
    let r = worst_case_report(&spp, &set, None, &t, &RtParams64::default(), &[1.0]).unwrap();
    assert_eq!(r.rows[0].cells.len(), 3);
    // a p-cycle plan that leaves primary spans bare
    let pc = plan_pcycle(&t, &vec![0; t.span_count()], &enumerate_cycles(&t, 8, 5000), &Limits::default()).unwrap();
    assert!(matches!(
        worst_case_report(&spp, &set, Some(&pc), &t, &RtParams64::default(), &[1.0]),
        Err(RtError::InconsistentPlans(_))
    ));
}
