//! Randomized invariants across the modules.

use proptest::prelude::*;

use faircover::baselines::{evaluate_instance, greedy_robust};
use faircover::benders::{self, BendersLimits, BendersStatus};
use faircover::exact_oracle::{solve_rc, solve_rc_fair, solve_two_stage, OracleOptions};
use faircover::fairness_search::{max_feasible_w, FairnessConfig, SolverChoice, SolverConfig};
use faircover::kadapt_model::{KAdaptConfig, KAdaptModel};
use faircover::netmodel::{
    coverage_indicator, fairness_floors, group_coverage, total_coverage, CoveringScheme, Graph, GroupPartition,
    MonitorSet, Scenario,
};
use faircover::pof_lab::{empirical_pof, generate_sbm, PofConfig, SbmParams};
use faircover::solver_kernel::{solve_milp, Direction, MilpModel, MilpOptions, RowSense, SolveStatus};
use faircover::uncertainty::{label_of, UncertaintySet};
use faircover::Instance;

const CAP: u128 = 1_000_000;

#[derive(Debug, Clone)]
struct Net {
    n: usize,
    edges: Vec<(usize, usize)>,
    groups: Vec<usize>,
}

impl Net {
    fn graph(&self) -> Graph {
        Graph::new(self.n, self.edges.iter().copied()).unwrap()
    }

    fn partition(&self) -> GroupPartition {
        GroupPartition::new(self.groups.clone()).unwrap()
    }

    fn instance(&self, i: usize, j: usize) -> Instance {
        Instance::with_budget(self.graph(), self.partition(), i, j).unwrap()
    }
}

fn net(n_max: usize) -> impl Strategy<Value = Net> {
    (2..=n_max).prop_flat_map(|n| {
        let edges = proptest::collection::vec(any::<bool>(), n * n);
        let groups = proptest::collection::vec(0..3usize, n);
        (Just(n), edges, groups).prop_map(|(n, adj, raw)| {
            let edges = (0..n)
                .flat_map(|v| (0..n).map(move |u| (v, u)))
                .filter(|&(v, u)| v != u && adj[v * n + u])
                .collect();
            let mut ids: Vec<usize> = raw.clone();
            ids.sort_unstable();
            ids.dedup();
            let groups = raw.iter().map(|g| ids.binary_search(g).unwrap()).collect();
            Net { n, edges, groups }
        })
    })
}

fn bools(n: usize) -> impl Strategy<Value = Vec<bool>> {
    proptest::collection::vec(any::<bool>(), n)
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn coverage_is_monotone_and_additive(
        (g, x, xi, extra) in net(9).prop_flat_map(|g| { let n = g.n; (Just(g), bools(n), bools(n), bools(n)) })
    ) {
        let graph = g.graph();
        let part = g.partition();
        let x = MonitorSet(x);
        let xi = Scenario(xi);
        let wider = MonitorSet(x.0.iter().zip(&extra).map(|(a, b)| *a || *b).collect());
        let freer = Scenario(xi.0.iter().zip(&extra).map(|(a, b)| *a || *b).collect());
        let base = coverage_indicator(&graph, &x, &xi).unwrap();
        for more in [coverage_indicator(&graph, &wider, &xi).unwrap(), coverage_indicator(&graph, &x, &freer).unwrap()] {
            prop_assert!(base.0.iter().zip(&more.0).all(|(a, b)| !a || *b));
        }
        let per_group = group_coverage(&graph, &part, &x, &xi).unwrap();
        prop_assert_eq!(per_group.iter().sum::<usize>(), total_coverage(&graph, &x, &xi).unwrap());
        prop_assert_eq!(&base, &coverage_indicator(&graph, &x, &xi).unwrap());
    }

    #[test]
    fn floors_are_bounded_and_monotone(g in net(9), a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let part = g.partition();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (fl, fh) = (fairness_floors(&part, lo), fairness_floors(&part, hi));
        for c in 0..part.group_count() {
            prop_assert!(fl[c] <= fh[c]);
            prop_assert!(fh[c] <= part.size(c));
            prop_assert!(fh[c] as f64 >= hi * part.size(c) as f64 - 1e-9);
        }
    }

    #[test]
    fn budget_sets_enumerate_and_close_upward(n in 1..=8usize, j in 0..=3usize, up in bools(8)) {
        let u = UncertaintySet::budget(n, j);
        let all = u.scenarios(CAP).unwrap();
        let expect: u128 = (0..=j.min(n)).map(|k| binomial(n, k)).sum();
        prop_assert_eq!(all.len() as u128, expect);
        prop_assert_eq!(u.enumeration_size(), expect);
        for xi in &all {
            prop_assert!(u.contains(xi).unwrap());
            let raised = Scenario(xi.0.iter().zip(&up).map(|(a, b)| *a || *b).collect());
            prop_assert!(u.contains(&raised).unwrap());
        }
        let keys: Vec<(usize, Vec<usize>)> = all.iter().map(|xi| (xi.failures().len(), xi.failures())).collect();
        prop_assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn own_coverage_labels_feasible(
        (g, x, failed) in net(8).prop_flat_map(|g| { let n = g.n; (Just(g), bools(n), proptest::collection::vec(0..n, 0..=2)) })
    ) {
        let graph = g.graph();
        let u = UncertaintySet::budget(g.n, 2);
        let x = MonitorSet(x);
        let xi = Scenario::with_failures(g.n, &failed);
        let y = coverage_indicator(&graph, &x, &xi).unwrap();
        let label = label_of(&u, &graph, &x, &[y.clone(), CoveringScheme::zeros(g.n)], &xi).unwrap();
        prop_assert_eq!(label.0, vec![0, 0]);
    }

    #[test]
    fn binary_programs_match_enumeration(
        (obj, rows) in (3..=14usize).prop_flat_map(|n| (
            proptest::collection::vec(-6..=9i32, n),
            proptest::collection::vec((proptest::collection::vec(-3..=5i32, n), -2..=12i32, any::<bool>()), 1..=4),
        ))
    ) {
        let n = obj.len();
        let mut m = MilpModel::new(Direction::Maximize);
        let x: Vec<_> = (0..n).map(|k| m.add_binary(format!("x{k}"), obj[k] as f64)).collect();
        for (r, (coef, rhs, ge)) in rows.iter().enumerate() {
            let sense = if *ge { RowSense::Ge } else { RowSense::Le };
            m.add_row(format!("r{r}"), x.iter().zip(coef).map(|(&v, &c)| (v, c as f64)), sense, *rhs as f64);
        }
        let best = (0u32..1 << n)
            .filter(|s| rows.iter().all(|(coef, rhs, ge)| {
                let lhs: i32 = (0..n).filter(|k| s >> k & 1 == 1).map(|k| coef[k]).sum();
                if *ge { lhs >= *rhs } else { lhs <= *rhs }
            }))
            .map(|s| (0..n).filter(|k| s >> k & 1 == 1).map(|k| obj[k]).sum::<i32>())
            .max();
        let report = solve_milp(&m, &MilpOptions { trace: true, ..Default::default() });
        match best {
            None => prop_assert_eq!(report.status, SolveStatus::Infeasible),
            Some(b) => {
                prop_assert_eq!(report.status, SolveStatus::Optimal);
                prop_assert!((report.objective.unwrap() - b as f64).abs() < 1e-6);
                let sol = report.solution.as_ref().unwrap();
                for (coef, rhs, ge) in &rows {
                    let lhs: f64 = x.iter().zip(coef).map(|(v, &c)| sol[v.0] * c as f64).sum();
                    let ok = if *ge { lhs >= *rhs as f64 - 1e-7 } else { lhs <= *rhs as f64 + 1e-7 };
                    prop_assert!(ok);
                }
            }
        }
        for w in report.trace.windows(2) {
            prop_assert!(w[1].bound <= w[0].bound + 1e-9);
            if let (Some(a), Some(b)) = (w[0].incumbent, w[1].incumbent) {
                prop_assert!(b >= a - 1e-9);
            }
            prop_assert!(w[0].incumbent.is_none() || w[1].incumbent.is_some());
        }
    }

    #[test]
    fn worst_case_evaluation(
        (g, x) in net(8).prop_flat_map(|g| { let n = g.n; (Just(g), bools(n)) })
    ) {
        let x = MonitorSet(x);
        let totals: Vec<usize> = (0..=3)
            .map(|j| evaluate_instance(&g.instance(g.n, j), &x, CAP).unwrap().total)
            .collect();
        let nominal = total_coverage(&g.graph(), &x, &Scenario::ones(g.n)).unwrap();
        prop_assert_eq!(totals[0], nominal);
        prop_assert!(totals.windows(2).all(|w| w[1] <= w[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn oracle_orderings(g in net(6), i in 1..=3usize, j in 0..=1usize) {
        let inst = g.instance(i, j);
        let opts = OracleOptions::default();
        let rc = solve_rc(&inst, &opts).unwrap().optimum.unwrap();
        let mut prev = Some(rc);
        for w in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
            let fair = solve_rc_fair(&inst, w, &opts).unwrap().optimum;
            prop_assert_eq!(fair, solve_two_stage(&inst, w, &opts).unwrap().optimum);
            prop_assert!(fair.is_none() || fair <= prev);
            prop_assert!(fair.is_none_or(|f| f <= rc));
            prev = fair;
        }
    }

    #[test]
    fn greedy_meets_its_guarantee(g in net(8), i in 1..=3usize) {
        let inst = g.instance(i, 0);
        let opt = solve_rc(&inst, &OracleOptions::default()).unwrap().optimum.unwrap();
        let x = greedy_robust(&inst, CAP).unwrap();
        prop_assert!(x.count_ones() <= i);
        let got = evaluate_instance(&inst, &x, CAP).unwrap().total;
        prop_assert!(got as f64 >= (1.0 - (-1.0f64).exp()) * opt as f64 - 1e-9);
    }

    #[test]
    fn kadaptable_values_sandwich(g in net(6), i in 1..=2usize, j in 0..=1usize, w in prop::sample::select(vec![0.0, 0.3])) {
        let inst = g.instance(i, j).with_w(w).unwrap();
        let oracle = solve_two_stage(&inst, w, &OracleOptions::default()).unwrap().optimum;
        let mut prev: Option<usize> = None;
        for k in 1..=2 {
            for cuts in [true, false] {
                let cfg = KAdaptConfig { valid_cuts: cuts, ..KAdaptConfig::new(k) };
                let model = KAdaptModel::build_full(&inst, &cfg).unwrap();
                let report = model.solve(&MilpOptions::default());
                let value = match report.status {
                    SolveStatus::Optimal => Some(model.extract_solution(&report, CAP).unwrap().tau),
                    SolveStatus::Infeasible => None,
                    other => return Err(TestCaseError::fail(format!("status {other:?}"))),
                };
                prop_assert!(value.is_none() || (oracle.is_some() && value <= oracle));
                prop_assert!(prev.is_none() || (value.is_some() && prev <= value));
                if cuts {
                    prev = value;
                }
            }
        }
    }

    #[test]
    fn block_generation_progress(g in net(6), i in 1..=2usize, j in 0..=1usize, cuts in any::<bool>()) {
        let inst = g.instance(i, j);
        let cfg = KAdaptConfig { valid_cuts: cuts, ..KAdaptConfig::new(2) };
        let out = benders::run(&inst, &cfg, &BendersLimits::default()).unwrap();
        prop_assert_eq!(out.status, BendersStatus::Certified);
        let log = &out.state.log;
        let mut seen = std::collections::HashSet::new();
        for r in log.iter().filter(|r| r.event == "block") {
            prop_assert!(seen.insert(r.label.clone().unwrap()));
        }
        for w in log.windows(2).filter(|w| w[0].big_m == w[1].big_m) {
            prop_assert!(w[1].objective <= w[0].objective + 1e-6);
        }
        let full = KAdaptModel::build_full(&inst, &KAdaptConfig::new(2)).unwrap();
        let report = full.solve(&MilpOptions::default());
        prop_assert_eq!(report.objective.map(|o| o.round() as usize), out.tau());
    }

    #[test]
    fn fairness_search_agrees_with_sweep(g in net(6), i in 1..=3usize, j in 0..=1usize) {
        let inst = g.instance(i, j);
        let mut cfg = FairnessConfig::new(SolverConfig::new(SolverChoice::Oracle, 1));
        let fast = max_feasible_w(&inst, &cfg).unwrap();
        cfg.full_sweep = true;
        let sweep = max_feasible_w(&inst, &cfg).unwrap();
        prop_assert!(sweep.monotone());
        prop_assert_eq!(fast.w, sweep.w);
        prop_assert_eq!(fast.outcome.tau, sweep.outcome.tau);
        let x = fast.outcome.x.unwrap();
        let report = evaluate_instance(&inst.clone().with_w(fast.w).unwrap(), &x, CAP).unwrap();
        for grp in &report.groups {
            prop_assert!(grp.covered >= fairness_floors(&inst.groups, fast.w)[grp.group]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sbm_edges_are_symmetric_and_reproducible(small in 2..=20usize, extra in 0..=20usize, a in 0.5..4.0f64, seed in any::<u64>()) {
        let params = SbmParams::uniform(vec![small, small + extra], a, 1.0, seed).unwrap();
        let (g, p) = generate_sbm(&params).unwrap();
        let (g2, _) = generate_sbm(&params).unwrap();
        prop_assert_eq!(&g, &g2);
        prop_assert!(g.is_symmetric());
        prop_assert_eq!(p.sizes(), vec![small, small + extra]);
    }
}

#[test]
fn sbm_density_tracks_p_in() {
    let params = SbmParams::uniform(vec![60, 60], 6.0, 0.0, 3).unwrap();
    let mut within = 0usize;
    let samples = 40;
    for s in 0..samples {
        let (g, _) = generate_sbm(&SbmParams { seed: s, ..params.clone() }).unwrap();
        within += g.edges().count() / 2;
    }
    let pairs = 2.0 * (60.0 * 59.0 / 2.0) * samples as f64;
    let rate = within as f64 / pairs;
    let p = params.p_in(0);
    let sd = (p * (1.0 - p) / pairs).sqrt();
    assert!((rate - p).abs() < 5.0 * sd, "rate {rate} vs {p}");
}

#[test]
fn empirical_pof_is_a_ratio_of_means() {
    let params = SbmParams::uniform(vec![5, 7], 3.0, 1.0, 11).unwrap();
    let cfg = PofConfig::new(2, 0, 6, FairnessConfig::new(SolverConfig::new(SolverChoice::Oracle, 1)));
    let report = empirical_pof(&params, &cfg).unwrap();
    let n = report.per_sample.len() as f64;
    let mean_opt = report.per_sample.iter().map(|s| s.opt as f64).sum::<f64>() / n;
    let mean_fair = report.per_sample.iter().map(|s| s.opt_fair as f64).sum::<f64>() / n;
    assert!((report.mean_opt - mean_opt).abs() < 1e-12);
    assert!((report.mean_opt_fair - mean_fair).abs() < 1e-12);
    assert!((report.empirical - (1.0 - mean_fair / mean_opt)).abs() < 1e-12);
}
