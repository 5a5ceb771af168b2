use std::collections::BTreeSet;

use hfgt_lca::equivalence::{
    decompose_conversion_transportation, reduce_to_lca, transportation_dominance,
    verify_equivalence, EquivalenceVerdict,
};
use hfgt_lca::esn::{
    simulate, simulate_simplified, simplified_step, step, EsnState, FiringSchedule, Nonnegativity,
    SimOptions,
};
use hfgt_lca::lca::{solve_lca, SolveOptions};
use hfgt_lca::synth::{allocation_model, mixed_model, random_counts, random_net, rng, triangular_lca_model};
use hfgt_lca::{Analysis, ExactNet, ExactState};
use num_rational::Rational64;
use proptest::prelude::*;
use rand::Rng;

fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn capability_count_matches_allocations(seed in any::<u64>(), p in 1usize..6, nr in 1usize..6) {
        let per = 1 + (seed as usize) % nr;
        let raw = allocation_model(&mut rng(seed), p, nr, per);
        let a: Analysis = Analysis::new(&raw).unwrap();
        let mut expected = 0;
        for _process in 0..p {
            for _pick in 0..per {
                expected += 1;
            }
        }
        prop_assert_eq!(a.capabilities.len(), expected);
        prop_assert_eq!(a.net.n_transitions(), expected);
        prop_assert_eq!(a.net.n_places(), raw.operands.len() * raw.resources.len());
    }

    #[test]
    fn capabilities_preserve_operand_sets(seed in any::<u64>(), n in 1usize..7, k in 0usize..4) {
        let (raw, _) = triangular_lca_model(&mut rng(seed), n, k);
        let a: Analysis = Analysis::new(&raw).unwrap();
        for cap in a.capabilities.iter() {
            let process = &a.model.processes[cap.process];
            let ops = |fs: &[hfgt_lca::model::PlacedFlow<f64>]| fs.iter().map(|f| f.operand).collect::<BTreeSet<_>>();
            let want_in: BTreeSet<_> = process.inputs.iter().map(|f| f.operand).collect();
            let want_out: BTreeSet<_> = process.outputs.iter().map(|f| f.operand).collect();
            prop_assert_eq!(ops(&cap.pulls), want_in);
            prop_assert_eq!(ops(&cap.injects), want_out);
        }
    }

    #[test]
    fn resource_partition_is_exhaustive(seed in any::<u64>(), sites in 2usize..5, c in 1usize..4, t in 0usize..4) {
        let (raw, _) = mixed_model(&mut rng(seed), sites, c, t);
        let a: Analysis = Analysis::new(&raw).unwrap();
        let part = &a.model.partition;
        let mut all: Vec<usize> = part.transformation.iter()
            .chain(&part.independent_buffers)
            .chain(&part.transportation)
            .copied()
            .collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..raw.resources.len()).collect::<Vec<_>>());
        prop_assert_eq!(a.model.buffers.len(), part.transformation.len() + part.independent_buffers.len());
    }

    #[test]
    fn incidence_matches_brute_force(seed in any::<u64>(), sites in 2usize..5, c in 1usize..4, t in 0usize..4) {
        let (raw, _) = mixed_model(&mut rng(seed), sites, c, t);
        let a: Analysis = Analysis::new(&raw).unwrap();
        let nb = a.model.buffers.len();
        let rows = a.model.operands.len() * nb;
        let mut m = vec![vec![0.0; a.capabilities.len()]; rows];
        let mut ones = 0;
        for cap in a.capabilities.iter() {
            for f in &cap.pulls {
                m[f.operand * nb + f.buffer][cap.index] -= f.weight;
                ones += 1;
            }
            for f in &cap.injects {
                m[f.operand * nb + f.buffer][cap.index] += f.weight;
                ones += 1;
            }
        }
        prop_assert_eq!(a.incidence.binary_neg.count_ones() + a.incidence.binary_pos.count_ones(), ones);
        for (row, values) in m.iter().enumerate() {
            for (col, v) in values.iter().enumerate() {
                prop_assert!(close(a.incidence.net.get(row, col), *v, 1e-15));
            }
        }
        for (row, col, w) in a.incidence.weighted_neg.triplets() {
            let (o, b) = (row / nb, row % nb);
            prop_assert!(w > 0.0);
            prop_assert_eq!(a.incidence.binary_neg.get(o, b, col), 1);
        }
        prop_assert_eq!(a.incidence.weighted_neg.nnz(), a.incidence.binary_neg.count_ones());
        prop_assert_eq!(a.incidence.weighted_pos.nnz(), a.incidence.binary_pos.count_ones());
    }

    #[test]
    fn zero_row_elimination_keeps_exactly_nonzero_rows(seed in any::<u64>(), n in 1usize..7, k in 0usize..4) {
        let (raw, _) = triangular_lca_model(&mut rng(seed), n, k);
        let a: Analysis = Analysis::new(&raw).unwrap();
        let reduced = a.incidence.eliminate_zero_rows();
        for row in 0..a.incidence.n_places() {
            let nonzero = (0..a.incidence.n_capabilities()).any(|c| a.incidence.net.get(row, c) != 0.0);
            prop_assert_eq!(reduced.position(row).is_some(), nonzero);
        }
        for (i, &flat) in reduced.retained.iter().enumerate() {
            for c in 0..reduced.matrix.ncols() {
                prop_assert_eq!(reduced.matrix.get(i, c), a.incidence.net.get(flat, c));
            }
        }
    }

    #[test]
    fn solve_is_linear_in_demand(seed in any::<u64>(), n in 1usize..8, alpha in 0.1f64..10.0, beta in 0.1f64..10.0) {
        let mut g = rng(seed);
        let (raw, y1) = triangular_lca_model(&mut g, n, 3);
        let y2: Vec<f64> = (0..n).map(|_| g.gen_range(0.0..100.0)).collect();
        let a: Analysis = Analysis::new(&raw).unwrap();
        let base = a.lca_problem().unwrap();
        let solve = |y: Vec<f64>| solve_lca(&base.clone().with_demand(y).unwrap(), SolveOptions::default()).unwrap();
        let e1 = solve(y1.clone());
        let e2 = solve(y2.clone());
        let mix: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| alpha * a + beta * b).collect();
        let e = solve(mix.clone());
        for i in 0..e.aspects.len() {
            prop_assert!(close(e.aspects[i], alpha * e1.aspects[i] + beta * e2.aspects[i], 1e-9));
        }
        let bound = SolveOptions::default().residual_tolerance * mix.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(e.residual <= bound);
        prop_assert!(e.reliable);
    }

    #[test]
    fn triangular_solve_matches_substitution(seed in any::<u64>(), n in 1usize..10) {
        let (raw, y) = triangular_lca_model(&mut rng(seed), n, 2);
        let a: Analysis = Analysis::new(&raw).unwrap();
        let p = a.lca_problem().unwrap();
        let t = &p.technology;
        for i in 0..n {
            for j in i + 1..n {
                prop_assert_eq!(t[(i, j)], 0.0);
            }
        }
        let mut x = vec![0.0; n];
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= t[(i, j)] * x[j];
            }
            x[i] = s / t[(i, i)];
        }
        let got = solve_lca(&p.clone().with_demand(y.clone()).unwrap(), SolveOptions::default()).unwrap();
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            prop_assert!((got.scaling[i] - x[i]).abs() <= 1e-12 * scale);
        }
        let b = &p.environmental;
        for k in 0..b.nrows() {
            let mut e = 0.0;
            for j in 0..n {
                e += b[(k, j)] * x[j];
            }
            prop_assert!(close(got.aspects[k], e, 1e-12));
        }
    }

    #[test]
    fn assembled_and_reduced_problems_agree(seed in any::<u64>(), n in 1usize..8, k in 1usize..4) {
        let (raw, _) = triangular_lca_model(&mut rng(seed), n, k);
        let a: Analysis = Analysis::new(&raw).unwrap();
        let products = a.product_assignment().unwrap();
        let assembled = a.lca_problem().unwrap();
        let reduced = reduce_to_lca(&a.model, &a.capabilities, &a.incidence, &products, &a.model.aspects).unwrap();
        prop_assert_eq!(&reduced.problem.technology, &assembled.technology);
        prop_assert_eq!(&reduced.problem.environmental, &assembled.environmental);
        prop_assert_eq!(&reduced.problem.aspect_labels, &assembled.aspect_labels);
    }

    #[test]
    fn one_to_one_models_are_equivalent(seed in any::<u64>(), n in 1usize..8, k in 1usize..4) {
        let (raw, y) = triangular_lca_model(&mut rng(seed), n, k);
        let a: Analysis = Analysis::new(&raw).unwrap();
        let products = a.product_assignment().unwrap();
        let rep = verify_equivalence(&a.model, &a.capabilities, &a.incidence, &products, &a.model.aspects, &y).unwrap();
        prop_assert!(rep.assumptions.all_held());
        prop_assert_eq!(rep.verdict, EquivalenceVerdict::Equivalent);
        prop_assert!(rep.relative_discrepancy.unwrap() <= 1e-6);
    }

    #[test]
    fn step_follows_recurrences_exactly(seed in any::<u64>(), np in 1usize..8, nt in 1usize..6) {
        let mut g = rng(seed);
        let net: ExactNet = random_net(&mut g, np, nt, 0.4, 5);
        let dt = r(g.gen_range(1..4), g.gen_range(1..4));
        let qb: Vec<Rational64> = random_counts(&mut g, np, 20);
        let complete: Vec<Rational64> = random_counts(&mut g, nt, 5);
        let extra: Vec<Rational64> = random_counts(&mut g, nt, 5);
        let initiate: Vec<Rational64> = random_counts(&mut g, nt, 5);
        // enough in flight that Q_E stays nonnegative
        let qe: Vec<Rational64> = complete.iter().zip(&extra).map(|(c, e)| *c * dt + *e).collect();
        let state = ExactState { place_marking: qb.clone(), transition_marking: qe.clone(), k: 3, dt };
        let next = step(&net, &state, &initiate, &complete, Nonnegativity::Unbounded).unwrap().state;
        for p in 0..np {
            let mut want = qb[p];
            for t in 0..nt {
                want += net.pos.get(p, t) * complete[t] * dt;
                want -= net.neg.get(p, t) * initiate[t] * dt;
            }
            prop_assert_eq!(next.place_marking[p], want);
        }
        for t in 0..nt {
            prop_assert_eq!(next.transition_marking[t], qe[t] + (initiate[t] - complete[t]) * dt);
        }
        let before: Rational64 = qe.iter().sum();
        let after: Rational64 = next.transition_marking.iter().sum();
        let fired: Rational64 = initiate.iter().zip(&complete).map(|(a, b)| (*a - *b) * dt).sum();
        prop_assert_eq!(after - before, fired);
        prop_assert_eq!(next.k, 4);
    }

    #[test]
    fn instantaneous_step_collapses_to_simplified(seed in any::<u64>(), np in 1usize..8, nt in 1usize..6) {
        let mut g = rng(seed);
        let net: ExactNet = random_net(&mut g, np, nt, 0.5, 4);
        let qb: Vec<Rational64> = random_counts(&mut g, np, 10);
        let u: Vec<Rational64> = random_counts(&mut g, nt, 6);
        let state = ExactState { place_marking: qb, transition_marking: random_counts(&mut g, nt, 3), k: 1, dt: r(1, 2) };
        let full = step(&net, &state, &u, &u, Nonnegativity::Unbounded).unwrap().state;
        let simple = simplified_step(&net, &state, &u, Nonnegativity::Unbounded).unwrap().state;
        prop_assert_eq!(full, simple);
    }

    #[test]
    fn simulation_delta_is_incidence_times_total_firing(seed in any::<u64>(), np in 1usize..8, nt in 1usize..6, horizon in 2usize..7) {
        let mut g = rng(seed);
        let net: ExactNet = random_net(&mut g, np, nt, 0.5, 4);
        let dt = r(1, g.gen_range(1..5));
        let firings: Vec<Vec<Rational64>> = (1..horizon).map(|_| random_counts(&mut g, nt, 5)).collect();
        let traj = simulate_simplified(&net, EsnState::zeros(&net, dt), &firings, horizon, &SimOptions::default()).unwrap();
        let mut total = vec![r(0, 1); nt];
        for u in &firings {
            for t in 0..nt {
                total[t] += u[t];
            }
        }
        let want: Vec<Rational64> = net.net.mul_vec(&total).into_iter().map(|v| v * dt).collect();
        prop_assert_eq!(traj.delta_place_marking(), want);
        prop_assert_eq!(traj.horizon(), horizon);
    }

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>()) {
        let run = || {
            let mut g = rng(seed);
            let net = random_net::<f64, _>(&mut g, 6, 4, 0.5, 7);
            let firings: Vec<Vec<f64>> = (0..5).map(|_| (0..4).map(|_| g.gen_range(0.0..3.0)).collect()).collect();
            simulate(&net, EsnState::zeros(&net, 0.1), &FiringSchedule::instantaneous(firings), 6, &SimOptions::default()).unwrap()
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn decomposition_is_complete(seed in any::<u64>(), sites in 2usize..5, c in 1usize..4, t in 0usize..4) {
        let (raw, u) = mixed_model(&mut rng(seed), sites, c, t);
        let a: Analysis = Analysis::new(&raw).unwrap();
        let d = decompose_conversion_transportation(&a.model, &a.capabilities, &a.incidence, &u);
        prop_assert_eq!(d.conversion_capabilities.len(), c);
        prop_assert_eq!(d.transportation_capabilities.len(), t);
        for row in &d.rows {
            prop_assert!(close(row.conversion + row.transportation, row.total, 1e-12));
        }
    }

    #[test]
    fn dominance_is_scale_invariant(seed in any::<u64>(), sites in 2usize..5, c in 1usize..4, t in 1usize..4, s in 0.01f64..100.0) {
        let (raw, u) = mixed_model(&mut rng(seed), sites, c, t);
        let a: Analysis = Analysis::new(&raw).unwrap();
        let scaled: Vec<f64> = u.iter().map(|v| v * s).collect();
        let d1 = transportation_dominance(&decompose_conversion_transportation(&a.model, &a.capabilities, &a.incidence, &u), 0.05);
        let d2 = transportation_dominance(&decompose_conversion_transportation(&a.model, &a.capabilities, &a.incidence, &scaled), 0.05);
        prop_assert_eq!(d1.len(), d2.len());
        for (x, y) in d1.iter().zip(&d2) {
            if x.conversion.abs() > 1e-9 {
                prop_assert!(close(x.ratio, y.ratio, 1e-9));
                prop_assert_eq!(x.verdict, y.verdict);
            }
        }
    }
}
