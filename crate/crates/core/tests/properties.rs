mod oracles;

use std::collections::BTreeSet;

use copivot::{
    decision_variable, dense_subgroups, discover, discover_in, dominance_check, energy_set, energy_to_probability,
    fit, order_preservation_check, pair_overlap_table, probability_to_possibility, DvMethod, EnergyAnalysis, Link,
    Matrix64, PossibilityDistribution, ProbabilityDistribution, Rational, SubCommunity,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn matrix_strategy(max_r: usize, max_k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_r, 1..=max_k).prop_flat_map(|(r, k)| prop::collection::vec(prop::collection::vec(0u8..6, k), r))
        .prop_map(|rows| rows.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect())
}

fn distribution_strategy(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0u32..20, 1..=max_n)
        .prop_filter("some mass", |w| w.iter().any(|&x| x > 0))
        .prop_map(|w| {
            let total: u32 = w.iter().sum();
            w.into_iter().map(|x| f64::from(x) / f64::from(total)).collect()
        })
}

proptest! {
    #[test]
    fn row_sums_ignore_event_order(rows in matrix_strategy(6, 8), seed in any::<u64>()) {
        let m = Matrix64::from_rows(rows).unwrap();
        let mut order: Vec<usize> = (0..m.n_events()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        prop_assert_eq!(m.row_sums(), m.permute_events(&order).unwrap().row_sums());
    }

    #[test]
    fn csv_round_trip(rows in matrix_strategy(5, 6)) {
        let m = Matrix64::from_rows(rows).unwrap();
        let back: Matrix64 = copivot::read_csv(m.to_csv().as_bytes()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn energy_sets_are_scale_invariant(rows in matrix_strategy(4, 10), scale in 1u32..1000) {
        let m = Matrix64::from_rows(rows).unwrap();
        let dv = m.column_means();
        let c = f64::from(scale) / 7.0;
        let scaled_dv: Vec<f64> = dv.iter().map(|d| d * c).collect();
        for row in m.rows() {
            let scaled: Vec<f64> = row.iter().map(|x| x * c).collect();
            // scaling by c can perturb the last bit of a tie; compare with integer-exact data only
            if row.iter().zip(&dv).all(|(x, d)| x != d) {
                prop_assert_eq!(energy_set(row, &dv).unwrap(), energy_set(&scaled, &scaled_dv).unwrap());
            }
        }
    }

    #[test]
    fn co_energy_bounds(rows in matrix_strategy(8, 12)) {
        let m = Matrix64::from_rows(rows).unwrap();
        let a = EnergyAnalysis::compute(&m, &m.column_means()).unwrap();
        let e = a.energies();
        let k = m.n_events() as f64;
        for i in 0..m.n_actors() {
            prop_assert_eq!((e[i] * k).round(), e[i] * k);
            prop_assert!((0.0..=1.0).contains(&e[i]));
            prop_assert_eq!(a.co_energy.get(i, i), e[i]);
            for j in 0..m.n_actors() {
                prop_assert_eq!(a.co_energy.get(i, j), a.co_energy.get(j, i));
                prop_assert!(a.co_energy.get(i, j) <= e[i].min(e[j]));
            }
        }
    }

    #[test]
    fn discover_is_monotone_in_alpha(rows in matrix_strategy(7, 10), a1 in 0.0f64..=1.0, a2 in 0.0f64..=1.0) {
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let m = Matrix64::from_rows(rows).unwrap();
        let dv = m.column_means();
        let pairs = |sc: SubCommunity<f64>| sc.links.iter().map(|l| (l.i, l.j)).collect::<BTreeSet<_>>();
        let loose = pairs(discover(&m, &dv, lo, None).unwrap());
        let strict = pairs(discover(&m, &dv, hi, None).unwrap());
        prop_assert!(strict.is_subset(&loose));
    }

    #[test]
    fn transform_invariants(p in distribution_strategy(12)) {
        let dist = ProbabilityDistribution::new(p.clone()).unwrap();
        let pi = probability_to_possibility(&dist);
        prop_assert!(dominance_check(&dist, &pi).unwrap().holds);
        prop_assert!(order_preservation_check(&p, pi.as_slice()).unwrap());
        let max = pi.as_slice().iter().cloned().fold(0.0, f64::max);
        prop_assert!((max - 1.0).abs() <= 1e-9);
        for (a, b) in pi.as_slice().iter().zip(&p) {
            prop_assert!(*a >= *b);
            prop_assert!(*a <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn transform_is_permutation_equivariant(p in distribution_strategy(10), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..p.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let permuted: Vec<f64> = order.iter().map(|&i| p[i]).collect();
        let pi = probability_to_possibility(&ProbabilityDistribution::new(p).unwrap());
        let pi_perm = probability_to_possibility(&ProbabilityDistribution::new(permuted).unwrap());
        for (pos, &src) in order.iter().enumerate() {
            prop_assert_eq!(pi_perm.as_slice()[pos], pi.as_slice()[src]);
        }
    }

    #[test]
    fn normalization_preserves_order(e in prop::collection::vec(0u32..16, 1..10)) {
        prop_assume!(e.iter().any(|&x| x > 0));
        let e: Vec<f64> = e.into_iter().map(|x| f64::from(x) / 15.0).collect();
        let p = energy_to_probability(&e).unwrap();
        prop_assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(order_preservation_check(&e, p.as_slice()).unwrap());
    }
}

#[test]
fn closed_form_matches_linear_extensions_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let n = rng.gen_range(1..=8);
        let w = oracles::random_distribution_with_ties(&mut rng, n);
        let total: i64 = w.iter().map(|&x| i64::from(x)).sum();
        let p: Vec<Rational> = w.iter().map(|&x| Rational::new(i64::from(x), total)).collect();
        let closed = probability_to_possibility(&ProbabilityDistribution::new(p.clone()).unwrap());
        assert_eq!(closed.as_slice(), oracles::possibility_by_linear_extensions(&p).as_slice());
    }
}

#[test]
fn linear_extension_count_oracle() {
    // ties of size 3 and 2 among 6 atoms: 3! * 2! extensions
    assert_eq!(oracles::count_linear_extensions(&[0.1, 0.1, 0.1, 0.2, 0.2, 0.3]), 12);
}

#[test]
fn maximal_specificity_under_perturbation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 200 {
        let n = rng.gen_range(2..=8);
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(1..1000) as f64).collect();
        let distinct: BTreeSet<u64> = w.iter().map(|x| *x as u64).collect();
        if distinct.len() != n {
            continue;
        }
        let total: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        let dist = ProbabilityDistribution::new(p.clone()).unwrap();
        let pi = probability_to_possibility(&dist);
        for i in 0..n {
            let mut lowered = pi.as_slice().to_vec();
            lowered[i] -= 1e-6;
            let lowered = PossibilityDistribution::new(lowered);
            let dominated = dominance_check(&dist, &lowered).unwrap().holds;
            let ordered = order_preservation_check(&p, lowered.as_slice()).unwrap();
            assert!(!(dominated && ordered), "π_{i} could be lowered for p = {p:?}");
        }
        checked += 1;
    }
}

#[test]
fn discover_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let rows = oracles::random_matrix(&mut rng, 6, 10, 4);
        let m = Matrix64::from_rows(rows.clone()).unwrap();
        let dv = m.column_means();
        let sc = discover(&m, &dv, 0.3, None).unwrap();
        let got: Vec<(usize, usize, f64)> = sc.links.iter().map(|l| (l.i, l.j, l.weight)).collect();
        assert_eq!(got, oracles::brute_force_links(&rows, &dv, 0.3));
        let e = oracles::brute_force_energies(&rows, &dv);
        for l in &sc.links {
            assert_eq!((l.lo, l.hi), (e[l.i].min(e[l.j]), e[l.i].max(e[l.j])));
            assert!(l.weight >= 0.3 && l.weight <= l.lo);
        }
    }
}

#[test]
fn overlap_count_equals_co_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..30 {
        let m = Matrix64::from_rows(oracles::random_matrix(&mut rng, 6, 10, 5)).unwrap();
        let dv = m.column_means();
        let a = EnergyAnalysis::compute(&m, &dv).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                if i == j {
                    continue;
                }
                let t = pair_overlap_table(&m, &dv, i, j).unwrap();
                let hits = t.iter().filter(|r| r.both_exceed).count();
                assert_eq!(hits as f64 / 10.0, a.co_energy.get(i, j));
            }
        }
    }
}

#[test]
fn dense_subgroups_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..200 {
        let n = rng.gen_range(3..=5);
        let mut links = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(0.8) {
                    let w = [0.2, 0.4][rng.gen_range(0..2)];
                    links.push(Link { i, j, weight: w, lo: 1.0, hi: 1.0 });
                }
            }
        }
        let nodes: BTreeSet<usize> = links.iter().flat_map(|l| [l.i, l.j]).collect();
        let sc = SubCommunity { nodes: nodes.clone(), links, alpha: 0.0 };
        let node_list: Vec<usize> = nodes.into_iter().collect();
        let expected = oracles::dense_by_enumeration(&node_list, |a, b| sc.link(a, b).map(|l| l.weight), 1e-9, 5);
        assert_eq!(dense_subgroups(&sc, 1e-9), expected);
    }
}

#[test]
fn discover_is_independent_of_thread_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let m = Matrix64::from_rows(oracles::random_matrix(&mut rng, 40, 30, 6)).unwrap();
    let dv = m.column_means();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let a = EnergyAnalysis::compute(&m, &dv).unwrap();
                discover_in(&a, 0.2, None).unwrap()
            })
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(7));
}

#[test]
fn klt_reconstruction_and_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let rows: Vec<Vec<f64>> = (0..5).map(|_| (0..8).map(|_| rng.gen_range(0.0..10.0)).collect()).collect();
        let m = Matrix64::from_rows(rows.clone()).unwrap();
        let model = fit(&m).unwrap();
        assert!(model.eigenvalues.len() <= 4);
        assert!(model.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        for (a, va) in model.components.iter().enumerate() {
            for (b, vb) in model.components.iter().enumerate() {
                let d: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-9, "dot({a},{b}) = {d}");
            }
        }
        let rec = model.reconstruct(&m, model.components.len());
        let num: f64 = rec.iter().flatten().zip(rows.iter().flatten()).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = rows.iter().flatten().map(|x| x * x).sum();
        assert!((num / den).sqrt() < 1e-8);
        let trace = oracles::covariance_trace(&rows);
        let sum: f64 = model.eigenvalues.iter().sum();
        assert!(((sum - trace) / trace).abs() < 1e-8);
    }
}

#[test]
fn klt_dv_equals_column_means_at_any_beta() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for beta in [0.0, 0.3, 0.8, 0.95, 1.0] {
        let m = Matrix64::from_rows(oracles::random_matrix(&mut rng, 7, 12, 9)).unwrap();
        let klt = decision_variable(&m, DvMethod::Klt, beta).unwrap();
        let mean = decision_variable(&m, DvMethod::ColumnMean, beta).unwrap();
        for (a, b) in klt.dv.iter().zip(&mean.dv) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

#[test]
fn jacobi_converges_on_large_gram() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let rows: Vec<Vec<f64>> = (0..120).map(|_| (0..40).map(|_| rng.gen_range(0.0..5.0)).collect()).collect();
    let gram: Vec<Vec<f64>> = rows
        .iter()
        .map(|a| rows.iter().map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum()).collect())
        .collect();
    let e = copivot::jacobi::symmetric_eigen(&gram, 1e-10).unwrap();
    assert!(e.sweeps <= 100);
    assert!(e.off_norm < 1e-10);
}

#[test]
fn rational_pipeline_is_exact() {
    let rows: Vec<Vec<Rational>> = vec![
        vec![3.into(), 0.into(), 5.into()],
        vec![1.into(), 2.into(), 5.into()],
        vec![0.into(), 0.into(), 1.into()],
    ];
    let m = copivot::ParticipationMatrix::from_rows(rows).unwrap();
    let dv = m.column_means();
    assert_eq!(dv[0], Rational::new(4, 3));
    let a = EnergyAnalysis::compute(&m, &dv).unwrap();
    assert_eq!(a.energies(), vec![Rational::new(2, 3), Rational::new(2, 3), Rational::new(0, 1)]);
    let p = energy_to_probability(&a.energies()).unwrap();
    let pi = probability_to_possibility(&p);
    assert_eq!(pi.as_slice(), &[Rational::new(1, 1), Rational::new(1, 1), Rational::new(0, 1)]);
}
