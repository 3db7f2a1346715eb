use proptest::prelude::*;
use tbger::diffusion::{rank_users, BipartiteGraph, DegreeMode, DEFAULT_MATERIALIZE_CAP};
use tbger::sparse::SparseUserTagMatrix;

#[derive(Debug, Clone)]
struct Instance {
    users: usize,
    tags: usize,
    entries: Vec<(usize, usize, f64)>,
    question: Vec<usize>,
}

fn instance() -> impl Strategy<Value = Instance> {
    (1..=50usize, 1..=50usize)
        .prop_flat_map(|(m, n)| {
            let cap = (m * n / 4).max(1);
            (
                Just(m),
                Just(n),
                prop::collection::vec((0..m, 0..n, 0.01f64..10.0), 0..=cap),
                prop::collection::vec(0..n, 1..=5),
            )
        })
        .prop_map(|(users, tags, entries, question)| Instance {
            users,
            tags,
            entries,
            question,
        })
}

fn graph(inst: &Instance, factor: f64) -> BipartiteGraph {
    let triplets = inst.entries.iter().map(|&(i, t, v)| (i, t, v * factor)).collect();
    BipartiteGraph::new(
        SparseUserTagMatrix::from_triplets(inst.users, inst.tags, triplets),
        DegreeMode::Weighted,
    )
}

/// Dense two-step weights computed straight from the definition.
fn naive_w(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let k_user: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let k_tag: Vec<f64> = (0..n).map(|t| a.iter().map(|row| row[t]).sum()).collect();
    let mut w = vec![vec![0.0; m]; m];
    for i in 0..m {
        for beta in 0..m {
            if k_user[beta] == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for t in 0..n {
                if k_tag[t] > 0.0 {
                    s += a[i][t] * a[beta][t] / k_tag[t];
                }
            }
            w[i][beta] = s / k_user[beta];
        }
    }
    w
}

/// `Σ_{τ∈question} (W·S)_{:,τ}` with dense loops.
fn naive_scores(a: &[Vec<f64>], question: &[usize]) -> Vec<f64> {
    let w = naive_w(a);
    let mut tags = question.to_vec();
    tags.sort_unstable();
    tags.dedup();
    (0..a.len())
        .map(|i| {
            tags.iter()
                .map(|&t| (0..a.len()).map(|beta| w[i][beta] * a[beta][t]).sum::<f64>())
                .sum()
        })
        .collect()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= rel * scale || (a - b).abs() <= 1e-300
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn materialized_w_columns_sum_to_one(inst in instance()) {
        let g = graph(&inst, 1.0);
        let w = g.materialize_w(DEFAULT_MATERIALIZE_CAP).unwrap();
        for (beta, sum) in w.col_sums().iter().enumerate() {
            if g.user_degrees()[beta] > 0.0 {
                prop_assert!((sum - 1.0).abs() <= 1e-9, "column {beta} sums to {sum}");
            } else {
                prop_assert_eq!(*sum, 0.0);
            }
        }
    }

    #[test]
    fn materialized_w_matches_definition(inst in instance()) {
        let g = graph(&inst, 1.0);
        let w = g.materialize_w(DEFAULT_MATERIALIZE_CAP).unwrap();
        let oracle = naive_w(&g.adjacency().to_dense());
        for (i, row) in oracle.iter().enumerate() {
            for (beta, &expected) in row.iter().enumerate() {
                prop_assert!(close(w.get(i, beta), expected, 1e-9));
            }
        }
    }

    #[test]
    fn score_question_matches_dense_oracle(inst in instance()) {
        let g = graph(&inst, 1.0);
        let dense = g.adjacency().to_dense();
        let scores = g.score_question(&inst.question).unwrap();
        let oracle = naive_scores(&dense, &inst.question);
        let peak = oracle.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (i, (&s, &o)) in scores.iter().zip(&oracle).enumerate() {
            prop_assert!(
                (s - o).abs() <= 1e-9 * peak.max(f64::MIN_POSITIVE),
                "user {i}: {s} vs {o}"
            );
        }
    }

    #[test]
    fn rankings_invariant_under_power_of_two_scaling(inst in instance(), exp in -20i32..20) {
        let ids: Vec<u64> = (0..inst.users as u64).map(|i| 1000 + i).collect();
        let order = |factor: f64| -> Vec<u64> {
            let scores = graph(&inst, factor).score_question(&inst.question).unwrap();
            rank_users(&scores, &ids).entries.iter().map(|e| e.user_id).collect()
        };
        prop_assert_eq!(order(1.0), order(2f64.powi(exp)));
    }

    #[test]
    fn scores_invariant_under_arbitrary_scaling(inst in instance(), factor in 1e-3f64..1e3) {
        let base = graph(&inst, 1.0).score_question(&inst.question).unwrap();
        let scaled = graph(&inst, factor).score_question(&inst.question).unwrap();
        let peak = base.iter().fold(0.0f64, |m, x| m.max(*x));
        for (b, s) in base.iter().zip(&scaled) {
            prop_assert!((b * factor - s).abs() <= 1e-9 * peak * factor + f64::MIN_POSITIVE);
        }
    }

    #[test]
    fn diffusion_preserves_non_negativity(inst in instance(), seed in prop::collection::vec(0.0f64..5.0, 50)) {
        let g = graph(&inst, 1.0);
        let f = &seed[..inst.users];
        let out = g.diffuse(f).unwrap();
        prop_assert!(out.iter().all(|&x| x >= 0.0 && x.is_finite()));
        let scores = g.score_question(&inst.question).unwrap();
        prop_assert!(scores.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn diffusion_conserves_resource_on_connected_users(inst in instance(), seed in prop::collection::vec(0.0f64..5.0, 50)) {
        let g = graph(&inst, 1.0);
        let f: Vec<f64> = seed[..inst.users]
            .iter()
            .zip(g.user_degrees())
            .map(|(&x, &k)| if k > 0.0 { x } else { 0.0 })
            .collect();
        let before: f64 = f.iter().sum();
        let after: f64 = g.diffuse(&f).unwrap().iter().sum();
        prop_assert!((before - after).abs() <= 1e-9 * before.max(1.0));
    }
}

#[test]
fn edge_count_mode_uses_unweighted_degrees() {
    let a = SparseUserTagMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 1, 3.0)]);
    let g = BipartiteGraph::new(a, DegreeMode::EdgeCount);
    assert_eq!(g.user_degrees(), &[2.0, 1.0]);
    assert_eq!(g.tag_degrees(), &[1.0, 2.0]);
}

#[test]
fn materialize_refuses_large_graphs() {
    let a = SparseUserTagMatrix::zeros(5, 1);
    let g = BipartiteGraph::new(a, DegreeMode::Weighted);
    assert!(g.materialize_w(4).is_err());
}
