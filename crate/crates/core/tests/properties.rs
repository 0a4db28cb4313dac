use bayes_defense::belief::{
    bayes_step, bayes_update, exact_expected_next_belief, expected_belief_on_truth, expected_next_log_belief,
    jensen_witness, LikelihoodProfile, ReceiverBelief,
};
use bayes_defense::model::{actions_identifiable, reaction_classes, MdpModel};
use proptest::prelude::*;

const TOL: f64 = 1e-12;

/// A probability row of length `n` built from positive weights.
fn row(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s).collect()
    })
}

/// A probability row whose entries may be exactly zero.
fn sparse_row(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.01f64..1.0], n)
        .prop_filter("some mass", |w| w.iter().any(|&v| v > 0.0))
        .prop_map(|w| {
            let s: f64 = w.iter().sum();
            w.iter().map(|v| v / s).collect()
        })
}

fn rows_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..5).prop_flat_map(|n| (sparse_row(n), sparse_row(n)))
}

fn model(states: usize, actions: usize, reactions: usize, rows: Vec<Vec<f64>>) -> MdpModel {
    let ids = |p: &str, n: usize| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    let (s, a, r) = (ids("x", states), ids("a", actions), ids("r", reactions));
    let sr: Vec<&str> = s.iter().map(String::as_str).collect();
    let ar: Vec<&str> = a.iter().map(String::as_str).collect();
    let rr: Vec<&str> = r.iter().map(String::as_str).collect();
    MdpModel::from_rows(&sr, &ar, &rr, "x0", |x, ai, ri| rows[(x * actions + ai) * reactions + ri].clone()).unwrap()
}

proptest! {
    #[test]
    fn posterior_stays_in_unit_interval(prior in 0.0f64..=1.0, (p, q) in rows_pair(), pick in 0usize..5) {
        let profile = LikelihoodProfile::new(&p, &q).unwrap();
        let (post, _) = bayes_update(ReceiverBelief::new(prior).unwrap(), &profile, pick % p.len()).unwrap();
        prop_assert!((0.0..=1.0).contains(&post.prob_malicious()));
    }

    #[test]
    fn identical_rows_leave_belief_bitwise(prior in 0.0f64..=1.0, p in sparse_row(4), x in 0usize..4) {
        let profile = LikelihoodProfile::new(&p, &p).unwrap();
        prop_assert_eq!(bayes_step(prior, &profile, x).unwrap().posterior.to_bits(), prior.to_bits());
    }

    #[test]
    fn expected_belief_on_truth_dominates_prior(prior in 0.0f64..=1.0, (t, o) in rows_pair()) {
        let e = expected_belief_on_truth(prior, &t, &o);
        prop_assert!(e >= prior - TOL, "{} < {}", e, prior);
        // the complementary belief on the false hypothesis is a supermartingale
        let profile = LikelihoodProfile::new(&o, &t).unwrap();
        prop_assert!(exact_expected_next_belief(1.0 - prior, &profile, false) <= 1.0 - prior + TOL);
    }

    #[test]
    fn expected_log_belief_dominates_log_prior(prior in 1e-6f64..=1.0, (t, o) in rows_pair()) {
        let e = expected_next_log_belief(prior, &t, &o).unwrap();
        prop_assert!(e >= prior.ln() - TOL, "{} < {}", e, prior.ln());
    }

    #[test]
    fn jensen_witness_is_at_least_one(prior in 0.0f64..=1.0, (t, o) in rows_pair()) {
        prop_assert!(jensen_witness(prior, &t, &o) >= 1.0 - TOL);
    }

    #[test]
    fn perturbing_identical_rows_removes_exactly_their_witnesses(
        base in prop::collection::vec(row(2), 4),
        mask in prop::collection::vec(any::<bool>(), 4),
        delta in 1e-6f64..0.005,
    ) {
        // two states, two reactions; action 1 copies action 0 except where perturbed
        let mut rows = Vec::new();
        for x in 0..2 {
            for a in 0..2 {
                for r in 0..2 {
                    let mut v = base[x * 2 + r].clone();
                    if a == 1 && mask[x * 2 + r] {
                        let shift = delta.min(v[0]);
                        v[0] -= shift;
                        v[1] += shift;
                    }
                    rows.push(v);
                }
            }
        }
        let report = actions_identifiable(&model(2, 2, 2, rows));
        let perturbed = mask.iter().filter(|&&m| m).count();
        prop_assert_eq!(report.witnesses.len(), 4 - perturbed);
        prop_assert_eq!(report.holds, perturbed == 4);
    }

    #[test]
    fn reaction_classes_partition_reactions(
        base in prop::collection::vec(row(2), 4),
        assign in prop::collection::vec(0usize..3, 4),
    ) {
        // reaction r uses dynamics variant assign[r]; equal variants are equivalent
        let reactions = 4;
        let mut rows = Vec::new();
        for x in 0..2 {
            for &variant in &assign {
                rows.push(base[(x * 2 + variant) % 4].clone());
            }
        }
        let classes = reaction_classes(&model(2, 1, reactions, rows.clone()));
        let mut seen: Vec<usize> = classes.iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..reactions).collect::<Vec<_>>());
        let dynamics = |r: usize| (0..2).map(|x| rows[x * reactions + r].clone()).collect::<Vec<_>>();
        for class in &classes {
            for &r in class {
                prop_assert_eq!(dynamics(r), dynamics(class[0]));
            }
        }
        for (i, a) in classes.iter().enumerate() {
            for b in &classes[i + 1..] {
                prop_assert_ne!(dynamics(a[0]), dynamics(b[0]));
            }
        }
    }
}
