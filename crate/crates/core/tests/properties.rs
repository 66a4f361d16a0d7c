use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use obmedian::bp::BranchingProgram;
use obmedian::hard::{build_pairing, median_locality_check, sample_instance, toy_schedule, ModeParams};
use obmedian::info::corr::{correlated_joint, disagreement_bound, disagreement_probability};
use obmedian::info::{statistical_distance, Distribution};
use obmedian::median::{build_median_nbp, median_oracle, median_select};
use obmedian::partition::{j_distribution, random_pair_partition};
use obmedian::reduction::{embed_instance, find_assignment, oblivious_median_program, protocol_from_bp, random_query_sequence, segment_split};
use obmedian::select::{oracle_select, run_select, Algo, StreamReader};
use obmedian::verify::random_distinct_input;

fn distribution(len: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec(0.0f64..1.0, len)
        .prop_filter("some mass", |w| w.iter().sum::<f64>() > 1e-6)
        .prop_map(|w| Distribution::from_weights(&w).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nbp_matches_oracle_on_six(perm in Just((1..=12u32).collect::<Vec<_>>()).prop_shuffle()) {
        let bp = build_median_nbp(6).unwrap();
        let x = &perm[..6];
        prop_assert_eq!(bp.evaluate_nondeterministic(x).unwrap(), median_oracle(x).unwrap() as u64);
        prop_assert_eq!(median_select(x).unwrap(), median_oracle(x).unwrap());
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn program_json_round_trips(seed in any::<u64>(), k in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let order = random_query_sequence(8, k, &mut rng);
        let bp = oblivious_median_program(&order, 8).unwrap();
        let text = bp.to_json();
        let back = BranchingProgram::from_json(&text).unwrap();
        prop_assert_eq!(back.to_json(), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn selection_matches_sort(
        values in prop::collection::btree_set(prop_oneof![8 => any::<u64>(), 1 => 0u64..8, 1 => u64::MAX - 8..=u64::MAX], 1..400),
        s in 4usize..40,
        rank_frac in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let mut v: Vec<u64> = values.into_iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(&mut v[..], &mut rng);
        let n = v.len() as u64;
        let rank = 1 + ((n - 1) as f64 * rank_frac) as u64;
        let truth = oracle_select(&v, rank);
        for algo in [Algo::Multipass, Algo::Sampling] {
            let r = run_select(algo, &mut StreamReader::from_vec(v.clone()), s, rank, seed).unwrap();
            prop_assert_eq!(r.value, truth);
            prop_assert!(r.peak_registers <= s);
        }
    }

    #[test]
    fn correlated_joint_has_the_right_marginals(p in distribution(6), q in distribution(6)) {
        let joint = correlated_joint(&p, &q).unwrap();
        for u in 0..6 {
            let row: f64 = joint[u].iter().sum();
            let col: f64 = joint.iter().map(|r| r[u]).sum();
            prop_assert!((row - p.get(u)).abs() < 1e-12);
            prop_assert!((col - q.get(u)).abs() < 1e-12);
        }
        let d = statistical_distance(&p, &q).unwrap();
        prop_assert!(disagreement_probability(&p, &q).unwrap() <= disagreement_bound(&p, &q).unwrap() + 1e-12);
        prop_assert!(disagreement_bound(&p, &q).unwrap() <= 2.0 * d + 1e-12);
    }

    #[test]
    fn distance_is_a_metric(p in distribution(5), q in distribution(5), r in distribution(5)) {
        let d = |a: &Distribution, b: &Distribution| statistical_distance(a, b).unwrap();
        prop_assert!((d(&p, &q) - d(&q, &p)).abs() < 1e-15);
        prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r) + 1e-12);
        prop_assert!((0.0..=1.0).contains(&d(&p, &q)));
    }

    #[test]
    fn j_law_sums_to_one(ys in 8u64..40, a in 0u64..6, k in 1u64..=4, mult in 1u64..=3) {
        let gamma = 2 * k * mult;
        let n = 2 * (ys / 2) + gamma;
        if let Ok(d) = j_distribution(ys, a, gamma, k, n) {
            let total: BigRational = d.probs.iter().sum();
            prop_assert!(total.is_one());
            prop_assert!(d.probs.iter().all(|p| *p >= BigRational::zero()));
        }
    }

    #[test]
    fn hard_instances_are_local(seed in any::<u64>(), levels in 1usize..=2) {
        let schedule = toy_schedule(128, 32, 2, levels).unwrap();
        let params = ModeParams::Toy { schedule };
        let tree = build_pairing(&params, 128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = sample_instance(&tree, &mut rng);
        let elements = inst.elements();
        let distinct: BTreeSet<u32> = elements.iter().copied().collect();
        prop_assert_eq!(distinct.len(), 128);
        prop_assert!(elements.iter().all(|&v| (1..=256).contains(&v)));
        prop_assert!(median_locality_check(&inst).holds);
        let part = random_pair_partition(inst, &mut rng).unwrap();
        prop_assert_eq!(part.alice.iter().filter(|&&a| a).count(), 64);
    }

    #[test]
    fn protocol_output_is_the_small_median_bit(seed in any::<u64>(), k in 1usize..=2) {
        let n = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let order = random_query_sequence(n, k, &mut rng);
        let bp = oblivious_median_program(&order, n).unwrap();
        let segs = segment_split(&order, n, k).unwrap();
        let a = find_assignment(&segs, n, k, &mut rng).unwrap();
        let n_small = 2 * a.n_a.min(a.n_b).min(n / 2);
        let emb = a.embedding(n_small).unwrap();
        let small = random_distinct_input(n_small, &mut rng);
        let (full, c) = embed_instance(&small, &emb).unwrap();
        let run = protocol_from_bp(&bp, &a, &emb, &small[..n_small / 2], &small[n_small / 2..]).unwrap();
        prop_assert_eq!(run.output, (median_oracle(&small).unwrap() & 1) as u8);
        prop_assert_eq!(run.output, (bp.evaluate_deterministic(&full).unwrap() & 1) as u8 ^ c);
    }
}
