use std::f64::consts::TAU;

use num_complex::Complex64;
use proptest::prelude::*;

use qevote_core::conjcode::{self, encode_vote, make_blank_ballot, rerandomize, tally_decode};
use qevote_core::distball::{clamp_transfer, estimate_label};
use qevote_core::dualbasis::{
    self, blank_ballots, cut_and_choose, setup_honest, DualBasisParams, SimPath, VoteMatrix,
};
use qevote_core::harness::ExperimentConfig;
use qevote_core::qcore::{Operator, PureState};
use qevote_core::stats::wilson;
use qevote_core::travelball;
use qevote_core::SimRng;

fn random_state(dims: Vec<usize>, seed: u64) -> PureState {
    let mut rng = SimRng::new(seed);
    let size: usize = dims.iter().product();
    let amps = (0..size)
        .map(|_| Complex64::new(rng.uniform() - 0.5, rng.uniform() - 0.5))
        .collect();
    PureState::normalized(dims, amps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unitaries_preserve_norm(d in 2usize..6, q in 1usize..4, target in 0usize..4, k in 0usize..6, seed: u64) {
        let target = target % q;
        let s = random_state(vec![d; q], seed);
        let phases: Vec<f64> = (0..d).map(|j| j as f64 * 0.7 + seed as f64 % 3.0).collect();
        let u = Operator::fourier(d)
            .matmul(&Operator::shift(d, k % d)).unwrap()
            .matmul(&Operator::diagonal(&phases)).unwrap();
        prop_assert!(u.is_unitary());
        let out = s.apply_unitary(&u, &[target]).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-9);
        let back = out.apply_unitary(&u.dagger(), &[target]).unwrap();
        prop_assert!(back.approx_eq_up_to_phase(&s, 1e-9));
    }

    #[test]
    fn fourier_has_order_four(d in 2usize..9) {
        let f4 = Operator::fourier(d).pow(4);
        prop_assert!(f4.max_abs_diff(&Operator::identity(d)) < 1e-9);
    }

    #[test]
    fn marginals_sum_to_one(d in 2usize..5, q in 1usize..4, seed: u64) {
        let s = random_state(vec![d; q], seed);
        for t in 0..q {
            let m = s.marginal(t).unwrap();
            prop_assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn travelling_ballot_counts_yes(votes in prop::collection::vec(0u64..2, 1..7), seed: u64) {
        let mut s = travelball::setup(votes.len(), None).unwrap();
        for &v in &votes {
            s = s.cast(v).unwrap();
        }
        let mut rng = SimRng::new(seed);
        let yes = votes.iter().sum::<u64>() as usize;
        prop_assert_eq!(travelball::tally(&s, &mut rng).unwrap(), yes);
    }

    #[test]
    fn rerandomised_ballot_decodes_to_vote(n in 1usize..4, basis_bits in 0u32..16, candidate in 0u8..2, seed: u64) {
        let basis: Vec<bool> = (0..=n).map(|i| basis_bits >> i & 1 == 1).collect();
        let mut rng = SimRng::new(seed);
        let w = conjcode::default_fragments(n);
        let blank = make_blank_ballot(n, w, &basis, &mut rng).unwrap();
        let once = rerandomize(&blank, &mut rng).unwrap();
        let cast = rerandomize(&encode_vote(&once, &[candidate]).unwrap(), &mut rng).unwrap();
        let decoded = tally_decode(&cast, &basis, &mut rng).unwrap();
        prop_assert!(conjcode::is_valid(&decoded, 1));
        prop_assert_eq!(conjcode::candidate_value(&decoded, 1), u64::from(candidate));
    }

    #[test]
    fn honest_blank_tables(n in 2usize..5, c in 2usize..4, seed: u64) {
        let params = DualBasisParams::new(n, c, 1).unwrap();
        let mut rng = SimRng::new(seed);
        let pool = setup_honest(params);
        let order: Vec<usize> = (0..n).collect();
        let report = cut_and_choose(&pool, &order, &[], SimPath::Fast, &mut rng).unwrap();
        prop_assert!(report.accepted);
        let blanks = blank_ballots(&pool, &report, SimPath::Fast, &mut rng).unwrap();
        let mut sks: Vec<usize> = blanks.iter().map(|b| b.sk).collect();
        sks.sort();
        prop_assert_eq!(sks, (0..n).collect::<Vec<_>>());
        let m = VoteMatrix::new(blanks.iter().map(|b| b.column.clone()).collect(), c).unwrap();
        prop_assert!(m.row_sums().iter().all(|&r| r == 0));
        let votes: Vec<u64> = (0..n).map(|_| rng.below(c) as u64).collect();
        let cols = blanks.iter().zip(&votes).map(|(b, &v)| dualbasis::cast(b, v, c).unwrap()).collect();
        let t = dualbasis::tally(&VoteMatrix::new(cols, c).unwrap(), &blanks.iter().zip(&votes).enumerate().map(|(k, (b, &v))| (k, b.sk, v)).collect::<Vec<_>>());
        prop_assert!(t.abort.is_none());
        let (mut rows, mut want) = (t.rows, votes);
        rows.sort();
        want.sort();
        prop_assert_eq!(rows, want);
    }

    #[test]
    fn clamp_is_largest_admissible(m in 0usize..10, d in 0usize..10, l in 0usize..20, dim in 2usize..40) {
        let r = clamp_transfer(m, d, l, dim);
        prop_assert!(r <= d);
        if l > 0 {
            prop_assert!(r == 0 || (m + r) * l < dim);
            prop_assert!(r == d || (m + r + 1) * l >= dim);
        } else {
            prop_assert_eq!(r, d);
        }
    }

    #[test]
    fn estimator_stays_in_range(dim in 3usize..32, xs in prop::collection::vec(0.0f64..TAU, 20..200)) {
        if let Ok((l, st)) = estimate_label(&xs, dim) {
            prop_assert!(l < dim);
            prop_assert!(st.solution.iter().flatten().all(|&s| s < dim));
        }
    }

    #[test]
    fn corruption_budget_is_floor(n in 1usize..40, eps in 0.0f64..=1.0) {
        let cfg = ExperimentConfig::new("travelball", n, eps, 1, 0);
        let b = cfg.budget();
        prop_assert!(b <= n);
        prop_assert!(b as f64 <= eps * n as f64 + 1e-9);
        prop_assert!((b + 1) as f64 > eps * n as f64 + 1e-9 || b == n);
    }

    #[test]
    fn wilson_contains_point_estimate(n in 1u64..10_000, frac in 0.0f64..=1.0) {
        let k = (frac * n as f64) as u64;
        let iv = wilson(k, n, 1.96);
        prop_assert!(iv.contains(k as f64 / n as f64));
        prop_assert!(iv.lo >= 0.0 && iv.hi <= 1.0);
    }
}
