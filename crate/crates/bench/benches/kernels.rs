use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qevote_core::analysis::{bin_mass, pr_win_given_bad, taylor_gap};
use qevote_core::distball::{
    estimate_label, run_round, Backend, Choice, RoundAdversary, RoundSpec,
};
use qevote_core::dualbasis::{
    attack_corrupt_setup, cut_and_choose, CorruptTarget, DualBasisParams, SimPath,
};
use qevote_core::qcore::{make_ghz_phase_state, povm_theta_samples, Operator};
use qevote_core::SimRng;

fn state_vector(c: &mut Criterion) {
    let mut g = c.benchmark_group("apply_fourier");
    for copies in [4usize, 8, 12] {
        let s = make_ghz_phase_state(copies, 3, |j| j as f64 * 0.3).unwrap();
        let f = Operator::fourier(3);
        g.bench_with_input(BenchmarkId::from_parameter(copies), &copies, |b, &q| {
            b.iter(|| black_box(s.apply_unitary(&f, &[q / 2]).unwrap()))
        });
    }
    g.finish();
}

fn phase_sampling(c: &mut Criterion) {
    let mut rng = SimRng::new(1);
    povm_theta_samples(16, 0.1, 1, &mut rng).unwrap();
    c.bench_function("povm_samples_d16_x1000", |b| {
        b.iter(|| black_box(povm_theta_samples(16, 0.1, 1000, &mut rng).unwrap()))
    });
    let xs = povm_theta_samples(16, 0.1, 500, &mut rng).unwrap();
    c.bench_function("estimator_500_samples", |b| {
        b.iter(|| black_box(estimate_label(&xs, 16).unwrap()))
    });
}

fn rounds(c: &mut Criterion) {
    let votes = [Choice::Yes, Choice::No, Choice::Yes];
    let adv = RoundAdversary::DTransfer {
        voter: 0,
        d: 1,
        samples: Some(500),
    };
    for backend in [Backend::Compact, Backend::Full] {
        let spec = RoundSpec {
            dim: 7,
            voters: 3,
            difference: None,
            backend,
        };
        let mut rng = SimRng::new(2);
        c.bench_function(&format!("distball_round_{backend:?}").to_lowercase(), |b| {
            b.iter(|| black_box(run_round(&spec, &votes, adv, &mut rng).unwrap()))
        });
    }
}

fn cut_and_choose_trial(c: &mut Criterion) {
    let params = DualBasisParams::new(4, 2, 2).unwrap();
    let mut rng = SimRng::new(3);
    c.bench_function("cut_and_choose_n4_delta2", |b| {
        b.iter(|| {
            let (pool, _) = attack_corrupt_setup(params, CorruptTarget::D1, &mut rng);
            black_box(
                cut_and_choose(&pool, &[0, 1, 2, 3], &[2, 3], SimPath::Fast, &mut rng).unwrap(),
            )
        })
    });
}

fn analysis(c: &mut Criterion) {
    c.bench_function("exact_survival_n12_delta6", |b| {
        b.iter(|| black_box(pr_win_given_bad(12, 6, 6).unwrap()))
    });
    c.bench_function("single_bin_quadrature_d64", |b| {
        b.iter(|| black_box(bin_mass(0.05, 64, 0).unwrap()))
    });
    c.bench_function("taylor_certificate", |b| {
        b.iter(|| black_box(taylor_gap(5.9).unwrap()))
    });
}

criterion_group!(
    benches,
    state_vector,
    phase_sampling,
    rounds,
    cut_and_choose_trial,
    analysis
);
criterion_main!(benches);
