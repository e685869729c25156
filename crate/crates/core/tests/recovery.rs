//! Sparse-recovery quality checks against a brute-force reference: BPDN on
//! the implicit operator must agree with exhaustive best-support least
//! squares on the dense matrix.

mod common;

use common::*;
use num_complex::Complex64;
use rand::Rng;

use csradar_core::channel::add_awgn;
use csradar_core::signal::{compose_operator, SamplingPattern, WaveformFrame};
use csradar_core::solver::{epsilon_from_noise, solve_bpdn, BpdnProblem};

fn sparse_coefficients(
    len: usize,
    sparsity: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Vec<Complex64> {
    let mut v = vec![Complex64::default(); len];
    let support = rand::seq::index::sample(rng, len, sparsity).into_vec();
    for idx in support {
        let magnitude = 0.5 + rng.random_range(0.0..1.0);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        v[idx] = Complex64::from_polar(magnitude, phase);
    }
    v
}

fn support_of(v: &[Complex64]) -> Vec<usize> {
    significant_support(v, 1e-4)
}

#[test]
fn bpdn_matches_exhaustive_least_squares_when_noiseless() {
    let n = 32;
    let frame = WaveformFrame::rademacher(n, 8, 50).unwrap();
    let pattern = SamplingPattern::uniform_random(n, 16, 4).unwrap();
    let op = compose_operator(std::slice::from_ref(&frame), false, &pattern).unwrap();
    let dense = dense_operator(std::slice::from_ref(&frame), false, &pattern);

    let mut rng = seeded(60);
    let mut agreements = 0;
    let trials = 25;
    for trial in 0..trials {
        let sparsity = 1 + (trial % 2);
        let truth = sparse_coefficients(n, sparsity, &mut rng);
        let y = op.forward(&truth).unwrap();

        let problem = BpdnProblem::new(&op, y.clone(), 0.0).unwrap();
        let solution = solve_bpdn(&problem, 600, 1e-9).unwrap();
        let bpdn_support = support_of(&solution.coefficients);

        let (oracle_support, oracle_residual) = best_support_least_squares(&dense, &y, 2);
        assert!(oracle_residual <= 1e-9, "oracle should fit exactly");
        if bpdn_support == oracle_support {
            agreements += 1;
        }
    }
    assert!(
        agreements >= trials - 1,
        "only {agreements}/{trials} supports agreed with the oracle"
    );
}

#[test]
fn bpdn_keeps_the_support_under_measurement_noise() {
    let n = 64;
    let frame = WaveformFrame::rademacher(n, 16, 51).unwrap();
    let pattern = SamplingPattern::uniform_random(n, 22, 8).unwrap();
    let op = compose_operator(std::slice::from_ref(&frame), false, &pattern).unwrap();

    let mut rng = seeded(61);
    let trials = 40;
    let mut hits = 0;
    for seed in 0..trials {
        let truth = sparse_coefficients(n, 2, &mut rng);
        let clean = op.forward(&truth).unwrap();
        let power = clean.iter().map(|z| z.norm_sqr()).sum::<f64>() / clean.len() as f64;
        let noisy = add_awgn(&clean, 20.0, power, 900 + seed).unwrap();
        let sigma2 = power / 100.0;
        let epsilon = epsilon_from_noise(sigma2, clean.len()).unwrap();

        let problem = BpdnProblem::new(&op, noisy, epsilon).unwrap();
        let solution = solve_bpdn(&problem, 600, 1e-7).unwrap();

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            solution.coefficients[b]
                .norm()
                .total_cmp(&solution.coefficients[a].norm())
        });
        let mut top: Vec<usize> = order[..2].to_vec();
        top.sort_unstable();
        if top == support_of(&truth) {
            hits += 1;
        }
    }
    assert!(
        hits * 10 >= trials * 9,
        "support survived noise in only {hits}/{trials} trials"
    );
}

#[test]
fn bpdn_solution_norm_never_exceeds_the_noiseless_truth() {
    let n = 32;
    let frame = WaveformFrame::rademacher(n, 8, 52).unwrap();
    let pattern = SamplingPattern::uniform_random(n, 16, 5).unwrap();
    let op = compose_operator(std::slice::from_ref(&frame), false, &pattern).unwrap();
    let mut rng = seeded(62);

    for _ in 0..10 {
        let truth = sparse_coefficients(n, 2, &mut rng);
        let y = op.forward(&truth).unwrap();
        let problem = BpdnProblem::new(&op, y, 0.0).unwrap();
        let solution = solve_bpdn(&problem, 600, 1e-9).unwrap();
        let truth_l1: f64 = truth.iter().map(|z| z.norm()).sum();
        assert!(
            solution.l1_norm() <= truth_l1 + 1e-6,
            "l1 {} exceeds the feasible truth {truth_l1}",
            solution.l1_norm()
        );
    }
}
