mod common;

use bmvc::denoiser::{tv_denoise, TV_ITERATIONS, TV_LAMBDA_PER_SIGMA};
use bmvc::Frame;
use common::{tv_objective, tv_reference, Uniform};

/// Two-level step plus a gentle ramp plus uniform noise.
fn instance(seed: u64) -> Frame {
    let mut rng = Uniform::new(seed);
    let (a, b) = (rng.next_f64(), rng.next_f64());
    Frame::from_fn(16, 16, |r, c| {
        let base = if (r as f64) < 4.0 + 8.0 * a {
            0.25
        } else {
            0.7
        } + 0.2 * b * c as f64 / 16.0;
        base + 0.1 * (rng.next_f64() - 0.5)
    })
}

#[test]
fn default_solver_matches_primal_reference_in_objective() {
    let lambdas = [20.0, 10.0, 5.0].map(|s: f64| TV_LAMBDA_PER_SIGMA * s / 255.0);
    for seed in 0..8 {
        let f = instance(seed);
        for lambda in lambdas.into_iter().chain([0.05]) {
            let fast = tv_denoise(&f, lambda, TV_ITERATIONS);
            let reference = tv_reference(f.data(), 16, 16, lambda);
            let a = tv_objective(fast.data(), f.data(), 16, 16, lambda);
            let b = tv_objective(&reference, f.data(), 16, 16, lambda);
            assert!(
                (a - b).abs() <= 1e-3,
                "seed {seed} lambda {lambda}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn converged_solvers_agree_closely() {
    let f = instance(99);
    let fast = tv_denoise(&f, 0.05, 3000);
    let reference = tv_reference(f.data(), 16, 16, 0.05);
    let a = tv_objective(fast.data(), f.data(), 16, 16, 0.05);
    let b = tv_objective(&reference, f.data(), 16, 16, 0.05);
    assert!((a - b).abs() <= 1e-5, "{a} vs {b}");
}
