use multiscale_core::{MultiscaleProblem, ScaleSchedule, ScaleStep};
use multiscale_eit::tv::tv_cells;
use multiscale_eit::*;
use multiscale_tnv::TvKind;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CLASS: ClassConfig = ClassConfig { a_ell: 0.5, b_ell: 2.5, kind: TvKind::FullNorm };

fn problem(m: usize, k: usize, truth: &ConductivityField, metric: Metric) -> EitProblem {
    let basis = CurrentBasis::trig(m, k).unwrap();
    let nhat = ntd_matrix(truth, &basis).unwrap();
    EitProblem::new(nhat, basis, CLASS, metric).unwrap()
}

#[test]
fn tv_of_simple_fields() {
    assert_eq!(tv_cells(&[1.5; 16], 4, TvKind::Seminorm), 0.0);
    assert!((tv_cells(&[1.5; 16], 4, TvKind::FullNorm) - 1.5).abs() < 1e-15);
    // Left half 1, right half 2: unit-length interface with jump 1.
    let split: Vec<f64> = (0..16).map(|c| if c % 4 < 2 { 1.0 } else { 2.0 }).collect();
    assert!((tv_cells(&split, 4, TvKind::Seminorm) - 1.0).abs() < 1e-15);
    assert!((tv_cells(&split, 4, TvKind::FullNorm) - 2.5).abs() < 1e-15);
}

#[test]
fn exact_data_has_zero_fidelity() {
    let truth = make_phantom(&PhantomSpec::centered_inclusion(), 8).unwrap();
    let p = problem(8, 6, &truth, Metric::Spectral);
    assert!(p.distance(&truth.values).unwrap() < 1e-12);
}

#[test]
fn adjoint_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let truth = make_phantom(&PhantomSpec::centered_inclusion(), 6).unwrap();
    for metric in [Metric::Spectral, Metric::HilbertSchmidt] {
        let p = problem(6, 6, &truth, metric);
        let x: Vec<f64> = (0..36).map(|_| rng.gen_range(0.8..2.2)).collect();
        let eval = p.evaluate(&x, true).unwrap();
        // The spectral value is iterative to 1e-12 relative; a larger step keeps
        // that error out of the quotient.
        let h = 1e-4;
        for c in [0, 7, 14, 21, 35] {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[c] += h;
            xm[c] -= h;
            let fd = (p.distance(&xp).unwrap() - p.distance(&xm).unwrap()) / (2.0 * h);
            let g = eval.gradient[c];
            assert!((fd - g).abs() <= 1e-5 * g.abs().max(1e-3), "{metric} cell {c}: {g} vs {fd}");
        }
    }
}

/// `min_x λ F(x)² + |x|` over `[0.5, 2.5]` for a single cell, where `F(x) = ‖N̂ − N(1)/x‖`.
fn one_cell_oracle(lambda: f64, nhat: &NtdMatrix, n1: &NtdMatrix, metric: Metric) -> f64 {
    let f = |x: f64| {
        let d = n1.scaled(1.0 / x);
        lambda * ntd_distance(nhat, &d, metric).unwrap().powi(2) + x.abs()
    };
    let steps = 200_000;
    let mut best = (0.5, f(0.5));
    for i in 0..=steps {
        let x = 0.5 + 2.0 * i as f64 / steps as f64;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let (mut lo, mut hi) = ((best.0 - 1e-5).max(0.5), (best.0 + 1e-5).min(2.5));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn one_cell_inner_solve_matches_oracle() {
    for metric in [Metric::Spectral, Metric::HilbertSchmidt] {
        for (truth, lambda) in [(1.6, 200.0), (2.2, 50.0), (0.9, 1000.0)] {
            let basis = CurrentBasis::trig(1, 3).unwrap();
            let n1 = ntd_matrix(&ConductivityField::constant(1, 1.0, 0.5, 2.5).unwrap(), &basis).unwrap();
            let nhat = n1.scaled(1.0 / truth);
            let p = EitProblem::new(nhat.clone(), basis, CLASS, metric).unwrap();
            let config = SolverConfig { metric, tol: 1e-12, ..Default::default() };
            let sol = eit_inner_solve(&p, &vec![0.0], lambda, 0.0, (2.0, 1.0, 1.0), config).unwrap();
            let oracle = one_cell_oracle(lambda, &nhat, &n1, metric);
            assert!(oracle > 0.5 && oracle < 2.5);
            assert!((sol.increment[0] - oracle).abs() <= 1e-6, "{metric} {truth}: {} vs {oracle}", sol.increment[0]);
        }
    }
}

#[test]
fn constant_truth_is_recovered_at_scale_zero() {
    let truth = ConductivityField::constant(8, 1.5, 0.5, 2.5).unwrap();
    let basis = CurrentBasis::trig(8, 6).unwrap();
    let nhat = ntd_matrix(&truth, &basis).unwrap();
    let schedule = ScaleSchedule::tight(4.0, 8.0, 1.0, 2.0, (2.0, 1.0, 1.0), 2);
    let rec = reconstruct_multiscale(&nhat, &basis, &schedule, CLASS, SolverConfig::default()).unwrap();
    // Scale 0 starts at the midpoint of the box, which is the truth here.
    assert!(rec.trace.fidelity[0] <= 1e-8, "{}", rec.trace.fidelity[0]);
    assert!(rec.warnings.is_empty());
}

#[test]
fn mismatched_data_is_an_input_error() {
    let basis = CurrentBasis::trig(4, 4).unwrap();
    let other = CurrentBasis::trig(4, 5).unwrap();
    let nhat = ntd_matrix(&ConductivityField::constant(4, 1.0, 0.5, 2.5).unwrap(), &other).unwrap();
    let s = ScaleSchedule::tight(4.0, 8.0, 1.0, 2.0, (2.0, 1.0, 1.0), 2);
    let err = reconstruct_multiscale(&nhat, &basis, &s, CLASS, SolverConfig::default()).unwrap_err();
    assert!(matches!(err.0, ReconstructError::Input(EitError::Mismatch { .. })));
}

#[test]
fn non_tight_schedule_warns() {
    let truth = make_phantom(&PhantomSpec::centered_inclusion(), 4).unwrap();
    let basis = CurrentBasis::trig(4, 4).unwrap();
    let nhat = ntd_matrix(&truth, &basis).unwrap();
    let s = ScaleSchedule::basic(4.0, 2.0, 2.0, 1.0, 1);
    let rec = reconstruct_multiscale(&nhat, &basis, &s, CLASS, SolverConfig::default()).unwrap();
    assert_eq!(rec.warnings.len(), 1);
}

/// Augmented objective nonincreasing and partial sums equal to the running
/// sum of increments, with no tolerance.
fn check_safeguards(p: &EitProblem, rec: &EitReconstruction) {
    let t = &rec.trace;
    for w in t.augmented.windows(2) {
        assert!(w[1] <= w[0], "{} > {}", w[1], w[0]);
    }
    let mut sum = p.zero();
    for (n, inc) in t.increments.iter().enumerate() {
        sum = p.add(&sum, inc);
        assert_eq!(sum, t.partial_sums[n]);
    }
}

#[test]
fn multiscale_decay_on_centered_inclusion() {
    let truth = make_phantom(&PhantomSpec::centered_inclusion(), 16).unwrap();
    let basis = CurrentBasis::trig(16, 8).unwrap();
    let nhat = ntd_matrix(&truth, &basis).unwrap();
    let schedule = ScaleSchedule::tight(4.0, 8.0, 1.0, 2.0, (2.0, 1.0, 1.0), 5);
    let rec = reconstruct_multiscale(&nhat, &basis, &schedule, CLASS, SolverConfig::default()).unwrap();
    let f = &rec.trace.fidelity;
    assert!(f[5] <= 0.1 * f[0], "{} vs {}", f[5], f[0]);
    let p = EitProblem::new(nhat, basis, CLASS, Metric::Spectral).unwrap();
    check_safeguards(&p, &rec);
    assert!(rec.fields.iter().all(|s| s.values.iter().all(|v| (0.5..=2.5).contains(v))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn safeguards_hold_on_random_data(seed in 0u64..10_000, eta in 0.0f64..0.05) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..16).map(|_| rng.gen_range(0.6..2.4)).collect();
        let truth = ConductivityField::new(4, values, 0.5, 2.5).unwrap();
        let basis = CurrentBasis::trig(4, 6).unwrap();
        let nhat = add_noise(&ntd_matrix(&truth, &basis).unwrap(), eta, seed, Metric::Spectral).unwrap();
        let schedule = ScaleSchedule::tight(4.0, 8.0, 1.0, 2.0, (2.0, 1.0, 1.0), 3);
        let rec = reconstruct_multiscale(&nhat, &basis, &schedule, CLASS, SolverConfig::default()).unwrap();
        let p = EitProblem::new(nhat, basis, CLASS, Metric::Spectral).unwrap();
        check_safeguards(&p, &rec);
        for n in 0..rec.trace.len() {
            let step = ScaleStep {
                index: n,
                base: &p.zero(),
                lambda: 1.0,
                a: 0.0,
                alpha: 2.0,
                beta: 1.0,
                gamma: 1.0,
                tol: 0.0,
            };
            prop_assert!(step.objective(&p, &rec.trace.partial_sums[n]).is_finite());
        }
    }
}
