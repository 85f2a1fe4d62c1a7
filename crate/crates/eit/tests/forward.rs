use multiscale_eit::fem::FemMesh;
use multiscale_eit::*;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(m: usize, seed: u64) -> ConductivityField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..m * m).map(|_| rng.gen_range(0.5..2.5)).collect();
    ConductivityField::new(m, values, 0.5, 2.5).unwrap()
}

fn eigenvalues(n: &NtdMatrix) -> Vec<f64> {
    let a = DMatrix::from_row_slice(n.k, n.k, &n.data);
    let sym = (&a + a.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().copied().collect()
}

#[test]
fn basis_is_orthonormal_and_zero_mean() {
    for (m, k) in [(4, 8), (16, 8), (8, 31)] {
        let b = CurrentBasis::trig(m, k).unwrap();
        let g = b.gram();
        for i in 0..k {
            for j in 0..k {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[i * k + j] - want).abs() < 1e-12, "m={m} k={k} ({i},{j})");
            }
        }
        assert!(b.means().iter().all(|v| v.abs() < 1e-13));
    }
}

#[test]
fn basis_size_is_limited_by_boundary_nodes() {
    assert!(CurrentBasis::trig(2, 7).is_ok());
    assert!(matches!(CurrentBasis::trig(2, 8), Err(EitError::BasisSize { max: 7, .. })));
    assert!(matches!(CurrentBasis::trig(4, 0), Err(EitError::BasisSize { .. })));
}

#[test]
fn boundary_runs_counterclockwise() {
    let mesh = FemMesh::new(2).unwrap();
    assert_eq!(mesh.boundary_nodes(), vec![0, 1, 2, 5, 8, 7, 6, 3]);
    assert_eq!(mesh.boundary_arclength()[5], 2.5);
}

#[test]
fn ntd_symmetric_psd_for_random_fields() {
    let b = CurrentBasis::trig(8, 8).unwrap();
    for seed in 0..20 {
        let n = ntd_matrix(&random_field(8, seed), &b).unwrap();
        assert!(n.asymmetry() <= 1e-10, "seed {seed}: {}", n.asymmetry());
        let min = eigenvalues(&n).into_iter().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-10, "seed {seed}: {min}");
    }
}

#[test]
fn scaling_law() {
    let b = CurrentBasis::trig(8, 8).unwrap();
    let one = ntd_matrix(&ConductivityField::constant(8, 1.0, 0.1, 10.0).unwrap(), &b).unwrap();
    for s in [0.5, 2.0, 7.3] {
        let ns = ntd_matrix(&ConductivityField::constant(8, s, 0.1, 10.0).unwrap(), &b).unwrap();
        let err = ns.data.iter().zip(&one.data).map(|(a, c)| (a - c / s).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-10, "s={s}: {err}");
    }
}

#[test]
fn richardson_ratio_near_four() {
    let entry = |m: usize, i: usize| {
        let b = CurrentBasis::trig(m, 8).unwrap();
        let f = ConductivityField::constant(m, 1.0, 0.5, 2.5).unwrap();
        ntd_matrix(&f, &b).unwrap().get(i, i)
    };
    for i in [0, 2] {
        let (a, b, c) = (entry(8, i), entry(16, i), entry(32, i));
        let ratio = (a - b) / (b - c);
        assert!((3.5..=4.5).contains(&ratio), "entry {i}: {ratio}");
    }
}

#[test]
fn zero_current_gives_zero_potential() {
    let f = random_field(6, 3);
    let sol = solve_neumann(&f, &vec![0.0; 24]).unwrap();
    assert!(sol.nodal.iter().all(|v| *v == 0.0));
}

#[test]
fn nonzero_mean_current_is_rejected() {
    let f = random_field(4, 1);
    let err = solve_neumann(&f, &vec![1.0; 16]).unwrap_err();
    assert!(matches!(err, EitError::NonZeroMean { .. }));
}

#[test]
fn neumann_solution_has_small_residual_and_zero_mean() {
    let f = random_field(10, 9);
    let b = CurrentBasis::trig(10, 5).unwrap();
    for g in &b.patterns {
        let sol = solve_neumann(&f, g).unwrap();
        assert!(sol.residual <= 1e-10);
        let mean: f64 = sol.trace.iter().zip(&b.weights).map(|(v, w)| v * w).sum();
        assert!(mean.abs() < 1e-13);
    }
}

#[test]
fn distances_of_diagonal_matrix() {
    let k = 4;
    let mut d = vec![0.0; k * k];
    d[0] = 3.0;
    d[k + 1] = -4.0;
    let zero = NtdMatrix { k, data: vec![0.0; k * k], mesh: 4, basis_id: "x".into() };
    let n = NtdMatrix { data: d, ..zero.clone() };
    assert!((ntd_distance(&n, &zero, Metric::Spectral).unwrap() - 4.0).abs() < 1e-12);
    assert!((ntd_distance(&n, &zero, Metric::HilbertSchmidt).unwrap() - 5.0).abs() < 1e-12);
}

#[test]
fn spectral_norm_matches_eigen_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..10 {
        let k = 8;
        let a: Vec<f64> = (0..k * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = DMatrix::from_row_slice(k, k, &a);
        let ata = m.transpose() * &m;
        let top = SymmetricEigen::new(ata).eigenvalues.iter().copied().fold(0.0, f64::max).sqrt();
        let s = top_singular(&a, k, 1e-12, 1_000_000);
        assert!((s.value - top).abs() <= 1e-9 * top.max(1.0), "{} vs {top}", s.value);
    }
}

#[test]
fn mismatched_bases_are_rejected() {
    let f = ConductivityField::constant(4, 1.0, 0.5, 2.5).unwrap();
    let a = ntd_matrix(&f, &CurrentBasis::trig(4, 4).unwrap()).unwrap();
    let b = ntd_matrix(&f, &CurrentBasis::trig(4, 5).unwrap()).unwrap();
    assert!(matches!(ntd_distance(&a, &b, Metric::Spectral), Err(EitError::Mismatch { .. })));
}

#[test]
fn csv_round_trip() {
    let n = ntd_matrix(&random_field(4, 5), &CurrentBasis::trig(4, 6).unwrap()).unwrap();
    let back = NtdMatrix::from_csv(&n.to_csv(), n.mesh, &n.basis_id).unwrap();
    assert_eq!(back, n);
    assert!(NtdMatrix::from_csv("1,2\n3\n", 4, "x").is_err());
}

#[test]
fn noise_has_exact_norm() {
    let n = ntd_matrix(&random_field(8, 2), &CurrentBasis::trig(8, 8).unwrap()).unwrap();
    assert_eq!(add_noise(&n, 0.0, 1, Metric::Spectral).unwrap(), n);
    for metric in [Metric::Spectral, Metric::HilbertSchmidt] {
        let noisy = add_noise(&n, 0.05, 11, metric).unwrap();
        assert!((ntd_distance(&noisy, &n, metric).unwrap() - 0.05).abs() <= 1e-12);
        assert!(noisy.asymmetry() <= 1e-15);
        assert_eq!(noisy, add_noise(&n, 0.05, 11, metric).unwrap());
    }
    assert!(matches!(add_noise(&n, -1.0, 1, Metric::Spectral), Err(EitError::Noise(_))));
}

#[test]
fn phantom_json_and_errors() {
    let spec = PhantomSpec::from_json(
        r#"{"background": 1.0, "bounds": [0.5, 2.5], "inclusions": [{"shape": "disk", "params": [0.5, 0.5, 0.2], "value": 2.0}]}"#,
    )
    .unwrap();
    let f = make_phantom(&spec, 10).unwrap();
    assert_eq!(f.get(5, 5), 2.0);
    assert_eq!(f.get(0, 0), 1.0);

    let centered = make_phantom(&PhantomSpec::centered_inclusion(), 16).unwrap();
    assert_eq!(centered.values.iter().filter(|v| **v == 2.0).count(), 36);

    assert!(PhantomSpec::from_json("{").is_err());
    let bad_value = PhantomSpec { background: 3.0, ..spec.clone() };
    assert!(matches!(make_phantom(&bad_value, 4), Err(EitError::Phantom(_))));
    let mut bad_params = spec.clone();
    bad_params.inclusions[0].params.pop();
    assert!(matches!(make_phantom(&bad_params, 4), Err(EitError::Phantom(_))));
    let bad_bounds = PhantomSpec { bounds: [2.0, 1.0], ..spec };
    assert!(matches!(make_phantom(&bad_bounds, 4), Err(EitError::Bounds { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ntd_is_monotone_in_conductivity(seed in 0u64..1000, bump in 0.01f64..0.5) {
        let b = CurrentBasis::trig(6, 6).unwrap();
        let f = random_field(6, seed);
        let g = ConductivityField::clamped(6, &f.values.iter().map(|v| v + bump).collect::<Vec<_>>(), 0.5, 3.0).unwrap();
        let nf = ntd_matrix(&f, &b).unwrap();
        let ng = ntd_matrix(&g, &b).unwrap();
        // Larger conductivity gives a smaller NtD map in the Loewner order.
        let diff = NtdMatrix { data: nf.data.iter().zip(&ng.data).map(|(a, c)| a - c).collect(), ..nf };
        let min = eigenvalues(&diff).into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-10);
    }

    #[test]
    fn ntd_symmetric_for_any_field(seed in 0u64..10_000, m in 2usize..7) {
        let b = CurrentBasis::trig(m, (4 * m - 1).min(8)).unwrap();
        let n = ntd_matrix(&random_field(m, seed), &b).unwrap();
        prop_assert!(n.asymmetry() <= 1e-10);
    }
}
