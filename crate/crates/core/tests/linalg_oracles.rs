use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use repweight::linalg::{
    kkt_factorize, lambert_w, lambert_w_of_exp, project_simplex, project_topk, top_k_indices, CscMatrix,
};
use repweight_testkit::{best_k_subset_sum, dense_kkt, dense_solve, lambert_w_bisection, simplex_projection_grid};

#[test]
fn simplex_projection_matches_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
        let expected = simplex_projection_grid(v);
        let got = project_simplex(&v).unwrap();
        for (g, e) in got.iter().zip(expected) {
            assert!((g - e).abs() < 1e-6, "v {v:?}: {got:?} vs {expected:?}");
        }
    }
}

#[test]
fn topk_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let n = rng.random_range(1..=12);
        let k = rng.random_range(1..=n);
        // coarse values so that ties occur
        let v: Vec<f64> = (0..n).map(|_| (rng.random_range(-20..20) as f64) / 4.0).collect();
        let w = project_topk(&v, k).unwrap();
        assert_eq!(w.iter().filter(|&&x| x > 0.0).count(), k);
        assert!(w.iter().all(|&x| x == 0.0 || x == 1.0 / k as f64));
        let picked: f64 = top_k_indices(&v, k).unwrap().iter().map(|&i| v[i]).sum();
        assert!((picked - best_k_subset_sum(&v, k)).abs() < 1e-12);
    }
}

#[test]
fn topk_tie_break_prefers_low_index() {
    assert_eq!(top_k_indices(&[1.0, 3.0, 3.0, 3.0], 2).unwrap(), vec![1, 2]);
}

#[test]
fn lambert_identity_over_wide_range() {
    for step in 0..=320 {
        let x = 10f64.powf(-8.0 + step as f64 * 0.05);
        let w = lambert_w(x).unwrap();
        assert!(((w * w.exp() - x) / x).abs() < 1e-12, "x = {x}");
        assert!((w - lambert_w_bisection(x, 1e-14)).abs() <= 1e-12 * w.max(1.0));
    }
}

#[test]
fn lambert_of_exp_agrees_and_stays_finite() {
    for s in [-30.0, -1.0, 0.0, 2.5, 40.0, 499.0] {
        let direct = lambert_w(f64::exp(s)).unwrap();
        assert!((lambert_w_of_exp(s) - direct).abs() <= 1e-12 * direct.max(1e-300));
    }
    for s in [501.0, 1e3, 1e6] {
        let w = lambert_w_of_exp(s);
        assert!(((w + w.ln()) - s).abs() <= 1e-12 * s);
    }
}

fn random_sparse(rng: &mut ChaCha8Rng, m: usize, n: usize, density: f64) -> CscMatrix {
    let mut triplets = Vec::new();
    for j in 0..n {
        for i in 0..m {
            if rng.random::<f64>() < density {
                triplets.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
    }
    CscMatrix::from_triplets(m, n, &triplets)
}

fn kkt_residual(f: &CscMatrix, x: &[f64], rhs: &[f64]) -> f64 {
    let (m, n) = (f.nrows, f.ncols);
    let (xw, xe) = x.split_at(n);
    let top = f.matvec_t(xe);
    let bottom = f.matvec(xw);
    let mut worst: f64 = 0.0;
    for j in 0..n {
        worst = worst.max((2.0 * xw[j] + top[j] - rhs[j]).abs());
    }
    for i in 0..m {
        worst = worst.max((bottom[i] - xe[i] - rhs[n + i]).abs());
    }
    worst / rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()))
}

#[test]
fn kkt_solve_small_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..30 {
        let m = rng.random_range(1..8);
        let n = rng.random_range(1..8);
        let f = random_sparse(&mut rng, m, n, 0.5);
        let rhs: Vec<f64> = (0..n + m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = kkt_factorize(&f).unwrap().solve(&rhs).unwrap();
        let mut dense_f = vec![vec![0.0; n]; m];
        for j in 0..n {
            for (i, v) in f.column(j) {
                dense_f[i][j] = v;
            }
        }
        let expected = dense_solve(&dense_kkt(&dense_f, n), &rhs);
        for (a, b) in x.iter().zip(expected) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn kkt_solve_large_has_small_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for &(m, n, density) in &[(500, 5000, 0.004), (300, 40, 0.2), (120, 2000, 0.03)] {
        let f = random_sparse(&mut rng, m, n, density);
        let factor = kkt_factorize(&f).unwrap();
        let rhs: Vec<f64> = (0..n + m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = factor.solve(&rhs).unwrap();
        assert!(kkt_residual(&f, &x, &rhs) < 1e-10, "m={m} n={n}");
    }
}

proptest! {
    #[test]
    fn simplex_projection_is_feasible_and_idempotent(v in prop::collection::vec(-5.0f64..5.0, 1..40)) {
        let p = project_simplex(&v).unwrap();
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let again = project_simplex(&p).unwrap();
        for (a, b) in p.iter().zip(&again) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn simplex_projection_beats_any_simplex_point(
        v in prop::collection::vec(-3.0f64..3.0, 2..10),
        raw in prop::collection::vec(0.0f64..1.0, 10),
    ) {
        let p = project_simplex(&v).unwrap();
        let total: f64 = raw[..v.len()].iter().sum::<f64>() + 1e-12;
        let q: Vec<f64> = raw[..v.len()].iter().map(|x| (x + 1e-12 / v.len() as f64) / total).collect();
        let d = |a: &[f64]| a.iter().zip(&v).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        prop_assert!(d(&p) <= d(&q) + 1e-12);
    }
}
