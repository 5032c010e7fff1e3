use proptest::prelude::*;

use super::*;
use crate::linalg::{numeric_rank, Rng};

fn random_signal(n: usize, t: usize, rng: &mut Rng) -> MultivariateSignal {
    MultivariateSignal::new(rng.normal_matrix(n, t)).unwrap()
}

fn random_symmetric(n: usize, rng: &mut Rng) -> Matrix {
    rng.normal_matrix(n, n).symmetrized().unwrap()
}

/// Entrywise oracle: `W_ij · F_V(x_i(t), x_j(t))` from scalar formulas.
fn entrywise_oracle(x: &Matrix, w: &Matrix, kind: NodeFunction) -> Vec<Matrix> {
    let (n, t_len) = x.shape();
    let mean: Vec<f64> = (0..n)
        .map(|i| (0..t_len).map(|t| x[(i, t)]).sum::<f64>() / t_len as f64)
        .collect();
    let (ic_w, lde_w) = kind.weights();
    (0..t_len)
        .map(|t| {
            let mut m = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let mut ic = ((x[(i, t)] - mean[i]) * (x[(j, t)] - mean[j])).abs();
                    if i == j && !kind.keep_diagonal {
                        ic = 0.0;
                    }
                    let lde = (x[(i, t)] - x[(j, t)]) * (x[(i, t)] - x[(j, t)]);
                    m[(i, j)] = w[(i, j)] * (ic_w * ic + lde_w * lde);
                }
            }
            m
        })
        .collect()
}

const KINDS: [NodeFunction; 4] = [
    NodeFunction::ic(),
    NodeFunction::ic().with_diagonal(false),
    NodeFunction::lde(),
    NodeFunction::combo(0.7, 0.3),
];

#[test]
fn ones_mask_gives_raw_profile() {
    let mut rng = Rng::new(1);
    let x = random_signal(4, 6, &mut rng);
    let w = SupportMatrix::fixed(Matrix::filled(4, 4, 1.0)).unwrap();
    let g = graph_variate_tensor(&x, &w, NodeFunction::lde(), false, false).unwrap();
    for t in 0..6 {
        assert_eq!(g.slice(t), node_function_lde(&x.sample(t)));
    }
}

#[test]
fn zero_mask_gives_zero() {
    let mut rng = Rng::new(2);
    let x = random_signal(4, 3, &mut rng);
    let w = SupportMatrix::fixed(Matrix::zeros(4, 4)).unwrap();
    for kind in KINDS {
        let g = graph_variate_tensor(&x, &w, kind, false, false).unwrap();
        assert!(g.slices.as_slice().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn matches_entrywise_oracle() {
    let mut rng = Rng::new(3);
    let x = random_signal(5, 7, &mut rng);
    let w = SupportMatrix::fixed(random_symmetric(5, &mut rng)).unwrap();
    for kind in KINDS {
        let g = graph_variate_tensor(&x, &w, kind, false, false).unwrap();
        let oracle = entrywise_oracle(x.values(), &w.effective(), kind);
        for (t, o) in oracle.iter().enumerate() {
            assert!(g.slice(t).max_abs_diff(o) < 1e-13, "{kind} t={t}");
        }
    }
}

#[test]
fn zave_zscores_before_profile() {
    let mut rng = Rng::new(4);
    let x = random_signal(5, 4, &mut rng);
    let w = SupportMatrix::fixed(random_symmetric(5, &mut rng)).unwrap();
    let z = zscore_across_nodes(x.values());
    let g = graph_variate_tensor(&x, &w, NodeFunction::ic(), false, true).unwrap();
    let oracle = entrywise_oracle(&z, &w.effective(), NodeFunction::ic());
    for (t, o) in oracle.iter().enumerate() {
        assert!(g.slice(t).max_abs_diff(o) < 1e-13);
    }
}

#[test]
fn dim_mismatch_rejected() {
    let mut rng = Rng::new(5);
    let x = random_signal(4, 3, &mut rng);
    let w = SupportMatrix::fixed(Matrix::identity(3)).unwrap();
    assert!(matches!(
        graph_variate_tensor(&x, &w, NodeFunction::lde(), false, false),
        Err(Error::DimMismatch(_))
    ));
}

#[test]
fn renormalize_literals() {
    assert_eq!(renormalize_dynamic(&Matrix::zeros(2, 2), EPS), Matrix::identity(2));
    let r = renormalize_dynamic(&Matrix::filled(2, 2, 1.0), EPS);
    let expected = Matrix::from_rows(&[&[2.0 / 3.0, 1.0 / 3.0], &[1.0 / 3.0, 2.0 / 3.0]]);
    assert!(r.max_abs_diff(&expected) < 1e-15);
}

#[test]
fn renormalize_inverts_algebraically() {
    let mut rng = Rng::new(6);
    let a = rng.uniform_matrix(6, 6, 0.0, 2.0).symmetrized().unwrap();
    let out = renormalize_dynamic(&a, EPS);
    assert!(out.is_symmetric(1e-15));
    let mut a_plus = a.clone();
    for i in 0..6 {
        a_plus[(i, i)] += 1.0;
    }
    let deg: Vec<f64> = (0..6).map(|i| a_plus.row(i).iter().sum::<f64>()).collect();
    let back = Matrix::from_fn(6, 6, |i, j| deg[i].sqrt() * out[(i, j)] * deg[j].sqrt());
    assert!(back.max_abs_diff(&a_plus) < 1e-12);
}

#[test]
fn renormalize_clamps_negative_degree() {
    let a = Matrix::from_rows(&[&[0.0, -3.0], &[-3.0, 0.0]]);
    let out = renormalize_dynamic(&a, EPS);
    // Degrees are -2; both clamp to eps.
    assert!((out[(0, 1)] + 3.0 / EPS).abs() < 1e-6 * 3.0 / EPS);
    assert!(out.all_finite());
}

#[test]
fn renormalized_tensor_matches_recomputation() {
    let mut rng = Rng::new(7);
    let x = random_signal(5, 4, &mut rng);
    let w = SupportMatrix::fixed(rng.uniform_matrix(5, 5, 0.0, 1.0).symmetrized().unwrap()).unwrap();
    let raw = graph_variate_tensor(&x, &w, NodeFunction::lde(), false, false).unwrap();
    let ren = graph_variate_tensor(&x, &w, NodeFunction::lde(), true, false).unwrap();
    assert!(ren.renormalized);
    for t in 0..4 {
        assert_eq!(ren.slice(t), renormalize_dynamic(&raw.slice(t), EPS));
        assert!(ren.slice(t).is_symmetric(1e-12));
    }
}

#[test]
fn ic_slice_is_congruence() {
    let mut rng = Rng::new(8);
    let x = random_signal(6, 5, &mut rng);
    let w = SupportMatrix::fixed(random_symmetric(6, &mut rng)).unwrap();
    let g = graph_variate_tensor(&x, &w, NodeFunction::ic(), false, false).unwrap();
    let mean = x.temporal_mean();
    for t in 0..5 {
        let d: Vec<f64> = x.sample(t).iter().zip(&mean).map(|(a, m)| (a - m).abs()).collect();
        let dd = Matrix::diag(&d);
        let dwd = dd.matmul(&w.effective()).unwrap().matmul(&dd).unwrap();
        let s = g.slice(t);
        for i in 0..6 {
            for j in 0..6 {
                assert!((s[(i, j)] - dwd[(i, j)]).abs() <= 4.0 * f64::EPSILON * dwd[(i, j)].abs());
            }
        }
    }
}

#[test]
fn lde_profile_rank_at_most_three() {
    let mut rng = Rng::new(10);
    let x = rng.normal_vec(10);
    let j = node_function_lde(&x);
    assert_eq!(numeric_rank(&j, 1e-10).unwrap(), 3);

    // Same matrix from the factored form u1ᵀ − 2vvᵀ + 1uᵀ.
    let u: Vec<f64> = x.iter().map(|v| v * v).collect();
    let f = Matrix::from_fn(10, 10, |a, b| u[a] - 2.0 * x[a] * x[b] + u[b]);
    assert!(f.max_abs_diff(&j) < 1e-12);
}

#[test]
fn ic_outer_product_oracle() {
    let mut rng = Rng::new(11);
    let x = rng.normal_vec(6);
    let m = rng.normal_vec(6);
    let j = node_function_ic(&x, &m, true);
    for a in 0..6 {
        for b in 0..6 {
            let oracle = ((x[a] - m[a]) * (x[b] - m[b])).abs();
            assert!((j[(a, b)] - oracle).abs() <= 1e-14);
        }
    }
}

#[test]
fn pearson_matches_textbook_formula() {
    // Three AR(1)-coupled channels.
    let mut rng = Rng::new(12);
    let t_len = 200;
    let mut v = Matrix::zeros(3, t_len);
    for t in 1..t_len {
        let prev = v.col(t - 1);
        v[(0, t)] = 0.8 * prev[0] + rng.normal();
        v[(1, t)] = 0.5 * prev[1] + 0.4 * prev[0] + rng.normal();
        v[(2, t)] = 0.3 * prev[2] - 0.6 * prev[1] + rng.normal();
    }
    let x = MultivariateSignal::new(v.clone()).unwrap();
    let w = build_support_correlation(&x, false).unwrap().effective();
    let n = t_len as f64;
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = (v.row(i), v.row(j));
            let sx: f64 = a.iter().sum();
            let sy: f64 = b.iter().sum();
            let sxy: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
            let sxx: f64 = a.iter().map(|p| p * p).sum();
            let syy: f64 = b.iter().map(|q| q * q).sum();
            let r = (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt();
            assert!((w[(i, j)] - r).abs() < 1e-12, "({i},{j}) {} vs {r}", w[(i, j)]);
        }
    }
}

#[test]
fn kron_identity_matches_batched() {
    let mut rng = Rng::new(13);
    for (n, t) in [(2, 1), (3, 4), (5, 7)] {
        let x = random_signal(n, t, &mut rng);
        let w = SupportMatrix::fixed(random_symmetric(n, &mut rng)).unwrap();
        for kind in KINDS {
            let g = graph_variate_tensor(&x, &w, kind, false, false).unwrap();
            let batched = graph_conv(x.values(), &g).unwrap();
            let naive = kron_apply_naive(&x, &w, kind, &Matrix::identity(t), DEFAULT_KRON_CAP).unwrap();
            assert!(batched.max_abs_diff(&naive) < 1e-10);
        }
    }
}

#[test]
fn kron_zero_temporal_gives_zero() {
    let mut rng = Rng::new(14);
    let x = random_signal(3, 4, &mut rng);
    let w = SupportMatrix::fixed(random_symmetric(3, &mut rng)).unwrap();
    let y = kron_apply_naive(&x, &w, NodeFunction::lde(), &Matrix::zeros(4, 4), DEFAULT_KRON_CAP).unwrap();
    assert_eq!(y, Matrix::zeros(3, 4));
}

#[test]
fn kron_hand_expanded_two_by_two() {
    // x(0) = [1, 2], x(1) = [0, 3]; W = [[1, 2], [2, 1]]; LDE.
    // J(0) = [[0,1],[1,0]] -> Ω(0) = [[0,2],[2,0]]
    // J(1) = [[0,9],[9,0]] -> Ω(1) = [[0,18],[18,0]]
    // L = [[1, 2], [3, 4]]: K = [[Ω0, 2Ω1], [3Ω0, 4Ω1]], vec(X) = [1, 2, 0, 3].
    let x = MultivariateSignal::new(Matrix::from_rows(&[&[1.0, 0.0], &[2.0, 3.0]])).unwrap();
    let w = SupportMatrix::fixed(Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]])).unwrap();
    let l = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
    let k = Matrix::from_rows(&[
        &[0.0, 2.0, 0.0, 36.0],
        &[2.0, 0.0, 36.0, 0.0],
        &[0.0, 6.0, 0.0, 72.0],
        &[6.0, 0.0, 72.0, 0.0],
    ]);
    let g = graph_variate_tensor(&x, &w, NodeFunction::lde(), false, false).unwrap();
    assert_eq!(kron_kernel(&g.slices, &l, DEFAULT_KRON_CAP).unwrap(), k);
    let y = kron_apply_naive(&x, &w, NodeFunction::lde(), &l, DEFAULT_KRON_CAP).unwrap();
    let flat = k.matvec(&[1.0, 2.0, 0.0, 3.0]).unwrap();
    assert_eq!(y, Matrix::from_rows(&[&[flat[0], flat[2]], &[flat[1], flat[3]]]));
}

#[test]
fn kron_memory_cap() {
    let mut rng = Rng::new(15);
    let x = random_signal(4, 5, &mut rng);
    let w = SupportMatrix::fixed(Matrix::identity(4)).unwrap();
    assert!(matches!(
        kron_apply_naive(&x, &w, NodeFunction::lde(), &Matrix::identity(5), 19),
        Err(Error::MemoryBudgetExceeded { required: 20, cap: 19 })
    ));
}

#[test]
fn factored_conv_matches_dense() {
    let mut rng = Rng::new(16);
    let x = random_signal(7, 9, &mut rng);
    let w = SupportMatrix::fixed(random_symmetric(7, &mut rng)).unwrap();
    for kind in KINDS {
        let g = graph_variate_tensor(&x, &w, kind, false, false).unwrap();
        let dense = graph_conv(x.values(), &g).unwrap();
        let fact = graph_conv_factored(&x, &w, kind).unwrap();
        assert!(dense.max_abs_diff(&fact) < 1e-10 * dense.max_abs().max(1.0), "{kind}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn slices_symmetric_and_lde_traceless(seed in any::<u64>(), n in 2usize..10, t in 1usize..8) {
        let mut rng = Rng::new(seed);
        let x = random_signal(n, t, &mut rng);
        let w = SupportMatrix::fixed(rng.uniform_matrix(n, n, 0.0, 1.0).symmetrized().unwrap()).unwrap();
        for kind in KINDS {
            let g = graph_variate_tensor(&x, &w, kind, false, false).unwrap();
            for s in g.slices.slices() {
                prop_assert!(s.is_symmetric(1e-10));
            }
        }
        let g = graph_variate_tensor(&x, &w, NodeFunction::lde(), false, false).unwrap();
        for s in g.slices.slices() {
            prop_assert!(s.trace() == 0.0);
            prop_assert!(s.as_slice().iter().all(|&v| v >= 0.0));
        }
    }
}
