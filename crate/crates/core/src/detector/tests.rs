use super::*;
use crate::linalg::hermitian_eigen;
use crate::model::{generate_block, ConstellationKind};
use crate::oracle::exhaustive_detect;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn random_symbols(rng: &mut ChaCha8Rng, con: &Constellation, m: usize, i: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(m, i, |_, _| con.points()[rng.random_range(0..con.len())])
}

/// Metric from the trace identity
/// `||L_{1:i}||^2 - tr((S^H S)^+ S^H L_{1:i} L_{1:i}^H S)` with `S` the
/// `i x M` matrix `s_partial^H`, the pseudoinverse taken through an
/// eigendecomposition rather than the SVD.
fn trace_form_metric(reduced: &ReducedProblem, s_partial: &ComplexMatrix) -> f64 {
    let i = s_partial.cols();
    let l = reduced.r_lower.row_block(0, i);
    let s = s_partial.adjoint();
    let b = s.adjoint_mul(&s).unwrap();
    let eig = hermitian_eigen(&b).unwrap();
    let vmax = eig.values.iter().copied().fold(0.0, f64::max);
    let m = b.rows();
    let mut b_pinv = ComplexMatrix::zeros(m, m);
    for (k, &lambda) in eig.values.iter().enumerate() {
        if lambda > 1e-10 * vmax {
            for p in 0..m {
                for q in 0..m {
                    b_pinv[(p, q)] += eig.vectors[(p, k)] * eig.vectors[(q, k)].conj() / lambda;
                }
            }
        }
    }
    let ls = l.adjoint_mul(&s).unwrap();
    let inner = b_pinv.matmul(&ls.adjoint_mul(&ls).unwrap()).unwrap();
    l.frobenius_sq() - inner.trace().unwrap().re
}

#[test]
fn scalar_gram_is_annihilated() {
    // Columns orthogonal with equal norm: gram = 3 I.
    let x = ComplexMatrix::from_rows(&[
        vec![c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)],
        vec![
            c(1.0, 0.0),
            c(-0.5, 0.75f64.sqrt()),
            c(-0.5, -(0.75f64.sqrt())),
        ],
        vec![
            c(1.0, 0.0),
            c(-0.5, -(0.75f64.sqrt())),
            c(-0.5, 0.75f64.sqrt()),
        ],
    ]);
    let reduced = reduce(&x).unwrap();
    assert!((reduced.rho_min - 3.0).abs() < 1e-12);
    assert_eq!(reduced.r_lower.frobenius_sq(), 0.0);
    assert_eq!(reduced.total_energy(), 0.0);
}

#[test]
fn noiseless_block_has_rank_m() {
    let con = Constellation::qpsk();
    for seed in 0..10 {
        let block = generate_block(6, 2, 8, &con, f64::INFINITY, seed).unwrap();
        let reduced = reduce(&block.x).unwrap();
        assert!(reduced.rho_min.abs() < 1e-9 * reduced.gram.trace().unwrap().re);
        let ev =
            hermitian_eigen(&reduced.r_lower.matmul(&reduced.r_lower.adjoint()).unwrap()).unwrap();
        let top = ev.values[7];
        assert_eq!(ev.values.iter().filter(|&&v| v > 1e-9 * top).count(), 2);
    }
}

#[test]
fn reduction_reconstructs_gram() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let (n, t) = (rng.random_range(1..12), rng.random_range(1..10));
        let x = random_matrix(&mut rng, n, t);
        let r = reduce(&x).unwrap();
        assert!(r.rho_min >= 0.0);
        let rebuilt = r
            .r_lower
            .matmul(&r.r_lower.adjoint())
            .unwrap()
            .shift_diagonal(r.rho_min)
            .unwrap();
        let err = rebuilt.sub(&r.gram).unwrap().frobenius_norm();
        assert!(
            err <= 1e-8 * r.gram.frobenius_norm(),
            "n={n} t={t} err={err}"
        );
    }
}

#[test]
fn reduce_rejects_bad_input() {
    assert!(reduce(&ComplexMatrix::zeros(0, 3)).is_err());
}

#[test]
fn direct_metric_matches_trace_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for kind in [
        ConstellationKind::Bpsk,
        ConstellationKind::Qpsk,
        ConstellationKind::Qam16,
    ] {
        let con = Constellation::new(kind);
        for _ in 0..40 {
            let (m, t) = (rng.random_range(1..4), rng.random_range(4..9));
            let n = rng.random_range(2..10);
            let x = random_matrix(&mut rng, n, t);
            let reduced = reduce(&x).unwrap();
            let i = rng.random_range(1..=t);
            let s = random_symbols(&mut rng, &con, m, i);
            let direct = partial_metric_direct(&reduced, &s).unwrap();
            let trace = trace_form_metric(&reduced, &s);
            assert!(direct >= -1e-12);
            assert!(
                (direct - trace).abs() <= 1e-8 * (1.0 + reduced.total_energy()),
                "{direct} vs {trace}"
            );
        }
    }
}

#[test]
fn zero_symbols_leave_full_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let reduced = reduce(&random_matrix(&mut rng, 5, 6)).unwrap();
    for i in 1..=6 {
        let metric = partial_metric_direct(&reduced, &ComplexMatrix::zeros(2, i)).unwrap();
        assert!((metric - reduced.prefix_energy(i)).abs() < 1e-12 * (1.0 + metric));
    }
}

#[test]
fn spanning_symbols_give_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let reduced = reduce(&random_matrix(&mut rng, 8, 5)).unwrap();
    // The identity spans everything.
    let metric = partial_metric_direct(&reduced, &ComplexMatrix::identity(5)).unwrap();
    assert!(metric.abs() < 1e-12 * reduced.total_energy());
}

#[test]
fn metric_length_is_checked() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let reduced = reduce(&random_matrix(&mut rng, 3, 4)).unwrap();
    assert!(partial_metric_direct(&reduced, &ComplexMatrix::zeros(2, 0)).is_err());
    assert!(partial_metric_direct(&reduced, &ComplexMatrix::zeros(2, 5)).is_err());
    assert!(full_metric(&reduced, &ComplexMatrix::zeros(2, 3)).is_err());
}

#[test]
fn incremental_metric_tracks_direct() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let con = Constellation::qam16();
    for trial in 0..30 {
        let (m, t) = (rng.random_range(1..4), rng.random_range(4..10));
        let block = generate_block(rng.random_range(m..12), m, t, &con, 5.0, trial).unwrap();
        let reduced = reduce(&block.x).unwrap();
        let mut state = SearchState::new(&reduced, m);
        let mut prev = 0.0;
        for i in 0..t {
            let symbols: Vec<Complex64> = if i < m {
                block.pilots().col(i)
            } else {
                (0..m)
                    .map(|_| con.points()[rng.random_range(0..con.len())])
                    .collect()
            };
            let metric = state.extend(&reduced, &symbols);
            assert_eq!(state.depth(), i + 1);
            assert_eq!(state.metric(), metric);
            let direct = partial_metric_direct(&reduced, &state.partial_symbols()).unwrap();
            assert!(
                metrics_agree(metric, direct, reduced.prefix_energy(i + 1), 1e-7),
                "{metric} vs {direct}"
            );
            assert!(metric + 1e-9 * (1.0 + metric) >= prev);
            prev = metric;
        }
        assert_eq!(state.visited(), t as u64);
    }
}

#[test]
fn retreat_restores_parent() {
    let con = Constellation::qpsk();
    let block = generate_block(6, 2, 6, &con, 3.0, 9).unwrap();
    let reduced = reduce(&block.x).unwrap();
    let mut state = SearchState::new(&reduced, 2);
    for j in 0..3 {
        state.extend(&reduced, &block.s_true.col(j));
    }
    let before = state.metric();
    let child = extend_state(&state, &reduced, &[con.points()[1], con.points()[2]]);
    assert_eq!(child.depth(), 4);
    assert_eq!(state.depth(), 3);
    state.extend(&reduced, &[con.points()[3], con.points()[0]]);
    state.retreat();
    assert_eq!(state.metric(), before);
    let again = state.extend(&reduced, &[con.points()[1], con.points()[2]]);
    assert_eq!(again, child.metric());
}

#[test]
fn noiseless_true_path_has_zero_metric() {
    let con = Constellation::qam16();
    for seed in 0..5 {
        let block = generate_block(8, 2, 8, &con, f64::INFINITY, seed).unwrap();
        let reduced = reduce(&block.x).unwrap();
        let mut state = SearchState::new(&reduced, 2);
        for j in 0..8 {
            let metric = state.extend(&reduced, &block.s_true.col(j));
            assert!(
                metric.abs() <= 1e-9 * reduced.gram.trace().unwrap().re,
                "layer {j}: {metric}"
            );
        }
    }
}

#[test]
fn noiseless_detection_is_exact() {
    let con = Constellation::qpsk();
    for seed in 0..10 {
        let block = generate_block(4, 2, 4, &con, f64::INFINITY, seed).unwrap();
        let res = glrt_detect(
            &block.x,
            &block.pilots(),
            &con,
            RadiusPolicy::Paper { c: 1e-3 },
        )
        .unwrap();
        assert_eq!(res.s_detected, block.s_true);
        assert!(res.metric < 1e-9);
        let herr = res.h_estimate.sub(&block.h_true).unwrap().frobenius_norm();
        assert!(herr < 1e-8 * block.h_true.frobenius_norm());
    }
}

#[test]
fn single_user_matches_oracle() {
    let con = Constellation::bpsk();
    for seed in 0..40 {
        let snr = [-3.0, 3.0, 10.0][seed as usize % 3];
        let block = generate_block(4, 1, 3, &con, snr, seed).unwrap();
        let oracle = exhaustive_detect(&block.x, &block.pilots(), &con).unwrap();
        assert_eq!(oracle.visited_nodes, 4);
        let res = glrt_detect(
            &block.x,
            &block.pilots(),
            &con,
            RadiusPolicy::Paper { c: 0.1 },
        )
        .unwrap();
        assert_eq!(res.s_detected, oracle.s_detected);
        assert!((res.metric - oracle.metric).abs() <= 1e-9 * (1.0 + oracle.metric));
    }
}

#[test]
fn pilot_layers_visited_once_per_pass() {
    let con = Constellation::qpsk();
    for seed in 0..20 {
        let block = generate_block(8, 2, 6, &con, 5.0, seed).unwrap();
        // A tiny radius forces restarts.
        let res = glrt_detect(
            &block.x,
            &block.pilots(),
            &con,
            RadiusPolicy::Paper { c: 1e-6 },
        )
        .unwrap();
        assert_eq!(&res.layer_visits_final_pass[..2], &[1, 1]);
        let passes = 1 + u64::from(res.radius_restarts);
        assert_eq!(&res.layer_visits[..2], &[passes, passes]);
        assert_eq!(res.visited_nodes, res.layer_visits.iter().sum::<u64>());
        assert_eq!(
            res.visited_nodes_final_pass,
            res.layer_visits_final_pass.iter().sum::<u64>()
        );
        assert!(res.visited_nodes_final_pass >= 6);
        assert!(res.nodes_within_radius >= 6 && res.nodes_within_radius <= res.visited_nodes);
    }
}

#[test]
fn detected_entries_are_valid() {
    let con = Constellation::qam16();
    let block = generate_block(10, 2, 6, &con, 0.0, 17).unwrap();
    let res = glrt_detect(
        &block.x,
        &block.pilots(),
        &con,
        RadiusPolicy::Paper { c: 1.0 },
    )
    .unwrap();
    let pilots = block.pilots();
    for k in 0..2 {
        for j in 0..6 {
            let v = res.s_detected[(k, j)];
            if j < 2 {
                assert_eq!(v, pilots[(k, j)]);
            } else {
                assert!(con.points().contains(&v));
            }
        }
    }
    let direct = full_metric(&reduce(&block.x).unwrap(), &res.s_detected).unwrap();
    assert!((res.metric - direct.max(0.0)).abs() <= 1e-6 * (1.0 + direct.abs()));
}

#[test]
fn radius_examples() {
    assert_eq!(
        RadiusPolicy::Paper { c: 0.5 }
            .initial_radius_sq(100)
            .unwrap(),
        50.0
    );
    let warm = RadiusPolicy::Warmstart {
        baseline_metric: 12.3,
    }
    .initial_radius_sq(100)
    .unwrap();
    assert!(warm >= 12.3 && warm - 12.3 < 1e-7);
    assert_eq!(
        radius_policy(RadiusMode::Paper, 0.5, 100, None).unwrap(),
        50.0
    );
    assert!(radius_policy(RadiusMode::Warmstart, 1.0, 100, None).is_err());
    for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(RadiusPolicy::Paper { c: bad }
            .initial_radius_sq(10)
            .is_err());
    }
    assert!(RadiusPolicy::Warmstart {
        baseline_metric: -1.0
    }
    .initial_radius_sq(10)
    .is_err());
    assert_eq!(
        "warmstart".parse::<RadiusMode>().unwrap(),
        RadiusMode::Warmstart
    );
    assert!("best-first".parse::<RadiusMode>().is_err());
}

#[test]
fn radius_choice_does_not_change_answer() {
    let con = Constellation::qpsk();
    for seed in 0..15 {
        let block = generate_block(6, 2, 5, &con, 4.0, seed).unwrap();
        let base = glrt_detect(
            &block.x,
            &block.pilots(),
            &con,
            RadiusPolicy::Paper { c: 1.0 },
        )
        .unwrap();
        for policy in [
            RadiusPolicy::Paper { c: 0.1 },
            RadiusPolicy::Paper { c: 10.0 },
            RadiusPolicy::Warmstart {
                baseline_metric: base.metric * 3.0 + 1.0,
            },
        ] {
            let res = glrt_detect(&block.x, &block.pilots(), &con, policy).unwrap();
            assert_eq!(res.s_detected, base.s_detected);
            assert_eq!(res.metric, base.metric);
        }
    }
}

#[test]
fn rejects_bad_pilots() {
    let con = Constellation::qpsk();
    let block = generate_block(4, 2, 4, &con, 5.0, 0).unwrap();
    let policy = RadiusPolicy::Paper { c: 1.0 };
    assert!(glrt_detect(&block.x, &ComplexMatrix::zeros(2, 3), &con, policy).is_err());
    assert!(glrt_detect(&block.x, &ComplexMatrix::identity(4), &con, policy).is_err());
}
