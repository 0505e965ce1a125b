//! Independent oracles (Monte Carlo, brute force, exact enumeration) for
//! the environment, surrogate, acquisition and statistics modules.

use almab_core::acquisition::greedy_k_center_indices;
use almab_core::env::{gaussian_mixture_reward, true_mixture_mean, Candidate, DragSurfaceSpec, Mixture};
use almab_core::rng::substream;
use almab_core::stats::{bootstrap_ci, wilcoxon_signed_rank, BootstrapSpec, Statistic};
use almab_core::surrogate::{rbf_kernel, GpModel, GpParams};
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;

#[test]
fn mixture_reward_mean_and_variance_match_monte_carlo() {
    let mixture = Mixture::reference();
    let mut rng = substream(11, 0);
    for x in [0.2, 0.5, 0.83] {
        let truth = true_mixture_mean(&[x], &mixture).unwrap();
        let n = 1_000_000;
        let mean = (0..n).map(|_| gaussian_mixture_reward(&[x], &mixture, &mut rng).unwrap()).sum::<f64>() / n as f64;
        // σ = 0.1 ⇒ SE = 1e-4
        assert!((mean - truth).abs() < 4e-4, "x = {x}: {mean} vs {truth}");

        let m = 100_000;
        let draws: Vec<f64> = (0..m).map(|_| gaussian_mixture_reward(&[x], &mixture, &mut rng).unwrap()).collect();
        let avg = draws.iter().sum::<f64>() / m as f64;
        let var = draws.iter().map(|d| (d - avg).powi(2)).sum::<f64>() / (m - 1) as f64;
        assert!((var / 0.01 - 1.0).abs() < 0.05, "variance {var}");
    }
}

#[test]
fn mixture_mean_is_bounded_on_the_unit_interval() {
    let mixture = Mixture::reference();
    let mut rng = substream(12, 0);
    for _ in 0..10_000 {
        let x: f64 = rng.random();
        let m = true_mixture_mean(&[x], &mixture).unwrap();
        assert!(m > 0.0 && m <= 1.0, "mean {m} at {x}");
    }
}

#[test]
fn drag_surface_has_one_local_minimum_on_a_fine_grid() {
    let spec = DragSurfaceSpec::default();
    let n = 200;
    let c = |i: usize| 0.01 + 0.09 * i as f64 / (n - 1) as f64;
    let t = |j: usize| 0.05 + 0.15 * j as f64 / (n - 1) as f64;
    let value = |i: usize, j: usize| spec.surface(c(i), t(j));
    let mut minima = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = value(i, j);
            let mut is_min = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) != (0, 0) && (0..n as i64).contains(&a) && (0..n as i64).contains(&b) {
                        is_min &= v < value(a as usize, b as usize);
                    }
                }
            }
            if is_min {
                minima.push((c(i), t(j), v));
            }
        }
    }
    assert_eq!(minima.len(), 1, "{minima:?}");
    let (cm, tm, vm) = minima[0];
    assert!((cm - 0.075).abs() < 0.001 && (tm - 0.14).abs() < 0.001);
    assert!((vm - 0.0872).abs() <= 0.0005);
}

/// Posterior from an explicit dense inverse, independent of the Cholesky path.
fn dense_posterior(x: &[Vec<f64>], y: &[f64], q: &[f64], p: GpParams) -> (f64, f64) {
    let n = x.len();
    let k = DMatrix::from_fn(n, n, |i, j| {
        rbf_kernel(&x[i], &x[j], p.lengthscale, p.signal_var).unwrap() + if i == j { p.noise_var } else { 0.0 }
    });
    let inv = k.try_inverse().unwrap();
    let ks = DVector::from_iterator(n, x.iter().map(|xi| rbf_kernel(xi, q, p.lengthscale, p.signal_var).unwrap()));
    let w = &inv * &ks;
    (w.dot(&DVector::from_column_slice(y)), p.signal_var - w.dot(&ks))
}

#[test]
fn gp_matches_dense_inverse_oracle() {
    let mut rng = substream(13, 0);
    let p = GpParams { lengthscale: 0.3, signal_var: 1.3, noise_var: 1e-2 };
    for _ in 0..20 {
        let x: Vec<Vec<f64>> = (0..8).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let y: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = GpModel::fit(&x, &y, p).unwrap();
        for _ in 0..20 {
            let q = vec![rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5)];
            let pred = model.predict(&q).unwrap();
            let (m, v) = dense_posterior(&x, &y, &q, p);
            assert!((pred.mean - m).abs() < 1e-8 && (pred.variance - v).abs() < 1e-8);
        }
    }
}

fn radius(pool: &[Candidate], centers: &[usize]) -> f64 {
    pool.iter()
        .map(|p| {
            centers
                .iter()
                .map(|&c| p.coords.iter().zip(&pool[c].coords).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

#[test]
fn greedy_k_center_is_within_twice_the_optimal_radius() {
    let mut rng = substream(14, 0);
    for trial in 0..30 {
        let n = 6 + trial % 7;
        let pool: Vec<Candidate> = (0..n).map(|_| Candidate::new(vec![rng.random(), rng.random()])).collect();
        for k in 1..=3 {
            let greedy = radius(&pool, &greedy_k_center_indices(&pool, &[], k).unwrap());
            let mut best = f64::INFINITY;
            // brute force over all k-subsets via bitmasks
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize == k {
                    let centers: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
                    best = best.min(radius(&pool, &centers));
                }
            }
            assert!(greedy <= 2.0 * best + 1e-12, "n={n} k={k}: {greedy} vs optimum {best}");
        }
    }
}

#[test]
fn bootstrap_width_shrinks_with_sample_size() {
    let mut rng = substream(15, 0);
    let mut medians = Vec::new();
    for n in [10, 100, 1000] {
        let mut widths: Vec<f64> = (0..20)
            .map(|rep| {
                let data: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let spec = BootstrapSpec { resamples: 500, alpha: 0.05, seed: rep };
                let ci = bootstrap_ci(&data, &spec, Statistic::Mean).unwrap();
                ci.upper - ci.lower
            })
            .collect();
        widths.sort_by(f64::total_cmp);
        medians.push(0.5 * (widths[9] + widths[10]));
    }
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
}

/// Exact two-sided p-value of `min(W⁺, W⁻)` by enumerating all sign
/// assignments of ranks 1..=n.
fn exact_signed_rank_p(n: usize, w: f64) -> f64 {
    let total = 1u64 << n;
    let max = (n * (n + 1) / 2) as f64;
    let extreme = (0..total)
        .filter(|mask| {
            let plus: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| (i + 1) as f64).sum();
            plus.min(max - plus) <= w
        })
        .count();
    (extreme as f64 / total as f64).min(1.0)
}

#[test]
fn wilcoxon_normal_approximation_tracks_exact_distribution() {
    let mut rng = substream(16, 0);
    for _ in 0..20 {
        let n = 14;
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let shift: f64 = rng.random_range(0.0..0.8);
        let y: Vec<f64> = x.iter().map(|v| v + shift + rng.sample::<f64, _>(StandardNormal)).collect();
        let r = wilcoxon_signed_rank(&x, &y).unwrap();
        let exact = exact_signed_rank_p(r.n, r.statistic);
        assert!((r.p_value - exact).abs() < 0.02, "approx {} vs exact {exact}", r.p_value);
    }
}
