//! Library results against independent computations.

mod common;

use common::jacobi_min_norm;
use nalgebra::{DMatrix, DVector};
use overparam_mi::datamodels::{
    make_context, sample_trial, GaussianQuery, ModelData, QueryContext,
};
use overparam_mi::numerics::{min_norm_lstsq, normal_cdf, normal_sf, DenseMatrix};
use overparam_mi::rng::derive_stream;
use overparam_mi::theory::{
    advantage_point, minnorm_variances, ridge_variances, stieltjes_mp, TheoryInputs,
};
use overparam_mi::{ExperimentConfig, ModelKind};

#[test]
fn min_norm_matches_jacobi_pseudoinverse() {
    let mut s = derive_stream(11, &[0]);
    for case in 0..50 {
        let m = 2 + s.index(7);
        let n = 2 + s.index(11);
        let rows: Vec<Vec<f64>> = (0..m).map(|_| s.standard_normal(n)).collect();
        let b = s.standard_normal(m);
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let got = min_norm_lstsq(&x, &b).unwrap().beta_hat;
        let want = jacobi_min_norm(&rows, &b);
        let scale = want.iter().map(|v| v.abs()).fold(1.0, f64::max);
        for (g, w) in got.iter().zip(&want) {
            assert!(
                (g - w).abs() <= 1e-10 * scale,
                "case {case} ({m}x{n}): {g} vs {w}"
            );
        }
    }
}

#[test]
fn normal_tails_match_high_precision_values() {
    let cases = [
        (normal_cdf(1.96), 0.9750021048517795658634),
        (normal_sf(5.0), 2.866515718791939116737e-7),
        (normal_sf(10.0), 7.619853024160526065973e-24),
        (normal_sf(37.0), 5.725571222524576822683e-300),
    ];
    for (got, want) in cases {
        assert!(((got - want) / want).abs() < 1e-13, "{got} vs {want}");
    }
}

fn gauss_pdf(x: f64, var: f64) -> f64 {
    (-x * x / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Total variation between two centered normals. The densities cross where
/// `f₀ − f₁` changes sign, found by bisection; integrating between crossings
/// keeps Simpson away from the kink of `|f₀ − f₁|`.
fn tv_by_quadrature(v0: f64, v1: f64) -> f64 {
    let diff = |x: f64| gauss_pdf(x, v0) - gauss_pdf(x, v1);
    let (mut lo, mut hi) = (1e-9, 50.0 * v0.max(v1).sqrt());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if diff(lo).signum() == diff(mid).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let cross = 0.5 * (lo + hi);
    let end = 40.0 * v0.max(v1).sqrt();
    let inner = simpson(|x| diff(x).abs(), 0.0, cross, 20_000);
    let outer = simpson(|x| diff(x).abs(), cross, end, 200_000);
    inner + outer
}

#[test]
fn advantage_matches_total_variation_quadrature() {
    let cases = [
        (1.0, 4.0, 0.3226745688347686647522),
        (1.0, 1.01, 0.002407683799445845063569),
        (0.25, 3.0, 0.5349097272746574674861),
        (0.9881072026800670016750, 2.0, 0.1688725064379688778027),
    ];
    for (a, b, want) in cases {
        let got = advantage_point(a, b).unwrap();
        assert!((got - want).abs() < 1e-13, "({a},{b}): {got} vs {want}");
        let quad = tv_by_quadrature(a, b);
        assert!(
            (got - quad).abs() < 1e-8,
            "({a},{b}): {got} vs quadrature {quad}"
        );
    }
}

#[test]
fn stieltjes_matches_high_precision_roots() {
    // γ, λ, g(−λ), g′(−λ)
    let cases = [
        (2.0, 0.5, 1.280776406404415137455, 2.212678125181664867595),
        (10.0, 0.01, 90.01109741229123682914, 9000.001368024592704530),
        (0.5, 1.0, 0.5615528128088302749107, 0.3488746876271654073162),
        (
            50.0,
            1e-8,
            98000000.00040816326522,
            9.800000000000000000008e15,
        ),
    ];
    for (gamma, lambda, g, gp) in cases {
        let st = stieltjes_mp(gamma, lambda).unwrap();
        assert!(
            ((st.g - g) / g).abs() < 1e-12,
            "g at {gamma},{lambda}: {}",
            st.g
        );
        assert!(
            ((st.g_prime - gp) / gp).abs() < 1e-9,
            "g' at {gamma},{lambda}: {}",
            st.g_prime
        );
    }
}

#[test]
fn stieltjes_derivative_matches_finite_difference() {
    for gamma in [0.3, 0.9, 1.1, 2.0, 10.0, 50.0] {
        for lambda in [1e-3, 1e-2, 1e-1, 1.0, 10.0] {
            let h = 1e-5 * lambda;
            let up = stieltjes_mp(gamma, lambda + h).unwrap().g;
            let down = stieltjes_mp(gamma, lambda - h).unwrap().g;
            // derivative in z at z = −λ
            let fd = -(up - down) / (2.0 * h);
            let gp = stieltjes_mp(gamma, lambda).unwrap().g_prime;
            assert!(
                ((fd - gp) / gp).abs() < 1e-6,
                "γ={gamma} λ={lambda}: {fd} vs {gp}"
            );
        }
    }
}

#[test]
fn ridge_tends_to_min_norm() {
    for gamma in [2.0, 10.0, 50.0] {
        let inp = TheoryInputs::concentration(1000, (1000.0 * gamma) as usize, 10_000_000, 1.0);
        let mn = minnorm_variances(&inp).unwrap();
        let rg = ridge_variances(&inp, 1e-8).unwrap();
        assert!(((rg.sigma0_sq - mn.sigma0_sq) / mn.sigma0_sq).abs() < 1e-3);
        assert!(((rg.sigma1_sq - mn.sigma1_sq) / mn.sigma1_sq).abs() < 1e-3);
    }
}

fn variance(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

fn pinv_predict(rows: &DMatrix<f64>, y: &DVector<f64>, x0: &DVector<f64>) -> f64 {
    let pinv = rows.clone().pseudo_inverse(1e-12).unwrap();
    (x0.transpose() * (pinv * y))[(0, 0)]
}

/// Gaussian model with the full `n × D` design and a dense pseudoinverse.
#[test]
fn reduced_gaussian_sampler_matches_full_design() {
    let (n, p, dim, sigma, trials) = (12usize, 30usize, 80usize, 0.7, 6000usize);
    let mut s = derive_stream(5, &[1]);
    let x0 = s.standard_normal(dim);
    let norm_x0p_sq: f64 = x0[..p].iter().map(|v| v * v).sum();
    let norm_x0_sq: f64 = x0.iter().map(|v| v * v).sum();
    let ctx = QueryContext {
        n,
        dim,
        sigma,
        ps: vec![p],
        data: ModelData::GaussianLinear(GaussianQuery {
            norm_x0p_sq: vec![norm_x0p_sq],
            norm_x0_sq,
        }),
    };
    let x0p = DVector::from_column_slice(&x0[..p]);
    for m in [0u8, 1] {
        let mut reduced = Vec::with_capacity(trials);
        let mut direct = Vec::with_capacity(trials);
        for t in 0..trials {
            let mut rs = derive_stream(6, &[m as u64, t as u64]);
            reduced.push(sample_trial(&ctx, 0, m, 0.0, &mut rs).unwrap().y_hat);

            let mut ds = derive_stream(7, &[m as u64, t as u64]);
            let beta: Vec<f64> = ds
                .standard_normal(dim)
                .iter()
                .map(|v| v / (dim as f64).sqrt())
                .collect();
            let mut xs = DMatrix::zeros(n, p);
            let mut ys = DVector::zeros(n);
            for i in 0..n {
                let row = if i == 0 && m == 1 {
                    x0.clone()
                } else {
                    ds.standard_normal(dim)
                };
                for j in 0..p {
                    xs[(i, j)] = row[j];
                }
                ys[i] =
                    row.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + sigma * ds.normal();
            }
            direct.push(pinv_predict(&xs, &ys, &x0p));
        }
        let (vr, vd) = (variance(&reduced), variance(&direct));
        // relative SE of a Gaussian sample variance is √(2/N) ≈ 1.8%
        assert!(
            ((vr - vd) / vd).abs() < 0.1,
            "m={m}: reduced {vr} vs direct {vd}"
        );
        let inp = TheoryInputs {
            n,
            p,
            dim,
            sigma,
            norm_x0p_sq,
            norm_x0_sq,
        };
        if m == 1 {
            let want = overparam_mi::theory::sigma1_sq(&inp);
            assert!(((vr - want) / want).abs() < 0.1, "member {vr} vs {want}");
        }
    }
}

/// ReLU model below `p = D` (reduced sampler) against `relu(zᵀV)` rows.
#[test]
fn reduced_relu_sampler_matches_full_design() {
    let cfg = ExperimentConfig {
        model: ModelKind::ReluFeatures,
        n: 12,
        p_grid: Some(vec![30]),
        gamma_grid: None,
        dim: 60,
        latent_dim: 0,
        sigma: 0.5,
        lambda: 0.0,
        lambda_grid: vec![],
        noise_bar: 0.0,
        trials_per_arm: 1,
        bins: 150,
        repeats: 1,
        seed: 0,
    };
    let ctx = make_context(&cfg, &mut derive_stream(8, &[0])).unwrap();
    let ModelData::ReluFeatures(q) = &ctx.data else {
        unreachable!()
    };
    let at = &q.per_p[0];
    let (n, p, dim) = (cfg.n, 30, cfg.dim);
    let x0 = DVector::from_column_slice(&at.x0);
    let trials = 6000;
    for m in [0u8, 1] {
        let mut reduced = Vec::with_capacity(trials);
        let mut direct = Vec::with_capacity(trials);
        for t in 0..trials {
            let mut rs = derive_stream(9, &[m as u64, t as u64]);
            reduced.push(sample_trial(&ctx, 0, m, 0.0, &mut rs).unwrap().y_hat);

            let mut ds = derive_stream(10, &[m as u64, t as u64]);
            let beta: Vec<f64> = ds
                .standard_normal(dim)
                .iter()
                .map(|v| v / (dim as f64).sqrt())
                .collect();
            let mut xs = DMatrix::zeros(n, p);
            let mut ys = DVector::zeros(n);
            for i in 0..n {
                let z = if i == 0 && m == 1 {
                    q.z0.clone()
                } else {
                    ds.standard_normal(dim)
                };
                for j in 0..p {
                    let pre: f64 = (0..dim).map(|k| z[k] * at.v.get(k, j)).sum();
                    xs[(i, j)] = pre.max(0.0);
                }
                ys[i] =
                    z.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + cfg.sigma * ds.normal();
            }
            direct.push(pinv_predict(&xs, &ys, &x0));
        }
        let (vr, vd) = (variance(&reduced), variance(&direct));
        // outputs are heavier-tailed than Gaussian; allow for that
        assert!(
            ((vr - vd) / vd).abs() < 0.15,
            "m={m}: reduced {vr} vs direct {vd}"
        );
    }
}
