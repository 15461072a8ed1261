//! Oracles shared by the test targets.

/// Minimum-norm least squares through a one-sided Jacobi SVD: rotate the
/// columns of `A` until pairwise orthogonal, so `AV = [c_1 … c_n]` and
/// `A⁺b = Σ v_k c_kᵀb / ‖c_k‖²` over the nonzero columns.
pub fn jacobi_min_norm(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let (m, n) = (a.len(), a[0].len());
    let mut c: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a[i][j]).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for j in 0..n {
            for k in j + 1..n {
                let (alpha, beta, gamma) =
                    (dot(&c[j], &c[j]), dot(&c[k], &c[k]), dot(&c[j], &c[k]));
                if gamma.abs() <= 1e-300 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt().max(1e-300));
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for col in [&mut c, &mut v] {
                    let (cj, ck) = (col[j].clone(), col[k].clone());
                    for i in 0..cj.len() {
                        col[j][i] = cs * cj[i] - sn * ck[i];
                        col[k][i] = sn * cj[i] + cs * ck[i];
                    }
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let norms: Vec<f64> = c.iter().map(|cj| dot(cj, cj)).collect();
    let top = norms.iter().cloned().fold(0.0, f64::max);
    let mut x = vec![0.0; n];
    for k in 0..n {
        if norms[k] > top * 1e-24 {
            let coef = dot(&c[k], b) / norms[k];
            for i in 0..n {
                x[i] += v[k][i] * coef;
            }
        }
    }
    x
}
