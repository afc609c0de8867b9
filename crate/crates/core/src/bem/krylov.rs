//! Restarted GMRES with modified Gram-Schmidt and Givens rotations.

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// True relative residual `‖b − A x‖ / ‖b‖` of the returned solution.
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `A x = b` to relative residual `tol`; `apply` computes `A v`.
pub fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iterations: usize,
) -> Result<GmresOutcome> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(GmresOutcome {
            solution: x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let restart = restart.clamp(1, n.max(1));
    let mut iterations = 0;
    let mut rel = 1.0;
    while iterations < max_iterations {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= tol {
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut cs: Vec<f64> = Vec::with_capacity(restart);
        let mut sn: Vec<f64> = Vec::with_capacity(restart);
        let mut g = vec![beta];
        for k in 0..restart {
            if iterations >= max_iterations {
                break;
            }
            iterations += 1;
            let mut w = apply(&basis[k]);
            let mut col = vec![0.0; k + 2];
            for (i, v) in basis.iter().enumerate() {
                col[i] = dot(&w, v);
                w.iter_mut().zip(v).for_each(|(w, v)| *w -= col[i] * v);
            }
            col[k + 1] = norm(&w);
            for i in 0..k {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let rho = col[k].hypot(col[k + 1]);
            let (c, s) = if rho == 0.0 {
                (1.0, 0.0)
            } else {
                (col[k] / rho, col[k + 1] / rho)
            };
            cs.push(c);
            sn.push(s);
            col[k] = rho;
            let hk1 = col[k + 1];
            col.truncate(k + 1);
            g.push(-s * g[k]);
            g[k] *= c;
            rel = g[k + 1].abs() / bnorm;
            h.push(col);
            if rel <= tol || hk1 == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hk1).collect());
        }
        // Back substitution on the upper-triangular Hessenberg factor.
        let m = h.len();
        let mut y = vec![0.0; m];
        for i in (0..m).rev() {
            let s: f64 = ((i + 1)..m).map(|j| h[j][i] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, v) in y.iter().zip(&basis) {
            x.iter_mut().zip(v).for_each(|(x, v)| *x += yi * v);
        }
        if rel <= tol {
            break;
        }
    }
    let true_rel = {
        let ax = apply(&x);
        norm(&b.iter().zip(&ax).map(|(b, a)| b - a).collect::<Vec<_>>()) / bnorm
    };
    if rel > tol || true_rel.is_nan() || true_rel > 10.0 * tol {
        return Err(Error::NonConvergence {
            iterations,
            residual: true_rel,
        });
    }
    Ok(GmresOutcome {
        solution: x,
        iterations,
        relative_residual: true_rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                4.0 * x[i]
                    - if i > 0 { x[i - 1] } else { 0.0 }
                    - if i + 1 < n { 2.0 * x[i + 1] } else { 0.0 }
            })
            .collect()
    }

    #[test]
    fn solves_nonsymmetric_system() {
        let exact: Vec<f64> = (0..60).map(|i| (i as f64 * 0.3).cos()).collect();
        let b = tridiag(&exact);
        for restart in [5, 60] {
            let out = gmres(tridiag, &b, 1e-12, restart, 2000).unwrap();
            let err = out
                .solution
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "restart {restart}: {err}");
            assert!(out.relative_residual <= 1e-11);
        }
    }

    #[test]
    fn zero_rhs() {
        let out = gmres(tridiag, &[0.0; 5], 1e-8, 5, 10).unwrap();
        assert_eq!(out.solution, vec![0.0; 5]);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn iteration_cap_reports_nonconvergence() {
        let b: Vec<f64> = (0..50).map(|i| i as f64).collect();
        match gmres(tridiag, &b, 1e-14, 2, 3) {
            Err(Error::NonConvergence { iterations, .. }) => assert_eq!(iterations, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
