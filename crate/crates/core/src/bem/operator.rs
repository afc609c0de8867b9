//! Collocation discretization of the normal-field operator `D*`.

use super::mesh::PanelSurface;
use crate::Vector3;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Dense row-major square matrix.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    dim: usize,
    data: Vec<f64>,
}

impl DenseOperator {
    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let mut data = vec![0.0; dim * dim];
        data.par_chunks_mut(dim.max(1))
            .enumerate()
            .for_each(|(i, row)| {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = f(i, j);
                }
            });
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// `K x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "dimension mismatch");
        self.data
            .par_chunks(self.dim.max(1))
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `(x, K x)_W / (x, x)_W` with optional diagonal weights.
    pub fn rayleigh_quotient(&self, x: &[f64], weights: Option<&[f64]>) -> f64 {
        let kx = self.matvec(x);
        let w = |i: usize| weights.map_or(1.0, |w| w[i]);
        let num: f64 = (0..self.dim).map(|i| w(i) * x[i] * kx[i]).sum();
        let den: f64 = (0..self.dim).map(|i| w(i) * x[i] * x[i]).sum();
        num / den
    }

    /// Rayleigh-quotient estimate of the eigenvalue of largest magnitude of
    /// `K + shift·I` after `iterations` power steps from `start`.
    pub fn power_iteration(&self, shift: f64, start: &[f64], iterations: usize) -> f64 {
        let mut x = start.to_vec();
        normalize(&mut x);
        let apply = |x: &[f64]| -> Vec<f64> {
            let mut y = self.matvec(x);
            y.iter_mut().zip(x).for_each(|(y, x)| *y += shift * x);
            y
        };
        for _ in 0..iterations {
            x = apply(&x);
            normalize(&mut x);
        }
        let y = apply(&x);
        x.iter().zip(&y).map(|(a, b)| a * b).sum()
    }
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

/// `A_j n_j·(p − c_j) / (4π|p − c_j|³)`: double-layer kernel of panel `j` at `p`.
fn double_layer(p: &Vector3, c: &Vector3, n: &Vector3, area: f64) -> f64 {
    let d = p - c;
    area * n.dot(&d) / (4.0 * PI * d.norm().powi(3))
}

/// Centroid-collocation matrix of `D*`.
///
/// Off the diagonal `K_ij = A_j n_i·(c_j − c_i) / (4π|c_i − c_j|³)`. The
/// diagonal is fixed so that `Σ_j D_ij = −1/2` for the companion double-layer
/// matrix, which makes the area vector an exact left eigenvector of `K` with
/// eigenvalue −1/2.
pub fn assemble_dstar(surface: &PanelSurface) -> DenseOperator {
    let c = surface.centroids();
    let n = surface.normals();
    let a = surface.areas();
    let dim = surface.len();
    let mut data = vec![0.0; dim * dim];
    data.par_chunks_mut(dim.max(1))
        .enumerate()
        .for_each(|(i, row)| {
            let mut double_sum = 0.0;
            for j in 0..dim {
                if j == i {
                    continue;
                }
                row[j] = double_layer(&c[j], &c[i], &n[i], a[j]);
                double_sum += double_layer(&c[i], &c[j], &n[j], a[j]);
            }
            row[i] = -0.5 - double_sum;
        });
    DenseOperator { dim, data }
}

/// Extremal-spectrum estimates of a discretized `D*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEstimate {
    /// Most negative eigenvalue (power iteration on `K`).
    pub lowest: f64,
    /// Eigenvalue closest to the top of the spectrum (power iteration on `K + I/2`).
    pub highest: f64,
    /// Area-weighted Rayleigh quotient of the `z` coordinate of the centroids.
    pub dipole: f64,
}

/// Deterministic non-smooth start vector so power iteration sees every mode.
fn start_vector(dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|i| ((i as f64 + 1.0) * 12.9898).sin() * 43758.5453 % 1.0 + 0.1)
        .collect()
}

pub fn estimate_spectrum(
    surface: &PanelSurface,
    operator: &DenseOperator,
    iterations: usize,
) -> SpectrumEstimate {
    let start = start_vector(operator.dim());
    let z: Vec<f64> = surface.centroids().iter().map(|c| c.z).collect();
    SpectrumEstimate {
        lowest: operator.power_iteration(0.0, &start, iterations),
        highest: operator.power_iteration(0.5, &start, iterations) - 0.5,
        dipole: operator.rayleigh_quotient(&z, Some(surface.areas())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn area_vector_is_left_eigenvector() {
        let s = PanelSurface::icosphere(3.0, 2).unwrap();
        let k = assemble_dstar(&s);
        let a = s.areas();
        for j in (0..k.dim()).step_by(17) {
            let col: f64 = (0..k.dim()).map(|i| a[i] * k.get(i, j)).sum();
            assert!(
                (col + 0.5 * a[j]).abs() < 1e-12 * a[j].max(1.0),
                "{col} vs {}",
                -0.5 * a[j]
            );
        }
    }

    #[test]
    fn matvec_matches_entries() {
        let m = DenseOperator::from_fn(4, |i, j| (i * 4 + j) as f64);
        assert_eq!(m.matvec(&[1.0, 0.0, 0.0, 2.0]), vec![6.0, 18.0, 30.0, 42.0]);
        assert_eq!(m.row(2), &[8.0, 9.0, 10.0, 11.0]);
    }

    #[test]
    fn power_iteration_on_diagonal() {
        let m = DenseOperator::from_fn(3, |i, j| if i == j { [-3.0, 1.0, 2.0][i] } else { 0.0 });
        let l = m.power_iteration(0.0, &[1.0, 1.0, 1.0], 80);
        assert!((l + 3.0).abs() < 1e-12);
        let l = m.power_iteration(4.0, &[1.0, 1.0, 1.0], 200);
        assert!((l - 6.0).abs() < 1e-9);
    }

    #[test]
    fn sphere_spectrum() {
        let s = PanelSurface::icosphere(2.0, 2).unwrap();
        let k = assemble_dstar(&s);
        let est = estimate_spectrum(&s, &k, 60);
        assert!((est.lowest + 0.5).abs() < 0.02, "{est:?}");
        assert!(est.highest.abs() < 0.03, "{est:?}");
        assert!((est.dipole + 1.0 / 6.0).abs() < 0.02, "{est:?}");
    }
}
