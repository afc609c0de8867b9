//! Boundary-element solvation on triangulated surfaces.
//!
//! Unknowns are piecewise-constant induced surface charges `σ_j` on each
//! panel, collocated at the centroid. The exact problem is
//! `(I + ε̂ D*) σ = −ε̂ ∂Φ_C/∂n` where `Φ_C = Σ q_k / (ε1 |r − r_k|)`; the
//! BIBEE variants replace `D*` by a multiple of the identity.

mod krylov;
pub mod mesh;
mod operator;

pub use krylov::{gmres, GmresOutcome};
pub use mesh::{load_mesh, parse_msms, parse_off, MeshFormat, PanelSurface};
pub use operator::{assemble_dstar, estimate_spectrum, DenseOperator, SpectrumEstimate};

use crate::model::compensated_sum;
use crate::sphere::BibeeVariant;
use crate::{
    ChargeDistribution, DielectricPair, EnergyResult, Error, Method, Result, COULOMB_CONSTANT,
};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Charges closer than this (Å) to any panel are rejected.
pub const NEAR_SINGULARITY_DISTANCE: f64 = 1e-6;

/// Right-hand side `−ε̂ ∂Φ_C/∂n` sampled at panel centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceField {
    values: Vec<f64>,
}

impl SurfaceField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Induced surface charge density per panel.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceCharge {
    pub density: Vec<f64>,
    pub method: Method,
    /// Relative residual of the linear solve, for the exact method only.
    pub residual: Option<f64>,
    pub iterations: Option<usize>,
}

/// Reject charges that lie outside the surface or too close to a panel.
pub fn check_charges(dist: &ChargeDistribution, surface: &PanelSurface) -> Result<()> {
    for (k, q) in dist.charges().iter().enumerate() {
        let (panel, distance) = surface.nearest_panel(&q.position);
        if distance < NEAR_SINGULARITY_DISTANCE {
            return Err(Error::NearSingularity {
                charge: k,
                panel,
                distance,
            });
        }
        if !surface.contains(&q.position) {
            return Err(Error::domain(format!(
                "charge {k} at ({}, {}, {}) lies outside the surface",
                q.position.x, q.position.y, q.position.z
            )));
        }
    }
    Ok(())
}

/// `−ε̂/ε1 Σ_k q_k ∂/∂n_i (1/|c_i − r_k|)` for every panel `i`.
pub fn coulomb_field_rhs(
    dist: &ChargeDistribution,
    surface: &PanelSurface,
    eps: DielectricPair,
) -> Result<SurfaceField> {
    check_charges(dist, surface)?;
    let scale = eps.eps_hat() / eps.eps_in();
    let values = surface
        .centroids()
        .iter()
        .zip(surface.normals())
        .map(|(c, n)| {
            let terms = dist.charges().iter().map(|q| {
                let d = c - q.position;
                q.magnitude * n.dot(&d) / d.norm().powi(3)
            });
            scale * compensated_sum(terms)
        })
        .collect();
    Ok(SurfaceField { values })
}

fn check_len(rhs: &SurfaceField, panels: usize) -> Result<()> {
    if rhs.len() != panels {
        return Err(Error::domain(format!(
            "surface field has {} values for {panels} panels",
            rhs.len()
        )));
    }
    Ok(())
}

fn scale_denominator(eps: DielectricPair, lambda: f64) -> Result<f64> {
    let d = 1.0 + eps.eps_hat() * lambda;
    if d <= 0.0 {
        return Err(Error::domain(format!(
            "degenerate scale 1 + ε̂λ = {d} for λ = {lambda}"
        )));
    }
    Ok(d)
}

/// BIBEE surface charge: `σ = rhs / (1 + ε̂λ)` with `λ = −1/2` (CFA), `0` (P)
/// or a user value. `M(λ)` applies the CFA scale to the area-weighted mean of
/// the field and `1/(1 + ε̂λ)` to the remainder.
pub fn bibee_surface_charge(
    rhs: &SurfaceField,
    surface: &PanelSurface,
    eps: DielectricPair,
    variant: BibeeVariant,
) -> Result<SurfaceCharge> {
    variant.validate()?;
    check_len(rhs, surface.len())?;
    let (method, density) = match variant {
        BibeeVariant::Cfa | BibeeVariant::P | BibeeVariant::Lambda(_) => {
            let lambda = match variant {
                BibeeVariant::Cfa => -0.5,
                BibeeVariant::P => 0.0,
                BibeeVariant::Lambda(l) => l,
                BibeeVariant::M(_) => unreachable!(),
            };
            let d = scale_denominator(eps, lambda)?;
            let method = match variant {
                BibeeVariant::Cfa => Method::BemCfa,
                BibeeVariant::P => Method::BemP,
                _ => Method::BemLambda(lambda),
            };
            (method, rhs.values.iter().map(|v| v / d).collect())
        }
        BibeeVariant::M(lambda) => {
            let cfa = scale_denominator(eps, -0.5)?;
            let rest = scale_denominator(eps, lambda)?;
            let areas = surface.areas();
            let mean = compensated_sum(rhs.values.iter().zip(areas).map(|(v, a)| v * a))
                / surface.total_area();
            let density = rhs
                .values
                .iter()
                .map(|v| mean / cfa + (v - mean) / rest)
                .collect();
            (Method::BemM(lambda), density)
        }
    };
    Ok(SurfaceCharge {
        density,
        method,
        residual: None,
        iterations: None,
    })
}

/// How to solve the exact boundary-integral system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    /// Direct LU up to `dense_limit` panels, GMRES beyond.
    Auto,
    Direct,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub kind: SolverKind,
    /// Relative residual target for GMRES, in `(0, 1e-2]`.
    pub tolerance: f64,
    pub restart: usize,
    pub max_iterations: usize,
    /// Largest system solved by dense LU.
    pub dense_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            kind: SolverKind::Auto,
            tolerance: 1e-8,
            restart: 50,
            max_iterations: 500,
            dense_limit: 3000,
        }
    }
}

/// Solve `(I + ε̂K) σ = rhs` with `K` an assembled `D*`.
pub fn exact_surface_charge(
    rhs: &SurfaceField,
    dstar: &DenseOperator,
    eps: DielectricPair,
    options: &SolverOptions,
) -> Result<SurfaceCharge> {
    check_len(rhs, dstar.dim())?;
    let n = dstar.dim();
    let eh = eps.eps_hat();
    let direct = match options.kind {
        SolverKind::Auto => n <= options.dense_limit,
        SolverKind::Direct => {
            if n > options.dense_limit {
                return Err(Error::domain(format!(
                    "{n} panels exceed the dense solver limit of {}",
                    options.dense_limit
                )));
            }
            true
        }
        SolverKind::Iterative => false,
    };
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = dstar.matvec(x);
        y.iter_mut().zip(x).for_each(|(y, x)| *y = x + eh * *y);
        y
    };
    let b = rhs.values();
    let rhs_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (density, iterations) = if direct {
        let m = DMatrix::from_fn(n, n, |i, j| (i == j) as u8 as f64 + eh * dstar.get(i, j));
        let sol = m
            .lu()
            .solve(&DVector::from_column_slice(b))
            .ok_or_else(|| Error::Consistency("boundary-integral matrix is singular".into()))?;
        (sol.as_slice().to_vec(), None)
    } else {
        if !(options.tolerance > 0.0 && options.tolerance <= 1e-2) {
            return Err(Error::domain(format!(
                "solver tolerance {} outside (0, 1e-2]",
                options.tolerance
            )));
        }
        let out = gmres(
            apply,
            b,
            options.tolerance,
            options.restart,
            options.max_iterations,
        )?;
        (out.solution, Some(out.iterations))
    };
    let residual = if rhs_norm == 0.0 {
        0.0
    } else {
        let r = apply(&density);
        r.iter()
            .zip(b)
            .map(|(r, b)| (r - b).powi(2))
            .sum::<f64>()
            .sqrt()
            / rhs_norm
    };
    Ok(SurfaceCharge {
        density,
        method: Method::BemExact,
        residual: Some(residual),
        iterations,
    })
}

/// `ΔG = (k_e/2) Σ_k q_k Σ_j σ_j A_j / (4π |r_k − c_j|)` in kcal/mol.
pub fn reaction_energy(
    sigma: &SurfaceCharge,
    surface: &PanelSurface,
    dist: &ChargeDistribution,
) -> Result<EnergyResult> {
    if sigma.density.len() != surface.len() {
        return Err(Error::domain(format!(
            "{} surface charges for {} panels",
            sigma.density.len(),
            surface.len()
        )));
    }
    let weights: Vec<f64> = sigma
        .density
        .iter()
        .zip(surface.areas())
        .map(|(s, a)| s * a / (4.0 * PI))
        .collect();
    let terms = dist.charges().iter().map(|q| {
        let phi = compensated_sum(
            weights
                .iter()
                .zip(surface.centroids())
                .map(|(w, c)| w / (q.position - c).norm()),
        );
        q.magnitude * phi
    });
    let mut result = EnergyResult::new(
        0.5 * COULOMB_CONSTANT * compensated_sum(terms),
        sigma.method,
    )?
    .with_meta("panels", surface.len());
    if let Some(r) = sigma.residual {
        result = result.with_meta("residual", format!("{r:.3e}"));
    }
    if let Some(it) = sigma.iterations {
        result = result.with_meta("iterations", it);
    }
    Ok(result)
}

/// A surface with its assembled `D*`, reusable across charge sets.
#[derive(Debug, Clone)]
pub struct BemSolver {
    surface: PanelSurface,
    dstar: Option<DenseOperator>,
    options: SolverOptions,
}

impl BemSolver {
    /// `D*` is assembled lazily, on the first exact solve.
    pub fn new(surface: PanelSurface, options: SolverOptions) -> Self {
        Self {
            surface,
            dstar: None,
            options,
        }
    }

    pub fn surface(&self) -> &PanelSurface {
        &self.surface
    }

    pub fn dstar(&mut self) -> &DenseOperator {
        self.dstar
            .get_or_insert_with(|| assemble_dstar(&self.surface))
    }

    pub fn surface_charge(
        &mut self,
        dist: &ChargeDistribution,
        eps: DielectricPair,
        method: Method,
    ) -> Result<SurfaceCharge> {
        let rhs = coulomb_field_rhs(dist, &self.surface, eps)?;
        match method {
            Method::BemExact => {
                let options = self.options;
                exact_surface_charge(&rhs, self.dstar(), eps, &options)
            }
            m if m.is_bem() => {
                let variant = BibeeVariant::from_method(m).expect("BEM approximation");
                bibee_surface_charge(&rhs, &self.surface, eps, variant)
            }
            m => Err(Error::domain(format!(
                "{m} is not a boundary-element method"
            ))),
        }
    }

    pub fn energy(
        &mut self,
        dist: &ChargeDistribution,
        eps: DielectricPair,
        method: Method,
    ) -> Result<EnergyResult> {
        let sigma = self.surface_charge(dist, eps, method)?;
        reaction_energy(&sigma, &self.surface, dist)
    }
}
