//! Generalized Born energies: the Still equation and the GBε correction.

use super::check_inside;
use crate::model::compensated_sum;
use crate::{
    ChargeDistribution, DielectricPair, EnergyResult, Error, Method, Result, SphereModel,
    COULOMB_CONSTANT,
};

/// Published GBε mixing parameter.
pub const GBEPS_ALPHA: f64 = 0.57;

/// Electrostatic radius `A`, per-charge effective radii `R̃_i` and mixing parameter `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct GBParameters {
    electrostatic_radius: f64,
    effective_radii: Vec<f64>,
    alpha: f64,
}

impl GBParameters {
    pub fn new(electrostatic_radius: f64, effective_radii: Vec<f64>, alpha: f64) -> Result<Self> {
        let a = electrostatic_radius;
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::domain(format!(
                "electrostatic radius must be positive (got {a})"
            )));
        }
        if let Some((i, r)) = effective_radii
            .iter()
            .enumerate()
            .find(|(_, &r)| !(r > 0.0 && r <= a))
        {
            return Err(Error::domain(format!(
                "effective radius {i} = {r} outside (0, A = {a}]"
            )));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::domain(format!("α = {alpha} outside [0, 1]")));
        }
        Ok(Self {
            electrostatic_radius,
            effective_radii,
            alpha,
        })
    }

    pub fn electrostatic_radius(&self) -> f64 {
        self.electrostatic_radius
    }

    pub fn effective_radii(&self) -> &[f64] {
        &self.effective_radii
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(
            self.electrostatic_radius,
            self.effective_radii.clone(),
            alpha,
        )
    }
}

/// Analytic GB parameters of a sphere: `A = b`, `R̃_i = b − |r_i|²/b`, `α = 0.57`.
pub fn sphere_gb_parameters(
    dist: &ChargeDistribution,
    model: &SphereModel,
) -> Result<GBParameters> {
    let b = model.radius();
    check_inside(dist, b)?;
    let radii = dist
        .charges()
        .iter()
        .map(|c| b - c.position.norm_squared() / b)
        .collect();
    GBParameters::new(b, radii, GBEPS_ALPHA)
}

/// Still's interpolating distance `sqrt(r² + R_i R_j exp(−r²/(4 R_i R_j)))`.
pub fn still_distance(r_squared: f64, ri: f64, rj: f64) -> f64 {
    let rr = ri * rj;
    (r_squared + rr * (-r_squared / (4.0 * rr)).exp()).sqrt()
}

/// `Σ_{i,j} q_i q_j g(f_ij)` over ordered pairs including the diagonal.
fn pair_sum(dist: &ChargeDistribution, radii: &[f64], g: impl Fn(f64) -> f64) -> Result<f64> {
    if radii.len() != dist.len() {
        return Err(Error::domain(format!(
            "{} effective radii for {} charges",
            radii.len(),
            dist.len()
        )));
    }
    let charges = dist.charges();
    let mut terms = Vec::with_capacity(charges.len() * charges.len());
    for (i, ci) in charges.iter().enumerate() {
        for (j, cj) in charges.iter().enumerate() {
            let r2 = (ci.position - cj.position).norm_squared();
            terms.push(ci.magnitude * cj.magnitude * g(still_distance(r2, radii[i], radii[j])));
        }
    }
    Ok(compensated_sum(terms.into_iter()))
}

/// `−(k_e/2)(1/ε1 − 1/ε2) Σ_{i,j} q_i q_j / f_ij` with `f_ii = R_i`.
pub fn gb_still_energy(
    dist: &ChargeDistribution,
    params: &GBParameters,
    eps: DielectricPair,
) -> Result<EnergyResult> {
    let sum = pair_sum(dist, params.effective_radii(), |f| 1.0 / f)?;
    EnergyResult::new(
        -0.5 * COULOMB_CONSTANT * eps.born_factor() * sum,
        Method::Gb,
    )
}

/// GBε: `Σ_{i,j} −(k_e/2)(1/ε1 − 1/ε2) q_i q_j/(1 + αε1/ε2) · [1/f_ij + αε1/ε2 / A]`.
pub fn gb_epsilon_energy(
    dist: &ChargeDistribution,
    params: &GBParameters,
    eps: DielectricPair,
) -> Result<EnergyResult> {
    let ax = params.alpha() * eps.ratio();
    let a = params.electrostatic_radius();
    let sum = pair_sum(dist, params.effective_radii(), |f| 1.0 / f + ax / a)?;
    EnergyResult::new(
        -0.5 * COULOMB_CONSTANT * eps.born_factor() / (1.0 + ax) * sum,
        Method::GbEps,
    )
    .map(|e| e.with_meta("alpha", params.alpha()))
}
