//! Analytic solvation models for a spherical cavity.
//!
//! Every model here maps the source moments `E_nm` to reaction coefficients
//! `B_nm` by a real factor that depends only on the degree `n`:
//!
//! | model      | `B_nm · b^{2n+1} / E_nm`                         |
//! |------------|--------------------------------------------------|
//! | Kirkwood   | `(ε1−ε2)(n+1) / (ε1 (ε1 n + ε2 (n+1)))`          |
//! | BIBEE/CFA  | `(ε1−ε2)(n+1) / (ε1 ε2 (2n+1))`                  |
//! | BIBEE/P    | `2(ε1−ε2)(n+1) / (ε1 (ε1+ε2)(2n+1))`             |
//! | BIBEE/λ    | `P / (1 + ε̂λ)`                                    |
//! | BIBEE/M(λ) | CFA for `n = 0`, BIBEE/λ for `n ≥ 1`               |
//!
//! Because the factor is diagonal in `(n, m)`, each spherical harmonic is an
//! eigenfunction of every one of these reaction-potential operators.

mod gb;

pub use gb::{
    gb_epsilon_energy, gb_still_energy, sphere_gb_parameters, still_distance, GBParameters,
    GBEPS_ALPHA,
};

use crate::harmonics::{
    degree_power, eval_interior_potential, legendre_polynomials, source_moments,
    truncation_tail_estimate, CoefficientKind, MultipoleCoefficients,
};
use crate::model::{compensated_sum, MAX_N_MAX};
use crate::{
    Charge, ChargeDistribution, DielectricPair, EnergyResult, Error, Method, Result, SphereModel,
    COULOMB_CONSTANT,
};

/// Charges must satisfy `|r| <= BOUNDARY_FRACTION * b`.
pub const BOUNDARY_FRACTION: f64 = 0.999;

/// Relative truncation bound at which [`SphereSolver::escalated`] stops raising the order.
pub const ESCALATION_TOLERANCE: f64 = 1e-6;

/// A diagonal approximation of the boundary-integral operator.
///
/// `λ` is the eigenvalue estimate that replaces the normal-field operator:
/// CFA uses the extremal value −1/2 and P uses 0. The hybrid `M(λ)` keeps the
/// CFA monopole and applies `λ` to every other mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BibeeVariant {
    Cfa,
    P,
    Lambda(f64),
    M(f64),
}

impl BibeeVariant {
    pub fn lambda(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self::Lambda(lambda))
    }

    pub fn m(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self::M(lambda))
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Lambda(l) | Self::M(l) => check_lambda(l),
            _ => Ok(()),
        }
    }

    pub fn method(&self) -> Method {
        match *self {
            Self::Cfa => Method::Cfa,
            Self::P => Method::P,
            Self::Lambda(l) => Method::Lambda(l),
            Self::M(l) => Method::M(l),
        }
    }

    pub fn from_method(method: Method) -> Option<Self> {
        match method {
            Method::Cfa | Method::BemCfa => Some(Self::Cfa),
            Method::P | Method::BemP => Some(Self::P),
            Method::Lambda(l) | Method::BemLambda(l) => Some(Self::Lambda(l)),
            Method::M(l) | Method::BemM(l) => Some(Self::M(l)),
            _ => None,
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(-0.5..=0.0).contains(&lambda) {
        return Err(Error::domain(format!(
            "eigenvalue estimate λ = {lambda} outside [-1/2, 0]"
        )));
    }
    Ok(())
}

/// `b^{-(2n+1)}`, split to stay in range for large `b` and `n`.
fn inverse_radial_power(b: f64, n: usize) -> f64 {
    b.powi(-(n as i32)) * b.powi(-(n as i32 + 1))
}

fn kirkwood_factor(n: usize, eps: DielectricPair) -> f64 {
    let (e1, e2) = (eps.eps_in(), eps.eps_out());
    let n = n as f64;
    (e1 - e2) * (n + 1.0) / (e1 * (e1 * n + e2 * (n + 1.0)))
}

fn cfa_factor(n: usize, eps: DielectricPair) -> f64 {
    let (e1, e2) = (eps.eps_in(), eps.eps_out());
    let n = n as f64;
    (e1 - e2) / (e1 * e2) * (n + 1.0) / (2.0 * n + 1.0)
}

fn p_factor(n: usize, eps: DielectricPair) -> f64 {
    let (e1, e2) = (eps.eps_in(), eps.eps_out());
    let n = n as f64;
    2.0 * (e1 - e2) / (e1 * (e1 + e2)) * (n + 1.0) / (2.0 * n + 1.0)
}

/// `P / (1 + ε̂λ)`, rejecting a non-positive denominator.
fn lambda_factor(n: usize, eps: DielectricPair, lambda: f64) -> Result<f64> {
    let denom = 1.0 + eps.eps_hat() * lambda;
    if denom <= 0.0 {
        return Err(Error::domain(format!(
            "degenerate scale 1 + ε̂λ = {denom} for λ = {lambda}"
        )));
    }
    Ok(p_factor(n, eps) / denom)
}

fn check_source(e: &MultipoleCoefficients, model: &SphereModel) -> Result<()> {
    if e.kind() != CoefficientKind::SourceE {
        return Err(Error::domain("expected source moments E_nm"));
    }
    if e.n_max() != model.n_max() {
        return Err(Error::domain(format!(
            "moments truncated at {} but model uses {}",
            e.n_max(),
            model.n_max()
        )));
    }
    Ok(())
}

/// Exact reaction coefficients from the boundary conditions on the sphere.
pub fn kirkwood_reaction_coefficients(
    e: &MultipoleCoefficients,
    model: &SphereModel,
) -> Result<MultipoleCoefficients> {
    check_source(e, model)?;
    let (b, eps) = (model.radius(), model.dielectrics());
    e.scale_by_degree(
        CoefficientKind::ReactionB,
        Some(b),
        Some(Method::Kirkwood),
        |n| Ok(kirkwood_factor(n, eps) * inverse_radial_power(b, n)),
    )
}

/// BIBEE reaction coefficients for the requested variant.
pub fn bibee_reaction_coefficients(
    e: &MultipoleCoefficients,
    model: &SphereModel,
    variant: BibeeVariant,
) -> Result<MultipoleCoefficients> {
    check_source(e, model)?;
    variant.validate()?;
    let (b, eps) = (model.radius(), model.dielectrics());
    e.scale_by_degree(
        CoefficientKind::ReactionB,
        Some(b),
        Some(variant.method()),
        |n| Ok(variant_factor(variant, n, eps)? * inverse_radial_power(b, n)),
    )
}

fn variant_factor(variant: BibeeVariant, n: usize, eps: DielectricPair) -> Result<f64> {
    Ok(match variant {
        BibeeVariant::Cfa => cfa_factor(n, eps),
        BibeeVariant::P => p_factor(n, eps),
        BibeeVariant::Lambda(l) => lambda_factor(n, eps, l)?,
        BibeeVariant::M(_) if n == 0 => cfa_factor(0, eps),
        BibeeVariant::M(l) => lambda_factor(n, eps, l)?,
    })
}

/// BIBEE/λ with a separate eigenvalue estimate per degree.
///
/// Only meant for checking identities: with `λ_n = −1/(2(2n+1))`, the exact
/// sphere spectrum, it reproduces [`kirkwood_reaction_coefficients`].
#[doc(hidden)]
pub fn bibee_reaction_coefficients_per_mode(
    e: &MultipoleCoefficients,
    model: &SphereModel,
    lambda_of_degree: impl Fn(usize) -> f64,
) -> Result<MultipoleCoefficients> {
    check_source(e, model)?;
    let (b, eps) = (model.radius(), model.dielectrics());
    e.scale_by_degree(CoefficientKind::ReactionB, Some(b), None, |n| {
        Ok(lambda_factor(n, eps, lambda_of_degree(n))? * inverse_radial_power(b, n))
    })
}

/// Sphere eigenvalue of the normal-field operator for degree `n`: −1/(2(2n+1)).
pub fn sphere_eigenvalue(n: usize) -> f64 {
    -1.0 / (2.0 * (2 * n + 1) as f64)
}

fn check_inside(dist: &ChargeDistribution, b: f64) -> Result<()> {
    for (k, c) in dist.charges().iter().enumerate() {
        let r = c.position.norm();
        if r > BOUNDARY_FRACTION * b {
            return Err(Error::domain(format!(
                "charge {k} at |r| = {r} Å is not strictly inside the sphere of radius {b} Å"
            )));
        }
    }
    Ok(())
}

/// Bound (kcal/mol) on the series truncation error of any sphere model.
///
/// `(k_e/2) · |ε1−ε2| / (ε1 · min(ε1, ε2)) · G² t^{N+1} / ((1−t) b)`; the
/// dielectric constant bounds every degree factor in the module table.
pub fn truncation_energy_bound(dist: &ChargeDistribution, model: &SphereModel) -> Result<f64> {
    let eps = model.dielectrics();
    let (e1, e2) = (eps.eps_in(), eps.eps_out());
    let c = (e1 - e2).abs() / (e1 * e1.min(e2));
    let tail = truncation_tail_estimate(dist, model.radius(), model.n_max())?;
    Ok(0.5 * COULOMB_CONSTANT * c * tail)
}

/// `(k_e/2) Σ_k q_k ψ(r_k)` from reaction coefficients.
pub fn solvation_energy(
    b: &MultipoleCoefficients,
    dist: &ChargeDistribution,
    model: &SphereModel,
) -> Result<EnergyResult> {
    if b.kind() != CoefficientKind::ReactionB {
        return Err(Error::domain("expected reaction coefficients B_nm"));
    }
    let method = b
        .method()
        .ok_or_else(|| Error::domain("reaction coefficients carry no method tag"))?;
    check_inside(dist, model.radius())?;
    let terms = dist
        .charges()
        .iter()
        .map(|c| Ok(c.magnitude * eval_interior_potential(b, &c.position)?))
        .collect::<Result<Vec<f64>>>()?;
    let value = 0.5 * COULOMB_CONSTANT * compensated_sum(terms.into_iter());
    Ok(EnergyResult::new(value, method)?
        .with_truncation_estimate(truncation_energy_bound(dist, model)?)
        .with_meta("n_max", b.n_max()))
}

/// Per-degree ratio `B^approx / B` in the limit ε1/ε2 → 0.
pub fn mode_ratio(variant: BibeeVariant, n: usize) -> f64 {
    let nf = n as f64;
    let lambda_ratio = |l: f64| (nf + 1.0) / ((nf + 0.5) * (1.0 - 2.0 * l));
    match variant {
        BibeeVariant::Cfa => (nf + 1.0) / (2.0 * nf + 1.0),
        BibeeVariant::P => (nf + 1.0) / (nf + 0.5),
        BibeeVariant::Lambda(l) => lambda_ratio(l),
        BibeeVariant::M(_) if n == 0 => 1.0,
        BibeeVariant::M(l) => lambda_ratio(l),
    }
}

/// Kirkwood reaction-field interaction of charges `i` and `j` (kcal/mol).
///
/// `−k_e q_i q_j (1 − ε1/ε2)/(b ε1) Σ_{l≤N} t^l P_l(cos θ) / (1 + l/(l+1) · ε1/ε2)`
/// with `t = |r_i||r_j|/b²`. Half the sum over all ordered pairs, including
/// `i = j`, is the total solvation energy.
pub fn pair_interaction_kirkwood(i: &Charge, j: &Charge, model: &SphereModel) -> Result<f64> {
    let b = model.radius();
    let eps = model.dielectrics();
    let x = eps.ratio();
    let (ri, rj) = (i.position.norm(), j.position.norm());
    let t = ri * rj / (b * b);
    if t >= 1.0 || ri >= b || rj >= b {
        return Err(Error::domain(format!(
            "pair series needs both charges inside the sphere (t = {t})"
        )));
    }
    let cos_theta = if ri == 0.0 || rj == 0.0 {
        1.0
    } else {
        (i.position.dot(&j.position) / (ri * rj)).clamp(-1.0, 1.0)
    };
    let p = legendre_polynomials(model.n_max(), cos_theta);
    let mut tl = 1.0;
    let mut terms = Vec::with_capacity(p.len());
    for (l, pl) in p.iter().enumerate() {
        let lf = l as f64;
        terms.push(tl * pl / (1.0 + lf / (lf + 1.0) * x));
        tl *= t;
    }
    let series = compensated_sum(terms.into_iter());
    Ok(-COULOMB_CONSTANT * i.magnitude * j.magnitude * (1.0 - x) / (b * eps.eps_in()) * series)
}

/// Source moments computed once and shared by every sphere model.
#[derive(Debug, Clone)]
pub struct SphereSolver<'a> {
    dist: &'a ChargeDistribution,
    model: SphereModel,
    moments: MultipoleCoefficients,
    power: Vec<f64>,
}

impl<'a> SphereSolver<'a> {
    /// Solver at the model's fixed truncation order.
    pub fn new(dist: &'a ChargeDistribution, model: SphereModel) -> Result<Self> {
        check_inside(dist, model.radius())?;
        let moments = source_moments(dist, model.n_max())?;
        let power = degree_power(&moments, model.radius())?;
        Ok(Self {
            dist,
            model,
            moments,
            power,
        })
    }

    /// Raise the truncation order, starting from the model's, until the
    /// truncation bound is below [`ESCALATION_TOLERANCE`] of the Kirkwood
    /// energy or the order reaches [`MAX_N_MAX`].
    pub fn escalated(dist: &'a ChargeDistribution, model: SphereModel) -> Result<Self> {
        let mut n = model.n_max();
        loop {
            let solver = Self::new(dist, model.with_n_max(n)?)?;
            let reference = solver.energy(Method::Kirkwood)?;
            let bound = reference.truncation_error_estimate.unwrap_or(0.0);
            if bound <= ESCALATION_TOLERANCE * reference.value.abs() || n >= MAX_N_MAX {
                return Ok(solver);
            }
            n = (2 * n).clamp(n + 1, MAX_N_MAX);
        }
    }

    pub fn model(&self) -> &SphereModel {
        &self.model
    }

    pub fn moments(&self) -> &MultipoleCoefficients {
        &self.moments
    }

    pub fn reaction_coefficients(&self, method: Method) -> Result<MultipoleCoefficients> {
        match method {
            Method::Kirkwood => kirkwood_reaction_coefficients(&self.moments, &self.model),
            Method::Cfa | Method::P | Method::Lambda(_) | Method::M(_) => {
                let variant = BibeeVariant::from_method(method).expect("bibee method");
                bibee_reaction_coefficients(&self.moments, &self.model, variant)
            }
            other => Err(Error::domain(format!(
                "{other} has no spherical-harmonic representation"
            ))),
        }
    }

    /// Energy of any analytic sphere model (Kirkwood, BIBEE, GB, GBε).
    pub fn energy(&self, method: Method) -> Result<EnergyResult> {
        match method {
            Method::Gb => {
                let params = sphere_gb_parameters(self.dist, &self.model)?;
                gb_still_energy(self.dist, &params, self.model.dielectrics())
            }
            Method::GbEps => {
                let params = sphere_gb_parameters(self.dist, &self.model)?;
                gb_epsilon_energy(self.dist, &params, self.model.dielectrics())
            }
            m if m.is_bem() => Err(Error::domain(format!(
                "{m} needs a triangulated surface, not an analytic sphere"
            ))),
            Method::Kirkwood => self.diagonal_energy(method, |n, eps| Ok(kirkwood_factor(n, eps))),
            m => {
                let variant = BibeeVariant::from_method(m).expect("analytic bibee method");
                variant.validate()?;
                self.diagonal_energy(m, |n, eps| variant_factor(variant, n, eps))
            }
        }
    }

    /// `(k_e / 2b) Σ_n c_n S_n` from the degree power of the source.
    fn diagonal_energy(
        &self,
        method: Method,
        factor: impl Fn(usize, DielectricPair) -> Result<f64>,
    ) -> Result<EnergyResult> {
        let (b, eps) = (self.model.radius(), self.model.dielectrics());
        let terms = self
            .power
            .iter()
            .enumerate()
            .map(|(n, s)| Ok(factor(n, eps)? * s))
            .collect::<Result<Vec<f64>>>()?;
        let value = 0.5 * COULOMB_CONSTANT / b * compensated_sum(terms.into_iter());
        Ok(EnergyResult::new(value, method)?
            .with_truncation_estimate(truncation_energy_bound(self.dist, &self.model)?)
            .with_meta("n_max", self.model.n_max()))
    }
}
