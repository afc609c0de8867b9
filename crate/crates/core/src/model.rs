//! Charges, dielectrics and energy bookkeeping shared by all solvers.

use crate::{Error, Result, Vector3};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Coulomb constant e²/(4πε₀) in kcal·mol⁻¹·Å·e⁻² (CHARMM convention).
pub const COULOMB_CONSTANT: f64 = 332.0636;

/// Series truncation order used when none is given.
pub const DEFAULT_N_MAX: usize = 25;

/// Largest supported truncation order. Unnormalized P_n^m overflows f64 shortly beyond.
pub const MAX_N_MAX: usize = 150;

/// A point charge (position in Å, magnitude in e).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Charge {
    pub position: Vector3,
    pub magnitude: f64,
}

impl Charge {
    pub fn new(position: Vector3, magnitude: f64) -> Result<Self> {
        if !position.iter().all(|x| x.is_finite()) || !magnitude.is_finite() {
            return Err(Error::domain(
                "charge position and magnitude must be finite",
            ));
        }
        Ok(Self {
            position,
            magnitude,
        })
    }

    /// Shorthand for tests and examples: panics on non-finite input.
    pub fn at(x: f64, y: f64, z: f64, q: f64) -> Self {
        Self::new(Vector3::new(x, y, z), q).expect("finite charge")
    }
}

/// A non-empty, ordered set of point charges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeDistribution {
    charges: Vec<Charge>,
    label: String,
    /// Per-charge radii when the source carried them (PQR); not used by any solver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radii: Option<Vec<f64>>,
}

impl ChargeDistribution {
    pub fn new(charges: Vec<Charge>, label: impl Into<String>) -> Result<Self> {
        if charges.is_empty() {
            return Err(Error::domain("charge distribution must not be empty"));
        }
        Ok(Self {
            charges,
            label: label.into(),
            radii: None,
        })
    }

    pub fn with_radii(mut self, radii: Vec<f64>) -> Result<Self> {
        if radii.len() != self.charges.len() {
            return Err(Error::domain(format!(
                "{} radii given for {} charges",
                radii.len(),
                self.charges.len()
            )));
        }
        self.radii = Some(radii);
        Ok(self)
    }

    pub fn charges(&self) -> &[Charge] {
        &self.charges
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn radii(&self) -> Option<&[f64]> {
        self.radii.as_deref()
    }

    pub fn len(&self) -> usize {
        self.charges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charges.is_empty()
    }

    /// Net charge, summed with Neumaier compensation.
    pub fn net_charge(&self) -> f64 {
        compensated_sum(self.charges.iter().map(|c| c.magnitude))
    }

    /// Sum of |q_k|.
    pub fn gross_charge(&self) -> f64 {
        compensated_sum(self.charges.iter().map(|c| c.magnitude.abs()))
    }

    /// Largest distance of any charge from the origin.
    pub fn max_radius(&self) -> f64 {
        self.charges
            .iter()
            .map(|c| c.position.norm())
            .fold(0.0, f64::max)
    }

    /// Copy with every position multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            charges: self
                .charges
                .iter()
                .map(|c| Charge {
                    position: c.position * factor,
                    magnitude: c.magnitude,
                })
                .collect(),
            label: self.label.clone(),
            radii: self.radii.clone(),
        }
    }
}

/// Neumaier-compensated summation.
pub(crate) fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Interior (solute) and exterior (solvent) relative permittivities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DielectricPair {
    eps_in: f64,
    eps_out: f64,
}

impl DielectricPair {
    pub fn new(eps_in: f64, eps_out: f64) -> Result<Self> {
        let ok = |e: f64| e.is_finite() && e > 0.0;
        if !ok(eps_in) || !ok(eps_out) {
            return Err(Error::domain(format!(
                "dielectric constants must be finite and positive (got {eps_in}, {eps_out})"
            )));
        }
        Ok(Self { eps_in, eps_out })
    }

    pub fn eps_in(&self) -> f64 {
        self.eps_in
    }

    pub fn eps_out(&self) -> f64 {
        self.eps_out
    }

    /// Dielectric contrast (ε1 − ε2) / ((ε1 + ε2)/2), always in (−2, 2).
    pub fn eps_hat(&self) -> f64 {
        (self.eps_in - self.eps_out) / (0.5 * (self.eps_in + self.eps_out))
    }

    /// 1/ε1 − 1/ε2
    pub fn born_factor(&self) -> f64 {
        1.0 / self.eps_in - 1.0 / self.eps_out
    }

    /// ε1/ε2
    pub fn ratio(&self) -> f64 {
        self.eps_in / self.eps_out
    }

    pub fn is_uniform(&self) -> bool {
        self.eps_in == self.eps_out
    }
}

/// A spherical cavity of radius `radius` centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereModel {
    radius: f64,
    dielectrics: DielectricPair,
    n_max: usize,
}

impl SphereModel {
    pub fn new(radius: f64, dielectrics: DielectricPair, n_max: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::domain(format!(
                "sphere radius must be positive (got {radius})"
            )));
        }
        if n_max > MAX_N_MAX {
            return Err(Error::domain(format!(
                "series order {n_max} exceeds supported maximum {MAX_N_MAX}"
            )));
        }
        Ok(Self {
            radius,
            dielectrics,
            n_max,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dielectrics(&self) -> DielectricPair {
        self.dielectrics
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        Self::new(self.radius, self.dielectrics, n_max)
    }
}

/// Which model produced an energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "lambda", rename_all = "kebab-case")]
pub enum Method {
    Kirkwood,
    Cfa,
    P,
    Lambda(f64),
    M(f64),
    Gb,
    GbEps,
    BemExact,
    BemCfa,
    BemP,
    BemLambda(f64),
    BemM(f64),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Kirkwood => "kirkwood",
            Method::Cfa => "cfa",
            Method::P => "p",
            Method::Lambda(_) => "lambda",
            Method::M(_) => "m",
            Method::Gb => "gb",
            Method::GbEps => "gbeps",
            Method::BemExact => "bem-exact",
            Method::BemCfa => "bem-cfa",
            Method::BemP => "bem-p",
            Method::BemLambda(_) => "bem-lambda",
            Method::BemM(_) => "bem-m",
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match *self {
            Method::Lambda(l) | Method::M(l) | Method::BemLambda(l) | Method::BemM(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_bem(&self) -> bool {
        self.name().starts_with("bem-")
    }

    /// Parse a method name, attaching `lambda` to the variants that take one.
    pub fn parse_with_lambda(name: &str, lambda: f64) -> Result<Self> {
        let m = match name.trim().to_ascii_lowercase().as_str() {
            "kirkwood" | "exact" => Method::Kirkwood,
            "cfa" => Method::Cfa,
            "p" => Method::P,
            "lambda" => Method::Lambda(lambda),
            "m" => Method::M(lambda),
            "gb" | "still" => Method::Gb,
            "gbeps" | "gb-eps" => Method::GbEps,
            "bem-exact" => Method::BemExact,
            "bem-cfa" => Method::BemCfa,
            "bem-p" => Method::BemP,
            "bem-lambda" => Method::BemLambda(lambda),
            "bem-m" => Method::BemM(lambda),
            other => return Err(Error::Config(format!("unknown method '{other}'"))),
        };
        Ok(m)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lambda() {
            Some(l) => write!(f, "{}({})", self.name(), l),
            None => f.write_str(self.name()),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Accepts `name` or `name(λ)`; λ defaults to 0.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(open) = s.find('(') {
            let close = s
                .rfind(')')
                .filter(|&c| c > open)
                .ok_or_else(|| Error::Config(format!("malformed method '{s}'")))?;
            let lambda: f64 = s[open + 1..close]
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("malformed lambda in '{s}'")))?;
            let m = Method::parse_with_lambda(&s[..open], lambda)?;
            if m.lambda().is_none() {
                return Err(Error::Config(format!(
                    "method '{}' takes no lambda",
                    m.name()
                )));
            }
            Ok(m)
        } else {
            Method::parse_with_lambda(s, 0.0)
        }
    }
}

/// A solvation free energy (kcal/mol) tagged with the method that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyResult {
    pub value: f64,
    pub method: Method,
    pub truncation_error_estimate: Option<f64>,
    pub metadata: BTreeMap<String, String>,
}

impl EnergyResult {
    pub fn new(value: f64, method: Method) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Consistency(format!("{method} energy is not finite")));
        }
        Ok(Self {
            value,
            method,
            truncation_error_estimate: None,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_truncation_estimate(mut self, estimate: f64) -> Self {
        debug_assert!(estimate >= 0.0);
        self.truncation_error_estimate = Some(estimate);
        self
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_owned(), value.to_string());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn net_charge_cancels() {
        let d = ChargeDistribution::new(
            vec![
                Charge::at(0.0, 0.0, 0.0, 0.5),
                Charge::at(1.0, 0.0, 0.0, -0.5),
            ],
            "pair",
        )
        .unwrap();
        assert_eq!(d.net_charge(), 0.0);
        let d = ChargeDistribution::new(vec![Charge::at(0.0, 0.0, 0.0, 1.0)], "one").unwrap();
        assert_eq!(d.net_charge(), 1.0);
    }

    #[test]
    fn net_charge_random_sample() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let qs: Vec<f64> = (0..25).map(|_| rng.random_range(-0.5..=0.5)).collect();
        let d = ChargeDistribution::new(
            qs.iter().map(|&q| Charge::at(0.0, 0.0, 0.0, q)).collect(),
            "random",
        )
        .unwrap();
        // oracle: plain left-to-right summation
        let direct: f64 = qs.iter().sum();
        assert!((d.net_charge() - direct).abs() < 1e-14);
    }

    #[test]
    fn empty_distribution_rejected() {
        assert!(ChargeDistribution::new(vec![], "x").is_err());
    }

    #[test]
    fn dielectrics_validated() {
        assert!(DielectricPair::new(0.0, 80.0).is_err());
        assert!(DielectricPair::new(4.0, -1.0).is_err());
        assert!(DielectricPair::new(f64::NAN, 1.0).is_err());
        assert!(SphereModel::new(0.0, DielectricPair::new(1.0, 2.0).unwrap(), 3).is_err());
    }

    #[test]
    fn method_round_trip() {
        for s in [
            "kirkwood",
            "cfa",
            "p",
            "lambda(-0.2)",
            "m(0)",
            "gbeps",
            "bem-m(-0.1)",
        ] {
            let m: Method = s.parse().unwrap();
            let again: Method = m.to_string().parse().unwrap();
            assert_eq!(m, again);
        }
        assert!("cfa(0.1)".parse::<Method>().is_err());
        assert!("foo".parse::<Method>().is_err());
    }

    proptest! {
        #[test]
        fn eps_hat_zero_when_equal(e in 0.01f64..1000.0) {
            prop_assert_eq!(DielectricPair::new(e, e).unwrap().eps_hat(), 0.0);
        }

        #[test]
        fn eps_hat_antisymmetric_and_bounded(a in 0.01f64..1000.0, b in 0.01f64..1000.0) {
            let ab = DielectricPair::new(a, b).unwrap().eps_hat();
            let ba = DielectricPair::new(b, a).unwrap().eps_hat();
            prop_assert_eq!(ab, -ba);
            prop_assert!(ab > -2.0 && ab < 2.0);
        }
    }
}
