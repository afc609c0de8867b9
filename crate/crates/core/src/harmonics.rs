//! Associated Legendre functions and spherical-harmonic multipole moments.
//!
//! Convention: `P_n^m` is the unnormalized associated Legendre function
//! *without* the Condon–Shortley phase, so `P_1^1(x) = +sqrt(1 - x²)`.
//! Negative orders are evaluated at `|m|`; the factorial ratio
//! `(n-|m|)!/(n+|m|)!` lives in the source moments
//!
//! ```text
//! E_nm = Σ_k q_k r_k^n (n-|m|)!/(n+|m|)! P_n^|m|(cos θ_k) e^{-i m φ_k}
//! ```
//!
//! and a reaction field is expanded inside the cavity as
//!
//! ```text
//! ψ(r) = Σ_n Σ_m B_nm r^n P_n^|m|(cos θ) e^{i m φ}.
//! ```
//!
//! With this pairing `Σ_m E_nm(r') P_n^|m|(cos θ) e^{imφ}` reproduces the
//! Legendre addition theorem, `r'^n P_n(cos γ)`.
//!
//! Internally both factors are built from the bounded, normalized functions
//! `sqrt((n-m)!/(n+m)!) P_n^m`, which keeps every order up to
//! [`MAX_N_MAX`](crate::model::MAX_N_MAX) inside the f64 range.

use crate::model::{compensated_sum, MAX_N_MAX};
use crate::{ChargeDistribution, Error, Method, Result, Vector3};
use num_complex::Complex64;

/// Unnormalized associated Legendre function `P_n^m(x)`, no Condon–Shortley phase.
///
/// Uses the upward recurrence in `n` at fixed `m`; `x = ±1` is handled in
/// closed form.
pub fn assoc_legendre(n: usize, m: usize, x: f64) -> Result<f64> {
    if m > n {
        return Err(Error::domain(format!(
            "order m = {m} exceeds degree n = {n}"
        )));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::domain(format!(
            "Legendre argument {x} outside [-1, 1]"
        )));
    }
    if x.abs() == 1.0 {
        return Ok(match m {
            0 if x < 0.0 && n % 2 == 1 => -1.0,
            0 => 1.0,
            _ => 0.0,
        });
    }
    let s = (1.0 - x * x).sqrt();
    // P_m^m = (2m-1)!! s^m
    let mut pmm = 1.0;
    for k in 1..=m {
        pmm *= (2 * k - 1) as f64 * s;
    }
    if n == m {
        return Ok(pmm);
    }
    let mut prev = pmm;
    let mut curr = x * (2 * m + 1) as f64 * pmm;
    for l in (m + 2)..=n {
        let next = (x * (2 * l - 1) as f64 * curr - (l + m - 1) as f64 * prev) / (l - m) as f64;
        prev = curr;
        curr = next;
    }
    Ok(curr)
}

/// Legendre polynomials `P_0(x) ..= P_n(x)`.
pub fn legendre_polynomials(n_max: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n_max + 1);
    p.push(1.0);
    if n_max >= 1 {
        p.push(x);
    }
    for l in 2..=n_max {
        let v = ((2 * l - 1) as f64 * x * p[l - 1] - (l - 1) as f64 * p[l - 2]) / l as f64;
        p.push(v);
    }
    p
}

/// Triangular table index for `0 <= m <= n`.
#[inline]
fn tri(n: usize, m: usize) -> usize {
    n * (n + 1) / 2 + m
}

/// `sqrt((n-m)!/(n+m)!)` for all `0 <= m <= n <= n_max`.
fn factorial_scales(n_max: usize) -> Vec<f64> {
    let mut f = vec![0.0; tri(n_max, n_max) + 1];
    for n in 0..=n_max {
        f[tri(n, 0)] = 1.0;
        for m in 1..=n {
            f[tri(n, m)] = f[tri(n, m - 1)] / (((n + m) * (n - m + 1)) as f64).sqrt();
        }
    }
    f
}

/// `sqrt((n-m)!/(n+m)!) P_n^m(x)` for all `0 <= m <= n <= n_max`.
fn normalized_legendre_table(n_max: usize, x: f64) -> Vec<f64> {
    let mut t = vec![0.0; tri(n_max, n_max) + 1];
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut diag = 1.0;
    for m in 0..=n_max {
        if m > 0 {
            diag *= s * ((2 * m - 1) as f64 / (2 * m) as f64).sqrt();
        }
        t[tri(m, m)] = diag;
        if m == n_max {
            break;
        }
        t[tri(m + 1, m)] = x * ((2 * m + 1) as f64).sqrt() * diag;
        for n in (m + 2)..=n_max {
            let a = x * (2 * n - 1) as f64 * t[tri(n - 1, m)];
            let b = (((n - 1) * (n - 1) - m * m) as f64).sqrt() * t[tri(n - 2, m)];
            t[tri(n, m)] = (a - b) / ((n * n - m * m) as f64).sqrt();
        }
    }
    t
}

/// Spherical coordinates (r, cos θ, φ) about the origin.
fn spherical(p: &Vector3) -> (f64, f64, f64) {
    let r = p.norm();
    if r == 0.0 {
        return (0.0, 1.0, 0.0);
    }
    (r, (p.z / r).clamp(-1.0, 1.0), p.y.atan2(p.x))
}

/// What a coefficient set describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientKind {
    SourceE,
    ReactionB,
}

/// Complex coefficients `c_nm`, `0 <= n <= n_max`, `-n <= m <= n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipoleCoefficients {
    n_max: usize,
    kind: CoefficientKind,
    coeffs: Vec<Complex64>,
    /// Cavity radius for reaction coefficients; evaluation is only valid inside.
    radius: Option<f64>,
    method: Option<Method>,
}

impl MultipoleCoefficients {
    pub fn zeros(n_max: usize, kind: CoefficientKind) -> Self {
        Self {
            n_max,
            kind,
            coeffs: vec![Complex64::new(0.0, 0.0); (n_max + 1) * (n_max + 1)],
            radius: None,
            method: None,
        }
    }

    /// A set with a single nonzero entry at `(n, m)`.
    pub fn single_mode(
        n_max: usize,
        n: usize,
        m: i64,
        value: Complex64,
        kind: CoefficientKind,
    ) -> Result<Self> {
        let mut c = Self::zeros(n_max, kind);
        *c.get_mut(n, m)? = value;
        Ok(c)
    }

    fn checked_index(&self, n: usize, m: i64) -> Result<usize> {
        if n > self.n_max || m.unsigned_abs() as usize > n {
            return Err(Error::domain(format!(
                "mode ({n}, {m}) outside 0 <= n <= {}, |m| <= n",
                self.n_max
            )));
        }
        Ok(((n * n + n) as i64 + m) as usize)
    }

    pub fn get(&self, n: usize, m: i64) -> Result<Complex64> {
        Ok(self.coeffs[self.checked_index(n, m)?])
    }

    pub fn get_mut(&mut self, n: usize, m: i64) -> Result<&mut Complex64> {
        let i = self.checked_index(n, m)?;
        Ok(&mut self.coeffs[i])
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn kind(&self) -> CoefficientKind {
        self.kind
    }

    pub fn radius(&self) -> Option<f64> {
        self.radius
    }

    pub fn method(&self) -> Option<Method> {
        self.method
    }

    /// All `((n, m), value)` pairs in order of increasing `n`, then `m`.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, i64), Complex64)> + '_ {
        (0..=self.n_max).flat_map(move |n| {
            (-(n as i64)..=n as i64)
                .map(move |m| ((n, m), self.coeffs[((n * n + n) as i64 + m) as usize]))
        })
    }

    /// Scale every mode by a real, degree-dependent factor.
    pub(crate) fn scale_by_degree(
        &self,
        kind: CoefficientKind,
        radius: Option<f64>,
        method: Option<Method>,
        mut factor: impl FnMut(usize) -> Result<f64>,
    ) -> Result<Self> {
        let mut out = Self::zeros(self.n_max, kind);
        out.radius = radius;
        out.method = method;
        for n in 0..=self.n_max {
            let f = factor(n)?;
            let base = n * n;
            for k in base..base + 2 * n + 1 {
                out.coeffs[k] = self.coeffs[k] * f;
            }
        }
        Ok(out)
    }

    /// Largest |c_nm|.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Source moments `E_nm` of a charge distribution about the origin.
///
/// A charge exactly at the origin contributes only to `E_00`.
pub fn source_moments(dist: &ChargeDistribution, n_max: usize) -> Result<MultipoleCoefficients> {
    if n_max > MAX_N_MAX {
        return Err(Error::domain(format!(
            "series order {n_max} exceeds supported maximum {MAX_N_MAX}"
        )));
    }
    let scales = factorial_scales(n_max);
    let mut out = MultipoleCoefficients::zeros(n_max, CoefficientKind::SourceE);
    for charge in dist.charges() {
        let q = charge.magnitude;
        let (r, cos_theta, phi) = spherical(&charge.position);
        if r == 0.0 {
            out.coeffs[0] += q;
            continue;
        }
        let table = normalized_legendre_table(n_max, cos_theta);
        let trig: Vec<(f64, f64)> = (0..=n_max).map(|m| (m as f64 * phi).sin_cos()).collect();
        let mut rn = 1.0;
        for n in 0..=n_max {
            let centre = n * n + n;
            for m in 0..=n {
                // q r^n (n-m)!/(n+m)! P_n^m = q r^n sqrt((n-m)!/(n+m)!) * normalized
                let w = q * rn * table[tri(n, m)] * scales[tri(n, m)];
                let (s, c) = trig[m];
                out.coeffs[centre + m] += Complex64::new(w * c, -w * s);
                if m > 0 {
                    out.coeffs[centre - m] += Complex64::new(w * c, w * s);
                }
            }
            rn *= r;
        }
    }
    Ok(out)
}

/// Per-degree power `S_n = Σ_m |E_nm|² (n+|m|)!/(n−|m|)! / b^{2n}` of source moments.
///
/// For real charges `Σ_k q_k ψ(r_k) = Σ_n c_n S_n / b` whenever the reaction
/// coefficients are `B_nm = c_n E_nm / b^{2n+1}`, so every degree-diagonal
/// model's energy follows from `S` in `O(n_max)`.
pub fn degree_power(e: &MultipoleCoefficients, b: f64) -> Result<Vec<f64>> {
    if e.kind != CoefficientKind::SourceE {
        return Err(Error::domain("expected source moments E_nm"));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::domain(format!("radius must be positive (got {b})")));
    }
    let scales = factorial_scales(e.n_max);
    let mut b_n = 1.0;
    Ok((0..=e.n_max)
        .map(|n| {
            let centre = n * n + n;
            let bn = b_n;
            b_n *= b;
            compensated_sum((-(n as i64)..=n as i64).map(|m| {
                let scale = scales[tri(n, m.unsigned_abs() as usize)];
                let t = e.coeffs[(centre as i64 + m) as usize].norm() / (scale * bn);
                t * t
            }))
        })
        .collect())
}

/// Real part of `Σ B_nm r^n P_n^|m|(cos θ) e^{imφ}` at `point` (Gaussian units, no k_e).
///
/// The ±m terms are paired before summation, so for coefficients generated
/// from real charges the imaginary part cancels exactly; a residual above
/// `1e-9 |Re|` indicates broken conjugate symmetry and is reported as an
/// [`Error::Consistency`].
pub fn eval_interior_potential(b: &MultipoleCoefficients, point: &Vector3) -> Result<f64> {
    if let Some(radius) = b.radius {
        if point.norm() >= radius {
            return Err(Error::domain(format!(
                "evaluation point at |r| = {} is not inside the cavity of radius {radius}",
                point.norm()
            )));
        }
    }
    let n_max = b.n_max;
    let (r, cos_theta, phi) = spherical(point);
    if r == 0.0 {
        return check_real(b.coeffs[0]);
    }
    let table = normalized_legendre_table(n_max, cos_theta);
    let scales = factorial_scales(n_max);
    let trig: Vec<Complex64> = (0..=n_max)
        .map(|m| {
            let (s, c) = (m as f64 * phi).sin_cos();
            Complex64::new(c, s)
        })
        .collect();
    let mut re = Vec::with_capacity(n_max + 1);
    let mut im = Vec::with_capacity(n_max + 1);
    let mut rn = 1.0;
    for n in 0..=n_max {
        let centre = n * n + n;
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..=n {
            // r^n P_n^m = r^n * normalized / sqrt((n-m)!/(n+m)!). The scale is
            // divided into the coefficient first: at high order the coefficient
            // may underflow while 1/scale approaches the overflow threshold.
            let scale = scales[tri(n, m)];
            let mut pair = b.coeffs[centre + m] / scale * trig[m];
            if m > 0 {
                pair += b.coeffs[centre - m] / scale * trig[m].conj();
            }
            acc += pair * (rn * table[tri(n, m)]);
        }
        re.push(acc.re);
        im.push(acc.im);
        rn *= r;
    }
    check_real(Complex64::new(
        compensated_sum(re.into_iter()),
        compensated_sum(im.into_iter()),
    ))
}

fn check_real(v: Complex64) -> Result<f64> {
    if v.im.abs() > 1e-9 * (v.re.abs() + 1e-300) {
        return Err(Error::Consistency(format!(
            "reaction potential has imaginary part {:e} (real part {:e})",
            v.im, v.re
        )));
    }
    Ok(v.re)
}

/// Geometric bound on the part of the pairwise series beyond order `n_max`:
/// `G² t^{n_max+1} / ((1 - t) b)` with `t = (max_k |r_k| / b)²` and `G = Σ|q_k|`
/// (units e²/Å).
///
/// Every sphere model's truncation error in kcal/mol is at most
/// `(k_e/2) · |ε1−ε2|/(ε1 · min(ε1, ε2))` times this value; see
/// [`crate::sphere::truncation_energy_bound`].
pub fn truncation_tail_estimate(dist: &ChargeDistribution, b: f64, n_max: usize) -> Result<f64> {
    let r_max = dist.max_radius();
    if r_max >= b {
        return Err(Error::domain(format!(
            "charge at |r| = {r_max} is not inside the sphere of radius {b}"
        )));
    }
    let t = (r_max / b).powi(2);
    if t == 0.0 {
        return Ok(0.0);
    }
    let g = dist.gross_charge();
    Ok(g * g * t.powi(n_max as i32 + 1) / ((1.0 - t) * b))
}
