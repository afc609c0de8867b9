//! Seeded comparisons of the solvation models on random charge sets in a sphere.
//!
//! Configuration `index` of a run with seed `s` is drawn from a ChaCha8 stream
//! seeded with `s` on stream number `index`, so each configuration can be
//! regenerated on its own and runs are independent of thread count.

use crate::bem::{
    assemble_dstar, bibee_surface_charge, coulomb_field_rhs, exact_surface_charge, load_mesh,
    reaction_energy, DenseOperator, MeshFormat, PanelSurface, SolverOptions,
};
use crate::model::{DEFAULT_N_MAX, MAX_N_MAX};
use crate::sphere::{BibeeVariant, SphereSolver};
use crate::{
    Charge, ChargeDistribution, DielectricPair, EnergyResult, Error, Method, Result, SphereModel,
    Vector3,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Parameters of a comparison run. Every field has a default, so a config
/// file only needs the values it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub num_configs: usize,
    pub charges_per_config: usize,
    /// Å
    pub sphere_radius: f64,
    /// e
    pub max_abs_charge: f64,
    /// Charges are placed within `placement_margin · sphere_radius`.
    pub placement_margin: f64,
    pub eps_in: f64,
    pub eps_out: f64,
    /// Methods compared against the Kirkwood reference, written as `cfa`, `m(-0.2)`, ...
    #[serde(with = "method_strings")]
    pub methods: Vec<Method>,
    pub lambda_grid: Vec<f64>,
    pub n_max: usize,
    /// Raise `n_max` until the truncation bound is below 1e-6 of the energy.
    pub auto_escalate: bool,
    /// Surface for BEM methods: an icosphere of `sphere_radius` with this many refinements...
    pub icosphere_subdivisions: Option<u32>,
    /// ...or a mesh file (takes precedence).
    pub mesh: Option<PathBuf>,
    /// `off` or `msms`.
    pub mesh_format: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            num_configs: 100,
            charges_per_config: 25,
            sphere_radius: 5.0,
            max_abs_charge: 0.5,
            placement_margin: 0.95,
            eps_in: 4.0,
            eps_out: 80.0,
            methods: vec![Method::Cfa, Method::P, Method::M(0.0)],
            lambda_grid: (0..7).map(|i| -0.10 - 0.02 * i as f64).collect(),
            n_max: DEFAULT_N_MAX,
            auto_escalate: true,
            icosphere_subdivisions: None,
            mesh: None,
            mesh_format: "off".into(),
        }
    }
}

mod method_strings {
    use crate::Method;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(methods: &[Method], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(methods.iter().map(|m| m.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Method>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse().map_err(D::Error::custom))
            .collect()
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn dielectrics(&self) -> Result<DielectricPair> {
        DielectricPair::new(self.eps_in, self.eps_out)
    }

    pub fn sphere_model(&self) -> Result<SphereModel> {
        SphereModel::new(self.sphere_radius, self.dielectrics()?, self.n_max)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.num_configs == 0 || self.charges_per_config == 0 {
            return fail("num_configs and charges_per_config must be positive".into());
        }
        if !(self.sphere_radius.is_finite() && self.sphere_radius > 0.0) {
            return fail(format!(
                "sphere_radius must be positive (got {})",
                self.sphere_radius
            ));
        }
        if !(self.max_abs_charge.is_finite() && self.max_abs_charge > 0.0) {
            return fail(format!(
                "max_abs_charge must be positive (got {})",
                self.max_abs_charge
            ));
        }
        if !(self.placement_margin > 0.0 && self.placement_margin < 1.0) {
            return fail(format!(
                "placement_margin must lie in (0, 1) (got {})",
                self.placement_margin
            ));
        }
        if self.n_max > MAX_N_MAX {
            return fail(format!("n_max {} exceeds {MAX_N_MAX}", self.n_max));
        }
        if self.methods.is_empty() {
            return fail("no methods requested".into());
        }
        if let Some(l) = self.lambda_grid.iter().find(|l| !(-0.5..=0.0).contains(*l)) {
            return fail(format!("lambda grid value {l} outside [-0.5, 0]"));
        }
        for m in &self.methods {
            if let Some(v) = BibeeVariant::from_method(*m) {
                v.validate()?;
            }
        }
        if self.methods.iter().any(Method::is_bem)
            && self.mesh.is_none()
            && self.icosphere_subdivisions.is_none()
        {
            return fail("BEM methods need `mesh` or `icosphere_subdivisions`".into());
        }
        self.mesh_format.parse::<MeshFormat>()?;
        self.dielectrics()?;
        Ok(())
    }
}

/// Configuration `index` of the run seeded with `seed`.
///
/// Radii are `margin · b · u^{1/3}`, directions uniform on the sphere and
/// magnitudes uniform in `[−max_abs_charge, max_abs_charge]`.
pub fn random_sphere_config(
    seed: u64,
    index: usize,
    cfg: &ExperimentConfig,
) -> Result<ChargeDistribution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let rmax = cfg.placement_margin * cfg.sphere_radius;
    let charges = (0..cfg.charges_per_config)
        .map(|_| {
            let r = rmax * rng.random::<f64>().cbrt();
            let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
            let phi = 2.0 * PI * rng.random::<f64>();
            let s = (1.0 - z * z).max(0.0).sqrt();
            let q = cfg.max_abs_charge * (2.0 * rng.random::<f64>() - 1.0);
            Charge::new(Vector3::new(r * s * phi.cos(), r * s * phi.sin(), r * z), q)
        })
        .collect::<Result<Vec<_>>>()?;
    ChargeDistribution::new(charges, format!("seed{seed}-{index}"))
}

/// One energy of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub seed: u64,
    pub index: usize,
    pub method: Method,
    pub energy_kcal_mol: f64,
    pub truncation_estimate: Option<f64>,
}

/// Deviation statistics of one method against the Kirkwood reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub rmsd: f64,
    pub mean_dev_pct: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub config: ExperimentConfig,
    /// Kirkwood rows first, then one row per requested method, per configuration.
    pub rows: Vec<ComparisonRow>,
    pub summary: Vec<MethodSummary>,
    /// Configurations breaking `P ≤ Kirkwood ≤ CFA` or, when net-charged,
    /// `P ≤ M(0) ≤ Kirkwood`.
    pub bound_violations: usize,
    pub net_charged_configs: usize,
}

/// `(RMSD, mean |a − r|/|r| in %)` of `approx` against `reference`.
/// A zero reference contributes 0 when matched exactly and ∞ otherwise.
pub fn deviation_statistics(reference: &[f64], approx: &[f64]) -> (f64, f64) {
    assert_eq!(reference.len(), approx.len());
    let n = reference.len() as f64;
    if reference.is_empty() {
        return (0.0, 0.0);
    }
    let sq: f64 = reference
        .iter()
        .zip(approx)
        .map(|(r, a)| (a - r).powi(2))
        .sum();
    let rel: f64 = reference
        .iter()
        .zip(approx)
        .map(|(r, a)| match (a - r).abs() {
            0.0 => 0.0,
            d => d / r.abs(),
        })
        .sum();
    ((sq / n).sqrt(), 100.0 * rel / n)
}

/// Slack allowed when checking the bound ordering.
const ORDERING_SLACK: f64 = 1e-10;

/// Checks the analytic bound ordering for one configuration.
pub fn bound_ordering_holds(solver: &SphereSolver, net_charged: bool) -> Result<bool> {
    let e = |m| solver.energy(m).map(|r| r.value);
    let (k, cfa, p) = (e(Method::Kirkwood)?, e(Method::Cfa)?, e(Method::P)?);
    let slack = ORDERING_SLACK * k.abs();
    let mut ok = cfa >= k - slack && k >= p - slack;
    if net_charged {
        let m = e(Method::M(0.0))?;
        ok &= p <= m + slack && m <= k + slack;
    }
    Ok(ok)
}

struct Surface {
    surface: PanelSurface,
    dstar: Option<DenseOperator>,
}

fn prepare_surface(cfg: &ExperimentConfig) -> Result<Option<Surface>> {
    if !cfg.methods.iter().any(Method::is_bem) {
        return Ok(None);
    }
    let surface = match (&cfg.mesh, cfg.icosphere_subdivisions) {
        (Some(path), _) => load_mesh(path, cfg.mesh_format.parse()?)?,
        (None, Some(k)) => PanelSurface::icosphere(cfg.sphere_radius, k)?,
        (None, None) => return Err(Error::Config("BEM methods need a surface".into())),
    };
    let dstar = cfg
        .methods
        .contains(&Method::BemExact)
        .then(|| assemble_dstar(&surface));
    Ok(Some(Surface { surface, dstar }))
}

struct ConfigOutcome {
    rows: Vec<ComparisonRow>,
    net_charged: bool,
    ordered: bool,
}

fn run_one(
    cfg: &ExperimentConfig,
    index: usize,
    model: SphereModel,
    surface: Option<&Surface>,
) -> Result<ConfigOutcome> {
    let dist = random_sphere_config(cfg.seed, index, cfg)?;
    let solver = if cfg.auto_escalate {
        SphereSolver::escalated(&dist, model)?
    } else {
        SphereSolver::new(&dist, model)?
    };
    let eps = model.dielectrics();
    let row = |r: EnergyResult| ComparisonRow {
        seed: cfg.seed,
        index,
        method: r.method,
        energy_kcal_mol: r.value,
        truncation_estimate: r.truncation_error_estimate,
    };
    let mut rows = vec![row(solver.energy(Method::Kirkwood)?)];
    let rhs = surface
        .map(|s| coulomb_field_rhs(&dist, &s.surface, eps))
        .transpose()?;
    for &m in &cfg.methods {
        let energy = match (m, surface, &rhs) {
            (Method::BemExact, Some(s), Some(rhs)) => {
                let k = s.dstar.as_ref().expect("assembled for exact BEM");
                let sigma = exact_surface_charge(rhs, k, eps, &SolverOptions::default())?;
                reaction_energy(&sigma, &s.surface, &dist)?
            }
            (m, Some(s), Some(rhs)) if m.is_bem() => {
                let variant = BibeeVariant::from_method(m).expect("BEM approximation");
                let sigma = bibee_surface_charge(rhs, &s.surface, eps, variant)?;
                reaction_energy(&sigma, &s.surface, &dist)?
            }
            (m, _, _) => solver.energy(m)?,
        };
        rows.push(row(energy));
    }
    let net_charged = dist.net_charge().abs() > 1e-12;
    let ordered = bound_ordering_holds(&solver, net_charged)?;
    Ok(ConfigOutcome {
        rows,
        net_charged,
        ordered,
    })
}

/// Evaluate every requested method on `num_configs` random configurations.
///
/// Configurations run in parallel; results are collected in index order.
pub fn run_comparison(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let model = cfg.sphere_model()?;
    let surface = prepare_surface(cfg)?;
    let outcomes = (0..cfg.num_configs)
        .into_par_iter()
        .map(|i| {
            run_one(cfg, i, model, surface.as_ref()).map_err(|e| Error::Experiment {
                seed: cfg.seed,
                index: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let per_config = cfg.methods.len() + 1;
    let reference: Vec<f64> = outcomes.iter().map(|o| o.rows[0].energy_kcal_mol).collect();
    let summary = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let approx: Vec<f64> = outcomes
                .iter()
                .map(|o| o.rows[k + 1].energy_kcal_mol)
                .collect();
            let (rmsd, mean_dev_pct) = deviation_statistics(&reference, &approx);
            MethodSummary {
                method,
                rmsd,
                mean_dev_pct,
                n: approx.len(),
            }
        })
        .collect();
    let bound_violations = outcomes.iter().filter(|o| !o.ordered).count();
    let net_charged_configs = outcomes.iter().filter(|o| o.net_charged).count();
    let mut rows = Vec::with_capacity(outcomes.len() * per_config);
    for o in outcomes {
        rows.extend(o.rows);
    }
    Ok(ComparisonReport {
        config: cfg.clone(),
        rows,
        summary,
        bound_violations,
        net_charged_configs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub report: ComparisonReport,
    /// λ with the smallest mean deviation; ties go to the smaller |λ|.
    pub best_lambda: f64,
}

/// Compare `M(λ)` for every λ in the grid on the same configurations.
pub fn lambda_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    if cfg.lambda_grid.is_empty() {
        return Err(Error::Config("lambda grid is empty".into()));
    }
    let mut sweep = cfg.clone();
    sweep.methods = cfg.lambda_grid.iter().map(|&l| Method::M(l)).collect();
    let report = run_comparison(&sweep)?;
    let best = report
        .summary
        .iter()
        .fold(None::<&MethodSummary>, |best, s| match best {
            Some(b)
                if b.mean_dev_pct < s.mean_dev_pct
                    || (b.mean_dev_pct == s.mean_dev_pct
                        && b.method.lambda().unwrap().abs()
                            <= s.method.lambda().unwrap().abs()) =>
            {
                Some(b)
            }
            _ => Some(s),
        })
        .and_then(|s| s.method.lambda())
        .expect("non-empty grid");
    Ok(SweepReport {
        report,
        best_lambda: best,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    seed: u64,
    index: usize,
    method: &'a str,
    lambda: Option<f64>,
    energy_kcal_mol: f64,
    truncation_estimate: Option<f64>,
}

#[derive(Serialize)]
struct CsvSummary<'a> {
    method: &'a str,
    lambda: Option<f64>,
    rmsd: f64,
    mean_dev_pct: f64,
    n: usize,
}

/// Columns `seed,index,method,lambda,energy_kcal_mol,truncation_estimate`.
pub fn write_rows_csv(report: &ComparisonReport, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &report.rows {
        w.serialize(CsvRow {
            seed: r.seed,
            index: r.index,
            method: r.method.name(),
            lambda: r.method.lambda(),
            energy_kcal_mol: r.energy_kcal_mol,
            truncation_estimate: r.truncation_estimate,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `method,lambda,rmsd,mean_dev_pct,n`.
pub fn write_summary_csv(summary: &[MethodSummary], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in summary {
        w.serialize(CsvSummary {
            method: s.method.name(),
            lambda: s.method.lambda(),
            rmsd: s.rmsd,
            mean_dev_pct: s.mean_dev_pct,
            n: s.n,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, mut out: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}
