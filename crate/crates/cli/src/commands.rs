use crate::args::{BemArgs, ChargeArgs, ExperimentArgs, Format, GlobalArgs, SolverArg, SphereArgs};
use crate::manifest::RunManifest;
use crate::Failure;
use bibee::bem::mesh::msms_pair;
use bibee::bem::{BemSolver, MeshFormat, PanelSurface, SolverKind, SolverOptions};
use bibee::experiments::{
    lambda_sweep, run_comparison, write_json, write_rows_csv, write_summary_csv, ExperimentConfig,
};
use bibee::pqr::load_pqr;
use bibee::sphere::SphereSolver;
use bibee::{
    Charge, ChargeDistribution, DielectricPair, EnergyResult, Method, SphereModel, Vector3,
};
use serde_json::json;
use std::path::{Path, PathBuf};

/// Everything a command produces, written only after it has fully succeeded.
pub struct Output {
    pub primary: Vec<u8>,
    /// Secondary tables, written to `<out>.<suffix>` or after the primary on stdout.
    pub extra: Vec<(&'static str, Vec<u8>)>,
    pub manifest: RunManifest,
    /// Short human-readable notes for stderr.
    pub notes: Vec<String>,
}

/// Config file values with global flags applied on top.
pub fn resolve_config(global: &GlobalArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &global.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(bibee::Error::from)?;
            toml::from_str(&text)
                .map_err(|e| bibee::Error::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(n) = global.nmax {
        cfg.n_max = n;
    }
    if let Some(e) = global.eps_in {
        cfg.eps_in = e;
    }
    if let Some(e) = global.eps_out {
        cfg.eps_out = e;
    }
    Ok(cfg)
}

fn parse_methods(list: &[String], lambda: f64) -> Result<Vec<Method>, Failure> {
    list.iter()
        .map(|s| {
            let parsed = if s.contains('(') {
                s.parse()
            } else {
                Method::parse_with_lambda(s, lambda)
            };
            parsed.map_err(|e| Failure::Usage(e.to_string()))
        })
        .collect()
}

fn parse_inline_charge(text: &str) -> Result<Charge, Failure> {
    let v: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Usage(format!("charge '{text}' is not x,y,z,q")))?;
    if v.len() != 4 {
        return Err(Failure::Usage(format!(
            "charge '{text}' needs 4 values, got {}",
            v.len()
        )));
    }
    Ok(Charge::new(Vector3::new(v[0], v[1], v[2]), v[3])?)
}

fn load_charges(
    args: &ChargeArgs,
    manifest: &mut RunManifest,
) -> Result<ChargeDistribution, Failure> {
    if let Some(path) = &args.pqr {
        manifest.add_input(path).map_err(bibee::Error::from)?;
        return Ok(load_pqr(path)?);
    }
    let charges = args
        .charge
        .iter()
        .map(|c| parse_inline_charge(c))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ChargeDistribution::new(charges, "inline")?)
}

fn energy_json(label: &str, results: &[EnergyResult]) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    write_json(&json!({ "label": label, "results": results }), &mut buf)?;
    Ok(buf)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sphere(global: &GlobalArgs, args: &SphereArgs) -> Result<Output, Failure> {
    let cfg = resolve_config(global)?;
    let radius = args.radius.unwrap_or(cfg.sphere_radius);
    let methods = if args.methods.is_empty() {
        let mut m = vec![Method::Kirkwood];
        m.extend(cfg.methods.iter().filter(|m| **m != Method::Kirkwood));
        m
    } else {
        parse_methods(&args.methods, args.lambda)?
    };
    if let Some(m) = methods.iter().find(|m| m.is_bem()) {
        return Err(Failure::Usage(format!(
            "{m} is a boundary-element method; use `bibee bem`"
        )));
    }
    let escalate = cfg.auto_escalate && !args.no_escalate;
    let mut manifest = RunManifest::new(
        "sphere",
        json!({
            "radius": radius,
            "eps_in": cfg.eps_in,
            "eps_out": cfg.eps_out,
            "n_max": cfg.n_max,
            "escalate": escalate,
            "methods": methods.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
            "charges": args.charges.charge,
        }),
    );
    if let Some(c) = &global.config {
        manifest.add_input(c).map_err(bibee::Error::from)?;
    }
    let dist = load_charges(&args.charges, &mut manifest)?;
    let model = SphereModel::new(
        radius,
        DielectricPair::new(cfg.eps_in, cfg.eps_out)?,
        cfg.n_max,
    )?;
    let solver = if escalate {
        SphereSolver::escalated(&dist, model)?
    } else {
        SphereSolver::new(&dist, model)?
    };
    let results = methods
        .iter()
        .map(|&m| solver.energy(m))
        .collect::<Result<Vec<_>, _>>()?;
    let primary = match global.format {
        Format::Json => energy_json(dist.label(), &results)?,
        Format::Csv => {
            let mut s =
                String::from("label,method,lambda,energy_kcal_mol,truncation_estimate,n_max\n");
            for r in &results {
                s += &format!(
                    "{},{},{},{},{},{}\n",
                    dist.label(),
                    r.method.name(),
                    fmt_opt(r.method.lambda()),
                    r.value,
                    r.truncation_error_estimate
                        .map(|x| format!("{x:.3e}"))
                        .unwrap_or_default(),
                    solver.model().n_max()
                );
            }
            s.into_bytes()
        }
    };
    manifest.results = json!({ "n_max_used": solver.model().n_max() });
    Ok(Output {
        primary,
        extra: Vec::new(),
        manifest,
        notes: Vec::new(),
    })
}

fn mesh_format(path: &Path, explicit: Option<MeshFormat>) -> MeshFormat {
    explicit.unwrap_or(match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("off") => MeshFormat::Off,
        _ => MeshFormat::Msms,
    })
}

pub fn bem(global: &GlobalArgs, args: &BemArgs) -> Result<Output, Failure> {
    let cfg = resolve_config(global)?;
    let methods = parse_methods(&args.methods, args.lambda)?;
    if let Some(m) = methods.iter().find(|m| !m.is_bem()) {
        return Err(Failure::Usage(format!(
            "{m} is not a boundary-element method; use `bibee sphere`"
        )));
    }
    let radius = args.radius.unwrap_or(cfg.sphere_radius);
    let options = SolverOptions {
        kind: match args.solver {
            SolverArg::Auto => SolverKind::Auto,
            SolverArg::Direct => SolverKind::Direct,
            SolverArg::Iterative => SolverKind::Iterative,
        },
        tolerance: args.tol,
        restart: args.restart,
        max_iterations: args.max_iter,
        ..Default::default()
    };
    let mut manifest = RunManifest::new(
        "bem",
        json!({
            "mesh": args.mesh,
            "mesh_format": args.mesh.as_ref().map(|p| format!("{:?}", mesh_format(p, args.mesh_format))),
            "icosphere_level": args.icosphere,
            "radius": args.icosphere.map(|_| radius),
            "eps_in": cfg.eps_in,
            "eps_out": cfg.eps_out,
            "methods": methods.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
            "solver": format!("{:?}", args.solver),
            "tol": args.tol,
            "max_iter": args.max_iter,
            "restart": args.restart,
            "charges": args.charges.charge,
        }),
    );
    if let Some(c) = &global.config {
        manifest.add_input(c).map_err(bibee::Error::from)?;
    }
    let surface = match (&args.mesh, args.icosphere) {
        (Some(path), _) => {
            let format = mesh_format(path, args.mesh_format);
            let inputs: Vec<PathBuf> = match format {
                MeshFormat::Off => vec![path.clone()],
                MeshFormat::Msms => {
                    let (v, f) = msms_pair(path);
                    vec![v, f]
                }
            };
            for p in &inputs {
                manifest.add_input(p).map_err(bibee::Error::from)?;
            }
            bibee::bem::load_mesh(path, format)?
        }
        (None, Some(level)) => PanelSurface::icosphere(radius, level)?,
        (None, None) => return Err(Failure::Usage("give --mesh or --icosphere".into())),
    };
    let dist = load_charges(&args.charges, &mut manifest)?;
    let eps = DielectricPair::new(cfg.eps_in, cfg.eps_out)?;
    let mut solver = BemSolver::new(surface, options);
    let results = methods
        .iter()
        .map(|&m| solver.energy(&dist, eps, m))
        .collect::<Result<Vec<_>, _>>()?;
    let primary = match global.format {
        Format::Json => energy_json(dist.label(), &results)?,
        Format::Csv => {
            let mut s =
                String::from("label,method,lambda,energy_kcal_mol,panels,residual,iterations\n");
            let meta = |r: &EnergyResult, k: &str| r.metadata.get(k).cloned().unwrap_or_default();
            for r in &results {
                s += &format!(
                    "{},{},{},{},{},{},{}\n",
                    dist.label(),
                    r.method.name(),
                    fmt_opt(r.method.lambda()),
                    r.value,
                    meta(r, "panels"),
                    meta(r, "residual"),
                    meta(r, "iterations"),
                );
            }
            s.into_bytes()
        }
    };
    manifest.results = json!({ "panels": solver.surface().len() });
    Ok(Output {
        primary,
        extra: Vec::new(),
        manifest,
        notes: Vec::new(),
    })
}

fn experiment_config(
    global: &GlobalArgs,
    args: &ExperimentArgs,
) -> Result<ExperimentConfig, Failure> {
    let mut cfg = resolve_config(global)?;
    if let Some(n) = args.num_configs {
        cfg.num_configs = n;
    }
    if !args.methods.is_empty() {
        cfg.methods = parse_methods(&args.methods, 0.0)?;
    }
    if !args.lambda_grid.is_empty() {
        cfg.lambda_grid = args.lambda_grid.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn experiment_manifest(
    command: &str,
    global: &GlobalArgs,
    cfg: &ExperimentConfig,
) -> Result<RunManifest, Failure> {
    let mut manifest = RunManifest::new(
        command,
        serde_json::to_value(cfg).map_err(bibee::Error::from)?,
    );
    if let Some(c) = &global.config {
        manifest.add_input(c).map_err(bibee::Error::from)?;
    }
    if let Some(m) = &cfg.mesh {
        manifest.add_input(m).map_err(bibee::Error::from)?;
    }
    Ok(manifest)
}

pub fn experiment(global: &GlobalArgs, args: &ExperimentArgs) -> Result<Output, Failure> {
    let cfg = experiment_config(global, args)?;
    let mut manifest = experiment_manifest("experiment", global, &cfg)?;
    let report = run_comparison(&cfg)?;
    let mut primary = Vec::new();
    let mut extra = Vec::new();
    match global.format {
        Format::Json => write_json(&report, &mut primary)?,
        Format::Csv => {
            write_rows_csv(&report, &mut primary)?;
            let mut summary = Vec::new();
            write_summary_csv(&report.summary, &mut summary)?;
            extra.push(("summary.csv", summary));
        }
    }
    manifest.results = json!({
        "bound_violations": report.bound_violations,
        "net_charged_configs": report.net_charged_configs,
        "configs": cfg.num_configs,
    });
    let notes = vec![format!(
        "bound-ordering violations: {} of {} configs",
        report.bound_violations, cfg.num_configs
    )];
    Ok(Output {
        primary,
        extra,
        manifest,
        notes,
    })
}

pub fn sweep(global: &GlobalArgs, args: &ExperimentArgs) -> Result<Output, Failure> {
    let cfg = experiment_config(global, args)?;
    let mut manifest = experiment_manifest("sweep", global, &cfg)?;
    let sweep = lambda_sweep(&cfg)?;
    let mut primary = Vec::new();
    match global.format {
        Format::Json => write_json(&sweep, &mut primary)?,
        Format::Csv => write_summary_csv(&sweep.report.summary, &mut primary)?,
    }
    manifest.results = json!({
        "best_lambda": sweep.best_lambda,
        "bound_violations": sweep.report.bound_violations,
    });
    Ok(Output {
        primary,
        extra: Vec::new(),
        manifest,
        notes: vec![format!("best lambda: {}", sweep.best_lambda)],
    })
}
