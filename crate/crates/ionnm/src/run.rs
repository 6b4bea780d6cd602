use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use ionnm_core::blp::{pair_scan, sort_points, sweep_delta, BlochPair, SweepConfig};
use ionnm_core::dephasing::{couplings, curve, CouplingSet, ThermalSpec, XiReading};
use ionnm_core::lattice::{ChainParams, ModeTable};
use ionnm_core::oracle::{compare_analytic, compare_analytic_with, FockConfig, OracleMode, MAX_MODES};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{Format, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{extension, sig12, Cell, Table};

fn chain(cfg: &RunConfig, delta: f64) -> Result<ChainParams> {
    Ok(ChainParams::new(cfg.n_ions, delta)?.with_eta(cfg.eta)?)
}

fn thermal(bom: f64) -> Result<ThermalSpec> {
    Ok(if bom.is_infinite() { ThermalSpec::zero_temperature() } else { ThermalSpec::new(bom)? })
}

pub fn curve_file_name(delta: f64, bom: f64, format: Format) -> String {
    format!("curve_delta_{}_bw_{}.{}", sig12(delta), sig12(bom), extension(format))
}

/// One table per `(delta, beta_omega_max)`. Several combinations need `--out`
/// to name a directory.
pub fn run_curve(cfg: &RunConfig) -> Result<()> {
    let combos: Vec<(f64, f64)> = cfg.deltas.iter().flat_map(|&d| cfg.betas.iter().map(move |&b| (d, b))).collect();
    if cfg.out.is_none() && combos.len() > 1 {
        return Err(CliError::Params("several curves need --out naming a directory".into()));
    }
    for (delta, bom) in combos {
        let params = chain(cfg, delta)?;
        let c = curve(&params, thermal(bom)?, cfg.t_max, cfg.dt)?;
        let comp = c.components().expect("sampled curves carry components");
        let mut table = Table::new(&["t", "D_opt", "A", "B", "V"]);
        for (i, d) in c.values().iter().enumerate() {
            table.push(vec![
                Cell::Num(c.time(i)),
                Cell::Num(*d),
                Cell::Num(comp.a[i]),
                Cell::Num(comp.b[i]),
                Cell::Num(comp.v[i]),
            ]);
        }
        let mut echo = cfg.echo();
        echo.push(("delta", sig12(delta)));
        echo.push(("curve-beta-omega-max", sig12(bom)));
        echo.push(("omega-max", sig12(c.meta().map_or(f64::NAN, |m| m.omega_max))));
        let path = cfg.out.as_ref().map(|dir| dir.join(curve_file_name(delta, bom, cfg.format)));
        table.write(path.as_deref(), &echo, cfg.format)?;
        if let Some(p) = path {
            log::info!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn errors_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.errors.csv"))
}

pub fn run_sweep(cfg: &RunConfig) -> Result<()> {
    let sc = SweepConfig { n_ions: cfg.n_ions, eta: cfg.eta, dt: cfg.dt, t_trunc: cfg.t_trunc };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Params(format!("thread pool: {e}")))?;
    let mut points: Vec<_> =
        pool.install(|| cfg.deltas.par_iter().flat_map_iter(|&d| sweep_delta(&sc, d, &cfg.betas)).collect());
    sort_points(&mut points);

    let mut table = Table::new(&["delta", "beta_omega_max", "nm_value", "t_trunc"]);
    let mut errors = Table::new(&["delta", "beta_omega_max", "error"]);
    for p in &points {
        match &p.outcome {
            Ok(r) => table.push(vec![
                Cell::Num(p.delta),
                Cell::Num(p.beta_omega_max),
                Cell::Num(r.value),
                Cell::Num(r.truncation_time),
            ]),
            Err(e) => {
                log::error!("delta {} beta_omega_max {}: {e}", p.delta, p.beta_omega_max);
                errors.push(vec![Cell::Num(p.delta), Cell::Num(p.beta_omega_max), Cell::Text(e.to_string())]);
            }
        }
    }
    let echo = cfg.echo();
    table.write(cfg.out.as_deref(), &echo, cfg.format)?;
    if let Some(out) = &cfg.out {
        errors.write(Some(&errors_path(out)), &echo, Format::Csv)?;
    }
    match errors.rows.len() {
        0 => Ok(()),
        failed => Err(CliError::PartialSweep { failed, total: points.len() }),
    }
}

pub fn run_spectrum(cfg: &RunConfig) -> Result<()> {
    let [delta] = cfg.deltas[..] else {
        return Err(CliError::Params("spectrum takes a single delta".into()));
    };
    let table = ModeTable::for_params(&chain(cfg, delta)?)?;
    let mut out = Table::new(&["branch", "k_index", "omega", "s1"]);
    for m in table.modes() {
        out.push(vec![
            Cell::Text(m.branch.as_str().into()),
            Cell::Int(m.k_index as i64),
            Cell::Num(m.omega),
            Cell::Num(m.s1),
        ]);
    }
    out.write(cfg.out.as_deref(), &cfg.echo(), cfg.format)
}

const ORACLE_T0_TOL: f64 = 1e-8;
const ORACLE_THERMAL_TOL: f64 = 1e-2;
const VALIDATE_T_MAX: f64 = 50.0;
const VALIDATE_DT: f64 = 0.1;
const SCAN_DT: f64 = 0.05;

struct Check {
    name: String,
    pass: bool,
    measured: f64,
    tolerance: f64,
    detail: String,
}

fn oracle_config(sub: &CouplingSet, beta: f64, n_max: Option<usize>) -> Result<FockConfig> {
    let auto = FockConfig::from_couplings(sub, beta)?;
    Ok(match n_max {
        None => auto,
        Some(n) => FockConfig::new(auto.modes().to_vec(), vec![n; auto.n_modes()])?,
    })
}

/// Exact-oracle checks on a few of the most strongly coupled modes of the
/// first configured delta, rescaled to keep the total coupling.
pub fn run_validate(cfg: &RunConfig) -> Result<()> {
    if cfg.oracle_modes > MAX_MODES {
        return Err(ionnm_core::Error::ResourceLimit(format!(
            "oracle-modes {} exceeds {MAX_MODES}",
            cfg.oracle_modes
        ))
        .into());
    }
    let params = chain(cfg, cfg.deltas[0])?;
    let full = couplings(&ModeTable::for_params(&params)?, params.eta())?;
    let omega_max = full.omega_max();
    let times: Vec<f64> = (0..=(VALIDATE_T_MAX / VALIDATE_DT).round() as usize).map(|i| VALIDATE_DT * i as f64).collect();
    let ms = 1..=cfg.oracle_modes;
    let mut checks = Vec::new();

    let mut worst: f64 = 0.0;
    for m in ms.clone() {
        let c = oracle_config(&full.strongest_rescaled(m)?, f64::INFINITY, cfg.n_max)?;
        worst = worst.max(compare_analytic(f64::INFINITY, &c, &times)?.max_deviation);
    }
    checks.push(Check {
        name: "oracle T=0".into(),
        pass: worst < ORACLE_T0_TOL,
        measured: worst,
        tolerance: ORACLE_T0_TOL,
        detail: format!("M = 1..{}", cfg.oracle_modes),
    });

    for &bom in cfg.betas.iter().filter(|b| b.is_finite()) {
        let beta = bom / omega_max;
        let (mut adopted, mut literal) = (0.0f64, 0.0f64);
        let mut ordered = true;
        for m in ms.clone() {
            let c = oracle_config(&full.strongest_rescaled(m)?, beta, cfg.n_max)?;
            let a = compare_analytic(beta, &c, &times)?.max_deviation;
            let l = compare_analytic_with(beta, &c, &times, XiReading::Literal)?.max_deviation;
            ordered &= a < l;
            adopted = adopted.max(a);
            literal = literal.max(l);
        }
        checks.push(Check {
            name: format!("oracle bw={}", sig12(bom)),
            pass: adopted < ORACLE_THERMAL_TOL,
            measured: adopted,
            tolerance: ORACLE_THERMAL_TOL,
            detail: format!("M = 1..{}", cfg.oracle_modes),
        });
        checks.push(Check {
            name: format!("literal xi rejected bw={}", sig12(bom)),
            pass: ordered,
            measured: literal,
            tolerance: adopted,
            detail: "literal deviation must exceed adopted for every M".into(),
        });
    }

    let bom = cfg.betas[0];
    let beta = if bom.is_finite() { bom / omega_max } else { f64::INFINITY };
    let m = cfg.oracle_modes.min(2);
    let scan_cfg = oracle_config(&full.strongest_rescaled(m)?, beta, cfg.n_max)?;
    let mut grid = BlochPair::grid(4, 4);
    grid.push(BlochPair::SIGMA_X);
    let scan = pair_scan(&scan_cfg, beta, &grid, cfg.t_trunc, SCAN_DT)?;
    let value = |p: BlochPair| scan.values.iter().find(|(q, _)| *q == p).map(|(_, v)| *v).unwrap();
    let (pole, sx) = (value(BlochPair::new(0.0, 0.0)), value(BlochPair::SIGMA_X));
    checks.push(Check {
        name: "pole pair below sigma_x".into(),
        pass: pole < sx,
        measured: pole,
        tolerance: sx,
        detail: format!("M = {m}, bw = {}", sig12(bom)),
    });
    let equatorial = scan.maximizers.iter().all(|p| (p.theta - PI / 2.0).abs() < 1e-12);
    checks.push(Check {
        name: "maximizer equatorial".into(),
        pass: equatorial && scan.maximizers.contains(&BlochPair::SIGMA_X),
        measured: scan.best,
        tolerance: sx,
        detail: format!("{} maximizer(s)", scan.maximizers.len()),
    });

    let free: Vec<OracleMode> =
        scan_cfg.modes().iter().map(|o| OracleMode { omega: o.omega, alpha: Complex64::new(0.0, 0.0) }).collect();
    let free = FockConfig::new(free, scan_cfg.n_max().to_vec())?;
    let free_scan = pair_scan(&free, beta, &grid, cfg.t_trunc, SCAN_DT)?;
    let most = free_scan.values.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    checks.push(Check {
        name: "uncoupled environment is Markovian".into(),
        pass: most < 1e-12,
        measured: most,
        tolerance: 1e-12,
        detail: format!("{} pairs", grid.len()),
    });

    let mut table = Table::new(&["check", "pass", "measured", "tolerance", "detail"]);
    for c in &checks {
        println!(
            "[{}] {}: {:.3e} (vs {:.3e}) {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.tolerance,
            c.detail
        );
        table.push(vec![
            Cell::Text(c.name.clone()),
            Cell::Text(c.pass.to_string()),
            Cell::Num(c.measured),
            Cell::Num(c.tolerance),
            Cell::Text(c.detail.clone()),
        ]);
    }
    if let Some(out) = &cfg.out {
        table.write(Some(out), &cfg.echo(), cfg.format)?;
    }
    match checks.iter().filter(|c| !c.pass).count() {
        0 => Ok(()),
        n => Err(CliError::Validation(n)),
    }
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}
