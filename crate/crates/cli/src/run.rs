use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use jumpcode::designs::{bundled_seeds, verify_seed, SeedFamily};
use jumpcode::experiments::{
    grover_deadtime, grover_delay, grover_unequal_rates, memory_misdetection_from,
    unraveling_check_with, ImperfectionConfig,
};
use jumpcode::jumpcodes::{bounds_table, builtin_833, encode, pairing_code, verify_code, JumpCode};
use jumpcode::lindblad::DecayModel;
use jumpcode::trajectory::EnsembleResult;
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::output::{sig12, Report, SWEEP_COLUMNS};

/// Runs the command and returns its report together with a verdict that,
/// when present, sets the exit status after the report has been written.
pub fn execute(cfg: &RunConfig) -> Result<(Report, Option<CliError>), CliError> {
    match cfg.command {
        Command::Construct => Ok((construct(cfg)?, None)),
        Command::Verify => verify(cfg),
        Command::Bounds => Ok((bounds(cfg)?, None)),
        Command::Memory | Command::GroverRates | Command::GroverDelay | Command::GroverDeadtime => {
            Ok((sweep(cfg)?, None))
        }
        Command::TrajectoryCheck => trajectory_check(cfg),
    }
}

/// Parses `pairing(N)`, `pairing(N,phi)`, a bundled name, or a JSON file path.
pub fn load_code(spec: &str, phi: Option<f64>) -> Result<JumpCode, CliError> {
    let spec = spec.trim();
    if let Some(inner) = spec
        .strip_prefix("pairing(")
        .and_then(|s| s.strip_suffix(')'))
    {
        let mut parts = inner.split(',').map(str::trim);
        let n: usize = parts
            .next()
            .unwrap_or("")
            .parse()
            .map_err(|_| CliError::Config(format!("cannot read N in code spec '{spec}'")))?;
        let inline: Option<f64> =
            match parts.next() {
                Some(p) => Some(p.parse().map_err(|_| {
                    CliError::Config(format!("cannot read phi in code spec '{spec}'"))
                })?),
                None => None,
            };
        if parts.next().is_some() {
            return Err(CliError::Config(format!(
                "code spec '{spec}' has too many arguments"
            )));
        }
        if let (Some(a), Some(b)) = (inline, phi) {
            if a != b {
                return Err(CliError::Config(format!(
                    "phase given twice: {a} in --code and {b} in --phi"
                )));
            }
        }
        return Ok(pairing_code(n, inline.or(phi).unwrap_or(0.0))?);
    }
    if phi.is_some() {
        return Err(CliError::Config(
            "--phi applies to pairing codes only".into(),
        ));
    }
    if spec == "builtin-833" {
        return Ok(builtin_833());
    }
    if let Some((_, seed)) = bundled_seeds().into_iter().find(|(name, _)| *name == spec) {
        return Ok(encode(&seed)?);
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!(
            "unknown code '{spec}' and cannot read it as a file: {e}"
        ))
    })?;
    if let Ok(seed) = SeedFamily::from_json(&text) {
        return Ok(encode(&seed)?);
    }
    JumpCode::from_json(&text)
        .map_err(|e| CliError::Config(format!("{spec} is neither a SEED nor a code file: {e}")))
}

fn code_of(cfg: &RunConfig) -> Result<JumpCode, CliError> {
    load_code(
        cfg.code.as_deref().expect("resolved configs carry a code"),
        cfg.phi,
    )
}

fn construct(cfg: &RunConfig) -> Result<Report, CliError> {
    let code = code_of(cfg)?;
    let mut rows = Vec::new();
    for (i, c) in code.codewords().iter().enumerate() {
        for (ket, a) in c.support() {
            rows.push(vec![
                i.to_string(),
                ket.to_string(),
                sig12(a.re),
                sig12(a.im),
            ]);
        }
    }
    let mut body = serde_json::to_value(code.to_json_value()).expect("code serializes");
    if let Some(seed) = code.seed() {
        body["seed_family"] = serde_json::to_value(seed.to_json_value()).expect("seed serializes");
    }
    Ok(Report {
        columns: ["codeword", "ket", "re", "im"].map(String::from).to_vec(),
        rows,
        json: body,
    })
}

fn set_label(positions: &[usize]) -> String {
    let inner: Vec<String> = positions.iter().map(|p| p.to_string()).collect();
    format!("{{{}}}", inner.join(" "))
}

fn verify(cfg: &RunConfig) -> Result<(Report, Option<CliError>), CliError> {
    let code = code_of(cfg)?;
    let d = cfg.d.unwrap_or(code.order());
    let kappa = cfg.kappa[0];
    let model = DecayModel::uniform(code.n_qubits(), kappa)?;
    let report = verify_code(&code, d, &model)?;
    let seed_valid = match code.seed() {
        Some(s) => Some(verify_seed(&s.with_order(d))?.is_valid()),
        None => None,
    };

    let mut rows = Vec::new();
    let mut lambda = Vec::new();
    for (set, entry) in &report.lambda_table {
        let exact = entry.exact.map(|r| format!("{}/{}", r.numer(), r.denom()));
        rows.push(vec![
            set_label(set.positions()),
            set.len().to_string(),
            sig12(entry.scaled),
            sig12(entry.raw),
            exact.clone().unwrap_or_default(),
        ]);
        lambda.push(
            json!({"E": set.positions(), "scaled": entry.scaled, "raw": entry.raw, "exact": exact}),
        );
    }
    let violations: Vec<Value> = report
        .violations
        .iter()
        .take(20)
        .map(|v| json!({"i": v.i, "j": v.j, "E": v.set.positions(), "re": v.value.re, "im": v.value.im}))
        .collect();
    let body = json!({
        "code": code.label(),
        "N": code.n_qubits(),
        "K": code.dimension(),
        "w": code.weight(),
        "d": d,
        "kappa": kappa,
        "passed": report.passed,
        "seed_valid": seed_valid,
        "lambda": lambda,
        "violation_count": report.violations.len(),
        "violations": violations,
        "knill": {"satisfied": report.knill.satisfied, "violation_count": report.knill.violations.len()},
    });
    let verdict = (!report.passed).then(|| {
        let first = &report.violations[0];
        CliError::Verification(format!(
            "{} fails at order {d}: <c_{}|J_E^+ J_E|c_{}> = {} for E = {}",
            code.label(),
            first.i,
            first.j,
            first.value,
            set_label(first.set.positions())
        ))
    });
    let columns = ["E", "size", "lambda_scaled", "lambda_raw", "lambda_exact"]
        .map(String::from)
        .to_vec();
    Ok((
        Report {
            columns,
            rows,
            json: body,
        },
        verdict,
    ))
}

fn bounds(cfg: &RunConfig) -> Result<Report, CliError> {
    let table = bounds_table(
        cfg.n_max.expect("bounds has N"),
        cfg.d.expect("bounds has d"),
    )?;
    let rows = table
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.d.to_string(),
                r.w.to_string(),
                r.upper_bound.to_string(),
                r.achieved.map(|k| k.to_string()).unwrap_or_default(),
                r.construction.unwrap_or("").to_string(),
            ]
        })
        .collect();
    let columns = ["N", "d", "w", "upper_bound", "achieved", "construction"]
        .map(String::from)
        .to_vec();
    Ok(Report {
        columns,
        rows,
        json: json!({ "rows": table }),
    })
}

struct Point {
    parameter: f64,
    mean_fidelity: f64,
    std_error: f64,
    n_traj: usize,
    wall_time: f64,
    extra: Value,
    imperfection: ImperfectionConfig,
}

fn ensemble_extra(r: &EnsembleResult) -> Value {
    json!({
        "mean_jump_count": r.mean_jump_count,
        "jump_count_std_error": r.jump_count_std_error,
        "survival_fraction": r.survival_fraction,
        "failures": r.failures,
    })
}

fn sweep(cfg: &RunConfig) -> Result<Report, CliError> {
    let code = code_of(cfg)?;
    let kappa = cfg.kappa[0];
    let values = match cfg.command {
        Command::Memory => &cfg.q,
        Command::GroverRates => &cfg.delta_kappa,
        Command::GroverDelay => &cfg.delay,
        Command::GroverDeadtime => &cfg.dead_time,
        _ => unreachable!("not a sweep"),
    };
    let mut points = Vec::new();
    for &x in values {
        let start = Instant::now();
        let mut imperfection = ImperfectionConfig {
            kappa_mean: kappa,
            ..Default::default()
        };
        let (mean_fidelity, std_error, n_traj, extra) = match cfg.command {
            Command::Memory => {
                if kappa <= 0.0 && cfg.t_final.is_none() {
                    return Err(CliError::Config(
                        "memory needs kappa > 0 or an explicit --t-final".into(),
                    ));
                }
                imperfection.q = x;
                let t = cfg.t_final.unwrap_or(PI / (2.0 * kappa));
                let r = memory_misdetection_from(
                    &code,
                    &code.uniform_superposition(),
                    x,
                    kappa,
                    t,
                    cfg.n_traj,
                    cfg.seed,
                )?;
                (r.mean_fidelity, r.std_error, r.n_traj, ensemble_extra(&r))
            }
            Command::GroverRates => {
                imperfection.delta_kappa = x;
                let r =
                    grover_unequal_rates(&code, kappa, x, cfg.n_samples, cfg.seed, cfg.encoded)?;
                (
                    r.mean_fidelity,
                    r.std_error,
                    r.n_samples,
                    json!({ "encoded": cfg.encoded }),
                )
            }
            Command::GroverDelay => {
                imperfection.delay = x;
                let r = grover_delay(&code, kappa, x, cfg.n_traj, cfg.seed)?;
                (r.mean_fidelity, r.std_error, r.n_traj, ensemble_extra(&r))
            }
            Command::GroverDeadtime => {
                imperfection.dead_time = x;
                let r = grover_deadtime(&code, kappa, x, cfg.n_traj, cfg.seed)?;
                (r.mean_fidelity, r.std_error, r.n_traj, ensemble_extra(&r))
            }
            _ => unreachable!("not a sweep"),
        };
        let wall_time = if cfg.wall_time {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        points.push(Point {
            parameter: x,
            mean_fidelity,
            std_error,
            n_traj,
            wall_time,
            extra,
            imperfection,
        });
    }
    Ok(sweep_report(cfg, &code, &points))
}

fn sweep_report(cfg: &RunConfig, code: &JumpCode, points: &[Point]) -> Report {
    let rows = points
        .iter()
        .map(|p| {
            vec![
                sig12(p.parameter),
                sig12(p.mean_fidelity),
                sig12(p.std_error),
                p.n_traj.to_string(),
                cfg.seed.to_string(),
                sig12(p.wall_time),
            ]
        })
        .collect();
    let json_rows: Vec<Value> = points
        .iter()
        .map(|p| {
            let mut row = json!({
                "parameter": p.parameter,
                "mean_fidelity": p.mean_fidelity,
                "std_error": p.std_error,
                "n_traj": p.n_traj,
                "seed": cfg.seed,
                "wall_time": p.wall_time,
                "imperfection": p.imperfection,
            });
            if let (Value::Object(dst), Value::Object(src)) = (&mut row, &p.extra) {
                dst.extend(src.clone());
            }
            row
        })
        .collect();
    let body = json!({
        "code": code.label(),
        "parameter": cfg.sweep_name().unwrap_or("t_final"),
        "rows": json_rows,
    });
    Report {
        columns: SWEEP_COLUMNS.map(String::from).to_vec(),
        rows,
        json: body,
    }
}

fn trajectory_check(cfg: &RunConfig) -> Result<(Report, Option<CliError>), CliError> {
    let code = code_of(cfg)?;
    let kappa = cfg.kappa[0];
    let q = cfg.q[0];
    if kappa <= 0.0 && cfg.t_final.is_none() {
        return Err(CliError::Config(
            "trajectory-check needs kappa > 0 or an explicit --t-final".into(),
        ));
    }
    let t = cfg.t_final.unwrap_or(PI / (2.0 * kappa));
    let start = Instant::now();
    let check = unraveling_check_with(&code, q, kappa, t, cfg.n_traj, cfg.seed)?;
    let wall_time = if cfg.wall_time {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    let within = check.within(5.0);
    let mut extra = ensemble_extra(&check.ensemble);
    extra["max_abs_diff"] = json!(check.max_abs_diff);
    extra["worst_excess_5sigma"] = json!(check.worst_excess);
    extra["within_5_sigma"] = json!(within);
    let point = Point {
        parameter: t,
        mean_fidelity: check.ensemble.mean_fidelity,
        std_error: check.ensemble.std_error,
        n_traj: check.ensemble.n_traj,
        wall_time,
        extra,
        imperfection: ImperfectionConfig {
            q,
            kappa_mean: kappa,
            ..Default::default()
        },
    };
    let verdict = (!within).then(|| {
        CliError::Verification(format!(
            "ensemble density matrix deviates from the master equation by {:e} beyond 5 sigma",
            check.worst_excess
        ))
    });
    Ok((sweep_report(cfg, &code, &[point]), verdict))
}
