use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Column names of every sweep CSV.
pub const SWEEP_COLUMNS: [&str; 6] = [
    "parameter",
    "mean_fidelity",
    "std_error",
    "n_traj",
    "seed",
    "wall_time",
];

/// Result of one command: a flat table and its JSON counterpart.
#[derive(Debug, Clone)]
pub struct Report {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub json: Value,
}

/// `x` rounded to 12 significant digits, printed in shortest form
/// (exponent notation outside `[1e-4, 1e15)`).
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}")
        .parse::<f64>()
        .expect("formatted float parses")
        + 0.0;
    let magnitude = rounded.abs();
    if magnitude != 0.0 && !(1e-4..1e15).contains(&magnitude) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

fn envelope(cfg: &RunConfig, body: &Value) -> Value {
    json!({
        "tool": "jumpcode",
        "version": VERSION,
        "command": cfg.command.name(),
        "config_sha256": cfg.hash(),
        "seed": cfg.seed,
        "config": cfg,
        "result": body,
    })
}

pub fn render_json(cfg: &RunConfig, report: &Report) -> String {
    let mut s =
        serde_json::to_string_pretty(&envelope(cfg, &report.json)).expect("report serializes");
    s.push('\n');
    s
}

pub fn render_csv(cfg: &RunConfig, report: &Report) -> String {
    let mut s = format!(
        "# jumpcode {VERSION}\n# command: {}\n# config_sha256: {}\n# seed: {}\n",
        cfg.command.name(),
        cfg.hash(),
        cfg.seed
    );
    s.push_str(&report.columns.join(","));
    s.push('\n');
    for row in &report.rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn sidecar_path(out: &Path) -> PathBuf {
    if out.extension().is_some_and(|e| e == "json") {
        out.with_extension("sidecar.json")
    } else {
        out.with_extension("json")
    }
}

/// Writes to `--out` (CSV also gets a JSON sidecar) or to stdout.
pub fn emit(cfg: &RunConfig, report: &Report) -> Result<(), CliError> {
    let text = match cfg.format {
        Format::Csv => render_csv(cfg, report),
        Format::Json => render_json(cfg, report),
    };
    match &cfg.out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => {
            let write = |p: &Path, body: &str| {
                std::fs::write(p, body)
                    .map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display())))
            };
            write(path, &text)?;
            if cfg.format == Format::Csv {
                write(&sidecar_path(path), &render_json(cfg, report))?;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(0.942_968_736_428_207_1), "0.942968736428");
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(-0.0), "0");
        assert_eq!(sig12(1.234_567_890_123_4e-7), "1.23456789012e-7");
        assert_eq!(sig12(0.000_25), "0.00025");
        assert_eq!(sig12(20000.0), "20000");
    }

    #[test]
    fn sidecar_names() {
        assert_eq!(
            sidecar_path(Path::new("a/run.csv")),
            PathBuf::from("a/run.json")
        );
        assert_eq!(sidecar_path(Path::new("run")), PathBuf::from("run.json"));
        assert_eq!(
            sidecar_path(Path::new("run.json")),
            PathBuf::from("run.sidecar.json")
        );
    }
}
