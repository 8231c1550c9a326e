use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "jumpcode",
    version,
    about = "Detected jump-error correcting codes: construction, verification and dynamics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Print the code words of a code
    Construct,
    /// Check the correction conditions up to order --d
    Verify,
    /// Dimension bounds for N <= --N and d <= --d
    Bounds,
    /// Quantum memory with misdetected jump positions, swept over --q
    Memory,
    /// Grover dynamics with Gaussian decay-rate spread, swept over --delta-kappa
    GroverRates,
    /// Grover dynamics with delayed recovery, swept over --delay
    GroverDelay,
    /// Grover dynamics with detector dead time, swept over --dead-time
    GroverDeadtime,
    /// Trajectory ensemble against the master equation for the memory
    TrajectoryCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Construct => "construct",
            Command::Verify => "verify",
            Command::Bounds => "bounds",
            Command::Memory => "memory",
            Command::GroverRates => "grover-rates",
            Command::GroverDelay => "grover-delay",
            Command::GroverDeadtime => "grover-deadtime",
            Command::TrajectoryCheck => "trajectory-check",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Comma-separated numbers on the command line, a number or an array in the config file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumList(pub Vec<f64>);

impl FromStr for NumList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|part| {
                part.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("'{}' is not a number: {e}", part.trim()))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(NumList)
    }
}

impl<'de> Deserialize<'de> for NumList {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(f64),
            Many(Vec<f64>),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::One(x) => Ok(NumList(vec![x])),
            Raw::Many(v) => Ok(NumList(v)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Options shared by every command; the same keys are accepted in the config file.
#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Flags {
    /// Flat TOML file with the same keys as the long flags; flags take precedence
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// pairing(N) | pairing(N,phi) | builtin-833 | pairing-4 | ... | path to a SEED or code JSON file
    #[arg(long, global = true)]
    pub code: Option<String>,
    /// Correction order (verify) or largest order (bounds)
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Misdetection parameter(s)
    #[arg(long, global = true)]
    pub q: Option<NumList>,
    /// Decay-rate spread(s), in units of Omega
    #[arg(long = "delta-kappa", global = true)]
    pub delta_kappa: Option<NumList>,
    /// Decay rate (mean rate for the Grover runs)
    #[arg(long, global = true)]
    pub kappa: Option<NumList>,
    /// Recovery delay(s), in units of 1/Omega
    #[arg(long, global = true)]
    pub delay: Option<NumList>,
    /// Detector dead time(s), in units of 1/Omega
    #[arg(long = "dead-time", global = true)]
    pub dead_time: Option<NumList>,
    /// Trajectories per sweep point [default: 20000]
    #[arg(long = "n-traj", global = true)]
    pub n_traj: Option<usize>,
    /// Rate vectors sampled per point (grover-rates)
    #[arg(long = "n-samples", global = true)]
    pub n_samples: Option<usize>,
    /// Master seed [default: $JUMPCODE_SEED, else 1]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Final time (memory, trajectory-check) [default: pi/(2 kappa)]
    #[arg(long = "t-final", global = true)]
    pub t_final: Option<f64>,
    /// Relative phase of the pairing code words
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub phi: Option<f64>,
    /// Output file [default: stdout]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads [default: hardware parallelism]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Largest qubit count (bounds)
    #[arg(long = "N", global = true)]
    #[serde(rename = "N")]
    pub n_max: Option<usize>,
    /// Compare against bare basis states without recovery (grover-rates)
    #[arg(long, global = true)]
    #[serde(default)]
    pub unencoded: bool,
    /// Record measured wall time instead of 0 (breaks byte-reproducibility)
    #[arg(long = "wall-time", global = true)]
    #[serde(default)]
    pub wall_time: bool,
}

impl Flags {
    pub fn from_file(path: &PathBuf) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config file {}: {e}", path.display())))
    }

    /// Values present here win over `file`.
    pub fn over(self, file: Flags) -> Flags {
        Flags {
            config: self.config,
            code: self.code.or(file.code),
            d: self.d.or(file.d),
            q: self.q.or(file.q),
            delta_kappa: self.delta_kappa.or(file.delta_kappa),
            kappa: self.kappa.or(file.kappa),
            delay: self.delay.or(file.delay),
            dead_time: self.dead_time.or(file.dead_time),
            n_traj: self.n_traj.or(file.n_traj),
            n_samples: self.n_samples.or(file.n_samples),
            seed: self.seed.or(file.seed),
            t_final: self.t_final.or(file.t_final),
            phi: self.phi.or(file.phi),
            out: self.out.or(file.out),
            format: self.format.or(file.format),
            threads: self.threads.or(file.threads),
            n_max: self.n_max.or(file.n_max),
            unencoded: self.unencoded || file.unencoded,
            wall_time: self.wall_time || file.wall_time,
        }
    }
}

/// Fully resolved run; everything except `threads` and `out` enters the config hash.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub code: Option<String>,
    pub phi: Option<f64>,
    pub d: Option<usize>,
    #[serde(rename = "N")]
    pub n_max: Option<usize>,
    pub q: Vec<f64>,
    pub delta_kappa: Vec<f64>,
    pub kappa: Vec<f64>,
    pub delay: Vec<f64>,
    pub dead_time: Vec<f64>,
    pub n_traj: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub t_final: Option<f64>,
    pub encoded: bool,
    pub format: Format,
    pub wall_time: bool,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

const DEFAULT_SEED: u64 = 1;
const DEFAULT_N_TRAJ: usize = 20_000;

fn grid(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| ((start + step * i as f64) * 1e9).round() / 1e9)
        .collect()
}

impl RunConfig {
    pub fn resolve(command: Command, flags: Flags) -> Result<Self, CliError> {
        use Command::*;
        let allowed: &[&str] = match command {
            Construct => &["code", "phi"],
            Verify => &["code", "phi", "d", "kappa"],
            Bounds => &["N", "d"],
            Memory => &[
                "code",
                "phi",
                "q",
                "kappa",
                "n-traj",
                "seed",
                "t-final",
                "wall-time",
            ],
            GroverRates => &[
                "code",
                "phi",
                "delta-kappa",
                "kappa",
                "n-samples",
                "seed",
                "unencoded",
                "wall-time",
            ],
            GroverDelay => &[
                "code",
                "phi",
                "delay",
                "kappa",
                "n-traj",
                "seed",
                "wall-time",
            ],
            GroverDeadtime => &[
                "code",
                "phi",
                "dead-time",
                "kappa",
                "n-traj",
                "seed",
                "wall-time",
            ],
            TrajectoryCheck => &[
                "code",
                "phi",
                "q",
                "kappa",
                "n-traj",
                "seed",
                "t-final",
                "wall-time",
            ],
        };
        let given = [
            ("code", flags.code.is_some()),
            ("phi", flags.phi.is_some()),
            ("d", flags.d.is_some()),
            ("N", flags.n_max.is_some()),
            ("q", flags.q.is_some()),
            ("delta-kappa", flags.delta_kappa.is_some()),
            ("kappa", flags.kappa.is_some()),
            ("delay", flags.delay.is_some()),
            ("dead-time", flags.dead_time.is_some()),
            ("n-traj", flags.n_traj.is_some()),
            ("n-samples", flags.n_samples.is_some()),
            ("seed", flags.seed.is_some()),
            ("t-final", flags.t_final.is_some()),
            ("unencoded", flags.unencoded),
            ("wall-time", flags.wall_time),
        ];
        if let Some((name, _)) = given
            .iter()
            .find(|(name, set)| *set && !allowed.contains(name))
        {
            return Err(CliError::Config(format!(
                "--{name} is not used by {}",
                command.name()
            )));
        }

        let env_seed = match std::env::var("JUMPCODE_SEED") {
            Ok(s) => Some(
                s.trim()
                    .parse::<u64>()
                    .map_err(|e| CliError::Config(format!("JUMPCODE_SEED='{s}': {e}")))?,
            ),
            Err(_) => None,
        };
        let list = |v: Option<NumList>, default: Vec<f64>| v.map(|l| l.0).unwrap_or(default);
        let default_code = match command {
            Bounds => None,
            GroverRates | GroverDelay | GroverDeadtime => Some("pairing(6)".to_string()),
            _ => Some("pairing(4)".to_string()),
        };
        let default_kappa = match command {
            GroverDelay | GroverDeadtime => 0.5,
            _ => 1.0,
        };
        let cfg = RunConfig {
            command,
            code: flags.code.or(default_code),
            phi: flags.phi,
            d: match command {
                Bounds => Some(flags.d.unwrap_or(1)),
                _ => flags.d,
            },
            n_max: (command == Bounds).then(|| flags.n_max.unwrap_or(8)),
            q: list(
                flags.q,
                if command == Memory {
                    grid(0.0, 0.1, 6)
                } else {
                    vec![0.0]
                },
            ),
            delta_kappa: list(
                flags.delta_kappa,
                if command == GroverRates {
                    grid(0.1, 0.1, 10)
                } else {
                    vec![0.0]
                },
            ),
            kappa: list(flags.kappa, vec![default_kappa]),
            delay: list(
                flags.delay,
                if command == GroverDelay {
                    vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5]
                } else {
                    vec![0.0]
                },
            ),
            dead_time: list(
                flags.dead_time,
                if command == GroverDeadtime {
                    grid(0.0, 0.2, 6)
                } else {
                    vec![0.0]
                },
            ),
            n_traj: flags.n_traj.unwrap_or(DEFAULT_N_TRAJ),
            n_samples: flags.n_samples.unwrap_or(50),
            seed: flags.seed.or(env_seed).unwrap_or(DEFAULT_SEED),
            t_final: flags.t_final,
            encoded: !flags.unencoded,
            format: flags.format.unwrap_or_default(),
            wall_time: flags.wall_time,
            threads: flags.threads,
            out: flags.out,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let sweep = self.sweep_name();
        for (name, values) in [
            ("q", &self.q),
            ("delta-kappa", &self.delta_kappa),
            ("kappa", &self.kappa),
            ("delay", &self.delay),
            ("dead-time", &self.dead_time),
        ] {
            if values.is_empty() {
                return Err(CliError::Config(format!(
                    "--{name} needs at least one value"
                )));
            }
            if Some(name) != sweep && values.len() != 1 {
                return Err(CliError::Config(format!(
                    "--{name} takes a single value for {}",
                    self.command.name()
                )));
            }
            if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(CliError::Config(format!(
                    "--{name} values must be finite and non-negative, got {v}"
                )));
            }
        }
        if self.n_traj == 0 || self.n_samples == 0 {
            return Err(CliError::Config(
                "--n-traj and --n-samples must be at least 1".into(),
            ));
        }
        if let Some(t) = self.t_final {
            if !(t.is_finite() && t >= 0.0) {
                return Err(CliError::Config(format!(
                    "--t-final must be finite and non-negative, got {t}"
                )));
            }
        }
        if let Some(p) = self.phi {
            if !p.is_finite() {
                return Err(CliError::Config("--phi must be finite".into()));
            }
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        Ok(())
    }

    /// Flag swept by the command, one output row per value.
    pub fn sweep_name(&self) -> Option<&'static str> {
        match self.command {
            Command::Memory => Some("q"),
            Command::GroverRates => Some("delta-kappa"),
            Command::GroverDelay => Some("delay"),
            Command::GroverDeadtime => Some("dead-time"),
            _ => None,
        }
    }

    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("jumpcode").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn lists_parse_from_commas() {
        assert_eq!(
            "0,0.1, 0.5".parse::<NumList>().unwrap().0,
            vec![0.0, 0.1, 0.5]
        );
        assert!("0,x".parse::<NumList>().is_err());
    }

    #[test]
    fn flags_override_file() {
        let file: Flags =
            toml::from_str("code = \"builtin-833\"\nq = [0.1, 0.2]\nn-traj = 10\nkappa = 2\n")
                .unwrap();
        let cli = parse(&["memory", "--n-traj", "5"]);
        let merged = cli.flags.over(file);
        let cfg = RunConfig::resolve(Command::Memory, merged).unwrap();
        assert_eq!(cfg.n_traj, 5);
        assert_eq!(cfg.q, vec![0.1, 0.2]);
        assert_eq!(cfg.kappa, vec![2.0]);
        assert_eq!(cfg.code.as_deref(), Some("builtin-833"));
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        assert!(toml::from_str::<Flags>("colour = 3\n").is_err());
    }

    #[test]
    fn irrelevant_flags_are_rejected() {
        let cli = parse(&["bounds", "--q", "0.1"]);
        assert!(RunConfig::resolve(cli.command, cli.flags).is_err());
        let cli = parse(&["grover-delay", "--kappa", "0.1,0.2"]);
        assert!(RunConfig::resolve(cli.command, cli.flags).is_err());
    }

    #[test]
    fn hash_ignores_threads_and_output() {
        let a = parse(&["memory", "--threads", "1"]);
        let b = parse(&["memory", "--threads", "3", "--out", "x.csv"]);
        let c = parse(&["memory", "--seed", "9"]);
        let h = |cli: Cli| RunConfig::resolve(cli.command, cli.flags).unwrap().hash();
        assert_eq!(h(a), h(b));
        assert_ne!(h(parse(&["memory"])), h(c));
    }

    #[test]
    fn default_grids() {
        let cli = parse(&["grover-deadtime"]);
        let cfg = RunConfig::resolve(cli.command, cli.flags).unwrap();
        assert_eq!(cfg.dead_time, vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]);
        assert_eq!(cfg.kappa, vec![0.5]);
        assert_eq!(cfg.code.as_deref(), Some("pairing(6)"));
    }
}
