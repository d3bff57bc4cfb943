//! Flat `key = value` configuration with `#` comments; command-line flags
//! mirror the keys as `--key value` and override file values. Unknown keys
//! are hard errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use dqc3_core::budget::ProtocolParams;
use dqc3_core::threshold::{SearchSpace, ThresholdConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    ThresholdCurve,
    ThresholdPoint,
    Validate,
    BuildGraph,
    PpWalk,
}

impl Command {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "threshold-curve" => Some(Command::ThresholdCurve),
            "threshold-point" => Some(Command::ThresholdPoint),
            "validate" => Some(Command::Validate),
            "build-graph" => Some(Command::BuildGraph),
            "pp-walk" => Some(Command::PpWalk),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::ThresholdCurve => "threshold-curve",
            Command::ThresholdPoint => "threshold-point",
            Command::Validate => "validate",
            Command::BuildGraph => "build-graph",
            Command::PpWalk => "pp-walk",
        }
    }

    pub const ALL: [&'static str; 5] =
        ["threshold-curve", "threshold-point", "validate", "build-graph", "pp-walk"];
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    // protocol rates
    pub p_ent: f64,
    pub p_local: f64,
    pub p_mem: f64,
    pub f_herald: f64,
    pub split_z: f64,
    pub split_x: f64,
    pub split_y: f64,
    // protocol internals
    pub n_rounds: usize,
    pub m_target: usize,
    pub h_max: usize,
    pub sync_factor: f64,
    // local-error grid for threshold curves
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
    pub grid_log: bool,
    // optimizer bounds
    pub opt_n_rounds_max: usize,
    pub opt_m_max: usize,
    pub opt_h_max: usize,
    pub tol: f64,
    // sampling
    pub n_samples: usize,
    pub seed: u64,
    // lattice dimensions for build-graph
    pub lx: usize,
    pub ly: usize,
    pub lz: usize,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        RunConfig {
            command,
            p_ent: 0.1,
            p_local: 1e-3,
            p_mem: 0.0,
            f_herald: 0.9,
            split_z: 1.0 / 3.0,
            split_x: 1.0 / 3.0,
            split_y: 1.0 / 3.0,
            n_rounds: 2,
            m_target: 3,
            h_max: 12,
            sync_factor: 1.0,
            grid_min: 1e-4,
            grid_max: 5e-4,
            grid_points: 5,
            grid_log: true,
            opt_n_rounds_max: 4,
            opt_m_max: 7,
            opt_h_max: 25,
            tol: 1e-4,
            n_samples: 100_000,
            seed: 20260809,
            lx: 1,
            ly: 1,
            lz: 1,
            output: None,
        }
    }

    pub fn protocol_params(&self) -> ProtocolParams {
        ProtocolParams {
            p_ent: self.p_ent,
            ent_split: (self.split_z, self.split_x, self.split_y),
            p_local: self.p_local,
            p_mem: self.p_mem,
            f_herald: self.f_herald,
            n_rounds: self.n_rounds,
            m_target: self.m_target,
            h_max: self.h_max,
            sync_factor: self.sync_factor,
        }
    }

    pub fn threshold_config(&self) -> ThresholdConfig {
        ThresholdConfig {
            search: SearchSpace {
                n_rounds_max: self.opt_n_rounds_max,
                m_max: self.opt_m_max,
                h_max: self.opt_h_max,
            },
            ent_split: (self.split_z, self.split_x, self.split_y),
            sync_factor: self.sync_factor,
            schedule: dqc3_core::threshold::representative_schedule(),
            tol: self.tol,
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        if self.grid_log {
            dqc3_core::threshold::log_grid(self.grid_min, self.grid_max, self.grid_points)
        } else {
            let n = self.grid_points;
            (0..n)
                .map(|i| {
                    if n == 1 {
                        self.grid_min
                    } else {
                        self.grid_min
                            + (self.grid_max - self.grid_min) * i as f64 / (n - 1) as f64
                    }
                })
                .collect()
        }
    }

    /// Serializes every key back to config text; re-parsing reproduces the
    /// configuration exactly (floats use the shortest round-trip form).
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {} configuration\n", self.command.name()));
        let mut push = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        push("p_ent", format!("{:?}", self.p_ent));
        push("p_local", format!("{:?}", self.p_local));
        push("p_mem", format!("{:?}", self.p_mem));
        push("f_herald", format!("{:?}", self.f_herald));
        push("split_z", format!("{:?}", self.split_z));
        push("split_x", format!("{:?}", self.split_x));
        push("split_y", format!("{:?}", self.split_y));
        push("n_rounds", self.n_rounds.to_string());
        push("M", self.m_target.to_string());
        push("H", self.h_max.to_string());
        push("sync_factor", format!("{:?}", self.sync_factor));
        push("grid_min", format!("{:?}", self.grid_min));
        push("grid_max", format!("{:?}", self.grid_max));
        push("grid_points", self.grid_points.to_string());
        push("grid_scale", if self.grid_log { "log" } else { "linear" }.to_string());
        push("opt_n_rounds_max", self.opt_n_rounds_max.to_string());
        push("opt_m_max", self.opt_m_max.to_string());
        push("opt_h_max", self.opt_h_max.to_string());
        push("tol", format!("{:?}", self.tol));
        push("n_samples", self.n_samples.to_string());
        push("seed", self.seed.to_string());
        push("lx", self.lx.to_string());
        push("ly", self.ly.to_string());
        push("lz", self.lz.to_string());
        if let Some(p) = &self.output {
            push("output", p.display().to_string());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Parses `key = value` lines; `#` starts a comment, blank lines ignored.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(err(format!("line {}: expected 'key = value'", lineno + 1)));
        };
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Applies file pairs then flag pairs onto the defaults and validates every
/// precondition before any computation starts.
pub fn build_config(
    command: Command,
    file_pairs: &[(String, String)],
    flag_pairs: &[(String, String)],
) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::defaults(command);
    for (k, v) in file_pairs.iter().chain(flag_pairs) {
        apply_key(&mut cfg, k, v)?;
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn apply_key(cfg: &mut RunConfig, key: &str, value: &str) -> Result<(), ConfigError> {
    fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
        v.parse()
            .map_err(|_| err(format!("key '{key}': malformed number '{v}'")))
    }
    match key {
        "p_ent" => cfg.p_ent = num(key, value)?,
        "p_local" => cfg.p_local = num(key, value)?,
        "p_mem" => cfg.p_mem = num(key, value)?,
        "f_herald" => cfg.f_herald = num(key, value)?,
        "split_z" => cfg.split_z = num(key, value)?,
        "split_x" => cfg.split_x = num(key, value)?,
        "split_y" => cfg.split_y = num(key, value)?,
        "n_rounds" => cfg.n_rounds = num(key, value)?,
        "M" => cfg.m_target = num(key, value)?,
        "H" => cfg.h_max = num(key, value)?,
        "sync_factor" => cfg.sync_factor = num(key, value)?,
        "grid_min" => cfg.grid_min = num(key, value)?,
        "grid_max" => cfg.grid_max = num(key, value)?,
        "grid_points" => cfg.grid_points = num(key, value)?,
        "grid_scale" => {
            cfg.grid_log = match value {
                "log" => true,
                "linear" => false,
                other => return Err(err(format!("key 'grid_scale': expected log or linear, got '{other}'"))),
            }
        }
        "opt_n_rounds_max" => cfg.opt_n_rounds_max = num(key, value)?,
        "opt_m_max" => cfg.opt_m_max = num(key, value)?,
        "opt_h_max" => cfg.opt_h_max = num(key, value)?,
        "tol" => cfg.tol = num(key, value)?,
        "n_samples" => cfg.n_samples = num(key, value)?,
        "seed" => cfg.seed = num(key, value)?,
        "lx" => cfg.lx = num(key, value)?,
        "ly" => cfg.ly = num(key, value)?,
        "lz" => cfg.lz = num(key, value)?,
        "output" => cfg.output = Some(PathBuf::from(value)),
        other => return Err(err(format!("unknown key: '{other}'"))),
    }
    Ok(())
}

fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    let prob = |key: &str, v: f64, upper_open: bool| -> Result<(), ConfigError> {
        let ok = if upper_open { (0.0..1.0).contains(&v) } else { (0.0..=1.0).contains(&v) };
        if !ok {
            return Err(err(format!(
                "key '{key}': value {v} outside [0, 1{}",
                if upper_open { ")" } else { "]" }
            )));
        }
        Ok(())
    };
    prob("p_ent", cfg.p_ent, true)?;
    prob("p_local", cfg.p_local, false)?;
    prob("p_mem", cfg.p_mem, true)?;
    prob("f_herald", cfg.f_herald, true)?;
    let split = cfg.split_z + cfg.split_x + cfg.split_y;
    if cfg.split_z < 0.0 || cfg.split_x < 0.0 || cfg.split_y < 0.0 || (split - 1.0).abs() > 1e-9 {
        return Err(err("keys 'split_*': weights must be nonnegative and sum to 1"));
    }
    if cfg.m_target < 1 {
        return Err(err(format!(
            "key 'M': value {} violates the constraint M >= 1",
            cfg.m_target
        )));
    }
    if cfg.h_max < cfg.m_target {
        return Err(err(format!(
            "key 'H': value {} violates the constraint H >= M = {}",
            cfg.h_max, cfg.m_target
        )));
    }
    if cfg.opt_m_max < 1 || cfg.opt_h_max < cfg.opt_m_max {
        return Err(err("keys 'opt_m_max'/'opt_h_max': need 1 <= opt_m_max <= opt_h_max"));
    }
    if !(cfg.sync_factor > 0.0) {
        return Err(err("key 'sync_factor': must be positive"));
    }
    if !(cfg.tol > 0.0) {
        return Err(err("key 'tol': must be positive"));
    }
    if cfg.grid_points < 1 {
        return Err(err("key 'grid_points': must be at least 1"));
    }
    if !(cfg.grid_min > 0.0) || cfg.grid_max < cfg.grid_min {
        return Err(err("keys 'grid_min'/'grid_max': need 0 < grid_min <= grid_max"));
    }
    if cfg.grid_points > 1 && cfg.grid_max == cfg.grid_min {
        return Err(err("keys 'grid_min'/'grid_max': grid must be strictly increasing"));
    }
    if cfg.n_samples < 1 {
        return Err(err("key 'n_samples': must be at least 1"));
    }
    if cfg.lx < 1 || cfg.ly < 1 || cfg.lz < 1 {
        return Err(err("keys 'lx'/'ly'/'lz': dimensions must be at least 1"));
    }
    Ok(())
}

/// Splits command-line arguments into the command, optional config file and
/// `--key value` overrides.
pub fn parse_args(args: &[String]) -> Result<(Command, Option<PathBuf>, Vec<(String, String)>), ConfigError> {
    let Some(first) = args.first() else {
        return Err(err(format!("usage: dqc3 <command> [--config FILE] [--key value]...\ncommands: {}", Command::ALL.join(", "))));
    };
    let command = Command::parse(first)
        .ok_or_else(|| err(format!("unknown command '{first}'; expected one of: {}", Command::ALL.join(", "))))?;
    let mut config_path = None;
    let mut pairs = Vec::new();
    let mut it = args[1..].iter();
    while let Some(arg) = it.next() {
        let Some(key) = arg.strip_prefix("--") else {
            return Err(err(format!("expected '--key value', got '{arg}'")));
        };
        let Some(value) = it.next() else {
            return Err(err(format!("flag '--{key}' is missing a value")));
        };
        if key == "config" {
            config_path = Some(PathBuf::from(value));
        } else {
            pairs.push((key.to_string(), value.clone()));
        }
    }
    Ok((command, config_path, pairs))
}

/// Parses a BTreeMap view of pairs (test helper).
pub fn pairs_to_map(pairs: &[(String, String)]) -> BTreeMap<String, String> {
    pairs.iter().cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(k: &str, v: &str) -> (String, String) {
        (k.to_string(), v.to_string())
    }

    #[test]
    fn defaults_applied_on_empty_config() {
        let cfg = build_config(Command::PpWalk, &[], &[]).unwrap();
        assert_eq!(cfg.f_herald, 0.9);
        assert_eq!(cfg.p_mem, 0.0);
        assert!((cfg.split_z - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn scientific_notation_parsed() {
        let cfg = build_config(Command::PpWalk, &[], &[pair("p_local", "1e-3")]).unwrap();
        assert_eq!(cfg.p_local, 0.001);
    }

    #[test]
    fn m_zero_rejected_with_named_constraint() {
        let e = build_config(Command::PpWalk, &[], &[pair("M", "0")]).unwrap_err();
        assert!(e.0.contains("M >= 1"), "{}", e.0);
    }

    #[test]
    fn unknown_key_is_a_hard_error() {
        let e = build_config(Command::PpWalk, &[pair("p_locl", "0.1")], &[]).unwrap_err();
        assert!(e.0.contains("unknown key"), "{}", e.0);
        assert!(e.0.contains("p_locl"));
    }

    #[test]
    fn flags_override_file_values() {
        let cfg = build_config(
            Command::Validate,
            &[pair("seed", "1"), pair("n_samples", "10")],
            &[pair("seed", "2")],
        )
        .unwrap();
        assert_eq!(cfg.seed, 2);
        assert_eq!(cfg.n_samples, 10);
    }

    #[test]
    fn config_text_round_trips() {
        let mut cfg = RunConfig::defaults(Command::ThresholdCurve);
        cfg.p_local = 3.7e-4;
        cfg.seed = 99;
        cfg.grid_log = false;
        cfg.output = Some(PathBuf::from("out.csv"));
        let text = cfg.to_config_text();
        let pairs = parse_config_text(&text).unwrap();
        let back = build_config(Command::ThresholdCurve, &pairs, &[]).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let pairs = parse_config_text("# hello\n\np_ent = 0.05 # inline\n").unwrap();
        assert_eq!(pairs, vec![pair("p_ent", "0.05")]);
        assert!(parse_config_text("p_ent\n").is_err());
    }

    #[test]
    fn args_parser() {
        let args: Vec<String> = ["validate", "--seed", "7", "--config", "c.cfg"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let (cmd, path, pairs) = parse_args(&args).unwrap();
        assert_eq!(cmd, Command::Validate);
        assert_eq!(path.unwrap().display().to_string(), "c.cfg");
        assert_eq!(pairs, vec![pair("seed", "7")]);
        assert!(parse_args(&["nope".to_string()]).is_err());
    }
}
