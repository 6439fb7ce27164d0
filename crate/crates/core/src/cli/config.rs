//! Flat `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment, unknown or repeated keys are
//! errors. Powers and noise are given in dBm and converted to mW here. See
//! `docs/config.md` for the full key list.

use std::fmt;
use std::path::PathBuf;

use crate::allocation::PowerLimits;
use crate::experiment::ScenarioConfig;
use crate::qos::TrafficSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, key: &str, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            key: Some(key.to_string()),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}, key `{k}`: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "key `{k}`: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Everything `d2dsim run` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub label: String,
    pub output_dir: PathBuf,
    /// Also sweep twice the CUs on half-width channels.
    pub slicing_comparison: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: ScenarioConfig::standard(),
            label: "run".to_string(),
            output_dir: PathBuf::from("d2dsim-out"),
            slicing_comparison: false,
        }
    }
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v
        .parse()
        .map_err(|_| ConfigError::at(line, key, format!("expected a number, got `{v}`")))?;
    if !x.is_finite() {
        return Err(ConfigError::at(line, key, "must be finite"));
    }
    Ok(x)
}

fn parse_usize(line: usize, key: &str, v: &str) -> Result<usize, ConfigError> {
    v.parse().map_err(|_| {
        ConfigError::at(
            line,
            key,
            format!("expected a non-negative integer, got `{v}`"),
        )
    })
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::at(
            line,
            key,
            format!("expected true/false, got `{v}`"),
        )),
    }
}

/// `0-10`, `1,2,5`, `0,2-4,8`: comma-separated counts and inclusive ranges.
fn parse_counts(line: usize, key: &str, v: &str) -> Result<Vec<usize>, ConfigError> {
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once('-') {
            let a = parse_usize(line, key, a.trim())?;
            let b = parse_usize(line, key, b.trim())?;
            if a > b {
                return Err(ConfigError::at(line, key, format!("empty range `{part}`")));
            }
            out.extend(a..=b);
        } else {
            out.push(parse_usize(line, key, part)?);
        }
    }
    Ok(out)
}

fn require(cond: bool, line: usize, key: &str, what: &str) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError::at(line, key, what))
    }
}

/// Parses configuration text. Omitted keys keep the defaults
/// of [`ScenarioConfig::standard`].
pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen = std::collections::HashSet::new();
    // dBm values are converted once the whole file is read
    let mut p_cu_dbm = 23.0;
    let mut p_d2d_dbm = 23.0;
    let mut noise_dbm = -114.0;
    let mut packet_bytes = 32.0;
    let mut bucket_packets = 60.0;
    let mut rate_pps = 60.0;
    let mut latency_ms = 20.0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError {
                line: Some(line),
                key: None,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let (key, v) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::at(line, key, "given more than once"));
        }
        let s = &mut cfg.scenario;
        let num = || parse_f64(line, key, v);
        match key {
            "label" => {
                require(
                    !v.is_empty() && !v.contains(','),
                    line,
                    key,
                    "must be non-empty without commas",
                )?;
                cfg.label = v.to_string();
            }
            "output_dir" => {
                require(!v.is_empty(), line, key, "must be non-empty")?;
                cfg.output_dir = PathBuf::from(v);
            }
            "slicing_comparison" => cfg.slicing_comparison = parse_bool(line, key, v)?,

            "cell_radius_m" => {
                s.layout.radius_m = num()?;
                require(s.layout.radius_m > 0.0, line, key, "must be > 0")?;
            }
            "carrier_frequency_hz" => {
                s.layout.carrier_frequency_hz = num()?;
                require(
                    s.layout.carrier_frequency_hz > 0.0,
                    line,
                    key,
                    "must be > 0",
                )?;
            }
            "bs_antenna_height_m" => {
                s.layout.bs_antenna_height_m = num()?;
                require(s.layout.bs_antenna_height_m > 0.0, line, key, "must be > 0")?;
            }
            "ue_antenna_height_m" => {
                s.layout.ue_antenna_height_m = num()?;
                require(s.layout.ue_antenna_height_m > 0.0, line, key, "must be > 0")?;
            }
            "bs_antenna_gain_db" => s.layout.bs_antenna_gain_db = num()?,
            "ue_antenna_gain_db" => s.layout.ue_antenna_gain_db = num()?,
            "bs_noise_figure_db" => s.layout.bs_noise_figure_db = num()?,
            "ue_noise_figure_db" => s.layout.ue_noise_figure_db = num()?,

            "cellular_pl_intercept_db" => s.pathloss.cellular_pl_intercept_db = num()?,
            "cellular_pl_coeff" => {
                s.pathloss.cellular_pl_exponent_coeff = num()?;
                require(
                    s.pathloss.cellular_pl_exponent_coeff > 0.0,
                    line,
                    key,
                    "must be > 0",
                )?;
            }
            "d2d_pl_intercept_db" => s.pathloss.d2d_pl_intercept_db = num()?,
            "d2d_pl_coeff" => {
                s.pathloss.d2d_pl_exponent_coeff = num()?;
                require(
                    s.pathloss.d2d_pl_exponent_coeff > 0.0,
                    line,
                    key,
                    "must be > 0",
                )?;
            }
            "cellular_shadowing_std_db" => {
                s.pathloss.cellular_shadowing_std_db = num()?;
                require(
                    s.pathloss.cellular_shadowing_std_db >= 0.0,
                    line,
                    key,
                    "must be >= 0",
                )?;
            }
            "d2d_shadowing_std_db" => {
                s.pathloss.d2d_shadowing_std_db = num()?;
                require(
                    s.pathloss.d2d_shadowing_std_db >= 0.0,
                    line,
                    key,
                    "must be >= 0",
                )?;
            }
            "fast_fading" => s.pathloss.fast_fading_enabled = parse_bool(line, key, v)?,

            "d2d_pair_min_m" => {
                s.d2d_pair_min_m = num()?;
                require(s.d2d_pair_min_m > 0.0, line, key, "must be > 0")?;
            }
            "d2d_pair_max_m" => {
                s.d2d_pair_max_m = num()?;
                require(s.d2d_pair_max_m > 0.0, line, key, "must be > 0")?;
            }

            "p_max_cu_dbm" => p_cu_dbm = num()?,
            "p_max_d2d_dbm" => p_d2d_dbm = num()?,
            "noise_dbm" => noise_dbm = num()?,

            "packet_size_bytes" => {
                packet_bytes = num()?;
                require(packet_bytes > 0.0, line, key, "must be > 0")?;
            }
            "token_bucket_size_packets" => {
                bucket_packets = num()?;
                require(bucket_packets >= 0.0, line, key, "must be >= 0")?;
            }
            "token_bucket_rate_pps" => {
                rate_pps = num()?;
                require(rate_pps >= 0.0, line, key, "must be >= 0")?;
            }
            "latency_ms" => {
                latency_ms = num()?;
                require(latency_ms > 0.0, line, key, "must be > 0")?;
            }
            "total_bandwidth_hz" => {
                s.total_bandwidth_hz = num()?;
                require(s.total_bandwidth_hz > 0.0, line, key, "must be > 0")?;
            }

            "n_cu" => {
                s.n_cu = parse_usize(line, key, v)?;
                require(s.n_cu >= 1, line, key, "must be >= 1")?;
            }
            "d2d_counts" => s.d2d_counts = parse_counts(line, key, v)?,
            "n_drops" => {
                s.n_drops = parse_usize(line, key, v)?;
                require(s.n_drops >= 1, line, key, "must be >= 1")?;
            }
            "base_seed" => {
                s.base_seed = v.parse().map_err(|_| {
                    ConfigError::at(
                        line,
                        key,
                        format!("expected an unsigned integer, got `{v}`"),
                    )
                })?
            }
            "allow_unprofitable_reuse" => s.allow_unprofitable_reuse = parse_bool(line, key, v)?,
            "full_reuse" => s.full_reuse = parse_bool(line, key, v)?,

            _ => return Err(ConfigError::at(line, key, "unknown key")),
        }
    }

    cfg.scenario.limits = PowerLimits::from_dbm(p_cu_dbm, p_d2d_dbm, noise_dbm);
    cfg.scenario.traffic =
        TrafficSpec::from_packets(bucket_packets, rate_pps, packet_bytes, latency_ms / 1000.0);
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default() {
        let cfg = parse("# nothing here\n\n").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn reads_values_and_comments() {
        let cfg = parse(
            "label = demo   # trailing comment\n\
             n_cu = 20\n\
             d2d_counts = 0, 2-4, 9\n\
             noise_dbm = -100\n\
             latency_ms = 10\n\
             fast_fading = on\n",
        )
        .unwrap();
        assert_eq!(cfg.label, "demo");
        assert_eq!(cfg.scenario.n_cu, 20);
        assert_eq!(cfg.scenario.d2d_counts, vec![0, 2, 3, 4, 9]);
        assert!((cfg.scenario.limits.noise_mw - 1e-10).abs() < 1e-22);
        assert_eq!(cfg.scenario.traffic.tau_s, 0.01);
        assert!(cfg.scenario.pathloss.fast_fading_enabled);
    }

    #[test]
    fn errors_name_the_key() {
        let e = parse("n_cu = 10\nbogus_key = 3\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert_eq!(e.key.as_deref(), Some("bogus_key"));
        let e = parse("n_drops = many\n").unwrap_err();
        assert_eq!(e.key.as_deref(), Some("n_drops"));
        assert!(e.to_string().contains("n_drops"));
        let e = parse("n_cu = 3\nn_cu = 4\n").unwrap_err();
        assert!(e.message.contains("more than once"));
        let e = parse("cell_radius_m = -5\n").unwrap_err();
        assert_eq!(e.key.as_deref(), Some("cell_radius_m"));
        let e = parse("d2d_counts = 5-2\n").unwrap_err();
        assert_eq!(e.key.as_deref(), Some("d2d_counts"));
        assert!(parse("just words\n").is_err());
    }
}
