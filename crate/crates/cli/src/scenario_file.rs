//! Flat key/value scenario files.
//!
//! One field per line, `key = value`, `#` starts a comment. Unset keys keep
//! the fig1 preset defaults, so a file only needs the fields it changes:
//!
//! ```text
//! # weak-target experiment
//! d = 10
//! nu = 10
//! mu_fill = 2
//! target_t = 15
//! alpha = 0.2
//! beta = 0.3
//! n_pairs = 100000
//! n_trials = 3
//! seed = 2024
//! detectors = amf,ec-amf,ftmf,ec-ftmf,2spade,ec-2spade,clairvoyant,clairvoyant-gauss
//! ```

use spade_core::{Detector, Scenario};

/// Parses scenario file text on top of the fig1 defaults.
pub fn parse_scenario(text: &str) -> Result<Scenario, String> {
    let mut scenario = Scenario::fig1();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`, got `{raw}`", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| format!("line {}: invalid {what} `{value}`", lineno + 1);
        match key {
            "d" => scenario.dim = value.parse().map_err(|_| bad("dimension"))?,
            "nu" => scenario.nu = value.parse().map_err(|_| bad("nu"))?,
            "mu_fill" => scenario.mu_fill = value.parse().map_err(|_| bad("mu_fill"))?,
            "target_t" => scenario.target_t = value.parse().map_err(|_| bad("target_t"))?,
            "alpha" => scenario.alpha = value.parse().map_err(|_| bad("alpha"))?,
            "beta" => scenario.beta = value.parse().map_err(|_| bad("beta"))?,
            "n_pairs" => scenario.n_pairs = value.parse().map_err(|_| bad("n_pairs"))?,
            "n_trials" => scenario.n_trials = value.parse().map_err(|_| bad("n_trials"))?,
            "seed" => scenario.seed = value.parse().map_err(|_| bad("seed"))?,
            "detectors" => scenario.detectors = parse_detectors(value)?,
            other => return Err(format!("line {}: unknown key `{other}`", lineno + 1)),
        }
    }
    Ok(scenario)
}

/// Parses a comma-separated detector list.
pub fn parse_detectors(value: &str) -> Result<Vec<Detector>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Detector>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()
        .and_then(|list| {
            if list.is_empty() {
                Err("detector list is empty".to_string())
            } else {
                Ok(list)
            }
        })
}
