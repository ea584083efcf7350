//! Scenario config files: flat key-value text split into one section per
//! scenario. Keys mirror the programmatic scenario fields; unknown keys
//! are rejected so typos surface instead of silently using defaults.
//!
//! ```text
//! [office-floor]
//! mu = 0.01
//! ell = 10
//! nu = 0.0077
//! realizations = 500
//! deltas = 1,2,3,4
//! ```

use anyhow::{anyhow, bail, Context, Result};
use ipred_core::correlation::SystemParams;
use ipred_core::eval::{PredictorKind, ScenarioSpec};
use ipred_core::sim::{LengthMode, PlacementMode, ScenarioConfig};

/// Parses a whole config file into evaluation-ready scenario specs, in
/// file order.
pub fn parse_config(text: &str) -> Result<Vec<ScenarioSpec>> {
    let mut specs = Vec::new();
    let mut current: Option<(String, Vec<(String, String)>)> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| anyhow!("line {}: unterminated section header", lineno + 1))?
                .trim();
            if name.is_empty() {
                bail!("line {}: empty section name", lineno + 1);
            }
            if let Some((n, kv)) = current.take() {
                specs.push(build_spec(&n, &kv)?);
            }
            current = Some((name.to_string(), Vec::new()));
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key = value, got '{line}'", lineno + 1))?;
        let (name, kv) = current
            .as_mut()
            .ok_or_else(|| anyhow!("line {}: key outside any [scenario] section", lineno + 1))?;
        let key = key.trim().to_string();
        if kv.iter().any(|(k, _)| *k == key) {
            bail!("line {}: duplicate key '{key}' in [{name}]", lineno + 1);
        }
        kv.push((key, value.trim().to_string()));
    }
    if let Some((n, kv)) = current.take() {
        specs.push(build_spec(&n, &kv)?);
    }
    if specs.is_empty() {
        bail!("config defines no scenarios");
    }
    Ok(specs)
}

fn build_spec(name: &str, kv: &[(String, String)]) -> Result<ScenarioSpec> {
    let ctx = |key: &str| format!("[{name}] key '{key}'");
    let get = |key: &str| kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let f64_of = |key: &str, default: f64| -> Result<f64> {
        get(key).map_or(Ok(default), |v| v.parse().with_context(|| ctx(key)))
    };
    let mu = f64_of("mu", 0.01)?;
    let ell: u32 = get("ell").map_or(Ok(10), |v| v.parse()).with_context(|| ctx("ell"))?;
    let nu = get("nu")
        .ok_or_else(|| anyhow!("[{name}] is missing the required key 'nu'"))?
        .parse()
        .with_context(|| ctx("nu"))?;
    let alpha = f64_of("alpha", 3.0)?;
    let kappa = f64_of("kappa", 1.0)?;
    let lambda = f64_of("lambda", 0.01)?;
    let params = SystemParams::new(mu, ell, nu, alpha, kappa, lambda)
        .map_err(|e| anyhow!("[{name}]: {e}"))?;

    let mut config = ScenarioConfig::new(params);
    config.area = f64_of("area", config.area)?;
    if let Some(v) = get("horizon") {
        config.horizon = v.parse().with_context(|| ctx("horizon"))?;
    }
    if let Some(v) = get("seed") {
        config.seed = v.parse().with_context(|| ctx("seed"))?;
    }
    if let Some(v) = get("realizations") {
        config.realizations = v.parse().with_context(|| ctx("realizations"))?;
    }
    if let Some(v) = get("mobile") {
        config.mobile = v.parse().with_context(|| ctx("mobile"))?;
    }
    if let Some(v) = get("lengths") {
        config.length_mode = match v {
            "fixed" => LengthMode::Fixed,
            "poisson" => LengthMode::Poisson,
            other => bail!("[{name}] lengths must be fixed or poisson, got '{other}'"),
        };
    }
    if let Some(v) = get("placement") {
        config.placement = parse_placement(v).with_context(|| ctx("placement"))?;
    }
    let deltas = match get("deltas") {
        Some(v) => parse_deltas(v).with_context(|| ctx("deltas"))?,
        None => (1..=8).collect(),
    };
    let kinds = match get("kinds") {
        Some(v) => parse_kinds(v).with_context(|| ctx("kinds"))?,
        None => PredictorKind::ALL.to_vec(),
    };

    const KNOWN: [&str; 15] = [
        "mu", "ell", "nu", "alpha", "kappa", "lambda", "area", "horizon", "seed",
        "realizations", "mobile", "lengths", "placement", "deltas", "kinds",
    ];
    for (k, _) in kv {
        if !KNOWN.contains(&k.as_str()) {
            bail!("[{name}] has unknown key '{k}'");
        }
    }
    config.validate().map_err(|e| anyhow!("[{name}]: {e}"))?;
    Ok(ScenarioSpec { name: name.to_string(), config, kinds, deltas })
}

fn parse_placement(v: &str) -> Result<PlacementMode> {
    if v == "ppp" {
        return Ok(PlacementMode::Ppp);
    }
    // thinned:<radius>:<min_neighbors>
    if let Some(rest) = v.strip_prefix("thinned:") {
        let (r, k) = rest
            .split_once(':')
            .ok_or_else(|| anyhow!("expected thinned:<radius>:<min_neighbors>"))?;
        return Ok(PlacementMode::Thinned {
            radius: r.parse().context("thinned radius")?,
            min_neighbors: k.parse().context("thinned min_neighbors")?,
        });
    }
    bail!("placement must be ppp or thinned:<radius>:<min_neighbors>, got '{v}'")
}

/// Comma-separated strictly positive horizons, e.g. "1,2,4,8".
pub fn parse_deltas(v: &str) -> Result<Vec<usize>> {
    let out: Vec<usize> = v
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|e| anyhow!("horizon '{s}': {e}")))
        .collect::<Result<_>>()?;
    if out.is_empty() || out.contains(&0) {
        bail!("horizons must be a nonempty list of positive integers");
    }
    Ok(out)
}

pub fn parse_kinds(v: &str) -> Result<Vec<PredictorKind>> {
    v.split(',')
        .map(|s| {
            let s = s.trim();
            PredictorKind::ALL
                .into_iter()
                .find(|k| k.label() == s)
                .ok_or_else(|| anyhow!("unknown predictor '{s}'"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "\
# two desk scenarios
[first]
mu = 0.02
ell = 5
nu = 0.01
realizations = 7   # inline comment
deltas = 1,3
kinds = last_value,mean_value

[second]
nu = 0.0077
placement = thinned:40.0:20
lengths = poisson
mobile = false
";

    #[test]
    fn parses_sections_in_order() {
        let specs = parse_config(GOOD).unwrap();
        assert_eq!(specs.len(), 2);
        assert_eq!(specs[0].name, "first");
        assert_eq!(specs[0].config.params.mu, 0.02);
        assert_eq!(specs[0].config.realizations, 7);
        assert_eq!(specs[0].deltas, vec![1, 3]);
        assert_eq!(specs[0].kinds.len(), 2);
        assert_eq!(specs[1].name, "second");
        assert!(matches!(
            specs[1].config.placement,
            PlacementMode::Thinned { min_neighbors: 20, .. }
        ));
        assert!(matches!(specs[1].config.length_mode, LengthMode::Poisson));
        assert!(!specs[1].config.mobile);
    }

    #[test]
    fn defaults_fill_optional_keys() {
        let specs = parse_config("[x]\nnu = 0.01\n").unwrap();
        let s = &specs[0];
        assert_eq!(s.config.params.mu, 0.01);
        assert_eq!(s.config.params.ell, 10);
        assert_eq!(s.config.horizon, 1_000);
        assert_eq!(s.deltas, (1..=8).collect::<Vec<_>>());
        assert_eq!(s.kinds.len(), 4);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_config("nu = 0.01\n").is_err());
        assert!(parse_config("[x]\nnu\n").is_err());
        assert!(parse_config("[x\nnu = 0.01\n").is_err());
        assert!(parse_config("").is_err());
        assert!(parse_config("[x]\n").is_err());
        assert!(parse_config("[x]\nnu = 0.01\nnu = 0.02\n").is_err());
    }

    #[test]
    fn rejects_unknown_keys_and_values() {
        assert!(parse_config("[x]\nnu = 0.01\nspeed = 3\n").is_err());
        assert!(parse_config("[x]\nnu = 0.01\nplacement = grid\n").is_err());
        assert!(parse_config("[x]\nnu = 0.01\nkinds = oracle\n").is_err());
        assert!(parse_config("[x]\nnu = 0.01\ndeltas = 0,1\n").is_err());
        assert!(parse_config("[x]\nnu = -1\n").is_err());
    }
}
