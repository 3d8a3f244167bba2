//! Simulation parameters and the flat `key = value` configuration format.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Information threshold shared by every trader.
pub const INFO_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Lattice side; the market has `side * side` traders.
    pub side: usize,
    pub fraction_fundamentalists: f64,
    pub p1_0: f64,
    pub p2_0: f64,
    /// Fraction of information passed on by a toppling trader.
    pub alpha: f64,
    pub sigma_1f: f64,
    pub sigma_2f: f64,
    /// Cadence (in steps) of the fundamental-value random walk.
    pub t_f: u64,
    /// Half-width of the fundamentalist offset range.
    pub theta: f64,
    pub phi: f64,
    /// Largest chartist averaging window.
    pub t_max: u32,
    pub kappa: f64,
    /// Half-width of the expectation noise.
    pub sigma: f64,
    /// Status sensitivity threshold.
    pub tau: f64,
    pub m0: f64,
    pub q1_0: u64,
    pub q2_0: u64,
    /// Cross-asset coupling of prices to the other book's imbalance.
    pub delta: f64,
    /// Width multiplier of the ask price range.
    pub beta_ask: f64,
    pub rewiring_prob: f64,
    pub transient_steps: usize,
    pub record_steps: usize,
    pub seed: u64,
    pub price_floor: f64,
    /// Maximum topplings allowed in a single avalanche.
    pub avalanche_cap: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            side: 30,
            fraction_fundamentalists: 0.25,
            p1_0: 500.0,
            p2_0: 500.0,
            alpha: 0.95,
            sigma_1f: 1.0,
            sigma_2f: 1.0,
            t_f: 10,
            theta: 30.0,
            phi: 0.5,
            t_max: 100,
            kappa: 2.0,
            sigma: 30.0,
            tau: 15.0,
            m0: 40_000.0,
            q1_0: 200,
            q2_0: 200,
            delta: 0.0,
            beta_ask: 3.0,
            rewiring_prob: 0.1,
            transient_steps: 5000,
            record_steps: 10_000,
            seed: 1,
            price_floor: 1.0,
            avalanche_cap: 1_000_000,
        }
    }
}

/// Every recognised key, in serialization order.
pub const KEYS: &[&str] = &[
    "side",
    "fraction_fundamentalists",
    "p1_0",
    "p2_0",
    "alpha",
    "sigma_1f",
    "sigma_2f",
    "t_f",
    "theta",
    "phi",
    "t_max",
    "kappa",
    "sigma",
    "tau",
    "m0",
    "q1_0",
    "q2_0",
    "delta",
    "beta_ask",
    "rewiring_prob",
    "transient_steps",
    "record_steps",
    "seed",
    "price_floor",
    "avalanche_cap",
];

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.trim().parse::<T>().map_err(|_| {
        Error::config(
            key,
            format!("cannot parse `{raw}` as {}", std::any::type_name::<T>()),
        )
    })
}

impl SimConfig {
    pub fn n_agents(&self) -> usize {
        self.side * self.side
    }

    pub fn n_fundamentalists(&self) -> usize {
        (self.fraction_fundamentalists * self.n_agents() as f64).floor() as usize
    }

    /// Sets one field from its textual form. Does not validate ranges.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        match key {
            "side" => self.side = parse_value(key, raw)?,
            "fraction_fundamentalists" => self.fraction_fundamentalists = parse_value(key, raw)?,
            "p1_0" => self.p1_0 = parse_value(key, raw)?,
            "p2_0" => self.p2_0 = parse_value(key, raw)?,
            "alpha" => self.alpha = parse_value(key, raw)?,
            "sigma_1f" => self.sigma_1f = parse_value(key, raw)?,
            "sigma_2f" => self.sigma_2f = parse_value(key, raw)?,
            "t_f" => self.t_f = parse_value(key, raw)?,
            "theta" => self.theta = parse_value(key, raw)?,
            "phi" => self.phi = parse_value(key, raw)?,
            "t_max" => self.t_max = parse_value(key, raw)?,
            "kappa" => self.kappa = parse_value(key, raw)?,
            "sigma" => self.sigma = parse_value(key, raw)?,
            "tau" => self.tau = parse_value(key, raw)?,
            "m0" => self.m0 = parse_value(key, raw)?,
            "q1_0" => self.q1_0 = parse_value(key, raw)?,
            "q2_0" => self.q2_0 = parse_value(key, raw)?,
            "delta" => self.delta = parse_value(key, raw)?,
            "beta_ask" => self.beta_ask = parse_value(key, raw)?,
            "rewiring_prob" => self.rewiring_prob = parse_value(key, raw)?,
            "transient_steps" => self.transient_steps = parse_value(key, raw)?,
            "record_steps" => self.record_steps = parse_value(key, raw)?,
            "seed" => self.seed = parse_value(key, raw)?,
            "price_floor" => self.price_floor = parse_value(key, raw)?,
            "avalanche_cap" => self.avalanche_cap = parse_value(key, raw)?,
            other => return Err(Error::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Textual value of a field, in the form accepted by [`SimConfig::set`].
    pub fn get(&self, key: &str) -> Option<String> {
        let v = match key {
            "side" => self.side.to_string(),
            "fraction_fundamentalists" => self.fraction_fundamentalists.to_string(),
            "p1_0" => self.p1_0.to_string(),
            "p2_0" => self.p2_0.to_string(),
            "alpha" => self.alpha.to_string(),
            "sigma_1f" => self.sigma_1f.to_string(),
            "sigma_2f" => self.sigma_2f.to_string(),
            "t_f" => self.t_f.to_string(),
            "theta" => self.theta.to_string(),
            "phi" => self.phi.to_string(),
            "t_max" => self.t_max.to_string(),
            "kappa" => self.kappa.to_string(),
            "sigma" => self.sigma.to_string(),
            "tau" => self.tau.to_string(),
            "m0" => self.m0.to_string(),
            "q1_0" => self.q1_0.to_string(),
            "q2_0" => self.q2_0.to_string(),
            "delta" => self.delta.to_string(),
            "beta_ask" => self.beta_ask.to_string(),
            "rewiring_prob" => self.rewiring_prob.to_string(),
            "transient_steps" => self.transient_steps.to_string(),
            "record_steps" => self.record_steps.to_string(),
            "seed" => self.seed.to_string(),
            "price_floor" => self.price_floor.to_string(),
            "avalanche_cap" => self.avalanche_cap.to_string(),
            _ => return None,
        };
        Some(v)
    }

    /// Checks every range constraint, reporting all offending keys at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<(&str, &str)> = Vec::new();
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        let unit = |x: f64| (0.0..=1.0).contains(&x);

        if self.side < 2 {
            bad.push(("side", "must be at least 2"));
        }
        if !unit(self.fraction_fundamentalists) {
            bad.push(("fraction_fundamentalists", "must lie in [0, 1]"));
        }
        if !finite_pos(self.p1_0) {
            bad.push(("p1_0", "must be positive"));
        }
        if !finite_pos(self.p2_0) {
            bad.push(("p2_0", "must be positive"));
        }
        if !unit(self.alpha) {
            bad.push(("alpha", "must lie in [0, 1]"));
        }
        if !finite_nonneg(self.sigma_1f) {
            bad.push(("sigma_1f", "must be non-negative"));
        }
        if !finite_nonneg(self.sigma_2f) {
            bad.push(("sigma_2f", "must be non-negative"));
        }
        if self.t_f == 0 {
            bad.push(("t_f", "must be at least 1"));
        }
        if !finite_nonneg(self.theta) {
            bad.push(("theta", "must be non-negative"));
        }
        if !finite_nonneg(self.phi) {
            bad.push(("phi", "must be non-negative"));
        }
        if self.t_max < 2 {
            bad.push(("t_max", "must be at least 2"));
        }
        if !self.kappa.is_finite() {
            bad.push(("kappa", "must be finite"));
        }
        if !finite_nonneg(self.sigma) {
            bad.push(("sigma", "must be non-negative"));
        }
        if !finite_nonneg(self.tau) {
            bad.push(("tau", "must be non-negative"));
        }
        if !finite_nonneg(self.m0) {
            bad.push(("m0", "must be non-negative"));
        }
        if !finite_nonneg(self.delta) {
            bad.push(("delta", "must be non-negative"));
        }
        if !finite_nonneg(self.beta_ask) {
            bad.push(("beta_ask", "must be non-negative"));
        }
        if !unit(self.rewiring_prob) {
            bad.push(("rewiring_prob", "must lie in [0, 1]"));
        }
        if !finite_pos(self.price_floor) {
            bad.push(("price_floor", "must be positive"));
        }
        if self.avalanche_cap == 0 {
            bad.push(("avalanche_cap", "must be at least 1"));
        }

        match bad.as_slice() {
            [] => Ok(()),
            [(key, reason)] => Err(Error::config(*key, *reason)),
            many => Err(Error::config(
                many.iter().map(|(k, _)| *k).collect::<Vec<_>>().join(","),
                many.iter()
                    .map(|(k, r)| format!("{k} {r}"))
                    .collect::<Vec<_>>()
                    .join("; "),
            )),
        }
    }

    /// Parses `key = value` lines on top of the defaults. `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = SimConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Input(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text)
    }

    /// Serializes every field, defaults included.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let value = self.get(key).expect("every listed key is gettable");
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_reference_setup() {
        let cfg = SimConfig::parse_str("").unwrap();
        assert_eq!(cfg.n_agents(), 900);
        assert_eq!(cfg.n_fundamentalists(), 225);
        assert_eq!(cfg.alpha, 0.95);
        assert_eq!(cfg.tau, 15.0);
        assert_eq!(cfg.delta, 0.0);
        assert_eq!((cfg.p1_0, cfg.p2_0), (500.0, 500.0));
        assert_eq!((cfg.sigma_1f, cfg.sigma_2f, cfg.t_f), (1.0, 1.0, 10));
        assert_eq!((cfg.theta, cfg.phi, cfg.t_max, cfg.kappa), (30.0, 0.5, 100, 2.0));
        assert_eq!((cfg.sigma, cfg.m0, cfg.q1_0, cfg.q2_0), (30.0, 40_000.0, 200, 200));
        cfg.validate().unwrap();
    }

    #[test]
    fn overrides_and_comments() {
        let cfg = SimConfig::parse_str("# correlated\ndelta = 0.03  # coupled\n\nseed=9\n").unwrap();
        assert_eq!(cfg.delta, 0.03);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = SimConfig::parse_str("gamma = 1").unwrap_err();
        assert!(matches!(err, Error::UnknownKey(ref k) if k == "gamma"));
    }

    #[test]
    fn type_mismatch_names_key() {
        let err = SimConfig::parse_str("side = thirty").unwrap_err();
        assert_eq!(err.key(), Some("side"));
    }

    #[test]
    fn zero_side_names_key() {
        let cfg = SimConfig::parse_str("side = 0").unwrap();
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.key(), Some("side"));
    }

    #[test]
    fn multiple_offenders_listed() {
        let cfg = SimConfig::parse_str("side = 1\nalpha = 2").unwrap();
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.key(), Some("side,alpha"));
    }

    #[test]
    fn text_round_trip() {
        let cfg = SimConfig {
            delta: 0.03,
            beta_ask: 1.7,
            seed: 123_456_789,
            ..SimConfig::default()
        };
        let back = SimConfig::parse_str(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }
}
