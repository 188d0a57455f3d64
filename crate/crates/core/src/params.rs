//! Model parameters, channel realizations and named rate reports.
//!
//! All powers and variances are linear; every rate is in bits (log base 2).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar parameters of the probing and return-channel model.
///
/// `rho` is the magnitude-carrying real part of the reciprocity coefficient
/// E{h_AB conj(h_BA)}; `rho_phase` (radians) rotates it. Only `|rho|` enters
/// the rate formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Alice's probe power.
    pub p_a: f64,
    /// Bob's probe power (two-way probing only).
    pub p_b: f64,
    /// Bob's receiver noise variance.
    pub sigma_b2: f64,
    /// Alice's receiver noise variance.
    pub sigma_a2: f64,
    /// Eve's noise variance on probes from Alice.
    pub sigma_ea2: f64,
    /// Eve's noise variance on probes from Bob.
    pub sigma_eb2: f64,
    /// Power of Bob's secret sequence.
    pub sigma_s2: f64,
    /// Alice's return-channel noise variance.
    pub eps_a: f64,
    /// Eve's return-channel noise variance.
    pub eps_e: f64,
    pub rho: f64,
    pub rho_phase: f64,
    /// Eve's antenna count.
    pub n_e: usize,
    /// Probe symbols sent by Alice.
    pub m_a: usize,
    /// Probe symbols sent by Bob.
    pub m_b: usize,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            p_a: 1.0,
            p_b: 1.0,
            sigma_b2: 1.0,
            sigma_a2: 1.0,
            sigma_ea2: 1.0,
            sigma_eb2: 1.0,
            sigma_s2: 1.0,
            eps_a: 1e-3,
            eps_e: 1e-3,
            rho: 0.5,
            rho_phase: 0.0,
            n_e: 2,
            m_a: 4,
            m_b: 0,
        }
    }
}

/// Config-file key names, in serialization order.
pub const PARAM_KEYS: [&str; 14] = [
    "p_A",
    "p_B",
    "sigma_B2",
    "sigma_A2",
    "sigma_EA2",
    "sigma_EB2",
    "sigma_s2",
    "eps_A",
    "eps_E",
    "rho",
    "rho_phase",
    "n_E",
    "m_A",
    "m_B",
];

impl SystemParams {
    /// Complex reciprocity coefficient.
    pub fn rho_complex(&self) -> Complex64 {
        Complex64::from_polar(self.rho.abs(), self.rho_phase + if self.rho < 0.0 { std::f64::consts::PI } else { 0.0 })
    }

    pub fn rho_abs2(&self) -> f64 {
        self.rho * self.rho
    }

    /// Reciprocity term -log2(1 - |rho|^2).
    pub fn alpha(&self) -> f64 {
        -(1.0 - self.rho_abs2()).log2()
    }

    /// Ratio of Bob's secret power to his receiver noise.
    pub fn secret_to_noise(&self) -> f64 {
        self.sigma_s2 / self.sigma_b2
    }

    /// Checks every invariant and reports the first one violated.
    pub fn validate(self) -> Result<Self> {
        self.check()?;
        Ok(self)
    }

    pub fn check(&self) -> Result<()> {
        let positive = [
            ("p_A", self.p_a),
            ("p_B", self.p_b),
            ("sigma_B2", self.sigma_b2),
            ("sigma_A2", self.sigma_a2),
            ("sigma_EA2", self.sigma_ea2),
            ("sigma_EB2", self.sigma_eb2),
            ("sigma_s2", self.sigma_s2),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParam(format!("{name} must be finite and > 0 (got {v})")));
            }
        }
        for (name, v) in [("eps_A", self.eps_a), ("eps_E", self.eps_e)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParam(format!("{name} must be finite and >= 0 (got {v})")));
            }
        }
        if !self.rho.is_finite() || !self.rho_phase.is_finite() {
            return Err(Error::InvalidParam("rho must be finite".into()));
        }
        if self.rho.abs() >= 1.0 {
            return Err(Error::InvalidParam("|rho| must be < 1".into()));
        }
        if self.n_e == 0 {
            return Err(Error::InvalidParam("n_E must be >= 1".into()));
        }
        Ok(())
    }

    /// Swap the roles of Alice and Bob.
    pub fn swapped(&self) -> Self {
        SystemParams {
            p_a: self.p_b,
            p_b: self.p_a,
            sigma_b2: self.sigma_a2,
            sigma_a2: self.sigma_b2,
            sigma_ea2: self.sigma_eb2,
            sigma_eb2: self.sigma_ea2,
            eps_a: self.eps_a,
            eps_e: self.eps_e,
            sigma_s2: self.sigma_s2,
            rho: self.rho,
            rho_phase: -self.rho_phase,
            n_e: self.n_e,
            m_a: self.m_b,
            m_b: self.m_a,
        }
    }

    /// Build from a key-value map. Every key in [`PARAM_KEYS`] except
    /// `rho_phase` is required; a missing key is reported by name.
    pub fn from_kv(kv: &KvConfig) -> Result<Self> {
        Ok(SystemParams {
            p_a: kv.require_f64("p_A")?,
            p_b: kv.require_f64("p_B")?,
            sigma_b2: kv.require_f64("sigma_B2")?,
            sigma_a2: kv.require_f64("sigma_A2")?,
            sigma_ea2: kv.require_f64("sigma_EA2")?,
            sigma_eb2: kv.require_f64("sigma_EB2")?,
            sigma_s2: kv.require_f64("sigma_s2")?,
            eps_a: kv.require_f64("eps_A")?,
            eps_e: kv.require_f64("eps_E")?,
            rho: kv.require_f64("rho")?,
            rho_phase: kv.get_f64("rho_phase")?.unwrap_or(0.0),
            n_e: kv.require_usize("n_E")?,
            m_a: kv.require_usize("m_A")?,
            m_b: kv.require_usize("m_B")?,
        })
    }

    pub fn to_kv(&self) -> KvConfig {
        let mut kv = KvConfig::default();
        for key in PARAM_KEYS {
            let value = self.get(key).expect("known key");
            kv.set(key, value);
        }
        kv
    }

    /// Read a field by config key. Integer fields are returned as f64.
    pub fn get(&self, key: &str) -> Option<String> {
        let s = match key {
            "p_A" => self.p_a.to_string(),
            "p_B" => self.p_b.to_string(),
            "sigma_B2" => self.sigma_b2.to_string(),
            "sigma_A2" => self.sigma_a2.to_string(),
            "sigma_EA2" => self.sigma_ea2.to_string(),
            "sigma_EB2" => self.sigma_eb2.to_string(),
            "sigma_s2" => self.sigma_s2.to_string(),
            "eps_A" => self.eps_a.to_string(),
            "eps_E" => self.eps_e.to_string(),
            "rho" => self.rho.to_string(),
            "rho_phase" => self.rho_phase.to_string(),
            "n_E" => self.n_e.to_string(),
            "m_A" => self.m_a.to_string(),
            "m_B" => self.m_b.to_string(),
            _ => return None,
        };
        Some(s)
    }

    /// Set a field by config key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let f = || parse_f64(key, value);
        let u = || parse_usize(key, value);
        match key {
            "p_A" => self.p_a = f()?,
            "p_B" => self.p_b = f()?,
            "sigma_B2" => self.sigma_b2 = f()?,
            "sigma_A2" => self.sigma_a2 = f()?,
            "sigma_EA2" => self.sigma_ea2 = f()?,
            "sigma_EB2" => self.sigma_eb2 = f()?,
            "sigma_s2" => self.sigma_s2 = f()?,
            "eps_A" => self.eps_a = f()?,
            "eps_E" => self.eps_e = f()?,
            "rho" => self.rho = f()?,
            "rho_phase" => self.rho_phase = f()?,
            "n_E" => self.n_e = u()?,
            "m_A" => self.m_a = u()?,
            "m_B" => self.m_b = u()?,
            _ => return Err(Error::Config(format!("unknown parameter `{key}`"))),
        }
        Ok(())
    }
}

/// One draw of the channel gains.
///
/// `h_ab`: Alice receiving from Bob; `h_ba`: Bob receiving from Alice;
/// `g_a`, `g_b`: Eve's gain vectors from Alice and Bob (length n_E).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub h_ab: Complex64,
    pub h_ba: Complex64,
    pub g_a: Vec<Complex64>,
    pub g_b: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn g_a_norm2(&self) -> f64 {
        self.g_a.iter().map(|g| g.norm_sqr()).sum()
    }

    pub fn g_b_norm2(&self) -> f64 {
        self.g_b.iter().map(|g| g.norm_sqr()).sum()
    }

    pub fn check_lengths(&self, params: &SystemParams) -> Result<()> {
        if self.g_a.len() != params.n_e || self.g_b.len() != params.n_e {
            return Err(Error::InvalidParam(format!(
                "Eve gain vectors must have length n_E = {} (got {} and {})",
                params.n_e,
                self.g_a.len(),
                self.g_b.len()
            )));
        }
        Ok(())
    }

    /// Instantaneous probe SNR at Bob, p_A |h_BA|^2 / sigma_B^2.
    pub fn snr_ba(&self, params: &SystemParams) -> f64 {
        params.p_a * self.h_ba.norm_sqr() / params.sigma_b2
    }

    /// Eve's matched-filter SNR on Alice's probes, p_A ||g_A||^2 / sigma_EA^2.
    pub fn snr_ea(&self, params: &SystemParams) -> f64 {
        params.p_a * self.g_a_norm2() / params.sigma_ea2
    }

    pub fn snr_ab(&self, params: &SystemParams) -> f64 {
        params.p_b * self.h_ab.norm_sqr() / params.sigma_a2
    }

    pub fn snr_eb(&self, params: &SystemParams) -> f64 {
        params.p_b * self.g_b_norm2() / params.sigma_eb2
    }

    /// Swap Alice and Bob.
    pub fn swapped(&self) -> Self {
        ChannelRealization {
            h_ab: self.h_ba,
            h_ba: self.h_ab,
            g_a: self.g_b.clone(),
            g_b: self.g_a.clone(),
        }
    }

    /// A deterministic realization with the given per-link strengths
    /// (|h_BA|^2, ||g_A||^2, |h_AB|^2, ||g_B||^2), with all of Eve's gain on
    /// her first antenna.
    pub fn with_strengths(n_e: usize, h_ba2: f64, g_a2: f64, h_ab2: f64, g_b2: f64) -> Self {
        let vec = |norm2: f64| {
            let mut v = vec![Complex64::new(0.0, 0.0); n_e];
            if let Some(first) = v.first_mut() {
                *first = Complex64::new(norm2.sqrt(), 0.0);
            }
            v
        };
        ChannelRealization {
            h_ab: Complex64::new(h_ab2.sqrt(), 0.0),
            h_ba: Complex64::new(h_ba2.sqrt(), 0.0),
            g_a: vec(g_a2),
            g_b: vec(g_b2),
        }
    }
}

/// Named closed-form values (bits) with the parameters that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub params: SystemParams,
    pub values: BTreeMap<String, f64>,
    /// Monte Carlo standard errors, keyed like `values`. Analytic entries
    /// have no standard error.
    pub std_errors: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl RateReport {
    pub fn new(params: SystemParams) -> Self {
        RateReport {
            params,
            values: BTreeMap::new(),
            std_errors: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn insert(&mut self, name: &str, value: f64) {
        self.values.insert(name.to_string(), value);
    }

    pub fn insert_estimate(&mut self, name: &str, e: crate::stats::Estimate) {
        self.values.insert(name.to_string(), e.mean);
        self.std_errors.insert(name.to_string(), e.std_error);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    /// Value by name; panics with the missing name. For tests and internal
    /// lookups of names this crate itself inserted.
    pub fn value(&self, name: &str) -> f64 {
        self.get(name).unwrap_or_else(|| panic!("report has no `{name}`"))
    }

    pub fn merge(&mut self, other: RateReport) {
        self.values.extend(other.values);
        self.std_errors.extend(other.std_errors);
        self.notes.extend(other.notes);
    }

    pub fn all_finite(&self) -> bool {
        self.values.values().all(|v| v.is_finite())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Comma-separated header matching [`RateReport::csv_row`].
    pub fn csv_header(&self) -> String {
        let mut cols: Vec<String> = self.values.keys().cloned().collect();
        cols.extend(self.std_errors.keys().map(|k| format!("{k}_se")));
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut cols: Vec<String> = self.values.values().map(|v| v.to_string()).collect();
        cols.extend(self.std_errors.values().map(|v| v.to_string()));
        cols.join(",")
    }
}

/// Flat `key = value` configuration with `#` comments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvConfig {
    entries: BTreeMap<String, String>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(KvConfig { entries })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(|v| parse_f64(key, v)).transpose()
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.get_f64(key)?
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    pub fn require_usize(&self, key: &str) -> Result<usize> {
        let v = self
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))?;
        parse_usize(key, v)
    }

    /// Serialize one `key = value` per line, sorted by key.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Merge `other` on top of `self` (other wins).
    pub fn overlay(&mut self, other: &KvConfig) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}` as a number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}` as a non-negative integer")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_are_valid() {
        let p = SystemParams::default();
        assert_eq!(p.clone().validate().unwrap(), p);
    }

    #[test]
    fn rho_at_one_is_rejected() {
        let p = SystemParams {
            rho: 1.0,
            ..Default::default()
        };
        assert_eq!(p.validate().unwrap_err().to_string(), "|rho| must be < 1");
        let p = SystemParams {
            rho: -1.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn zero_eve_antennas_is_rejected() {
        let p = SystemParams {
            n_e: 0,
            ..Default::default()
        };
        assert!(p.validate().unwrap_err().to_string().contains("n_E"));
    }

    #[test]
    fn return_noise_may_be_zero_but_not_negative() {
        let mut p = SystemParams {
            eps_a: 0.0,
            eps_e: 0.0,
            ..Default::default()
        };
        assert!(p.check().is_ok());
        p.eps_e = -1e-3;
        assert!(p.check().unwrap_err().to_string().contains("eps_E"));
        p.eps_e = 0.0;
        p.sigma_b2 = 0.0;
        assert!(p.check().unwrap_err().to_string().contains("sigma_B2"));
    }

    #[test]
    fn alpha_matches_log_form() {
        let p = SystemParams::default();
        assert!((p.alpha() - 0.415_037_499_278_843_8).abs() < 1e-12);
        assert_eq!(SystemParams { rho: 0.0, ..p }.alpha(), 0.0);
    }

    #[test]
    fn config_parse_with_comments() {
        let text = "# header\np_A = 2.5   # trailing\n\n m_A=7\n";
        let kv = KvConfig::parse(text).unwrap();
        assert_eq!(kv.get_f64("p_A").unwrap(), Some(2.5));
        assert_eq!(kv.require_usize("m_A").unwrap(), 7);
        assert!(KvConfig::parse("novalue\n").is_err());
        assert!(KvConfig::parse("a = 1\na = 2\n").is_err());
    }

    #[test]
    fn missing_key_is_named() {
        let mut kv = SystemParams::default().to_kv();
        kv.remove("sigma_EA2");
        let err = SystemParams::from_kv(&kv).unwrap_err().to_string();
        assert!(err.contains("sigma_EA2"), "{err}");
    }

    #[test]
    fn rho_complex_has_magnitude_and_phase() {
        let p = SystemParams {
            rho: 0.6,
            rho_phase: std::f64::consts::FRAC_PI_2,
            ..Default::default()
        };
        let r = p.rho_complex();
        assert!((r.norm() - 0.6).abs() < 1e-15);
        assert!((r.im - 0.6).abs() < 1e-12);
    }

    fn arb_params() -> impl Strategy<Value = SystemParams> {
        (
            (1e-3..1e3f64, 1e-3..1e3f64, 1e-3..1e3f64, 1e-3..1e3f64),
            (1e-3..1e3f64, 1e-3..1e3f64, 1e-3..1e3f64),
            (0.0..1.0f64, 0.0..1.0f64, -0.999..0.999f64, -3.0..3.0f64),
            (1usize..8, 0usize..50, 0usize..50),
        )
            .prop_map(|((p_a, p_b, sb, sa), (sea, seb, ss), (ea, ee, rho, ph), (n_e, m_a, m_b))| SystemParams {
                p_a,
                p_b,
                sigma_b2: sb,
                sigma_a2: sa,
                sigma_ea2: sea,
                sigma_eb2: seb,
                sigma_s2: ss,
                eps_a: ea,
                eps_e: ee,
                rho,
                rho_phase: ph,
                n_e,
                m_a,
                m_b,
            })
    }

    proptest! {
        #[test]
        fn validate_is_idempotent(p in arb_params()) {
            let once = p.clone().validate().unwrap();
            let twice = once.clone().validate().unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn config_round_trips(p in arb_params()) {
            let text = p.to_kv().to_text();
            let back = SystemParams::from_kv(&KvConfig::parse(&text).unwrap()).unwrap();
            prop_assert_eq!(back.to_kv().to_text(), text);
            prop_assert_eq!(back, p);
        }

        #[test]
        fn swap_is_an_involution(p in arb_params()) {
            prop_assert_eq!(p.swapped().swapped(), p);
        }
    }
}
