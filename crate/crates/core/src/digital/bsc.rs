use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::KvConfig;
use crate::verify::discrete_cmi_enumerate;

/// Binary entropy in bits, f(0) = f(1) = 0.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    Ok(h2(p))
}

pub(crate) fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Error rate of the XOR of two independent error patterns: p(1-q) + q(1-p).
pub fn convolve(p: f64, q: f64) -> f64 {
    p * (1.0 - q) + q * (1.0 - p)
}

/// Bit error rates of the four binary symmetric channels and the probe count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BscParams {
    /// Alice -> Bob probes.
    pub p_ba: f64,
    /// Alice -> Eve probes.
    pub p_ea: f64,
    /// Bob -> Alice echo.
    pub p_ab: f64,
    /// Bob -> Eve echo.
    pub p_eb: f64,
    pub m_a: usize,
}

impl Default for BscParams {
    fn default() -> Self {
        BscParams {
            p_ba: 0.1,
            p_ea: 0.2,
            p_ab: 0.0,
            p_eb: 0.0,
            m_a: 10_000,
        }
    }
}

pub const BSC_KEYS: [&str; 5] = ["P_BA", "P_EA", "P_AB", "P_EB", "m_A"];

/// How P_A|B and P_E|B are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RateModel {
    /// Return channels treated as noiseless: P_A|B = P_BA,
    /// P_E|B = P_BA + P_EA (1 - 2 P_BA).
    Approximate,
    /// Full convolutions P_BA * P_AB and P_EA * P_BA * P_EB.
    #[default]
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveRates {
    pub p_a_given_b: f64,
    pub p_e_given_b: f64,
}

impl BscParams {
    pub fn check(&self) -> Result<()> {
        for (name, p) in [("P_BA", self.p_ba), ("P_EA", self.p_ea), ("P_AB", self.p_ab), ("P_EB", self.p_eb)] {
            if !(0.0..=0.5).contains(&p) {
                return Err(Error::InvalidParam(format!("{name} must be in [0, 0.5] (got {p})")));
            }
        }
        if self.m_a == 0 {
            return Err(Error::InvalidParam("m_A must be >= 1".into()));
        }
        Ok(())
    }

    /// Notes when the noiseless-return approximation is not justified.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, p) in [("P_AB", self.p_ab), ("P_EB", self.p_eb)] {
            if p > 0.01 * self.p_ba {
                out.push(format!(
                    "{name} = {p} is not negligible next to P_BA = {}; use the exact rate model",
                    self.p_ba
                ));
            }
        }
        out
    }

    pub fn from_kv(kv: &KvConfig) -> Result<Self> {
        let mut out = BscParams::default();
        if let Some(missing) = BSC_KEYS.iter().find(|k| kv.get(k).is_none()) {
            return Err(Error::Config(format!("missing key `{missing}`")));
        }
        for key in kv.keys() {
            let value = kv.get(key).unwrap_or_default();
            out.set(key, value)?;
        }
        out.check()?;
        Ok(out)
    }

    pub fn to_kv(&self) -> KvConfig {
        let mut kv = KvConfig::default();
        for key in BSC_KEYS {
            kv.set(key, self.get(key).unwrap_or_default());
        }
        kv
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "P_BA" => self.p_ba.to_string(),
            "P_EA" => self.p_ea.to_string(),
            "P_AB" => self.p_ab.to_string(),
            "P_EB" => self.p_eb.to_string(),
            "m_A" => self.m_a.to_string(),
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let float = || {
            value
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}` as a number")))
        };
        match key {
            "P_BA" => self.p_ba = float()?,
            "P_EA" => self.p_ea = float()?,
            "P_AB" => self.p_ab = float()?,
            "P_EB" => self.p_eb = float()?,
            "m_A" => {
                self.m_a = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("`m_A`: cannot parse `{value}` as a count")))?
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }
}

pub fn effective_error_rates(bsc: &BscParams, model: RateModel) -> EffectiveRates {
    match model {
        RateModel::Approximate => EffectiveRates {
            p_a_given_b: bsc.p_ba,
            p_e_given_b: bsc.p_ba + bsc.p_ea * (1.0 - 2.0 * bsc.p_ba),
        },
        RateModel::Exact => EffectiveRates {
            p_a_given_b: convolve(bsc.p_ba, bsc.p_ab),
            p_e_given_b: convolve(convolve(bsc.p_ea, bsc.p_ba), bsc.p_eb),
        },
    }
}

/// Secrecy rate f(P_E|B) - f(P_A|B) in bits per probe bit, exact rate model.
pub fn xi_digital(bsc: &BscParams) -> Result<f64> {
    bsc.check()?;
    xi_digital_with(bsc, RateModel::Exact)
}

pub fn xi_digital_with(bsc: &BscParams, model: RateModel) -> Result<f64> {
    let r = effective_error_rates(bsc, model);
    if r.p_e_given_b >= 0.5 {
        return Err(Error::OutsideRegime(format!("P_E|B = {} must be < 0.5", r.p_e_given_b)));
    }
    Ok(h2(r.p_e_given_b) - h2(r.p_a_given_b))
}

/// `(xi_L, xi_U)` per probe bit with noiseless return channels.
///
/// xi_L comes from the entropy formula f(P_BA * P_EA) - f(P_BA); xi_U is
/// I(b_A; b_B | b_EA) enumerated over the eight outcomes of (b_A, w_BA, w_EA).
pub fn mac_bounds_digital(bsc: &BscParams) -> Result<(f64, f64)> {
    bsc.check()?;
    let xi_l = h2(convolve(bsc.p_ba, bsc.p_ea)) - h2(bsc.p_ba);
    let mut pmf = Vec::with_capacity(8);
    for b_a in 0..2u8 {
        for w_ba in 0..2u8 {
            for w_ea in 0..2u8 {
                let p = 0.5
                    * if w_ba == 1 { bsc.p_ba } else { 1.0 - bsc.p_ba }
                    * if w_ea == 1 { bsc.p_ea } else { 1.0 - bsc.p_ea };
                pmf.push((vec![b_a, b_a ^ w_ba, b_a ^ w_ea], p));
            }
        }
    }
    let xi_u = discrete_cmi_enumerate(&pmf, &[0], &[1], &[2])?;
    Ok((xi_l, xi_u))
}
