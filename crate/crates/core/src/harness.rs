//! Single-point reports, parameter sweeps and plot data.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::digital::{self, BscParams, RateModel};
use crate::error::{Error, Result};
use crate::mmse;
use crate::params::{ChannelRealization, RateReport, SystemParams, PARAM_KEYS};
use crate::rates::{self, Direction};
use crate::rng::{derive_seed, tag};
use crate::stats::Estimate;

/// Every closed-form rate for one parameter point, on shared channel draws.
///
/// Always: the two-way bounds, E{xi_tilde}, E{log2(1 + phi_BA)} and the mean
/// echo power. One-way parameters add the capacity; the post-echo lower
/// bounds are added when m_A > 0 (the eta form only when both return noises
/// are positive).
pub fn run_rates(params: &SystemParams, n_draws: usize, seed: u64) -> Result<RateReport> {
    params.check()?;
    let channel_seed = derive_seed(seed, tag::CHANNELS);
    let mut report = rates::theorem1_bounds(params, n_draws, channel_seed)?;
    if params.m_a == 0 || params.m_b == 0 {
        let cap = rates::corollary1_capacity(params, n_draws, channel_seed)?;
        report.insert_estimate("C_one_way", cap);
    }
    if params.m_a > 0 {
        report.merge(rates::theorem3_lower_bound(params, n_draws, channel_seed)?);
        if params.eps_a > 0.0 && params.eps_e > 0.0 {
            report.merge(rates::theorem2_lower_bound(params, n_draws, channel_seed)?);
        } else {
            report
                .notes
                .push("eps_A or eps_E is zero: the eta-dependent lower bound is not defined".into());
        }
    }
    report.insert_estimate("xi_tilde", rates::expected_xi_tilde(params, n_draws, channel_seed)?);
    report.insert_estimate("xi_steep_ac", rates::xi_steep_ac(params, n_draws, channel_seed)?);
    report.insert_estimate("p_r", rates::expected_echo_power(params, n_draws, channel_seed)?);
    // E{|h_BA|^2} = 1, so the recommended secret power is p_A on average.
    report.insert("sigma_s2_recommended", params.p_a);
    report.notes.dedup();
    Ok(report)
}

/// Per-realization values for a fixed channel (long coherence time).
pub fn fixed_channel_rates(params: &SystemParams, c: &ChannelRealization) -> Result<RateReport> {
    params.check()?;
    c.check_lengths(params)?;
    let per = rates::per_realization(params, c);
    let budget = rates::power_budget(params, c);
    let mut report = RateReport::new(params.clone());
    report.insert("phi_BA", per.phi_ba);
    report.insert("phi_AB", per.phi_ab);
    report.insert("xi_steep_ac", per.xi_ba);
    report.insert("xi_AB", per.xi_ab);
    report.insert("gamma_BA", per.gamma_ba);
    report.insert("gamma_AB", per.gamma_ab);
    report.insert("xi_tilde", per.xi_tilde);
    report.insert("SNR_A_given_B", per.snr_ab);
    report.insert("SNR_E_given_B", per.snr_eb);
    report.insert("eta_AE", mmse::mse_ratio_eta(params, c));
    report.insert("p_r", budget.p_r);
    report.insert("sigma_s2_recommended", budget.recommended_sigma_s2);
    let (m_a, m_b) = (params.m_a as f64, params.m_b as f64);
    report.insert("C_B", params.alpha() + m_a * per.xi_ba + m_b * per.gamma_ab);
    report.insert("C_A", params.alpha() + m_b * per.xi_ab + m_a * per.gamma_ba);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SweepBase {
    Analog(SystemParams),
    Digital(BscParams),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub enum ChannelMode {
    /// Average over channel draws.
    #[default]
    Expected,
    /// Hold one realization fixed across the grid.
    Fixed(ChannelRealization),
}

/// Derived analog sweep keys, in addition to the parameter names:
/// `snr_ratio` sets sigma_s^2 = v sigma_B^2; `snr_ba` sets sigma_B^2 = p_A / v;
/// `snr_ea` sets sigma_EA^2 = p_A / v (per-antenna mean SNR at Eve).
pub const DERIVED_KEYS: [&str; 3] = ["snr_ratio", "snr_ba", "snr_ea"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: SweepBase,
    pub field: String,
    pub grid: Vec<f64>,
    pub n_draws: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub mode: ChannelMode,
}

impl SweepSpec {
    pub fn check(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidParam("sweep grid is empty".into()));
        }
        if let Some(v) = self.grid.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParam(format!("sweep grid value {v} is not finite")));
        }
        let known = match &self.base {
            SweepBase::Analog(_) => PARAM_KEYS.contains(&self.field.as_str()) || DERIVED_KEYS.contains(&self.field.as_str()),
            SweepBase::Digital(_) => digital::BSC_KEYS.contains(&self.field.as_str()),
        };
        if !known {
            return Err(Error::InvalidParam(format!("unknown sweep field `{}`", self.field)));
        }
        if matches!(self.base, SweepBase::Analog(_)) && self.mode == ChannelMode::Expected && self.n_draws == 0 {
            return Err(Error::InvalidParam("n_draws must be >= 1".into()));
        }
        Ok(())
    }
}

fn format_value(v: f64) -> String {
    // Integer-valued grid points must parse as counts (m_A, n_E, ...).
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        v.to_string()
    }
}

fn apply_analog(base: &SystemParams, field: &str, v: f64) -> Result<SystemParams> {
    let mut p = base.clone();
    match field {
        "snr_ratio" => p.sigma_s2 = v * p.sigma_b2,
        "snr_ba" => p.sigma_b2 = p.p_a / v,
        "snr_ea" => p.sigma_ea2 = p.p_a / v,
        _ => p.set(field, &format_value(v))?,
    }
    p.validate()
}

/// Rows of a sweep: the swept value, then one column per named quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub field: String,
    pub columns: Vec<String>,
    pub rows: Vec<(f64, Vec<f64>)>,
}

impl SweepTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|(_, r)| r[k]).collect())
    }

    pub fn xs(&self) -> Vec<f64> {
        self.rows.iter().map(|(x, _)| *x).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.field.clone();
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (x, row) in &self.rows {
            let _ = write!(out, "{x}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

fn report_columns(report: &RateReport) -> (Vec<String>, Vec<f64>) {
    let mut names: Vec<String> = report.values.keys().cloned().collect();
    let mut values: Vec<f64> = report.values.values().copied().collect();
    for (k, v) in &report.std_errors {
        names.push(format!("{k}_se"));
        values.push(*v);
    }
    (names, values)
}

fn digital_row(bsc: &BscParams) -> Result<(Vec<String>, Vec<f64>)> {
    let xi = digital::xi_digital(bsc)?;
    let (xi_l, xi_u) = digital::mac_bounds_digital(bsc)?;
    let exact = digital::effective_error_rates(bsc, RateModel::Exact);
    let names = ["xi", "xi_L", "xi_U", "P_A_given_B", "P_E_given_B", "key_bits_upper"];
    Ok((
        names.iter().map(|s| s.to_string()).collect(),
        vec![xi, xi_l, xi_u, exact.p_a_given_b, exact.p_e_given_b, bsc.m_a as f64 * xi],
    ))
}

/// One row per grid point. The same seed (hence the same channel draws) is
/// used at every point, so differences along the grid are not Monte Carlo
/// noise. Writes the CSV to `spec.output` when set.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.check()?;
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::with_capacity(spec.grid.len());
    for &v in &spec.grid {
        let (names, values) = match &spec.base {
            SweepBase::Analog(base) => {
                let p = apply_analog(base, &spec.field, v)?;
                let report = match &spec.mode {
                    ChannelMode::Expected => run_rates(&p, spec.n_draws, spec.seed)?,
                    ChannelMode::Fixed(c) => fixed_channel_rates(&p, c)?,
                };
                report_columns(&report)
            }
            SweepBase::Digital(base) => {
                let mut b = base.clone();
                b.set(&spec.field, &format_value(v))?;
                b.check()?;
                digital_row(&b)?
            }
        };
        match &columns {
            None => columns = Some(names),
            Some(cols) if *cols != names => {
                return Err(Error::InvalidParam(format!(
                    "report columns change along the grid at {} = {v}",
                    spec.field
                )))
            }
            Some(_) => {}
        }
        rows.push((v, values));
    }
    let table = SweepTable {
        field: spec.field.clone(),
        columns: columns.unwrap_or_default(),
        rows,
    };
    if let Some(path) = &spec.output {
        std::fs::write(path, table.to_csv()).map_err(|e| Error::io(path, e))?;
    }
    Ok(table)
}

/// Plot-ready `x,y,y_err` CSV for one column; `y_err` is the column's
/// standard error when the table has one, else 0.
pub fn emit_plotdata(table: &SweepTable, y_column: &str) -> Result<String> {
    if table.rows.is_empty() {
        return Err(Error::InvalidParam("no rows to plot".into()));
    }
    let ys = table
        .column(y_column)
        .ok_or_else(|| Error::InvalidParam(format!("no column `{y_column}`")))?;
    let errs = table
        .column(&format!("{y_column}_se"))
        .unwrap_or_else(|| vec![0.0; ys.len()]);
    let mut out = String::from("x,y,y_err\n");
    for ((x, y), e) in table.xs().iter().zip(&ys).zip(&errs) {
        let _ = writeln!(out, "{x},{y},{e}");
    }
    Ok(out)
}

/// Mean echo power of a simulated episode against the closed form.
pub fn simulated_echo_power(params: &SystemParams, c: &ChannelRealization, seed: u64) -> Result<(f64, f64)> {
    let probing = crate::channel::run_probing(params, c, derive_seed(seed, 1))?;
    let ep = crate::channel::run_echo(params, probing, derive_seed(seed, 2))?;
    Ok((crate::channel::mean_power(&ep.r), rates::power_budget(params, c).p_r))
}

/// Summary of one analog episode for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogSummary {
    pub phi_ba: f64,
    pub mse_alice: f64,
    pub mse_alice_closed_form: f64,
    pub mse_eve_probe: f64,
    pub mse_eve_probe_closed_form: f64,
    pub mse_eve: f64,
    pub mse_eve_closed_form: f64,
    pub eta_ae: f64,
    pub snr_a_given_b: f64,
    pub snr_e_given_b: f64,
    pub xi_tilde: f64,
    pub echo_power: f64,
    pub echo_power_closed_form: f64,
}

pub fn summarize_analog(params: &SystemParams, ep: &crate::channel::AnalogEpisode) -> Result<AnalogSummary> {
    let c = &ep.realization;
    let a = mmse::alice_estimate_s(params, ep)?;
    let x = mmse::eve_estimate_xa(params, ep)?;
    let e = mmse::eve_estimate_s(params, ep, mmse::EveKnowledge::Full)?;
    let (snr_a, snr_e) = rates::effective_snrs(params, c);
    Ok(AnalogSummary {
        phi_ba: rates::phi(params, c, Direction::BobFromAlice),
        mse_alice: a.empirical_mse,
        mse_alice_closed_form: a.closedform_mse,
        mse_eve_probe: x.empirical_mse,
        mse_eve_probe_closed_form: x.closedform_mse,
        mse_eve: e.empirical_mse,
        mse_eve_closed_form: e.closedform_mse,
        eta_ae: mmse::mse_ratio_eta(params, c),
        snr_a_given_b: snr_a,
        snr_e_given_b: snr_e,
        xi_tilde: rates::xi_tilde_analog(params, c),
        echo_power: crate::channel::mean_power(&ep.r),
        echo_power_closed_form: rates::power_budget(params, c).p_r,
    })
}

/// Key agreement over repeated digital runs: fraction of runs whose keys
/// agree, with its standard error.
pub fn key_agreement_rate(bsc: &BscParams, target_len: usize, config: &digital::ReconcileConfig, runs: usize, seed: u64) -> Result<Estimate> {
    use rayon::prelude::*;
    let outcomes: Vec<f64> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(derive_seed(seed, tag::TRIALS), i);
            let ep = digital::run_digital_episode(bsc, derive_seed(s, tag::EPISODE))?;
            match digital::reconcile_and_amplify(&ep, bsc, target_len, config, derive_seed(s, tag::RECONCILE)) {
                Ok(out) => Ok(f64::from(u8::from(out.keys_agree()))),
                Err(Error::ReconciliationFailed(_)) => Ok(0.0),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    Ok(Estimate::from_samples(&outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SystemParams {
        SystemParams {
            eps_a: 1e-4,
            eps_e: 1e-4,
            ..Default::default()
        }
    }

    #[test]
    fn one_way_report_has_coinciding_bounds() {
        let r = run_rates(&base(), 500, 1).unwrap();
        assert_eq!(r.value("C_B"), r.value("C_E"));
        assert!((r.value("C_one_way") - r.value("C_B")).abs() < 1e-12);
        for key in ["C_B_prime_lb", "C_B_pruned_lb", "xi_tilde", "xi_steep_ac", "p_r", "alpha_prime"] {
            assert!(r.get(key).is_some(), "{key}");
        }
        assert!(r.all_finite());
    }

    #[test]
    fn two_way_report_warns() {
        let p = SystemParams { m_b: 4, ..base() };
        let r = run_rates(&p, 200, 1).unwrap();
        assert!(r.notes.iter().any(|n| n.contains("negative")));
        assert!(r.get("C_one_way").is_none());
    }

    #[test]
    fn secret_snr_sweep_rises_toward_one_bit() {
        let c = ChannelRealization::with_strengths(2, 1.0, 0.0, 1.0, 1.0);
        let p = SystemParams {
            sigma_b2: 1.0,
            p_a: 1.0,
            ..base()
        };
        let spec = SweepSpec {
            base: SweepBase::Analog(p),
            field: "snr_ratio".into(),
            grid: vec![0.1, 1.0, 10.0, 100.0],
            n_draws: 1,
            seed: 0,
            output: None,
            mode: ChannelMode::Fixed(c),
        };
        let t = run_sweep(&spec).unwrap();
        let xi = t.column("xi_tilde").unwrap();
        assert!(xi.windows(2).all(|w| w[0] < w[1]));
        assert!(xi[3] < 1.0 && xi[3] > 0.97);
        assert_eq!(t.column("phi_BA").unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn eve_snr_sweep_stays_positive() {
        let spec = SweepSpec {
            base: SweepBase::Analog(base()),
            field: "snr_ea".into(),
            grid: vec![0.1, 1.0, 10.0, 100.0],
            n_draws: 2000,
            seed: 3,
            output: None,
            mode: ChannelMode::Expected,
        };
        let t = run_sweep(&spec).unwrap();
        let xi = t.column("xi_steep_ac").unwrap();
        assert!(xi.windows(2).all(|w| w[0] > w[1]));
        assert!(xi.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn digital_sweep_rises_from_zero() {
        let spec = SweepSpec {
            base: SweepBase::Digital(BscParams::default()),
            field: "P_EA".into(),
            grid: vec![0.0, 0.1, 0.2, 0.3, 0.4],
            n_draws: 0,
            seed: 0,
            output: None,
            mode: ChannelMode::Expected,
        };
        let t = run_sweep(&spec).unwrap();
        let xi = t.column("xi").unwrap();
        assert_eq!(xi[0], 0.0);
        assert!(xi.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn sweep_csv_is_deterministic_and_plottable() {
        let dir = std::env::temp_dir().join(format!("sweep-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.csv");
        let spec = SweepSpec {
            base: SweepBase::Analog(base()),
            field: "m_A".into(),
            grid: vec![1.0, 2.0, 4.0],
            n_draws: 300,
            seed: 9,
            output: Some(path.clone()),
            mode: ChannelMode::Expected,
        };
        let a = run_sweep(&spec).unwrap();
        let first = std::fs::read_to_string(&path).unwrap();
        run_sweep(&spec).unwrap();
        assert_eq!(first, std::fs::read_to_string(&path).unwrap());
        assert!(first.starts_with("m_A,"));
        assert_eq!(first.lines().count(), 4);

        let plot = emit_plotdata(&a, "C_B").unwrap();
        let lines: Vec<&str> = plot.lines().collect();
        assert_eq!(lines[0], "x,y,y_err");
        assert_eq!(lines.len(), 4);
        let c_b = a.column("C_B").unwrap();
        let se = a.column("C_B_se").unwrap();
        assert_eq!(lines[2], format!("2,{},{}", c_b[1], se[1]));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn sweep_errors() {
        let mut spec = SweepSpec {
            base: SweepBase::Analog(base()),
            field: "nope".into(),
            grid: vec![1.0],
            n_draws: 10,
            seed: 0,
            output: None,
            mode: ChannelMode::Expected,
        };
        assert!(run_sweep(&spec).is_err());
        spec.field = "p_A".into();
        spec.grid = vec![];
        assert!(run_sweep(&spec).is_err());
        spec.grid = vec![f64::NAN];
        assert!(run_sweep(&spec).is_err());
        spec.grid = vec![1.0];
        spec.output = Some(PathBuf::from("/nonexistent-dir/x.csv"));
        let err = run_sweep(&spec).unwrap_err().to_string();
        assert!(err.contains("/nonexistent-dir/x.csv"), "{err}");

        let empty = SweepTable {
            field: "x".into(),
            columns: vec!["y".into()],
            rows: vec![],
        };
        assert!(emit_plotdata(&empty, "y").is_err());
    }

    #[test]
    fn key_agreement_small() {
        let bsc = BscParams {
            m_a: 2000,
            ..Default::default()
        };
        let cfg = digital::ReconcileConfig::default();
        let r = key_agreement_rate(&bsc, 100, &cfg, 8, 1).unwrap();
        assert!(r.mean >= 0.875);
    }
}
