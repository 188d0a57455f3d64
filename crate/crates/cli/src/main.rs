use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use steep_core::channel::{run_echo, run_probing, sample_channels};
use steep_core::digital::{self, transcript, BscParams, CodeChoice, ReconcileConfig, BSC_KEYS};
use steep_core::harness::{self, ChannelMode, SweepBase, SweepSpec};
use steep_core::params::{ChannelRealization, KvConfig, PARAM_KEYS};
use steep_core::rng::{derive_seed, tag};
use steep_core::verify::{self, SuiteConfig};
use steep_core::SystemParams;

#[derive(Parser)]
#[command(name = "steep", version, about = "Secrecy rates and protocol simulation for encrypted-probe echoing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form bounds and rates for one parameter point (JSON).
    Rates {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        params: AnalogFlags,
    },
    /// Sweep one parameter over a grid and print CSV.
    Sweep(SweepArgs),
    /// Simulate one analog probe/echo round and report estimator performance (JSON).
    SimulateAnalog {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        params: AnalogFlags,
        /// Write the per-symbol trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run the bit-level protocol through key agreement (JSON).
    SimulateDigital(DigitalArgs),
    /// Run every oracle check and print a pass/fail table; exit 1 on any failure.
    VerifyBounds {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        params: AnalogFlags,
        /// Random channel realizations for the exact oracles.
        #[arg(long, default_value_t = 200)]
        realizations: usize,
        /// Samples for SNR and power checks.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Trials for the MSE checks.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "n_draws")]
    n_draws: Option<usize>,
    /// Print the effective config in file format and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args, Default)]
struct AnalogFlags {
    #[arg(long = "p_A")]
    p_a: Option<String>,
    #[arg(long = "p_B")]
    p_b: Option<String>,
    #[arg(long = "sigma_B2")]
    sigma_b2: Option<String>,
    #[arg(long = "sigma_A2")]
    sigma_a2: Option<String>,
    #[arg(long = "sigma_EA2")]
    sigma_ea2: Option<String>,
    #[arg(long = "sigma_EB2")]
    sigma_eb2: Option<String>,
    #[arg(long = "sigma_s2")]
    sigma_s2: Option<String>,
    #[arg(long = "eps_A")]
    eps_a: Option<String>,
    #[arg(long = "eps_E")]
    eps_e: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    rho_phase: Option<String>,
    #[arg(long = "n_E")]
    n_e: Option<String>,
    #[arg(long = "m_A")]
    m_a: Option<String>,
    #[arg(long = "m_B")]
    m_b: Option<String>,
}

impl AnalogFlags {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        PARAM_KEYS
            .iter()
            .copied()
            .zip([
                &self.p_a,
                &self.p_b,
                &self.sigma_b2,
                &self.sigma_a2,
                &self.sigma_ea2,
                &self.sigma_eb2,
                &self.sigma_s2,
                &self.eps_a,
                &self.eps_e,
                &self.rho,
                &self.rho_phase,
                &self.n_e,
                &self.m_a,
                &self.m_b,
            ])
            .collect()
    }
}

#[derive(Args, Default)]
struct BscFlags {
    #[arg(long = "P_BA")]
    p_ba: Option<String>,
    #[arg(long = "P_EA")]
    p_ea: Option<String>,
    #[arg(long = "P_AB")]
    p_ab: Option<String>,
    #[arg(long = "P_EB")]
    p_eb: Option<String>,
    #[arg(long = "m_A")]
    m_a: Option<String>,
}

impl BscFlags {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        BSC_KEYS
            .iter()
            .copied()
            .zip([&self.p_ba, &self.p_ea, &self.p_ab, &self.p_eb, &self.m_a])
            .collect()
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Parameter to sweep: any config key, or snr_ratio, snr_ba, snr_ea
    /// (analog), or P_BA, P_EA, P_AB, P_EB, m_A with --digital.
    #[arg(long)]
    field: String,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    grid: Vec<f64>,
    /// Sweep the bit-level rates instead of the analog ones.
    #[arg(long)]
    digital: bool,
    /// Hold the channel fixed: |h_BA|^2,||g_A||^2,|h_AB|^2,||g_B||^2.
    #[arg(long, value_delimiter = ',')]
    fixed_channel: Option<Vec<f64>>,
    /// Write the CSV here as well as to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Print x,y,y_err plot data for this column instead of the full table.
    #[arg(long)]
    plot: Option<String>,
    #[command(flatten)]
    params: AnalogFlags,
    #[command(flatten)]
    bsc: BscSweepFlags,
}

/// Digital rates for sweeps (m_A is shared with the analog flags).
#[derive(Args, Default)]
struct BscSweepFlags {
    #[arg(long = "P_BA")]
    p_ba: Option<String>,
    #[arg(long = "P_EA")]
    p_ea: Option<String>,
    #[arg(long = "P_AB")]
    p_ab: Option<String>,
    #[arg(long = "P_EB")]
    p_eb: Option<String>,
}

#[derive(Args)]
struct DigitalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Key length; defaults to the largest length the leak budget allows.
    #[arg(long = "target_len")]
    target_len: Option<usize>,
    /// `ldpc`, `ldpc:<syndrome fraction>` or `hamming:<r>`.
    #[arg(long, default_value = "ldpc")]
    code: String,
    /// Write the episode transcript (binary layout) here.
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long)]
    print_config: bool,
    #[command(flatten)]
    bsc: BscFlags,
}

const RUN_KEYS: [&str; 2] = ["n_draws", "seed"];

/// Config file (or defaults when there is none) with flag overrides applied.
/// Returns the parameter entries and the run entries separately.
fn merged_config(
    path: Option<&Path>,
    defaults: KvConfig,
    flags: &[(&'static str, &Option<String>)],
    run_keys: &[&str],
) -> Result<(KvConfig, KvConfig)> {
    let mut kv = match path {
        Some(p) => KvConfig::load(p)?,
        None => defaults,
    };
    let mut run = KvConfig::default();
    for key in run_keys {
        if let Some(v) = kv.remove(key) {
            run.set(key, v);
        }
    }
    for (key, value) in flags {
        if let Some(v) = value {
            kv.set(key, v.clone());
        }
    }
    Ok((kv, run))
}

struct Loaded<T> {
    params: T,
    seed: u64,
    n_draws: usize,
    text: String,
}

fn load_analog(common: &Common, flags: &AnalogFlags) -> Result<Loaded<SystemParams>> {
    let (kv, run) = merged_config(
        common.config.as_deref(),
        SystemParams::default().to_kv(),
        &flags.pairs(),
        &RUN_KEYS,
    )?;
    let params = SystemParams::from_kv(&kv)?;
    let seed = match common.seed {
        Some(s) => s,
        None => run.get("seed").map(str::parse).transpose().context("seed")?.unwrap_or(1),
    };
    let n_draws = match common.n_draws {
        Some(n) => n,
        None => run.get("n_draws").map(str::parse).transpose().context("n_draws")?.unwrap_or(10_000),
    };
    let mut out = params.to_kv();
    out.set("seed", seed.to_string());
    out.set("n_draws", n_draws.to_string());
    Ok(Loaded {
        params,
        seed,
        n_draws,
        text: out.to_text(),
    })
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json"));
}

fn cmd_rates(common: &Common, flags: &AnalogFlags) -> Result<ExitCode> {
    let cfg = load_analog(common, flags)?;
    if common.print_config {
        print!("{}", cfg.text);
        return Ok(ExitCode::SUCCESS);
    }
    let report = harness::run_rates(&cfg.params, cfg.n_draws, cfg.seed)?;
    print_json(&json!({
        "seed": cfg.seed,
        "n_draws": cfg.n_draws,
        "report": report,
    }));
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: &SweepArgs) -> Result<ExitCode> {
    let common = &args.common;
    let base = if args.digital {
        let (mut kv, _) = merged_config(common.config.as_deref(), BscParams::default().to_kv(), &[], &RUN_KEYS)?;
        for (key, value) in [
            ("P_BA", &args.bsc.p_ba),
            ("P_EA", &args.bsc.p_ea),
            ("P_AB", &args.bsc.p_ab),
            ("P_EB", &args.bsc.p_eb),
            ("m_A", &args.params.m_a),
        ] {
            if let Some(v) = value {
                kv.set(key, v.clone());
            }
        }
        let bsc = BscParams::from_kv(&kv)?;
        if common.print_config {
            print!("{}", bsc.to_kv().to_text());
            return Ok(ExitCode::SUCCESS);
        }
        SweepBase::Digital(bsc)
    } else {
        let cfg = load_analog(common, &args.params)?;
        if common.print_config {
            print!("{}", cfg.text);
            return Ok(ExitCode::SUCCESS);
        }
        SweepBase::Analog(cfg.params)
    };
    let (seed, n_draws) = match &base {
        SweepBase::Analog(_) => {
            let cfg = load_analog(common, &args.params)?;
            (cfg.seed, cfg.n_draws)
        }
        SweepBase::Digital(_) => (common.seed.unwrap_or(1), 0),
    };
    let mode = match (&args.fixed_channel, &base) {
        (Some(v), SweepBase::Analog(_)) if v.len() != 4 => {
            bail!("--fixed-channel takes four gains: |h_BA|^2,||g_A||^2,|h_AB|^2,||g_B||^2")
        }
        (Some(v), SweepBase::Analog(p)) => ChannelMode::Fixed(ChannelRealization::with_strengths(p.n_e, v[0], v[1], v[2], v[3])),
        (Some(_), SweepBase::Digital(_)) => bail!("--fixed-channel applies to analog sweeps only"),
        (None, _) => ChannelMode::Expected,
    };
    let spec = SweepSpec {
        base,
        field: args.field.clone(),
        grid: args.grid.clone(),
        n_draws,
        seed,
        output: args.output.clone(),
        mode,
    };
    let table = harness::run_sweep(&spec)?;
    match &args.plot {
        Some(col) => print!("{}", harness::emit_plotdata(&table, col)?),
        None => print!("{}", table.to_csv()),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate_analog(common: &Common, flags: &AnalogFlags, trace: Option<&Path>) -> Result<ExitCode> {
    let cfg = load_analog(common, flags)?;
    if common.print_config {
        print!("{}", cfg.text);
        return Ok(ExitCode::SUCCESS);
    }
    let p = &cfg.params;
    let episode_seed = derive_seed(cfg.seed, tag::EPISODE);
    let c = sample_channels(p, derive_seed(episode_seed, 0))?;
    let probing = run_probing(p, &c, derive_seed(episode_seed, 1))?;
    let ep = run_echo(p, probing, derive_seed(episode_seed, 2))?;
    let summary = harness::summarize_analog(p, &ep)?;
    if let Some(path) = trace {
        std::fs::write(path, ep.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    }
    print_json(&json!({
        "seed": cfg.seed,
        "params": p,
        "realization": c,
        "summary": summary,
    }));
    Ok(ExitCode::SUCCESS)
}

fn parse_code(spec: &str) -> Result<CodeChoice> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    Ok(match (name, arg) {
        ("ldpc", None) => CodeChoice::Ldpc { syndrome_fraction: None },
        ("ldpc", Some(f)) => CodeChoice::Ldpc {
            syndrome_fraction: Some(f.parse().context("syndrome fraction")?),
        },
        ("hamming", Some(r)) => CodeChoice::HammingProduct {
            r: r.parse().context("Hamming component r")?,
        },
        _ => bail!("unknown code `{spec}` (expected ldpc, ldpc:<fraction> or hamming:<r>)"),
    })
}

fn cmd_simulate_digital(args: &DigitalArgs) -> Result<ExitCode> {
    let (kv, run) = merged_config(
        args.config.as_deref(),
        BscParams::default().to_kv(),
        &args.bsc.pairs(),
        &["seed", "target_len"],
    )?;
    let bsc = BscParams::from_kv(&kv)?;
    let seed = match args.seed {
        Some(s) => s,
        None => run.get("seed").map(str::parse).transpose().context("seed")?.unwrap_or(1),
    };
    if args.print_config {
        let mut out = bsc.to_kv();
        out.set("seed", seed.to_string());
        if let Some(t) = args.target_len.or(run.get("target_len").map(str::parse).transpose()?) {
            out.set("target_len", t.to_string());
        }
        print!("{}", out.to_text());
        return Ok(ExitCode::SUCCESS);
    }
    let config = ReconcileConfig {
        code: parse_code(&args.code)?,
        ..Default::default()
    };
    let reconcile_seed = derive_seed(seed, tag::RECONCILE);
    let plan = digital::plan_leak(&bsc, &config, reconcile_seed)?;
    let target_len = match args.target_len {
        Some(t) => t,
        None => run
            .get("target_len")
            .map(str::parse)
            .transpose()
            .context("target_len")?
            .unwrap_or(plan.max_key_len),
    };
    let mut ep = digital::run_digital_episode(&bsc, derive_seed(seed, tag::EPISODE))?;
    let (emp_a, emp_e) = ep.empirical_rates();
    let rates = digital::effective_error_rates(&bsc, digital::RateModel::Exact);
    let outcome = digital::reconcile_and_amplify(&ep, &bsc, target_len, &config, reconcile_seed);
    let (status, agree, code) = match &outcome {
        Ok(o) => {
            ep.key_a = o.key_a.clone();
            ep.key_b = o.key_b.clone();
            let ok = o.keys_agree();
            (if ok { "keys agree".to_string() } else { "keys differ".to_string() }, ok, if ok { 0 } else { 2 })
        }
        Err(e @ steep_core::Error::ReconciliationFailed(_)) => (e.to_string(), false, 2),
        Err(e) => bail!("{e}"),
    };
    if let Some(path) = &args.transcript {
        std::fs::write(path, transcript::to_bytes(&ep)).with_context(|| format!("writing {}", path.display()))?;
    }
    print_json(&json!({
        "seed": seed,
        "params": bsc,
        "xi": plan.xi,
        "P_A_given_B": rates.p_a_given_b,
        "P_E_given_B": rates.p_e_given_b,
        "empirical": { "P_A_given_B": emp_a, "P_E_given_B": emp_e },
        "leak": plan,
        "target_len": target_len,
        "keys_agree": agree,
        "status": status,
        "key_hex": if agree { Some(ep.key_b.to_hex()) } else { None },
        "warnings": bsc.warnings(),
    }));
    Ok(ExitCode::from(code))
}

fn cmd_verify(common: &Common, flags: &AnalogFlags, suite: SuiteConfig, csv: Option<&Path>) -> Result<ExitCode> {
    let cfg = load_analog(common, flags)?;
    if common.print_config {
        print!("{}", cfg.text);
        return Ok(ExitCode::SUCCESS);
    }
    let reports = verify::run_oracle_suite(&cfg.params, &suite, cfg.seed)?;
    print!("{}", verify::reports_table(&reports));
    println!();
    print!("{}", verify::reports_csv(&reports));
    if let Some(path) = csv {
        std::fs::write(path, verify::reports_csv(&reports)).with_context(|| format!("writing {}", path.display()))?;
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        eprintln!("{failed} of {} checks failed", reports.len());
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Rates { common, params } => cmd_rates(common, params),
        Command::Sweep(args) => cmd_sweep(args),
        Command::SimulateAnalog { common, params, trace } => cmd_simulate_analog(common, params, trace.as_deref()),
        Command::SimulateDigital(args) => cmd_simulate_digital(args),
        Command::VerifyBounds {
            common,
            params,
            realizations,
            samples,
            trials,
            csv,
        } => cmd_verify(
            common,
            params,
            SuiteConfig {
                n_realizations: *realizations,
                n_samples: *samples,
                n_trials: *trials,
            },
            csv.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
