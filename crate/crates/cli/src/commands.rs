use std::path::Path;
use std::sync::Arc;

use qauction_core::gg::{run_market, GGConfigFile, PriceSeries};
use qauction_core::hp::{run_auction, AuctionFile};
use qauction_core::multifractal::{log_spaced_scales, mfdfa, spectrum_width, HurstSpectrum, DEFAULT_Q};
use qauction_core::ps::{market_round, EnsembleFile};
use qauction_service::{SessionStore, DATA_DIR_ENV};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::output::{csv_text, emit, json_text};
use crate::{CliError, Command, Format};

pub fn run(command: Command) -> Result<String, CliError> {
    match command {
        Command::GgSim { common, format } => gg_sim(&common.config, common.out.as_deref(), common.seed, format),
        Command::Mfdfa { input, config, out, format } => analyze(&input, config.as_deref(), out.as_deref(), format),
        Command::PsRound { common, format } => ps_round(&common.config, common.out.as_deref(), common.seed, format),
        Command::HpRun { common, runs, format } => hp_run(&common.config, common.out.as_deref(), common.seed, runs, format),
        Command::Serve { addr, data_dir } => serve(addr, data_dir),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn runtime(e: qauction_core::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn destination(out: Option<&Path>) -> String {
    out.map_or_else(|| "stdout".to_string(), |p| p.display().to_string())
}

fn gg_sim(config: &Path, out: Option<&Path>, seed: Option<u64>, format: Format) -> Result<String, CliError> {
    let mut file: GGConfigFile = read_json(config)?;
    if let Some(s) = seed {
        file.seed = s;
    }
    let config = file.into_config()?;
    let series = run_market(&config).map_err(runtime)?;
    let text = match format {
        Format::Csv => series.to_csv().map_err(runtime)?,
        Format::Json => json_text(&series)?,
    };
    emit(out, text.as_bytes())?;
    if series.leak_warnings > 0 {
        eprintln!("warning: {} rounds exceeded the truncation leak cap", series.leak_warnings);
    }
    Ok(format!(
        "gg-sim: {} rounds, seed {}, final log-price {:.6}, max edge mass {:.2e} -> {}",
        config.rounds,
        config.seed,
        series.log_prices.last().copied().unwrap_or_default(),
        series.max_edge_mass,
        destination(out)
    ))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScaleRange {
    min: usize,
    max: usize,
    count: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MfdfaSettings {
    #[serde(default)]
    q: Option<Vec<f64>>,
    #[serde(default)]
    scales: Option<ScaleRange>,
    #[serde(default)]
    order: Option<usize>,
}

#[derive(Debug, Serialize)]
struct SpectrumReport {
    q: Vec<f64>,
    h: Vec<f64>,
    r2: Vec<f64>,
    delta_h: f64,
    /// Set when any fit has r2 below 0.95.
    low_r2: bool,
}

impl SpectrumReport {
    fn new(s: HurstSpectrum) -> Result<Self, CliError> {
        let delta_h = spectrum_width(&s)?;
        let low_r2 = s.min_r2() < 0.95;
        Ok(Self { q: s.q_values, h: s.h, r2: s.fit_r2, delta_h, low_r2 })
    }
}

#[derive(Debug, Serialize)]
struct MfdfaReport {
    points: usize,
    scales: Vec<usize>,
    order: usize,
    returns: SpectrumReport,
    abs_returns: SpectrumReport,
}

fn analyze(input: &Path, config: Option<&Path>, out: Option<&Path>, format: Format) -> Result<String, CliError> {
    let series = PriceSeries::from_csv(&read_text(input)?)?;
    let settings: MfdfaSettings = match config {
        Some(p) => read_json(p)?,
        None => MfdfaSettings::default(),
    };
    let returns = series.returns();
    let q = settings.q.unwrap_or_else(|| DEFAULT_Q.to_vec());
    let scales = match settings.scales {
        Some(r) => log_spaced_scales(r.min, r.max, r.count),
        None => log_spaced_scales(16, (returns.len() / 4).max(16), 8),
    };
    let order = settings.order.unwrap_or(1);
    let abs: Vec<f64> = returns.iter().map(|r| r.abs()).collect();
    let report = MfdfaReport {
        points: returns.len(),
        returns: SpectrumReport::new(mfdfa(&returns, &q, &scales, order)?)?,
        abs_returns: SpectrumReport::new(mfdfa(&abs, &q, &scales, order)?)?,
        scales,
        order,
    };
    for (name, s) in [("returns", &report.returns), ("abs_returns", &report.abs_returns)] {
        if s.low_r2 {
            eprintln!("warning: {name} spectrum has a fit with r2 below 0.95");
        }
    }
    let text = match format {
        Format::Json => json_text(&report)?,
        Format::Csv => csv_text(&["observable", "q", "h", "r2"], |w| {
            for (name, s) in [("returns", &report.returns), ("abs_returns", &report.abs_returns)] {
                for i in 0..s.q.len() {
                    w.write_record([name.to_string(), s.q[i].to_string(), s.h[i].to_string(), s.r2[i].to_string()])?;
                }
            }
            Ok(())
        })?,
    };
    emit(out, text.as_bytes())?;
    Ok(format!(
        "mfdfa: {} returns, delta-h {:.4} (returns), {:.4} (abs returns) -> {}",
        report.points,
        report.returns.delta_h,
        report.abs_returns.delta_h,
        destination(out)
    ))
}

fn ps_round(config: &Path, out: Option<&Path>, seed: Option<u64>, format: Format) -> Result<String, CliError> {
    let file: EnsembleFile = read_json(config)?;
    let traders = file.build()?;
    let rp = file.risk_params()?;
    let seed = seed.unwrap_or(file.seed);
    let (report, _) = market_round(&traders, &rp, seed)?;
    let text = match format {
        Format::Json => json_text(&report)?,
        Format::Csv => csv_text(&["trader", "side", "collapsed", "flow", "risk_inclination"], |w| {
            for t in &traders {
                let flow = report.outcome.flows.get(&t.id).map(|f| f.to_string()).unwrap_or_default();
                w.write_record([
                    t.id.clone(),
                    t.side.name().to_string(),
                    report.outcome.collapsed[&t.id].to_string(),
                    flow,
                    report.risk_inclination[&t.id].to_string(),
                ])?;
            }
            Ok(())
        })?,
    };
    emit(out, text.as_bytes())?;
    let price = report.outcome.price.map_or_else(|| "none".to_string(), |p| format!("{p:.6}"));
    Ok(format!(
        "ps-round: {} traders, seed {seed}, {} trades at price {price} -> {}",
        traders.len(),
        report.outcome.trades.len(),
        destination(out)
    ))
}

fn hp_run(
    config: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
    runs: Option<usize>,
    format: Format,
) -> Result<String, CliError> {
    let file: AuctionFile = read_json(config)?;
    let (bids, instance) = file.build()?;
    let mut cfg = file.search_config();
    cfg.seed = seed.unwrap_or(cfg.seed);
    cfg.runs = runs.unwrap_or(cfg.runs);
    cfg.validate()?;
    instance.check_simulable()?;
    let stats = run_auction(&bids, &instance, &cfg)?;
    let text = match format {
        Format::Json => json_text(&stats)?,
        Format::Csv => csv_text(&["index", "count", "frequency", "feasible", "revenue"], |w| {
            for f in &stats.frequencies {
                w.write_record([
                    f.index.to_string(),
                    f.count.to_string(),
                    f.frequency.to_string(),
                    f.outcome.feasible.to_string(),
                    f.outcome.revenue.to_string(),
                ])?;
            }
            Ok(())
        })?,
    };
    emit(out, text.as_bytes())?;
    Ok(format!(
        "hp-run: {} bidders, {} runs, seed {}, success_rate {:.3}, oracle revenue {} -> {}",
        bids.len(),
        stats.runs,
        stats.seed,
        stats.success_rate,
        stats.oracle_revenue,
        destination(out)
    ))
}

fn serve(addr: std::net::SocketAddr, data_dir: Option<std::path::PathBuf>) -> Result<String, CliError> {
    let dir = data_dir.or_else(|| std::env::var_os(DATA_DIR_ENV).map(Into::into));
    let store = match &dir {
        Some(d) => SessionStore::open(d).map_err(|e| CliError::Validation(format!("{}: {}", d.display(), e.message)))?,
        None => SessionStore::in_memory(),
    };
    let where_ = dir.as_ref().map_or_else(|| "memory".to_string(), |d| d.display().to_string());
    eprintln!("serving on http://{addr} (journals: {where_})");
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
    rt.block_on(qauction_service::http::serve(addr, Arc::new(store)))
        .map_err(|e| CliError::Runtime(format!("server on {addr}: {e}")))?;
    Ok(format!("serve: stopped (journals: {where_})"))
}
