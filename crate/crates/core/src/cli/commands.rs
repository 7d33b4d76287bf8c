//! Command implementations.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate};
use serde::Serialize;

use crate::analytics::{
    expected_crossings, linear_ev, loss_lower, mc_first_passage, mc_grid_ev, profit_upper,
    required_arbitrages, TheoryParams, WalkStats,
};
use crate::backtest::{
    run_backtest, run_buy_and_hold, run_fixed_bound_grid, run_sweep, sweep_to_csv, BacktestReport,
    ReplayOptions, StrategyKind,
};
use crate::grid_engine::GridSpec;
use crate::market_data::{
    load_cache, merge_series, store_cache, synth_random_walk, validate_series, CandleSeries,
    KlineClient, WalkParams, BASE_URL_ENV, DEFAULT_BASE_URL,
};

use super::{
    BacktestArgs, CliFailure, CompareArgs, FetchArgs, OutputFormat, SourceArgs, StrategyArg,
    SweepArgs, VerifyEvArgs,
};

/// Accepts `YYYY-MM-DD` (midnight UTC) or a full RFC 3339 timestamp.
fn parse_iso_ms(text: &str) -> Result<i64, CliFailure> {
    if let Ok(date) = NaiveDate::parse_from_str(text, "%Y-%m-%d") {
        let midnight = date.and_hms_opt(0, 0, 0).expect("valid midnight");
        return Ok(midnight.and_utc().timestamp_millis());
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Ok(dt.timestamp_millis());
    }
    Err(CliFailure::usage(format!(
        "cannot parse {text:?} as an ISO-8601 date (YYYY-MM-DD or RFC 3339)"
    )))
}

/// Wall-clock metadata written next to each primary output so the output
/// itself stays byte-reproducible.
#[derive(Debug, Serialize)]
struct Sidecar<'a> {
    created_unix_ms: i64,
    argv: &'a [String],
    inputs: Vec<String>,
    output: String,
}

fn write_sidecar(argv: &[String], inputs: &[&Path], output: &Path) -> Result<(), CliFailure> {
    let meta = Sidecar {
        created_unix_ms: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as i64)
            .unwrap_or(0),
        argv,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        output: output.display().to_string(),
    };
    let mut name = output
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    name.push_str(".meta.json");
    let path = output.with_file_name(name);
    fs::write(&path, serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n")?;
    Ok(())
}

fn write_output(path: &Path, body: &str) -> Result<(), CliFailure> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, body)?;
    Ok(())
}

/// How the candle source resolved, echoed into every output.
#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SourceEcho {
    Cache { symbol: String, candles: usize },
    Synthetic { seed: u64, steps: u64, start_price: f64, p_up: f64, walk_k: f64 },
}

fn load_source(
    source: &SourceArgs,
    default_walk_k: f64,
) -> Result<(CandleSeries, SourceEcho), CliFailure> {
    match (&source.cache, source.synthetic) {
        (Some(path), false) => {
            let series = load_cache(path)?;
            if series.is_empty() {
                return Err(CliFailure::runtime(format!(
                    "cache {} holds no candles",
                    path.display()
                )));
            }
            let echo = SourceEcho::Cache {
                symbol: series.symbol.clone(),
                candles: series.len(),
            };
            Ok((series, echo))
        }
        (None, true) => {
            let walk_k = source.walk_k.unwrap_or(default_walk_k);
            let params = WalkParams {
                start_price: source.start_price,
                step_ratio: walk_k,
                p_up: source.p_up,
                n_steps: source.steps,
                seed: source.seed,
            };
            let series = synth_random_walk(&params).map_err(|e| CliFailure::usage(e.to_string()))?;
            let echo = SourceEcho::Synthetic {
                seed: source.seed,
                steps: source.steps,
                start_price: source.start_price,
                p_up: source.p_up,
                walk_k,
            };
            Ok((series, echo))
        }
        _ => Err(CliFailure::usage(
            "specify exactly one candle source: --cache PATH or --synthetic",
        )),
    }
}

fn echo_config<T: Serialize>(config: &T) {
    println!(
        "config: {}",
        serde_json::to_string(config).expect("config serializes")
    );
}

// ---------------------------------------------------------------- fetch ---

#[derive(Debug, Serialize)]
struct FetchConfigEcho {
    symbol: String,
    interval: &'static str,
    start: String,
    end: String,
    base_url: String,
}

pub fn cmd_fetch(argv: &[String], args: FetchArgs) -> Result<(), CliFailure> {
    let start_ms = parse_iso_ms(&args.start)?;
    let end_ms = parse_iso_ms(&args.end)?;
    if end_ms <= start_ms {
        return Err(CliFailure::usage("--end must be after --start"));
    }
    let base_url = args
        .base_url
        .or_else(|| std::env::var(BASE_URL_ENV).ok())
        .unwrap_or_else(|| DEFAULT_BASE_URL.to_string());

    let config = FetchConfigEcho {
        symbol: args.symbol.clone(),
        interval: "1m",
        start: args.start.clone(),
        end: args.end.clone(),
        base_url: base_url.clone(),
    };
    echo_config(&config);

    let existing = if args.cache.exists() {
        let mut series = load_cache(&args.cache)?;
        series.symbol = args.symbol.clone();
        series
    } else {
        CandleSeries::new(args.symbol.clone(), Vec::new()).expect("empty series")
    };
    let before = existing.len();

    let client = KlineClient::new(base_url);
    let outcome = client.fetch_klines_partial(&args.symbol, "1m", start_ms, end_ms);
    let merged = merge_series(&existing, &outcome.series)?;

    if let Some(parent) = args.cache.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    store_cache(&merged, &args.cache)?;
    write_sidecar(argv, &[], &args.cache)?;

    let gaps = validate_series(&merged)?;
    println!(
        "fetched {} candles ({} new) -> {}",
        outcome.series.len(),
        merged.len() - before,
        args.cache.display()
    );
    println!("cache now holds {} candles, {} gap(s)", merged.len(), gaps.len());
    for gap in gaps.iter().take(5) {
        println!("  gap at {}: {} missing bar(s)", gap.gap_start_ms, gap.missing_bars);
    }
    if gaps.len() > 5 {
        println!("  ... and {} more", gaps.len() - 5);
    }

    match outcome.error {
        Some(err) => Err(CliFailure::runtime(format!(
            "fetch stopped early, partial progress kept in cache: {err}"
        ))),
        None => Ok(()),
    }
}

// ------------------------------------------------------------- backtest ---

#[derive(Debug, Serialize)]
struct BacktestConfigEcho {
    source: SourceEcho,
    strategy: &'static str,
    grid_size: f64,
    n_above: usize,
    n_below: usize,
    fee_rate: f64,
    principal: f64,
    max_fills_per_candle: Option<u32>,
    curve_stride: usize,
}

#[derive(Debug, Serialize)]
struct BacktestOutput {
    config: BacktestConfigEcho,
    report: BacktestReport,
}

fn strategy_name(strategy: StrategyArg) -> &'static str {
    match strategy {
        StrategyArg::Dgt => "dgt",
        StrategyArg::Traditional => "traditional",
        StrategyArg::Buyhold => "buyhold",
    }
}

fn report_csv_row(k: Option<f64>, half: Option<usize>, report: &BacktestReport) -> String {
    let fmt_k = k.map(|v| v.to_string()).unwrap_or_default();
    let fmt_h = half.map(|v| v.to_string()).unwrap_or_default();
    format!(
        "k,half,irr,mdd,trades,resets,final_equity\n{},{},{},{},{},{},{}\n",
        fmt_k, fmt_h, report.irr, report.mdd, report.trade_count, report.reset_count, report.final_equity
    )
}

fn print_report(name: &str, report: &BacktestReport) {
    println!("strategy: {name}");
    println!("irr: {:.6} ({:.2}% per year)", report.irr, report.irr * 100.0);
    println!("mdd: {:.6}", report.mdd);
    println!("trades: {}", report.trade_count);
    println!("resets: {}", report.reset_count);
    println!("final_equity: {:.6}", report.final_equity);
    if let Some(t) = &report.termination {
        println!("terminated: {:?} at {}", t.direction, t.time_ms);
    }
}

pub fn cmd_backtest(argv: &[String], args: BacktestArgs) -> Result<(), CliFailure> {
    let (series, source_echo) = load_source(&args.source, args.k)?;
    let opts = ReplayOptions {
        curve_stride: args.stride.max(1),
    };

    let (n_above, n_below) = match (args.n_above, args.n_below) {
        (None, None) => (args.half, args.half),
        (above, below) => {
            if args.strategy == StrategyArg::Dgt {
                return Err(CliFailure::usage(
                    "--n-above/--n-below apply to the traditional grid; the dynamic grid is symmetric (use --half)",
                ));
            }
            (above.unwrap_or(args.half), below.unwrap_or(args.half))
        }
    };

    let report = match args.strategy {
        StrategyArg::Buyhold => run_buy_and_hold(&series, args.principal, args.fee, &opts)?,
        strategy => {
            let mut spec = GridSpec::new(args.k, n_above, n_below, args.fee, args.principal)
                .map_err(|e| CliFailure::usage(e.to_string()))?;
            spec.max_fills_per_candle = args.max_fills_per_candle;
            let kind = match strategy {
                StrategyArg::Traditional => StrategyKind::Traditional,
                _ => StrategyKind::Dgt,
            };
            run_backtest(&series, &spec, kind, &opts)?
        }
    };

    let config = BacktestConfigEcho {
        source: source_echo,
        strategy: strategy_name(args.strategy),
        grid_size: args.k,
        n_above,
        n_below,
        fee_rate: args.fee,
        principal: args.principal,
        max_fills_per_candle: args.max_fills_per_candle,
        curve_stride: opts.curve_stride,
    };
    echo_config(&config);
    print_report(strategy_name(args.strategy), &report);

    if let Some(out) = &args.out {
        let body = match args.format {
            OutputFormat::Json => {
                let output = BacktestOutput { config, report };
                serde_json::to_string_pretty(&output).expect("output serializes") + "\n"
            }
            OutputFormat::Csv => {
                let grid = args.strategy != StrategyArg::Buyhold;
                report_csv_row(
                    grid.then_some(args.k),
                    grid.then_some(args.half),
                    &report,
                )
            }
        };
        write_output(out, &body)?;
        let inputs: Vec<&Path> = args.source.cache.iter().map(PathBuf::as_path).collect();
        write_sidecar(argv, &inputs, out)?;
        println!("report written to {}", out.display());
    }
    Ok(())
}

// ---------------------------------------------------------------- sweep ---

#[derive(Debug, Serialize)]
struct SweepConfigEcho {
    source: SourceEcho,
    strategy: &'static str,
    k_list: Vec<f64>,
    half_list: Vec<usize>,
    fee_rate: f64,
    principal: f64,
    jobs: Option<usize>,
    curve_stride: usize,
}

#[derive(Debug, Serialize)]
struct SweepOutput {
    config: SweepConfigEcho,
    sweep: crate::backtest::SweepGrid,
}

pub fn cmd_sweep(argv: &[String], args: SweepArgs) -> Result<(), CliFailure> {
    let default_walk_k = args.k_list.first().copied().unwrap_or(0.01);
    let (series, source_echo) = load_source(&args.source, default_walk_k)?;
    let kind = match args.strategy {
        StrategyArg::Dgt => StrategyKind::Dgt,
        StrategyArg::Traditional => StrategyKind::Traditional,
        StrategyArg::Buyhold => {
            return Err(CliFailure::usage("sweep applies to grid strategies, not buyhold"))
        }
    };
    let opts = ReplayOptions {
        curve_stride: args.stride.max(1),
    };
    let sweep = run_sweep(
        &series,
        &args.k_list,
        &args.half_list,
        args.principal,
        args.fee,
        kind,
        &opts,
        args.jobs,
    )
    .map_err(|e| match e {
        crate::backtest::BacktestError::BadSweepInput(msg) => CliFailure::usage(msg),
        crate::backtest::BacktestError::Engine(e) => CliFailure::usage(e.to_string()),
        other => CliFailure::runtime(other.to_string()),
    })?;

    let config = SweepConfigEcho {
        source: source_echo,
        strategy: strategy_name(args.strategy),
        k_list: args.k_list.clone(),
        half_list: args.half_list.clone(),
        fee_rate: args.fee,
        principal: args.principal,
        jobs: args.jobs,
        curve_stride: opts.curve_stride,
    };
    echo_config(&config);
    println!("{} cells", sweep.cells.len());
    if let Some(best) = sweep.best_by_irr() {
        println!(
            "best cell by irr: k={} half={} irr={:.6} mdd={:.6}",
            best.grid_size, best.half, best.report.irr, best.report.mdd
        );
    }

    let body = match args.format {
        OutputFormat::Csv => sweep_to_csv(&sweep),
        OutputFormat::Json => {
            let output = SweepOutput { config, sweep };
            serde_json::to_string_pretty(&output).expect("output serializes") + "\n"
        }
    };
    write_output(&args.out, &body)?;
    let inputs: Vec<&Path> = args.source.cache.iter().map(PathBuf::as_path).collect();
    write_sidecar(argv, &inputs, &args.out)?;
    println!("sweep written to {}", args.out.display());
    Ok(())
}

// ------------------------------------------------------------ verify-ev ---

#[derive(Debug, Serialize)]
struct VerifyEvConfigEcho {
    n_list: Vec<u32>,
    trials: u64,
    seed: u64,
    principal: f64,
}

#[derive(Debug, Serialize)]
struct VerifyEvRow {
    n: u32,
    profit_upper: f64,
    loss_lower: f64,
    linear_ev: f64,
    required_arbitrages: f64,
    expected_crossings: f64,
    first_passage: WalkStats,
    grid_ev: WalkStats,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct VerifyEvOutput {
    config: VerifyEvConfigEcho,
    rows: Vec<VerifyEvRow>,
}

pub fn cmd_verify_ev(argv: &[String], args: VerifyEvArgs) -> Result<(), CliFailure> {
    if args.n_list.is_empty() {
        return Err(CliFailure::usage("--n-list must not be empty"));
    }
    for &n in &args.n_list {
        if n < 2 || n % 2 != 0 {
            return Err(CliFailure::usage(format!(
                "grid counts must be even and >= 2, got {n}"
            )));
        }
    }
    if args.trials == 0 {
        return Err(CliFailure::usage("--trials must be >= 1"));
    }
    let config = VerifyEvConfigEcho {
        n_list: args.n_list.clone(),
        trials: args.trials,
        seed: args.seed,
        principal: args.principal,
    };
    echo_config(&config);

    println!(
        "{:>4} {:>12} {:>12} {:>12} {:>8} {:>8} {:>22} {:>22} {:>7}",
        "n", "P_u", "L_l", "E(G)", "req_arb", "E_0", "mc_steps (se)", "mc_pnl (se)", "result"
    );
    let mut rows = Vec::with_capacity(args.n_list.len());
    let mut all_pass = true;
    for &n in &args.n_list {
        let m = args.principal;
        let p_u = profit_upper(m, n)?;
        let l_l = loss_lower(m, n)?;
        let ev = linear_ev(m, n)?;
        let req = required_arbitrages(n)?;
        let e0 = expected_crossings(n)?;
        let first_passage = mc_first_passage(n, args.trials, args.seed)?;
        let theory = TheoryParams::new(n, m, 0.01, 0.0)?;
        let grid_ev = mc_grid_ev(&theory, args.trials, args.seed)?;

        let steps_ok =
            (first_passage.mean_steps - e0).abs() <= 3.0 * first_passage.std_error;
        let pnl_ok = grid_ev.mean_pnl.abs() <= 3.0 * grid_ev.std_error;
        let pass = steps_ok && pnl_ok;
        all_pass &= pass;

        println!(
            "{:>4} {:>12.2} {:>12.2} {:>12.2} {:>8.1} {:>8.1} {:>14.4} ({:>6.4}) {:>13.4} ({:>7.4}) {:>7}",
            n,
            p_u,
            l_l,
            ev,
            req,
            e0,
            first_passage.mean_steps,
            first_passage.std_error,
            grid_ev.mean_pnl,
            grid_ev.std_error,
            if pass { "PASS" } else { "FAIL" }
        );
        rows.push(VerifyEvRow {
            n,
            profit_upper: p_u,
            loss_lower: l_l,
            linear_ev: ev,
            required_arbitrages: req,
            expected_crossings: e0,
            first_passage,
            grid_ev,
            pass,
        });
    }

    if let Some(out) = &args.out {
        let output = VerifyEvOutput { config, rows };
        write_output(
            out,
            &(serde_json::to_string_pretty(&output).expect("output serializes") + "\n"),
        )?;
        write_sidecar(argv, &[], out)?;
        println!("report written to {}", out.display());
    }

    if all_pass {
        println!("all checks passed");
        Ok(())
    } else {
        if args.trials < 10_000 {
            println!(
                "note: {} trials may be insufficient for a stable 3-standard-error check; try --trials 100000",
                args.trials
            );
        }
        Err(CliFailure::runtime("one or more checks failed"))
    }
}

// -------------------------------------------------------------- compare ---

#[derive(Debug, Serialize)]
struct CompareConfigEcho {
    source: SourceEcho,
    grid_size: f64,
    half: usize,
    fee_rate: f64,
    principal: f64,
    lower: f64,
    upper: f64,
    bound_grids: usize,
}

#[derive(Debug, Serialize)]
struct CompareRow {
    strategy: String,
    irr: f64,
    mdd: f64,
    final_equity: f64,
    trades: u64,
    resets: u64,
}

#[derive(Debug, Serialize)]
struct CompareOutput {
    config: CompareConfigEcho,
    rows: Vec<CompareRow>,
}

pub fn cmd_compare(argv: &[String], args: CompareArgs) -> Result<(), CliFailure> {
    let (series, source_echo) = load_source(&args.source, args.k)?;
    let closes = series.closes_f64();
    let first_close = closes[0];
    let min_close = closes.iter().copied().fold(f64::INFINITY, f64::min);
    let max_close = closes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lower = args.lower.unwrap_or(min_close * 0.99);
    let upper = args.upper.unwrap_or(max_close * 1.01);
    if !(lower < first_close && first_close < upper) {
        return Err(CliFailure::usage(format!(
            "bounds must contain the first close: lower {lower} < close {first_close} < upper {upper}"
        )));
    }

    let opts = ReplayOptions::default();
    let spec = GridSpec::symmetric(args.k, args.half, args.fee, args.principal)
        .map_err(|e| CliFailure::usage(e.to_string()))?;
    let dgt = run_backtest(&series, &spec, StrategyKind::Dgt, &opts)?;
    let hold = run_buy_and_hold(&series, args.principal, args.fee, &opts)?;
    let bound = run_fixed_bound_grid(
        &series,
        lower,
        upper,
        args.bound_grids,
        args.principal,
        args.fee,
        &opts,
    )?;

    let config = CompareConfigEcho {
        source: source_echo,
        grid_size: args.k,
        half: args.half,
        fee_rate: args.fee,
        principal: args.principal,
        lower,
        upper,
        bound_grids: args.bound_grids,
    };
    echo_config(&config);

    let rows = vec![
        ("dgt", &dgt),
        ("buy_and_hold", &hold),
        ("fixed_bound_grid", &bound),
    ];
    println!(
        "{:<18} {:>12} {:>12} {:>14} {:>8} {:>7}",
        "strategy", "irr", "mdd", "final_equity", "trades", "resets"
    );
    let mut out_rows = Vec::new();
    for (name, report) in rows {
        println!(
            "{:<18} {:>12.6} {:>12.6} {:>14.4} {:>8} {:>7}",
            name, report.irr, report.mdd, report.final_equity, report.trade_count, report.reset_count
        );
        out_rows.push(CompareRow {
            strategy: name.to_string(),
            irr: report.irr,
            mdd: report.mdd,
            final_equity: report.final_equity,
            trades: report.trade_count,
            resets: report.reset_count,
        });
    }

    if let Some(out) = &args.out {
        let body = match args.format {
            OutputFormat::Json => {
                let output = CompareOutput { config, rows: out_rows };
                serde_json::to_string_pretty(&output).expect("output serializes") + "\n"
            }
            OutputFormat::Csv => {
                let mut body = String::from("strategy,irr,mdd,final_equity,trades,resets\n");
                for row in &out_rows {
                    body.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        row.strategy, row.irr, row.mdd, row.final_equity, row.trades, row.resets
                    ));
                }
                body
            }
        };
        write_output(out, &body)?;
        let inputs: Vec<&Path> = args.source.cache.iter().map(PathBuf::as_path).collect();
        write_sidecar(argv, &inputs, out)?;
        println!("comparison written to {}", out.display());
    }
    Ok(())
}
