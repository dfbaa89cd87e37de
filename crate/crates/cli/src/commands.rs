use std::collections::BTreeMap;
use std::path::Path;

use dilates_core::encode::{discretize_to_zp, encode_grid_to_intervals, pipeline_report, ChainReport};
use dilates_core::gap::{find_max_proper_gap, lambda_span_check, truncate_to_large_steps};
use dilates_core::inequalities::suites::{run_suite, SuiteConfig};
use dilates_core::rational::{format_decimal, format_exact, from_int, ratio, to_f64, Exact, Rational};
use dilates_core::search::{
    exact_min_dilate_sumset_capped, heuristic_min_dilate_sumset, sweep, MRule, Mode, SearchResult, SearchTask,
    SweepConfig,
};
use dilates_core::torus_grid::{
    box_grid_set, cube_bound, cube_sides, optimized_d3_bound, optimized_d3_sides, simplex_cell_count,
    simplex_construction, simplex_grid_set, GridSet,
};
use num_traits::{One, Signed};
use serde::Serialize;
use serde_json::json;

use crate::args::{BoxArgs, Cli, Command, GapAction, SearchArgs, SearchParams, Shape, SimplexArgs, SweepArgs, VerifyArgs};
use crate::cache::{write_atomic, FileCache, SEARCH_KIND};
use crate::error::{CliError, CliResult};
use crate::record::{now_ms, to_json_bytes, write_record, ExperimentRecord, Kind};

pub const CSV_HEADER: [&str; 8] = ["p", "lambda", "m", "alpha", "min_size", "min_over_p", "exact", "witness"];

pub fn run(cli: &Cli) -> CliResult<()> {
    let cache = FileCache::new(&cli.cache_dir);
    match &cli.command {
        Command::Construct { shape: Shape::Box(args) } => construct_box(args),
        Command::Construct { shape: Shape::Simplex(args) } => construct_simplex(args),
        Command::Verify(args) => verify(args),
        Command::Search(args) => search(args, &cache),
        Command::Sweep(args) => run_sweep(args, &cache),
        Command::Gap { action } => gap(action),
        Command::Report(out) => report(&out.out, &cache),
    }
}

fn emit(out: &Path, stem: &str, record: &ExperimentRecord, started: u128) -> CliResult<()> {
    write_record(out, stem, record, started)?;
    println!("{}", serde_json::to_string_pretty(&record.outputs)?);
    Ok(())
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    write_atomic(path, format!("{text}\n").as_bytes())?;
    Ok(())
}

/// Writes the grid, its interval encoding, the discretized set and the chain report.
fn write_chain_artifacts(out: &Path, stem: &str, grid: &GridSet, report: &ChainReport) -> CliResult<()> {
    let intervals = encode_grid_to_intervals(grid)?;
    let residues = discretize_to_zp(&intervals, report.p)?;
    write_text(&out.join(format!("{stem}.grid.txt")), &grid.to_string())?;
    write_text(&out.join(format!("{stem}.intervals.txt")), &intervals.to_string())?;
    write_text(&out.join(format!("{stem}.residues.txt")), &residues.to_string())?;
    write_atomic(&out.join(format!("{stem}.chain.json")), &to_json_bytes(report)?)?;
    Ok(())
}

fn chain_verdict(report: &ChainReport) -> CliResult<()> {
    if report.holds() {
        Ok(())
    } else {
        Err(CliError::assertion(format!(
            "measure chain violated: zp_le_torus={}, torus_le_grid={}, overflow_contained={}",
            report.zp_le_torus, report.torus_le_grid, report.overflow_contained
        )))
    }
}

fn construct_box(args: &BoxArgs) -> CliResult<()> {
    let started = now_ms();
    let gamma = &args.gamma;
    if !gamma.is_positive() || *gamma >= Rational::one() {
        return Err(CliError::usage(format!("gamma must lie in (0, 1), got {}", format_exact(gamma))));
    }
    if args.optimized && args.d != 3 {
        return Err(CliError::usage("--optimized needs --d 3"));
    }
    let sides = if args.optimized {
        optimized_d3_sides(gamma)
    } else {
        cube_sides(args.d, gamma)
    };
    let grid = box_grid_set(args.d, args.lambda, &sides)?;
    let bound = if args.optimized {
        optimized_d3_bound(to_f64(gamma))
    } else {
        cube_bound(args.d, to_f64(gamma))
    };
    let inputs = format!(
        "construct-box/1;d={};lambda={};gamma={};p={};optimized={}",
        args.d,
        args.lambda,
        format_exact(gamma),
        args.p,
        args.optimized
    );
    let grid_sides: Vec<Exact> = sides
        .iter()
        .map(|s| Exact(ratio(s.scaled_floor(args.lambda), args.lambda)))
        .collect();
    let mut outputs = json!({
        "d": args.d,
        "lambda": args.lambda,
        "gamma": format_exact(gamma),
        "p": args.p,
        "optimized": args.optimized,
        "grid_sides": grid_sides,
        "grid_cells": grid.len(),
        "grid_measure": Exact(grid.measure()),
        "projection_bound": format!("{bound:.12}"),
        "empty": grid.is_empty(),
    });
    let stem = "construct-box";
    if grid.is_empty() {
        eprintln!(
            "warning: the box has no grid cells at lambda = {} (every side must reach 2/lambda)",
            args.lambda
        );
        return emit(&args.out.out, stem, &ExperimentRecord::new(Kind::Construct, inputs, outputs), started);
    }
    if args.d < 2 {
        return Err(CliError::usage("the measure chain needs --d >= 2"));
    }
    let report = pipeline_report(&grid, args.p)?;
    outputs["chain"] = serde_json::to_value(&report)?;
    write_chain_artifacts(&args.out.out, stem, &grid, &report)?;
    emit(&args.out.out, stem, &ExperimentRecord::new(Kind::Construct, inputs, outputs), started)?;
    chain_verdict(&report)
}

fn construct_simplex(args: &SimplexArgs) -> CliResult<()> {
    let started = now_ms();
    let measures = simplex_construction(args.n)?;
    let half = ratio(1, 2);
    let mut outputs = json!({
        "n": args.n,
        "mu_b": Exact(measures.mu_b.clone()),
        "mu_cc": Exact(measures.mu_cc.clone()),
        "mu_b_below_half": measures.mu_b < half,
        "mu_cc_below_one": measures.mu_cc < from_int(1),
    });
    let mut inputs = format!("construct-simplex/1;n={}", args.n);
    let stem = "construct-simplex";
    let mut verdict = Ok(());
    if let (Some(lambda), Some(p)) = (args.lambda, args.p) {
        inputs.push_str(&format!(";lambda={lambda};p={p}"));
        outputs["lambda"] = json!(lambda);
        outputs["p"] = json!(p);
        outputs["grid_cells"] = json!(simplex_cell_count(args.n, lambda)?.to_string());
        let grid = simplex_grid_set(args.n, lambda)?;
        if grid.is_empty() {
            eprintln!("warning: the simplex has no grid cells at lambda = {lambda}");
        } else {
            let report = pipeline_report(&grid, p)?;
            write_chain_artifacts(&args.out.out, stem, &grid, &report)?;
            verdict = chain_verdict(&report);
            outputs["chain"] = serde_json::to_value(&report)?;
        }
    }
    emit(&args.out.out, stem, &ExperimentRecord::new(Kind::Construct, inputs, outputs), started)?;
    verdict
}

fn verify(args: &VerifyArgs) -> CliResult<()> {
    let started = now_ms();
    let config = SuiteConfig {
        modulus: args.p,
        cases: args.cases,
        seed: args.seed,
        lambda: args.lambda,
        l: args.l,
        k: args.k,
    };
    let summary = run_suite(args.suite, &config)?;
    let show = |x: Option<i64>| x.map_or("random".to_string(), |v| v.to_string());
    let inputs = format!(
        "verify/1;suite={};p={};cases={};seed={};lambda={};l={};k={}",
        args.suite,
        args.p,
        args.cases,
        args.seed,
        show(args.lambda),
        show(args.l.map(i64::from)),
        show(args.k.map(i64::from)),
    );
    let record = ExperimentRecord::new(Kind::Verify, inputs, serde_json::to_value(&summary)?);
    emit(&args.out.out, &format!("verify-{}", args.suite), &record, started)?;
    if summary.passed() {
        Ok(())
    } else {
        Err(CliError::assertion(format!(
            "{}: {} of {} cases violated",
            args.suite, summary.violations, summary.cases
        )))
    }
}

fn task_for(p: u64, lambda: i64, m: u64, params: &SearchParams) -> SearchTask {
    match params.mode {
        Mode::Exact => SearchTask::exact(p, lambda, m),
        Mode::Heuristic => SearchTask::heuristic(p, lambda, m, params.seed, params.budget),
    }
}

fn search(args: &SearchArgs, cache: &FileCache) -> CliResult<()> {
    let started = now_ms();
    let task = task_for(args.p, args.lambda, args.m, &args.params);
    let digest = task.digest();
    let result = match cache.load::<SearchResult>(SEARCH_KIND, &digest).filter(|r| r.task == task) {
        Some(hit) => {
            eprintln!("cache hit {digest}");
            hit
        }
        None => {
            let result = match task.mode {
                Mode::Exact => exact_min_dilate_sumset_capped(&task, args.params.exact_cap)?,
                Mode::Heuristic => heuristic_min_dilate_sumset(&task)?,
            };
            cache.store(SEARCH_KIND, &digest, &result)?;
            result
        }
    };
    let record = ExperimentRecord::new(Kind::Search, task.canonical_encoding(), serde_json::to_value(&result)?);
    emit(&args.out.out, "search", &record, started)
}

pub fn parse_m_rule(args: &SweepArgs) -> CliResult<MRule> {
    if let Some(range) = &args.m_range {
        let bad = || CliError::usage(format!("--m-range expects lo..hi, got {range:?}"));
        let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
        let lo = lo.trim().parse().map_err(|_| bad())?;
        let hi = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        return Ok(MRule::Range { lo, hi });
    }
    if let Some(alpha) = &args.alpha {
        if !alpha.is_positive() || *alpha > Rational::one() {
            return Err(CliError::usage("--alpha must lie in (0, 1]"));
        }
        return Ok(MRule::FractionCeil(alpha.clone()));
    }
    if let Some(m) = args.m {
        return Ok(MRule::Fixed(m));
    }
    Ok(MRule::UpToHalf)
}

fn m_rule_text(rule: &MRule) -> String {
    match rule {
        MRule::Range { lo, hi } => format!("range:{lo}..{hi}"),
        MRule::Fixed(m) => format!("fixed:{m}"),
        MRule::FractionCeil(alpha) => format!("alpha:{}", format_exact(alpha)),
        MRule::UpToHalf => "half".to_string(),
    }
}

#[derive(Serialize)]
struct SweepRow<'a> {
    p: u64,
    lambda: i64,
    m: u64,
    result: Option<&'a SearchResult>,
    error: Option<String>,
}

fn run_sweep(args: &SweepArgs, cache: &FileCache) -> CliResult<()> {
    let started = now_ms();
    let m_rule = parse_m_rule(args)?;
    let config = SweepConfig {
        p_list: args.p.clone(),
        lambda_list: args.lambda.clone(),
        m_rule: m_rule.clone(),
        mode: args.params.mode,
        seed: args.params.seed,
        budget: args.params.budget,
        exact_cap: args.params.exact_cap,
    };
    let join = |xs: Vec<String>| xs.join(",");
    let inputs = format!(
        "sweep/1;p={};lambda={};m={};mode={};seed={};budget={};exact_cap={}",
        join(args.p.iter().map(u64::to_string).collect()),
        join(args.lambda.iter().map(i64::to_string).collect()),
        m_rule_text(&m_rule),
        config.mode,
        config.seed,
        config.budget,
        config.exact_cap
    );
    let mut file_cache = cache.clone();
    let outcome = sweep(&config, &mut file_cache);
    let rows: Vec<SweepRow> = outcome
        .cells
        .iter()
        .map(|cell| SweepRow {
            p: cell.task.p,
            lambda: cell.task.lambda,
            m: cell.task.m,
            result: cell.outcome.as_ref().ok(),
            error: cell.outcome.as_ref().err().map(|e| e.to_string()),
        })
        .collect();
    let out = &args.out.out;
    let results: Vec<&SearchResult> = outcome.results().collect();
    write_atomic(&out.join("sweep.csv"), &csv_bytes(&results)?)?;
    let record = ExperimentRecord::new(Kind::Sweep, inputs, json!({ "cells": rows }));
    write_record(out, "sweep", &record, started)?;
    println!(
        "{} cells: {} computed, {} from cache, {} failed",
        outcome.cells.len(),
        outcome.computed,
        outcome.cache_hits,
        outcome.errors().count()
    );
    for (task, e) in outcome.errors() {
        eprintln!("error: p={} lambda={} m={}: {e}", task.p, task.lambda, task.m);
    }
    let first = outcome.errors().next().map(|(task, e)| (task.clone(), e.clone()));
    match first {
        Some((task, e)) => {
            let mut err = CliError::from(e);
            err.message = format!("p={} lambda={} m={}: {}", task.p, task.lambda, task.m, err.message);
            Err(err)
        }
        None => Ok(()),
    }
}

pub fn csv_bytes(results: &[&SearchResult]) -> CliResult<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_HEADER)?;
    for r in results {
        writer.write_record([
            r.task.p.to_string(),
            r.task.lambda.to_string(),
            r.task.m.to_string(),
            format_exact(&r.alpha()),
            r.min_size.to_string(),
            format_exact(&r.min_over_p()),
            r.exact.to_string(),
            r.witness.to_string(),
        ])?;
    }
    writer.into_inner().map_err(|e| CliError::from(e.into_error()))
}

/// Two whitespace-separated columns `alpha min_over_p`, one block per (p, λ, mode).
pub fn plot_bytes(results: &[&SearchResult]) -> Vec<u8> {
    let mut groups: BTreeMap<(u64, i64, bool), Vec<&SearchResult>> = BTreeMap::new();
    for r in results {
        groups.entry((r.task.p, r.task.lambda, r.exact)).or_default().push(r);
    }
    let mut text = String::new();
    for (i, ((p, lambda, exact), rows)) in groups.iter().enumerate() {
        if i > 0 {
            text.push_str("\n\n");
        }
        text.push_str(&format!("# p={p} lambda={lambda} exact={exact}\n# alpha min_over_p\n"));
        for r in rows {
            text.push_str(&format!("{} {}\n", format_decimal(&r.alpha()), format_decimal(&r.min_over_p())));
        }
    }
    text.into_bytes()
}

fn report(out: &Path, cache: &FileCache) -> CliResult<()> {
    let mut results: Vec<SearchResult> = cache.entries(SEARCH_KIND)?;
    results.sort_by(|a, b| {
        let key = |r: &SearchResult| (r.task.p, r.task.lambda, r.task.m, r.task.mode == Mode::Heuristic, r.task.seed, r.task.budget);
        key(a).cmp(&key(b))
    });
    let refs: Vec<&SearchResult> = results.iter().collect();
    write_atomic(&out.join("sweep.csv"), &csv_bytes(&refs)?)?;
    write_atomic(&out.join("plot.dat"), &plot_bytes(&refs))?;
    println!("{} cached results rendered to {}", refs.len(), out.display());
    Ok(())
}

fn gap(action: &GapAction) -> CliResult<()> {
    let started = now_ms();
    let (stem, inputs, outputs, out, verdict) = match action {
        GapAction::Find { set, d_max, out } => {
            let found = find_max_proper_gap(set, *d_max)?;
            let outputs = json!({
                "gap": found,
                "size": found.nominal_size().to_string(),
                "proper": found.is_proper()?,
                "elements": found.expand()?,
            });
            ("gap-find", format!("gap-find/1;set={set};d_max={d_max}"), outputs, out, Ok(()))
        }
        GapAction::Expand { gap, out } => {
            let elements = gap.expand()?;
            let outputs = json!({
                "gap": gap,
                "nominal_size": gap.nominal_size().to_string(),
                "size": elements.len(),
                "proper": gap.is_proper()?,
                "degenerate": gap.is_degenerate(),
                "elements": elements,
            });
            ("gap-expand", format!("gap-expand/1;gap={gap}"), outputs, out, Ok(()))
        }
        GapAction::Truncate { gap, lambda, out } => {
            let t = truncate_to_large_steps(gap, *lambda)?;
            let outputs = json!({
                "gap": gap,
                "lambda": lambda,
                "truncated": t.gap,
                "order": t.order,
                "kept": t.kept,
                "size": t.gap.expand()?.len(),
            });
            ("gap-truncate", format!("gap-truncate/1;gap={gap};lambda={lambda}"), outputs, out, Ok(()))
        }
        GapAction::Span { gap, lambda, d, out } => {
            let report = lambda_span_check(gap, *lambda, *d)?;
            let verdict = if report.contained {
                Ok(())
            } else {
                Err(CliError::assertion("lambda-span containment failed"))
            };
            let outputs = serde_json::to_value(&report)?;
            ("gap-span", format!("gap-span/1;gap={gap};lambda={lambda};d={d}"), outputs, out, verdict)
        }
    };
    emit(&out.out, stem, &ExperimentRecord::new(Kind::Gap, inputs, outputs), started)?;
    verdict
}
