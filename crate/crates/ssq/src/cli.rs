//! Command-line front end.
//!
//! Three subcommands: `anova` fits a model to CSV data and prints the
//! table, `verify` runs the two-factor equivalence report, and `simulate`
//! sweeps randomly generated layouts. All numeric output — text and JSON —
//! is rounded to 12 significant digits, and JSON objects serialize with
//! sorted keys, so re-serializing parsed JSON output reproduces it byte for
//! byte. Exit codes: 0 success (and verdict pass), 1 domain failure or
//! failed verdict, 2 usage error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use crate::design::{build_design, Dataset};
use crate::error::{Error, Result};
use crate::formula::parse_formula;
use crate::numfmt::{fmt_g, round_sig};
use crate::simulate::{run_batch, SimConfig};
use crate::sstypes::{anova, AnovaTable, SsType};
use crate::twofactor::equivalence_report;

#[derive(Debug, Parser)]
#[command(
    name = "ssq",
    version,
    about = "Type I/II/III sums of squares for factor models, with independent cross-checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to CSV data and print an anova table
    Anova {
        /// CSV file with a header row
        #[arg(long)]
        data: PathBuf,
        /// Model formula, e.g. "y ~ A + B + A:B"
        #[arg(long)]
        formula: String,
        /// Sum-of-squares type: I, II, or III
        #[arg(long, default_value = "III")]
        r#type: SsType,
        /// Emit JSON instead of a text table
        #[arg(long)]
        json: bool,
    },
    /// Cross-check Type III against independent two-factor computations
    Verify {
        /// CSV file with a header row
        #[arg(long)]
        data: PathBuf,
        /// Formula naming the response and exactly two factors
        #[arg(long)]
        formula: String,
        /// Largest acceptable relative discrepancy between routes
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Emit JSON instead of the text report
        #[arg(long)]
        json: bool,
    },
    /// Sweep randomly generated two-factor layouts
    Simulate {
        /// Number of layouts to generate
        #[arg(long, default_value_t = 200)]
        runs: usize,
        /// Seed for the deterministic generator
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Probability that any given cell is emptied
        #[arg(long, default_value_t = 0.0)]
        empty_prob: f64,
        /// Largest acceptable relative discrepancy between routes
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Emit a JSON summary instead of per-run lines
        #[arg(long)]
        json: bool,
    },
}

/// Runs a parsed command, writing results to `out` and diagnostics to
/// `err_out`; returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err_out: &mut dyn Write) -> i32 {
    match dispatch(cli, out, err_out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err_out, "error: {e}");
            match e {
                Error::NotTwoFactor(_) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err_out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Anova {
            data,
            formula,
            r#type,
            json,
        } => cmd_anova(&data, &formula, r#type, json, out, err_out),
        Command::Verify {
            data,
            formula,
            tol,
            json,
        } => cmd_verify(&data, &formula, tol, json, out),
        Command::Simulate {
            runs,
            seed,
            empty_prob,
            tol,
            json,
        } => {
            let cfg = SimConfig {
                runs,
                seed,
                empty_prob,
                tolerance: tol,
                ..SimConfig::default()
            };
            cmd_simulate(&cfg, json, out)
        }
    }
}

fn load(path: &Path, formula: &str) -> Result<(crate::formula::TermList, Dataset)> {
    let model = parse_formula(formula)?;
    let names = model.factor_names();
    let data = Dataset::load_csv(path, model.response(), &names)?;
    Ok((model, data))
}

fn cmd_anova(
    path: &Path,
    formula: &str,
    ss_type: SsType,
    json: bool,
    out: &mut dyn Write,
    err_out: &mut dyn Write,
) -> Result<i32> {
    let (model, data) = load(path, formula)?;
    if !model.is_hierarchical() {
        let _ = writeln!(
            err_out,
            "warning: model `{model}` is not hierarchical; contained terms are missing"
        );
    }
    let design = build_design(&data, &model)?;
    let table = anova(&design, data.y(), ss_type)?;
    if json {
        writeln!(out, "{}", json_string(&table_json(&table))?)?;
    } else {
        render_table(out, &table)?;
    }
    Ok(0)
}

fn cmd_verify(
    path: &Path,
    formula: &str,
    tol: f64,
    json: bool,
    out: &mut dyn Write,
) -> Result<i32> {
    let model = parse_formula(formula)?;
    let names = model.factor_names();
    if names.len() != 2 {
        return Err(Error::NotTwoFactor(names.len()));
    }
    let data = Dataset::load_csv(path, model.response(), &names)?;
    let report = equivalence_report(&data, tol)?;
    if json {
        writeln!(out, "{}", json_string(&report)?)?;
    } else {
        writeln!(out, "{report}")?;
    }
    Ok(i32::from(!report.passed))
}

fn cmd_simulate(cfg: &SimConfig, json: bool, out: &mut dyn Write) -> Result<i32> {
    let summary = run_batch(cfg)?;
    if json {
        writeln!(out, "{}", json_string(&summary)?)?;
    } else {
        for r in &summary.records {
            let disc = r
                .max_rel_discrepancy
                .map_or_else(|| "-".to_string(), |d| format!("{d:.3e}"));
            writeln!(
                out,
                "run {:>4}: a={} b={} n={:>3} empty={} disc={} {}",
                r.index,
                r.a,
                r.b,
                r.n_obs,
                r.empty_cells,
                disc,
                if r.passed { "pass" } else { "FAIL" }
            )?;
        }
        writeln!(
            out,
            "runs={} passed={} failed={}",
            summary.runs, summary.passed, summary.failed
        )?;
        if let Some(w) = summary.worst_discrepancy {
            writeln!(out, "worst relative discrepancy = {w:.3e}")?;
        }
    }
    Ok(i32::from(summary.failed > 0))
}

#[derive(Serialize)]
struct RowJson {
    df: usize,
    f: Option<f64>,
    p: Option<f64>,
    ss: f64,
    term: String,
}

#[derive(Serialize)]
struct TableJson {
    dfe: usize,
    mse: Option<f64>,
    sse: f64,
    terms: Vec<RowJson>,
    r#type: String,
}

fn table_json(table: &AnovaTable) -> TableJson {
    TableJson {
        dfe: table.dfe,
        mse: table.mse(),
        sse: table.sse,
        terms: table
            .rows
            .iter()
            .map(|r| RowJson {
                df: r.df,
                f: r.f,
                p: r.p,
                ss: r.ss,
                term: r.term.to_string(),
            })
            .collect(),
        r#type: table.ss_type.to_string(),
    }
}

/// Serializes with every float rounded to 12 significant digits. Keys sort
/// alphabetically (serde_json's map is ordered), which is what makes the
/// output stable under a parse/re-serialize round trip.
fn json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_json(&mut v);
    Ok(serde_json::to_string_pretty(&v)?)
}

fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(r) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round_sig(x)))
                {
                    *v = Value::Number(r);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

fn render_table(out: &mut dyn Write, table: &AnovaTable) -> Result<()> {
    writeln!(out, "analysis of variance (type {})", table.ss_type)?;
    let mut rows: Vec<[String; 5]> = vec![[
        "term".into(),
        "ss".into(),
        "df".into(),
        "f".into(),
        "p".into(),
    ]];
    for r in &table.rows {
        rows.push([
            r.term.to_string(),
            fmt_g(r.ss),
            r.df.to_string(),
            r.f.map(fmt_g).unwrap_or_default(),
            r.p.map(fmt_g).unwrap_or_default(),
        ]);
    }
    rows.push([
        "residual".into(),
        fmt_g(table.sse),
        table.dfe.to_string(),
        String::new(),
        String::new(),
    ]);
    let widths: Vec<usize> = (0..5)
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    for row in &rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            line.push_str(&format!("{cell:<width$}", width = widths[c]));
            if c + 1 < 5 {
                line.push_str("  ");
            }
        }
        writeln!(out, "{}", line.trim_end())?;
    }
    if let Some(mse) = table.mse() {
        writeln!(out, "mse = {}", fmt_g(mse))?;
    }
    Ok(())
}
