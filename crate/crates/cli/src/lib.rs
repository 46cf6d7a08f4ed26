//! Library behind the `pcurve` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod bench;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod sweep;

pub use error::{CliError, CliResult};

use args::{Cli, Command};

/// Runs a parsed command line and returns the text to print.
pub fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Gen(a) => {
            let dir = commands::cmd_gen(a)?;
            Ok(format!("dataset written to {}", dir.display()))
        }
        Command::Fit(a) => {
            let s = commands::cmd_fit(a)?;
            Ok(format!(
                "fit converged after {} iterations, objective {}; outputs in {}",
                s.manifest.iterations,
                output::fmt_opt(s.manifest.objective_final),
                s.out.display()
            ))
        }
        Command::Seriate(a) => {
            let s = commands::cmd_seriate(a)?;
            Ok(format!(
                "{} kendall error {} (raw {}, up to reversal {}); outputs in {}",
                s.metrics.method,
                output::fmt_opt(s.metrics.kendall_error),
                output::fmt_opt(s.metrics.kendall_error_raw),
                output::fmt_opt(s.metrics.kendall_error_up_to_reversal),
                s.out.display()
            ))
        }
        Command::Sweep(a) => {
            let o = sweep::cmd_sweep(a)?;
            let mut text = String::from("n\tmethod\tbeta\th\tsigma\tmean_error\tfailures\n");
            for c in &o.cells {
                text.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                    c.cell.n,
                    c.cell.method.name(),
                    output::fmt_opt(c.cell.beta),
                    output::fmt_opt(c.cell.h),
                    output::fmt_opt(c.cell.sigma),
                    output::fmt_opt(c.mean_error),
                    c.failures
                ));
            }
            text.push_str(&format!("{} records written to {}", o.records.len(), o.out.display()));
            Ok(text)
        }
        Command::Bench(a) => {
            let r = bench::cmd_bench(a)?;
            let mut text = format!("{} N={} atoms={}\n", r.model, r.n, r.atoms);
            for t in &r.timings {
                text.push_str(&format!("{:<16}{:>12.3} ms  ({} runs)\n", t.name, t.mean_ms, t.runs));
            }
            Ok(text.trim_end().to_string())
        }
    }
}
