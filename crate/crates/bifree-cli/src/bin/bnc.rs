//! Bi-non-crossing partition utilities.

use std::process::ExitCode;

use bifree::bnc::{enumerate_bnc, enumerate_bnc_prime, enumerate_bnc_s, enumerate_bnc_t, BncPartition, ChiShape, SClass, Side, TClass};
use bifree::mobius::mobius;
use bifree_cli::{CliError, EXIT_ERROR};
use clap::{Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "bnc", version, about = "Enumerate bi-non-crossing partitions and evaluate their Möbius function")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// All partitions in BNC(χ), one per line.
    Enum {
        /// Shape as a word in l and r, e.g. llrlr.
        #[arg(long)]
        shape: String,
        #[arg(long)]
        json: bool,
    },
    /// One of the structured families: T_e, T_o, T_o', S_e, S_o, S_o0, S_or, S_ol, S_olr, prime_l, prime_r.
    Family {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: usize,
        /// Right-side size (unused by prime_l / prime_r).
        #[arg(long, default_value_t = 0)]
        m: usize,
        #[arg(long)]
        json: bool,
    },
    /// μ_BNC(π, σ), with blocks written as "{1,3},{2}" or "1 3|2".
    Mobius {
        #[arg(long)]
        shape: String,
        #[arg(long)]
        pi: String,
        #[arg(long)]
        sigma: String,
    },
}

fn family(kind: &str, n: usize, m: usize) -> Result<Vec<BncPartition>, CliError> {
    let bad = || CliError::Config(format!("unknown family {kind:?}; use T_e, T_o, T_o', S_e, S_o, S_o0, S_or, S_ol, S_olr, prime_l or prime_r"));
    match kind {
        "prime_l" => Ok(enumerate_bnc_prime(Side::Left, n)),
        "prime_r" => Ok(enumerate_bnc_prime(Side::Right, n)),
        _ => {
            let (head, class) = kind.split_once('_').ok_or_else(bad)?;
            match head {
                "T" => Ok(enumerate_bnc_t(n, m, TClass::parse(class).ok_or_else(bad)?)?),
                "S" => Ok(enumerate_bnc_s(n, m, SClass::parse(class).ok_or_else(bad)?)?),
                _ => Err(bad()),
            }
        }
    }
}

fn print(shape: &str, parts: &[BncPartition], json: bool) -> Result<(), CliError> {
    if json {
        let list: Vec<_> = parts.iter().map(|p| p.labelled()).collect();
        let v = json!({ "shape": shape, "count": parts.len(), "partitions": list });
        print!("{}", bifree_cli::report::to_json(&v)?);
    } else {
        for p in parts {
            println!("{p}");
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Enum { shape, json } => {
            let s = ChiShape::parse(&shape)?;
            print(&s.to_string(), &enumerate_bnc(&s)?, json)
        }
        Cmd::Family { kind, n, m, json } => {
            let parts = family(&kind, n, m)?;
            let shape = parts.first().map(|p| p.shape().to_string()).unwrap_or_default();
            print(&shape, &parts, json)
        }
        Cmd::Mobius { shape, pi, sigma } => {
            let s = ChiShape::parse(&shape)?;
            let p = BncPartition::parse(s.clone(), &pi)?;
            let q = BncPartition::parse(s, &sigma)?;
            println!("{}", mobius(&p, &q)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bnc: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
