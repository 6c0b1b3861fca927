mod bundle;
mod config;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kslab::energy::{energy_sweep, Region};

use crate::bundle::{write_bundle, SpaceInfo, Summary};
use crate::config::{ExperimentConfig, Suite};
use crate::suites::Context;

#[derive(Parser)]
#[command(name = "kslab", version, about = "Energy and Dirichlet-form diagnostics on measured point clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the space and print its summary as JSON.
    Space(Common),
    /// Print the energy sweep of the built-in test fields as CSV.
    Sweep(Common),
    /// Run one suite and print the result table.
    Check(Common),
    /// Run the configured suites and write a result bundle.
    Run(Common),
    /// Print the table of an existing bundle.
    Report {
        /// Bundle directory holding summary.json.
        dir: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    suite: Option<Suite>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = ExperimentConfig::load(&self.config).map_err(Failure::Config)?;
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(s) = self.suite {
            cfg.suite = s;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        cfg.validate().map_err(Failure::Config)?;
        Ok(cfg)
    }

    fn context(&self) -> Result<Context, Failure> {
        Context::new(self.load()?).map_err(Failure::Config)
    }
}

fn execute(cfg: ExperimentConfig, ctx: &Context, write: bool) -> Result<bool, Failure> {
    let (summary, files) = ctx.run(&cfg.suite.expand());
    if write {
        let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("kslab-out"));
        write_bundle(&dir, &summary, &files).map_err(Failure::Runtime)?;
        eprintln!("bundle written to {}", dir.display());
    }
    print!("{}", summary.table());
    Ok(summary.pass)
}

fn dispatch(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Space(c) => {
            let cfg = c.load()?;
            let cloud = cfg.build_space().map_err(Failure::Config)?;
            println!("{}", serde_json::to_string_pretty(&SpaceInfo::of(&cfg.space, &cloud)).expect("serializes"));
            Ok(true)
        }
        Command::Sweep(c) => {
            let ctx = c.context()?;
            let mut out = std::io::stdout().lock();
            for (name, f) in ctx.fields() {
                let sw = energy_sweep(ctx.cloud(), f, ctx.walk_dim(), &Region::All, ctx.grid())
                    .map_err(|e| Failure::Runtime(e.to_string()))?;
                use std::io::Write;
                writeln!(out, "# field {name}").map_err(|e| Failure::Runtime(e.to_string()))?;
                sw.write_csv(&mut out).map_err(|e| Failure::Runtime(e.to_string()))?;
            }
            Ok(true)
        }
        Command::Check(c) => {
            if c.suite.is_none() {
                return Err(Failure::Config("check needs --suite".into()));
            }
            let cfg = c.load()?;
            let write = cfg.out.is_some() && c.out.is_some();
            let ctx = Context::new(cfg.clone()).map_err(Failure::Config)?;
            execute(cfg, &ctx, write)
        }
        Command::Run(c) => {
            let cfg = c.load()?;
            let ctx = Context::new(cfg.clone()).map_err(Failure::Config)?;
            execute(cfg, &ctx, true)
        }
        Command::Report { dir } => {
            let s = Summary::read(&dir).map_err(Failure::Runtime)?;
            print!("{}", s.table());
            Ok(s.pass)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
