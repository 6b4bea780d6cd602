mod config;
mod error;
mod output;
mod run;

use std::process::ExitCode;

use clap::Parser;

use config::{Layer, Mode, RunConfig};

fn execute(cfg: &RunConfig) -> error::Result<()> {
    match cfg.mode {
        Mode::Curve => {
            if let Some(dir) = &cfg.out {
                run::ensure_dir(dir)?;
            }
            run::run_curve(cfg)
        }
        Mode::Sweep => run::run_sweep(cfg),
        Mode::Validate => run::run_validate(cfg),
        Mode::Spectrum => run::run_spectrum(cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = RunConfig::resolve(Layer::parse()).and_then(|cfg| {
        log::debug!("{cfg:?}");
        execute(&cfg)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ionnm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
