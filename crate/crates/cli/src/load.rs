use std::path::Path;
use std::sync::Arc;

use tc_core::bundled;
use tc_core::eval::{EvalContext, EvalError, FiniteCarrier};
use tc_core::parser::{parse_carrier, parse_goal, ParseError};
use tc_core::registry::{LoadError, Registry};
use tc_core::resolver::Goal;
use tc_core::Limits;
use thiserror::Error;

use crate::Config;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("no bundled corpus file `{0}`")]
    UnknownBundle(String),
    #[error("{0}")]
    Load(#[from] LoadError),
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("carrier binding `{0}` is not of the form ATOM=CARRIER")]
    Binding(String),
    #[error("`{0}` is neither a carrier file nor a bundled carrier")]
    UnknownCarrier(String),
    #[error("{0}")]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Usage(String),
}

fn read(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_string(), source })
}

/// The registry named by `--corpus`, or the bundled default.
pub fn registry(config: &Config) -> Result<Registry, CliError> {
    if config.corpus.is_empty() {
        return Ok(bundled::default_registry()?);
    }
    let mut sources = Vec::new();
    for entry in &config.corpus {
        match entry.strip_prefix("bundled:") {
            Some(name) => {
                let (file, text) = bundled::CORPUS
                    .iter()
                    .find(|(file, _)| Path::new(file).file_stem().is_some_and(|s| s == name))
                    .ok_or_else(|| CliError::UnknownBundle(name.to_string()))?;
                sources.push((file.to_string(), text.to_string()));
            }
            None => sources.push((entry.clone(), read(entry)?)),
        }
    }
    Ok(Registry::from_sources(sources.iter().map(|(f, t)| (f.as_str(), t.as_str())))?)
}

pub fn limits(config: &Config) -> Limits {
    Limits { depth: config.depth, fuel: config.fuel, scalar_range: config.scalar_range, ..Limits::default() }
}

pub fn goal(text: &str) -> Result<Goal, CliError> {
    Ok(parse_goal(text)?)
}

fn carrier(given: &str) -> Result<Arc<FiniteCarrier>, CliError> {
    if Path::new(given).is_file() {
        return Ok(Arc::new(parse_carrier(given, &read(given)?)?));
    }
    match bundled::carrier(given) {
        Some(c) => Ok(c?),
        None => Err(CliError::UnknownCarrier(given.to_string())),
    }
}

/// Evaluation context with every `--carrier` binding applied.
pub fn context<'r>(config: &Config, reg: &'r Registry) -> Result<EvalContext<'r>, CliError> {
    let mut ctx = EvalContext::new(reg, limits(config));
    for b in &config.carrier {
        let (atom, given) = b
            .split_once('=')
            .filter(|(a, s)| !a.is_empty() && !s.is_empty())
            .ok_or_else(|| CliError::Binding(b.clone()))?;
        ctx = ctx.bind(atom, carrier(given)?);
    }
    Ok(ctx)
}
