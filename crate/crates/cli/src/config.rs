//! Merging a JSON config file into the parsed command line.
//!
//! The file is a flat object keyed by option names as they appear in the
//! echoed configuration (`seed`, `n_projections`, `loss`, ...). A key is
//! applied unless the option was given on the command line; unknown keys are
//! errors.

use clap::parser::ValueSource;
use clap::ArgMatches;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::{Cli, CliError, Command};

fn explicit(id: &str, levels: &[&ArgMatches]) -> bool {
    levels.iter().any(|m| {
        m.ids().any(|i| i.as_str() == id) && m.value_source(id) == Some(ValueSource::CommandLine)
    })
}

fn merge<T: Serialize + DeserializeOwned>(
    target: &mut T,
    file: &mut Map<String, Value>,
    levels: &[&ArgMatches],
) -> Result<(), CliError> {
    let mut v = serde_json::to_value(&*target).expect("arguments serialize");
    let obj = v.as_object_mut().expect("arguments are a struct");
    let keys: Vec<String> = obj.keys().cloned().collect();
    for key in keys {
        if let Some(value) = file.remove(&key) {
            if !explicit(&key, levels) {
                obj.insert(key, value);
            }
        }
    }
    *target = serde_json::from_value(v).map_err(|e| CliError::usage(format!("config file: {e}")))?;
    Ok(())
}

/// Applies the config file (if any) and returns the fully resolved
/// configuration for echoing into outputs.
pub fn resolve(cli: &mut Cli, matches: &ArgMatches) -> Result<Value, CliError> {
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let mut file = match &cli.globals.config {
        None => Map::new(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err(CliError::usage(format!("{}: expected a JSON object", path.display()))),
                Err(e) => return Err(CliError::usage(format!("{}: {e}", path.display()))),
            }
        }
    };
    let levels = [matches, sub];
    merge(&mut cli.globals, &mut file, &levels)?;
    let args = match &mut cli.command {
        Command::Dist(a) => merge_echo(a, &mut file, &levels)?,
        Command::Flow(a) => merge_echo(a, &mut file, &levels)?,
        Command::Study(a) => merge_echo(a, &mut file, &levels)?,
        Command::Bench(a) => merge_echo(a, &mut file, &levels)?,
        Command::Sample(a) => merge_echo(a, &mut file, &levels)?,
    };
    if let Some(key) = file.keys().next() {
        return Err(CliError::usage(format!("config file: unknown option `{key}` for `{name}`")));
    }
    // The output directory is left out so that runs into different
    // directories produce identical files.
    let mut globals = serde_json::to_value(&cli.globals).expect("globals serialize");
    globals.as_object_mut().expect("globals are a struct").remove("out");
    Ok(json!({ "command": name, "globals": globals, "args": args }))
}

fn merge_echo<T: Serialize + DeserializeOwned>(
    a: &mut T,
    file: &mut Map<String, Value>,
    levels: &[&ArgMatches],
) -> Result<Value, CliError> {
    merge(a, file, levels)?;
    Ok(serde_json::to_value(&*a).expect("arguments serialize"))
}
