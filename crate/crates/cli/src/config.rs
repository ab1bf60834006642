//! `key = value` config files, spliced into the argument list ahead of the
//! command-line flags so that flags win.

use clap::CommandFactory;
use std::collections::BTreeMap;
use std::path::Path;

use crate::Cli;

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("config line {}: expected `key = value`, got `{raw}`", lineno + 1));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("config line {}: empty key", lineno + 1));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

/// Removes `--config PATH` / `--config=PATH` and returns the path.
fn take_config_flag(args: &mut Vec<String>) -> Result<Option<String>, String> {
    let mut found = None;
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                return Err("--config needs a path".into());
            }
            found = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(p) = args[i].strip_prefix("--config=") {
            found = Some(p.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(found)
}

/// Rewrites `args` as `prog SUBCOMMAND <config flags> <remaining args>`.
pub fn expand_args(mut args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = take_config_flag(&mut args)? else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let entries = parse_config(&text)?;
    let cmd = Cli::command();
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    let Some(pos) = args.iter().skip(1).position(|a| names.contains(a)).map(|p| p + 1) else {
        return Ok(args);
    };
    let sub = cmd.find_subcommand(&args[pos]).expect("listed above");
    let globals: Vec<_> = cmd.get_arguments().filter(|a| a.is_global_set()).collect();
    let mut injected = Vec::new();
    for (key, value) in entries {
        let arg = sub
            .get_arguments()
            .chain(globals.iter().copied())
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| format!("config key `{key}` is not an option of `{}`", sub.get_name()))?;
        if arg.get_action().takes_values() {
            injected.push(format!("--{key}"));
            injected.push(value);
        } else {
            match value.as_str() {
                "true" => injected.push(format!("--{key}")),
                "false" => {}
                _ => return Err(format!("config key `{key}` is a switch; use true or false")),
            }
        }
    }
    let mut out: Vec<String> = args[..=pos].to_vec();
    out.extend(injected);
    out.extend(args[pos + 1..].iter().cloned());
    Ok(out)
}
