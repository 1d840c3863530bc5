//! Config files whose keys are the long flag names (`min-area`, or
//! `min_area`). Values are spliced into argv ahead of the user's own
//! arguments, and a flag given on the command line always wins, so the
//! precedence is defaults < file < flags.
//!
//! Top-level keys apply to the global flags and to whichever subcommand is
//! running; a table named after a subcommand applies to that subcommand only.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Arg, ArgAction, Command};
use serde_json::{Map, Value};

const GLOBAL_WITH_VALUE: [&str; 3] = ["--threads", "--seed", "--config"];

pub fn merge_config(cmd: &Command, argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let args: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let Some(path) = find_config(&args) else {
        return Ok(argv);
    };
    let Some(sub_pos) = find_subcommand(&args) else {
        return Ok(argv);
    };
    let Some(sub) = cmd.find_subcommand(&args[sub_pos]) else {
        return Ok(argv);
    };
    let table = load(Path::new(&path))?;
    let user = &args[1..];

    let mut global = Vec::new();
    let mut local = Vec::new();
    for (key, value) in &table {
        if let Some(section) = cmd.find_subcommand(key) {
            let Value::Object(inner) = value else {
                bail!("config: `{key}` must be a table");
            };
            if section.get_name() != sub.get_name() {
                continue;
            }
            for (k, v) in inner {
                let arg = find_long(sub, k)
                    .ok_or_else(|| anyhow!("config: `{key}` has no flag `--{}`", normalize(k)))?;
                splice(&mut local, arg, v, user)?;
            }
        } else if let Some(arg) = find_long(cmd, key) {
            splice(&mut global, arg, value, user)?;
        } else if let Some(arg) = find_long(sub, key) {
            splice(&mut local, arg, value, user)?;
        } else if !cmd.get_subcommands().any(|s| find_long(s, key).is_some()) {
            bail!("config: unknown key `{key}`");
        }
    }

    let mut out: Vec<OsString> = Vec::with_capacity(argv.len() + global.len() + local.len());
    out.extend(argv[..sub_pos].iter().cloned());
    out.extend(global.into_iter().map(OsString::from));
    out.push(argv[sub_pos].clone());
    out.extend(local.into_iter().map(OsString::from));
    out.extend(argv[sub_pos + 1..].iter().cloned());
    Ok(out)
}

fn find_config(args: &[String]) -> Option<String> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--" {
            break;
        }
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

fn find_subcommand(args: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if GLOBAL_WITH_VALUE.contains(&a.as_str()) {
            i += 2;
            continue;
        }
        if !a.starts_with('-') {
            return Some(i);
        }
        i += 1;
    }
    None
}

fn normalize(key: &str) -> String {
    key.replace('_', "-")
}

fn find_long<'a>(cmd: &'a Command, key: &str) -> Option<&'a Arg> {
    let key = normalize(key);
    cmd.get_arguments()
        .find(|a| a.get_long() == Some(key.as_str()))
}

fn given(arg: &Arg, user: &[String]) -> bool {
    let long = arg.get_long().map(|l| format!("--{l}"));
    let short = arg.get_short().map(|c| format!("-{c}"));
    user.iter().any(|u| {
        long.as_deref()
            .is_some_and(|l| u == l || u.strip_prefix(l).is_some_and(|r| r.starts_with('=')))
            || short.as_deref() == Some(u.as_str())
    })
}

fn splice(out: &mut Vec<String>, arg: &Arg, value: &Value, user: &[String]) -> Result<()> {
    if given(arg, user) {
        return Ok(());
    }
    let long = arg.get_long().expect("looked up by long name");
    if long == "config" {
        bail!("config: `config` cannot be set from a config file");
    }
    push(out, arg, long, value)
}

fn push(out: &mut Vec<String>, arg: &Arg, long: &str, value: &Value) -> Result<()> {
    let is_switch = matches!(arg.get_action(), ArgAction::SetTrue);
    match value {
        Value::Bool(true) if is_switch => out.push(format!("--{long}")),
        Value::Bool(false) if is_switch => {}
        Value::Bool(b) => out.push(format!("--{long}={b}")),
        Value::Number(n) => out.push(format!("--{long}={n}")),
        Value::String(s) => out.push(format!("--{long}={s}")),
        Value::Array(items) => {
            for item in items {
                push(out, arg, long, item)?;
            }
        }
        other => bail!("config: unsupported value for `{long}`: {other}"),
    }
    Ok(())
}

fn load(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let value = if is_json {
        serde_json::from_str(&text)
            .with_context(|| format!("invalid JSON in {}", path.display()))?
    } else {
        let t: toml::Value =
            toml::from_str(&text).with_context(|| format!("invalid TOML in {}", path.display()))?;
        from_toml(t)
    };
    match value {
        Value::Object(m) => Ok(m),
        _ => bail!("config {} must be a table", path.display()),
    }
}

fn from_toml(v: toml::Value) -> Value {
    match v {
        toml::Value::String(s) => Value::String(s),
        toml::Value::Integer(i) => Value::from(i),
        toml::Value::Float(f) => Value::from(f),
        toml::Value::Boolean(b) => Value::Bool(b),
        toml::Value::Datetime(d) => Value::String(d.to_string()),
        toml::Value::Array(a) => Value::Array(a.into_iter().map(from_toml).collect()),
        toml::Value::Table(t) => {
            Value::Object(t.into_iter().map(|(k, v)| (k, from_toml(v))).collect())
        }
    }
}
