use std::path::PathBuf;

use clap::Args;
use toml::{Table, Value};
use wla_core::harness::ExperimentConfig;

use crate::CliError;

/// Configuration file plus command-line overrides. Later sources win:
/// file, then the named flags, then `--set` in order.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML experiment configuration.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Override any configuration key, e.g. `--set train.epochs=100`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    pub strategies: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub variants: Option<Vec<String>>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

/// Parse a right-hand side as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match doc.parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

pub fn set_key(table: &mut Table, key: &str, value: Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("malformed key `{key}`")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => return Err(CliError::Config(format!("`{p}` in `{key}` is not a section"))),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl ConfigArgs {
    pub fn table(&self) -> Result<Table, CliError> {
        let mut table = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                text.parse::<Table>().map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => Table::new(),
        };
        if let Some(s) = &self.seeds {
            let v = s.iter().map(|&x| i64::try_from(x).map(Value::Integer)).collect::<Result<Vec<_>, _>>();
            let v = v.map_err(|_| CliError::Config("seed out of range".into()))?;
            set_key(&mut table, "seeds", Value::Array(v))?;
        }
        let strings = |v: &[String]| Value::Array(v.iter().map(|s| Value::String(s.to_ascii_lowercase())).collect());
        if let Some(s) = &self.strategies {
            set_key(&mut table, "strategies", strings(s))?;
        }
        if let Some(v) = &self.variants {
            let canon: Vec<String> = v
                .iter()
                .map(|s| s.parse::<wla_core::recall::Adaptation>().map(|a| variant_key(a).to_string()))
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Config(e.to_string()))?;
            set_key(&mut table, "variants", strings(&canon))?;
        }
        if let Some(d) = &self.output_dir {
            set_key(&mut table, "output_dir", Value::String(d.display().to_string()))?;
        }
        for s in &self.sets {
            let (k, v) =
                s.split_once('=').ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{s}`")))?;
            set_key(&mut table, k.trim(), parse_value(v.trim()))?;
        }
        Ok(table)
    }

    pub fn load(&self) -> Result<ExperimentConfig, CliError> {
        let text = toml::to_string(&self.table()?).map_err(|e| CliError::Config(e.to_string()))?;
        ExperimentConfig::from_toml_str(&text).map_err(CliError::from)
    }
}

fn variant_key(a: wla_core::recall::Adaptation) -> &'static str {
    use wla_core::recall::Adaptation::*;
    match a {
        Weighted => "weighted",
        Uniform => "uniform",
        None => "none",
    }
}
