//! Run configuration: one TOML table, dotted-key lookups, and flag
//! overrides layered on top.

use std::path::{Path, PathBuf};

use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("missing config key(s): {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("config key {key}: expected {expected}")]
    Type { key: String, expected: &'static str },
    #[error("cannot read config {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("bad override `{0}`: expected key=value")]
    Override(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub table: Table,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let read = |message: String| ConfigError::Read { path: path.to_path_buf(), message };
        let text = std::fs::read_to_string(path).map_err(|e| read(e.to_string()))?;
        let table = text.parse::<Table>().map_err(|e| read(e.to_string()))?;
        Ok(Config { table })
    }

    pub fn lookup(&self, key: &str) -> Option<&Value> {
        let mut parts = key.split('.');
        let mut cur = self.table.get(parts.next()?)?;
        for p in parts {
            cur = cur.as_table()?.get(p)?;
        }
        Some(cur)
    }

    /// Sets a dotted key, creating tables on the way.
    pub fn set(&mut self, key: &str, value: Value) {
        let parts: Vec<&str> = key.split('.').collect();
        let mut table = &mut self.table;
        for p in &parts[..parts.len() - 1] {
            let entry = table.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
            if !entry.is_table() {
                *entry = Value::Table(Table::new());
            }
            table = entry.as_table_mut().expect("just made a table");
        }
        table.insert(parts[parts.len() - 1].to_string(), value);
    }

    /// `key=value`; the value is read as a TOML literal when it parses as
    /// one, else taken as a string.
    pub fn apply_override(&mut self, item: &str) -> Result<(), ConfigError> {
        let (key, raw) = item.split_once('=').ok_or_else(|| ConfigError::Override(item.into()))?;
        let key = key.trim();
        if key.is_empty() || key.split('.').any(str::is_empty) {
            return Err(ConfigError::Override(item.into()));
        }
        self.set(key, literal(raw.trim()));
        Ok(())
    }

    /// Every key of `keys` absent from the config, reported together.
    pub fn require(&self, keys: &[&str]) -> Result<(), ConfigError> {
        let missing: Vec<String> = keys.iter().filter(|k| self.lookup(k).is_none()).map(|k| k.to_string()).collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Missing(missing))
        }
    }

    fn get(&self, key: &str) -> Result<&Value, ConfigError> {
        self.lookup(key).ok_or_else(|| ConfigError::Missing(vec![key.to_string()]))
    }

    pub fn str(&self, key: &str) -> Result<String, ConfigError> {
        match self.get(key)? {
            Value::String(s) => Ok(s.clone()),
            _ => Err(ConfigError::Type { key: key.into(), expected: "a string" }),
        }
    }

    pub fn path(&self, key: &str) -> Result<PathBuf, ConfigError> {
        self.str(key).map(PathBuf::from)
    }

    pub fn usize(&self, key: &str) -> Result<usize, ConfigError> {
        match self.get(key)? {
            Value::Integer(i) if *i >= 0 => Ok(*i as usize),
            _ => Err(ConfigError::Type { key: key.into(), expected: "a non-negative integer" }),
        }
    }

    pub fn u64(&self, key: &str) -> Result<u64, ConfigError> {
        self.usize(key).map(|v| v as u64)
    }

    pub fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        match self.get(key)? {
            Value::Float(f) => Ok(*f),
            Value::Integer(i) => Ok(*i as f64),
            _ => Err(ConfigError::Type { key: key.into(), expected: "a number" }),
        }
    }

    pub fn bool(&self, key: &str) -> Result<bool, ConfigError> {
        match self.get(key)? {
            Value::Boolean(b) => Ok(*b),
            _ => Err(ConfigError::Type { key: key.into(), expected: "true or false" }),
        }
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>, ConfigError> {
        let bad = || ConfigError::Type { key: key.into(), expected: "a list of non-negative integers" };
        let Value::Array(items) = self.get(key)? else { return Err(bad()) };
        items
            .iter()
            .map(|v| match v {
                Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                _ => Err(bad()),
            })
            .collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(&self.table).unwrap_or_default()
    }
}

fn literal(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}
