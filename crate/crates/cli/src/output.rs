//! Output directory writer. Every file carries the resolved scenario and
//! master seed so it can be regenerated exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fadetrack_core::sim::ScenarioConfig;
use serde_json::{json, Value};

use crate::args::Format;
use crate::error::CliError;

pub struct OutputDir {
    root: PathBuf,
    format: Format,
    command: &'static str,
    scenario: Value,
    master_seed: u64,
    written: Vec<PathBuf>,
}

/// CSV number formatting: shortest round-trip text, scientific for very
/// small or large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v.is_nan() {
        "nan".into()
    } else if a == 0.0 || (1e-4..1e15).contains(&a) || a.is_infinite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

impl OutputDir {
    pub fn create(root: &Path, format: Format, command: &'static str, cfg: &ScenarioConfig) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            format,
            command,
            scenario: serde_json::to_value(cfg).expect("scenario serializes"),
            master_seed: cfg.master_seed,
            written: Vec::new(),
        })
    }

    pub fn format(&self) -> Format {
        self.format
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn header(&self) -> String {
        format!(
            "# fadetrack {} {}\n# master_seed={}\n# scenario={}\n",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.master_seed,
            self.scenario
        )
    }

    /// Writes `columns` then `rows` under the provenance header. Skipped
    /// unless the format includes CSV.
    pub fn csv<I, S>(&mut self, name: &str, columns: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if !self.format.csv() {
            return Ok(());
        }
        let mut text = self.header();
        text.push_str(&columns.join(","));
        text.push('\n');
        for r in rows {
            let _ = writeln!(text, "{}", r.as_ref());
        }
        self.write(name, text)
    }

    /// Writes `{command, version, master_seed, scenario, ...body}`.
    /// Skipped unless the format includes JSON.
    pub fn json(&mut self, name: &str, body: Value) -> Result<(), CliError> {
        if !self.format.json() {
            return Ok(());
        }
        let mut doc = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "master_seed": self.master_seed,
            "scenario": self.scenario,
        });
        if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
            d.extend(b);
        }
        let mut text = serde_json::to_string_pretty(&doc).expect("json serializes");
        text.push('\n');
        self.write(name, text)
    }

    fn write(&mut self, name: &str, text: String) -> Result<(), CliError> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for v in [0.0, 1.5, -2.25e-9, 1.38e-23, 3.0e20, 12.824, 0.1 + 0.2] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(f64::NAN), "nan");
        assert_eq!(num(1.38e-23), "1.38e-23");
        assert_eq!(opt_num(None), "");
    }
}
