use std::fmt::Display;
use std::path::PathBuf;

use crate::config::Settings;
use crate::Failure;

/// Artifacts of one run: CSV files tagged with the config hash and seed,
/// and a flat `key=value` manifest.
pub struct Run {
    command: &'static str,
    settings: Settings,
    hash: String,
    out_dir: PathBuf,
    outputs: Vec<String>,
    results: Vec<(String, String)>,
}

impl Run {
    pub fn new(command: &'static str, settings: &Settings) -> Result<Self, Failure> {
        let out_dir = settings.out_dir();
        std::fs::create_dir_all(&out_dir)
            .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
        Ok(Run {
            command,
            settings: settings.clone(),
            hash: settings.hash(command),
            out_dir,
            outputs: Vec::new(),
            results: Vec::new(),
        })
    }

    /// Writes `<name>.csv` with `header` plus `config_hash` and `seed`
    /// columns.
    pub fn csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<(), Failure> {
        let file = format!("{name}.csv");
        let path = self.out_dir.join(&file);
        let fail = |e: csv::Error| Failure::Runtime(format!("writing {}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(fail)?;
        let mut head: Vec<&str> = header.to_vec();
        head.extend(["config_hash", "seed"]);
        w.write_record(&head).map_err(fail)?;
        let seed = self.settings.seed().to_string();
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(
                row.iter()
                    .map(String::as_str)
                    .chain([self.hash.as_str(), &seed]),
            )
            .map_err(fail)?;
        }
        w.flush()
            .map_err(|e| Failure::Runtime(format!("writing {}: {e}", path.display())))?;
        self.outputs.push(file);
        Ok(())
    }

    pub fn result(&mut self, key: &str, value: impl Display) {
        self.results.push((key.to_string(), value.to_string()));
    }

    /// Writes `<command>.toml`, from which the run can be repeated, and
    /// `<command>.manifest`.
    pub fn finish(self) -> Result<PathBuf, Failure> {
        let config_file = format!("{}.toml", self.command);
        let config_text = format!(
            "# config_hash = {}\n{}",
            self.hash,
            toml::to_string(&self.settings).expect("settings serialize")
        );
        self.write(&config_file, &config_text)?;

        let mut lines = vec![
            format!("command={}", self.command),
            format!("version={}", env!("CARGO_PKG_VERSION")),
            format!("config_hash={}", self.hash),
            format!("seed={}", self.settings.seed()),
            format!("config_file={config_file}"),
        ];
        let table: toml::Table =
            toml::from_str(&toml::to_string(&self.settings).expect("settings serialize"))
                .expect("settings round trip");
        for (key, value) in &table {
            lines.push(format!("config.{key}={}", flat(value)));
        }
        for file in &self.outputs {
            lines.push(format!("output={file}"));
        }
        for (key, value) in &self.results {
            lines.push(format!("result.{key}={value}"));
        }
        lines.push(String::new());
        let name = format!("{}.manifest", self.command);
        self.write(&name, &lines.join("\n"))?;
        Ok(self.out_dir.join(name))
    }

    fn write(&self, name: &str, text: &str) -> Result<(), Failure> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, text)
            .map_err(|e| Failure::Runtime(format!("writing {}: {e}", path.display())))
    }
}

fn flat(value: &toml::Value) -> String {
    match value {
        toml::Value::String(s) => s.clone(),
        toml::Value::Array(items) => items.iter().map(flat).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}

/// Joins radius ratios for a single CSV field.
pub fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(";")
}
