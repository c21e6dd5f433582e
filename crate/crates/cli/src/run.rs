use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use invlab::kvconfig::KvConfig;
use invlab::{Error, Matrix, Result};
use serde_json::{json, Map, Value};

/// One command invocation: merged config, output directory and manifest.
pub struct Run {
    command: &'static str,
    out: PathBuf,
    pub kv: KvConfig,
    started: Instant,
    outputs: Vec<String>,
    results: Map<String, Value>,
}

impl Run {
    /// Config file entries overlaid with the flags that were given.
    pub fn start(
        command: &'static str,
        out: &Path,
        config: Option<&Path>,
        overrides: Vec<(&str, Option<String>)>,
        allowed: &[&str],
    ) -> Result<Self> {
        let mut kv = match config {
            Some(p) => KvConfig::load(p)?,
            None => KvConfig::default(),
        };
        for (k, v) in overrides {
            if let Some(v) = v {
                kv.set(k, v);
            }
        }
        kv.require_known(allowed)?;
        std::fs::create_dir_all(out)?;
        Ok(Run {
            command,
            out: out.to_path_buf(),
            kv,
            started: Instant::now(),
            outputs: Vec::new(),
            results: Map::new(),
        })
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        self.kv.get_or(key, default)
    }

    pub fn list<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        Ok(self.kv.get_list(key)?.unwrap_or(default))
    }

    pub fn string(&self, key: &str, default: &str) -> String {
        self.kv.raw(key).unwrap_or(default).to_string()
    }

    /// Path inside the output directory, recorded in the manifest.
    pub fn output(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.output(name);
        std::fs::write(&path, contents)?;
        Ok(path)
    }

    pub fn result(&mut self, key: &str, value: impl Into<Value>) {
        self.results.insert(key.to_string(), value.into());
    }

    /// Writes `<command>.manifest.json` next to the outputs.
    pub fn finish(self, seed: Option<u64>) -> Result<()> {
        let config: Map<String, Value> = self.kv.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
        let manifest = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "config": config,
            "threads": rayon::current_num_threads(),
            "outputs": self.outputs,
            "results": self.results,
            "wall_seconds": self.started.elapsed().as_secs_f64(),
        });
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(self.out.join(format!("{}.manifest.json", self.command)), text + "\n")?;
        Ok(())
    }
}

/// `"2 2; 2 3"`: rows separated by `;`, entries by spaces or commas.
pub fn parse_matrix(key: &str, text: &str) -> Result<Matrix> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|row| {
            row.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::Config(format!("{key}: cannot parse `{t}`")))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    Matrix::from_rows(&refs).map_err(|e| Error::Config(format!("{key}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_syntax() {
        let m = parse_matrix("a0", "1 1; 1,1").unwrap();
        assert_eq!(m.as_slice(), &[1.0; 4]);
        assert!(parse_matrix("a0", "1 2; 3").is_err());
    }
}
