//! Run configuration for benchmarks: which datasets, which split seeds,
//! which methods and where to write.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{load_edge_list, BipartiteGraph, EdgeFormat};
use crate::method::Method;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub name: String,
    pub path: PathBuf,
    pub format: EdgeFormat,
    #[serde(default)]
    pub min_left_degree: Option<usize>,
}

impl DatasetConfig {
    pub fn load(&self) -> Result<BipartiteGraph> {
        let graph = load_edge_list(&self.path, self.format)?;
        match self.min_left_degree {
            Some(min) => graph.min_degree_filter(min),
            None => Ok(graph),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    pub seeds: Vec<u64>,
}

fn default_test_fraction() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodEntry {
    /// Row name in reports; defaults to the method name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Replaces the run-wide split seeds for this method.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(flatten)]
    pub method: Method,
}

impl MethodEntry {
    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.method.name())
    }
}

impl From<Method> for MethodEntry {
    fn from(method: Method) -> Self {
        MethodEntry {
            label: None,
            seeds: None,
            method,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub datasets: Vec<DatasetConfig>,
    pub split: SplitConfig,
    pub methods: Vec<MethodEntry>,
    pub output_dir: PathBuf,
    #[serde(default = "default_persist_scores")]
    pub persist_scores: bool,
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_persist_scores() -> bool {
    true
}

impl RunConfig {
    /// Reads a JSON config; relative paths are taken relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: RunConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for d in &mut self.datasets {
            if d.path.is_relative() {
                d.path = base.join(&d.path);
            }
        }
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidParameter(m));
        if self.datasets.is_empty() || self.methods.is_empty() {
            return invalid("config needs at least one dataset and one method".into());
        }
        if self.split.seeds.is_empty() {
            return invalid("config needs at least one split seed".into());
        }
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return invalid(format!("test_fraction {} is not in (0, 1)", self.split.test_fraction));
        }
        if self.workers == Some(0) {
            return invalid("workers must be at least 1".into());
        }
        let mut names = HashSet::new();
        for d in &self.datasets {
            if !names.insert(d.name.as_str()) {
                return invalid(format!("dataset name {:?} is used twice", d.name));
            }
            if !d.path.is_file() {
                return Err(Error::io(
                    &d.path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "dataset file not found"),
                ));
            }
        }
        let mut labels = HashSet::new();
        for m in &self.methods {
            if !labels.insert(m.label()) {
                return invalid(format!("method label {:?} is used twice", m.label()));
            }
            if m.seeds.as_ref().is_some_and(Vec::is_empty) {
                return invalid(format!("method {:?} has an empty seed list", m.label()));
            }
        }
        Ok(())
    }

    pub fn seeds_for(&self, entry: &MethodEntry) -> Vec<u64> {
        entry.seeds.clone().unwrap_or_else(|| self.split.seeds.clone())
    }

    /// Digest of everything that determines the run's results.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.workers = None;
        c.persist_scores = false;
        for d in &mut c.datasets {
            d.path = d.path.file_name().map(PathBuf::from).unwrap_or_default();
        }
        crate::eval::digest(&serde_json::to_value(&c).expect("config serializes"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let path = dir.join(name);
        fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn loads_and_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "g.tsv", "a\tx\n");
        let path = write(
            dir.path(),
            "run.json",
            r#"{"datasets": [{"name": "toy", "path": "g.tsv", "format": "tsv_pair"}],
                "split": {"seeds": [1, 2]},
                "methods": [{"method": "katz", "alpha": 0.002}, {"method": "pa", "label": "pref", "seeds": [5]}],
                "output_dir": "out"}"#,
        );
        let c = RunConfig::load(&path).unwrap();
        assert_eq!(c.datasets[0].path, dir.path().join("g.tsv"));
        assert_eq!(c.output_dir, dir.path().join("out"));
        assert_eq!(c.split.test_fraction, 0.1);
        assert!(c.persist_scores);
        assert_eq!(c.methods[1].label(), "pref");
        assert_eq!(c.seeds_for(&c.methods[0]), vec![1, 2]);
        assert_eq!(c.seeds_for(&c.methods[1]), vec![5]);
        let Method::Katz(k) = &c.methods[0].method else {
            panic!()
        };
        assert_eq!(k.alpha, 0.002);
    }

    #[test]
    fn rejects_missing_data_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let missing = write(
            dir.path(),
            "a.json",
            r#"{"datasets": [{"name": "toy", "path": "nope.tsv", "format": "tsv_pair"}],
                "split": {"seeds": [1]}, "methods": [{"method": "pa"}], "output_dir": "out"}"#,
        );
        assert!(matches!(RunConfig::load(&missing), Err(Error::Io { .. })));
        write(dir.path(), "g.tsv", "a\tx\n");
        let dup = write(
            dir.path(),
            "b.json",
            r#"{"datasets": [{"name": "toy", "path": "g.tsv", "format": "tsv_pair"}],
                "split": {"seeds": [1]}, "methods": [{"method": "pa"}, {"method": "pa"}], "output_dir": "out"}"#,
        );
        assert!(matches!(RunConfig::load(&dup), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn digest_ignores_location() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "g.tsv", "a\tx\n");
        let text = r#"{"datasets": [{"name": "toy", "path": "g.tsv", "format": "tsv_pair"}],
                "split": {"seeds": [1]}, "methods": [{"method": "pa"}], "output_dir": "out"}"#;
        let a = RunConfig::load(&write(dir.path(), "a.json", text)).unwrap();
        let mut b = a.clone();
        b.output_dir = PathBuf::from("/elsewhere");
        b.workers = Some(3);
        assert_eq!(a.digest(), b.digest());
        b.split.seeds.push(2);
        assert_ne!(a.digest(), b.digest());
    }
}
