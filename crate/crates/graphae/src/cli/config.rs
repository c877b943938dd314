//! Flat `key = value` run configuration with typed validation.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::experiment::Task;

#[derive(Debug, Clone, Copy)]
enum Kind {
    Text,
    Bool,
    Count,
    Seed,
    Real,
    /// A real number or `none`.
    OptReal,
    /// A count or `auto`.
    CountOrAuto,
    Choice(&'static [&'static str]),
}

const SCHEMA: &[(&str, Kind, &str)] = &[
    ("graph", Kind::Text, ""),
    ("directed", Kind::Bool, "false"),
    ("features", Kind::Text, ""),
    ("labels", Kind::Text, ""),
    ("input", Kind::Text, ""),
    ("encoder", Kind::Choice(&["linear", "gcn2"]), "gcn2"),
    ("hidden", Kind::Count, "32"),
    ("variational", Kind::Bool, "false"),
    ("dim", Kind::Count, "16"),
    ("decoder", Kind::Choice(&["inner_product", "source_target", "gravity"]), "inner_product"),
    ("gravity_lambda", Kind::Real, "1.0"),
    ("operator", Kind::Choice(&["symmetric", "out_degree"]), "symmetric"),
    ("epochs", Kind::Count, "200"),
    ("learning_rate", Kind::Real, "0.01"),
    ("w_pos", Kind::OptReal, "none"),
    ("include_diagonal", Kind::Bool, "true"),
    ("max_pairs", Kind::Seed, "500000000"),
    ("scaling", Kind::Choice(&["full", "kcore", "sampled"]), "full"),
    ("core_k", Kind::Count, "2"),
    ("propagation_iters", Kind::Count, "10"),
    ("sample_size", Kind::CountOrAuto, "auto"),
    ("sample_method", Kind::Choice(&["uniform", "degree", "core"]), "degree"),
    ("sample_alpha", Kind::Real, "1.0"),
    ("with_replacement", Kind::Bool, "false"),
    ("threshold_deviation", Kind::Real, "1.0"),
    ("threshold_confidence", Kind::Real, "0.1"),
    ("threshold_cap", Kind::Real, "0.001"),
    ("prior_lambda", Kind::Real, "0.0"),
    ("prior_s", Kind::Count, "1"),
    ("modularity_beta", Kind::Real, "0.0"),
    ("modularity_gamma", Kind::Real, "0.0"),
    ("task", Kind::Choice(&Task::NAMES), "link_prediction"),
    ("val_frac", Kind::Real, "0.05"),
    ("test_frac", Kind::Real, "0.10"),
    ("include_reversals", Kind::Bool, "false"),
    ("clusters", Kind::Count, "0"),
    ("cluster_method", Kind::Choice(&["louvain", "kmeans"]), "louvain"),
    ("top_k", Kind::Count, "20"),
    ("runs", Kind::Count, "1"),
    ("seed", Kind::Seed, "0"),
    ("output_dir", Kind::Text, ""),
    ("checkpoint", Kind::Text, ""),
    ("queries", Kind::Text, "all"),
    ("vectors", Kind::Text, ""),
    ("relations", Kind::Text, ""),
    ("words", Kind::Text, ""),
    ("composition", Kind::Choice(&["avg", "sif"]), "avg"),
    ("sif_a", Kind::Real, "0.001"),
    ("max_iters", Kind::Count, "100"),
    ("tol", Kind::Real, "1e-6"),
    ("sources", Kind::Text, ""),
    ("targets", Kind::Text, ""),
];

/// Keys a sweep grid may vary.
pub const SWEEPABLE: &[&str] =
    &["prior_lambda", "prior_s", "modularity_beta", "modularity_gamma", "learning_rate", "epochs", "dim", "gravity_lambda"];

/// Environment variable naming the default output directory.
pub const OUTPUT_ENV: &str = "GRAPHAE_OUT";

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn kind_of(key: &str) -> Option<Kind> {
    SCHEMA.iter().find(|e| e.0 == key).map(|e| e.1)
}

fn check(key: &str, kind: Kind, value: &str) -> Result<(), ConfigError> {
    let bad = |what: &str| Err(ConfigError(format!("{key}: expected {what}, found '{value}'")));
    let ok = match kind {
        Kind::Text => true,
        Kind::Bool => matches!(value, "true" | "false"),
        Kind::Count | Kind::Seed => value.parse::<u64>().is_ok(),
        Kind::Real => value.parse::<f64>().is_ok_and(f64::is_finite),
        Kind::OptReal => value == "none" || value.parse::<f64>().is_ok_and(f64::is_finite),
        Kind::CountOrAuto => value == "auto" || value.parse::<u64>().is_ok(),
        Kind::Choice(options) => options.contains(&value),
    };
    if ok {
        return Ok(());
    }
    match kind {
        Kind::Bool => bad("true or false"),
        Kind::Count | Kind::Seed => bad("a non-negative integer"),
        Kind::Real => bad("a finite number"),
        Kind::OptReal => bad("a number or none"),
        Kind::CountOrAuto => bad("an integer or auto"),
        Kind::Choice(options) => bad(&format!("one of {}", options.join(", "))),
        Kind::Text => unreachable!(),
    }
}

/// Validated run configuration. Every key of the schema has a value.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    /// Sweep grid in the order keys first appeared.
    pub grid: Vec<(String, Vec<String>)>,
}

impl RunConfig {
    /// Parses `key = value` lines (`#` starts a comment), then applies
    /// `key=value` overrides on top.
    pub fn parse(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig {
            values: SCHEMA.iter().map(|(k, _, d)| (k.to_string(), d.to_string())).collect(),
            grid: Vec::new(),
        };
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError(format!("config line {}: expected key = value", n + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| ConfigError(format!("override '{o}' is not key=value")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if let Some(target) = key.strip_prefix("grid.") {
            if !SWEEPABLE.contains(&target) {
                return Err(ConfigError(format!("unknown key '{key}' (sweepable: {})", SWEEPABLE.join(", "))));
            }
            let kind = kind_of(target).unwrap();
            let values: Vec<String> = value.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
            for v in &values {
                check(target, kind, v)?;
            }
            match self.grid.iter_mut().find(|(k, _)| k == target) {
                Some(entry) => entry.1 = values,
                None => self.grid.push((target.to_string(), values)),
            }
            return Ok(());
        }
        let kind = kind_of(key).ok_or_else(|| ConfigError(format!("unknown key '{key}'")))?;
        check(key, kind, value)?;
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn text(&self, key: &str) -> &str {
        &self.values[key]
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        let v = self.text(key);
        (!v.is_empty()).then(|| PathBuf::from(v))
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf, ConfigError> {
        self.path(key).ok_or_else(|| ConfigError(format!("missing required key '{key}'")))
    }

    pub fn flag(&self, key: &str) -> bool {
        self.text(key) == "true"
    }

    pub fn count(&self, key: &str) -> usize {
        self.text(key).parse().unwrap()
    }

    pub fn seed(&self, key: &str) -> u64 {
        self.text(key).parse().unwrap()
    }

    pub fn real(&self, key: &str) -> f64 {
        self.text(key).parse().unwrap()
    }

    pub fn opt_real(&self, key: &str) -> Option<f64> {
        self.text(key).parse().ok()
    }

    pub fn opt_count(&self, key: &str) -> Option<usize> {
        self.text(key).parse().ok()
    }

    pub fn output_dir(&self) -> PathBuf {
        self.path("output_dir")
            .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Every combination of grid values, the first grid key varying slowest.
    pub fn grid_points(&self) -> Vec<RunConfig> {
        let mut points = vec![self.clone()];
        for (key, values) in &self.grid {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.values.insert(key.clone(), v.clone());
                        q
                    })
                })
                .collect();
        }
        if self.grid.iter().any(|(_, v)| v.is_empty()) {
            return Vec::new();
        }
        points
    }

    /// The configuration as `key = value` lines, non-default values only.
    pub fn to_text(&self) -> String {
        SCHEMA
            .iter()
            .filter(|(k, _, d)| self.values[*k] != *d)
            .map(|(k, _, _)| format!("{k} = {}\n", self.values[*k]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_win_and_unknown_keys_are_named() {
        let cfg = RunConfig::parse("epochs = 50 # short\n\ndim=8\n", &["epochs=70".into()]).unwrap();
        assert_eq!((cfg.count("epochs"), cfg.count("dim")), (70, 8));
        assert_eq!(cfg.opt_real("w_pos"), None);
        let err = RunConfig::parse("epocs = 3", &[]).unwrap_err();
        assert!(err.0.contains("'epocs'"));
        assert!(RunConfig::parse("decoder = cosine", &[]).unwrap_err().0.contains("inner_product"));
        assert!(RunConfig::parse("", &["learning_rate=fast".into()]).is_err());
    }

    #[test]
    fn grids_expand_in_order() {
        let cfg = RunConfig::parse("grid.prior_lambda = 0, 0.25\ngrid.prior_s = 1,2\n", &[]).unwrap();
        let pts = cfg.grid_points();
        assert_eq!(pts.len(), 4);
        assert_eq!((pts[1].real("prior_lambda"), pts[1].count("prior_s")), (0.0, 2));
        assert_eq!(pts[2].real("prior_lambda"), 0.25);
        assert!(RunConfig::parse("grid.graph = a,b", &[]).is_err());
        let text = pts[3].to_text();
        assert!(text.contains("prior_lambda = 0.25") && text.contains("prior_s = 2"));
    }
}
