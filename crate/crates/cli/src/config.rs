use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Parameters a run can take from a JSON file. Any field present here wins
/// over the matching command-line flag.
///
/// The same shape is embedded as `params` in every output record, so an output
/// file can be fed back through `--config` to repeat the run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ncaps: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub configs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chunk_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_angle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crn_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antipodal: Option<bool>,
}

/// Reads either a bare config object, a run record (its `params` are used) or
/// an array of run records (the first one is used).
pub fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Value::Array(items) = v {
        v = items.into_iter().next().context("config file holds an empty array")?;
    }
    if let Value::Object(ref mut m) = v {
        if let Some(p) = m.remove("params") {
            v = p;
        }
    }
    serde_json::from_value(v).with_context(|| format!("{} is not an experiment config", path.display()))
}

/// Resolves one setting; the file value wins and a clash is reported.
pub fn pick<T>(key: &str, flag: Option<T>, file: Option<T>) -> Option<T> {
    match (flag, file) {
        (Some(_), Some(f)) => {
            eprintln!("warning: config file sets `{key}`; ignoring the command-line value");
            Some(f)
        }
        (flag, None) => flag,
        (None, file) => file,
    }
}

pub fn pick_list<T>(key: &str, flag: Vec<T>, file: Option<Vec<T>>) -> Option<Vec<T>> {
    pick(key, (!flag.is_empty()).then_some(flag), file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_value_wins() {
        assert_eq!(pick("seed", Some(1), Some(2)), Some(2));
        assert_eq!(pick("seed", Some(1), None), Some(1));
        assert_eq!(pick::<u64>("seed", None, None), None);
        assert_eq!(pick_list("dims", vec![], Some(vec![3])), Some(vec![3]));
    }

    #[test]
    fn accepts_records() {
        let dir = std::env::temp_dir().join(format!("capcover-cfg-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("rec.json");
        fs::write(&p, r#"[{"tool":"capcover","params":{"dims":[5],"seed":9}}]"#).unwrap();
        let c = load(&p).unwrap();
        assert_eq!(c.dims, Some(vec![5]));
        assert_eq!(c.seed, Some(9));
        fs::write(&p, r#"{"dimz":[5]}"#).unwrap();
        assert!(load(&p).is_err());
        fs::remove_dir_all(&dir).unwrap();
    }
}
