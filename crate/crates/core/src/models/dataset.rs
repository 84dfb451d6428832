use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ParamVector, StateSpaceModel};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

/// Observations `y_1..y_T` together with how they were generated.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub model: String,
    pub observations: Vec<f64>,
    pub true_theta: ParamVector,
    pub seed: u64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Counts models write `y` as integers.
    fn integer_valued(&self) -> bool {
        self.model == "sir"
    }
}

/// JSON sidecar written next to each dataset CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub model: String,
    pub true_theta: Vec<f64>,
    #[serde(rename = "T")]
    pub t: usize,
    pub seed: u64,
}

/// Simulates a dataset. A pure function of `(model, true_theta, t_len, seed)`.
pub fn simulate<M: StateSpaceModel>(model: &M, true_theta: &[f64], t_len: usize, seed: u64) -> Dataset {
    assert!(t_len >= 1, "dataset needs at least one observation");
    Dataset {
        model: model.name().to_string(),
        observations: model.simulate_observations(true_theta, t_len, seed),
        true_theta: ParamVector(true_theta.to_vec()),
        seed,
    }
}

pub fn dataset_stem(model: &str, seed: u64) -> String {
    format!("{model}_seed{seed}")
}

/// Writes `<model>_seed<seed>.csv` (header `t,y`) and a `.json` sidecar into
/// `dir`. Returns the CSV path.
pub fn write_dataset(dir: &Path, data: &Dataset) -> Result<PathBuf, DatasetError> {
    fs::create_dir_all(dir).map_err(|source| DatasetError::Io { path: dir.to_path_buf(), source })?;
    let stem = dataset_stem(&data.model, data.seed);
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));

    let csv_err = |source| DatasetError::Csv { path: csv_path.clone(), source };
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_err)?;
    w.write_record(["t", "y"]).map_err(csv_err)?;
    for (t, y) in data.observations.iter().enumerate() {
        let y = if data.integer_valued() {
            format!("{}", *y as i64)
        } else {
            format!("{y}")
        };
        w.write_record([(t + 1).to_string(), y]).map_err(csv_err)?;
    }
    w.flush()
        .map_err(|source| DatasetError::Io { path: csv_path.clone(), source })?;

    let meta = DatasetMeta {
        model: data.model.clone(),
        true_theta: data.true_theta.0.clone(),
        t: data.len(),
        seed: data.seed,
    };
    let json = serde_json::to_string_pretty(&meta)
        .map_err(|source| DatasetError::Json { path: json_path.clone(), source })?;
    fs::write(&json_path, json + "\n").map_err(|source| DatasetError::Io { path: json_path, source })?;
    Ok(csv_path)
}

/// Reads a dataset CSV and its JSON sidecar.
pub fn read_dataset(csv_path: &Path) -> Result<Dataset, DatasetError> {
    let json_path = csv_path.with_extension("json");
    let text = fs::read_to_string(&json_path)
        .map_err(|source| DatasetError::Io { path: json_path.clone(), source })?;
    let meta: DatasetMeta =
        serde_json::from_str(&text).map_err(|source| DatasetError::Json { path: json_path, source })?;

    let csv_err = |source| DatasetError::Csv { path: csv_path.to_path_buf(), source };
    let mut r = csv::Reader::from_path(csv_path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "y"] {
        return Err(DatasetError::Format {
            path: csv_path.to_path_buf(),
            message: format!("expected header t,y, found {}", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut observations = Vec::new();
    for record in r.records() {
        let record = record.map_err(csv_err)?;
        let y: f64 = record[1].parse().map_err(|e| DatasetError::Format {
            path: csv_path.to_path_buf(),
            message: format!("bad y value {:?}: {e}", &record[1]),
        })?;
        observations.push(y);
    }
    if observations.len() != meta.t {
        return Err(DatasetError::Format {
            path: csv_path.to_path_buf(),
            message: format!("sidecar says T={} but CSV has {} rows", meta.t, observations.len()),
        });
    }
    Ok(Dataset {
        model: meta.model,
        observations,
        true_theta: ParamVector(meta.true_theta),
        seed: meta.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Lgss, Sir};

    #[test]
    fn csv_and_sidecar_roundtrip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        for data in [
            simulate(&Lgss::new(), &Lgss::TRUE_THETA, 40, 5),
            simulate(&Sir::new(), &Sir::TRUE_THETA, 36, 5),
        ] {
            let path = write_dataset(dir.path(), &data).unwrap();
            let back = read_dataset(&path).unwrap();
            assert_eq!(back, data);
        }
        let header = fs::read_to_string(dir.path().join("sir_seed5.csv")).unwrap();
        assert!(header.starts_with("t,y\n1,"));
        assert!(!header.lines().nth(1).unwrap().contains('.'));
    }

    #[test]
    fn missing_sidecar_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let err = read_dataset(&dir.path().join("nope.csv")).unwrap_err();
        assert!(err.to_string().contains("nope.json"));
    }
}
