//! One row of experiment output.

use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub suite: String,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub measured: BTreeMap<String, f64>,
    pub pass: bool,
    /// Left empty wherever output must be reproducible.
    pub wall_ms: Option<u64>,
}

impl ExperimentRecord {
    pub fn new(suite: &str, seed: u64) -> Self {
        ExperimentRecord {
            suite: suite.into(),
            params: BTreeMap::new(),
            seed,
            measured: BTreeMap::new(),
            pass: true,
            wall_ms: None,
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.into(), value.to_string());
        self
    }

    pub fn measure(mut self, key: &str, value: f64) -> Self {
        self.measured.insert(key.into(), value);
        self
    }

    pub fn with_pass(mut self, pass: bool) -> Self {
        self.pass = pass;
        self
    }

    /// `suite,seed,pass,wall_ms,params,measured` with `k=v;k=v` maps.
    pub fn csv_row(&self) -> Vec<String> {
        let join = |it: Vec<String>| it.join(";");
        vec![
            self.suite.clone(),
            self.seed.to_string(),
            self.pass.to_string(),
            self.wall_ms.map(|w| w.to_string()).unwrap_or_default(),
            join(self.params.iter().map(|(k, v)| format!("{k}={v}")).collect()),
            join(self.measured.iter().map(|(k, v)| format!("{k}={v}")).collect()),
        ]
    }
}

pub const RECORD_HEADER: [&str; 6] = ["suite", "seed", "pass", "wall_ms", "params", "measured"];

pub fn records_csv(records: &[ExperimentRecord]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record(r.csv_row())?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_row_per_record() {
        let r = ExperimentRecord::new("demo", 3).param("n", 8).param("k", 2).measure("passes", 4.0).with_pass(false);
        let csv = records_csv(&[r]).unwrap();
        assert_eq!(csv, "suite,seed,pass,wall_ms,params,measured\ndemo,3,false,,k=2;n=8,passes=4\n");
    }
}
