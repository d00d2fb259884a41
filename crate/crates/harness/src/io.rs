//! Result files.
//!
//! `results.json` holds the schema version, the resolved config and every
//! record. `results.csv` has one row per record with the header
//! `experiment,quantity,parameters,estimate,ci_lo,ci_hi,target,tolerance,comparison,pass,assert,trials,failures`.
//! Each raw table goes to `<name>.csv` with its own header. No timestamps or
//! host details are written, so identical runs give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::experiments::{RunOutput, Table};
use crate::report::{ResultRecord, SCHEMA_VERSION};

#[derive(Serialize)]
struct ResultFile<'a> {
    schema_version: u32,
    experiment: &'a str,
    config: &'a ExperimentConfig,
    records: &'a [ResultRecord],
}

/// The result document as pretty-printed JSON.
pub fn results_json(out: &RunOutput) -> Result<String> {
    let doc = ResultFile {
        schema_version: SCHEMA_VERSION,
        experiment: out.config.experiment.id(),
        config: &out.config,
        records: &out.records,
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

pub fn summary_csv(records: &[ResultRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "experiment",
        "quantity",
        "parameters",
        "estimate",
        "ci_lo",
        "ci_hi",
        "target",
        "tolerance",
        "comparison",
        "pass",
        "assert",
        "trials",
        "failures",
    ])?;
    for r in records {
        w.write_record([
            r.experiment.clone(),
            r.quantity.clone(),
            serde_json::to_string(&r.parameters)?,
            r.estimate.to_string(),
            r.ci[0].to_string(),
            r.ci[1].to_string(),
            r.target.to_string(),
            r.tolerance.to_string(),
            serde_json::to_string(&r.comparison)?.trim_matches('"').to_string(),
            r.pass.to_string(),
            r.assert.to_string(),
            r.trials.to_string(),
            r.failures.to_string(),
        ])?;
    }
    Ok(w.into_inner()?)
}

pub fn table_csv(t: &Table) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&t.header)?;
    for row in &t.rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    Ok(w.into_inner()?)
}

/// Writes all files into `dir` and returns their paths.
pub fn write(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let o = &out.config.output;
    let mut files = vec![(dir.join(&o.results), results_json(out)?.into_bytes()), (dir.join(&o.summary), summary_csv(&out.records)?)];
    if o.tables {
        for t in &out.tables {
            files.push((dir.join(format!("{}.csv", t.name)), table_csv(t)?));
        }
    }
    let mut written = Vec::new();
    for (path, bytes) in files {
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Comparison;

    #[test]
    fn table_round_trip() {
        let mut t = Table::new("x", &["a", "b"]);
        t.push(vec![1.0, 0.5]);
        t.push(vec![f64::NAN, -2.0]);
        let text = String::from_utf8(table_csv(&t).unwrap()).unwrap();
        assert_eq!(text, "a,b\n1,0.5\nNaN,-2\n");
    }

    #[test]
    fn summary_has_header_and_rows() {
        let r = ResultRecord::exact("e", "q", 0.1, Comparison::AtMost, 0.2, 0.0).param("eps", 0.01);
        let text = String::from_utf8(summary_csv(&[r]).unwrap()).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("experiment,quantity,parameters"));
        assert_eq!(lines.next().unwrap(), "e,q,\"{\"\"eps\"\":0.01}\",0.1,0.1,0.1,0.2,0,at_most,true,true,1,0");
    }
}
