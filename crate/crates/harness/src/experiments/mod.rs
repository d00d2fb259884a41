//! Experiment drivers. Each turns a config into result records and raw
//! data tables; nothing here touches the file system.

mod billiard;
mod one_d;

use anyhow::Result;
use nearelastic_core::runner::ReplicaRunner;
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::report::ResultRecord;

/// Raw data with a fixed header, written as CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub records: Vec<ResultRecord>,
    pub tables: Vec<Table>,
}

impl RunOutput {
    /// Some asserted record failed.
    pub fn failed(&self) -> bool {
        self.records.iter().any(ResultRecord::is_fatal)
    }

    /// Records with the given quantity name.
    pub fn find<'a>(&'a self, quantity: &'a str) -> impl Iterator<Item = &'a ResultRecord> + 'a {
        self.records.iter().filter(move |r| r.quantity == quantity)
    }
}

pub(crate) type Parts = (Vec<ResultRecord>, Vec<Table>);

/// Runs the configured experiment over its `eps` and `delta` lists.
pub fn run<R: ReplicaRunner>(cfg: &ExperimentConfig, runner: &R) -> Result<RunOutput> {
    cfg.validate()?;
    let (records, tables) = match &cfg.experiment {
        Experiment::Averaging1d(a) => one_d::averaging(cfg, a)?,
        Experiment::BranchingInit(b) => one_d::branching_init(cfg, b, runner)?,
        Experiment::BranchingDyn(b) => one_d::branching_dyn(cfg, b, runner)?,
        Experiment::Fig6(f) => one_d::fig6(cfg, f, runner)?,
        Experiment::WalkParity(w) => one_d::walk_parity(cfg, w, runner)?,
        Experiment::StripRatio(s) => one_d::strip(cfg, s)?,
        Experiment::BilliardDecay(b) => billiard::decay(cfg, b, runner)?,
        Experiment::BilliardBranching(b) => billiard::branching(cfg, b, runner)?,
        Experiment::LiouvilleCheck(l) => billiard::liouville(cfg, l, runner)?,
        Experiment::IntegralGeometry(g) => billiard::integral_geometry(cfg, g)?,
    };
    let records = records.into_iter().map(|r| r.asserted(cfg.assert)).collect();
    Ok(RunOutput {
        config: cfg.clone(),
        records,
        tables,
    })
}

/// Compact decimal label for file names.
pub(crate) fn tag(x: f64) -> String {
    format!("{x:e}").replace('.', "p")
}
