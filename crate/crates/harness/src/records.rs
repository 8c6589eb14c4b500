//! CSV schemas. Column sets are versioned by [`SCHEMA_VERSION`]; the header of
//! every file is pinned by the tests below.
//!
//! Nothing that varies between identical invocations (wall time, thread
//! count) goes into `records.csv`; timings live in `timing.csv`.

use std::path::Path;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const RECORD_HEADER: &str = "experiment,n,k,s,r,model,eps,trial,seed,stream,rel_error,success,iterations,converged,max_tau_error,error";
pub const SUMMARY_HEADER: &str = "experiment,n,k,s,r,model,eps,trials,successes,success_rate,failures,mean_rel_error,median_rel_error,max_rel_error,music_trials,max_tau_error";
pub const TIMING_HEADER: &str = "experiment,n,s,r,eps,trial,wall_ms";
pub const ESTIMATE_HEADER: &str = "trial,channel,source,true_tau,true_nu,est_tau,est_nu,error,matched";
pub const CERTIFICATE_HEADER: &str = "n,k,s,r,model,trial,seed,stream,t0,mu0,mu1_max,concentration_max,concentration_ok,cross_mu,cross_threshold,cross_ok,cond_f_max,cond_f_threshold,cond_f_ok,cond_op_max,cond_op_ok,recursion_gap,range_residual,error";
pub const GOLFING_HEADER: &str = "trial,channel,step,cond_f";

/// One trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub experiment: String,
    pub n: usize,
    pub k: usize,
    pub s: usize,
    /// Sources per channel; `;`-separated when channels differ.
    pub r: String,
    pub model: String,
    pub eps: f64,
    pub trial: usize,
    pub seed: u64,
    /// Random stream the trial drew from.
    pub stream: u64,
    pub rel_error: Option<f64>,
    pub success: bool,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    /// Largest matched wrap-around localisation error over all sources.
    pub max_tau_error: Option<f64>,
    /// Empty on success; otherwise a stable failure tag.
    pub error: String,
}

impl Record {
    fn cell_key(&self) -> (usize, usize, &str, u64) {
        (self.n, self.s, self.r.as_str(), self.eps.to_bits())
    }
}

/// Aggregate over the trials of one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub n: usize,
    pub k: usize,
    pub s: usize,
    pub r: String,
    pub model: String,
    pub eps: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Trials that produced no estimate.
    pub failures: usize,
    pub mean_rel_error: Option<f64>,
    pub median_rel_error: Option<f64>,
    pub max_rel_error: Option<f64>,
    /// Trials with a localisation result.
    pub music_trials: usize,
    pub max_tau_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub experiment: String,
    pub n: usize,
    pub s: usize,
    pub r: String,
    pub eps: f64,
    pub trial: usize,
    pub wall_ms: f64,
}

/// One true source of the channel demo with its matched estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub trial: usize,
    pub channel: usize,
    pub source: usize,
    pub true_tau: f64,
    pub true_nu: f64,
    pub est_tau: Option<f64>,
    pub est_nu: Option<f64>,
    pub error: Option<f64>,
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateRow {
    pub n: usize,
    pub k: usize,
    pub s: usize,
    pub r: usize,
    pub model: String,
    pub trial: usize,
    pub seed: u64,
    pub stream: u64,
    pub t0: Option<usize>,
    pub mu0: Option<f64>,
    pub mu1_max: Option<f64>,
    pub concentration_max: Option<f64>,
    pub concentration_ok: Option<bool>,
    pub cross_mu: Option<f64>,
    pub cross_threshold: Option<f64>,
    pub cross_ok: Option<bool>,
    pub cond_f_max: Option<f64>,
    pub cond_f_threshold: Option<f64>,
    pub cond_f_ok: Option<bool>,
    pub cond_op_max: Option<f64>,
    pub cond_op_ok: Option<bool>,
    pub recursion_gap: Option<f64>,
    pub range_residual: Option<f64>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GolfingRow {
    pub trial: usize,
    pub channel: usize,
    /// Step `t`; row 0 is the initial residual.
    pub step: usize,
    pub cond_f: f64,
}

/// Writes `rows` with a header derived from `T`'s fields. An empty slice still
/// gets its header, taken from `header`.
pub fn write_csv<T: Serialize>(path: &Path, header: &str, rows: &[T]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(std::io::BufWriter::new(file));
    w.write_record(header.split(','))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

/// Groups consecutive records of the same cell.
pub fn summarize(records: &[Record]) -> Vec<Summary> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < records.len() {
        let key = records[start].cell_key();
        let end = start + records[start..].iter().take_while(|r| r.cell_key() == key).count();
        out.push(summarize_cell(&records[start..end]));
        start = end;
    }
    out
}

fn summarize_cell(cell: &[Record]) -> Summary {
    let first = &cell[0];
    let mut errs: Vec<f64> = cell.iter().filter_map(|r| r.rel_error).collect();
    errs.sort_by(f64::total_cmp);
    let successes = cell.iter().filter(|r| r.success).count();
    let mean = (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64);
    let median = (!errs.is_empty()).then(|| {
        let m = errs.len() / 2;
        if errs.len() % 2 == 1 {
            errs[m]
        } else {
            0.5 * (errs[m - 1] + errs[m])
        }
    });
    let taus: Vec<f64> = cell.iter().filter_map(|r| r.max_tau_error).collect();
    Summary {
        experiment: first.experiment.clone(),
        n: first.n,
        k: first.k,
        s: first.s,
        r: first.r.clone(),
        model: first.model.clone(),
        eps: first.eps,
        trials: cell.len(),
        successes,
        success_rate: successes as f64 / cell.len() as f64,
        failures: cell.len() - errs.len(),
        mean_rel_error: mean,
        median_rel_error: median,
        max_rel_error: errs.last().copied(),
        music_trials: taus.len(),
        max_tau_error: taus.iter().copied().reduce(f64::max),
    }
}

/// `manifest.toml`: tool and schema versions plus the resolved configuration.
pub fn write_manifest(dir: &Path, cfg: &ExperimentConfig, extra: &[(&str, String)]) -> Result<()> {
    let mut text = format!(
        "tool = \"mvhl\"\ntool_version = \"{TOOL_VERSION}\"\nschema_version = {SCHEMA_VERSION}\n"
    );
    for (key, value) in extra {
        text.push_str(&format!("{key} = {}\n", toml::Value::String(value.clone())));
    }
    text.push_str("\n[config]\n");
    text.push_str(&cfg.to_toml());
    let path = dir.join("manifest.toml");
    std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fields_of<T: Serialize>(row: &T) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(row).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        text.lines().next().unwrap().to_string()
    }

    fn record(trial: usize, err: Option<f64>) -> Record {
        Record {
            experiment: "phase-transition".into(),
            n: 48,
            k: 2,
            s: 2,
            r: "2".into(),
            model: "dft-rows".into(),
            eps: 0.0,
            trial,
            seed: 1,
            stream: trial as u64,
            rel_error: err,
            success: err.is_some_and(|e| e <= 1e-3),
            iterations: Some(10),
            converged: Some(true),
            max_tau_error: None,
            error: String::new(),
        }
    }

    #[test]
    fn headers_are_pinned() {
        assert_eq!(fields_of(&record(0, None)), RECORD_HEADER);
        let s = summarize(&[record(0, Some(1e-4))]).remove(0);
        assert_eq!(fields_of(&s), SUMMARY_HEADER);
        let t = TimingRow { experiment: String::new(), n: 0, s: 0, r: String::new(), eps: 0.0, trial: 0, wall_ms: 0.0 };
        assert_eq!(fields_of(&t), TIMING_HEADER);
        let e = EstimateRow {
            trial: 0,
            channel: 0,
            source: 0,
            true_tau: 0.0,
            true_nu: 0.0,
            est_tau: None,
            est_nu: None,
            error: None,
            matched: false,
        };
        assert_eq!(fields_of(&e), ESTIMATE_HEADER);
        let g = GolfingRow { trial: 0, channel: 0, step: 0, cond_f: 0.0 };
        assert_eq!(fields_of(&g), GOLFING_HEADER);
        let c = CertificateRow {
            n: 0,
            k: 0,
            s: 0,
            r: 0,
            model: String::new(),
            trial: 0,
            seed: 0,
            stream: 0,
            t0: None,
            mu0: None,
            mu1_max: None,
            concentration_max: None,
            concentration_ok: None,
            cross_mu: None,
            cross_threshold: None,
            cross_ok: None,
            cond_f_max: None,
            cond_f_threshold: None,
            cond_f_ok: None,
            cond_op_max: None,
            cond_op_ok: None,
            recursion_gap: None,
            range_residual: None,
            error: String::new(),
        };
        assert_eq!(fields_of(&c), CERTIFICATE_HEADER);
    }

    #[test]
    fn summary_aggregates_consecutive_cells() {
        let mut recs = vec![record(0, Some(1e-4)), record(1, Some(3e-4)), record(2, None)];
        let mut other = record(0, Some(0.5));
        other.s = 3;
        recs.push(other);
        let sums = summarize(&recs);
        assert_eq!(sums.len(), 2);
        assert_eq!(sums[0].trials, 3);
        assert_eq!(sums[0].successes, 2);
        assert_eq!(sums[0].failures, 1);
        assert!((sums[0].mean_rel_error.unwrap() - 2e-4).abs() < 1e-18);
        assert!((sums[0].median_rel_error.unwrap() - 2e-4).abs() < 1e-18);
        assert_eq!(sums[1].success_rate, 0.0);
    }

    #[test]
    fn csv_has_header_even_when_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_csv::<Record>(&path, RECORD_HEADER, &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), format!("{RECORD_HEADER}\n"));
    }
}
