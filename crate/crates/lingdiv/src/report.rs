//! TSV renderings of the reports; every report is also written as JSON.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use lingdiv_core::corpus::SourceStats;
use lingdiv_core::encoder::StabilityReport;
use serde::Serialize;

use crate::error::Result;
use crate::io::{to_json_string, write_atomic};

/// `<prefix>.tsv` and `<prefix>.json`.
pub fn twin_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    let with = |ext: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    (with(".tsv"), with(".json"))
}

pub fn write_twins<T: Serialize + ?Sized>(prefix: &Path, tsv: &str, json: &T) -> Result<()> {
    let (t, j) = twin_paths(prefix);
    write_atomic(&t, tsv.as_bytes())?;
    write_atomic(&j, to_json_string(json).as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountRow {
    pub source: String,
    pub docs: usize,
    pub words: usize,
}

pub fn counts_tsv(rows: &[CountRow]) -> String {
    let mut out = String::from("source\tdocs\twords\n");
    for r in rows {
        let _ = writeln!(out, "{}\t{}\t{}", r.source, r.docs, r.words);
    }
    out
}

pub fn diversity_tsv(rows: &[SourceStats]) -> String {
    let mut out = String::from("source\tdocs\twords\tdiversity_mean\tdiversity_std\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{:.4}\t{:.4}",
            r.source, r.doc_count, r.word_count, r.diversity_mean, r.diversity_std
        );
    }
    out
}

pub fn probe_tsv(report: &StabilityReport) -> String {
    let mut out = String::from("regime\tlr\toutcome\tsteps\tmax_grad_norm\tfinal_loss\n");
    for r in &report.records {
        let outcome = match r.outcome {
            lingdiv_core::encoder::ProbeOutcome::Stable => "stable",
            lingdiv_core::encoder::ProbeOutcome::Exploded => "exploded",
        };
        let _ = writeln!(
            out,
            "{}\t{:e}\t{outcome}\t{}\t{:.4e}\t{:.4}",
            r.regime, r.lr, r.steps_run, r.max_grad_norm, r.final_loss
        );
    }
    out.push_str("\nregime\tmax_stable_lr\n");
    for (regime, lr) in &report.max_stable_lr {
        match lr {
            Some(lr) => {
                let _ = writeln!(out, "{regime}\t{lr:e}");
            }
            None => {
                let _ = writeln!(out, "{regime}\t-");
            }
        }
    }
    out
}
