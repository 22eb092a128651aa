//! Scoring a suspect set against ground-truth labels.
//!
//! Trojan granularity is the wire (gate output). The universe is the set
//! of analyzed wires (everything except pure primary inputs); counts always
//! partition it. Rates with an empty denominator are reported as undefined
//! (`None`, JSON `null`), never silently as zero.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::Real;
use crate::store::fnv1a64;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("labels file is empty")]
    EmptyLabels,
    #[error("label {0:?} does not name any known wire")]
    UnresolvableLabel(String),
    #[error("label {0:?} is outside the analysis universe")]
    LabelOutsideUniverse(String),
}

/// Ground-truth Trojan wires, with file provenance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSet {
    pub wires: BTreeSet<String>,
    pub source: String,
    /// FNV-1a of the label file bytes.
    pub checksum: u64,
}

/// Parses a labels file: one wire name per line, `#` comments and blank
/// lines ignored.
pub fn parse_labels(text: &str, source: &str) -> Result<LabelSet, EvalError> {
    let mut wires = BTreeSet::new();
    for raw in text.lines() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let name = line.trim();
        if !name.is_empty() {
            wires.insert(name.to_string());
        }
    }
    if wires.is_empty() {
        return Err(EvalError::EmptyLabels);
    }
    Ok(LabelSet {
        wires,
        source: source.to_string(),
        checksum: fnv1a64(text.as_bytes()),
    })
}

impl LabelSet {
    /// Every label must name a known wire; unresolvable names are hard
    /// errors, not silently dropped.
    pub fn resolve_against(&self, known_wires: &BTreeSet<String>) -> Result<(), EvalError> {
        for w in &self.wires {
            if !known_wires.contains(w) {
                return Err(EvalError::UnresolvableLabel(w.clone()));
            }
        }
        Ok(())
    }
}

/// Detection quality counts and rates, optionally annotated with the
/// suspect transition statistics of a simulation campaign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics<F> {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fneg: usize,
    /// tp / (tp + fn); undefined when there are no Trojan labels.
    pub tpr: Option<F>,
    /// tn / (tn + fp); undefined when every wire is a Trojan.
    pub tnr: Option<F>,
    /// 1 - tnr.
    pub fpr: Option<F>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tr_max: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tr_ave: Option<F>,
}

/// Scores `suspects` against `labels` over `universe`.
pub fn score<F: Real>(
    suspects: &[String],
    labels: &LabelSet,
    universe: &[String],
) -> Result<EvalMetrics<F>, EvalError> {
    let universe_set: BTreeSet<&str> = universe.iter().map(|s| s.as_str()).collect();
    for w in &labels.wires {
        if !universe_set.contains(w.as_str()) {
            return Err(EvalError::LabelOutsideUniverse(w.clone()));
        }
    }
    let suspect_set: BTreeSet<&str> = suspects.iter().map(|s| s.as_str()).collect();
    let mut tp = 0;
    let mut fp = 0;
    let mut tn = 0;
    let mut fneg = 0;
    for w in &universe_set {
        let is_trojan = labels.wires.contains(*w);
        let flagged = suspect_set.contains(*w);
        match (is_trojan, flagged) {
            (true, true) => tp += 1,
            (true, false) => fneg += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    let ratio = |num: usize, den: usize| -> Option<F> {
        if den == 0 {
            None
        } else {
            Some(F::from_count(num) / F::from_count(den))
        }
    };
    let tpr = ratio(tp, tp + fneg);
    let tnr = ratio(tn, tn + fp);
    let fpr = tnr.map(|t| F::one() - t);
    Ok(EvalMetrics {
        tp,
        fp,
        tn,
        fneg,
        tpr,
        tnr,
        fpr,
        tr_max: None,
        tr_ave: None,
    })
}
