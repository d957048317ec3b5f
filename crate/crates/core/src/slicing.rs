//! Response slicing.
//!
//! A response with at most `H` distinct values is sliced by value. Anything
//! else gets `H` equal-count slices cut at ranks `⌊n·k/H⌋`, with ties at a
//! cut point kept in the lower slice. Slices emptied by ties are dropped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceAssignment {
    /// Zero-based slice label per sample.
    pub labels: Vec<usize>,
    pub counts: Vec<usize>,
    /// Upper edges of every slice but the last; a sample belongs to the first
    /// slice whose edge is `>=` its response. Empty for value slicing.
    pub boundaries: Vec<f64>,
}

impl SliceAssignment {
    /// Number of slices `K`.
    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Slice proportions `nₖ / n`.
    pub fn proportions(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

pub fn slice_response(y: &[f64], h: usize) -> Result<SliceAssignment> {
    let n = y.len();
    if h < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 slices, got {h}"
        )));
    }
    if n < h {
        return Err(Error::InvalidInput(format!(
            "cannot cut {n} samples into {h} slices"
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "response contains non-finite values".into(),
        ));
    }

    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() == 1 {
        return Err(Error::ConstantResponse);
    }

    if distinct.len() <= h {
        let labels = y
            .iter()
            .map(|v| distinct.partition_point(|d| d < v))
            .collect();
        return Ok(assemble(labels, distinct.len(), Vec::new()));
    }

    let mut edges: Vec<f64> = (1..h).map(|k| sorted[n * k / h - 1]).collect();
    edges.dedup();
    // the top edge can coincide with the maximum, which would leave the last slice empty
    while edges.last() == sorted.last() {
        edges.pop();
    }
    let labels = y.iter().map(|v| edges.partition_point(|e| e < v)).collect();
    Ok(assemble(labels, edges.len() + 1, edges))
}

fn assemble(labels: Vec<usize>, k: usize, boundaries: Vec<f64>) -> SliceAssignment {
    let mut counts = vec![0; k];
    for &l in &labels {
        counts[l] += 1;
    }
    debug_assert!(counts.iter().all(|&c| c > 0));
    SliceAssignment {
        labels,
        counts,
        boundaries,
    }
}
