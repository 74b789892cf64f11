//! Accuracy and group-fairness measurements. Gaps are reported in
//! percentage points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acc: f64,
    pub acc_a0: f64,
    pub acc_a1: f64,
    pub sel_rate_a0: f64,
    pub sel_rate_a1: f64,
    /// `sel_rate_a0 - sel_rate_a1`, in pp.
    pub delta_dp: f64,
    /// `|acc_a0 - acc_a1|`, in pp.
    pub delta_acc: f64,
    /// `acc_a0 - acc_a1`, in pp; kept for diagnostics.
    pub delta_acc_signed: f64,
    /// Demographic-parity gap of the true target on the same rows, in pp.
    pub dp_of_true_target: f64,
}

fn check_binary(name: &str, v: &[u8]) -> Result<()> {
    match v.iter().find(|&&x| x > 1) {
        Some(x) => Err(Error::invalid(format!("{name} holds non-binary value {x}"))),
        None => Ok(()),
    }
}

fn check_lengths(a: &[u8], b: &[u8]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::invalid("empty input"));
    }
    Ok(())
}

pub fn accuracy(pred: &[u8], truth: &[u8]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Per-group `(count, positives, correct)`; `truth` may be omitted.
fn group_tallies(pred: &[u8], truth: Option<&[u8]>, groups: &[u8]) -> Result<[(usize, usize, usize); 2]> {
    check_lengths(pred, groups)?;
    check_binary("groups", groups)?;
    check_binary("predictions", pred)?;
    if let Some(t) = truth {
        check_lengths(pred, t)?;
    }
    let mut tallies = [(0usize, 0usize, 0usize); 2];
    for i in 0..pred.len() {
        let g = &mut tallies[groups[i] as usize];
        g.0 += 1;
        g.1 += pred[i] as usize;
        if let Some(t) = truth {
            g.2 += usize::from(pred[i] == t[i]);
        }
    }
    for (g, t) in tallies.iter().enumerate() {
        if t.0 == 0 {
            return Err(Error::invalid(format!("group A={g} is empty")));
        }
    }
    Ok(tallies)
}

/// `(P(pred=1 | A=0), P(pred=1 | A=1))`.
pub fn selection_rates(pred: &[u8], groups: &[u8]) -> Result<(f64, f64)> {
    let t = group_tallies(pred, None, groups)?;
    Ok((t[0].1 as f64 / t[0].0 as f64, t[1].1 as f64 / t[1].0 as f64))
}

pub fn delta_dp(pred: &[u8], groups: &[u8]) -> Result<f64> {
    let (r0, r1) = selection_rates(pred, groups)?;
    Ok(100.0 * (r0 - r1))
}

/// `(acc | A=0, acc | A=1)`.
pub fn group_accuracies(pred: &[u8], truth: &[u8], groups: &[u8]) -> Result<(f64, f64)> {
    let t = group_tallies(pred, Some(truth), groups)?;
    Ok((t[0].2 as f64 / t[0].0 as f64, t[1].2 as f64 / t[1].0 as f64))
}

pub fn delta_acc(pred: &[u8], truth: &[u8], groups: &[u8]) -> Result<f64> {
    let (a0, a1) = group_accuracies(pred, truth, groups)?;
    Ok(100.0 * (a0 - a1).abs())
}

pub fn dp_of_target(y: &[u8], groups: &[u8]) -> Result<f64> {
    delta_dp(y, groups)
}

pub fn evaluate(pred: &[u8], truth: &[u8], groups: &[u8]) -> Result<MetricsReport> {
    let acc = accuracy(pred, truth)?;
    let (acc_a0, acc_a1) = group_accuracies(pred, truth, groups)?;
    let (sel_rate_a0, sel_rate_a1) = selection_rates(pred, groups)?;
    Ok(MetricsReport {
        acc,
        acc_a0,
        acc_a1,
        sel_rate_a0,
        sel_rate_a1,
        delta_dp: 100.0 * (sel_rate_a0 - sel_rate_a1),
        delta_acc: 100.0 * (acc_a0 - acc_a1).abs(),
        delta_acc_signed: 100.0 * (acc_a0 - acc_a1),
        dp_of_true_target: dp_of_target(truth, groups)?,
    })
}
