//! Group-specific score thresholds that equalize selection rates
//! (demographic parity) while keeping as much accuracy as possible.
//!
//! For each common rate `r` on the grid `{0, 1/G, ..., 1}` each group keeps
//! its top `round(r * n_g)` scores: the threshold is the midpoint between the
//! last rejected and the first accepted order statistic, with `+inf` / `-inf`
//! for selecting nobody / everybody. A grid point is admissible only if the
//! realized selection rates on the fitting data differ by at most `1/G`
//! (tied scores can make them drift from `r`). The admissible `r` with the
//! highest accuracy wins; ties go to the smaller `r`. `r = 0` is always
//! admissible.

use crate::error::{Error, Result};

pub const GRID_STEPS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupThresholds {
    pub threshold_a0: f64,
    pub threshold_a1: f64,
    pub target_selection_rate: f64,
}

impl GroupThresholds {
    pub fn for_group(&self, group: u8) -> f64 {
        if group == 0 {
            self.threshold_a0
        } else {
            self.threshold_a1
        }
    }
}

/// Threshold selecting the top `k` of `sorted` (ascending) scores.
fn top_k_threshold(sorted: &[f64], k: usize) -> f64 {
    let n = sorted.len();
    if k == 0 {
        f64::INFINITY
    } else if k >= n {
        f64::NEG_INFINITY
    } else {
        let lo = sorted[n - k - 1];
        let hi = sorted[n - k];
        lo + (hi - lo) / 2.0
    }
}

fn check_inputs(scores: &[f64], groups: &[u8]) -> Result<()> {
    if scores.len() != groups.len() {
        return Err(Error::invalid(format!(
            "{} scores but {} group labels",
            scores.len(),
            groups.len()
        )));
    }
    if let Some(g) = groups.iter().find(|&&g| g > 1) {
        return Err(Error::invalid(format!("non-binary group label {g}")));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::invalid(format!("score {s} is not a number")));
    }
    Ok(())
}

pub fn fit_dp_thresholds(scores: &[f64], labels: &[u8], groups: &[u8]) -> Result<GroupThresholds> {
    check_inputs(scores, groups)?;
    if labels.len() != scores.len() {
        return Err(Error::invalid(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let mut sorted: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (&s, &g) in scores.iter().zip(groups) {
        sorted[g as usize].push(s);
    }
    for (g, s) in sorted.iter().enumerate() {
        if s.is_empty() {
            return Err(Error::invalid(format!("group A={g} has no rows")));
        }
    }
    for s in &mut sorted {
        s.sort_by(f64::total_cmp);
    }
    let sizes = [sorted[0].len(), sorted[1].len()];
    let tolerance = 1.0 / GRID_STEPS as f64 + 1e-12;

    let mut best: Option<(usize, GroupThresholds)> = None;
    for step in 0..=GRID_STEPS {
        let r = step as f64 / GRID_STEPS as f64;
        let th = GroupThresholds {
            threshold_a0: top_k_threshold(&sorted[0], (r * sizes[0] as f64).round() as usize),
            threshold_a1: top_k_threshold(&sorted[1], (r * sizes[1] as f64).round() as usize),
            target_selection_rate: r,
        };
        let mut selected = [0usize; 2];
        let mut correct = 0usize;
        for i in 0..scores.len() {
            let g = groups[i];
            let pred = u8::from(scores[i] > th.for_group(g));
            selected[g as usize] += pred as usize;
            correct += usize::from(pred == labels[i]);
        }
        let gap = selected[0] as f64 / sizes[0] as f64 - selected[1] as f64 / sizes[1] as f64;
        if gap.abs() > tolerance {
            continue;
        }
        if best.is_none_or(|(c, _)| correct > c) {
            best = Some((correct, th));
        }
    }
    Ok(best.expect("r = 0 is always admissible").1)
}

pub fn apply_thresholds(scores: &[f64], groups: &[u8], th: &GroupThresholds) -> Result<Vec<u8>> {
    check_inputs(scores, groups)?;
    Ok(scores
        .iter()
        .zip(groups)
        .map(|(&s, &g)| u8::from(s > th.for_group(g)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::selection_rates;

    #[test]
    fn identical_groups_share_a_threshold() {
        let s = [0.1, 0.4, 0.35, 0.8, 0.9, 0.65];
        let mut scores = s.to_vec();
        scores.extend_from_slice(&s);
        let labels = [0, 0, 1, 1, 1, 0, 0, 0, 1, 1, 1, 0];
        let groups = [0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1];
        let th = fit_dp_thresholds(&scores, &labels, &groups).unwrap();
        assert_eq!(th.threshold_a0, th.threshold_a1);
    }

    #[test]
    fn missing_group_is_an_error() {
        assert!(fit_dp_thresholds(&[0.1, 0.2], &[0, 1], &[0, 0]).is_err());
        assert!(fit_dp_thresholds(&[0.1, 0.2], &[0, 1], &[1, 1]).is_err());
        assert!(fit_dp_thresholds(&[0.1], &[0, 1], &[0, 1]).is_err());
    }

    #[test]
    fn sentinel_thresholds() {
        let scores = [0.0, 0.3, 1.0, 0.7];
        let groups = [0, 1, 0, 1];
        let none = GroupThresholds {
            threshold_a0: f64::INFINITY,
            threshold_a1: f64::INFINITY,
            target_selection_rate: 0.0,
        };
        assert_eq!(apply_thresholds(&scores, &groups, &none).unwrap(), vec![0; 4]);
        let all = GroupThresholds {
            threshold_a0: f64::NEG_INFINITY,
            threshold_a1: f64::NEG_INFINITY,
            target_selection_rate: 1.0,
        };
        let labels = apply_thresholds(&scores, &groups, &all).unwrap();
        assert_eq!(labels, vec![1; 4]);
        let (r0, r1) = selection_rates(&labels, &groups).unwrap();
        assert_eq!(r0 - r1, 0.0);
    }

    #[test]
    fn top_k_threshold_selects_exactly_k_distinct_scores() {
        let sorted = [0.1, 0.2, 0.5, 0.9];
        for k in 0..=4 {
            let t = top_k_threshold(&sorted, k);
            assert_eq!(sorted.iter().filter(|&&s| s > t).count(), k);
        }
        assert_eq!(top_k_threshold(&sorted, 1), 0.7);
    }

    #[test]
    fn perfect_scores_are_recovered_when_base_rates_match() {
        let scores: Vec<f64> = (0..40).map(|i| f64::from(i % 20) / 20.0).collect();
        let labels: Vec<u8> = scores.iter().map(|&s| u8::from(s >= 0.5)).collect();
        let groups: Vec<u8> = (0..40).map(|i| u8::from(i >= 20)).collect();
        let th = fit_dp_thresholds(&scores, &labels, &groups).unwrap();
        // every grid rate that rounds to the top 10 per group ties; the
        // smallest one is reported
        assert!(th.target_selection_rate <= 0.5);
        assert_eq!(apply_thresholds(&scores, &groups, &th).unwrap(), labels);
    }
}
