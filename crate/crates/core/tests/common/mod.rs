#![allow(dead_code)]

use biaslab::models::GRID_STEPS;
use biaslab::RngStream;

/// A small threshold-fitting instance with distinct scores and both groups
/// present.
pub struct Instance {
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
    pub groups: Vec<u8>,
}

pub fn random_instance(rng: &mut RngStream) -> Instance {
    let n = 4 + rng.next_index(9);
    let mut groups: Vec<u8> = (0..n).map(|_| u8::from(rng.next_f64() < 0.5)).collect();
    groups[0] = 0;
    groups[1] = 1;
    let mut scores: Vec<f64> = Vec::with_capacity(n);
    while scores.len() < n {
        let s = rng.next_f64();
        if !scores.contains(&s) {
            scores.push(s);
        }
    }
    let labels = scores
        .iter()
        .map(|&s| u8::from(rng.next_f64() < 0.2 + 0.6 * s))
        .collect();
    Instance { scores, labels, groups }
}

/// Best accuracy over every pair of per-group top-k selections whose
/// selection rates differ by at most `1 / GRID_STEPS`.
pub fn brute_force_best_accuracy(inst: &Instance) -> f64 {
    let n = inst.scores.len();
    let mut by_group: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for i in 0..n {
        by_group[inst.groups[i] as usize].push(i);
    }
    for rows in &mut by_group {
        rows.sort_by(|&i, &j| inst.scores[j].total_cmp(&inst.scores[i]));
    }
    let (n0, n1) = (by_group[0].len(), by_group[1].len());
    let mut best = 0usize;
    for k0 in 0..=n0 {
        for k1 in 0..=n1 {
            let gap = (k0 as f64 / n0 as f64 - k1 as f64 / n1 as f64).abs();
            if gap > 1.0 / GRID_STEPS as f64 + 1e-12 {
                continue;
            }
            let mut pred = vec![0u8; n];
            for &i in &by_group[0][..k0] {
                pred[i] = 1;
            }
            for &i in &by_group[1][..k1] {
                pred[i] = 1;
            }
            let correct = pred.iter().zip(&inst.labels).filter(|(p, y)| p == y).count();
            best = best.max(correct);
        }
    }
    best as f64 / n as f64
}
