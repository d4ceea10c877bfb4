use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
}

impl ScoreSet {
    /// Parses `label score` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let mut set = ScoreSet::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(label), Some(score), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(EvalError::Parameter(format!("line {}: expected `label score`", n + 1)));
            };
            let score: f64 = score
                .parse()
                .map_err(|_| EvalError::Parameter(format!("line {}: bad score {score:?}", n + 1)))?;
            match label {
                "genuine" => set.genuine.push(score),
                "impostor" => set.impostor.push(score),
                other => return Err(EvalError::Parameter(format!("line {}: unknown label {other:?}", n + 1))),
            }
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EerResult {
    pub eer: f64,
    /// Decision threshold at the crossing, expressed as the midpoint between
    /// the neighbouring distinct scores.
    pub threshold: f64,
}

/// Equal error rate with accept-if-score-at-least-threshold semantics.
/// Operating points are taken at each distinct score plus one above the
/// maximum; the EER is linearly interpolated where FAR - FRR changes sign.
pub fn compute_eer(scores: &ScoreSet) -> Result<EerResult, EvalError> {
    if scores.genuine.is_empty() || scores.impostor.is_empty() {
        return Err(EvalError::Parameter("genuine and impostor scores must both be non-empty".into()));
    }
    if scores.genuine.iter().chain(&scores.impostor).any(|s| !s.is_finite()) {
        return Err(EvalError::Parameter("scores must be finite".into()));
    }
    let mut gen = scores.genuine.clone();
    let mut imp = scores.impostor.clone();
    gen.sort_by(f64::total_cmp);
    imp.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = gen.iter().chain(&imp).copied().collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();

    let (ng, ni) = (gen.len() as f64, imp.len() as f64);
    // (far, frr, reported threshold); the last point rejects everything
    let mut points = Vec::with_capacity(distinct.len() + 1);
    for (k, &t) in distinct.iter().enumerate() {
        let far = (imp.len() - imp.partition_point(|&s| s < t)) as f64 / ni;
        let frr = gen.partition_point(|&s| s < t) as f64 / ng;
        let shown = if k == 0 { t } else { 0.5 * (distinct[k - 1] + t) };
        points.push((far, frr, shown));
    }
    points.push((0.0, 1.0, *distinct.last().expect("non-empty")));

    let mut prev = points[0];
    for &p in &points {
        let d = p.0 - p.1;
        if d <= 0.0 {
            let dp = prev.0 - prev.1;
            if d == 0.0 || dp <= 0.0 {
                return Ok(EerResult { eer: p.0, threshold: p.2 });
            }
            let lambda = dp / (dp - d);
            return Ok(EerResult {
                eer: prev.0 + lambda * (p.0 - prev.0),
                threshold: prev.2 + lambda * (p.2 - prev.2),
            });
        }
        prev = p;
    }
    unreachable!("the reject-all point always has FAR - FRR = -1")
}
