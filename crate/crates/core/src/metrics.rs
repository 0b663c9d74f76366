use crate::error::{Error, Result};
use crate::tensor::{frobenius, DenseTensor3};

/// `||x - reference||_F / ||reference||_F`.
pub fn rse(x: &DenseTensor3, reference: &DenseTensor3) -> Result<f64> {
    let denom = frobenius(reference);
    if denom == 0.0 {
        return Err(Error::Degenerate("reference tensor has zero norm".into()));
    }
    Ok(frobenius(&x.sub(reference)?) / denom)
}

/// Scores paired with binary labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoredLabels {
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
}

impl ScoredLabels {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} scores but {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if let Some(s) = scores.iter().find(|s| s.is_nan()) {
            return Err(Error::NonFinite(format!("score {s}")));
        }
        Ok(Self { scores, labels })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn flipped(&self) -> Self {
        Self {
            scores: self.scores.clone(),
            labels: self.labels.iter().map(|l| !l).collect(),
        }
    }
}

/// ROC area as the Mann-Whitney statistic, ties counted as one half.
pub fn auc(data: &ScoredLabels) -> Result<f64> {
    let n = data.len();
    let positives = data.labels.iter().filter(|&&l| l).count();
    let negatives = n - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Input(format!(
            "auc needs both classes, got {positives} positive and {negatives} negative"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| data.scores[a].total_cmp(&data.scores[b]));
    // average 1-based ranks over tie groups
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && data.scores[order[j + 1]] == data.scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if data.labels[k] {
                rank_sum += avg;
            }
        }
        i = j + 1;
    }
    let p = positives as f64;
    let u = rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}
