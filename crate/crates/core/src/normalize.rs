//! Batch min-max normalization over a full score list.

use crate::error::{Error, Result};

/// Value assigned to every element when all scores are equal.
pub const DEGENERATE_VALUE: f64 = 0.5;

struct Span {
    min: f64,
    max: f64,
    // Scales inputs when `max - min` overflows.
    scale: f64,
}

fn span(scores: &[f64]) -> Result<Span> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (index, &value) in scores.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index, value });
        }
        min = min.min(value);
        max = max.max(value);
    }
    let scale = if (max - min).is_finite() { 1.0 } else { 0.5 };
    Ok(Span { min, max, scale })
}

/// `(s - min) / (max - min)` for every element; all `0.5` when `max == min`.
pub fn min_max_normalize(scores: &[f64]) -> Result<Vec<f64>> {
    let Span { min, max, scale } = span(scores)?;
    if max == min {
        return Ok(vec![DEGENERATE_VALUE; scores.len()]);
    }
    let range = max * scale - min * scale;
    Ok(scores
        .iter()
        .map(|&s| (s * scale - min * scale) / range)
        .collect())
}

/// `(max - s) / (max - min)`: the order-reversing variant used for likelihoods.
pub fn min_max_invert_normalize(scores: &[f64]) -> Result<Vec<f64>> {
    let Span { min, max, scale } = span(scores)?;
    if max == min {
        return Ok(vec![DEGENERATE_VALUE; scores.len()]);
    }
    let range = max * scale - min * scale;
    Ok(scores
        .iter()
        .map(|&s| (max * scale - s * scale) / range)
        .collect())
}
