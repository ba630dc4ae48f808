//! Aggregates over per-viewpoint repetition timings.

use crate::error::{Error, Result};

/// Median of a non-empty slice; even lengths average the two middle values.
pub fn median(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    Ok(if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) * 0.5
    })
}

/// Median over repetitions for each viewpoint, then the maximum over viewpoints.
/// `samples[viewpoint][repetition]`; rows must share one non-zero length.
pub fn max_of_medians(samples: &[Vec<f64>]) -> Result<f64> {
    let reps = samples.first().map(Vec::len).ok_or(Error::EmptyInput)?;
    if reps == 0 {
        return Err(Error::EmptyInput);
    }
    if let Some(bad) = samples.iter().position(|r| r.len() != reps) {
        return Err(Error::InvalidArgument(format!(
            "sample matrix is ragged: row {bad} has {} repetitions, row 0 has {reps}",
            samples[bad].len()
        )));
    }
    samples
        .iter()
        .map(|r| median(r))
        .try_fold(f64::NEG_INFINITY, |m, x| Ok(m.max(x?)))
}

pub fn mean(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// Nearest-rank percentile, `p` in (0, 100].
pub fn percentile(samples: &[f64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(p > 0.0 && p <= 100.0) {
        return Err(Error::InvalidArgument(format!(
            "percentile {p} outside (0, 100]"
        )));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * s.len() as f64).ceil() as usize;
    Ok(s[rank.clamp(1, s.len()) - 1])
}
