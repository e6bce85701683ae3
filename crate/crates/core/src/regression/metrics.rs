use super::{RegressionError, Result};

fn check_lengths(predictions: &[f64], targets: &[f64]) -> Result<()> {
    if predictions.is_empty() || predictions.len() != targets.len() {
        return Err(RegressionError::InvalidParameter(format!(
            "need equal, nonzero lengths (got {} predictions, {} targets)",
            predictions.len(),
            targets.len()
        )));
    }
    Ok(())
}

/// Mean absolute error, in the units of the targets.
pub fn mae(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_lengths(predictions, targets)?;
    let total: f64 = predictions.iter().zip(targets).map(|(p, t)| (p - t).abs()).sum();
    Ok(total / targets.len() as f64)
}

/// Mean absolute percentage error, in percent.
pub fn mape(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_lengths(predictions, targets)?;
    if let Some(index) = targets.iter().position(|&t| t == 0.0) {
        return Err(RegressionError::ZeroTarget { index });
    }
    let total: f64 = predictions.iter().zip(targets).map(|(p, t)| ((p - t) / t).abs()).sum();
    Ok(100.0 * total / targets.len() as f64)
}
