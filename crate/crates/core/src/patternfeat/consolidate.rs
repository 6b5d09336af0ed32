//! Mean, SD, count, ratio and index consolidation of stain values.

/// Arithmetic mean; `None` for an empty input.
pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Population (divide by n) standard deviation; `None` for an empty input.
pub fn sd(values: &[f64]) -> Option<f64> {
    let m = mean(values)?;
    let var = values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / values.len() as f64;
    Some(var.sqrt())
}

pub fn count<F: Fn(f64) -> bool>(values: &[f64], condition: F) -> usize {
    values.iter().filter(|&&x| condition(x)).count()
}

/// Fraction of values meeting the condition; `None` for 0/0.
pub fn ratio<F: Fn(f64) -> bool>(values: &[f64], condition: F) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(count(values, condition) as f64 / values.len() as f64)
    }
}

/// Positions of the values meeting the condition.
pub fn index<F: Fn(f64) -> bool>(values: &[f64], condition: F) -> Vec<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, &x)| condition(x))
        .map(|(i, _)| i)
        .collect()
}
