//! Small numeric helpers shared across modules.

/// Compensated (Neumaier) summation.
pub(crate) fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut total = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = total + v;
        if total.abs() >= v.abs() {
            comp += (total - t) + v;
        } else {
            comp += (v - t) + total;
        }
        total = t;
    }
    total + comp
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    sum(values.iter().copied()) / values.len() as f64
}

/// Population standard deviation (divides by N).
pub(crate) fn population_std(values: &[f64], mean: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let ss = sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (ss / values.len() as f64).sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_mean_of_tenths() {
        assert_eq!(mean(&[0.1, 0.2, 0.3]) <= 0.2, true);
    }

    #[test]
    fn population_std_divides_by_n() {
        let v = [1.0, 3.0];
        assert_eq!(population_std(&v, mean(&v)), 1.0);
    }
}
