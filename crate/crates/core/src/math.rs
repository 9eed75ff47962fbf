//! Thin wrappers over `libm` so the numeric code reads like `std`.

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// Shifted log-sum-exp of `scale * value` weighted by `prob`.
///
/// Returns `(shift, log_sum)` with `shift = max value` over atoms with positive
/// probability and `log_sum = ln(Σ prob · exp(scale · (value − shift)) / Σ prob)`,
/// so the full quantity is `scale · shift + log_sum`. Atoms with zero
/// probability are excluded from both the shift and the sum. `scale` must be
/// positive, which keeps every exponent ≤ 0.
///
/// Dividing by the total mass removes the rounding residue of rows that sum to
/// one only approximately: equal values give `log_sum == 0` exactly.
///
/// Returns `None` when no atom has positive probability.
pub(crate) fn shifted_log_sum_exp<I>(atoms: I, scale: f64) -> Option<(f64, f64)>
where
    I: Iterator<Item = (f64, f64)> + Clone,
{
    let mut shift = f64::NEG_INFINITY;
    let mut any = false;
    for (value, prob) in atoms.clone() {
        if prob > 0.0 {
            any = true;
            if value > shift {
                shift = value;
            }
        }
    }
    if !any {
        return None;
    }
    let mut sum = 0.0;
    let mut mass = 0.0;
    for (value, prob) in atoms {
        if prob > 0.0 {
            sum += prob * exp(scale * (value - shift));
            mass += prob;
        }
    }
    Some((shift, ln(sum / mass)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_lse_ignores_zero_probability_atoms() {
        let atoms = [(1.0e6, 0.0), (2.0, 0.5), (4.0, 0.5)];
        let (shift, log_sum) = shifted_log_sum_exp(atoms.iter().copied(), 1.0).unwrap();
        assert_eq!(shift, 4.0);
        let expected = ln(0.5 * exp(-2.0) + 0.5);
        assert!(abs(log_sum - expected) < 1e-15);
    }

    #[test]
    fn shifted_lse_empty_support() {
        assert!(shifted_log_sum_exp([(1.0, 0.0)].iter().copied(), 1.0).is_none());
    }

    #[test]
    fn shifted_lse_large_values() {
        // ln(e^1234 + e^1232) = 1232 + ln(e^2 + 1)
        let (shift, log_sum) = shifted_log_sum_exp([(1234.0, 0.5), (1232.0, 0.5)].iter().copied(), 1.0).unwrap();
        assert!(abs(shift + log_sum - (1_234.126_928_011_043 + ln(0.5))) < 1e-12);
    }

    #[test]
    fn constant_values_are_exact() {
        let row = [(3.0, 0.1); 10];
        assert!(row.iter().map(|a| a.1).sum::<f64>() != 1.0);
        assert_eq!(shifted_log_sum_exp(row.iter().copied(), 0.5), Some((3.0, 0.0)));
    }
}
