//! The exponential-utility (entropic risk) functional
//! `ρ_θ(Z) = (−2/θ) · ln E[exp((−θ/2) · Z)]` on finite cost distributions.
//!
//! For `θ < 0` large costs are exaggerated, so `ρ_θ(Z) ≥ E[Z]`; as `θ → 0⁻`
//! it tends to the expectation, and for small `|θ|` it is close to
//! `E[Z] − (θ/4) · Var[Z]`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, ln};

/// Strictly negative risk-aversion parameter `θ`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RiskParam(f64);

impl RiskParam {
    /// Smallest accepted `|θ|`.
    pub const MIN_ABS: f64 = 1e-12;

    pub fn new(theta: f64) -> Result<Self> {
        if theta.is_finite() && theta < 0.0 && abs(theta) >= Self::MIN_ABS {
            Ok(RiskParam(theta))
        } else {
            Err(Error::InvalidTheta(theta))
        }
    }

    pub fn theta(self) -> f64 {
        self.0
    }

    /// The positive exponent scale `−θ/2`.
    #[inline]
    pub fn scale(self) -> f64 {
        -self.0 / 2.0
    }
}

/// Tolerance on the probability sum of a user-supplied distribution.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// A finite list of `(cost, probability)` atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct CostDistribution {
    atoms: Vec<(f64, f64)>,
}

impl CostDistribution {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        let mut sum = 0.0;
        for (i, &(value, prob)) in atoms.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::InvalidDistribution(format!("atom {i} has non-finite value {value}")));
            }
            if !prob.is_finite() || prob < 0.0 {
                return Err(Error::InvalidDistribution(format!("atom {i} has invalid probability {prob}")));
            }
            sum += prob;
        }
        if abs(sum - 1.0) > PROBABILITY_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {sum}")));
        }
        Ok(CostDistribution { atoms })
    }

    /// A single atom with probability one.
    pub fn deterministic(value: f64) -> Result<Self> {
        Self::new(alloc::vec![(value, 1.0)])
    }

    /// Atoms built by enumeration, whose probabilities are products of
    /// validated kernel entries. Only non-emptiness is assumed.
    pub(crate) fn from_enumeration(atoms: Vec<(f64, f64)>) -> Self {
        debug_assert!(!atoms.is_empty());
        CostDistribution { atoms }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Every value shifted by `delta`.
    pub fn shifted(&self, delta: f64) -> Self {
        CostDistribution { atoms: self.atoms.iter().map(|&(v, p)| (v + delta, p)).collect() }
    }

    pub fn variance(&self) -> f64 {
        let mean = expectation(self);
        self.atoms.iter().map(|&(v, p)| p * (v - mean) * (v - mean)).sum()
    }
}

/// `ρ_θ(Z) = (−2/θ) · ln Σ p_i · exp((−θ/2) · z_i)`, evaluated with the
/// maximum atom value over the support as shift so every exponent is ≤ 0.
pub fn entropic_risk(dist: &CostDistribution, rp: RiskParam) -> f64 {
    let scale = rp.scale();
    let (shift, log_sum) = crate::math::shifted_log_sum_exp(dist.atoms.iter().copied(), scale)
        .unwrap_or((0.0, ln(0.0)));
    shift + log_sum / scale
}

/// Whittle's mean-variance approximation `E[Z] − (θ/4) · Var[Z]`, using the
/// exact two-pass variance over the atoms.
pub fn mean_variance_approx(dist: &CostDistribution, rp: RiskParam) -> f64 {
    expectation(dist) - rp.theta() / 4.0 * dist.variance()
}

/// `E[Z] = Σ p_i · z_i`.
pub fn expectation(dist: &CostDistribution) -> f64 {
    dist.atoms.iter().map(|&(v, p)| p * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn rp(theta: f64) -> RiskParam {
        RiskParam::new(theta).unwrap()
    }

    fn coin() -> CostDistribution {
        CostDistribution::new(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap()
    }

    #[test]
    fn risk_param_bounds() {
        assert!(RiskParam::new(-1.0).is_ok());
        assert!(RiskParam::new(-1e-12).is_ok());
        for bad in [0.0, 1.0, -1e-13, f64::NAN, f64::NEG_INFINITY, -0.0] {
            assert!(matches!(RiskParam::new(bad), Err(Error::InvalidTheta(_))), "{bad}");
        }
    }

    #[test]
    fn distribution_validation() {
        assert!(CostDistribution::new(vec![]).is_err());
        assert!(CostDistribution::new(vec![(0.0, 0.5), (1.0, 0.4)]).is_err());
        assert!(CostDistribution::new(vec![(0.0, -0.5), (1.0, 1.5)]).is_err());
        assert!(CostDistribution::new(vec![(f64::NAN, 1.0)]).is_err());
        assert!(CostDistribution::new(vec![(-3.0, 1.0)]).is_ok());
    }

    #[test]
    fn deterministic_atom() {
        let d = CostDistribution::deterministic(5.0).unwrap();
        assert_eq!(entropic_risk(&d, rp(-1.0)), 5.0);
        assert_eq!(mean_variance_approx(&d, rp(-1.0)), 5.0);
        assert_eq!(expectation(&d), 5.0);
    }

    // Reference values computed with 40-digit arithmetic.
    #[test]
    fn coin_flip_values() {
        let d = coin();
        assert!((entropic_risk(&d, rp(-2.0)) - 0.620_114_506_958_277_5).abs() < 1e-15);
        assert!((entropic_risk(&d, rp(-0.01)) - 0.500_624_999_348_959_4).abs() < 1e-13);
        assert_eq!(mean_variance_approx(&d, rp(-2.0)), 0.625);
        assert!((mean_variance_approx(&d, rp(-0.01)) - 0.500_625).abs() < 1e-15);
        assert!((entropic_risk(&d, rp(-0.01)) - mean_variance_approx(&d, rp(-0.01))).abs() < 2e-7);
        assert_eq!(expectation(&d), 0.5);
    }

    #[test]
    fn flip_instance_policy_a() {
        let d = CostDistribution::new(vec![(0.0, 0.9), (10.0, 0.1)]).unwrap();
        assert!((entropic_risk(&d, rp(-1.0)) - 5.512_577_684_867_173).abs() < 1e-13);
    }

    #[test]
    fn expectation_matches_independent_accumulation() {
        let vals = [3.5, -1.0, 7.25, 0.0, 2.0, 9.5, -4.5, 1.25, 6.0, 8.0];
        let w = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0];
        let total: f64 = w.iter().sum();
        let d = CostDistribution::new(vals.iter().zip(&w).map(|(&v, &p)| (v, p / total)).collect()).unwrap();
        // Independent route: weighted sum then a single division.
        let mut num = 0.0;
        for i in (0..10).rev() {
            num += vals[i] * w[i];
        }
        assert!((expectation(&d) - num / total).abs() < 1e-12);
    }

    #[test]
    fn log_space_stability() {
        let d = CostDistribution::new(vec![(1e4, 0.5), (9_999.0, 0.25), (0.0, 0.25)]).unwrap();
        let r = entropic_risk(&d, rp(-10.0));
        assert!(r.is_finite());
        assert!(r <= 1e4 && r > 9_999.0);
        // Naive evaluation overflows.
        assert!((5.0f64 * 1e4).exp().is_infinite());
    }

    #[test]
    fn zero_probability_atoms_do_not_shift() {
        let d = CostDistribution::new(vec![(1e300, 0.0), (1.0, 1.0)]).unwrap();
        assert_eq!(entropic_risk(&d, rp(-3.0)), 1.0);
    }

    fn dist_strategy(max_atoms: usize, lo: f64, hi: f64) -> impl Strategy<Value = CostDistribution> {
        prop::collection::vec((lo..hi, 0.01f64..1.0), 1..=max_atoms).prop_map(|raw| {
            let total: f64 = raw.iter().map(|a| a.1).sum();
            let mut atoms: Vec<(f64, f64)> = raw.iter().map(|&(v, w)| (v, w / total)).collect();
            // Fold the rounding residue into the last atom.
            let s: f64 = atoms.iter().map(|a| a.1).sum();
            atoms.last_mut().unwrap().1 += 1.0 - s;
            CostDistribution::new(atoms).unwrap()
        })
    }

    proptest! {
        #[test]
        fn jensen_bound(d in dist_strategy(8, -10.0, 10.0), theta in -10.0f64..-1e-6) {
            prop_assert!(entropic_risk(&d, rp(theta)) >= expectation(&d) - 1e-10);
        }

        #[test]
        fn monotone_in_theta(d in dist_strategy(8, 0.0, 10.0), a in -10.0f64..-1e-6, b in -10.0f64..-1e-6) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(entropic_risk(&d, rp(lo)) >= entropic_risk(&d, rp(hi)) - 1e-10);
        }

        #[test]
        fn translation_invariance(d in dist_strategy(8, 0.0, 10.0), c in -50.0f64..50.0, theta in -5.0f64..-1e-3) {
            let lhs = entropic_risk(&d.shifted(c), rp(theta));
            prop_assert!((lhs - entropic_risk(&d, rp(theta)) - c).abs() <= 1e-9);
        }

        #[test]
        fn monotone_in_cost(d in dist_strategy(8, 0.0, 10.0), i in 0usize..8, bump in 0.0f64..5.0, theta in -5.0f64..-1e-3) {
            let i = i % d.len();
            let mut atoms = d.atoms().to_vec();
            atoms[i].0 += bump;
            let bumped = CostDistribution::new(atoms).unwrap();
            prop_assert!(entropic_risk(&bumped, rp(theta)) >= entropic_risk(&d, rp(theta)) - 1e-12);
        }

        // Halving |θ| at least halves the gap to the mean, up to a factor 1.1.
        #[test]
        fn risk_neutral_limit(d in dist_strategy(6, 0.0, 1.0), theta in -0.1f64..-1e-3) {
            prop_assume!(d.variance() > 1e-6);
            let gap = |th: f64| entropic_risk(&d, rp(th)) - expectation(&d);
            prop_assert!(gap(theta / 2.0) <= 1.1 * gap(theta) / 2.0 + 1e-15);
        }
    }

    #[test]
    fn whittle_gap_shrinks_quadratically() {
        let dists = [
            coin(),
            CostDistribution::new(vec![(0.0, 0.9), (10.0, 0.1)]).unwrap(),
            CostDistribution::new(vec![(1.0, 0.2), (3.0, 0.5), (7.0, 0.3)]).unwrap(),
        ];
        for d in &dists {
            for theta in [-0.1, -0.05, -0.025] {
                let gap = |th: f64| (entropic_risk(d, rp(th)) - mean_variance_approx(d, rp(th))).abs();
                assert!(gap(theta / 2.0) <= 0.3 * gap(theta), "{d:?} at {theta}");
            }
        }
    }
}
