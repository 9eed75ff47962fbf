//! Finite approximations of a scalar affine system with Gaussian noise and
//! quadratic costs:
//!
//! ```text
//! x' = a·x + b·u + w,   w ~ N(0, σ²)
//! c_t(x, u) = q·x² + r·u²,   c_N(x) = qN·x²
//! ```
//!
//! States live on a uniform grid over `[x_lo, x_hi]`; successors are snapped to
//! the nearest grid point and clamped to the bounds, so no probability mass is
//! lost. The noise is replaced by `k` equal-probability atoms at the normal
//! quantiles of the bin midpoints `(i + 0.5)/k`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{ceil, exp, ln, sqrt};
use crate::model::{FiniteModel, ModelTables};

/// Default upper limits on grid sizes.
pub const MAX_STATE_POINTS: usize = 2048;
pub const MAX_NOISE_ATOMS: usize = 64;

/// Continuous problem description.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine1DSpec {
    pub horizon: usize,
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub x_bounds: (f64, f64),
    pub controls: Vec<f64>,
    pub q: f64,
    pub r: f64,
    pub q_terminal: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub state_points: usize,
    pub noise_atoms: usize,
}

impl Affine1DSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        for (name, v) in [("a", self.a), ("b", self.b)] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return bad(format!("sigma must be positive and finite, got {}", self.sigma));
        }
        let (lo, hi) = self.x_bounds;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(format!("x_bounds must satisfy lo < hi, got [{lo}, {hi}]"));
        }
        if self.controls.is_empty() {
            return bad("controls must be non-empty".into());
        }
        if self.controls.iter().any(|u| !u.is_finite()) {
            return bad("controls must be finite".into());
        }
        for (name, v) in [("q", self.q), ("r", self.r), ("qN", self.q_terminal)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        Ok(())
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_STATE_POINTS).contains(&self.state_points) {
            return Err(Error::InvalidArgument(format!(
                "state_points must be in 2..={MAX_STATE_POINTS}, got {}",
                self.state_points
            )));
        }
        if !(2..=MAX_NOISE_ATOMS).contains(&self.noise_atoms) {
            return Err(Error::InvalidArgument(format!(
                "noise_atoms must be in 2..={MAX_NOISE_ATOMS}, got {}",
                self.noise_atoms
            )));
        }
        Ok(())
    }
}

/// Standard normal quantile `Φ⁻¹(p)`.
///
/// Acklam's rational approximation (central branch on `[0.02425, 0.97575]`,
/// tail branch in `sqrt(−2 ln p)` outside it) followed by one Halley step on
/// `Φ(x) − p` with `Φ` from `erfc`. The rational stage alone is good to about
/// 1e-5 in the tails; after the refinement the absolute error is below 1e-12
/// on `(1e-6, 1 − 1e-6)`. Returns ±∞ at 0 and 1 and NaN outside `[0, 1]`.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_671_010_196_091,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let tail = |p: f64| {
        let q = sqrt(-2.0 * ln(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail(p)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail(1.0 - p)
    };
    if p == 0.5 {
        return 0.0;
    }
    // Halley step; the residual is taken on the smaller tail for accuracy.
    let e = if p < 0.5 {
        0.5 * libm::erfc(-x / core::f64::consts::SQRT_2) - p
    } else {
        (1.0 - p) - 0.5 * libm::erfc(x / core::f64::consts::SQRT_2)
    };
    let u = e * sqrt(2.0 * core::f64::consts::PI) * exp(0.5 * x * x);
    x - u / (1.0 + 0.5 * x * u)
}

/// Equal-probability quantization of `N(0, σ²)` into `k` atoms, ascending.
///
/// Atom `i` sits at `σ·Φ⁻¹((i + 0.5)/k)` with probability `1/k`. The upper half
/// is the exact negation of the lower half (and the middle atom of an odd `k`
/// is exactly zero), so the atoms are symmetric bit-for-bit.
pub fn quantize_gaussian(sigma: f64, k: usize) -> Result<Vec<(f64, f64)>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive and finite, got {sigma}")));
    }
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 noise atoms, got {k}")));
    }
    let prob = 1.0 / k as f64;
    let mut atoms = alloc::vec![(0.0, prob); k];
    for i in 0..k / 2 {
        let w = sigma * normal_quantile((i as f64 + 0.5) / k as f64);
        atoms[i].0 = w;
        atoms[k - 1 - i].0 = -w;
    }
    Ok(atoms)
}

/// Uniform grid over `[lo, hi]`, built from the midpoint outward so a
/// symmetric interval yields a grid that is exactly symmetric.
fn grid(lo: f64, hi: f64, n: usize) -> (Vec<f64>, f64) {
    let mid = 0.5 * (lo + hi);
    let h = (hi - lo) / (n - 1) as f64;
    let center = 0.5 * (n - 1) as f64;
    let pts = (0..n)
        .map(|j| {
            if j == 0 {
                lo
            } else if j == n - 1 {
                hi
            } else {
                mid + (j as f64 - center) * h
            }
        })
        .collect();
    (pts, h)
}

/// Index of the grid point nearest to `y`, clamped to the grid. Ties go to the
/// point closer to the grid center, which keeps the snapping odd-symmetric
/// about the midpoint.
fn snap(y: f64, mid: f64, h: f64, n: usize) -> usize {
    // Offset from the midpoint in grid units.
    let r = (y - mid) / h;
    let m = if r < 0.0 { -r } else { r };
    let upper = r > 0.0;
    if n % 2 == 1 {
        // Grid offsets are integers; round half toward zero.
        let j = ceil(m - 0.5).max(0.0);
        let half = (n - 1) / 2;
        let j = if j > half as f64 { half } else { j as usize };
        if upper {
            half + j
        } else {
            half - j
        }
    } else {
        // Grid offsets are half-integers j + 0.5.
        let j = ceil(m - 1.0).max(0.0);
        let half = n / 2;
        let j = if j > (half - 1) as f64 { half - 1 } else { j as usize };
        if upper || r == 0.0 {
            half + j
        } else {
            half - 1 - j
        }
    }
}

/// Builds the finite model for `spec` on `grid`.
pub fn discretize(spec: &Affine1DSpec, grid_spec: &GridSpec) -> Result<FiniteModel> {
    spec.validate()?;
    grid_spec.validate()?;
    let (lo, hi) = spec.x_bounds;
    let n_s = grid_spec.state_points;
    let (xs, h) = grid(lo, hi, n_s);
    let mid = 0.5 * (lo + hi);
    let noise = quantize_gaussian(spec.sigma, grid_spec.noise_atoms)?;

    let mut dynamics = Vec::with_capacity(n_s);
    let mut stage_cost = Vec::with_capacity(n_s);
    for &x in &xs {
        let mut dyn_x = Vec::with_capacity(spec.controls.len());
        let mut cost_x = Vec::with_capacity(spec.controls.len());
        for &u in &spec.controls {
            let drift = spec.a * x + spec.b * u;
            dyn_x.push(noise.iter().map(|&(w, _)| snap(drift + w, mid, h, n_s)).collect::<Vec<_>>());
            cost_x.push(spec.q * x * x + spec.r * u * u);
        }
        dynamics.push(dyn_x);
        stage_cost.push(cost_x);
    }
    let probs: Vec<f64> = noise.iter().map(|a| a.1).collect();
    let kernel_stage: Vec<Vec<Vec<f64>>> =
        (0..n_s).map(|_| (0..spec.controls.len()).map(|_| probs.clone()).collect()).collect();

    FiniteModel::new(ModelTables {
        horizon: spec.horizon,
        states: xs.iter().map(|x| format!("{x}")).collect(),
        actions: spec.controls.iter().map(|u| format!("{u}")).collect(),
        disturbances: noise.iter().map(|(w, _)| format!("{w}")).collect(),
        dynamics: alloc::vec![dynamics; spec.horizon],
        kernel: alloc::vec![kernel_stage; spec.horizon],
        stage_cost: alloc::vec![stage_cost; spec.horizon],
        terminal_cost: xs.iter().map(|x| spec.q_terminal * x * x).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::RiskParam;
    use crate::solver::{solve_exputil, solve_risk_neutral};
    use alloc::vec;

    /// Φ via erfc; inverted by bisection as an independent quantile oracle.
    fn phi(x: f64) -> f64 {
        0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
    }

    fn quantile_by_bisection(p: f64) -> f64 {
        // Φ is flat in the upper tail; bisect on the complement there.
        if p > 0.5 {
            return -quantile_by_bisection(1.0 - p);
        }
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn quantile_accuracy() {
        // Φ⁻¹(0.75) to 40 digits: 0.6744897501960817432...
        assert!((normal_quantile(0.75) - 0.674_489_750_196_081_7).abs() < 1e-14);
        // Φ⁻¹(1e-6) = −4.753424308822898...
        assert!((normal_quantile(1e-6) + 4.753_424_308_822_899).abs() < 1e-12);
        let mut p = 1e-6;
        while p < 1.0 - 1e-6 {
            let err = (normal_quantile(p) - quantile_by_bisection(p)).abs();
            assert!(err <= 1e-12, "p = {p}: error {err:e}");
            p += 1.3e-3;
        }
        for p in [1e-6, 1e-5, 0.02425, 0.5, 0.97575, 1.0 - 1e-6] {
            assert!((normal_quantile(p) - quantile_by_bisection(p)).abs() <= 1e-12);
        }
        assert_eq!(normal_quantile(0.5), 0.0);
        assert!(normal_quantile(1.5).is_nan());
        assert_eq!(normal_quantile(0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn two_atom_quantization() {
        let atoms = quantize_gaussian(1.0, 2).unwrap();
        assert_eq!(atoms.len(), 2);
        assert!((atoms[1].0 - 0.6745).abs() < 1e-4);
        assert_eq!(atoms[0].0, -atoms[1].0);
        assert_eq!(atoms[0].1, 0.5);
    }

    #[test]
    fn quantization_symmetry_and_mass() {
        for k in 2..=64 {
            let atoms = quantize_gaussian(1.7, k).unwrap();
            let mass: f64 = atoms.iter().map(|a| a.1).sum();
            assert!((mass - 1.0).abs() < 1e-14);
            if k.is_power_of_two() {
                assert_eq!(mass, 1.0);
            }
            // Pairing opposite atoms cancels exactly.
            let mean: f64 = (0..k / 2).map(|i| atoms[i].1 * atoms[i].0 + atoms[k - 1 - i].1 * atoms[k - 1 - i].0).sum();
            assert_eq!(mean, 0.0);
            for w in atoms.windows(2) {
                assert!(w[0].0 < w[1].0);
            }
        }
    }

    // Midpoint-quantile atoms underestimate σ²: the exact atom variances
    // (30-digit arithmetic) are 3.69472307601733 (k=16), 3.84461280703092
    // (k=32) and 3.92124685610711 (k=64) for σ = 2.
    #[test]
    fn quantized_variance() {
        for (k, exact) in [(16, 3.694_723_076_017_329), (32, 3.844_612_807_030_923), (64, 3.921_246_856_107_107)] {
            let atoms = quantize_gaussian(2.0, k).unwrap();
            let var: f64 = atoms.iter().map(|(w, p)| p * w * w).sum();
            assert!((var - exact).abs() < 1e-12, "k = {k}: variance {var}");
        }
        let atoms = quantize_gaussian(2.0, 64).unwrap();
        let var: f64 = atoms.iter().map(|(w, p)| p * w * w).sum();
        assert!((var - 4.0).abs() <= 0.05 * 4.0);
    }

    #[test]
    fn quantization_rejects_bad_input() {
        assert!(quantize_gaussian(0.0, 4).is_err());
        assert!(quantize_gaussian(1.0, 1).is_err());
        assert!(quantize_gaussian(f64::NAN, 4).is_err());
    }

    fn spec(a: f64, b: f64, controls: Vec<f64>, q: f64) -> Affine1DSpec {
        Affine1DSpec {
            horizon: 3,
            a,
            b,
            sigma: 0.5,
            x_bounds: (-2.0, 2.0),
            controls,
            q,
            r: q,
            q_terminal: q,
        }
    }

    #[test]
    fn zero_weights_give_zero_values() {
        let mut s = spec(1.0, 0.0, vec![-1.0, 0.0, 1.0], 0.0);
        s.sigma = 1e-12;
        let m = discretize(&s, &GridSpec { state_points: 21, noise_atoms: 4 }).unwrap();
        let res = solve_exputil(&m, RiskParam::new(-1.0).unwrap());
        for t in 0..=3 {
            assert!(res.values.stage(t).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn odd_symmetry_of_dynamics() {
        let s = spec(0.5, 1.0, vec![-1.0, 0.0, 1.0], 1.0);
        for (n, k) in [(41, 4), (65, 5), (17, 8)] {
            let m = discretize(&s, &GridSpec { state_points: n, noise_atoms: k }).unwrap();
            for x in 0..n {
                for u in 0..3 {
                    for w in 0..k {
                        let y = m.next_state(0, x, u, w);
                        let mirrored = m.next_state(0, n - 1 - x, 2 - u, k - 1 - w);
                        assert_eq!(mirrored, n - 1 - y, "x={x} u={u} w={w}");
                    }
                    assert_eq!(m.stage_cost(0, x, u), m.stage_cost(0, n - 1 - x, 2 - u));
                }
            }
        }
    }

    #[test]
    fn snapping_is_nearest_and_clamped() {
        let (xs, h) = grid(-1.0, 1.0, 5);
        assert_eq!(xs, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(snap(0.2, 0.0, h, 5), 2);
        assert_eq!(snap(0.3, 0.0, h, 5), 3);
        assert_eq!(snap(0.25, 0.0, h, 5), 2);
        assert_eq!(snap(-0.25, 0.0, h, 5), 2);
        assert_eq!(snap(7.0, 0.0, h, 5), 4);
        assert_eq!(snap(-7.0, 0.0, h, 5), 0);
        let (xs, h) = grid(-1.5, 1.5, 4);
        assert_eq!(xs, vec![-1.5, -0.5, 0.5, 1.5]);
        assert_eq!(snap(0.9, 0.0, h, 4), 2);
        assert_eq!(snap(1.1, 0.0, h, 4), 3);
        assert_eq!(snap(-0.9, 0.0, h, 4), 1);
        assert_eq!(snap(-9.0, 0.0, h, 4), 0);
    }

    #[test]
    fn output_is_a_valid_model() {
        let s = spec(0.9, 1.0, vec![-1.0, 0.0, 1.0], 1.0);
        let m = discretize(&s, &GridSpec { state_points: 65, noise_atoms: 7 }).unwrap();
        assert_eq!(m.num_states(), 65);
        assert_eq!(m.num_disturbances(), 7);
        assert!(m.validate().is_ok());
        assert_eq!(m.state_labels()[32], "0");
    }

    #[test]
    fn invalid_specs() {
        let good = spec(0.9, 1.0, vec![0.0], 1.0);
        let grid = GridSpec { state_points: 9, noise_atoms: 3 };
        let mut s = good.clone();
        s.x_bounds = (1.0, 1.0);
        assert!(discretize(&s, &grid).is_err());
        let mut s = good.clone();
        s.controls.clear();
        assert!(discretize(&s, &grid).is_err());
        let mut s = good.clone();
        s.q = -1.0;
        assert!(discretize(&s, &grid).is_err());
        assert!(discretize(&good, &GridSpec { state_points: 1, noise_atoms: 3 }).is_err());
        assert!(discretize(&good, &GridSpec { state_points: 9, noise_atoms: 65 }).is_err());
        assert!(discretize(&good, &GridSpec { state_points: 4096, noise_atoms: 3 }).is_err());
    }

    #[test]
    fn risk_neutral_limit_on_grid() {
        let s = Affine1DSpec {
            horizon: 4,
            a: 0.9,
            b: 1.0,
            sigma: 0.5,
            x_bounds: (-3.0, 3.0),
            controls: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            q: 1.0,
            r: 1.0,
            q_terminal: 1.0,
        };
        let m = discretize(&s, &GridSpec { state_points: 61, noise_atoms: 8 }).unwrap();
        let x0 = 30;
        let neutral = solve_risk_neutral(&m).values.get(0, x0);
        let gap = |th: f64| solve_exputil(&m, RiskParam::new(th).unwrap()).values.get(0, x0) - neutral;
        let mut theta = -0.05;
        while theta < -0.001 {
            let ratio = gap(theta / 2.0) / gap(theta);
            assert!((ratio - 0.5).abs() <= 0.1, "theta {theta}: ratio {ratio}");
            theta /= 2.0;
        }
    }
}
