//! Exponential-sum memory kernels k(t) = Σ aₖ e^{−bₖ t}.
//!
//! The kernel owns its moment data: α = Σaₖ (= k(0)), β = Σaₖbₖ,
//! γ = Σaₖbₖ², and the integrability sum Σaₖ/bₖ which is finite exactly
//! when no zero-rate term carries positive amplitude. The Laplace image is
//! K(z) = Σ aₖ/(z+bₖ) with the large-z expansion
//! K(z) = α/z − β/z² + γ/z³ + o(1/z³) inside any sector |arg z| < π − δ.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sector margin used when validating asymptotic-expansion arguments:
/// z must satisfy |arg z| < π − δ. Decay of the residuals is only
/// exercised along rays with |arg z| ≤ π/2.
pub const DEFAULT_RAY_DELTA: f64 = std::f64::consts::FRAC_PI_4;

/// Hard cap on the number of terms a generator rule may produce.
pub const GENERATOR_MAX_TERMS: usize = 100_000;

/// A validated finite exponential-sum kernel.
///
/// Invariants: the two sequences have equal length M ≥ 1, all aₖ ≥ 0,
/// and 0 ≤ b₁ < b₂ < … (a single zero rate is allowed in first position).
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    amplitudes: Vec<f64>,
    rates: Vec<f64>,
    moments: KernelMoments,
}

/// Moment sums of a kernel together with integrability flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelMoments {
    /// Σ aₖ/bₖ; +∞ when the kernel has a zero-rate term with aₖ > 0.
    pub c0_sum: f64,
    /// α = Σ aₖ = k(0).
    pub alpha: f64,
    /// β = Σ aₖ bₖ.
    pub beta: f64,
    /// γ = Σ aₖ bₖ².
    pub gamma: f64,
    pub conditions: ConditionFlags,
}

/// Which of the integrability conditions hold. For a finite sum the three
/// moment conditions always hold; the first fails only for a zero rate with
/// positive amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConditionFlags {
    pub c0: bool,
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
}

/// Rule generating aₖ = A·k^{−p}, bₖ = B·k^{q}, truncated where the moment
/// tails drop below `tail_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorRule {
    #[serde(rename = "A")]
    pub amplitude_scale: f64,
    #[serde(rename = "p")]
    pub amplitude_power: f64,
    #[serde(rename = "B")]
    pub rate_scale: f64,
    #[serde(rename = "q")]
    pub rate_power: f64,
    pub tail_tol: f64,
}

impl Kernel {
    /// Validates and builds a kernel; moments are computed once here.
    pub fn new(amplitudes: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if amplitudes.is_empty() || rates.is_empty() {
            return Err(Error::EmptyKernel);
        }
        if amplitudes.len() != rates.len() {
            return Err(Error::LengthMismatch {
                amplitudes: amplitudes.len(),
                rates: rates.len(),
            });
        }
        for (i, &a) in amplitudes.iter().enumerate() {
            if !(a >= 0.0) {
                return Err(Error::NegativeAmplitude { index: i, value: a });
            }
        }
        let mut prev = -1.0f64;
        for (i, &b) in rates.iter().enumerate() {
            if !(b >= 0.0) || b <= prev || !b.is_finite() {
                return Err(Error::NonIncreasingRates { index: i });
            }
            prev = b;
        }
        let moments = compute_moments(&amplitudes, &rates);
        Ok(Kernel {
            amplitudes,
            rates,
            moments,
        })
    }

    /// Builds a kernel from a truncated generator rule. M is the smallest
    /// count for which the integral-test bounds on all three moment tails
    /// fall below `tail_tol`.
    pub fn from_generator(rule: &GeneratorRule) -> Result<Self> {
        let GeneratorRule {
            amplitude_scale: big_a,
            amplitude_power: p,
            rate_scale: big_b,
            rate_power: q,
            tail_tol,
        } = *rule;
        if !(big_a > 0.0) || !(big_b > 0.0) || !(q > 0.0) {
            return Err(Error::BadGenerator {
                reason: format!("A, B, q must be positive (A={big_a}, B={big_b}, q={q})"),
            });
        }
        if !(tail_tol > 0.0) {
            return Err(Error::BadGenerator {
                reason: format!("tail_tol must be positive, got {tail_tol}"),
            });
        }
        // The moment sums are Σ A B^j k^{jq-p} for j = 0,1,2. The j = 0 sum
        // (total amplitude) must converge; higher moments enter the
        // truncation bound only when their own series converges.
        if p <= 1.0 {
            return Err(Error::BadGenerator {
                reason: format!("amplitude sum diverges: need p > 1, got p={p}"),
            });
        }
        // Tail over k > M of A B^j k^{-r} is at most A B^j M^{1-r}/(r-1).
        let terms_for = |coef: f64, r: f64| -> f64 {
            (coef / (tail_tol * (r - 1.0))).powf(1.0 / (r - 1.0))
        };
        let mut m = 1.0f64;
        for j in 0..3 {
            let coef = big_a * big_b.powi(j);
            let r = p - j as f64 * q;
            if r > 1.0 {
                m = m.max(terms_for(coef, r));
            }
        }
        let m = m.ceil() as usize;
        if m > GENERATOR_MAX_TERMS {
            return Err(Error::BadGenerator {
                reason: format!("rule needs M = {m} terms, cap is {GENERATOR_MAX_TERMS}"),
            });
        }
        let amplitudes: Vec<f64> = (1..=m)
            .map(|k| big_a * (k as f64).powf(-p))
            .collect();
        let rates: Vec<f64> = (1..=m).map(|k| big_b * (k as f64).powf(q)).collect();
        Kernel::new(amplitudes, rates)
    }

    /// Number of exponential terms M.
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees M >= 1
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn moments(&self) -> KernelMoments {
        self.moments
    }

    /// Wave speed of the leading-order dynamics, √α.
    pub fn wave_speed(&self) -> f64 {
        self.moments.alpha.sqrt()
    }

    /// k(t) = Σ aₖ e^{−bₖ t}.
    pub fn eval_k(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&self.rates)
            .map(|(&a, &b)| a * (-b * t).exp())
            .sum())
    }

    /// q(t) = ∫₀ᵗ k = Σ aₖ (1−e^{−bₖt})/bₖ, with the bₖ = 0 term equal to aₖ·t.
    pub fn eval_q(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&self.rates)
            .map(|(&a, &b)| {
                if b == 0.0 {
                    a * t
                } else {
                    a * (-(-b * t).exp_m1()) / b
                }
            })
            .sum())
    }

    /// Laplace image K(z) = Σ aₖ/(z+bₖ).
    pub fn laplace(&self, z: Complex64) -> Result<Complex64> {
        let mut sum = Complex64::new(0.0, 0.0);
        for (&a, &b) in self.amplitudes.iter().zip(&self.rates) {
            let den = z + b;
            if den.re == 0.0 && den.im == 0.0 {
                return Err(Error::PoleHit { z, pole: -b });
            }
            sum += a / den;
        }
        Ok(sum)
    }

    /// K'(z) = −Σ aₖ/(z+bₖ)².
    pub fn laplace_deriv(&self, z: Complex64) -> Result<Complex64> {
        let mut sum = Complex64::new(0.0, 0.0);
        for (&a, &b) in self.amplitudes.iter().zip(&self.rates) {
            let den = z + b;
            if den.re == 0.0 && den.im == 0.0 {
                return Err(Error::PoleHit { z, pole: -b });
            }
            sum -= a / (den * den);
        }
        Ok(sum)
    }

    /// Rescales amplitudes so that α = 1 and returns the scale that was
    /// divided out. Rates are untouched, so β and γ scale by 1/α.
    pub fn normalized(&self) -> (Kernel, f64) {
        let alpha = self.moments.alpha;
        if alpha == 0.0 || alpha == 1.0 {
            return (self.clone(), 1.0);
        }
        let amplitudes = self.amplitudes.iter().map(|a| a / alpha).collect();
        let kernel = Kernel::new(amplitudes, self.rates.clone())
            .expect("rescaling preserves validity");
        (kernel, alpha)
    }

    /// K(z) minus its large-z expansion through the given order:
    /// order 0 → K(z); 1 → K − 1/z; 2 → K − 1/z + β/z²;
    /// 3 → K − 1/z + β/z² − γ/z³.
    ///
    /// For orders ≥ 1 the kernel is rescaled internally to α = 1, so the
    /// leading coefficient is exactly 1; β and γ below are the rescaled
    /// moments. z must stay inside |arg z| < π − δ with δ = [`DEFAULT_RAY_DELTA`].
    pub fn asymptotic_residual(&self, z: Complex64, order: u8) -> Result<Complex64> {
        if order > 3 {
            return Err(Error::BadOrder(order));
        }
        if z.arg().abs() >= std::f64::consts::PI - DEFAULT_RAY_DELTA {
            return Err(Error::RayAngle {
                z,
                delta: DEFAULT_RAY_DELTA,
            });
        }
        if order == 0 {
            return self.laplace(z);
        }
        let (normalized, _scale) = self.normalized();
        let m = normalized.moments();
        let k = normalized.laplace(z)?;
        let mut residual = k - 1.0 / z;
        if order >= 2 {
            residual += m.beta / (z * z);
        }
        if order >= 3 {
            residual -= m.gamma / (z * z * z);
        }
        Ok(residual)
    }
}

fn compute_moments(amplitudes: &[f64], rates: &[f64]) -> KernelMoments {
    let mut c0_sum = 0.0f64;
    let mut alpha = 0.0f64;
    let mut beta = 0.0f64;
    let mut gamma = 0.0f64;
    for (&a, &b) in amplitudes.iter().zip(rates) {
        alpha += a;
        beta += a * b;
        gamma += a * b * b;
        if b == 0.0 {
            if a > 0.0 {
                c0_sum = f64::INFINITY;
            }
        } else if c0_sum.is_finite() {
            c0_sum += a / b;
        }
    }
    KernelMoments {
        c0_sum,
        alpha,
        beta,
        gamma,
        conditions: ConditionFlags {
            c0: c0_sum.is_finite(),
            c1: true,
            c2: true,
            c3: true,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn wave_kernel_is_constant_one() {
        let k = Kernel::new(vec![1.0], vec![0.0]).unwrap();
        assert_eq!(k.eval_k(0.0).unwrap(), 1.0);
        assert_eq!(k.eval_k(7.3).unwrap(), 1.0);
        assert_eq!(k.eval_q(3.0).unwrap(), 3.0);
        let m = k.moments();
        assert_eq!(m.alpha, 1.0);
        assert_eq!(m.beta, 0.0);
        assert_eq!(m.gamma, 0.0);
        assert!(m.c0_sum.is_infinite());
        assert!(!m.conditions.c0);
        assert!(m.conditions.c1);
    }

    #[test]
    fn single_exponential_values() {
        let k = Kernel::new(vec![1.0], vec![2.0]).unwrap();
        assert_eq!(k.eval_k(0.0).unwrap(), 1.0);
        assert_eq!(k.eval_q(0.0).unwrap(), 0.0);
        // q(t) -> 1/2 = c0_sum
        assert!((k.eval_q(50.0).unwrap() - 0.5).abs() < 1e-15);
        let m = k.moments();
        assert_eq!(m.c0_sum, 0.5);
        assert_eq!((m.alpha, m.beta, m.gamma), (1.0, 2.0, 4.0));
    }

    #[test]
    fn two_term_moments() {
        let k = Kernel::new(vec![0.5, 0.5], vec![1.0, 3.0]).unwrap();
        let m = k.moments();
        assert_eq!(m.alpha, 1.0);
        assert_eq!(m.beta, 2.0);
        assert_eq!(m.gamma, 5.0);
    }

    #[test]
    fn validation_errors_are_distinct() {
        assert!(matches!(
            Kernel::new(vec![1.0, -1.0], vec![1.0, 2.0]),
            Err(Error::NegativeAmplitude { index: 1, .. })
        ));
        assert!(matches!(
            Kernel::new(vec![1.0], vec![1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            Kernel::new(vec![1.0, 1.0], vec![2.0, 2.0]),
            Err(Error::NonIncreasingRates { index: 1 })
        ));
        assert!(matches!(
            Kernel::new(vec![], vec![]),
            Err(Error::EmptyKernel)
        ));
    }

    #[test]
    fn laplace_values_and_pole() {
        let k = Kernel::new(vec![1.0], vec![2.0]).unwrap();
        assert_eq!(k.laplace(c(2.0, 0.0)).unwrap(), c(0.25, 0.0));
        assert!(matches!(
            k.laplace(c(-2.0, 0.0)),
            Err(Error::PoleHit { .. })
        ));
        let wave = Kernel::new(vec![1.0], vec![0.0]).unwrap();
        let v = wave.laplace(c(0.0, 1.0)).unwrap();
        assert!((v - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn laplace_matches_time_quadrature() {
        // ∫₀^T e^{-zt} k(t) dt with large T vs K(z), Re z > 0.
        let k = Kernel::new(vec![0.7, 0.3], vec![0.5, 4.0]).unwrap();
        for &z in &[c(1.0, 0.0), c(0.5, 2.0), c(3.0, -7.0)] {
            let t_end = 80.0;
            let n = 800_000usize;
            let h = t_end / n as f64;
            let mut sum = Complex64::new(0.0, 0.0);
            for j in 0..=n {
                let t = j as f64 * h;
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                sum += w * (-z * t).exp() * k.eval_k(t).unwrap();
            }
            sum *= h;
            let exact = k.laplace(z).unwrap();
            assert!(
                (sum - exact).norm() / exact.norm() < 1e-6,
                "z = {z}: quadrature {sum} vs K {exact}"
            );
        }
    }

    #[test]
    fn wave_kernel_order_one_residual_is_zero() {
        let k = Kernel::new(vec![1.0], vec![0.0]).unwrap();
        for &z in &[c(3.0, 0.0), c(0.0, 10.0), c(5.0, -5.0)] {
            let r = k.asymptotic_residual(z, 1).unwrap();
            assert!(r.norm() < 1e-16, "residual {r} at {z}");
        }
    }

    #[test]
    fn residual_examples_single_exponential() {
        let k = Kernel::new(vec![1.0], vec![2.0]).unwrap();
        // order 0 at z=10 is K = 1/12
        let v = k.asymptotic_residual(c(10.0, 0.0), 0).unwrap();
        assert!((v.re - 1.0 / 12.0).abs() < 1e-15 && v.im == 0.0);
        // K - 1/z + beta/z^2 = 4/(z^2(z+2)): |z^2 * residual| decays along the real axis
        let vals: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&x| {
                let z = c(x, 0.0);
                (z * z * k.asymptotic_residual(z, 2).unwrap()).norm()
            })
            .collect();
        assert!(vals[0] > vals[1] && vals[1] > vals[2]);
        assert!((vals[0] - 4.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn residual_decay_on_rays() {
        // |z^m * residual(z, m)| -> 0 along rays |arg z| <= pi/2, orders 1..3.
        // |z| capped at 1e4: beyond, cancellation noise ~eps·|z|² in the
        // order-3 subtraction overtakes the true O(1/|z|) residual.
        let k = Kernel::new(vec![0.5, 0.5], vec![1.0, 3.0]).unwrap();
        for &angle in &[0.0, std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2] {
            for order in 1..=3u8 {
                let mut last = f64::INFINITY;
                for decade in 1..=4 {
                    let r = 10f64.powi(decade);
                    let z = Complex64::from_polar(r, angle);
                    let v = (z.powu(order as u32) * k.asymptotic_residual(z, order).unwrap())
                        .norm();
                    assert!(
                        v < last * (1.0 + 1e-9),
                        "order {order} angle {angle}: {v} !< {last}"
                    );
                    last = v;
                }
                assert!(last < 1e-2, "order {order} tail {last}");
            }
        }
    }

    #[test]
    fn ray_angle_rejected() {
        let k = Kernel::new(vec![1.0], vec![2.0]).unwrap();
        let z = Complex64::from_polar(10.0, 3.0); // close to the negative axis
        assert!(matches!(
            k.asymptotic_residual(z, 1),
            Err(Error::RayAngle { .. })
        ));
    }

    #[test]
    fn normalization_reports_scale() {
        let k = Kernel::new(vec![2.0, 2.0], vec![1.0, 3.0]).unwrap();
        let (unit, scale) = k.normalized();
        assert_eq!(scale, 4.0);
        assert_eq!(unit.moments().alpha, 1.0);
        assert_eq!(unit.moments().beta, k.moments().beta / 4.0);
        // raw kernel untouched
        assert_eq!(k.moments().alpha, 4.0);
    }

    #[test]
    fn generator_truncates_by_tail_bound() {
        let rule = GeneratorRule {
            amplitude_scale: 1.0,
            amplitude_power: 5.0,
            rate_scale: 1.0,
            rate_power: 1.0,
            tail_tol: 1e-6,
        };
        let k = Kernel::from_generator(&rule).unwrap();
        let m = k.len();
        assert!(m >= 100, "M = {m}");
        // direct tail sums beyond M stay below tol (the slowest is j = 2)
        let tail: f64 = (m + 1..m + 2_000_000)
            .map(|i| {
                let kf = i as f64;
                kf.powf(-5.0) * kf * kf
            })
            .sum();
        assert!(tail < 1e-6, "moment tail {tail}");
        assert!(k.moments().conditions.c3);
    }

    #[test]
    fn generator_rejects_bad_rules() {
        // divergent amplitude sum
        let rule = GeneratorRule {
            amplitude_scale: 1.0,
            amplitude_power: 0.5,
            rate_scale: 1.0,
            rate_power: 1.0,
            tail_tol: 1e-8,
        };
        assert!(matches!(
            Kernel::from_generator(&rule),
            Err(Error::BadGenerator { .. })
        ));
        // tolerance requiring more terms than the cap
        let rule = GeneratorRule {
            amplitude_scale: 1.0,
            amplitude_power: 2.0,
            rate_scale: 1.0,
            rate_power: 1.0,
            tail_tol: 1e-8,
        };
        match Kernel::from_generator(&rule) {
            Err(Error::BadGenerator { reason }) => assert!(reason.contains("cap")),
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    proptest::proptest! {
        #[test]
        fn cauchy_schwarz_moment_inequality(
            amps in proptest::collection::vec(0.0f64..5.0, 1..6),
            gaps in proptest::collection::vec(0.01f64..3.0, 1..6),
        ) {
            let m = amps.len().min(gaps.len());
            let amps = amps[..m].to_vec();
            let mut rates = Vec::with_capacity(m);
            let mut b = 0.0;
            for &g in &gaps[..m] {
                b += g;
                rates.push(b);
            }
            let k = Kernel::new(amps, rates).unwrap();
            let mo = k.moments();
            proptest::prop_assert!(mo.gamma * mo.alpha >= mo.beta * mo.beta * (1.0 - 1e-12));
        }

        #[test]
        fn q_is_nondecreasing(t1 in 0.0f64..20.0, t2 in 0.0f64..20.0) {
            let k = Kernel::new(vec![0.5, 0.5], vec![1.0, 3.0]).unwrap();
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            proptest::prop_assert!(k.eval_q(lo).unwrap() <= k.eval_q(hi).unwrap() + 1e-15);
        }
    }

    #[test]
    fn k_at_zero_equals_alpha_exactly() {
        let k = Kernel::new(vec![0.1, 0.2, 0.3], vec![0.5, 1.5, 9.0]).unwrap();
        assert_eq!(k.eval_k(0.0).unwrap(), k.moments().alpha);
    }
}
