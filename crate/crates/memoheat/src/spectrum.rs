//! The spectrum: zeros of Gₙ(z) = z + n²K(z).
//!
//! Clearing denominators turns Gₙ into a monic degree-(M+1) polynomial
//! P(z) = z·∏ₖ(z+bₖ) + n²·Σₖ aₖ·∏_{j≠k}(z+b_j). Roots are found by
//! Durand–Kerner simultaneous iteration (on a rescaled variable z = n·w
//! for balance), polished by Newton steps on Gₙ itself, and certified by
//! the residual |Gₙ(root)|. Terms with aₖ = 0 contribute a factor (z+bₖ)
//! to P that is not a zero of Gₙ; such pole cancellations are excluded.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::Kernel;

/// Certified zeros of Gₙ with residuals and the polynomial that found them.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub n: u32,
    /// Zeros with multiplicity; non-real ones in conjugate pairs.
    pub roots: Vec<Complex64>,
    /// |Gₙ(root)| per root.
    pub residuals: Vec<f64>,
    /// Monic coefficients of P, leading first, degree M+1.
    pub poly_coeffs: Vec<f64>,
}

impl SpectrumResult {
    pub fn max_real_part(&self) -> f64 {
        self.roots.iter().map(|r| r.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Monic coefficients (leading first) of z·∏(z+bₖ) + n²·Σ aₖ·∏_{j≠k}(z+b_j),
/// expanded exactly by convolving linear factors.
pub fn characteristic_polynomial(kernel: &Kernel, n: u32) -> Vec<f64> {
    let m = kernel.len();
    let n2 = (n as f64) * (n as f64);
    let a = kernel.amplitudes();
    let b = kernel.rates();

    // ∏ (z + b_k), ascending-degree convolution
    let full = product_of_linear(b);
    // z·∏(z+b): shift by one degree
    let mut poly = vec![0.0; m + 2]; // ascending, degree m+1
    for (i, &c) in full.iter().enumerate() {
        poly[i + 1] += c;
    }
    for k in 0..m {
        let others: Vec<f64> = b
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, &bj)| bj)
            .collect();
        let partial = product_of_linear(&others);
        for (i, &c) in partial.iter().enumerate() {
            poly[i] += n2 * a[k] * c;
        }
    }
    poly.reverse(); // leading first
    poly
}

/// Coefficients of ∏ (z + bᵢ), ascending degree; [1] for the empty product.
fn product_of_linear(roots_neg: &[f64]) -> Vec<f64> {
    let mut coeffs = vec![1.0f64];
    for &b in roots_neg {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i] += c * b; // constant-term part
            next[i + 1] += c; // z part
        }
        coeffs = next;
    }
    coeffs
}

fn eval_poly(coeffs_desc: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs_desc {
        acc = acc * z + c;
    }
    acc
}

/// Durand–Kerner on a monic polynomial (descending coefficients).
fn durand_kerner(coeffs_desc: &[f64]) -> Vec<Complex64> {
    let degree = coeffs_desc.len() - 1;
    let radius = 1.0
        + coeffs_desc[1..]
            .iter()
            .fold(0.0f64, |m, &c| m.max(c.abs()));
    let mut roots: Vec<Complex64> = (0..degree)
        .map(|j| {
            let angle = 2.0 * std::f64::consts::PI * j as f64 / degree as f64 + 0.4;
            Complex64::from_polar(radius, angle)
        })
        .collect();
    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for j in 0..degree {
            let mut denom = Complex64::new(1.0, 0.0);
            for k in 0..degree {
                if k != j {
                    denom *= roots[j] - roots[k];
                }
            }
            if denom.norm() == 0.0 {
                roots[j] += Complex64::new(1e-8 * radius, 1e-8 * radius);
                continue;
            }
            let delta = eval_poly(coeffs_desc, roots[j]) / denom;
            roots[j] -= delta;
            max_step = max_step.max(delta.norm() / (1.0 + roots[j].norm()));
        }
        if max_step < 1e-14 {
            break;
        }
    }
    roots
}

/// G and G' evaluated with poles skipped; used by the Newton polish.
fn g_and_gprime(kernel: &Kernel, n: u32, z: Complex64) -> Option<(Complex64, Complex64)> {
    let n2 = (n as f64) * (n as f64);
    let k = kernel.laplace(z).ok()?;
    let dk = kernel.laplace_deriv(z).ok()?;
    Some((z + n2 * k, 1.0 + n2 * dk))
}

/// All zeros of Gₙ, residual-certified, pole cancellations excluded.
pub fn compute_spectrum(kernel: &Kernel, n: u32, tol: f64) -> Result<SpectrumResult> {
    assert!(tol > 0.0, "certification tolerance must be positive");
    let coeffs = characteristic_polynomial(kernel, n);
    let degree = coeffs.len() - 1;

    // rescale z = scale·w to balance the n² constant term
    let scale = (n.max(1)) as f64;
    let scaled: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| c / scale.powi(i as i32))
        .collect();
    let mut roots: Vec<Complex64> = durand_kerner(&scaled)
        .into_iter()
        .map(|w| w * scale)
        .collect();

    // Newton polish on Gₙ itself, removing expansion rounding for large n²
    for r in roots.iter_mut() {
        for _ in 0..3 {
            if let Some((g, gp)) = g_and_gprime(kernel, n, *r) {
                if gp.norm() > 1e-300 {
                    let step = g / gp;
                    if step.norm() < 0.5 * (1.0 + r.norm()) {
                        *r -= step;
                    }
                }
            }
        }
    }

    // multiple roots land sqrt(eps) apart; replace clusters by their mean
    let cluster_radius = 1e-7 * (1.0 + roots.iter().fold(0.0f64, |m, r| m.max(r.norm())));
    roots = merge_clusters(&roots, cluster_radius);
    roots = symmetrize_conjugates(&roots, cluster_radius);

    // exclude polynomial roots that are pole cancellations (a_k = 0)
    for (&a, &b) in kernel.amplitudes().iter().zip(kernel.rates()) {
        if a == 0.0 {
            let pole = Complex64::new(-b, 0.0);
            if let Some(pos) = roots
                .iter()
                .position(|r| (r - pole).norm() < 1e-6 * (1.0 + b))
            {
                roots.remove(pos);
            }
        }
    }

    roots.sort_by(|p, q| {
        (p.re, p.im)
            .partial_cmp(&(q.re, q.im))
            .expect("finite roots")
    });
    let residuals: Vec<f64> = roots
        .iter()
        .map(|&r| {
            g_and_gprime(kernel, n, r)
                .map(|(g, _)| g.norm())
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    if residuals.iter().any(|&res| !(res <= tol)) {
        return Err(Error::RootsNotCertified {
            residuals,
            tol,
        });
    }
    debug_assert!(roots.len() <= degree);
    Ok(SpectrumResult {
        n,
        roots,
        residuals,
        poly_coeffs: coeffs,
    })
}

fn merge_clusters(roots: &[Complex64], radius: f64) -> Vec<Complex64> {
    let mut used = vec![false; roots.len()];
    let mut out = Vec::with_capacity(roots.len());
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let mut members = vec![roots[i]];
        used[i] = true;
        for j in i + 1..roots.len() {
            if !used[j] && (roots[j] - roots[i]).norm() < radius {
                members.push(roots[j]);
                used[j] = true;
            }
        }
        let mean = members.iter().sum::<Complex64>() / members.len() as f64;
        for _ in 0..members.len() {
            out.push(mean);
        }
    }
    out
}

/// Pairs roots with their conjugates and enforces exact symmetry; roots with
/// negligible imaginary part are flattened to the real axis.
fn symmetrize_conjugates(roots: &[Complex64], radius: f64) -> Vec<Complex64> {
    let mut remaining: Vec<Complex64> = roots.to_vec();
    let mut out = Vec::with_capacity(roots.len());
    while let Some(r) = remaining.pop() {
        if r.im.abs() <= radius {
            out.push(Complex64::new(r.re, 0.0));
            continue;
        }
        // nearest conjugate partner
        let target = r.conj();
        let mut best: Option<(usize, f64)> = None;
        for (j, &other) in remaining.iter().enumerate() {
            let d = (other - target).norm();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        match best {
            Some((j, d)) if d <= 1e-3 * (1.0 + r.norm()) => {
                let partner = remaining.remove(j);
                let re = 0.5 * (r.re + partner.re);
                let im = 0.5 * (r.im.abs() + partner.im.abs());
                out.push(Complex64::new(re, im));
                out.push(Complex64::new(re, -im));
            }
            _ => out.push(r), // unpaired; keep as computed
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn polynomial_examples() {
        let k = Kernel::new(vec![1.0], vec![2.0]).unwrap();
        assert_eq!(characteristic_polynomial(&k, 1), vec![1.0, 2.0, 1.0]);
        let wave = Kernel::new(vec![1.0], vec![0.0]).unwrap();
        assert_eq!(characteristic_polynomial(&wave, 3), vec![1.0, 0.0, 9.0]);
        let two = Kernel::new(vec![0.5, 0.5], vec![1.0, 3.0]).unwrap();
        assert_eq!(
            characteristic_polynomial(&two, 1),
            vec![1.0, 4.0, 4.0, 2.0]
        );
    }

    #[test]
    fn polynomial_agrees_with_g_at_random_points() {
        let k = Kernel::new(vec![0.5, 0.5], vec![1.0, 3.0]).unwrap();
        let coeffs = characteristic_polynomial(&k, 1);
        for &z in &[
            Complex64::new(0.3, 1.2),
            Complex64::new(-0.5, 2.0),
            Complex64::new(2.0, -0.7),
        ] {
            let p = eval_poly(&coeffs, z);
            let g = z + Complex64::new(1.0, 0.0) * k.laplace(z).unwrap();
            let denom = (z + 1.0) * (z + 3.0);
            assert!(close(p, g * denom, 1e-12 * p.norm().max(1.0)));
        }
    }

    #[test]
    fn double_root_certified() {
        // a=1, b=2, n=1: P = (z+1)²
        let k = Kernel::new(vec![1.0], vec![2.0]).unwrap();
        let spec = compute_spectrum(&k, 1, 1e-8).unwrap();
        assert_eq!(spec.roots.len(), 2);
        for r in &spec.roots {
            assert!(close(*r, Complex64::new(-1.0, 0.0), 1e-8), "{r}");
        }
        assert!(spec.residuals.iter().all(|&r| r < 1e-8));
    }

    #[test]
    fn conjugate_pair_quadratic() {
        // n=2: z² + 2z + 4 → −1 ± i√3
        let k = Kernel::new(vec![1.0], vec![2.0]).unwrap();
        let spec = compute_spectrum(&k, 2, 1e-10).unwrap();
        let s3 = 3f64.sqrt();
        let mut roots = spec.roots.clone();
        roots.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!(close(roots[0], Complex64::new(-1.0, -s3), 1e-10));
        assert!(close(roots[1], Complex64::new(-1.0, s3), 1e-10));
    }

    #[test]
    fn wave_roots_are_imaginary() {
        let wave = Kernel::new(vec![1.0], vec![0.0]).unwrap();
        let spec = compute_spectrum(&wave, 3, 1e-10).unwrap();
        let mut roots = spec.roots.clone();
        roots.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!(close(roots[0], Complex64::new(0.0, -3.0), 1e-10));
        assert!(close(roots[1], Complex64::new(0.0, 3.0), 1e-10));
    }

    #[test]
    fn pole_cancellation_excluded() {
        // a₂ = 0 puts a spurious factor (z+2) into P
        let k = Kernel::new(vec![1.0, 0.0], vec![1.0, 2.0]).unwrap();
        let spec = compute_spectrum(&k, 3, 1e-9).unwrap();
        assert_eq!(spec.roots.len(), 2);
        for r in &spec.roots {
            assert!((r - Complex64::new(-2.0, 0.0)).norm() > 0.5, "{r}");
            let g = r + 9.0 * k.laplace(*r).unwrap();
            assert!(g.norm() < 1e-9);
        }
    }

    #[test]
    fn residuals_certified_across_sizes() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..12 {
            let m = rng.gen_range(1..=8);
            let mut rates = Vec::with_capacity(m);
            let mut b = rng.gen_range(0.0..0.5);
            for _ in 0..m {
                rates.push(b);
                b += rng.gen_range(0.2..2.0);
            }
            let amps: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.5)).collect();
            let kernel = Kernel::new(amps, rates).unwrap();
            let n = rng.gen_range(1..=128u32);
            let spec = compute_spectrum(&kernel, n, 1e-10).unwrap();
            assert!(
                spec.residuals.iter().all(|&r| r <= 1e-10),
                "n={n}: {:?}",
                spec.residuals
            );
        }
    }

    #[test]
    fn roots_reproduce_coefficients() {
        // elementary symmetric functions of the roots match the polynomial
        let k = Kernel::new(vec![0.4, 0.3, 0.3], vec![0.5, 2.0, 5.0]).unwrap();
        let n = 10;
        let spec = compute_spectrum(&k, n, 1e-9).unwrap();
        let mut poly = vec![Complex64::new(1.0, 0.0)];
        for &r in &spec.roots {
            let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
            for (i, &c) in poly.iter().enumerate() {
                next[i] += c; // z·c
                next[i + 1] -= c * r;
            }
            poly = next;
        }
        for (built, &expect) in poly.iter().zip(&spec.poly_coeffs) {
            let scale = expect.abs().max(1.0);
            assert!(
                (built.re - expect).abs() / scale < 1e-8 && built.im.abs() / scale < 1e-8,
                "coeff {built} vs {expect}"
            );
        }
    }

    #[test]
    fn dissipativity_survey() {
        // Re z ≤ 0 expected for nonnegative amplitudes; survey and report
        // violations without failing the build on them.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut violations = 0u32;
        for _ in 0..30 {
            let m = rng.gen_range(1..=4);
            let mut rates = Vec::with_capacity(m);
            let mut b = rng.gen_range(0.0..1.0);
            for _ in 0..m {
                rates.push(b);
                b += rng.gen_range(0.3..2.0);
            }
            let amps: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.5)).collect();
            let kernel = Kernel::new(amps, rates).unwrap();
            let n = rng.gen_range(1..=64u32);
            if let Ok(spec) = compute_spectrum(&kernel, n, 1e-9) {
                if spec.max_real_part() > 1e-9 {
                    violations += 1;
                    eprintln!(
                        "dissipativity finding: n={n} max Re = {}",
                        spec.max_real_part()
                    );
                }
            }
        }
        eprintln!("dissipativity survey: {violations} violations of Re z <= 0");
    }

    #[test]
    fn large_n_root_real_part_approaches_minus_half_beta() {
        let k = Kernel::new(vec![0.5, 0.5], vec![1.0, 3.0]).unwrap();
        let beta = k.moments().beta;
        let mut n = 64u32;
        let mut fitted = Vec::new();
        while n <= 1024 {
            let spec = compute_spectrum(&k, n, 1e-8).unwrap();
            let pair_re = spec
                .roots
                .iter()
                .filter(|r| r.im.abs() > 1.0)
                .map(|r| r.re)
                .next()
                .expect("oscillatory pair exists");
            fitted.push(pair_re);
            n *= 2;
        }
        let last = fitted.last().unwrap();
        assert!(
            (last - (-beta / 2.0)).abs() <= 0.05 * (beta / 2.0),
            "fitted {last} vs {}",
            -beta / 2.0
        );
    }
}
