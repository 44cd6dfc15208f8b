//! Laplace-domain symbols and weighted vertical-line norms.
//!
//! The modal transfer data live in the characteristic function
//! Gₙ(z) = z + n²K(z) and its damped-wave comparison
//! G⁰ₙ(z) = z + n²/(z+β); the perturbation symbol is
//! Dₙ(z) = 1/Gₙ − 1/G⁰ₙ. Weighted L² norms on vertical lines are
//! computed by composite trapezoidal quadrature on a symmetric y-grid,
//! optionally extended by a power-law tail fitted on the last decade of
//! samples. The time/frequency link is Plancherel:
//! ∫₀^∞ e^{−2εt}|θₙ|² dt = (1/2π)·‖Θₙ‖²_{L²(Re z = ε)}.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::modes::ModeTrajectory;
use crate::spaces;

/// Which Laplace-domain function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SymbolKind {
    /// Gₙ(z) = z + n²K(z)
    G,
    /// G⁰ₙ(z) = z + n²/(z+β)
    G0,
    /// 1/Gₙ
    InvG,
    /// 1/G⁰ₙ
    InvG0,
    /// Θₙ for unit initial datum and no forcing, i.e. 1/Gₙ
    Theta,
    /// Dₙ = 1/Gₙ − 1/G⁰ₙ
    D,
}

impl SymbolKind {
    pub fn name(self) -> &'static str {
        match self {
            SymbolKind::G => "G",
            SymbolKind::G0 => "G0",
            SymbolKind::InvG => "invG",
            SymbolKind::InvG0 => "invG0",
            SymbolKind::Theta => "Theta",
            SymbolKind::D => "D",
        }
    }

    /// Largest s for which |z|^{2s}|symbol|² is integrable on a vertical
    /// line, or None when the norm diverges for every s.
    fn s_limit(self) -> Option<f64> {
        match self {
            SymbolKind::G | SymbolKind::G0 => None,
            SymbolKind::InvG | SymbolKind::InvG0 | SymbolKind::Theta => Some(0.5),
            SymbolKind::D => Some(4.5),
        }
    }
}

/// Evaluates the requested symbol at z.
pub fn symbol(kernel: &Kernel, n: u32, z: Complex64, kind: SymbolKind) -> Result<Complex64> {
    let n2 = Complex64::new((n as f64) * (n as f64), 0.0);
    let g = |kernel: &Kernel| -> Result<Complex64> { Ok(z + n2 * kernel.laplace(z)?) };
    let g0 = |kernel: &Kernel| -> Result<Complex64> {
        let beta = kernel.moments().beta;
        let den = z + beta;
        if den.re == 0.0 && den.im == 0.0 {
            return Err(Error::PoleHit { z, pole: -beta });
        }
        // same operation order as G so that D is exactly zero when K = K₀
        Ok(z + n2 * (1.0 / den))
    };
    match kind {
        SymbolKind::G => g(kernel),
        SymbolKind::G0 => g0(kernel),
        SymbolKind::InvG | SymbolKind::Theta => {
            let v = g(kernel)?;
            if v.re == 0.0 && v.im == 0.0 {
                return Err(Error::SpectrumPointHit { z, name: "G" });
            }
            Ok(1.0 / v)
        }
        SymbolKind::InvG0 => {
            let v = g0(kernel)?;
            if v.re == 0.0 && v.im == 0.0 {
                return Err(Error::SpectrumPointHit { z, name: "G0" });
            }
            Ok(1.0 / v)
        }
        SymbolKind::D => {
            let a = g(kernel)?;
            let b = g0(kernel)?;
            if a.re == 0.0 && a.im == 0.0 {
                return Err(Error::SpectrumPointHit { z, name: "G" });
            }
            if b.re == 0.0 && b.im == 0.0 {
                return Err(Error::SpectrumPointHit { z, name: "G0" });
            }
            Ok(1.0 / a - 1.0 / b)
        }
    }
}

/// Θₙ(z) = (ξₙ + Fₙ(z)) / Gₙ(z).
pub fn theta_hat(
    kernel: &Kernel,
    n: u32,
    xi_n: f64,
    f_n: Complex64,
    z: Complex64,
) -> Result<Complex64> {
    let n2 = (n as f64) * (n as f64);
    let g = z + n2 * kernel.laplace(z)?;
    if g.re == 0.0 && g.im == 0.0 {
        return Err(Error::SpectrumPointHit { z, name: "G" });
    }
    Ok((xi_n + f_n) / g)
}

/// How the part of the integral beyond the grid is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TailModel {
    None,
    /// Fit |integrand| ≈ C·y^{−r} on the last decade of samples and
    /// integrate the fit over (y_max, ∞).
    PowerLaw,
}

/// Symmetric trapezoidal quadrature on the line Re z = eps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineQuadrature {
    pub eps: f64,
    pub y_max: f64,
    pub samples: usize,
    pub tail_model: TailModel,
}

impl LineQuadrature {
    pub fn new(eps: f64, y_max: f64, samples: usize, tail_model: TailModel) -> Result<Self> {
        if samples < 16 {
            return Err(Error::BadQuadrature {
                reason: format!("need at least 16 samples, got {samples}"),
            });
        }
        if !(y_max > 0.0) || !y_max.is_finite() {
            return Err(Error::BadQuadrature {
                reason: format!("y_max must be positive and finite, got {y_max}"),
            });
        }
        Ok(LineQuadrature {
            eps,
            y_max,
            samples,
            tail_model,
        })
    }

    /// Default line for sup/norm scans: covers resonances up to |y| = y_max
    /// with spacing fine relative to both the peak width (~eps) and the
    /// resonance structure scale (~1).
    pub fn standard(eps: f64, y_max: f64) -> Self {
        let dy = (eps.clamp(0.2, 1.0)) / 20.0;
        let samples = ((2.0 * y_max / dy).ceil() as usize + 1).max(16);
        LineQuadrature {
            eps,
            y_max,
            samples,
            tail_model: TailModel::PowerLaw,
        }
    }

    /// Quadrature sized for the Plancherel cross-check of mode n: a wide
    /// window (the |1/G|² tail carries mass ~1/y_max) with resolution tied
    /// to the resonance width ~eps.
    pub fn for_plancherel(eps: f64, n: u32, wave_speed: f64) -> Self {
        let resonance = (n as f64) * wave_speed.max(1.0);
        let y_max = (60.0 * resonance).max(240.0);
        let dy = (eps.min(1.0) / 24.0).min(0.04);
        let samples = ((2.0 * y_max / dy).ceil() as usize + 1).min(3_000_000).max(16);
        LineQuadrature {
            eps,
            y_max,
            samples,
            tail_model: TailModel::PowerLaw,
        }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.y_max / (self.samples - 1) as f64
    }

    /// The symmetric sample ordinates −y_max … y_max.
    pub fn ordinates(&self) -> impl Iterator<Item = f64> + '_ {
        let dy = self.spacing();
        (0..self.samples).map(move |j| -self.y_max + j as f64 * dy)
    }

    /// Same spacing, window widened to at least [−y_lo, y_lo].
    fn widened(&self, y_lo: f64) -> LineQuadrature {
        if y_lo <= self.y_max {
            return *self;
        }
        let dy = self.spacing();
        let samples = ((2.0 * y_lo / dy).ceil() as usize + 1).max(16);
        LineQuadrature {
            eps: self.eps,
            y_max: y_lo,
            samples,
            tail_model: self.tail_model,
        }
    }
}

/// Grid value and separately-reported tail estimate of a line norm.
/// `grid` and `tail` are square roots of the respective integral parts, so
/// the combined norm is `total() = sqrt(grid² + tail²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineNorm {
    pub grid: f64,
    pub tail: f64,
    /// Set when a zero of the symbol's denominator lies within ten grid
    /// spacings of the integration line.
    pub near_spectrum: bool,
}

impl LineNorm {
    pub fn total(&self) -> f64 {
        self.grid.hypot(self.tail)
    }
}

/// Trapezoidal weights over an evaluated integrand plus power-law tail.
fn integrate_line(
    ys: &[f64],
    integrand: &[f64],
    dy: f64,
    tail_model: TailModel,
) -> (f64, f64) {
    let mut grid_sq = 0.0;
    let last = integrand.len() - 1;
    for (j, &v) in integrand.iter().enumerate() {
        let w = if j == 0 || j == last { 0.5 } else { 1.0 };
        grid_sq += w * v;
    }
    grid_sq *= dy;
    let tail_sq = match tail_model {
        TailModel::None => 0.0,
        TailModel::PowerLaw => {
            let y_max = ys[last];
            // symmetric average of the integrand on the last decade
            let mut pts = Vec::new();
            for (j, &y) in ys.iter().enumerate() {
                if y >= y_max / 10.0 && y > 0.0 {
                    let mirrored = integrand[last - j];
                    let avg = 0.5 * (integrand[j] + mirrored);
                    if avg > 0.0 {
                        pts.push((y.ln(), avg.ln()));
                    }
                }
            }
            if pts.len() < 4 {
                0.0
            } else {
                // least squares ln f = ln C − r ln y
                let n = pts.len() as f64;
                let sx: f64 = pts.iter().map(|p| p.0).sum();
                let sy: f64 = pts.iter().map(|p| p.1).sum();
                let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
                let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
                let denom = n * sxx - sx * sx;
                if denom <= 0.0 {
                    0.0
                } else {
                    let slope = (n * sxy - sx * sy) / denom;
                    let intercept = (sy - slope * sx) / n;
                    let r = -slope;
                    if r <= 1.0 + 1e-6 {
                        f64::INFINITY
                    } else {
                        let c = intercept.exp();
                        2.0 * c * y_max.powf(1.0 - r) / (r - 1.0)
                    }
                }
            }
        }
    };
    (grid_sq, tail_sq)
}

/// (∫ |ε+iy|^{2s} |symbol(ε+iy)|² dy)^{1/2} over the symmetric grid.
///
/// The window is widened to |y| ≥ 4n so the resonance near |y| ≈ n√α is
/// always inside the grid; the power-law tail beyond the window is
/// reported separately in the result.
pub fn weighted_line_norm(
    kernel: &Kernel,
    n: u32,
    kind: SymbolKind,
    s: f64,
    quad: &LineQuadrature,
) -> Result<LineNorm> {
    let limit = kind.s_limit().ok_or(Error::NormDiverges {
        kind: kind.name(),
        s,
        limit: f64::NEG_INFINITY,
    })?;
    if s >= limit {
        return Err(Error::NormDiverges {
            kind: kind.name(),
            s,
            limit,
        });
    }
    for &b in kernel.rates() {
        if quad.eps == -b {
            return Err(Error::PoleOnLine {
                pole: -b,
                eps: quad.eps,
            });
        }
    }
    let eff = quad.widened(4.0 * n as f64);
    let dy = eff.spacing();
    let ys: Vec<f64> = eff.ordinates().collect();
    let mut integrand = Vec::with_capacity(ys.len());
    for &y in &ys {
        let z = Complex64::new(eff.eps, y);
        let v = symbol(kernel, n, z, kind)?;
        let weight = if s == 0.0 { 1.0 } else { z.norm_sqr().powf(s) };
        integrand.push(weight * v.norm_sqr());
    }
    let (grid_sq, tail_sq) = integrate_line(&ys, &integrand, dy, eff.tail_model);
    let near_spectrum = spectrum_near_line(kernel, n, kind, eff.eps, 10.0 * dy);
    Ok(LineNorm {
        grid: grid_sq.sqrt(),
        tail: tail_sq.sqrt(),
        near_spectrum,
    })
}

/// Same quadrature applied to an arbitrary symbol; used by tests to check
/// the machinery against closed-form integrals.
pub fn weighted_line_norm_of<F>(f: F, s: f64, quad: &LineQuadrature) -> (f64, f64)
where
    F: Fn(Complex64) -> Complex64,
{
    let dy = quad.spacing();
    let ys: Vec<f64> = quad.ordinates().collect();
    let integrand: Vec<f64> = ys
        .iter()
        .map(|&y| {
            let z = Complex64::new(quad.eps, y);
            let weight = if s == 0.0 { 1.0 } else { z.norm_sqr().powf(s) };
            weight * f(z).norm_sqr()
        })
        .collect();
    let (g, t) = integrate_line(&ys, &integrand, dy, quad.tail_model);
    (g.sqrt(), t.sqrt())
}

fn spectrum_near_line(kernel: &Kernel, n: u32, kind: SymbolKind, eps: f64, dist: f64) -> bool {
    let uses_g = matches!(
        kind,
        SymbolKind::InvG | SymbolKind::Theta | SymbolKind::D
    );
    let uses_g0 = matches!(kind, SymbolKind::InvG0 | SymbolKind::D);
    if uses_g {
        if let Ok(spec) = crate::spectrum::compute_spectrum(kernel, n, 1e-6) {
            if spec.roots.iter().any(|r| (r.re - eps).abs() < dist) {
                return true;
            }
        }
    }
    if uses_g0 {
        // roots of z(z+β) + n² = 0
        let beta = kernel.moments().beta;
        let disc = Complex64::new(beta * beta - 4.0 * (n as f64) * (n as f64), 0.0).sqrt();
        for sign in [-1.0, 1.0] {
            let r = (-beta + sign * disc.re) * 0.5;
            let im = sign * disc.im * 0.5;
            let root = Complex64::new(r, im);
            if (root.re - eps).abs() < dist {
                return true;
            }
        }
    }
    false
}

/// Scan of a symbol along the line Re z = eps; rows (y, value).
pub fn line_scan(
    kernel: &Kernel,
    n: u32,
    kind: SymbolKind,
    quad: &LineQuadrature,
) -> Result<Vec<(f64, Complex64)>> {
    quad.ordinates()
        .map(|y| {
            let z = Complex64::new(quad.eps, y);
            symbol(kernel, n, z, kind).map(|v| (y, v))
        })
        .collect()
}

/// sup over the raw sample grid of |z·symbol(z)| on Re z = eps.
/// With kind = InvG this is the scan for sup |z/Gₙ|.
pub fn sup_z_times_symbol(
    kernel: &Kernel,
    n: u32,
    kind: SymbolKind,
    quad: &LineQuadrature,
) -> Result<f64> {
    let mut sup = 0.0f64;
    for y in quad.ordinates() {
        let z = Complex64::new(quad.eps, y);
        let v = symbol(kernel, n, z, kind)?;
        sup = sup.max((z * v).norm());
    }
    Ok(sup)
}

/// Relative discrepancy of the Plancherel identity for one mode:
/// time side ∫₀^T e^{−2εt}|θₙ|² dt (with tail estimate) against
/// (ξₙ²/2π)·‖1/Gₙ‖²_{L²(Re z = ε)}.
pub fn plancherel_residual(
    traj: &ModeTrajectory,
    kernel: &Kernel,
    eps: f64,
    quad: &LineQuadrature,
) -> Result<f64> {
    if traj.forced {
        return Err(Error::CheckPrecondition {
            reason: "Plancherel cross-check needs an unforced trajectory".into(),
        });
    }
    if !(eps > 0.0) {
        return Err(Error::CheckPrecondition {
            reason: format!("eps must be positive, got {eps}"),
        });
    }
    let time_norm = spaces::mode_weighted_norm(traj, eps, false);
    let time_sq = time_norm.total_sq();
    let mut line_quad = *quad;
    line_quad.eps = eps;
    let line = weighted_line_norm(kernel, traj.n, SymbolKind::InvG, 0.0, &line_quad)?;
    let line_sq = traj.xi_n * traj.xi_n * (line.grid * line.grid + line.tail * line.tail)
        / (2.0 * std::f64::consts::PI);
    let scale = time_sq.max(line_sq);
    if scale < 1e-300 {
        return Ok(0.0);
    }
    Ok((time_sq - line_sq).abs() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{solve_mode, Method, ModeForcing, TimeGrid};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn wave() -> Kernel {
        Kernel::new(vec![1.0], vec![0.0]).unwrap()
    }

    #[test]
    fn g_vanishes_on_wave_resonance() {
        let v = symbol(&wave(), 3, c(0.0, 3.0), SymbolKind::G).unwrap();
        assert!(v.norm() < 1e-14, "{v}");
    }

    #[test]
    fn d_vanishes_when_kernel_matches_comparison() {
        // M=1 with b = β: K = K₀ exactly
        let k = Kernel::new(vec![1.0], vec![2.0]).unwrap();
        assert_eq!(k.moments().beta, 2.0);
        for &z in &[c(0.0, 5.0), c(1.0, -3.0), c(0.0, 0.5)] {
            let d = symbol(&k, 4, z, SymbolKind::D).unwrap();
            assert_eq!(d, c(0.0, 0.0));
        }
    }

    #[test]
    fn g_direct_sum_example() {
        let k = Kernel::new(vec![0.5, 0.5], vec![1.0, 3.0]).unwrap();
        let v = symbol(&k, 1, c(1.0, 0.0), SymbolKind::G).unwrap();
        assert!((v - c(1.375, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn theta_hat_wave_form() {
        // Θₙ = ξ z/(z²+n²) for the wave kernel
        let z = c(0.7, 2.3);
        let n = 4u32;
        let v = theta_hat(&wave(), n, 2.0, c(0.0, 0.0), z).unwrap();
        let expect = 2.0 * z / (z * z + (n * n) as f64);
        assert!((v - expect).norm() < 1e-14);
        // rational example: kernel a=1,b=2, n=1, z=1 → 1/G = 3/4
        let k = Kernel::new(vec![1.0], vec![2.0]).unwrap();
        let v = theta_hat(&k, 1, 1.0, c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((v - c(0.75, 0.0)).norm() < 1e-15);
        // zero data
        let v = theta_hat(&k, 1, 0.0, c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_eq!(v, c(0.0, 0.0));
    }

    #[test]
    fn synthetic_line_norm_is_sqrt_pi() {
        // f = 1/(z+1) on Re z = 0, s = 0: ∫ dy/(1+y²) = π
        let quad = LineQuadrature::new(0.0, 8000.0, 1_600_001, TailModel::PowerLaw).unwrap();
        let (grid, tail) = weighted_line_norm_of(|z| 1.0 / (z + 1.0), 0.0, &quad);
        let total = grid.hypot(tail);
        assert!(
            (total - std::f64::consts::PI.sqrt()).abs() < 2e-4,
            "total {total}"
        );
    }

    #[test]
    fn norm_rejects_divergent_settings() {
        let k = Kernel::new(vec![1.0], vec![2.0]).unwrap();
        let quad = LineQuadrature::standard(1.0, 32.0);
        assert!(matches!(
            weighted_line_norm(&k, 1, SymbolKind::G, 0.0, &quad),
            Err(Error::NormDiverges { .. })
        ));
        assert!(matches!(
            weighted_line_norm(&k, 1, SymbolKind::D, 4.5, &quad),
            Err(Error::NormDiverges { .. })
        ));
        assert!(matches!(
            weighted_line_norm(&k, 1, SymbolKind::InvG, 0.5, &quad),
            Err(Error::NormDiverges { .. })
        ));
    }

    #[test]
    fn d_norm_zero_for_matching_kernel() {
        let k = Kernel::new(vec![1.0], vec![2.0]).unwrap();
        let quad = LineQuadrature::standard(0.0, 32.0);
        let v = weighted_line_norm(&k, 3, SymbolKind::D, 2.0, &quad).unwrap();
        assert_eq!(v.total(), 0.0);
    }

    #[test]
    fn inv_g_norm_uniform_over_n() {
        // Lemma-style boundedness: n = 4 and n = 64 within a factor 2.
        let quad = LineQuadrature::standard(1.0, 16.0);
        let v4 = weighted_line_norm(&wave(), 4, SymbolKind::InvG, 0.0, &quad)
            .unwrap()
            .total();
        let v64 = weighted_line_norm(&wave(), 64, SymbolKind::InvG, 0.0, &quad)
            .unwrap()
            .total();
        let ratio = (v4 / v64).max(v64 / v4);
        assert!(ratio < 2.0, "v4 {v4} v64 {v64}");
    }

    #[test]
    fn pole_on_line_detected() {
        let quad = LineQuadrature::new(0.0, 8.0, 64, TailModel::None).unwrap();
        assert!(matches!(
            weighted_line_norm(&wave(), 2, SymbolKind::InvG, 0.0, &quad),
            Err(Error::PoleOnLine { .. })
        ));
    }

    #[test]
    fn conjugate_symmetry() {
        let k = Kernel::new(vec![0.5, 0.5], vec![1.0, 3.0]).unwrap();
        for kind in [SymbolKind::G, SymbolKind::InvG, SymbolKind::D] {
            let z = c(0.8, 2.5);
            let v = symbol(&k, 5, z, kind).unwrap();
            let vc = symbol(&k, 5, z.conj(), kind).unwrap();
            assert!((v.conj() - vc).norm() < 1e-15);
        }
    }

    #[test]
    fn plancherel_wave_mode() {
        let grid = TimeGrid::new(10.0, 1e-4).unwrap();
        let traj = solve_mode(&wave(), 5, 1.0, &ModeForcing::Zero, &grid, Method::Ode).unwrap();
        let quad = LineQuadrature::for_plancherel(1.0, 5, 1.0);
        let r = plancherel_residual(&traj, &wave(), 1.0, &quad).unwrap();
        assert!(r <= 1e-3, "residual {r}");
    }

    #[test]
    fn plancherel_zero_data() {
        let grid = TimeGrid::new(2.0, 1e-3).unwrap();
        let k = Kernel::new(vec![1.0], vec![2.0]).unwrap();
        let traj = solve_mode(&k, 3, 0.0, &ModeForcing::Zero, &grid, Method::Ode).unwrap();
        let quad = LineQuadrature::for_plancherel(0.5, 3, 1.0);
        assert_eq!(plancherel_residual(&traj, &k, 0.5, &quad).unwrap(), 0.0);
    }

    #[test]
    fn line_scan_rows() {
        let quad = LineQuadrature::new(1.0, 4.0, 17, TailModel::None).unwrap();
        let rows = line_scan(&wave(), 2, SymbolKind::G, &quad).unwrap();
        assert_eq!(rows.len(), 17);
        assert_eq!(rows[0].0, -4.0);
        assert_eq!(rows[16].0, 4.0);
    }
}
