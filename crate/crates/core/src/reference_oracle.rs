//! Independent ground truth: Γ rebuilt from pointwise numeric evaluation,
//! and a symmetric tridiagonal pencil for separated conditions.

use crate::core_model::{Equation, Problem};
use crate::scalar::Cx;
use crate::spectral_engine::ComplexPoly;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OracleError {
    #[error("interpolated polynomial misses out-of-sample values by {0:e} (relative)")]
    IllConditioned(f64),
    #[error("cannot eliminate boundary unknowns: {0}")]
    AssemblyError(String),
}

/// Transfer matrix `[[φ_N, ψ_N], [f_NΔφ_N, f_NΔψ_N]]` at one λ, by plain
/// scalar recursion.
pub fn transfer_at(eq: &Equation<f64>, lambda: Cx<f64>) -> [[Cx<f64>; 2]; 2] {
    let n = eq.len();
    let (zero, one) = (Cx::new(0.0, 0.0), Cx::new(1.0, 0.0));
    let mut cols = [[one, zero], [zero, one]];
    for col in cols.iter_mut() {
        let (mut y, mut u) = (col[0], col[1]);
        for k in 1..=n {
            y += u / eq.f_at(k - 1);
            u += (lambda * -eq.w_at(k) + eq.q_at(k)) * y;
        }
        *col = [y, u];
    }
    [[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]]
}

/// `det(A + B Φ(λ))`, which vanishes exactly at eigenvalues. Expanded as
/// `det A + det B det Φ` plus terms linear in Φ: every step of the
/// recursion is unimodular, so `det Φ = 1`, and forming the 2x2
/// determinant directly would cancel entries of size |λ|^N.
pub fn gamma_at(p: &Problem<f64>, lambda: Cx<f64>) -> Cx<f64> {
    let phi = transfer_at(&p.equation, lambda);
    let m = p.bc.matrix();
    let mut bphi = [[Cx::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            bphi[i][j] = m[i][2] * phi[0][j] + m[i][3] * phi[1][j];
        }
    }
    let det_a = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let det_b = m[0][2] * m[1][3] - m[0][3] * m[1][2];
    let cross = m[0][0] * bphi[1][1] - m[0][1] * bphi[1][0] + bphi[0][0] * m[1][1] - bphi[0][1] * m[1][0];
    det_a + det_b + cross
}

/// Γ recovered from its values at the N+1 roots of unity.
///
/// On the unit circle the discrete Fourier transform is unitary, so every
/// coefficient comes back with an error of order `ε Σ|c_k|`. Real nodes
/// spread over the eigenvalue range would leave the low-order coefficients
/// with an error of order `ε R^N`.
pub fn gamma_by_interpolation(p: &Problem<f64>) -> Result<ComplexPoly<f64>, OracleError> {
    gamma_by_interpolation_with(p, 1e-9)
}

pub fn gamma_by_interpolation_with(p: &Problem<f64>, tol: f64) -> Result<ComplexPoly<f64>, OracleError> {
    let m = p.len() + 1;
    let tau = 2.0 * std::f64::consts::PI;
    let node = |t: f64| Cx::from_polar(1.0, tau * t / m as f64);
    let values: Vec<Cx<f64>> = (0..m).map(|j| gamma_at(p, node(j as f64))).collect();
    let coeffs: Vec<Cx<f64>> = (0..m)
        .map(|k| {
            let s = values.iter().enumerate().fold(Cx::new(0.0, 0.0), |s, (j, v)| s + v * node(-((j * k) as f64)));
            s / m as f64
        })
        .collect();
    let poly = ComplexPoly::new(coeffs);
    // out-of-sample check halfway between the nodes and on a wider circle
    let size: f64 = (0..m).map(|k| poly.coeff(k).norm()).sum();
    let mut worst = 0.0f64;
    for j in 0..m {
        for radius in [1.0, 2.0] {
            let z = node(j as f64 + 0.5) * radius;
            let scale = size * radius.powi(m as i32 - 1);
            worst = worst.max((gamma_at(p, z) - poly.eval(z)).norm() / scale.max(f64::MIN_POSITIVE));
        }
    }
    if worst > tol {
        return Err(OracleError::IllConditioned(worst));
    }
    Ok(poly)
}

/// Symmetric tridiagonal matrix given by its diagonal and off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence via LDLᵀ pivots).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.diag.len() {
            let coupling = if i > 0 { self.off[i - 1] * self.off[i - 1] / d } else { 0.0 };
            d = self.diag[i] - x - coupling;
            if d == 0.0 {
                d = -f64::EPSILON * (1.0 + x.abs());
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut rad = 0.0;
            if i > 0 {
                rad += self.off[i - 1].abs();
            }
            if i + 1 < n {
                rad += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - rad);
            hi = hi.max(self.diag[i] + rad);
        }
        (lo, hi)
    }

    /// All eigenvalues by bisection, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.len();
        if n == 0 {
            return Vec::new();
        }
        let (lo, hi) = self.bounds();
        let pad = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        (0..n)
            .map(|k| {
                let (mut a, mut b) = (lo - pad, hi + pad);
                while b - a > 4.0 * f64::EPSILON * (1.0 + a.abs().max(b.abs())) {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if self.count_below(mid) > k {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                0.5 * (a + b)
            })
            .collect()
    }
}

/// The symmetric-definite pencil `L v = λ W v` for the separated condition
/// `[cos α, -sin α, 0, 0; 0, 0, cos β, -sin β]`, symmetrised with `W^{-1/2}`.
pub fn separated_pencil(eq: &Equation<f64>, alpha: f64, beta: f64) -> Result<Tridiagonal, OracleError> {
    let n = eq.len();
    let f = |k: usize| eq.f_at(k);
    let f0 = f(0);
    let (ca, sa) = (alpha.cos(), alpha.sin());
    let (cb, sb) = (beta.cos(), beta.sin());
    if !(ca.is_finite() && sa.is_finite() && cb.is_finite() && sb.is_finite()) {
        return Err(OracleError::AssemblyError("non-finite angle".into()));
    }
    let left_den = ca + f0 * sa;
    let drop_first = left_den.abs() <= 1e-12 * (ca.abs() + (f0 * sa).abs());
    let drop_last = sb.abs() <= 1e-12;
    // unknowns y_first..=y_last
    let first = if drop_first { 2 } else { 1 };
    let last = if drop_last { n - 1 } else { n };
    if last < first {
        return Ok(Tridiagonal { diag: Vec::new(), off: Vec::new() });
    }
    let mut diag = Vec::new();
    let mut off = Vec::new();
    for k in first..=last {
        let left = if k == 1 { f0 * ca / left_den } else { f(k - 1) };
        let right = if k == n { -cb / sb } else { f(k) };
        diag.push((left + right + eq.q_at(k)) / eq.w_at(k));
        if k < last {
            off.push(-f(k) / (eq.w_at(k) * eq.w_at(k + 1)).sqrt());
        }
    }
    Ok(Tridiagonal { diag, off })
}

pub fn pencil_eigenvalues_separated(eq: &Equation<f64>, alpha: f64, beta: f64) -> Result<Vec<f64>, OracleError> {
    Ok(separated_pencil(eq, alpha, beta)?.eigenvalues())
}
