//! Characteristic polynomial, eigenvalue count and the full spectrum.

use crate::core_model::{BoundaryCondition, Equation, Problem};
use crate::linalg::{self, Mat2, Mat24};
use crate::scalar::{cone, cx, czero, modulus, real, Cx, Scalar};
use crate::tolerances::Tolerances;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpectralError {
    #[error("characteristic polynomial has degree {found} but the rank formula predicts {expected}")]
    DegreeMismatch { found: usize, expected: usize },
    #[error("root {re} + {im}i is not real")]
    NonRealRoot { re: f64, im: f64 },
}

/// Real polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPoly<T> {
    pub coeffs: Vec<T>,
}

impl<T: Scalar> RealPoly<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        RealPoly { coeffs }
    }

    pub fn zero() -> Self {
        RealPoly { coeffs: vec![T::zero()] }
    }

    pub fn constant(c: T) -> Self {
        RealPoly { coeffs: vec![c] }
    }

    /// Index of the last nonzero coefficient (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| *c != T::zero()).unwrap_or(0)
    }

    /// Degree after dropping trailing coefficients below `tol * max|c|`.
    pub fn trimmed_degree(&self, tol: T) -> usize {
        let big = self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.abs()));
        self.coeffs.iter().rposition(|c| c.abs() > tol * big).unwrap_or(0)
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).copied().unwrap_or(T::zero())
    }

    pub fn leading(&self) -> T {
        self.coeff(self.degree())
    }

    pub fn eval(&self, x: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, c| acc * x + *c)
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.abs()))
    }

    pub fn to_complex(&self) -> ComplexPoly<T> {
        ComplexPoly { coeffs: self.coeffs.iter().map(|c| real(*c)).collect() }
    }
}

/// Complex polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoly<T> {
    pub coeffs: Vec<Cx<T>>,
}

impl<T: Scalar> ComplexPoly<T> {
    pub fn new(coeffs: Vec<Cx<T>>) -> Self {
        ComplexPoly { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| c.norm_sqr() != T::zero()).unwrap_or(0)
    }

    /// Degree after dropping trailing coefficients below `tol * max|c|`.
    pub fn trimmed_degree(&self, tol: T) -> usize {
        let big = self.max_abs();
        self.coeffs.iter().rposition(|c| modulus(*c) > tol * big).unwrap_or(0)
    }

    pub fn coeff(&self, k: usize) -> Cx<T> {
        self.coeffs.get(k).copied().unwrap_or_else(czero)
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(modulus(*c)))
    }

    pub fn eval(&self, z: Cx<T>) -> Cx<T> {
        self.coeffs.iter().rev().fold(czero(), |acc, c| acc * z + *c)
    }

    /// Value and first derivative by Horner.
    pub fn eval_with_derivative(&self, z: Cx<T>) -> (Cx<T>, Cx<T>) {
        let mut p = czero::<T>();
        let mut dp = czero::<T>();
        for c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + *c;
        }
        (p, dp)
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        ComplexPoly { coeffs: self.coeffs.iter().map(|c| *c * s).collect() }
    }

    /// Coefficients of p(R x).
    pub fn rescale_variable(&self, r: T) -> Self {
        let mut pow = T::one();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            out.push(*c * pow);
            pow = pow * r;
        }
        ComplexPoly { coeffs: out }
    }

    /// Largest coefficient difference relative to the largest coefficient of either.
    pub fn relative_distance(&self, other: &Self) -> T {
        let n = self.coeffs.len().max(other.coeffs.len());
        let scale = self.max_abs().max(other.max_abs());
        if scale == T::zero() {
            return T::zero();
        }
        (0..n).fold(T::zero(), |m, k| m.max(modulus(self.coeff(k) - other.coeff(k)))) / scale
    }
}

/// The four boundary values at n = N of the two fundamental solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalSolutions<T> {
    pub phi_n: RealPoly<T>,
    pub psi_n: RealPoly<T>,
    pub fdphi_n: RealPoly<T>,
    pub fdpsi_n: RealPoly<T>,
}

/// Same as [`FundamentalSolutions`] but each solution pair carries a
/// power-of-two exponent so intermediate products never overflow.
#[derive(Debug, Clone)]
struct ScaledSolutions<T> {
    phi: (RealPoly<T>, RealPoly<T>, i32),
    psi: (RealPoly<T>, RealPoly<T>, i32),
}

fn pow2<T: Scalar>(x: T, mut e: i32) -> T {
    // multiply in bounded chunks so 2^e itself never overflows
    let mut out = x;
    while e != 0 {
        let step = e.clamp(-60, 60);
        out = out * T::lit(2.0).powi(step);
        e -= step;
    }
    out
}

fn run_recursion<T: Scalar>(eq: &Equation<T>, y0: T, u0: T) -> (RealPoly<T>, RealPoly<T>, i32) {
    let n = eq.len();
    let mut y = vec![T::zero(); n + 1];
    let mut u = vec![T::zero(); n + 1];
    y[0] = y0;
    u[0] = u0;
    let mut exponent = 0i32;
    for step in 1..=n {
        let inv_f = eq.inv_f(step - 1);
        let q = eq.q_at(step);
        let w = eq.w_at(step);
        // y_step = y_{step-1} + u_{step-1} / f_{step-1}
        for k in 0..=n {
            y[k] = y[k] + u[k] * inv_f;
        }
        // u_step = u_{step-1} + (q - λ w) y_step
        for k in (0..=n).rev() {
            let shifted = if k > 0 { y[k - 1] } else { T::zero() };
            u[k] = u[k] + q * y[k] - w * shifted;
        }
        if step % 8 == 0 {
            let big = y.iter().chain(u.iter()).fold(T::zero(), |m, c| m.max(c.abs()));
            if big > T::zero() && big.is_finite() {
                let e = big.log2().floor().to_i32().unwrap_or(0);
                if e.abs() > 16 {
                    let s = T::lit(2.0).powi(-e);
                    for c in y.iter_mut().chain(u.iter_mut()) {
                        *c = *c * s;
                    }
                    exponent += e;
                }
            }
        }
    }
    (RealPoly::new(y), RealPoly::new(u), exponent)
}

fn scaled_solutions<T: Scalar>(eq: &Equation<T>) -> ScaledSolutions<T> {
    ScaledSolutions { phi: run_recursion(eq, T::one(), T::zero()), psi: run_recursion(eq, T::zero(), T::one()) }
}

/// Runs the first-order recursion in polynomial arithmetic from
/// `(y_0, f_0 Δy_0) = (1, 0)` and `(0, 1)`.
pub fn fundamental_solutions<T: Scalar>(eq: &Equation<T>) -> FundamentalSolutions<T> {
    let s = scaled_solutions(eq);
    let unscale = |p: &RealPoly<T>, e: i32| RealPoly::new(p.coeffs.iter().map(|c| pow2(*c, e)).collect());
    let mut phi_n = unscale(&s.phi.0, s.phi.2);
    let mut psi_n = unscale(&s.psi.0, s.psi.2);
    phi_n.coeffs.truncate(eq.len());
    psi_n.coeffs.truncate(eq.len());
    FundamentalSolutions { phi_n, psi_n, fdphi_n: unscale(&s.phi.1, s.phi.2), fdpsi_n: unscale(&s.psi.1, s.psi.2) }
}

/// `∏_{i=1}^{N-1} w_i / f_i`
fn weight_product<T: Scalar>(eq: &Equation<T>) -> T {
    (1..eq.len()).fold(T::one(), |acc, i| acc * eq.w_at(i) / eq.f_at(i))
}

/// Closed-form leading coefficients of `φ_N, ψ_N` (degree N-1) and of
/// `f_NΔφ_N, f_NΔψ_N` (degree N).
pub fn leading_terms<T: Scalar>(eq: &Equation<T>) -> [T; 4] {
    let n = eq.len();
    let p = weight_product(eq);
    let sign_odd = if (n - 1).is_multiple_of(2) { T::one() } else { -T::one() };
    let wn = eq.w_at(n);
    let f0 = eq.f0();
    [sign_odd * p, sign_odd * p / f0, -sign_odd * wn * p, -sign_odd * wn * p / f0]
}

/// `[[b11, b21], [b12, b22]] · adj(A)` written out as the product it is.
pub fn c_matrix<T: Scalar>(bc: &BoundaryCondition<T>) -> Mat2<T> {
    let bt: Mat2<T> = [[bc.b(1, 1), bc.b(2, 1)], [bc.b(1, 2), bc.b(2, 2)]];
    let adj: Mat2<T> = [[bc.a(2, 2), -bc.a(2, 1)], [-bc.a(1, 2), bc.a(1, 1)]];
    linalg::mul2(&bt, &adj)
}

fn combine<T: Scalar>(bc: &BoundaryCondition<T>, s: &ScaledSolutions<T>, n: usize) -> (ComplexPoly<T>, i32) {
    let c = c_matrix(bc);
    let top = s.phi.2.max(s.psi.2).max(0);
    let constant = (bc.det_a() + bc.det_b()) * pow2(T::one(), -top);
    let mut coeffs = vec![czero::<T>(); n + 1];
    coeffs[0] = constant;
    let phi_scale = pow2(T::one(), s.phi.2 - top);
    let psi_scale = pow2(T::one(), s.psi.2 - top);
    for k in 0..=n {
        let term = c[0][0] * real(s.phi.0.coeff(k) * phi_scale)
            + c[0][1] * real(s.psi.0.coeff(k) * psi_scale)
            + c[1][0] * real(s.phi.1.coeff(k) * phi_scale)
            + c[1][1] * real(s.psi.1.coeff(k) * psi_scale);
        coeffs[k] = coeffs[k] + term;
    }
    (ComplexPoly::new(coeffs), top)
}

/// `Γ(λ) = det A + det B + c11 φ_N + c12 ψ_N + c21 f_NΔφ_N + c22 f_NΔψ_N`
pub fn char_poly<T: Scalar>(p: &Problem<T>) -> ComplexPoly<T> {
    let s = scaled_solutions(&p.equation);
    let (g, e) = combine(&p.bc, &s, p.len());
    ComplexPoly::new(g.coeffs.iter().map(|c| cx(pow2(c.re, e), pow2(c.im, e))).collect())
}

/// The two Plücker minors entering the leading coefficient:
/// `(a11 b22 - a21 b12, a22 b12 - a12 b22)`.
pub fn boundary_minors<T: Scalar>(bc: &BoundaryCondition<T>) -> (Cx<T>, Cx<T>) {
    let mu1 = bc.a(1, 1) * bc.b(2, 2) - bc.a(2, 1) * bc.b(1, 2);
    let mu2 = bc.a(2, 2) * bc.b(1, 2) - bc.a(1, 2) * bc.b(2, 2);
    (mu1, mu2)
}

/// Closed-form coefficient of `λ^N` in Γ for the stored representative.
pub fn theta<T: Scalar>(p: &Problem<T>) -> Cx<T> {
    let eq = &p.equation;
    let n = eq.len();
    let sign = if n.is_multiple_of(2) { T::one() } else { -T::one() };
    let scale = sign * eq.w_at(n) * weight_product(eq);
    let (mu1, mu2) = boundary_minors(&p.bc);
    (mu1 / eq.f0() + mu2) * scale
}

/// The 2x2 matrix whose rank sets the eigenvalue count.
pub fn rank_matrix<T: Scalar>(p: &Problem<T>) -> Mat2<T> {
    let f0 = real(p.equation.f0());
    let bc = &p.bc;
    [[-bc.a(1, 1) + f0 * bc.a(1, 2), bc.b(1, 2)], [-bc.a(2, 1) + f0 * bc.a(2, 2), bc.b(2, 2)]]
}

pub fn rank_r<T: Scalar>(p: &Problem<T>) -> usize {
    rank_r_with(p, &Tolerances::default())
}

/// Numerical rank, thresholded against the size of the boundary matrix so
/// that an exactly vanishing block reads as rank zero.
pub fn rank_r_with<T: Scalar>(p: &Problem<T>, tol: &Tolerances) -> usize {
    let m = rank_matrix(p);
    let (big, small) = linalg::singular_values(&m);
    let scale = p.bc.norm() * p.equation.f0().abs().max(T::one());
    let thr = T::lit(tol.rank) * scale;
    (big > thr) as usize + (small > thr) as usize
}

pub fn count_eigenvalues<T: Scalar>(p: &Problem<T>) -> usize {
    count_eigenvalues_with(p, &Tolerances::default())
}

pub fn count_eigenvalues_with<T: Scalar>(p: &Problem<T>, tol: &Tolerances) -> usize {
    p.len() - 2 + rank_r_with(p, tol)
}

/// The three count regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountCase {
    /// θ ≠ 0: N eigenvalues
    Full,
    /// θ = 0 but the condition is not the special matrix: N-1
    OneLess,
    /// the condition is `[1, 1/f0, 0, 0; 0, 0, 1, 0]`: N-2
    TwoLess,
}

/// `[1, 1/f0, 0, 0; 0, 0, 1, 0]`, the one condition with N-2 eigenvalues.
pub fn special_matrix<T: Scalar>(f0: T) -> Mat24<T> {
    [[cone(), real(T::one() / f0), czero(), czero()], [czero(), czero(), cone(), czero()]]
}

pub fn count_case<T: Scalar>(p: &Problem<T>, tol: &Tolerances) -> CountCase {
    let d = linalg::row_space_distance(p.bc.matrix(), &special_matrix(p.equation.f0()));
    if d <= T::lit(tol.set) {
        return CountCase::TwoLess;
    }
    match rank_r_with(p, tol) {
        2 => CountCase::Full,
        1 => CountCase::OneLess,
        _ => CountCase::TwoLess,
    }
}

/// Scale that bounds the eigenvalues of the interior pencil:
/// `1 + max_n (|q_n| + |f_{n-1}| + |f_n|) / min_n w_n`.
pub fn spectral_scale<T: Scalar>(eq: &Equation<T>) -> T {
    let n = eq.len();
    let mut top = T::zero();
    for k in 1..=n {
        top = top.max(eq.q_at(k).abs() + eq.f_at(k - 1).abs() + eq.f_at(k).abs());
    }
    let wmin = eq.w().iter().fold(T::infinity(), |m, w| m.min(*w));
    T::one() + top / wmin
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue<T> {
    pub value: T,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    /// strictly increasing
    pub eigenvalues: Vec<Eigenvalue<T>>,
    pub predicted_count: usize,
    pub r: usize,
    pub theta: Cx<T>,
    pub gamma: ComplexPoly<T>,
    /// leading retained coefficient sits between the trim and near-singular thresholds
    pub near_singular: bool,
    pub warnings: Vec<String>,
}

impl<T: Scalar> Spectrum<T> {
    /// Eigenvalues repeated by multiplicity, ascending.
    pub fn values(&self) -> Vec<T> {
        self.eigenvalues.iter().flat_map(|e| std::iter::repeat_n(e.value, e.multiplicity)).collect()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.multiplicity).sum()
    }
}

/// Degree of Γ judged on `Γ(R x)`, and the scaled ratio of the retained
/// leading coefficient.
fn effective_degree<T: Scalar>(scaled: &ComplexPoly<T>, tol: &Tolerances) -> (usize, T) {
    let big = scaled.max_abs();
    if big == T::zero() {
        return (0, T::zero());
    }
    let d = scaled.trimmed_degree(T::lit(tol.trim));
    (d, modulus(scaled.coeff(d)) / big)
}

/// Degree of Γ after trimming, as the eigenvalue solver sees it.
pub fn gamma_degree<T: Scalar>(p: &Problem<T>, tol: &Tolerances) -> usize {
    let s = scaled_solutions(&p.equation);
    let (g, _) = combine(&p.bc, &s, p.len());
    let r = spectral_scale(&p.equation);
    effective_degree(&g.rescale_variable(r), tol).0
}

pub fn eigenvalues<T: Scalar>(p: &Problem<T>) -> Result<Spectrum<T>, SpectralError> {
    eigenvalues_with(p, &Tolerances::default())
}

pub fn eigenvalues_with<T: Scalar>(p: &Problem<T>, tol: &Tolerances) -> Result<Spectrum<T>, SpectralError> {
    solve(p, tol, DegreeRule::Rank)
}

/// Like [`eigenvalues_with`] but trusts the trimmed degree of Γ over the
/// rank formula. Used for limit problems that sit on a singular set, where
/// the two thresholds can disagree by a rounding error.
pub fn eigenvalues_by_degree_with<T: Scalar>(p: &Problem<T>, tol: &Tolerances) -> Result<Spectrum<T>, SpectralError> {
    solve(p, tol, DegreeRule::Trimmed)
}

/// Like [`eigenvalues_with`] but keeps every coefficient up to the degree
/// the rank formula predicts, however small the leading one is. Used close
/// to a singular set, where Γ still has that degree but its leading
/// coefficient has fallen under the trim threshold.
pub fn eigenvalues_untrimmed_with<T: Scalar>(p: &Problem<T>, tol: &Tolerances) -> Result<Spectrum<T>, SpectralError> {
    solve(p, tol, DegreeRule::Untrimmed)
}

#[derive(Clone, Copy, PartialEq)]
enum DegreeRule {
    /// trimmed degree must match the rank formula
    Rank,
    /// trimmed degree is trusted
    Trimmed,
    /// the rank formula is trusted and nothing is trimmed
    Untrimmed,
}

fn solve<T: Scalar>(p: &Problem<T>, tol: &Tolerances, rule: DegreeRule) -> Result<Spectrum<T>, SpectralError> {
    let s = scaled_solutions(&p.equation);
    let (g_scaled, e) = combine(&p.bc, &s, p.len());
    let gamma = ComplexPoly::new(g_scaled.coeffs.iter().map(|c| cx(pow2(c.re, e), pow2(c.im, e))).collect());
    let r_scale = spectral_scale(&p.equation);
    let in_x = g_scaled.rescale_variable(r_scale);
    let (mut degree, mut lead_ratio) = effective_degree(&in_x, tol);
    let r = rank_r_with(p, tol);
    let by_rank = p.len() - 2 + r;
    if rule == DegreeRule::Untrimmed && by_rank > degree && modulus(in_x.coeff(by_rank)) > T::zero() {
        degree = by_rank;
        lead_ratio = modulus(in_x.coeff(by_rank)) / in_x.max_abs();
    }
    let predicted = if rule == DegreeRule::Trimmed { degree } else { by_rank };
    if degree != predicted {
        return Err(SpectralError::DegreeMismatch { found: degree, expected: predicted });
    }
    let near_singular = degree > 0 && lead_ratio < T::lit(tol.near_singular);
    let mut warnings = Vec::new();
    let mut eigen = Vec::new();
    if degree > 0 {
        let mut trimmed = in_x.clone();
        trimmed.coeffs.truncate(degree + 1);
        let roots = aberth(&trimmed.coeffs);
        let mut reals = Vec::with_capacity(roots.len());
        for z in roots {
            let lam = z * r_scale;
            if lam.im.abs() > T::lit(tol.real) * (T::one() + lam.re.abs()) {
                return Err(SpectralError::NonRealRoot { re: lam.re.to_f64_lossy(), im: lam.im.to_f64_lossy() });
            }
            reals.push(lam.re);
        }
        reals.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
        eigen = cluster(&reals, &trimmed, r_scale, tol);
        for ev in &eigen {
            if ev.multiplicity >= 3 {
                warnings.push(format!("eigenvalue {} has multiplicity {}", ev.value.to_f64_lossy(), ev.multiplicity));
            }
        }
    }
    Ok(Spectrum { eigenvalues: eigen, predicted_count: predicted, r, theta: theta(p), gamma, near_singular, warnings })
}

/// Groups sorted roots closer than `tol.cluster * (1 + |λ|)`. A merged
/// group must also be a near-stationary point of Γ; otherwise it stays split.
fn cluster<T: Scalar>(sorted: &[T], in_x: &ComplexPoly<T>, r_scale: T, tol: &Tolerances) -> Vec<Eigenvalue<T>> {
    let mut out: Vec<Eigenvalue<T>> = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] - sorted[j - 1] <= T::lit(tol.cluster) * (T::one() + sorted[j].abs()) {
            j += 1;
        }
        let group = &sorted[i..j];
        let mean = group.iter().fold(T::zero(), |s, v| s + *v) / T::lit(group.len() as f64);
        if group.len() > 1 && !is_stationary(in_x, mean / r_scale, tol) {
            for v in group {
                out.push(Eigenvalue { value: *v, multiplicity: 1 });
            }
        } else {
            out.push(Eigenvalue { value: mean, multiplicity: group.len() });
        }
        i = j;
    }
    out
}

fn is_stationary<T: Scalar>(p: &ComplexPoly<T>, x: T, tol: &Tolerances) -> bool {
    let (_, dp) = p.eval_with_derivative(real(x));
    // size of the derivative's terms, so the test is scale free
    let mut size = T::zero();
    let mut pow = T::one();
    for k in 1..p.coeffs.len() {
        size = size + T::lit(k as f64) * modulus(p.coeffs[k]) * pow;
        pow = pow * x.abs();
    }
    size == T::zero() || modulus(dp) <= T::lit(tol.cluster).sqrt() * size
}

/// All roots of a polynomial with nonzero leading coefficient by
/// Aberth-Ehrlich iteration and a short Newton polish.
pub fn aberth<T: Scalar>(coeffs: &[Cx<T>]) -> Vec<Cx<T>> {
    let d = coeffs.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    let lead = coeffs[d];
    let monic: Vec<Cx<T>> = coeffs.iter().map(|c| *c / lead).collect();
    let poly = ComplexPoly::new(monic.clone());
    if d == 1 {
        return vec![-monic[0]];
    }
    let cauchy = T::one() + monic[..d].iter().fold(T::zero(), |m, c| m.max(modulus(*c)));
    let mut fujiwara = T::zero();
    for k in 1..=d {
        let c = modulus(monic[d - k]);
        let root = if k == d {
            (c / T::lit(2.0)).powf(T::one() / T::lit(k as f64))
        } else {
            c.powf(T::one() / T::lit(k as f64))
        };
        fujiwara = fujiwara.max(root);
    }
    let radius = cauchy.min(T::lit(2.0) * fujiwara).max(T::epsilon());
    let mut z: Vec<Cx<T>> = (0..d)
        .map(|j| {
            let t = T::TAU() * T::lit(j as f64) / T::lit(d as f64) + T::lit(0.4);
            cx(radius * t.cos(), radius * t.sin())
        })
        .collect();
    let eps = T::epsilon();
    let mut done = vec![false; d];
    for _ in 0..2000 {
        let mut moved = false;
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (p, dp) = poly.eval_with_derivative(z[i]);
            if p.norm_sqr() == T::zero() {
                done[i] = true;
                continue;
            }
            let ratio = p / dp;
            let mut s = czero::<T>();
            for j in 0..d {
                if j != i {
                    let diff = z[i] - z[j];
                    if diff.norm_sqr() > T::zero() {
                        s = s + cone::<T>() / diff;
                    }
                }
            }
            let denom = cone::<T>() - ratio * s;
            let step =
                if denom.norm_sqr() > T::zero() && dp.norm_sqr() > T::zero() { ratio / denom } else { cx(eps, eps) };
            if !step.re.is_finite() || !step.im.is_finite() {
                continue;
            }
            z[i] = z[i] - step;
            if modulus(step) <= T::lit(4.0) * eps * (T::one() + modulus(z[i])) {
                done[i] = true;
            } else {
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..2 {
            let (p, dp) = poly.eval_with_derivative(*zi);
            if dp.norm_sqr() == T::zero() {
                break;
            }
            let cand = *zi - p / dp;
            if cand.re.is_finite() && cand.im.is_finite() && modulus(poly.eval(cand)) < modulus(p) {
                *zi = cand;
            }
        }
    }
    z
}
