//! Coordinates on the manifold of self-adjoint boundary conditions: the four
//! affine charts, the separated/coupled canonical forms, and a sampler.

use crate::core_model::{BoundaryCondition, ModelError};
use crate::linalg::{self, Mat2, Mat24};
use crate::scalar::{cone, cx, czero, modulus, real, Cx, Scalar};
use crate::tolerances::Tolerances;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ManifoldError {
    #[error("boundary condition is not in chart {0}")]
    NotInChart(Chart),
    #[error("angle {name} = {value} is outside its canonical range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("det K = {0}, expected 1")]
    NotUnimodular(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The four affine charts. Each is named after the pair of columns of
/// `[A|B]` that must form an invertible block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Chart {
    O13,
    O14,
    O23,
    O24,
}

impl Chart {
    pub const ALL: [Chart; 4] = [Chart::O13, Chart::O14, Chart::O23, Chart::O24];

    /// Zero-based pivot columns.
    pub fn pivots(self) -> (usize, usize) {
        match self {
            Chart::O13 => (0, 2),
            Chart::O14 => (0, 3),
            Chart::O23 => (1, 2),
            Chart::O24 => (1, 3),
        }
    }

    /// Zero-based free columns: one in the A block, one in the B block.
    pub fn free(self) -> (usize, usize) {
        let (a, b) = self.pivots();
        (1 - a, 5 - b)
    }

    /// Diagonal signs the pivot block carries in the template.
    fn pivot_signs(self) -> (f64, f64) {
        match self {
            Chart::O13 => (1.0, -1.0),
            Chart::O14 => (1.0, 1.0),
            Chart::O23 => (-1.0, -1.0),
            Chart::O24 => (-1.0, 1.0),
        }
    }

    /// Names of the two real parameters.
    pub fn parameter_names(self) -> (&'static str, &'static str) {
        match self {
            Chart::O13 => ("a12", "b22"),
            Chart::O14 => ("a12", "b21"),
            Chart::O23 => ("a11", "b22"),
            Chart::O24 => ("a11", "b21"),
        }
    }

    pub fn parse(name: &str) -> Option<Chart> {
        match name.to_ascii_uppercase().as_str() {
            "O13" => Some(Chart::O13),
            "O14" => Some(Chart::O14),
            "O23" => Some(Chart::O23),
            "O24" => Some(Chart::O24),
            _ => None,
        }
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Chart::O13 => "O13",
            Chart::O14 => "O14",
            Chart::O23 => "O23",
            Chart::O24 => "O24",
        };
        f.write_str(s)
    }
}

/// A point in one chart: `(first parameter, Re z, Im z, second parameter)`.
///
/// Templates, rows separated by `;`:
/// - O13 `[1, a12, 0, z̄; 0, z, -1, b22]`
/// - O14 `[1, a12, z̄, 0; 0, z, b21, 1]`
/// - O23 `[a11, -1, 0, z̄; z, 0, -1, b22]`
/// - O24 `[a11, -1, z̄, 0; z, 0, b21, 1]`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartCoordinates<T> {
    pub chart: Chart,
    pub coords: [T; 4],
}

impl<T: Scalar> ChartCoordinates<T> {
    pub fn new(chart: Chart, first: T, z: Cx<T>, second: T) -> Self {
        ChartCoordinates { chart, coords: [first, z.re, z.im, second] }
    }

    pub fn first(&self) -> T {
        self.coords[0]
    }

    pub fn second(&self) -> T {
        self.coords[3]
    }

    pub fn z(&self) -> Cx<T> {
        cx(self.coords[1], self.coords[2])
    }

    /// The template matrix for these coordinates.
    pub fn matrix(&self) -> Mat24<T> {
        let (pa, pb) = self.chart.pivots();
        let (fa, fb) = self.chart.free();
        let (sa, sb) = self.chart.pivot_signs();
        let mut m = [[czero::<T>(); 4]; 2];
        m[0][pa] = real(T::lit(sa));
        m[1][pb] = real(T::lit(sb));
        m[0][fa] = real(self.first());
        m[1][fa] = self.z();
        m[0][fb] = self.z().conj();
        m[1][fb] = real(self.second());
        m
    }

    pub fn to_bc(&self) -> BoundaryCondition<T> {
        // every template is self-adjoint and of rank two by construction
        BoundaryCondition::from_trusted(self.matrix())
    }
}

/// Row-reduces `bc` into the template of `chart`.
pub fn normalize_to_chart<T: Scalar>(
    bc: &BoundaryCondition<T>,
    chart: Chart,
) -> Result<ChartCoordinates<T>, ManifoldError> {
    normalize_to_chart_with(bc, chart, &Tolerances::default())
}

pub fn normalize_to_chart_with<T: Scalar>(
    bc: &BoundaryCondition<T>,
    chart: Chart,
    tol: &Tolerances,
) -> Result<ChartCoordinates<T>, ManifoldError> {
    let m = bc.matrix();
    let (pa, pb) = chart.pivots();
    let pivot: Mat2<T> = [[m[0][pa], m[0][pb]], [m[1][pa], m[1][pb]]];
    let (_, small) = linalg::singular_values(&pivot);
    let scale = linalg::frobenius(m);
    if small <= T::lit(tol.rank) * scale {
        return Err(ManifoldError::NotInChart(chart));
    }
    let inv = linalg::inv2(&pivot).ok_or(ManifoldError::NotInChart(chart))?;
    let (sa, sb) = chart.pivot_signs();
    let signs: Mat2<T> = [[real(T::lit(sa)), czero()], [czero(), real(T::lit(sb))]];
    let n = linalg::left_mul(&linalg::mul2(&signs, &inv), m);
    let (fa, fb) = chart.free();
    Ok(ChartCoordinates::new(chart, n[0][fa].re, n[1][fa], n[1][fb].re))
}

/// Charts whose pivot block is invertible for `bc`.
pub fn covering_charts<T: Scalar>(bc: &BoundaryCondition<T>) -> Vec<Chart> {
    Chart::ALL.iter().copied().filter(|&c| normalize_to_chart(bc, c).is_ok()).collect()
}

/// The chart with the best-conditioned pivot block.
pub fn best_chart<T: Scalar>(bc: &BoundaryCondition<T>) -> Chart {
    let m = bc.matrix();
    let mut best = (Chart::O14, T::neg_infinity());
    for c in Chart::ALL {
        let (pa, pb) = c.pivots();
        let pivot: Mat2<T> = [[m[0][pa], m[0][pb]], [m[1][pa], m[1][pb]]];
        let (_, small) = linalg::singular_values(&pivot);
        if small > best.1 {
            best = (c, small);
        }
    }
    best.0
}

#[derive(Debug, Clone, PartialEq)]
pub enum CanonicalForm<T> {
    /// `[cos α, -sin α, 0, 0; 0, 0, cos β, -sin β]`, α in [0,π), β in (0,π]
    Separated { alpha: T, beta: T },
    /// `[e^{iγ} K | -I]`, γ in [0,π), K real with det K = 1
    Coupled { gamma: T, k: [[T; 2]; 2] },
}

impl<T: Scalar> CanonicalForm<T> {
    pub fn matrix(&self) -> Mat24<T> {
        match self {
            CanonicalForm::Separated { alpha, beta } => separated_rows(*alpha, *beta),
            CanonicalForm::Coupled { gamma, k } => coupled_rows(*gamma, k),
        }
    }

    pub fn is_separated(&self) -> bool {
        matches!(self, CanonicalForm::Separated { .. })
    }
}

fn separated_rows<T: Scalar>(alpha: T, beta: T) -> Mat24<T> {
    [[real(alpha.cos()), real(-alpha.sin()), czero(), czero()], [czero(), czero(), real(beta.cos()), real(-beta.sin())]]
}

fn coupled_rows<T: Scalar>(gamma: T, k: &[[T; 2]; 2]) -> Mat24<T> {
    let e = cx(gamma.cos(), gamma.sin());
    [[e * k[0][0], e * k[0][1], -cone::<T>(), czero()], [e * k[1][0], e * k[1][1], czero(), -cone::<T>()]]
}

/// The separated condition with angles in the canonical ranges.
pub fn separated_matrix<T: Scalar>(alpha: T, beta: T) -> Result<BoundaryCondition<T>, ManifoldError> {
    if !(alpha >= T::zero() && alpha < T::PI()) {
        return Err(ManifoldError::OutOfRange { name: "alpha", value: alpha.to_f64_lossy() });
    }
    if !(beta > T::zero() && beta <= T::PI()) {
        return Err(ManifoldError::OutOfRange { name: "beta", value: beta.to_f64_lossy() });
    }
    Ok(BoundaryCondition::from_trusted(separated_rows(alpha, beta)))
}

/// The separated matrix for any real angles. Sweeps that run past the
/// canonical ranges use this; the result is still a valid condition.
pub fn separated_matrix_unchecked<T: Scalar>(alpha: T, beta: T) -> BoundaryCondition<T> {
    BoundaryCondition::from_trusted(separated_rows(alpha, beta))
}

/// `[e^{iγ} K | -I]`; K must have unit determinant within 1e-10.
pub fn coupled_matrix<T: Scalar>(gamma: T, k: [[T; 2]; 2]) -> Result<BoundaryCondition<T>, ManifoldError> {
    let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
    let slack = T::lit(1e-10).max(T::epsilon() * T::lit(64.0));
    if (det - T::one()).abs() > slack * (T::one() + det.abs()) {
        return Err(ManifoldError::NotUnimodular(det.to_f64_lossy()));
    }
    Ok(BoundaryCondition::new(coupled_rows(gamma, &k))?)
}

/// A left null vector of a 2x2 block, scaled to unit length, together with
/// how far from null it is relative to the matching row of `[A|B]`.
fn near_null_row<T: Scalar>(block: &Mat2<T>, m: &Mat24<T>) -> ([Cx<T>; 2], T) {
    // v^T X = 0 with v = (x21, -x11) or (x22, -x12)
    let c1 = [block[1][0], -block[0][0]];
    let c2 = [block[1][1], -block[0][1]];
    let n1 = modulus(c1[0]).hypot(modulus(c1[1]));
    let n2 = modulus(c2[0]).hypot(modulus(c2[1]));
    let (v, n) = if n1 >= n2 { (c1, n1) } else { (c2, n2) };
    if n == T::zero() {
        // zero block: any row works
        let v = [cone::<T>(), czero()];
        return (v, T::zero());
    }
    let v = [v[0] / n, v[1] / n];
    let row_block = [v[0] * block[0][0] + v[1] * block[1][0], v[0] * block[0][1] + v[1] * block[1][1]];
    let mut row_norm = T::zero();
    for k in 0..4 {
        row_norm = row_norm + (v[0] * m[0][k] + v[1] * m[1][k]).norm_sqr();
    }
    let resid = (row_block[0].norm_sqr() + row_block[1].norm_sqr()).sqrt();
    let row_norm = row_norm.sqrt();
    if row_norm == T::zero() {
        return (v, T::infinity());
    }
    (v, resid / row_norm)
}

/// Rotates a complex pair onto the real line using the phase of its larger entry.
fn realify<T: Scalar>(x: [Cx<T>; 2]) -> (T, T) {
    let pivot = if modulus(x[0]) >= modulus(x[1]) { x[0] } else { x[1] };
    let r = modulus(pivot);
    if r == T::zero() {
        return (T::zero(), T::zero());
    }
    let phase = pivot.conj() / r;
    ((x[0] * phase).re, (x[1] * phase).re)
}

/// Reduces an angle into [0, π).
fn reduce_half_open<T: Scalar>(mut a: T) -> T {
    let pi = T::PI();
    a = a % pi;
    if a < T::zero() {
        a = a + pi;
    }
    if a >= pi {
        a = a - pi;
    }
    a
}

/// Whether `bc` is separated, judged by the near-null rows of its two blocks.
pub fn is_separated<T: Scalar>(bc: &BoundaryCondition<T>, tol: &Tolerances) -> bool {
    let (_, rb) = near_null_row(&bc.b_block(), bc.matrix());
    rb <= T::lit(tol.separated)
}

pub fn canonical_form<T: Scalar>(bc: &BoundaryCondition<T>) -> CanonicalForm<T> {
    canonical_form_with(bc, &Tolerances::default())
}

pub fn canonical_form_with<T: Scalar>(bc: &BoundaryCondition<T>, tol: &Tolerances) -> CanonicalForm<T> {
    let m = bc.matrix();
    let a = bc.a_block();
    let b = bc.b_block();
    let (vb, rb) = near_null_row(&b, m);
    if rb <= T::lit(tol.separated) {
        let (va, _) = near_null_row(&a, m);
        // row with (near) zero B block carries the left angle
        let left = [vb[0] * a[0][0] + vb[1] * a[1][0], vb[0] * a[0][1] + vb[1] * a[1][1]];
        let right = [va[0] * b[0][0] + va[1] * b[1][0], va[0] * b[0][1] + va[1] * b[1][1]];
        let (a1, a2) = realify(left);
        let (b1, b2) = realify(right);
        let alpha = reduce_half_open((-a2).atan2(a1));
        let mut beta = reduce_half_open((-b2).atan2(b1));
        if beta <= T::zero() {
            beta = beta + T::PI();
        }
        return CanonicalForm::Separated { alpha, beta };
    }
    // [A|B] ~ [-B^{-1}A | -I]
    let binv = linalg::inv2(&b).expect("coupled conditions have invertible B");
    let kp = linalg::mul2(&binv, &a);
    let kp: Mat2<T> = [[-kp[0][0], -kp[0][1]], [-kp[1][0], -kp[1][1]]];
    let det = linalg::det2(&kp);
    let gamma = reduce_half_open(det.arg() * T::lit(0.5));
    let rot = cx(gamma.cos(), -gamma.sin());
    let k = [[(kp[0][0] * rot).re, (kp[0][1] * rot).re], [(kp[1][0] * rot).re, (kp[1][1] * rot).re]];
    CanonicalForm::Coupled { gamma, k }
}

/// Random self-adjoint condition: a canonical form twisted by a random
/// invertible complex matrix.
pub fn random_bc<R: Rng + ?Sized>(rng: &mut R) -> BoundaryCondition<f64> {
    let base = random_canonical(rng);
    let t = random_twist(rng);
    BoundaryCondition::from_trusted(linalg::left_mul(&t, &base.matrix()))
}

pub fn random_canonical<R: Rng + ?Sized>(rng: &mut R) -> CanonicalForm<f64> {
    let pi = std::f64::consts::PI;
    if rng.gen_bool(0.5) {
        let alpha = rng.gen_range(0.0..pi);
        let beta = pi - rng.gen_range(0.0..pi);
        CanonicalForm::Separated { alpha, beta }
    } else {
        let gamma = rng.gen_range(0.0..pi);
        CanonicalForm::Coupled { gamma, k: random_unimodular(rng) }
    }
}

/// K = [[a, b], [c, (1 + bc)/a]] with |a| bounded away from zero.
pub fn random_unimodular<R: Rng + ?Sized>(rng: &mut R) -> [[f64; 2]; 2] {
    let mag = rng.gen_range(0.5..2.0);
    let a = if rng.gen_bool(0.5) { mag } else { -mag };
    let b = rng.gen_range(-2.0..2.0);
    let c = rng.gen_range(-2.0..2.0);
    [[a, b], [c, (1.0 + b * c) / a]]
}

/// Complex 2x2 with entries in [-2,2]+i[-2,2] and |det| >= 0.3.
pub fn random_twist<R: Rng + ?Sized>(rng: &mut R) -> Mat2<f64> {
    loop {
        let mut t = [[czero::<f64>(); 2]; 2];
        for row in t.iter_mut() {
            for z in row.iter_mut() {
                *z = cx(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            }
        }
        if linalg::det2(&t).norm() >= 0.3 {
            return t;
        }
    }
}

/// Real twist with |det| >= 0.3.
pub fn random_real_twist<R: Rng + ?Sized>(rng: &mut R) -> Mat2<f64> {
    loop {
        let mut t = [[czero::<f64>(); 2]; 2];
        for row in t.iter_mut() {
            for z in row.iter_mut() {
                *z = real(rng.gen_range(-2.0..2.0));
            }
        }
        if linalg::det2(&t).norm() >= 0.3 {
            return t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_model::real_matrix;
    use std::f64::consts::PI;

    fn bc(rows: [[f64; 4]; 2]) -> BoundaryCondition<f64> {
        BoundaryCondition::new(real_matrix(rows)).unwrap()
    }

    #[test]
    fn identity_coupled_in_o14() {
        let c = normalize_to_chart(&bc([[1., 0., -1., 0.], [0., 1., 0., -1.]]), Chart::O14).unwrap();
        assert!(c.first().abs() < 1e-15);
        assert!((c.z() - real(-1.0)).norm() < 1e-15);
        assert!(c.second().abs() < 1e-15);
    }

    #[test]
    fn dirichlet_not_in_o14_but_in_o13() {
        let d = bc([[1., 0., 0., 0.], [0., 0., -1., 0.]]);
        assert_eq!(normalize_to_chart(&d, Chart::O14), Err(ManifoldError::NotInChart(Chart::O14)));
        let c = normalize_to_chart(&d, Chart::O13).unwrap();
        assert_eq!(c.coords, [0.0, 0.0, 0.0, 0.0]);
        assert!(covering_charts(&d).contains(&Chart::O13));
    }

    #[test]
    fn separated_on_xi_line_in_o14() {
        let f0 = 1.0;
        let beta0: f64 = 1.1;
        let s = bc([[1., 1. / f0, 0., 0.], [0., 0., -1. / beta0.tan(), 1.]]);
        let c = normalize_to_chart(&s, Chart::O14).unwrap();
        assert!((c.first() - 1.0 / f0).abs() < 1e-15);
        assert!(c.z().norm() < 1e-15);
        assert!((c.second() + 1.0 / beta0.tan()).abs() < 1e-15);
    }

    #[test]
    fn separated_matrix_examples() {
        let m = separated_matrix(0.0, PI).unwrap();
        let expect = real_matrix::<f64>([[1., 0., 0., 0.], [0., 0., -1., 0.]]);
        assert!(linalg::row_space_distance(m.matrix(), &expect) < 1e-15);
        let m = separated_matrix(PI / 2.0, PI).unwrap();
        let expect = real_matrix::<f64>([[0., -1., 0., 0.], [0., 0., -1., 0.]]);
        assert!(linalg::row_space_distance(m.matrix(), &expect) < 1e-15);
        let h = 0.5f64.sqrt();
        let m = separated_matrix(3.0 * PI / 4.0, PI / 2.0).unwrap();
        let expect = real_matrix::<f64>([[-h, -h, 0., 0.], [0., 0., 0., -1.]]);
        for i in 0..2 {
            for k in 0..4 {
                assert!((m.matrix()[i][k] - expect[i][k]).norm() < 1e-15);
            }
        }
        assert!(separated_matrix(PI, 1.0).is_err());
        assert!(separated_matrix(0.0, 0.0).is_err());
    }

    #[test]
    fn canonical_examples() {
        match canonical_form(&bc([[1., 0., 0., 0.], [0., 0., -1., 0.]])) {
            CanonicalForm::Separated { alpha, beta } => {
                assert!(alpha.abs() < 1e-15);
                assert!((beta - PI).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        match canonical_form(&bc([[1., 0., -1., 0.], [0., 1., 0., -1.]])) {
            CanonicalForm::Coupled { gamma, k } => {
                assert!(gamma.abs() < 1e-15);
                assert_eq!(k, [[1.0, 0.0], [0.0, 1.0]]);
            }
            other => panic!("{other:?}"),
        }
        let c = coupled_matrix(PI / 3.0, [[2.0, 1.0], [1.0, 1.0]]).unwrap();
        match canonical_form(&c) {
            CanonicalForm::Coupled { gamma, k } => {
                assert!((gamma - PI / 3.0).abs() < 1e-12);
                assert!((k[0][0] - 2.0).abs() < 1e-12);
                assert!((k[0][1] - 1.0).abs() < 1e-12);
                assert!((k[1][0] - 1.0).abs() < 1e-12);
                assert!((k[1][1] - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn example_boundary_condition_is_separated_with_right_angle() {
        let a = 0.4f64;
        let m = bc([[a.cos(), -a.sin(), 0., 0.], [0., 0., 0., -1.]]);
        match canonical_form(&m) {
            CanonicalForm::Separated { alpha, beta } => {
                assert!((alpha - a).abs() < 1e-14);
                assert!((beta - PI / 2.0).abs() < 1e-14);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn coupled_rejects_non_unimodular() {
        assert!(matches!(coupled_matrix(0.0, [[2.0, 0.0], [0.0, 1.0]]), Err(ManifoldError::NotUnimodular(_))));
    }
}
