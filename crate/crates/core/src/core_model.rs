//! Equations, boundary conditions and their pairing.

use crate::linalg::{self, Mat2, Mat24};
use crate::scalar::{czero, Cx, Scalar};
use crate::tolerances::Tolerances;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("f_{0} is zero")]
    ZeroF(usize),
    #[error("w_{0} is not positive")]
    NonPositiveW(usize),
    #[error("inconsistent lengths: f has {f}, q has {q}, w has {w} (need N+1, N, N with N >= 2)")]
    BadLength { f: usize, q: usize, w: usize },
    #[error("coefficient {name}_{index} is not finite")]
    NonFinite { name: &'static str, index: usize },
    #[error("boundary matrix has rank below 2")]
    RankDeficient,
    #[error("boundary condition is not self-adjoint (residual {0:e})")]
    NotSelfAdjoint(f64),
}

/// Coefficients of the difference equation. `f` is indexed 0..=N, `q` and
/// `w` are stored 0-based but carry the lattice indices 1..=N.
#[derive(Clone, Debug, PartialEq)]
pub struct Equation<T> {
    f: Vec<T>,
    q: Vec<T>,
    w: Vec<T>,
}

impl<T: Scalar> Equation<T> {
    pub fn new(f: Vec<T>, q: Vec<T>, w: Vec<T>) -> Result<Self, ModelError> {
        let n = q.len();
        if n < 2 || f.len() != n + 1 || w.len() != n {
            return Err(ModelError::BadLength { f: f.len(), q: q.len(), w: w.len() });
        }
        for (i, v) in f.iter().enumerate() {
            if !v.is_finite() {
                return Err(ModelError::NonFinite { name: "f", index: i });
            }
            if *v == T::zero() {
                return Err(ModelError::ZeroF(i));
            }
        }
        for (i, v) in q.iter().enumerate() {
            if !v.is_finite() {
                return Err(ModelError::NonFinite { name: "q", index: i + 1 });
            }
        }
        for (i, v) in w.iter().enumerate() {
            if !v.is_finite() {
                return Err(ModelError::NonFinite { name: "w", index: i + 1 });
            }
            if *v <= T::zero() {
                return Err(ModelError::NonPositiveW(i + 1));
            }
        }
        Ok(Equation { f, q, w })
    }

    /// Lattice length N.
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn f(&self) -> &[T] {
        &self.f
    }

    /// q_1..q_N
    pub fn q(&self) -> &[T] {
        &self.q
    }

    /// w_1..w_N
    pub fn w(&self) -> &[T] {
        &self.w
    }

    pub fn f_at(&self, n: usize) -> T {
        self.f[n]
    }

    /// q_n for n in 1..=N
    pub fn q_at(&self, n: usize) -> T {
        self.q[n - 1]
    }

    /// w_n for n in 1..=N
    pub fn w_at(&self, n: usize) -> T {
        self.w[n - 1]
    }

    /// The coordinate 1/f_j.
    pub fn inv_f(&self, j: usize) -> T {
        T::one() / self.f[j]
    }

    pub fn f0(&self) -> T {
        self.f[0]
    }

    /// Sign of each f_n; identifies the connected component of the equation space.
    pub fn sign_pattern(&self) -> Vec<i8> {
        self.f.iter().map(|v| if *v > T::zero() { 1 } else { -1 }).collect()
    }

    pub fn with_f(&self, j: usize, value: T) -> Result<Self, ModelError> {
        let mut f = self.f.clone();
        f[j] = value;
        Equation::new(f, self.q.clone(), self.w.clone())
    }

    /// n in 1..=N
    pub fn with_q(&self, n: usize, value: T) -> Result<Self, ModelError> {
        let mut q = self.q.clone();
        q[n - 1] = value;
        Equation::new(self.f.clone(), q, self.w.clone())
    }

    /// n in 1..=N
    pub fn with_w(&self, n: usize, value: T) -> Result<Self, ModelError> {
        let mut w = self.w.clone();
        w[n - 1] = value;
        Equation::new(self.f.clone(), self.q.clone(), w)
    }

    pub fn to_f64(&self) -> Equation<f64> {
        Equation {
            f: self.f.iter().map(|v| v.to_f64_lossy()).collect(),
            q: self.q.iter().map(|v| v.to_f64_lossy()).collect(),
            w: self.w.iter().map(|v| v.to_f64_lossy()).collect(),
        }
    }
}

pub fn validate_equation<T: Scalar>(f: &[T], q: &[T], w: &[T]) -> Result<Equation<T>, ModelError> {
    Equation::new(f.to_vec(), q.to_vec(), w.to_vec())
}

/// A self-adjoint boundary condition, kept as the representative `[A|B]`
/// it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCondition<T> {
    m: Mat24<T>,
}

fn j_form<T: Scalar>(rows: &Mat2<T>) -> Mat2<T> {
    // X J X^* with J = [[0,1],[-1,0]]
    let mut out = [[czero::<T>(); 2]; 2];
    for i in 0..2 {
        for k in 0..2 {
            out[i][k] = rows[i][0] * rows[k][1].conj() - rows[i][1] * rows[k][0].conj();
        }
    }
    out
}

impl<T: Scalar> BoundaryCondition<T> {
    pub fn new(m: Mat24<T>) -> Result<Self, ModelError> {
        Self::new_with(m, &Tolerances::default())
    }

    pub fn new_with(m: Mat24<T>, tol: &Tolerances) -> Result<Self, ModelError> {
        for row in &m {
            for z in row {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(ModelError::RankDeficient);
                }
            }
        }
        let (big, small) = linalg::singular_values(&m);
        if big == T::zero() || small <= T::lit(tol.rank) * big {
            return Err(ModelError::RankDeficient);
        }
        let residual = self_adjoint_residual(&m);
        let norm2 = linalg::frobenius(&m).powi(2);
        if residual > T::lit(tol.self_adjoint) * norm2 {
            return Err(ModelError::NotSelfAdjoint((residual / norm2).to_f64_lossy()));
        }
        Ok(BoundaryCondition { m })
    }

    /// Builds without validation. Callers guarantee the invariants.
    pub(crate) fn from_trusted(m: Mat24<T>) -> Self {
        BoundaryCondition { m }
    }

    pub fn matrix(&self) -> &Mat24<T> {
        &self.m
    }

    /// a_{ij} with 1-based indices as written in the boundary condition.
    pub fn a(&self, i: usize, j: usize) -> Cx<T> {
        self.m[i - 1][j - 1]
    }

    /// b_{ij} with 1-based indices.
    pub fn b(&self, i: usize, j: usize) -> Cx<T> {
        self.m[i - 1][j + 1]
    }

    pub fn a_block(&self) -> Mat2<T> {
        [[self.m[0][0], self.m[0][1]], [self.m[1][0], self.m[1][1]]]
    }

    pub fn b_block(&self) -> Mat2<T> {
        [[self.m[0][2], self.m[0][3]], [self.m[1][2], self.m[1][3]]]
    }

    pub fn det_a(&self) -> Cx<T> {
        linalg::det2(&self.a_block())
    }

    pub fn det_b(&self) -> Cx<T> {
        linalg::det2(&self.b_block())
    }

    pub fn norm(&self) -> T {
        linalg::frobenius(&self.m)
    }

    /// Another representative `T [A|B]` of the same condition.
    pub fn twisted(&self, t: &Mat2<T>) -> Result<Self, ModelError> {
        BoundaryCondition::new(linalg::left_mul(t, &self.m))
    }

    /// Sine of the largest principal angle between the two row spans.
    pub fn distance_to(&self, other: &BoundaryCondition<T>) -> T {
        linalg::row_space_distance(&self.m, &other.m)
    }

    pub fn same_condition(&self, other: &BoundaryCondition<T>, tol: T) -> bool {
        self.distance_to(other) <= tol
    }

    pub fn to_f64(&self) -> BoundaryCondition<f64> {
        let mut m = [[czero::<f64>(); 4]; 2];
        for i in 0..2 {
            for k in 0..4 {
                m[i][k] = Cx::new(self.m[i][k].re.to_f64_lossy(), self.m[i][k].im.to_f64_lossy());
            }
        }
        BoundaryCondition { m }
    }
}

/// Frobenius norm of `A J A* - B J B*`.
pub fn self_adjoint_residual<T: Scalar>(m: &Mat24<T>) -> T {
    let a = [[m[0][0], m[0][1]], [m[1][0], m[1][1]]];
    let b = [[m[0][2], m[0][3]], [m[1][2], m[1][3]]];
    let ja = j_form(&a);
    let jb = j_form(&b);
    let mut s = T::zero();
    for i in 0..2 {
        for k in 0..2 {
            s = s + (ja[i][k] - jb[i][k]).norm_sqr();
        }
    }
    s.sqrt()
}

pub fn validate_bc<T: Scalar>(m: Mat24<T>) -> Result<BoundaryCondition<T>, ModelError> {
    BoundaryCondition::new(m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Problem<T> {
    pub equation: Equation<T>,
    pub bc: BoundaryCondition<T>,
}

impl<T: Scalar> Problem<T> {
    pub fn new(equation: Equation<T>, bc: BoundaryCondition<T>) -> Self {
        Problem { equation, bc }
    }

    pub fn len(&self) -> usize {
        self.equation.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Builds a 2x4 matrix from real rows; handy for literal fixtures.
pub fn real_matrix<T: Scalar>(rows: [[f64; 4]; 2]) -> Mat24<T> {
    let mut m = [[czero::<T>(); 4]; 2];
    for i in 0..2 {
        for k in 0..4 {
            m[i][k] = Cx::new(T::lit(rows[i][k]), T::zero());
        }
    }
    m
}
