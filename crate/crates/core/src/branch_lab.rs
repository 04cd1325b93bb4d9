//! Eigenvalue curves along one-parameter families: tracing, detection of
//! count changes, one-sided asymptotics and the monotonicity checks.

use crate::bc_manifold::{self, Chart, ChartCoordinates, ManifoldError};
use crate::core_model::{validate_bc, BoundaryCondition, Equation, ModelError, Problem};
use crate::scalar::Cx;
use crate::spectral_engine::{self, boundary_minors, char_poly, spectral_scale, SpectralError};
use crate::tolerances::Tolerances;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BranchError {
    #[error("family cannot be resolved at ν = {nu}: {reason}")]
    UnresolvableFamily { nu: f64, reason: String },
    #[error("grid needs at least 16 points, got {0}")]
    GridTooSmall(usize),
    #[error("family does not vary a single coordinate")]
    FamilyNotAxisAligned,
    #[error("no singular parameter detected near ν = {0}")]
    NoSingularParameter(f64),
    #[error("observed asymptotics differ from the expected pattern\n{0}")]
    PatternMismatch(String),
}

/// Named example problems with closed-form spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Builtin {
    #[serde(rename = "ex1.1")]
    Ex11,
    #[serde(rename = "ex2.1")]
    Ex21,
    #[serde(rename = "ex3.1")]
    Ex31,
}

impl Builtin {
    pub const ALL: [Builtin; 3] = [Builtin::Ex11, Builtin::Ex21, Builtin::Ex31];

    pub fn parse(name: &str) -> Option<Builtin> {
        match name {
            "ex1.1" => Some(Builtin::Ex11),
            "ex2.1" => Some(Builtin::Ex21),
            "ex3.1" => Some(Builtin::Ex31),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Ex11 => "ex1.1",
            Builtin::Ex21 => "ex2.1",
            Builtin::Ex31 => "ex3.1",
        }
    }

    /// Parameter interval and whether its right end is excluded.
    pub fn domain(self) -> (f64, f64, bool) {
        match self {
            Builtin::Ex11 => (0.0, PI, true),
            Builtin::Ex21 => (0.0, 2.0, false),
            Builtin::Ex31 => (0.1, 2.0, false),
        }
    }

    /// The parameter where the count drops.
    pub fn singular_parameter(self) -> f64 {
        match self {
            Builtin::Ex11 => 0.75 * PI,
            Builtin::Ex21 | Builtin::Ex31 => 1.0,
        }
    }

    pub fn family(self) -> Family {
        let (a, b, right_open) = self.domain();
        Family { kind: FamilyKind::Builtin(self), domain: (a, b), right_open }
    }

    pub fn problem(self, nu: f64) -> Result<Problem<f64>, ModelError> {
        let two_point = || validate_bc(crate::core_model::real_matrix([[1., 1., 0., 0.], [0., 0., -1., 1.]]));
        match self {
            Builtin::Ex11 => {
                let eq = Equation::new(vec![1.0; 3], vec![0.0; 2], vec![1.0; 2])?;
                let (c, s) = (nu.cos(), nu.sin());
                let bc = validate_bc(crate::core_model::real_matrix([[c, -s, 0., 0.], [0., 0., 0., -1.]]))?;
                Ok(Problem::new(eq, bc))
            }
            Builtin::Ex21 => {
                let (f0, f1) = if nu < 1.0 { (1.0 / (2.0 - nu), 1.0) } else { (1.0 / nu, 1.0 / nu) };
                let eq = Equation::new(vec![f0, f1, 1.0], vec![0.0; 2], vec![1.0; 2])?;
                Ok(Problem::new(eq, two_point()?))
            }
            Builtin::Ex31 => {
                let eq = Equation::new(vec![1.0 / nu, 1.0, 1.0], vec![0.0; 2], vec![1.0; 2])?;
                Ok(Problem::new(eq, two_point()?))
            }
        }
    }

    /// Eigenvalues in ascending order from the closed-form expressions.
    pub fn closed_form(self, nu: f64) -> Vec<f64> {
        match self {
            Builtin::Ex11 => {
                let (c, s) = (nu.cos(), nu.sin());
                if (nu - 0.75 * PI).abs() < 1e-15 {
                    return vec![1.0];
                }
                let d = (c * c + 4.0 * (2.0 * nu).sin() + 4.0).sqrt();
                let den = 2.0 * (c + s);
                let minus = (3.0 * c + 2.0 * s - d) / den;
                let plus = (3.0 * c + 2.0 * s + d) / den;
                if nu < 0.75 * PI {
                    vec![minus, plus]
                } else {
                    vec![plus, minus]
                }
            }
            Builtin::Ex21 => {
                if nu < 1.0 {
                    let d = (5.0 * nu * nu - 12.0 * nu + 8.0).sqrt();
                    let den = 2.0 * (1.0 - nu);
                    vec![(2.0 - nu - d) / den, (2.0 - nu + d) / den]
                } else if nu == 1.0 {
                    vec![0.0]
                } else {
                    let b = -nu * nu + 4.0 * nu - 2.0;
                    let lead = nu * nu - nu;
                    let d = ((nu * nu - 4.0 * nu + 2.0).powi(2) - 4.0 * lead * (2.0 - 2.0 * nu)).sqrt();
                    vec![(b - d) / (2.0 * lead), (b + d) / (2.0 * lead)]
                }
            }
            Builtin::Ex31 => {
                let d = (5.0 * nu * nu - 8.0 * nu + 4.0).sqrt();
                let den = 2.0 * (nu - 1.0);
                if nu < 1.0 {
                    vec![(nu + d) / den, (nu - d) / den]
                } else if nu == 1.0 {
                    vec![0.0]
                } else {
                    vec![(nu - d) / den, (nu + d) / den]
                }
            }
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A single real coordinate of the problem space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Coordinate {
    /// `1/f_j`, j in 0..=N
    InvF(usize),
    /// `f_N` itself, which no eigenvalue depends on
    FN,
    /// `q_n`, n in 1..=N
    Q(usize),
    /// `w_n`, n in 1..=N
    W(usize),
    /// first real parameter of a chart (a12, a12, a11, a11)
    ChartFirst(Chart),
    /// second real parameter of a chart (b22, b21, b22, b21)
    ChartSecond(Chart),
    Alpha,
    Beta,
}

/// How eigenvalues must move as a coordinate increases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    NonIncreasing,
    NonDecreasing,
    StrictlyDecreasing,
    StrictlyIncreasing,
    /// positive eigenvalues non-increasing, negative ones non-decreasing
    WeightSplit,
    Constant,
}

impl Coordinate {
    pub fn direction(self, n: usize) -> Direction {
        match self {
            Coordinate::InvF(j) if j < n => Direction::NonIncreasing,
            Coordinate::InvF(_) | Coordinate::FN => Direction::Constant,
            Coordinate::Q(_) | Coordinate::ChartFirst(_) | Coordinate::ChartSecond(_) => Direction::NonDecreasing,
            Coordinate::W(_) => Direction::WeightSplit,
            Coordinate::Alpha => Direction::StrictlyDecreasing,
            Coordinate::Beta => Direction::StrictlyIncreasing,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    /// `1/f`, `q`, `w` interpolated linearly between two equations
    EquationAffine {
        from: Equation<f64>,
        to: Equation<f64>,
        bc: BoundaryCondition<f64>,
    },
    /// straight line between two points of one chart
    ChartAffine {
        equation: Equation<f64>,
        from: ChartCoordinates<f64>,
        to: ChartCoordinates<f64>,
    },
    /// both of the above at once
    ProductAffine {
        from: (Equation<f64>, ChartCoordinates<f64>),
        to: (Equation<f64>, ChartCoordinates<f64>),
    },
    /// `S_{ν,β}` from the raw formula, so ν may leave [0, π)
    SeparatedAlpha {
        equation: Equation<f64>,
        beta: f64,
    },
    /// `S_{α,ν}` from the raw formula, so ν may leave (0, π]
    SeparatedBeta {
        equation: Equation<f64>,
        alpha: f64,
    },
    /// `[e^{iγ}K | -I]` with k11 = ν and k21 fixed by det K = 1
    CoupledK11 {
        equation: Equation<f64>,
        gamma: f64,
        k12: f64,
        k22: f64,
    },
    /// `[e^{iν}K | -I]`
    CoupledGamma {
        equation: Equation<f64>,
        k: [[f64; 2]; 2],
    },
    /// one coordinate of `base` replaced by ν
    Axis {
        base: Problem<f64>,
        coordinate: Coordinate,
    },
    Builtin(Builtin),
}

/// One-parameter family ν ↦ problem over a real interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub kind: FamilyKind,
    pub domain: (f64, f64),
    pub right_open: bool,
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    (1.0 - t) * a + t * b
}

fn interpolate_equation(from: &Equation<f64>, to: &Equation<f64>, t: f64) -> Result<Equation<f64>, ModelError> {
    if from.len() != to.len() {
        return Err(ModelError::BadLength { f: to.f().len(), q: to.q().len(), w: to.w().len() });
    }
    let f = (0..=from.len()).map(|j| 1.0 / lerp(from.inv_f(j), to.inv_f(j), t)).collect();
    let q = (1..=from.len()).map(|n| lerp(from.q_at(n), to.q_at(n), t)).collect();
    let w = (1..=from.len()).map(|n| lerp(from.w_at(n), to.w_at(n), t)).collect();
    Equation::new(f, q, w)
}

fn interpolate_chart(
    from: &ChartCoordinates<f64>,
    to: &ChartCoordinates<f64>,
    t: f64,
) -> Result<ChartCoordinates<f64>, String> {
    if from.chart != to.chart {
        return Err(format!("chart endpoints differ: {} and {}", from.chart, to.chart));
    }
    let mut c = *from;
    for (slot, (a, b)) in c.coords.iter_mut().zip(from.coords.iter().zip(to.coords.iter())) {
        *slot = lerp(*a, *b, t);
    }
    Ok(c)
}

fn set_coordinate(base: &Problem<f64>, coordinate: Coordinate, nu: f64) -> Result<Problem<f64>, String> {
    let eq = &base.equation;
    let n = eq.len();
    let err = |e: ModelError| e.to_string();
    let mf = |e: ManifoldError| e.to_string();
    match coordinate {
        Coordinate::InvF(j) if j <= n => Ok(Problem::new(eq.with_f(j, 1.0 / nu).map_err(err)?, base.bc.clone())),
        Coordinate::FN => Ok(Problem::new(eq.with_f(n, nu).map_err(err)?, base.bc.clone())),
        Coordinate::Q(k) if (1..=n).contains(&k) => Ok(Problem::new(eq.with_q(k, nu).map_err(err)?, base.bc.clone())),
        Coordinate::W(k) if (1..=n).contains(&k) => Ok(Problem::new(eq.with_w(k, nu).map_err(err)?, base.bc.clone())),
        Coordinate::ChartFirst(c) | Coordinate::ChartSecond(c) => {
            let mut coords = bc_manifold::normalize_to_chart(&base.bc, c).map_err(mf)?;
            let slot = if matches!(coordinate, Coordinate::ChartFirst(_)) { 0 } else { 3 };
            coords.coords[slot] = nu;
            Ok(Problem::new(eq.clone(), coords.to_bc()))
        }
        Coordinate::Alpha | Coordinate::Beta => match bc_manifold::canonical_form(&base.bc) {
            bc_manifold::CanonicalForm::Separated { alpha, beta } => {
                let (a, b) = if coordinate == Coordinate::Alpha { (nu, beta) } else { (alpha, nu) };
                Ok(Problem::new(eq.clone(), bc_manifold::separated_matrix_unchecked(a, b)))
            }
            _ => Err("angle coordinate needs a separated condition".into()),
        },
        _ => Err(format!("coordinate {coordinate:?} is out of range for N = {n}")),
    }
}

impl Family {
    pub fn new(kind: FamilyKind, domain: (f64, f64)) -> Self {
        Family { kind, domain, right_open: false }
    }

    pub fn width(&self) -> f64 {
        (self.domain.1 - self.domain.0).abs()
    }

    /// The coordinate varied by an axis-aligned family.
    pub fn coordinate(&self) -> Option<Coordinate> {
        match &self.kind {
            FamilyKind::Axis { coordinate, .. } => Some(*coordinate),
            FamilyKind::SeparatedAlpha { .. } => Some(Coordinate::Alpha),
            FamilyKind::SeparatedBeta { .. } => Some(Coordinate::Beta),
            _ => None,
        }
    }

    pub fn resolve(&self, nu: f64) -> Result<Problem<f64>, BranchError> {
        let fail = |reason: String| BranchError::UnresolvableFamily { nu, reason };
        let (a, b) = self.domain;
        let t = if b != a { (nu - a) / (b - a) } else { 0.0 };
        match &self.kind {
            FamilyKind::EquationAffine { from, to, bc } => {
                let eq = interpolate_equation(from, to, t).map_err(|e| fail(e.to_string()))?;
                Ok(Problem::new(eq, bc.clone()))
            }
            FamilyKind::ChartAffine { equation, from, to } => {
                let c = interpolate_chart(from, to, t).map_err(fail)?;
                Ok(Problem::new(equation.clone(), c.to_bc()))
            }
            FamilyKind::ProductAffine { from, to } => {
                let eq = interpolate_equation(&from.0, &to.0, t).map_err(|e| fail(e.to_string()))?;
                let c = interpolate_chart(&from.1, &to.1, t).map_err(fail)?;
                Ok(Problem::new(eq, c.to_bc()))
            }
            FamilyKind::SeparatedAlpha { equation, beta } => {
                Ok(Problem::new(equation.clone(), bc_manifold::separated_matrix_unchecked(nu, *beta)))
            }
            FamilyKind::SeparatedBeta { equation, alpha } => {
                Ok(Problem::new(equation.clone(), bc_manifold::separated_matrix_unchecked(*alpha, nu)))
            }
            FamilyKind::CoupledK11 { equation, gamma, k12, k22 } => {
                let k = [[nu, *k12], [(nu * k22 - 1.0) / k12, *k22]];
                let bc = bc_manifold::coupled_matrix(*gamma, k).map_err(|e| fail(e.to_string()))?;
                Ok(Problem::new(equation.clone(), bc))
            }
            FamilyKind::CoupledGamma { equation, k } => {
                let bc = bc_manifold::coupled_matrix(nu, *k).map_err(|e| fail(e.to_string()))?;
                Ok(Problem::new(equation.clone(), bc))
            }
            FamilyKind::Axis { base, coordinate } => set_coordinate(base, *coordinate, nu).map_err(fail),
            FamilyKind::Builtin(b) => b.problem(nu).map_err(|e| fail(e.to_string())),
        }
    }

    /// Evenly spaced grid; a right-open domain leaves out its right end.
    pub fn grid(&self, size: usize) -> Vec<f64> {
        let (a, b) = self.domain;
        let steps = if self.right_open { size } else { size - 1 };
        (0..size).map(|i| a + (b - a) * (i as f64 / steps as f64)).collect()
    }
}

/// Status of one grid evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointStatus {
    Ok,
    NearSingular,
    DegreeMismatch,
    NonReal,
}

/// Which side of ν* the refinement approaches from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    Left,
    Right,
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Approach::Left => "left",
            Approach::Right => "right",
        })
    }
}

/// What one eigenvalue index does as ν → ν* from one side.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IndexBehaviour {
    Diverges { index: usize, sign: i8, last_value: f64 },
    Converges { index: usize, target: usize, shift: usize, extrapolated: f64, limit: f64 },
    Unclassified { index: usize },
}

impl IndexBehaviour {
    pub fn index(&self) -> usize {
        match self {
            IndexBehaviour::Diverges { index, .. }
            | IndexBehaviour::Converges { index, .. }
            | IndexBehaviour::Unclassified { index } => *index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideReport {
    pub side: Approach,
    /// count on this side
    pub count: usize,
    /// refinement points that produced a spectrum with the side count
    pub points_used: usize,
    pub behaviours: Vec<IndexBehaviour>,
    /// diverging indices equal the count drop, sit at the ends of the
    /// index range, and the survivors shift by the number lost below
    pub bookkeeping_ok: bool,
}

impl SideReport {
    pub fn diverging(&self, sign: i8) -> Vec<usize> {
        self.behaviours
            .iter()
            .filter_map(|b| match b {
                IndexBehaviour::Diverges { index, sign: s, .. } if *s == sign => Some(*index),
                _ => None,
            })
            .collect()
    }

    pub fn shifts(&self) -> Vec<usize> {
        self.behaviours
            .iter()
            .filter_map(|b| match b {
                IndexBehaviour::Converges { shift, .. } => Some(*shift),
                _ => None,
            })
            .collect()
    }

    pub fn unclassified(&self) -> Vec<usize> {
        self.behaviours
            .iter()
            .filter_map(|b| match b {
                IndexBehaviour::Unclassified { index } => Some(*index),
                _ => None,
            })
            .collect()
    }
}

/// A classified singular parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpEvent {
    pub nu: f64,
    /// eigenvalues of the limit problem, multiplicity repeated
    pub limit_values: Vec<f64>,
    pub limit_count: usize,
    pub left: Option<SideReport>,
    pub right: Option<SideReport>,
}

impl JumpEvent {
    pub fn sides(&self) -> impl Iterator<Item = &SideReport> {
        self.left.iter().chain(self.right.iter())
    }

    pub fn side(&self, side: Approach) -> Option<&SideReport> {
        match side {
            Approach::Left => self.left.as_ref(),
            Approach::Right => self.right.as_ref(),
        }
    }

    /// True when some side has more eigenvalues than the limit problem.
    pub fn is_count_drop(&self) -> bool {
        self.sides().any(|s| s.count > self.limit_count)
    }

    pub fn has_unclassified(&self) -> bool {
        self.sides().any(|s| !s.unclassified().is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchTrace {
    pub grid: Vec<f64>,
    /// `values[n][i]` is λ_n at `grid[i]`, `None` where n ≥ count
    pub values: Vec<Vec<Option<f64>>>,
    /// `None` where the spectrum could not be computed
    pub counts: Vec<Option<usize>>,
    pub status: Vec<PointStatus>,
    /// refined singular parameters
    pub candidates: Vec<f64>,
    pub events: Vec<JumpEvent>,
}

impl BranchTrace {
    pub fn max_count(&self) -> usize {
        self.values.len()
    }

    /// Values at one grid point, ascending.
    pub fn values_at(&self, i: usize) -> Vec<f64> {
        self.values.iter().filter_map(|row| row[i]).collect()
    }
}

/// Leading coefficient of Γ relative to the whole of Γ(R x), and a unit
/// phase that makes it real for self-adjoint conditions.
fn scaled_theta(p: &Problem<f64>) -> (Cx<f64>, Cx<f64>) {
    let g = char_poly(p).rescale_variable(spectral_scale(&p.equation));
    let big = g.max_abs();
    let lead = g.coeff(p.len());
    let ratio = if big > 0.0 { lead / big } else { Cx::new(0.0, 0.0) };
    let (mu1, mu2) = boundary_minors(&p.bc);
    let reference = if mu1.norm() >= mu2.norm() { mu1 } else { mu2 };
    let unit = if reference.norm() > 0.0 { reference / reference.norm() } else { Cx::new(1.0, 0.0) };
    (ratio, unit)
}

/// Signed real value of the scaled leading coefficient, with the phase
/// aligned to `reference` so the sign is continuous along a family.
fn signed_theta(p: &Problem<f64>, reference: Cx<f64>) -> (f64, Cx<f64>) {
    let (ratio, mut unit) = scaled_theta(p);
    if (unit * reference.conj()).re < 0.0 {
        unit = -unit;
    }
    ((ratio * unit.conj()).re, unit)
}

struct GridSample {
    signed: f64,
    unit: Cx<f64>,
    values: Option<Vec<f64>>,
    status: PointStatus,
}

fn sample(family: &Family, nu: f64, reference: Cx<f64>, tol: &Tolerances) -> Result<GridSample, BranchError> {
    let p = family.resolve(nu)?;
    let (signed, unit) = signed_theta(&p, reference);
    let (values, status) = match spectral_engine::eigenvalues_with(&p, tol) {
        Ok(s) => {
            let status = if s.near_singular { PointStatus::NearSingular } else { PointStatus::Ok };
            (Some(s.values()), status)
        }
        Err(SpectralError::DegreeMismatch { .. }) => (None, PointStatus::DegreeMismatch),
        Err(SpectralError::NonRealRoot { .. }) => (None, PointStatus::NonReal),
    };
    Ok(GridSample { signed, unit, values, status })
}

fn signed_at(family: &Family, nu: f64, reference: Cx<f64>) -> Result<f64, BranchError> {
    Ok(signed_theta(&family.resolve(nu)?, reference).0)
}

/// Bisection on the sign of the scaled leading coefficient, down to the
/// last representable midpoint.
fn bisect_sign(family: &Family, mut a: f64, mut b: f64, mut fa: f64, reference: Cx<f64>) -> Result<f64, BranchError> {
    loop {
        let mid = 0.5 * (a + b);
        if mid <= a.min(b) || mid >= a.max(b) {
            break;
        }
        let fm = signed_at(family, mid, reference)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    let fb = signed_at(family, b, reference)?.abs();
    Ok(if fa.abs() <= fb { a } else { b })
}

/// Golden-section minimum of |scaled leading coefficient| on [a, b].
fn minimise_theta(family: &Family, mut a: f64, mut b: f64, reference: Cx<f64>) -> Result<(f64, f64), BranchError> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let f = |x: f64| signed_at(family, x, reference).map(f64::abs);
    let (fa0, fb0) = (f(a)?, f(b)?);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..200 {
        if (b - a).abs() <= 4.0 * f64::EPSILON * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    // a minimum sitting on an end of the bracket
    for (x, fx) in [(a, f(a)?), (b, f(b)?)] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    let _ = (fa0, fb0);
    Ok(best)
}

pub fn trace(family: &Family, grid_size: usize) -> Result<BranchTrace, BranchError> {
    trace_with(family, grid_size, &Tolerances::default())
}

/// Evaluates the family on a grid, refines every place where the leading
/// coefficient of Γ vanishes, and classifies the jump at each one.
pub fn trace_with(family: &Family, grid_size: usize, tol: &Tolerances) -> Result<BranchTrace, BranchError> {
    if grid_size < 16 {
        return Err(BranchError::GridTooSmall(grid_size));
    }
    let grid = family.grid(grid_size);
    let mut samples: Vec<GridSample> = Vec::with_capacity(grid.len());
    let mut reference = Cx::new(1.0, 0.0);
    for &nu in &grid {
        let s = sample(family, nu, reference, tol)?;
        reference = s.unit;
        samples.push(s);
    }

    let mut candidates = Vec::new();
    let last = grid.len() - 1;
    for i in 0..=last {
        let si = samples[i].signed;
        if si == 0.0 {
            candidates.push(grid[i]);
            continue;
        }
        if i < last {
            let sj = samples[i + 1].signed;
            if sj != 0.0 && (si < 0.0) != (sj < 0.0) {
                candidates.push(bisect_sign(family, grid[i], grid[i + 1], si, samples[i].unit)?);
            }
        }
        // vanishing without a sign change shows up as a local minimum of |θ|
        let here = si.abs();
        let left = (i > 0).then(|| samples[i - 1].signed.abs());
        let right = (i < last).then(|| samples[i + 1].signed.abs());
        let not_above = left.is_none_or(|l| here <= l) && right.is_none_or(|r| here <= r);
        let strictly_below = left.is_some_and(|l| here < l) || right.is_some_and(|r| here < r);
        if not_above && strictly_below {
            let a = grid[i.saturating_sub(1)];
            let b = grid[(i + 1).min(last)];
            let (x, fx) = minimise_theta(family, a, b, samples[i].unit)?;
            if fx <= tol.near_singular {
                candidates.push(x);
            }
        }
    }
    // a count change or a flag with no vanishing θ nearby still deserves a look
    for i in 0..=last {
        let flagged = samples[i].status != PointStatus::Ok;
        let changed =
            i < last && samples[i].values.as_ref().map(Vec::len) != samples[i + 1].values.as_ref().map(Vec::len);
        if flagged || changed {
            let a = grid[i.saturating_sub(1)];
            let b = grid[(i + 1).min(last)];
            let near = candidates.iter().any(|c| *c >= a.min(b) && *c <= a.max(b));
            if !near {
                let (x, fx) = minimise_theta(family, a, b, samples[i].unit)?;
                if fx <= tol.near_singular || changed {
                    candidates.push(x);
                }
            }
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite parameters"));
    let merge = 1e-9 * family.width();
    candidates.dedup_by(|b, a| (*b - *a).abs() <= merge);

    let step = if grid.len() > 1 { (grid[1] - grid[0]).abs() } else { family.width() };
    let mut events = Vec::with_capacity(candidates.len());
    for (k, &nu) in candidates.iter().enumerate() {
        let prev = if k > 0 { candidates[k - 1] } else { f64::NEG_INFINITY };
        let next = candidates.get(k + 1).copied().unwrap_or(f64::INFINITY);
        let (a, b) = family.domain;
        let mut left = step.min(nu - a).min(0.5 * (nu - prev));
        let mut right = step.min(b - nu).min(0.5 * (next - nu));
        if family.right_open && right >= b - nu {
            right = 0.5 * (b - nu);
        }
        let tiny = 1e-12 * family.width();
        if left <= tiny {
            left = 0.0;
        }
        if right <= tiny {
            right = 0.0;
        }
        events.push(classify_jump_with(family, nu, left, right, tol)?);
    }

    let counts: Vec<Option<usize>> = samples.iter().map(|s| s.values.as_ref().map(Vec::len)).collect();
    let kmax = counts.iter().flatten().copied().max().unwrap_or(0);
    let mut values = vec![vec![None; grid.len()]; kmax];
    for (i, s) in samples.iter().enumerate() {
        if let Some(v) = &s.values {
            for (n, x) in v.iter().enumerate() {
                values[n][i] = Some(*x);
            }
        }
    }
    Ok(BranchTrace { grid, values, counts, status: samples.iter().map(|s| s.status).collect(), candidates, events })
}

/// Eigenvalues of the problem at ν*, trusting the trimmed degree of Γ and
/// dropping roots beyond the divergence threshold.
pub fn limit_values(family: &Family, nu: f64, tol: &Tolerances) -> Result<Vec<f64>, BranchError> {
    let p = family.resolve(nu)?;
    let s = spectral_engine::eigenvalues_by_degree_with(&p, tol)
        .map_err(|e| BranchError::UnresolvableFamily { nu, reason: e.to_string() })?;
    Ok(s.values().into_iter().filter(|v| v.abs() <= tol.divergence).collect())
}

pub fn classify_jump(family: &Family, nu_star: f64, delta: f64) -> Result<JumpEvent, BranchError> {
    classify_jump_with(family, nu_star, delta, delta, &Tolerances::default())
}

/// Approaches ν* through ν* ± 2^{-j} δ, j = 0..40, on each side with a
/// positive δ, and decides divergence or shifted convergence per index.
pub fn classify_jump_with(
    family: &Family,
    nu_star: f64,
    delta_left: f64,
    delta_right: f64,
    tol: &Tolerances,
) -> Result<JumpEvent, BranchError> {
    let limit = limit_values(family, nu_star, tol)?;
    let mut event = JumpEvent { nu: nu_star, limit_count: limit.len(), limit_values: limit, left: None, right: None };
    if delta_left > 0.0 {
        event.left = approach(family, nu_star, -delta_left, &event.limit_values, tol)?;
    }
    if delta_right > 0.0 {
        event.right = approach(family, nu_star, delta_right, &event.limit_values, tol)?;
    }
    Ok(event)
}

fn approach(
    family: &Family,
    nu_star: f64,
    delta: f64,
    limit: &[f64],
    tol: &Tolerances,
) -> Result<Option<SideReport>, BranchError> {
    let side = if delta < 0.0 { Approach::Left } else { Approach::Right };
    let mut seq: Vec<Vec<f64>> = Vec::new();
    for j in 0..=40 {
        let nu = nu_star + delta * 0.5f64.powi(j);
        if nu == nu_star {
            break;
        }
        let p = family.resolve(nu)?;
        // off the set Γ keeps the degree the rank formula gives, even once
        // its leading coefficient drops under the trim threshold
        let values = match spectral_engine::eigenvalues_with(&p, tol) {
            Ok(s) => s.values(),
            Err(SpectralError::DegreeMismatch { .. }) => match spectral_engine::eigenvalues_untrimmed_with(&p, tol) {
                Ok(s) => s.values(),
                Err(_) => break,
            },
            Err(_) => break,
        };
        if let Some(first) = seq.first() {
            if values.len() != first.len() {
                break;
            }
        }
        seq.push(values);
    }
    let Some(first) = seq.first() else {
        return Ok(None);
    };
    let count = first.len();
    let mut behaviours = Vec::with_capacity(count);
    for n in 0..count {
        let series: Vec<f64> = seq.iter().map(|v| v[n]).collect();
        behaviours.push(classify_index(n, &series, limit, tol));
    }
    let bookkeeping_ok = bookkeeping(&behaviours, count, limit.len());
    Ok(Some(SideReport { side, count, points_used: seq.len(), behaviours, bookkeeping_ok }))
}

fn classify_index(n: usize, series: &[f64], limit: &[f64], tol: &Tolerances) -> IndexBehaviour {
    let last = *series.last().expect("non-empty series");
    if last.abs() > tol.divergence && series.len() >= 8 {
        let tail = &series[series.len() - 8..];
        let same_sign = tail.iter().all(|v| v.signum() == last.signum());
        let growing = tail.windows(2).all(|w| w[1].abs() > w[0].abs());
        if same_sign && growing {
            return IndexBehaviour::Diverges { index: n, sign: last.signum() as i8, last_value: last };
        }
    }
    if series.len() >= 2 {
        let prev = series[series.len() - 2];
        let extrapolated = 2.0 * last - prev;
        let nearest = limit
            .iter()
            .enumerate()
            .filter(|(m, _)| *m <= n)
            .min_by(|a, b| (a.1 - extrapolated).abs().partial_cmp(&(b.1 - extrapolated).abs()).expect("finite"));
        if let Some((m, mu)) = nearest {
            if (extrapolated - mu).abs() <= tol.limit * (1.0 + mu.abs()) {
                return IndexBehaviour::Converges { index: n, target: m, shift: n - m, extrapolated, limit: *mu };
            }
        }
    }
    IndexBehaviour::Unclassified { index: n }
}

fn bookkeeping(behaviours: &[IndexBehaviour], count: usize, limit_count: usize) -> bool {
    let down = behaviours.iter().filter(|b| matches!(b, IndexBehaviour::Diverges { sign: -1, .. })).count();
    let up = behaviours.iter().filter(|b| matches!(b, IndexBehaviour::Diverges { sign: 1, .. })).count();
    if down + up + limit_count != count {
        return false;
    }
    behaviours.iter().all(|b| match b {
        IndexBehaviour::Diverges { index, sign: -1, .. } => *index < down,
        IndexBehaviour::Diverges { index, .. } => *index >= count - up,
        IndexBehaviour::Converges { index, target, .. } => *index >= down && *target == index - down,
        IndexBehaviour::Unclassified { .. } => false,
    })
}

/// A monotonicity violation between two adjacent grid points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub nu: f64,
    pub index: usize,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub coordinate: Coordinate,
    pub direction: Direction,
    /// adjacent grid pairs that were compared
    pub pairs_checked: usize,
    pub violations: Vec<Violation>,
    /// largest change seen, for constant directions
    pub max_change: f64,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_monotonicity(family: &Family, grid_size: usize) -> Result<MonotonicityReport, BranchError> {
    check_monotonicity_with(family, grid_size, &Tolerances::default())
}

/// Checks the expected direction of motion of every λ_n between adjacent
/// grid points with equal count and no singular parameter in between.
pub fn check_monotonicity_with(
    family: &Family,
    grid_size: usize,
    tol: &Tolerances,
) -> Result<MonotonicityReport, BranchError> {
    let coordinate = family.coordinate().ok_or(BranchError::FamilyNotAxisAligned)?;
    let n = family.resolve(family.domain.0)?.len();
    let direction = coordinate.direction(n);
    let tr = trace_with(family, grid_size, tol)?;
    let mut violations = Vec::new();
    let mut pairs_checked = 0;
    let mut max_change = 0.0f64;
    for i in 0..tr.grid.len() - 1 {
        let (x0, x1) = (tr.grid[i], tr.grid[i + 1]);
        if tr.counts[i].is_none() || tr.counts[i] != tr.counts[i + 1] {
            continue;
        }
        if tr.candidates.iter().any(|c| *c >= x0.min(x1) && *c <= x0.max(x1)) {
            continue;
        }
        pairs_checked += 1;
        let (v0, v1) = (tr.values_at(i), tr.values_at(i + 1));
        for (k, (a, b)) in v0.iter().zip(v1.iter()).enumerate() {
            let diff = b - a;
            let slack = tol.monotone_slack * (1.0 + a.abs().max(b.abs()));
            max_change = max_change.max(diff.abs());
            let bad = match direction {
                // strictness cannot be resolved below roundoff: a localized
                // mode may move by less than one ulp between grid points
                Direction::NonIncreasing | Direction::StrictlyDecreasing => diff > slack,
                Direction::NonDecreasing | Direction::StrictlyIncreasing => diff < -slack,
                Direction::WeightSplit => {
                    (*a > 0.0 && *b > 0.0 && diff > slack) || (*a < 0.0 && *b < 0.0 && diff < -slack)
                }
                Direction::Constant => diff.abs() > 1e-12 * (1.0 + a.abs()),
            };
            if bad {
                violations.push(Violation { nu: x0, index: k, before: *a, after: *b });
            }
        }
    }
    Ok(MonotonicityReport { coordinate, direction, pairs_checked, violations, max_change })
}

/// What a theorem predicts on one side of a singular parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedSide {
    pub side: Approach,
    pub to_minus_infinity: Vec<usize>,
    pub to_plus_infinity: Vec<usize>,
    /// converging λ_n tends to λ_{n - shift} of the limit problem
    pub shift: usize,
}

impl ExpectedSide {
    fn new(side: Approach, minus: Vec<usize>, plus: Vec<usize>) -> Self {
        let shift = minus.len();
        ExpectedSide { side, to_minus_infinity: minus, to_plus_infinity: plus, shift }
    }
}

/// A family crossing or approaching a singular set, with the pattern
/// the corresponding theorem predicts.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticFixture {
    pub name: String,
    pub family: Family,
    /// nominal singular parameter; the traced candidate nearest to it is used
    pub nu_star: f64,
    pub expected: Vec<ExpectedSide>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternReport {
    pub name: String,
    pub event: JumpEvent,
    pub rows: Vec<String>,
}

fn random_equation(rng: &mut StdRng, n: usize, f0: f64) -> Equation<f64> {
    let mut f: Vec<f64> = (0..=n).map(|_| rng.gen_range(0.5..2.0)).collect();
    f[0] = f0;
    let q = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let w = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    Equation::new(f, q, w).expect("positive coefficients")
}

/// The fixture catalogue for the asymptotic-pattern theorems, built from
/// seeded random equations with N = 4 and f_0 = 1/2.
pub fn asymptotic_catalog(seed: u64) -> Vec<AsymptoticFixture> {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = 4;
    let top = n - 1;
    let inv_f0 = 2.0;
    let eq = random_equation(&mut rng, n, 1.0 / inv_f0);
    let (l, r) = (Approach::Left, Approach::Right);
    let mut out = Vec::new();
    let two_point = validate_bc(crate::core_model::real_matrix([[1., 1., 0., 0.], [0., 0., -1., 1.]])).expect("valid");

    // equation path through E for the two-point condition, η = 1
    let from = random_equation(&mut rng, n, 2.0);
    let to = random_equation(&mut rng, n, 1.0 / 1.5);
    out.push(AsymptoticFixture {
        name: "equation path across E".into(),
        family: Family::new(FamilyKind::EquationAffine { from, to, bc: two_point.clone() }, (0.0, 1.0)),
        nu_star: 0.5,
        expected: vec![ExpectedSide::new(l, vec![0], vec![]), ExpectedSide::new(r, vec![], vec![top])],
    });

    // chart O14 path across a12 = 1/f0
    let z = Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let b21 = rng.gen_range(-1.0..1.0);
    out.push(AsymptoticFixture {
        name: "O14 path across B14".into(),
        family: Family::new(
            FamilyKind::ChartAffine {
                equation: eq.clone(),
                from: ChartCoordinates::new(Chart::O14, inv_f0 - 0.5, z, b21),
                to: ChartCoordinates::new(Chart::O14, inv_f0 + 0.5, z, b21),
            },
            (0.0, 1.0),
        ),
        nu_star: 0.5,
        expected: vec![ExpectedSide::new(l, vec![], vec![top]), ExpectedSide::new(r, vec![0], vec![])],
    });

    // chart O13 b22 sweeps through the two cone branches, |z|² = 1/2
    let z = Cx::new(0.5, 0.5);
    let mut b13 = |offset: f64, domain: (f64, f64), nu_star: f64, expected: Vec<ExpectedSide>, name: &str| {
        let base = Problem::new(eq.clone(), ChartCoordinates::new(Chart::O13, inv_f0 + offset, z, 0.0).to_bc());
        out.push(AsymptoticFixture {
            name: name.into(),
            family: Family::new(FamilyKind::Axis { base, coordinate: Coordinate::ChartSecond(Chart::O13) }, domain),
            nu_star,
            expected,
        });
    };
    b13(
        1.0,
        (0.0, 1.0),
        0.5,
        vec![ExpectedSide::new(l, vec![], vec![top]), ExpectedSide::new(r, vec![0], vec![])],
        "O13 b22 sweep across B13r",
    );
    b13(
        -1.0,
        (-1.0, 0.0),
        -0.5,
        vec![ExpectedSide::new(l, vec![], vec![top]), ExpectedSide::new(r, vec![0], vec![])],
        "O13 b22 sweep across B13l",
    );

    // the four cones at C, plus the two branch curves ending there
    let cone = |name: &str, first: f64, second: f64, expected: ExpectedSide| AsymptoticFixture {
        name: name.into(),
        family: Family::new(
            FamilyKind::ChartAffine {
                equation: eq.clone(),
                from: ChartCoordinates::new(Chart::O13, inv_f0, Cx::new(0.0, 0.0), 0.0),
                to: ChartCoordinates::new(Chart::O13, inv_f0 + first, Cx::new(0.0, 0.0), second),
            },
            (0.0, 1.0),
        ),
        nu_star: 0.0,
        expected: vec![expected],
    };
    out.push(cone("C from B13r+", 1.0, 1.0, ExpectedSide::new(r, vec![0, 1], vec![])));
    out.push(cone("C from B13-", 1.0, -1.0, ExpectedSide::new(r, vec![0], vec![top])));
    out.push(cone("C from B13l+", -1.0, -1.0, ExpectedSide::new(r, vec![], vec![top - 1, top])));
    out.push(cone("C along B13r", 1.0, 0.0, ExpectedSide::new(r, vec![0], vec![])));
    out.push(cone("C along B13l", -1.0, 0.0, ExpectedSide::new(r, vec![], vec![top - 1])));

    // product path: a12 - 1/f0 = 0.25 - ν
    let z = Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let b21 = rng.gen_range(-1.0..1.0);
    let eq_from = random_equation(&mut rng, n, 1.0 / 1.5);
    let eq_to = random_equation(&mut rng, n, 1.0 / 3.5);
    out.push(AsymptoticFixture {
        name: "product path across P14".into(),
        family: Family::new(
            FamilyKind::ProductAffine {
                from: (eq_from, ChartCoordinates::new(Chart::O14, 1.75, z, b21)),
                to: (eq_to, ChartCoordinates::new(Chart::O14, 2.75, z, b21 + 0.5)),
            },
            (0.0, 1.0),
        ),
        nu_star: 0.25,
        expected: vec![ExpectedSide::new(l, vec![0], vec![]), ExpectedSide::new(r, vec![], vec![top])],
    });

    // separated sweeps
    let xi = crate::singular_sets::xi_of(1.0 / inv_f0).expect("nonzero f0");
    let beta0 = rng.gen_range(0.3..2.8);
    out.push(AsymptoticFixture {
        name: "alpha sweep across xi".into(),
        family: Family::new(FamilyKind::SeparatedAlpha { equation: eq.clone(), beta: beta0 }, (xi - 0.5, xi + 0.5)),
        nu_star: xi,
        expected: vec![ExpectedSide::new(l, vec![0], vec![]), ExpectedSide::new(r, vec![], vec![top])],
    });
    let alpha0 = if (xi - 0.4).abs() > 0.3 { 0.4 } else { 2.4 };
    out.push(AsymptoticFixture {
        name: "beta sweep to 0+".into(),
        family: Family::new(FamilyKind::SeparatedBeta { equation: eq.clone(), alpha: alpha0 }, (0.0, 0.5 * PI)),
        nu_star: 0.0,
        expected: vec![ExpectedSide::new(r, vec![0], vec![])],
    });
    out.push(AsymptoticFixture {
        name: "beta sweep to pi-".into(),
        family: Family::new(FamilyKind::SeparatedBeta { equation: eq.clone(), alpha: alpha0 }, (0.5 * PI, PI)),
        nu_star: PI,
        expected: vec![ExpectedSide::new(l, vec![], vec![top])],
    });

    // coupled k11 sweep across k11 = f0 k12
    let gamma = rng.gen_range(0.0..PI);
    let k22 = rng.gen_range(-1.0..1.0);
    out.push(AsymptoticFixture {
        name: "coupled k11 sweep across BC1".into(),
        family: Family::new(FamilyKind::CoupledK11 { equation: eq, gamma, k12: 1.0, k22 }, (0.0, 1.0)),
        nu_star: 1.0 / inv_f0,
        expected: vec![ExpectedSide::new(l, vec![0], vec![]), ExpectedSide::new(r, vec![], vec![top])],
    });
    out
}

fn describe(side: &SideReport) -> String {
    let parts: Vec<String> = side
        .behaviours
        .iter()
        .map(|b| match b {
            IndexBehaviour::Diverges { index, sign, .. } => {
                format!("λ{index}→{}∞", if *sign < 0 { "-" } else { "+" })
            }
            IndexBehaviour::Converges { index, target, .. } => format!("λ{index}→μ{target}"),
            IndexBehaviour::Unclassified { index } => format!("λ{index}:?"),
        })
        .collect();
    parts.join(" ")
}

fn expected_text(e: &ExpectedSide, count: usize) -> String {
    let parts: Vec<String> = (0..count)
        .map(|n| {
            if e.to_minus_infinity.contains(&n) {
                format!("λ{n}→-∞")
            } else if e.to_plus_infinity.contains(&n) {
                format!("λ{n}→+∞")
            } else {
                format!("λ{n}→μ{}", n.saturating_sub(e.shift))
            }
        })
        .collect();
    parts.join(" ")
}

/// Traces the fixture's family, classifies the singular parameter nearest
/// the nominal one, and compares every side with the expected pattern.
pub fn verify_asymptotic_theorem(fixture: &AsymptoticFixture) -> Result<PatternReport, BranchError> {
    let tr = trace(&fixture.family, 64)?;
    let event = tr
        .events
        .iter()
        .filter(|e| (e.nu - fixture.nu_star).abs() <= 1e-6 * (1.0 + fixture.nu_star.abs()))
        .min_by(|a, b| (a.nu - fixture.nu_star).abs().partial_cmp(&(b.nu - fixture.nu_star).abs()).expect("finite"))
        .cloned()
        .ok_or(BranchError::NoSingularParameter(fixture.nu_star))?;
    let mut rows = Vec::new();
    let mut ok = true;
    for e in &fixture.expected {
        let want_shift = e.shift;
        let row = match event.side(e.side) {
            None => {
                ok = false;
                format!("{:<5} | expected {} | observed nothing", e.side, expected_text(e, 0))
            }
            Some(s) => {
                let matches = s.diverging(-1) == e.to_minus_infinity
                    && s.diverging(1) == e.to_plus_infinity
                    && s.unclassified().is_empty()
                    && s.shifts().iter().all(|k| *k == want_shift)
                    && s.bookkeeping_ok;
                ok &= matches;
                format!(
                    "{:<5} | expected {} | observed {} | {}",
                    e.side,
                    expected_text(e, s.count),
                    describe(s),
                    if matches { "ok" } else { "MISMATCH" }
                )
            }
        };
        rows.push(row);
    }
    if !ok {
        return Err(BranchError::PatternMismatch(format!("{}\n{}", fixture.name, rows.join("\n"))));
    }
    Ok(PatternReport { name: fixture.name.clone(), event, rows })
}
