//! Membership in the sets where the eigenvalue count drops: in equation
//! space for a fixed condition, in condition space for a fixed equation,
//! and in the product space.

use crate::bc_manifold::{self, CanonicalForm, Chart, ChartCoordinates};
use crate::core_model::{BoundaryCondition, Equation, ModelError, Problem};
use crate::linalg;
use crate::scalar::Cx;
use crate::spectral_engine::{self, boundary_minors, special_matrix};
use crate::tolerances::Tolerances;
use std::f64::consts::PI;

/// Which of μ1, μ2 vanish.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinorCase {
    /// both nonzero
    BothNonzero,
    /// exactly one is zero
    OneZero,
    /// both zero; the condition is separated with β = π
    BothZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    On,
    Plus,
    Minus,
}

impl Side {
    fn suffix(self) -> &'static str {
        match self {
            Side::On => "",
            Side::Plus => "+",
            Side::Minus => "-",
        }
    }

    fn of(diff: f64, scale: f64, tol: f64) -> Side {
        if diff.abs() <= tol * scale {
            Side::On
        } else if diff > 0.0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquationMembership {
    /// 1/f0 = η
    E(Side),
    /// 1/f0 = -1/â11 in the `[â11, -1, 0, 0; 0, 0, -1, 0]` form
    E1(Side),
    /// 1/f0 = â12 in the `[1, â12, 0, 0; 0, 0, -1, 0]` form
    E2(Side),
    /// one minor vanishes: the count is N for every equation
    NotSingularCaseII,
    /// both vanish but the form parameter is zero, so the defining equality is unreachable
    NotSingularCaseIIIa0,
}

impl EquationMembership {
    pub fn label(&self) -> String {
        match self {
            EquationMembership::E(s) => format!("E{}", s.suffix()),
            EquationMembership::E1(s) => format!("E1{}", s.suffix()),
            EquationMembership::E2(s) => format!("E2{}", s.suffix()),
            EquationMembership::NotSingularCaseII => "not_singular_case_ii".into(),
            EquationMembership::NotSingularCaseIIIa0 => "not_singular_case_iii_a0".into(),
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(
            self,
            EquationMembership::E(Side::On) | EquationMembership::E1(Side::On) | EquationMembership::E2(Side::On)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquationSideClassification {
    pub mu1: Cx<f64>,
    pub mu2: Cx<f64>,
    pub eta: Option<f64>,
    pub case: MinorCase,
    pub membership: EquationMembership,
    /// |1/f0 - threshold|, absent when no equation can reach the set
    pub distance: Option<f64>,
    pub warnings: Vec<String>,
}

/// Location of a condition relative to the set of one chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartPosition {
    /// charts O14, O24: the set is a real hyperplane
    Plane(Side),
    /// on the conic of charts O13, O23, right branch
    ConicRight,
    /// on the conic, left branch
    ConicLeft,
    /// on the conic at its vertex, the special matrix
    Vertex,
    /// h < 0
    ConicMinus,
    /// h > 0, both factors nonnegative
    RightPlus,
    /// h > 0, both factors nonpositive
    LeftPlus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartMembership {
    pub coords: ChartCoordinates<f64>,
    pub position: ChartPosition,
    /// signed residual of the defining equation
    pub residual: f64,
}

impl ChartMembership {
    pub fn on_set(&self) -> bool {
        matches!(
            self.position,
            ChartPosition::Plane(Side::On)
                | ChartPosition::ConicRight
                | ChartPosition::ConicLeft
                | ChartPosition::Vertex
        )
    }

    /// Set name with `prefix` "B" (condition space) or "P" (product space).
    pub fn label(&self, prefix: &str) -> String {
        let chart = match self.coords.chart {
            Chart::O13 => "13",
            Chart::O14 => "14",
            Chart::O23 => "23",
            Chart::O24 => "24",
        };
        match self.position {
            ChartPosition::Plane(s) => format!("{prefix}{chart}{}", s.suffix()),
            ChartPosition::ConicRight => format!("{prefix}{chart}r"),
            ChartPosition::ConicLeft => format!("{prefix}{chart}l"),
            ChartPosition::Vertex => {
                if prefix == "P" {
                    "P5".into()
                } else {
                    "C".into()
                }
            }
            ChartPosition::ConicMinus => format!("{prefix}{chart}-"),
            ChartPosition::RightPlus => format!("{prefix}{chart}r+"),
            ChartPosition::LeftPlus => format!("{prefix}{chart}l+"),
        }
    }
}

/// Separated-form membership: α on the critical angle or β = π.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedMembership {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_side: Side,
    pub beta_is_pi: bool,
}

impl SeparatedMembership {
    pub fn in_set(&self) -> bool {
        self.alpha_side == Side::On || self.beta_is_pi
    }
}

/// Coupled-form membership: k11/k12 against f0.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledMembership {
    pub gamma: f64,
    pub k: [[f64; 2]; 2],
    /// `None` when k12 = 0, where the set is unreachable
    pub side: Option<Side>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcSideClassification {
    pub xi: f64,
    pub charts: Vec<ChartMembership>,
    pub is_c_point: bool,
    pub separated: Option<SeparatedMembership>,
    pub coupled: Option<CoupledMembership>,
    pub distance: f64,
}

impl BcSideClassification {
    /// In the union of the four chart sets.
    pub fn in_set(&self) -> bool {
        self.is_c_point || self.charts.iter().any(|c| c.on_set())
    }

    /// In the separated or coupled description of the same union.
    pub fn in_canonical_set(&self) -> bool {
        self.separated.as_ref().map(|s| s.in_set()).unwrap_or(false)
            || self.coupled.as_ref().map(|c| c.side == Some(Side::On)).unwrap_or(false)
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = self.charts.iter().map(|c| c.label("B")).collect();
        if self.is_c_point && !out.iter().any(|l| l == "C") {
            out.push("C".into());
        }
        if let Some(s) = &self.separated {
            if s.in_set() {
                out.push("BS1".into());
            }
        }
        if let Some(c) = &self.coupled {
            if let Some(side) = c.side {
                out.push(format!("BC1{}", side.suffix()));
            }
        }
        dedup_keep_order(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductClassification {
    pub charts: Vec<ChartMembership>,
    pub is_p5: bool,
    pub theta: Cx<f64>,
    pub theta_vanishes: bool,
    pub count: usize,
    pub distance: f64,
}

impl ProductClassification {
    pub fn in_set(&self) -> bool {
        self.is_p5 || self.charts.iter().any(|c| c.on_set())
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = self.charts.iter().map(|c| c.label("P")).collect();
        if self.is_p5 && !out.iter().any(|l| l == "P5") {
            out.push("P5".into());
        }
        dedup_keep_order(out)
    }
}

fn dedup_keep_order(labels: Vec<String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(labels.len());
    for l in labels {
        if !out.contains(&l) {
            out.push(l);
        }
    }
    out
}

/// The critical separated angle: `arctan(-1/f0) + π` for f0 > 0 and
/// `arctan(-1/f0)` for f0 < 0.
pub fn xi_of(f0: f64) -> Result<f64, ModelError> {
    if f0 == 0.0 {
        return Err(ModelError::ZeroF(0));
    }
    let base = (-1.0 / f0).atan();
    Ok(if f0 > 0.0 { base + PI } else { base })
}

fn minor_case(mu1: Cx<f64>, mu2: Cx<f64>, scale: f64, tol: f64) -> MinorCase {
    let z1 = mu1.norm() <= tol * scale;
    let z2 = mu2.norm() <= tol * scale;
    match (z1, z2) {
        (false, false) => MinorCase::BothNonzero,
        (true, true) => MinorCase::BothZero,
        _ => MinorCase::OneZero,
    }
}

pub fn classify_equation_side(bc: &BoundaryCondition<f64>, eq: &Equation<f64>) -> EquationSideClassification {
    classify_equation_side_with(bc, eq, &Tolerances::default())
}

pub fn classify_equation_side_with(
    bc: &BoundaryCondition<f64>,
    eq: &Equation<f64>,
    tol: &Tolerances,
) -> EquationSideClassification {
    let (mu1, mu2) = boundary_minors(bc);
    let scale = bc.norm().powi(2);
    let case = minor_case(mu1, mu2, scale, tol.set);
    let inv_f0 = eq.inv_f(0);
    let mut warnings = Vec::new();
    let (eta, membership, distance) = match case {
        MinorCase::BothNonzero => {
            let ratio = -mu2 / mu1;
            if ratio.im.abs() > tol.set.sqrt() * (1.0 + ratio.re.abs()) {
                warnings.push(format!("-mu2/mu1 = {ratio} is not real"));
            }
            let eta = ratio.re;
            let side = Side::of(inv_f0 - eta, 1.0 + eta.abs(), tol.set);
            (Some(eta), EquationMembership::E(side), Some((inv_f0 - eta).abs()))
        }
        MinorCase::OneZero => (None, EquationMembership::NotSingularCaseII, None),
        MinorCase::BothZero => {
            let alpha = match bc_manifold::canonical_form_with(bc, tol) {
                CanonicalForm::Separated { alpha, .. } => alpha,
                CanonicalForm::Coupled { .. } => {
                    warnings.push("both minors vanish but the condition is not separated".into());
                    0.0
                }
            };
            let (s, c) = (alpha.sin(), alpha.cos());
            if c.abs() <= tol.set || s.abs() <= tol.set {
                // â11 = 0 or â12 = 0: the defining equality needs 1/f0 = ∞ or 0
                (None, EquationMembership::NotSingularCaseIIIa0, None)
            } else {
                // both forms exist and describe the same set 1/f0 = -tan α;
                // report the [â11, -1, 0, 0; 0, 0, -1, 0] form with â11 = cot α
                let target = -s / c;
                let side = Side::of(inv_f0 - target, 1.0 + target.abs(), tol.set);
                (None, EquationMembership::E1(side), Some((inv_f0 - target).abs()))
            }
        }
    };
    EquationSideClassification { mu1, mu2, eta, case, membership, distance, warnings }
}

/// Position of a chart point relative to the set for leading coefficient `f0`.
pub fn chart_membership(coords: ChartCoordinates<f64>, f0: f64, tol: f64) -> ChartMembership {
    let p1 = coords.first();
    let p2 = coords.second();
    let z2 = coords.z().norm_sqr();
    // shifted first parameter: a12 - 1/f0 or a11 + f0
    let (shift, offset) = match coords.chart {
        Chart::O13 | Chart::O14 => (p1 - 1.0 / f0, 1.0 / f0),
        Chart::O23 | Chart::O24 => (p1 + f0, f0),
    };
    match coords.chart {
        Chart::O14 | Chart::O24 => {
            let side = Side::of(shift, 1.0 + p1.abs().max(offset.abs()), tol);
            ChartMembership { coords, position: ChartPosition::Plane(side), residual: shift }
        }
        Chart::O13 | Chart::O23 => {
            let h = shift * p2 - z2;
            let scale = 1.0 + (p1.abs() + offset.abs()) * p2.abs() + z2;
            let position = if h.abs() <= tol * scale {
                let small = |x: f64, s: f64| x.abs() <= tol * (1.0 + s);
                if small(shift, offset.abs()) && small(p2, 0.0) && small(z2.sqrt(), 0.0) {
                    ChartPosition::Vertex
                } else if shift + p2 > 0.0 {
                    ChartPosition::ConicRight
                } else {
                    ChartPosition::ConicLeft
                }
            } else if h < 0.0 {
                ChartPosition::ConicMinus
            } else if shift + p2 > 0.0 {
                ChartPosition::RightPlus
            } else {
                ChartPosition::LeftPlus
            };
            ChartMembership { coords, position, residual: h }
        }
    }
}

fn memberships(bc: &BoundaryCondition<f64>, f0: f64, tol: &Tolerances) -> Vec<ChartMembership> {
    Chart::ALL
        .iter()
        .filter_map(|&c| bc_manifold::normalize_to_chart_with(bc, c, tol).ok())
        .map(|coords| chart_membership(coords, f0, tol.set))
        .collect()
}

fn is_special(bc: &BoundaryCondition<f64>, f0: f64, tol: &Tolerances) -> bool {
    linalg::row_space_distance(bc.matrix(), &special_matrix(f0)) <= tol.set
}

fn angle_gap(a: f64, b: f64) -> f64 {
    // distance on the circle of period π
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

pub fn classify_bc_side(eq: &Equation<f64>, bc: &BoundaryCondition<f64>) -> BcSideClassification {
    classify_bc_side_with(eq, bc, &Tolerances::default())
}

pub fn classify_bc_side_with(
    eq: &Equation<f64>,
    bc: &BoundaryCondition<f64>,
    tol: &Tolerances,
) -> BcSideClassification {
    let f0 = eq.f0();
    let xi = xi_of(f0).expect("validated equations have f0 != 0");
    let charts = memberships(bc, f0, tol);
    let is_c_point = is_special(bc, f0, tol);
    let (separated, coupled) = match bc_manifold::canonical_form_with(bc, tol) {
        CanonicalForm::Separated { alpha, beta } => {
            let gap = angle_gap(alpha, xi);
            let alpha_side = if gap <= tol.set * PI {
                Side::On
            } else if alpha > xi {
                Side::Plus
            } else {
                Side::Minus
            };
            let beta_is_pi = (PI - beta).abs() <= tol.set * PI || beta.abs() <= tol.set * PI;
            (Some(SeparatedMembership { alpha, beta, alpha_side, beta_is_pi }), None)
        }
        CanonicalForm::Coupled { gamma, k } => {
            let side = if k[0][1].abs() <= tol.set * (k[0][0].abs() + k[0][1].abs()) {
                None
            } else {
                // sign of k11/k12 - f0 without dividing by a small k12
                let diff = k[0][0] - f0 * k[0][1];
                let scale = k[0][0].abs() + (f0 * k[0][1]).abs();
                Some(match Side::of(diff, scale, tol.set) {
                    Side::On => Side::On,
                    s if k[0][1] > 0.0 => s,
                    Side::Plus => Side::Minus,
                    Side::Minus => Side::Plus,
                })
            };
            (None, Some(CoupledMembership { gamma, k, side }))
        }
    };
    let distance = charts.iter().map(|c| c.residual.abs()).fold(f64::INFINITY, f64::min);
    BcSideClassification { xi, charts, is_c_point, separated, coupled, distance }
}

/// |θ| judged the same way the eigenvalue solver judges degree N.
pub fn theta_vanishes(p: &Problem<f64>, tol: &Tolerances) -> bool {
    spectral_engine::gamma_degree(p, tol) < p.len()
}

pub fn classify_product(p: &Problem<f64>) -> ProductClassification {
    classify_product_with(p, &Tolerances::default())
}

pub fn classify_product_with(p: &Problem<f64>, tol: &Tolerances) -> ProductClassification {
    let f0 = p.equation.f0();
    let charts = memberships(&p.bc, f0, tol);
    let is_p5 = is_special(&p.bc, f0, tol);
    let distance = charts.iter().map(|c| c.residual.abs()).fold(f64::INFINITY, f64::min);
    ProductClassification {
        charts,
        is_p5,
        theta: spectral_engine::theta(p),
        theta_vanishes: theta_vanishes(p, tol),
        count: spectral_engine::count_eigenvalues_with(p, tol),
        distance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bc_manifold::{coupled_matrix, separated_matrix};
    use crate::core_model::{real_matrix, validate_bc, validate_equation};

    fn eq_f0(f0: f64) -> Equation<f64> {
        validate_equation(&[f0, 1.0, 1.0], &[0.0, 0.0], &[1.0, 1.0]).unwrap()
    }

    fn two_point_bc() -> BoundaryCondition<f64> {
        validate_bc(real_matrix([[1., 1., 0., 0.], [0., 0., -1., 1.]])).unwrap()
    }

    #[test]
    fn xi_values() {
        assert!((xi_of(1.0).unwrap() - 3.0 * PI / 4.0).abs() < 1e-15);
        assert!((xi_of(-1.0).unwrap() - PI / 4.0).abs() < 1e-15);
        assert!(xi_of(1e12).unwrap() < PI && xi_of(1e12).unwrap() > PI - 1e-11);
        assert!(xi_of(0.0).is_err());
    }

    #[test]
    fn equation_side_examples() {
        let c = classify_equation_side(&two_point_bc(), &eq_f0(1.0));
        assert_eq!(c.mu1, Cx::new(1.0, 0.0));
        assert_eq!(c.mu2, Cx::new(-1.0, 0.0));
        assert_eq!(c.eta, Some(1.0));
        assert_eq!(c.membership, EquationMembership::E(Side::On));
        let c = classify_equation_side(&two_point_bc(), &eq_f0(2.0));
        assert_eq!(c.membership, EquationMembership::E(Side::Minus));
        let a1 = validate_bc(real_matrix([[2., -1., 0., 0.], [0., 0., -1., 0.]])).unwrap();
        let c = classify_equation_side(&a1, &eq_f0(-2.0));
        assert_eq!(c.case, MinorCase::BothZero);
        assert_eq!(c.membership, EquationMembership::E1(Side::On));
    }

    #[test]
    fn bc_side_examples() {
        let beta0 = 1.0;
        let s = separated_matrix(3.0 * PI / 4.0, beta0).unwrap();
        let c = classify_bc_side(&eq_f0(1.0), &s);
        assert!(c.labels().contains(&"BS1".to_string()));
        assert!(c.labels().contains(&"B14".to_string()));
        assert!(c.labels().contains(&"B24".to_string()));
        let s = separated_matrix(3.0 * PI / 4.0, PI).unwrap();
        let c = classify_bc_side(&eq_f0(1.0), &s);
        assert!(c.is_c_point);
        assert!(c.labels().contains(&"C".to_string()));
        let k = coupled_matrix(0.0, [[1.0, 1.0], [0.0, 1.0]]).unwrap();
        let c = classify_bc_side(&eq_f0(1.0), &k);
        assert!(c.labels().contains(&"BC1".to_string()));
        assert!(c.in_set());
    }

    #[test]
    fn product_side_matches_theta() {
        let p = Problem::new(eq_f0(1.0), two_point_bc());
        let c = classify_product(&p);
        assert!(c.in_set());
        assert!(c.theta_vanishes);
        assert_eq!(c.count, 1);
        let d = Problem::new(eq_f0(1.0), separated_matrix(0.0, PI).unwrap());
        let c = classify_product(&d);
        assert_eq!(c.in_set(), c.theta_vanishes);
        let s = Problem::new(eq_f0(1.0), separated_matrix(0.0, PI / 2.0).unwrap());
        let c = classify_product(&s);
        assert!(!c.in_set() && !c.theta_vanishes);
        assert!(c.distance > 0.0);
        let a = Problem::new(eq_f0(2.0), validate_bc(special_matrix(2.0)).unwrap());
        let c = classify_product(&a);
        assert!(c.is_p5);
        assert!(c.labels().contains(&"P5".to_string()));
    }
}
