//! Seeded problem corpus shared by the integration tests and the
//! acceptance harness.
#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slp::bc_manifold::{self, Chart, ChartCoordinates};
use slp::core_model::real_matrix;
use slp::scalar::Cx;
use slp::singular_sets::xi_of;
use slp::{BoundaryCondition, Equation, Problem};
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct Entry {
    pub problem: Problem<f64>,
    /// how the condition was drawn
    pub kind: &'static str,
    /// built to lie on a singular set
    pub member: bool,
    /// the angles when the condition is separated
    pub separated: Option<(f64, f64)>,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// N in [lo, hi], |f| in [0.3, 3] with an occasional negative sign,
/// q in [-2, 2], w in [0.3, 3].
pub fn random_equation<R: Rng>(rng: &mut R, lo: usize, hi: usize) -> Equation<f64> {
    let n = rng.gen_range(lo..=hi);
    let f = (0..=n)
        .map(|_| {
            let m = rng.gen_range(0.3..3.0);
            if rng.gen_bool(0.1) {
                -m
            } else {
                m
            }
        })
        .collect();
    let q = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let w = (0..n).map(|_| rng.gen_range(0.3..3.0)).collect();
    Equation::new(f, q, w).expect("nonzero f, positive w")
}

fn random_z<R: Rng>(rng: &mut R) -> Cx<f64> {
    Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn away_from_zero<R: Rng>(rng: &mut R) -> f64 {
    let m = rng.gen_range(0.2..2.0);
    if rng.gen_bool(0.5) {
        m
    } else {
        -m
    }
}

fn separated(alpha: f64, beta: f64) -> BoundaryCondition<f64> {
    bc_manifold::separated_matrix_unchecked(alpha, beta)
}

/// A condition on one of the singular sets of `eq`.
fn member<R: Rng>(rng: &mut R, eq: &Equation<f64>) -> (BoundaryCondition<f64>, &'static str, Option<(f64, f64)>) {
    let f0 = eq.f0();
    let inv = 1.0 / f0;
    match rng.gen_range(0..8) {
        0 => {
            let (a, b) = (xi_of(f0).unwrap(), rng.gen_range(0.1..PI));
            (separated(a, b), "member alpha = xi", Some((a, b)))
        }
        1 => {
            let a = rng.gen_range(0.0..PI);
            (separated(a, PI), "member beta = pi", Some((a, PI)))
        }
        2 => {
            let k12 = away_from_zero(rng);
            let k22 = rng.gen_range(-2.0..2.0);
            let k11 = f0 * k12;
            let k = [[k11, k12], [(k11 * k22 - 1.0) / k12, k22]];
            (bc_manifold::coupled_matrix(rng.gen_range(0.0..PI), k).unwrap(), "member BC1", None)
        }
        3 => {
            let c = ChartCoordinates::new(Chart::O14, inv, random_z(rng), rng.gen_range(-2.0..2.0));
            (c.to_bc(), "member B14", None)
        }
        4 => {
            let c = ChartCoordinates::new(Chart::O24, -f0, random_z(rng), rng.gen_range(-2.0..2.0));
            (c.to_bc(), "member B24", None)
        }
        5 => {
            let d = away_from_zero(rng);
            let z = random_z(rng);
            let c = ChartCoordinates::new(Chart::O13, inv + d, z, z.norm_sqr() / d);
            (c.to_bc(), "member B13", None)
        }
        6 => {
            let d = away_from_zero(rng);
            let z = random_z(rng);
            let c = ChartCoordinates::new(Chart::O23, -f0 + d, z, z.norm_sqr() / d);
            (c.to_bc(), "member B23", None)
        }
        _ => {
            let m = real_matrix([[1.0, inv, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]);
            (BoundaryCondition::new(m).unwrap(), "member C", None)
        }
    }
}

/// `size` problems with N in [2, 12]: separated, coupled and chart-random
/// conditions, about 15% constructed on a singular set, and half of all
/// conditions replaced by a random complex twist of themselves.
pub fn corpus(seed: u64, size: usize) -> Vec<Entry> {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(size);
    for _ in 0..size {
        let eq = random_equation(&mut rng, 2, 12);
        let roll = rng.gen_range(0.0..1.0);
        let (bc, kind, sep, is_member) = if roll < 0.3 {
            let (a, b) = (rng.gen_range(0.0..PI), PI - rng.gen_range(0.0..PI));
            (separated(a, b), "separated", Some((a, b)), false)
        } else if roll < 0.6 {
            let k = bc_manifold::random_unimodular(&mut rng);
            (bc_manifold::coupled_matrix(rng.gen_range(0.0..PI), k).unwrap(), "coupled", None, false)
        } else if roll < 0.85 {
            let chart = Chart::ALL[rng.gen_range(0..4)];
            let c =
                ChartCoordinates::new(chart, rng.gen_range(-2.0..2.0), random_z(&mut rng), rng.gen_range(-2.0..2.0));
            (c.to_bc(), "chart", None, false)
        } else {
            let (bc, kind, sep) = member(&mut rng, &eq);
            (bc, kind, sep, true)
        };
        let bc = if rng.gen_bool(0.5) { bc.twisted(&bc_manifold::random_twist(&mut rng)).unwrap() } else { bc };
        out.push(Entry { problem: Problem::new(eq, bc), kind, member: is_member, separated: sep });
    }
    out
}
