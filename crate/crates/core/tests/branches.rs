//! Branch tracing, jump classification and monotonicity on known families.

use slp::branch_lab::{self, Approach, Builtin, Coordinate, Direction, Family, FamilyKind, IndexBehaviour};
use slp::cli_io;
use slp::spectral_engine;
use slp::Equation;
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::PathBuf;

fn fixture_family(name: &str) -> Family {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    let text = std::fs::read_to_string(path).unwrap();
    cli_io::parse_family(&cli_io::parse_json(&text).unwrap()).unwrap()
}

fn unit_data() -> Equation<f64> {
    Equation::new(vec![1.0; 3], vec![0.0; 2], vec![1.0; 2]).unwrap()
}

#[test]
fn ex11_trace_finds_the_drop_at_three_quarter_pi() {
    let family = Builtin::Ex11.family();
    let tr = branch_lab::trace(&family, 512).unwrap();
    let xi = 3.0 * PI / 4.0;
    assert_eq!(tr.candidates.len(), 1, "{:?}", tr.candidates);
    assert!((tr.candidates[0] - xi).abs() <= 1e-3);
    let at = family.resolve(tr.candidates[0]).unwrap();
    assert_eq!(spectral_engine::count_eigenvalues(&at), 1);
    for (nu, count) in tr.grid.iter().zip(&tr.counts) {
        if (nu - xi).abs() > 1e-2 {
            assert_eq!(*count, Some(2), "at {nu}");
        }
    }
}

#[test]
fn ex11_jump_sides() {
    let ev = branch_lab::classify_jump(&Builtin::Ex11.family(), 3.0 * PI / 4.0, 0.01).unwrap();
    assert_eq!(ev.limit_count, 1);
    let left = ev.side(Approach::Left).unwrap();
    let right = ev.side(Approach::Right).unwrap();
    assert_eq!(left.diverging(-1), vec![0]);
    assert_eq!(right.diverging(1), vec![1]);
    assert!(left.bookkeeping_ok && right.bookkeeping_ok);
    for side in [left, right] {
        let converging: Vec<_> = side
            .behaviours
            .iter()
            .filter_map(|b| match b {
                IndexBehaviour::Converges { extrapolated, limit, .. } => Some((*extrapolated, *limit)),
                _ => None,
            })
            .collect();
        assert_eq!(converging.len(), 1);
        assert!((converging[0].0 - 1.0).abs() <= 1e-4);
        assert!((converging[0].1 - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn ex11_alpha_sweep_is_strictly_decreasing_before_xi() {
    let mut family =
        Family::new(FamilyKind::SeparatedAlpha { equation: unit_data(), beta: FRAC_PI_2 }, (0.0, 3.0 * PI / 4.0));
    family.right_open = true;
    let report = branch_lab::check_monotonicity(&family, 128).unwrap();
    assert_eq!(report.direction, Direction::StrictlyDecreasing);
    assert!(report.passed(), "{:?}", report.violations);
    let tr = branch_lab::trace(&family, 128).unwrap();
    assert!(tr.counts.iter().all(|c| *c == Some(2)));
    for n in 0..2 {
        let row: Vec<f64> = tr.values[n].iter().map(|v| v.unwrap()).collect();
        assert!(row.windows(2).all(|w| w[1] < w[0]), "λ{n} not strictly decreasing");
    }
}

#[test]
fn q_sweep_is_non_decreasing() {
    let family = fixture_family("family_q1.json");
    assert_eq!(family.coordinate(), Some(Coordinate::Q(1)));
    let report = branch_lab::check_monotonicity(&family, 128).unwrap();
    assert_eq!(report.direction, Direction::NonDecreasing);
    assert!(report.passed() && report.pairs_checked == 127, "{report:?}");
}

#[test]
fn last_f_sweep_leaves_spectrum_unchanged() {
    let FamilyKind::Axis { base, .. } = fixture_family("family_q1.json").kind else { panic!("axis fixture") };
    let family = Family::new(FamilyKind::Axis { base, coordinate: Coordinate::FN }, (0.25, 4.0));
    let report = branch_lab::check_monotonicity(&family, 64).unwrap();
    assert_eq!(report.direction, Direction::Constant);
    assert!(report.passed() && report.max_change <= 1e-12, "{report:?}");
}

#[test]
fn shared_nodes_agree_and_steps_halve_with_the_grid() {
    let family = Builtin::Ex31.family();
    let coarse = branch_lab::trace(&family, 129).unwrap();
    let fine = branch_lab::trace(&family, 257).unwrap();
    for i in 0..coarse.grid.len() {
        assert_eq!(coarse.grid[i], fine.grid[2 * i]);
        assert_eq!(coarse.values_at(i), fine.values_at(2 * i));
    }
    // largest step between neighbours away from the jump at s = 1
    let largest_step = |tr: &branch_lab::BranchTrace| {
        let mut worst = 0.0f64;
        for i in 0..tr.grid.len() - 1 {
            if (tr.grid[i] - 1.0).abs() < 0.2 || (tr.grid[i + 1] - 1.0).abs() < 0.2 || tr.counts[i] != tr.counts[i + 1]
            {
                continue;
            }
            for (a, b) in tr.values_at(i).iter().zip(tr.values_at(i + 1)) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    };
    let ratio = largest_step(&coarse) / largest_step(&fine);
    assert!((1.8..=2.2).contains(&ratio), "step ratio {ratio}");
}

#[test]
fn constant_family_has_no_events() {
    let tr = branch_lab::trace(&fixture_family("family_constant.json"), 64).unwrap();
    assert!(tr.candidates.is_empty() && tr.events.is_empty());
    let first = tr.values_at(0);
    for i in 1..tr.grid.len() {
        assert_eq!(tr.values_at(i), first);
    }
}

#[test]
fn asymptotic_catalog_matches_on_a_second_seed() {
    for fixture in branch_lab::asymptotic_catalog(3) {
        if let Err(e) = branch_lab::verify_asymptotic_theorem(&fixture) {
            panic!("{}: {e}", fixture.name);
        }
    }
}

#[test]
fn coupled_sweep_fixture_has_one_event() {
    let tr = branch_lab::trace(&fixture_family("family_coupled_k11.json"), 256).unwrap();
    assert_eq!(tr.events.len(), 1, "{:?}", tr.candidates);
    let ev = &tr.events[0];
    assert!(ev.is_count_drop() && !ev.has_unclassified());
}
