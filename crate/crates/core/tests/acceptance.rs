//! Acceptance harness: one PASS/FAIL line per criterion, non-zero exit if
//! any criterion fails.

mod common;

use rand::Rng;
use slp::bc_manifold;
use slp::branch_lab::{self, Approach, Builtin, Coordinate, Family, FamilyKind, IndexBehaviour, JumpEvent};
use slp::cli_io;
use slp::reference_oracle;
use slp::singular_sets;
use slp::spectral_engine::{self, SpectralError};
use slp::{Problem, Tolerances};
use std::f64::consts::PI;
use std::path::PathBuf;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(failures: &[String], summary: String) -> Self {
        let mut detail = summary;
        if let Some(first) = failures.first() {
            detail.push_str(&format!("; {} failure(s), first: {first}", failures.len()));
        }
        Outcome { pass: failures.is_empty(), detail }
    }
}

const CORPUS_SEED: u64 = 0x5eed_2024;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn event_near(family: &Family, nu: f64) -> Result<JumpEvent, String> {
    let tr = branch_lab::trace(family, 512).map_err(|e| e.to_string())?;
    tr.events.into_iter().find(|e| (e.nu - nu).abs() <= 1e-6).ok_or_else(|| format!("no event detected near {nu}"))
}

fn verify(name: &str, failures: &mut Vec<String>) -> f64 {
    match cli_io::verify_example(name, &Tolerances::default()) {
        Ok(r) => {
            if !r.passed() {
                failures.push(format!("{name} closed-form error {:e}", r.max_error));
            }
            r.max_error
        }
        Err(e) => {
            failures.push(e.to_string());
            f64::INFINITY
        }
    }
}

fn ex11() -> Outcome {
    let mut failures = Vec::new();
    let err = verify("ex1.1", &mut failures);
    let text = std::fs::read_to_string(fixture("ex1.1_singular.json")).expect("fixture present");
    let p = cli_io::parse_problem(&cli_io::parse_json(&text).unwrap()).unwrap();
    let count = spectral_engine::count_eigenvalues(&p);
    match spectral_engine::eigenvalues(&p) {
        Ok(s) if count == 1 && s.values().len() == 1 && (s.values()[0] - 1.0).abs() <= 1e-10 => {}
        other => failures.push(format!("at 3π/4: count {count}, spectrum {:?}", other.map(|s| s.values()))),
    }
    Outcome::new(&failures, format!("max error {err:.2e} on 256 points; count 1 with λ0 = 1 at 3π/4"))
}

fn ex21() -> Outcome {
    let mut failures = Vec::new();
    let err = verify("ex2.1", &mut failures);
    match event_near(&Builtin::Ex21.family(), 1.0) {
        Err(e) => failures.push(e),
        Ok(ev) => {
            for side in [Approach::Left, Approach::Right] {
                let Some(s) = ev.side(side) else {
                    failures.push(format!("{side} side missing"));
                    continue;
                };
                match &s.behaviours[..] {
                    [IndexBehaviour::Converges { target: 0, extrapolated, limit, .. }, IndexBehaviour::Diverges { sign: 1, last_value, .. }]
                        if extrapolated.abs() <= 1e-4 && limit.abs() <= 1e-10 && *last_value > 1e6 => {}
                    other => failures.push(format!("{side}: {other:?}")),
                }
            }
        }
    }
    Outcome::new(&failures, format!("max error {err:.2e}; λ0 → 0 and λ1 → +∞ on both sides of s = 1"))
}

fn ex31() -> Outcome {
    let mut failures = Vec::new();
    let err = verify("ex3.1", &mut failures);
    let mut expectations = Vec::new();
    match event_near(&Builtin::Ex31.family(), 1.0) {
        Err(e) => failures.push(e),
        Ok(ev) => {
            for (side, h) in [(Approach::Left, -1e-9), (Approach::Right, 1e-9)] {
                // expected behaviour read off the closed forms just beside s = 1
                let near = Builtin::Ex31.closed_form(1.0 + h);
                let Some(s) = ev.side(side) else {
                    failures.push(format!("{side} side missing"));
                    continue;
                };
                for (n, v) in near.iter().enumerate() {
                    let observed = s.behaviours.get(n);
                    let ok = if v.abs() > 1e6 {
                        let sign = v.signum() as i8;
                        expectations.push(format!("{side} λ{n}→{}∞", if sign < 0 { "-" } else { "+" }));
                        matches!(observed, Some(IndexBehaviour::Diverges { sign: s, .. }) if *s == sign)
                    } else {
                        expectations.push(format!("{side} λ{n}→{v:.3}"));
                        matches!(observed, Some(IndexBehaviour::Converges { extrapolated, .. }) if (extrapolated - v).abs() <= 1e-4)
                    };
                    if !ok {
                        failures.push(format!("{side} λ{n}: closed form gives {v:e}, observed {observed:?}"));
                    }
                }
            }
        }
    }
    Outcome::new(&failures, format!("max error {err:.2e}; {}", expectations.join(", ")))
}

/// Scale of θ's constituents, for a relative comparison that survives θ = 0.
fn theta_scale(p: &Problem<f64>) -> f64 {
    let eq = &p.equation;
    let n = eq.len();
    let prod: f64 = (1..n).map(|i| eq.w_at(i) / eq.f_at(i)).product();
    let (mu1, mu2) = spectral_engine::boundary_minors(&p.bc);
    (eq.w_at(n) * prod).abs() * (mu1.norm() / eq.f0().abs() + mu2.norm())
}

fn count_law(corpus: &[common::Entry]) -> Outcome {
    let tol = Tolerances::default();
    let mut failures = Vec::new();
    for (i, e) in corpus.iter().enumerate() {
        let p = &e.problem;
        let n = p.len();
        let r = spectral_engine::rank_r(p);
        let want = n - 2 + r;
        let degree = spectral_engine::gamma_degree(p, &tol);
        match spectral_engine::eigenvalues(p) {
            Ok(s) if degree == want && s.total_multiplicity() == want => {}
            other => failures.push(format!(
                "#{i} ({}, N={n}): r={r}, degree {degree}, spectrum {:?}",
                e.kind,
                other.map(|s| s.total_multiplicity())
            )),
        }
        let gamma = spectral_engine::char_poly(p);
        let theta = spectral_engine::theta(p);
        let diff = (gamma.coeff(n) - theta).norm();
        if diff > 1e-10 * theta_scale(p).max(f64::MIN_POSITIVE) {
            failures.push(format!("#{i}: θ differs from the λ^N coefficient by {diff:e}"));
        }
    }
    let members = corpus.iter().filter(|e| e.member).count();
    Outcome::new(&failures, format!("{} problems ({members} on singular sets)", corpus.len()))
}

fn reality_and_oracles(corpus: &[common::Entry]) -> Outcome {
    let mut failures = Vec::new();
    let mut worst_oracle = 0.0f64;
    let mut worst_pencil = 0.0f64;
    let mut separated = 0;
    for (i, e) in corpus.iter().enumerate() {
        let p = &e.problem;
        let spectrum = match spectral_engine::eigenvalues(p) {
            Ok(s) => s,
            Err(SpectralError::NonRealRoot { re, im }) => {
                failures.push(format!("#{i}: non-real root {re} + {im}i"));
                continue;
            }
            Err(err) => {
                failures.push(format!("#{i}: {err}"));
                continue;
            }
        };
        match reference_oracle::gamma_by_interpolation(p) {
            Ok(g) => {
                let d = g.relative_distance(&spectral_engine::char_poly(p));
                worst_oracle = worst_oracle.max(d);
                if d > 1e-8 {
                    failures.push(format!("#{i} ({}): oracle Γ differs by {d:e}", e.kind));
                }
            }
            Err(err) => failures.push(format!("#{i}: {err}")),
        }
        if let Some((alpha, beta)) = e.separated {
            separated += 1;
            match reference_oracle::pencil_eigenvalues_separated(&p.equation, alpha, beta) {
                Ok(v) if v.len() == spectrum.values().len() => {
                    for (a, b) in v.iter().zip(spectrum.values()) {
                        let d = (a - b).abs() / (1.0 + a.abs());
                        worst_pencil = worst_pencil.max(d);
                        if d > 1e-8 {
                            failures.push(format!("#{i} ({}): pencil {a} vs engine {b}", e.kind));
                        }
                    }
                }
                other => failures.push(format!("#{i} ({}): pencil {other:?} vs {:?}", e.kind, spectrum.values())),
            }
        }
    }
    Outcome::new(
        &failures,
        format!("all roots real; oracle Γ max rel diff {worst_oracle:.1e}; pencil ({separated} separated) max rel diff {worst_pencil:.1e}"),
    )
}

fn leading_terms() -> Outcome {
    let mut rng = common::rng(6);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..200 {
        let eq = common::random_equation(&mut rng, 2, 12);
        let n = eq.len();
        let fs = spectral_engine::fundamental_solutions(&eq);
        let want = spectral_engine::leading_terms(&eq);
        let got = [fs.phi_n.coeff(n - 1), fs.psi_n.coeff(n - 1), fs.fdphi_n.coeff(n), fs.fdpsi_n.coeff(n)];
        let degrees = [fs.phi_n.degree(), fs.psi_n.degree(), fs.fdphi_n.degree(), fs.fdpsi_n.degree()];
        if degrees != [n - 1, n - 1, n, n] {
            failures.push(format!("#{i}: degrees {degrees:?} for N = {n}"));
        }
        for k in 0..4 {
            let rel = (got[k] - want[k]).abs() / want[k].abs();
            worst = worst.max(rel);
            if rel > 1e-12 {
                failures.push(format!("#{i}: term {k} off by {rel:e}"));
            }
        }
    }
    Outcome::new(&failures, format!("200 equations, max rel error {worst:.1e}"))
}

fn random_sweep<R: Rng>(rng: &mut R, which: usize) -> Family {
    let eq = common::random_equation(rng, 2, 8);
    let n = eq.len();
    let bc = bc_manifold::random_bc(rng);
    let pm = |v: f64, h: f64| (v - h, v + h);
    let scaled = |v: f64| if v > 0.0 { (0.5 * v, 1.5 * v) } else { (1.5 * v, 0.5 * v) };
    let (coordinate, domain, base) = match which {
        0 => {
            let j = rng.gen_range(0..n);
            (Coordinate::InvF(j), scaled(eq.inv_f(j)), Problem::new(eq, bc))
        }
        1 => {
            let k = rng.gen_range(1..=n);
            (Coordinate::Q(k), pm(eq.q_at(k), 1.0), Problem::new(eq, bc))
        }
        2 => {
            let k = rng.gen_range(1..=n);
            (Coordinate::W(k), scaled(eq.w_at(k)), Problem::new(eq, bc))
        }
        3 | 4 => {
            let charts = bc_manifold::covering_charts(&bc);
            let chart = charts[rng.gen_range(0..charts.len())];
            let c = bc_manifold::normalize_to_chart(&bc, chart).unwrap();
            let (coord, v) = if which == 3 {
                (Coordinate::ChartFirst(chart), c.first())
            } else {
                (Coordinate::ChartSecond(chart), c.second())
            };
            (coord, pm(v, 0.5), Problem::new(eq, c.to_bc()))
        }
        5 => {
            let (a, b) = (rng.gen_range(0.0..PI), rng.gen_range(0.2..PI - 0.2));
            let base = Problem::new(eq, bc_manifold::separated_matrix(a, b).unwrap());
            (Coordinate::Alpha, pm(a, 0.5), base)
        }
        6 => {
            let (a, b) = (rng.gen_range(0.0..PI), rng.gen_range(0.6..PI - 0.6));
            let base = Problem::new(eq, bc_manifold::separated_matrix(a, b).unwrap());
            (Coordinate::Beta, pm(b, 0.5), base)
        }
        _ => {
            let fnv = eq.f_at(n);
            (Coordinate::FN, scaled(fnv), Problem::new(eq, bc))
        }
    };
    Family::new(FamilyKind::Axis { base, coordinate }, domain)
}

fn monotonicity() -> Outcome {
    let mut rng = common::rng(7);
    let mut failures = Vec::new();
    let mut pairs = 0;
    let mut fn_sweeps = 0;
    let mut fn_change = 0.0f64;
    for i in 0..100 {
        let fam = random_sweep(&mut rng, i % 8);
        match branch_lab::check_monotonicity(&fam, 64) {
            Ok(r) => {
                pairs += r.pairs_checked;
                if r.coordinate == Coordinate::FN {
                    fn_sweeps += 1;
                    fn_change = fn_change.max(r.max_change);
                }
                if r.pairs_checked == 0 {
                    failures.push(format!("#{i} {:?}: nothing checked", r.coordinate));
                }
                if let Some(v) = r.violations.first() {
                    failures.push(format!(
                        "#{i} {:?} {:?}: {} violations, first {v:?}",
                        r.coordinate,
                        r.direction,
                        r.violations.len()
                    ));
                }
            }
            Err(e) => failures.push(format!("#{i}: {e}")),
        }
    }
    Outcome::new(
        &failures,
        format!("100 sweeps, {pairs} adjacent pairs; {fn_sweeps} f_N sweeps with max change {fn_change:.1e}"),
    )
}

fn asymptotic_patterns() -> Outcome {
    let mut failures = Vec::new();
    let catalog = branch_lab::asymptotic_catalog(11);
    for fx in &catalog {
        if let Err(e) = branch_lab::verify_asymptotic_theorem(fx) {
            failures.push(e.to_string().replace('\n', " / "));
        }
    }
    Outcome::new(&failures, format!("{} fixtures, no mismatches and nothing unclassified", catalog.len()))
}

fn memberships(p: &Problem<f64>) -> (bool, bool, String, bool) {
    (
        singular_sets::classify_product(p).in_set(),
        singular_sets::classify_bc_side(&p.equation, &p.bc).in_set(),
        singular_sets::classify_equation_side(&p.bc, &p.equation).membership.label(),
        singular_sets::theta_vanishes(p, &Tolerances::default()),
    )
}

fn twist_invariance(corpus: &[common::Entry]) -> Outcome {
    let mut rng = common::rng(9);
    let mut failures = Vec::new();
    for i in 0..500 {
        let p = &corpus[i % corpus.len()].problem;
        let t = bc_manifold::random_twist(&mut rng);
        let q = Problem::new(p.equation.clone(), p.bc.twisted(&t).unwrap());
        if spectral_engine::rank_r(p) != spectral_engine::rank_r(&q) {
            failures.push(format!("#{i}: r changed"));
        }
        match (spectral_engine::eigenvalues(p), spectral_engine::eigenvalues(&q)) {
            (Ok(a), Ok(b)) if a.values().len() == b.values().len() => {
                for (x, y) in a.values().iter().zip(b.values()) {
                    if (x - y).abs() > 1e-8 * (1.0 + x.abs()) {
                        failures.push(format!("#{i}: eigenvalue {x} became {y}"));
                    }
                }
            }
            (a, b) => failures.push(format!("#{i}: {:?} vs {:?}", a.map(|s| s.values()), b.map(|s| s.values()))),
        }
        if memberships(p) != memberships(&q) {
            failures.push(format!("#{i}: membership {:?} became {:?}", memberships(p), memberships(&q)));
        }
    }
    Outcome::new(&failures, "500 random complex twists".into())
}

fn set_consistency(corpus: &[common::Entry]) -> Outcome {
    let mut failures = Vec::new();
    let mut in_set = 0;
    for (i, e) in corpus.iter().enumerate() {
        let p = &e.problem;
        let prod = singular_sets::classify_product(p);
        let vanishes = singular_sets::theta_vanishes(p, &Tolerances::default());
        let short = spectral_engine::count_eigenvalues(p) < p.len();
        if prod.in_set() != vanishes || vanishes != short {
            failures.push(format!(
                "#{i} ({}): in set {}, θ vanishes {vanishes}, count short {short}",
                e.kind,
                prod.in_set()
            ));
        }
        let bc = singular_sets::classify_bc_side(&p.equation, &p.bc);
        if bc.in_set() != bc.in_canonical_set() {
            failures.push(format!(
                "#{i} ({}): chart union {} but canonical union {}",
                e.kind,
                bc.in_set(),
                bc.in_canonical_set()
            ));
        }
        if e.member && !prod.in_set() {
            failures.push(format!("#{i} ({}): constructed member not detected", e.kind));
        }
        in_set += prod.in_set() as usize;
    }
    Outcome::new(&failures, format!("{in_set} of {} problems on a singular set", corpus.len()))
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let corpus = common::corpus(CORPUS_SEED, 1000);
    let criteria: Vec<Criterion> = vec![
        ("ex1.1 reproduction", Box::new(ex11)),
        ("ex2.1 reproduction", Box::new(ex21)),
        ("ex3.1 reproduction", Box::new(ex31)),
        ("count law", Box::new(|| count_law(&corpus))),
        ("reality and oracle agreement", Box::new(|| reality_and_oracles(&corpus))),
        ("leading terms", Box::new(leading_terms)),
        ("monotonicity", Box::new(monotonicity)),
        ("asymptotic patterns", Box::new(asymptotic_patterns)),
        ("twist invariance", Box::new(|| twist_invariance(&corpus))),
        ("singular-set consistency", Box::new(|| set_consistency(&corpus))),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let out = run();
        failed += !out.pass as usize;
        println!("criterion {:>2} {}: {name}: {}", k + 1, if out.pass { "PASS" } else { "FAIL" }, out.detail);
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
