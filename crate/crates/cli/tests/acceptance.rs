//! One pass/fail line per acceptance criterion. Runs as a plain binary so
//! every line is printed whether or not it passes.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::panic;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use heraldnet::analytic::{self, ClosedForms, FormulaSet, REFERENCE_CHORD_KM};
use heraldnet::experiments::{self, SWEEP_HEADER};
use heraldnet::heralding::{self, HeraldAnalysis};
use heraldnet::schemes::{self, BcOptions, Scheme, DEFAULT_ALPHA};
use heraldnet::{Complex64, Metrics, Mode, ModeRegistry, Monomial, PhotonicState, Role};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

const PARTIES: [usize; 3] = [2, 3, 4];
const ETAS: [f64; 4] = [1.0, 0.9, 0.7, 0.5];
const ORACLE_TOL: f64 = 1e-9;

type Check = std::result::Result<String, String>;

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Check); 8] = [
        (1, "oracle matches closed forms", criterion_1),
        (2, "BC heralding efficiency is 1", criterion_2),
        (3, "spot numbers", criterion_3),
        (4, "P_suc crossing party count", criterion_4),
        (5, "cross-over radius behaviour", criterion_5),
        (6, "asymptotic cross-over chord", criterion_6),
        (7, "property suites", criterion_7),
        (8, "sweep and cross-over data", criterion_8),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, name, check) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("[PASS] criterion {k}: {name}: {detail} [{:.1}s]", start.elapsed().as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] criterion {k}: {name}: {detail} [{:.1}s]", start.elapsed().as_secs_f64());
            }
        }
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn simulate(scheme: Scheme, n: usize, eta: f64) -> Metrics {
    heralding::simulate(&schemes::build(scheme, n, eta).unwrap()).unwrap()
}

fn metric(m: &Metrics, name: &str) -> f64 {
    match name {
        "p_suc" => m.p_suc,
        "p_hr" => m.p_hr,
        "h_eff" => m.h_eff,
        _ => unreachable!(),
    }
}

fn closed(scheme: Scheme, set: FormulaSet, name: &str, n: usize, eta: f64) -> f64 {
    metric(&ClosedForms::new(scheme, set).metrics(n, eta).unwrap(), name)
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let report = experiments::verify_suite(&PARTIES, &ETAS, FormulaSet::Tabulated, ORACLE_TOL).unwrap();
    let elapsed = start.elapsed().as_secs_f64();

    let mut groups: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for row in report.failures() {
        let g = groups.entry(format!("{} {}", row.scheme, row.metric)).or_default();
        g.0 += 1;
        g.1 = g.1.max(row.abs_diff.unwrap_or(f64::INFINITY));
    }
    let exact_ok = report
        .rows
        .iter()
        .filter(|r| {
            let want = closed(r.scheme, FormulaSet::Exact, r.metric, r.parties, r.eta);
            r.simulated.is_some_and(|s| (s - want).abs() <= ORACLE_TOL)
        })
        .count();
    let failing: Vec<String> = groups
        .iter()
        .map(|(k, (count, worst))| format!("{k} x{count} (max diff {worst:.3e})"))
        .collect();
    let detail = format!(
        "{}/{} rows within {ORACLE_TOL:e} in {elapsed:.1}s; failing: [{}]; oracle vs exact-count forms: {exact_ok}/{} rows agree",
        report.summary.passed,
        report.summary.total,
        failing.join(", "),
        report.rows.len(),
    );
    verdict(report.all_passed() && report.summary.total == 108, detail)
}

fn criterion_2() -> Check {
    let mut worst: f64 = 0.0;
    for n in PARTIES {
        for eta in [0.5, 0.7, 0.9, 1.0] {
            worst = worst.max((simulate(Scheme::Bc, n, eta).h_eff - 1.0).abs());
        }
    }
    verdict(worst <= 1e-12, format!("max |H_eff - 1| = {worst:.2e} over 12 cases"))
}

/// Half a unit in the last printed digit of `quoted`.
fn printed_precision(quoted: &str) -> f64 {
    let decimals = quoted.split_once('.').map_or(0, |(_, f)| f.len());
    0.5 * 10f64.powi(-(decimals as i32))
}

fn criterion_3() -> Check {
    let spots = [
        (Scheme::Sc, "p_suc", "0.0820125"),
        (Scheme::Sc, "h_eff", "0.688609"),
        (Scheme::Sd, "p_suc", "0.0538154"),
        (Scheme::Sd, "p_hr", "0.0849823"),
        (Scheme::Sd, "h_eff", "0.633240"),
    ];
    let (n, eta) = (2, 0.9);
    let mut all = true;
    let mut parts = Vec::new();
    for (scheme, name, quoted) in spots {
        let q: f64 = quoted.parse().unwrap();
        let oracle = metric(&simulate(scheme, n, eta), name);
        let formula = closed(scheme, FormulaSet::Tabulated, name, n, eta);
        let formula_ok = (formula - q).abs() <= printed_precision(quoted);
        let oracle_ok = (oracle - formula).abs() <= ORACLE_TOL;
        all &= formula_ok && oracle_ok;
        parts.push(format!(
            "{scheme} {name}={quoted}: closed form {formula:.9} ({}), oracle {oracle:.9} ({})",
            if formula_ok { "matches" } else { "differs" },
            if oracle_ok { "agrees" } else { "disagrees" },
        ));
    }
    verdict(all, parts.join("; "))
}

fn criterion_4() -> Check {
    let count = analytic::p_suc_crossing_party_count();
    let parties: Vec<usize> = (2..=13).collect();
    let radii = [1.0, 10.0, 50.0];
    let rows = experiments::sweep_vs_radius(&[Scheme::Sc, Scheme::Sd], &parties, &radii, DEFAULT_ALPHA, FormulaSet::Tabulated)
        .unwrap();
    let p = |s: Scheme, n: usize, r: f64| {
        rows.iter()
            .find(|x| x.scheme == s && x.parties == n && x.radius_km == r)
            .unwrap()
            .p_suc
    };
    let mut bad = Vec::new();
    for &n in &parties {
        for r in radii {
            let sc_wins = p(Scheme::Sc, n, r) > p(Scheme::Sd, n, r);
            if sc_wins != (n <= 12) {
                bad.push(format!("N={n} R={r}"));
            }
        }
    }
    verdict(
        count == 13 && bad.is_empty(),
        format!("crossing count {count}; SC > SD for N<=12 and SD > SC at N=13 at R in {{1,10,50}}; violations: {bad:?}"),
    )
}

fn heff_gap(n: usize, r: f64) -> f64 {
    let g = heraldnet::NetworkGeometry::new(n, r, DEFAULT_ALPHA).unwrap();
    let sc = schemes::eta_for_geometry(Scheme::Sc, &g);
    let sd = schemes::eta_for_geometry(Scheme::Sd, &g);
    ClosedForms::tabulated(Scheme::Sc).h_eff(n, sc).unwrap() - ClosedForms::tabulated(Scheme::Sd).h_eff(n, sd).unwrap()
}

fn criterion_5() -> Check {
    let mut problems = Vec::new();
    for n in 2..=6 {
        let r = analytic::crossover_radius(n, DEFAULT_ALPHA, 1e-12).unwrap();
        if r != 0.0 {
            problems.push(format!("R_c({n}) = {r}"));
        }
        let signs: Vec<bool> = [1.0, 10.0, 50.0].iter().map(|&r| heff_gap(n, r) > 0.0).collect();
        if signs.windows(2).any(|w| w[0] != w[1]) {
            problems.push(format!("H_eff ordering changes for N={n}"));
        }
    }
    let mut prev = 0.0;
    for n in 7..=30 {
        let r = analytic::crossover_radius(n, DEFAULT_ALPHA, 1e-12).unwrap();
        if !(r > prev) {
            problems.push(format!("R_c({n}) = {r} not above {prev}"));
        }
        if (heff_gap(n, 0.9 * r) > 0.0) == (heff_gap(n, 1.1 * r) > 0.0) {
            problems.push(format!("no H_eff flip across R_c({n})"));
        }
        prev = r;
    }
    let r7 = analytic::crossover_radius(7, DEFAULT_ALPHA, 1e-12).unwrap();
    let residual = analytic::crossover_residual(7, DEFAULT_ALPHA, r7).abs();
    if (r7 - 3.30).abs() > 0.05 || residual >= 1e-9 {
        problems.push(format!("R_c(7) = {r7}, residual {residual:e}"));
    }
    verdict(
        problems.is_empty(),
        format!("R_c = 0 for N<=6, strictly increasing 7..30, R_c(7) = {r7:.6} km (residual {residual:.1e}); problems: {problems:?}"),
    )
}

fn criterion_6() -> Check {
    let a = analytic::asymptotic_chord(DEFAULT_ALPHA).unwrap();
    let limit = LN_2 / (2.0 * DEFAULT_ALPHA);
    let close = (a.numeric_km - limit).abs() <= 0.1 && (a.analytic_km - 15.068).abs() < 5e-4;
    let out = Command::new(env!("CARGO_BIN_EXE_heraldnet"))
        .args(["crossover", "--parties", "7..8"])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    let reported = out.status.success() && text.contains("15.71") && text.contains("open question");
    verdict(
        close && reported,
        format!(
            "l_c(N=500) = {:.4} km vs ln2/(2a) = {limit:.4} km; reference {REFERENCE_CHORD_KM} km differs by {:.3} km, reported in crossover output: {reported}",
            a.numeric_km,
            REFERENCE_CHORD_KM - limit,
        ),
    )
}

fn source_modes(scheme: Scheme, reg: &ModeRegistry) -> Vec<Mode> {
    let letters: &[&str] = if scheme == Scheme::Bc { &["b", "c"] } else { &["a"] };
    reg.modes()
        .filter(|(_, i)| letters.iter().any(|l| i.label.starts_with(l)))
        .map(|(m, _)| m)
        .collect()
}

/// Sum of the probabilities of every detector occupation pattern, in one pass.
fn detector_completeness(state: &PhotonicState) -> f64 {
    let dets = state.registry().modes_with_role(Role::Detector);
    let mut patterns: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    for (m, a) in state.terms() {
        let key = dets.iter().map(|&d| m.count(d)).collect();
        *patterns.entry(key).or_default() += a.norm_sqr() * m.fock_weight();
    }
    patterns.values().sum()
}

fn metrics_close(a: &Metrics, b: &Metrics, tol: f64) -> bool {
    (a.p_suc - b.p_suc).abs() <= tol && (a.p_hr - b.p_hr).abs() <= tol && (a.h_eff - b.h_eff).abs() <= tol
}

fn criterion_7() -> Check {
    let mut problems = Vec::new();

    let mut stages = 0;
    for scheme in Scheme::ALL {
        for n in 2..=5 {
            for eta in [1.0, 0.9, 0.5, 0.0] {
                for stage in schemes::build(scheme, n, eta).unwrap().circuit.stages() {
                    stages += 1;
                    if !stage.is_isometry(1e-12) {
                        problems.push(format!("{scheme} N={n} stage {} not isometric", stage.name()));
                    }
                }
            }
        }
    }

    let mut runner = TestRunner::new(Config {
        cases: 100,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (
        prop::sample::select(Scheme::ALL.to_vec()),
        2usize..=3,
        0.0f64..=1.0,
        prop::collection::vec((prop::collection::vec(0usize..64, 0..=3), -1.0f64..1.0, -1.0f64..1.0), 1..6),
    );
    let norms = runner.run(&strategy, |(scheme, n, eta, raw)| {
        let setup = schemes::build(scheme, n, eta).unwrap();
        let reg: &Arc<ModeRegistry> = setup.registry();
        let modes = source_modes(scheme, reg);
        let s = PhotonicState::from_terms(
            reg,
            raw.iter().map(|(idx, re, im)| {
                (Monomial::from_modes(idx.iter().map(|&k| modes[k % modes.len()])), Complex64::new(*re, *im))
            }),
        )
        .unwrap();
        let out = setup.circuit.apply(&s).unwrap();
        prop_assert!((out.norm_squared() - s.norm_squared()).abs() <= 1e-10 * s.norm_squared().max(1.0));
        Ok(())
    });
    if let Err(e) = norms {
        problems.push(format!("norm preservation: {e}"));
    }

    let mut patterns = 0;
    for scheme in Scheme::ALL {
        for n in PARTIES {
            for eta in ETAS {
                let setup = schemes::build(scheme, n, eta).unwrap();
                let state = setup.evolve().unwrap();
                let total = detector_completeness(&state);
                if (total - 1.0).abs() > 1e-10 {
                    problems.push(format!("{scheme} N={n} eta={eta}: completeness {total}"));
                }
                let analysis = HeraldAnalysis::new(&state, &setup.spec).unwrap();
                for row in analysis.patterns() {
                    patterns += 1;
                    if !row.is_balanced(1e-12) {
                        problems.push(format!("{scheme} N={n} eta={eta} {}: |x| != |y|", row.pattern));
                    }
                }

                for shift in 1..n {
                    let relabel = schemes::cyclic_relabeling(scheme, setup.registry(), n, shift).unwrap();
                    let moved = HeraldAnalysis::new(&relabel.apply(&state).unwrap(), &setup.spec).unwrap();
                    let (a, b) = (analysis.metrics().unwrap(), moved.metrics().unwrap());
                    if !metrics_close(&a, &b, 1e-12) {
                        problems.push(format!("{scheme} N={n} eta={eta}: relabeling by {shift} changes metrics"));
                    }
                }
            }
        }
    }

    for n in 2..=5 {
        for eta in ETAS {
            let with = heralding::simulate(&schemes::build_bc(n, eta).unwrap()).unwrap();
            let opts = BcOptions { phase_plate: false, plate_party: 0 };
            let without = heralding::simulate(&schemes::build_bc_with(n, eta, opts).unwrap()).unwrap();
            if !metrics_close(&with, &without, 1e-12) {
                problems.push(format!("BC N={n} eta={eta}: plate toggle changes metrics"));
            }
        }
    }

    verdict(
        problems.is_empty(),
        format!(
            "{stages} stages isometric, 100 random norm checks, completeness and |x|=|y| over {patterns} patterns, relabeling and plate toggle invariant; problems: {problems:?}"
        ),
    )
}

fn run_cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_heraldnet")).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn criterion_8() -> Check {
    let mut problems = Vec::new();
    let sweep = run_cli(&["sweep"]);
    if run_cli(&["sweep"]) != sweep {
        problems.push("sweep output differs between runs".to_string());
    }
    let mut reader = csv::Reader::from_reader(sweep.as_slice());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    if header != SWEEP_HEADER {
        problems.push(format!("header {header:?}"));
    }
    // (scheme, N) -> [(R, p_suc, p_hr, h_eff)]
    let mut curves: BTreeMap<(String, usize), Vec<[f64; 4]>> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.unwrap();
        let f = |i: usize| rec[i].parse::<f64>().unwrap();
        let n: usize = rec[1].parse().unwrap();
        let h_th = n as f64 / (2.0 * n as f64 - 2.0);
        if (f(8) - h_th).abs() > 1e-11 {
            problems.push(format!("h_th {} for N={n}", &rec[8]));
        }
        curves.entry((rec[0].to_string(), n)).or_default().push([f(2), f(5), f(6), f(7)]);
    }
    for ((scheme, n), rows) in &curves {
        for w in rows.windows(2) {
            // plotted curves are P_suc and H_eff
            let ok = w[1][1] < w[0][1] && w[1][3] <= w[0][3] + 1e-12;
            if !ok {
                problems.push(format!("{scheme} N={n} not decreasing at R={}", w[1][0]));
                break;
            }
        }
    }
    let parties: Vec<usize> = curves.keys().map(|k| k.1).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let mut seen = Vec::new();
    for n in parties {
        let (sc, sd) = (&curves[&("sc".to_string(), n)], &curves[&("sd".to_string(), n)]);
        let flips: Vec<f64> = sc
            .windows(2)
            .zip(sd.windows(2))
            .filter(|(a, b)| a[0][0] > 0.0 && ((a[0][3] > b[0][3]) != (a[1][3] > b[1][3])))
            .map(|(a, _)| a[1][0])
            .collect();
        let rc = analytic::crossover_radius(n, DEFAULT_ALPHA, 1e-9).unwrap();
        let expected = n >= 7 && rc <= 50.0;
        match (expected, flips.as_slice()) {
            (true, [r]) if (r - rc).abs() <= 0.5 => seen.push(format!("N={n} near {r} km")),
            (false, []) => {}
            _ => problems.push(format!("N={n}: H_eff crossings at {flips:?}, R_c = {rc}")),
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let (first, second) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    run_cli(&["crossover", "--out", first.to_str().unwrap()]);
    run_cli(&["crossover", "--out", second.to_str().unwrap()]);
    let crossover = std::fs::read(&first).unwrap();
    if std::fs::read(&second).unwrap() != crossover {
        problems.push("crossover output differs between runs".to_string());
    }
    let mut reader = csv::Reader::from_reader(crossover.as_slice());
    let mut rows = 0;
    let mut prev = 0.0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        let n: usize = rec[0].parse().unwrap();
        let r: f64 = rec[1].parse().unwrap();
        let ok = if n <= 6 { r == 0.0 } else { r > prev };
        if !ok {
            problems.push(format!("crossover row N={n} R_c={r}"));
        }
        prev = r;
        rows += 1;
    }
    if rows != 29 {
        problems.push(format!("crossover has {rows} rows"));
    }

    verdict(
        problems.is_empty(),
        format!(
            "{} P_suc and H_eff sweep curves monotone, h_th column exact, cross-overs visible at [{}], {rows} crossover rows, both outputs byte-identical on re-run; problems: {problems:?}",
            curves.len(),
            seen.join(", "),
        ),
    )
}
