//! Acceptance suite. One PASS/FAIL line per criterion; exits nonzero if any fails.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quasispec::contfrac::{golden_convergents, golden_with_denominator, GOLDEN};
use quasispec::interface::{interface_study, InterfaceSettings, InterfaceStudy};
use quasispec::numerics::{SpectrumSample, Window};
use quasispec::potentials::{
    laminate_coefficient, CoefficientField, Laminate, ProblemKind, QuasiperiodicProblem, Surface, Tile,
};
use quasispec::supercell::{
    band_diagram, band_diagram_for, convergence_study, extract_gaps, shared_gaps, BandSettings, GapSet,
};
use quasispec::superspace::{
    fd_alpha_sweep, pollution_report, pollution_report_counts, LiftedProblem, PlaneWaveProblem,
};
use quasispec::tiling::fibonacci_word;
use quasispec::transfermap::{merge_certified, trace_scan, trace_sequence, word_transfer};

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(results: &mut Vec<(usize, bool)>, id: usize, name: &str, run: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let o = run();
    println!(
        "{} criterion {id:>2} {name}: {} [{:.1}s]",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        start.elapsed().as_secs_f64()
    );
    results.push((id, o.pass));
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn nearest(study: &InterfaceStudy, target: f64) -> Option<f64> {
    study
        .findings
        .iter()
        .map(|f| f.mode.eigenvalue)
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
}

fn interface_run(problem: &QuasiperiodicProblem, window: Window) -> (InterfaceStudy, f64) {
    let settings = InterfaceSettings {
        window: Some(window),
        ..InterfaceSettings::default()
    };
    let start = Instant::now();
    let study = interface_study(problem, &settings).expect("interface study");
    (study, start.elapsed().as_secs_f64())
}

fn eigenvalue_criterion(study: &InterfaceStudy, targets: &[f64], extra: String) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for &t in targets {
        match nearest(study, t) {
            Some(e) => {
                let r = rel(e, t);
                pass &= r <= 0.01;
                parts.push(format!("{e:.5} vs {t} (rel {r:.2e})"));
            }
            None => {
                pass = false;
                parts.push(format!("no mode near {t}"));
            }
        }
    }
    let s = InterfaceSettings::default();
    pass &= s.h <= 0.005 && s.half_width >= 34.0;
    parts.push(format!("h {} L {}", s.h, s.half_width));
    parts.push(extra);
    Outcome {
        pass,
        detail: parts.join(", "),
    }
}

fn show(gaps: &GapSet) -> String {
    let g: Vec<String> = gaps
        .gaps
        .iter()
        .map(|g| format!("[{:.3}, {:.3}]", g.lo, g.hi))
        .collect();
    g.join(" ")
}

fn golden_tiles() -> BTreeMap<char, Tile> {
    Laminate::default_tiles()
}

fn main() {
    let mut results = Vec::new();
    let schrodinger = QuasiperiodicProblem::sin2d_schrodinger(GOLDEN);
    let generalized = QuasiperiodicProblem::sin2d_generalized(GOLDEN);

    let (study_s, secs_s) = interface_run(&schrodinger, Window::new(8.0, 30.0).unwrap());
    report(&mut results, 1, "interface eigenvalues", || {
        let mut o = eigenvalue_criterion(&study_s, &[9.9358, 25.8574], format!("runtime {secs_s:.1}s"));
        o.pass &= secs_s <= 120.0;
        o
    });

    let (study_g, _) = interface_run(&generalized, Window::new(2.0, 10.0).unwrap());
    report(&mut results, 2, "generalized interface eigenvalues", || {
        eigenvalue_criterion(&study_g, &[3.2403, 8.1634], String::from("window [2, 10]"))
    });

    report(&mut results, 3, "superspace FD spectrum at h = 0.02", || {
        let p = LiftedProblem::new(schrodinger.clone(), 0.02, 0.0, 0.0).unwrap();
        let alphas: Vec<f64> = (0..8).map(|j| j as f64 * TAU / 8.0).collect();
        let spectra = fd_alpha_sweep(&p, &alphas, Window::new(0.0, 8.0).unwrap()).unwrap();
        let all = SpectrumSample::union(&spectra);
        let (nx, ny) = p.mesh();
        let d1 = all.distance_to(0.4770);
        let d2 = all.distance_to(7.2844);
        Outcome {
            pass: d1 <= 0.05 && d2 <= 0.05,
            detail: format!("mesh {nx}x{ny}, 8 alpha samples, distances {d1:.4} and {d2:.4} (tol 0.05)"),
        }
    });

    report(&mut results, 4, "free-operator dispersion", || {
        let mut runner = TestRunner::new(Config {
            cases: 12,
            failure_persistence: None,
            ..Config::default()
        });
        let worst = std::cell::Cell::new(0.0f64);
        let strategy = (1usize..=8, 4usize..=12);
        let r = runner.run(&strategy, |(period, alpha_count)| {
            let coef = CoefficientField::new(Surface::zero(), GOLDEN).as_slice();
            let settings = BandSettings {
                alpha_count,
                n_bands: None,
                points_per_unit: 200,
                window: Window::new(0.0, 100.0).unwrap(),
            };
            let t = period as f64;
            let bd = band_diagram_for(&coef, ProblemKind::Schrodinger, t, &settings).unwrap();
            for (a, row) in bd.alphas.iter().zip(&bd.bands) {
                let m_max = (t * 12.0) as i64 + 2;
                let mut exact: Vec<f64> = (-m_max..=m_max).map(|m| (a + TAU * m as f64 / t).powi(2)).collect();
                exact.sort_by(f64::total_cmp);
                for (got, want) in row.iter().zip(&exact) {
                    if *want > 100.0 {
                        break;
                    }
                    let err = if *want > 1e-9 { rel(*got, *want) } else { got.abs() };
                    worst.set(worst.get().max(err));
                    prop_assert!(err <= 1e-3, "T {t} alpha {a}: {got} vs {want}");
                }
            }
            Ok(())
        });
        Outcome {
            pass: r.is_ok(),
            detail: format!(
                "12 random (T, alpha grid) cases, worst relative error {:.2e} (tol 1e-3)",
                worst.get()
            ),
        }
    });

    report(&mut results, 5, "trace-map equivalence", || {
        let tiles = golden_tiles();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let words: Vec<String> = (1..=12).map(|n| fibonacci_word(n).unwrap().letters).collect();
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let omega: f64 = rng.gen_range(0.0..8.0);
            let ts = trace_sequence(&tiles, omega, 12).unwrap();
            let direct: Vec<f64> = words
                .iter()
                .map(|w| word_transfer(&tiles, w, omega).unwrap().trace())
                .collect();
            let scale = direct.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            for n in 1..=12 {
                worst = worst.max((ts.x(n) - direct[n - 1]).abs() / scale);
            }
        }
        Outcome {
            pass: worst <= 1e-6,
            detail: format!("200 frequencies, n <= 12, worst scaled deviation {worst:.2e} (tol 1e-6)"),
        }
    });

    report(&mut results, 6, "approximant convergence trend", || {
        let levels: Vec<_> = [2, 5, 13, 34]
            .iter()
            .map(|&q| golden_with_denominator(q).unwrap())
            .collect();
        let window = Window::new(0.0, 20.0).unwrap();
        let table = convergence_study(&schrodinger, &levels, window, &BandSettings::default()).unwrap();
        let d: Vec<String> = table.rows.iter().map(|r| format!("{:.5}", r.distance)).collect();
        let slope = table.slope.unwrap_or(f64::NAN);
        Outcome {
            pass: table.strictly_decreasing() && slope <= -0.8,
            detail: format!(
                "distances [{}], strictly decreasing {}, slope {slope:.3} (need <= -0.8)",
                d.join(", "),
                table.strictly_decreasing()
            ),
        }
    });

    report(&mut results, 7, "super-band-gap consistency", || {
        let tiles = golden_tiles();
        let window = Window::new(0.05, 6.0).unwrap();
        let samples = trace_scan(&tiles, window, 2000, 1e-3, 40).unwrap();
        let certs = merge_certified(&samples);
        let settings = BandSettings {
            alpha_count: 64,
            n_bands: None,
            points_per_unit: 200,
            window: Window::new(0.0, 37.0).unwrap(),
        };
        let mut diagrams = BTreeMap::new();
        let mut words = BTreeMap::new();
        for g in 1..=9 {
            let word = fibonacci_word(g).unwrap();
            let lam = Laminate::new(tiles.clone(), word.clone()).unwrap();
            let coef = laminate_coefficient(&lam, true).unwrap();
            let bd = band_diagram_for(&coef, ProblemKind::WaveSpeed, lam.total_length().unwrap(), &settings).unwrap();
            diagrams.insert(g, bd);
            words.insert(g, word.letters);
        }
        let ranges: BTreeMap<usize, Vec<(f64, f64, f64, f64)>> = diagrams
            .iter()
            .map(|(&g, bd)| {
                let r = bd
                    .band_ranges()
                    .into_iter()
                    .map(|(a, b)| (a, b, bd.discretization_error(a), bd.discretization_error(b)));
                (g, r.collect())
            })
            .collect();
        let overlaps = |g: usize, lo: f64, hi: f64| {
            ranges[&g]
                .iter()
                .find(|&&(a, b, ea, eb)| a + ea < hi && b - eb > lo)
                .copied()
        };
        let (mut interval_checks, mut point_checks) = (0usize, 0usize);
        let mut violations = Vec::new();
        for c in &certs {
            for g in c.index.max(1)..=9 {
                interval_checks += 1;
                let (lo, hi) = c.lambda_range();
                if let Some((a, b, ..)) = overlaps(g, lo, hi) {
                    violations.push(format!(
                        "omega [{:.4}, {:.4}] gen {g} band [{a:.4}, {b:.4}]",
                        c.omega_lo, c.omega_hi
                    ));
                }
            }
        }
        for s in &samples {
            let Some(c) = s.certificate else { continue };
            let omega = s.traces.omega;
            for g in c.index.max(1)..=9 {
                point_checks += 1;
                let lambda = omega * omega;
                if let Some((a, b, ..)) = overlaps(g, lambda, lambda) {
                    violations.push(format!("omega {omega:.4} gen {g} band [{a:.4}, {b:.4}]"));
                }
                let tr = word_transfer(&tiles, &words[&g], omega).unwrap().trace();
                if tr.abs() <= 2.0 {
                    violations.push(format!("omega {omega:.4} gen {g} exact |trace| {:.4}", tr.abs()));
                }
            }
        }
        Outcome {
            pass: !certs.is_empty() && violations.is_empty(),
            detail: format!(
                "{} certified intervals, {interval_checks} interval and {point_checks} sample checks at word lengths <= 55, {} violations{}",
                certs.len(),
                violations.len(),
                violations.first().map(|v| format!(", first: {v}")).unwrap_or_default()
            ),
        }
    });

    report(&mut results, 8, "plane-wave pollution", || {
        let levels: Vec<_> = [13, 21, 34]
            .iter()
            .map(|&q| golden_with_denominator(q).unwrap())
            .collect();
        let window = Window::new(0.0, 30.0).unwrap();
        let gaps_at = |ppu: usize| -> GapSet {
            let settings = BandSettings {
                points_per_unit: ppu,
                window,
                ..BandSettings::default()
            };
            let sets: Vec<GapSet> = levels
                .iter()
                .map(|a| extract_gaps(&band_diagram(&schrodinger, a, &settings).unwrap(), window, None))
                .collect();
            shared_gaps(&sets, 0.1)
        };
        let alphas: Vec<f64> = (0..20).map(|j| j as f64 * TAU / 20.0).collect();
        let margin = 1e-3;
        let fd_gaps = gaps_at(50);
        let lifted = LiftedProblem::new(schrodinger.clone(), 0.02, 0.0, 0.0).unwrap();
        let fd = SpectrumSample::union(&fd_alpha_sweep(&lifted, &alphas, window).unwrap());
        let empty = SpectrumSample::new(Vec::new());
        let fd_counts: Vec<usize> = pollution_report(&fd, &empty, &fd_gaps, margin)
            .iter()
            .map(|r| r.fd)
            .collect();
        let pwe_gaps = gaps_at(200);
        let pw = PlaneWaveProblem::new(schrodinger.clone(), 50, 0.0, 0.0).unwrap();
        let pwe_counts: Vec<usize> = pollution_report_counts(&empty, &pw, &alphas, &pwe_gaps, margin)
            .unwrap()
            .iter()
            .map(|r| r.pwe)
            .collect();
        Outcome {
            pass: !fd_gaps.is_empty() && fd_counts.iter().all(|&c| c == 0) && pwe_counts.iter().any(|&c| c > 0),
            detail: format!(
                "20 alpha samples, margin 1e-3; FD h=0.02 counts {fd_counts:?} in {}; PWE N=50 counts {pwe_counts:?} in {}",
                show(&fd_gaps),
                show(&pwe_gaps)
            ),
        }
    });

    report(&mut results, 9, "golden continued fraction", || {
        let c = golden_convergents(17).unwrap();
        let has = |p: i64, q: i64| c.iter().any(|a| a.p == p && a.q == q);
        let listed = has(3, 2) && has(8, 5) && has(21, 13);
        let theta = (1.0 + 5.0f64.sqrt()) / 2.0;
        let mut det_ok = true;
        let mut bound_ok = true;
        for k in 0..=15 {
            if k > 0 {
                let d = c[k].p * c[k - 1].q - c[k - 1].p * c[k].q;
                det_ok &= d == if k % 2 == 1 { 1 } else { -1 };
            }
            bound_ok &= (theta - c[k].value()).abs() < 1.0 / (c[k].q as f64 * c[k + 1].q as f64);
        }
        Outcome {
            pass: listed && det_ok && bound_ok,
            detail: format!(
                "3/2, 8/5, 21/13 present {listed}; determinant identity {det_ok}; error bound {bound_ok} (k <= 15)"
            ),
        }
    });

    report(&mut results, 10, "decay-rate agreement", || {
        let mut pass = true;
        let mut parts = Vec::new();
        let mut count = 0;
        for study in [&study_s, &study_g] {
            for f in &study.findings {
                count += 1;
                match f.relative_error {
                    Some(r) => {
                        pass &= r <= 0.15;
                        parts.push(format!("{:.4}: {r:.3}", f.mode.eigenvalue));
                    }
                    None => {
                        pass = false;
                        parts.push(format!("{:.4}: no estimate", f.mode.eigenvalue));
                    }
                }
            }
        }
        Outcome {
            pass: pass && count > 0,
            detail: format!("relative deviations [{}] (tol 0.15)", parts.join(", ")),
        }
    });

    let failed: Vec<usize> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria pass{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(", failing {failed:?}")
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
