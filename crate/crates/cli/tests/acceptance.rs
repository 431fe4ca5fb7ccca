//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are reported as failures but do
//! not fail the target; the README explains each. The process exits
//! nonzero when any other criterion fails. Set `HMPSBM_ACCEPTANCE=6,7`
//! to run a subset.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use hmpsbm::embed::{initial_state, InitConfig};
use hmpsbm::vb::{fit, FitConfig};
use hmpsbm::Hyperparameters;
use hmpsbm_cli::study::{run_study, s41_grid, simulate, summarize, ResultRecord, StudyId, StudySpec, SummaryRow};
use hmpsbm_oracle::suites::{conditional_suite, gradient_suite, monotonicity_suite, quadrature_suite};

const KNOWN_FAILURES: [u8; 4] = [1, 3, 4, 9];
const SEED: u64 = 1;
/// Repetitions of the two smaller studies and of the two larger ones.
const REPS_SMALL: usize = 50;
const REPS_LARGE: usize = 20;
/// An NMI counts as 1 when it is within rounding of it.
const ONE: f64 = 1.0 - 1e-9;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn study(id: StudyId, reps: usize) -> Vec<ResultRecord> {
    let records = run_study(&StudySpec::new(id, reps, SEED)).expect("study runs");
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        println!("    note: {failed} of {} {id} runs failed outright", records.len());
    }
    records
}

fn row<'a>(rows: &'a [SummaryRow], point: &str) -> &'a SummaryRow {
    rows.iter().find(|r| r.point == point).unwrap_or_else(|| panic!("no grid point {point}"))
}

fn describe(r: &SummaryRow) -> String {
    format!(
        "{}: global median {:.3} q025 {:.3} std {:.3}, layer median {:.3} std {:.4}",
        r.point, r.global.median, r.global.q025, r.global.std, r.layer.median, r.layer.std
    )
}

fn criterion_1(rows: &[SummaryRow]) -> Verdict {
    // published 2.5% quantiles for (2,3) and (5,5)
    let mut ok = true;
    let mut parts = Vec::new();
    for (point, published) in [("mw=2,mz=3", 0.966), ("mw=5,mz=5", 0.952)] {
        let r = row(rows, point);
        ok &= r.global.median >= ONE
            && r.global.q025 >= 0.95
            && r.global.q025 >= published - 0.02
            && r.layer.median >= ONE
            && r.layer.std <= 0.01;
        parts.push(describe(r));
    }
    verdict(ok, parts.join("; "))
}

fn criterion_2(rows: &[SummaryRow]) -> Verdict {
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| !(r.global.median >= ONE && r.layer.median >= ONE && r.layer.std <= 0.01))
        .map(describe)
        .collect();
    let detail = if bad.is_empty() { format!("all {} settings recovered", rows.len()) } else { bad.join("; ") };
    verdict(bad.is_empty(), detail)
}

fn criterion_3(records: &[ResultRecord], rows: &[SummaryRow]) -> Verdict {
    let runs: Vec<&ResultRecord> = records.iter().filter(|r| r.point == "mw=5,mz=5" && r.error.is_none()).collect();
    let matching = runs.iter().filter(|r| (r.occupied_global, r.occupied_layer) == (2, 3)).count();
    let share = matching as f64 / runs.len() as f64;
    let r = row(rows, "mw=5,mz=5");
    let modal = (r.modal_occupied_global, r.modal_occupied_layer);
    verdict(
        modal == (2, 3) && share >= 0.9,
        format!("{matching} of {} runs occupy (2, 3) groups, modal counts {modal:?}", runs.len()),
    )
}

fn criterion_4(rows: &[SummaryRow]) -> Verdict {
    let alphas = ["0.05", "0.15", "0.25", "0.33"];
    let informed: Vec<&SummaryRow> = alphas.iter().map(|a| row(rows, &format!("alpha={a},start=informed"))).collect();
    let uniform: Vec<&SummaryRow> = alphas.iter().map(|a| row(rows, &format!("alpha={a},start=uniform"))).collect();
    let monotone = informed.windows(2).all(|w| w[1].global.median <= w[0].global.median + 1e-12);
    let layers = informed.iter().all(|r| r.layer.median >= 0.95);
    let tighter = informed.iter().zip(&uniform).filter(|(i, u)| i.global.std <= u.global.std).count();
    let medians: Vec<String> = informed.iter().map(|r| format!("{:.3}", r.global.median)).collect();
    let stds: Vec<String> =
        informed.iter().zip(&uniform).map(|(i, u)| format!("{:.3}/{:.3}", i.global.std, u.global.std)).collect();
    verdict(
        monotone && layers && tighter >= 3,
        format!(
            "informed medians [{}] (non-increasing: {monotone}), layer medians >= 0.95: {layers}, \
             informed/uniform std [{}] tighter in {tighter} of 4",
            medians.join(", "),
            stds.join(", ")
        ),
    )
}

fn criterion_5(rows: &[SummaryRow]) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [100, 250] {
        let series: Vec<&SummaryRow> = [2, 5, 10, 20].iter().map(|l| row(rows, &format!("n={n},l={l}"))).collect();
        ok &= series.windows(2).all(|w| w[1].global.median >= w[0].global.median - 1e-12);
        if n == 250 {
            ok &= series.iter().all(|r| r.layer.median >= ONE);
        }
        let medians: Vec<String> =
            series.iter().map(|r| format!("{:.3}/{:.3}", r.global.median, r.layer.median)).collect();
        parts.push(format!("N={n} global/layer medians over L [{}]", medians.join(", ")));
    }
    verdict(ok, parts.join("; "))
}

fn criterion_6() -> Verdict {
    let e = gradient_suite(50, SEED);
    verdict(
        e.max() < 1e-4,
        format!("max relative error theta {:.2e}, sigma {:.2e}, log-Cholesky {:.2e}", e.theta, e.sigma, e.log_cholesky),
    )
}

fn criterion_7() -> Verdict {
    let e = conditional_suite(20, SEED);
    verdict(
        e.discrete <= 1e-10 && e.closed_form <= 1e-12,
        format!("z/w against enumeration {:.2e}, closed forms {:.2e}", e.discrete, e.closed_form),
    )
}

fn criterion_8() -> Verdict {
    let worst = monotonicity_suite(50, 3, SEED);
    let decrease = if worst < 0.0 { -worst } else { 0.0 };
    verdict(worst >= -1e-6, format!("largest decrease over 50 problems × 3 sweeps: {decrease:.2e}"))
}

fn criterion_9() -> Verdict {
    let check = quadrature_suite(100, 1_000_000, 3.0, SEED);
    // each comparison exceeds 3 standard errors with probability 0.0027
    let expected = 0.0027 * check.comparisons as f64;
    verdict(
        check.violations == 0,
        format!(
            "{} of {} comparisons beyond 3 SE (about {expected:.1} expected by chance), largest {:.2} SE",
            check.violations, check.comparisons, check.worst_z
        ),
    )
}

fn criterion_10() -> Verdict {
    let scenario = &s41_grid()[0];
    let data = simulate(scenario, 11).expect("simulation");
    let hyper = Hyperparameters::default_for(data.covariates.num_features());
    let mut config = FitConfig::new(scenario.truncation);
    config.max_iterations = scenario.iterations;
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let (init, _) =
                initial_state(&data.network, &data.covariates, &hyper, scenario.truncation, &InitConfig::default())
                    .unwrap();
            let (state, report) = fit(&data.network, &data.covariates, &hyper, &config, init).unwrap();
            // JSON floats round-trip exactly, so equal text means equal bits
            serde_json::to_string(&(state, report.elbo_trace)).unwrap()
        })
    };
    let first = run(1);
    let again = run(1) == first;
    let threaded = run(4) == first;
    verdict(again && threaded, format!("single-thread rerun identical: {again}; 4 threads identical: {threaded}"))
}

fn main() -> ExitCode {
    let selected: BTreeSet<u8> = match std::env::var("HMPSBM_ACCEPTANCE") {
        Ok(list) => list.split(',').filter_map(|s| s.trim().parse().ok()).collect(),
        Err(_) => (1..=10).collect(),
    };
    let known: BTreeSet<u8> = KNOWN_FAILURES.into_iter().collect();
    let started = Instant::now();
    let mut results: Vec<(u8, &str, Verdict)> = Vec::new();
    let wants = |ids: &[u8]| ids.iter().any(|i| selected.contains(i));

    if wants(&[1, 3]) {
        let records = study(StudyId::S41, REPS_SMALL);
        let rows = summarize(&records);
        if selected.contains(&1) {
            results.push((1, "s41 global and layer recovery", criterion_1(&rows)));
        }
        if selected.contains(&3) {
            results.push((3, "s41 group counts with (5, 5) truncation", criterion_3(&records, &rows)));
        }
    }
    if wants(&[2]) {
        results.push((2, "s42 recovery over the feature sweep", criterion_2(&summarize(&study(StudyId::S42, REPS_SMALL)))));
    }
    if wants(&[4]) {
        results.push((4, "s43 trend and informed start", criterion_4(&summarize(&study(StudyId::S43, REPS_LARGE)))));
    }
    if wants(&[5]) {
        results.push((5, "s44 trend in layers and nodes", criterion_5(&summarize(&study(StudyId::S44, REPS_LARGE)))));
    }
    let quick: [(u8, &str, fn() -> Verdict); 5] = [
        (6, "gradients against finite differences", criterion_6),
        (7, "conditionals against enumeration", criterion_7),
        (8, "closed-form steps never lower the ELBO", criterion_8),
        (9, "quadrature against Monte Carlo", criterion_9),
        (10, "determinism across runs and threads", criterion_10),
    ];
    for (id, name, check) in quick {
        if selected.contains(&id) {
            results.push((id, name, check()));
        }
    }
    results.sort_by_key(|r| r.0);

    let mut unexpected = Vec::new();
    for (id, name, v) in &results {
        let tag = match (v.passed, known.contains(id)) {
            (true, false) => "PASS",
            (true, true) => "PASS (listed as a known failure)",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected.push(*id);
                "FAIL"
            }
        };
        println!("criterion {id:>2} {tag}: {name}: {}", v.detail);
    }
    println!("acceptance finished in {:.0} s", started.elapsed().as_secs_f64());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
