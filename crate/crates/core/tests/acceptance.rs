//! Acceptance checks, one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the report reads top to bottom.

mod common;

use cam_core::matrix::RowId;
use cam_core::relevance::Witness;
use cam_core::{
    analyze_mutants, kendall_tau_a, simulate, spearman, Analysis, CapturedOutcome, HomId, KillMatrix, MutantId,
    Operator, PipelineConfig, SimulationConfig, SimulationInputs, SimulationResult, Strategy, SubsumptionResult,
};
use cam_minilang::Value;
use common::*;
use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

const EMPTY: &str = "test_read_from_exhausted_source#1";
const WORKED_LIMIT: Duration = Duration::from_secs(1);
const ORACLE_LIMIT: Duration = Duration::from_secs(300);
const ORACLE_FIXTURES: u64 = 25;
const STATS_TOL: f64 = 1e-12;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn ids(v: &[u32]) -> BTreeSet<MutantId> {
    v.iter().map(|&i| MutantId(i)).collect()
}

fn actual(a: &Analysis, row: RowId, aid: &str) -> Result<Value, String> {
    match a.bundle.matrix.cell(row, aid).ok_or(format!("{row} {aid}: no cell"))? {
        CapturedOutcome::Value { actual, .. } => Ok(actual.clone()),
        other => Err(format!("{row} {aid}: expected a value, got {other}")),
    }
}

fn random_config() -> PipelineConfig {
    PipelineConfig {
        step_budget: RANDOM_BUDGET,
        ..PipelineConfig::default()
    }
}

fn worked_example() -> Outcome {
    let start = Instant::now();
    let fx = bounded_reader();
    let ms = bounded_reader_mutants(&fx);
    let a = analyze_mutants(&fx.program, &fx.suite, &fx.diff, ms, &PipelineConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let r = &a.relevance;
    ensure!(r.relevant_on_change == ids(&[1]), "on-change relevant {:?}", r.relevant_on_change);
    ensure!(a.bundle.kills.is_killable(MutantId(1)), "M1 not killable");
    let want = Witness {
        y: MutantId(1),
        hom: HomId(2),
        assertion_id: EMPTY.to_string(),
    };
    ensure!(
        r.relevant_outside.len() == 1 && r.relevant_outside.get(&MutantId(3)) == Some(&want),
        "outside relevant {:?}",
        r.relevant_outside
    );
    ensure!(r.not_relevant == ids(&[2, 4]), "not relevant {:?}", r.not_relevant);
    let fom = |i| RowId::Fom(MutantId(i));
    let hom = |i| RowId::Hom(HomId(i));
    for (row, v) in [(fom(1), 0), (fom(2), 2), (fom(3), 1), (fom(4), 2), (hom(1), 2), (hom(2), -1), (hom(3), 2)] {
        let got = actual(&a, row, EMPTY)?;
        ensure!(got == Value::Int(v), "{row}: {got} != {v}");
    }
    ensure!(elapsed < WORKED_LIMIT, "took {elapsed:?}");
    Ok(format!("{elapsed:?}"))
}

fn simple_example() -> Outcome {
    let aid = "test_fun#1";
    let run = |variant: &str, x: Mutant, y: Mutant| {
        let fx = simple(variant);
        analyze_mutants(&fx.program, &fx.suite, &fx.diff, renumber(vec![x, y]), &PipelineConfig::default())
            .map_err(|e| e.to_string())
    };
    type Mutant = cam_core::Mutant;

    let fx = simple("left");
    let a = run(
        "left",
        pick(&fx.foms, 3, Operator::Crcr, "2", "3"),
        pick_last(&fx.foms, 7, Operator::Crcr, "1", "0"),
    )?;
    let vals = [
        actual(&a, RowId::Fom(MutantId(1)), aid)?,
        actual(&a, RowId::Fom(MutantId(2)), aid)?,
        actual(&a, RowId::Hom(HomId(1)), aid)?,
    ];
    ensure!(vals == [Value::Int(0), Value::Int(1), Value::Int(-1)], "left values {vals:?}");
    ensure!(a.relevance.relevant_outside.contains_key(&MutantId(1)), "left: X not relevant");

    let fx = simple("middle");
    let a = run(
        "middle",
        pick(&fx.foms, 3, Operator::Crcr, "2", "3"),
        pick_last(&fx.foms, 5, Operator::Crcr, "1", "0"),
    )?;
    ensure!(a.relevance.not_relevant.contains(&MutantId(1)), "middle: X relevant");

    let fx = simple("right");
    let x = fx
        .foms
        .iter()
        .find(|m| m.line() == 5 && m.operator == Operator::Crcr)
        .ok_or("right: no CRCR mutant on line 5")?
        .clone();
    let a = run("right", x, pick_last(&fx.foms, 8, Operator::Crcr, "1", "0"))?;
    ensure!(a.relevance.not_relevant.contains(&MutantId(1)), "right: X relevant");
    Ok("left relevant, middle and right not relevant".into())
}

fn subsumption_example() -> Outcome {
    let fx = bounded_reader();
    let ms = bounded_reader_mutants(&fx);
    let a = analyze_mutants(&fx.program, &fx.suite, &fx.diff, ms, &PipelineConfig::default()).map_err(|e| e.to_string())?;
    let s = &a.subsume;
    ensure!(
        s.commit_relevant.subsumes(MutantId(3), MutantId(1)) == Some(true),
        "M3 does not subsume M1"
    );
    ensure!(s.subsuming_commit_relevant == ids(&[3]), "subsuming {:?}", s.subsuming_commit_relevant);
    Ok("{M3}".into())
}

fn oracle_equivalence(fixtures: &[Fixture]) -> Outcome {
    let start = Instant::now();
    ensure!(fixtures.len() >= 20, "only {} fixtures", fixtures.len());
    for fx in fixtures {
        ensure!(fx.foms.len() <= 50 && fx.suite.tests.len() <= 10, "{}: fixture too large", fx.name);
        let a = analyze_mutants(&fx.program, &fx.suite, &fx.diff, fx.foms.clone(), &random_config())
            .map_err(|e| format!("{}: {e}", fx.name))?;
        let o = brute_force(fx, RANDOM_BUDGET);
        let outside: BTreeSet<MutantId> = a.relevance.relevant_outside.keys().copied().collect();
        ensure!(outside == o.relevant_outside, "{}: outside {outside:?} vs {:?}", fx.name, o.relevant_outside);
        ensure!(a.relevance.relevant_on_change == o.relevant_on_change, "{}: on-change differs", fx.name);
        ensure!(a.relevance.not_relevant == o.not_relevant, "{}: not-relevant differs", fx.name);
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < ORACLE_LIMIT, "took {elapsed:?}");
    Ok(format!("{} fixtures agree in {elapsed:?}", fixtures.len()))
}

fn covers_universe(kills: &KillMatrix, s: &SubsumptionResult) -> bool {
    let chosen: BTreeSet<&String> = s
        .minimal_classes
        .iter()
        .filter_map(|&c| s.classes[c].kill_set.iter().next())
        .collect();
    s.killable().iter().all(|&m| {
        kills
            .killing_tests(m)
            .map(|ts| ts.iter().any(|t| chosen.contains(t)))
            .unwrap_or(false)
    })
}

fn coverage_law(analyses: &[(String, Analysis)]) -> Outcome {
    for (name, a) in analyses {
        let kills = &a.bundle.kills;
        ensure!(covers_universe(kills, &a.subsume.all), "{name}: all-mutant universe not covered");
        ensure!(
            covers_universe(kills, &a.subsume.commit_relevant),
            "{name}: commit-relevant universe not covered"
        );
    }
    Ok(format!("{} fixtures", analyses.len()))
}

fn monotone(r: &SimulationResult) -> bool {
    r.repetitions.iter().all(|picks| {
        picks
            .windows(2)
            .all(|w| w[1].rms >= w[0].rms && w[1].rms_star >= w[0].rms_star && w[1].executions >= w[0].executions)
    })
}

fn simulation_properties(analyses: &[(String, Analysis)]) -> Outcome {
    let (mut runs, mut skipped) = (0, 0);
    for (name, a) in analyses {
        let inputs = SimulationInputs {
            kills: &a.bundle.kills,
            foms: &a.bundle.mutants,
            relevance: &a.relevance,
            subsuming_relevant: &a.subsume.subsuming_commit_relevant,
        };
        let relevant = inputs.relevant_killable();
        if relevant.is_empty() {
            skipped += 1;
            continue;
        }
        let picks = relevant.len().max(20);
        let cfg = |strategy| SimulationConfig {
            strategy,
            max_picks: picks,
            repetitions: 50,
            seed: 7,
        };
        let mut commit_relevant = None;
        for strategy in Strategy::ALL {
            if inputs.pool(strategy).is_empty() {
                continue;
            }
            let r = simulate(&inputs, cfg(strategy)).map_err(|e| format!("{name} {strategy}: {e}"))?;
            runs += 1;
            ensure!(monotone(&r), "{name} {strategy}: scores decrease");
            let csv = r.to_csv().map_err(|e| e.to_string())?;
            let again = simulate(&inputs, cfg(strategy)).map_err(|e| e.to_string())?;
            ensure!(again.to_csv().map_err(|e| e.to_string())? == csv, "{name} {strategy}: rerun differs");
            for threads in [1, 4] {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| e.to_string())?;
                let other = pool.install(|| simulate(&inputs, cfg(strategy))).map_err(|e| e.to_string())?;
                ensure!(
                    other.to_csv().map_err(|e| e.to_string())? == csv,
                    "{name} {strategy}: {threads} threads differ"
                );
            }
            match strategy {
                Strategy::CommitRelevant => {
                    for rep in 0..r.repetitions.len() {
                        let n = r.picks_to_full_rms(rep);
                        ensure!(
                            n.is_some_and(|n| n <= relevant.len()),
                            "{name}: rep {rep} needs {n:?} picks for {} relevant",
                            relevant.len()
                        );
                    }
                    commit_relevant = Some(r);
                }
                Strategy::SubsumingCommitRelevant => {
                    if let Some(cr) = &commit_relevant {
                        for rep in 0..r.repetitions.len() {
                            let (s, c) = (r.picks_to_full_rms(rep), cr.picks_to_full_rms(rep));
                            ensure!(s.is_some() && s <= c, "{name}: rep {rep} subsuming {s:?} after commit-relevant {c:?}");
                        }
                    }
                }
                _ => {}
            }
        }
    }
    Ok(format!("{runs} strategy runs, {skipped} fixtures without relevant mutants skipped"))
}

fn statistics() -> Outcome {
    let rho = spearman::<f64>(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 3.0, 2.0, 5.0, 4.0]).map_err(|e| e.to_string())?;
    ensure!((rho.coefficient - 0.8).abs() <= STATS_TOL, "spearman {}", rho.coefficient);
    let tau = kendall_tau_a::<f64>(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).map_err(|e| e.to_string())?;
    ensure!((tau.coefficient - 1.0 / 3.0).abs() <= STATS_TOL, "kendall {}", tau.coefficient);
    let xs: Vec<f64> = (1..=8).map(f64::from).collect();
    let rev: Vec<f64> = xs.iter().rev().copied().collect();
    for (ys, want) in [(&xs, 1.0), (&rev, -1.0)] {
        let s = spearman(&xs, ys).map_err(|e| e.to_string())?.coefficient;
        let k = kendall_tau_a(&xs, ys).map_err(|e| e.to_string())?.coefficient;
        ensure!(s == want && k == want, "ordering gives spearman {s}, kendall {k}");
    }
    Ok(format!("rho {}, tau {}", rho.coefficient, tau.coefficient))
}

fn non_reproducibility() -> Outcome {
    let readme = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../README.md"))
        .map_err(|e| format!("README.md: {e}"))?;
    ensure!(
        readme.contains("## What is not reproduced"),
        "README.md lacks the non-reproducibility section"
    );
    Ok("corpus-level figures are documented as not reproduced".into())
}

fn fixture_analyses(fixtures: &[Fixture]) -> Vec<(String, Analysis)> {
    let mut out = Vec::new();
    let br = bounded_reader();
    let ms = bounded_reader_mutants(&br);
    out.push((
        "bounded_reader".to_string(),
        analyze_mutants(&br.program, &br.suite, &br.diff, ms, &PipelineConfig::default()).unwrap(),
    ));
    for fx in fixtures {
        let a = analyze_mutants(&fx.program, &fx.suite, &fx.diff, fx.foms.clone(), &random_config()).unwrap();
        out.push((fx.name.clone(), a));
    }
    out
}

fn report(label: &str, check: impl FnOnce() -> Outcome) -> bool {
    let outcome = match catch_unwind(AssertUnwindSafe(check)) {
        Ok(o) => o,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    };
    match outcome {
        Ok(detail) => {
            println!("PASS {label}: {detail}");
            true
        }
        Err(why) => {
            println!("FAIL {label}: {why}");
            false
        }
    }
}

fn main() {
    let fixtures = random_fixtures(ORACLE_FIXTURES);
    let analyses = fixture_analyses(&fixtures);
    let results = [
        report("1 worked example", worked_example),
        report("2 simple example", simple_example),
        report("3 subsumption example", subsumption_example),
        report("4 oracle equivalence", || oracle_equivalence(&fixtures)),
        report("5 subsumption coverage law", || coverage_law(&analyses)),
        report("6 simulation properties", || simulation_properties(&analyses)),
        report("7 statistics", statistics),
        report("8 non-reproducibility statement", non_reproducibility),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
