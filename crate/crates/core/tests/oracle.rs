mod common;

use cam_core::{analyze_mutants, pipeline::Analysis, MutantId, PipelineConfig};
use common::*;
use std::collections::BTreeSet;

fn config() -> PipelineConfig {
    PipelineConfig {
        step_budget: RANDOM_BUDGET,
        ..PipelineConfig::default()
    }
}

fn analyse(fx: &Fixture) -> Analysis {
    analyze_mutants(&fx.program, &fx.suite, &fx.diff, fx.foms.clone(), &config()).unwrap()
}

#[test]
fn generated_fixtures_are_well_formed() {
    for fx in random_fixtures(25) {
        assert!(fx.foms.len() <= 50 && !fx.foms.is_empty(), "{}", fx.name);
        assert!((1..=10).contains(&fx.suite.tests.len()), "{}", fx.name);
        assert!(fx.foms.iter().any(|m| m.is_on_change()), "{}", fx.name);
    }
}

#[test]
fn detect_relevant_matches_brute_force() {
    let mut outside_relevant = 0;
    for fx in random_fixtures(25) {
        let a = analyse(&fx);
        let o = brute_force(&fx, RANDOM_BUDGET);
        let r = &a.relevance;
        let outside: BTreeSet<MutantId> = r.relevant_outside.keys().copied().collect();
        assert_eq!(outside, o.relevant_outside, "{}", fx.name);
        assert_eq!(r.relevant_on_change, o.relevant_on_change, "{}", fx.name);
        assert_eq!(r.not_relevant, o.not_relevant, "{}", fx.name);
        outside_relevant += outside.len();
    }
    // the fixtures must exercise the interesting branch
    assert!(outside_relevant > 0);
}

#[test]
fn witnesses_recheck() {
    for fx in random_fixtures(10) {
        let a = analyse(&fx);
        for (x, w) in &a.relevance.relevant_outside {
            assert!(cam_core::check_witness(&a.bundle.matrix, *x, w.y, &w.assertion_id).unwrap());
        }
    }
}

#[test]
fn comparison_count_bounded() {
    for fx in random_fixtures(10) {
        let a = analyse(&fx);
        let max_asserts = fx.suite.tests.iter().map(|t| t.sites.len()).max().unwrap() as u64;
        let bound = a.bundle.matrix.pairs.len() as u64 * fx.suite.tests.len() as u64 * max_asserts;
        assert!(a.relevance.comparisons <= bound, "{}", fx.name);
    }
}

#[test]
fn adding_tests_never_shrinks_relevance() {
    for seed in 0..8 {
        let full = random_fixture(2000 + seed, 40, 8);
        if full.suite.tests.len() < 2 {
            continue;
        }
        // drop the last test function from the suite text
        let cut = full.tests_source.rfind("fn test_").unwrap();
        let fewer = Fixture::new(&full.name, "gen.ml", full.source.clone(), full.tests_source[..cut].to_string(), full.diff_text.clone());
        let small = analyze_mutants(&fewer.program, &fewer.suite, &fewer.diff, full.foms.clone(), &config()).unwrap();
        let big = analyse(&full);
        for x in small.relevance.relevant_outside.keys() {
            assert!(big.relevance.relevant_outside.contains_key(x), "{} {x}", full.name);
        }
    }
}

#[test]
fn killing_tests_cover_their_mutant() {
    for fx in random_fixtures(10) {
        let a = analyse(&fx);
        for m in &fx.foms {
            let kills = a.bundle.kills.killing_tests(m.id).unwrap();
            let cover = cam_core::covering_tests(&a.bundle.matrix, m.id).unwrap();
            assert!(kills.is_subset(cover), "{} {}", fx.name, m.id);
        }
    }
}
