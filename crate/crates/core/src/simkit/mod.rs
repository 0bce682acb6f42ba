//! Mutant-selection simulation: a tester repeatedly picks a live mutant
//! from a strategy pool, picks one of its killing tests at random, and runs
//! it against every live killable mutant.

pub mod stats;

use crate::matrix::KillMatrix;
use crate::mutgen::{Mutant, MutantId};
use crate::relevance::RelevanceReport;
use crate::{Error, Percent, Result};
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    RandomAll,
    WithinChange,
    CommitRelevant,
    SubsumingCommitRelevant,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::RandomAll,
        Strategy::WithinChange,
        Strategy::CommitRelevant,
        Strategy::SubsumingCommitRelevant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::RandomAll => "random-all",
            Strategy::WithinChange => "within-change",
            Strategy::CommitRelevant => "commit-relevant",
            Strategy::SubsumingCommitRelevant => "subsuming-commit-relevant",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

fn score<T: Float>(killed: &BTreeSet<MutantId>, denominator: &BTreeSet<MutantId>) -> Result<T> {
    if denominator.is_empty() {
        return Err(Error::EmptyDenominator);
    }
    let hit = denominator.iter().filter(|m| killed.contains(m)).count();
    let (hit, total) = (T::from(hit).unwrap(), T::from(denominator.len()).unwrap());
    Ok(T::from(100).unwrap() * hit / total)
}

/// Relevant mutation score, in percent.
pub fn rms<T: Float>(killed: &BTreeSet<MutantId>, relevant_killable: &BTreeSet<MutantId>) -> Result<T> {
    score(killed, relevant_killable)
}

/// Subsuming relevant mutation score, in percent.
pub fn rms_star<T: Float>(killed: &BTreeSet<MutantId>, subsuming_relevant: &BTreeSet<MutantId>) -> Result<T> {
    score(killed, subsuming_relevant)
}

/// Executions charged for running one test: one per live killable mutant.
pub fn count_executions(live: &BTreeSet<MutantId>) -> u64 {
    live.len() as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub strategy: Strategy,
    pub max_picks: usize,
    pub repetitions: usize,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn new(strategy: Strategy, seed: u64) -> Self {
        SimulationConfig {
            strategy,
            max_picks: 20,
            repetitions: 100,
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PickRecord {
    pub pick: usize,
    pub rms: Percent,
    pub rms_star: Percent,
    /// Cumulative test executions up to and including this pick.
    pub executions: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MedianRecord {
    pub pick: usize,
    pub rms: Percent,
    pub rms_star: Percent,
    pub executions: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub config: SimulationConfig,
    pub pool_size: usize,
    /// `repetitions[r][p]` is pick `p + 1` of repetition `r`.
    pub repetitions: Vec<Vec<PickRecord>>,
    /// Medians across repetitions at picks 2, 4, …, up to `max_picks`.
    pub medians: Vec<MedianRecord>,
}

impl SimulationResult {
    /// CSV with columns `repetition,pick,rms,rms_star,executions`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(["repetition", "pick", "rms", "rms_star", "executions"])
            .map_err(err)?;
        for (r, picks) in self.repetitions.iter().enumerate() {
            for p in picks {
                w.write_record([
                    r.to_string(),
                    p.pick.to_string(),
                    p.rms.to_string(),
                    p.rms_star.to_string(),
                    p.executions.to_string(),
                ])
                .map_err(err)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }

    /// First pick at which RMS reaches 100 in repetition `r`.
    pub fn picks_to_full_rms(&self, r: usize) -> Option<usize> {
        self.repetitions[r].iter().find(|p| p.rms >= 100.0).map(|p| p.pick)
    }
}

/// Inputs shared by every strategy.
#[derive(Clone, Debug)]
pub struct SimulationInputs<'a> {
    pub kills: &'a KillMatrix,
    pub foms: &'a [Mutant],
    pub relevance: &'a RelevanceReport,
    pub subsuming_relevant: &'a BTreeSet<MutantId>,
}

impl SimulationInputs<'_> {
    pub fn killable(&self) -> BTreeSet<MutantId> {
        self.foms
            .iter()
            .map(|m| m.id)
            .filter(|m| self.kills.is_killable(*m))
            .collect()
    }

    pub fn relevant_killable(&self) -> BTreeSet<MutantId> {
        self.relevance
            .relevant()
            .into_iter()
            .filter(|m| self.kills.is_killable(*m))
            .collect()
    }

    pub fn pool(&self, strategy: Strategy) -> BTreeSet<MutantId> {
        let killable = self.killable();
        match strategy {
            Strategy::RandomAll => killable,
            Strategy::WithinChange => self
                .foms
                .iter()
                .filter(|m| m.is_on_change() && killable.contains(&m.id))
                .map(|m| m.id)
                .collect(),
            Strategy::CommitRelevant => self.relevant_killable(),
            Strategy::SubsumingCommitRelevant => self
                .subsuming_relevant
                .iter()
                .copied()
                .filter(|m| killable.contains(m))
                .collect(),
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn repetition(
    inputs: &SimulationInputs<'_>,
    pool: &[MutantId],
    relevant: &BTreeSet<MutantId>,
    subsuming: &BTreeSet<MutantId>,
    config: &SimulationConfig,
    index: usize,
) -> Result<Vec<PickRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let mut live = inputs.killable();
    let mut killed = BTreeSet::new();
    let mut executions = 0;
    let mut out = Vec::with_capacity(config.max_picks);
    for pick in 1..=config.max_picks {
        let candidates: Vec<MutantId> = pool.iter().copied().filter(|m| live.contains(m)).collect();
        if !candidates.is_empty() {
            let target = candidates[rng.gen_range(0..candidates.len())];
            let tests: Vec<&String> = inputs
                .kills
                .killing_tests(target)
                .expect("pool mutants have kill rows")
                .iter()
                .collect();
            let test = tests[rng.gen_range(0..tests.len())];
            executions += count_executions(&live);
            live.retain(|m| {
                let dies = inputs.kills.killing_tests(*m).is_some_and(|k| k.contains(test));
                if dies {
                    killed.insert(*m);
                }
                !dies
            });
        }
        out.push(PickRecord {
            pick,
            rms: rms(&killed, relevant)?,
            rms_star: rms_star(&killed, subsuming)?,
            executions,
        });
    }
    Ok(out)
}

/// Runs `config.repetitions` independent repetitions. Repetition `r` draws
/// from a ChaCha8 stream `r` keyed by `config.seed`, so results do not
/// depend on thread count.
pub fn simulate(inputs: &SimulationInputs<'_>, config: SimulationConfig) -> Result<SimulationResult> {
    let pool: Vec<MutantId> = inputs.pool(config.strategy).into_iter().collect();
    if pool.is_empty() {
        return Err(Error::EmptyPool(config.strategy));
    }
    let relevant = inputs.relevant_killable();
    let subsuming: BTreeSet<MutantId> = inputs
        .subsuming_relevant
        .iter()
        .copied()
        .filter(|m| inputs.kills.is_killable(*m))
        .collect();

    let repetitions = (0..config.repetitions)
        .into_par_iter()
        .map(|r| repetition(inputs, &pool, &relevant, &subsuming, &config, r))
        .collect::<Result<Vec<_>>>()?;

    let medians = (2..=config.max_picks)
        .step_by(2)
        .map(|pick| {
            let col = |f: &dyn Fn(&PickRecord) -> f64| median(repetitions.iter().map(|r| f(&r[pick - 1])).collect());
            MedianRecord {
                pick,
                rms: col(&|p| p.rms),
                rms_star: col(&|p| p.rms_star),
                executions: col(&|p| p.executions as f64),
            }
        })
        .collect();

    Ok(SimulationResult {
        config,
        pool_size: pool.len(),
        repetitions,
        medians,
    })
}
