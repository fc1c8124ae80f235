//! Verification suites: each one drives fresh simulations against an
//! oracle-derived claim and reports measured statistics as JSON.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use regnet::grammar::{apply_r2, apply_r4};
use regnet::{
    chi_square_quantile, chi_square_uniform, enumerate_labeled_regular,
    estimate_transition_symmetry, feasible_m_set, random_connected, state_key, topology, Engine,
    ExperimentConfig, GrammarVariant, Histogram, KeyKind, LabeledGraph, NodeId, StateKey,
    SymmetryEstimate,
};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;

use crate::{CliError, VerifySuite};

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub details: Value,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub suite: &'static str,
    pub params: Value,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl Report {
    fn new(suite: &'static str, params: Value, checks: Vec<Check>) -> Report {
        let pass = checks.iter().all(|c| c.pass);
        Report {
            suite,
            params,
            pass,
            checks,
        }
    }
}

pub fn run_suite(suite: &VerifySuite) -> Result<Report, CliError> {
    match *suite {
        VerifySuite::Uniformity {
            n,
            m,
            epsilon,
            burn_in,
            stride,
            samples,
            quantile,
            seed,
        } => uniformity(n, m, epsilon, burn_in, stride, samples, quantile, seed),
        VerifySuite::Symmetry {
            trials,
            epsilon,
            beta,
            seed,
        } => symmetry(trials, epsilon, beta, seed),
        VerifySuite::Ledger {
            n,
            e,
            steps,
            epsilon,
            beta,
            seed,
        } => ledger(n, e, steps, epsilon, beta, seed),
        VerifySuite::Connectivity {
            runs,
            n,
            e_min,
            e_max,
            steps,
            epsilon,
            beta,
            seed,
        } => connectivity(runs, n, e_min, e_max, steps, epsilon, beta, seed),
        VerifySuite::Absorption {
            runs,
            n,
            e,
            budget,
            post_rounds,
            epsilon,
            beta,
            seed,
        } => absorption(runs, n, e, budget, post_rounds, epsilon, beta, seed),
    }
}

fn silent_config(
    n: usize,
    grammar: GrammarVariant,
    epsilon: f64,
    beta: f64,
    seed: u64,
) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(n, grammar, epsilon, beta, seed);
    config.alpha_every = None;
    config
}

#[allow(clippy::too_many_arguments)]
fn uniformity(
    n: usize,
    m: usize,
    epsilon: f64,
    burn_in: u64,
    stride: u64,
    samples: usize,
    quantile: f64,
    seed: u64,
) -> Result<Report, CliError> {
    if stride == 0 {
        return Err(CliError::Usage("--stride must be positive".into()));
    }
    let class =
        enumerate_labeled_regular(n, m, true).map_err(|e| CliError::Usage(e.to_string()))?;
    if class.is_empty() {
        return Err(CliError::Usage(format!(
            "no connected {m}-regular graphs on {n} nodes"
        )));
    }
    let start_edges: Vec<(usize, usize)> = class[0]
        .iter()
        .map(|e| (e.a().0 as usize, e.b().0 as usize))
        .collect();
    let start = LabeledGraph::from_edges(n, &start_edges).expect("enumerated graphs are simple");
    let config = silent_config(n, GrammarVariant::PhiRR, epsilon, 0.5, seed);
    let mut engine = Engine::new(start, config)?;
    for _ in 0..burn_in {
        engine.advance();
    }
    let mut hist = Histogram::default();
    for _ in 0..samples {
        for _ in 0..stride {
            engine.advance();
        }
        hist.record(
            state_key(engine.graph(), KeyKind::Labeled)
                .map_err(|e| CliError::Runtime(e.to_string()))?,
        );
    }
    let expected: Vec<StateKey> = class.into_iter().map(StateKey::Labeled).collect();
    let test = chi_square_uniform(&hist, &expected).map_err(|e| CliError::Usage(e.to_string()))?;
    let bound = chi_square_quantile(test.dof, quantile);
    let histogram: Vec<u64> = expected.iter().map(|k| hist.count(k)).collect();
    Ok(Report::new(
        "uniformity",
        json!({
            "n": n, "m": m, "epsilon": epsilon, "burn_in": burn_in,
            "stride": stride, "samples": samples, "quantile": quantile, "seed": seed,
        }),
        vec![Check {
            name: "chi_square_below_quantile",
            pass: test.statistic < bound,
            details: json!({
                "buckets": expected.len(),
                "support": hist.support(),
                "statistic": test.statistic,
                "dof": test.dof,
                "bound": bound,
                "histogram": histogram,
            }),
        }],
    ))
}

fn symmetry_check(
    name: &'static str,
    from: &LabeledGraph,
    to: &LabeledGraph,
    trials: u64,
    config: &ExperimentConfig,
) -> Result<Check, CliError> {
    let est: SymmetryEstimate = estimate_transition_symmetry(from, to, trials, config)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(Check {
        name,
        pass: est.symmetric_within(3.0),
        details: json!({
            "trials": est.trials,
            "p_forward": est.p_forward,
            "p_backward": est.p_backward,
            "stderr_forward": est.stderr_forward,
            "stderr_backward": est.stderr_backward,
        }),
    })
}

fn symmetry(trials: u64, epsilon: f64, beta: f64, seed: u64) -> Result<Report, CliError> {
    let config = silent_config(6, GrammarVariant::PhiStar, epsilon, beta, seed);

    let prism = topology::prism();
    let mut prism_swapped = prism.clone();
    apply_r2(
        &mut prism_swapped,
        NodeId(0),
        NodeId(1),
        NodeId(3),
        NodeId(4),
    )
    .expect("fixed instance applies");

    let k33 = topology::complete_bipartite_3_3();
    let mut k33_swapped = k33.clone();
    apply_r2(&mut k33_swapped, NodeId(0), NodeId(3), NodeId(4), NodeId(1))
        .expect("fixed instance applies");

    let mut flagged = topology::prism();
    flagged.set_flag(NodeId(0), 1).expect("node exists");
    let mut flag_swapped = flagged.clone();
    apply_r4(&mut flag_swapped, NodeId(0), NodeId(1)).expect("fixed instance applies");

    let checks = vec![
        symmetry_check("prism_swap", &prism, &prism_swapped, trials, &config)?,
        symmetry_check("k33_swap", &k33, &k33_swapped, trials, &config)?,
        symmetry_check("prism_flag_swap", &flagged, &flag_swapped, trials, &config)?,
    ];
    Ok(Report::new(
        "symmetry",
        json!({"trials": trials, "epsilon": epsilon, "beta": beta, "seed": seed, "bound_stderrs": 3.0}),
        checks,
    ))
}

fn ledger(
    n: usize,
    e: usize,
    steps: u64,
    epsilon: f64,
    beta: f64,
    seed: u64,
) -> Result<Report, CliError> {
    let g0 = random_connected(n, e, seed)?;
    let e0 = g0.edge_count();
    let w0 = g0.flag_sum();
    let config = silent_config(n, GrammarVariant::PhiStar, epsilon, beta, seed);
    let mut engine = Engine::new(g0, config)?;
    let mut max_abs_deviation: i64 = 0;
    let mut bound_violations: u64 = 0;
    for _ in 0..steps {
        engine.advance();
        let g = engine.graph();
        let deviation = (g.edge_count() as i64 - e0 as i64) - (g.flag_sum() as i64 - w0 as i64);
        max_abs_deviation = max_abs_deviation.max(deviation.abs());
        if g.edge_count() < e0 || g.edge_count() > e0 + n {
            bound_violations += 1;
        }
    }
    Ok(Report::new(
        "ledger",
        json!({"n": n, "e": e, "steps": steps, "epsilon": epsilon, "beta": beta, "seed": seed}),
        vec![
            Check {
                name: "edge_flag_identity",
                pass: max_abs_deviation == 0,
                details: json!({"max_abs_deviation": max_abs_deviation, "steps": steps}),
            },
            Check {
                name: "edge_count_bounds",
                pass: bound_violations == 0,
                details: json!({"low": e0, "high": e0 + n, "violations": bound_violations}),
            },
        ],
    ))
}

#[allow(clippy::too_many_arguments)]
fn connectivity(
    runs: usize,
    n: usize,
    e_min: usize,
    e_max: usize,
    steps: u64,
    epsilon: f64,
    beta: f64,
    seed: u64,
) -> Result<Report, CliError> {
    if e_min > e_max {
        return Err(CliError::Usage(format!(
            "--e-min {e_min} exceeds --e-max {e_max}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edge_counts: Vec<usize> = (0..runs).map(|_| rng.random_range(e_min..=e_max)).collect();
    let violations: u64 = edge_counts
        .par_iter()
        .enumerate()
        .map(|(run, &e)| -> Result<u64, CliError> {
            let run = run as u64;
            let g0 = random_connected(n, e, seed + run + 1)?;
            let config = silent_config(n, GrammarVariant::PhiStar, epsilon, beta, seed + run);
            let mut engine = Engine::new(g0, config)?;
            let mut violations = 0;
            for _ in 0..steps {
                engine.advance();
                if !engine.graph().is_connected() {
                    violations += 1;
                }
            }
            Ok(violations)
        })
        .sum::<Result<u64, CliError>>()?;
    Ok(Report::new(
        "connectivity",
        json!({
            "runs": runs, "n": n, "e_min": e_min, "e_max": e_max,
            "steps": steps, "epsilon": epsilon, "beta": beta, "seed": seed,
        }),
        vec![Check {
            name: "connected_after_every_round",
            pass: violations == 0,
            details: json!({"rounds_checked": steps * runs as u64, "violations": violations}),
        }],
    ))
}

#[allow(clippy::too_many_arguments)]
fn absorption(
    runs: usize,
    n: usize,
    e: usize,
    budget: u64,
    post_rounds: u64,
    epsilon: f64,
    beta: f64,
    seed: u64,
) -> Result<Report, CliError> {
    let feasible = feasible_m_set(n, e);
    let outcomes: Vec<(Option<usize>, u64)> = (0..runs as u64)
        .into_par_iter()
        .map(|run| -> Result<(Option<usize>, u64), CliError> {
            let g0 = random_connected(n, e, seed + 1_000 + run)?;
            let config = silent_config(n, GrammarVariant::PhiStar, epsilon, beta, seed + run);
            let mut engine = Engine::new(g0, config)?;
            while engine.absorption().is_none() && engine.step() < budget {
                engine.advance();
            }
            let absorbed_m = engine.absorption().map(|a| a.m);
            let mut post_violations = 0;
            if absorbed_m.is_some() {
                for _ in 0..post_rounds {
                    engine.advance();
                    if engine.graph().degree_range() != 0 {
                        post_violations += 1;
                    }
                }
            }
            Ok((absorbed_m, post_violations))
        })
        .collect::<Result<_, _>>()?;

    let absorbed = outcomes.iter().filter(|(m, _)| m.is_some()).count();
    let fraction = absorbed as f64 / runs as f64;
    let mut histogram: BTreeMap<usize, u64> = BTreeMap::new();
    for m in outcomes.iter().filter_map(|(m, _)| *m) {
        *histogram.entry(m).or_insert(0) += 1;
    }
    let infeasible: Vec<usize> = histogram
        .keys()
        .copied()
        .filter(|m| !feasible.contains(m))
        .collect();
    let post_violations: u64 = outcomes.iter().map(|(_, v)| *v).sum();

    Ok(Report::new(
        "absorption",
        json!({
            "runs": runs, "n": n, "e": e, "budget": budget,
            "post_rounds": post_rounds, "epsilon": epsilon, "beta": beta, "seed": seed,
        }),
        vec![
            Check {
                name: "absorption_fraction",
                pass: fraction >= 0.95,
                details: json!({"absorbed": absorbed, "runs": runs, "fraction": fraction}),
            },
            Check {
                name: "absorbed_m_feasible",
                pass: infeasible.is_empty(),
                details: json!({"histogram": histogram, "feasible": feasible, "infeasible": infeasible}),
            },
            Check {
                name: "regular_after_absorption",
                pass: post_violations == 0,
                details: json!({"post_rounds": post_rounds, "violations": post_violations}),
            },
        ],
    ))
}
