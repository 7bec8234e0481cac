//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so every line is printed even
//! when an earlier criterion fails. The process exits non-zero if any
//! criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reqgossip::analysis::{
    check_gossip_decrease, contain_witness, distance_sum_nonincreasing, rate_bound, rounds_in_every_window,
    verify_bound, Claim, IndicatorSpec,
};
use reqgossip::engine::{Protocol, QueueInit, SimState, Trace};
use reqgossip::graph::{generate, Graph, GraphKind};
use reqgossip::harness::config::{random_integers, GraphSource, ValueSource};
use reqgossip::harness::{compare_protocols, instance_count, search_protocol1_failure, CompareConfig, SearchSpace};
use reqgossip::matrices::{reconstruct_consistent_sequence, repetitive_completeness_period};
use reqgossip::value::{format_rational, midpoint, ratio, Rational};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn simulate(g: Graph, protocol: Protocol, x0: Vec<Rational>, queues: QueueInit, iters: usize) -> Trace {
    let mut s = SimState::new(g, protocol, x0, &queues).expect("valid instance");
    s.run(iters, None);
    s.into_trace()
}

/// The 200-run suite shared by criteria 1-4, 7 and 9.
fn base_suite() -> Vec<Trace> {
    let protocols = [Protocol::I, Protocol::II, Protocol::III];
    (0..200u64)
        .map(|i| {
            let protocol = protocols[(i % 3) as usize];
            let mut n = 2 + ((i * 7) % 19) as usize;
            let kind = match (i / 3) % 5 {
                0 => GraphKind::Path { n },
                1 => GraphKind::RandomTree { n, seed: i },
                2 => {
                    n = n.max(3);
                    GraphKind::Cycle { n }
                }
                3 => GraphKind::Complete { n },
                _ => GraphKind::RandomConnected { n, p: 0.3, seed: i },
            };
            let g = generate(&kind).expect("feasible");
            let iters = if n <= 10 { 500 } else { 300 };
            simulate(g, protocol, random_integers(n, i, 0, 100), QueueInit::Seeded(i), iters)
        })
        .collect()
}

fn criterion_1(suite: &[Trace]) -> Outcome {
    let mut iterations = 0;
    for (run, t) in suite.iter().enumerate() {
        let sum0: Rational = t.x0.iter().sum();
        for rec in &t.records {
            iterations += 1;
            let sum: Rational = rec.x.iter().sum();
            if sum != sum0 {
                return outcome(false, format!("run {run} t={}: sum changed", rec.t));
            }
            let mut seen = vec![false; t.graph.n() + 1];
            for &(a, b) in &rec.gossips {
                if seen[a] || seen[b] || !t.graph.has_edge(a, b) {
                    return outcome(false, format!("run {run} t={}: gossips are not a matching", rec.t));
                }
                seen[a] = true;
                seen[b] = true;
            }
        }
    }
    outcome(true, format!("{} runs, {iterations} iterations", suite.len()))
}

fn claim_over(suite: &[Trace], protocol: Protocol, claim: Claim) -> Outcome {
    let mut runs = 0;
    let mut windows = 0;
    for (run, t) in suite.iter().enumerate().filter(|(_, t)| t.protocol == protocol) {
        let r = verify_bound(t, claim).expect("claim applies");
        runs += 1;
        windows += r.windows_checked;
        if !r.pass {
            let c = r.counterexample.expect("failing report has a counterexample");
            return outcome(false, format!("run {run}: t={} {}", c.t, c.detail));
        }
    }
    outcome(true, format!("{runs} Protocol {protocol} runs, {windows} windows"))
}

fn criterion_5() -> Outcome {
    let mut worst = 0;
    for seed in 0..100u64 {
        let n = 2 + (seed % 14) as usize;
        let g = generate(&GraphKind::RandomTree { n, seed }).expect("feasible");
        let t = simulate(g, Protocol::II, random_integers(n, seed, 0, 100), QueueInit::Seeded(seed), 6 * n);
        let r = verify_bound(&t, Claim::TreePeriodNMinus1).expect("tree");
        if !r.pass {
            let c = r.counterexample.expect("counterexample");
            return outcome(false, format!("tree seed {seed} (n={n}): t={} {}", c.t, c.detail));
        }
        let seq = reconstruct_consistent_sequence(&t).expect("consistent");
        match repetitive_completeness_period(&seq, &t.graph) {
            Some(p) if p <= n - 1 => worst = worst.max(p),
            other => return outcome(false, format!("tree seed {seed}: matrix period {other:?} > {}", n - 1)),
        }
    }
    outcome(true, format!("100 random trees n<=15, largest measured period {worst}"))
}

/// Protocol III runs on random connected graphs (n <= 12), shared by 6 and 8.
fn connected_suite() -> Vec<Trace> {
    (0..100u64)
        .map(|seed| {
            let n = 2 + (seed % 11) as usize;
            let p = [0.25, 0.4, 0.6][(seed % 3) as usize];
            let g = generate(&GraphKind::RandomConnected { n, p, seed }).expect("feasible");
            let iters = 4 * g.edge_count() + 8;
            simulate(g, Protocol::III, random_integers(n, seed, 0, 100), QueueInit::Seeded(seed), iters)
        })
        .collect()
}

fn criterion_6(suite: &[Trace]) -> Outcome {
    let mut ratio_sum = 0.0;
    for (idx, t) in suite.iter().enumerate() {
        let m = t.graph.edge_count();
        if let Err(miss) = rounds_in_every_window(t, m, t.len()) {
            return outcome(false, format!("graph {idx}: rounds miss {miss:?}"));
        }
        let seq = reconstruct_consistent_sequence(t).expect("consistent");
        match repetitive_completeness_period(&seq, &t.graph) {
            Some(p) if p <= m => ratio_sum += p as f64 / m as f64,
            other => return outcome(false, format!("graph {idx}: matrix period {other:?} > m = {m}")),
        }
        let r = verify_bound(t, Claim::PeriodEdgesM).expect("Protocol III");
        if !r.pass {
            return outcome(false, format!("graph {idx}: {:?}", r.counterexample));
        }
    }
    outcome(true, format!("{} graphs, mean period/m {:.2}", suite.len(), ratio_sum / suite.len() as f64))
}

fn criterion_7(suite: &[Trace]) -> Outcome {
    for (run, t) in suite.iter().enumerate() {
        let seq = match reconstruct_consistent_sequence(t) {
            Ok(s) => s,
            Err(e) => return outcome(false, format!("run {run}: {e}")),
        };
        // independent check: cumulative product applied to x(0)
        let mut product = reqgossip::matrices::GossipMatrix::identity(t.graph.n());
        for (k, m) in seq.matrices.iter().enumerate() {
            if !m.is_doubly_stochastic() {
                return outcome(false, format!("run {run}: matrix {} not doubly stochastic", k + 1));
            }
            product = m.mul(&product).expect("same size");
            if k % 25 == 24 || k + 1 == seq.matrices.len() {
                if product.apply(&t.x0).expect("size") != t.x_at(k + 1) {
                    return outcome(false, format!("run {run}: product disagrees at t={}", k + 1));
                }
            }
        }
    }
    outcome(true, format!("{} runs, step-by-step and cumulative products exact", suite.len()))
}

fn criterion_8(suite: &[Trace]) -> Outcome {
    let mut windows = 0;
    for (idx, t) in suite.iter().enumerate() {
        let r = verify_bound(t, Claim::Contraction4OverN2).expect("Protocol III");
        windows += r.windows_checked;
        if !r.pass {
            return outcome(false, format!("graph {idx}: {:?}", r.counterexample));
        }
        if let Err(at) = rate_bound(&t.graph).check_trace(t) {
            return outcome(false, format!("graph {idx}: rate bound fails at t={at}"));
        }
    }
    outcome(true, format!("{} graphs, {windows} windows", suite.len()))
}

fn criterion_9(suite: &[Trace]) -> Outcome {
    for (run, t) in suite.iter().enumerate() {
        let r = verify_bound(t, Claim::Transmissions5nOver2).expect("any protocol");
        if !r.pass {
            return outcome(false, format!("run {run}: {:?}", r.counterexample));
        }
    }
    let kinds = [
        GraphKind::Path { n: 7 },
        GraphKind::Star { n: 6 },
        GraphKind::Complete { n: 6 },
        GraphKind::Grid { rows: 3, cols: 3 },
        GraphKind::RandomConnected { n: 9, p: 0.5, seed: 3 },
    ];
    for kind in kinds {
        let g = generate(&kind).expect("feasible");
        let cfg = CompareConfig {
            graph: GraphSource::Generate(kind.clone()),
            x0: ValueSource::random(1, 0, 50),
            queues: QueueInit::Seeded(1),
            max_iters: 200,
            stop_ratio: "1/1000".into(),
        };
        let rep = compare_protocols(&cfg).expect("valid");
        let expected = Rational::from_integer((2 * g.edge_count()).into());
        let d_avg = g.average_degree();
        let flags_ok = rep.gossip_cheaper == (d_avg > ratio(5, 2)) && rep.broadcast_cheaper == (d_avg < ratio(5, 2));
        if rep.broadcast_baseline != expected || !flags_ok {
            return outcome(false, format!("{}: baseline {} flags wrong", kind.name(), format_rational(&rep.broadcast_baseline)));
        }
        let cap = 2 * g.n() + g.n() / 2;
        if rep.protocol_ii.max_transmissions > cap || rep.protocol_iii.max_transmissions > cap {
            return outcome(false, format!("{}: transmissions exceed {cap}", kind.name()));
        }
    }
    outcome(true, format!("{} runs within 2n + floor(n/2); baseline n*d_avg on 5 graphs", suite.len()))
}

fn random_value(rng: &mut ChaCha8Rng) -> Rational {
    ratio(rng.random_range(-1000..=1000), [1, 2, 4, 8, 3][rng.random_range(0..5)])
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for trial in 0..100_000 {
        let n = rng.random_range(2..=8);
        let x: Vec<Rational> = (0..n).map(|_| random_value(&mut rng)).collect();
        let i = rng.random_range(1..=n);
        let j = (i + rng.random_range(1..n) - 1) % n + 1;
        let mut y = x.clone();
        let m = midpoint(&x[i - 1], &x[j - 1]);
        y[i - 1] = m.clone();
        y[j - 1] = m;
        if !check_gossip_decrease(&IndicatorSpec::complete(n), &x, &y, (i, j)) {
            return outcome(false, format!("single-gossip decrease fails at trial {trial}"));
        }
    }
    for trial in 0..100_000 {
        let (a, b, c) = (random_value(&mut rng), random_value(&mut rng), random_value(&mut rng));
        if !distance_sum_nonincreasing(&a, &b, &c) {
            return outcome(false, format!("distance-sum property fails at trial {trial}"));
        }
    }
    let mut non_complete = 0;
    let mut literal_witnesses = 0;
    let mut unit_violations = 0;
    let mut missing: Vec<String> = Vec::new();
    for s in 0..500u64 {
        let n = rng.random_range(2..=7);
        let g = generate(&GraphKind::RandomConnected { n, p: rng.random_range(0.2..0.9), seed: s }).expect("feasible");
        let extra: Vec<(usize, usize)> = (1..=n)
            .flat_map(|i| (i + 1..=n).map(move |j| (i, j)))
            .filter(|&(i, j)| !g.has_edge(i, j))
            .collect();
        let keep = rng.random_range(0.0..1.0);
        let mut pairs: Vec<(usize, usize)> = g.edges().collect();
        pairs.extend(extra.into_iter().filter(|_| rng.random_bool(keep)));
        let spec = IndicatorSpec::new(n, pairs).expect("distinct pairs");
        if spec.is_instantaneous(&g) != spec.morse_condition(&g) {
            return outcome(false, format!("spec {s}: completeness and structural test disagree"));
        }
        if !spec.is_instantaneous(&g) {
            non_complete += 1;
            let w = contain_witness(&spec, &g).expect("non-complete spec");
            unit_violations += usize::from(w.violates_unit_decrease());
            if w.is_non_decrease() {
                literal_witnesses += 1;
            } else if missing.len() < 3 {
                missing.push(format!("n={n} E={:?}", spec.pairs().collect::<Vec<_>>()));
            }
        }
    }
    let detail = format!(
        "1e5 gossips and 1e5 triples ok; 500 specs agree; {non_complete} non-complete specs: \
         {unit_violations} unit-decrease violations, {literal_witnesses} non-decrease witnesses{}",
        if missing.is_empty() { String::new() } else { format!("; no non-decrease exists for e.g. {}", missing.join(", ")) }
    );
    outcome(unit_violations == non_complete && literal_witnesses == non_complete, detail)
}

fn criterion_11() -> Outcome {
    let space = SearchSpace {
        protocol: Protocol::I,
        graphs: SearchSpace::small_graphs(6),
        value_max: 2,
        values_per_graph: 10,
        queues_per_graph: 4,
        seed: 11,
    };
    let count = instance_count(&space);
    match search_protocol1_failure(&space, 200).expect("valid horizon") {
        Some(cert) => {
            let replay = cert.replay().expect("replayable");
            outcome(
                replay,
                format!(
                    "cycle of length {} from t={} on n={}, replay identical: {replay}",
                    cert.cycle_length,
                    cert.cycle_start,
                    cert.graph.n()
                ),
            )
        }
        None => outcome(false, format!("no exact cycle with V > 0 among {count} instances (horizon 200)")),
    }
}

fn criterion_12() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut wins = 0;
    let mut losses = Vec::new();
    let mut pairs = 0;
    let mut seed = 0u64;
    while pairs < 50 {
        seed += 1;
        let n = rng.random_range(5..=10);
        let kind = *[0, 1, 1].choose(&mut rng).expect("nonempty");
        let kind = if kind == 0 {
            GraphKind::Complete { n }
        } else {
            GraphKind::RandomConnected { n, p: 0.6, seed }
        };
        let g = generate(&kind).expect("feasible");
        if g.average_degree() <= ratio(5, 2) {
            continue;
        }
        pairs += 1;
        let cfg = CompareConfig {
            graph: GraphSource::Generate(kind.clone()),
            x0: ValueSource::random(seed, 0, 100),
            queues: QueueInit::Seeded(seed),
            max_iters: 3000,
            stop_ratio: "1/1000000".into(),
        };
        let rep = compare_protocols(&cfg).expect("valid");
        if rep.iii_not_slower() {
            wins += 1;
        } else {
            losses.push(format!(
                "{}(n={n},seed={seed}) III {} vs II {}",
                kind.name(),
                rep.protocol_iii.iterations,
                rep.protocol_ii.iterations
            ));
        }
    }
    let share = wins as f64 / pairs as f64;
    let mut detail = format!("{wins}/{pairs} pairs with III <= II ({:.0}%)", share * 100.0);
    if !losses.is_empty() {
        detail.push_str(&format!("; slower: {}", losses.join(", ")));
    }
    outcome(share >= 0.8, detail)
}

const BUDGET_SECS: f64 = 120.0;

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64())
}

// Criteria 1 and 10 carry a wall-clock budget.
fn within_budget(o: Outcome, secs: f64) -> Outcome {
    if secs < BUDGET_SECS {
        o
    } else {
        outcome(false, format!("{} (over the {BUDGET_SECS}s budget)", o.detail))
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut all = true;
    let mut report = |id: u32, name: &str, (o, secs): (Outcome, f64)| {
        all &= o.pass;
        println!("[{}] criterion {id:>2} {name}: {} [{secs:.1}s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };

    let ((suite, c1), secs) = timed(|| {
        let suite = base_suite();
        let c1 = criterion_1(&suite);
        (suite, c1)
    });
    report(1, "conservation and matching", (within_budget(c1, secs), secs));
    report(2, "gossip between unequal values (Protocol II)", timed(|| claim_over(&suite, Protocol::II, Claim::LemmaGossip)));
    report(3, "gossip within every 2d window (Protocol II)", timed(|| claim_over(&suite, Protocol::II, Claim::LemmaDstep2d)));
    report(4, "gossip or virtual gossip every iteration (Protocol III)", timed(|| claim_over(&suite, Protocol::III, Claim::LemmaPizza)));
    report(5, "tree period n-1 (Protocol II)", timed(criterion_5));
    let (connected, build) = timed(connected_suite);
    let (c6, secs) = timed(|| criterion_6(&connected));
    report(6, "period m on connected graphs (Protocol III)", (c6, secs + build));
    report(7, "matrix consistency", timed(|| criterion_7(&suite)));
    report(8, "contraction 1-4/n^2 per m iterations", timed(|| criterion_8(&connected)));
    report(9, "transmissions and broadcast baseline", timed(|| criterion_9(&suite)));
    let (c10, secs) = timed(criterion_10);
    report(10, "indicator theory", (within_budget(c10, secs), secs));
    report(11, "Protocol I non-convergence certificate", timed(criterion_11));
    report(12, "Protocol III not slower than II", timed(criterion_12));
    println!("acceptance finished in {:.1}s", start.elapsed().as_secs_f64());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
