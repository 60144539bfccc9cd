use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anonet_core::adversary::{next_round, Replay};
use anonet_core::analysis::{fit_loglog, lockstep_check, ring_indistinguishability_demo, LogLogFit, SilenceCounter};
use anonet_core::engine::{state_digest, write_trace_jsonl, TraceLevel};
use anonet_core::protocols::high_dynamicity_violation;
use anonet_core::registry::{
    build_protocol, judge, AdversaryFamily, AdversarySpec, Experiment, ProtocolParams,
};
use anonet_core::{
    check_influence_lemma, validate_one_interval, AdversaryContext, DynProtocol, DynamicSchedule, Mode, NodeId,
    RunResult,
};
use rayon::prelude::*;

use crate::exit::{self, Failure};
use crate::{DemoCommand, ExperimentArgs, FitMetric, RunArgs, ScheduleArgs, SweepArgs, VerifyCommand};

type Outcome = Result<u8, Failure>;

const METRICS_HEADER: [&str; 9] = [
    "protocol", "adversary", "n", "seed", "rounds", "max_bits", "total_bits", "verdict", "outputs",
];

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::io(path, e))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn experiment(args: &ExperimentArgs, n: Option<usize>, seed: u64, trace: TraceLevel) -> Result<Experiment, Failure> {
    let mut exp = Experiment::new(args.protocol, args.adversary.clone(), 0, seed);
    exp.n = n;
    exp.mode = args.mode;
    exp.max_rounds = args.max_rounds;
    exp.trace = trace;
    exp.params = ProtocolParams {
        d: args.d,
        e: args.e,
        k_cap: args.k_cap,
    };
    let protocol = build_protocol(exp.protocol, &exp.params)?;
    if !protocol.info().supports(exp.mode()) {
        return Err(Failure::new(
            exit::USAGE,
            format!("{} does not support {} transmission", exp.protocol, exp.mode()),
        ));
    }
    Ok(exp)
}

/// The verdict column and the exit status it maps to.
fn verdict_of(exp: &Experiment, run: &RunResult) -> (String, u8) {
    match judge(exp.protocol, run) {
        Ok(true) => ("true".into(), exit::OK),
        Ok(false) => ("false".into(), exit::FALSE),
        Err(e) => {
            let code = Failure::from(e).code;
            let text = if run.precondition_violations.is_empty() { "undefined" } else { "precondition-broken" };
            (text.into(), code)
        }
    }
}

fn outputs_cell(run: &RunResult) -> String {
    run.outputs
        .iter()
        .map(|o| match o {
            Some(o) => match o.reported_n {
                Some(n) => format!("{}/{n}", o.value),
                None => o.value.to_string(),
            },
            None => "_".into(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn metrics_row(exp: &Experiment, run: &RunResult, verdict: &str) -> Vec<String> {
    vec![
        exp.protocol.to_string(),
        exp.adversary.to_string(),
        run.n.to_string(),
        run.seed.to_string(),
        run.rounds_executed.to_string(),
        run.max_message_bits.to_string(),
        run.total_message_bits.to_string(),
        verdict.to_string(),
        outputs_cell(run),
    ]
}

fn write_csv(out: Box<dyn Write>, rows: &[Vec<String>]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(out);
    let fail = |e: csv::Error| Failure::new(exit::OTHER, e.to_string());
    w.write_record(METRICS_HEADER).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    w.flush().map_err(|e| Failure::new(exit::OTHER, e.to_string()))
}

pub fn run(args: RunArgs) -> Outcome {
    let level = if args.trace.is_some() || args.result.is_some() { TraceLevel::Full } else { TraceLevel::Summary };
    let exp = experiment(&args.exp, args.n, args.seed, level)?;
    let run = exp.run()?;
    let (verdict, code) = verdict_of(&exp, &run);

    if let Some(path) = &args.trace {
        let mut out = create(path)?;
        write_trace_jsonl(&run, &mut out).and_then(|_| out.flush()).map_err(|e| Failure::io(path, e))?;
    }
    if let Some(path) = &args.result {
        let mut out = create(path)?;
        writeln!(out, "{}", run.to_json()).and_then(|_| out.flush()).map_err(|e| Failure::io(path, e))?;
    }
    if let Some(path) = &args.metrics {
        write_csv(sink(Some(path))?, &[metrics_row(&exp, &run, &verdict)])?;
    }
    println!(
        "{} on {} (n={}, seed={}): {} after {} rounds, verdict {verdict}",
        exp.protocol,
        exp.adversary,
        run.n,
        run.seed,
        if run.halted { "halted" } else { "stopped" },
        run.rounds_executed,
    );
    println!("outputs: {}", outputs_cell(&run));
    Ok(code)
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, Failure> {
    let bad = || Failure::new(exit::USAGE, format!("cannot read seeds `{text}`"));
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
    if let Some((a, b)) = text.split_once("..") {
        return Ok((num(a)?..num(b)?).collect());
    }
    if text.contains(',') {
        return text.split(',').map(num).collect();
    }
    Ok((0..num(text)?).collect())
}

pub fn sweep(args: SweepArgs) -> Outcome {
    let seeds = parse_seeds(&args.seeds)?;
    experiment(&args.exp, args.n_list.first().copied(), 0, TraceLevel::Summary)?;
    let mut cells: Vec<(usize, u64)> =
        args.n_list.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
    cells.sort_unstable();
    cells.dedup();

    let results: Vec<(Vec<String>, Option<(usize, f64)>)> = cells
        .par_iter()
        .map(|&(n, seed)| {
            let exp = match experiment(&args.exp, Some(n), seed, TraceLevel::Summary) {
                Ok(exp) => exp,
                Err(f) => return (error_row(&args.exp, n, seed, &f.message), None),
            };
            match exp.run() {
                Ok(run) => {
                    let (verdict, _) = verdict_of(&exp, &run);
                    let y = match args.fit {
                        Some(FitMetric::Rounds) => run.rounds_executed as f64,
                        Some(FitMetric::MaxBits) => run.max_message_bits as f64,
                        None => 0.0,
                    };
                    (metrics_row(&exp, &run, &verdict), run.halted.then_some((n, y)))
                }
                Err(e) => (error_row(&args.exp, n, seed, &e.to_string()), None),
            }
        })
        .collect();

    let rows: Vec<Vec<String>> = results.iter().map(|(row, _)| row.clone()).collect();
    write_csv(sink(args.metrics.as_deref())?, &rows)?;
    if args.fit.is_some() {
        let points: Vec<(usize, f64)> = results.iter().filter_map(|(_, p)| *p).collect();
        let fit = fit_loglog(&points)?;
        let text = fit_text(&fit, points.len(), cells.len());
        if args.metrics.is_some() {
            print!("{text}");
        } else {
            eprint!("{text}");
        }
    }
    Ok(exit::OK)
}

fn error_row(args: &ExperimentArgs, n: usize, seed: u64, message: &str) -> Vec<String> {
    let mut row = vec![args.protocol.to_string(), args.adversary.to_string(), n.to_string(), seed.to_string()];
    row.extend(["".into(), "".into(), "".into(), format!("error: {message}"), "".into()]);
    row
}

fn fit_text(fit: &LogLogFit, used: usize, total: usize) -> String {
    format!(
        "# log-log slope {:.4} intercept {:.4} max_residual {:.4} ({used} of {total} runs halted)\n",
        fit.slope, fit.intercept, fit.max_residual
    )
}

fn read_schedule(path: &Path) -> Result<DynamicSchedule, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    Replay::from_json(&text)
        .map(|r| r.schedule().clone())
        .map_err(|e| Failure::new(exit::PARSE, format!("{}: {e}", path.display())))
}

fn holds(ok: bool, what: &str) -> u8 {
    if ok {
        println!("{what}: holds");
        exit::OK
    } else {
        exit::FALSE
    }
}

fn parse_pairs(spec: &str, adversary: &AdversarySpec, n: usize) -> Result<Vec<(NodeId, NodeId)>, Failure> {
    let usage = |m: String| Failure::new(exit::USAGE, m);
    match spec {
        "leaves" => Ok((1..n.saturating_sub(1)).map(|i| (i, i + 1)).collect()),
        "mirror" => {
            let tree_shaped = matches!(
                adversary,
                AdversarySpec::Family(AdversaryFamily::Mirror | AdversaryFamily::SymmetricTree)
            );
            if !tree_shaped || n.is_multiple_of(2) {
                return Err(usage(format!("no mirror pairs for {adversary} on {n} nodes")));
            }
            let half = (n - 1) / 2;
            Ok((1..=half).map(|i| (i, i + half)).collect())
        }
        list => list
            .split(',')
            .map(|p| {
                let (a, b) = p.split_once(':').ok_or_else(|| usage(format!("bad pair `{p}`")))?;
                let node = |s: &str| s.trim().parse::<NodeId>().map_err(|_| usage(format!("bad pair `{p}`")));
                Ok((node(a)?, node(b)?))
            })
            .collect(),
    }
}

pub fn verify(cmd: VerifyCommand) -> Outcome {
    match cmd {
        VerifyCommand::Lemma1 { schedule } => {
            let s = read_schedule(&schedule)?;
            let ok = check_influence_lemma(&s, s.len()).map_err(|e| Failure::new(exit::PARSE, e.to_string()))?;
            if !ok {
                println!("influence bounds fail on this schedule within {} rounds", s.len());
            }
            Ok(holds(ok, "lemma1"))
        }
        VerifyCommand::Connectivity { schedule } => {
            let s = read_schedule(&schedule)?;
            let bad = validate_one_interval(&s);
            for r in &bad {
                println!("round {r} is disconnected");
            }
            Ok(holds(bad.is_empty(), "connectivity"))
        }
        VerifyCommand::HighDynamicity { schedule, k } => {
            let s = read_schedule(&schedule)?;
            let found = high_dynamicity_violation(&s, k).map_err(|e| Failure::new(exit::PARSE, e.to_string()))?;
            if let Some(v) = &found {
                let cells: Vec<String> =
                    v.vector.iter().map(|a| a.map_or("-".into(), |r| r.to_string())).collect();
                println!(
                    "nodes {} and {} share arrival vector [{}] from source {} starting at round {}",
                    v.v,
                    v.w,
                    cells.join(", "),
                    v.u,
                    v.r
                );
            }
            Ok(holds(found.is_none(), "high-dynamicity"))
        }
        VerifyCommand::Lockstep {
            protocol,
            adversary,
            n,
            pairs,
            rounds,
            seed,
            d,
            e,
            table,
        } => {
            let params = ProtocolParams { d, e, k_cap: None };
            let p = build_protocol(protocol, &params)?;
            let mut adv = adversary.build(n, seed)?;
            let pairs = parse_pairs(&pairs, &adversary, adv.n())?;
            let result = lockstep_check(&*p, &mut *adv, seed, rounds, &pairs)?;
            if let Some(path) = &table {
                let mut out = create(path)?;
                out.write_all(result.to_text().as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure::io(path, e))?;
            }
            if let Some((round, (u, v))) = result.first_divergence() {
                println!("nodes {u} and {v} differ at the start of round {round}");
            }
            Ok(holds(result.all_equal(), "lockstep"))
        }
    }
}

pub fn schedule(args: ScheduleArgs) -> Outcome {
    let mut adv = args.adversary.build(args.n, args.seed)?;
    let n = adv.n();
    let digests = vec![state_digest(&()); n];
    let mode = if args.labelings { Mode::OneToEach } else { Mode::Broadcast };
    let mut graphs = Vec::with_capacity(args.rounds);
    let mut labelings = Vec::new();
    for round in 1..=args.rounds {
        let ctx = AdversaryContext {
            round,
            state_digests: &digests,
            rng_seed: args.seed,
        };
        let (g, l) = next_round(&mut *adv, &ctx, mode).map_err(|e| Failure::from(anonet_core::RunError::from(e)))?;
        graphs.push(g);
        labelings.extend(l);
    }
    let s = DynamicSchedule::new(n, graphs).map_err(|e| Failure::new(exit::OTHER, e.to_string()))?;
    let replay = if args.labelings {
        Replay::with_labelings(s, labelings).map_err(|e| Failure::new(exit::OTHER, e.to_string()))?
    } else {
        Replay::new(s)
    };
    let mut out = sink(args.out.as_deref())?;
    let path = args.out.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
    writeln!(out, "{}", replay.to_json()).and_then(|_| out.flush()).map_err(|e| Failure::io(&path, e))?;
    Ok(exit::OK)
}

pub fn demo(cmd: DemoCommand) -> Outcome {
    match cmd {
        DemoCommand::Ring { protocol, n, max_rounds } => {
            let p: Box<dyn DynProtocol> = if protocol == "silence-counter" {
                Box::new(SilenceCounter)
            } else {
                let kind = protocol.parse().map_err(|e: anonet_core::registry::RegistryError| Failure::from(e))?;
                build_protocol(kind, &ProtocolParams::default())?
            };
            let demo = ring_indistinguishability_demo(&*p, n, max_rounds)?;
            println!("ring({}): first halt in round {} with output {}", demo.n, demo.k, demo.output);
            println!("ring({}): first halt in round {} with output {}", demo.big_n, demo.big_k, demo.big_output);
            if demo.same_output() {
                println!("same output on both rings, so it is wrong on at least one");
                Ok(exit::OK)
            } else {
                println!("outputs differ");
                Ok(exit::FALSE)
            }
        }
    }
}
