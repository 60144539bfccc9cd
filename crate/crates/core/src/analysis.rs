//! Verdicts on finished runs, symmetry demonstrations and growth fits.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::adversary::{ring, Adversary, StaticAdversary};
use crate::engine::{
    DynProtocol, Mode, Outbox, Output, Protocol, ProtocolError, Received, RunConfig, RunError,
    RunResult, Step, StepContext, TraceLevel,
};
use crate::graph::NodeId;
use crate::value::{Kind, Message, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    /// At least `k` distinct outputs.
    KLabeling(usize),
    Naming,
    MinimalNaming,
    Counting,
    CountingUpperBound,
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("verdict undefined: the run neither halted nor stabilized")]
    Undefined,
    #[error("verdict withheld: precondition broken in rounds {0:?}")]
    PreconditionBroken(Vec<usize>),
    #[error("refused: {0}")]
    Refused(String),
    #[error("not applicable: {0}")]
    Inapplicable(String),
    #[error("growth fit needs {0}")]
    TooFewPoints(String),
    #[error(transparent)]
    Run(#[from] RunError),
}

fn output_values(outs: &[Option<Output>]) -> Vec<Option<&Value>> {
    outs.iter().map(|o| o.as_ref().map(|o| &o.value)).collect()
}

/// First round from which the vector of outputs, missing ones included,
/// never changes again. `None` for an empty trace.
pub fn stable_since(run: &RunResult) -> Option<usize> {
    let last = run.trace.last()?;
    let settled = output_values(&last.outputs);
    let mut first = last.round;
    for rec in run.trace.iter().rev().skip(1) {
        if output_values(&rec.outputs) != settled {
            break;
        }
        first = rec.round;
    }
    Some(first)
}

/// First round from which every node has an output that never changes
/// again, read from the trace.
pub fn convergence_round(run: &RunResult) -> Option<usize> {
    let last = run.trace.last()?;
    if last.outputs.iter().any(Option::is_none) {
        return None;
    }
    stable_since(run)
}

/// Halted, or with outputs unchanged over at least the second half of the
/// run (and at least two rounds).
pub fn settled(run: &RunResult) -> bool {
    run.halted
        || stable_since(run).is_some_and(|r| {
            let quiet = run.rounds_executed + 1 - r;
            quiet >= 2 && 2 * quiet >= run.rounds_executed
        })
}

/// The count a node reports: its announced `n` if any, else its output.
fn reported_count(o: &Output) -> Option<i64> {
    match o.reported_n {
        Some(n) => i64::try_from(n).ok(),
        None => o.value.as_int(),
    }
}

pub fn verdict(problem: Problem, run: &RunResult, n: usize) -> Result<bool, AnalysisError> {
    if !settled(run) {
        return Err(AnalysisError::Undefined);
    }
    let Some(outputs) = run.outputs.iter().map(Option::as_ref).collect::<Option<Vec<&Output>>>() else {
        return Ok(false);
    };
    let distinct = || outputs.iter().map(|o| &o.value).collect::<BTreeSet<_>>().len();
    Ok(match problem {
        Problem::KLabeling(k) => distinct() >= k,
        Problem::Naming => outputs.len() == n && distinct() == n,
        Problem::MinimalNaming => {
            let ids: BTreeSet<Option<i64>> = outputs.iter().map(|o| o.value.as_int()).collect();
            outputs.len() == n && ids == (0..n as i64).map(Some).collect()
        }
        Problem::Counting => outputs.iter().all(|o| reported_count(o) == Some(n as i64)),
        Problem::CountingUpperBound => {
            let counts: BTreeSet<Option<i64>> = outputs.iter().map(|o| reported_count(o)).collect();
            counts.len() == 1 && counts.first().copied().flatten().is_some_and(|c| c >= n as i64)
        }
    })
}

/// Per round, whether each pair of nodes started the round in equal states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LockstepTable {
    pub pairs: Vec<(NodeId, NodeId)>,
    /// `(round, equal per pair)`.
    pub rows: Vec<(usize, Vec<bool>)>,
}

impl LockstepTable {
    pub fn all_equal(&self) -> bool {
        self.rows.iter().all(|(_, eq)| eq.iter().all(|&e| e))
    }

    /// `(round, pair)` of the first inequality.
    pub fn first_divergence(&self) -> Option<(usize, (NodeId, NodeId))> {
        self.rows.iter().find_map(|(round, eq)| {
            eq.iter().position(|&e| !e).map(|i| (*round, self.pairs[i]))
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("round");
        for (u, v) in &self.pairs {
            let _ = write!(out, "\t{u}~{v}");
        }
        out.push('\n');
        for (round, eq) in &self.rows {
            let _ = write!(out, "{round}");
            for &e in eq {
                out.push_str(if e { "\tequal" } else { "\tdiffer" });
            }
            out.push('\n');
        }
        out
    }
}

/// Runs `protocol` under broadcast for up to `rounds` rounds and compares
/// state digests of the given pairs at the start of every round.
pub fn lockstep_check(
    protocol: &dyn DynProtocol,
    adversary: &mut dyn Adversary,
    seed: u64,
    rounds: usize,
    pairs: &[(NodeId, NodeId)],
) -> Result<LockstepTable, AnalysisError> {
    let info = protocol.info();
    if !info.broadcast {
        return Err(AnalysisError::Refused(format!(
            "{} runs only with one-to-each transmission, whose labels break symmetry",
            info.name
        )));
    }
    let n = adversary.n();
    if let Some(&(u, v)) = pairs.iter().find(|&&(u, v)| u >= n || v >= n) {
        return Err(AnalysisError::Refused(format!("pair ({u},{v}) is out of range for n={n}")));
    }
    let config = RunConfig::new(Mode::Broadcast, seed).max_rounds(rounds).trace(TraceLevel::Summary);
    let run = protocol.run_dyn(adversary, &config)?;
    let rows = run
        .trace
        .iter()
        .map(|rec| {
            let eq = pairs.iter().map(|&(u, v)| rec.digests[u] == rec.digests[v]).collect();
            (rec.round, eq)
        })
        .collect();
    Ok(LockstepTable {
        pairs: pairs.to_vec(),
        rows,
    })
}

/// Leaderless strawman counter: every node pings once and then outputs the
/// round in which it has heard nothing for two rounds in a row.
#[derive(Clone, Copy, Debug, Default)]
pub struct SilenceCounter;

impl Protocol for SilenceCounter {
    type State = u64;

    fn name(&self) -> &str {
        "silence-counter"
    }

    fn uses_leader(&self) -> bool {
        false
    }

    fn supports(&self, mode: Mode) -> bool {
        mode == Mode::Broadcast
    }

    fn initial_state(&self, _: bool) -> u64 {
        0
    }

    fn step(&self, quiet: &mut u64, inbox: &[Received], ctx: &StepContext) -> Result<Step, ProtocolError> {
        if ctx.round == 1 {
            return Ok(Step::send(Outbox::broadcast(Message::single(Kind::Ping, Value::Nil))));
        }
        *quiet = if inbox.is_empty() { *quiet + 1 } else { 0 };
        if *quiet == 2 {
            return Ok(Step::halt(Outbox::Silent, Output::value(Value::uint(ctx.round as u64))));
        }
        Ok(Step::silent())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingDemo {
    pub n: usize,
    /// Round in which the first node halted on `ring(n)`.
    pub k: usize,
    pub output: Value,
    /// The larger ring, on `k + 1` nodes (at least `n + 1`).
    pub big_n: usize,
    pub big_k: usize,
    pub big_output: Value,
}

impl RingDemo {
    /// The first node to halt cannot tell the two rings apart.
    pub fn same_output(&self) -> bool {
        self.output == self.big_output
    }
}

fn first_halt(run: &RunResult) -> Option<(usize, Value)> {
    run.halt_rounds
        .iter()
        .zip(&run.outputs)
        .filter_map(|(r, o)| Some(((*r)?, o.as_ref()?.value.clone())))
        .min_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
}

/// Runs a leaderless broadcast protocol on `ring(n)`; if some node halts in
/// round `k`, runs it again on a ring of `max(k + 1, n + 1)` nodes, where
/// every node's `k`-neighborhood looks the same as before.
pub fn ring_indistinguishability_demo(
    protocol: &dyn DynProtocol,
    n: usize,
    max_rounds: usize,
) -> Result<RingDemo, AnalysisError> {
    let info = protocol.info();
    if info.uses_leader {
        return Err(AnalysisError::Inapplicable(format!("{} uses a leader", info.name)));
    }
    if !info.broadcast {
        return Err(AnalysisError::Inapplicable(format!("{} does not run under broadcast", info.name)));
    }
    let on_ring = |size: usize| -> Result<RunResult, AnalysisError> {
        let g = ring(size).map_err(|e| AnalysisError::Inapplicable(e.to_string()))?;
        let mut adv = StaticAdversary::named(g, "ring").map_err(|e| AnalysisError::Inapplicable(e.to_string()))?;
        let config = RunConfig::new(Mode::Broadcast, 0).max_rounds(max_rounds).trace(TraceLevel::Off);
        Ok(protocol.run_dyn(&mut adv, &config)?)
    };
    let (k, output) = first_halt(&on_ring(n)?)
        .ok_or_else(|| AnalysisError::Inapplicable(format!("no node halts on ring({n}) within {max_rounds} rounds")))?;
    let big_n = (k + 1).max(n + 1);
    let (big_k, big_output) = first_halt(&on_ring(big_n)?)
        .ok_or_else(|| AnalysisError::Inapplicable(format!("no node halts on ring({big_n})")))?;
    Ok(RingDemo {
        n,
        k,
        output,
        big_n,
        big_k,
        big_output,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Rounds,
    MaxBits,
}

impl Metric {
    pub fn of(self, run: &RunResult) -> f64 {
        match self {
            Metric::Rounds => run.rounds_executed as f64,
            Metric::MaxBits => run.max_message_bits as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual in log space.
    pub max_residual: f64,
}

/// Least-squares line through `(ln n, ln value)`.
pub fn fit_loglog(points: &[(usize, f64)]) -> Result<LogLogFit, AnalysisError> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(_, y)| y > 0.0)
        .map(|&(n, y)| ((n as f64).ln(), y.ln()))
        .collect();
    let xs: BTreeSet<u64> = logs.iter().map(|&(x, _)| x.to_bits()).collect();
    if xs.len() < 2 {
        return Err(AnalysisError::TooFewPoints("two distinct positive sizes".into()));
    }
    let m = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let max_residual = logs
        .iter()
        .map(|&(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(LogLogFit {
        slope,
        intercept,
        max_residual,
    })
}

/// For each `n` whose double is also present, the mean metric at `2n`
/// minus the mean at `n`. Logarithmic growth shows up as bounded steps.
pub fn doubling_steps(points: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mean = |n: usize| {
        let ys: Vec<f64> = points.iter().filter(|p| p.0 == n).map(|p| p.1).collect();
        (!ys.is_empty()).then(|| ys.iter().sum::<f64>() / ys.len() as f64)
    };
    let sizes: BTreeSet<usize> = points.iter().map(|p| p.0).collect();
    sizes
        .iter()
        .filter_map(|&n| Some((n, mean(2 * n)? - mean(n)?)))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    pub fit: LogLogFit,
    /// `(n, seed, metric)` of every halted run.
    pub rows: Vec<(usize, u64, f64)>,
    /// `(n, seed)` of runs that did not halt.
    pub excluded: Vec<(usize, u64)>,
}

impl GrowthReport {
    pub fn to_text(&self) -> String {
        let mut out = String::from("n\tseed\tmetric\n");
        for (n, seed, y) in &self.rows {
            let _ = writeln!(out, "{n}\t{seed}\t{y}");
        }
        let _ = writeln!(
            out,
            "# slope {:.4} intercept {:.4} max_residual {:.4} excluded {}",
            self.fit.slope,
            self.fit.intercept,
            self.fit.max_residual,
            self.excluded.len()
        );
        out
    }
}

/// Runs `protocol` over every `(n, seed)` with the adversary built by
/// `family` and fits the log-log slope of `metric` against `n`.
pub fn growth_fit<F>(
    metric: Metric,
    protocol: &dyn DynProtocol,
    mode: Mode,
    mut family: F,
    n_values: &[usize],
    seeds: &[u64],
) -> Result<GrowthReport, AnalysisError>
where
    F: FnMut(usize, u64) -> Box<dyn Adversary>,
{
    if n_values.iter().collect::<BTreeSet<_>>().len() < 4 {
        return Err(AnalysisError::TooFewPoints("at least 4 distinct n values".into()));
    }
    if seeds.len() < 5 {
        return Err(AnalysisError::TooFewPoints("at least 5 seeds".into()));
    }
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for &n in n_values {
        for &seed in seeds {
            let mut adversary = family(n, seed);
            let config = RunConfig::new(mode, seed).trace(TraceLevel::Off);
            let run = protocol.run_dyn(&mut *adversary, &config)?;
            if run.halted {
                rows.push((n, seed, metric.of(&run)));
            } else {
                excluded.push((n, seed));
            }
        }
    }
    let points: Vec<(usize, f64)> = rows.iter().map(|&(n, _, y)| (n, y)).collect();
    Ok(GrowthReport {
        fit: fit_loglog(&points)?,
        rows,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{line, star, static_adversary};
    use crate::protocols::{degree_klabeling, leader_eccentricity};

    #[test]
    fn fit_recovers_a_power_law() {
        let pts: Vec<(usize, f64)> = [4, 8, 16, 32].iter().map(|&n| (n, 3.0 * (n as f64).powi(2))).collect();
        let fit = fit_loglog(&pts).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-9);
        assert!(fit.max_residual < 1e-9);
        assert!(fit_loglog(&pts[..1]).is_err());
    }

    #[test]
    fn doubling_steps_of_a_logarithm_are_constant() {
        let pts: Vec<(usize, f64)> = [4, 8, 16].iter().map(|&n| (n, 5.0 * (n as f64).log2())).collect();
        let steps = doubling_steps(&pts);
        assert_eq!(steps.len(), 2);
        assert!(steps.iter().all(|&(_, d)| (d - 5.0).abs() < 1e-9));
    }

    #[test]
    fn k_labeling_verdicts_on_a_line() {
        let mut adv = static_adversary(line(4, true).unwrap()).unwrap();
        let run = crate::engine::run(&degree_klabeling(), &mut adv, &RunConfig::new(Mode::Broadcast, 0)).unwrap();
        assert!(verdict(Problem::KLabeling(2), &run, 4).unwrap());
        assert!(!verdict(Problem::Naming, &run, 4).unwrap());
    }

    #[test]
    fn unsettled_runs_have_no_verdict() {
        let mut adv = static_adversary(line(6, true).unwrap()).unwrap();
        let config = RunConfig::new(Mode::Broadcast, 0).max_rounds(2);
        let run = crate::engine::run(&leader_eccentricity(), &mut adv, &config).unwrap();
        assert!(matches!(verdict(Problem::Naming, &run, 6), Err(AnalysisError::Undefined)));
    }

    #[test]
    fn star_leaves_move_in_lockstep() {
        let mut adv = static_adversary(star(5).unwrap()).unwrap();
        let pairs = [(1, 2), (2, 3), (3, 4)];
        let table = lockstep_check(&leader_eccentricity(), &mut adv, 0, 50, &pairs).unwrap();
        assert!(table.all_equal());
        assert!(table.to_text().starts_with("round\t1~2"));
    }

    #[test]
    fn one_to_each_protocols_are_refused() {
        let mut adv = static_adversary(star(3).unwrap()).unwrap();
        let res = lockstep_check(&crate::protocols::dynamic_naming(), &mut adv, 0, 5, &[(1, 2)]);
        assert!(matches!(res, Err(AnalysisError::Refused(_))));
    }

    #[test]
    fn silence_counter_cannot_tell_rings_apart() {
        let demo = ring_indistinguishability_demo(&SilenceCounter, 3, 50).unwrap();
        assert_eq!(demo.k, 4);
        assert_eq!(demo.big_n, 5);
        assert!(demo.same_output());
        assert!(matches!(
            ring_indistinguishability_demo(&leader_eccentricity(), 3, 50),
            Err(AnalysisError::Inapplicable(_))
        ));
        let labels = ring_indistinguishability_demo(&degree_klabeling(), 4, 50).unwrap();
        assert_eq!((labels.output.clone(), labels.big_output.clone()), (Value::Int(2), Value::Int(2)));
    }
}
