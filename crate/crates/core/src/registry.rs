//! Protocols and adversaries by name, as used on the command line.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::adversary::{
    duplicated, fair_meet_all_adversary, line, random_connected_adversary, ring, star,
    symmetric_mirror_adversary, symmetric_tree, Adversary, AdversaryError, MirrorPattern, Replay,
    StaticAdversary,
};
use crate::analysis::{verdict, AnalysisError, Problem};
use crate::engine::{DynProtocol, Mode, RunConfig, RunError, RunResult, TraceLevel};
use crate::protocols::{
    anonymous_counting, degree_counting, degree_klabeling, delegate_naming, dynamic_naming,
    expansion_counting, fair_naming, high_dynamicity_naming, individual_conversations,
    leader_eccentricity,
};

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("unknown {what} `{name}`")]
    Unknown { what: &'static str, name: String },
    #[error("protocol {protocol} needs --{param}")]
    MissingParam { protocol: ProtocolKind, param: &'static str },
    #[error("adversary {adversary} cannot be built on {n} nodes: {reason}")]
    BadSize { adversary: String, n: usize, reason: String },
    #[error("--n is required for adversary {0}")]
    MissingN(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
}

macro_rules! named_enum {
    ($name:ident, $what:literal, { $($variant:ident => $text:literal),* $(,)? }) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name { $($variant),* }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),* }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = RegistryError;
            fn from_str(s: &str) -> Result<Self, RegistryError> {
                match s {
                    $($text => Ok($name::$variant),)*
                    _ => Err(RegistryError::Unknown { what: $what, name: s.to_string() }),
                }
            }
        }
    };
}

named_enum!(ProtocolKind, "protocol", {
    LeaderEccentricity => "leader-eccentricity",
    AnonymousCounting => "anonymous-counting",
    DegreeKLabeling => "degree-klabeling",
    DegreeCounting => "degree-counting",
    ExpansionCounting => "expansion-counting",
    HdNaming => "hd-naming",
    Fair => "fair",
    Delegate => "delegate",
    DynamicNaming => "dynamic-naming",
    IndividualConversations => "individual-conversations",
});

impl ProtocolKind {
    /// The mode the protocol is designed for.
    pub fn natural_mode(self) -> Mode {
        use ProtocolKind::*;
        match self {
            Fair | Delegate | DynamicNaming | IndividualConversations => Mode::OneToEach,
            _ => Mode::Broadcast,
        }
    }

    /// Stabilizing protocols never halt; they are judged on convergence.
    pub fn terminates(self) -> bool {
        !matches!(self, ProtocolKind::Fair | ProtocolKind::Delegate)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ProtocolParams {
    pub d: Option<u64>,
    pub e: Option<u64>,
    /// Arrival-vector length for `hd-naming`; 3 when absent.
    pub k_cap: Option<usize>,
}

pub fn build_protocol(kind: ProtocolKind, params: &ProtocolParams) -> Result<Box<dyn DynProtocol>, RegistryError> {
    let missing = |param| RegistryError::MissingParam { protocol: kind, param };
    Ok(match kind {
        ProtocolKind::LeaderEccentricity => Box::new(leader_eccentricity()),
        ProtocolKind::AnonymousCounting => Box::new(anonymous_counting()),
        ProtocolKind::DegreeKLabeling => Box::new(degree_klabeling()),
        ProtocolKind::DegreeCounting => Box::new(degree_counting(params.d.ok_or_else(|| missing("d"))?)),
        ProtocolKind::ExpansionCounting => Box::new(expansion_counting(params.e.ok_or_else(|| missing("e"))?)),
        ProtocolKind::HdNaming => Box::new(high_dynamicity_naming(params.k_cap.unwrap_or(3))),
        ProtocolKind::Fair => Box::new(fair_naming()),
        ProtocolKind::Delegate => Box::new(delegate_naming()),
        ProtocolKind::DynamicNaming => Box::new(dynamic_naming()),
        ProtocolKind::IndividualConversations => Box::new(individual_conversations()),
    })
}

named_enum!(AdversaryFamily, "adversary", {
    StaticStar => "static-star",
    StaticLine => "static-line",
    StaticRing => "static-ring",
    SymmetricTree => "symmetric-tree",
    RandomConnected => "random-connected",
    FairMeetAll => "fair-meet-all",
    Mirror => "mirror",
});

/// A named adversary family, or `replay:FILE`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AdversarySpec {
    Family(AdversaryFamily),
    Replay(PathBuf),
}

impl FromStr for AdversarySpec {
    type Err = RegistryError;
    fn from_str(s: &str) -> Result<Self, RegistryError> {
        match s.strip_prefix("replay:") {
            Some(path) => Ok(AdversarySpec::Replay(PathBuf::from(path))),
            None => s.parse().map(AdversarySpec::Family),
        }
    }
}

impl fmt::Display for AdversarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversarySpec::Family(a) => a.fmt(f),
            AdversarySpec::Replay(p) => write!(f, "replay:{}", p.display()),
        }
    }
}

fn two_branches(spec: AdversaryFamily, n: usize) -> Result<usize, RegistryError> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(RegistryError::BadSize {
            adversary: spec.to_string(),
            n,
            reason: "needs an odd n of at least 3".into(),
        });
    }
    Ok((n - 1) / 2)
}

impl AdversarySpec {
    /// Builds the adversary. `n` may be omitted only for replays, whose
    /// size comes from the file.
    pub fn build(&self, n: Option<usize>, seed: u64) -> Result<Box<dyn Adversary>, RegistryError> {
        let family = match self {
            AdversarySpec::Replay(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
                    path: path.clone(),
                    source,
                })?;
                let replay = Replay::from_json(&text)?;
                if let Some(n) = n.filter(|&n| n != replay.n()) {
                    return Err(RegistryError::BadSize {
                        adversary: self.to_string(),
                        n,
                        reason: format!("the schedule has {} nodes", replay.n()),
                    });
                }
                return Ok(Box::new(replay));
            }
            AdversarySpec::Family(f) => *f,
        };
        let n = n.ok_or_else(|| RegistryError::MissingN(family.to_string()))?;
        if n == 0 {
            return Err(RegistryError::BadSize {
                adversary: family.to_string(),
                n,
                reason: "n must be at least 1".into(),
            });
        }
        let fixed = |g| -> Result<Box<dyn Adversary>, RegistryError> {
            Ok(Box::new(StaticAdversary::named(g, family.as_str())?))
        };
        match family {
            AdversaryFamily::StaticStar => fixed(star(n)?),
            AdversaryFamily::StaticLine => fixed(line(n, true)?),
            AdversaryFamily::StaticRing => fixed(ring(n)?),
            AdversaryFamily::SymmetricTree => fixed(symmetric_tree(two_branches(family, n)?, 2)?),
            AdversaryFamily::RandomConnected => Ok(Box::new(random_connected_adversary(n, seed))),
            AdversaryFamily::FairMeetAll => Ok(Box::new(fair_meet_all_adversary(n, seed)?)),
            AdversaryFamily::Mirror => Ok(Box::new(symmetric_mirror_adversary(
                two_branches(family, n)?,
                MirrorPattern::Shuffled(seed),
            )?)),
        }
    }
}

/// One fully specified run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Experiment {
    pub protocol: ProtocolKind,
    pub params: ProtocolParams,
    pub adversary: AdversarySpec,
    pub n: Option<usize>,
    pub seed: u64,
    /// The protocol's natural mode when absent.
    pub mode: Option<Mode>,
    pub max_rounds: Option<usize>,
    pub trace: TraceLevel,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Run(#[from] RunError),
}

impl Experiment {
    pub fn new(protocol: ProtocolKind, adversary: AdversarySpec, n: usize, seed: u64) -> Self {
        Experiment {
            protocol,
            params: ProtocolParams::default(),
            adversary,
            n: Some(n),
            seed,
            mode: None,
            max_rounds: None,
            trace: TraceLevel::Full,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode.unwrap_or(self.protocol.natural_mode())
    }

    /// The adversary as the protocol will see it. Generated adversaries
    /// are doubled for `hd-naming`, which needs every graph to last two
    /// rounds; replayed schedules are used as recorded.
    pub fn build_adversary(&self) -> Result<Box<dyn Adversary>, RegistryError> {
        let adversary = self.adversary.build(self.n, self.seed)?;
        Ok(match (&self.adversary, self.protocol) {
            (AdversarySpec::Family(_), ProtocolKind::HdNaming) => Box::new(duplicated(adversary)),
            _ => adversary,
        })
    }

    pub fn config(&self) -> RunConfig {
        RunConfig {
            seed: self.seed,
            mode: self.mode(),
            max_rounds: self.max_rounds,
            degree_bound: self.params.d.map(|d| d as usize),
            trace: self.trace,
        }
    }

    pub fn run(&self) -> Result<RunResult, ExperimentError> {
        let protocol = build_protocol(self.protocol, &self.params)?;
        let mut adversary = self.build_adversary()?;
        Ok(protocol.run_dyn(&mut *adversary, &self.config())?)
    }
}

impl ProtocolKind {
    /// The problems a run of this protocol is judged against.
    pub fn problems(self, n: usize) -> Vec<Problem> {
        use ProtocolKind::*;
        match self {
            LeaderEccentricity | DegreeKLabeling => vec![Problem::KLabeling(n.min(2))],
            AnonymousCounting => vec![Problem::Counting],
            DegreeCounting | ExpansionCounting => vec![Problem::CountingUpperBound],
            HdNaming | Fair | Delegate | DynamicNaming => vec![Problem::Naming],
            IndividualConversations => vec![Problem::MinimalNaming, Problem::Counting],
        }
    }
}

/// Whether `run` solves every problem of `kind`. Runs that broke a
/// declared precondition get no verdict.
pub fn judge(kind: ProtocolKind, run: &RunResult) -> Result<bool, AnalysisError> {
    if !run.precondition_violations.is_empty() {
        return Err(AnalysisError::PreconditionBroken(run.precondition_violations.clone()));
    }
    let mut all = true;
    for problem in kind.problems(run.n) {
        all &= verdict(problem, run, run.n)?;
    }
    Ok(all)
}
