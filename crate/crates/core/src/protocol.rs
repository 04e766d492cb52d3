//! Shared run configuration and outcome types, and dispatch by topology.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use serde::Serialize;

use crate::error::Result;
use crate::field::PrimeField;
use crate::model::Instance;
use crate::randomness::Randomness;
use crate::transcript::{CostLedger, Transcript};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    TwoParty,
    Ring,
    Star,
    NaiveTwoParty,
    NaiveRing,
    NaiveStar,
}

impl Topology {
    pub const ALL: [Topology; 6] = [
        Topology::TwoParty,
        Topology::Ring,
        Topology::Star,
        Topology::NaiveTwoParty,
        Topology::NaiveRing,
        Topology::NaiveStar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Topology::TwoParty => "two-party",
            Topology::Ring => "ring",
            Topology::Star => "star",
            Topology::NaiveTwoParty => "naive-two-party",
            Topology::NaiveRing => "naive-ring",
            Topology::NaiveStar => "naive-star",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }

    pub fn is_naive(self) -> bool {
        matches!(
            self,
            Topology::NaiveTwoParty | Topology::NaiveRing | Topology::NaiveStar
        )
    }

    /// Ring variants order by global partitions; the others by leader runs.
    pub fn uses_global_order(self) -> bool {
        matches!(self, Topology::Ring | Topology::NaiveRing)
    }
}

/// Deliberate protocol faults used to check that the audits catch leaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    /// Answers are sent without their additive mask.
    DropMask,
    /// Every query vector reuses the first pool symbol.
    ReusePad,
    /// The leader silently counts one round past the stopping round.
    RevealExtraCardinality,
}

impl Mutation {
    pub fn name(self) -> &'static str {
        match self {
            Mutation::DropMask => "drop-mask",
            Mutation::ReusePad => "reuse-pad",
            Mutation::RevealExtraCardinality => "reveal-extra-cardinality",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Mutation::DropMask, Mutation::ReusePad, Mutation::RevealExtraCardinality]
            .into_iter()
            .find(|m| m.name() == s)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProtocolConfig {
    /// Use this prime instead of the protocol's default field.
    pub field: Option<u32>,
    pub mutation: Option<Mutation>,
    /// Assert internal invariants (query structure, decoding ranges) while running.
    pub check_invariants: bool,
}

impl ProtocolConfig {
    pub fn checked() -> Self {
        Self {
            check_invariants: true,
            ..Self::default()
        }
    }
}

/// How the stopping round ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HitKind {
    /// A strict subset of the round's slice is in the intersection; the
    /// membership step ran.
    Partial,
    /// The count alone settled the slice (single element, or all of it).
    Full,
    /// Every earlier round was empty and only one element is left, so the
    /// last round was not queried at all.
    Forced,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Elements covered by the round.
    pub elements: Vec<usize>,
    /// Decoded intersection count, if a counting step ran.
    pub count: Option<u32>,
    /// Elements decoded as members of the intersection.
    pub members: Vec<usize>,
    /// Star only: aggregated difference per element (zero means member).
    pub aggregates: Vec<(usize, u32)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Outcome {
    pub topology: Topology,
    pub field: PrimeField,
    /// Optimal elements of the intersection, as decoded by the leader.
    pub solution: BTreeSet<usize>,
    /// The full intersection (naive baselines only).
    pub intersection: Option<BTreeSet<usize>>,
    /// 1-based stopping round (leader runs, or global partitions for ring).
    pub stopping_round: usize,
    pub hit: Option<HitKind>,
    /// Elements whose intersection membership the leader has decoded.
    pub leader_knowledge: BTreeSet<usize>,
    pub rounds: Vec<RoundRecord>,
    pub ledger: CostLedger,
    pub transcript: Transcript,
}

impl Outcome {
    pub fn cost(&self) -> usize {
        self.ledger.total()
    }
}

pub fn run_protocol<R: Randomness + ?Sized>(
    topology: Topology,
    instance: &Instance,
    config: &ProtocolConfig,
    rng: &mut R,
) -> Result<Outcome> {
    match topology {
        Topology::TwoParty => crate::two_party::run(instance, config, rng),
        Topology::Ring => crate::ring::run(instance, config, rng),
        Topology::Star => crate::star::run(instance, config, rng),
        Topology::NaiveTwoParty => crate::two_party::run_naive(instance, config, rng),
        Topology::NaiveRing => crate::ring::run_naive(instance, config, rng),
        Topology::NaiveStar => crate::star::run_naive(instance, config, rng),
    }
}
