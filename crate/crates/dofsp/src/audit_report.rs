//! Audit suite driver and its JSON report.

use dofsp_core::audit::{self, AuditConfig, CaseReport, CheckKind, SuiteCase};
use dofsp_core::randomness::seeded;
use dofsp_core::{run_protocol, Mutation, Topology};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, Result};

pub const BUDGET_ENV: &str = "DOFSP_AUDIT_BUDGET";

pub const PRIOR_NOTE: &str =
    "entropy assumes each non-leader set is uniform over sets of its declared size";

/// Which protocols to audit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProtocolChoice {
    /// Every suite case with its own protocol.
    Dofsp,
    /// Every suite case with the matching naive baseline.
    Naive,
    /// Only the cases of one topology (naive topologies run the naive
    /// baseline on the matching cases).
    Only(Topology),
}

impl ProtocolChoice {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.replace('_', "-");
        match s.as_str() {
            "dofsp" | "all" => Ok(ProtocolChoice::Dofsp),
            "naive" => Ok(ProtocolChoice::Naive),
            _ => Topology::parse(&s)
                .map(ProtocolChoice::Only)
                .ok_or_else(|| CliError::Usage(format!("unknown protocol {s:?}"))),
        }
    }
}

fn naive_of(t: Topology) -> Topology {
    match t {
        Topology::TwoParty => Topology::NaiveTwoParty,
        Topology::Ring => Topology::NaiveRing,
        Topology::Star => Topology::NaiveStar,
        t => t,
    }
}

/// Suite cases for the choice, with topologies swapped where needed.
pub fn select_cases(choice: ProtocolChoice) -> Vec<SuiteCase> {
    let mut cases = audit::default_suite();
    match choice {
        ProtocolChoice::Dofsp => {}
        ProtocolChoice::Naive => cases.iter_mut().for_each(|c| c.topology = naive_of(c.topology)),
        ProtocolChoice::Only(t) => {
            cases.retain(|c| c.topology == t || naive_of(c.topology) == t);
            cases.iter_mut().for_each(|c| c.topology = t);
        }
    }
    cases
}

/// Budget from the environment, or the default.
pub fn budget_from_env() -> Result<u64> {
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{BUDGET_ENV} must be an integer, got {v:?}"))),
        Err(_) => Ok(audit::DEFAULT_BUDGET),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseSummary {
    pub case: &'static str,
    pub topology: Topology,
    pub passed: bool,
    pub downgraded: bool,
    /// Elements the leader decodes knowledge about in a seeded run.
    pub leader_knowledge: Vec<usize>,
    /// Elements the leader is entitled to learn about.
    pub nominal_index_set: Vec<usize>,
    /// Entropy of the non-leaders' bits on the nominal index set.
    pub nominal_entropy_bits: f64,
    pub report: CaseReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub protocol: String,
    pub mutation: Option<Mutation>,
    pub expect_leak: bool,
    pub budget: u64,
    pub seed: u64,
    pub prior: &'static str,
    pub passed: bool,
    /// Any leader check failed.
    pub leak_found: bool,
    pub downgraded: bool,
    pub cases: Vec<CaseSummary>,
}

impl AuditReport {
    /// Whether the command should exit successfully.
    pub fn success(&self) -> bool {
        if self.expect_leak {
            self.leak_found
        } else {
            self.passed
        }
    }
}

fn summarize(case: &SuiteCase, cfg: &AuditConfig) -> Result<CaseSummary> {
    let report = audit::run_case(case, cfg)?;
    let inst = &case.instance;
    let out = run_protocol(case.topology, inst, &cfg.protocol, &mut seeded(cfg.seed))?;
    let nominal = audit::nominal_index_set(case.topology, inst);
    let entropy = inst
        .non_leaders()
        .iter()
        .map(|&i| audit::nominal_entropy_bits(inst.k(), inst.set(i).len(), nominal.len()))
        .sum();
    Ok(CaseSummary {
        case: case.name,
        topology: case.topology,
        passed: report.passed(),
        downgraded: report.verdicts.iter().any(|v| v.downgraded),
        leader_knowledge: out.leader_knowledge.iter().copied().collect(),
        nominal_index_set: nominal.into_iter().collect(),
        nominal_entropy_bits: entropy,
        report,
    })
}

pub fn run(
    protocol: &str,
    mutation: Option<Mutation>,
    expect_leak: bool,
    seed: u64,
    budget: u64,
) -> Result<AuditReport> {
    let choice = ProtocolChoice::parse(protocol)?;
    let cases = select_cases(choice);
    if cases.is_empty() {
        return Err(CliError::Usage(format!("no audit cases for protocol {protocol:?}")));
    }
    let mut cfg = AuditConfig { budget, seed, ..AuditConfig::default() };
    cfg.protocol.mutation = mutation;
    let summaries = cases
        .par_iter()
        .map(|c| summarize(c, &cfg))
        .collect::<Result<Vec<_>>>()?;
    let leak_found = summaries.iter().any(|s| {
        s.report
            .verdicts
            .iter()
            .any(|v| v.check == CheckKind::LeaderNominalLeakage && !v.passed)
    });
    Ok(AuditReport {
        protocol: protocol.to_string(),
        mutation,
        expect_leak,
        budget,
        seed,
        prior: PRIOR_NOTE,
        passed: summaries.iter().all(|s| s.passed),
        leak_found,
        downgraded: summaries.iter().any(|s| s.downgraded),
        cases: summaries,
    })
}
