//! Exhaustive checks of the privacy and correctness claims on small instances.
//!
//! A check fixes a topology and a family of counterfactual instances (the
//! base instance with some entities' sets replaced by every other set of the
//! same size). For each counterfactual it enumerates every randomness tape,
//! collects the observer's view of each run, and compares the resulting
//! distributions with exact integer arithmetic.
//!
//! * Database zero leakage: views of one database must be identically
//!   distributed across all counterfactual sets of the other entities.
//!   Message counts reveal when the protocol stopped, so counterfactuals are
//!   only compared when their traffic shape matches.
//! * Leader leakage: the leader's view may depend on the other sets only
//!   through what it is entitled to learn (their bits on the nominal index
//!   set), and the knowledge set the protocol reports must be that set.
//! * Reliability: every run decodes the true optimal set.
//!
//! When a counterfactual has more tapes than the budget, the check falls back
//! to seeded sampling and a chi-square homogeneity test per view coordinate,
//! and the verdict is marked as downgraded.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    intersection_oracle, nominal_global_leakage_index_set, nominal_global_round, nominal_leakage_index_set,
    nominal_round, solution_oracle, FeasibleSet, Instance,
};
use crate::protocol::{run_protocol, Outcome, ProtocolConfig, Topology};
use crate::randomness::{derive_seed, seeded, TapeRandomness};
use crate::transcript::{Event, Holder, MessageKind, Node, RandomnessKind};

/// Default cap on enumerated randomness tapes per instance.
pub const DEFAULT_BUDGET: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditConfig {
    pub budget: u64,
    /// Runs per counterfactual when a check is downgraded to sampling.
    pub samples: u64,
    pub seed: u64,
    pub protocol: ProtocolConfig,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            samples: 2000,
            seed: 0,
            protocol: ProtocolConfig::default(),
        }
    }
}

fn node_code(n: Node) -> [u32; 2] {
    match n {
        Node::Leader => [u32::MAX, u32::MAX],
        Node::Database { entity, db } => [entity as u32, db as u32],
    }
}

fn holder_code(h: Holder) -> u32 {
    match h {
        Holder::Leader => u32::MAX,
        Holder::NonLeaders => u32::MAX - 1,
        Holder::Entity(i) => i as u32,
    }
}

fn kind_code(k: MessageKind) -> u32 {
    k as u32
}

fn randomness_code(k: RandomnessKind) -> u32 {
    k as u32
}

/// Canonical flat encoding of a view.
pub fn encode_view(events: &[Event]) -> Vec<u32> {
    let mut out = Vec::new();
    for e in events {
        match e {
            Event::Message(m) => {
                out.push(0);
                out.push(m.round as u32);
                out.extend(node_code(m.from));
                out.extend(node_code(m.to));
                out.push(kind_code(m.kind));
                out.push(m.payload.len() as u32);
                out.extend(&m.payload);
            }
            Event::Randomness(r) => {
                out.push(1);
                out.push(r.round as u32);
                out.push(holder_code(r.holder));
                out.push(randomness_code(r.kind));
                out.push(r.index as u32);
                out.push(r.values.len() as u32);
                out.extend(&r.values);
            }
        }
    }
    out
}

/// Message metadata only: who talked to whom, when, and how much.
pub fn traffic_shape(events: &[Event]) -> Vec<u32> {
    let mut out = Vec::new();
    for e in events {
        match e {
            Event::Message(m) => {
                out.push(m.round as u32);
                out.extend(node_code(m.from));
                out.extend(node_code(m.to));
                out.push(kind_code(m.kind));
                out.push(m.payload.len() as u32);
            }
            Event::Randomness(r) => {
                out.push(u32::MAX);
                out.push(holder_code(r.holder));
                out.push(randomness_code(r.kind));
                out.push(r.values.len() as u32);
            }
        }
    }
    out
}

/// Exact distribution of one observer's view over all randomness tapes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViewDistribution {
    pub observer: Node,
    pub counts: BTreeMap<Vec<u32>, u64>,
    pub total: u64,
}

impl ViewDistribution {
    /// Probability of `view` as `(count, total)`.
    pub fn probability(&self, view: &[u32]) -> (u64, u64) {
        (self.counts.get(view).copied().unwrap_or(0), self.total)
    }

    /// A view whose probability differs, or `None` if the distributions are
    /// identical. Compares `a/s == b/t` as `a t == b s`.
    pub fn difference(&self, other: &Self) -> Option<Vec<u32>> {
        let (s, t) = (self.total as u128, other.total as u128);
        for (v, &a) in &self.counts {
            let b = other.counts.get(v).copied().unwrap_or(0);
            if a as u128 * t != b as u128 * s {
                return Some(v.clone());
            }
        }
        other
            .counts
            .keys()
            .find(|v| !self.counts.contains_key(*v))
            .cloned()
    }
}

/// Calls `f` on the outcome of every randomness tape. Fails before running
/// more than one tape if the tape space exceeds `budget`. Returns the number
/// of tapes.
pub fn enumerate_runs(
    topology: Topology,
    instance: &Instance,
    config: &ProtocolConfig,
    budget: u64,
    mut f: impl FnMut(Result<Outcome>) -> Result<()>,
) -> Result<u64> {
    let mut tape = TapeRandomness::new();
    let mut runs: u64 = 0;
    loop {
        tape.rewind();
        let out = run_protocol(topology, instance, config, &mut tape);
        if runs == 0 {
            let space = tape.space_size().unwrap_or(u128::MAX);
            if space > budget as u128 {
                return Err(Error::BudgetExceeded { budget });
            }
        }
        runs += 1;
        f(out)?;
        if !tape.advance() {
            break;
        }
    }
    if tape.schedule_violated() {
        return Err(Error::Contract("randomness requests depend on drawn values".into()));
    }
    Ok(runs)
}

/// Number of tapes a run of this instance consumes.
pub fn tape_space(topology: Topology, instance: &Instance, config: &ProtocolConfig) -> Result<u128> {
    let mut tape = TapeRandomness::new();
    run_protocol(topology, instance, config, &mut tape)?;
    Ok(tape.space_size().unwrap_or(u128::MAX))
}

pub fn view_distribution(
    topology: Topology,
    instance: &Instance,
    config: &ProtocolConfig,
    observer: Node,
    budget: u64,
) -> Result<ViewDistribution> {
    let mut counts = BTreeMap::new();
    let total = enumerate_runs(topology, instance, config, budget, |out| {
        let out = out?;
        *counts.entry(encode_view(&out.transcript.view(observer))).or_insert(0) += 1;
        Ok(())
    })?;
    Ok(ViewDistribution { observer, counts, total })
}

/// The base instance with the sets of `vary` replaced by every set of the
/// same size, keeping only instances with a non-empty intersection.
#[derive(Clone, Debug)]
pub struct Family {
    pub base: Instance,
    pub vary: Vec<usize>,
}

fn subsets_of_size(k: usize, size: usize) -> Vec<BTreeSet<usize>> {
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << k) {
        if mask.count_ones() as usize == size {
            out.push((0..k).filter(|&i| mask >> i & 1 == 1).collect());
        }
    }
    out
}

impl Family {
    pub fn new(base: Instance, vary: Vec<usize>) -> Self {
        Self { base, vary }
    }

    /// Vary every non-leader entity (the leader's own set stays fixed).
    pub fn for_leader(base: Instance) -> Self {
        let vary = base.non_leaders();
        Self { base, vary }
    }

    /// Vary every entity except `entity`.
    pub fn for_entity(base: Instance, entity: usize) -> Self {
        let vary = (0..base.entities()).filter(|&i| i != entity).collect();
        Self { base, vary }
    }

    pub fn counterfactuals(&self) -> Vec<Instance> {
        let k = self.base.k();
        let options: Vec<Vec<BTreeSet<usize>>> = self
            .vary
            .iter()
            .map(|&i| subsets_of_size(k, self.base.set(i).len()))
            .collect();
        let mut out = Vec::new();
        let mut idx = alloc::vec![0usize; self.vary.len()];
        loop {
            let mut sets: Vec<FeasibleSet> = self.base.sets().to_vec();
            for (slot, &i) in self.vary.iter().enumerate() {
                sets[i] = FeasibleSet::new(k, options[slot][idx[slot]].iter().copied()).expect("non-empty subset");
            }
            if let Ok(inst) = self.base.with_sets(sets) {
                out.push(inst);
            }
            let mut p = 0;
            loop {
                if p == idx.len() {
                    return out;
                }
                idx[p] += 1;
                if idx[p] < options[p].len() {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Reliability,
    DatabaseZeroLeakage,
    LeaderNominalLeakage,
}

/// What the leader is entitled to learn when grouping counterfactuals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakageReference {
    /// Each non-leader's bits on the nominal index set.
    PerEntity,
    /// Only the intersection's bits on the nominal index set.
    Intersection,
}

impl LeakageReference {
    pub fn default_for(topology: Topology) -> Self {
        if topology.uses_global_order() {
            LeakageReference::Intersection
        } else {
            LeakageReference::PerEntity
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub reason: String,
    /// Feasible sets of the counterfactual(s) involved.
    pub sets: Vec<Vec<Vec<usize>>>,
    /// A view (event list) that occurs with different probability, if any.
    pub view: Option<Vec<Event>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub check: CheckKind,
    pub topology: Topology,
    pub observer: Option<Node>,
    pub reference: Option<LeakageReference>,
    pub passed: bool,
    pub instances: usize,
    /// Runs executed (tapes enumerated, or samples drawn).
    pub runs: u64,
    /// Pairs of counterfactuals whose views were compared.
    pub comparisons: usize,
    /// True if some counterfactual exceeded the budget and was sampled.
    pub downgraded: bool,
    pub counterexample: Option<Counterexample>,
}

fn set_lists(inst: &Instance) -> Vec<Vec<usize>> {
    inst.sets().iter().map(|s| s.members().iter().copied().collect()).collect()
}

/// DOFSP topology whose nominal leakage a naive baseline is measured against.
fn nominal_topology(t: Topology) -> Topology {
    match t {
        Topology::NaiveTwoParty => Topology::TwoParty,
        Topology::NaiveRing => Topology::Ring,
        Topology::NaiveStar => Topology::Star,
        t => t,
    }
}

/// Index set the leader may learn about, by the oracle.
pub fn nominal_index_set(topology: Topology, instance: &Instance) -> BTreeSet<usize> {
    if nominal_topology(topology).uses_global_order() {
        let g = instance.global_profile();
        nominal_global_leakage_index_set(&g, nominal_global_round(instance)).expect("valid round")
    } else {
        let p = instance.leader_profile();
        nominal_leakage_index_set(&p, nominal_round(instance)).expect("valid round")
    }
}

fn leader_key(topology: Topology, instance: &Instance, reference: LeakageReference) -> Vec<u32> {
    let nominal: Vec<usize> = nominal_index_set(topology, instance).into_iter().collect();
    let mut key: Vec<u32> = nominal.iter().map(|&u| u as u32).collect();
    key.push(u32::MAX);
    match reference {
        LeakageReference::PerEntity => {
            for i in instance.non_leaders() {
                let x = instance.incidence(i);
                key.extend(x.gather(&nominal).into_iter().map(u32::from));
            }
        }
        LeakageReference::Intersection => {
            let (x, _) = intersection_oracle(instance);
            key.extend(x.gather(&nominal).into_iter().map(u32::from));
        }
    }
    key
}

/// The field is a public parameter, so a family is compared under one field:
/// the largest protocol default over its members (valid for all of them).
fn pinned(topology: Topology, instances: &[Instance], cfg: &AuditConfig) -> Result<AuditConfig> {
    let mut cfg = cfg.clone();
    if cfg.protocol.field.is_none() {
        let mut q = 0;
        for inst in instances {
            let mut tape = TapeRandomness::new();
            q = q.max(run_protocol(topology, inst, &cfg.protocol, &mut tape)?.field.modulus());
        }
        cfg.protocol.field = Some(q);
    }
    Ok(cfg)
}

/// Views of one counterfactual: exact distribution or a sample list.
enum Collected {
    Exact(ViewDistribution),
    Sampled(Vec<Vec<u32>>),
}

struct Member {
    instance: Instance,
    shape: Vec<u32>,
    views: Collected,
}

fn collect(
    topology: Topology,
    instance: &Instance,
    observer: Node,
    cfg: &AuditConfig,
    branch: u64,
    runs: &mut u64,
    mut on_outcome: impl FnMut(&Outcome) -> Option<String>,
) -> Result<(Member, Option<String>)> {
    let mut failure = None;
    let mut shape = None;
    let mut record = |out: &Outcome, failure: &mut Option<String>| -> Vec<u32> {
        let view = out.transcript.view(observer);
        if shape.is_none() {
            shape = Some(traffic_shape(&view));
        }
        if failure.is_none() {
            *failure = on_outcome(out);
        }
        encode_view(&view)
    };
    let exact = {
        let mut counts = BTreeMap::new();
        enumerate_runs(topology, instance, &cfg.protocol, cfg.budget, |out| {
            let out = out?;
            let v = record(&out, &mut failure);
            *counts.entry(v).or_insert(0u64) += 1;
            Ok(())
        })
        .map(|total| ViewDistribution { observer, counts, total })
    };
    let views = match exact {
        Ok(d) => {
            *runs += d.total;
            Collected::Exact(d)
        }
        Err(Error::BudgetExceeded { .. }) => {
            let mut rng = seeded(derive_seed(cfg.seed, branch));
            let mut list = Vec::with_capacity(cfg.samples as usize);
            for _ in 0..cfg.samples {
                let out = run_protocol(topology, instance, &cfg.protocol, &mut rng)?;
                list.push(record(&out, &mut failure));
            }
            *runs += cfg.samples;
            Collected::Sampled(list)
        }
        Err(e) => return Err(e),
    };
    Ok((
        Member {
            instance: instance.clone(),
            shape: shape.unwrap_or_default(),
            views,
        },
        failure,
    ))
}

/// Chi-square critical value at upper tail 1e-6 (Wilson-Hilferty).
fn chi_square_critical(df: f64) -> f64 {
    const Z: f64 = 4.753;
    let a = 2.0 / (9.0 * df);
    df * libm::pow(1.0 - a + Z * libm::sqrt(a), 3.0)
}

/// Homogeneity test of every coordinate's marginal across sample lists.
fn samples_homogeneous(lists: &[&Vec<Vec<u32>>]) -> bool {
    let width = match lists.first().and_then(|l| l.first()) {
        Some(v) => v.len(),
        None => return true,
    };
    if lists.iter().any(|l| l.iter().any(|v| v.len() != width)) {
        return false;
    }
    for p in 0..width {
        let mut table: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
        for (row, l) in lists.iter().enumerate() {
            for v in l.iter() {
                table.entry(v[p]).or_insert_with(|| alloc::vec![0; lists.len()])[row] += 1;
            }
        }
        if table.len() < 2 {
            continue;
        }
        let rows: Vec<f64> = lists.iter().map(|l| l.len() as f64).collect();
        let n: f64 = rows.iter().sum();
        let mut stat = 0.0;
        for counts in table.values() {
            let col: f64 = counts.iter().map(|&c| c as f64).sum();
            for (r, &c) in counts.iter().enumerate() {
                let e = rows[r] * col / n;
                stat += (c as f64 - e) * (c as f64 - e) / e;
            }
        }
        let df = ((lists.len() - 1) * (table.len() - 1)) as f64;
        if stat > chi_square_critical(df) {
            return false;
        }
    }
    true
}

/// Finds the full event list of a run of `instance` whose encoded view is `target`.
fn find_view(topology: Topology, instance: &Instance, observer: Node, cfg: &AuditConfig, target: &[u32]) -> Option<Vec<Event>> {
    let mut found = None;
    let _ = enumerate_runs(topology, instance, &cfg.protocol, cfg.budget, |out| {
        if found.is_none() {
            if let Ok(out) = out {
                let v = out.transcript.view(observer);
                if encode_view(&v) == target {
                    found = Some(v);
                }
            }
        }
        Ok(())
    });
    found
}

/// Compares members grouped by key; returns the first mismatch.
fn compare_groups(
    topology: Topology,
    groups: &BTreeMap<Vec<u32>, Vec<Member>>,
    observer: Node,
    cfg: &AuditConfig,
) -> (usize, Option<Counterexample>) {
    let mut comparisons = 0;
    for members in groups.values() {
        let first = &members[0];
        for other in &members[1..] {
            comparisons += 1;
            match (&first.views, &other.views) {
                (Collected::Exact(a), Collected::Exact(b)) => {
                    if let Some(v) = a.difference(b) {
                        let (ca, ta) = a.probability(&v);
                        let (cb, tb) = b.probability(&v);
                        let view = if ca > 0 {
                            find_view(topology, &first.instance, observer, cfg, &v)
                        } else {
                            find_view(topology, &other.instance, observer, cfg, &v)
                        };
                        return (comparisons, Some(Counterexample {
                            reason: format!(
                                "view has probability {ca}/{ta} under the first sets and {cb}/{tb} under the second"
                            ),
                            sets: alloc::vec![set_lists(&first.instance), set_lists(&other.instance)],
                            view,
                        }));
                    }
                }
                (a, b) => {
                    let la = sample_list(a);
                    let lb = sample_list(b);
                    if !samples_homogeneous(&[&la, &lb]) {
                        return (comparisons, Some(Counterexample {
                            reason: "sampled view marginals differ (chi-square homogeneity rejected)".into(),
                            sets: alloc::vec![set_lists(&first.instance), set_lists(&other.instance)],
                            view: None,
                        }));
                    }
                }
            }
        }
    }
    (comparisons, None)
}

fn sample_list(c: &Collected) -> Vec<Vec<u32>> {
    match c {
        Collected::Sampled(l) => l.clone(),
        Collected::Exact(d) => {
            // Expand into a list proportional to the exact counts, capped.
            let mut out = Vec::new();
            let scale = (d.total / 4096).max(1);
            for (v, &c) in &d.counts {
                for _ in 0..(c / scale).max(1) {
                    out.push(v.clone());
                }
            }
            out
        }
    }
}

/// Every run decodes the oracle's optimal set, and DOFSP runs stop at the
/// nominal round.
pub fn reliability_check(topology: Topology, family: &Family, cfg: &AuditConfig) -> Result<Verdict> {
    let instances = family.counterfactuals();
    let mut runs = 0;
    let mut downgraded = false;
    let mut counterexample = None;
    for (b, inst) in instances.iter().enumerate() {
        let want = solution_oracle(inst);
        let nominal = if topology.is_naive() {
            None
        } else if topology.uses_global_order() {
            Some(nominal_global_round(inst))
        } else {
            Some(nominal_round(inst))
        };
        let check = |res: Result<Outcome>| -> Option<String> {
            match res {
                Err(e) => Some(format!("run failed: {e}")),
                Ok(out) if out.solution != want => Some(format!(
                    "decoded {:?}, optimal set is {:?}",
                    out.solution, want
                )),
                Ok(out) if nominal.is_some_and(|r| r != out.stopping_round) => Some(format!(
                    "stopped at round {}, expected {}",
                    out.stopping_round,
                    nominal.unwrap()
                )),
                Ok(_) => None,
            }
        };
        let mut failure = None;
        let res = enumerate_runs(topology, inst, &cfg.protocol, cfg.budget, |out| {
            if failure.is_none() {
                failure = check(out);
            }
            Ok(())
        });
        match res {
            Ok(n) => runs += n,
            Err(Error::BudgetExceeded { .. }) => {
                downgraded = true;
                let mut rng = seeded(derive_seed(cfg.seed, b as u64));
                for _ in 0..cfg.samples {
                    let out = run_protocol(topology, inst, &cfg.protocol, &mut rng);
                    if failure.is_none() {
                        failure = check(out);
                    }
                }
                runs += cfg.samples;
            }
            Err(e) => return Err(e),
        }
        if let Some(reason) = failure {
            counterexample = Some(Counterexample {
                reason,
                sets: alloc::vec![set_lists(inst)],
                view: None,
            });
            break;
        }
    }
    Ok(Verdict {
        check: CheckKind::Reliability,
        topology,
        observer: None,
        reference: None,
        passed: counterexample.is_none(),
        instances: instances.len(),
        runs,
        comparisons: 0,
        downgraded,
        counterexample,
    })
}

/// Views of database `observer` are identically distributed across all
/// counterfactual sets of the other entities with the same traffic shape.
pub fn zero_leakage_check(topology: Topology, family: &Family, observer: Node, cfg: &AuditConfig) -> Result<Verdict> {
    let instances = family.counterfactuals();
    let cfg = &pinned(topology, &instances, cfg)?;
    let mut runs = 0;
    let mut groups: BTreeMap<Vec<u32>, Vec<Member>> = BTreeMap::new();
    let mut downgraded = false;
    for (b, inst) in instances.iter().enumerate() {
        let (m, _) = collect(topology, inst, observer, cfg, b as u64, &mut runs, |_| None)?;
        downgraded |= matches!(m.views, Collected::Sampled(_));
        groups.entry(m.shape.clone()).or_default().push(m);
    }
    let (comparisons, counterexample) = compare_groups(topology, &groups, observer, cfg);
    Ok(Verdict {
        check: CheckKind::DatabaseZeroLeakage,
        topology,
        observer: Some(observer),
        reference: None,
        passed: counterexample.is_none(),
        instances: instances.len(),
        runs,
        comparisons,
        downgraded,
        counterexample,
    })
}

/// The leader's view depends on the other sets only through the reference
/// bits on the nominal index set, and the reported knowledge set is nominal.
pub fn leader_leakage_check(
    topology: Topology,
    family: &Family,
    reference: LeakageReference,
    cfg: &AuditConfig,
) -> Result<Verdict> {
    let instances = family.counterfactuals();
    let cfg = &pinned(topology, &instances, cfg)?;
    let mut runs = 0;
    let mut groups: BTreeMap<Vec<u32>, Vec<Member>> = BTreeMap::new();
    let mut downgraded = false;
    let mut counterexample = None;
    for (b, inst) in instances.iter().enumerate() {
        let nominal = nominal_index_set(topology, inst);
        let (m, failure) = collect(topology, inst, Node::Leader, cfg, b as u64, &mut runs, |out| {
            (out.leader_knowledge != nominal).then(|| {
                format!(
                    "leader decodes membership of {:?}, nominal set is {:?}",
                    out.leader_knowledge, nominal
                )
            })
        })?;
        downgraded |= matches!(m.views, Collected::Sampled(_));
        if let (Some(reason), None) = (failure, &counterexample) {
            counterexample = Some(Counterexample {
                reason,
                sets: alloc::vec![set_lists(inst)],
                view: None,
            });
        }
        let mut key = m.shape.clone();
        key.push(u32::MAX);
        key.extend(leader_key(topology, inst, reference));
        groups.entry(key).or_default().push(m);
    }
    let (comparisons, mismatch) = compare_groups(topology, &groups, Node::Leader, cfg);
    if counterexample.is_none() {
        counterexample = mismatch;
    }
    Ok(Verdict {
        check: CheckKind::LeaderNominalLeakage,
        topology,
        observer: Some(Node::Leader),
        reference: Some(reference),
        passed: counterexample.is_none(),
        instances: instances.len(),
        runs,
        comparisons,
        downgraded,
        counterexample,
    })
}

/// Entropy in bits of a uniformly random `set_size`-subset of `[k]`
/// restricted to `positions` indices: the nominal leakage about one entity
/// under a uniform prior over sets of the declared size.
pub fn nominal_entropy_bits(k: usize, set_size: usize, positions: usize) -> f64 {
    let ln_binom = |n: usize, r: usize| -> Option<f64> {
        (r <= n).then(|| libm::lgamma(n as f64 + 1.0) - libm::lgamma(r as f64 + 1.0) - libm::lgamma((n - r) as f64 + 1.0))
    };
    let total = ln_binom(k, set_size).expect("set fits the alphabet");
    let mut h = 0.0;
    for w in 0..=positions.min(set_size) {
        let (Some(rest), Some(ways)) = (ln_binom(k - positions, set_size - w), ln_binom(positions, w)) else {
            continue;
        };
        // Probability of one particular restriction with w ones.
        let ln_p = rest - total;
        let p = libm::exp(ln_p);
        h -= libm::exp(ways) * p * ln_p / core::f64::consts::LN_2;
    }
    h
}

/// A small instance plus the checks run on it.
#[derive(Clone, Debug)]
pub struct SuiteCase {
    pub name: &'static str,
    pub topology: Topology,
    pub instance: Instance,
    /// Databases whose view is checked for zero leakage.
    pub observers: Vec<Node>,
    pub leader_check: bool,
}

fn suite_instance(values: &[u32], tau: u32, sets: &[&[usize]], databases: &[usize]) -> Instance {
    let k = values.len();
    let objective = crate::model::Objective::new(values.to_vec(), crate::model::Direction::Maximize, tau)
        .expect("valid objective");
    let sets = sets
        .iter()
        .map(|s| FeasibleSet::new(k, s.iter().copied()).expect("valid set"))
        .collect();
    Instance::new(crate::model::Alphabet::numbered(k), sets, objective, databases.to_vec(), 0).expect("valid instance")
}

fn all_databases(instance: &Instance) -> Vec<Node> {
    instance
        .non_leaders()
        .into_iter()
        .flat_map(|e| (0..instance.databases()[e]).map(move |db| Node::Database { entity: e, db }))
        .collect()
}

/// Instances small enough to enumerate every randomness tape.
pub fn default_suite() -> Vec<SuiteCase> {
    let tp_a = suite_instance(&[2, 2, 1, 1], 2, &[&[0, 1, 2], &[0, 2]], &[1, 2]);
    let tp_b = suite_instance(&[2, 1, 1], 2, &[&[0, 1], &[0, 2]], &[1, 3]);
    let ring_a = suite_instance(&[2, 2, 1], 2, &[&[0, 1], &[0, 2], &[0, 1]], &[1, 2, 2]);
    let ring_b = suite_instance(&[1, 1], 1, &[&[0], &[0, 1], &[0]], &[1, 2, 2]);
    let star_a = suite_instance(&[2, 1, 1], 2, &[&[0, 1], &[0, 2], &[0, 1]], &[1, 3, 3]);
    alloc::vec![
        SuiteCase { name: "two-party-a", topology: Topology::TwoParty, instance: tp_a, observers: Vec::new(), leader_check: true },
        SuiteCase { name: "two-party-b", observers: all_databases(&tp_b), topology: Topology::TwoParty, instance: tp_b, leader_check: true },
        SuiteCase { name: "ring-a", observers: all_databases(&ring_a), topology: Topology::Ring, instance: ring_a, leader_check: true },
        SuiteCase { name: "ring-b", observers: all_databases(&ring_b), topology: Topology::Ring, instance: ring_b, leader_check: true },
        SuiteCase { name: "star-a", observers: all_databases(&star_a), topology: Topology::Star, instance: star_a, leader_check: true },
    ]
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub case: &'static str,
    pub mutation: Option<crate::protocol::Mutation>,
    pub verdicts: Vec<Verdict>,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

/// Runs reliability, every database check and the leader check on one case.
pub fn run_case(case: &SuiteCase, cfg: &AuditConfig) -> Result<CaseReport> {
    let mut verdicts = Vec::new();
    verdicts.push(reliability_check(case.topology, &Family::for_leader(case.instance.clone()), cfg)?);
    for &obs in &case.observers {
        let Node::Database { entity, .. } = obs else { continue };
        let family = Family::for_entity(case.instance.clone(), entity);
        verdicts.push(zero_leakage_check(case.topology, &family, obs, cfg)?);
    }
    if case.leader_check {
        let family = Family::for_leader(case.instance.clone());
        let reference = LeakageReference::default_for(case.topology);
        verdicts.push(leader_leakage_check(case.topology, &family, reference, cfg)?);
    }
    Ok(CaseReport { case: case.name, mutation: cfg.protocol.mutation, verdicts })
}
