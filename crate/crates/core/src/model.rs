//! Instances: alphabet, feasible sets, objective and the orderings derived from it.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldVector, PrimeField};

/// Ordered list of distinct element labels. Element `k` is `labels[k]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Alphabet {
    labels: Vec<String>,
}

impl Alphabet {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidInstance("empty alphabet".into()));
        }
        let distinct: BTreeSet<&String> = labels.iter().collect();
        if distinct.len() != labels.len() {
            return Err(Error::InvalidInstance("duplicate alphabet label".into()));
        }
        Ok(Self { labels })
    }

    /// Labels `e0, e1, ...`.
    pub fn numbered(k: usize) -> Self {
        Self {
            labels: (0..k).map(|i| format!("e{i}")).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, k: usize) -> &str {
        &self.labels[k]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Non-empty subset of the alphabet, stored as element indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FeasibleSet {
    universe: usize,
    members: BTreeSet<usize>,
}

impl FeasibleSet {
    pub fn new(universe: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let members: BTreeSet<usize> = members.into_iter().collect();
        if members.is_empty() {
            return Err(Error::InvalidInstance("empty feasible set".into()));
        }
        if let Some(&m) = members.iter().find(|&&m| m >= universe) {
            return Err(Error::InvalidInstance(format!(
                "element {m} outside alphabet of size {universe}"
            )));
        }
        Ok(Self { universe, members })
    }

    pub fn from_labels<S: AsRef<str>>(alphabet: &Alphabet, labels: &[S]) -> Result<Self> {
        let mut idx = Vec::with_capacity(labels.len());
        for l in labels {
            let l = l.as_ref();
            idx.push(
                alphabet
                    .index_of(l)
                    .ok_or_else(|| Error::InvalidInstance(format!("unknown label {l:?}")))?,
            );
        }
        Self::new(alphabet.len(), idx)
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.members.contains(&k)
    }

    pub fn members(&self) -> &BTreeSet<usize> {
        &self.members
    }

    pub fn incidence(&self) -> IncidenceVector {
        IncidenceVector::from_support(self.universe, self.members.iter().copied())
    }
}

/// 0/1 vector of length K.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct IncidenceVector {
    bits: Vec<bool>,
}

impl IncidenceVector {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn from_support(len: usize, support: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = alloc::vec![false; len];
        for k in support {
            bits[k] = true;
        }
        Self { bits }
    }

    pub fn ones(len: usize) -> Self {
        Self {
            bits: alloc::vec![true; len],
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, k: usize) -> bool {
        self.bits[k]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn support(&self) -> BTreeSet<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn and(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(Self {
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a && b).collect(),
        })
    }

    /// Bits at the given positions, in order.
    pub fn gather(&self, indices: &[usize]) -> Vec<bool> {
        indices.iter().map(|&k| self.bits[k]).collect()
    }

    pub fn to_field(&self, field: PrimeField) -> FieldVector {
        FieldVector::from_bits(field, &self.bits)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Minimize,
    Maximize,
}

/// Public objective `f: [K] -> [1, tau]` with an explicit optimization direction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Objective {
    values: Vec<u32>,
    direction: Direction,
    tau: u32,
}

impl Objective {
    pub fn new(values: Vec<u32>, direction: Direction, tau: u32) -> Result<Self> {
        if tau == 0 {
            return Err(Error::InvalidInstance("tau must be positive".into()));
        }
        if let Some(&v) = values.iter().find(|&&v| v == 0 || v > tau) {
            return Err(Error::InvalidInstance(format!(
                "objective value {v} outside [1, {tau}]"
            )));
        }
        Ok(Self {
            values,
            direction,
            tau,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, k: usize) -> u32 {
        self.values[k]
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn tau(&self) -> u32 {
        self.tau
    }

    /// `Less` when value `a` is strictly better than value `b`.
    pub fn compare(&self, a: u32, b: u32) -> Ordering {
        match self.direction {
            Direction::Minimize => a.cmp(&b),
            Direction::Maximize => b.cmp(&a),
        }
    }

    /// Groups `elements` into runs of equal value, best value first; each run
    /// is in ascending element order.
    pub fn runs(&self, elements: impl IntoIterator<Item = usize>) -> Vec<Vec<usize>> {
        let mut els: Vec<usize> = elements.into_iter().collect();
        els.sort_by(|&a, &b| {
            self.compare(self.values[a], self.values[b])
                .then(a.cmp(&b))
        });
        let mut runs: Vec<Vec<usize>> = Vec::new();
        for k in els {
            match runs.last_mut() {
                Some(run) if self.values[run[0]] == self.values[k] => run.push(k),
                _ => runs.push(alloc::vec![k]),
            }
        }
        runs
    }

    /// Optimal elements of a non-empty set.
    pub fn optimal(&self, elements: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        self.runs(elements)
            .into_iter()
            .next()
            .map(|r| r.into_iter().collect())
            .unwrap_or_default()
    }
}

/// Ordering of the whole alphabet by objective value: partitions `I_r` of
/// sizes `mu_r`, and the permutation that lays them out consecutively.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GlobalProfile {
    partitions: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    order: Vec<usize>,
    position: Vec<usize>,
}

impl GlobalProfile {
    pub fn new(objective: &Objective) -> Self {
        let partitions = objective.runs(0..objective.len());
        let mut offsets = alloc::vec![0];
        for p in &partitions {
            offsets.push(offsets.last().unwrap() + p.len());
        }
        let order: Vec<usize> = partitions.iter().flatten().copied().collect();
        let mut position = alloc::vec![0; order.len()];
        for (p, &k) in order.iter().enumerate() {
            position[k] = p;
        }
        Self {
            partitions,
            offsets,
            order,
            position,
        }
    }

    /// Number of realized objective values `T`.
    pub fn rounds(&self) -> usize {
        self.partitions.len()
    }

    pub fn mu(&self) -> Vec<usize> {
        self.partitions.iter().map(Vec::len).collect()
    }

    /// Partition `I_r` for 1-based `r`.
    pub fn partition(&self, r: usize) -> &[usize] {
        &self.partitions[r - 1]
    }

    pub fn partitions(&self) -> &[Vec<usize>] {
        &self.partitions
    }

    /// Permuted positions occupied by partition `r` (1-based).
    pub fn range(&self, r: usize) -> Range<usize> {
        self.offsets[r - 1]..self.offsets[r]
    }

    /// Element at each permuted position.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Permuted position of element `k`.
    pub fn position(&self, k: usize) -> usize {
        self.position[k]
    }

    /// `X_hat = Pi_f(X)`.
    pub fn apply(&self, x: &IncidenceVector) -> IncidenceVector {
        IncidenceVector::from_bits(self.order.iter().map(|&k| x.get(k)).collect())
    }

    pub fn invert(&self, x_hat: &IncidenceVector) -> IncidenceVector {
        IncidenceVector::from_bits((0..self.order.len()).map(|k| x_hat.get(self.position[k])).collect())
    }
}

/// The leader's set split into runs `J_r` of equal objective value, best first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalProfile {
    runs: Vec<Vec<usize>>,
}

impl LocalProfile {
    pub fn new(objective: &Objective, set: &FeasibleSet) -> Self {
        Self {
            runs: objective.runs(set.members().iter().copied()),
        }
    }

    /// Number of runs `L`.
    pub fn rounds(&self) -> usize {
        self.runs.len()
    }

    pub fn alpha(&self) -> Vec<usize> {
        self.runs.iter().map(Vec::len).collect()
    }

    /// Run `J_r` for 1-based `r`.
    pub fn run(&self, r: usize) -> &[usize] {
        &self.runs[r - 1]
    }

    pub fn runs(&self) -> &[Vec<usize>] {
        &self.runs
    }

    /// `sum_{s <= r} alpha_s`.
    pub fn prefix(&self, r: usize) -> usize {
        self.runs[..r].iter().map(Vec::len).sum()
    }
}

/// A complete problem instance. Entity indices are 0-based; `databases[i]` is
/// the number of replicated databases of entity `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Instance {
    alphabet: Alphabet,
    sets: Vec<FeasibleSet>,
    objective: Objective,
    databases: Vec<usize>,
    leader: usize,
}

impl Instance {
    /// Validates the instance, including that the intersection is non-empty
    /// (reported as [`Error::EmptyIntersection`]).
    pub fn new(
        alphabet: Alphabet,
        sets: Vec<FeasibleSet>,
        objective: Objective,
        databases: Vec<usize>,
        leader: usize,
    ) -> Result<Self> {
        let k = alphabet.len();
        if sets.len() < 2 {
            return Err(Error::InvalidInstance("need at least two entities".into()));
        }
        if sets.iter().any(|s| s.universe() != k) {
            return Err(Error::InvalidInstance("set universe differs from alphabet".into()));
        }
        if objective.len() != k {
            return Err(Error::InvalidInstance("objective length differs from alphabet".into()));
        }
        if databases.len() != sets.len() {
            return Err(Error::InvalidInstance("one database count per entity required".into()));
        }
        if leader >= sets.len() {
            return Err(Error::InvalidInstance(format!("leader {leader} out of range")));
        }
        for (i, &n) in databases.iter().enumerate() {
            if n == 0 || (i != leader && n < 2) {
                return Err(Error::InvalidInstance(format!(
                    "entity {i} needs at least two databases"
                )));
            }
        }
        let inst = Self {
            alphabet,
            sets,
            objective,
            databases,
            leader,
        };
        if intersection_oracle(&inst).1 == 0 {
            return Err(Error::EmptyIntersection);
        }
        Ok(inst)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn k(&self) -> usize {
        self.alphabet.len()
    }

    pub fn entities(&self) -> usize {
        self.sets.len()
    }

    pub fn sets(&self) -> &[FeasibleSet] {
        &self.sets
    }

    pub fn set(&self, i: usize) -> &FeasibleSet {
        &self.sets[i]
    }

    pub fn incidence(&self, i: usize) -> IncidenceVector {
        self.sets[i].incidence()
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn databases(&self) -> &[usize] {
        &self.databases
    }

    pub fn leader(&self) -> usize {
        self.leader
    }

    /// Non-leader entities in ascending order.
    pub fn non_leaders(&self) -> Vec<usize> {
        (0..self.sets.len()).filter(|&i| i != self.leader).collect()
    }

    pub fn leader_profile(&self) -> LocalProfile {
        LocalProfile::new(&self.objective, &self.sets[self.leader])
    }

    pub fn global_profile(&self) -> GlobalProfile {
        GlobalProfile::new(&self.objective)
    }

    pub fn with_sets(&self, sets: Vec<FeasibleSet>) -> Result<Self> {
        Self::new(
            self.alphabet.clone(),
            sets,
            self.objective.clone(),
            self.databases.clone(),
            self.leader,
        )
    }

    pub fn with_objective(&self, objective: Objective) -> Result<Self> {
        Self::new(
            self.alphabet.clone(),
            self.sets.clone(),
            objective,
            self.databases.clone(),
            self.leader,
        )
    }

    pub fn with_databases(&self, databases: Vec<usize>) -> Result<Self> {
        Self::new(
            self.alphabet.clone(),
            self.sets.clone(),
            self.objective.clone(),
            databases,
            self.leader,
        )
    }

    /// Fails if the old leader has fewer than two databases.
    pub fn with_leader(&self, leader: usize) -> Result<Self> {
        Self::new(
            self.alphabet.clone(),
            self.sets.clone(),
            self.objective.clone(),
            self.databases.clone(),
            leader,
        )
    }
}

/// `X_cap = AND_i X_i` and its weight, computed directly from the sets.
pub fn intersection_oracle(instance: &Instance) -> (IncidenceVector, usize) {
    let k = instance.k();
    let bits: Vec<bool> = (0..k)
        .map(|e| instance.sets().iter().all(|s| s.contains(e)))
        .collect();
    let v = IncidenceVector::from_bits(bits);
    let n = v.count_ones();
    (v, n)
}

/// Optimal elements of the intersection.
pub fn solution_oracle(instance: &Instance) -> BTreeSet<usize> {
    let (x, _) = intersection_oracle(instance);
    instance.objective().optimal(x.support())
}

/// First leader run that meets the intersection.
pub fn nominal_round(instance: &Instance) -> usize {
    let (x, _) = intersection_oracle(instance);
    let profile = instance.leader_profile();
    (1..=profile.rounds())
        .find(|&r| profile.run(r).iter().any(|&k| x.get(k)))
        .expect("validated instance has a non-empty intersection")
}

/// First global partition that meets the intersection.
pub fn nominal_global_round(instance: &Instance) -> usize {
    let (x, _) = intersection_oracle(instance);
    let profile = instance.global_profile();
    (1..=profile.rounds())
        .find(|&r| profile.partition(r).iter().any(|&k| x.get(k)))
        .expect("validated instance has a non-empty intersection")
}

/// Elements whose membership the leader is entitled to learn when the
/// protocol stops at leader round `r`: `J_1 u ... u J_r`.
pub fn nominal_leakage_index_set(profile: &LocalProfile, r: usize) -> Result<BTreeSet<usize>> {
    if r == 0 || r > profile.rounds() {
        return Err(Error::RoundOutOfRange {
            round: r,
            rounds: profile.rounds(),
        });
    }
    Ok(profile.runs()[..r].iter().flatten().copied().collect())
}

/// Same for the global partitions: `I_1 u ... u I_r`.
pub fn nominal_global_leakage_index_set(profile: &GlobalProfile, r: usize) -> Result<BTreeSet<usize>> {
    if r == 0 || r > profile.rounds() {
        return Err(Error::RoundOutOfRange {
            round: r,
            rounds: profile.rounds(),
        });
    }
    Ok(profile.partitions()[..r].iter().flatten().copied().collect())
}
