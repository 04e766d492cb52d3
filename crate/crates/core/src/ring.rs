//! Ring topology: the leader sends two queries into a chain of entities; each
//! hop multiplies in its own (permuted) incidence slice and adds a shared mask,
//! and the last entity answers the leader.
//!
//! The alphabet is split into partitions of equal objective value, best first.
//! Round `r` counts the intersection inside partition `r`; the first non-empty
//! partition is then opened element-wise.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::field::{FieldVector, PrimeField};
use crate::model::{nominal_global_leakage_index_set, GlobalProfile, Instance};
use crate::protocol::{HitKind, Mutation, Outcome, ProtocolConfig, RoundRecord, Topology};
use crate::randomness::Randomness;
use crate::transcript::{Holder, MessageKind, Node, RandomnessKind, Session};

/// Rounds served by each of the `n_eff` database positions (0-based
/// positions, 1-based rounds). Each round is served by exactly two positions.
pub fn round_assignment(n_eff: usize, t: usize) -> Result<Vec<BTreeSet<usize>>> {
    if n_eff < 2 || t == 0 {
        return Err(Error::InvalidParameters(format!(
            "round assignment needs n_eff >= 2 and T >= 1, got {n_eff}, {t}"
        )));
    }
    if n_eff == 2 {
        let all: BTreeSet<usize> = (1..=t).collect();
        return Ok(alloc::vec![all.clone(), all]);
    }
    let n = n_eff;
    let mut sets = Vec::with_capacity(n);
    for j in 1..=n {
        let mut s = BTreeSet::new();
        if n % 2 == 0 {
            let c = j.div_ceil(2);
            if c <= t {
                for k in 0..=(2 * (t - c)) / n {
                    s.insert(k * n / 2 + c);
                }
            }
        } else if j % 2 == 1 {
            let hi = (2 * t).saturating_sub(j + 1).div_ceil(n);
            for k in 0..=hi {
                s.insert(k * n / 2 + (j + 1) / 2);
            }
        } else {
            let hi = (2 * t).saturating_sub(j) / n;
            for k in 0..=hi {
                s.insert((k * n).div_ceil(2) + j / 2);
            }
        }
        s.retain(|&r| r <= t);
        sets.push(s);
    }
    for r in 1..=t {
        let holders = sets.iter().filter(|s| s.contains(&r)).count();
        if holders != 2 {
            return Err(Error::Contract(format!(
                "round {r} assigned to {holders} database positions"
            )));
        }
    }
    Ok(sets)
}

/// The two database positions serving round `r`, ascending.
pub fn round_pair(assignment: &[BTreeSet<usize>], r: usize) -> Result<(usize, usize)> {
    let mut it = assignment.iter().enumerate().filter(|(_, s)| s.contains(&r)).map(|(j, _)| j);
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) => Ok((a, b)),
        _ => Err(Error::Contract(format!("round {r} has no database pair"))),
    }
}

/// Smallest prime above `max(max_r mu_r, 2)`.
pub fn default_field(profile: &GlobalProfile) -> PrimeField {
    let max_mu = profile.mu().into_iter().max().unwrap_or(1).max(2);
    PrimeField::smallest_above(max_mu as u32)
}

/// Total symbols exchanged when the protocol stops at partition `r`.
pub fn closed_form_cost(r: usize, mu: &[usize], n: usize, hit: HitKind) -> usize {
    let t = mu.len();
    let counted = if hit == HitKind::Forced { r - 1 } else { r };
    let mut c: usize = mu[..counted].iter().map(|&m| 2 * (n - 1) * m + 2).sum();
    if hit == HitKind::Partial {
        let signal = if r < t { 2 } else { 0 };
        c += signal + 2 * (mu[r - 1] - 1);
    }
    c
}

/// The cost expression as printed for the last-round single-element case,
/// `2NK + 2(R - 1 - sum_{r<=R} mu_r)`. It exceeds the simulated cost by
/// `2(N-1)`, the cost of the round that is never run.
pub fn printed_forced_cost(mu: &[usize], n: usize) -> usize {
    let k: usize = mu.iter().sum();
    2 * n * k + 2 * (mu.len() - 1) - 2 * k
}

pub fn naive_cost(n: usize, k: usize) -> usize {
    2 * n * k
}

struct Pending {
    round: usize,
    range: Range<usize>,
    pair: (usize, usize),
    queries: [FieldVector; 2],
    mask: FieldVector,
}

pub struct RingState<'a, R: Randomness + ?Sized> {
    config: &'a ProtocolConfig,
    rng: &'a mut R,
    field: PrimeField,
    /// Entity ids in ring order, leader first.
    ring: Vec<usize>,
    /// Incidence vectors in ring order, permuted by the global profile
    /// (unpermuted for the naive baseline).
    vectors: Vec<FieldVector>,
    global: GlobalProfile,
    assignment: Vec<BTreeSet<usize>>,
    session: Session,
    pending: Option<Pending>,
    next_round: usize,
    rounds: Vec<RoundRecord>,
}

impl<'a, R: Randomness + ?Sized> RingState<'a, R> {
    pub fn new(instance: &'a Instance, config: &'a ProtocolConfig, rng: &'a mut R) -> Result<Self> {
        let global = instance.global_profile();
        let field = match config.field {
            Some(q) => PrimeField::new(q)?,
            None => default_field(&global),
        };
        Self::build(instance, config, rng, field, true)
    }

    fn build(
        instance: &'a Instance,
        config: &'a ProtocolConfig,
        rng: &'a mut R,
        field: PrimeField,
        permute: bool,
    ) -> Result<Self> {
        let global = instance.global_profile();
        let mut ring = alloc::vec![instance.leader()];
        ring.extend(instance.non_leaders());
        let vectors = ring
            .iter()
            .map(|&i| {
                let x = instance.incidence(i);
                let x = if permute { global.apply(&x) } else { x };
                x.to_field(field)
            })
            .collect();
        let n_eff = instance.non_leaders().iter().map(|&i| instance.databases()[i]).min().unwrap();
        let t = if permute { global.rounds() } else { 1 };
        Ok(Self {
            config,
            rng,
            field,
            ring,
            vectors,
            assignment: round_assignment(n_eff, t)?,
            global,
            session: Session::default(),
            pending: None,
            next_round: 1,
            rounds: Vec::new(),
        })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn global(&self) -> &GlobalProfile {
        &self.global
    }

    pub fn assignment(&self) -> &[BTreeSet<usize>] {
        &self.assignment
    }

    fn node(&self, pos: usize, db: usize) -> Node {
        Node::db(self.ring[pos], db)
    }

    /// Leader queries plus all relay hops; returns the queries reaching the
    /// last entity and that entity's mask for the round.
    fn forward(&mut self, round: usize, range: Range<usize>, pair: (usize, usize)) -> Result<([FieldVector; 2], FieldVector)> {
        let len = range.len();
        let n = self.ring.len();
        let h = FieldVector::sample(self.field, len, self.rng);
        self.session
            .note(round, Holder::Leader, RandomnessKind::QueryVector, round, h.entries().to_vec());
        let x1 = self.vectors[0].slice(range.clone());
        let mut q = [h.clone(), h.add(&x1)?];
        let dbs = [pair.0, pair.1];
        for (j, qj) in q.iter().enumerate() {
            let to = self.node(1, dbs[j]);
            self.session
                .send(round, Node::Leader, to, MessageKind::Query, qj.entries().to_vec());
        }
        let mut product = x1;
        for pos in 1..n {
            let s = FieldVector::sample(self.field, len, self.rng);
            self.session.note(
                round,
                Holder::Entity(self.ring[pos]),
                RandomnessKind::Mask,
                round,
                s.entries().to_vec(),
            );
            if pos == n - 1 {
                return Ok((q, s));
            }
            let drop = pos == 1 && self.config.mutation == Some(Mutation::DropMask);
            let xs = self.vectors[pos].slice(range.clone());
            for j in 0..2 {
                let mut next = q[j].hadamard(&xs)?;
                if !drop {
                    next = next.add(&s)?;
                }
                self.session.send(
                    round,
                    self.node(pos, dbs[j]),
                    self.node(pos + 1, dbs[j]),
                    MessageKind::Relay,
                    next.entries().to_vec(),
                );
                q[j] = next;
            }
            if self.config.check_invariants {
                product = product.hadamard(&xs)?;
                if q[1].sub(&q[0])? != product {
                    return Err(Error::Contract(format!(
                        "round {round}: query difference after hop {pos} is not the running product"
                    )));
                }
            }
        }
        unreachable!("ring has at least two entities")
    }

    /// Privately counts the intersection inside partition `r`.
    pub fn carpsi_ring(&mut self, r: usize) -> Result<u32> {
        let t = self.global.rounds();
        if r == 0 || r > t {
            return Err(Error::RoundOutOfRange { round: r, rounds: t });
        }
        if r != self.next_round {
            return Err(Error::Contract(format!(
                "round {r} counted out of order, expected {}",
                self.next_round
            )));
        }
        let range = self.global.range(r);
        let len = range.len();
        if len as u64 >= self.field.modulus() as u64 {
            return Err(Error::CardinalityAmbiguity { len, q: self.field.modulus() });
        }
        let pair = round_pair(&self.assignment, r)?;
        let (queries, mask) = self.forward(r, range.clone(), pair)?;
        let n = self.ring.len();
        let xn = self.vectors[n - 1].slice(range.clone());
        let drop = n == 2 && self.config.mutation == Some(Mutation::DropMask);
        let mut answers = [0u32; 2];
        for j in 0..2 {
            let mut a = queries[j].dot(&xn)?;
            if !drop {
                a = self.field.add(a, mask.get(len - 1));
            }
            let db = if j == 0 { pair.0 } else { pair.1 };
            self.session
                .send(r, self.node(n - 1, db), Node::Leader, MessageKind::Answer, alloc::vec![a]);
            answers[j] = a;
        }
        let m = self.field.sub(answers[1], answers[0]);
        if m as usize > len {
            return Err(Error::Decode(format!("count {m} exceeds partition size {len}")));
        }
        self.pending = Some(Pending { round: r, range: range.clone(), pair, queries, mask });
        self.next_round = r + 1;
        self.rounds.push(RoundRecord {
            round: r,
            elements: self.global.partition(r).to_vec(),
            count: Some(m),
            members: Vec::new(),
            aggregates: Vec::new(),
        });
        Ok(m)
    }

    /// Opens partition `r` after its count `m` (0 < m < mu_r) was found.
    pub fn findpsi_ring(&mut self, r: usize, m: u32) -> Result<Vec<bool>> {
        let p = match self.pending.take() {
            Some(p) if p.round == r => p,
            _ => return Err(Error::Contract(format!("round {r} was not just counted"))),
        };
        let len = p.range.len();
        if m == 0 || m as usize >= len {
            return Err(Error::Contract(format!(
                "membership step needs 0 < M < {len}, got {m}"
            )));
        }
        let n = self.ring.len();
        let dbs = [p.pair.0, p.pair.1];
        if r < self.global.rounds() {
            // Tells the last entity the search is over.
            for &db in &dbs {
                let s = self.field.sample(self.rng);
                self.session
                    .note(r, Holder::Leader, RandomnessKind::Signal, db, alloc::vec![s]);
                self.session
                    .send(r, Node::Leader, self.node(n - 1, db), MessageKind::Signal, alloc::vec![s]);
            }
        }
        let xn = self.vectors[n - 1].slice(p.range.start..p.range.end - 1);
        let mask = p.mask.slice(0..len - 1);
        let mut answers = Vec::with_capacity(2);
        for j in 0..2 {
            let a = p.queries[j].slice(0..len - 1).hadamard(&xn)?.add(&mask)?;
            self.session
                .send(r, self.node(n - 1, dbs[j]), Node::Leader, MessageKind::Answer, a.entries().to_vec());
            answers.push(a);
        }
        let d = answers[1].sub(&answers[0])?;
        let mut bits = Vec::with_capacity(len);
        for &v in d.entries() {
            if v > 1 {
                return Err(Error::Decode(format!("retrieved symbol {v} is not a bit")));
            }
            bits.push(v == 1);
        }
        let ones = bits.iter().filter(|&&b| b).count() as u32;
        match m.checked_sub(ones) {
            Some(last @ (0 | 1)) => bits.push(last == 1),
            _ => return Err(Error::Decode(format!("count {m} inconsistent with retrieved bits"))),
        }
        let part = self.global.partition(r);
        if let Some(rec) = self.rounds.iter_mut().rev().find(|rec| rec.round == r) {
            rec.members = part.iter().zip(&bits).filter(|(_, &b)| b).map(|(&u, _)| u).collect();
        }
        Ok(bits)
    }

    fn finish(
        self,
        topology: Topology,
        solution: BTreeSet<usize>,
        intersection: Option<BTreeSet<usize>>,
        stopping_round: usize,
        hit: Option<HitKind>,
        leader_knowledge: BTreeSet<usize>,
    ) -> Outcome {
        Outcome {
            topology,
            field: self.field,
            solution,
            intersection,
            stopping_round,
            hit,
            leader_knowledge,
            rounds: self.rounds,
            ledger: self.session.ledger,
            transcript: self.session.transcript,
        }
    }
}

pub fn run<R: Randomness + ?Sized>(
    instance: &Instance,
    config: &ProtocolConfig,
    rng: &mut R,
) -> Result<Outcome> {
    let mut st = RingState::new(instance, config, rng)?;
    let t = st.global.rounds();
    let mut found = None;
    for r in 1..=t {
        let part = st.global.partition(r).to_vec();
        if r == t && part.len() == 1 {
            st.rounds.push(RoundRecord {
                round: r,
                elements: part.clone(),
                count: None,
                members: part.clone(),
                aggregates: Vec::new(),
            });
            found = Some((r, HitKind::Forced, part.into_iter().collect::<BTreeSet<_>>()));
            break;
        }
        let m = st.carpsi_ring(r)?;
        if m == 0 {
            continue;
        }
        if m as usize == part.len() {
            if let Some(rec) = st.rounds.last_mut() {
                rec.members = part.clone();
            }
            found = Some((r, HitKind::Full, part.into_iter().collect()));
        } else {
            let bits = st.findpsi_ring(r, m)?;
            let sol = part.iter().zip(&bits).filter(|(_, &b)| b).map(|(&u, _)| u).collect();
            found = Some((r, HitKind::Partial, sol));
        }
        break;
    }
    let (r, hit, solution) =
        found.ok_or_else(|| Error::Decode("no partition meets the intersection".into()))?;
    if config.mutation == Some(Mutation::RevealExtraCardinality) && r < t {
        st.pending = None;
        st.carpsi_ring(r + 1)?;
    }
    let knowledge = nominal_global_leakage_index_set(&st.global, r)?;
    Ok(st.finish(Topology::Ring, solution, None, r, Some(hit), knowledge))
}

/// Baseline: one pass over the full unpermuted vectors; the last entity
/// answers with masked element-wise products, revealing the whole intersection.
pub fn run_naive<R: Randomness + ?Sized>(
    instance: &Instance,
    config: &ProtocolConfig,
    rng: &mut R,
) -> Result<Outcome> {
    let field = match config.field {
        Some(q) => PrimeField::new(q)?,
        None => PrimeField::smallest_above(1),
    };
    let mut st = RingState::build(instance, config, rng, field, false)?;
    let k = instance.k();
    let pair = round_pair(&st.assignment, 1)?;
    let (queries, mask) = st.forward(1, 0..k, pair)?;
    let n = st.ring.len();
    let drop = n == 2 && config.mutation == Some(Mutation::DropMask);
    let mut answers = Vec::with_capacity(2);
    for (j, db) in [pair.0, pair.1].into_iter().enumerate() {
        let mut a = queries[j].hadamard(&st.vectors[n - 1])?;
        if !drop {
            a = a.add(&mask)?;
        }
        st.session
            .send(1, st.node(n - 1, db), Node::Leader, MessageKind::Answer, a.entries().to_vec());
        answers.push(a);
    }
    let d = answers[1].sub(&answers[0])?;
    let mut members = BTreeSet::new();
    for (u, &v) in d.entries().iter().enumerate() {
        match v {
            0 => {}
            1 => {
                members.insert(u);
            }
            _ => return Err(Error::Decode(format!("retrieved symbol {v} is not a bit"))),
        }
    }
    st.rounds.push(RoundRecord {
        round: 1,
        elements: (0..k).collect(),
        count: None,
        members: members.iter().copied().collect(),
        aggregates: Vec::new(),
    });
    let solution = instance.objective().optimal(members.iter().copied());
    if solution.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok(st.finish(Topology::NaiveRing, solution, Some(members), 1, None, (0..k).collect()))
}
