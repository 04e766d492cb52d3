//! Star topology: the leader talks to every non-leader entity directly and
//! tests its elements one at a time for membership in all sets at once.
//!
//! For each element `u` and each entity `i`, two databases return
//! `c (h . X_i + S)` and `c ((h + e_u) . X_i + S + t)`. The differences summed
//! over entities give `Z_u = c (sum_i X_i(u) - (N - 1))`, because the
//! correlated symbols `t` of one element sum to `-(N - 1)`. `Z_u = 0` exactly
//! when every entity holds `u`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{FieldVector, PrimeField};
use crate::model::{nominal_leakage_index_set, Instance, LocalProfile};
use crate::protocol::{HitKind, Mutation, Outcome, ProtocolConfig, RoundRecord, Topology};
use crate::randomness::Randomness;
use crate::slots::SlotCursor;
use crate::transcript::{Holder, MessageKind, Node, RandomnessKind, Session};
use crate::two_party::div_ceil;

/// Download cost of candidate leader `l`: every other entity serves all of
/// its elements. `None` if some other entity cannot serve (fewer than two
/// databases).
pub fn leader_cost(instance: &Instance, l: usize) -> Option<usize> {
    let p = instance.set(l).len();
    let mut total = 0;
    for i in 0..instance.entities() {
        if i == l {
            continue;
        }
        let n = instance.databases()[i];
        if n < 2 {
            return None;
        }
        total += div_ceil(p * n, n - 1);
    }
    Some(total)
}

/// All entities attaining the minimum leader cost, ascending.
pub fn leader_candidates(instance: &Instance) -> Vec<usize> {
    let costs: Vec<Option<usize>> = (0..instance.entities()).map(|l| leader_cost(instance, l)).collect();
    let best = costs.iter().flatten().min().copied();
    (0..instance.entities())
        .filter(|&l| best.is_some() && costs[l] == best)
        .collect()
}

/// Cheapest leader, ties to the smallest index.
pub fn select_leader(instance: &Instance) -> usize {
    leader_candidates(instance)[0]
}

pub fn default_field(entities: usize) -> PrimeField {
    PrimeField::smallest_above(entities as u32 - 1)
}

/// `sum_i ceil(reads * N_i / (N_i - 1))` with `reads = sum_{r<=R} alpha_r`
/// (or `sum_{r<R}` when the last element is forced).
pub fn closed_form_cost(r: usize, alpha: &[usize], databases: &[usize], hit: HitKind) -> usize {
    let rounds = if hit == HitKind::Forced { r - 1 } else { r };
    let reads: usize = alpha[..rounds].iter().sum();
    databases.iter().map(|&n| div_ceil(reads * n, n - 1)).sum()
}

pub fn naive_cost(p1: usize, databases: &[usize]) -> usize {
    databases.iter().map(|&n| div_ceil(p1 * n, n - 1)).sum()
}

/// Local pools, correlated symbols and the global multiplier. Values are
/// drawn on first use so that runs stopping early consume less randomness;
/// [`StarRandomness::generate`] draws everything up front.
#[derive(Clone, Debug)]
pub struct StarRandomness {
    field: PrimeField,
    databases: Vec<usize>,
    p1: usize,
    pools: Vec<Vec<Option<u32>>>,
    correlated: Vec<Option<Vec<u32>>>,
    multiplier: Option<u32>,
}

impl StarRandomness {
    /// `databases[i]` is `N_i` for the `i`-th non-leader entity.
    pub fn new(field: PrimeField, databases: &[usize], p1: usize) -> Self {
        Self {
            field,
            databases: databases.to_vec(),
            p1,
            pools: databases.iter().map(|&n| alloc::vec![None; div_ceil(p1, n - 1)]).collect(),
            correlated: alloc::vec![None; p1],
            multiplier: None,
        }
    }

    pub fn generate<R: Randomness + ?Sized>(
        rng: &mut R,
        databases: &[usize],
        p1: usize,
        field: PrimeField,
    ) -> Self {
        let mut s = Self::new(field, databases, p1);
        for l in 1..=p1 {
            s.correlated(rng, l);
        }
        for i in 0..databases.len() {
            for k in 0..s.pools[i].len() {
                s.pool(rng, i, k);
            }
        }
        s.multiplier(rng);
        s
    }

    pub fn pool_size(&self, i: usize) -> usize {
        self.pools[i].len()
    }

    /// Pool symbol `S_{i,k}` (0-based `k`) and whether it was just drawn.
    pub fn pool<R: Randomness + ?Sized>(&mut self, rng: &mut R, i: usize, k: usize) -> (u32, bool) {
        match self.pools[i][k] {
            Some(v) => (v, false),
            None => {
                let v = self.field.sample(rng);
                self.pools[i][k] = Some(v);
                (v, true)
            }
        }
    }

    /// Correlated symbols `t_hat_{i,l}` of every entity for 1-based `l`.
    pub fn correlated<R: Randomness + ?Sized>(&mut self, rng: &mut R, l: usize) -> (Vec<u32>, bool) {
        if let Some(v) = &self.correlated[l - 1] {
            return (v.clone(), false);
        }
        let f = self.field;
        let n = self.databases.len();
        let mut v: Vec<u32> = (0..n - 1).map(|_| f.sample(rng)).collect();
        let target = f.neg(f.reduce(n as i64));
        let partial = v.iter().fold(0, |acc, &x| f.add(acc, x));
        v.push(f.sub(target, partial));
        self.correlated[l - 1] = Some(v.clone());
        (v, true)
    }

    pub fn multiplier<R: Randomness + ?Sized>(&mut self, rng: &mut R) -> (u32, bool) {
        match self.multiplier {
            Some(c) => (c, false),
            None => {
                let c = self.field.sample_nonzero(rng);
                self.multiplier = Some(c);
                (c, true)
            }
        }
    }

    /// `t_{i,j}(k)` for database `j` (1-based) of entity `i`, use `k` (1-based).
    /// Database 1 always has zero; `None` if the symbol was never drawn.
    pub fn t(&self, i: usize, j: usize, k: usize) -> Option<u32> {
        if j == 1 {
            return Some(0);
        }
        let l = (k - 1) * (self.databases[i] - 1) + (j - 1);
        self.correlated.get(l - 1)?.as_ref().map(|v| v[i])
    }

    /// Number of uses `k` of database `j >= 2` whose flattened index
    /// `(k - 1)(N_i - 1) + j - 1` stays within `1..=P_1`.
    pub fn sequence_len(&self, i: usize, j: usize) -> usize {
        div_ceil(self.p1 + 2 - j, self.databases[i] - 1)
    }

    /// The drawn sequence `t_{i,j}(1..)` of database `j >= 2`.
    pub fn database_sequence(&self, i: usize, j: usize) -> Option<Vec<u32>> {
        let len = self.sequence_len(i, j);
        (1..=len).map(|k| self.t(i, j, k)).collect()
    }

    /// `sum_i t_hat_{i,l}` for every drawn `l`.
    pub fn sums(&self) -> Vec<Option<u32>> {
        let f = self.field;
        self.correlated
            .iter()
            .map(|v| v.as_ref().map(|v| v.iter().fold(0, |a, &x| f.add(a, x))))
            .collect()
    }
}

pub struct StarState<'a, R: Randomness + ?Sized> {
    instance: &'a Instance,
    config: &'a ProtocolConfig,
    rng: &'a mut R,
    field: PrimeField,
    entities: Vec<usize>,
    server_bits: Vec<FieldVector>,
    profile: LocalProfile,
    randomness: StarRandomness,
    vectors: Vec<FieldVector>,
    cursors: Vec<SlotCursor>,
    bases: Vec<Vec<u32>>,
    next_round: usize,
    session: Session,
    rounds: Vec<RoundRecord>,
}

impl<'a, R: Randomness + ?Sized> StarState<'a, R> {
    pub fn new(instance: &'a Instance, config: &'a ProtocolConfig, rng: &'a mut R) -> Result<Self> {
        let field = match config.field {
            Some(q) => PrimeField::new(q)?,
            None => default_field(instance.entities()),
        };
        if (field.modulus() as usize) < instance.entities() {
            return Err(Error::InvalidParameters(format!(
                "star field F_{} must exceed N - 1 = {}",
                field.modulus(),
                instance.entities() - 1
            )));
        }
        let entities = instance.non_leaders();
        let dbs: Vec<usize> = entities.iter().map(|&i| instance.databases()[i]).collect();
        let p1 = instance.set(instance.leader()).len();
        Ok(Self {
            server_bits: entities.iter().map(|&i| instance.incidence(i).to_field(field)).collect(),
            cursors: dbs.iter().map(|&n| SlotCursor::new(n)).collect(),
            bases: alloc::vec![Vec::new(); entities.len()],
            randomness: StarRandomness::new(field, &dbs, p1),
            profile: instance.leader_profile(),
            instance,
            config,
            rng,
            field,
            entities,
            vectors: Vec::new(),
            next_round: 1,
            session: Session::default(),
            rounds: Vec::new(),
        })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn randomness(&self) -> &StarRandomness {
        &self.randomness
    }

    fn multiplier(&mut self, round: usize) -> u32 {
        let (c, fresh) = self.randomness.multiplier(self.rng);
        if fresh {
            self.session
                .note(round, Holder::NonLeaders, RandomnessKind::Multiplier, 0, alloc::vec![c]);
        }
        c
    }

    fn answer(&mut self, round: usize, e: usize, db: usize, k: usize, query: &FieldVector, t: u32) -> Result<u32> {
        let entity = self.entities[e];
        let to = Node::db(entity, db);
        self.session
            .send(round, Node::Leader, to, MessageKind::Query, query.entries().to_vec());
        let mut a = self.field.add(query.dot(&self.server_bits[e])?, t);
        if self.config.mutation != Some(Mutation::DropMask) {
            let k = if self.config.mutation == Some(Mutation::ReusePad) { 0 } else { k };
            let (s, fresh) = self.randomness.pool(self.rng, e, k);
            if fresh {
                self.session
                    .note(round, Holder::Entity(entity), RandomnessKind::Pool, k, alloc::vec![s]);
            }
            a = self.field.add(a, s);
        }
        let c = self.multiplier(round);
        let a = self.field.mul(a, c);
        self.session
            .send(round, to, Node::Leader, MessageKind::Answer, alloc::vec![a]);
        Ok(a)
    }

    /// `c (X_i(u) + t)` for one entity and element.
    fn read(&mut self, round: usize, e: usize, u: usize) -> Result<u32> {
        let slot = self.cursors[e].next();
        if slot.ordinal > self.randomness.correlated.len() {
            return Err(Error::Contract("more reads than leader elements".into()));
        }
        if slot.opens {
            if slot.vector == self.vectors.len() {
                let h = FieldVector::sample(self.field, self.instance.k(), self.rng);
                self.session.note(
                    round,
                    Holder::Leader,
                    RandomnessKind::QueryVector,
                    slot.vector,
                    h.entries().to_vec(),
                );
                self.vectors.push(h);
            }
            let h = self.vectors[slot.vector].clone();
            let base = self.answer(round, e, 0, slot.vector, &h, 0)?;
            self.bases[e].push(base);
        }
        let (t, fresh) = self.randomness.correlated(self.rng, slot.ordinal);
        if fresh {
            for (idx, &v) in t.iter().enumerate() {
                self.session.note(
                    round,
                    Holder::Entity(self.entities[idx]),
                    RandomnessKind::Correlated,
                    slot.ordinal,
                    alloc::vec![v],
                );
            }
        }
        let mut query = self.vectors[slot.vector].clone();
        query.add_at(u, 1);
        let a = self.answer(round, e, slot.db, slot.vector, &query, t[e])?;
        if self.config.check_invariants {
            let n = self.instance.databases()[self.entities[e]];
            if self.bases[e].len() != div_ceil(slot.ordinal, n - 1) {
                return Err(Error::Contract("query vector reuse out of step".into()));
            }
        }
        Ok(self.field.sub(a, self.bases[e][slot.vector]))
    }

    /// Tests every element of `elements`; returns `(u, Z_u)` pairs.
    fn test_elements(&mut self, round: usize, elements: &[usize]) -> Result<Vec<(usize, u32)>> {
        let mut z: Vec<(usize, u32)> = elements.iter().map(|&u| (u, 0)).collect();
        for e in 0..self.entities.len() {
            for slot in z.iter_mut() {
                let d = self.read(round, e, slot.0)?;
                slot.1 = self.field.add(slot.1, d);
            }
        }
        Ok(z)
    }

    /// One round: tests all of run `J_r`. Returns the aggregates and the members found.
    pub fn star_round(&mut self, r: usize) -> Result<(Vec<(usize, u32)>, Vec<usize>)> {
        let rounds = self.profile.rounds();
        if r == 0 || r > rounds {
            return Err(Error::RoundOutOfRange { round: r, rounds });
        }
        if r != self.next_round {
            return Err(Error::Contract(format!(
                "round {r} run out of order, expected {}",
                self.next_round
            )));
        }
        let run = self.profile.run(r).to_vec();
        let z = self.test_elements(r, &run)?;
        let members: Vec<usize> = z.iter().filter(|(_, v)| *v == 0).map(|(u, _)| *u).collect();
        self.next_round = r + 1;
        self.rounds.push(RoundRecord {
            round: r,
            elements: run,
            count: None,
            members: members.clone(),
            aggregates: z.clone(),
        });
        Ok((z, members))
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
    let mut st = StarState::new(instance, config, rng)?;
    let l = st.profile.rounds();
    let mut found = None;
    for r in 1..=l {
        let run = st.profile.run(r).to_vec();
        if r == l && run.len() == 1 {
            st.rounds.push(RoundRecord {
                round: r,
                elements: run.clone(),
                count: None,
                members: run.clone(),
                aggregates: Vec::new(),
            });
            found = Some((r, HitKind::Forced, run.into_iter().collect::<BTreeSet<_>>()));
            break;
        }
        let (_, members) = st.star_round(r)?;
        if members.is_empty() {
            continue;
        }
        let hit = if members.len() == run.len() { HitKind::Full } else { HitKind::Partial };
        found = Some((r, hit, members.into_iter().collect()));
        break;
    }
    let (r, hit, solution) =
        found.ok_or_else(|| Error::Decode("no leader run meets the intersection".into()))?;
    if config.mutation == Some(Mutation::RevealExtraCardinality) && r < l {
        st.star_round(r + 1)?;
    }
    let knowledge = nominal_leakage_index_set(&st.profile, r)?;
    Ok(st.finish(Topology::Star, solution, None, r, Some(hit), knowledge))
}

/// Baseline: tests every leader element in one pass, then optimizes locally.
pub fn run_naive<R: Randomness + ?Sized>(
    instance: &Instance,
    config: &ProtocolConfig,
    rng: &mut R,
) -> Result<Outcome> {
    let mut st = StarState::new(instance, config, rng)?;
    let support: Vec<usize> = instance.set(instance.leader()).members().iter().copied().collect();
    let z = st.test_elements(1, &support)?;
    let members: BTreeSet<usize> = z.iter().filter(|(_, v)| *v == 0).map(|(u, _)| *u).collect();
    st.rounds.push(RoundRecord {
        round: 1,
        elements: support.clone(),
        count: None,
        members: members.iter().copied().collect(),
        aggregates: z,
    });
    let solution = instance.objective().optimal(members.iter().copied());
    if solution.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok(st.finish(
        Topology::NaiveStar,
        solution,
        Some(members),
        1,
        None,
        support.into_iter().collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomness::seeded;

    #[test]
    fn closed_form_small_values() {
        assert_eq!(closed_form_cost(3, &[2, 1, 1, 1], &[2, 2, 2], HitKind::Partial), 24);
        assert_eq!(closed_form_cost(3, &[2, 1, 1, 1], &[3, 3, 3], HitKind::Partial), 18);
        assert_eq!(closed_form_cost(2, &[2, 1], &[2, 2, 2], HitKind::Forced), 12);
        assert_eq!(naive_cost(5, &[2, 2, 2]), 30);
        assert_eq!(naive_cost(5, &[3, 3, 3]), 24);
    }

    #[test]
    fn correlated_symbols_sum_to_minus_n_minus_one() {
        let f = PrimeField::new(5).unwrap();
        let mut rng = seeded(3);
        let s = StarRandomness::generate(&mut rng, &[2, 3, 2], 7, f);
        for sum in s.sums() {
            assert_eq!(sum, Some(2));
        }
        assert_eq!(s.database_sequence(1, 2).unwrap().len(), 4);
        assert_eq!(s.database_sequence(1, 3).unwrap().len(), 3);
        assert_eq!(s.database_sequence(0, 2).unwrap().len(), 7);
    }

    #[test]
    fn single_server_correlated_symbol_is_fixed() {
        let f = PrimeField::new(2).unwrap();
        let mut rng = seeded(1);
        let s = StarRandomness::generate(&mut rng, &[2], 3, f);
        assert_eq!(s.database_sequence(0, 2).unwrap(), [1, 1, 1]);
    }
}
