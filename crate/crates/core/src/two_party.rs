//! Two entities: the leader counts its runs against the server's set one at a
//! time and pins down membership only in the first run that meets it.
//!
//! Every count or single-bit retrieval is a two-answer private read: database
//! 0 answers `h_k . X_2 + S_k` and another database answers
//! `(h_k + x) . X_2 + S_k`; the difference is `x . X_2`. Each vector `h_k` is
//! shared by up to `N_2 - 1` offset reads before a new one is drawn.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{FieldVector, PrimeField};
use crate::model::{nominal_leakage_index_set, IncidenceVector, Instance, LocalProfile};
use crate::protocol::{HitKind, Mutation, Outcome, ProtocolConfig, RoundRecord, Topology};
use crate::randomness::Randomness;
use crate::slots::SlotCursor;
use crate::transcript::{Holder, MessageKind, Node, RandomnessKind, Session};

/// Download cost for stopping round `r` whose run has `alpha_r` elements.
pub fn closed_form_cost(r: usize, alpha_r: usize, n2: usize, hit: HitKind) -> usize {
    let reads = match hit {
        HitKind::Partial => r + alpha_r - 1,
        HitKind::Full => r,
        HitKind::Forced => r - 1,
    };
    div_ceil(reads * n2, n2 - 1)
}

/// Download cost of retrieving `reads` bits one at a time.
pub fn sequential_cost(reads: usize, n2: usize) -> usize {
    div_ceil(reads * n2, n2 - 1)
}

/// Download cost of the naive baseline, which reads all `p1` leader elements.
pub fn naive_cost(p1: usize, n2: usize) -> usize {
    sequential_cost(p1, n2)
}

/// Smallest prime field that can count every leader run.
pub fn default_field(profile: &LocalProfile) -> PrimeField {
    let max_alpha = profile.alpha().into_iter().max().unwrap_or(1);
    PrimeField::smallest_above(max_alpha as u32)
}

pub(crate) fn div_ceil(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

struct Vector {
    h: FieldVector,
    base: u32,
}

pub struct TwoPartyState<'a, R: Randomness + ?Sized> {
    instance: &'a Instance,
    config: &'a ProtocolConfig,
    rng: &'a mut R,
    field: PrimeField,
    server: usize,
    databases: usize,
    profile: LocalProfile,
    server_bits: FieldVector,
    pool_size: usize,
    pool: Vec<Option<u32>>,
    vectors: Vec<Vector>,
    cursor: SlotCursor,
    reads: usize,
    next_round: usize,
    retrieved: bool,
    session: Session,
    rounds: Vec<RoundRecord>,
}

impl<'a, R: Randomness + ?Sized> TwoPartyState<'a, R> {
    pub fn new(instance: &'a Instance, config: &'a ProtocolConfig, rng: &'a mut R) -> Result<Self> {
        let profile = instance.leader_profile();
        let field = match config.field {
            Some(q) => PrimeField::new(q)?,
            None => default_field(&profile),
        };
        Self::with_field(instance, config, rng, field)
    }

    fn with_field(
        instance: &'a Instance,
        config: &'a ProtocolConfig,
        rng: &'a mut R,
        field: PrimeField,
    ) -> Result<Self> {
        if instance.entities() != 2 {
            return Err(Error::InvalidInstance(format!(
                "two-party protocol needs 2 entities, got {}",
                instance.entities()
            )));
        }
        let server = 1 - instance.leader();
        let databases = instance.databases()[server];
        let profile = instance.leader_profile();
        let p1 = instance.set(instance.leader()).len();
        let pool_size = div_ceil(p1, databases - 1);
        Ok(Self {
            server_bits: instance.incidence(server).to_field(field),
            instance,
            config,
            rng,
            field,
            server,
            databases,
            profile,
            pool_size,
            pool: alloc::vec![None; pool_size],
            vectors: Vec::new(),
            cursor: SlotCursor::new(databases),
            reads: 0,
            next_round: 1,
            retrieved: false,
            session: Session::default(),
            rounds: Vec::new(),
        })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn profile(&self) -> &LocalProfile {
        &self.profile
    }

    /// `m = ceil(P_1 / (N_2 - 1))`.
    pub fn pool_size(&self) -> usize {
        self.pool_size
    }

    pub fn vectors_drawn(&self) -> usize {
        self.vectors.len()
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    fn pool_symbol(&mut self, round: usize, k: usize) -> Result<u32> {
        let k = if self.config.mutation == Some(Mutation::ReusePad) { 0 } else { k };
        if k >= self.pool_size {
            return Err(Error::Contract("randomness pool exhausted".into()));
        }
        if let Some(s) = self.pool[k] {
            return Ok(s);
        }
        let s = self.field.sample(self.rng);
        self.pool[k] = Some(s);
        self.session
            .note(round, Holder::Entity(self.server), RandomnessKind::Pool, k, alloc::vec![s]);
        Ok(s)
    }

    fn answer(&mut self, round: usize, db: usize, k: usize, query: &FieldVector) -> Result<u32> {
        let to = Node::db(self.server, db);
        self.session
            .send(round, Node::Leader, to, MessageKind::Query, query.entries().to_vec());
        let mut a = query.dot(&self.server_bits)?;
        if self.config.mutation != Some(Mutation::DropMask) {
            let s = self.pool_symbol(round, k)?;
            a = self.field.add(a, s);
        }
        self.session
            .send(round, to, Node::Leader, MessageKind::Answer, alloc::vec![a]);
        Ok(a)
    }

    /// One private read of `offset . X_2`.
    fn read(&mut self, round: usize, offset: &FieldVector) -> Result<u32> {
        let slot = self.cursor.next();
        self.reads += 1;
        if slot.opens {
            debug_assert_eq!(slot.vector, self.vectors.len());
            let h = FieldVector::sample(self.field, self.instance.k(), self.rng);
            self.session.note(
                round,
                Holder::Leader,
                RandomnessKind::QueryVector,
                slot.vector,
                h.entries().to_vec(),
            );
            let base = self.answer(round, 0, slot.vector, &h)?;
            self.vectors.push(Vector { h, base });
        }
        let query = self.vectors[slot.vector].h.add(offset)?;
        let a = self.answer(round, slot.db, slot.vector, &query)?;
        if self.config.check_invariants {
            self.check_reuse()?;
        }
        Ok(self.field.sub(a, self.vectors[slot.vector].base))
    }

    fn check_reuse(&self) -> Result<()> {
        let expected = div_ceil(self.reads, self.databases - 1);
        if self.vectors.len() != expected {
            return Err(Error::Contract(format!(
                "{} query vectors after {} reads, expected {expected}",
                self.vectors.len(),
                self.reads
            )));
        }
        Ok(())
    }

    fn indicator(&self, elements: &[usize]) -> FieldVector {
        IncidenceVector::from_support(self.instance.k(), elements.iter().copied()).to_field(self.field)
    }

    /// Privately counts `|J_r n P_2|`. Rounds must be counted in order.
    pub fn carpsi(&mut self, r: usize) -> Result<u32> {
        let rounds = self.profile.rounds();
        if r == 0 || r > rounds {
            return Err(Error::RoundOutOfRange { round: r, rounds });
        }
        if r != self.next_round {
            return Err(Error::Contract(format!(
                "round {r} counted out of order, expected {}",
                self.next_round
            )));
        }
        let run = self.profile.run(r).to_vec();
        if run.len() as u64 >= self.field.modulus() as u64 {
            return Err(Error::CardinalityAmbiguity {
                len: run.len(),
                q: self.field.modulus(),
            });
        }
        let opens_expected = (r - 1) % (self.databases - 1) == 0;
        let fresh_before = self.vectors.len();
        let x = self.indicator(&run);
        let m = self.read(r, &x)?;
        if self.config.check_invariants && !self.retrieved {
            let opened = self.vectors.len() > fresh_before;
            if opened != opens_expected {
                return Err(Error::Contract(format!(
                    "round {r}: fresh vector drawn = {opened}, expected {opens_expected}"
                )));
            }
        }
        if m as usize > run.len() {
            return Err(Error::Decode(format!("count {m} exceeds run size {}", run.len())));
        }
        self.next_round = r + 1;
        self.rounds.push(RoundRecord {
            round: r,
            elements: run,
            count: Some(m),
            members: Vec::new(),
            aggregates: Vec::new(),
        });
        Ok(m)
    }

    /// Retrieves `X_2` on run `r` given its count `m`. All elements but the
    /// largest are read; the last bit follows from `m`.
    pub fn findpsi(&mut self, r: usize, m: u32) -> Result<Vec<bool>> {
        let rounds = self.profile.rounds();
        if r == 0 || r > rounds {
            return Err(Error::RoundOutOfRange { round: r, rounds });
        }
        let run = self.profile.run(r).to_vec();
        if m == 0 || m as usize >= run.len() {
            return Err(Error::Contract(format!(
                "membership step needs 0 < M < {}, got {m}",
                run.len()
            )));
        }
        self.retrieved = true;
        let k = self.instance.k();
        let mut bits = Vec::with_capacity(run.len());
        for &u in &run[..run.len() - 1] {
            let e = FieldVector::unit(self.field, k, u);
            let b = self.read(r, &e)?;
            if b > 1 {
                return Err(Error::Decode(format!("retrieved symbol {b} is not a bit")));
            }
            bits.push(b == 1);
        }
        let ones = bits.iter().filter(|&&b| b).count() as u32;
        match m.checked_sub(ones) {
            Some(last @ (0 | 1)) => bits.push(last == 1),
            _ => return Err(Error::Decode(format!("count {m} inconsistent with retrieved bits"))),
        }
        if let Some(rec) = self.rounds.iter_mut().rev().find(|rec| rec.round == r) {
            rec.members = run.iter().zip(&bits).filter(|(_, &b)| b).map(|(&u, _)| u).collect();
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

/// Runs the two-party protocol to completion.
pub fn run<R: Randomness + ?Sized>(
    instance: &Instance,
    config: &ProtocolConfig,
    rng: &mut R,
) -> Result<Outcome> {
    let mut st = TwoPartyState::new(instance, config, rng)?;
    let l = st.profile.rounds();
    let mut found = None;
    for r in 1..=l {
        let run = st.profile.run(r).to_vec();
        if r == l && run.len() == 1 {
            // Every earlier run missed the intersection, so this element is in it.
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
        let m = st.carpsi(r)?;
        if m == 0 {
            continue;
        }
        if m as usize == run.len() {
            if let Some(rec) = st.rounds.last_mut() {
                rec.members = run.clone();
            }
            found = Some((r, HitKind::Full, run.into_iter().collect()));
        } else {
            let bits = st.findpsi(r, m)?;
            let sol = run.iter().zip(&bits).filter(|(_, &b)| b).map(|(&u, _)| u).collect();
            found = Some((r, HitKind::Partial, sol));
        }
        break;
    }
    let (r, hit, solution) =
        found.ok_or_else(|| Error::Decode("no leader run meets the intersection".into()))?;
    if config.mutation == Some(Mutation::RevealExtraCardinality) && r < l {
        st.carpsi(r + 1)?;
    }
    let knowledge = nominal_leakage_index_set(&st.profile, r)?;
    Ok(st.finish(Topology::TwoParty, solution, None, r, Some(hit), knowledge))
}

/// Baseline: reads the server bit of every leader element, then optimizes locally.
pub fn run_naive<R: Randomness + ?Sized>(
    instance: &Instance,
    config: &ProtocolConfig,
    rng: &mut R,
) -> Result<Outcome> {
    let field = match config.field {
        Some(q) => PrimeField::new(q)?,
        None => PrimeField::smallest_above(1),
    };
    let mut st = TwoPartyState::with_field(instance, config, rng, field)?;
    let k = instance.k();
    let support: Vec<usize> = instance.set(instance.leader()).members().iter().copied().collect();
    let mut members = BTreeSet::new();
    for &u in &support {
        let e = FieldVector::unit(field, k, u);
        let b = st.read(1, &e)?;
        if b > 1 {
            return Err(Error::Decode(format!("retrieved symbol {b} is not a bit")));
        }
        if b == 1 {
            members.insert(u);
        }
    }
    st.rounds.push(RoundRecord {
        round: 1,
        elements: support.clone(),
        count: None,
        members: members.iter().copied().collect(),
        aggregates: Vec::new(),
    });
    let solution = instance.objective().optimal(members.iter().copied());
    if solution.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok(st.finish(
        Topology::NaiveTwoParty,
        solution,
        Some(members),
        1,
        None,
        support.into_iter().collect(),
    ))
}
