//! Single-run reports.

use std::collections::BTreeMap;

use dofsp_core::protocol::HitKind;
use dofsp_core::transcript::Transcript;
use dofsp_core::{ring, star, two_party, Instance, Outcome, Topology};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Hex SHA-256 of the transcript's JSON encoding.
pub fn transcript_hash(t: &Transcript) -> Result<String> {
    let bytes = serde_json::to_vec(t)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Symbols exchanged per round, in round order.
pub fn round_costs(t: &Transcript) -> Vec<usize> {
    let mut by_round: BTreeMap<usize, usize> = BTreeMap::new();
    for m in t.messages() {
        *by_round.entry(m.round).or_default() += m.payload.len();
    }
    by_round.into_values().collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Formula {
    /// `download` or `total`, whichever the closed form counts.
    pub quantity: &'static str,
    pub value: usize,
}

fn server_databases(inst: &Instance) -> Vec<usize> {
    inst.non_leaders().iter().map(|&i| inst.databases()[i]).collect()
}

/// Closed-form cost for the realized stop, side by side with the ledger.
pub fn formula(inst: &Instance, out: &Outcome) -> Option<Formula> {
    let dbs = server_databases(inst);
    let p1 = inst.set(inst.leader()).len();
    let r = out.stopping_round;
    let (quantity, value) = match (out.topology, out.hit) {
        (Topology::TwoParty, Some(hit)) => {
            let alpha_r = inst.leader_profile().run(r).len();
            ("download", two_party::closed_form_cost(r, alpha_r, dbs[0], hit))
        }
        (Topology::Ring, Some(hit)) => {
            let mu = inst.global_profile().mu();
            ("total", ring::closed_form_cost(r, &mu, inst.entities(), hit))
        }
        (Topology::Star, Some(hit)) => {
            let alpha = inst.leader_profile().alpha();
            ("download", star::closed_form_cost(r, &alpha, &dbs, hit))
        }
        (Topology::NaiveTwoParty, _) => ("download", two_party::naive_cost(p1, dbs[0])),
        (Topology::NaiveRing, _) => ("total", ring::naive_cost(inst.entities(), inst.k())),
        (Topology::NaiveStar, _) => ("download", star::naive_cost(p1, &dbs)),
        _ => return None,
    };
    Some(Formula { quantity, value })
}

/// Cost of the matching naive baseline, in the formula's unit.
pub fn naive_cost(inst: &Instance, topology: Topology) -> usize {
    let dbs = server_databases(inst);
    let p1 = inst.set(inst.leader()).len();
    match topology {
        Topology::TwoParty | Topology::NaiveTwoParty => two_party::naive_cost(p1, dbs[0]),
        Topology::Ring | Topology::NaiveRing => ring::naive_cost(inst.entities(), inst.k()),
        Topology::Star | Topology::NaiveStar => star::naive_cost(p1, &dbs),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub topology: Topology,
    pub seed: u64,
    pub field: u32,
    pub solution: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intersection: Option<Vec<String>>,
    pub stopping_round: usize,
    pub hit: Option<HitKind>,
    pub leader_knowledge: Vec<String>,
    pub upload: usize,
    pub download: usize,
    pub relay: usize,
    pub total: usize,
    pub round_costs: Vec<usize>,
    pub formula: Option<Formula>,
    pub naive_cost: usize,
    pub transcript_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transcript: Option<Transcript>,
}

impl RunReport {
    pub fn new(inst: &Instance, out: &Outcome, seed: u64, with_transcript: bool) -> Result<Self> {
        let labels = |set: &std::collections::BTreeSet<usize>| -> Vec<String> {
            set.iter().map(|&k| inst.alphabet().label(k).to_string()).collect()
        };
        Ok(Self {
            instance: None,
            scenario: None,
            topology: out.topology,
            seed,
            field: out.field.modulus(),
            solution: labels(&out.solution),
            intersection: out.intersection.as_ref().map(labels),
            stopping_round: out.stopping_round,
            hit: out.hit,
            leader_knowledge: labels(&out.leader_knowledge),
            upload: out.ledger.upload(),
            download: out.ledger.download(),
            relay: out.ledger.relay(),
            total: out.ledger.total(),
            round_costs: round_costs(&out.transcript),
            formula: formula(inst, out),
            naive_cost: naive_cost(inst, out.topology),
            transcript_sha256: transcript_hash(&out.transcript)?,
            transcript: with_transcript.then(|| out.transcript.clone()),
        })
    }

    /// One CSV header plus one row; list fields are `;`-joined.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "topology",
            "seed",
            "field",
            "solution",
            "stopping_round",
            "hit",
            "leader_knowledge",
            "upload",
            "download",
            "relay",
            "total",
            "formula_quantity",
            "formula_value",
            "naive_cost",
            "transcript_sha256",
        ])?;
        let hit = self.hit.map(|h| format!("{h:?}").to_lowercase()).unwrap_or_default();
        let (fq, fv) = match &self.formula {
            Some(f) => (f.quantity.to_string(), f.value.to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([
            self.topology.name().to_string(),
            self.seed.to_string(),
            self.field.to_string(),
            self.solution.join(";"),
            self.stopping_round.to_string(),
            hit,
            self.leader_knowledge.join(";"),
            self.upload.to_string(),
            self.download.to_string(),
            self.relay.to_string(),
            self.total.to_string(),
            fq,
            fv,
            self.naive_cost.to_string(),
            self.transcript_sha256.clone(),
        ])?;
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields"))
    }
}
