//! Message transcripts and per-link communication accounting.

use alloc::vec::Vec;

use serde::Serialize;

/// A party in a run. Entities and databases are 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leader,
    Database { entity: usize, db: usize },
}

impl Node {
    pub fn db(entity: usize, db: usize) -> Self {
        Node::Database { entity, db }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Query,
    Relay,
    Answer,
    Signal,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Message {
    pub round: usize,
    pub from: Node,
    pub to: Node,
    pub kind: MessageKind,
    pub payload: Vec<u32>,
}

/// Who holds a piece of private randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Holder {
    Leader,
    /// Shared by every database of one entity.
    Entity(usize),
    /// Shared by all non-leader entities.
    NonLeaders,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomnessKind {
    QueryVector,
    Mask,
    Pool,
    Correlated,
    Multiplier,
    Signal,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct RandomnessRecord {
    pub round: usize,
    pub holder: Holder,
    pub kind: RandomnessKind,
    /// Index of the value within its family (vector or pool index).
    pub index: usize,
    pub values: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    Message(Message),
    Randomness(RandomnessRecord),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Transcript {
    pub events: Vec<Event>,
}

impl Transcript {
    pub fn messages(&self) -> impl Iterator<Item = &Message> {
        self.events.iter().filter_map(|e| match e {
            Event::Message(m) => Some(m),
            _ => None,
        })
    }

    /// Events visible to `observer`: messages it sends or receives and the
    /// randomness it holds.
    pub fn view(&self, observer: Node) -> Vec<Event> {
        self.events
            .iter()
            .filter(|e| visible(e, observer))
            .cloned()
            .collect()
    }
}

fn visible(e: &Event, observer: Node) -> bool {
    match e {
        Event::Message(m) => m.from == observer || m.to == observer,
        Event::Randomness(r) => match (r.holder, observer) {
            (Holder::Leader, Node::Leader) => true,
            (Holder::Entity(i), Node::Database { entity, .. }) => i == entity,
            (Holder::NonLeaders, Node::Database { .. }) => true,
            _ => false,
        },
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LinkCount {
    pub from: Node,
    pub to: Node,
    pub messages: usize,
    pub symbols: usize,
}

/// Symbols sent on every directed link, split into upload (leader to
/// databases), download (databases to leader) and relay (between databases).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CostLedger {
    links: Vec<LinkCount>,
    upload: usize,
    download: usize,
    relay: usize,
}

impl CostLedger {
    pub fn record(&mut self, from: Node, to: Node, symbols: usize) {
        match self.links.iter_mut().find(|l| l.from == from && l.to == to) {
            Some(l) => {
                l.messages += 1;
                l.symbols += symbols;
            }
            None => {
                self.links.push(LinkCount {
                    from,
                    to,
                    messages: 1,
                    symbols,
                });
                self.links.sort_by_key(|l| (l.from, l.to));
            }
        }
        match (from, to) {
            (Node::Leader, _) => self.upload += symbols,
            (_, Node::Leader) => self.download += symbols,
            _ => self.relay += symbols,
        }
    }

    pub fn links(&self) -> &[LinkCount] {
        &self.links
    }

    pub fn upload(&self) -> usize {
        self.upload
    }

    pub fn download(&self) -> usize {
        self.download
    }

    pub fn relay(&self) -> usize {
        self.relay
    }

    pub fn total(&self) -> usize {
        self.upload + self.download + self.relay
    }

    /// Symbols received by the leader from one entity.
    pub fn download_from(&self, entity: usize) -> usize {
        self.links
            .iter()
            .filter(|l| l.to == Node::Leader && matches!(l.from, Node::Database { entity: e, .. } if e == entity))
            .map(|l| l.symbols)
            .sum()
    }
}

/// Transcript plus ledger, filled as a protocol runs.
#[derive(Clone, Debug, Default)]
pub struct Session {
    pub transcript: Transcript,
    pub ledger: CostLedger,
}

impl Session {
    pub fn send(&mut self, round: usize, from: Node, to: Node, kind: MessageKind, payload: Vec<u32>) {
        self.ledger.record(from, to, payload.len());
        self.transcript.events.push(Event::Message(Message {
            round,
            from,
            to,
            kind,
            payload,
        }));
    }

    pub fn note(&mut self, round: usize, holder: Holder, kind: RandomnessKind, index: usize, values: Vec<u32>) {
        self.transcript.events.push(Event::Randomness(RandomnessRecord {
            round,
            holder,
            kind,
            index,
            values,
        }));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn ledger_splits_directions() {
        let mut l = CostLedger::default();
        l.record(Node::Leader, Node::db(1, 0), 4);
        l.record(Node::Leader, Node::db(1, 0), 4);
        l.record(Node::db(1, 0), Node::db(2, 0), 3);
        l.record(Node::db(2, 0), Node::Leader, 1);
        assert_eq!((l.upload(), l.relay(), l.download(), l.total()), (8, 3, 1, 12));
        assert_eq!(l.links()[0].messages, 2);
        assert_eq!(l.download_from(2), 1);
    }

    #[test]
    fn views_filter_by_observer() {
        let mut s = Session::default();
        s.send(1, Node::Leader, Node::db(1, 0), MessageKind::Query, vec![1]);
        s.send(1, Node::Leader, Node::db(1, 1), MessageKind::Query, vec![2]);
        s.note(1, Holder::Entity(1), RandomnessKind::Pool, 0, vec![3]);
        s.note(1, Holder::Leader, RandomnessKind::QueryVector, 0, vec![4]);
        assert_eq!(s.transcript.view(Node::db(1, 0)).len(), 2);
        assert_eq!(s.transcript.view(Node::Leader).len(), 3);
        assert_eq!(s.transcript.view(Node::db(2, 0)).len(), 0);
    }
}
