//! Assignment of single-element retrievals to (query vector, database) slots.
//!
//! A query vector `h_k` is answered in the clear by database 0 (the base
//! answer) and, offset by the retrieval pattern, by databases `1..n`. Each
//! retrieval consumes the next offset slot; a new vector is opened once all
//! offset slots of the current one are used.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Slot {
    pub vector: usize,
    pub db: usize,
    pub opens: bool,
    /// 1-based count of retrievals made through this cursor so far.
    pub ordinal: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct SlotCursor {
    databases: usize,
    vector: Option<usize>,
    next_db: usize,
    ordinal: usize,
}

impl SlotCursor {
    pub fn new(databases: usize) -> Self {
        debug_assert!(databases >= 2);
        Self {
            databases,
            vector: None,
            next_db: databases,
            ordinal: 0,
        }
    }

    pub fn next(&mut self) -> Slot {
        let opens = self.next_db == self.databases;
        if opens {
            self.vector = Some(self.vector.map_or(0, |v| v + 1));
            self.next_db = 1;
        }
        let slot = Slot {
            vector: self.vector.unwrap(),
            db: self.next_db,
            opens,
            ordinal: self.ordinal + 1,
        };
        self.next_db += 1;
        self.ordinal += 1;
        slot
    }

    #[cfg(test)]
    /// Vectors opened so far.
    pub fn vectors(&self) -> usize {
        self.vector.map_or(0, |v| v + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_databases_share_each_vector_twice() {
        let mut c = SlotCursor::new(3);
        let got: alloc::vec::Vec<_> = (0..5).map(|_| c.next()).map(|s| (s.vector, s.db, s.opens)).collect();
        assert_eq!(
            got,
            [(0, 1, true), (0, 2, false), (1, 1, true), (1, 2, false), (2, 1, true)]
        );
        assert_eq!(c.vectors(), 3);
    }
}
