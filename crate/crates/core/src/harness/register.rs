use crate::error::{Error, Result};

/// Global register of cast ballots, one write-once slot per voter.
#[derive(Debug, Clone)]
pub struct BallotRegister<B> {
    slots: Vec<Option<B>>,
    written: Vec<bool>,
    sealed: bool,
}

impl<B> BallotRegister<B> {
    pub fn new(voters: usize) -> Self {
        Self {
            slots: (0..voters).map(|_| None).collect(),
            written: vec![false; voters],
            sealed: false,
        }
    }

    /// Stores the ballot of `voter`; `None` records that no ballot arrived.
    pub fn write(&mut self, voter: usize, ballot: Option<B>) -> Result<()> {
        if self.sealed {
            return Err(Error::Harness(
                "register written after the casting phase".into(),
            ));
        }
        let w = self
            .written
            .get_mut(voter)
            .ok_or_else(|| Error::Index(format!("no slot for voter {voter}")))?;
        if *w {
            return Err(Error::Harness(format!("slot {voter} written twice")));
        }
        *w = true;
        self.slots[voter] = ballot;
        Ok(())
    }

    /// Ends the casting phase.
    pub fn seal(&mut self) {
        self.sealed = true;
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    pub fn get(&self, voter: usize) -> Option<&B> {
        self.slots.get(voter).and_then(Option::as_ref)
    }

    pub fn get_mut(&mut self, voter: usize) -> Option<&mut B> {
        self.slots.get_mut(voter).and_then(Option::as_mut)
    }

    pub fn voters(&self) -> usize {
        self.slots.len()
    }

    /// Cast ballots in voter order.
    pub fn ballots(&self) -> impl Iterator<Item = (usize, &B)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(k, b)| b.as_ref().map(|b| (k, b)))
    }

    pub fn count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_once() {
        let mut r = BallotRegister::new(2);
        r.write(0, Some(5)).unwrap();
        assert!(r.write(0, Some(6)).is_err());
        assert_eq!(r.get(0), Some(&5));
        r.seal();
        assert!(r.write(1, Some(1)).is_err());
    }

    #[test]
    fn missing_ballot_counts_as_written() {
        let mut r: BallotRegister<u8> = BallotRegister::new(1);
        r.write(0, None).unwrap();
        assert!(r.write(0, Some(1)).is_err());
        assert_eq!(r.count(), 0);
    }
}
