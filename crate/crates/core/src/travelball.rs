//! Traveling-ballot referendum: one two-qudit system passes from voter to
//! voter, each applying the shift once for "yes".

use crate::error::{Error, Result};
use crate::harness::{
    Adversary, BallotRegister, Capabilities, InTransit, Protocol, SetupParty, TallyOutput, View,
    Vote, VotePermutation,
};
use crate::qcore::{make_ghz_phase_state, measure_all, measure_computational, Operator, PureState};
use crate::rng::SimRng;

/// Ballot qudit (index 0) and tallier qudit (index 1), plus the next voter's
/// 1-based position.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelState {
    state: PureState,
    position: usize,
    voters: usize,
    dim: usize,
}

const BALLOT: usize = 0;

/// Fresh election for `voters` voters on qudits of dimension `dim`
/// (`voters + 1` when `None`).
pub fn setup(voters: usize, dim: Option<usize>) -> Result<TravelState> {
    let dim = dim.unwrap_or(voters + 1);
    if voters == 0 {
        return Err(Error::Parameter("at least one voter is required".into()));
    }
    if dim < voters || dim < 2 {
        return Err(Error::Parameter(format!(
            "qudit dimension {dim} must be at least the number of voters {voters}"
        )));
    }
    Ok(TravelState {
        state: make_ghz_phase_state(2, dim, |_| 0.0)?,
        position: 1,
        voters,
        dim,
    })
}

impl TravelState {
    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn voters(&self) -> usize {
        self.voters
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_complete(&self) -> bool {
        self.position > self.voters
    }

    fn shifted(&self, times: usize) -> Result<PureState> {
        let u = Operator::shift(self.dim, times % self.dim);
        self.state.apply_unitary(&u, &[BALLOT])
    }

    fn advance(&self, state: PureState) -> Result<Self> {
        if self.is_complete() {
            return Err(Error::ProtocolOrder(format!(
                "all {} voters have already cast",
                self.voters
            )));
        }
        Ok(Self {
            state,
            position: self.position + 1,
            ..self.clone()
        })
    }

    /// The current voter applies U^v and hands the ballot on.
    pub fn cast(&self, vote: Vote) -> Result<Self> {
        if vote > 1 {
            return Err(Error::Domain(format!("referendum vote {vote}")));
        }
        if self.is_complete() {
            return Err(Error::ProtocolOrder("casting after the last voter".into()));
        }
        self.advance(self.shifted(vote as usize)?)
    }
}

/// Measures both qudits and returns (ballot − tallier) mod M.
pub fn tally(state: &TravelState, rng: &mut SimRng) -> Result<usize> {
    if !state.is_complete() {
        return Err(Error::ProtocolOrder(format!(
            "tally before voter {} cast",
            state.position
        )));
    }
    read_difference(state, rng)
}

fn read_difference(state: &TravelState, rng: &mut SimRng) -> Result<usize> {
    let d = measure_all(&state.state, rng)?;
    Ok((d[0] + state.dim - d[1]) % state.dim)
}

/// A voter holding the ballot measures its qudit computationally.
pub fn collude_measure(state: &TravelState, rng: &mut SimRng) -> Result<(TravelState, usize)> {
    let rec = measure_computational(&state.state, BALLOT, rng)?;
    Ok((
        TravelState {
            state: rec.collapsed,
            ..state.clone()
        },
        rec.outcome,
    ))
}

/// The current voter applies the shift `d` times and hands the ballot on.
pub fn attack_double_vote(state: &TravelState, d: usize) -> Result<TravelState> {
    state.advance(state.shifted(d)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SandwichOutcome {
    /// Sum of the votes cast strictly between the two colluders, mod M.
    pub recovered: usize,
    pub tally: usize,
}

/// Full election in which the voters at positions `first` and
/// `first + gap + 1` (0-based) measure the ballot qudit before casting.
pub fn attack_collude_sandwich(
    votes: &[Vote],
    first: usize,
    gap: usize,
    dim: Option<usize>,
    rng: &mut SimRng,
) -> Result<SandwichOutcome> {
    let second = first + gap + 1;
    if gap == 0 || second >= votes.len() {
        return Err(Error::Parameter(format!(
            "colluders at {first} and {second} do not enclose a voter among {}",
            votes.len()
        )));
    }
    let mut s = setup(votes.len(), dim)?;
    let mut before = 0;
    let mut after = 0;
    for (i, &v) in votes.iter().enumerate() {
        if i == first {
            let (t, r) = collude_measure(&s, rng)?;
            before = r;
            s = t;
        } else if i == second {
            let (t, r) = collude_measure(&s, rng)?;
            after = r;
            s = t;
        }
        s = s.cast(v)?;
    }
    let m = s.dim;
    let own = votes[first] as usize;
    Ok(SandwichOutcome {
        recovered: (after + 2 * m - before - own) % m,
        tally: tally(&s, rng)?,
    })
}

/// Harness binding. The outcome is the yes-count.
#[derive(Debug, Clone)]
pub struct TravelBallotProtocol {
    pub voters: usize,
    pub dim: usize,
}

impl TravelBallotProtocol {
    pub fn new(voters: usize, dim: Option<usize>) -> Result<Self> {
        let s = setup(voters, dim)?;
        Ok(Self { voters, dim: s.dim })
    }
}

#[derive(Debug, Clone)]
pub struct TravelSession {
    pub travel: TravelState,
}

/// Marks that a voter handed the traveling system on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TravelTicket {
    pub position: usize,
}

impl Protocol for TravelBallotProtocol {
    type Session = TravelSession;
    type Ballot = TravelTicket;
    type Outcome = usize;

    fn name(&self) -> String {
        "travelball".into()
    }

    fn voters(&self) -> usize {
        self.voters
    }

    fn vote_domain(&self) -> Vec<Vote> {
        vec![0, 1]
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            in_transit: InTransit::Sealed,
            order_leaks: true,
            setup_party: SetupParty::Tallier,
            authority_corruptible: false,
        }
    }

    fn setup(&self, _rng: &mut SimRng) -> Result<TravelSession> {
        Ok(TravelSession {
            travel: setup(self.voters, Some(self.dim))?,
        })
    }

    fn cast(
        &self,
        session: &mut TravelSession,
        _voter: usize,
        vote: Vote,
        _rng: &mut SimRng,
    ) -> Result<Option<TravelTicket>> {
        let position = session.travel.position;
        session.travel = session.travel.cast(vote)?;
        Ok(Some(TravelTicket { position }))
    }

    fn tally(
        &self,
        session: &mut TravelSession,
        _register: &BallotRegister<TravelTicket>,
        _corrupted: &[usize],
        rng: &mut SimRng,
    ) -> Result<TallyOutput<usize>> {
        Ok(TallyOutput::Outcome(read_difference(&session.travel, rng)?))
    }

    fn votes_counted(&self, honest: &[(usize, Vote)], m: &usize) -> bool {
        let yes = honest.iter().filter(|(_, v)| *v == 1).count();
        let others = self.voters - honest.len();
        yes <= *m && *m <= yes + others
    }

    fn ballot_count(&self, m: &usize) -> usize {
        (*m).max(self.voters)
    }
}

/// Verification binding for the verifiability game: the tallier always
/// accepts its own measurement.
pub fn accept_all(_: &TravelBallotProtocol, _: &TravelSession, t: &TallyOutput<usize>) -> bool {
    !t.is_bottom()
}

/// One corrupted voter applies the yes-shift `1 + extra` times; everyone
/// else votes no.
#[derive(Debug, Clone)]
pub struct DoubleVote {
    pub voter: usize,
    pub extra: usize,
}

impl Adversary<TravelBallotProtocol> for DoubleVote {
    fn name(&self) -> String {
        format!("travelball-double-vote(extra={})", self.extra)
    }

    fn choose_votes(
        &mut self,
        proto: &TravelBallotProtocol,
        _view: &View,
        _suggested: Option<&[Vote]>,
        _rng: &mut SimRng,
    ) -> Vec<Vote> {
        let mut v = vec![0; proto.voters];
        v[self.voter] = 1;
        v
    }

    fn static_corruptions(&mut self, _proto: &TravelBallotProtocol, _view: &View) -> Vec<usize> {
        vec![self.voter]
    }

    fn cast_corrupted(
        &mut self,
        _proto: &TravelBallotProtocol,
        session: &mut TravelSession,
        _voter: usize,
        vote: Vote,
        _rng: &mut SimRng,
    ) -> Result<Option<TravelTicket>> {
        let position = session.travel.position;
        session.travel = attack_double_vote(&session.travel, vote as usize + self.extra)?;
        Ok(Some(TravelTicket { position }))
    }
}

/// Two colluders adjacent to a victim in the casting order read the victim's
/// vote from the ballot qudit.
#[derive(Debug, Clone, Default)]
pub struct Sandwich {
    /// Index of the victim within the casting order.
    pub victim_slot: usize,
    votes: Vec<Vote>,
    order: Vec<usize>,
    perm: Option<VotePermutation>,
    victim: usize,
    before: Option<usize>,
    own_before: usize,
    recovered: Option<usize>,
}

impl Sandwich {
    pub fn new(victim_slot: usize) -> Self {
        Self {
            victim_slot,
            ..Default::default()
        }
    }
}

impl Adversary<TravelBallotProtocol> for Sandwich {
    fn name(&self) -> String {
        "travelball-sandwich".into()
    }

    fn choose_votes(
        &mut self,
        proto: &TravelBallotProtocol,
        view: &View,
        _suggested: Option<&[Vote]>,
        _rng: &mut SimRng,
    ) -> Vec<Vote> {
        let order = view
            .order
            .clone()
            .unwrap_or_else(|| (0..proto.voters).collect());
        self.victim = order[self.victim_slot];
        self.order = order;
        let mut v = vec![0; proto.voters];
        v[self.victim] = 1;
        self.votes = v.clone();
        v
    }

    fn choose_permutation(
        &mut self,
        proto: &TravelBallotProtocol,
        votes: &[Vote],
        _suggested: Option<&VotePermutation>,
    ) -> Result<VotePermutation> {
        // Swap the victim with an honest voter outside the sandwich.
        let colluders = self.colluders();
        let partner = (0..proto.voters)
            .find(|&k| {
                votes[k] != votes[self.victim] && k != self.victim && !colluders.contains(&k)
            })
            .ok_or_else(|| crate::Error::Config("no swap partner for the victim".into()))?;
        let p = VotePermutation::swap(self.victim, votes[self.victim], partner, votes[partner]);
        self.perm = Some(p.clone());
        Ok(p)
    }

    fn corrupt(&mut self, voter: usize, view: &View) -> bool {
        let order = view.order.as_ref().expect("traveling order is public");
        let slot = order
            .iter()
            .position(|&k| k == voter)
            .expect("voter in order");
        slot + 1 == self.victim_slot || slot == self.victim_slot + 1
    }

    fn cast_corrupted(
        &mut self,
        _proto: &TravelBallotProtocol,
        session: &mut TravelSession,
        _voter: usize,
        vote: Vote,
        rng: &mut SimRng,
    ) -> Result<Option<TravelTicket>> {
        let (t, r) = collude_measure(&session.travel, rng)?;
        let m = t.dim;
        match self.before {
            None => {
                self.before = Some(r);
                self.own_before = vote as usize;
            }
            Some(b) => self.recovered = Some((r + 2 * m - b - self.own_before) % m),
        }
        let position = t.position;
        session.travel = t.cast(vote)?;
        Ok(Some(TravelTicket { position }))
    }

    fn guess_beta(
        &mut self,
        _proto: &TravelBallotProtocol,
        _session: &TravelSession,
        _register: &BallotRegister<TravelTicket>,
        _tally: &TallyOutput<usize>,
        _view: &View,
        rng: &mut SimRng,
    ) -> bool {
        match (self.recovered, &self.perm) {
            (Some(r), Some(p)) => {
                let v = self.votes[self.victim];
                if r as Vote == v {
                    false
                } else if r as Vote == p.apply(self.victim, v) {
                    true
                } else {
                    rng.bit()
                }
            }
            _ => rng.bit(),
        }
    }
}

impl Sandwich {
    fn colluders(&self) -> Vec<usize> {
        let s = self.victim_slot;
        [s.checked_sub(1), Some(s + 1)]
            .into_iter()
            .flatten()
            .filter_map(|i| self.order.get(i).copied())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_voters_dimension_two_is_bell() {
        let s = setup(2, Some(2)).unwrap();
        assert!(s
            .state()
            .approx_eq_up_to_phase(&make_ghz_phase_state(2, 2, |_| 0.0).unwrap(), 1e-12));
        assert_eq!(s.position(), 1);
    }

    #[test]
    fn fresh_state_is_correlated() {
        let s = setup(3, None).unwrap();
        let mut rng = SimRng::new(5);
        for _ in 0..100 {
            let d = measure_all(s.state(), &mut rng).unwrap();
            assert_eq!(d[0], d[1]);
        }
    }

    #[test]
    fn votes_tally() {
        let mut rng = SimRng::new(1);
        let mut s = setup(3, None).unwrap();
        for v in [1, 1, 0] {
            s = s.cast(v).unwrap();
        }
        assert_eq!(tally(&s, &mut rng).unwrap(), 2);
    }

    #[test]
    fn unanimous_yes_wraps_at_dimension_n() {
        let mut rng = SimRng::new(1);
        let mut s = setup(3, Some(3)).unwrap();
        for _ in 0..3 {
            s = s.cast(1).unwrap();
        }
        assert_eq!(tally(&s, &mut rng).unwrap(), 0);
    }

    #[test]
    fn order_errors() {
        let mut rng = SimRng::new(1);
        let s = setup(1, None).unwrap();
        assert!(matches!(tally(&s, &mut rng), Err(Error::ProtocolOrder(_))));
        let s = s.cast(0).unwrap();
        assert!(matches!(s.cast(0), Err(Error::ProtocolOrder(_))));
        assert!(matches!(
            setup(2, None).unwrap().cast(2),
            Err(Error::Domain(_))
        ));
        assert!(setup(3, Some(2)).is_err());
    }

    #[test]
    fn double_vote_adds() {
        let mut rng = SimRng::new(2);
        let mut s = setup(3, Some(5)).unwrap();
        s = s.cast(1).unwrap();
        s = attack_double_vote(&s, 2).unwrap();
        s = s.cast(0).unwrap();
        assert_eq!(tally(&s, &mut rng).unwrap(), 3);
    }

    #[test]
    fn wide_sandwich_reveals_total() {
        let mut rng = SimRng::new(3);
        let out = attack_collude_sandwich(&[0, 1, 1, 0, 1], 0, 3, None, &mut rng).unwrap();
        assert_eq!(out.recovered, 2);
        assert_eq!(out.tally, 3);
    }
}
