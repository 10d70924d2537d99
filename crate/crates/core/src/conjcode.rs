//! BB84-style ballots: fragments of n+1 qubits whose decoded bits XOR to the
//! fragment's value, re-randomized by parity-preserving Y flips.

use crate::error::{Error, Result};
use crate::harness::{
    Adversary, BallotRegister, Capabilities, InTransit, Protocol, SetupParty, TallyOutput, Tap,
    View, Vote, VotePermutation,
};
use crate::qcore::{measure_all, Operator, PureState};
use crate::rng::SimRng;

/// Per-qubit encoding basis: `false` computational, `true` Hadamard.
pub type BasisVector = Vec<bool>;

pub fn random_basis(n: usize, rng: &mut SimRng) -> BasisVector {
    (0..=n).map(|_| rng.bit()).collect()
}

/// n random bits followed by their parity.
pub fn parity_bits(n: usize, rng: &mut SimRng) -> Vec<u8> {
    let mut a: Vec<u8> = (0..n).map(|_| u8::from(rng.bit())).collect();
    a.push(a.iter().fold(0, |x, y| x ^ y));
    a
}

/// |ψ_{a,b}⟩ ∈ {|0⟩, |1⟩, |+⟩, |−⟩}.
pub fn bb84_state(a: u8, b: bool) -> Result<PureState> {
    let s = PureState::basis(&[2], &[usize::from(a & 1)])?;
    if b {
        s.apply_unitary(&Operator::hadamard(), &[0])
    } else {
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub state: PureState,
    /// Preparation bits ā_j, kept by whoever prepared the fragment.
    pub bits: Vec<u8>,
}

pub fn make_fragment(bits: &[u8], basis: &[bool]) -> Result<Fragment> {
    if bits.len() != basis.len() || bits.is_empty() {
        return Err(Error::Parameter(
            "fragment bits and basis differ in length".into(),
        ));
    }
    let mut state = bb84_state(bits[0], basis[0])?;
    for (&a, &b) in bits.iter().zip(basis).skip(1) {
        state = state.tensor(&bb84_state(a, b)?)?;
    }
    Ok(Fragment {
        state,
        bits: bits.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ballot {
    pub fragments: Vec<Fragment>,
}

impl Ballot {
    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }
}

/// Default ballot length 4(n+1).
pub fn default_fragments(n: usize) -> usize {
    4 * (n + 1)
}

pub fn make_blank_ballot(n: usize, w: usize, basis: &[bool], rng: &mut SimRng) -> Result<Ballot> {
    if n == 0 || w == 0 {
        return Err(Error::Parameter("n and w must be positive".into()));
    }
    if basis.len() != n + 1 {
        return Err(Error::Parameter(format!(
            "basis must have {} entries",
            n + 1
        )));
    }
    let fragments = (0..w)
        .map(|_| make_fragment(&parity_bits(n, rng), basis))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ballot { fragments })
}

/// Applies Y to every qubit whose flip bit is set.
pub fn apply_flips(fragment: &Fragment, flips: &[u8]) -> Result<Fragment> {
    let mut state = fragment.state.clone();
    let y = Operator::y_flip();
    for (q, &f) in flips.iter().enumerate() {
        if f & 1 == 1 {
            state = state.apply_unitary(&y, &[q])?;
        }
    }
    Ok(Fragment {
        state,
        bits: fragment.bits.clone(),
    })
}

/// Independent parity-preserving flips per fragment.
pub fn rerandomize(ballot: &Ballot, rng: &mut SimRng) -> Result<Ballot> {
    let fragments = ballot
        .fragments
        .iter()
        .map(|f| {
            let n = f.state.num_qudits() - 1;
            apply_flips(f, &parity_bits(n, rng))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ballot { fragments })
}

fn flip_last(fragment: &Fragment) -> Result<Fragment> {
    let q = fragment.state.num_qudits();
    let mut flips = vec![0; q];
    flips[q - 1] = 1;
    apply_flips(fragment, &flips)
}

/// Flips the last qubit of each trailing fragment whose candidate bit is
/// set; `candidate` is aligned to the end of the ballot.
pub fn encode_vote(ballot: &Ballot, candidate: &[u8]) -> Result<Ballot> {
    let w = ballot.len();
    if candidate.len() > w {
        return Err(Error::Domain(format!(
            "{} candidate bits exceed {w} fragments",
            candidate.len()
        )));
    }
    let start = w - candidate.len();
    let fragments = ballot
        .fragments
        .iter()
        .enumerate()
        .map(|(j, f)| {
            if j >= start && candidate[j - start] & 1 == 1 {
                flip_last(f)
            } else {
                Ok(f.clone())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ballot { fragments })
}

/// Measures every qubit in the given basis and XORs the bits; also returns
/// the post-measurement fragment.
pub fn read_fragment(
    fragment: &Fragment,
    basis: &[bool],
    rng: &mut SimRng,
) -> Result<(u8, Fragment)> {
    let q = fragment.state.num_qudits();
    if basis.len() != q {
        return Err(Error::Parameter(
            "basis length differs from fragment".into(),
        ));
    }
    let h = Operator::hadamard();
    let mut rotated = fragment.state.clone();
    for (i, &b) in basis.iter().enumerate() {
        if b {
            rotated = rotated.apply_unitary(&h, &[i])?;
        }
    }
    let bits = measure_all(&rotated, rng)?;
    let mut after = PureState::basis(rotated.dims(), &bits)?;
    for (i, &b) in basis.iter().enumerate() {
        if b {
            after = after.apply_unitary(&h, &[i])?;
        }
    }
    let parity = bits.iter().fold(0u8, |x, &y| x ^ y as u8);
    Ok((
        parity,
        Fragment {
            state: after,
            bits: fragment.bits.clone(),
        },
    ))
}

pub fn decode_fragment(fragment: &Fragment, basis: &[bool], rng: &mut SimRng) -> Result<u8> {
    read_fragment(fragment, basis, rng).map(|(b, _)| b)
}

/// One bit per fragment.
pub fn tally_decode(ballot: &Ballot, basis: &[bool], rng: &mut SimRng) -> Result<Vec<u8>> {
    ballot
        .fragments
        .iter()
        .map(|f| decode_fragment(f, basis, rng))
        .collect()
}

/// Accepted iff everything before the trailing candidate field is zero.
pub fn is_valid(decoded: &[u8], candidate_len: usize) -> bool {
    candidate_len <= decoded.len()
        && decoded[..decoded.len() - candidate_len]
            .iter()
            .all(|&b| b == 0)
}

/// Candidate field as a number, most significant bit first.
pub fn candidate_value(decoded: &[u8], candidate_len: usize) -> Vote {
    decoded[decoded.len() - candidate_len..]
        .iter()
        .fold(0, |acc, &b| (acc << 1) | Vote::from(b))
}

/// `len` bits of `value`, most significant first.
pub fn to_bits(value: Vote, len: usize) -> Vec<u8> {
    (0..len).rev().map(|i| ((value >> i) & 1) as u8).collect()
}

/// Flips the trailing candidate bits selected by `mask`.
pub fn attack_malleate(ballot: &Ballot, mask: &[u8]) -> Result<Ballot> {
    encode_vote(ballot, mask)
}

/// Blank ballot whose leading fragments decode to `tag`.
pub fn attack_serial_number(
    n: usize,
    w: usize,
    basis: &[bool],
    tag: &[u8],
    rng: &mut SimRng,
) -> Result<Ballot> {
    if tag.len() > w {
        return Err(Error::Parameter("tag longer than the ballot".into()));
    }
    let blank = make_blank_ballot(n, w, basis, rng)?;
    let fragments = blank
        .fragments
        .into_iter()
        .enumerate()
        .map(|(j, f)| {
            if tag.get(j).is_some_and(|&t| t & 1 == 1) {
                let mut bits = f.bits.clone();
                bits[n] ^= 1;
                make_fragment(&bits, basis)
            } else {
                Ok(f)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ballot { fragments })
}

/// Reads the tag and candidate of a ballot in transit without disturbing
/// it (the reader knows the basis), and clears the tag so the ballot stays
/// valid.
pub fn read_and_clear_tag(
    ballot: &Ballot,
    basis: &[bool],
    tag_len: usize,
    candidate_len: usize,
    rng: &mut SimRng,
) -> Result<(Vec<u8>, Vote, Ballot)> {
    let mut tag = Vec::with_capacity(tag_len);
    let mut decoded = Vec::with_capacity(ballot.len());
    let mut fragments = Vec::with_capacity(ballot.len());
    for (j, f) in ballot.fragments.iter().enumerate() {
        let (bit, after) = read_fragment(f, basis, rng)?;
        decoded.push(bit);
        if j < tag_len {
            tag.push(bit);
            fragments.push(if bit == 1 { flip_last(&after)? } else { after });
        } else {
            fragments.push(after);
        }
    }
    Ok((
        tag,
        candidate_value(&decoded, candidate_len),
        Ballot { fragments },
    ))
}

/// Status of the one-more-unforgeability game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UnforgeabilityStatus {
    /// Treated as a hardness assumption; no forger is simulated.
    Assumption,
}

pub fn one_more_unforgeability(_n: usize, _w: usize) -> UnforgeabilityStatus {
    UnforgeabilityStatus::Assumption
}

/// Harness binding. Ballots reach the tallier over an anonymous channel.
#[derive(Debug, Clone)]
pub struct ConjCodeProtocol {
    pub voters: usize,
    pub n: usize,
    pub w: usize,
    pub candidate_len: usize,
}

impl ConjCodeProtocol {
    pub fn new(voters: usize, n: usize, w: Option<usize>, candidate_len: usize) -> Result<Self> {
        let w = w.unwrap_or_else(|| default_fragments(n));
        if voters == 0 || n == 0 || candidate_len == 0 || candidate_len > w {
            return Err(Error::Parameter(
                "voters, n and the candidate field must be positive and fit the ballot".into(),
            ));
        }
        Ok(Self {
            voters,
            n,
            w,
            candidate_len,
        })
    }

    /// Whether N·m ≪ w fails, taken as N·m > w/4.
    pub fn undersized(&self) -> bool {
        4 * self.voters * self.candidate_len > self.w
    }
}

#[derive(Debug, Clone)]
pub struct ConjSession {
    pub basis: BasisVector,
    pub blanks: Vec<Ballot>,
}

impl Protocol for ConjCodeProtocol {
    type Session = ConjSession;
    type Ballot = Ballot;
    type Outcome = Vec<Vote>;

    fn name(&self) -> String {
        "conjcode".into()
    }

    fn voters(&self) -> usize {
        self.voters
    }

    fn vote_domain(&self) -> Vec<Vote> {
        (0..1u64 << self.candidate_len).collect()
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            in_transit: InTransit::Malleable,
            order_leaks: false,
            setup_party: SetupParty::Authority,
            authority_corruptible: false,
        }
    }

    fn setup(&self, rng: &mut SimRng) -> Result<ConjSession> {
        let basis = random_basis(self.n, rng);
        let blanks = (0..self.voters)
            .map(|_| make_blank_ballot(self.n, self.w, &basis, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(ConjSession { basis, blanks })
    }

    fn cast(
        &self,
        session: &mut ConjSession,
        voter: usize,
        vote: Vote,
        rng: &mut SimRng,
    ) -> Result<Option<Ballot>> {
        if vote >= 1 << self.candidate_len {
            return Err(Error::Domain(format!("vote {vote}")));
        }
        let blank = session
            .blanks
            .get(voter)
            .ok_or_else(|| Error::Index(format!("voter {voter}")))?;
        let b = rerandomize(blank, rng)?;
        Ok(Some(encode_vote(&b, &to_bits(vote, self.candidate_len))?))
    }

    fn tally(
        &self,
        session: &mut ConjSession,
        register: &BallotRegister<Ballot>,
        _corrupted: &[usize],
        rng: &mut SimRng,
    ) -> Result<TallyOutput<Vec<Vote>>> {
        let mut out = Vec::new();
        for (_, b) in register.ballots() {
            let d = tally_decode(b, &session.basis, rng)?;
            if is_valid(&d, self.candidate_len) {
                out.push(candidate_value(&d, self.candidate_len));
            }
        }
        out.sort_unstable();
        Ok(TallyOutput::Outcome(out))
    }

    fn votes_counted(&self, honest: &[(usize, Vote)], outcome: &Vec<Vote>) -> bool {
        let mut pool = outcome.clone();
        honest
            .iter()
            .all(|(_, v)| match pool.iter().position(|x| x == v) {
                Some(i) => {
                    pool.swap_remove(i);
                    true
                }
                None => false,
            })
    }

    fn ballot_count(&self, outcome: &Vec<Vote>) -> usize {
        outcome.len()
    }
}

/// Verification binding: the tallier publishes every decoded vote.
pub fn accept_published(_: &ConjCodeProtocol, _: &ConjSession, t: &TallyOutput<Vec<Vote>>) -> bool {
    !t.is_bottom()
}

/// Flips the candidate field of every ballot seen in transit.
#[derive(Debug, Clone)]
pub struct Malleate {
    pub mask: Vec<u8>,
}

impl Adversary<ConjCodeProtocol> for Malleate {
    fn name(&self) -> String {
        "conjcode-malleate".into()
    }

    fn choose_votes(
        &mut self,
        proto: &ConjCodeProtocol,
        _view: &View,
        _suggested: Option<&[Vote]>,
        _rng: &mut SimRng,
    ) -> Vec<Vote> {
        vec![0; proto.voters]
    }

    fn on_honest_ballot(
        &mut self,
        _proto: &ConjCodeProtocol,
        _session: &mut ConjSession,
        _sender: Option<usize>,
        mut tap: Tap<'_, Ballot>,
        _rng: &mut SimRng,
    ) {
        if let Some(b) = tap.transform() {
            if let Ok(m) = attack_malleate(b, &self.mask) {
                *b = m;
            }
        }
    }
}

/// Corrupt election authority: tags each voter's blank ballot with a serial
/// number and reads tag and vote in transit.
#[derive(Debug, Clone, Default)]
pub struct SerialNumber {
    votes: Vec<Vote>,
    perm: Option<VotePermutation>,
    seen: Vec<(usize, Vote)>,
}

impl SerialNumber {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tag_len(voters: usize) -> usize {
        (usize::BITS - voters.leading_zeros()) as usize
    }
}

impl Adversary<ConjCodeProtocol> for SerialNumber {
    fn name(&self) -> String {
        "conjcode-serial-number".into()
    }

    fn choose_votes(
        &mut self,
        proto: &ConjCodeProtocol,
        _view: &View,
        suggested: Option<&[Vote]>,
        _rng: &mut SimRng,
    ) -> Vec<Vote> {
        self.votes = crate::harness::default_votes(proto, suggested);
        self.votes.clone()
    }

    fn choose_permutation(
        &mut self,
        _proto: &ConjCodeProtocol,
        votes: &[Vote],
        suggested: Option<&VotePermutation>,
    ) -> Result<VotePermutation> {
        let p = match suggested {
            Some(p) => p.clone(),
            None => crate::harness::default_swap(votes)?,
        };
        self.perm = Some(p.clone());
        Ok(p)
    }

    fn tamper_setup(
        &mut self,
        proto: &ConjCodeProtocol,
        session: &mut ConjSession,
        _view: &View,
        rng: &mut SimRng,
    ) -> Result<()> {
        let len = Self::tag_len(proto.voters);
        if len + proto.candidate_len > proto.w {
            return Err(Error::Parameter(
                "ballot too short for a serial number".into(),
            ));
        }
        session.blanks = (0..proto.voters)
            .map(|k| {
                attack_serial_number(
                    proto.n,
                    proto.w,
                    &session.basis,
                    &to_bits(k as Vote + 1, len),
                    rng,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(())
    }

    fn on_honest_ballot(
        &mut self,
        proto: &ConjCodeProtocol,
        session: &mut ConjSession,
        _sender: Option<usize>,
        mut tap: Tap<'_, Ballot>,
        rng: &mut SimRng,
    ) {
        let len = Self::tag_len(proto.voters);
        let Some(b) = tap.transform() else { return };
        if let Ok((tag, vote, cleared)) =
            read_and_clear_tag(b, &session.basis, len, proto.candidate_len, rng)
        {
            let id = tag.iter().fold(0usize, |a, &t| (a << 1) | usize::from(t));
            if id >= 1 {
                self.seen.push((id - 1, vote));
            }
            *b = cleared;
        }
    }

    fn guess_beta(
        &mut self,
        _proto: &ConjCodeProtocol,
        _session: &ConjSession,
        _register: &BallotRegister<Ballot>,
        _tally: &TallyOutput<Vec<Vote>>,
        _view: &View,
        rng: &mut SimRng,
    ) -> bool {
        let Some(perm) = &self.perm else {
            return rng.bit();
        };
        for &(k, seen) in &self.seen {
            let v = self.votes[k];
            let w = perm.apply(k, v);
            if v != w {
                return seen == w;
            }
        }
        rng.bit()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_bases(n: usize) -> Vec<BasisVector> {
        (0..1usize << (n + 1))
            .map(|m| (0..=n).map(|i| m >> i & 1 == 1).collect())
            .collect()
    }

    #[test]
    fn zero_fragment_is_all_zero_ket() {
        let f = make_fragment(&[0, 0, 0], &[false, false, false]).unwrap();
        assert_eq!(f.state, PureState::basis(&[2, 2, 2], &[0, 0, 0]).unwrap());
    }

    #[test]
    fn y_flips_in_both_bases() {
        let y = Operator::y_flip();
        for b in [false, true] {
            for a in 0..2u8 {
                let s = bb84_state(a, b).unwrap().apply_unitary(&y, &[0]).unwrap();
                assert!(s.approx_eq_up_to_phase(&bb84_state(1 - a, b).unwrap(), 1e-12));
            }
        }
        let plus = bb84_state(0, true)
            .unwrap()
            .apply_unitary(&y, &[0])
            .unwrap();
        let minus = bb84_state(1, true).unwrap();
        assert!((plus.inner(&minus).re + 1.0).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_end_to_end() {
        for n in 1..=3 {
            for basis in all_bases(n) {
                for seed in 0..4 {
                    let mut rng = SimRng::new(seed);
                    let blank = make_blank_ballot(n, 5, &basis, &mut rng).unwrap();
                    assert_eq!(tally_decode(&blank, &basis, &mut rng).unwrap(), vec![0; 5]);
                    let r = rerandomize(&blank, &mut rng).unwrap();
                    assert_eq!(tally_decode(&r, &basis, &mut rng).unwrap(), vec![0; 5]);
                    for c in 0..2u8 {
                        let v = encode_vote(&r, &[c]).unwrap();
                        assert_eq!(
                            tally_decode(&v, &basis, &mut rng).unwrap(),
                            vec![0, 0, 0, 0, c]
                        );
                        let m = attack_malleate(&v, &[1]).unwrap();
                        assert_eq!(
                            tally_decode(&m, &basis, &mut rng).unwrap(),
                            vec![0, 0, 0, 0, 1 - c]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn serial_number_survives_voter() {
        for n in 1..=3 {
            for basis in all_bases(n) {
                let mut rng = SimRng::new(n as u64);
                let b = attack_serial_number(n, 6, &basis, &[1, 0, 1], &mut rng).unwrap();
                let v = encode_vote(&rerandomize(&b, &mut rng).unwrap(), &[1]).unwrap();
                let d = tally_decode(&v, &basis, &mut rng).unwrap();
                assert_eq!(d, vec![1, 0, 1, 0, 0, 1]);
                let (tag, vote, cleared) = read_and_clear_tag(&v, &basis, 3, 1, &mut rng).unwrap();
                assert_eq!((tag, vote), (vec![1, 0, 1], 1));
                let d = tally_decode(&cleared, &basis, &mut rng).unwrap();
                assert!(is_valid(&d, 1));
            }
        }
    }

    #[test]
    fn wrong_basis_is_random() {
        let mut rng = SimRng::new(2);
        let basis = vec![false, false];
        let wrong = vec![true, false];
        let mut ones = 0;
        let trials = 10_000;
        for _ in 0..trials {
            let b = make_blank_ballot(1, 1, &basis, &mut rng).unwrap();
            ones += decode_fragment(&b.fragments[0], &wrong, &mut rng).unwrap() as u64;
        }
        let z = crate::stats::binomial_z(ones, trials, 0.5);
        assert!(z.abs() < 4.0, "z = {z}");
    }

    #[test]
    fn validity_rule() {
        assert!(is_valid(&[0, 0, 1], 1));
        assert!(!is_valid(&[1, 0, 0], 1));
        assert_eq!(candidate_value(&[0, 1, 0], 2), 2);
        assert_eq!(to_bits(5, 3), vec![1, 0, 1]);
        assert_eq!(
            one_more_unforgeability(3, 16),
            UnforgeabilityStatus::Assumption
        );
    }

    #[test]
    fn too_long_candidate() {
        let mut rng = SimRng::new(1);
        let b = make_blank_ballot(1, 2, &[false, true], &mut rng).unwrap();
        assert!(matches!(encode_vote(&b, &[1, 1, 1]), Err(Error::Domain(_))));
    }
}
