//! Distributed-ballot referendum: every voter holds one qudit of a shared
//! GHZ-type ballot and casts by absorbing a phase-encoded option qudit.
//! Includes the d-transfer attack, the bin-counting estimator for l_y − l_n
//! and the multi-round agreement rule.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::harness::{
    Adversary, BallotRegister, Capabilities, InTransit, Protocol, SetupParty, TallyOutput, View,
    Vote,
};
use crate::qcore::{
    make_ghz_phase_state, measure_classes, pick, povm_theta_samples, Basis, Operator, PureState,
};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Yes,
    No,
}

impl Choice {
    pub fn from_vote(v: Vote) -> Result<Self> {
        match v {
            0 => Ok(Choice::No),
            1 => Ok(Choice::Yes),
            _ => Err(Error::Domain(format!("referendum vote {v}"))),
        }
    }

    pub fn vote(self) -> Vote {
        match self {
            Choice::Yes => 1,
            Choice::No => 0,
        }
    }
}

/// Tallier secrets.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DistBallotParams {
    pub dim: usize,
    pub voters: usize,
    pub l_y: usize,
    pub l_n: usize,
    pub delta: f64,
}

impl DistBallotParams {
    pub fn new(dim: usize, voters: usize, l_y: usize, l_n: usize, delta: f64) -> Result<Self> {
        if voters == 0 {
            return Err(Error::Parameter("at least one voter is required".into()));
        }
        if dim <= voters {
            return Err(Error::Parameter(format!(
                "dimension {dim} must exceed the number of voters {voters}"
            )));
        }
        if l_y >= dim || l_n >= dim {
            return Err(Error::Parameter(format!(
                "labels {l_y}, {l_n} out of range"
            )));
        }
        if !(0.0..TAU / dim as f64).contains(&delta) {
            return Err(Error::Parameter(format!("delta {delta} outside [0, 2π/D)")));
        }
        let p = Self {
            dim,
            voters,
            l_y,
            l_n,
            delta,
        };
        if voters * p.difference() >= dim {
            return Err(Error::Parameter(format!(
                "difference {} too large for {voters} voters at dimension {dim}",
                p.difference()
            )));
        }
        Ok(p)
    }

    /// Uniform l_y and δ; the difference is `difference` when given, otherwise
    /// uniform over 1..=⌊(D−1)/N⌋.
    pub fn sample(
        dim: usize,
        voters: usize,
        difference: Option<usize>,
        rng: &mut SimRng,
    ) -> Result<Self> {
        if voters == 0 || dim <= voters {
            return Err(Error::Parameter(format!(
                "dimension {dim} must exceed the number of voters {voters}"
            )));
        }
        let max = (dim - 1) / voters;
        let diff = match difference {
            Some(d) if d >= 1 && d <= max => d,
            Some(d) => {
                return Err(Error::Parameter(format!(
                    "difference {d} outside 1..={max}"
                )))
            }
            None => 1 + rng.below(max),
        };
        let l_y = rng.below(dim);
        let delta = rng.uniform() * TAU / dim as f64;
        Self::new(dim, voters, l_y, (l_y + dim - diff) % dim, delta)
    }

    /// (l_y − l_n) mod D.
    pub fn difference(&self) -> usize {
        (self.l_y + self.dim - self.l_n) % self.dim
    }

    pub fn theta(&self, choice: Choice) -> f64 {
        let l = match choice {
            Choice::Yes => self.l_y,
            Choice::No => self.l_n,
        };
        TAU * l as f64 / self.dim as f64 + self.delta
    }

    /// m = q / (l_y − l_n) when the division is exact.
    pub fn decode(&self, q: usize) -> Option<usize> {
        let diff = self.difference();
        (diff > 0 && q.is_multiple_of(diff)).then(|| q / diff)
    }
}

/// (1/√D) Σ_j e^{ijθ} |j⟩.
pub fn option_state(dim: usize, theta: f64) -> Result<PureState> {
    make_ghz_phase_state(1, dim, |j| j as f64 * theta)
}

/// |Ω_q⟩ on `copies` qudits.
pub fn omega_state(q: usize, copies: usize, dim: usize) -> Result<PureState> {
    make_ghz_phase_state(copies, dim, |j| TAU * (j * q) as f64 / dim as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// D phases of the GHZ-subspace amplitudes.
    Compact,
    /// Dense state vector over all 2N qudits.
    Full,
}

#[derive(Debug, Clone)]
enum Register {
    Compact(Vec<Complex64>),
    Full(PureState),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct CastOutcome {
    pub voter: usize,
    pub r: usize,
}

/// Result of the tallier's final measurement: `q` is `None` when the state
/// falls outside the |Ω_q⟩ family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct DistTally {
    pub q: Option<usize>,
    pub m: Option<usize>,
}

/// One protocol round.
#[derive(Debug, Clone)]
pub struct DistElection {
    params: DistBallotParams,
    register: Register,
    announced: Vec<Option<usize>>,
}

impl DistElection {
    pub fn setup(params: DistBallotParams, backend: Backend) -> Result<Self> {
        let d = params.dim;
        let register = match backend {
            Backend::Compact => {
                Register::Compact(vec![Complex64::new(1.0 / (d as f64).sqrt(), 0.0); d])
            }
            Backend::Full => Register::Full(make_ghz_phase_state(params.voters, d, |_| 0.0)?),
        };
        Ok(Self {
            params,
            register,
            announced: vec![None; params.voters],
        })
    }

    pub fn params(&self) -> &DistBallotParams {
        &self.params
    }

    pub fn announced(&self) -> &[Option<usize>] {
        &self.announced
    }

    pub fn state(&self) -> Option<&PureState> {
        match &self.register {
            Register::Full(s) => Some(s),
            Register::Compact(_) => None,
        }
    }

    /// Amplitudes on |j⟩^{⊗n} for j = 0..D.
    pub fn ghz_amplitudes(&self) -> Vec<Complex64> {
        match &self.register {
            Register::Compact(c) => c.clone(),
            Register::Full(s) => (0..self.params.dim)
                .map(|j| s.amp(&vec![j; s.num_qudits()]))
                .collect(),
        }
    }

    fn check_voter(&self, voter: usize) -> Result<()> {
        match self.announced.get(voter) {
            None => Err(Error::Index(format!("voter {voter}"))),
            Some(Some(_)) => Err(Error::ProtocolOrder(format!("voter {voter} already cast"))),
            Some(None) => Ok(()),
        }
    }

    /// Absorbs an option qudit at phase `theta`, measures R, applies U_r and
    /// then the phase `correction` on the j < r block.
    fn absorb(
        &mut self,
        voter: usize,
        theta: f64,
        correction: f64,
        rng: &mut SimRng,
    ) -> Result<CastOutcome> {
        self.check_voter(voter)?;
        let d = self.params.dim;
        let r = match &mut self.register {
            Register::Compact(c) => {
                let p: f64 = c.iter().map(|a| a.norm_sqr()).sum::<f64>() / d as f64;
                let r = pick(&vec![p; d], rng.uniform())?;
                for (a, amp) in c.iter_mut().enumerate() {
                    let mut phase = ((a + d - r) % d) as f64 * theta;
                    if a < r {
                        phase += correction;
                    }
                    *amp *= Complex64::from_polar(1.0, phase);
                }
                r
            }
            Register::Full(s) => {
                let joined = s.tensor(&option_state(d, theta)?)?;
                let opt = joined.num_qudits() - 1;
                let strides = joined.strides();
                let (sb, so) = (strides[voter], strides[opt]);
                let rec = measure_classes(
                    &joined,
                    d,
                    |i| ((i / sb) % d + d - (i / so) % d) % d,
                    Basis::RPair,
                    rng,
                )?;
                let r = rec.outcome;
                let shifted = rec
                    .collapsed
                    .apply_unitary(&Operator::shift(d, r), &[opt])?;
                *s = shifted.apply_phase(opt, |a| if a < r { correction } else { 0.0 })?;
                r
            }
        };
        self.announced[voter] = Some(r);
        Ok(CastOutcome { voter, r })
    }

    pub fn cast(&mut self, voter: usize, choice: Choice, rng: &mut SimRng) -> Result<CastOutcome> {
        self.absorb(voter, self.params.theta(choice), 0.0, rng)
    }

    /// Casts `choice` after C_d, then applies Correct_r; both use the
    /// estimate `l_hat` of l_y − l_n.
    pub fn attack_d_transfer(
        &mut self,
        voter: usize,
        choice: Choice,
        d: usize,
        l_hat: usize,
        rng: &mut SimRng,
    ) -> Result<CastOutcome> {
        let gap = TAU * l_hat as f64 / self.params.dim as f64;
        let theta = self.params.theta(choice) + d as f64 * gap;
        let correction = -(self.params.dim as f64) * d as f64 * gap;
        self.absorb(voter, theta, correction, rng)
    }

    /// Outcomes of measuring `count` fresh option qudits of one type with
    /// the phase POVM, as a corrupted voter keeping unused qudits would.
    pub fn leftover_samples(
        &self,
        choice: Choice,
        count: usize,
        rng: &mut SimRng,
    ) -> Result<Vec<f64>> {
        povm_theta_samples(self.params.dim, self.params.theta(choice), count, rng)
    }

    /// Applies W_k for every announcement and strips e^{ijNθ_n}, leaving
    /// |Ω_q⟩ for honest runs.
    pub fn corrected_amplitudes(&self) -> Result<Vec<Complex64>> {
        let p = &self.params;
        let d = p.dim;
        let rs = self
            .announced
            .iter()
            .enumerate()
            .map(|(k, r)| r.ok_or_else(|| Error::ProtocolOrder(format!("voter {k} has not cast"))))
            .collect::<Result<Vec<_>>>()?;
        let theta_n = p.theta(Choice::No);
        let phase = |j: usize| {
            let below = rs.iter().filter(|&&r| j < r).count() as f64;
            -(below * d as f64 * p.delta) - j as f64 * p.voters as f64 * theta_n
        };
        Ok(self
            .ghz_amplitudes()
            .iter()
            .enumerate()
            .map(|(j, a)| a * Complex64::from_polar(1.0, phase(j)))
            .collect())
    }

    /// Measures in the |Ω_q⟩ family plus its complement and decodes m.
    pub fn tally(&self, rng: &mut SimRng) -> Result<DistTally> {
        let c = self.corrected_amplitudes()?;
        let d = self.params.dim;
        let scale = 1.0 / (d as f64).sqrt();
        let mut weights: Vec<f64> = (0..d)
            .map(|q| {
                c.iter()
                    .enumerate()
                    .map(|(j, a)| {
                        a * Complex64::from_polar(scale, -TAU * (j * q) as f64 / d as f64)
                    })
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .collect();
        let total: f64 = match &self.register {
            Register::Compact(c) => c.iter().map(|a| a.norm_sqr()).sum(),
            Register::Full(s) => s.norm().powi(2),
        };
        weights.push((total - weights.iter().sum::<f64>()).max(0.0));
        let k = pick(&weights, rng.uniform())?;
        let q = (k < d).then_some(k);
        Ok(DistTally {
            q,
            m: q.and_then(|q| self.params.decode(q)),
        })
    }
}

/// Bin counts and the two-slot solution of the estimator.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EstimatorState {
    pub record: Vec<u64>,
    pub solution: [Option<usize>; 2],
    pub threshold: f64,
}

/// Fraction of samples a bin needs to enter the solution.
pub const ESTIMATOR_THRESHOLD: f64 = 0.4;

/// Bins each angle into [x_j, x_{j+1}), keeps bins holding at least 40% of
/// the samples, and returns the first kept bin (with the wrap pair
/// [0, D−1] reordered to [D−1, 0]).
pub fn estimate_label(samples: &[f64], dim: usize) -> Result<(usize, EstimatorState)> {
    if dim == 0 {
        return Err(Error::Parameter("dimension must be positive".into()));
    }
    let mut record = vec![0u64; dim];
    let width = TAU / dim as f64;
    for &theta in samples {
        if !(0.0..=TAU).contains(&theta) {
            return Err(Error::Domain(format!("sample {theta} outside [0, 2π]")));
        }
        let j = ((theta / width).floor() as usize).min(dim - 1);
        record[j] += 1;
    }
    let threshold = ESTIMATOR_THRESHOLD * samples.len() as f64;
    let hits: Vec<usize> = (0..dim)
        .filter(|&l| !samples.is_empty() && record[l] as f64 >= threshold)
        .collect();
    if hits.len() > 2 {
        return Err(Error::EstimatorOverflow(hits.len()));
    }
    let mut solution = [hits.first().copied(), hits.get(1).copied()];
    if solution == [Some(0), Some(dim - 1)] {
        solution.swap(0, 1);
    }
    let first = solution[0].ok_or(Error::EstimatorEmpty)?;
    Ok((
        first,
        EstimatorState {
            record,
            solution,
            threshold,
        },
    ))
}

/// l̂ = (Algo(yes) − Algo(no)) mod D.
pub fn attack_estimate_difference(yes: &[f64], no: &[f64], dim: usize) -> Result<usize> {
    let (a, _) = estimate_label(yes, dim)?;
    let (b, _) = estimate_label(no, dim)?;
    Ok((a + dim - b) % dim)
}

/// Largest d' ≤ d for which (m + d')·l̂ stays below D.
pub fn clamp_transfer(m: usize, d: usize, l_hat: usize, dim: usize) -> usize {
    if l_hat == 0 {
        return d;
    }
    (0..=d).rev().find(|&x| (m + x) * l_hat < dim).unwrap_or(0)
}

/// How a round is generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundSpec {
    pub dim: usize,
    pub voters: usize,
    /// Fixed l_y − l_n, or uniform when `None`.
    pub difference: Option<usize>,
    pub backend: Backend,
}

/// Adversary behaviour inside [`run_round`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RoundAdversary {
    Honest,
    /// `voter` estimates l_y − l_n from `samples` leftover qudits of each
    /// type, or uses the true value when `samples` is `None`, and adds `d`
    /// "yes" votes on top of its own.
    DTransfer {
        voter: usize,
        d: usize,
        samples: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RoundResult {
    pub params: DistBallotParams,
    pub tally: DistTally,
    pub l_hat: Option<usize>,
    pub cheat: Option<bool>,
    pub d_applied: usize,
}

/// Runs one round with fresh secrets. Estimator failures make the attacking
/// voter cast honestly.
pub fn run_round(
    spec: &RoundSpec,
    votes: &[Choice],
    adversary: RoundAdversary,
    rng: &mut SimRng,
) -> Result<RoundResult> {
    if votes.len() != spec.voters {
        return Err(Error::Parameter(format!(
            "{} votes for {} voters",
            votes.len(),
            spec.voters
        )));
    }
    let params = DistBallotParams::sample(spec.dim, spec.voters, spec.difference, rng)?;
    let mut election = DistElection::setup(params, spec.backend)?;
    let mut l_hat = None;
    let mut cheat = None;
    let mut d_applied = 0;
    for (k, &choice) in votes.iter().enumerate() {
        match adversary {
            RoundAdversary::DTransfer { voter, d, samples } if voter == k => {
                let est = match samples {
                    None => Ok(params.difference()),
                    Some(n) => {
                        let ys = election.leftover_samples(Choice::Yes, n, rng)?;
                        let ns = election.leftover_samples(Choice::No, n, rng)?;
                        attack_estimate_difference(&ys, &ns, spec.dim)
                    }
                };
                match est {
                    Ok(l) => {
                        let m = votes.iter().filter(|&&c| c == Choice::Yes).count();
                        d_applied = clamp_transfer(m, d, l, spec.dim);
                        l_hat = Some(l);
                        cheat = Some(l == params.difference());
                        election.attack_d_transfer(k, choice, d_applied, l, rng)?;
                    }
                    Err(Error::EstimatorOverflow(_)) | Err(Error::EstimatorEmpty) => {
                        cheat = Some(false);
                        election.cast(k, choice, rng)?;
                    }
                    Err(e) => return Err(e),
                }
            }
            _ => {
                election.cast(k, choice, rng)?;
            }
        }
    }
    Ok(RoundResult {
        params,
        tally: election.tally(rng)?,
        l_hat,
        cheat,
        d_applied,
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MultiRoundOutcome {
    pub rounds: Vec<RoundResult>,
    /// Common tally when every round decodes to the same value.
    pub outcome: Option<usize>,
}

/// Runs `rounds` independent rounds, each from its own forked stream.
pub fn multi_round(
    spec: &RoundSpec,
    votes: &[Choice],
    adversary: RoundAdversary,
    rounds: usize,
    rng: &mut SimRng,
) -> Result<MultiRoundOutcome> {
    if rounds == 0 {
        return Err(Error::Parameter("at least one round is required".into()));
    }
    let results = (0..rounds)
        .map(|_| run_round(spec, votes, adversary, &mut rng.fork()))
        .collect::<Result<Vec<_>>>()?;
    let outcome = agree(results.iter().map(|r| r.tally.m));
    Ok(MultiRoundOutcome {
        rounds: results,
        outcome,
    })
}

fn agree(mut values: impl Iterator<Item = Option<usize>>) -> Option<usize> {
    let first = values.next()??;
    values.all(|v| v == Some(first)).then_some(first)
}

/// Harness binding running `rounds` rounds per election.
#[derive(Debug, Clone)]
pub struct DistBallotProtocol {
    pub dim: usize,
    pub voters: usize,
    pub rounds: usize,
    pub difference: Option<usize>,
    pub backend: Backend,
}

impl DistBallotProtocol {
    pub fn new(dim: usize, voters: usize, rounds: usize) -> Result<Self> {
        if rounds == 0 {
            return Err(Error::Parameter("at least one round is required".into()));
        }
        DistBallotParams::sample(dim, voters, None, &mut SimRng::new(0))?;
        Ok(Self {
            dim,
            voters,
            rounds,
            difference: None,
            backend: Backend::Compact,
        })
    }
}

#[derive(Debug, Clone)]
pub struct DistSession {
    pub rounds: Vec<DistElection>,
}

/// Announced R outcomes of one voter, one per round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistBallot {
    pub r: Vec<usize>,
}

impl Protocol for DistBallotProtocol {
    type Session = DistSession;
    type Ballot = DistBallot;
    type Outcome = usize;

    fn name(&self) -> String {
        "distball".into()
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
            order_leaks: false,
            setup_party: SetupParty::Tallier,
            authority_corruptible: false,
        }
    }

    fn setup(&self, rng: &mut SimRng) -> Result<DistSession> {
        let rounds = (0..self.rounds)
            .map(|_| {
                let mut r = rng.fork();
                let p = DistBallotParams::sample(self.dim, self.voters, self.difference, &mut r)?;
                DistElection::setup(p, self.backend)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DistSession { rounds })
    }

    fn cast(
        &self,
        session: &mut DistSession,
        voter: usize,
        vote: Vote,
        rng: &mut SimRng,
    ) -> Result<Option<DistBallot>> {
        let choice = Choice::from_vote(vote)?;
        let r = session
            .rounds
            .iter_mut()
            .map(|e| e.cast(voter, choice, rng).map(|o| o.r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(DistBallot { r }))
    }

    fn tally(
        &self,
        session: &mut DistSession,
        register: &BallotRegister<DistBallot>,
        _corrupted: &[usize],
        rng: &mut SimRng,
    ) -> Result<TallyOutput<usize>> {
        if register.count() < self.voters {
            return Ok(TallyOutput::Bottom(None));
        }
        let ms = session
            .rounds
            .iter()
            .map(|e| e.tally(rng).map(|t| t.m))
            .collect::<Result<Vec<_>>>()?;
        Ok(match agree(ms.into_iter()) {
            Some(m) => TallyOutput::Outcome(m),
            None => TallyOutput::Bottom(None),
        })
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

/// Verification binding: accept any decoded tally.
pub fn accept_decoded(_: &DistBallotProtocol, _: &DistSession, t: &TallyOutput<usize>) -> bool {
    !t.is_bottom()
}

/// One corrupted voter estimates l_y − l_n in every round and transfers `d`
/// votes; every other voter votes "no".
#[derive(Debug, Clone)]
pub struct DTransfer {
    pub voter: usize,
    pub d: usize,
    /// Leftover option qudits measured per type, per round.
    pub samples: usize,
    yes_votes: usize,
}

impl DTransfer {
    pub fn new(voter: usize, d: usize, samples: usize) -> Self {
        Self {
            voter,
            d,
            samples,
            yes_votes: 0,
        }
    }
}

impl Adversary<DistBallotProtocol> for DTransfer {
    fn name(&self) -> String {
        format!("distball-d-transfer(d={},samples={})", self.d, self.samples)
    }

    fn choose_votes(
        &mut self,
        proto: &DistBallotProtocol,
        _view: &View,
        _suggested: Option<&[Vote]>,
        _rng: &mut SimRng,
    ) -> Vec<Vote> {
        let mut v = vec![0; proto.voters];
        v[self.voter] = 1;
        self.yes_votes = 1;
        v
    }

    fn static_corruptions(&mut self, _proto: &DistBallotProtocol, _view: &View) -> Vec<usize> {
        vec![self.voter]
    }

    fn cast_corrupted(
        &mut self,
        proto: &DistBallotProtocol,
        session: &mut DistSession,
        voter: usize,
        vote: Vote,
        rng: &mut SimRng,
    ) -> Result<Option<DistBallot>> {
        let mut r = Vec::with_capacity(session.rounds.len());
        for e in session.rounds.iter_mut() {
            let ys = e.leftover_samples(Choice::Yes, self.samples, rng)?;
            let ns = e.leftover_samples(Choice::No, self.samples, rng)?;
            let out = match attack_estimate_difference(&ys, &ns, proto.dim) {
                Ok(l) => {
                    let d = clamp_transfer(self.yes_votes, self.d, l, proto.dim);
                    e.attack_d_transfer(voter, Choice::from_vote(vote)?, d, l, rng)?
                }
                Err(Error::EstimatorOverflow(_)) | Err(Error::EstimatorEmpty) => {
                    e.cast(voter, Choice::from_vote(vote)?, rng)?
                }
                Err(err) => return Err(err),
            };
            r.push(out.r);
        }
        Ok(Some(DistBallot { r }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn votes(bits: usize, n: usize) -> Vec<Choice> {
        (0..n)
            .map(|k| {
                if bits >> k & 1 == 1 {
                    Choice::Yes
                } else {
                    Choice::No
                }
            })
            .collect()
    }

    #[test]
    fn difference_one_always_fits() {
        for n in 1..6 {
            for d in n + 1..n + 6 {
                assert!(DistBallotParams::new(d, n, 1, 0, 0.0).is_ok());
            }
        }
        assert!(DistBallotParams::new(3, 3, 1, 0, 0.0).is_err());
    }

    #[test]
    fn angle_difference_matches_labels() {
        let p = DistBallotParams::new(11, 2, 7, 3, 0.2).unwrap();
        let gap = p.theta(Choice::Yes) - p.theta(Choice::No);
        assert!((gap - TAU * 4.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn decoding_is_injective() {
        for diff in 1..=2 {
            let p = DistBallotParams::new(7, 3, diff, 0, 0.0).unwrap();
            let qs: Vec<usize> = (0..=3).map(|m| m * diff % 7).collect();
            for (m, &q) in qs.iter().enumerate() {
                assert_eq!(p.decode(q), Some(m));
            }
        }
    }

    #[test]
    fn single_yes_voter() {
        let mut rng = SimRng::new(9);
        let p = DistBallotParams::sample(5, 1, None, &mut rng).unwrap();
        for backend in [Backend::Compact, Backend::Full] {
            let mut e = DistElection::setup(p, backend).unwrap();
            e.cast(0, Choice::Yes, &mut rng).unwrap();
            assert_eq!(e.tally(&mut rng).unwrap().m, Some(1));
        }
    }

    #[test]
    fn one_cast_matches_alpha_pattern() {
        let mut rng = SimRng::new(4);
        let p = DistBallotParams::new(5, 2, 3, 1, 0.37).unwrap();
        let mut e = DistElection::setup(p, Backend::Full).unwrap();
        let r = e.cast(1, Choice::Yes, &mut rng).unwrap().r;
        let th = p.theta(Choice::Yes);
        let expected = make_ghz_phase_state(3, 5, |j| {
            if j < r {
                (5 + j - r) as f64 * th
            } else {
                (j - r) as f64 * th
            }
        })
        .unwrap();
        assert!(e.state().unwrap().approx_eq_up_to_phase(&expected, 1e-10));
    }

    #[test]
    fn backends_agree_draw_for_draw() {
        for seed in 0..20 {
            let mut a = SimRng::new(seed);
            let mut b = SimRng::new(seed);
            let spec = |backend| RoundSpec {
                dim: 7,
                voters: 3,
                difference: None,
                backend,
            };
            let v = votes(seed as usize % 8, 3);
            let adv = RoundAdversary::DTransfer {
                voter: 1,
                d: 1,
                samples: None,
            };
            let x = run_round(&spec(Backend::Compact), &v, adv, &mut a).unwrap();
            let y = run_round(&spec(Backend::Full), &v, adv, &mut b).unwrap();
            assert_eq!(x.tally, y.tally);
            assert_eq!(a.draws(), b.draws());
        }
    }

    #[test]
    fn honest_exhaustive_full() {
        for (dim, n) in [(5, 2), (7, 2), (7, 3)] {
            for bits in 0..1usize << n {
                let v = votes(bits, n);
                for seed in 0..5 {
                    let mut rng = SimRng::new(seed);
                    let spec = RoundSpec {
                        dim,
                        voters: n,
                        difference: None,
                        backend: Backend::Full,
                    };
                    let r = run_round(&spec, &v, RoundAdversary::Honest, &mut rng).unwrap();
                    assert_eq!(r.tally.m, Some(bits.count_ones() as usize));
                }
            }
        }
    }

    #[test]
    fn attacked_state_is_omega_m_plus_d() {
        let mut rng = SimRng::new(12);
        let p = DistBallotParams::new(5, 2, 2, 1, 0.5).unwrap();
        let mut e = DistElection::setup(p, Backend::Full).unwrap();
        e.attack_d_transfer(0, Choice::Yes, 1, 1, &mut rng).unwrap();
        e.cast(1, Choice::No, &mut rng).unwrap();
        let c = e.corrected_amplitudes().unwrap();
        let got = PureState::new(vec![5], c).unwrap();
        let want = omega_state(2, 1, 5).unwrap();
        assert!(got.approx_eq_up_to_phase(&want, 1e-10));
        assert_eq!(e.tally(&mut rng).unwrap().m, Some(2));
    }

    #[test]
    fn zero_transfer_is_honest() {
        let mut rng = SimRng::new(3);
        let p = DistBallotParams::sample(7, 3, None, &mut rng).unwrap();
        let mut e = DistElection::setup(p, Backend::Compact).unwrap();
        e.attack_d_transfer(0, Choice::Yes, 0, 5, &mut rng).unwrap();
        e.cast(1, Choice::No, &mut rng).unwrap();
        e.cast(2, Choice::Yes, &mut rng).unwrap();
        assert_eq!(e.tally(&mut rng).unwrap().m, Some(2));
    }

    #[test]
    fn estimator_single_bin_and_wrap() {
        let w = TAU / 16.0;
        let s: Vec<f64> = (0..10)
            .map(|i| w * (5.0 + 0.05 + 0.09 * i as f64))
            .collect();
        let (l, st) = estimate_label(&s, 16).unwrap();
        assert_eq!(l, 5);
        assert_eq!(st.solution, [Some(5), None]);
        let mut s: Vec<f64> = (0..5).map(|i| w * (0.1 + 0.1 * i as f64)).collect();
        s.extend((0..5).map(|i| w * (15.1 + 0.1 * i as f64)));
        let (l, st) = estimate_label(&s, 16).unwrap();
        assert_eq!(st.solution, [Some(15), Some(0)]);
        assert_eq!(l, 15);
        assert_eq!(estimate_label(&[], 4), Err(Error::EstimatorEmpty));
        let even: Vec<f64> = (0..8).map(|i| w * 4.0 * (i % 4) as f64 + 0.1).collect();
        assert_eq!(estimate_label(&even, 16), Err(Error::EstimatorEmpty));
    }

    #[test]
    fn common_offset_cancels() {
        let w = TAU / 16.0;
        let ys = vec![w * 6.5; 10];
        let ns = vec![w * 2.5; 10];
        assert_eq!(attack_estimate_difference(&ys, &ns, 16).unwrap(), 4);
    }

    #[test]
    fn multi_round_honest_agrees() {
        let mut rng = SimRng::new(77);
        let spec = RoundSpec {
            dim: 9,
            voters: 4,
            difference: None,
            backend: Backend::Compact,
        };
        let v = votes(0b1011, 4);
        let out = multi_round(&spec, &v, RoundAdversary::Honest, 6, &mut rng).unwrap();
        assert_eq!(out.outcome, Some(3));
    }

    #[test]
    fn clamp_keeps_decodable() {
        assert_eq!(clamp_transfer(1, 3, 5, 16), 2);
        assert_eq!(clamp_transfer(3, 1, 5, 16), 0);
        assert_eq!(clamp_transfer(0, 2, 1, 7), 2);
    }
}
