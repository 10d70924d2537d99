use std::collections::BTreeSet;
use std::fmt::Debug;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Vote, VotePermutation};
use super::register::BallotRegister;
use super::report::{Experiment, TrialRecord, TrialReport};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// What the adversary may do to an honest ballot while it is in transit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InTransit {
    /// Nothing is visible.
    Sealed,
    /// Contents may be read but not changed.
    Observe,
    /// Contents may be read and transformed.
    Malleable,
}

/// Who prepares the election's initial resources.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetupParty {
    Voter(usize),
    Authority,
    Tallier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capabilities {
    pub in_transit: InTransit,
    /// Whether the adversary learns the casting order and sender identities.
    pub order_leaks: bool,
    pub setup_party: SetupParty,
    /// Whether the setup party may be adversarial in the integrity game.
    pub authority_corruptible: bool,
}

/// Public notice that a party aborted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AbortNotice {
    pub voter: Option<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TallyOutput<O> {
    Outcome(O),
    Bottom(Option<AbortNotice>),
}

impl<O> TallyOutput<O> {
    pub fn outcome(&self) -> Option<&O> {
        match self {
            Self::Outcome(o) => Some(o),
            Self::Bottom(_) => None,
        }
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, Self::Bottom(_))
    }
}

/// An election protocol as seen by the challenger.
///
/// The session holds all protocol state, including parties' local registers.
pub trait Protocol: Sync {
    type Session: Send;
    type Ballot: Send;
    type Outcome: Clone + Debug + Send;

    fn name(&self) -> String;
    fn voters(&self) -> usize;
    fn vote_domain(&self) -> Vec<Vote>;
    fn capabilities(&self) -> Capabilities;

    fn setup(&self, rng: &mut SimRng) -> Result<Self::Session>;

    /// Setup-phase checks run by the parties; `None` means accept.
    fn verify_setup(
        &self,
        _session: &mut Self::Session,
        _corrupted: &[usize],
        _rng: &mut SimRng,
    ) -> Result<Option<AbortNotice>> {
        Ok(None)
    }

    /// Honest ballot generation for `voter`.
    fn cast(
        &self,
        session: &mut Self::Session,
        voter: usize,
        vote: Vote,
        rng: &mut SimRng,
    ) -> Result<Option<Self::Ballot>>;

    fn tally(
        &self,
        session: &mut Self::Session,
        register: &BallotRegister<Self::Ballot>,
        corrupted: &[usize],
        rng: &mut SimRng,
    ) -> Result<TallyOutput<Self::Outcome>>;

    /// Whether every honest (voter, vote) pair is reflected in `outcome`.
    fn votes_counted(&self, honest: &[(usize, Vote)], outcome: &Self::Outcome) -> bool;

    /// Number of ballots the outcome accounts for.
    fn ballot_count(&self, outcome: &Self::Outcome) -> usize;

    /// Whether [`Protocol::verify`] is implemented.
    fn has_verify(&self) -> bool {
        false
    }

    /// Public verification predicate, if the protocol has one.
    fn verify(
        &self,
        _session: &Self::Session,
        _register: &BallotRegister<Self::Ballot>,
        _tally: &TallyOutput<Self::Outcome>,
        _delta0: u32,
    ) -> Option<bool> {
        None
    }

    fn outcome_label(&self, outcome: &Self::Outcome) -> String {
        format!("{outcome:?}")
    }
}

/// Attaches a verification predicate to a protocol so it can run in the
/// verifiability game.
pub struct WithVerify<P: Protocol> {
    pub inner: P,
    pub predicate: fn(&P, &P::Session, &TallyOutput<P::Outcome>) -> bool,
}

impl<P: Protocol> Protocol for WithVerify<P> {
    type Session = P::Session;
    type Ballot = P::Ballot;
    type Outcome = P::Outcome;

    fn name(&self) -> String {
        self.inner.name()
    }
    fn voters(&self) -> usize {
        self.inner.voters()
    }
    fn vote_domain(&self) -> Vec<Vote> {
        self.inner.vote_domain()
    }
    fn capabilities(&self) -> Capabilities {
        self.inner.capabilities()
    }
    fn setup(&self, rng: &mut SimRng) -> Result<Self::Session> {
        self.inner.setup(rng)
    }
    fn verify_setup(
        &self,
        session: &mut Self::Session,
        corrupted: &[usize],
        rng: &mut SimRng,
    ) -> Result<Option<AbortNotice>> {
        self.inner.verify_setup(session, corrupted, rng)
    }
    fn cast(
        &self,
        session: &mut Self::Session,
        voter: usize,
        vote: Vote,
        rng: &mut SimRng,
    ) -> Result<Option<Self::Ballot>> {
        self.inner.cast(session, voter, vote, rng)
    }
    fn tally(
        &self,
        session: &mut Self::Session,
        register: &BallotRegister<Self::Ballot>,
        corrupted: &[usize],
        rng: &mut SimRng,
    ) -> Result<TallyOutput<Self::Outcome>> {
        self.inner.tally(session, register, corrupted, rng)
    }
    fn votes_counted(&self, honest: &[(usize, Vote)], outcome: &Self::Outcome) -> bool {
        self.inner.votes_counted(honest, outcome)
    }
    fn ballot_count(&self, outcome: &Self::Outcome) -> usize {
        self.inner.ballot_count(outcome)
    }
    fn has_verify(&self) -> bool {
        true
    }
    fn verify(
        &self,
        session: &Self::Session,
        _register: &BallotRegister<Self::Ballot>,
        tally: &TallyOutput<Self::Outcome>,
        _delta0: u32,
    ) -> Option<bool> {
        Some((self.predicate)(&self.inner, session, tally))
    }
    fn outcome_label(&self, outcome: &Self::Outcome) -> String {
        self.inner.outcome_label(outcome)
    }
}

/// Runs a strategy written for `P` against [`WithVerify<P>`].
#[derive(Debug, Clone)]
pub struct Verified<A>(pub A);

impl<P: Protocol, A: Adversary<P>> Adversary<WithVerify<P>> for Verified<A> {
    fn name(&self) -> String {
        self.0.name()
    }
    fn choose_votes(
        &mut self,
        proto: &WithVerify<P>,
        view: &View,
        suggested: Option<&[Vote]>,
        rng: &mut SimRng,
    ) -> Vec<Vote> {
        self.0.choose_votes(&proto.inner, view, suggested, rng)
    }
    fn choose_permutation(
        &mut self,
        proto: &WithVerify<P>,
        votes: &[Vote],
        suggested: Option<&VotePermutation>,
    ) -> Result<VotePermutation> {
        self.0.choose_permutation(&proto.inner, votes, suggested)
    }
    fn static_corruptions(&mut self, proto: &WithVerify<P>, view: &View) -> Vec<usize> {
        self.0.static_corruptions(&proto.inner, view)
    }
    fn tamper_setup(
        &mut self,
        proto: &WithVerify<P>,
        session: &mut P::Session,
        view: &View,
        rng: &mut SimRng,
    ) -> Result<()> {
        self.0.tamper_setup(&proto.inner, session, view, rng)
    }
    fn corrupt(&mut self, voter: usize, view: &View) -> bool {
        Adversary::<P>::corrupt(&mut self.0, voter, view)
    }
    fn on_honest_ballot(
        &mut self,
        proto: &WithVerify<P>,
        session: &mut P::Session,
        sender: Option<usize>,
        tap: Tap<'_, P::Ballot>,
        rng: &mut SimRng,
    ) {
        self.0
            .on_honest_ballot(&proto.inner, session, sender, tap, rng)
    }
    fn cast_corrupted(
        &mut self,
        proto: &WithVerify<P>,
        session: &mut P::Session,
        voter: usize,
        vote: Vote,
        rng: &mut SimRng,
    ) -> Result<Option<P::Ballot>> {
        self.0
            .cast_corrupted(&proto.inner, session, voter, vote, rng)
    }
    fn guess_beta(
        &mut self,
        proto: &WithVerify<P>,
        session: &P::Session,
        register: &BallotRegister<P::Ballot>,
        tally: &TallyOutput<P::Outcome>,
        view: &View,
        rng: &mut SimRng,
    ) -> bool {
        self.0
            .guess_beta(&proto.inner, session, register, tally, view, rng)
    }
}

/// What the adversary sees of the election's public state.
#[derive(Debug, Clone)]
pub struct View {
    pub voters: usize,
    pub budget: usize,
    /// Casting order, when the protocol leaks it.
    pub order: Option<Vec<usize>>,
    pub corrupted: Vec<usize>,
}

/// Access to a ballot in transit, limited by the protocol's capability.
pub struct Tap<'a, B> {
    ballot: &'a mut B,
    access: InTransit,
}

impl<'a, B> Tap<'a, B> {
    pub fn new(ballot: &'a mut B, access: InTransit) -> Self {
        Self { ballot, access }
    }

    pub fn access(&self) -> InTransit {
        self.access
    }

    pub fn observe(&self) -> Option<&B> {
        match self.access {
            InTransit::Sealed => None,
            _ => Some(self.ballot),
        }
    }

    pub fn transform(&mut self) -> Option<&mut B> {
        match self.access {
            InTransit::Malleable => Some(self.ballot),
            _ => None,
        }
    }
}

/// Adversary callbacks. Defaults describe a passive adversary that corrupts
/// nobody, forwards ballots unchanged and guesses uniformly.
///
/// Strategies receive the session so they can act for the parties they
/// control; they must only touch state those parties hold.
pub trait Adversary<P: Protocol>: Send {
    fn name(&self) -> String;

    fn choose_votes(
        &mut self,
        proto: &P,
        _view: &View,
        suggested: Option<&[Vote]>,
        _rng: &mut SimRng,
    ) -> Vec<Vote> {
        default_votes(proto, suggested)
    }

    fn choose_permutation(
        &mut self,
        _proto: &P,
        votes: &[Vote],
        suggested: Option<&VotePermutation>,
    ) -> Result<VotePermutation> {
        match suggested {
            Some(p) => Ok(p.clone()),
            None => default_swap(votes),
        }
    }

    fn static_corruptions(&mut self, _proto: &P, _view: &View) -> Vec<usize> {
        Vec::new()
    }

    fn tamper_setup(
        &mut self,
        _proto: &P,
        _session: &mut P::Session,
        _view: &View,
        _rng: &mut SimRng,
    ) -> Result<()> {
        Ok(())
    }

    /// Consulted once per voter, in casting order, before the ballot exists.
    fn corrupt(&mut self, _voter: usize, _view: &View) -> bool {
        false
    }

    fn on_honest_ballot(
        &mut self,
        _proto: &P,
        _session: &mut P::Session,
        _sender: Option<usize>,
        _tap: Tap<'_, P::Ballot>,
        _rng: &mut SimRng,
    ) {
    }

    fn cast_corrupted(
        &mut self,
        proto: &P,
        session: &mut P::Session,
        voter: usize,
        vote: Vote,
        rng: &mut SimRng,
    ) -> Result<Option<P::Ballot>> {
        proto.cast(session, voter, vote, rng)
    }

    fn guess_beta(
        &mut self,
        _proto: &P,
        _session: &P::Session,
        _register: &BallotRegister<P::Ballot>,
        _tally: &TallyOutput<P::Outcome>,
        _view: &View,
        rng: &mut SimRng,
    ) -> bool {
        rng.bit()
    }
}

/// Suggested votes if given, else the vote domain repeated in voter order.
pub fn default_votes<P: Protocol>(proto: &P, suggested: Option<&[Vote]>) -> Vec<Vote> {
    match suggested {
        Some(v) => v.to_vec(),
        None => {
            let dom = proto.vote_domain();
            (0..proto.voters()).map(|k| dom[k % dom.len()]).collect()
        }
    }
}

/// Swaps the first two voters whose votes differ.
pub fn default_swap(votes: &[Vote]) -> Result<VotePermutation> {
    let a = 0;
    let b = votes
        .iter()
        .position(|&v| v != votes[a])
        .ok_or_else(|| Error::Config("all votes equal: no non-trivial permutation".into()))?;
    Ok(VotePermutation::swap(a, votes[a], b, votes[b]))
}

/// The passive adversary.
#[derive(Debug, Clone, Copy, Default)]
pub struct HonestAdversary;

impl<P: Protocol> Adversary<P> for HonestAdversary {
    fn name(&self) -> String {
        "honest".into()
    }
}

struct Trial {
    outcome: i8,
    aux: String,
}

struct Casting<O> {
    tally: TallyOutput<O>,
    corrupted: Vec<usize>,
}

fn check_votes<P: Protocol>(proto: &P, votes: &[Vote]) -> Result<()> {
    let dom = proto.vote_domain();
    if votes.len() != proto.voters() {
        return Err(Error::Config(format!(
            "{} votes for {} voters",
            votes.len(),
            proto.voters()
        )));
    }
    if let Some(v) = votes.iter().find(|v| !dom.contains(v)) {
        return Err(Error::Config(format!(
            "vote {v} outside the domain {dom:?}"
        )));
    }
    Ok(())
}

/// Setup and casting phases shared by all three games. `cast_choice` maps an
/// honest voter's assigned vote to the vote it actually casts.
#[allow(clippy::too_many_arguments)]
fn setup_and_cast<P: Protocol, A: Adversary<P>>(
    cfg: &ExperimentConfig,
    proto: &P,
    adv: &mut A,
    view: &mut View,
    votes: &[Vote],
    cast_choice: &dyn Fn(usize, Vote) -> Vote,
    integrity_game: bool,
    rng: &mut SimRng,
) -> Result<(Casting<P::Outcome>, P::Session, BallotRegister<P::Ballot>)> {
    let caps = proto.capabilities();
    let n = proto.voters();
    let mut corrupted: BTreeSet<usize> = BTreeSet::new();
    for k in adv.static_corruptions(proto, view) {
        if k >= n {
            return Err(Error::Harness(format!("corrupted unknown voter {k}")));
        }
        corrupted.insert(k);
    }
    if corrupted.len() > view.budget {
        return Err(Error::Harness(format!(
            "{} static corruptions exceed the budget {}",
            corrupted.len(),
            view.budget
        )));
    }
    view.corrupted = corrupted.iter().copied().collect();

    let mut session = proto.setup(rng)?;
    let may_tamper = match caps.setup_party {
        SetupParty::Voter(k) => corrupted.contains(&k),
        SetupParty::Authority => !integrity_game || caps.authority_corruptible,
        SetupParty::Tallier => !integrity_game,
    };
    if may_tamper {
        adv.tamper_setup(proto, &mut session, view, rng)?;
    }
    let mut register = BallotRegister::new(n);
    let corrupted_now: Vec<usize> = corrupted.iter().copied().collect();
    if let Some(notice) = proto.verify_setup(&mut session, &corrupted_now, rng)? {
        register.seal();
        return Ok((
            Casting {
                tally: TallyOutput::Bottom(Some(notice)),
                corrupted: corrupted_now,
            },
            session,
            register,
        ));
    }

    for k in cfg.order() {
        let wants = adv.corrupt(k, view);
        if wants && !corrupted.contains(&k) {
            if corrupted.len() >= view.budget {
                return Err(Error::Harness(format!(
                    "corrupting voter {k} exceeds the budget {}",
                    view.budget
                )));
            }
            corrupted.insert(k);
            view.corrupted = corrupted.iter().copied().collect();
        }
        let ballot = if corrupted.contains(&k) {
            adv.cast_corrupted(proto, &mut session, k, votes[k], rng)?
        } else {
            let mut b = proto.cast(&mut session, k, cast_choice(k, votes[k]), rng)?;
            if let Some(ballot) = b.as_mut() {
                let sender = caps.order_leaks.then_some(k);
                adv.on_honest_ballot(
                    proto,
                    &mut session,
                    sender,
                    Tap::new(ballot, caps.in_transit),
                    rng,
                );
            }
            b
        };
        register.write(k, ballot)?;
    }
    register.seal();
    let corrupted: Vec<usize> = corrupted.into_iter().collect();
    if corrupted.len() > view.budget {
        return Err(Error::Harness("corruption budget exceeded".into()));
    }
    let tally = proto.tally(&mut session, &register, &corrupted, rng)?;
    Ok((Casting { tally, corrupted }, session, register))
}

fn new_view<P: Protocol>(cfg: &ExperimentConfig, proto: &P) -> View {
    View {
        voters: proto.voters(),
        budget: cfg.budget(),
        order: proto.capabilities().order_leaks.then(|| cfg.order()),
        corrupted: Vec::new(),
    }
}

fn integrity_trial<P: Protocol, A: Adversary<P>>(
    cfg: &ExperimentConfig,
    proto: &P,
    adv: &mut A,
    with_verify: bool,
    rng: &mut SimRng,
) -> Result<Trial> {
    let mut view = new_view(cfg, proto);
    let votes = adv.choose_votes(proto, &view, cfg.votes.as_deref(), rng);
    check_votes(proto, &votes)?;
    let (casting, session, register) = setup_and_cast(
        cfg,
        proto,
        adv,
        &mut view,
        &votes,
        &|_, v| v,
        !with_verify,
        rng,
    )?;
    let honest: Vec<(usize, Vote)> = (0..proto.voters())
        .filter(|k| !casting.corrupted.contains(k))
        .map(|k| (k, votes[k]))
        .collect();
    let (win, label) = match &casting.tally {
        TallyOutput::Bottom(notice) => (false, format!("bottom({notice:?})")),
        TallyOutput::Outcome(o) => {
            let verified = if with_verify {
                proto
                    .verify(&session, &register, &casting.tally, cfg.delta0)
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "{} has no verification predicate; run the integrity game instead",
                            proto.name()
                        ))
                    })?
            } else {
                true
            };
            let counted = proto.votes_counted(&honest, o);
            let extra = proto.ballot_count(o) > proto.voters();
            (verified && (!counted || extra), proto.outcome_label(o))
        }
    };
    Ok(Trial {
        outcome: i8::from(win),
        aux: format!("corrupted={};tally={label}", casting.corrupted.len()),
    })
}

fn privacy_trial<P: Protocol, A: Adversary<P>>(
    cfg: &ExperimentConfig,
    proto: &P,
    adv: &mut A,
    rng: &mut SimRng,
) -> Result<Trial> {
    let mut view = new_view(cfg, proto);
    let votes = adv.choose_votes(proto, &view, cfg.votes.as_deref(), rng);
    check_votes(proto, &votes)?;
    let suggested = cfg
        .permutation
        .as_deref()
        .map(VotePermutation::from_entries)
        .transpose()?;
    let perm = adv.choose_permutation(proto, &votes, suggested.as_ref())?;
    if !perm.moves_any(&votes, 0..proto.voters()) {
        return Err(Error::Config("the permutation moves no vote".into()));
    }
    let dom = proto.vote_domain();
    if (0..proto.voters()).any(|k| !dom.contains(&perm.apply(k, votes[k]))) {
        return Err(Error::Config(
            "the permutation leaves the vote domain".into(),
        ));
    }
    // β is drawn here and only lives in this frame and the casting closure.
    let beta = rng.bit();
    let choice = |k: usize, v: Vote| if beta { perm.apply(k, v) } else { v };
    let (casting, session, register) =
        setup_and_cast(cfg, proto, adv, &mut view, &votes, &choice, false, rng)?;
    let honest: Vec<usize> = (0..proto.voters())
        .filter(|k| !casting.corrupted.contains(k))
        .collect();
    if !perm.moves_any(&votes, honest.iter().copied()) {
        return Err(Error::Config(
            "the permutation is the identity on the honest voters".into(),
        ));
    }
    let label = match &casting.tally {
        TallyOutput::Outcome(o) => proto.outcome_label(o),
        TallyOutput::Bottom(n) => format!("bottom({n:?})"),
    };
    let aux = format!("corrupted={};tally={label}", casting.corrupted.len());
    if !perm.preserves_multiset(&votes, &honest) {
        return Ok(Trial { outcome: -1, aux });
    }
    let guess = adv.guess_beta(proto, &session, &register, &casting.tally, &view, rng);
    Ok(Trial {
        outcome: i8::from(guess == beta),
        aux,
    })
}

fn run<P, A, F>(
    experiment: Experiment,
    cfg: &ExperimentConfig,
    proto: &P,
    make_adv: F,
) -> Result<TrialReport>
where
    P: Protocol,
    A: Adversary<P>,
    F: Fn() -> A + Sync,
{
    cfg.validate()?;
    if cfg.voters != proto.voters() {
        return Err(Error::Config(format!(
            "config has {} voters, protocol has {}",
            cfg.voters,
            proto.voters()
        )));
    }
    if experiment == Experiment::Qver && !proto.has_verify() {
        return Err(Error::Config(format!(
            "{} has no verification predicate; run the integrity game instead",
            proto.name()
        )));
    }
    let strategy = make_adv().name();
    let records: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = SimRng::for_trial(cfg.seed, i);
            let seed = rng.seed();
            let mut adv = make_adv();
            let t = match experiment {
                Experiment::Qver => integrity_trial(cfg, proto, &mut adv, true, &mut rng)?,
                Experiment::Qint => integrity_trial(cfg, proto, &mut adv, false, &mut rng)?,
                Experiment::Qpriv => privacy_trial(cfg, proto, &mut adv, &mut rng)?,
            };
            Ok(TrialRecord {
                index: i,
                seed,
                outcome: t.outcome,
                aux: t.aux,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TrialReport::new(
        experiment,
        proto.name(),
        strategy,
        cfg.clone(),
        records,
    ))
}

pub fn run_exp_qver<P, A, F>(cfg: &ExperimentConfig, proto: &P, make_adv: F) -> Result<TrialReport>
where
    P: Protocol,
    A: Adversary<P>,
    F: Fn() -> A + Sync,
{
    run(Experiment::Qver, cfg, proto, make_adv)
}

pub fn run_exp_qint<P, A, F>(cfg: &ExperimentConfig, proto: &P, make_adv: F) -> Result<TrialReport>
where
    P: Protocol,
    A: Adversary<P>,
    F: Fn() -> A + Sync,
{
    run(Experiment::Qint, cfg, proto, make_adv)
}

pub fn run_exp_qpriv<P, A, F>(cfg: &ExperimentConfig, proto: &P, make_adv: F) -> Result<TrialReport>
where
    P: Protocol,
    A: Adversary<P>,
    F: Fn() -> A + Sync,
{
    run(Experiment::Qpriv, cfg, proto, make_adv)
}
