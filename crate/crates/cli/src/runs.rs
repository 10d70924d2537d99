//! Execution of protocols, direct attacks and security experiments.

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use qevote_core::conjcode::{
    self, attack_malleate, attack_serial_number, encode_vote, make_blank_ballot, random_basis,
    read_and_clear_tag, rerandomize, tally_decode, ConjCodeProtocol, Malleate, SerialNumber,
};
use qevote_core::distball::{
    self, multi_round, Backend, Choice, DTransfer, DistBallotProtocol, RoundAdversary, RoundSpec,
};
use qevote_core::dualbasis::{
    self, attack_abort_deanonymize, attack_corrupt_setup, attack_extract_votes, blank_ballots,
    corrupt_columns, cut_and_choose, setup_honest, AbortDeanonymize, CorruptTarget,
    DualBasisParams, DualBasisProtocol, Extraction, SimPath, Tamper, VoteMatrix,
};
use qevote_core::harness::{
    run_exp_qint, run_exp_qpriv, run_exp_qver, Adversary, Experiment, ExperimentConfig,
    HonestAdversary, Protocol, TallyOutput, TrialRecord, TrialReport, Verified, WithVerify,
};
use qevote_core::rng::trial_seed;
use qevote_core::stats::{wilson, Interval, Z95};
use qevote_core::travelball::{
    self, attack_collude_sandwich, attack_double_vote, DoubleVote, Sandwich, TravelBallotProtocol,
};
use qevote_core::{SimRng, Vote};

use crate::config::{
    BackendName, PathName, ProtocolSpec, RunConfig, StrategySpec, SweepParameter, TamperName,
    TargetName,
};

fn protocol_spec(cfg: &RunConfig) -> anyhow::Result<&ProtocolSpec> {
    cfg.protocol
        .as_ref()
        .context("config has no \"protocol\" section")
}

fn backend(b: BackendName) -> Backend {
    match b {
        BackendName::Compact => Backend::Compact,
        BackendName::Full => Backend::Full,
    }
}

fn path(p: PathName) -> SimPath {
    match p {
        PathName::Fast => SimPath::Fast,
        PathName::Full => SimPath::Full,
    }
}

fn tamper(t: TamperName) -> Tamper {
    match t {
        TamperName::Random => Tamper::Random,
        TamperName::Offset(o) => Tamper::Offset(o),
    }
}

fn vote_domain(spec: &ProtocolSpec) -> u64 {
    match *spec {
        ProtocolSpec::Travelball { .. } | ProtocolSpec::Distball { .. } => 2,
        ProtocolSpec::Dualbasis { candidates, .. } => candidates as u64,
        ProtocolSpec::Conjcode { candidate_len, .. } => 1 << candidate_len.min(16),
    }
}

fn check_votes(spec: &ProtocolSpec, votes: &[Vote]) -> anyhow::Result<()> {
    if votes.len() != spec.voters() {
        bail!("{} votes given for {} voters", votes.len(), spec.voters());
    }
    let dom = vote_domain(spec);
    if let Some(v) = votes.iter().find(|&&v| v >= dom) {
        bail!("vote {v} outside the vote domain 0..{dom}");
    }
    Ok(())
}

fn trial_votes(spec: &ProtocolSpec, fixed: Option<&[Vote]>, rng: &mut SimRng) -> Vec<Vote> {
    match fixed {
        Some(v) => v.to_vec(),
        None => {
            let dom = vote_domain(spec) as usize;
            (0..spec.voters()).map(|_| rng.below(dom) as u64).collect()
        }
    }
}

fn choices(votes: &[Vote]) -> anyhow::Result<Vec<Choice>> {
    Ok(votes
        .iter()
        .map(|&v| Choice::from_vote(v))
        .collect::<Result<_, _>>()?)
}

fn dist_spec(spec: &ProtocolSpec) -> Option<(RoundSpec, usize)> {
    match *spec {
        ProtocolSpec::Distball {
            dim,
            voters,
            rounds,
            difference,
            backend: b,
        } => Some((
            RoundSpec {
                dim,
                voters,
                difference,
                backend: backend(b),
            },
            rounds,
        )),
        _ => None,
    }
}

fn sorted(mut v: Vec<Vote>) -> Vec<Vote> {
    v.sort_unstable();
    v
}

/// Result of one honest execution.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolRun {
    pub protocol: String,
    pub votes: Vec<Vote>,
    pub outcome: serde_json::Value,
    pub correct: bool,
    pub aborted: bool,
}

pub fn run_protocol(cfg: &RunConfig, seed: u64) -> anyhow::Result<ProtocolRun> {
    let spec = protocol_spec(cfg)?;
    let votes = cfg.votes.clone().context("config has no \"votes\"")?;
    check_votes(spec, &votes)?;
    let mut rng = SimRng::new(seed);
    let yes = votes.iter().sum::<u64>() as usize;
    let (outcome, correct, aborted) = match *spec {
        ProtocolSpec::Travelball { voters, dim } => {
            let mut s = travelball::setup(voters, dim)?;
            for &v in &votes {
                s = s.cast(v)?;
            }
            let t = travelball::tally(&s, &mut rng)?;
            (json!({ "tally": t }), t == yes, false)
        }
        ProtocolSpec::Distball {
            dim,
            voters,
            rounds,
            ..
        } => {
            DistBallotProtocol::new(dim, voters, rounds)?;
            let (rs, rounds) = dist_spec(spec).expect("distball spec");
            let out = multi_round(
                &rs,
                &choices(&votes)?,
                RoundAdversary::Honest,
                rounds,
                &mut rng,
            )?;
            let per_round: Vec<_> = out.rounds.iter().map(|r| r.tally.m).collect();
            (
                json!({ "tally": out.outcome, "rounds": per_round }),
                out.outcome == Some(yes),
                out.outcome.is_none(),
            )
        }
        ProtocolSpec::Dualbasis {
            voters,
            candidates,
            delta0,
            path: p,
        } => {
            let params = DualBasisParams::new(voters, candidates, delta0)?;
            let pool = setup_honest(params);
            let order: Vec<usize> = (0..voters).collect();
            let report = cut_and_choose(&pool, &order, &[], path(p), &mut rng)?;
            if !report.accepted {
                (json!({ "abort": "verification" }), false, true)
            } else {
                let blanks = blank_ballots(&pool, &report, path(p), &mut rng)?;
                let cols = blanks
                    .iter()
                    .zip(&votes)
                    .map(|(b, &v)| dualbasis::cast(b, v, candidates))
                    .collect::<Result<Vec<_>, _>>()?;
                let matrix = VoteMatrix::new(cols, candidates)?;
                let checks: Vec<_> = (0..voters).map(|k| (k, blanks[k].sk, votes[k])).collect();
                let t = dualbasis::tally(&matrix, &checks);
                let rows = sorted(t.rows.clone());
                (
                    json!({ "rows": rows, "abort": t.abort }),
                    t.abort.is_none() && rows == sorted(votes.clone()),
                    t.abort.is_some(),
                )
            }
        }
        ProtocolSpec::Conjcode {
            voters,
            n,
            w,
            candidate_len,
        } => {
            let proto = ConjCodeProtocol::new(voters, n, w, candidate_len)?;
            let basis = random_basis(n, &mut rng);
            let mut published = Vec::new();
            for &v in &votes {
                let blank = make_blank_ballot(n, proto.w, &basis, &mut rng)?;
                let cast = encode_vote(&blank, &conjcode::to_bits(v, candidate_len))?;
                let cast = rerandomize(&cast, &mut rng)?;
                let decoded = tally_decode(&cast, &basis, &mut rng)?;
                if conjcode::is_valid(&decoded, candidate_len) {
                    published.push(conjcode::candidate_value(&decoded, candidate_len));
                }
            }
            let published = sorted(published);
            let ok = published == sorted(votes.clone());
            (json!({ "published": published }), ok, false)
        }
    };
    Ok(ProtocolRun {
        protocol: spec.name().to_string(),
        votes,
        outcome,
        correct,
        aborted,
    })
}

/// Per-trial outcomes of a direct attack run.
#[derive(Debug, Clone, Serialize)]
pub struct AttackReport {
    pub protocol: String,
    pub attack: String,
    pub seed: u64,
    pub successes: u64,
    pub total: u64,
    pub success_rate: f64,
    pub interval: Interval,
    pub trials: Vec<TrialRecord>,
}

impl AttackReport {
    pub fn to_csv(&self) -> anyhow::Result<String> {
        csv_rows(&self.trials)
    }
}

pub fn csv_rows(trials: &[TrialRecord]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["trial_index", "seed", "outcome", "auxiliary"])?;
    for t in trials {
        w.write_record([
            t.index.to_string(),
            t.seed.to_string(),
            t.outcome.to_string(),
            t.aux.clone(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn attack_trial(
    spec: &ProtocolSpec,
    strategy: &StrategySpec,
    fixed: Option<&[Vote]>,
    rng: &mut SimRng,
) -> anyhow::Result<(bool, String)> {
    let votes = trial_votes(spec, fixed, rng);
    let yes = votes.iter().sum::<u64>() as usize;
    Ok(match (spec, strategy) {
        (
            &ProtocolSpec::Travelball { voters, dim },
            &StrategySpec::TravelballDoubleVote { voter, extra },
        ) => {
            if voter >= voters {
                bail!("voter {voter} out of range");
            }
            let mut s = travelball::setup(voters, dim)?;
            for (k, &v) in votes.iter().enumerate() {
                s = if k == voter {
                    attack_double_vote(&s, v as usize + extra)?
                } else {
                    s.cast(v)?
                };
            }
            let t = travelball::tally(&s, &mut *rng)?;
            let want = (yes + extra) % s.dim();
            (t == want, format!("tally={t};expected={want}"))
        }
        (
            &ProtocolSpec::Travelball { dim, .. },
            &StrategySpec::TravelballSandwich { victim_slot },
        ) => {
            if victim_slot == 0 {
                bail!("the victim needs a colluder before it");
            }
            let out = attack_collude_sandwich(&votes, victim_slot - 1, 1, dim, rng)?;
            let v = votes[victim_slot] as usize;
            (
                out.recovered == v,
                format!("recovered={};vote={v};tally={}", out.recovered, out.tally),
            )
        }
        (ProtocolSpec::Distball { .. }, &StrategySpec::DistballDtransfer { voter, d, samples }) => {
            let (rs, rounds) = dist_spec(spec).expect("distball spec");
            let adv = RoundAdversary::DTransfer { voter, d, samples };
            let out = multi_round(&rs, &choices(&votes)?, adv, rounds, rng)?;
            let cheats = out.rounds.iter().filter(|r| r.cheat == Some(true)).count();
            let tally = out.outcome.map_or("bottom".to_string(), |m| m.to_string());
            (
                out.outcome == Some(yes + d),
                format!(
                    "tally={tally};expected={};estimates_correct={cheats}",
                    yes + d
                ),
            )
        }
        (
            &ProtocolSpec::Dualbasis {
                voters,
                candidates,
                delta0,
                path: p,
            },
            &StrategySpec::DualbasisExtraction { target, extra },
        ) => {
            if target != TargetName::D1 {
                bail!(
                    "direct extraction corrupts |D1> copies; use run-experiment for other targets"
                );
            }
            if extra + 1 >= voters {
                bail!("at least one honest voter is required");
            }
            let params = DualBasisParams::new(voters, candidates, delta0)?;
            let corrupted: Vec<usize> = (0..=extra).collect();
            let order: Vec<usize> = (extra + 1..voters).chain(0..=extra).collect();
            let (pool, _) = attack_corrupt_setup(params, CorruptTarget::D1, rng);
            let report = cut_and_choose(&pool, &order, &corrupted, path(p), rng)?;
            match corrupt_columns(&pool, &report).filter(|_| report.accepted) {
                None => (false, "survived=false".to_string()),
                Some(pre) => {
                    let blanks = blank_ballots(&pool, &report, path(p), rng)?;
                    let cols = blanks
                        .iter()
                        .zip(&votes)
                        .map(|(b, &v)| dualbasis::cast(b, v, candidates))
                        .collect::<Result<Vec<_>, _>>()?;
                    let matrix = VoteMatrix::new(cols, candidates)?;
                    let got = attack_extract_votes(&pre, &matrix)?;
                    (got == votes, "survived=true".to_string())
                }
            }
        }
        (
            &ProtocolSpec::Dualbasis {
                voters,
                candidates,
                delta0,
                path: p,
            },
            &StrategySpec::DualbasisAbort {
                attacker,
                tamper: t,
            },
        ) => {
            let params = DualBasisParams::new(voters, candidates, delta0)?;
            let a = attack_abort_deanonymize(params, &votes, attacker, tamper(t), path(p), rng)?;
            let right = a
                .aborting_voter
                .zip(a.recovered_vote)
                .is_some_and(|(k, v)| votes[k] == v);
            (
                a.fired && right,
                format!("fired={};victim={:?}", a.fired, a.aborting_voter),
            )
        }
        (
            &ProtocolSpec::Conjcode {
                n,
                w,
                candidate_len,
                voters,
            },
            StrategySpec::ConjcodeMalleate { mask },
        ) => {
            let proto = ConjCodeProtocol::new(voters, n, w, candidate_len)?;
            if mask.len() > candidate_len {
                bail!("mask longer than the candidate field");
            }
            let basis = random_basis(n, rng);
            let blank = make_blank_ballot(n, proto.w, &basis, rng)?;
            let cast = encode_vote(&blank, &conjcode::to_bits(votes[0], candidate_len))?;
            let forged = attack_malleate(&rerandomize(&cast, rng)?, mask)?;
            let decoded = tally_decode(&forged, &basis, rng)?;
            let m = mask
                .iter()
                .fold(0u64, |acc, &b| acc << 1 | u64::from(b & 1));
            let got = conjcode::candidate_value(&decoded, candidate_len);
            let ok = conjcode::is_valid(&decoded, candidate_len) && got == votes[0] ^ m;
            (ok, format!("vote={};published={got}", votes[0]))
        }
        (
            &ProtocolSpec::Conjcode {
                n,
                w,
                candidate_len,
                voters,
            },
            StrategySpec::ConjcodeSerial,
        ) => {
            let proto = ConjCodeProtocol::new(voters, n, w, candidate_len)?;
            let tag_len = SerialNumber::tag_len(voters);
            let basis = random_basis(n, rng);
            let mut linked = 0;
            for (k, &v) in votes.iter().enumerate() {
                let tag = conjcode::to_bits(k as u64 + 1, tag_len);
                let blank = attack_serial_number(n, proto.w, &basis, &tag, rng)?;
                let cast = rerandomize(
                    &encode_vote(&blank, &conjcode::to_bits(v, candidate_len))?,
                    rng,
                )?;
                let (seen, vote, cleared) =
                    read_and_clear_tag(&cast, &basis, tag_len, candidate_len, rng)?;
                let decoded = tally_decode(&cleared, &basis, rng)?;
                if seen == tag && vote == v && conjcode::is_valid(&decoded, candidate_len) {
                    linked += 1;
                }
            }
            (linked == voters, format!("linked={linked}"))
        }
        (_, s) => bail!("attack {} does not apply to {}", s.name(), spec.name()),
    })
}

pub fn run_attack(cfg: &RunConfig, seed: u64, trials: u64) -> anyhow::Result<AttackReport> {
    let spec = protocol_spec(cfg)?;
    let strategy = cfg
        .strategy
        .as_ref()
        .context("config has no \"strategy\"")?;
    if *strategy == StrategySpec::Honest {
        bail!("run-attack needs an attack strategy");
    }
    if let Some(v) = &cfg.votes {
        check_votes(spec, v)?;
    }
    let fixed = cfg.votes.as_deref();
    let records = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = SimRng::for_trial(seed, i);
            let (ok, aux) = attack_trial(spec, strategy, fixed, &mut rng)?;
            Ok(TrialRecord {
                index: i,
                seed: trial_seed(seed, i),
                outcome: i8::from(ok),
                aux,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let successes = records.iter().filter(|r| r.outcome == 1).count() as u64;
    Ok(AttackReport {
        protocol: spec.name().to_string(),
        attack: strategy.name().to_string(),
        seed,
        successes,
        total: trials,
        success_rate: successes as f64 / trials as f64,
        interval: wilson(successes, trials, Z95),
        trials: records,
    })
}

type Predicate<P> =
    fn(&P, &<P as Protocol>::Session, &TallyOutput<<P as Protocol>::Outcome>) -> bool;

fn game<P, A, F>(
    exp: Experiment,
    cfg: &ExperimentConfig,
    proto: &P,
    predicate: Predicate<P>,
    make: F,
) -> qevote_core::Result<TrialReport>
where
    P: Protocol + Clone,
    A: Adversary<P>,
    F: Fn() -> A + Sync,
{
    match exp {
        Experiment::Qver => {
            let wrapped = WithVerify {
                inner: proto.clone(),
                predicate,
            };
            run_exp_qver(cfg, &wrapped, || Verified(make()))
        }
        Experiment::Qint => run_exp_qint(cfg, proto, make),
        Experiment::Qpriv => run_exp_qpriv(cfg, proto, make),
    }
}

fn experiment_config(
    cfg: &RunConfig,
    spec: &ProtocolSpec,
    seed: u64,
    trials: u64,
) -> ExperimentConfig {
    let epsilon = cfg
        .epsilon
        .unwrap_or(if cfg.strategy == Some(StrategySpec::Honest) {
            0.0
        } else {
            0.5
        });
    let mut e = ExperimentConfig::new(spec.name(), spec.voters(), epsilon, trials, seed);
    e.votes = cfg.votes.clone();
    e.casting_order = cfg.casting_order.clone();
    if let ProtocolSpec::Dualbasis { delta0, .. } = *spec {
        e.delta0 = delta0;
    }
    e
}

fn run_one_experiment(cfg: &RunConfig, seed: u64, trials: u64) -> anyhow::Result<TrialReport> {
    let spec = protocol_spec(cfg)?;
    let exp = cfg.experiment.context("config has no \"experiment\"")?;
    let strategy = cfg.strategy.clone().unwrap_or(StrategySpec::Honest);
    let ecfg = experiment_config(cfg, spec, seed, trials);
    ecfg.validate()?;
    let mismatch = || {
        anyhow::anyhow!(
            "strategy {} does not apply to {}",
            strategy.name(),
            spec.name()
        )
    };
    let report = match *spec {
        ProtocolSpec::Travelball { voters, dim } => {
            let p = TravelBallotProtocol::new(voters, dim)?;
            let v = travelball::accept_all;
            match strategy {
                StrategySpec::Honest => game(exp, &ecfg, &p, v, || HonestAdversary),
                StrategySpec::TravelballDoubleVote { voter, extra } => {
                    game(exp, &ecfg, &p, v, || DoubleVote { voter, extra })
                }
                StrategySpec::TravelballSandwich { victim_slot } => {
                    game(exp, &ecfg, &p, v, || Sandwich::new(victim_slot))
                }
                _ => return Err(mismatch()),
            }
        }
        ProtocolSpec::Distball {
            dim,
            voters,
            rounds,
            difference,
            backend: b,
        } => {
            let mut p = DistBallotProtocol::new(dim, voters, rounds)?;
            p.difference = difference;
            p.backend = backend(b);
            let v = distball::accept_decoded;
            match strategy {
                StrategySpec::Honest => game(exp, &ecfg, &p, v, || HonestAdversary),
                StrategySpec::DistballDtransfer { voter, d, samples } => {
                    let samples =
                        samples.context("harness runs estimate the labels; give \"samples\"")?;
                    game(exp, &ecfg, &p, v, || DTransfer::new(voter, d, samples))
                }
                _ => return Err(mismatch()),
            }
        }
        ProtocolSpec::Dualbasis {
            voters,
            candidates,
            delta0,
            path: pa,
        } => {
            let mut p = DualBasisProtocol::new(DualBasisParams::new(voters, candidates, delta0)?);
            p.path = path(pa);
            let v = dualbasis::rows_checked;
            match strategy {
                StrategySpec::Honest => game(exp, &ecfg, &p, v, || HonestAdversary),
                StrategySpec::DualbasisExtraction { target, extra } => {
                    let t = match target {
                        TargetName::D1 => CorruptTarget::D1,
                        TargetName::D2 => CorruptTarget::D2,
                    };
                    game(exp, &ecfg, &p, v, || Extraction::new(t, extra))
                }
                StrategySpec::DualbasisAbort {
                    attacker,
                    tamper: t,
                } => game(exp, &ecfg, &p, v, || {
                    AbortDeanonymize::new(attacker, tamper(t))
                }),
                _ => return Err(mismatch()),
            }
        }
        ProtocolSpec::Conjcode {
            voters,
            n,
            w,
            candidate_len,
        } => {
            let p = ConjCodeProtocol::new(voters, n, w, candidate_len)?;
            let v = conjcode::accept_published;
            match strategy {
                StrategySpec::Honest => game(exp, &ecfg, &p, v, || HonestAdversary),
                StrategySpec::ConjcodeMalleate { ref mask } => {
                    game(exp, &ecfg, &p, v, || Malleate { mask: mask.clone() })
                }
                StrategySpec::ConjcodeSerial => game(exp, &ecfg, &p, v, SerialNumber::new),
                _ => return Err(mismatch()),
            }
        }
    };
    Ok(report?)
}

fn integral(value: f64) -> anyhow::Result<usize> {
    if value < 0.0 || value.fract() != 0.0 {
        bail!("sweep value {value} must be a non-negative integer");
    }
    Ok(value as usize)
}

/// Config with one swept parameter replaced.
fn with_parameter(
    cfg: &RunConfig,
    parameter: SweepParameter,
    value: f64,
) -> anyhow::Result<RunConfig> {
    let mut c = cfg.clone();
    c.sweep = None;
    match parameter {
        SweepParameter::Epsilon => c.epsilon = Some(value),
        SweepParameter::Delta0 => match c.protocol.as_mut() {
            Some(ProtocolSpec::Dualbasis { delta0, .. }) => *delta0 = integral(value)? as u32,
            _ => bail!("delta0 sweeps need the dualbasis protocol"),
        },
        SweepParameter::Rounds => match c.protocol.as_mut() {
            Some(ProtocolSpec::Distball { rounds, .. }) => *rounds = integral(value)?,
            _ => bail!("rounds sweeps need the distball protocol"),
        },
        SweepParameter::Samples => match c.strategy.as_mut() {
            Some(StrategySpec::DistballDtransfer { samples, .. }) => {
                *samples = Some(integral(value)?)
            }
            _ => bail!("samples sweeps need the distball-dtransfer strategy"),
        },
    }
    Ok(c)
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesPoint {
    pub value: Option<f64>,
    pub wins: u64,
    pub losses: u64,
    pub false_attacks: u64,
    pub win_rate: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

pub fn run_experiment(
    cfg: &RunConfig,
    seed: u64,
    trials: u64,
) -> anyhow::Result<Vec<(Option<f64>, TrialReport)>> {
    match &cfg.sweep {
        None => Ok(vec![(None, run_one_experiment(cfg, seed, trials)?)]),
        Some(sweep) => {
            if sweep.values.is_empty() {
                bail!("sweep has no values");
            }
            sweep
                .values
                .iter()
                .map(|&v| {
                    let c = with_parameter(cfg, sweep.parameter, v)?;
                    Ok((Some(v), run_one_experiment(&c, seed, trials)?))
                })
                .collect()
        }
    }
}

pub fn series(points: &[(Option<f64>, TrialReport)]) -> Vec<SeriesPoint> {
    points
        .iter()
        .map(|(v, r)| SeriesPoint {
            value: *v,
            wins: r.wins,
            losses: r.losses,
            false_attacks: r.false_attacks,
            win_rate: r.win_rate,
            lo: r.interval.map(|i| i.lo),
            hi: r.interval.map(|i| i.hi),
        })
        .collect()
}
