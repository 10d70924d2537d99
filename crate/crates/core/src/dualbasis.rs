//! Self-tallying referendum on shared |D₁⟩/|D₂⟩ states verified by
//! cut-and-choose, with the corrupted-setup, vote-extraction and abort
//! attacks.
//!
//! Rows and `sk` are 0-based throughout.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::harness::{
    AbortNotice, Adversary, BallotRegister, Capabilities, InTransit, Protocol, SetupParty,
    TallyOutput, View, Vote, VotePermutation,
};
use crate::qcore::{measure_all, measure_all_fourier, pick, PureState};
use crate::rng::SimRng;

/// Voters, candidates (= qudit dimension of |D₁⟩) and the cut-and-choose
/// parameter δ0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DualBasisParams {
    pub voters: usize,
    pub candidates: usize,
    pub delta0: u32,
}

impl DualBasisParams {
    pub fn new(voters: usize, candidates: usize, delta0: u32) -> Result<Self> {
        if voters < 2 {
            return Err(Error::Parameter("at least two voters are required".into()));
        }
        if candidates < 2 {
            return Err(Error::Parameter(
                "at least two candidates are required".into(),
            ));
        }
        if delta0 > 20 {
            return Err(Error::Parameter(format!("delta0 {delta0} too large")));
        }
        Ok(Self {
            voters,
            candidates,
            delta0,
        })
    }

    /// Qudit dimension of |D₁⟩; equal to the candidate count.
    pub fn dim(&self) -> usize {
        self.candidates
    }

    /// Copies each verifying voter tests, per state type.
    pub fn picks(&self) -> usize {
        1 << self.delta0
    }

    pub fn d1_count(&self) -> usize {
        self.voters + self.voters * self.picks()
    }

    pub fn d2_count(&self) -> usize {
        1 + self.voters * self.picks()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum StateKind {
    D1,
    D2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum TestBasis {
    Computational,
    Fourier,
}

/// One distributed copy: the honest entangled state or a product of fixed
/// digits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Copy {
    Honest,
    Product(Vec<usize>),
}

impl Copy {
    pub fn is_product(&self) -> bool {
        matches!(self, Copy::Product(_))
    }
}

/// How honest copies are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimPath {
    /// Direct sampling from the known outcome distributions.
    Fast,
    /// Dense state vectors; limited to small N.
    Full,
}

/// |D₁⟩ = c^{−(N−1)/2} Σ_{Σi ≡ 0 mod c} |i₁…i_N⟩.
pub fn d1_state(voters: usize, dim: usize) -> Result<PureState> {
    let dims = vec![dim; voters];
    let size = dim.checked_pow(voters as u32).ok_or(Error::Capacity {
        requested: usize::MAX,
        capacity: crate::qcore::CAPACITY,
    })?;
    if size > crate::qcore::CAPACITY {
        return Err(Error::Capacity {
            requested: size,
            capacity: crate::qcore::CAPACITY,
        });
    }
    let amps = (0..size)
        .map(|i| {
            let s: usize = digits(i, dim, voters).iter().sum();
            Complex64::new(if s.is_multiple_of(dim) { 1.0 } else { 0.0 }, 0.0)
        })
        .collect();
    PureState::normalized(dims, amps)
}

/// |D₂⟩ = (N!)^{−1/2} Σ_{π} |π(0)…π(N−1)⟩ on qudits of dimension N.
pub fn d2_state(voters: usize) -> Result<PureState> {
    let dims = vec![voters; voters];
    let size = voters
        .checked_pow(voters as u32)
        .filter(|&s| s <= crate::qcore::CAPACITY)
        .ok_or(Error::Capacity {
            requested: usize::MAX,
            capacity: crate::qcore::CAPACITY,
        })?;
    let amps = (0..size)
        .map(|i| {
            let mut seen = vec![false; voters];
            let ok = digits(i, voters, voters)
                .into_iter()
                .all(|d| !std::mem::replace(&mut seen[d], true));
            Complex64::new(if ok { 1.0 } else { 0.0 }, 0.0)
        })
        .collect();
    PureState::normalized(dims, amps)
}

fn digits(mut index: usize, dim: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = index % dim;
        index /= dim;
    }
    out
}

/// Permanent by Ryser's formula.
pub fn permanent(m: &[Vec<Complex64>]) -> Complex64 {
    let n = m.len();
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut total = Complex64::new(0.0, 0.0);
    for set in 1u64..(1 << n) {
        let mut prod = Complex64::new(1.0, 0.0);
        for row in m {
            let s: Complex64 = (0..n).filter(|&j| set >> j & 1 == 1).map(|j| row[j]).sum();
            prod *= s;
        }
        let sign = if (n - set.count_ones() as usize).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        total += prod * sign;
    }
    total
}

fn fourier_permanent(ks: &[usize]) -> Complex64 {
    let n = ks.len();
    let m: Vec<Vec<Complex64>> = ks
        .iter()
        .map(|&k| {
            (0..n)
                .map(|a| Complex64::from_polar(1.0, TAU * (k * a) as f64 / n as f64))
                .collect()
        })
        .collect();
    permanent(&m)
}

/// Largest N for which the honest |D₂⟩ Fourier distribution is tabulated.
pub const D2_FOURIER_MAX: usize = 6;

const SUPPORT_TOL: f64 = 1e-9;

fn d2_fourier_table(n: usize) -> Result<Arc<Vec<f64>>> {
    if n > D2_FOURIER_MAX {
        return Err(Error::Capacity {
            requested: n.pow(n as u32),
            capacity: D2_FOURIER_MAX.pow(D2_FOURIER_MAX as u32),
        });
    }
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().expect("table cache").get(&n) {
        return Ok(Arc::clone(t));
    }
    let fact: f64 = (1..=n).map(|x| x as f64).product();
    let scale = fact * (n as f64).powi(n as i32);
    let table: Vec<f64> = (0..n.pow(n as u32))
        .map(|i| fourier_permanent(&digits(i, n, n)).norm_sqr() / scale)
        .collect();
    let table = Arc::new(table);
    cache
        .lock()
        .expect("table cache")
        .entry(n)
        .or_insert_with(|| Arc::clone(&table));
    Ok(table)
}

/// Whether an outcome is consistent with the honest state in that basis.
pub fn outcome_passes(
    kind: StateKind,
    basis: TestBasis,
    outcome: &[usize],
    params: &DualBasisParams,
) -> bool {
    match (kind, basis) {
        (StateKind::D1, TestBasis::Computational) => {
            outcome.iter().sum::<usize>() % params.dim() == 0
        }
        (StateKind::D1, TestBasis::Fourier) => outcome.windows(2).all(|w| w[0] == w[1]),
        (StateKind::D2, TestBasis::Computational) => {
            let mut seen = vec![false; params.voters];
            outcome
                .iter()
                .all(|&d| d < params.voters && !std::mem::replace(&mut seen[d], true))
        }
        (StateKind::D2, TestBasis::Fourier) => fourier_permanent(outcome).norm() > SUPPORT_TOL,
    }
}

/// All voters measure their qudit of one copy in the same basis.
pub fn measure_copy(
    copy: &Copy,
    kind: StateKind,
    basis: TestBasis,
    params: &DualBasisParams,
    path: SimPath,
    rng: &mut SimRng,
) -> Result<Vec<usize>> {
    let n = params.voters;
    let dim = match kind {
        StateKind::D1 => params.dim(),
        StateKind::D2 => n,
    };
    match (copy, basis) {
        (Copy::Product(d), TestBasis::Computational) => Ok(d.clone()),
        (Copy::Product(_), TestBasis::Fourier) => Ok((0..n).map(|_| rng.below(dim)).collect()),
        (Copy::Honest, _) if path == SimPath::Full => {
            let state = match kind {
                StateKind::D1 => d1_state(n, dim)?,
                StateKind::D2 => d2_state(n)?,
            };
            match basis {
                TestBasis::Computational => measure_all(&state, rng),
                TestBasis::Fourier => measure_all_fourier(&state, rng),
            }
        }
        (Copy::Honest, TestBasis::Computational) => Ok(match kind {
            StateKind::D1 => {
                let mut d: Vec<usize> = (0..n - 1).map(|_| rng.below(dim)).collect();
                let s: usize = d.iter().sum();
                d.push((dim - s % dim) % dim);
                d
            }
            StateKind::D2 => {
                let mut p: Vec<usize> = (0..n).collect();
                p.shuffle(rng);
                p
            }
        }),
        (Copy::Honest, TestBasis::Fourier) => Ok(match kind {
            StateKind::D1 => vec![rng.below(dim); n],
            StateKind::D2 => {
                let table = d2_fourier_table(n)?;
                digits(pick(&table, rng.uniform())?, n, n)
            }
        }),
    }
}

/// The distributed copies of both state types.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePool {
    pub params: DualBasisParams,
    pub d1: Vec<Copy>,
    pub d2: Vec<Copy>,
}

impl StatePool {
    fn copies(&self, kind: StateKind) -> &[Copy] {
        match kind {
            StateKind::D1 => &self.d1,
            StateKind::D2 => &self.d2,
        }
    }
}

pub fn setup_honest(params: DualBasisParams) -> StatePool {
    StatePool {
        params,
        d1: vec![Copy::Honest; params.d1_count()],
        d2: vec![Copy::Honest; params.d2_count()],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorruptTarget {
    /// N product copies of |D₁⟩; reveals every blank column.
    D1,
    /// One product copy of |D₂⟩; reveals every voter's row.
    D2,
}

/// What the corrupt distributor remembers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorruptTable {
    /// Pool indices of the product copies.
    pub indices: Vec<usize>,
    pub target: CorruptTarget,
}

/// Digits uniform with sum ≡ 0 mod c.
pub fn sum_zero_digits(voters: usize, dim: usize, rng: &mut SimRng) -> Vec<usize> {
    let mut d: Vec<usize> = (1..voters).map(|_| rng.below(dim)).collect();
    let s: usize = d.iter().sum();
    d.insert(0, (dim - s % dim) % dim);
    d
}

/// Honest pool with N (or one, for |D₂⟩) copies replaced by product states
/// at uniformly random positions.
pub fn attack_corrupt_setup(
    params: DualBasisParams,
    target: CorruptTarget,
    rng: &mut SimRng,
) -> (StatePool, CorruptTable) {
    let mut pool = setup_honest(params);
    let (copies, count) = match target {
        CorruptTarget::D1 => (&mut pool.d1, params.voters),
        CorruptTarget::D2 => (&mut pool.d2, 1),
    };
    let mut idx: Vec<usize> = (0..copies.len()).collect();
    idx.shuffle(rng);
    idx.truncate(count);
    idx.sort_unstable();
    for &i in &idx {
        copies[i] = Copy::Product(match target {
            CorruptTarget::D1 => sum_zero_digits(params.voters, params.dim(), rng),
            CorruptTarget::D2 => {
                let mut p: Vec<usize> = (0..params.voters).collect();
                p.shuffle(rng);
                p
            }
        });
    }
    (
        pool,
        CorruptTable {
            indices: idx,
            target,
        },
    )
}

/// One tested copy.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct TestRecord {
    pub verifier: usize,
    pub kind: StateKind,
    pub index: usize,
    pub basis: TestBasis,
    pub outcome: Vec<usize>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct CutAndChooseReport {
    pub accepted: bool,
    pub tests: Vec<TestRecord>,
    /// Product copies tested by voters outside `corrupted`.
    pub corrupt_tested_by_honest: usize,
    pub remaining_d1: Vec<usize>,
    pub remaining_d2: Vec<usize>,
}

/// Voters in `order` each test `picks` untested copies of each type, half
/// computational (rounded up) and half Fourier. Honest voters pick uniformly;
/// voters in `corrupted` avoid product copies when they can.
pub fn cut_and_choose(
    pool: &StatePool,
    order: &[usize],
    corrupted: &[usize],
    path: SimPath,
    rng: &mut SimRng,
) -> Result<CutAndChooseReport> {
    let p = pool.params;
    let mut seen = vec![false; p.voters];
    if order.len() != p.voters
        || order
            .iter()
            .any(|&k| k >= p.voters || std::mem::replace(&mut seen[k], true))
    {
        return Err(Error::Parameter(
            "sampling order must list every voter once".into(),
        ));
    }
    let picks = p.picks();
    let computational = picks.div_ceil(2);
    let mut tests = Vec::new();
    let mut corrupt_tested_by_honest = 0;
    let mut remaining = [
        (0..pool.d1.len()).collect::<Vec<_>>(),
        (0..pool.d2.len()).collect::<Vec<_>>(),
    ];
    for &voter in order {
        let bad = corrupted.contains(&voter);
        for (slot, kind) in [StateKind::D1, StateKind::D2].into_iter().enumerate() {
            let copies = pool.copies(kind);
            let left = &mut remaining[slot];
            if left.len() < picks {
                return Ok(CutAndChooseReport {
                    accepted: false,
                    tests,
                    corrupt_tested_by_honest,
                    remaining_d1: remaining[0].clone(),
                    remaining_d2: remaining[1].clone(),
                });
            }
            let chosen = if bad {
                let (mut clean, dirty): (Vec<usize>, Vec<usize>) =
                    left.iter().partition(|&&i| !copies[i].is_product());
                clean.shuffle(rng);
                clean.extend(dirty);
                clean.truncate(picks);
                clean
            } else {
                let mut all = left.clone();
                let (head, _) = all.partial_shuffle(rng, picks);
                head.to_vec()
            };
            left.retain(|i| !chosen.contains(i));
            for (n, &index) in chosen.iter().enumerate() {
                let basis = if n < computational {
                    TestBasis::Computational
                } else {
                    TestBasis::Fourier
                };
                let copy = &copies[index];
                if copy.is_product() && !bad {
                    corrupt_tested_by_honest += 1;
                }
                let outcome = measure_copy(copy, kind, basis, &p, path, rng)?;
                let passed = outcome_passes(kind, basis, &outcome, &p);
                tests.push(TestRecord {
                    verifier: voter,
                    kind,
                    index,
                    basis,
                    outcome,
                    passed,
                });
            }
        }
    }
    let [remaining_d1, remaining_d2] = remaining;
    Ok(CutAndChooseReport {
        accepted: tests.iter().all(|t| t.passed),
        tests,
        corrupt_tested_by_honest,
        remaining_d1,
        remaining_d2,
    })
}

/// A voter's measured column ξ_k and secret row.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct BlankBallot {
    pub column: Vec<u64>,
    pub sk: usize,
}

/// Everyone measures the untested copies computationally: row j of the
/// blank table is the j-th remaining |D₁⟩ copy, and `sk` comes from the
/// remaining |D₂⟩ copy.
pub fn blank_ballots(
    pool: &StatePool,
    report: &CutAndChooseReport,
    path: SimPath,
    rng: &mut SimRng,
) -> Result<Vec<BlankBallot>> {
    let p = pool.params;
    if report.remaining_d1.len() != p.voters || report.remaining_d2.len() != 1 {
        return Err(Error::ProtocolOrder(format!(
            "{} |D1> and {} |D2> copies left after verification",
            report.remaining_d1.len(),
            report.remaining_d2.len()
        )));
    }
    let rows = report
        .remaining_d1
        .iter()
        .map(|&i| {
            measure_copy(
                &pool.d1[i],
                StateKind::D1,
                TestBasis::Computational,
                &p,
                path,
                rng,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let sks = measure_copy(
        &pool.d2[report.remaining_d2[0]],
        StateKind::D2,
        TestBasis::Computational,
        &p,
        path,
        rng,
    )?;
    Ok((0..p.voters)
        .map(|k| BlankBallot {
            column: rows.iter().map(|r| r[k] as u64).collect(),
            sk: sks[k],
        })
        .collect())
}

/// Adds the vote to row `sk` mod c.
pub fn cast(ballot: &BlankBallot, vote: Vote, candidates: usize) -> Result<Vec<u64>> {
    if vote >= candidates as u64 {
        return Err(Error::Domain(format!("vote {vote} outside Z_{candidates}")));
    }
    let mut col = ballot.column.clone();
    let row = col
        .get_mut(ballot.sk)
        .ok_or_else(|| Error::Index(format!("row {}", ballot.sk)))?;
    *row = (*row + vote) % candidates as u64;
    Ok(col)
}

/// Public table; column k is voter k's broadcast.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct VoteMatrix {
    pub columns: Vec<Vec<u64>>,
    pub candidates: usize,
}

impl VoteMatrix {
    pub fn new(columns: Vec<Vec<u64>>, candidates: usize) -> Result<Self> {
        let n = columns.len();
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::Parameter("vote matrix must be square".into()));
        }
        Ok(Self {
            columns,
            candidates,
        })
    }

    pub fn row_sum(&self, row: usize) -> u64 {
        self.columns.iter().map(|c| c[row]).sum::<u64>() % self.candidates as u64
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.columns.len()).map(|j| self.row_sum(j)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct DualTally {
    pub rows: Vec<u64>,
    /// First voter whose row check failed.
    pub abort: Option<usize>,
}

/// Row sums plus the row checks of `checks = (voter, sk, vote)`.
pub fn tally(matrix: &VoteMatrix, checks: &[(usize, usize, Vote)]) -> DualTally {
    let rows = matrix.row_sums();
    let abort = checks
        .iter()
        .find(|&&(_, sk, v)| rows.get(sk) != Some(&v))
        .map(|&(k, _, _)| k);
    DualTally { rows, abort }
}

/// v_k = Σ_j (post_k[j] − pre_k[j]) mod c.
pub fn attack_extract_votes(pre: &[Vec<u64>], post: &VoteMatrix) -> Result<Vec<Vote>> {
    if pre.len() != post.columns.len() {
        return Err(Error::Parameter(
            "pre-vote table has the wrong width".into(),
        ));
    }
    let c = post.candidates as u64;
    Ok(pre
        .iter()
        .zip(&post.columns)
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (y + c - x % c) % c)
                .sum::<u64>()
                % c
        })
        .collect())
}

/// Blank columns implied by surviving product copies, or `None` when any
/// remaining |D₁⟩ row is not one of them.
pub fn corrupt_columns(pool: &StatePool, report: &CutAndChooseReport) -> Option<Vec<Vec<u64>>> {
    let rows: Vec<&Vec<usize>> = report
        .remaining_d1
        .iter()
        .map(|&i| match &pool.d1[i] {
            Copy::Product(d) => Some(d),
            Copy::Honest => None,
        })
        .collect::<Option<_>>()?;
    Some(
        (0..pool.params.voters)
            .map(|k| rows.iter().map(|r| r[k] as u64).collect())
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tamper {
    /// Replace the entry with a uniform value of Z_c.
    Random,
    /// Add a fixed non-zero offset.
    Offset(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct AbortAttack {
    pub fired: bool,
    pub tampered_row: usize,
    pub aborting_voter: Option<usize>,
    pub recovered_vote: Option<Vote>,
}

/// Changes one entry of the attacker's broadcast column in a row other than
/// its own. When the owner of that row aborts, the untampered row sum is
/// their vote.
pub fn tamper_column(
    column: &mut [u64],
    own_row: usize,
    candidates: usize,
    tamper: Tamper,
    rng: &mut SimRng,
) -> Result<(usize, u64)> {
    let others: Vec<usize> = (0..column.len()).filter(|&j| j != own_row).collect();
    let row = *others
        .get(rng.below(others.len().max(1)))
        .ok_or_else(|| Error::Parameter("no row to tamper".into()))?;
    let original = column[row];
    let c = candidates as u64;
    column[row] = match tamper {
        Tamper::Random => rng.below(candidates) as u64,
        Tamper::Offset(o) => {
            if o % c == 0 {
                return Err(Error::Parameter(
                    "tamper offset must be non-zero mod c".into(),
                ));
            }
            (original + o) % c
        }
    };
    Ok((row, original))
}

/// Full run with a trusted setup in which `attacker` tampers its broadcast.
pub fn attack_abort_deanonymize(
    params: DualBasisParams,
    votes: &[Vote],
    attacker: usize,
    tamper: Tamper,
    path: SimPath,
    rng: &mut SimRng,
) -> Result<AbortAttack> {
    if votes.len() != params.voters || attacker >= params.voters {
        return Err(Error::Parameter(
            "votes and attacker must match the voters".into(),
        ));
    }
    let pool = setup_honest(params);
    let order: Vec<usize> = (0..params.voters).collect();
    let report = cut_and_choose(&pool, &order, &[], path, rng)?;
    let ballots = blank_ballots(&pool, &report, path, rng)?;
    let mut columns = ballots
        .iter()
        .zip(votes)
        .map(|(b, &v)| cast(b, v, params.candidates))
        .collect::<Result<Vec<_>>>()?;
    let own = ballots[attacker].sk;
    let (row, original) =
        tamper_column(&mut columns[attacker], own, params.candidates, tamper, rng)?;
    let tampered = columns[attacker][row];
    let matrix = VoteMatrix::new(columns, params.candidates)?;
    let checks: Vec<(usize, usize, Vote)> = (0..params.voters)
        .filter(|&k| k != attacker)
        .map(|k| (k, ballots[k].sk, votes[k]))
        .collect();
    let t = tally(&matrix, &checks);
    let c = params.candidates as u64;
    let recovered = t
        .abort
        .map(|_| (matrix.row_sum(row) + c - tampered + original) % c);
    Ok(AbortAttack {
        fired: t.abort.is_some(),
        tampered_row: row,
        aborting_voter: t.abort,
        recovered_vote: recovered,
    })
}

/// Harness binding. Voter 0 distributes the states; the sampling order
/// puts honest voters first.
#[derive(Debug, Clone)]
pub struct DualBasisProtocol {
    pub params: DualBasisParams,
    pub path: SimPath,
}

impl DualBasisProtocol {
    pub fn new(params: DualBasisParams) -> Self {
        Self {
            params,
            path: SimPath::Fast,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DualSession {
    pub pool: StatePool,
    pub report: Option<CutAndChooseReport>,
    pub ballots: Vec<BlankBallot>,
    /// Votes of voters that cast honestly, for their row checks.
    pub honest_votes: Vec<(usize, Vote)>,
}

impl Protocol for DualBasisProtocol {
    type Session = DualSession;
    type Ballot = Vec<u64>;
    type Outcome = Vec<u64>;

    fn name(&self) -> String {
        "dualbasis".into()
    }

    fn voters(&self) -> usize {
        self.params.voters
    }

    fn vote_domain(&self) -> Vec<Vote> {
        (0..self.params.candidates as u64).collect()
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            in_transit: InTransit::Observe,
            order_leaks: true,
            setup_party: SetupParty::Voter(0),
            authority_corruptible: true,
        }
    }

    fn setup(&self, _rng: &mut SimRng) -> Result<DualSession> {
        Ok(DualSession {
            pool: setup_honest(self.params),
            report: None,
            ballots: Vec::new(),
            honest_votes: Vec::new(),
        })
    }

    fn verify_setup(
        &self,
        session: &mut DualSession,
        corrupted: &[usize],
        rng: &mut SimRng,
    ) -> Result<Option<AbortNotice>> {
        let n = self.params.voters;
        let order: Vec<usize> = (0..n)
            .filter(|k| !corrupted.contains(k))
            .chain((0..n).filter(|k| corrupted.contains(k)))
            .collect();
        let report = cut_and_choose(&session.pool, &order, corrupted, self.path, rng)?;
        if !report.accepted {
            let voter = report.tests.iter().find(|t| !t.passed).map(|t| t.verifier);
            session.report = Some(report);
            return Ok(Some(AbortNotice {
                voter,
                reason: "setup verification failed".into(),
            }));
        }
        session.ballots = blank_ballots(&session.pool, &report, self.path, rng)?;
        session.report = Some(report);
        Ok(None)
    }

    fn cast(
        &self,
        session: &mut DualSession,
        voter: usize,
        vote: Vote,
        _rng: &mut SimRng,
    ) -> Result<Option<Vec<u64>>> {
        let ballot = session
            .ballots
            .get(voter)
            .ok_or_else(|| Error::ProtocolOrder("casting before setup verification".into()))?;
        let col = cast(ballot, vote, self.params.candidates)?;
        session.honest_votes.push((voter, vote));
        Ok(Some(col))
    }

    fn tally(
        &self,
        session: &mut DualSession,
        register: &BallotRegister<Vec<u64>>,
        corrupted: &[usize],
        _rng: &mut SimRng,
    ) -> Result<TallyOutput<Vec<u64>>> {
        let n = self.params.voters;
        let columns: Option<Vec<Vec<u64>>> = (0..n).map(|k| register.get(k).cloned()).collect();
        let Some(columns) = columns else {
            return Ok(TallyOutput::Bottom(None));
        };
        let matrix = VoteMatrix::new(columns, self.params.candidates)?;
        let checks: Vec<(usize, usize, Vote)> = session
            .honest_votes
            .iter()
            .filter(|(k, _)| !corrupted.contains(k))
            .map(|&(k, v)| (k, session.ballots[k].sk, v))
            .collect();
        let t = tally(&matrix, &checks);
        Ok(match t.abort {
            Some(k) => TallyOutput::Bottom(Some(AbortNotice {
                voter: Some(k),
                reason: "row check failed".into(),
            })),
            None => {
                let mut rows = t.rows;
                rows.sort_unstable();
                TallyOutput::Outcome(rows)
            }
        })
    }

    fn votes_counted(&self, honest: &[(usize, Vote)], outcome: &Vec<u64>) -> bool {
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

    fn ballot_count(&self, outcome: &Vec<u64>) -> usize {
        outcome.len()
    }
}

/// Verification binding: every voter's row check passed.
pub fn rows_checked(_: &DualBasisProtocol, _: &DualSession, t: &TallyOutput<Vec<u64>>) -> bool {
    !t.is_bottom()
}

fn decide(
    victim: usize,
    votes: &[Vote],
    perm: &VotePermutation,
    seen: Vote,
    rng: &mut SimRng,
) -> bool {
    let v = votes[victim];
    let w = perm.apply(victim, v);
    if seen == v && seen != w {
        false
    } else if seen == w && seen != v {
        true
    } else {
        rng.bit()
    }
}

/// Corrupts the distributor plus `extra` voters, plants product copies and
/// reads every vote when they survive verification.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub target: CorruptTarget,
    pub extra: usize,
    table: Option<CorruptTable>,
    votes: Vec<Vote>,
    perm: Option<VotePermutation>,
}

impl Extraction {
    pub fn new(target: CorruptTarget, extra: usize) -> Self {
        Self {
            target,
            extra,
            table: None,
            votes: Vec::new(),
            perm: None,
        }
    }

    /// Victim: the first voter the permutation moves.
    fn victim(&self) -> Option<usize> {
        self.perm
            .as_ref()
            .and_then(|p| p.entries().first().map(|e| e.voter))
    }
}

impl Adversary<DualBasisProtocol> for Extraction {
    fn name(&self) -> String {
        format!("dualbasis-extraction({:?})", self.target).to_lowercase()
    }

    fn choose_votes(
        &mut self,
        proto: &DualBasisProtocol,
        _view: &View,
        suggested: Option<&[Vote]>,
        _rng: &mut SimRng,
    ) -> Vec<Vote> {
        self.votes = crate::harness::default_votes(proto, suggested);
        self.votes.clone()
    }

    fn choose_permutation(
        &mut self,
        _proto: &DualBasisProtocol,
        votes: &[Vote],
        suggested: Option<&VotePermutation>,
    ) -> Result<VotePermutation> {
        // Voter 0 distributes the states and is always corrupted.
        let p = match suggested {
            Some(p) => p.clone(),
            None => {
                let shifted = crate::harness::default_swap(&votes[1..])?;
                VotePermutation::from_entries(
                    &shifted
                        .entries()
                        .into_iter()
                        .map(|mut e| {
                            e.voter += 1;
                            e
                        })
                        .collect::<Vec<_>>(),
                )?
            }
        };
        self.perm = Some(p.clone());
        Ok(p)
    }

    fn static_corruptions(&mut self, _proto: &DualBasisProtocol, view: &View) -> Vec<usize> {
        let movers: Vec<usize> = self
            .perm
            .as_ref()
            .map(|p| p.entries().iter().map(|e| e.voter).collect())
            .unwrap_or_default();
        std::iter::once(0)
            .chain((1..view.voters).rev().filter(|k| !movers.contains(k)))
            .take((1 + self.extra).min(view.budget))
            .collect()
    }

    fn tamper_setup(
        &mut self,
        proto: &DualBasisProtocol,
        session: &mut DualSession,
        _view: &View,
        rng: &mut SimRng,
    ) -> Result<()> {
        let (pool, table) = attack_corrupt_setup(proto.params, self.target, rng);
        session.pool = pool;
        self.table = Some(table);
        Ok(())
    }

    fn guess_beta(
        &mut self,
        proto: &DualBasisProtocol,
        session: &DualSession,
        register: &BallotRegister<Vec<u64>>,
        _tally: &TallyOutput<Vec<u64>>,
        _view: &View,
        rng: &mut SimRng,
    ) -> bool {
        let (Some(report), Some(victim), Some(perm)) =
            (&session.report, self.victim(), self.perm.clone())
        else {
            return rng.bit();
        };
        if !report.accepted {
            return rng.bit();
        }
        let Some(post) = register.get(victim) else {
            return rng.bit();
        };
        let c = proto.params.candidates as u64;
        let seen = match self.target {
            CorruptTarget::D1 => match corrupt_columns(&session.pool, report) {
                Some(pre) => {
                    post.iter()
                        .zip(&pre[victim])
                        .map(|(y, x)| (y + c - x) % c)
                        .sum::<u64>()
                        % c
                }
                None => return rng.bit(),
            },
            CorruptTarget::D2 => {
                let survived = self
                    .table
                    .as_ref()
                    .is_some_and(|t| report.remaining_d2 == t.indices);
                if !survived {
                    return rng.bit();
                }
                // The row of the victim is known, but its blank entry is
                // not; compare the two candidate worlds by the other rows.
                let Copy::Product(sks) = &session.pool.d2[report.remaining_d2[0]] else {
                    return rng.bit();
                };
                let matrix = match (0..proto.params.voters)
                    .map(|k| register.get(k).cloned())
                    .collect::<Option<Vec<_>>>()
                {
                    Some(cols) => VoteMatrix::new(cols, proto.params.candidates),
                    None => return rng.bit(),
                };
                match matrix {
                    Ok(m) => m.row_sum(sks[victim]),
                    Err(_) => return rng.bit(),
                }
            }
        };
        decide(victim, &self.votes, &perm, seen, rng)
    }
}

/// Trusted setup; one corrupted voter tampers its broadcast and learns the
/// vote of whoever aborts.
#[derive(Debug, Clone)]
pub struct AbortDeanonymize {
    pub attacker: usize,
    pub tamper: Tamper,
    votes: Vec<Vote>,
    perm: Option<VotePermutation>,
    tampered: Option<(usize, u64, u64)>,
}

impl AbortDeanonymize {
    pub fn new(attacker: usize, tamper: Tamper) -> Self {
        Self {
            attacker,
            tamper,
            votes: Vec::new(),
            perm: None,
            tampered: None,
        }
    }
}

impl Adversary<DualBasisProtocol> for AbortDeanonymize {
    fn name(&self) -> String {
        "dualbasis-abort".into()
    }

    fn choose_votes(
        &mut self,
        proto: &DualBasisProtocol,
        _view: &View,
        suggested: Option<&[Vote]>,
        _rng: &mut SimRng,
    ) -> Vec<Vote> {
        self.votes = crate::harness::default_votes(proto, suggested);
        self.votes.clone()
    }

    fn choose_permutation(
        &mut self,
        proto: &DualBasisProtocol,
        votes: &[Vote],
        suggested: Option<&VotePermutation>,
    ) -> Result<VotePermutation> {
        let p = match suggested {
            Some(p) => p.clone(),
            None => {
                let honest: Vec<usize> = (0..proto.params.voters)
                    .filter(|&k| k != self.attacker)
                    .collect();
                let a = honest[0];
                let b = honest
                    .iter()
                    .copied()
                    .find(|&k| votes[k] != votes[a])
                    .ok_or_else(|| Error::Config("no honest pair with different votes".into()))?;
                VotePermutation::swap(a, votes[a], b, votes[b])
            }
        };
        self.perm = Some(p.clone());
        Ok(p)
    }

    fn static_corruptions(&mut self, _proto: &DualBasisProtocol, _view: &View) -> Vec<usize> {
        vec![self.attacker]
    }

    fn cast_corrupted(
        &mut self,
        proto: &DualBasisProtocol,
        session: &mut DualSession,
        voter: usize,
        vote: Vote,
        rng: &mut SimRng,
    ) -> Result<Option<Vec<u64>>> {
        let ballot = &session.ballots[voter];
        let mut col = cast(ballot, vote, proto.params.candidates)?;
        let (row, original) = tamper_column(
            &mut col,
            ballot.sk,
            proto.params.candidates,
            self.tamper,
            rng,
        )?;
        self.tampered = Some((row, original, col[row]));
        Ok(Some(col))
    }

    fn guess_beta(
        &mut self,
        proto: &DualBasisProtocol,
        _session: &DualSession,
        register: &BallotRegister<Vec<u64>>,
        tally: &TallyOutput<Vec<u64>>,
        _view: &View,
        rng: &mut SimRng,
    ) -> bool {
        let (
            TallyOutput::Bottom(Some(AbortNotice { voter: Some(k), .. })),
            Some((row, orig, now)),
            Some(perm),
        ) = (tally, self.tampered, self.perm.clone())
        else {
            return rng.bit();
        };
        let c = proto.params.candidates as u64;
        let Some(sum) = (0..proto.params.voters)
            .map(|j| register.get(j).map(|col| col[row]))
            .sum::<Option<u64>>()
        else {
            return rng.bit();
        };
        let seen = (sum + c - now + orig) % c;
        decide(*k, &self.votes, &perm, seen, rng)
    }
}
