//! Bound-by-bound verification report.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use super::exact::{
    pr_win_given_bad, pr_win_given_bad_closed_form, survival_lower_bound, ExactRational,
};
use super::quadrature::{bin_mass, integrate_f, three_bin_mass, wraparound_mass, Boundary};
use super::tails::{
    bin_overcount_bound, bin_undercount_bound, rounds_threshold, samples_for_undercount,
};
use super::taylor::{taylor_gap, taylor_sin2_lower};
use crate::error::Result;
use crate::rng::SimRng;

/// Dimensions used by the quadrature checks.
pub const SUITE_DIMS: [usize; 4] = [4, 8, 16, 64];
/// Points on the δ grid over [0, 2π/D].
pub const DELTA_GRID: usize = 128;

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub id: String,
    pub family: String,
    pub claim: String,
    pub computed: String,
    pub holds: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    /// Only run checks whose id starts with this prefix.
    pub filter: Option<String>,
    /// Replace the claimed constant of one check, by id. Used as a negative control.
    pub override_constant: Option<(String, f64)>,
}

struct Ctx<'a> {
    opts: &'a SuiteOptions,
    out: Vec<BoundCheck>,
}

impl Ctx<'_> {
    fn wants(&self, id: &str) -> bool {
        self.opts
            .filter
            .as_deref()
            .is_none_or(|f| id.starts_with(f))
    }

    fn constant(&self, id: &str, default: f64) -> f64 {
        match &self.opts.override_constant {
            Some((k, v)) if k == id => *v,
            _ => default,
        }
    }

    fn push(&mut self, id: &str, claim: String, computed: String, holds: bool) {
        let family = id.split('.').next().unwrap_or(id).to_string();
        self.out.push(BoundCheck {
            id: id.to_string(),
            family,
            claim,
            computed,
            holds,
        });
    }
}

/// δ values j·(2π/D)/(G−1), j = 0..G−1, endpoints included.
pub fn delta_grid(dim: usize) -> Vec<f64> {
    let w = TAU / dim as f64;
    (0..DELTA_GRID)
        .map(|j| w * j as f64 / (DELTA_GRID - 1) as f64)
        .collect()
}

/// Σ_{n=1}^{20} (−1)^{n+1} 2^{2n−1} π^{2n−2} (2^{2n−1}+1) / ((2n)! (2n−1)),
/// the term-wise integral of the truncated series over the three-bin window
/// in the large-D limit.
pub fn three_bin_series() -> f64 {
    let mut sum = 0.0;
    let mut fact = 1.0;
    for n in 1..=20i32 {
        let two_n = 2.0 * f64::from(n);
        fact *= (two_n - 1.0) * two_n;
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * 2f64.powi(2 * n - 1) * PI.powi(2 * n - 2) * (2f64.powi(2 * n - 1) + 1.0)
            / (fact * (two_n - 1.0));
    }
    sum
}

fn survival(ctx: &mut Ctx) -> Result<()> {
    let id = "survival.product-equals-closed-form";
    if ctx.wants(id) {
        let mut cases = 0;
        let mut bad = Vec::new();
        for n in 1..=12u64 {
            for t in 0..=n {
                for d0 in 0..=6 {
                    cases += 1;
                    if pr_win_given_bad(n, t, d0)? != pr_win_given_bad_closed_form(n, t, d0)? {
                        bad.push((n, t, d0));
                    }
                }
            }
        }
        ctx.push(
            id,
            "hypergeometric product = ∏(t·2^δ0+i)/(N·2^δ0+i) for N≤12, t≤N, δ0≤6".into(),
            format!("{} of {cases} cases equal", cases - bad.len()),
            bad.is_empty(),
        );
    }
    let id = "survival.lower-bound";
    if ctx.wants(id) {
        let mut cases = 0;
        let mut worst = f64::INFINITY;
        let mut holds = true;
        for (num, den) in [(1u64, 4u64), (1, 2), (3, 4)] {
            for n in 1..=12u64 {
                if (n * num) % den != 0 {
                    continue;
                }
                let t = n * num / den;
                let bound = survival_lower_bound(n, t)?;
                for d0 in 0..=6 {
                    cases += 1;
                    let p = pr_win_given_bad(n, t, d0)?;
                    holds &= p > bound;
                    worst = worst.min(p.to_f64() / bound.to_f64());
                }
            }
        }
        ctx.push(
            id,
            "Pr[Win|Bad] > (ε/2)^N for ε ∈ {1/4,1/2,3/4}, εN integral, N≤12, δ0≤6".into(),
            format!("{cases} cases, smallest ratio {worst:.4}"),
            holds,
        );
    }
    let id = "survival.reference";
    if ctx.wants(id) {
        let p = pr_win_given_bad(4, 2, 2)?;
        let expected = ExactRational::new(495, 4845)?;
        ctx.push(
            id,
            "N=4, t=2, δ0=2 gives C(12,4)/C(20,4) = 33/323".into(),
            format!("{p} ≈ {:.6}", p.to_f64()),
            p == expected,
        );
    }
    Ok(())
}

fn single_bin(ctx: &mut Ctx) -> Result<()> {
    for dim in SUITE_DIMS {
        let id = format!("single-bin.min.D{dim}");
        if ctx.wants(&id) {
            let c = ctx.constant(&id, 0.405);
            let masses: Vec<f64> = delta_grid(dim)
                .into_iter()
                .map(|d| bin_mass(d, dim, 0).map(|r| r.value))
                .collect::<Result<_>>()?;
            let min = masses.iter().cloned().fold(f64::INFINITY, f64::min);
            ctx.push(
                &id,
                format!("single-bin mass ≥ {c} on a {DELTA_GRID}-point δ grid"),
                format!("min {min:.9}"),
                min >= c,
            );
        }
        let id = format!("single-bin.f0.D{dim}");
        if ctx.wants(&id) {
            let c = ctx.constant(&id, 4.0 / (PI * PI));
            let f0 = bin_mass(0.0, dim, 0)?.value;
            ctx.push(
                &id,
                format!("F(0) ≥ {c:.9} − 1e−9"),
                format!("{f0:.9}"),
                f0 >= c - 1e-9,
            );
        }
    }
    Ok(())
}

fn three_bin(ctx: &mut Ctx) -> Result<()> {
    for dim in SUITE_DIMS {
        let id = format!("three-bin.min.D{dim}");
        if ctx.wants(&id) {
            let c = ctx.constant(&id, 0.9);
            let mut min = f64::INFINITY;
            for d in delta_grid(dim) {
                min = min.min(three_bin_mass(d, dim)?.value);
            }
            ctx.push(
                &id,
                format!("three-bin mass ≥ {c} on the δ grid"),
                format!("min {min:.9}"),
                min >= c,
            );
        }
    }
    let id = "three-bin.value";
    if ctx.wants(id) {
        let c = ctx.constant(id, 0.9263);
        let v = three_bin_mass(0.0, 64)?.value;
        ctx.push(
            id,
            format!("three-bin mass at δ=0, D=64 ≈ {c} within 1e−3"),
            format!("{v:.9}"),
            (v - c).abs() <= 1e-3,
        );
    }
    let id = "three-bin.series";
    if ctx.wants(id) {
        let c = ctx.constant(id, 0.9263);
        let s = three_bin_series();
        let below_all = SUITE_DIMS
            .iter()
            .map(|&d| three_bin_mass(0.0, d).map(|r| s <= r.value + 1e-9))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .all(|b| b);
        ctx.push(
            id,
            format!("20-term series ≈ {c} within 1e−3 and below every quadrature value"),
            format!("{s:.10}"),
            (s - c).abs() <= 1e-3 && below_all,
        );
    }
    Ok(())
}

fn wrap(ctx: &mut Ctx) -> Result<()> {
    for dim in SUITE_DIMS {
        let id = format!("wrap.min.D{dim}");
        if ctx.wants(&id) {
            let c = ctx.constant(&id, 0.9);
            let mut min = f64::INFINITY;
            for d in delta_grid(dim) {
                for b in [Boundary::Low, Boundary::High] {
                    min = min.min(wraparound_mass(d, dim, b)?.value);
                }
            }
            ctx.push(
                &id,
                format!("wrap-around three-bin mass > {c} for l_v ∈ {{0, D−1}}"),
                format!("min {min:.9}"),
                min > c,
            );
        }
    }
    let id = "wrap.identity";
    if ctx.wants(id) {
        let mut worst: f64 = 0.0;
        for dim in SUITE_DIMS {
            for d in [0.0, 0.3 * TAU / dim as f64, 0.9 * TAU / dim as f64] {
                let direct =
                    integrate_f(d, dim, (-TAU / dim as f64, 2.0 * TAU / dim as f64))?.value;
                for b in [Boundary::Low, Boundary::High] {
                    worst = worst.max((wraparound_mass(d, dim, b)?.value - direct).abs());
                }
            }
        }
        ctx.push(
            id,
            "split wrap-around mass equals the unwrapped window within 1e−9".into(),
            format!("max difference {worst:.2e}"),
            worst < 1e-9,
        );
    }
    Ok(())
}

fn taylor(ctx: &mut Ctx) -> Result<()> {
    let id = "taylor.strict";
    if ctx.wants(id) {
        let mut rng = SimRng::new(0x007A_710A);
        let mut strict = 0;
        let mut total = 0;
        while total < 10_000 {
            let x = (rng.uniform() * 2.0 - 1.0) * TAU;
            if x == 0.0 {
                continue;
            }
            total += 1;
            if taylor_gap(x)?.strict {
                strict += 1;
            }
        }
        ctx.push(
            id,
            "sin²x > 20-term series at 10⁴ points of [−2π, 2π]∖{0}".into(),
            format!("{strict} of {total} certified"),
            strict == total,
        );
    }
    let id = "taylor.zero";
    if ctx.wants(id) {
        let v = taylor_sin2_lower(0.0)?;
        ctx.push(id, "equality at x = 0".into(), format!("{v}"), v == 0.0);
    }
    Ok(())
}

fn tails(ctx: &mut Ctx) -> Result<()> {
    let id = "chernoff.undercount";
    if ctx.wants(id) {
        let p = ctx.constant(id, 0.405);
        let at_500 = bin_undercount_bound(p, 0.4, 500)?;
        let needed = samples_for_undercount(p, 0.4, 0.02)?;
        let decreasing = (1..50)
            .map(|k| bin_undercount_bound(p, 0.4, 100 * k))
            .collect::<Result<Vec<_>>>()?
            .windows(2)
            .all(|w| w[1] < w[0]);
        ctx.push(
            id,
            format!("lower-tail bound for p={p}, threshold 0.4 decays and drops below 0.02"),
            format!("{at_500:.4} at 500 samples; < 0.02 from {needed} samples"),
            decreasing && bin_undercount_bound(p, 0.4, needed)? < 0.02,
        );
    }
    let id = "chernoff.overcount";
    if ctx.wants(id) {
        let p = ctx.constant(id, 0.1);
        let worst = (10..=1000)
            .map(|n| bin_overcount_bound(p, 0.4, n))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        ctx.push(
            id,
            format!("upper-tail bound for p_w={p}, threshold 0.4 is < 1 for 10..=1000 samples"),
            format!("max {worst:.4}"),
            worst < 1.0,
        );
    }
    let id = "rounds.threshold";
    if ctx.wants(id) {
        let at2 = rounds_threshold(2)?;
        let mut prev = at2;
        let mut min_above = f64::INFINITY;
        let mut monotone = true;
        for rho in 3..=1_000_000u64 {
            let v = rounds_threshold(rho)?;
            monotone &= v >= prev;
            min_above = min_above.min(v);
            prev = v;
        }
        let c = ctx.constant(id, 0.25);
        ctx.push(
            id,
            format!("(1−1/ρ)^ρ = {c} at ρ=2, > {c} for 3 ≤ ρ ≤ 10⁶, non-decreasing"),
            format!("ρ=2: {at2}; min over 3..10⁶: {min_above:.9}"),
            at2 == c && min_above > c && monotone,
        );
    }
    Ok(())
}

/// Families in the order they run.
pub const FAMILIES: [&str; 7] = [
    "survival",
    "single-bin",
    "three-bin",
    "wrap",
    "taylor",
    "chernoff",
    "rounds",
];

pub fn run_bound_suite(opts: &SuiteOptions) -> Result<Vec<BoundCheck>> {
    let mut ctx = Ctx {
        opts,
        out: Vec::new(),
    };
    survival(&mut ctx)?;
    single_bin(&mut ctx)?;
    three_bin(&mut ctx)?;
    wrap(&mut ctx)?;
    taylor(&mut ctx)?;
    tails(&mut ctx)?;
    Ok(ctx.out)
}
