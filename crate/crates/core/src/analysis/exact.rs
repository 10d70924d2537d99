use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact rational in canonical reduced form with a positive denominator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactRational(BigRational);

impl ExactRational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self> {
        let d = denom.into();
        if d.is_zero() {
            return Err(Error::Domain("zero denominator".into()));
        }
        Ok(Self(BigRational::new(numer.into(), d)))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Self(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }

    /// Exact value of a finite float.
    pub fn from_f64(x: f64) -> Result<Self> {
        BigRational::from_float(x)
            .map(Self)
            .ok_or_else(|| Error::Domain(format!("{x} is not finite")))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    pub fn from_big(r: BigRational) -> Self {
        Self(r)
    }

    pub fn pow(&self, e: u32) -> Self {
        Self(num_traits::pow(self.0.clone(), e as usize))
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for ExactRational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident) => {
        impl std::ops::$tr for ExactRational {
            type Output = ExactRational;
            fn $m(self, rhs: Self) -> Self {
                Self(self.0.$m(rhs.0))
            }
        }
        impl<'a> std::ops::$tr<&'a ExactRational> for &'a ExactRational {
            type Output = ExactRational;
            fn $m(self, rhs: &'a ExactRational) -> ExactRational {
                ExactRational((&self.0).$m(&rhs.0))
            }
        }
    };
}
forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

/// Binomial coefficient C(n, k), zero when k > n.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Pr[X = 0] for X ~ HG(population, successes, draws).
pub fn hypergeometric_zero(population: u64, successes: u64, draws: u64) -> Result<ExactRational> {
    if successes > population || draws > population {
        return Err(Error::Parameter(format!(
            "HG({population}, {successes}, {draws}) is not a distribution"
        )));
    }
    let num = binomial(population - successes, draws);
    let den = binomial(population, draws);
    ExactRational::new(BigInt::from(num), BigInt::from(den))
}

fn check_survival(voters: u64, corrupted: u64, delta0: u32) -> Result<u64> {
    if voters == 0 || corrupted > voters {
        return Err(Error::Parameter(format!(
            "need 0 <= t <= N and N >= 1, got N={voters}, t={corrupted}"
        )));
    }
    if delta0 > 40 {
        return Err(Error::Parameter(format!("delta0 = {delta0} is too large")));
    }
    Ok(1u64 << delta0)
}

/// Probability that no honest voter tests one of the `N` corrupted copies when
/// the `t` corrupted voters sample last.
///
/// Computed as the product of hypergeometric zero-hit probabilities over the
/// `N − t` honest voters, each drawing `2^δ0` copies from what is left.
pub fn pr_win_given_bad(voters: u64, corrupted: u64, delta0: u32) -> Result<ExactRational> {
    let s = check_survival(voters, corrupted, delta0)?;
    let mut acc = ExactRational::one();
    for k in 0..voters - corrupted {
        let remaining = voters + voters * s - k * s;
        acc = acc * hypergeometric_zero(remaining, voters, s)?;
    }
    Ok(acc)
}

/// The telescoped form ∏_{i=1}^{N} (t·2^δ0 + i)/(N·2^δ0 + i).
pub fn pr_win_given_bad_closed_form(
    voters: u64,
    corrupted: u64,
    delta0: u32,
) -> Result<ExactRational> {
    let s = check_survival(voters, corrupted, delta0)?;
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 1..=voters {
        num *= BigInt::from(corrupted * s + i);
        den *= BigInt::from(voters * s + i);
    }
    ExactRational::new(num, den)
}

/// (ε/2)^N as an exact rational with ε = t/N.
pub fn survival_lower_bound(voters: u64, corrupted: u64) -> Result<ExactRational> {
    let half_eps = ExactRational::new(BigInt::from(corrupted), BigInt::from(2 * voters))?;
    Ok(half_eps.pow(voters as u32))
}
