//! Real scalar abstraction used by the per-subcarrier receiver kernels.
//!
//! The kernels in [`crate::hann::kernel`] are generic over [`Real`] so that
//! the same code runs with plain `f64` in the simulator and with [`Counted`]
//! when the operation-count audit wants to know how many real
//! multiplications and additions a step costs.
//!
//! Accounting rules applied by [`Counted`]:
//! - `+` and `-` count one real addition.
//! - `*` and `/` count one real multiplication (a division is one op).
//! - negation, conjugation and [`Real::half`] are free: they are sign or
//!   exponent manipulations.
//! - comparisons and conversions are free.
//!
//! With `num_complex`'s operator implementations this gives: complex
//! multiply = 4 mults + 2 adds, complex add = 2 adds, real-by-complex
//! scale = 2 mults, `norm_sqr` = 2 mults + 1 add.

use std::cell::Cell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_traits::{Num, One, Zero};

pub trait Real:
    Copy + Num + Neg<Output = Self> + PartialOrd + fmt::Debug + Send + Sync
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Multiply by one half.
    fn half(self) -> Self;

    fn max_of(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn half(self) -> Self {
        0.5 * self
    }
}

thread_local! {
    static MULTS: Cell<u64> = const { Cell::new(0) };
    static ADDS: Cell<u64> = const { Cell::new(0) };
}

/// Snapshot of the thread-local operation counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCount {
    pub mults: u64,
    pub adds: u64,
}

impl OpCount {
    /// Current value of the counters on this thread.
    pub fn now() -> Self {
        OpCount {
            mults: MULTS.with(Cell::get),
            adds: ADDS.with(Cell::get),
        }
    }

    /// Counts accumulated since `earlier`.
    pub fn since(earlier: OpCount) -> Self {
        let now = Self::now();
        OpCount {
            mults: now.mults - earlier.mults,
            adds: now.adds - earlier.adds,
        }
    }
}

impl Add for OpCount {
    type Output = OpCount;
    fn add(self, rhs: OpCount) -> OpCount {
        OpCount {
            mults: self.mults + rhs.mults,
            adds: self.adds + rhs.adds,
        }
    }
}

/// Runs `f` and returns its result with the operations it performed.
pub fn count_ops<T>(f: impl FnOnce() -> T) -> (T, OpCount) {
    let start = OpCount::now();
    let out = f();
    (out, OpCount::since(start))
}

#[inline]
fn bump_mul() {
    MULTS.with(|c| c.set(c.get() + 1));
}

#[inline]
fn bump_add() {
    ADDS.with(|c| c.set(c.get() + 1));
}

/// An `f64` that records every arithmetic operation applied to it.
#[derive(Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Counted(pub f64);

impl fmt::Debug for Counted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for Counted {
    type Output = Counted;
    fn add(self, rhs: Counted) -> Counted {
        bump_add();
        Counted(self.0 + rhs.0)
    }
}

impl Sub for Counted {
    type Output = Counted;
    fn sub(self, rhs: Counted) -> Counted {
        bump_add();
        Counted(self.0 - rhs.0)
    }
}

impl Mul for Counted {
    type Output = Counted;
    fn mul(self, rhs: Counted) -> Counted {
        bump_mul();
        Counted(self.0 * rhs.0)
    }
}

impl Div for Counted {
    type Output = Counted;
    fn div(self, rhs: Counted) -> Counted {
        bump_mul();
        Counted(self.0 / rhs.0)
    }
}

impl Rem for Counted {
    type Output = Counted;
    fn rem(self, rhs: Counted) -> Counted {
        bump_mul();
        Counted(self.0 % rhs.0)
    }
}

impl Neg for Counted {
    type Output = Counted;
    fn neg(self) -> Counted {
        Counted(-self.0)
    }
}

impl Zero for Counted {
    fn zero() -> Self {
        Counted(0.0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0.0
    }
}

impl One for Counted {
    fn one() -> Self {
        Counted(1.0)
    }
}

impl Num for Counted {
    type FromStrRadixErr = <f64 as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(Counted)
    }
}

impl Real for Counted {
    fn from_f64(v: f64) -> Self {
        Counted(v)
    }
    fn to_f64(self) -> f64 {
        self.0
    }
    fn half(self) -> Self {
        Counted(0.5 * self.0)
    }
}
