use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

/// A numeric value: exact rational, or a float once anything inexact
/// (pi, a transcendental function, a float seed) has been involved.
#[derive(Debug, Clone, PartialEq)]
pub enum Num {
    Exact(BigRational),
    Float(f64),
}

impl Num {
    pub fn int(v: i64) -> Num {
        Num::Exact(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Num::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Num::Float(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Num::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Num::Exact(r) => Some(r),
            Num::Float(_) => None,
        }
    }

    /// Exact zero, or a float whose magnitude does not exceed `tol`.
    pub fn is_zero_within(&self, tol: f64) -> bool {
        match self {
            Num::Exact(r) => r.is_zero(),
            Num::Float(x) => x.abs() <= tol,
        }
    }

    pub fn abs(&self) -> Num {
        match self {
            Num::Exact(r) => Num::Exact(r.abs()),
            Num::Float(x) => Num::Float(x.abs()),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Num::Exact(_) => true,
            Num::Float(x) => x.is_finite(),
        }
    }

    /// Reciprocal; `None` when the value is (numerically) zero.
    pub fn recip(&self, tol: f64) -> Option<Num> {
        if self.is_zero_within(tol) {
            return None;
        }
        Some(match self {
            Num::Exact(r) => Num::Exact(r.recip()),
            Num::Float(x) => Num::Float(1.0 / x),
        })
    }

    pub fn powi(&self, k: i64) -> Num {
        match self {
            // Powers of a reduced fraction stay reduced; no gcd needed.
            Num::Exact(r) => match i32::try_from(k) {
                Ok(k) if !(k < 0 && r.is_zero()) => Num::Exact(r.pow(k)),
                _ => {
                    let mut acc = BigRational::one();
                    let base = if k < 0 { r.recip() } else { r.clone() };
                    for _ in 0..k.unsigned_abs() {
                        acc *= &base;
                    }
                    Num::Exact(acc)
                }
            },
            Num::Float(x) => Num::Float(x.powi(k as i32)),
        }
    }

    /// `|self - other|` as a float.
    pub fn abs_diff(&self, other: &Num) -> f64 {
        match (self, other) {
            (Num::Exact(a), Num::Exact(b)) if a == b => 0.0,
            (Num::Exact(_), Num::Exact(_)) => match (self - other).abs().to_f64() {
                d if d.is_nan() => f64::INFINITY,
                d => d,
            },
            _ => (self.to_f64() - other.to_f64()).abs(),
        }
    }

    /// Exact rational approximation of a float (used to seed exact orbits
    /// from decimal input).
    pub fn from_f64_exact(x: f64) -> Option<Num> {
        BigRational::from_f64(x).map(Num::Exact)
    }

    pub fn bits(&self) -> u64 {
        match self {
            Num::Exact(r) => r.numer().bits() + r.denom().bits(),
            Num::Float(_) => 64,
        }
    }
}

impl From<BigRational> for Num {
    fn from(r: BigRational) -> Num {
        Num::Exact(r)
    }
}

impl From<f64> for Num {
    fn from(x: f64) -> Num {
        Num::Float(x)
    }
}

/// Operands above this size go through GMP, whose gcd is subquadratic;
/// exact orbits of quadratic maps double in size every step.
const GMP_BITS: u64 = 4096;

mod gmp {
    use num_bigint::{BigInt, Sign};
    use num_rational::BigRational;
    use rug::integer::Order;
    use rug::{Integer, Rational};

    fn to_integer(x: &BigInt) -> Integer {
        let (sign, digits) = x.to_u32_digits();
        let mag = Integer::from_digits(&digits, Order::Lsf);
        if sign == Sign::Minus {
            -mag
        } else {
            mag
        }
    }

    fn from_integer(x: &Integer) -> BigInt {
        let sign = match x.cmp0() {
            std::cmp::Ordering::Less => Sign::Minus,
            std::cmp::Ordering::Equal => Sign::NoSign,
            std::cmp::Ordering::Greater => Sign::Plus,
        };
        BigInt::from_slice(sign, &x.to_digits::<u32>(Order::Lsf))
    }

    pub fn to_rational(r: &BigRational) -> Rational {
        // Both sides keep fractions in lowest terms with a positive denominator.
        unsafe { Rational::from_canonical(to_integer(r.numer()), to_integer(r.denom())) }
    }

    pub fn from_rational(r: &Rational) -> BigRational {
        BigRational::new_raw(from_integer(r.numer()), from_integer(r.denom()))
    }
}

fn bits(r: &BigRational) -> u64 {
    r.numer().bits() + r.denom().bits()
}

macro_rules! exact_op {
    ($a:expr, $b:expr, $op:tt) => {{
        let (a, b) = ($a, $b);
        if bits(a).max(bits(b)) > GMP_BITS {
            let r = rug::Rational::from(&gmp::to_rational(a) $op &gmp::to_rational(b));
            gmp::from_rational(&r)
        } else {
            a $op b
        }
    }};
}

macro_rules! arith {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Num> for &Num {
            type Output = Num;
            fn $method(self, rhs: &Num) -> Num {
                match (self, rhs) {
                    (Num::Exact(a), Num::Exact(b)) => Num::Exact(exact_op!(a, b, $op)),
                    _ => Num::Float(self.to_f64() $op rhs.to_f64()),
                }
            }
        }
        impl $trait<Num> for Num {
            type Output = Num;
            fn $method(self, rhs: Num) -> Num {
                (&self).$method(&rhs)
            }
        }
    };
}

arith!(Add, add, +);
arith!(Sub, sub, -);
arith!(Mul, mul, *);

impl Neg for Num {
    type Output = Num;
    fn neg(self) -> Num {
        match self {
            Num::Exact(r) => Num::Exact(-r),
            Num::Float(x) => Num::Float(-x),
        }
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Exact(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Num::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Num::Float(x) => write!(f, "{x}"),
        }
    }
}
