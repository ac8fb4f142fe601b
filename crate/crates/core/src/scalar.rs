//! Exact arithmetic in the ring `Q + Q*sqrt(2)`.
//!
//! Every Haar value in any dimension is `± 2^(m/2)`, so step functions with
//! rational values, their Haar coefficients, and every product that shows up
//! in shifts, paraproducts and commutators stay inside this field.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An exact rational number.
///
/// Values whose numerator and denominator fit in `i64` are kept inline and
/// promoted to big integers only when an operation overflows. The
/// representation is canonical, so derived equality is numeric equality.
#[derive(Clone)]
pub struct Rational(Repr);

#[derive(Clone)]
enum Repr {
    Small(Ratio<i64>),
    Big(BigRational),
}

impl Rational {
    pub fn zero() -> Self {
        Rational(Repr::Small(Ratio::new_raw(0, 1)))
    }

    pub fn one() -> Self {
        Rational(Repr::Small(Ratio::new_raw(1, 1)))
    }

    pub fn from_int(n: i64) -> Self {
        Rational(Repr::Small(Ratio::from_integer(n)))
    }

    /// `numer / denom`, reduced. Panics on a zero denominator.
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rational(Repr::Small(Ratio::new(numer, denom)))
    }

    /// `2^exp` for any integer exponent.
    pub fn pow2(exp: i32) -> Self {
        if exp.unsigned_abs() < 62 {
            if exp >= 0 {
                Rational::from_int(1i64 << exp)
            } else {
                Rational(Repr::Small(Ratio::new_raw(1, 1i64 << (-exp))))
            }
        } else {
            let p = BigInt::one() << exp.unsigned_abs();
            if exp >= 0 {
                Rational::from_big(BigRational::from_integer(p))
            } else {
                Rational::from_big(BigRational::new_raw(BigInt::one(), p))
            }
        }
    }

    fn from_big(r: BigRational) -> Self {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) => Rational(Repr::Small(Ratio::new_raw(n, d))),
            _ => Rational(Repr::Big(r)),
        }
    }

    fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(r) => BigRational::new_raw(BigInt::from(*r.numer()), BigInt::from(*r.denom())),
            Repr::Big(r) => r.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.is_zero(),
            Repr::Big(r) => r.is_zero(),
        }
    }

    pub fn signum(&self) -> i32 {
        match &self.0 {
            Repr::Small(r) => r.numer().signum() as i32,
            Repr::Big(r) => {
                if r.is_zero() {
                    0
                } else if r.is_positive() {
                    1
                } else {
                    -1
                }
            }
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(r) => BigInt::from(*r.numer()),
            Repr::Big(r) => r.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(r) => BigInt::from(*r.denom()),
            Repr::Big(r) => r.denom().clone(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(r) => *r.numer() as f64 / *r.denom() as f64,
            Repr::Big(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        Some(match &self.0 {
            Repr::Small(r) if *r.numer() != i64::MIN => Rational(Repr::Small(r.recip())),
            _ => Rational::from_big(self.to_big().recip()),
        })
    }
}

fn small_add(a: &Ratio<i64>, b: &Ratio<i64>) -> Option<Ratio<i64>> {
    let (an, ad, bn, bd) = (*a.numer() as i128, *a.denom() as i128, *b.numer() as i128, *b.denom() as i128);
    let g = ad.gcd(&bd);
    let num = an * (bd / g) + bn * (ad / g);
    let den = ad / g * bd;
    narrow(num, den)
}

fn small_mul(a: &Ratio<i64>, b: &Ratio<i64>) -> Option<Ratio<i64>> {
    let num = *a.numer() as i128 * *b.numer() as i128;
    let den = *a.denom() as i128 * *b.denom() as i128;
    narrow(num, den)
}

fn narrow(num: i128, den: i128) -> Option<Ratio<i64>> {
    if num == 0 {
        return Some(Ratio::new_raw(0, 1));
    }
    let g = num.gcd(&den);
    let (n, d) = (num / g, den / g);
    Some(Ratio::new_raw(i64::try_from(n).ok()?, i64::try_from(d).ok()?))
}

impl Add for &Rational {
    type Output = Rational;
    fn add(self, rhs: &Rational) -> Rational {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &rhs.0) {
            if let Some(r) = small_add(a, b) {
                return Rational(Repr::Small(r));
            }
        }
        Rational::from_big(self.to_big() + rhs.to_big())
    }
}

impl Mul for &Rational {
    type Output = Rational;
    fn mul(self, rhs: &Rational) -> Rational {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &rhs.0) {
            if let Some(r) = small_mul(a, b) {
                return Rational(Repr::Small(r));
            }
        }
        Rational::from_big(self.to_big() * rhs.to_big())
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        match self.0 {
            Repr::Small(r) if *r.numer() != i64::MIN => Rational(Repr::Small(-r)),
            _ => Rational::from_big(-self.to_big()),
        }
    }
}

impl Sub for &Rational {
    type Output = Rational;
    fn sub(self, rhs: &Rational) -> Rational {
        self + &(-rhs.clone())
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => a.numer() == b.numer() && a.denom() == b.denom(),
            (Repr::Big(a), Repr::Big(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Rational {}

impl Hash for Rational {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match &self.0 {
            Repr::Small(r) => {
                0u8.hash(state);
                r.numer().hash(state);
                r.denom().hash(state);
            }
            Repr::Big(r) => {
                1u8.hash(state);
                r.numer().hash(state);
                r.denom().hash(state);
            }
        }
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => {
                (*a.numer() as i128 * *b.denom() as i128).cmp(&(*b.numer() as i128 * *a.denom() as i128))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = (self.numer(), self.denom());
        if d.is_one() {
            write!(f, "{n}")
        } else {
            write!(f, "{n}/{d}")
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let n: BigInt = n.parse().map_err(|_| format!("bad numerator in {s:?}"))?;
        let d: BigInt = d.parse().map_err(|_| format!("bad denominator in {s:?}"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        Ok(Rational::from_big(BigRational::new(n, d)))
    }
}

/// An element `rational + root2 * sqrt(2)` of `Q(sqrt 2)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Scalar {
    rational: Rational,
    root2: Rational,
}

impl Scalar {
    pub fn new(rational: Rational, root2: Rational) -> Self {
        Scalar { rational, root2 }
    }

    pub fn zero() -> Self {
        Scalar::new(Rational::zero(), Rational::zero())
    }

    pub fn one() -> Self {
        Scalar::from_rational(Rational::one())
    }

    pub fn sqrt2() -> Self {
        Scalar::new(Rational::zero(), Rational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Scalar::from_rational(Rational::from_int(n))
    }

    pub fn from_ratio(numer: i64, denom: i64) -> Self {
        Scalar::from_rational(Rational::new(numer, denom))
    }

    pub fn from_rational(r: Rational) -> Self {
        Scalar::new(r, Rational::zero())
    }

    /// `sqrt(2)^m` for any integer `m`.
    pub fn pow_sqrt2(m: i64) -> Self {
        let half = m.div_euclid(2) as i32;
        if m.rem_euclid(2) == 0 {
            Scalar::from_rational(Rational::pow2(half))
        } else {
            Scalar::new(Rational::zero(), Rational::pow2(half))
        }
    }

    pub fn rational_part(&self) -> &Rational {
        &self.rational
    }

    pub fn root2_part(&self) -> &Rational {
        &self.root2
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.root2.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.root2.is_zero()
    }

    /// Exact sign of `a + b sqrt(2)`.
    pub fn signum(&self) -> i32 {
        let (sa, sb) = (self.rational.signum(), self.root2.signum());
        if sa == 0 {
            return sb;
        }
        if sb == 0 || sa == sb {
            return sa;
        }
        // opposite signs: compare a^2 with 2 b^2
        let a2 = &self.rational * &self.rational;
        let b2 = &(&self.root2 * &self.root2) * &Rational::from_int(2);
        match a2.cmp(&b2) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => unreachable!("sqrt(2) is irrational"),
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn scale(&self, r: &Rational) -> Self {
        Scalar::new(&self.rational * r, &self.root2 * r)
    }

    /// Multiplicative inverse via the conjugate `a - b sqrt(2)`.
    pub fn recip(&self) -> Option<Self> {
        let norm = &(&self.rational * &self.rational) - &(&(&self.root2 * &self.root2) * &Rational::from_int(2));
        let inv = norm.recip()?;
        Some(Scalar::new(&self.rational * &inv, -(&self.root2 * &inv)))
    }

    pub fn to_f64(&self) -> f64 {
        self.rational.to_f64() + self.root2.to_f64() * std::f64::consts::SQRT_2
    }
}

impl Default for Scalar {
    fn default() -> Self {
        Scalar::zero()
    }
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        Scalar::new(&self.rational + &rhs.rational, &self.root2 + &rhs.root2)
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        Scalar::new(&self.rational - &rhs.rational, &self.root2 - &rhs.root2)
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        if self.root2.is_zero() && rhs.root2.is_zero() {
            return Scalar::from_rational(&self.rational * &rhs.rational);
        }
        let two = Rational::from_int(2);
        let rat = &(&self.rational * &rhs.rational) + &(&(&self.root2 * &rhs.root2) * &two);
        let r2 = &(&self.rational * &rhs.root2) + &(&self.root2 * &rhs.rational);
        Scalar::new(rat, r2)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: &Scalar) -> Scalar {
                (&self).$m(rhs)
            }
        }
        impl $tr<Scalar> for &Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar::new(-self.rational, -self.root2)
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -self.clone()
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, rhs: &Scalar) {
        if rhs.is_zero() {
            return;
        }
        *self = &*self + rhs;
    }
}

impl AddAssign for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        *self += &rhs;
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, rhs: &Scalar) {
        if rhs.is_zero() {
            return;
        }
        *self = &*self - rhs;
    }
}

impl MulAssign<&Scalar> for Scalar {
    fn mul_assign(&mut self, rhs: &Scalar) {
        *self = &*self * rhs;
    }
}

impl Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |mut acc, x| {
            acc += &x;
            acc
        })
    }
}

impl<'a> Sum<&'a Scalar> for Scalar {
    fn sum<I: Iterator<Item = &'a Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |mut acc, x| {
            acc += x;
            acc
        })
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum().cmp(&0)
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::from_int(n)
    }
}

impl From<Rational> for Scalar {
    fn from(r: Rational) -> Self {
        Scalar::from_rational(r)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.rational.is_zero(), self.root2.is_zero()) {
            (_, true) => write!(f, "{}", self.rational),
            (true, false) => write!(f, "{}*sqrt2", self.root2),
            (false, false) => write!(f, "{} + {}*sqrt2", self.rational, self.root2),
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// JSON form: `{"rat": "p/q", "sqrt2": "p/q"}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScalarJson {
    rat: String,
    #[serde(default = "zero_string")]
    sqrt2: String,
}

fn zero_string() -> String {
    "0".to_string()
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ScalarJson { rat: self.rational.to_string(), sqrt2: self.root2.to_string() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = ScalarJson::deserialize(d)?;
        let rat = j.rat.parse().map_err(serde::de::Error::custom)?;
        let r2 = j.sqrt2.parse().map_err(serde::de::Error::custom)?;
        Ok(Scalar::new(rat, r2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(a: (i64, i64), b: (i64, i64)) -> Scalar {
        Scalar::new(Rational::new(a.0, a.1), Rational::new(b.0, b.1))
    }

    #[test]
    fn sqrt2_squares_to_two() {
        assert_eq!(Scalar::sqrt2().square(), Scalar::from_int(2));
        assert_eq!(Scalar::pow_sqrt2(3), Scalar::new(Rational::zero(), Rational::from_int(2)));
        assert_eq!(Scalar::pow_sqrt2(-1) * Scalar::sqrt2(), Scalar::one());
        assert_eq!(Scalar::pow_sqrt2(-4), Scalar::from_ratio(1, 4));
    }

    #[test]
    fn exact_sign_with_mixed_parts() {
        // 3 - 2 sqrt2 ~ 0.17
        assert_eq!(s((3, 1), (-2, 1)).signum(), 1);
        // 1 - sqrt2 < 0
        assert_eq!(s((1, 1), (-1, 1)).signum(), -1);
        assert_eq!(Scalar::zero().signum(), 0);
        assert!(Scalar::sqrt2() > Scalar::from_ratio(141, 100));
        assert!(Scalar::sqrt2() < Scalar::from_ratio(142, 100));
    }

    #[test]
    fn overflow_promotes_to_big_and_demotes_back() {
        let big = &Rational::pow2(62) * &Rational::pow2(10);
        let back = &big * &Rational::pow2(-72);
        assert_eq!(back, Rational::one());
        let x = Rational::new(i64::MAX, 3);
        let y = &x + &x;
        assert_eq!(&y - &x, x);
    }

    #[test]
    fn parse_and_serde() {
        let x = s((-3, 4), (5, 8));
        let j = serde_json::to_string(&x).unwrap();
        assert_eq!(j, r#"{"rat":"-3/4","sqrt2":"5/8"}"#);
        let y: Scalar = serde_json::from_str(&j).unwrap();
        assert_eq!(x, y);
    }

    fn arb_scalar() -> impl Strategy<Value = Scalar> {
        (-50i64..50, 1i64..9, -50i64..50, 1i64..9).prop_map(|(a, b, c, d)| s((a, b), (c, d)))
    }

    proptest! {
        #[test]
        fn ring_laws(x in arb_scalar(), y in arb_scalar(), z in arb_scalar()) {
            prop_assert_eq!(&(&x + &y) + &z, &x + &(&y + &z));
            prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
            prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
            prop_assert_eq!(&x - &x, Scalar::zero());
        }

        #[test]
        fn ordering_agrees_with_floats(x in arb_scalar(), y in arb_scalar()) {
            let (fx, fy) = (x.to_f64(), y.to_f64());
            if (fx - fy).abs() > 1e-9 {
                prop_assert_eq!(x.cmp(&y), fx.partial_cmp(&fy).unwrap());
            }
        }

        #[test]
        fn recip_is_inverse(x in arb_scalar()) {
            if !x.is_zero() {
                prop_assert_eq!(&x * &x.recip().unwrap(), Scalar::one());
            }
        }
    }
}
