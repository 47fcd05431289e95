//! Small exact and extended-precision helpers.

/// Binomial coefficient `C(n, k)`; exact for the sizes used in this crate.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * u128::from(n - i) / u128::from(i + 1);
    }
    c as f64
}

/// `P(Binomial(trials, p) >= at_least)`, summed over non-negative terms only.
pub fn binomial_upper_tail(trials: u32, at_least: u32, p: f64) -> f64 {
    if at_least == 0 {
        return 1.0;
    }
    if at_least > trials {
        return 0.0;
    }
    let fail = 1.0 - p;
    let sum: f64 = (at_least..=trials)
        .map(|s| binomial(trials, s) * p.powi(s as i32) * fail.powi((trials - s) as i32))
        .sum();
    sum.min(1.0)
}

/// Unevaluated sum `hi + lo` carrying roughly twice the precision of `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Self { hi: s, lo: err }
    }

    fn quick_two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        Self { hi: s, lo: b - (s - a) }
    }

    fn two_prod(a: f64, b: f64) -> Self {
        let p = a * b;
        Self { hi: p, lo: a.mul_add(b, -p) }
    }

    pub fn add(self, other: Self) -> Self {
        let s = Self::two_sum(self.hi, other.hi);
        let t = Self::two_sum(self.lo, other.lo);
        let r = Self::quick_two_sum(s.hi, s.lo + t.hi);
        Self::quick_two_sum(r.hi, r.lo + t.lo)
    }

    pub fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }

    pub fn mul(self, other: Self) -> Self {
        let p = Self::two_prod(self.hi, other.hi);
        let lo = p.lo + (self.hi * other.lo + self.lo * other.hi);
        Self::quick_two_sum(p.hi, lo)
    }

    pub fn mul_f64(self, x: f64) -> Self {
        self.mul(Self::from_f64(x))
    }

    pub fn div_f64(self, x: f64) -> Self {
        let q1 = self.hi / x;
        let r = self.add(Self::two_prod(q1, x).neg());
        let q2 = r.hi / x;
        Self::quick_two_sum(q1, q2)
    }

    pub fn powi(self, exp: u32) -> Self {
        let mut acc = Self::from_f64(1.0);
        let mut base = self;
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            e >>= 1;
        }
        acc
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(30, 15), 155_117_520.0);
        assert_eq!(binomial(4, 0), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(binomial(0, 0), 1.0);
    }

    #[test]
    fn binomial_tail_edges() {
        assert_eq!(binomial_upper_tail(5, 0, 0.3), 1.0);
        assert_eq!(binomial_upper_tail(5, 6, 0.3), 0.0);
        assert_eq!(binomial_upper_tail(5, 5, 1.0), 1.0);
        assert_eq!(binomial_upper_tail(5, 1, 0.0), 0.0);
        assert!((binomial_upper_tail(2, 1, 0.5) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn double_double_recovers_cancelled_bits() {
        // (1 + 2^-60) - 1 vanishes in f64 but not in double-double.
        let tiny = 2f64.powi(-60);
        let x = DoubleDouble::from_f64(1.0).add(DoubleDouble::from_f64(tiny));
        let y = x.add(DoubleDouble::from_f64(-1.0));
        assert_eq!(y.to_f64(), tiny);
        let third = DoubleDouble::from_f64(1.0).div_f64(3.0);
        let back = third.mul_f64(3.0).add(DoubleDouble::from_f64(-1.0));
        assert!(back.to_f64().abs() < 1e-30);
        assert_eq!(DoubleDouble::from_f64(3.0).powi(4).to_f64(), 81.0);
    }
}
