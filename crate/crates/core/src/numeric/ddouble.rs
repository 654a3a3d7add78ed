//! Double-double arithmetic (~31 significant digits) used as the
//! high-precision retry path when a sampled determinant ratio falls outside
//! its admissible interval.

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct DDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl DDouble {
    pub const ZERO: DDouble = DDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DDouble = DDouble { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        DDouble { hi: x, lo: 0.0 }
    }

    pub fn to_f64(&self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(&self, o: &DDouble) -> DDouble {
        let (s1, e1) = two_sum(self.hi, o.hi);
        let e = e1 + self.lo + o.lo;
        let (hi, lo) = quick_two_sum(s1, e);
        DDouble { hi, lo }
    }

    pub fn sub(&self, o: &DDouble) -> DDouble {
        self.add(&DDouble { hi: -o.hi, lo: -o.lo })
    }

    pub fn mul(&self, o: &DDouble) -> DDouble {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p, e);
        DDouble { hi, lo }
    }

    pub fn div(&self, o: &DDouble) -> DDouble {
        let q1 = self.hi / o.hi;
        let r = self.sub(&o.mul(&DDouble::from_f64(q1)));
        let q2 = r.hi / o.hi;
        let r2 = r.sub(&o.mul(&DDouble::from_f64(q2)));
        let q3 = r2.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DDouble { hi, lo }.add(&DDouble::from_f64(q3))
    }

    pub fn abs(&self) -> DDouble {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            DDouble { hi: -self.hi, lo: -self.lo }
        } else {
            *self
        }
    }

    pub fn is_zero(&self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }
}

/// Double-double fraction with a wide binary exponent: the high-precision
/// analog of `Scaled`, for products whose exponents overflow f64 range.
#[derive(Clone, Copy, Debug)]
pub struct ScaledDD {
    frac: DDouble, // |frac.hi| in [1,2) or zero
    exp: i64,
}

impl ScaledDD {
    pub const ZERO: ScaledDD = ScaledDD { frac: DDouble::ZERO, exp: 0 };
    pub const ONE: ScaledDD = ScaledDD { frac: DDouble::ONE, exp: 0 };

    pub fn from_f64(x: f64) -> Self {
        ScaledDD { frac: DDouble::from_f64(x), exp: 0 }.normalized()
    }

    pub fn from_scaled(s: crate::numeric::Scaled) -> Self {
        let ln = s.ln_abs();
        if ln == f64::NEG_INFINITY {
            return ScaledDD::ZERO;
        }
        // reconstruct exactly from the f64 fraction
        let f = s.to_f64();
        if f != 0.0 && f.is_finite() {
            return ScaledDD::from_f64(f);
        }
        // out of f64 range: split the exponent
        let e2 = (ln / std::f64::consts::LN_2).floor();
        let rem = (ln - e2 * std::f64::consts::LN_2).exp();
        ScaledDD { frac: DDouble::from_f64(rem * s.signum()), exp: e2 as i64 }.normalized()
    }

    pub fn is_zero(&self) -> bool {
        self.frac.is_zero()
    }

    fn normalized(mut self) -> Self {
        if self.frac.is_zero() {
            return ScaledDD::ZERO;
        }
        let mag = self.frac.hi.abs();
        if !(1.0..2.0).contains(&mag) {
            let e = mag.log2().floor() as i64;
            let scale = (-(e as f64)).exp2();
            self.frac = self.frac.mul(&DDouble::from_f64(scale));
            self.exp += e;
            // one more pass for borderline rounding
            let m2 = self.frac.hi.abs();
            if !(1.0..2.0).contains(&m2) {
                let e2 = m2.log2().floor() as i64;
                self.frac = self.frac.mul(&DDouble::from_f64((-(e2 as f64)).exp2()));
                self.exp += e2;
            }
        }
        self
    }

    pub fn mul(&self, o: &ScaledDD) -> ScaledDD {
        if self.is_zero() || o.is_zero() {
            return ScaledDD::ZERO;
        }
        ScaledDD { frac: self.frac.mul(&o.frac), exp: self.exp + o.exp }.normalized()
    }

    pub fn div(&self, o: &ScaledDD) -> ScaledDD {
        assert!(!o.is_zero());
        if self.is_zero() {
            return ScaledDD::ZERO;
        }
        ScaledDD { frac: self.frac.div(&o.frac), exp: self.exp - o.exp }.normalized()
    }

    pub fn add(&self, o: &ScaledDD) -> ScaledDD {
        if self.is_zero() {
            return *o;
        }
        if o.is_zero() {
            return *self;
        }
        let (hi, lo) = if self.exp >= o.exp { (self, o) } else { (o, self) };
        let shift = hi.exp - lo.exp;
        if shift > 220 {
            return *hi;
        }
        let scale = DDouble::from_f64((-(shift as f64)).exp2());
        let f = hi.frac.add(&lo.frac.mul(&scale));
        ScaledDD { frac: f, exp: hi.exp }.normalized()
    }

    pub fn sub(&self, o: &ScaledDD) -> ScaledDD {
        self.add(&ScaledDD { frac: DDouble { hi: -o.frac.hi, lo: -o.frac.lo }, exp: o.exp })
    }

    /// log2 of |x|; -inf for zero.
    pub fn log2_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.frac.hi.abs().log2() + self.exp as f64
        }
    }

    pub fn ratio_f64(&self, o: &ScaledDD) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let e = self.exp - o.exp;
        if e.abs() > 1000 {
            return if e > 0 {
                f64::INFINITY * self.frac.hi.signum() * o.frac.hi.signum()
            } else {
                0.0
            };
        }
        self.frac.div(&o.frac).to_f64() * (e as f64).exp2()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_extra_digits() {
        // (1 + 2^-60) - 1 is invisible in f64 but not in DDouble.
        let one = DDouble::ONE;
        let tiny = DDouble::from_f64((-60f64).exp2());
        let s = one.add(&tiny).sub(&one);
        assert_eq!(s.to_f64(), (-60f64).exp2());
    }

    #[test]
    fn division_accuracy() {
        let a = DDouble::from_f64(1.0);
        let b = DDouble::from_f64(3.0);
        let q = a.div(&b);
        let back = q.mul(&b).sub(&a);
        assert!(back.to_f64().abs() < 1e-31);
    }
}
