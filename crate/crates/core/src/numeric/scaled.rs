//! Extended-range floating point: an `f64` mantissa paired with a wide binary
//! exponent. Products of thousands of lattice factors overflow `f64` long
//! before they lose precision, so determinant pipelines run on this type.

/// Value `frac * 2^exp` with `|frac| in [1, 2)` or exactly zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    frac: f64,
    exp: i64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled { frac: 0.0, exp: 0 };
    pub const ONE: Scaled = Scaled { frac: 1.0, exp: 0 };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            return Scaled::ZERO;
        }
        let (m, e) = frexp(x);
        // frexp yields |m| in [0.5, 1); shift to [1, 2).
        Scaled { frac: m * 2.0, exp: e as i64 - 1 }
    }

    /// Construct from `sign * exp(log_mag)` given in natural log.
    pub fn from_ln(ln_mag: f64, sign: f64) -> Self {
        if sign == 0.0 || ln_mag == f64::NEG_INFINITY {
            return Scaled::ZERO;
        }
        let e2 = ln_mag / std::f64::consts::LN_2;
        let e_int = e2.floor();
        let frac = (e2 - e_int).exp2();
        Scaled { frac: frac * sign.signum(), exp: e_int as i64 }.normalized()
    }

    pub fn is_zero(&self) -> bool {
        self.frac == 0.0
    }

    pub fn signum(&self) -> f64 {
        self.frac.signum() * if self.frac == 0.0 { 0.0 } else { 1.0 }
    }

    /// Natural log of |x|; `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.frac.abs().ln() + self.exp as f64 * std::f64::consts::LN_2
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else if self.exp > 1023 {
            f64::INFINITY * self.frac.signum()
        } else if self.exp < -1070 {
            0.0
        } else {
            self.frac * (self.exp as f64).exp2()
        }
    }

    fn normalized(mut self) -> Self {
        if self.frac == 0.0 {
            return Scaled::ZERO;
        }
        if !(1.0..2.0).contains(&self.frac.abs()) {
            let (m, e) = frexp(self.frac);
            self.frac = m * 2.0;
            self.exp += e as i64 - 1;
        }
        self
    }

    pub fn abs(&self) -> Self {
        Scaled { frac: self.frac.abs(), exp: self.exp }
    }

    pub fn neg(&self) -> Self {
        Scaled { frac: -self.frac, exp: self.exp }
    }

    pub fn mul(&self, o: &Scaled) -> Self {
        if self.is_zero() || o.is_zero() {
            return Scaled::ZERO;
        }
        Scaled { frac: self.frac * o.frac, exp: self.exp + o.exp }.normalized()
    }

    pub fn div(&self, o: &Scaled) -> Self {
        assert!(!o.is_zero(), "Scaled division by zero");
        if self.is_zero() {
            return Scaled::ZERO;
        }
        Scaled { frac: self.frac / o.frac, exp: self.exp - o.exp }.normalized()
    }

    pub fn add(&self, o: &Scaled) -> Self {
        if self.is_zero() {
            return *o;
        }
        if o.is_zero() {
            return *self;
        }
        let (hi, lo) = if self.exp >= o.exp { (self, o) } else { (o, self) };
        let shift = hi.exp - lo.exp;
        if shift > 128 {
            return *hi;
        }
        let f = hi.frac + lo.frac * (-(shift as f64)).exp2();
        Scaled { frac: f, exp: hi.exp }.normalized()
    }

    pub fn sub(&self, o: &Scaled) -> Self {
        self.add(&o.neg())
    }

    /// Ratio as plain f64 (safe when the two magnitudes are comparable).
    pub fn ratio_f64(&self, o: &Scaled) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let e = self.exp - o.exp;
        if e.abs() > 1000 {
            return if e > 0 { f64::INFINITY * self.frac.signum() * o.frac.signum() } else { 0.0 };
        }
        self.frac / o.frac * (e as f64).exp2()
    }
}

fn frexp(x: f64) -> (f64, i32) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let bits = x.to_bits();
    let exp_field = ((bits >> 52) & 0x7ff) as i32;
    if exp_field == 0 {
        // subnormal: renormalize through multiplication
        let big = x * (64f64).exp2();
        let (m, e) = frexp(big);
        return (m, e - 64);
    }
    let e = exp_field - 1022;
    let mantissa_bits = (bits & !(0x7ffu64 << 52)) | (1022u64 << 52);
    (f64::from_bits(mantissa_bits), e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for &x in &[1.0, -3.5, 0.125, 1e300, -1e-300, 7.25e-17] {
            let s = Scaled::from_f64(x);
            assert!((s.to_f64() - x).abs() <= x.abs() * 1e-15);
        }
    }

    #[test]
    fn arithmetic_beyond_f64_range() {
        // (1e200)^4 / (1e200)^3 / 1e200 == 1
        let big = Scaled::from_f64(1e200);
        let p4 = big.mul(&big).mul(&big).mul(&big);
        let p3 = big.mul(&big).mul(&big);
        let r = p4.div(&p3).div(&big);
        assert!((r.to_f64() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn add_sub_align() {
        let a = Scaled::from_f64(3.0);
        let b = Scaled::from_f64(-1.5);
        assert!((a.add(&b).to_f64() - 1.5).abs() < 1e-15);
        assert!((a.sub(&b).to_f64() - 4.5).abs() < 1e-15);
        let tiny = Scaled::from_f64(1e-300);
        assert!((a.add(&tiny).to_f64() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn from_ln_matches() {
        let s = Scaled::from_ln(700.0, -1.0);
        assert!((s.ln_abs() - 700.0).abs() < 1e-10);
        assert!(s.signum() < 0.0);
    }
}
