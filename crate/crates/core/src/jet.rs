//! Truncated Taylor arithmetic in one real variable.
//!
//! Coefficients are normalized, `c[k] = f^(k)(x0) / k!`. Closed-form fields
//! are evaluated through these jets so that first and second derivatives of
//! every composite (cutoffs, sums, envelopes) come out exactly.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// Number of stored coefficients (derivatives `0..LEN`).
pub const LEN: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Taylor {
    pub c: [f64; LEN],
}

impl Taylor {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; LEN];
        c[0] = v;
        Self { c }
    }

    /// The independent variable expanded at `x0`.
    pub fn var(x0: f64) -> Self {
        let mut c = [0.0; LEN];
        c[0] = x0;
        c[1] = 1.0;
        Self { c }
    }

    pub fn zero() -> Self {
        Self { c: [0.0; LEN] }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `k`-th derivative at the expansion point.
    pub fn deriv(&self, k: usize) -> f64 {
        self.c[k] * factorial(k)
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.c.iter_mut().for_each(|v| *v *= s);
        self
    }

    pub fn add_const(mut self, s: f64) -> Self {
        self.c[0] += s;
        self
    }

    /// Series of the derivative. The top coefficient is lost.
    pub fn derivative(&self) -> Self {
        let mut c = [0.0; LEN];
        for k in 0..LEN - 1 {
            c[k] = (k + 1) as f64 * self.c[k + 1];
        }
        Self { c }
    }

    pub fn recip(&self) -> Self {
        let mut out = [0.0; LEN];
        let b0 = self.c[0];
        out[0] = 1.0 / b0;
        for k in 1..LEN {
            let s: f64 = (1..=k).map(|j| self.c[j] * out[k - j]).sum();
            out[k] = -s / b0;
        }
        Self { c: out }
    }

    pub fn exp(&self) -> Self {
        let mut e = [0.0; LEN];
        e[0] = self.c[0].exp();
        for k in 1..LEN {
            let s: f64 = (1..=k).map(|j| j as f64 * self.c[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Self { c: e }
    }

    /// `self^r` for a positive leading coefficient.
    pub fn powf(&self, r: f64) -> Self {
        let a0 = self.c[0];
        let mut p = [0.0; LEN];
        p[0] = a0.powf(r);
        for k in 1..LEN {
            let s: f64 = (1..=k)
                .map(|j| (r * j as f64 - (k - j) as f64) * self.c[j] * p[k - j])
                .sum();
            p[k] = s / (k as f64 * a0);
        }
        Self { c: p }
    }

    pub fn atan(&self) -> Self {
        let d = self.derivative() * (*self * *self).add_const(1.0).recip();
        let mut out = [0.0; LEN];
        out[0] = self.c[0].atan();
        for k in 1..LEN {
            out[k] = d.c[k - 1] / k as f64;
        }
        Self { c: out }
    }

    pub fn sin_cos(&self) -> (Self, Self) {
        let mut s = [0.0; LEN];
        let mut co = [0.0; LEN];
        s[0] = self.c[0].sin();
        co[0] = self.c[0].cos();
        for k in 1..LEN {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=k {
                let w = j as f64 * self.c[j];
                ss += w * co[k - j];
                cc -= w * s[k - j];
            }
            s[k] = ss / k as f64;
            co[k] = cc / k as f64;
        }
        (Self { c: s }, Self { c: co })
    }
}

impl Add for Taylor {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self.c.iter_mut().zip(o.c).for_each(|(a, b)| *a += b);
        self
    }
}

impl Sub for Taylor {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        self.c.iter_mut().zip(o.c).for_each(|(a, b)| *a -= b);
        self
    }
}

impl Neg for Taylor {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for Taylor {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut c = [0.0; LEN];
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = (0..=k).map(|j| self.c[j] * o.c[k - j]).sum();
        }
        Self { c }
    }
}

/// Complex-valued jet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CTaylor {
    pub c: [Complex64; LEN],
}

impl CTaylor {
    pub fn zero() -> Self {
        Self {
            c: [Complex64::new(0.0, 0.0); LEN],
        }
    }

    pub fn from_real(t: Taylor) -> Self {
        let mut c = [Complex64::new(0.0, 0.0); LEN];
        for (z, v) in c.iter_mut().zip(t.c) {
            z.re = v;
        }
        Self { c }
    }

    pub fn from_parts(re: Taylor, im: Taylor) -> Self {
        let mut c = [Complex64::new(0.0, 0.0); LEN];
        for (k, z) in c.iter_mut().enumerate() {
            *z = Complex64::new(re.c[k], im.c[k]);
        }
        Self { c }
    }

    /// `exp(i theta)`.
    pub fn cis(theta: Taylor) -> Self {
        let (s, c) = theta.sin_cos();
        Self::from_parts(c, s)
    }

    pub fn re(&self) -> Taylor {
        let mut c = [0.0; LEN];
        for (v, z) in c.iter_mut().zip(self.c) {
            *v = z.re;
        }
        Taylor { c }
    }

    pub fn im(&self) -> Taylor {
        let mut c = [0.0; LEN];
        for (v, z) in c.iter_mut().zip(self.c) {
            *v = z.im;
        }
        Taylor { c }
    }

    pub fn conj(mut self) -> Self {
        self.c.iter_mut().for_each(|z| *z = z.conj());
        self
    }

    pub fn scale(mut self, s: Complex64) -> Self {
        self.c.iter_mut().for_each(|z| *z *= s);
        self
    }

    pub fn mul_real(self, t: Taylor) -> Self {
        self * CTaylor::from_real(t)
    }

    pub fn norm_sqr(&self) -> Taylor {
        (*self * self.conj()).re()
    }

    pub fn derivative(&self) -> Self {
        let mut c = [Complex64::new(0.0, 0.0); LEN];
        for k in 0..LEN - 1 {
            c[k] = self.c[k + 1] * (k + 1) as f64;
        }
        Self { c }
    }

    pub fn deriv(&self, k: usize) -> Complex64 {
        self.c[k] * factorial(k)
    }
}

impl Add for CTaylor {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self.c.iter_mut().zip(o.c).for_each(|(a, b)| *a += b);
        self
    }
}

impl Sub for CTaylor {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        self.c.iter_mut().zip(o.c).for_each(|(a, b)| *a -= b);
        self
    }
}

impl Mul for CTaylor {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut c = [Complex64::new(0.0, 0.0); LEN];
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = (0..=k).map(|j| self.c[j] * o.c[k - j]).sum();
        }
        Self { c }
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}
