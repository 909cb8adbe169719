//! Exact rational arithmetic over `i128`, just enough for the symbolic
//! cancellation checks in the tangency-reduction pipeline.
//!
//! Inputs in those checks are small-height rationals and exponents stay in
//! the low tens, so reduced `i128` fractions never come close to overflow;
//! the checked operations panic loudly if an input ever pushes past that.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rat {
    num: i128,
    den: i128, // always > 0, gcd(num, den) == 1
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

impl Rat {
    pub fn new(num: i128, den: i128) -> Rat {
        assert!(den != 0, "rational with zero denominator");
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd(num, den).max(1);
        Rat {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    pub fn int(n: i128) -> Rat {
        Rat { num: n, den: 1 }
    }

    pub fn zero() -> Rat {
        Rat::int(0)
    }

    pub fn one() -> Rat {
        Rat::int(1)
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn pow(self, exp: u32) -> Rat {
        let mut acc = Rat::one();
        for _ in 0..exp {
            acc = acc * self;
        }
        acc
    }

    pub fn recip(self) -> Rat {
        assert!(self.num != 0, "reciprocal of zero");
        Rat::new(self.den, self.num)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Add for Rat {
    type Output = Rat;
    fn add(self, rhs: Rat) -> Rat {
        let num = self
            .num
            .checked_mul(rhs.den)
            .and_then(|a| rhs.num.checked_mul(self.den).and_then(|b| a.checked_add(b)))
            .expect("rational overflow in addition");
        let den = self.den.checked_mul(rhs.den).expect("rational overflow");
        Rat::new(num, den)
    }
}

impl Sub for Rat {
    type Output = Rat;
    fn sub(self, rhs: Rat) -> Rat {
        self + (-rhs)
    }
}

impl Mul for Rat {
    type Output = Rat;
    fn mul(self, rhs: Rat) -> Rat {
        // cross-reduce first to keep intermediates small
        let g1 = gcd(self.num, rhs.den).max(1);
        let g2 = gcd(rhs.num, self.den).max(1);
        let num = (self.num / g1)
            .checked_mul(rhs.num / g2)
            .expect("rational overflow in multiplication");
        let den = (self.den / g2)
            .checked_mul(rhs.den / g1)
            .expect("rational overflow in multiplication");
        Rat::new(num, den)
    }
}

impl Div for Rat {
    type Output = Rat;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Rat) -> Rat {
        self * rhs.recip()
    }
}

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat {
            num: -self.num,
            den: self.den,
        }
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// 3x3 matrix over exact rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RatMat3(pub [[Rat; 3]; 3]);

impl Mul for RatMat3 {
    type Output = RatMat3;
    fn mul(self, rhs: RatMat3) -> RatMat3 {
        let mut out = RatMat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = Rat::zero();
                for (k, rhs_row) in rhs.0.iter().enumerate() {
                    acc = acc + self.0[i][k] * rhs_row[j];
                }
                out.0[i][j] = acc;
            }
        }
        out
    }
}

impl RatMat3 {
    pub fn zero() -> Self {
        RatMat3([[Rat::zero(); 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.0[i][i] = Rat::one();
        }
        m
    }

    pub fn diag(a: Rat, b: Rat, c: Rat) -> Self {
        let mut m = Self::zero();
        m.0[0][0] = a;
        m.0[1][1] = b;
        m.0[2][2] = c;
        m
    }

    pub fn pow(self, exp: u32) -> RatMat3 {
        let mut acc = RatMat3::identity();
        for _ in 0..exp {
            acc = acc * self;
        }
        acc
    }

    pub fn to_f64(self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.0[i][j].to_f64();
            }
        }
        out
    }
}
