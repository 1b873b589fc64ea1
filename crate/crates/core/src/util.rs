//! Small numeric helpers: signed log-magnitude amplitudes and determinants.

use nalgebra::DMatrix;

/// A signed amplitude carried as `(sign, ln|value|)`.
///
/// `sign == 0` encodes an exact zero; `ln` is meaningless in that case.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignLog {
    pub sign: i8,
    pub ln: f64,
}

impl SignLog {
    pub const ZERO: SignLog = SignLog {
        sign: 0,
        ln: f64::NEG_INFINITY,
    };

    pub fn new(sign: i8, ln: f64) -> Self {
        SignLog { sign, ln }
    }

    /// Build from a plain value.
    pub fn from_value(v: f64) -> Self {
        if v == 0.0 {
            SignLog::ZERO
        } else {
            SignLog {
                sign: if v > 0.0 { 1 } else { -1 },
                ln: v.abs().ln(),
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Recover the plain value; may under/overflow for extreme exponents.
    pub fn value(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            self.sign as f64 * self.ln.exp()
        }
    }

    /// Product of two signed-log amplitudes.
    pub fn mul(self, other: SignLog) -> SignLog {
        if self.sign == 0 || other.sign == 0 {
            SignLog::ZERO
        } else {
            SignLog {
                sign: self.sign * other.sign,
                ln: self.ln + other.ln,
            }
        }
    }

    /// `self / other` as a plain ratio; caller guarantees `other` is nonzero.
    pub fn ratio_to(self, other: SignLog) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            (self.sign * other.sign) as f64 * (self.ln - other.ln).exp()
        }
    }
}

/// Determinant of a square matrix as `(sign, ln|det|)` via pivoted LU.
pub fn det_sign_log(a: DMatrix<f64>) -> SignLog {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    if n == 0 {
        return SignLog::new(1, 0.0);
    }
    let lu = a.lu();
    // Each recorded permutation is one row transposition.
    let mut sign: i8 = if lu.p().len() % 2 == 0 { 1 } else { -1 };
    let mut ln = 0.0;
    let u = lu.u();
    for i in 0..n {
        let d = u[(i, i)];
        if d == 0.0 {
            return SignLog::ZERO;
        }
        if d < 0.0 {
            sign = -sign;
        }
        ln += d.abs().ln();
    }
    SignLog { sign, ln }
}

/// Binomial coefficient in u128, saturating is not needed at the sizes used here.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}
