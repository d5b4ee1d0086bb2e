//! Shape-preserving monotone cubic interpolation (Fritsch–Carlson slopes).
//!
//! Strictly increasing data produces a strictly increasing interpolant, the
//! property the ladder's inversion relies on.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpError {
    #[error("need at least 2 knots with equal x/y lengths")]
    LengthMismatch,
    #[error("x must be strictly increasing and finite")]
    BadAbscissas,
    #[error("y must be finite")]
    BadOrdinates,
    #[error("query x = {x} outside [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
}

/// Piecewise cubic Hermite interpolant with monotonicity-preserving slopes.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>, // knot slopes
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, InterpError> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(InterpError::LengthMismatch);
        }
        if x.iter().any(|v| !v.is_finite()) || x.windows(2).any(|w| w[0] >= w[1]) {
            return Err(InterpError::BadAbscissas);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(InterpError::BadOrdinates);
        }

        let mut h = Vec::with_capacity(n - 1);
        let mut delta = Vec::with_capacity(n - 1);
        for (xw, yw) in x.windows(2).zip(y.windows(2)) {
            h.push(xw[1] - xw[0]);
            delta.push((yw[1] - yw[0]) / (xw[1] - xw[0]));
        }

        let mut d = vec![0.0; n];
        for k in 1..n - 1 {
            let (s1, s2) = (delta[k - 1], delta[k]);
            if s1 == 0.0 || s2 == 0.0 || s1.signum() != s2.signum() {
                d[k] = 0.0;
            } else {
                let (h1, h2) = (h[k - 1], h[k]);
                let w1 = 2.0 * h2 + h1;
                let w2 = h2 + 2.0 * h1;
                d[k] = (w1 + w2) / (w1 / s1 + w2 / s2);
            }
        }
        d[0] = endpoint_slope(h[0], h.get(1).copied(), delta[0], delta.get(1).copied());
        d[n - 1] = endpoint_slope(
            h[n - 2],
            (n >= 3).then(|| h[n - 3]),
            delta[n - 2],
            (n >= 3).then(|| delta[n - 3]),
        );

        Ok(MonotoneCubic { x, y, d })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }

    fn cell(&self, xq: f64) -> usize {
        match self.x.binary_search_by(|v| v.partial_cmp(&xq).unwrap()) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        }
    }

    pub fn eval(&self, xq: f64) -> Result<f64, InterpError> {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&xq) {
            return Err(InterpError::OutOfDomain { x: xq, lo, hi });
        }
        let k = self.cell(xq);
        let h = self.x[k + 1] - self.x[k];
        let t = (xq - self.x[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Ok(h00 * self.y[k] + h * h10 * self.d[k] + h01 * self.y[k + 1] + h * h11 * self.d[k + 1])
    }

    /// Invert a strictly monotone interpolant: find `x` with `eval(x) = yq`.
    pub fn invert(&self, yq: f64) -> Result<f64, InterpError> {
        let n = self.y.len();
        let (ylo, yhi) = (self.y[0], self.y[n - 1]);
        if !(ylo..=yhi).contains(&yq) {
            return Err(InterpError::OutOfDomain { x: yq, lo: ylo, hi: yhi });
        }
        let k = self.y.partition_point(|&v| v < yq).saturating_sub(1).min(n - 2);
        let (mut a, mut b) = (self.x[k], self.x[k + 1]);
        if yq == self.y[k] {
            return Ok(a);
        }
        if yq == self.y[k + 1] {
            return Ok(b);
        }
        // Bisection inside the cell; the cubic is monotone there.
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if self.eval(m)? < yq {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(0.5 * (a + b))
    }
}

fn endpoint_slope(h0: f64, h1: Option<f64>, s0: f64, s1: Option<f64>) -> f64 {
    let (h1, s1) = match (h1, s1) {
        (Some(h1), Some(s1)) => (h1, s1),
        _ => return s0,
    };
    let mut d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d.signum() != s0.signum() {
        d = 0.0;
    } else if s0.signum() != s1.signum() && d.abs() > 3.0 * s0.abs() {
        d = 3.0 * s0;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_knots() {
        let x = vec![0.0, 1.0, 2.5, 4.0];
        let y = vec![1.0, 2.0, 2.2, 5.0];
        let p = MonotoneCubic::new(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(p.eval(*xi).unwrap(), *yi);
        }
    }

    #[test]
    fn strictly_increasing_data_gives_increasing_interpolant() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.37).collect();
        let y: Vec<f64> = x.iter().map(|&v| v + (v * 0.9).sin() * 0.4).collect();
        let p = MonotoneCubic::new(x, y).unwrap();
        let (lo, hi) = p.domain();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=3000 {
            let xq = lo + (hi - lo) * i as f64 / 3000.0;
            let v = p.eval(xq).unwrap();
            assert!(v >= prev, "not monotone at {xq}");
            prev = v;
        }
    }

    #[test]
    fn invert_round_trip() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        let y: Vec<f64> = x.iter().map(|&v| v * v * 0.1 + 0.5 * v + 1.0).collect();
        let p = MonotoneCubic::new(x, y).unwrap();
        for i in 0..40 {
            let yq = 1.1 + i as f64 * 0.3;
            let xq = p.invert(yq).unwrap();
            assert!((p.eval(xq).unwrap() - yq).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(MonotoneCubic::new(vec![0.0], vec![1.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
    }
}
