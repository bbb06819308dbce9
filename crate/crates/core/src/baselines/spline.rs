use crate::error::{Error, Result};

/// Natural cubic spline (zero second derivative at both ends) through knots
/// with strictly increasing abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::InvalidArgument(format!("spline needs >= 2 knots with matching ordinates, got {n} and {}", ys.len())));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("spline abscissae must increase strictly".into()));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior equations
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            let mut upper = vec![0.0; k];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                diag[i - 1] = 2.0 * (h0 + h1);
                upper[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            }
            for i in 1..k {
                let lower = xs[i + 1] - xs[i];
                let f = lower / diag[i - 1];
                diag[i] -= f * upper[i - 1];
                rhs[i] -= f * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(NaturalSpline { xs: xs.to_vec(), ys: ys.to_vec(), m })
    }

    /// Value at `x`; outside the knot range the end cubic is extended.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_knots_and_lines() {
        let xs = [0.0, 1.0, 2.5, 4.0, 7.0];
        let ys = [1.0, -2.0, 0.5, 3.0, 3.0];
        let s = NaturalSpline::new(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(ys) {
            assert!((s.eval(*x) - y).abs() < 1e-12);
        }
        let line = NaturalSpline::new(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]).unwrap();
        assert!((line.eval(1.7) - 4.4).abs() < 1e-12);
        let two = NaturalSpline::new(&[0.0, 2.0], &[0.0, 4.0]).unwrap();
        assert_eq!(two.eval(0.5), 1.0);
    }

    #[test]
    fn second_derivative_vanishes_at_ends() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let s = NaturalSpline::new(&xs, &[0.0, 1.0, 0.0, 1.0]).unwrap();
        let h = 1e-4;
        for x in [h, 3.0 - h] {
            let d2 = (s.eval(x + h) - 2.0 * s.eval(x) + s.eval(x - h)) / (h * h);
            assert!(d2.abs() < 1e-2, "{d2}");
        }
        assert!(NaturalSpline::new(&[0.0, 0.0], &[1.0, 2.0]).is_err());
    }
}
