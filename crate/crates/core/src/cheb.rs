//! Piecewise Chebyshev interpolants with exact antiderivatives.
//!
//! The warp function and the embedding height are integrals of `cos θ` and
//! `sin θ`. Both integrands are fitted panel by panel, the series are
//! integrated term by term, and the panels are chained so that the
//! antiderivative is continuous.

const DEGREE: usize = 32;
const TAIL_TOL: f64 = 1e-14;
const MIN_WIDTH: f64 = 1e-4;

/// Chebyshev series on `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct ChebSeries {
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>,
}

impl ChebSeries {
    pub fn fit<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, degree: usize) -> Self {
        let n = degree + 1;
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let values: Vec<f64> = (0..n)
            .map(|j| {
                let x = (std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos();
                f(mid + half * x)
            })
            .collect();
        let mut coeffs = vec![0.0; n];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, v) in values.iter().enumerate() {
                acc += v * (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / n as f64).cos();
            }
            *c = 2.0 * acc / n as f64;
        }
        coeffs[0] *= 0.5;
        Self { lo, hi, coeffs }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let x = (2.0 * t - self.lo - self.hi) / (self.hi - self.lo);
        clenshaw(&self.coeffs, x)
    }

    /// Size of the trailing coefficients relative to the leading scale.
    fn tail(&self) -> f64 {
        let n = self.coeffs.len();
        let scale = self.coeffs.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
        self.coeffs[n - 3..].iter().fold(0.0_f64, |m, c| m.max(c.abs())) / scale
    }

    /// Antiderivative vanishing at `lo`.
    pub fn integral(&self) -> Self {
        let n = self.coeffs.len();
        let c = &self.coeffs;
        let half = 0.5 * (self.hi - self.lo);
        let get = |k: usize| if k < n { c[k] } else { 0.0 };
        let mut out = vec![0.0; n + 1];
        // c[0] is stored halved, so the k = 1 term uses 2·c[0].
        out[1] = half * (2.0 * get(0) - get(2)) / 2.0;
        for (k, o) in out.iter_mut().enumerate().skip(2) {
            *o = half * (get(k - 1) - get(k + 1)) / (2.0 * k as f64);
        }
        // Value at x = -1 is sum_k out[k] (-1)^k.
        let at_lo: f64 = out
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, v)| if k % 2 == 0 { *v } else { -*v })
            .sum();
        out[0] = -at_lo;
        Self {
            lo: self.lo,
            hi: self.hi,
            coeffs: out,
        }
    }

    fn shift(&mut self, offset: f64) {
        self.coeffs[0] += offset;
    }
}

fn clenshaw(coeffs: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + coeffs[0]
}

/// Continuous piecewise antiderivative `F(t) = ∫_lo^t g`.
#[derive(Clone, Debug)]
pub struct PiecewiseIntegral {
    breaks: Vec<f64>,
    panels: Vec<ChebSeries>,
}

impl PiecewiseIntegral {
    pub fn build<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64) -> Self {
        let mut intervals = Vec::new();
        split_adaptive(&g, lo, hi, &mut intervals);
        let mut breaks = Vec::with_capacity(intervals.len() + 1);
        let mut panels = Vec::with_capacity(intervals.len());
        let mut acc = 0.0;
        breaks.push(lo);
        for series in intervals {
            let mut integral = series.integral();
            integral.shift(acc);
            acc = integral.eval(series.hi);
            breaks.push(series.hi);
            panels.push(integral);
        }
        Self { breaks, panels }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let idx = match self
            .breaks
            .binary_search_by(|b| b.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(self.panels.len() - 1),
            Err(i) => i.saturating_sub(1).min(self.panels.len() - 1),
        };
        self.panels[idx].eval(t)
    }

    pub fn total(&self) -> f64 {
        self.eval(*self.breaks.last().expect("non-empty"))
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }
}

fn split_adaptive<F: Fn(f64) -> f64>(g: &F, lo: f64, hi: f64, out: &mut Vec<ChebSeries>) {
    let series = ChebSeries::fit(g, lo, hi, DEGREE);
    if series.tail() < TAIL_TOL || hi - lo < MIN_WIDTH {
        out.push(series);
    } else {
        let mid = 0.5 * (lo + hi);
        split_adaptive(g, lo, mid, out);
        split_adaptive(g, mid, hi, out);
    }
}

/// `∫_lo^hi g` through the adaptive Chebyshev panels.
pub fn integrate<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64) -> f64 {
    PiecewiseIntegral::build(g, lo, hi).total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_of_cos_is_sin() {
        let table = PiecewiseIntegral::build(f64::cos, 0.0, 3.0);
        for i in 0..=300 {
            let t = i as f64 * 0.01;
            assert!((table.eval(t) - t.sin()).abs() < 5e-14, "t = {t}");
        }
    }

    #[test]
    fn steep_integrand_splits_panels() {
        let g = |t: f64| (-40.0 * t).exp();
        let table = PiecewiseIntegral::build(g, 0.0, 2.0);
        assert!(table.panel_count() > 1);
        let exact = (1.0 - (-80.0_f64).exp()) / 40.0;
        assert!((table.total() - exact).abs() < 1e-14);
    }

    #[test]
    fn series_reproduces_polynomial() {
        let s = ChebSeries::fit(|t| 3.0 * t * t - t + 2.0, -1.0, 4.0, 8);
        assert!((s.eval(2.5) - (3.0 * 6.25 - 2.5 + 2.0)).abs() < 1e-12);
    }
}
