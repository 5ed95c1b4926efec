//! Double-well potentials split as `F(r) = F1(r) - (theta / 2) r^2` with `F1` convex.

#[derive(Debug, Clone, Copy)]
pub struct Potential {
    pub name: &'static str,
    pub f1: fn(f64) -> f64,
    pub df1: fn(f64) -> f64,
    pub d2f1: fn(f64) -> f64,
    /// Coefficient of the concave quadratic part.
    pub theta: f64,
    /// Growth exponent of `F1'`.
    pub q: f64,
    /// Lower bound of `F`.
    pub lower_bound: f64,
}

impl Potential {
    /// `F(z) = (1 - z^2)^2 / 4 = (1 + z^4) / 4 - z^2 / 2`.
    pub fn quartic() -> Self {
        Potential {
            name: "quartic",
            f1: |u| 0.25 * (1.0 + u * u * u * u),
            df1: |u| u * u * u,
            d2f1: |u| 3.0 * u * u,
            theta: 1.0,
            q: 3.0,
            lower_bound: 0.0,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "quartic" => Some(Potential::quartic()),
            _ => None,
        }
    }

    /// Full potential `F`.
    pub fn value(&self, u: f64) -> f64 {
        (self.f1)(u) - 0.5 * self.theta * u * u
    }

    /// `F'`.
    pub fn derivative(&self, u: f64) -> f64 {
        (self.df1)(u) - self.theta * u
    }

    /// Checks convexity of `F1` and the growth bound on a sample grid over
    /// `[-range, range]`. Returns the first offending sample, if any.
    pub fn check_assumptions(&self, range: f64, samples: usize) -> Option<f64> {
        let growth = self.growth_constant(range, samples);
        (0..samples)
            .map(|i| -range + 2.0 * range * i as f64 / (samples - 1) as f64)
            .find(|&r| {
                (self.d2f1)(r) < 0.0
                    || (self.df1)(r).abs() > growth * r.abs().powf(self.q) + growth
                    || self.value(r) < self.lower_bound
            })
    }

    fn growth_constant(&self, range: f64, samples: usize) -> f64 {
        (0..samples)
            .map(|i| -range + 2.0 * range * i as f64 / (samples - 1) as f64)
            .map(|r| (self.df1)(r).abs() / (r.abs().powf(self.q) + 1.0))
            .fold(0.0, f64::max)
    }
}

impl Default for Potential {
    fn default() -> Self {
        Potential::quartic()
    }
}
