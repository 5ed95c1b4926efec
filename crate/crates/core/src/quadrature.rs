//! Quadrature on triangles in barycentric coordinates.

use crate::error::{Error, Result};

/// Points are barycentric triples; weights sum to one and are scaled by the
/// element area at the point of use.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integral of `f(x, y)` over the reference triangle `(0,0), (1,0), (0,1)`.
    pub fn integrate_reference(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        0.5 * self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p[1], p[2]))
            .sum::<f64>()
    }
}

/// Rule exact for polynomials up to `degree`. Supported: 1, 2, 4 and 10.
pub fn quadrature_rule(degree: usize) -> Result<QuadratureRule> {
    match degree {
        1 => Ok(QuadratureRule {
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![1.0],
            degree,
        }),
        2 => {
            let (a, b) = (1.0 / 6.0, 2.0 / 3.0);
            Ok(QuadratureRule {
                points: vec![[b, a, a], [a, b, a], [a, a, b]],
                weights: vec![1.0 / 3.0; 3],
                degree,
            })
        }
        4 => Ok(dunavant_4()),
        10 => Ok(collapsed_gauss(6)),
        d => Err(Error::UnsupportedDegree(d)),
    }
}

/// Symmetric six-point rule, exact to degree 4, with nodes and weights in
/// closed form.
fn dunavant_4() -> QuadratureRule {
    let s10 = 10f64.sqrt();
    let root = (38.0 - 44.0 * (0.4f64).sqrt()).sqrt();
    let a1 = (8.0 - s10 + root) / 18.0;
    let a2 = (8.0 - s10 - root) / 18.0;
    let wroot = (213125.0 - 53320.0 * s10).sqrt();
    let w1 = (620.0 + wroot) / 3720.0;
    let w2 = (620.0 - wroot) / 3720.0;
    let mut points = Vec::with_capacity(6);
    let mut weights = Vec::with_capacity(6);
    for (a, w) in [(a1, w1), (a2, w2)] {
        let b = 1.0 - 2.0 * a;
        points.extend([[b, a, a], [a, b, a], [a, a, b]]);
        weights.extend([w; 3]);
    }
    QuadratureRule {
        points,
        weights,
        degree: 4,
    }
}

/// Duffy-collapsed tensor Gauss-Legendre rule with `n` points per direction;
/// exact to degree `2n - 2`. Not symmetric.
fn collapsed_gauss(n: usize) -> QuadratureRule {
    let (nodes, gw) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&u, &wu) in nodes.iter().zip(&gw) {
        for (&v, &wv) in nodes.iter().zip(&gw) {
            let x = u;
            let y = v * (1.0 - u);
            points.push([1.0 - x - y, x, y]);
            weights.push(2.0 * wu * wv * (1.0 - u));
        }
    }
    QuadratureRule {
        points,
        weights,
        degree: 2 * n - 2,
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
