//! Quadrature rules on triangles and edges.
//!
//! Triangle rules are conical products of Gauss–Legendre rules (a degree-`d`
//! rule uses `ceil((d+2)/2)^2` points), so any requested exactness degree up
//! to [`MAX_TRIANGLE_DEGREE`] is available with strictly positive weights.
//! Edge rules are plain Gauss–Legendre on the unit interval.

use crate::PlateError;

/// Highest polynomial degree supported by [`triangle_quadrature`].
pub const MAX_TRIANGLE_DEGREE: usize = 40;
/// Highest polynomial degree supported by [`edge_quadrature`].
pub const MAX_EDGE_DEGREE: usize = 40;

/// Integration rule on the reference triangle `{x,y >= 0, x+y <= 1}`.
///
/// Weights sum to the reference area 1/2; [`TriangleQuadrature::physical`]
/// maps the rule onto a physical triangle with weights summing to its area.
#[derive(Debug, Clone)]
pub struct TriangleQuadrature {
    /// Reference coordinates `(xi, eta)` of the nodes.
    pub points: Vec<[f64; 2]>,
    /// Reference weights, all positive.
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly.
    pub degree: usize,
}

/// Gauss rule on the unit interval `[0, 1]`.
#[derive(Debug, Clone)]
pub struct EdgeQuadrature {
    /// Parameter values in `(0, 1)`.
    pub points: Vec<f64>,
    /// Weights summing to 1.
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly.
    pub degree: usize,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Rule exact for all bivariate polynomials of total degree `<= degree` on
/// the reference triangle.
pub fn triangle_quadrature(degree: usize) -> Result<TriangleQuadrature, PlateError> {
    if degree == 0 || degree > MAX_TRIANGLE_DEGREE {
        return Err(PlateError::UnsupportedQuadratureDegree(degree));
    }
    // Collapsed square: x = s, y = t (1 - s), Jacobian (1 - s). The s-integrand
    // picks up one extra degree, hence ceil((degree + 2) / 2) points per axis.
    let m = (degree + 2).div_ceil(2);
    let (gx, gw) = gauss_legendre(m);
    // shift to [0, 1]
    let s: Vec<f64> = gx.iter().map(|x| 0.5 * (x + 1.0)).collect();
    let w: Vec<f64> = gw.iter().map(|w| 0.5 * w).collect();
    let mut points = Vec::with_capacity(m * m);
    let mut weights = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            points.push([s[i], s[j] * (1.0 - s[i])]);
            weights.push(w[i] * w[j] * (1.0 - s[i]));
        }
    }
    Ok(TriangleQuadrature {
        points,
        weights,
        degree,
    })
}

/// Rule exact for univariate polynomials of degree `<= degree` on `[0, 1]`.
pub fn edge_quadrature(degree: usize) -> Result<EdgeQuadrature, PlateError> {
    if degree == 0 || degree > MAX_EDGE_DEGREE {
        return Err(PlateError::UnsupportedQuadratureDegree(degree));
    }
    let n = (degree + 1).div_ceil(2);
    let (gx, gw) = gauss_legendre(n);
    Ok(EdgeQuadrature {
        points: gx.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        weights: gw.iter().map(|w| 0.5 * w).collect(),
        degree,
    })
}

impl TriangleQuadrature {
    /// Nodes and weights on the triangle `(v0, v1, v2)`; weights sum to its
    /// area.
    pub fn physical(&self, v: &[[f64; 2]; 3]) -> Vec<([f64; 2], f64)> {
        let jac = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1])
            - (v[1][1] - v[0][1]) * (v[2][0] - v[0][0]);
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| {
                let x = v[0][0] + p[0] * (v[1][0] - v[0][0]) + p[1] * (v[2][0] - v[0][0]);
                let y = v[0][1] + p[0] * (v[1][1] - v[0][1]) + p[1] * (v[2][1] - v[0][1]);
                ([x, y], w * jac)
            })
            .collect()
    }
}

impl EdgeQuadrature {
    /// Nodes and weights on the segment from `a` to `b`; weights sum to its
    /// length.
    pub fn physical(&self, a: [f64; 2], b: [f64; 2]) -> Vec<([f64; 2], f64)> {
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| {
                (
                    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
                    w * len,
                )
            })
            .collect()
    }
}
