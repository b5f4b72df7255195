//! Quadrature on segments, triangles and star-shaped polygons.
//!
//! Triangles use collapsed (Duffy) tensor Gauss-Legendre rules, which have
//! positive weights and reach any requested exactness. Polygons are split
//! into the fan of triangles joining the centroid to each edge.

use std::f64::consts::PI;

use crate::{Error, Point, Result};

/// Highest polynomial exactness handed out by the rule builders.
pub const MAX_DEGREE: usize = 40;

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly.
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_DEGREE {
        return Err(Error::Capability(format!(
            "quadrature of degree {degree} requested, maximum is {MAX_DEGREE}"
        )));
    }
    Ok(())
}

/// Gauss-Legendre rule on the segment `a`-`b`, exact up to `degree`.
pub fn face_quadrature(a: Point, b: Point, degree: usize) -> Result<QuadratureRule> {
    check_degree(degree)?;
    let n = degree / 2 + 1;
    let (x, w) = gauss_legendre(n);
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    let points = x
        .iter()
        .map(|&s| {
            let t = 0.5 * (s + 1.0);
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
        })
        .collect();
    let weights = w.iter().map(|&wi| 0.5 * len * wi).collect();
    Ok(QuadratureRule {
        points,
        weights,
        degree,
    })
}

fn push_triangle(a: Point, b: Point, c: Point, x: &[f64], w: &[f64], rule: &mut QuadratureRule) {
    let area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    for (i, &xi) in x.iter().enumerate() {
        let s = 0.5 * (xi + 1.0);
        for (j, &xj) in x.iter().enumerate() {
            let t = 0.5 * (xj + 1.0) * (1.0 - s);
            let weight = 0.25 * w[i] * w[j] * (1.0 - s) * area2;
            rule.points.push([
                a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]),
                a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1]),
            ]);
            rule.weights.push(weight);
        }
    }
}

/// Collapsed Gauss rule on the triangle `a, b, c` (counterclockwise).
pub fn triangle_quadrature(a: Point, b: Point, c: Point, degree: usize) -> Result<QuadratureRule> {
    check_degree(degree)?;
    let (x, w) = gauss_legendre((degree + 2).div_ceil(2));
    let mut rule = QuadratureRule {
        points: Vec::new(),
        weights: Vec::new(),
        degree,
    };
    push_triangle(a, b, c, &x, &w, &mut rule);
    Ok(rule)
}

/// Rule on a polygon star-shaped with respect to `center`.
pub fn polygon_quadrature(vertices: &[Point], center: Point, degree: usize) -> Result<QuadratureRule> {
    check_degree(degree)?;
    // Collapsing raises the degree in the radial direction by one.
    let (x, w) = gauss_legendre((degree + 2).div_ceil(2));
    let mut rule = QuadratureRule {
        points: Vec::new(),
        weights: Vec::new(),
        degree,
    };
    if vertices.len() == 3 {
        push_triangle(vertices[0], vertices[1], vertices[2], &x, &w, &mut rule);
        return Ok(rule);
    }
    let m = vertices.len();
    for i in 0..m {
        push_triangle(center, vertices[i], vertices[(i + 1) % m], &x, &w, &mut rule);
    }
    Ok(rule)
}
