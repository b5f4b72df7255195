#![allow(dead_code)]

use hho_core::bench::ExactSolution;
use hho_core::fespace::{interpolate, BasisSpec, DiscreteSpace, ElementSpace};
use hho_core::mesh::{BoundingBox, Mesh};
use hho_core::Point;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn unit_square() -> Mesh {
    Mesh::generate_cartesian(1, 1, BoundingBox::unit_square()).unwrap()
}

pub fn triangle() -> Mesh {
    Mesh::from_polygons(vec![[0.1, 0.0], [1.0, 0.2], [0.3, 0.9]], vec![vec![0, 1, 2]]).unwrap()
}

/// Regular hexagon of side `s` centred at `c`.
pub fn hexagon(c: Point, s: f64) -> Mesh {
    let v = (0..6)
        .map(|i| {
            let a = std::f64::consts::PI / 3.0 * i as f64;
            [c[0] + s * a.cos(), c[1] + s * a.sin()]
        })
        .collect();
    Mesh::from_polygons(v, vec![(0..6).collect()]).unwrap()
}

/// Star-shaped polygon with `radii.len()` vertices at perturbed angles.
pub fn perturbed_polygon(c: Point, radii: &[f64], jitter: &[f64]) -> Option<Mesh> {
    let n = radii.len();
    let v = (0..n)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * (i as f64 + jitter[i]) / n as f64;
            [c[0] + radii[i] * a.cos(), c[1] + radii[i] * a.sin()]
        })
        .collect();
    let m = Mesh::from_polygons(v, vec![(0..n).collect()]).ok()?;
    m.is_centroid_star_shaped(0).then_some(m)
}

pub fn single_elements() -> Vec<(&'static str, Mesh)> {
    vec![
        ("square", unit_square()),
        ("triangle", triangle()),
        ("hexagon", hexagon([0.4, -0.2], 0.6)),
    ]
}

/// Bivariate polynomial `sum c[a][b] x^a y^b`.
#[derive(Clone, Debug)]
pub struct Poly {
    pub terms: Vec<(usize, usize, f64)>,
}

impl Poly {
    pub fn random(rng: &mut ChaCha8Rng, degree: usize) -> Self {
        let mut terms = Vec::new();
        for d in 0..=degree {
            for a in 0..=d {
                terms.push((a, d - a, rng.gen_range(-1.0..1.0)));
            }
        }
        Poly { terms }
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.terms
            .iter()
            .map(|&(a, b, c)| c * p[0].powi(a as i32) * p[1].powi(b as i32))
            .sum()
    }

    pub fn dx(&self) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .filter(|t| t.0 > 0)
                .map(|&(a, b, c)| (a - 1, b, c * a as f64))
                .collect(),
        }
    }

    pub fn dy(&self) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .filter(|t| t.1 > 0)
                .map(|&(a, b, c)| (a, b - 1, c * b as f64))
                .collect(),
        }
    }
}

/// Space of element 0 and the local interpolate of `v` on it.
pub fn local_interpolate(mesh: &Mesh, k: usize, v: impl Fn(Point) -> [f64; 2] + Sync) -> (ElementSpace, DVector<f64>) {
    let space = DiscreteSpace::new(mesh, BasisSpec::new(k)).unwrap();
    let vh = interpolate(v, &space);
    let es = space.elements[0].clone();
    let local = vh.local(&es);
    (es, local)
}

/// Cartesian grid of the unit square with interior vertices moved by up to
/// `amp` cell sizes.
pub fn perturbed_grid(n: usize, amp: f64, seed: u64) -> Mesh {
    let mut r = rng(seed);
    let h = 1.0 / n as f64;
    let mut v = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            let mut p = [i as f64 * h, j as f64 * h];
            if i > 0 && i < n && j > 0 && j < n {
                p[0] += amp * h * r.gen_range(-1.0..1.0);
                p[1] += amp * h * r.gen_range(-1.0..1.0);
            }
            v.push(p);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let polys = (0..n)
        .flat_map(|j| (0..n).map(move |i| vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]))
        .collect();
    Mesh::from_polygons(v, polys).unwrap()
}

/// Divergence-free polynomial flow `u = curl psi` with pressure `p`. The
/// forcing includes convection when `convective` is set.
pub fn polynomial_flow(psi: &Poly, p: &Poly, nu: f64, convective: bool) -> ExactSolution {
    let (ux, uy) = (psi.dy(), psi.dx());
    let g = [[ux.dx(), ux.dy()], [uy.dx(), uy.dy()]];
    let lap = [ux.dx().dx(), ux.dy().dy(), uy.dx().dx(), uy.dy().dy()];
    let (px, py) = (p.dx(), p.dy());
    let velocity = {
        let (ux, uy) = (ux.clone(), uy.clone());
        move |x: Point| [ux.eval(x), -uy.eval(x)]
    };
    let gradient = {
        let g = g.clone();
        move |x: Point| [[g[0][0].eval(x), g[0][1].eval(x)], [-g[1][0].eval(x), -g[1][1].eval(x)]]
    };
    let forcing = {
        let (velocity, gradient) = (velocity.clone(), gradient.clone());
        move |x: Point| {
            let lx = lap[0].eval(x) + lap[1].eval(x);
            let ly = -(lap[2].eval(x) + lap[3].eval(x));
            let mut f = [-nu * lx + px.eval(x), -nu * ly + py.eval(x)];
            if convective {
                let (u, gu) = (velocity(x), gradient(x));
                for i in 0..2 {
                    f[i] += gu[i][0] * u[0] + gu[i][1] * u[1];
                }
            }
            f
        }
    };
    let p = p.clone();
    ExactSolution {
        name: "polynomial".into(),
        nu,
        domain: BoundingBox::unit_square(),
        velocity: Box::new(velocity),
        gradient: Box::new(gradient),
        pressure: Box::new(move |x| p.eval(x)),
        forcing: Box::new(forcing),
        zero_forcing: false,
    }
}
