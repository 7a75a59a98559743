//! Hamiltonian catalog and the numerical Legendre transform.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// A point of `T^d` or a vector of `R^d`, unused coordinates zero.
pub type Vec2 = [f64; 2];

fn dot(a: &Vec2, b: &Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: &Vec2) -> f64 {
    dot(a, a).sqrt()
}

/// Separable Hamiltonians `H(x, p)` strictly convex in `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Hamiltonian {
    /// `1/2 |p|^2 + tilt sin(2 pi x_1) p_1`.
    Quadratic { tilt: f64 },
    /// `sqrt(1 + |p|^2)`.
    Relativistic,
}

impl Default for Hamiltonian {
    fn default() -> Self {
        Hamiltonian::Quadratic { tilt: 0.0 }
    }
}

impl Hamiltonian {
    pub fn name(&self) -> &'static str {
        match self {
            Hamiltonian::Quadratic { .. } => "quadratic",
            Hamiltonian::Relativistic => "relativistic",
        }
    }

    fn drift(&self, x: &Vec2) -> Vec2 {
        match *self {
            Hamiltonian::Quadratic { tilt } => [tilt * (2.0 * PI * x[0]).sin(), 0.0],
            Hamiltonian::Relativistic => [0.0, 0.0],
        }
    }

    pub fn value(&self, x: &Vec2, p: &Vec2) -> f64 {
        match self {
            Hamiltonian::Quadratic { .. } => 0.5 * dot(p, p) + dot(&self.drift(x), p),
            Hamiltonian::Relativistic => (1.0 + dot(p, p)).sqrt(),
        }
    }

    /// `d_p H(x, p)`.
    pub fn grad_p(&self, x: &Vec2, p: &Vec2) -> Vec2 {
        match self {
            Hamiltonian::Quadratic { .. } => {
                let b = self.drift(x);
                [p[0] + b[0], p[1] + b[1]]
            }
            Hamiltonian::Relativistic => {
                let s = (1.0 + dot(p, p)).sqrt();
                [p[0] / s, p[1] / s]
            }
        }
    }

    /// `d^2_pp H(x, p)` as a symmetric 2x2 matrix.
    pub fn hess_p(&self, _x: &Vec2, p: &Vec2) -> [[f64; 2]; 2] {
        match self {
            Hamiltonian::Quadratic { .. } => [[1.0, 0.0], [0.0, 1.0]],
            Hamiltonian::Relativistic => {
                let q = 1.0 + dot(p, p);
                let s = q.powf(1.5);
                [
                    [(q - p[0] * p[0]) / s, -p[0] * p[1] / s],
                    [-p[0] * p[1] / s, (q - p[1] * p[1]) / s],
                ]
            }
        }
    }

    /// `d_x H(x, p)`.
    pub fn grad_x(&self, x: &Vec2, p: &Vec2) -> Vec2 {
        match *self {
            Hamiltonian::Quadratic { tilt } => {
                [tilt * 2.0 * PI * (2.0 * PI * x[0]).cos() * p[0], 0.0]
            }
            Hamiltonian::Relativistic => [0.0, 0.0],
        }
    }

    /// Optimal feedback `-d_p H(x, p)`.
    pub fn feedback(&self, x: &Vec2, p: &Vec2) -> Vec2 {
        let g = self.grad_p(x, p);
        [-g[0], -g[1]]
    }

    /// Closed-form Lagrangian `sup_p [-p.alpha - H(x, p)]`, `+inf` off its domain.
    pub fn lagrangian(&self, x: &Vec2, alpha: &Vec2) -> f64 {
        match self {
            Hamiltonian::Quadratic { .. } => {
                let b = self.drift(x);
                0.5 * ((alpha[0] + b[0]).powi(2) + (alpha[1] + b[1]).powi(2))
            }
            Hamiltonian::Relativistic => {
                let a2 = dot(alpha, alpha);
                if a2 <= 1.0 {
                    -(1.0 - a2).sqrt()
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `d_alpha L(x, alpha)` in the interior of the domain.
    pub fn lagrangian_grad(&self, x: &Vec2, alpha: &Vec2) -> Vec2 {
        match self {
            Hamiltonian::Quadratic { .. } => {
                let b = self.drift(x);
                [alpha[0] + b[0], alpha[1] + b[1]]
            }
            Hamiltonian::Relativistic => {
                let s = (1.0 - dot(alpha, alpha)).max(f64::MIN_POSITIVE).sqrt();
                [alpha[0] / s, alpha[1] / s]
            }
        }
    }

    /// Coefficient of `x`-dependence, used for the feedback bound.
    pub fn x_lipschitz(&self) -> f64 {
        match *self {
            Hamiltonian::Quadratic { tilt } => 2.0 * PI * tilt.abs(),
            Hamiltonian::Relativistic => 0.0,
        }
    }

    /// Sup of `|d_p H(x, 0)|`.
    pub fn drift_bound(&self) -> f64 {
        match *self {
            Hamiltonian::Quadratic { tilt } => tilt.abs(),
            Hamiltonian::Relativistic => 0.0,
        }
    }

    /// Whether `|d_p H|` is globally bounded by one.
    pub fn has_bounded_velocity(&self) -> bool {
        matches!(self, Hamiltonian::Relativistic)
    }
}

/// Settings for [`legendre_transform`].
#[derive(Clone, Copy, Debug)]
pub struct LegendreOptions {
    pub search_radius: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub dim: usize,
}

impl Default for LegendreOptions {
    fn default() -> Self {
        Self {
            search_radius: 50.0,
            max_iter: 100,
            tol: 1e-10,
            dim: 1,
        }
    }
}

fn newton_ascent(
    h: &Hamiltonian,
    x: &Vec2,
    alpha: &Vec2,
    start: Vec2,
    opts: &LegendreOptions,
) -> (Vec2, f64, bool) {
    let objective = |p: &Vec2| -dot(p, alpha) - h.value(x, p);
    let mut p = start;
    let mut val = objective(&p);
    for _ in 0..opts.max_iter {
        let g = h.grad_p(x, &p);
        let grad = [-alpha[0] - g[0], -alpha[1] - g[1]];
        if norm(&grad) < opts.tol {
            return (p, val, true);
        }
        let hm = h.hess_p(x, &p);
        let dir = if opts.dim == 1 {
            [grad[0] / hm[0][0], 0.0]
        } else {
            let det = hm[0][0] * hm[1][1] - hm[0][1] * hm[1][0];
            [
                (hm[1][1] * grad[0] - hm[0][1] * grad[1]) / det,
                (hm[0][0] * grad[1] - hm[1][0] * grad[0]) / det,
            ]
        };
        let mut step = 1.0;
        loop {
            let cand = [p[0] + step * dir[0], p[1] + step * dir[1]];
            let cv = objective(&cand);
            // Near the optimum the objective gain drops below rounding, so a
            // shrinking gradient also counts as progress.
            let cg = h.grad_p(x, &cand);
            let shrinks = norm(&[-alpha[0] - cg[0], -alpha[1] - cg[1]]) < norm(&grad);
            if cv >= val || shrinks || step < 1e-12 {
                p = cand;
                val = cv;
                break;
            }
            step *= 0.5;
        }
    }
    let g = h.grad_p(x, &p);
    let ok = norm(&[-alpha[0] - g[0], -alpha[1] - g[1]]) < opts.tol;
    (p, val, ok)
}

/// `L(x, alpha) = sup_p [-p.alpha - H(x, p)]` by damped Newton from `p = -alpha`,
/// falling back to a grid search on `|p| <= search_radius`.
pub fn legendre_transform(
    h: &Hamiltonian,
    x: &Vec2,
    alpha: &Vec2,
    opts: &LegendreOptions,
) -> Result<f64, ModelError> {
    let (p, val, ok) = newton_ascent(h, x, alpha, [-alpha[0], -alpha[1]], opts);
    if ok && norm(&p) <= opts.search_radius {
        return Ok(val);
    }
    let objective = |p: &Vec2| -dot(p, alpha) - h.value(x, p);
    let r = opts.search_radius;
    let mut best = ([0.0, 0.0], objective(&[0.0, 0.0]));
    let mut consider = |p: Vec2| {
        if norm(&p) <= r {
            let v = objective(&p);
            if v > best.1 {
                best = (p, v);
            }
        }
    };
    if opts.dim == 1 {
        let n = (2.0 * r / 1e-3).round() as usize;
        for i in 0..=n {
            consider([-r + 2.0 * r * i as f64 / n as f64, 0.0]);
        }
    } else {
        let n = 400;
        for i in 0..=n {
            for j in 0..=n {
                let s = |t: usize| -r + 2.0 * r * t as f64 / n as f64;
                consider([s(i), s(j)]);
            }
        }
    }
    let (p, val, ok) = newton_ascent(h, x, alpha, best.0, opts);
    if ok && norm(&p) <= r {
        Ok(val)
    } else {
        Err(ModelError::LegendreNonConvergence {
            best: best.1.max(if norm(&p) <= r {
                val
            } else {
                f64::NEG_INFINITY
            }),
        })
    }
}

/// Both sides of `L(x, -d_p H(x,p)) = p.d_p H(x,p) - H(x,p)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

pub fn check_duality(
    h: &Hamiltonian,
    x: &Vec2,
    p: &Vec2,
    opts: &LegendreOptions,
) -> Result<DualityCheck, ModelError> {
    let alpha = h.feedback(x, p);
    let lhs = legendre_transform(h, x, &alpha, opts)?;
    let g = h.grad_p(x, p);
    let rhs = dot(p, &g) - h.value(x, p);
    Ok(DualityCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}
