//! Gauss-Legendre rules and the composite angular grids built from them.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest single rule handed out; longer panels are split in the mapped variable.
const MAX_RULE: usize = 256;

/// Node budget and convergence target for the angular integrals.
///
/// `n_theta` is the minimum number of nodes per angular axis; the engine raises
/// it where the integrand oscillates faster. Refinement doubles every node count
/// until successive peak-normalized images agree to `rel_tol` in max-norm, or
/// `n_refine_max` doublings have been spent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub n_theta: usize,
    pub n_refine_max: usize,
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            n_theta: 128,
            n_refine_max: 4,
            rel_tol: 1e-3,
        }
    }
}

impl QuadratureSpec {
    pub fn new(n_theta: usize, n_refine_max: usize, rel_tol: f64) -> Result<Self> {
        let q = QuadratureSpec {
            n_theta,
            n_refine_max,
            rel_tol,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_theta < 64 {
            return Err(Error::invalid(
                "n_theta",
                format!("must be >= 64, got {}", self.n_theta),
            ));
        }
        if self.n_refine_max == 0 {
            return Err(Error::invalid("n_refine_max", "must be >= 1"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return Err(Error::invalid(
                "rel_tol",
                format!("must lie in (0, 1e-2], got {}", self.rel_tol),
            ));
        }
        Ok(())
    }
}

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the `n`-point rule by Newton iteration on the three-term recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess for the i-th root.
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos() * (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1e-300) {
                    break;
                }
            }
            let (_, d) = legendre_and_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let c = 0.5 * (b + a);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

static RULES: Lazy<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Shared, cached `n`-point rule.
pub fn gauss_legendre(n: usize) -> Arc<GaussLegendre> {
    let mut cache = RULES.lock().expect("rule cache poisoned");
    cache
        .entry(n)
        .or_insert_with(|| Arc::new(GaussLegendre::new(n)))
        .clone()
}

/// Quadrature nodes and weights on a real interval.
#[derive(Debug, Clone, Default)]
pub struct Nodes {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl Nodes {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x.iter().copied().zip(self.w.iter().copied())
    }

    pub fn sum(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    /// Appends an `n`-node panel on `[a, b]`.
    ///
    /// With `cluster > 1` the panel is mapped through
    /// `t ↦ t^p / (t^p + (1 − t)^p)`, which concentrates nodes at both ends and
    /// turns inverse-square-root and logarithmic endpoint behavior into a smooth
    /// integrand in `t`.
    pub fn push_panel(&mut self, a: f64, b: f64, n: usize, cluster: u32) {
        if n == 0 || b <= a {
            return;
        }
        let pieces = n.div_ceil(MAX_RULE);
        let per = n.div_ceil(pieces);
        let rule = gauss_legendre(per);
        let p = cluster.max(1) as i32;
        let len = b - a;
        for s in 0..pieces {
            let t0 = s as f64 / pieces as f64;
            let t1 = (s + 1) as f64 / pieces as f64;
            let tc = 0.5 * (t0 + t1);
            let th = 0.5 * (t1 - t0);
            for (&u, &wu) in rule.nodes.iter().zip(&rule.weights) {
                let t = tc + th * u;
                let (phi, dphi) = if p == 1 {
                    (t, 1.0)
                } else {
                    let a1 = t.powi(p);
                    let b1 = (1.0 - t).powi(p);
                    let den = a1 + b1;
                    let num = p as f64 * t.powi(p - 1) * (1.0 - t).powi(p - 1);
                    (a1 / den, num / (den * den))
                };
                // Evaluate near the ends relative to the closer endpoint to keep precision.
                let x = if phi < 0.5 {
                    a + len * phi
                } else {
                    let b1 = (1.0 - t).powi(p);
                    let den = t.powi(p) + b1;
                    b - len * (b1 / den)
                };
                self.x.push(x);
                self.w.push(wu * th * dphi * len);
            }
        }
    }
}

/// Composite rule over consecutive breakpoints with given node counts per panel.
pub fn composite(breaks: &[f64], counts: &[usize], cluster: u32) -> Nodes {
    debug_assert_eq!(breaks.len(), counts.len() + 1);
    let mut nodes = Nodes::default();
    for (w, &n) in breaks.windows(2).zip(counts) {
        nodes.push_panel(w[0], w[1], n, cluster);
    }
    nodes
}
