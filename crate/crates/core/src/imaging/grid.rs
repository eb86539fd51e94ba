//! Angular node sets for the image integrals and fast phasor sums over x.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::quadrature::Nodes;

/// Half-width of the pump window in units of `1/σ`; the envelope is `e^{-40.5}` at its edge.
pub(crate) const PUMP_WINDOW: f64 = 9.0;

/// Node on an angular axis: sine, cosine and quadrature weight.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AngleNode {
    pub sin: f64,
    pub cos: f64,
    pub w: f64,
}

fn to_angle_nodes(nodes: &Nodes) -> Vec<AngleNode> {
    nodes
        .iter()
        .map(|(theta, w)| {
            // cos(±π/2 − δ) evaluated as sin(δ) keeps relative precision at grazing angles.
            let cos = if theta.abs() > 1.0 {
                (FRAC_PI_2 - theta.abs()).sin()
            } else {
                theta.cos()
            };
            AngleNode {
                sin: theta.sin(),
                cos,
                w,
            }
        })
        .collect()
}

/// Oscillation and node budget of a panel `[a, b]` for an integrand carrying
/// `exp(i k sin θ · x)` with `|x| ≤ x_ext` and a phase-matching sinc of thickness `l`.
fn panel_span(a: f64, b: f64, k: f64, x_ext: f64, l: f64) -> f64 {
    let dsin = (b.sin() - a.sin()).abs();
    let dcos = (b.cos() - a.cos()).abs();
    x_ext * k * dsin + 0.5 * l * k * dcos
}

/// Outer axis over `[-π/2, π/2]` for a photon of wavenumber `k_self` whose
/// partner has wavenumber `k_limit`. Panels break at `0` and at the transverse
/// phase-matching cutoff `±asin(min(1, k_limit/k_self))`, where the integrand
/// has an endpoint singularity or a support edge; node density clusters at
/// every breakpoint.
pub(crate) fn outer_axis(
    k_self: f64,
    k_limit: f64,
    x_ext: f64,
    l: f64,
    n_theta: usize,
    level: usize,
) -> Vec<AngleNode> {
    let tc = (k_limit / k_self).min(1.0).asin();
    let mut breaks = vec![-FRAC_PI_2];
    if tc < FRAC_PI_2 * (1.0 - 1e-9) {
        breaks.extend([-tc, 0.0, tc]);
    } else {
        breaks.push(0.0);
    }
    breaks.push(FRAC_PI_2);
    let mut nodes = Nodes::default();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let base = (n_theta as f64 * (b - a) / std::f64::consts::PI).ceil();
        let osc = (2.6 * panel_span(a, b, k_self, x_ext, l)).ceil();
        let n = level * base.max(osc).max(16.0) as usize;
        nodes.push_panel(a, b, n, 2);
    }
    to_angle_nodes(&nodes)
}

/// Nodes for an integral over the angle of a photon with wavenumber `k_self`
/// whose integrand contains the pump envelope `E_P(k_self sin θ + q_other)`.
///
/// For narrow momentum distributions (large σ) only the window
/// `|k_self sin θ + q_other| ≤ 9/σ` is sampled; otherwise the whole half-circle.
/// `phase_ext` is the largest `|x|` multiplying `k_self sin θ` in a phase.
pub(crate) fn ridge_axis(
    k_self: f64,
    q_other: f64,
    sigma: f64,
    phase_ext: f64,
    l: f64,
    level: usize,
) -> Vec<AngleNode> {
    let h = PUMP_WINDOW / sigma;
    let qc = -q_other;
    let (lo, hi) = (qc - h, qc + h);
    if lo >= k_self || hi <= -k_self {
        return Vec::new();
    }
    let asin_clamped = |q: f64| (q / k_self).clamp(-1.0, 1.0).asin();
    let (a, b) = (asin_clamped(lo.max(-k_self)), asin_clamped(hi.min(k_self)));
    let center = asin_clamped(qc);
    let mut breaks = vec![a];
    if center > a && center < b {
        breaks.push(center);
    }
    breaks.push(b);
    let mut nodes = Nodes::default();
    for w in breaks.windows(2) {
        let span = panel_span(w[0], w[1], k_self, phase_ext, l);
        // Resolve the Gaussian itself when the window is a large fraction of the circle.
        let gauss = sigma * k_self * (w[1].sin() - w[0].sin()).abs();
        let n = level * (24.0 + 1.5 * span + 2.0 * gauss.min(PUMP_WINDOW * 4.0)).ceil() as usize;
        nodes.push_panel(w[0], w[1], n, 1);
    }
    to_angle_nodes(&nodes)
}

/// Sample positions along x: uniform axes use a phasor recurrence, general ones `cis` per sample.
#[derive(Debug, Clone)]
pub(crate) enum XAxis {
    Uniform { x0: f64, h: f64, n: usize },
    General(Vec<f64>),
}

impl XAxis {
    pub fn new(xs: &[f64]) -> Self {
        let n = xs.len();
        if n >= 3 {
            let x0 = xs[0];
            let h = (xs[n - 1] - x0) / (n - 1) as f64;
            let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(h.abs());
            if h > 0.0
                && xs
                    .iter()
                    .enumerate()
                    .all(|(i, &x)| (x - (x0 + h * i as f64)).abs() <= 1e-12 * scale)
            {
                return XAxis::Uniform { x0, h, n };
            }
        }
        XAxis::General(xs.to_vec())
    }

    pub fn len(&self) -> usize {
        match self {
            XAxis::Uniform { n, .. } => *n,
            XAxis::General(v) => v.len(),
        }
    }

    pub fn extent(&self) -> f64 {
        match self {
            XAxis::Uniform { x0, h, n } => x0.abs().max((x0 + h * (*n as f64 - 1.0)).abs()),
            XAxis::General(v) => v.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        }
    }

    /// `out[n] += c · exp(i q x_n)`.
    #[inline]
    pub fn accumulate(&self, q: f64, c: Complex64, out: &mut [Complex64]) {
        match self {
            XAxis::Uniform { x0, h, .. } => {
                let mut z = c * Complex64::cis(q * x0);
                let r = Complex64::cis(q * h);
                for o in out.iter_mut() {
                    *o += z;
                    z *= r;
                }
            }
            XAxis::General(xs) => {
                for (o, &x) in out.iter_mut().zip(xs) {
                    *o += c * Complex64::cis(q * x);
                }
            }
        }
    }
}
