//! Node sets for the scale integrals: log-uniform trapezoid grids in `t`, Gauss-Legendre
//! panels (log-spaced near the singularity, uniform further out) for radial `z` integrals.

use std::f64::consts::LN_10;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Points per Gauss-Legendre panel used by every composite rule in the crate.
pub const PANEL_POINTS: usize = 8;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn panel_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_POINTS))
}

/// Visits the nodes of a composite Gauss-Legendre rule on `[a, b]` with panels of at most
/// `width`. Panels are laid out from `a`, so the node set moves rigidly with the interval.
pub fn for_each_uniform_node(a: f64, b: f64, width: f64, mut visit: impl FnMut(f64, f64)) {
    if !(b > a) {
        return;
    }
    let (x, w) = panel_rule();
    let panels = ((b - a) / width).ceil().max(1.0) as usize;
    let step = (b - a) / panels as f64;
    for k in 0..panels {
        let lo = a + k as f64 * step;
        let mid = lo + 0.5 * step;
        for (xi, wi) in x.iter().zip(w) {
            visit(mid + 0.5 * step * xi, 0.5 * step * wi);
        }
    }
}

/// Composite Gauss-Legendre rule in `u = ln z` on `[a, b]`; weights are for `dz`.
pub fn log_panel_nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let (x, w) = panel_rule();
    let (ua, ub) = (a.ln(), b.ln());
    let step = (ub - ua) / panels as f64;
    let mut out = Vec::with_capacity(panels * x.len());
    for k in 0..panels {
        let mid = ua + (k as f64 + 0.5) * step;
        for (xi, wi) in x.iter().zip(w) {
            let z = (mid + 0.5 * step * xi).exp();
            out.push((z, 0.5 * step * wi * z));
        }
    }
    out
}

/// Log-uniform node set with trapezoid weights in `u = ln t`.
#[derive(Debug, Clone)]
pub struct LogGrid {
    pub nodes: Vec<f64>,
    /// Weights for `du`; multiply by `t` to integrate against `dt`.
    pub weights: Vec<f64>,
    pub step: f64,
}

impl LogGrid {
    pub fn new(lo: f64, hi: f64, per_decade: usize) -> Self {
        let decades = (hi / lo).log10();
        let count = ((decades * per_decade as f64).ceil() as usize).max(1) + 1;
        let step = (hi / lo).ln() / (count - 1) as f64;
        let nodes: Vec<f64> = (0..count)
            .map(|i| {
                if i + 1 == count {
                    hi
                } else {
                    lo * (i as f64 * step).exp()
                }
            })
            .collect();
        let mut weights = vec![step; count];
        weights[0] *= 0.5;
        weights[count - 1] *= 0.5;
        LogGrid {
            nodes,
            weights,
            step,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Discretization of the `dt`, `dr` and `dz` measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub nodes_per_decade: usize,
    pub z_r_min: f64,
    pub z_r_max: f64,
    /// Directions on the unit circle for `n = 2` (even; antipodal pairs are merged).
    pub angular_nodes: usize,
    /// Relative tolerance for tail and truncation error estimates.
    pub tail_rel_tol: f64,
}

impl QuadratureSpec {
    /// Defaults tied to the grid: `t ∈ [h/4, 4L]`, `z ∈ [h/8, 4L]`, 64 nodes per decade.
    pub fn for_grid(spec: &GridSpec) -> Self {
        let h = spec.spacing();
        let l = spec.half_width();
        QuadratureSpec {
            t_min: h / 4.0,
            t_max: 4.0 * l,
            nodes_per_decade: 64,
            z_r_min: h / 8.0,
            z_r_max: 4.0 * l,
            angular_nodes: 32,
            tail_rel_tol: 1e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_max > self.t_min && self.t_max.is_finite()) {
            return Err(Error::param(format!(
                "t-range must satisfy 0 < t_min < t_max, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        if self.nodes_per_decade < 16 {
            return Err(Error::param(format!(
                "nodes_per_decade must be ≥ 16, got {}",
                self.nodes_per_decade
            )));
        }
        if !(self.z_r_min > 0.0 && self.z_r_max > self.z_r_min && self.z_r_max.is_finite()) {
            return Err(Error::param(format!(
                "radial range must satisfy 0 < z_r_min < z_r_max, got [{}, {}]",
                self.z_r_min, self.z_r_max
            )));
        }
        if self.angular_nodes < 4 || self.angular_nodes % 2 != 0 {
            return Err(Error::param(format!(
                "angular_nodes must be even and ≥ 4, got {}",
                self.angular_nodes
            )));
        }
        if !(self.tail_rel_tol > 0.0) {
            return Err(Error::param("tail_rel_tol must be positive"));
        }
        Ok(())
    }

    /// Same ranges, twice the node density.
    pub fn refined(&self) -> Self {
        QuadratureSpec {
            nodes_per_decade: self.nodes_per_decade * 2,
            ..*self
        }
    }

    pub fn t_grid(&self) -> LogGrid {
        LogGrid::new(self.t_min, self.t_max, self.nodes_per_decade)
    }

    /// Radial rule for singular integrals on a grid with spacing `h`.
    pub fn radial_rule(&self, h: f64) -> RadialRule {
        let density = self.nodes_per_decade as f64 / 64.0;
        let uniform_width = 16.0 * h / density;
        let decades_per_panel = PANEL_POINTS as f64 / self.nodes_per_decade as f64;
        // switch where a log panel becomes as wide as a uniform one
        let growth = 10f64.powf(decades_per_panel) - 1.0;
        let switch = (uniform_width / growth)
            .max(10.0 * self.z_r_min)
            .min(self.z_r_max);
        let panels = (((switch / self.z_r_min).ln() / (decades_per_panel * LN_10)).ceil()
            as usize)
            .max(1);
        RadialRule {
            inner: self.z_r_min,
            switch,
            outer: self.z_r_max,
            uniform_width,
            log_nodes: log_panel_nodes(self.z_r_min, switch, panels),
        }
    }
}

/// Composite radial rule: analytic model on `[0, inner]`, log panels on `[inner, switch]`,
/// uniform panels from `switch` to the edge of the support, capped at `outer`.
#[derive(Debug, Clone)]
pub struct RadialRule {
    pub inner: f64,
    pub switch: f64,
    pub outer: f64,
    pub uniform_width: f64,
    pub log_nodes: Vec<(f64, f64)>,
}
