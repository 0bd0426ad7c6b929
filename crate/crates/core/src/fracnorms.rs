//! Weighted Hoelder-type norms and seminorms on sampled paths.
//!
//! Everything here treats a [`SamplePath`] as piecewise linear between its
//! nodes and evaluates the singular increment integrals cell by cell in
//! closed form (see [`crate::quad`]), so the power-function examples in the
//! unit tests come out essentially exact. Discrete suprema are taken over
//! grid nodes or node pairs; they are lower bounds for the continuum
//! suprema.
//!
//! Multi-component paths are reduced with the Euclidean norm of values and
//! increments, except [`lambda_alpha`], which is a signed (per-component)
//! functional and takes the maximum over components.

use crate::error::{Error, Result};
use crate::grid::{GridMeta, SamplePath, TimeGrid};
use crate::quad::{cell_left_singular, cell_right_singular};
use libm::tgamma;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Node cap for the O(n^2) pairwise functionals.
pub const PAIRWISE_NODE_CAP: usize = 4096;

/// Overflow guard: integral values beyond this are reported as infinity.
pub const DIVERGENCE_GUARD: f64 = 1e300;

/// Fractional smoothness index restricted to (0, 1/2), the window in which
/// the solution norms below are defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 0.5 {
            Ok(Alpha(value))
        } else {
            Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1/2), got {value}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Whether this alpha is admissible for a driver of the given Hurst
    /// parameter (the solver regime needs `alpha > 1 - H`).
    pub fn admissible_for(self, hurst: crate::noise::Hurst) -> bool {
        self.0 > 1.0 - hurst.get()
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Alpha::new(v)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

fn check_pairwise_cap(path: &SamplePath, what: &'static str) -> Result<()> {
    let nodes = path.grid().len();
    if nodes > PAIRWISE_NODE_CAP {
        return Err(Error::TooManyNodes {
            nodes,
            cap: PAIRWISE_NODE_CAP,
            what,
        });
    }
    Ok(())
}

fn guard(value: f64) -> f64 {
    if value > DIVERGENCE_GUARD {
        log::warn!("functional exceeded the overflow guard ({value:.3e}); reporting infinity");
        f64::INFINITY
    } else {
        value
    }
}

/// `int_0^{t_i} |f(t_i) - f(y)| (t_i - y)^p dy` with the piecewise-linear
/// increment model; `p < 0` puts the singularity at the upper limit.
fn increment_tail(f: &SamplePath, i: usize, p: f64) -> f64 {
    let g = f.grid();
    let c = g.node(i);
    let mut acc = 0.0;
    for j in 0..i {
        acc += cell_right_singular(
            c,
            g.node(j),
            g.node(j + 1),
            f.increment_norm(i, j),
            f.increment_norm(i, j + 1),
            p,
        );
    }
    acc
}

/// `|f(t)| + int_0^t |f(t) - f(s)| / (t - s)^{alpha + 1} ds` at a grid node.
pub fn pointwise_alpha_norm(f: &SamplePath, t: f64, alpha: Alpha) -> Result<f64> {
    let i = f.grid().index_of(t)?;
    Ok(guard(f.row_norm(i) + increment_tail(f, i, -alpha.get() - 1.0)))
}

/// Supremum of [`pointwise_alpha_norm`] over the grid.
pub fn alpha_infty_norm(f: &SamplePath, alpha: Alpha) -> Result<f64> {
    check_pairwise_cap(f, "the alpha-infinity norm")?;
    let p = -alpha.get() - 1.0;
    let value = (0..f.grid().len())
        .into_par_iter()
        .map(|i| f.row_norm(i) + increment_tail(f, i, p))
        .reduce(|| 0.0, f64::max);
    Ok(guard(value))
}

/// `sup |f| + sup_{s<t} |f(t) - f(s)| / (t - s)^mu` over grid pairs,
/// for a Hoelder exponent `0 < mu <= 1`.
pub fn hoelder_norm(f: &SamplePath, mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "hoelder exponent must lie in (0, 1], got {mu}"
        )));
    }
    check_pairwise_cap(f, "the hoelder norm")?;
    let g = f.grid();
    let ratio = (0..g.len() - 1)
        .into_par_iter()
        .map(|i| {
            let mut best = 0.0f64;
            for j in (i + 1)..g.len() {
                best = best.max(f.increment_norm(j, i) / (g.node(j) - g.node(i)).powf(mu));
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(f.sup_norm() + ratio)
}

/// Discrete supremum over pairs `s < t` of
/// `|g(t) - g(s)|/(t-s)^{1-alpha} + int_s^t |g(y) - g(s)|/(y-s)^{2-alpha} dy`.
pub fn one_minus_alpha_infty_norm(g: &SamplePath, alpha: Alpha) -> Result<f64> {
    check_pairwise_cap(g, "the (1-alpha)-infinity norm")?;
    let a = alpha.get();
    let grid = g.grid();
    let n = grid.len() - 1;
    let value = (0..n)
        .into_par_iter()
        .map(|i| {
            let s = grid.node(i);
            let mut inner = 0.0;
            let mut best = 0.0f64;
            for j in i..n {
                inner += cell_left_singular(
                    s,
                    grid.node(j),
                    grid.node(j + 1),
                    g.increment_norm(j, i),
                    g.increment_norm(j + 1, i),
                    a - 2.0,
                );
                let dt = grid.node(j + 1) - s;
                best = best.max(g.increment_norm(j + 1, i) / dt.powf(1.0 - a) + inner);
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(guard(value))
}

/// `int_0^T |f(s)|/s^alpha ds + int_0^T int_0^s |f(s)-f(y)|/(s-y)^{alpha+1} dy ds`.
pub fn alpha_one_norm(f: &SamplePath, alpha: Alpha) -> Result<f64> {
    check_pairwise_cap(f, "the alpha-one norm")?;
    let a = alpha.get();
    let grid = f.grid();
    let n = grid.len() - 1;
    let mut first = 0.0;
    for j in 0..n {
        first += cell_left_singular(
            0.0,
            grid.node(j),
            grid.node(j + 1),
            f.row_norm(j),
            f.row_norm(j + 1),
            -a,
        );
    }
    // inner singular integrals at every node, then a trapezoid in the outer
    // variable (the inner integral vanishes at s = 0)
    let tails: Vec<f64> = (0..=n)
        .into_par_iter()
        .map(|i| increment_tail(f, i, -a - 1.0))
        .collect();
    let mut second = 0.0;
    for j in 0..n {
        second += 0.5 * (tails[j] + tails[j + 1]) * (grid.node(j + 1) - grid.node(j));
    }
    Ok(guard(first + second))
}

/// Signed right-sided increment integral used by both [`lambda_alpha`] and
/// the Weyl derivative: `int_{t_i}^{t_j} (v_i - v(y)) (y - t_i)^{p} dy`
/// accumulated cell by cell while `j` sweeps upward.
struct SignedSweep<'a> {
    grid: &'a TimeGrid,
    vals: &'a [f64],
    i: usize,
    p: f64,
    acc: f64,
    j: usize,
}

impl<'a> SignedSweep<'a> {
    fn new(grid: &'a TimeGrid, vals: &'a [f64], i: usize, p: f64) -> Self {
        Self { grid, vals, i, p, acc: 0.0, j: i }
    }

    /// Advance the upper limit to node `j + 1` and return the running value.
    fn step(&mut self) -> f64 {
        let j = self.j;
        self.acc += cell_left_singular(
            self.grid.node(self.i),
            self.grid.node(j),
            self.grid.node(j + 1),
            self.vals[self.i] - self.vals[j],
            self.vals[self.i] - self.vals[j + 1],
            self.p,
        );
        self.j += 1;
        self.acc
    }
}

/// `(1/Gamma(1-alpha)) sup_{0<s<t<T} |D_{t-}^{1-alpha} g_{t-}(s)|`, the
/// functional controlling pathwise integrals against `g`. Multi-component
/// paths take the maximum over components.
pub fn lambda_alpha(g: &SamplePath, alpha: Alpha) -> Result<f64> {
    check_pairwise_cap(g, "the lambda functional")?;
    let a = alpha.get();
    let grid = g.grid();
    let n = grid.len() - 1;
    let inv_gammas = 1.0 / (tgamma(1.0 - a) * tgamma(a));
    let mut best = 0.0f64;
    for c in 0..g.dim() {
        let vals: Vec<f64> = g.values().column(c).to_vec();
        let comp = (0..n)
            .into_par_iter()
            .map(|i| {
                let s = grid.node(i);
                let mut sweep = SignedSweep::new(grid, &vals, i, a - 2.0);
                let mut m = 0.0f64;
                for j in i..n {
                    let inner = sweep.step();
                    let dt = grid.node(j + 1) - s;
                    let d = (vals[i] - vals[j + 1]) / dt.powf(1.0 - a) + (1.0 - a) * inner;
                    m = m.max(d.abs());
                }
                m
            })
            .reduce(|| 0.0, f64::max);
        best = best.max(comp);
    }
    Ok(guard(best * inv_gammas))
}

/// The delta-power increment seminorm
/// `int_0^s |f(s) - f(r)|^delta / (s - r)^{alpha+1} dr` at a grid node `s`.
///
/// On the cell adjacent to the singularity the increment is modeled as
/// linear in `s - r` and the delta power is integrated in closed form; a
/// divergent combination (`delta <= alpha` against a nonvanishing local
/// slope) is reported as infinity.
pub fn delta_seminorm(f: &SamplePath, s: f64, alpha: Alpha, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1], got {delta}"
        )));
    }
    let a = alpha.get();
    let grid = f.grid();
    let i = grid.index_of(s)?;
    if i == 0 {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for j in 0..i - 1 {
        acc += cell_right_singular(
            s,
            grid.node(j),
            grid.node(j + 1),
            f.increment_norm(i, j).powf(delta),
            f.increment_norm(i, j + 1).powf(delta),
            -a - 1.0,
        );
    }
    // adjacent cell: |f(s) - f(r)| ~ slope * (s - r)
    let width = s - grid.node(i - 1);
    let slope = f.increment_norm(i, i - 1) / width;
    if slope > 0.0 {
        if delta > a {
            acc += slope.powf(delta) * width.powf(delta - a) / (delta - a);
        } else {
            log::warn!(
                "delta seminorm diverges on the singular cell (delta {delta} <= alpha {a} with slope {slope:.3e})"
            );
            return Ok(f64::INFINITY);
        }
    }
    Ok(guard(acc))
}

/// Which functional a [`NormReport`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    PointwiseAlpha,
    AlphaInfty,
    HoelderMu,
    OneMinusAlphaInfty,
    AlphaOne,
    LambdaAlpha,
    DeltaSeminorm,
}

/// One computed norm value with its parameters and grid provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub kind: NormKind,
    pub alpha_or_mu: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta: Option<f64>,
    pub value: f64,
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
}

impl NormReport {
    pub fn new(kind: NormKind, alpha_or_mu: f64, delta: Option<f64>, value: f64, grid: &GridMeta) -> Self {
        NormReport {
            kind,
            alpha_or_mu,
            delta,
            value,
            n: grid.steps,
            horizon: grid.horizon,
        }
    }
}
