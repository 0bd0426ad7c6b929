//! Mixed-driver stochastic differential equations
//! `dX = b(t, X) dt + sigma_W(t, X) dW + sigma_H(t, X) dB^H`
//! with an explicit Euler scheme, closed-form reference solutions, and
//! randomized validation of the declared coefficient assumptions.

mod families;

pub use families::{
    coefficient_registry, family_by_name, CoefficientFamily, FamilyDims, OracleKind,
};

use crate::error::{Error, Result};
use crate::grid::SamplePath;
use crate::noise::{Hurst, NoiseBundle};
use crate::rng::substream;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Any iterate with a component beyond this magnitude aborts the solve.
pub const BLOW_UP_GUARD: f64 = 1e150;

/// Sub-stream tag for assumption-probe randomness.
const PROBE_STREAM: u64 = 0xa;

/// State and driver dimensions: `state` components driven by `bm` Brownian
/// and `fbm` fractional Brownian components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub state: usize,
    pub bm: usize,
    pub fbm: usize,
}

/// Declared regularity constants of a coefficient set: `l1`/`l2` drift
/// Lipschitz and growth, `l3`/`l4` the same for the Ito coefficient, `l5`
/// bounds each partial derivative of the fBm coefficient, `l6` its spatial
/// Hoelder modulus with exponent `delta`, and `l7` the joint time-Hoelder
/// modulus with exponent `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionConstants {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub l5: f64,
    pub l6: f64,
    pub l7: f64,
    pub beta: f64,
    pub delta: f64,
}

impl AssumptionConstants {
    /// All moduli zero, both exponents 1 (the constants of identically
    /// vanishing fields).
    pub fn zeroed() -> Self {
        AssumptionConstants {
            l1: 0.0,
            l2: 0.0,
            l3: 0.0,
            l4: 0.0,
            l5: 0.0,
            l6: 0.0,
            l7: 0.0,
            beta: 1.0,
            delta: 1.0,
        }
    }

    /// Linear-growth constant for the fBm coefficient implied by the
    /// derivative bound: `|sigma_H(t, x)| <= L (1 + |x|)` with
    /// `L = max(zero_level, l5 sqrt(d))`, where `zero_level` bounds
    /// `|sigma_H(t, 0)|`.
    pub fn sigma_h_growth(&self, state_dim: usize, zero_level: f64) -> f64 {
        zero_level.max(self.l5 * (state_dim as f64).sqrt())
    }
}

type VecField = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;

/// Executable coefficients plus their declared constants. Evaluation writes
/// into caller scratch in row-major layout: `b` fills `state` entries,
/// `sigma_w` fills `state * bm`, `sigma_h` fills `state * fbm`, and
/// `dsigma_h` fills `state * fbm * state` with entry `(i * fbm + j) * state + k`
/// holding `d sigma_H^{ij} / d x_k`.
#[derive(Clone)]
pub struct CoefficientSet {
    family: Option<CoefficientFamily>,
    dims: Dims,
    constants: AssumptionConstants,
    b: VecField,
    sigma_w: VecField,
    sigma_h: VecField,
    dsigma_h: VecField,
}

impl std::fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("family", &self.family.as_ref().map(|fam| fam.name()))
            .field("dims", &self.dims)
            .field("constants", &self.constants)
            .finish_non_exhaustive()
    }
}

impl CoefficientSet {
    /// Assemble coefficients from closures; use a [`CoefficientFamily`] for
    /// the named catalog.
    pub fn custom(
        dims: Dims,
        constants: AssumptionConstants,
        b: VecField,
        sigma_w: VecField,
        sigma_h: VecField,
        dsigma_h: VecField,
    ) -> Self {
        CoefficientSet {
            family: None,
            dims,
            constants,
            b,
            sigma_w,
            sigma_h,
            dsigma_h,
        }
    }

    pub(crate) fn with_family(mut self, family: CoefficientFamily) -> Self {
        self.family = Some(family);
        self
    }

    pub fn family(&self) -> Option<&CoefficientFamily> {
        self.family.as_ref()
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn constants(&self) -> &AssumptionConstants {
        &self.constants
    }

    pub fn b_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dims.state);
        (self.b)(t, x, out);
    }

    pub fn sigma_w_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dims.state * self.dims.bm);
        (self.sigma_w)(t, x, out);
    }

    pub fn sigma_h_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dims.state * self.dims.fbm);
        (self.sigma_h)(t, x, out);
    }

    pub fn dsigma_h_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dims.state * self.dims.fbm * self.dims.state);
        (self.dsigma_h)(t, x, out);
    }
}

/// A fully specified initial-value problem.
#[derive(Debug, Clone)]
pub struct SdeProblem {
    pub coefficients: CoefficientSet,
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub hurst: Hurst,
}

impl SdeProblem {
    pub fn new(coefficients: CoefficientSet, x0: Vec<f64>, horizon: f64, hurst: Hurst) -> Result<Self> {
        if x0.len() != coefficients.dims().state {
            return Err(Error::DimensionMismatch(format!(
                "x0 has {} components but the coefficients expect {}",
                x0.len(),
                coefficients.dims().state
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        Ok(SdeProblem { coefficients, x0, horizon, hurst })
    }
}

/// Output of one Euler solve: the discrete solution alongside the noise that
/// drove it.
#[derive(Debug, Clone)]
pub struct EulerRun {
    pub path: SamplePath,
    pub noise: NoiseBundle,
}

/// Explicit Euler scheme on the grid carried by `noise`:
/// `X_{i+1} = X_i + b dt + sigma_W dW + sigma_H dB^H`, coefficients frozen at
/// the left endpoint. Aborts with [`Error::BlowUp`] once any component
/// exceeds [`BLOW_UP_GUARD`] or turns non-finite.
pub fn euler_solve(problem: &SdeProblem, noise: &NoiseBundle) -> Result<EulerRun> {
    let dims = problem.coefficients.dims();
    let grid = noise.grid().clone();
    if noise.fbm.dim() != dims.fbm || noise.bm.dim() != dims.bm {
        return Err(Error::DimensionMismatch(format!(
            "noise provides {} fBm / {} BM components, coefficients expect {} / {}",
            noise.fbm.dim(),
            noise.bm.dim(),
            dims.fbm,
            dims.bm
        )));
    }
    if noise.hurst != problem.hurst {
        return Err(Error::InvalidParameter(format!(
            "noise Hurst index {} differs from the problem's {}",
            noise.hurst.get(),
            problem.hurst.get()
        )));
    }
    if (grid.horizon() - problem.horizon).abs() > 1e-12 * problem.horizon.max(1.0) {
        return Err(Error::Grid(format!(
            "noise grid horizon {} does not match the problem horizon {}",
            grid.horizon(),
            problem.horizon
        )));
    }

    let n = grid.len();
    let (d, r, m) = (dims.state, dims.bm, dims.fbm);
    let mut values = ndarray::Array2::zeros((n, d));
    let mut x = problem.x0.clone();
    for (c, &v) in x.iter().enumerate() {
        values[[0, c]] = v;
    }
    let mut bv = vec![0.0; d];
    let mut swv = vec![0.0; d * r];
    let mut shv = vec![0.0; d * m];
    let bm = noise.bm.values();
    let fbm = noise.fbm.values();

    for i in 0..n - 1 {
        let t = grid.node(i);
        let dt = grid.node(i + 1) - t;
        problem.coefficients.b_into(t, &x, &mut bv);
        problem.coefficients.sigma_w_into(t, &x, &mut swv);
        problem.coefficients.sigma_h_into(t, &x, &mut shv);
        for c in 0..d {
            let mut v = x[c] + bv[c] * dt;
            for k in 0..r {
                v += swv[c * r + k] * (bm[[i + 1, k]] - bm[[i, k]]);
            }
            for j in 0..m {
                v += shv[c * m + j] * (fbm[[i + 1, j]] - fbm[[i, j]]);
            }
            if !v.is_finite() || v.abs() > BLOW_UP_GUARD {
                return Err(Error::BlowUp { node: i + 1, t: grid.node(i + 1) });
            }
            values[[i + 1, c]] = v;
        }
        for c in 0..d {
            x[c] = values[[i + 1, c]];
        }
    }

    Ok(EulerRun {
        path: SamplePath::new(grid, values)?,
        noise: noise.clone(),
    })
}

/// Closed-form solution of the problem's family evaluated on the nodes of
/// `noise`, for families that admit one (see [`CoefficientFamily::oracle_kind`]).
pub fn closed_form_oracle(problem: &SdeProblem, noise: &NoiseBundle) -> Result<SamplePath> {
    let family = problem.coefficients.family().ok_or_else(|| {
        Error::InvalidParameter("closed-form reference requires a named coefficient family".into())
    })?;
    let kind = family.oracle_kind().ok_or_else(|| {
        Error::InvalidParameter(format!(
            "family `{}` has no closed-form reference solution",
            family.name()
        ))
    })?;
    let grid = noise.grid().clone();
    let x0 = problem.x0[0];
    let values: Vec<f64> = match (kind, family) {
        (OracleKind::DriftOnly, CoefficientFamily::DriftConstant { rate }) => {
            grid.nodes().iter().map(|&t| x0 + rate * t).collect()
        }
        (OracleKind::DriftOnly, CoefficientFamily::DriftCosine { amplitude, frequency }) => grid
            .nodes()
            .iter()
            .map(|&t| {
                if *frequency == 0.0 {
                    x0 + amplitude * t
                } else {
                    x0 + amplitude * (frequency * t).sin() / frequency
                }
            })
            .collect(),
        (OracleKind::ItoGbm, CoefficientFamily::GeometricBm { volatility }) => grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let w = noise.bm.values()[[i, 0]];
                x0 * (volatility * w - 0.5 * volatility * volatility * t).exp()
            })
            .collect(),
        (OracleKind::YoungExponential, _) => (0..grid.len())
            .map(|i| x0 * noise.fbm.values()[[i, 0]].exp())
            .collect(),
        (OracleKind::MixedExponential, CoefficientFamily::MixedExponential { volatility }) => grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let w = noise.bm.values()[[i, 0]];
                let bh = noise.fbm.values()[[i, 0]];
                x0 * (volatility * w - 0.5 * volatility * volatility * t + bh).exp()
            })
            .collect(),
        _ => unreachable!("oracle kind is derived from the family"),
    };
    let arr = ndarray::Array2::from_shape_vec((grid.len(), 1), values)
        .expect("node count matches");
    SamplePath::new(grid, arr)
}

/// One randomized check of a declared assumption, with the worst probe
/// retained as a witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub declared: f64,
    pub observed: f64,
    pub passed: bool,
    pub witness: ProbeWitness,
}

/// The probe at which the worst ratio was observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ProbeWitness {
    pub t: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub s: Option<f64>,
    pub x: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub y: Option<Vec<f64>>,
}

/// Outcome of [`validate_assumptions`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    pub passed: bool,
}

struct Probe {
    t: f64,
    s: f64,
    x: Vec<f64>,
    y: Vec<f64>,
}

/// Magnitude ladder for probe states; the larger rungs expose superlinear
/// growth that small perturbations would miss.
const PROBE_SCALES: [f64; 4] = [0.25, 1.0, 4.0, 16.0];

/// Check the declared constants against `budget` randomized probes on the
/// unit time interval and a state ladder up to radius 16. Each inequality
/// reports the worst observed modulus and the probe that attained it; the
/// report passes only if every observed value stays within its declared
/// constant (up to rounding slack). Requires `budget >= 100`.
pub fn validate_assumptions(
    coeffs: &CoefficientSet,
    budget: usize,
    seed: u64,
) -> Result<AssumptionReport> {
    if budget < 100 {
        return Err(Error::InvalidParameter(format!(
            "assumption probing needs a budget of at least 100, got {budget}"
        )));
    }
    let dims = coeffs.dims();
    let d = dims.state;
    let mut rng = substream(seed, &[PROBE_STREAM]);
    let draw_state = |rng: &mut rand_chacha::ChaCha12Rng, scale: f64| -> Vec<f64> {
        (0..d).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect()
    };
    let probes: Vec<Probe> = (0..budget)
        .map(|_| {
            let sx = PROBE_SCALES[rng.random_range(0..PROBE_SCALES.len())];
            let sy = PROBE_SCALES[rng.random_range(0..PROBE_SCALES.len())];
            Probe {
                t: rng.random::<f64>(),
                s: rng.random::<f64>(),
                x: draw_state(&mut rng, sx),
                y: draw_state(&mut rng, sy),
            }
        })
        .collect();

    let cs = coeffs.constants();
    let mut checks = Vec::new();
    let mut b1 = vec![0.0; d];
    let mut b2 = vec![0.0; d];
    let mut w1 = vec![0.0; d * dims.bm];
    let mut w2 = vec![0.0; d * dims.bm];
    let mut h1 = vec![0.0; d * dims.fbm];
    let mut h2 = vec![0.0; d * dims.fbm];
    let mut g1 = vec![0.0; d * dims.fbm * d];
    let mut g2 = vec![0.0; d * dims.fbm * d];

    let norm = |v: &[f64]| v.iter().map(|e| e * e).sum::<f64>().sqrt();
    let dist = |a: &[f64], b: &[f64]| {
        a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
    };
    // Per-partial Frobenius norm of the worst slice d sigma_H / d x_k.
    let slice_norm = |g: &[f64]| -> f64 {
        (0..d)
            .map(|k| {
                (0..d * dims.fbm)
                    .map(|e| g[e * d + k] * g[e * d + k])
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    };
    let slice_dist = |ga: &[f64], gb: &[f64]| -> f64 {
        (0..d)
            .map(|k| {
                (0..d * dims.fbm)
                    .map(|e| (ga[e * d + k] - gb[e * d + k]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    };

    let mut run_check = |name: &str,
                         declared: f64,
                         observe: &mut dyn FnMut(&Probe) -> Option<f64>| {
        let spatial = name.contains("lipschitz") || name.contains("hoelder-space");
        let temporal = name.contains("time");
        let mut worst = 0.0;
        let mut witness = ProbeWitness::default();
        for p in &probes {
            if let Some(v) = observe(p) {
                if v > worst {
                    worst = v;
                    witness = ProbeWitness {
                        t: p.t,
                        s: temporal.then_some(p.s),
                        x: p.x.clone(),
                        y: spatial.then(|| p.y.clone()),
                    };
                }
            }
        }
        checks.push(AssumptionCheck {
            name: name.to_string(),
            declared,
            observed: worst,
            passed: worst <= declared + 1e-9 * declared.max(1.0),
            witness,
        });
    };

    run_check("drift-lipschitz", cs.l1, &mut |p| {
        let gap = dist(&p.x, &p.y);
        if gap < 1e-9 {
            return None;
        }
        coeffs.b_into(p.t, &p.x, &mut b1);
        coeffs.b_into(p.t, &p.y, &mut b2);
        Some(dist(&b1, &b2) / gap)
    });
    run_check("drift-growth", cs.l2, &mut |p| {
        coeffs.b_into(p.t, &p.x, &mut b1);
        Some(norm(&b1) / (1.0 + norm(&p.x)))
    });
    run_check("ito-lipschitz", cs.l3, &mut |p| {
        let gap = dist(&p.x, &p.y);
        if gap < 1e-9 {
            return None;
        }
        coeffs.sigma_w_into(p.t, &p.x, &mut w1);
        coeffs.sigma_w_into(p.t, &p.y, &mut w2);
        Some(dist(&w1, &w2) / gap)
    });
    run_check("ito-growth", cs.l4, &mut |p| {
        coeffs.sigma_w_into(p.t, &p.x, &mut w1);
        Some(norm(&w1) / (1.0 + norm(&p.x)))
    });
    run_check("fbm-derivative-bound", cs.l5, &mut |p| {
        coeffs.dsigma_h_into(p.t, &p.x, &mut g1);
        Some(slice_norm(&g1))
    });
    run_check("fbm-derivative-hoelder-space", cs.l6, &mut |p| {
        let gap = dist(&p.x, &p.y);
        if gap < 1e-9 {
            return None;
        }
        coeffs.dsigma_h_into(p.t, &p.x, &mut g1);
        coeffs.dsigma_h_into(p.t, &p.y, &mut g2);
        Some(slice_dist(&g1, &g2) / gap.powf(cs.delta))
    });
    run_check("fbm-time-hoelder", cs.l7, &mut |p| {
        let gap = (p.t - p.s).abs();
        if gap < 1e-9 {
            return None;
        }
        coeffs.sigma_h_into(p.t, &p.x, &mut h1);
        coeffs.sigma_h_into(p.s, &p.x, &mut h2);
        coeffs.dsigma_h_into(p.t, &p.x, &mut g1);
        coeffs.dsigma_h_into(p.s, &p.x, &mut g2);
        Some((dist(&h1, &h2) + slice_dist(&g1, &g2)) / gap.powf(cs.beta))
    });
    // Linear growth of sigma_H is implied by the derivative bound, with the
    // level at zero measured from the probes' time coordinates.
    let zero = vec![0.0; d];
    let zero_level = probes
        .iter()
        .map(|p| {
            coeffs.sigma_h_into(p.t, &zero, &mut h1);
            norm(&h1)
        })
        .fold(0.0, f64::max);
    run_check("fbm-growth", cs.sigma_h_growth(d, zero_level), &mut |p| {
        coeffs.sigma_h_into(p.t, &p.x, &mut h1);
        Some(norm(&h1) / (1.0 + norm(&p.x)))
    });

    let passed = checks.iter().all(|c| c.passed);
    Ok(AssumptionReport { checks, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::noise::{FbmMethod, NoiseBundle};
    use approx::assert_relative_eq;

    fn bundle(n: usize, h: f64, dims: Dims, seed: u64) -> NoiseBundle {
        let grid = TimeGrid::uniform(1.0, n).unwrap();
        NoiseBundle::generate(
            &grid,
            Hurst::new(h).unwrap(),
            dims.fbm,
            dims.bm,
            seed,
            FbmMethod::Auto,
        )
        .unwrap()
    }

    fn problem(family: CoefficientFamily, x0: f64, h: f64) -> SdeProblem {
        let coeffs = family.build().unwrap();
        SdeProblem::new(coeffs, vec![x0], 1.0, Hurst::new(h).unwrap()).unwrap()
    }

    #[test]
    fn euler_is_deterministic_and_exact_for_constant_drift() {
        let prob = problem(CoefficientFamily::DriftConstant { rate: 2.0 }, 1.0, 0.75);
        let noise = bundle(64, 0.75, prob.coefficients.dims(), 11);
        let run1 = euler_solve(&prob, &noise).unwrap();
        let run2 = euler_solve(&prob, &noise).unwrap();
        assert_eq!(run1.path.values(), run2.path.values());
        // Constant drift makes the Euler scheme exact at the nodes.
        let oracle = closed_form_oracle(&prob, &noise).unwrap();
        assert!(run1.path.sup_distance(&oracle).unwrap() < 1e-12);
    }

    #[test]
    fn linear_drift_converges_to_exponential() {
        let prob = problem(CoefficientFamily::LinearDrift { rate: 1.0 }, 1.0, 0.75);
        let mut errs = Vec::new();
        for n in [64usize, 256] {
            let noise = bundle(n, 0.75, prob.coefficients.dims(), 5);
            let run = euler_solve(&prob, &noise).unwrap();
            let last = *run.path.scalar_values().unwrap().last().unwrap();
            errs.push((last - 1.0f64.exp()).abs());
        }
        assert!(errs[1] < errs[0] / 3.0, "first-order decay expected: {errs:?}");
    }

    #[test]
    fn euler_reproduces_young_exponential_closely() {
        let prob = problem(CoefficientFamily::YoungExponential, 1.0, 0.8);
        let noise = bundle(512, 0.8, prob.coefficients.dims(), 13);
        let run = euler_solve(&prob, &noise).unwrap();
        let oracle = closed_form_oracle(&prob, &noise).unwrap();
        let err = run.path.sup_distance(&oracle).unwrap();
        assert!(err < 0.05, "Euler vs Young exponential: {err}");
    }

    #[test]
    fn blow_up_is_reported() {
        let coeffs = CoefficientSet::custom(
            Dims { state: 1, bm: 1, fbm: 1 },
            AssumptionConstants::zeroed(),
            Arc::new(|_t, x, out: &mut [f64]| out[0] = x[0] * x[0] * x[0]),
            Arc::new(|_t, _x, out: &mut [f64]| out.fill(0.0)),
            Arc::new(|_t, _x, out: &mut [f64]| out.fill(0.0)),
            Arc::new(|_t, _x, out: &mut [f64]| out.fill(0.0)),
        );
        let prob = SdeProblem::new(coeffs, vec![40.0], 1.0, Hurst::new(0.75).unwrap()).unwrap();
        let noise = bundle(64, 0.75, Dims { state: 1, bm: 1, fbm: 1 }, 3);
        match euler_solve(&prob, &noise) {
            Err(Error::BlowUp { node, .. }) => assert!(node > 0),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let prob = problem(CoefficientFamily::GeometricBm { volatility: 0.5 }, 1.0, 0.75);
        let noise = bundle(32, 0.75, Dims { state: 1, bm: 2, fbm: 1 }, 3);
        assert!(matches!(
            euler_solve(&prob, &noise),
            Err(Error::DimensionMismatch(_))
        ));
        let err = SdeProblem::new(
            CoefficientFamily::GeometricBm { volatility: 0.5 }.build().unwrap(),
            vec![1.0, 2.0],
            1.0,
            Hurst::new(0.75).unwrap(),
        );
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn hurst_mismatch_is_rejected() {
        let prob = problem(CoefficientFamily::YoungExponential, 1.0, 0.8);
        let noise = bundle(32, 0.7, prob.coefficients.dims(), 3);
        assert!(matches!(
            euler_solve(&prob, &noise),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn gbm_oracle_matches_ito_formula_at_origin() {
        let prob = problem(CoefficientFamily::GeometricBm { volatility: 0.7 }, 2.0, 0.75);
        let noise = bundle(16, 0.75, prob.coefficients.dims(), 9);
        let oracle = closed_form_oracle(&prob, &noise).unwrap();
        let ov = oracle.scalar_values().unwrap();
        assert_relative_eq!(ov[0], 2.0, max_relative = 1e-15);
        let w_end = noise.bm.values()[[noise.bm.grid().len() - 1, 0]];
        let expect = 2.0 * (0.7 * w_end - 0.5 * 0.49).exp();
        assert_relative_eq!(*ov.last().unwrap(), expect, max_relative = 1e-13);
    }

    #[test]
    fn validation_accepts_declared_families() {
        for (name, family) in coefficient_registry() {
            let coeffs = family.build().unwrap();
            let report = validate_assumptions(&coeffs, 400, 77).unwrap();
            assert!(
                report.passed,
                "{name}: {:?}",
                report.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn validation_flags_quadratic_drift_with_witness() {
        // b(x) = x^2 is not globally Lipschitz; a declared constant that only
        // holds near the origin must be exposed by the larger probe scales.
        let coeffs = CoefficientSet::custom(
            Dims { state: 1, bm: 1, fbm: 1 },
            AssumptionConstants {
                l1: 3.0,
                l2: 3.0,
                ..AssumptionConstants::zeroed()
            },
            Arc::new(|_t, x, out: &mut [f64]| out[0] = x[0] * x[0]),
            Arc::new(|_t, _x, out: &mut [f64]| out.fill(0.0)),
            Arc::new(|_t, _x, out: &mut [f64]| out.fill(0.0)),
            Arc::new(|_t, _x, out: &mut [f64]| out.fill(0.0)),
        );
        let report = validate_assumptions(&coeffs, 400, 5).unwrap();
        assert!(!report.passed);
        let lip = report.checks.iter().find(|c| c.name == "drift-lipschitz").unwrap();
        assert!(!lip.passed);
        assert!(lip.observed > 3.0);
        // The witness must reproduce the observed ratio.
        let y = lip.witness.y.as_ref().expect("spatial check carries y");
        let ratio = (lip.witness.x[0].powi(2) - y[0].powi(2)).abs() / (lip.witness.x[0] - y[0]).abs();
        assert_relative_eq!(ratio, lip.observed, max_relative = 1e-12);
    }

    #[test]
    fn validation_requires_a_minimum_budget() {
        let coeffs = CoefficientFamily::YoungExponential.build().unwrap();
        assert!(matches!(
            validate_assumptions(&coeffs, 99, 1),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn probe_report_serializes() {
        let coeffs = CoefficientFamily::TimeModulated { beta: 0.6, amplitude: 0.5 }
            .build()
            .unwrap();
        let report = validate_assumptions(&coeffs, 150, 2).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: AssumptionReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
