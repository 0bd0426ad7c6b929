//! Named coefficient families with declared regularity constants.
//!
//! Each family carries closed-form Lipschitz/growth/Hoelder constants derived
//! from its formula, so assumption validation and estimate audits can check
//! measured ratios against declared values.

use super::{AssumptionConstants, CoefficientSet, Dims, VecField};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// State/noise dimensions of a coefficient family, settable for the
/// multidimensional families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyDims {
    pub state: usize,
    pub bm: usize,
    pub fbm: usize,
}

impl Default for FamilyDims {
    fn default() -> Self {
        FamilyDims { state: 1, bm: 1, fbm: 1 }
    }
}

impl From<FamilyDims> for Dims {
    fn from(d: FamilyDims) -> Dims {
        Dims { state: d.state, bm: d.bm, fbm: d.fbm }
    }
}

/// Closed-form solution available for a family, used as the reference in
/// convergence studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    /// `x(t) = x0 + int_0^t b(s) ds`, no noise.
    DriftOnly,
    /// Geometric Brownian motion `x0 exp(v W_t - v^2 t / 2)`.
    ItoGbm,
    /// Young exponential `x0 exp(B^H_t)`.
    YoungExponential,
    /// Joint exponential `x0 exp(v W_t - v^2 t / 2 + B^H_t)`.
    MixedExponential,
}

/// Registry of coefficient families. Serialized form is the kebab-case tag
/// plus the variant's parameters, e.g.
/// `{ "family": "linear-mixed", "drift": 0.1, "vol_bm": 0.1, "vol_fbm": 0.3 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum CoefficientFamily {
    /// `b = rate`, no diffusion. Scalar.
    DriftConstant { rate: f64 },
    /// `b(t) = amplitude * cos(frequency * t)`, no diffusion. Scalar.
    DriftCosine { amplitude: f64, frequency: f64 },
    /// `b(x) = rate * x`, no diffusion. Scalar.
    LinearDrift { rate: f64 },
    /// `sigma_W(x) = volatility * x`, no drift, no fBm coefficient. Scalar.
    GeometricBm { volatility: f64 },
    /// `sigma_H(x) = x`, no drift, no Ito coefficient. Scalar.
    YoungExponential,
    /// `sigma_W(x) = volatility * x` and `sigma_H(x) = x` jointly. Scalar.
    MixedExponential { volatility: f64 },
    /// `b = drift * x`, `sigma_W = vol_bm * x`, `sigma_H = vol_fbm * x`. Scalar.
    LinearMixed { drift: f64, vol_bm: f64, vol_fbm: f64 },
    /// Bounded smooth fields in any dimension: `b_i = amplitude * sin(x_i)`,
    /// `sigma_W^{ik} = amplitude * cos(x_i)`, `sigma_H^{ij} = amplitude * sin(x_i)`.
    BoundedSmooth {
        amplitude: f64,
        #[serde(default)]
        dims: FamilyDims,
    },
    /// Time-modulated scalar fBm coefficient `sigma_H(t, x) = (1 + amplitude * t^beta) sin(x)`
    /// with fractional time regularity `beta`; declared constants assume a
    /// horizon of at most 1.
    TimeModulated { beta: f64, amplitude: f64 },
}

impl CoefficientFamily {
    /// Kebab-case tag, matching the serialized `family` field.
    pub fn name(&self) -> &'static str {
        match self {
            CoefficientFamily::DriftConstant { .. } => "drift-constant",
            CoefficientFamily::DriftCosine { .. } => "drift-cosine",
            CoefficientFamily::LinearDrift { .. } => "linear-drift",
            CoefficientFamily::GeometricBm { .. } => "geometric-bm",
            CoefficientFamily::YoungExponential => "young-exponential",
            CoefficientFamily::MixedExponential { .. } => "mixed-exponential",
            CoefficientFamily::LinearMixed { .. } => "linear-mixed",
            CoefficientFamily::BoundedSmooth { .. } => "bounded-smooth",
            CoefficientFamily::TimeModulated { .. } => "time-modulated",
        }
    }

    /// The closed-form reference solution this family admits, if any.
    pub fn oracle_kind(&self) -> Option<OracleKind> {
        match self {
            CoefficientFamily::DriftConstant { .. } | CoefficientFamily::DriftCosine { .. } => {
                Some(OracleKind::DriftOnly)
            }
            CoefficientFamily::GeometricBm { .. } => Some(OracleKind::ItoGbm),
            CoefficientFamily::YoungExponential => Some(OracleKind::YoungExponential),
            CoefficientFamily::MixedExponential { .. } => Some(OracleKind::MixedExponential),
            _ => None,
        }
    }

    /// Build executable coefficients plus declared constants.
    pub fn build(&self) -> Result<CoefficientSet> {
        let scalar_dims = Dims { state: 1, bm: 1, fbm: 1 };
        match self.clone() {
            CoefficientFamily::DriftConstant { rate } => {
                require_finite("rate", rate)?;
                Ok(CoefficientSet::custom(
                    scalar_dims,
                    AssumptionConstants {
                        l2: rate.abs(),
                        ..AssumptionConstants::zeroed()
                    },
                    Arc::new(move |_t, _x, out: &mut [f64]| out[0] = rate),
                    zero_field(),
                    zero_field(),
                    zero_field(),
                )
                .with_family(self.clone()))
            }
            CoefficientFamily::DriftCosine { amplitude, frequency } => {
                require_finite("amplitude", amplitude)?;
                require_finite("frequency", frequency)?;
                Ok(CoefficientSet::custom(
                    scalar_dims,
                    AssumptionConstants {
                        l2: amplitude.abs(),
                        ..AssumptionConstants::zeroed()
                    },
                    Arc::new(move |t, _x, out: &mut [f64]| out[0] = amplitude * (frequency * t).cos()),
                    zero_field(),
                    zero_field(),
                    zero_field(),
                )
                .with_family(self.clone()))
            }
            CoefficientFamily::LinearDrift { rate } => {
                require_finite("rate", rate)?;
                Ok(CoefficientSet::custom(
                    scalar_dims,
                    AssumptionConstants {
                        l1: rate.abs(),
                        l2: rate.abs(),
                        ..AssumptionConstants::zeroed()
                    },
                    Arc::new(move |_t, x, out: &mut [f64]| out[0] = rate * x[0]),
                    zero_field(),
                    zero_field(),
                    zero_field(),
                )
                .with_family(self.clone()))
            }
            CoefficientFamily::GeometricBm { volatility } => {
                require_finite("volatility", volatility)?;
                Ok(CoefficientSet::custom(
                    scalar_dims,
                    AssumptionConstants {
                        l3: volatility.abs(),
                        l4: volatility.abs(),
                        ..AssumptionConstants::zeroed()
                    },
                    zero_field(),
                    Arc::new(move |_t, x, out: &mut [f64]| out[0] = volatility * x[0]),
                    zero_field(),
                    zero_field(),
                )
                .with_family(self.clone()))
            }
            CoefficientFamily::YoungExponential => Ok(CoefficientSet::custom(
                scalar_dims,
                AssumptionConstants {
                    l5: 1.0,
                    ..AssumptionConstants::zeroed()
                },
                zero_field(),
                zero_field(),
                Arc::new(|_t, x, out: &mut [f64]| out[0] = x[0]),
                Arc::new(|_t, _x, out: &mut [f64]| out[0] = 1.0),
            )
            .with_family(self.clone())),
            CoefficientFamily::MixedExponential { volatility } => {
                require_finite("volatility", volatility)?;
                Ok(CoefficientSet::custom(
                    scalar_dims,
                    AssumptionConstants {
                        l3: volatility.abs(),
                        l4: volatility.abs(),
                        l5: 1.0,
                        ..AssumptionConstants::zeroed()
                    },
                    zero_field(),
                    Arc::new(move |_t, x, out: &mut [f64]| out[0] = volatility * x[0]),
                    Arc::new(|_t, x, out: &mut [f64]| out[0] = x[0]),
                    Arc::new(|_t, _x, out: &mut [f64]| out[0] = 1.0),
                )
                .with_family(self.clone()))
            }
            CoefficientFamily::LinearMixed { drift, vol_bm, vol_fbm } => {
                require_finite("drift", drift)?;
                require_finite("vol_bm", vol_bm)?;
                require_finite("vol_fbm", vol_fbm)?;
                Ok(CoefficientSet::custom(
                    scalar_dims,
                    AssumptionConstants {
                        l1: drift.abs(),
                        l2: drift.abs(),
                        l3: vol_bm.abs(),
                        l4: vol_bm.abs(),
                        l5: vol_fbm.abs(),
                        ..AssumptionConstants::zeroed()
                    },
                    Arc::new(move |_t, x, out: &mut [f64]| out[0] = drift * x[0]),
                    Arc::new(move |_t, x, out: &mut [f64]| out[0] = vol_bm * x[0]),
                    Arc::new(move |_t, x, out: &mut [f64]| out[0] = vol_fbm * x[0]),
                    Arc::new(move |_t, _x, out: &mut [f64]| out[0] = vol_fbm),
                )
                .with_family(self.clone()))
            }
            CoefficientFamily::BoundedSmooth { amplitude, dims } => {
                require_finite("amplitude", amplitude)?;
                let d: Dims = dims.into();
                if d.state == 0 || d.bm == 0 || d.fbm == 0 {
                    return Err(Error::InvalidParameter(
                        "bounded-smooth dims must all be positive".into(),
                    ));
                }
                let a = amplitude.abs();
                let (ds, db, dh) = (d.state, d.bm, d.fbm);
                // Per-coordinate 1-Lipschitz entries give Frobenius factors:
                // b: L1 = a, |b| <= a sqrt(d); sigma_W rows repeat cos(x_i)
                // over r columns, so L3 = a sqrt(r) and L4 = a sqrt(d r).
                // Each partial dsigma_H/dx_k has m nonzero entries a cos(x_k),
                // so its Frobenius norm is at most a sqrt(m) (same for the
                // Hoelder modulus with delta = 1).
                let constants = AssumptionConstants {
                    l1: a,
                    l2: a * (ds as f64).sqrt(),
                    l3: a * (db as f64).sqrt(),
                    l4: a * ((ds * db) as f64).sqrt(),
                    l5: a * (dh as f64).sqrt(),
                    l6: a * (dh as f64).sqrt(),
                    l7: 0.0,
                    beta: 1.0,
                    delta: 1.0,
                };
                Ok(CoefficientSet::custom(
                    d,
                    constants,
                    Arc::new(move |_t, x, out: &mut [f64]| {
                        for i in 0..ds {
                            out[i] = amplitude * x[i].sin();
                        }
                    }),
                    Arc::new(move |_t, x, out: &mut [f64]| {
                        for i in 0..ds {
                            for k in 0..db {
                                out[i * db + k] = amplitude * x[i].cos();
                            }
                        }
                    }),
                    Arc::new(move |_t, x, out: &mut [f64]| {
                        for i in 0..ds {
                            for j in 0..dh {
                                out[i * dh + j] = amplitude * x[i].sin();
                            }
                        }
                    }),
                    Arc::new(move |_t, x, out: &mut [f64]| {
                        out.fill(0.0);
                        for i in 0..ds {
                            for j in 0..dh {
                                out[(i * dh + j) * ds + i] = amplitude * x[i].cos();
                            }
                        }
                    }),
                )
                .with_family(self.clone()))
            }
            CoefficientFamily::TimeModulated { beta, amplitude } => {
                require_finite("amplitude", amplitude)?;
                if !(beta > 0.0 && beta <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "time-modulated beta must lie in (0, 1], got {beta}"
                    )));
                }
                let a = amplitude.abs();
                // On horizons <= 1 the modulation stays in [1 - a, 1 + a] and
                // |t^beta - s^beta| <= |t - s|^beta, so sigma and dsigma each
                // move by at most a |t - s|^beta in time.
                let constants = AssumptionConstants {
                    l1: 0.0,
                    l2: 0.0,
                    l3: 0.0,
                    l4: 0.0,
                    l5: 1.0 + a,
                    l6: 1.0 + a,
                    l7: 2.0 * a,
                    beta,
                    delta: 1.0,
                };
                Ok(CoefficientSet::custom(
                    scalar_dims,
                    constants,
                    zero_field(),
                    zero_field(),
                    Arc::new(move |t, x, out: &mut [f64]| {
                        out[0] = (1.0 + amplitude * t.powf(beta)) * x[0].sin();
                    }),
                    Arc::new(move |t, x, out: &mut [f64]| {
                        out[0] = (1.0 + amplitude * t.powf(beta)) * x[0].cos();
                    }),
                )
                .with_family(self.clone()))
            }
        }
    }
}

fn zero_field() -> VecField {
    Arc::new(|_t, _x, out: &mut [f64]| out.fill(0.0))
}

fn require_finite(what: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must be finite, got {v}")))
    }
}

/// Canonical catalog of families with reference parameters, keyed by tag.
/// Unknown names report an error listing the catalog.
pub fn coefficient_registry() -> Vec<(&'static str, CoefficientFamily)> {
    vec![
        ("drift-constant", CoefficientFamily::DriftConstant { rate: 1.0 }),
        (
            "drift-cosine",
            CoefficientFamily::DriftCosine { amplitude: 1.0, frequency: 3.0 },
        ),
        ("linear-drift", CoefficientFamily::LinearDrift { rate: 0.5 }),
        ("geometric-bm", CoefficientFamily::GeometricBm { volatility: 0.5 }),
        ("young-exponential", CoefficientFamily::YoungExponential),
        (
            "mixed-exponential",
            CoefficientFamily::MixedExponential { volatility: 0.3 },
        ),
        (
            "linear-mixed",
            CoefficientFamily::LinearMixed { drift: 0.2, vol_bm: 0.2, vol_fbm: 0.3 },
        ),
        (
            "bounded-smooth",
            CoefficientFamily::BoundedSmooth { amplitude: 0.5, dims: FamilyDims::default() },
        ),
        (
            "time-modulated",
            CoefficientFamily::TimeModulated { beta: 0.6, amplitude: 0.5 },
        ),
    ]
}

/// Look up a registry family by its kebab-case tag.
pub fn family_by_name(name: &str) -> Result<CoefficientFamily> {
    coefficient_registry()
        .into_iter()
        .find(|(tag, _)| *tag == name)
        .map(|(_, fam)| fam)
        .ok_or_else(|| Error::UnknownFamily(name.to_string()))
}
