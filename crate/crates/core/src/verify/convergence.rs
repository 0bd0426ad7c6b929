//! Strong convergence of the Euler scheme against closed-form references,
//! and a two-partition-family harness providing numerical evidence of
//! pathwise uniqueness.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::noise::{generate_bm, generate_fbm_circulant, FbmMethod, NoiseBundle};
use crate::rng::mix;
use crate::sde::{closed_form_oracle, euler_solve, OracleKind, SdeProblem};
use crate::verify::ConvergenceStudy;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

fn check_levels(levels: &[usize]) -> Result<usize> {
    if levels.len() < 2 {
        return Err(Error::InvalidParameter(
            "convergence studies need at least two levels".into(),
        ));
    }
    for w in levels.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidParameter("levels must be strictly increasing".into()));
        }
    }
    let finest = *levels.last().unwrap();
    if levels.iter().any(|&n| !finest.is_multiple_of(n)) {
        return Err(Error::InvalidParameter(
            "every level must divide the finest level, so noise restricts exactly".into(),
        ));
    }
    Ok(finest)
}

/// Mean sup-norm distance between the Euler solution and the closed-form
/// reference across a ladder of step counts, with all levels driven by the
/// restriction of one fine-grid noise draw per replica.
///
/// The expectation matches the conditional setup of the moment estimates:
/// for the jointly driven family the fractional path is frozen (one draw)
/// and the mean is over Brownian replicas; purely fractional or purely Ito
/// families draw their driver fresh per replica; drift-only problems are
/// deterministic and use a single replica.
pub fn strong_convergence_study(
    problem: &SdeProblem,
    levels: &[usize],
    mc_budget: usize,
    seed: u64,
) -> Result<ConvergenceStudy> {
    let finest = check_levels(levels)?;
    if mc_budget == 0 {
        return Err(Error::InvalidParameter("mc_budget must be positive".into()));
    }
    let family = problem.coefficients.family().ok_or_else(|| {
        Error::InvalidParameter("convergence studies need a named coefficient family".into())
    })?;
    let kind = family.oracle_kind().ok_or_else(|| {
        Error::InvalidParameter(format!(
            "family `{}` has no closed-form reference solution",
            family.name()
        ))
    })?;
    let dims = problem.coefficients.dims();
    let fine = TimeGrid::uniform(problem.horizon, finest)?;
    let replicas = if kind == OracleKind::DriftOnly { 1 } else { mc_budget };
    let frozen_fbm = if kind == OracleKind::MixedExponential {
        Some(generate_fbm_circulant(&fine, problem.hurst, dims.fbm, seed)?)
    } else {
        None
    };
    let coarse_grids: Vec<TimeGrid> = levels
        .iter()
        .map(|&n| TimeGrid::uniform(problem.horizon, n))
        .collect::<Result<_>>()?;

    let sums = (0..replicas)
        .into_par_iter()
        .map(|k| {
            let rep_seed = mix(seed, k as u64);
            let bundle = match &frozen_fbm {
                Some(fbm) => NoiseBundle {
                    fbm: fbm.clone(),
                    bm: generate_bm(&fine, dims.bm, rep_seed),
                    hurst: problem.hurst,
                    seed: rep_seed,
                },
                None => NoiseBundle::generate(
                    &fine,
                    problem.hurst,
                    dims.fbm,
                    dims.bm,
                    rep_seed,
                    FbmMethod::Circulant,
                )
                .expect("fine uniform grid"),
            };
            coarse_grids
                .iter()
                .map(|g| {
                    let noise = bundle.restrict_to(g).expect("levels divide finest");
                    let run = euler_solve(problem, &noise).expect("study solve");
                    let oracle = closed_form_oracle(problem, &noise).expect("oracle family");
                    run.path.sup_distance(&oracle).expect("same grid")
                })
                .collect::<Vec<f64>>()
        })
        .reduce(
            || vec![0.0; levels.len()],
            |mut acc, row| {
                for (a, b) in acc.iter_mut().zip(row) {
                    *a += b;
                }
                acc
            },
        );

    let errors: Vec<f64> = sums.into_iter().map(|s| s / replicas as f64).collect();
    let meshes: Vec<f64> = levels.iter().map(|&n| problem.horizon / n as f64).collect();
    Ok(ConvergenceStudy::from_errors(meshes, errors))
}

/// Evidence of pathwise uniqueness from one noise draw solved on two
/// different partition families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub study: ConvergenceStudy,
    /// Sup distance between the two finest-level solutions.
    pub final_distance: f64,
    pub passed: bool,
}

/// Solve the same problem under the same driving noise on uniform and on
/// power-graded partitions, level by level, and measure the sup distance
/// between the two solutions (evaluated piecewise linearly on the union
/// grid). If the limit is unique the two partition families must converge to
/// the same path, so the distances should decay to below `tolerance`.
///
/// The driving noise is drawn exactly (Cholesky) on the union of the two
/// finest grids and restricted to every coarser grid, so all solves see
/// consistent increments of one underlying noise path.
pub fn pathwise_uniqueness_harness(
    problem: &SdeProblem,
    levels: &[usize],
    tolerance: f64,
    seed: u64,
) -> Result<UniquenessReport> {
    let finest = check_levels(levels)?;
    if !tolerance.is_finite() || tolerance <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    let dims = problem.coefficients.dims();
    let uniform_fine = TimeGrid::uniform(problem.horizon, finest)?;
    let graded_fine = TimeGrid::graded(problem.horizon, finest, 2.0)?;
    let union = uniform_fine.union(&graded_fine)?;
    let bundle = NoiseBundle::generate(
        &union,
        problem.hurst,
        dims.fbm,
        dims.bm,
        seed,
        FbmMethod::Auto,
    )?;

    let d = dims.state;
    let mut errors = Vec::with_capacity(levels.len());
    for &n in levels {
        let ug = TimeGrid::uniform(problem.horizon, n)?;
        let gg = TimeGrid::graded(problem.horizon, n, 2.0)?;
        let run_u = euler_solve(problem, &bundle.restrict_to(&ug)?)?;
        let run_g = euler_solve(problem, &bundle.restrict_to(&gg)?)?;
        let mut xu = vec![0.0; d];
        let mut xg = vec![0.0; d];
        let mut worst = 0.0f64;
        for &t in union.nodes() {
            run_u.path.interpolate(t, &mut xu);
            run_g.path.interpolate(t, &mut xg);
            let dist = xu
                .iter()
                .zip(&xg)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(dist);
        }
        errors.push(worst);
    }

    let meshes: Vec<f64> = levels.iter().map(|&n| problem.horizon / n as f64).collect();
    let study = ConvergenceStudy::from_errors(meshes, errors);
    let final_distance = *study.errors.last().unwrap();
    let passed = final_distance <= tolerance && study.fitted_order > 0.0;
    Ok(UniquenessReport { study, final_distance, passed })
}
