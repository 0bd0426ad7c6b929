//! Subcommand implementations: scenario loading with command-line
//! overrides, deterministic artifact writing, and the pass/fail plumbing.
//!
//! Every artifact is a pure function of the scenario, so reruns with the
//! same config produce byte-identical files; the run timestamp lives only
//! in the manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use fracsde::{
    audit_drift_estimates, audit_fbm_integral_estimates, audit_ito_estimates, calibrate_caps,
    closed_form_oracle, euler_solve, fbm_batch_circulant, fbm_corpus, generate_fbm_cholesky,
    generate_fbm_circulant, hoelder_exponent_estimate, moment_bound_audit,
    pathwise_uniqueness_harness, smooth_corpus, strong_convergence_study, validate_assumptions,
    CapSet, EstimateReport, HoelderEstimate, NoiseBundle, SamplePath, Scenario,
};
use serde::Serialize;

use crate::{Command, Common};

/// Verdict of one invocation: `Failed` means every step ran but some audit
/// or study did not meet its check (exit code 2).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum Outcome {
    Passed,
    Failed,
}

fn outcome_of(ok: bool) -> Outcome {
    if ok {
        Outcome::Passed
    } else {
        Outcome::Failed
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "  ok "
    } else {
        "  FAIL"
    }
}

pub(crate) fn run(cmd: Command) -> anyhow::Result<Outcome> {
    match cmd {
        Command::GenNoise { common } => scenario_loop(&common, "gen-noise", gen_noise),
        Command::Solve { common } => scenario_loop(&common, "solve", solve),
        Command::Audit {
            common,
            mc_budget,
            corpus_size,
            probe_budget,
            levels,
            moment_exponent,
        } => scenario_loop(&common, "audit", |s, out| {
            audit(s, out, mc_budget, corpus_size, probe_budget, &levels, moment_exponent)
        }),
        Command::Converge { common, levels, mc_budget } => {
            scenario_loop(&common, "converge", |s, out| converge(s, out, &levels, mc_budget))
        }
        Command::Uniqueness { common, levels, tolerance } => {
            scenario_loop(&common, "uniqueness", |s, out| uniqueness(s, out, &levels, tolerance))
        }
        Command::Hoelder { common, paths, window } => {
            scenario_loop(&common, "hoelder", |s, out| hoelder(s, out, paths, window))
        }
        Command::ValidateConfig { config } => validate_config(&config),
    }
}

/// Expand a config path into the scenario files it denotes: the file itself,
/// or every `*.toml` under a directory in name order.
fn scenario_paths(config: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if !config.is_dir() {
        return Ok(vec![config.to_path_buf()]);
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(config)
        .with_context(|| format!("reading {}", config.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "toml"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .toml scenario files under {}", config.display());
    }
    Ok(paths)
}

/// Parse a scenario, apply command-line overrides, and re-validate, so an
/// override can never smuggle in an out-of-range parameter.
fn load_scenario(path: &Path, common: &Common) -> anyhow::Result<Scenario> {
    let src = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut scenario: Scenario =
        toml::from_str(&src).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(seed) = common.seed {
        scenario.seed = seed;
    }
    if let Some(steps) = common.steps {
        scenario.steps = steps;
    }
    if let Some(alpha) = common.alpha {
        scenario.alpha = Some(alpha);
    }
    scenario
        .validate()
        .with_context(|| format!("{} (after command-line overrides)", path.display()))?;
    Ok(scenario)
}

/// Output root precedence: `--out-dir`, then FRACSDE_OUT_DIR, then the
/// scenario's `out_dir`, then `./out`.
fn out_root(flag: Option<&Path>, scenario: &Scenario) -> PathBuf {
    if let Some(dir) = flag {
        return dir.to_path_buf();
    }
    if let Some(env) = std::env::var_os("FRACSDE_OUT_DIR") {
        if !env.is_empty() {
            return PathBuf::from(env);
        }
    }
    if let Some(dir) = &scenario.out_dir {
        return PathBuf::from(dir);
    }
    PathBuf::from("out")
}

fn scenario_loop(
    common: &Common,
    command: &str,
    mut body: impl FnMut(&Scenario, &mut OutBox) -> anyhow::Result<Outcome>,
) -> anyhow::Result<Outcome> {
    let mut outcome = Outcome::Passed;
    for path in scenario_paths(&common.config)? {
        let scenario = load_scenario(&path, common)?;
        let root = out_root(common.out_dir.as_deref(), &scenario);
        let mut out = OutBox::create(&root, &scenario.name, command)?;
        let result = body(&scenario, &mut out)
            .with_context(|| format!("scenario `{}` ({})", scenario.name, path.display()))?;
        out.finish(command, &scenario)?;
        if result == Outcome::Failed {
            outcome = Outcome::Failed;
        }
    }
    Ok(outcome)
}

/// One subcommand's output directory (`<root>/<scenario>/<command>`) plus
/// the bookkeeping for its manifest.
struct OutBox {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutBox {
    fn create(root: &Path, scenario: &str, command: &str) -> anyhow::Result<OutBox> {
        let dir = root.join(scenario).join(command);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutBox { dir, files: Vec::new() })
    }

    /// Stage to a dot-partial sibling and rename into place, so an
    /// interrupted run never leaves a half-written artifact under its final
    /// name.
    fn write(&mut self, name: &str, contents: &str) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        let staged = self.dir.join(format!(".{name}.partial"));
        fs::write(&staged, contents).with_context(|| format!("writing {}", staged.display()))?;
        fs::rename(&staged, &path)
            .with_context(|| format!("moving {} into place", path.display()))?;
        println!("wrote {}", path.display());
        self.files.push(name.to_string());
        Ok(())
    }

    /// The manifest carries the run's only timestamp; everything else is a
    /// pure function of the scenario.
    fn finish(mut self, command: &str, scenario: &Scenario) -> anyhow::Result<()> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            command: &'a str,
            tool_version: &'a str,
            created_unix_secs: u64,
            files: Vec<String>,
            scenario: &'a Scenario,
        }
        let created_unix_secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = pretty(&Manifest {
            command,
            tool_version: env!("CARGO_PKG_VERSION"),
            created_unix_secs,
            files: self.files.clone(),
            scenario,
        })?;
        self.write("manifest.json", &manifest)
    }
}

fn pretty<T: Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn json_lines(reports: &[EstimateReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&r.to_json_line());
        out.push('\n');
    }
    out
}

fn gen_noise(s: &Scenario, out: &mut OutBox) -> anyhow::Result<Outcome> {
    let grid = s.build_grid()?;
    let dims = s.coefficients.build()?.dims();
    let bundle = NoiseBundle::generate(&grid, s.hurst(), dims.fbm, dims.bm, s.seed, s.method)?;
    out.write("fbm.csv", &bundle.fbm.to_csv_string())?;
    out.write("bm.csv", &bundle.bm.to_csv_string())?;
    println!(
        "gen-noise `{}`: {} steps, hurst {}, {} fBm + {} BM components, seed {}",
        s.name,
        grid.steps(),
        s.hurst,
        dims.fbm,
        dims.bm,
        s.seed
    );
    Ok(Outcome::Passed)
}

fn solve(s: &Scenario, out: &mut OutBox) -> anyhow::Result<Outcome> {
    let problem = s.to_problem()?;
    let grid = s.build_grid()?;
    let dims = problem.coefficients.dims();
    let bundle = NoiseBundle::generate(&grid, s.hurst(), dims.fbm, dims.bm, s.seed, s.method)?;
    let run = euler_solve(&problem, &bundle)?;
    out.write("path.csv", &run.path.to_csv_string())?;
    out.write("fbm.csv", &run.noise.fbm.to_csv_string())?;
    out.write("bm.csv", &run.noise.bm.to_csv_string())?;
    if s.coefficients.oracle_kind().is_some() {
        let reference = closed_form_oracle(&problem, &run.noise)?;
        let gap = run.path.sup_distance(&reference)?;
        out.write("reference.csv", &reference.to_csv_string())?;
        println!(
            "solve `{}`: {} steps, sup distance to the closed form {gap:.3e}",
            s.name,
            grid.steps()
        );
    } else {
        let last = grid.steps();
        let state: Vec<f64> = (0..run.path.dim()).map(|j| run.path.values()[[last, j]]).collect();
        println!("solve `{}`: {} steps, final state {state:?}", s.name, grid.steps());
    }
    Ok(Outcome::Passed)
}

fn audit(
    s: &Scenario,
    out: &mut OutBox,
    mc_budget: usize,
    corpus_size: usize,
    probe_budget: usize,
    levels: &[usize],
    moment_exponent: u32,
) -> anyhow::Result<Outcome> {
    let grid = s.build_grid()?;
    let h = s.hurst();
    let alpha = s.alpha();
    let coeffs = s.coefficients.build()?;
    let problem = s.to_problem()?;

    let probes = validate_assumptions(&coeffs, probe_budget, s.seed)?;
    out.write("assumptions.json", &pretty(&probes)?)?;
    for c in &probes.checks {
        println!(
            "{} {}: declared {:.4}, observed {:.4}",
            mark(c.passed),
            c.name,
            c.declared,
            c.observed
        );
    }

    let corpus_of = |seed: u64| -> fracsde::Result<Vec<SamplePath>> {
        let mut paths: Vec<SamplePath> =
            smooth_corpus(&grid).into_iter().map(|(_, p)| p).collect();
        paths.extend(fbm_corpus(&grid, h, seed, corpus_size)?);
        Ok(paths)
    };
    let driver_of = |seed: u64| -> fracsde::Result<SamplePath> {
        if grid.is_uniform() {
            generate_fbm_circulant(&grid, h, 1, seed)
        } else {
            generate_fbm_cholesky(&grid, h, 1, seed)
        }
    };

    // The constants in the estimates are generic: fix them on seed set A,
    // then require a disjoint seed set B to stay within twice the caps.
    let seed_a = s.seed;
    let seed_b = s.seed + 1000;
    let open = CapSet::unlimited();
    let mut calibration = Vec::new();
    calibration.extend(audit_drift_estimates(
        &coeffs,
        &corpus_of(seed_a)?,
        alpha,
        &[seed_a],
        &open,
    )?);
    calibration.extend(audit_fbm_integral_estimates(
        &coeffs,
        &corpus_of(seed_a + 1)?,
        &driver_of(seed_a + 2)?,
        alpha,
        &[seed_a + 1, seed_a + 2],
        &open,
    )?);
    calibration.extend(audit_ito_estimates(
        &coeffs,
        &corpus_of(seed_a + 3)?,
        alpha,
        mc_budget,
        seed_a + 3,
        &open,
    )?);
    let caps = calibrate_caps(&calibration).scaled(2.0);

    let mut reports = Vec::new();
    reports.extend(audit_drift_estimates(&coeffs, &corpus_of(seed_b)?, alpha, &[seed_b], &caps)?);
    reports.extend(audit_fbm_integral_estimates(
        &coeffs,
        &corpus_of(seed_b + 1)?,
        &driver_of(seed_b + 2)?,
        alpha,
        &[seed_b + 1, seed_b + 2],
        &caps,
    )?);
    reports.extend(audit_ito_estimates(
        &coeffs,
        &corpus_of(seed_b + 3)?,
        alpha,
        mc_budget,
        seed_b + 3,
        &caps,
    )?);
    reports.push(moment_bound_audit(&problem, levels, moment_exponent, mc_budget, s.seed)?);

    out.write("calibration.jsonl", &json_lines(&calibration))?;
    out.write("audit.jsonl", &json_lines(&reports))?;

    // One line per estimate name: worst implied constant over the corpus.
    let mut by_name: BTreeMap<&str, (f64, bool, bool)> = BTreeMap::new();
    for r in &reports {
        let entry = by_name.entry(&r.name).or_insert((0.0, true, false));
        entry.0 = entry.0.max(r.implied_constant);
        entry.1 &= r.passed;
        entry.2 |= r.inconclusive;
    }
    let mut passed = probes.passed;
    for (name, (implied, ok, inconclusive)) in &by_name {
        println!(
            "{} {name}: implied {implied:.4e}, cap {:.4e}{}",
            mark(*ok),
            caps.cap_for(name),
            if *inconclusive { " (inconclusive)" } else { "" }
        );
        passed &= ok;
    }
    println!("audit `{}`: {}", s.name, verdict(passed));
    Ok(outcome_of(passed))
}

fn converge(
    s: &Scenario,
    out: &mut OutBox,
    levels: &[usize],
    mc_budget: usize,
) -> anyhow::Result<Outcome> {
    let problem = s.to_problem()?;
    let study = strong_convergence_study(&problem, levels, mc_budget, s.seed)?;
    out.write("convergence.csv", &study.to_csv())?;
    out.write("convergence.json", &pretty(&study)?)?;
    let passed = study.fitted_order > 0.0 && !study.low_confidence;
    println!(
        "converge `{}`: order {:.3} (r2 {:.3}) over levels {:?}: {}",
        s.name,
        study.fitted_order,
        study.r2,
        levels,
        verdict(passed)
    );
    Ok(outcome_of(passed))
}

fn uniqueness(
    s: &Scenario,
    out: &mut OutBox,
    levels: &[usize],
    tolerance: f64,
) -> anyhow::Result<Outcome> {
    let problem = s.to_problem()?;
    let report = pathwise_uniqueness_harness(&problem, levels, tolerance, s.seed)?;
    out.write("distances.csv", &report.study.to_csv())?;
    out.write("uniqueness.json", &pretty(&report)?)?;
    println!(
        "uniqueness `{}`: final distance {:.3e} (tolerance {:.1e}), order {:.3}: {}",
        s.name,
        report.final_distance,
        tolerance,
        report.study.fitted_order,
        verdict(report.passed)
    );
    Ok(outcome_of(report.passed))
}

fn hoelder(s: &Scenario, out: &mut OutBox, paths: usize, window: f64) -> anyhow::Result<Outcome> {
    if paths == 0 {
        bail!("--paths must be positive");
    }
    if !window.is_finite() || window <= 0.0 {
        bail!("--window must be positive");
    }
    let grid = s.build_grid()?;
    let h = s.hurst();
    let batch = fbm_batch_circulant(&grid, h, 1, s.seed, paths)?;
    let fbm: Vec<HoelderEstimate> = batch
        .iter()
        .map(hoelder_exponent_estimate)
        .collect::<fracsde::Result<_>>()?;
    let mean_fbm_exponent = fbm.iter().map(|e| e.exponent).sum::<f64>() / paths as f64;

    let problem = s.to_problem()?;
    let dims = problem.coefficients.dims();
    let bundle = NoiseBundle::generate(&grid, h, dims.fbm, dims.bm, s.seed + 500, s.method)?;
    let solution = hoelder_exponent_estimate(&euler_solve(&problem, &bundle)?.path)?;

    #[derive(Serialize)]
    struct Summary {
        hurst: f64,
        window: f64,
        mean_fbm_exponent: f64,
        passed: bool,
        fbm: Vec<HoelderEstimate>,
        solution: HoelderEstimate,
    }
    let passed = (mean_fbm_exponent - s.hurst).abs() <= window;
    out.write(
        "hoelder.json",
        &pretty(&Summary {
            hurst: s.hurst,
            window,
            mean_fbm_exponent,
            passed,
            fbm,
            solution: solution.clone(),
        })?,
    )?;
    println!(
        "hoelder `{}`: mean fBm exponent {:.3} vs hurst {} (window {window}), \
         solution exponent {:.3}: {}",
        s.name,
        mean_fbm_exponent,
        s.hurst,
        solution.exponent,
        verdict(passed)
    );
    Ok(outcome_of(passed))
}

fn validate_config(config: &Path) -> anyhow::Result<Outcome> {
    let mut problem_count = 0usize;
    for path in scenario_paths(config)? {
        let src =
            fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        match toml::from_str::<Scenario>(&src) {
            Err(e) => {
                problem_count += 1;
                println!("{}: parse error: {e}", path.display());
            }
            Ok(scenario) => {
                let problems = scenario.diagnostics();
                if problems.is_empty() {
                    println!("{}: ok", path.display());
                } else {
                    for p in &problems {
                        println!("{}: {p}", path.display());
                    }
                    problem_count += problems.len();
                }
            }
        }
    }
    if problem_count > 0 {
        bail!("{problem_count} configuration problem(s) found");
    }
    Ok(Outcome::Passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario() -> Scenario {
        toml::from_str(
            r#"
name = "t"
hurst = 0.75
horizon = 1.0
steps = 64
seed = 7
x0 = [1.0]

[coefficients]
family = "linear-drift"
rate = 0.5
"#,
        )
        .unwrap()
    }

    #[test]
    fn out_root_precedence() {
        let mut s = scenario();
        // flag beats everything else, including the scenario's own value
        s.out_dir = Some("from-config".into());
        assert_eq!(
            out_root(Some(Path::new("from-flag")), &s),
            PathBuf::from("from-flag")
        );
        // without the flag (and with the env var unset in the test runner)
        // the scenario's own value applies, then the default
        if std::env::var_os("FRACSDE_OUT_DIR").is_none() {
            assert_eq!(out_root(None, &s), PathBuf::from("from-config"));
            s.out_dir = None;
            assert_eq!(out_root(None, &s), PathBuf::from("out"));
        }
    }

    #[test]
    fn outbox_writes_are_staged_then_renamed() {
        let tmp = tempfile::tempdir().unwrap();
        let mut out = OutBox::create(tmp.path(), "s", "solve").unwrap();
        out.write("a.csv", "t,x\n0,1\n").unwrap();
        let dir = tmp.path().join("s").join("solve");
        assert_eq!(fs::read_to_string(dir.join("a.csv")).unwrap(), "t,x\n0,1\n");
        assert!(!dir.join(".a.csv.partial").exists());
        out.finish("solve", &scenario()).unwrap();
        let manifest = fs::read_to_string(dir.join("manifest.json")).unwrap();
        assert!(manifest.contains("\"a.csv\""));
        assert!(manifest.contains("\"command\": \"solve\""));
    }

    #[test]
    fn scenario_paths_sorts_directories() {
        let tmp = tempfile::tempdir().unwrap();
        fs::write(tmp.path().join("b.toml"), "x").unwrap();
        fs::write(tmp.path().join("a.toml"), "x").unwrap();
        fs::write(tmp.path().join("ignored.json"), "x").unwrap();
        let paths = scenario_paths(tmp.path()).unwrap();
        assert_eq!(paths.len(), 2);
        assert!(paths[0].ends_with("a.toml"));
        assert!(paths[1].ends_with("b.toml"));
        assert!(scenario_paths(&tmp.path().join("missing.toml")).is_ok());
        let empty = tempfile::tempdir().unwrap();
        assert!(scenario_paths(empty.path()).is_err());
    }
}
