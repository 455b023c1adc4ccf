//! The four commands. Each one writes its artifacts and a `summary.json`; the
//! summary is written even when the command fails after loading the scenario.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use hu_shadow_core::claims::{all_claims, Claim};
use hu_shadow_core::{
    classify, shadow_contracting, shadow_expanding, witness_divergence, Classification, ClassifyOptions,
    DivergenceWitness, Error, GrowthProfile, MapSystem, PseudoOrbit, ShadowMeta, ShadowResult,
};
use serde::Serialize;

use crate::report::{num, opt_num, write_csv, write_json, Summary, Verdict};
use crate::scenario::{Format, Scenario};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Shadow,
    Instability,
    Reproduce,
}

/// Command-line values that replace scenario fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub horizon: Option<usize>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Summary,
    pub files: Vec<PathBuf>,
    /// Human-readable text for stdout.
    pub report: Option<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.summary.verdict == Verdict::Pass
    }
}

/// `--out`, then the environment value, then the scenario, then `out`.
pub fn resolve_out_dir(flag: Option<PathBuf>, env: Option<OsString>, file: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| env.filter(|v| !v.is_empty()).map(PathBuf::from))
        .or(file)
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Relative slack when comparing a measured error to its bound.
const BOUND_SLACK: f64 = 1e-9;
/// Largest accepted `residual_sup` for a constructed true orbit.
const RESIDUAL_LIMIT: f64 = 1e-9;

pub fn execute(
    command: Command,
    scenario: Option<Scenario>,
    overrides: &Overrides,
    out: &Path,
) -> Result<Outcome, CliError> {
    if command == Command::Reproduce {
        return reproduce(out);
    }
    let mut scn = scenario.ok_or_else(|| CliError::Config("a scenario is required".into()))?;
    if let Some(h) = overrides.horizon {
        scn.horizon = h;
    }
    if let Some(e) = overrides.epsilon {
        scn.epsilon = e;
    }
    scn.validate()?;
    let sys = scn.map_system()?;

    let horizon = match command {
        Command::Analyze => scn.analysis.profile_horizon,
        _ => scn.horizon,
    };
    let mut run = Run {
        scn: &scn,
        sys: &sys,
        dir: out,
        summary: Summary::new(Some(scn.epsilon), Some(horizon)),
        files: Vec::new(),
    };
    let result = match command {
        Command::Analyze => run.analyze(),
        Command::Shadow => run.shadow(),
        Command::Instability => run.instability(),
        Command::Reproduce => unreachable!(),
    };
    if let Err(e) = result {
        run.summary.verdict = Verdict::Fail;
        // the original error matters more than a failed summary write
        let _ = write_json(out, "summary.json", &run.summary);
        return Err(e);
    }
    let path = write_json(out, "summary.json", &run.summary)?;
    run.files.push(path);
    Ok(Outcome {
        summary: run.summary,
        files: run.files,
        report: None,
    })
}

struct Run<'a> {
    scn: &'a Scenario,
    sys: &'a MapSystem,
    dir: &'a Path,
    summary: Summary,
    files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct ClassificationReport<'a> {
    family: &'a str,
    profile_horizon: usize,
    options: ClassifyOptions,
    classification: &'a Classification,
}

#[derive(Serialize)]
struct ShadowReport<'a> {
    family: &'a str,
    classification: &'a Classification,
    method: &'a str,
    epsilon: f64,
    horizon: usize,
    orbit_length: usize,
    pseudo_orbit_truncated: bool,
    sup_err: f64,
    bound: f64,
    within_bound: bool,
    within_sound_bound: bool,
    meta: &'a ShadowMeta,
    verdict: Verdict,
}

#[derive(Serialize)]
struct WitnessReport<'a> {
    family: &'a str,
    classification: &'a Classification,
    witness: &'a DivergenceWitness,
    verdict: Verdict,
}

impl Run<'_> {
    fn wants(&self, f: Format) -> bool {
        self.scn.output.formats.contains(&f)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        if self.wants(Format::Json) {
            let p = write_json(self.dir, name, value)?;
            self.files.push(p);
        }
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        if self.wants(Format::Csv) {
            let p = write_csv(self.dir, name, header, rows)?;
            self.files.push(p);
        }
        Ok(())
    }

    fn classify(&mut self) -> Result<(GrowthProfile, Classification), CliError> {
        let profile = GrowthProfile::for_system(self.sys, self.scn.analysis.profile_horizon);
        let cls = classify(&profile, self.sys, &self.scn.analysis.classify_options())?;
        self.summary.classification = Some(cls.kind_name().to_string());
        self.summary.k = cls.k();
        Ok((profile, cls))
    }

    fn analyze(&mut self) -> Result<(), CliError> {
        let (profile, cls) = self.classify()?;
        let rows: Vec<Vec<String>> = (1..=profile.horizon)
            .map(|n| {
                vec![
                    n.to_string(),
                    num(self.sys.growth_rate(n)),
                    num(self.sys.ln_growth_rate(n)),
                    num(profile.log_partial_at(n)),
                    num(profile.avg[n - 1]),
                ]
            })
            .collect();
        self.csv("profile.csv", &["n", "rate", "ln_rate", "log_partial", "avg"], &rows)?;
        let report = ClassificationReport {
            family: self.sys.family().name(),
            profile_horizon: profile.horizon,
            options: self.scn.analysis.classify_options(),
            classification: &cls,
        };
        self.json("classification.json", &report)?;
        self.summary.verdict = Verdict::Pass;
        Ok(())
    }

    fn shadow(&mut self) -> Result<(), CliError> {
        let (_, cls) = self.classify()?;
        let scn = self.scn;
        let pseudo = PseudoOrbit::generate(self.sys, scn.a1(), scn.epsilon, scn.residual, scn.horizon)?;
        let result = match cls {
            Classification::ConvergentBelowOne { k } => shadow_contracting(self.sys, &pseudo, k)?,
            Classification::ConvergentAboveOne { k } => shadow_expanding(self.sys, &pseudo, k, &scn.shadow)?,
            _ => {
                return Err(Error::ClassificationMismatch {
                    found: cls.kind_name().into(),
                    reason: "no shadowing construction".into(),
                }
                .into())
            }
        };
        let within = result.sup_err <= result.bound * (1.0 + BOUND_SLACK);
        let sound = result.sup_err <= result.meta.sound_bound * (1.0 + BOUND_SLACK);
        let verdict = if within && result.meta.residual_sup <= RESIDUAL_LIMIT && !pseudo.truncated {
            Verdict::Pass
        } else {
            Verdict::Fail
        };

        self.csv("orbit.csv", ORBIT_HEADER, &orbit_rows(&pseudo, &result))?;
        let report = ShadowReport {
            family: self.sys.family().name(),
            classification: &cls,
            method: result.method.name(),
            epsilon: scn.epsilon,
            horizon: scn.horizon,
            orbit_length: pseudo.len(),
            pseudo_orbit_truncated: pseudo.truncated,
            sup_err: result.sup_err,
            bound: result.bound,
            within_bound: within,
            within_sound_bound: sound,
            meta: &result.meta,
            verdict,
        };
        self.json("shadow.json", &report)?;

        let s = &mut self.summary;
        s.sup_err = Some(result.sup_err);
        s.bound = Some(result.bound);
        s.method = Some(result.method.name().to_string());
        s.truncation = Some(result.meta.truncation);
        s.iterations = Some(result.meta.iterations);
        s.verdict = verdict;
        Ok(())
    }

    fn instability(&mut self) -> Result<(), CliError> {
        let (_, cls) = self.classify()?;
        let w = witness_divergence(self.sys, self.scn.epsilon, self.scn.horizon, &cls)?;
        // k = 0 is the starting point, not a claim about divergence
        let holds = w
            .samples
            .iter()
            .filter(|s| s.k >= 1)
            .all(|s| s.observed_error >= s.lower_bound * (1.0 - BOUND_SLACK));
        let verdict = if holds { Verdict::Pass } else { Verdict::Fail };

        let rows: Vec<Vec<String>> = w
            .samples
            .iter()
            .map(|s| {
                vec![
                    s.k.to_string(),
                    s.n.to_string(),
                    num(s.lower_bound),
                    num(s.partial_sum),
                    num(s.observed_error),
                    num(s.log10_lower_bound),
                    num(s.log10_observed),
                    s.log_domain.to_string(),
                ]
            })
            .collect();
        self.csv(
            "witness.csv",
            &[
                "k",
                "n",
                "lower_bound",
                "partial_sum",
                "observed_error",
                "log10_lower_bound",
                "log10_observed",
                "log_domain",
            ],
            &rows,
        )?;
        let report = WitnessReport {
            family: self.sys.family().name(),
            classification: &cls,
            witness: &w,
            verdict,
        };
        self.json("witness.json", &report)?;

        let s = &mut self.summary;
        s.sup_err = w.samples.iter().map(|s| s.observed_error).reduce(f64::max);
        s.bound = w.samples.last().map(|s| s.lower_bound);
        s.method = Some("DivergenceWitness".into());
        s.verdict = verdict;
        Ok(())
    }
}

pub const ORBIT_HEADER: &[&str] = &[
    "n",
    "a_re",
    "a_im",
    "b_re",
    "b_im",
    "r_re",
    "r_im",
    "abs_err",
    "bound",
    "log10_abs_err",
];

/// One row per index; `r_n` is blank on the last row, which has no successor.
fn orbit_rows(pseudo: &PseudoOrbit, result: &ShadowResult) -> Vec<Vec<String>> {
    (0..pseudo.len())
        .map(|i| {
            let a = pseudo.a[i];
            let b = result.b[i];
            let r = pseudo.r.get(i);
            let err = result.d[i].norm();
            vec![
                (i + 1).to_string(),
                num(a.re),
                num(a.im),
                num(b.re),
                num(b.im),
                opt_num(r.map(|z| z.re)),
                opt_num(r.map(|z| z.im)),
                num(err),
                num(result.bound),
                opt_num(Some(err.log10())),
            ]
        })
        .collect()
}

#[derive(Serialize)]
struct ReproduceReport<'a> {
    pass: bool,
    passed: usize,
    total: usize,
    claims: &'a [Claim],
}

fn reproduce(out: &Path) -> Result<Outcome, CliError> {
    let claims = all_claims();
    let passed = claims.iter().filter(|c| c.pass()).count();
    let all = passed == claims.len();
    let report = ReproduceReport {
        pass: all,
        passed,
        total: claims.len(),
        claims: &claims,
    };
    let mut files = vec![write_json(out, "reproduce.json", &report)?];
    let mut summary = Summary::new(None, None);
    summary.verdict = if all { Verdict::Pass } else { Verdict::Fail };
    files.push(write_json(out, "summary.json", &summary)?);
    let mut text: String = claims.iter().map(Claim::report).collect();
    text.push_str(&format!("{passed}/{} criteria pass\n", claims.len()));
    Ok(Outcome {
        summary,
        files,
        report: Some(text),
    })
}
