//! One function per subcommand. Each validates its parameters, runs the
//! analysis and returns everything it would print or write.

use std::fs;

use metaudit_core::nullsim::{self, SimulationConfig, SimulationReport, GENERATOR};
use metaudit_core::pplot::{self, Thresholds};
use metaudit_core::render::{self, AuditReport, PlotSpec, SimulationSection};
use metaudit_core::volcano::{self, NullGap, VolcanoReport};
use metaudit_core::{derive_tests, parse_table, pooling, Scale, TestedStudy};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::args::*;
use crate::error::{analysis, CliError};

#[derive(Debug, Clone, Serialize)]
pub struct InputInfo {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
    pub studies: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RandomInfo {
    pub seed: u64,
    pub generator: &'static str,
}

/// What a command produced: text for stdout when no output directory is
/// given, and named files when one is.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub files: Vec<(String, String)>,
    /// Files that only make sense on disk; asking for them without --out is a usage error.
    pub needs_out: bool,
    pub input: Option<InputInfo>,
    pub thresholds: Option<Thresholds>,
    pub random: Option<RandomInfo>,
}

struct Loaded {
    info: InputInfo,
    tests: Vec<TestedStudy>,
}

pub fn run(cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Compute(a) => compute(a),
        Command::Pplot(a) => pplot_cmd(a),
        Command::Volcano(a) => volcano_cmd(a),
        Command::Pool(a) => pool(a),
        Command::Simulate(a) => simulate(a),
        Command::Audit(a) => audit(a),
    }
}

fn usage(flag: &str, rule: &str, value: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("invalid value for --{flag}: {rule}, got {value}"))
}

fn check_unit(flag: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(usage(flag, "must lie strictly between 0 and 1", v))
    }
}

fn check_input_args(a: &InputArgs) -> Result<(), CliError> {
    check_unit("cl", a.cl)?;
    if !a.null_value.is_finite() {
        return Err(usage("null", "must be finite", a.null_value));
    }
    if a.scale == ScaleArg::Log && a.null_value <= 0.0 {
        return Err(usage("null", "must be positive with --scale log", a.null_value));
    }
    Ok(())
}

fn check_thresholds(t: &ThresholdArgs) -> Result<Thresholds, CliError> {
    for (flag, v) in [
        ("bilinear-alpha", t.bilinear_alpha),
        ("blade-p", t.blade_p),
        ("handle-p", t.handle_p),
        ("ks-alpha", t.ks_alpha),
        ("random-alpha", t.random_alpha),
        ("effect-p", t.effect_p),
    ] {
        check_unit(flag, v)?;
    }
    if !(t.gap_factor > 0.0 && t.gap_factor.is_finite()) {
        return Err(usage("gap-factor", "must be positive", t.gap_factor));
    }
    Ok(t.thresholds())
}

fn check_volcano(v: &VolcanoOptions, n: usize) -> Result<usize, CliError> {
    check_unit("alpha", v.alpha)?;
    if !(v.window >= 0.0 && v.window.is_finite()) {
        return Err(usage("window", "must be non-negative", v.window));
    }
    let m = v.m_tests.unwrap_or(n);
    if m < n {
        return Err(usage(
            "m-tests",
            &format!("must be at least the number of studies ({n})"),
            m,
        ));
    }
    Ok(m)
}

fn load(a: &InputArgs) -> Result<Loaded, CliError> {
    check_input_args(a)?;
    let path = a.input.display().to_string();
    let bytes = fs::read(&a.input).map_err(|e| CliError::Input(format!("{path}: cannot read: {e}")))?;
    let table = parse_table(&bytes, a.cl, a.null_value, &path).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
    let tests = derive_tests(&table, Scale::from(a.scale)).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
    let sha256 = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    Ok(Loaded {
        info: InputInfo {
            path,
            bytes: bytes.len(),
            sha256,
            studies: tests.len(),
        },
        tests,
    })
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("results serialize");
    s.push('\n');
    s
}

fn svg(spec: &PlotSpec, step: &str) -> Result<String, CliError> {
    render::render_svg(spec).map_err(analysis(step))
}

fn compute(a: &ComputeArgs) -> Result<Outcome, CliError> {
    let l = load(&a.input)?;
    let table = render::studies_table(&l.tests, a.input.cl);
    let csv = render::studies_csv(&l.tests);
    let stdout = match a.format {
        Format::Table => table.clone(),
        Format::Csv => csv.clone(),
        Format::Json => json(&l.tests),
    };
    Ok(Outcome {
        stdout,
        files: vec![("studies.csv".into(), csv), ("table.txt".into(), table)],
        input: Some(l.info),
        ..Outcome::default()
    })
}

fn pplot_cmd(a: &PplotArgs) -> Result<Outcome, CliError> {
    let th = check_thresholds(&a.thresholds)?;
    let l = load(&a.input)?;
    let d = pplot::diagnose(&l.tests, &th).map_err(analysis("p-value plot"))?;
    let body = json(&d);
    let plot = svg(
        &PlotSpec::pvalue(&d, &format!("P-value plot: {}", l.info.path)),
        "p-value plot",
    )?;
    Ok(Outcome {
        stdout: body.clone(),
        files: vec![("pplot.json".into(), body), ("pplot.svg".into(), plot)],
        input: Some(l.info),
        thresholds: Some(th),
        ..Outcome::default()
    })
}

#[derive(Serialize)]
struct VolcanoOutput<'a> {
    volcano: &'a VolcanoReport,
    null_gap: &'a NullGap,
}

fn build_volcano(l: &Loaded, input: &InputArgs, v: &VolcanoOptions) -> Result<(VolcanoReport, NullGap), CliError> {
    let m = check_volcano(v, l.tests.len())?;
    let mut report = volcano::build_volcano(&l.tests, input.null_value, v.alpha, m).map_err(analysis("volcano"))?;
    report.log_x = v.log_x;
    let effects: Vec<f64> = l.tests.iter().map(|t| t.record.effect).collect();
    let gap = volcano::gap_around_null(&effects, input.null_value, v.window).map_err(analysis("gap around null"))?;
    Ok((report, gap))
}

fn volcano_cmd(a: &VolcanoArgs) -> Result<Outcome, CliError> {
    let l = load(&a.input)?;
    let (report, gap) = build_volcano(&l, &a.input, &a.volcano)?;
    let body = json(&VolcanoOutput {
        volcano: &report,
        null_gap: &gap,
    });
    let plot = svg(
        &PlotSpec::volcano(&report, &format!("Volcano plot: {}", l.info.path)),
        "volcano",
    )?;
    Ok(Outcome {
        stdout: body.clone(),
        files: vec![("volcano.json".into(), body), ("volcano.svg".into(), plot)],
        input: Some(l.info),
        ..Outcome::default()
    })
}

fn pool(a: &PoolArgs) -> Result<Outcome, CliError> {
    let l = load(&a.input)?;
    let s = pooling::summarize(&l.tests, a.model.into()).map_err(analysis("pooling"))?;
    let body = json(&s);
    Ok(Outcome {
        stdout: body.clone(),
        files: vec![("pool.json".into(), body)],
        input: Some(l.info),
        ..Outcome::default()
    })
}

fn run_simulation(n: usize, reps: usize, seed: u64) -> Result<SimulationReport, CliError> {
    let config = SimulationConfig {
        n_per_study: n,
        replications: reps,
        seed,
    };
    nullsim::simulate(&config).map_err(analysis("simulation"))
}

/// Verdicts need at least four p-values per replication.
fn verdict_thresholds(n: usize, th: &Thresholds) -> Option<&Thresholds> {
    (n >= 4).then_some(th)
}

fn simulate(a: &SimulateArgs) -> Result<Outcome, CliError> {
    if a.n < 2 {
        return Err(usage("n", "must be at least 2", a.n));
    }
    if a.reps < 1 {
        return Err(usage("reps", "must be at least 1", a.reps));
    }
    let th = check_thresholds(&a.thresholds)?;
    let sim = run_simulation(a.n, a.reps, a.sim.seed)?;
    let section = SimulationSection::new(&sim, None, verdict_thresholds(a.n, &th)).map_err(analysis("simulation"))?;
    let body = json(&section);
    let mut files = vec![("simulation.json".into(), body.clone())];
    files.push((
        "simulation.svg".into(),
        svg(&PlotSpec::simulation_grid(&sim, a.sim.panels), "simulation grid")?,
    ));
    if a.export_series {
        for rep in sim.per_replication.iter().take(a.sim.panels) {
            let table = nullsim::replication_table(rep).map_err(analysis("series export"))?;
            files.push((format!("series_{:04}.csv", rep.index + 1), table));
        }
    }
    Ok(Outcome {
        stdout: body,
        files,
        needs_out: a.export_series,
        thresholds: Some(th),
        random: Some(RandomInfo {
            seed: a.sim.seed,
            generator: GENERATOR,
        }),
        ..Outcome::default()
    })
}

fn audit(a: &AuditArgs) -> Result<Outcome, CliError> {
    let th = check_thresholds(&a.thresholds)?;
    let l = load(&a.input)?;
    let n = l.tests.len();
    let (vol, gap) = build_volcano(&l, &a.input, &a.volcano)?;
    let diag = pplot::diagnose(&l.tests, &th).map_err(analysis("p-value plot"))?;
    let pooled = pooling::summarize(&l.tests, a.model.into()).map_err(analysis("pooling"))?;

    let mut files = vec![
        ("studies.csv".to_string(), render::studies_csv(&l.tests)),
        ("table.txt".to_string(), render::studies_table(&l.tests, a.input.cl)),
        (
            "pplot.svg".to_string(),
            svg(
                &PlotSpec::pvalue(&diag, &format!("P-value plot: {}", l.info.path)),
                "p-value plot",
            )?,
        ),
        (
            "volcano.svg".to_string(),
            svg(
                &PlotSpec::volcano(&vol, &format!("Volcano plot: {}", l.info.path)),
                "volcano",
            )?,
        ),
    ];
    let mut random = None;
    let simulation = if a.sim_reps > 0 {
        let sim = run_simulation(n, a.sim_reps, a.sim.seed)?;
        let observed = l.tests.iter().map(|t| t.result.p).fold(f64::INFINITY, f64::min);
        let section =
            SimulationSection::new(&sim, Some(observed), verdict_thresholds(n, &th)).map_err(analysis("simulation"))?;
        files.push((
            "simulation.svg".into(),
            svg(&PlotSpec::simulation_grid(&sim, a.sim.panels), "simulation grid")?,
        ));
        random = Some(RandomInfo {
            seed: a.sim.seed,
            generator: GENERATOR,
        });
        Some(section)
    } else {
        None
    };

    let mut report = AuditReport::new(
        &l.info.path,
        a.input.cl,
        a.input.null_value,
        a.input.scale.into(),
        l.tests,
    );
    report.pvalue_plot = Some(diag);
    report.volcano = Some(vol);
    report.null_gap = Some(gap);
    report.pooled = Some(pooled);
    report.simulation = simulation;
    let body = render::render_report(&report).map_err(analysis("report"))?;
    files.push(("report.json".into(), body.clone()));
    Ok(Outcome {
        stdout: body,
        files,
        input: Some(l.info),
        thresholds: Some(th),
        random,
        ..Outcome::default()
    })
}
