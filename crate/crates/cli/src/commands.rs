use std::collections::BTreeMap;

use clap::ValueEnum;
use num_complex::Complex64;
use parabell_core::bounds::{ball_coordinates, bell_parameter};
use parabell_core::certify::{certify as run_certify, CertifyConfig, CertifyReport, Source};
use parabell_core::observables::{select_sets, ParafermionObservables};
use parabell_core::optimize::OptimizerConfig;
use parabell_core::tables::{reproduce_tables, EPSILON_SPREAD_TOLERANCE, REFERENCE_TOLERANCE};
use parabell_core::weakmeas::{convergence_study, recover_product, ConvergenceStudy};
use parabell_core::{AmplitudePairs, CorrelationReport, QuantumState, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::output::{write_json, Failure, RunManifest};
use crate::{BallArgs, CertifyArgs, TablesArgs, WeakmeasArgs};

/// Slope window accepted by the convergence study.
const SLOPE_WINDOW: (f64, f64) = (1.8, 2.2);
const BALL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SideArg {
    Alice,
    Bob,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Alice => Side::Alice,
            SideArg::Bob => Side::Bob,
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct EpsilonValue {
    epsilon: f64,
    value: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CellReport {
    objective: &'static str,
    value: f64,
    rounded: f64,
    reference: Option<f64>,
    pass: Option<bool>,
    best_epsilon: f64,
    per_epsilon: Vec<EpsilonValue>,
    epsilon_spread: f64,
    epsilon_stable: bool,
    starts_converged: usize,
    spreads: BTreeMap<String, f64>,
    state: AmplitudePairs,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct RowReport {
    set_label: String,
    signaling: bool,
    cells: Vec<CellReport>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct TablesReport {
    manifest: RunManifest<OptimizerConfig>,
    reference_tolerance: f64,
    rows: Vec<RowReport>,
    cells_total: usize,
    cells_passed: usize,
    all_passed: bool,
}

pub fn tables(args: &TablesArgs, invocation: &str) -> Result<bool, Failure> {
    let config = OptimizerConfig {
        starts: args.starts,
        max_iterations: args.max_iterations,
        convergence_tol: args.tol,
        epsilon_sweep: args.epsilon.clone(),
        seed: args.seed,
        ..OptimizerConfig::default()
    };
    config.validate()?;
    let sets = select_sets(&args.sets)?;
    let rows = reproduce_tables(&sets, &config)?;

    let mut report_rows = Vec::with_capacity(rows.len());
    for (row, set) in rows.iter().zip(&sets) {
        let mut cells = Vec::with_capacity(row.cells.len());
        for cell in &row.cells {
            let r = &cell.result;
            let corr = CorrelationReport::compute(set, &r.best_state, r.best_epsilon)?;
            cells.push(CellReport {
                objective: cell.objective.name(),
                value: cell.value(),
                rounded: cell.rounded(),
                reference: cell.reference,
                pass: cell.passes(),
                best_epsilon: r.best_epsilon,
                per_epsilon: r
                    .per_epsilon
                    .iter()
                    .map(|e| EpsilonValue {
                        epsilon: e.epsilon,
                        value: e.value,
                    })
                    .collect(),
                epsilon_spread: r.epsilon_spread(),
                epsilon_stable: r.epsilon_spread() <= EPSILON_SPREAD_TOLERANCE,
                starts_converged: r.starts_converged,
                spreads: corr.variances(set),
                state: AmplitudePairs::from(&r.best_state),
            });
        }
        report_rows.push(RowReport {
            set_label: row.label.clone(),
            signaling: row.signaling,
            cells,
        });
    }

    let checked: Vec<bool> = report_rows
        .iter()
        .flat_map(|r| r.cells.iter().filter_map(|c| c.pass))
        .collect();
    let cells_passed = checked.iter().filter(|p| **p).count();
    let all_passed = cells_passed == checked.len();
    for row in &report_rows {
        let values: Vec<String> = row.cells.iter().map(|c| format!("{:.2}", c.rounded)).collect();
        eprintln!("{:<14} {}", row.set_label, values.join("  "));
    }
    eprintln!("{cells_passed}/{} cells within ±{REFERENCE_TOLERANCE}", checked.len());

    let report = TablesReport {
        manifest: RunManifest::new(
            invocation,
            config,
            sets.iter().map(|s| s.label.clone()).collect(),
            args.output.as_deref(),
        ),
        reference_tolerance: REFERENCE_TOLERANCE,
        rows: report_rows,
        cells_total: checked.len(),
        cells_passed,
        all_passed,
    };
    write_json(&report, args.output.as_deref())?;
    Ok(all_passed)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CertifyOutput {
    manifest: RunManifest<CertifyConfig>,
    source: String,
    report: CertifyReport,
    violations: u64,
}

pub fn certify(args: &CertifyArgs, invocation: &str) -> Result<bool, Failure> {
    if args.samples < 1 {
        return Err(Failure::Usage(format!("--samples must be at least 1, got {}", args.samples)));
    }
    let config = CertifyConfig {
        samples: args.samples as usize,
        seed: args.seed,
        epsilon: args.epsilon,
        ..CertifyConfig::default()
    };
    let (source, labels, description) = if args.random_ops {
        if let Some(bad) = args.dim.iter().find(|&&d| d < 2) {
            return Err(Failure::Usage(format!("--dim must be at least 2, got {bad}")));
        }
        let dims: Vec<usize> = args.dim.iter().map(|&d| d as usize).collect();
        let description = format!("random operators, dims {dims:?}");
        (Source::RandomOperators { dims }, Vec::new(), description)
    } else {
        let sets = select_sets(&args.sets)?;
        let labels: Vec<String> = sets.iter().map(|s| s.label.clone()).collect();
        (Source::Sets(sets), labels, "standard sets".to_string())
    };
    let report = run_certify(&source, &config)?;
    let violations = report.violations();
    eprintln!(
        "{} samples ({} skipped), {violations} violations",
        report.samples, report.skipped
    );
    if let Some(c) = &report.counterexample {
        eprintln!(
            "counterexample: sample {} check {} set {} margin {:e} state {:?}",
            c.sample, c.check, c.set_label, c.margin, c.state.0
        );
    }
    let out = CertifyOutput {
        manifest: RunManifest::new(invocation, config, labels, args.output.as_deref()),
        source: description,
        report,
        violations,
    };
    write_json(&out, args.output.as_deref())?;
    Ok(violations == 0)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct BallConfig {
    samples: usize,
    seed: u64,
    epsilon: f64,
    side: Side,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct BallSummary {
    manifest: RunManifest<BallConfig>,
    rows: usize,
    max_norm: f64,
    all_within_ball: bool,
    max_abs_imaginary_bell: BTreeMap<String, f64>,
}

pub fn ball(args: &BallArgs, invocation: &str) -> Result<bool, Failure> {
    if !(args.epsilon >= 0.0 && args.epsilon.is_finite()) {
        return Err(Failure::Usage("--epsilon must be non-negative".into()));
    }
    let sets = select_sets(&args.sets)?;
    let side = Side::from(args.side);
    let mut writer = csv::Writer::from_path(&args.output)
        .map_err(|e| Failure::Io(format!("{}: {e}", args.output.display())))?;
    let io = |e: csv::Error| Failure::Io(e.to_string());
    writer
        .write_record(["re_eta_half", "re_bell_scaled", "im_bell_scaled", "set_label"])
        .map_err(io)?;
    let mut max_norm: f64 = 0.0;
    let mut rows = 0;
    let mut im_bell = BTreeMap::new();
    for (k, set) in sets.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        rng.set_stream(k as u64);
        let mut max_im: f64 = 0.0;
        for _ in 0..args.samples {
            let psi = QuantumState::random(&mut rng, set.dim());
            let report = CorrelationReport::compute(set, &psi, args.epsilon)?;
            let [x, y, z] = ball_coordinates(&report, side);
            max_norm = max_norm.max((x * x + y * y + z * z).sqrt());
            max_im = max_im.max(bell_parameter(&report).im.abs());
            writer
                .write_record([x.to_string(), y.to_string(), z.to_string(), set.label.clone()])
                .map_err(io)?;
            rows += 1;
        }
        im_bell.insert(set.label.clone(), max_im);
    }
    writer.flush()?;
    let within = max_norm <= 1.0 + BALL_TOLERANCE;
    eprintln!("{rows} rows, max norm {max_norm:.12}");
    let summary = BallSummary {
        manifest: RunManifest::new(
            invocation,
            BallConfig {
                samples: args.samples,
                seed: args.seed,
                epsilon: args.epsilon,
                side,
            },
            sets.iter().map(|s| s.label.clone()).collect(),
            Some(&args.output),
        ),
        rows,
        max_norm,
        all_within_ball: within,
        max_abs_imaginary_bell: im_bell,
    };
    write_json(&summary, None)?;
    Ok(within)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct WeakConfig {
    pair: Vec<String>,
    g_over_sigma: Vec<f64>,
    sigma: f64,
    seed: u64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct WeakOutput {
    manifest: RunManifest<WeakConfig>,
    study: ConvergenceStudy,
    error_ratios: Vec<f64>,
    /// `⟨ab⟩` recovered from the finest estimate, with the direct value.
    recovered_product: Option<[f64; 2]>,
    direct_product: Option<[f64; 2]>,
    pass: bool,
}

pub fn weakmeas(args: &WeakmeasArgs, invocation: &str) -> Result<bool, Failure> {
    if args.pair.len() != 2 {
        return Err(Failure::Usage("--pair takes exactly two tokens".into()));
    }
    if let Some(bad) = args.gsigma.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Failure::Usage(format!("--gsigma values must be positive, got {bad}")));
    }
    if !(args.sigma > 0.0 && args.sigma.is_finite()) {
        return Err(Failure::Usage(format!("--sigma must be positive, got {}", args.sigma)));
    }
    let obs = ParafermionObservables::new();
    let lookup = |t: &str| {
        obs.by_token(t)
            .ok_or_else(|| Failure::Usage(format!("unknown observable `{t}`")))
    };
    let a = lookup(&args.pair[0])?;
    let b = lookup(&args.pair[1])?;
    let psi = QuantumState::random(&mut ChaCha8Rng::seed_from_u64(args.seed), a.dim());
    let study = convergence_study(&a, &b, &psi, &args.gsigma, args.sigma)?;

    let error_ratios: Vec<f64> = study
        .points
        .windows(2)
        .map(|w| w[0].error / w[1].error)
        .collect();
    for p in &study.points {
        eprintln!(
            "g/sigma {:<8} estimate {:+.12}{:+.12}i exact {:+.12}{:+.12}i error {:.3e}",
            p.g_over_sigma, p.estimate[0], p.estimate[1], p.exact[0], p.exact[1], p.error
        );
    }
    let pass = study.exact_match
        || study
            .slope
            .is_some_and(|s| (SLOPE_WINDOW.0..=SLOPE_WINDOW.1).contains(&s));
    match study.slope {
        Some(s) => eprintln!("log-log slope {s:.4}"),
        None if study.exact_match => eprintln!("estimate exact at every coupling"),
        None => eprintln!("slope undefined"),
    }

    let finest = study
        .points
        .iter()
        .min_by(|x, y| x.g_over_sigma.total_cmp(&y.g_over_sigma))
        .expect("at least one ratio");
    let estimate = Complex64::new(finest.estimate[0], finest.estimate[1]);
    let (recovered, direct) = match recover_product(&a, &b, estimate) {
        Ok(p) => {
            let d = parabell_core::correlator::expectation(&a.compose(&b)?, &psi)?;
            (Some([p.re, p.im]), Some([d.re, d.im]))
        }
        Err(_) => (None, None),
    };

    let out = WeakOutput {
        manifest: RunManifest::new(
            invocation,
            WeakConfig {
                pair: args.pair.clone(),
                g_over_sigma: args.gsigma.clone(),
                sigma: args.sigma,
                seed: args.seed,
            },
            Vec::new(),
            args.output.as_deref(),
        ),
        study,
        error_ratios,
        recovered_product: recovered,
        direct_product: direct,
        pass,
    };
    write_json(&out, args.output.as_deref())?;
    Ok(pass)
}
