use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use distbb::ansatz::{fit_per_alpha, fit_quadratic_alpha, FitResult, Weighting};
use distbb::circuit::frame::simulate;
use distbb::circuit::gadget::verify_remote_cnot_gadget;
use distbb::circuit::{build_cycle, memory_circuit, MemoryBasis, RoundOrder};
use distbb::code::BBCode;
use distbb::detector::{compile_model, detectors_from_record};
use distbb::experiment::{data_points, read_results, run_sweep, CodeSpec, ExperimentConfig};
use distbb::noise::{assign_rates, NoiseParams};
use distbb::partition::{count_nonlocal_cnots, PartitionMap};
use distbb::plot::{rate_plot, threshold_plot, RatePlotOptions};
use distbb::Result;

#[derive(Parser)]
#[command(name = "distbb", version, about = "Distributed bivariate bicycle code simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build code, partition and circuit, validate them and write them out.
    Build(BuildArgs),
    /// Run a Monte Carlo sweep from a JSON config.
    Sweep(SweepArgs),
    /// Fit the alpha-dependent ansatz to sweep results.
    Fit(FitArgs),
    /// Render SVG figures from sweep results and fits.
    Plot(PlotArgs),
    /// Run the gadget oracle and all structural invariants.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Experiment config providing the code and round order.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    n_qpu: usize,
    #[arg(long, default_value_t = 12)]
    n_cycles: usize,
    /// Also compile detector models at this physical error rate.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value = "build")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n_qpu: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long)]
    n_cycles: Option<usize>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long, default_value = "fit")]
    out: PathBuf,
    /// Exponent numerator `d'` of the leading power `p^(d'/2)`.
    #[arg(long, default_value_t = 10.0)]
    d_circ: f64,
    /// Break-even multiplier, normally the number of logical qubits.
    #[arg(long, default_value_t = 12.0)]
    k: f64,
    #[arg(long, default_value_t = 1e-3)]
    p_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    p_max: f64,
    #[arg(long)]
    unweighted: bool,
    /// Independent per-alpha fits instead of the joint quadratic fit.
    #[arg(long)]
    per_alpha: bool,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    results: PathBuf,
    /// Directory holding `fit_<n>.json` files.
    #[arg(long)]
    fits: Option<PathBuf>,
    #[arg(long, default_value = "plots")]
    out: PathBuf,
    #[arg(long, default_value_t = 12.0)]
    k: f64,
    #[arg(long, default_value_t = 1e-4)]
    p_extrapolate: f64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cycles used for the model-equivalence and noiseless checks.
    #[arg(long, default_value_t = 3)]
    n_cycles: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Build(a) => build(a),
        Command::Sweep(a) => sweep(a),
        Command::Fit(a) => fit(a),
        Command::Plot(a) => plot(a),
        Command::Verify(a) => verify(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn code_and_order(config: Option<&Path>) -> Result<(BBCode, RoundOrder)> {
    match config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            Ok((cfg.code.build()?, cfg.round_order))
        }
        None => Ok((CodeSpec::default().build()?, RoundOrder::default())),
    }
}

fn report(ok: &mut bool, name: &str, result: Result<String>) {
    match result {
        Ok(detail) => println!("PASS {name}: {detail}"),
        Err(e) => {
            *ok = false;
            println!("FAIL {name}: {e}");
        }
    }
}

fn code_checks(code: &BBCode) -> Result<String> {
    let hx = code.h_x();
    let hz = code.h_z();
    let rows_ok = (0..hx.rows()).all(|r| hx.row_weight(r) == 6) && (0..hz.rows()).all(|r| hz.row_weight(r) == 6);
    let cols_ok = (0..hx.cols()).all(|c| hx.col_weight(c) == 3) && (0..hz.cols()).all(|c| hz.col_weight(c) == 3);
    let css = hx.mul(&hz.transpose())?.is_zero();
    if !(rows_ok && cols_ok && css) {
        return Err(distbb::Error::InvalidInput(format!(
            "row weight 6: {rows_ok}, column weight 3: {cols_ok}, CSS: {css}"
        )));
    }
    Ok(format!("n = {}, k = {}, weights (6, 3), H_X H_Z^T = 0", code.n(), code.k()))
}

fn build(a: BuildArgs) -> Result<bool> {
    let (code, order) = code_and_order(a.config.as_deref())?;
    fs::create_dir_all(&a.out)?;
    let mut ok = true;
    report(&mut ok, "code", code_checks(&code));
    let pm = PartitionMap::new(code.l(), code.m(), a.n_qpu)?;
    let cycle = build_cycle(&code, &pm, &order)?;
    report(&mut ok, "cycle invariants", cycle.check_invariants(&code).map(|_| format!("{} ops", cycle.ops().len())));
    report(&mut ok, "measured operators", cycle.check_measured_operators(&code).map(|_| "every ancilla reads its check".into()));
    let nonlocal = count_nonlocal_cnots(&cycle);
    println!("partition: {} QPUs of {} columns, {} nonlocal CNOTs per cycle", a.n_qpu, pm.block_width(), nonlocal);
    fs::write(a.out.join("code.json"), serde_json::to_string_pretty(&code.export())?)?;
    let partition = serde_json::json!({
        "n_qpu": pm.n_qpu(),
        "block_width": pm.block_width(),
        "blocks": pm.blocks(),
        "qubits_per_qpu": pm.qubits_per_qpu(),
        "nonlocal_cnots_per_cycle": nonlocal,
        "labels": pm.labels(),
    });
    fs::write(a.out.join("partition.json"), serde_json::to_string_pretty(&partition)?)?;
    for basis in [MemoryBasis::Z, MemoryBasis::X] {
        let circuit = memory_circuit(&code, &pm, &order, a.n_cycles, basis)?;
        report(&mut ok, &format!("{basis:?}-memory invariants"), circuit.check_invariants(&code).map(|_| format!("{} ops", circuit.ops().len())));
        fs::write(a.out.join(format!("circuit_{basis:?}.txt").to_lowercase()), circuit.to_text())?;
        if let Some(p) = a.p {
            let params = NoiseParams::new(p, a.alpha)?;
            let faults = assign_rates(&circuit, &params);
            let model = compile_model(&code, &circuit, &faults, basis.sector())?;
            println!(
                "{} model: {} detectors, {} columns, {} observables",
                basis.sector(),
                model.n_detectors(),
                model.n_columns(),
                model.n_observables()
            );
            fs::write(a.out.join(format!("model_{}.json", basis.sector()).to_lowercase()), model.to_json()?)?;
        }
    }
    println!("wrote {}", a.out.display());
    Ok(ok)
}

fn sweep(a: SweepArgs) -> Result<bool> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(o) = a.out {
        cfg.output_dir = o;
    }
    if let Some(v) = a.n_qpu {
        cfg.n_qpu = v;
    }
    if let Some(v) = a.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = a.p {
        cfg.p = v;
    }
    if let Some(n) = a.n_cycles {
        cfg.n_cycles = n;
    }
    let meta = run_sweep(&cfg, |s| {
        let r = s.csv_row();
        println!(
            "n_qpu {:>2} alpha {:<4} p {:<8} failures {:>6}/{:<6} P_L {:.5} p_L {:.3e} [{:.3e}, {:.3e}]",
            r.n_qpu, r.alpha, r.p, r.failures, r.trials, r.block_rate, r.per_cycle, r.ci_low, r.ci_high
        );
    })?;
    println!("{} points in {:.1} s; results in {}", meta.points.len(), meta.total_seconds, cfg.results_path().display());
    Ok(true)
}

fn fit(a: FitArgs) -> Result<bool> {
    let rows = read_results(&a.results)?;
    fs::create_dir_all(&a.out)?;
    let weighting = if a.unweighted { Weighting::Unweighted } else { Weighting::InverseVariance };
    let partitions: BTreeSet<usize> = rows.iter().map(|r| r.n_qpu).collect();
    let mut ok = true;
    for n in partitions {
        let data = data_points(&rows, n, a.p_min, a.p_max);
        let result = if a.per_alpha {
            fit_per_alpha(&data, a.d_circ, a.k, weighting).and_then(|per_alpha| {
                let first = per_alpha.first().ok_or_else(|| distbb::Error::InsufficientCoverage("no alpha values".into()))?;
                Ok(FitResult {
                    params: distbb::ansatz::AnsatzParams::baseline(a.d_circ, first.coefficients),
                    k: a.k,
                    per_alpha,
                })
            })
        } else {
            fit_quadratic_alpha(&data, a.d_circ, a.k, weighting)
        };
        match result {
            Ok(f) => {
                fs::write(a.out.join(format!("fit_{n}.json")), serde_json::to_string_pretty(&f)?)?;
                let table = f.table_csv()?;
                fs::write(a.out.join(format!("table_{n}.csv")), &table)?;
                println!("{n} QPUs");
                print!("{table}");
            }
            Err(e) => {
                ok = false;
                eprintln!("{n} QPUs: {e}");
            }
        }
    }
    Ok(ok)
}

fn plot(a: PlotArgs) -> Result<bool> {
    let rows = read_results(&a.results)?;
    if rows.is_empty() {
        return Err(distbb::Error::InvalidInput("results file has no rows".into()));
    }
    fs::create_dir_all(&a.out)?;
    let partitions: BTreeSet<usize> = rows.iter().map(|r| r.n_qpu).collect();
    let mut fits = Vec::new();
    for n in partitions {
        let fit: Option<FitResult<f64>> = a
            .fits
            .as_ref()
            .and_then(|d| fs::read_to_string(d.join(format!("fit_{n}.json"))).ok())
            .and_then(|t| serde_json::from_str(&t).ok());
        let mut alphas: Vec<f64> = rows.iter().filter(|r| r.n_qpu == n).map(|r| r.alpha).collect();
        alphas.sort_by(|x, y| x.partial_cmp(y).unwrap());
        alphas.dedup();
        let fig = rate_plot(&rows, fit.as_ref(), &alphas, RatePlotOptions { n_qpu: n, k: a.k, p_extrapolate: a.p_extrapolate });
        for w in &fig.warnings {
            eprintln!("warning: {w}");
        }
        let path = a.out.join(format!("pl_vs_p_{n}.svg"));
        fs::write(&path, fig.svg)?;
        println!("wrote {}", path.display());
        if let Some(f) = fit {
            fits.push((n, f));
        }
    }
    if !fits.is_empty() {
        let fig = threshold_plot(&fits);
        for w in &fig.warnings {
            eprintln!("warning: {w}");
        }
        let path = a.out.join("p0_vs_alpha.svg");
        fs::write(&path, fig.svg)?;
        println!("wrote {}", path.display());
    }
    Ok(true)
}

fn verify(a: VerifyArgs) -> Result<bool> {
    let (code, order) = code_and_order(a.config.as_deref())?;
    let mut ok = true;
    let gadget = verify_remote_cnot_gadget(1e-12);
    report(
        &mut ok,
        "remote CNOT gadget",
        if gadget.passed() {
            Ok(format!("{} cases, max amplitude error {:.2e}", gadget.cases_checked, gadget.max_amplitude_error))
        } else {
            Err(distbb::Error::InvalidInput(format!("{} failing cases", gadget.failures.len())))
        },
    );
    report(&mut ok, "code", code_checks(&code));
    let valid: Vec<usize> = (1..=code.l()).filter(|d| code.l() % d == 0).collect();
    let mut counts = Vec::new();
    for &n in &valid {
        let pm = PartitionMap::new(code.l(), code.m(), n)?;
        let check = build_cycle(&code, &pm, &order).and_then(|c| {
            c.check_invariants(&code)?;
            c.check_measured_operators(&code)?;
            Ok(count_nonlocal_cnots(&c))
        });
        if let Ok(count) = &check {
            counts.push((n, *count));
        }
        report(&mut ok, &format!("cycle on {n} QPUs"), check.map(|c| format!("{c} nonlocal CNOTs")));
    }
    let monotone = counts.windows(2).all(|w| w[0].1 <= w[1].1) && counts.first().is_some_and(|c| c.1 == 0);
    report(
        &mut ok,
        "nonlocal count ordering",
        if monotone { Ok(format!("{counts:?}")) } else { Err(distbb::Error::InvalidInput(format!("{counts:?}"))) },
    );
    for basis in [MemoryBasis::Z, MemoryBasis::X] {
        let sector = basis.sector();
        let check = (|| -> Result<String> {
            let mut reference = None;
            for &n in &valid {
                let pm = PartitionMap::new(code.l(), code.m(), n)?;
                let circuit = memory_circuit(&code, &pm, &order, a.n_cycles, basis)?;
                circuit.check_invariants(&code)?;
                let (det, obs) = detectors_from_record(&code, &circuit, sector, &simulate(&circuit, &[]));
                if !det.is_zero() || !obs.is_zero() {
                    return Err(distbb::Error::InvalidInput(format!("noiseless circuit on {n} QPUs fires detectors")));
                }
                let faults = assign_rates(&circuit, &NoiseParams::new(0.003, 1.0)?);
                let model = compile_model(&code, &circuit, &faults, sector)?;
                match &reference {
                    None => reference = Some(model),
                    Some(r) if r == &model => {}
                    Some(_) => return Err(distbb::Error::InvalidInput(format!("alpha = 1 model differs on {n} QPUs"))),
                }
            }
            let m = reference.expect("at least one partition");
            Ok(format!("{} detectors, {} columns, identical over {valid:?}", m.n_detectors(), m.n_columns()))
        })();
        report(&mut ok, &format!("{sector} sector models"), check);
    }
    println!("{}", if ok { "all checks passed" } else { "some checks failed" });
    Ok(ok)
}
