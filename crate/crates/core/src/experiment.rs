//! Sweep configuration, orchestration and result persistence.

use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::DataPoint;
use crate::circuit::RoundOrder;
use crate::code::{BBCode, Term, BB144_A, BB144_B};
use crate::decoder::DecoderConfig;
use crate::detector::DetectorModel;
use crate::error::{Error, Result};
use crate::montecarlo::{run_trials, CsvRow, MemoryExperiment, RunStats};
use crate::noise::NoiseParams;
use crate::partition::PartitionMap;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeSpec {
    pub l: usize,
    pub m: usize,
    pub a_terms: Vec<Term>,
    pub b_terms: Vec<Term>,
}

impl Default for CodeSpec {
    fn default() -> Self {
        Self { l: 12, m: 6, a_terms: BB144_A.to_vec(), b_terms: BB144_B.to_vec() }
    }
}

impl CodeSpec {
    pub fn build(&self) -> Result<BBCode> {
        BBCode::new(self.l, self.m, &self.a_terms, &self.b_terms)
    }
}

fn default_n_cycles() -> usize {
    12
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub code: CodeSpec,
    pub n_qpu: Vec<usize>,
    pub alpha: Vec<f64>,
    pub p: Vec<f64>,
    #[serde(default = "default_n_cycles")]
    pub n_cycles: usize,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub decoder: DecoderConfig<f64>,
    #[serde(default)]
    pub round_order: RoundOrder,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.n_cycles == 0 {
            return Err(Error::Config("n_cycles must be at least 1".into()));
        }
        for (name, empty) in [("n_qpu", self.n_qpu.is_empty()), ("alpha", self.alpha.is_empty()), ("p", self.p.is_empty())] {
            if empty {
                return Err(Error::Config(format!("{name} list is empty")));
            }
        }
        let code = self.code.build()?;
        for &n in &self.n_qpu {
            PartitionMap::new(code.l(), code.m(), n)?;
        }
        for &a in &self.alpha {
            for &p in &self.p {
                NoiseParams::new(p, a)?;
            }
        }
        self.decoder.validate()?;
        crate::circuit::build_cycle(&code, &PartitionMap::new(code.l(), code.m(), 1)?, &self.round_order)?;
        Ok(())
    }

    pub fn results_path(&self) -> PathBuf {
        self.output_dir.join("results.csv")
    }

    pub fn metadata_path(&self) -> PathBuf {
        self.output_dir.join("metadata.json")
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.output_dir.join("cache")
    }
}

/// Hex digest naming the cached models of one sweep point.
pub fn model_cache_key(code: &CodeSpec, n_qpu: usize, p: f64, alpha: f64, n_cycles: usize, order: &RoundOrder) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(code).expect("code spec serializes"));
    h.update(format!("|{n_qpu}|{:016x}|{:016x}|{n_cycles}|", p.to_bits(), alpha.to_bits()));
    h.update(order.fingerprint());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize, Deserialize)]
struct CachedModels {
    model_x: DetectorModel,
    model_z: DetectorModel,
}

fn load_or_build(cfg: &ExperimentConfig, code: &BBCode, n_qpu: usize, params: NoiseParams) -> Result<(MemoryExperiment, bool)> {
    let key = model_cache_key(&cfg.code, n_qpu, params.p(), params.alpha(), cfg.n_cycles, &cfg.round_order);
    let path = cfg.cache_dir().join(format!("{key}.json"));
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(c) = serde_json::from_str::<CachedModels>(&text) {
            let exp = MemoryExperiment::assemble(code, n_qpu, &cfg.round_order, cfg.n_cycles, params, Some((c.model_x, c.model_z)))?;
            return Ok((exp, true));
        }
    }
    let exp = MemoryExperiment::build(code, n_qpu, &cfg.round_order, cfg.n_cycles, params)?;
    fs::create_dir_all(cfg.cache_dir())?;
    let cached = CachedModels { model_x: exp.model_x.clone(), model_z: exp.model_z.clone() };
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serde_json::to_vec(&cached)?)?;
    fs::rename(&tmp, &path)?;
    Ok((exp, false))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointTiming {
    pub n_qpu: usize,
    pub alpha: f64,
    pub p: f64,
    pub cache_hit: bool,
    pub build_seconds: f64,
    pub run_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub points: Vec<PointTiming>,
    pub total_seconds: f64,
}

/// Package version plus the short commit hash when run inside a checkout.
pub fn version_string() -> String {
    let commit = std::process::Command::new("git")
        .args(["rev-parse", "--short", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string());
    match commit {
        Some(c) if !c.is_empty() => format!("{}+{c}", env!("CARGO_PKG_VERSION")),
        _ => env!("CARGO_PKG_VERSION").to_string(),
    }
}

/// Appends one row, writing the header if the file is new or empty.
pub fn append_row(path: &Path, row: &CsvRow) -> Result<()> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    w.serialize(row)?;
    w.flush()?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows: std::result::Result<Vec<CsvRow>, _> = r.deserialize().collect();
    Ok(rows?)
}

/// Runs every `(n_qpu, alpha, p)` point, appending a CSV row after each so
/// an interrupted sweep keeps what it finished. `on_point` sees each result.
pub fn run_sweep(cfg: &ExperimentConfig, mut on_point: impl FnMut(&RunStats)) -> Result<SweepMetadata> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let code = cfg.code.build()?;
    let start = Instant::now();
    let mut points = Vec::new();
    for &n_qpu in &cfg.n_qpu {
        for &alpha in &cfg.alpha {
            for &p in &cfg.p {
                let params = NoiseParams::new(p, alpha)?;
                let t = Instant::now();
                let (exp, cache_hit) = load_or_build(cfg, &code, n_qpu, params)?;
                let build_seconds = t.elapsed().as_secs_f64();
                let t = Instant::now();
                let stats = run_trials(&exp, &cfg.decoder, cfg.trials, cfg.seed)?;
                let run_seconds = t.elapsed().as_secs_f64();
                append_row(&cfg.results_path(), &stats.csv_row())?;
                on_point(&stats);
                points.push(PointTiming { n_qpu, alpha, p, cache_hit, build_seconds, run_seconds });
                let meta = SweepMetadata {
                    version: version_string(),
                    seed: cfg.seed,
                    config: cfg.clone(),
                    points: points.clone(),
                    total_seconds: start.elapsed().as_secs_f64(),
                };
                let mut f = fs::File::create(cfg.metadata_path())?;
                f.write_all(serde_json::to_string_pretty(&meta)?.as_bytes())?;
            }
        }
    }
    Ok(SweepMetadata {
        version: version_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        points,
        total_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Fit inputs for one partition; points outside `[p_min, p_max]` are kept
/// as extrapolation checks only.
pub fn data_points(rows: &[CsvRow], n_qpu: usize, p_min: f64, p_max: f64) -> Vec<DataPoint<f64>> {
    rows.iter()
        .filter(|r| r.n_qpu == n_qpu)
        .map(|r| {
            let mut d = DataPoint::from_counts(r.p, r.alpha, r.n_cycles, r.trials, r.failures);
            d.in_fit = d.in_fit && r.p >= p_min && r.p <= p_max;
            d
        })
        .collect()
}
