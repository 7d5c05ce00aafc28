//! Monte Carlo estimation of logical failure rates.
//!
//! One trial samples full Pauli faults on every site of the circuit, maps them
//! onto the columns of both sector models, decodes each sector and counts a
//! failure if either sector's predicted logical flips differ from the true
//! ones. Bulk faults are shared by the two sectors; the data preparation and
//! readout layers differ between the Z- and X-basis experiments and are
//! sampled separately.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::frame::Pauli;
use crate::circuit::{memory_circuit, MemoryBasis, RoundOrder, ScheduledCircuit};
use crate::code::{BBCode, Sector};
use crate::decoder::{BpOsdDecoder, DecoderConfig};
use crate::detector::{compile_model, support_slot, DetectorModel};
use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::noise::{assign_rates, class_hit, flip_pauli, ChannelKind, FaultSite, NoiseParams, SampledFault};
use crate::partition::PartitionMap;
use crate::Real;

/// One independently firing fault location with its column images.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplerSite {
    pub rate: f64,
    pub kind: ChannelKind,
    /// Pauli applied by a preparation or measurement flip.
    pub flip: Pauli,
    pub x_columns: [Option<u32>; 4],
    pub z_columns: [Option<u32>; 4],
}

#[derive(Clone, Debug)]
pub struct JointSampler {
    sites: Vec<SamplerSite>,
    n_x: usize,
    n_z: usize,
}

impl JointSampler {
    pub fn from_sites(sites: Vec<SamplerSite>, n_x: usize, n_z: usize) -> Self {
        Self { sites, n_x, n_z }
    }

    /// Pairs the Z-basis experiment (X-sector model) with the X-basis one.
    pub fn new(
        z_memory: (&ScheduledCircuit, &[FaultSite], &DetectorModel),
        x_memory: (&ScheduledCircuit, &[FaultSite], &DetectorModel),
    ) -> Result<Self> {
        let (cz, fz, mx) = z_memory;
        let (cx, fx, mz) = x_memory;
        if cz.ops().len() != cx.ops().len() || mx.sector != Sector::X || mz.sector != Sector::Z {
            return Err(Error::InvalidInput("mismatched memory experiments".into()));
        }
        let lx = mx.class_columns(cz.ops().len());
        let lz = mz.class_columns(cx.ops().len());
        let mut sites = Vec::new();
        let make = |site: &FaultSite, op: &crate::circuit::ScheduledOp, x, z| SamplerSite {
            rate: site.rate,
            kind: site.kind,
            flip: flip_pauli(&op.kind),
            x_columns: x,
            z_columns: z,
        };
        for (i, (sz, sx)) in fz.iter().zip(fx).enumerate() {
            if sz.op_index != i || sx.op_index != i {
                return Err(Error::UnknownLocation(i));
            }
            let (oz, ox) = (&cz.ops()[i], &cx.ops()[i]);
            if oz.kind == ox.kind {
                if sz.rate != sx.rate {
                    return Err(Error::InvalidInput(format!("rate mismatch at op {i}")));
                }
                sites.push(make(sz, oz, lx[i], lz[i]));
            } else {
                sites.push(make(sz, oz, lx[i], [None; 4]));
                sites.push(make(sx, ox, [None; 4], lz[i]));
            }
        }
        sites.retain(|s| s.rate > 0.0 && (s.x_columns.iter().any(Option::is_some) || s.z_columns.iter().any(Option::is_some)));
        Ok(Self { sites, n_x: mx.n_columns(), n_z: mz.n_columns() })
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// Fault-indicator vectors of both sectors for one trial.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (BitVector, BitVector) {
        let mut ex = BitVector::zeros(self.n_x);
        let mut ez = BitVector::zeros(self.n_z);
        for site in &self.sites {
            if rng.random::<f64>() >= site.rate {
                continue;
            }
            let fault = match site.kind {
                ChannelKind::IdleDepolarize => {
                    SampledFault::One([Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..3)])
                }
                ChannelKind::CnotDepolarize => {
                    let k = rng.random_range(1..16u8);
                    SampledFault::Two(Pauli::from_bits(k & 1 == 1, k & 2 == 2), Pauli::from_bits(k & 4 == 4, k & 8 == 8))
                }
                ChannelKind::PrepFlip | ChannelKind::MeasFlip => SampledFault::One(site.flip),
            };
            if let Some(s) = class_hit(site.kind, fault, Sector::X) {
                if let Some(c) = site.x_columns[support_slot(s)] {
                    ex.flip(c as usize);
                }
            }
            if let Some(s) = class_hit(site.kind, fault, Sector::Z) {
                if let Some(c) = site.z_columns[support_slot(s)] {
                    ez.flip(c as usize);
                }
            }
        }
        (ex, ez)
    }
}

/// Random stream of one trial: a function of `(seed, trial)` only.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub x_failed: bool,
    pub z_failed: bool,
    pub iterations: [usize; 2],
    pub converged: [bool; 2],
}

impl TrialOutcome {
    pub fn failed(&self) -> bool {
        self.x_failed || self.z_failed
    }
}

/// Both sector models with a sampler; immutable and shareable.
#[derive(Clone, Debug)]
pub struct MemoryExperiment {
    pub n_qpu: usize,
    pub n_cycles: usize,
    pub params: NoiseParams,
    pub model_x: DetectorModel,
    pub model_z: DetectorModel,
    pub sampler: JointSampler,
}

impl MemoryExperiment {
    pub fn build(code: &BBCode, n_qpu: usize, order: &RoundOrder, n_cycles: usize, params: NoiseParams) -> Result<Self> {
        Self::assemble(code, n_qpu, order, n_cycles, params, None)
    }

    /// As [`MemoryExperiment::build`], reusing precompiled `(X, Z)` models.
    pub fn assemble(
        code: &BBCode,
        n_qpu: usize,
        order: &RoundOrder,
        n_cycles: usize,
        params: NoiseParams,
        models: Option<(DetectorModel, DetectorModel)>,
    ) -> Result<Self> {
        let pm = PartitionMap::new(code.l(), code.m(), n_qpu)?;
        let cz = memory_circuit(code, &pm, order, n_cycles, MemoryBasis::Z)?;
        let cx = memory_circuit(code, &pm, order, n_cycles, MemoryBasis::X)?;
        let fz = assign_rates(&cz, &params);
        let fx = assign_rates(&cx, &params);
        let (model_x, model_z) = match models {
            Some(m) => m,
            None => (compile_model(code, &cz, &fz, Sector::X)?, compile_model(code, &cx, &fx, Sector::Z)?),
        };
        let sampler = JointSampler::new((&cz, &fz, &model_x), (&cx, &fx, &model_z))?;
        Ok(Self { n_qpu, n_cycles, params, model_x, model_z, sampler })
    }
}

fn column_lists(m: &crate::gf2::SparseIndexMatrix) -> Vec<Vec<u32>> {
    m.column_supports().into_iter().map(|c| c.into_iter().map(|r| r as u32).collect()).collect()
}

fn image(columns: &[Vec<u32>], rows: usize, e: &BitVector) -> BitVector {
    let mut out = BitVector::zeros(rows);
    for c in e.iter_ones() {
        for &r in &columns[c] {
            out.flip(r as usize);
        }
    }
    out
}

/// Per-worker decoding state for one experiment.
pub struct TrialRunner<'a, T: Real> {
    exp: &'a MemoryExperiment,
    dec: [BpOsdDecoder<T>; 2],
    checks: [Vec<Vec<u32>>; 2],
    obs: [Vec<Vec<u32>>; 2],
}

impl<'a, T: Real> TrialRunner<'a, T> {
    pub fn new(exp: &'a MemoryExperiment, config: DecoderConfig<T>) -> Result<Self> {
        Ok(Self {
            exp,
            dec: [BpOsdDecoder::new(&exp.model_x, config)?, BpOsdDecoder::new(&exp.model_z, config)?],
            checks: [column_lists(&exp.model_x.checks), column_lists(&exp.model_z.checks)],
            obs: [column_lists(&exp.model_x.observables), column_lists(&exp.model_z.observables)],
        })
    }

    fn sector(&mut self, i: usize, model: &DetectorModel, e: &BitVector) -> Result<(bool, usize, bool)> {
        let syndrome = image(&self.checks[i], model.n_detectors(), e);
        let truth = image(&self.obs[i], model.n_observables(), e);
        if syndrome.is_zero() {
            return Ok((!truth.is_zero(), 0, true));
        }
        let r = self.dec[i].decode(&syndrome)?;
        let predicted = image(&self.obs[i], model.n_observables(), &r.correction);
        Ok((predicted != truth, r.iterations, r.converged))
    }

    pub fn run_trial(&mut self, seed: u64, trial: u64) -> Result<TrialOutcome> {
        let exp = self.exp;
        let mut rng = trial_rng(seed, trial);
        let (ex, ez) = exp.sampler.sample(&mut rng);
        let (xf, xi, xc) = self.sector(0, &exp.model_x, &ex)?;
        let (zf, zi, zc) = self.sector(1, &exp.model_z, &ez)?;
        Ok(TrialOutcome { x_failed: xf, z_failed: zf, iterations: [xi, zi], converged: [xc, zc] })
    }
}

/// `1 - (1 - P_L)^(1 / n_cycles)`.
pub fn per_cycle_rate(block: f64, n_cycles: usize) -> f64 {
    assert!(n_cycles >= 1, "at least one cycle");
    if block >= 1.0 {
        return 1.0;
    }
    -((-block).ln_1p() / n_cycles as f64).exp_m1()
}

/// Inverse of [`per_cycle_rate`].
pub fn block_rate(per_cycle: f64, n_cycles: usize) -> f64 {
    1.0 - (1.0 - per_cycle).powi(n_cycles as i32)
}

/// 95% Wilson score interval for `failures` out of `trials`.
pub fn wilson_interval(failures: u64, trials: u64) -> (f64, f64) {
    const Z: f64 = 1.959963984540054;
    let n = trials as f64;
    let p = failures as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Standard deviation implied by the Wilson half-width.
pub fn wilson_sigma(failures: u64, trials: u64) -> f64 {
    let (lo, hi) = wilson_interval(failures, trials);
    (hi - lo) / (2.0 * 1.959963984540054)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub p: f64,
    pub alpha: f64,
    pub n_qpu: usize,
    pub n_cycles: usize,
    pub trials: u64,
    pub failures: u64,
    pub x_failures: u64,
    pub z_failures: u64,
    pub osd_calls: u64,
    pub seed: u64,
}

/// One row of the results CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub p: f64,
    pub alpha: f64,
    pub n_qpu: usize,
    pub n_cycles: usize,
    pub trials: u64,
    pub failures: u64,
    #[serde(rename = "P_L")]
    pub block_rate: f64,
    #[serde(rename = "p_L")]
    pub per_cycle: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

impl RunStats {
    pub fn block_rate(&self) -> f64 {
        self.failures as f64 / self.trials as f64
    }

    pub fn per_cycle(&self) -> f64 {
        per_cycle_rate(self.block_rate(), self.n_cycles)
    }

    /// Wilson interval of the block rate.
    pub fn block_interval(&self) -> (f64, f64) {
        wilson_interval(self.failures, self.trials)
    }

    /// Wilson interval mapped to per-cycle rates.
    pub fn per_cycle_interval(&self) -> (f64, f64) {
        let (lo, hi) = self.block_interval();
        (per_cycle_rate(lo, self.n_cycles), per_cycle_rate(hi, self.n_cycles))
    }

    pub fn csv_row(&self) -> CsvRow {
        let (ci_low, ci_high) = self.per_cycle_interval();
        CsvRow {
            p: self.p,
            alpha: self.alpha,
            n_qpu: self.n_qpu,
            n_cycles: self.n_cycles,
            trials: self.trials,
            failures: self.failures,
            block_rate: self.block_rate(),
            per_cycle: self.per_cycle(),
            ci_low,
            ci_high,
            seed: self.seed,
        }
    }
}

/// Runs trials `0..trials` and aggregates. Trial `i` draws from
/// `trial_rng(seed, i)` regardless of how work is split across threads.
pub fn run_trials<T: Real>(
    exp: &MemoryExperiment,
    config: &DecoderConfig<T>,
    trials: u64,
    seed: u64,
) -> Result<RunStats> {
    if trials == 0 {
        return Err(Error::InvalidInput("at least one trial is required".into()));
    }
    config.validate()?;
    let chunk = 64u64;
    let n_chunks = trials.div_ceil(chunk);
    let partial: Vec<Result<[u64; 4]>> = (0..n_chunks)
        .into_par_iter()
        .map_init(
            || TrialRunner::new(exp, *config),
            |runner, k| {
                let runner = runner.as_mut().map_err(|e| Error::Config(e.to_string()))?;
                let mut acc = [0u64; 4];
                for t in k * chunk..((k + 1) * chunk).min(trials) {
                    let o = runner.run_trial(seed, t)?;
                    acc[0] += o.failed() as u64;
                    acc[1] += o.x_failed as u64;
                    acc[2] += o.z_failed as u64;
                    acc[3] += (!o.converged[0]) as u64 + (!o.converged[1]) as u64;
                }
                Ok(acc)
            },
        )
        .collect();
    let mut total = [0u64; 4];
    for r in partial {
        let r = r?;
        for (t, v) in total.iter_mut().zip(r) {
            *t += v;
        }
    }
    Ok(RunStats {
        p: exp.params.p(),
        alpha: exp.params.alpha(),
        n_qpu: exp.n_qpu,
        n_cycles: exp.n_cycles,
        trials,
        failures: total[0],
        x_failures: total[1],
        z_failures: total[2],
        osd_calls: total[3],
        seed,
    })
}
