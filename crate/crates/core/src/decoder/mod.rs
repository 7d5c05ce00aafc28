//! BP+OSD decoding over a detector model.
//!
//! Belief propagation runs in the log-likelihood-ratio domain on the Tanner
//! graph of the check matrix. Whenever its hard decision fails to reproduce the
//! syndrome, ordered-statistics postprocessing picks an information set in
//! posterior order and returns a syndrome-consistent correction.

pub mod bp;
pub mod osd;

use serde::{Deserialize, Serialize};

use crate::detector::DetectorModel;
use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::Real;

pub use bp::TannerGraph;
pub use osd::OsdSolver;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BpVariant<T> {
    ProductSum,
    MinSum { scale: T },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Schedule {
    Parallel,
    Serial,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig<T> {
    pub variant: BpVariant<T>,
    pub schedule: Schedule,
    pub max_iterations: usize,
    /// 0 for plain OSD-0, otherwise the combination-sweep depth.
    pub osd_order: usize,
    /// Cap on weight-one flip candidates, `None` for all of them.
    pub osd_candidates: Option<usize>,
}

impl<T: Real> Default for DecoderConfig<T> {
    fn default() -> Self {
        Self {
            variant: BpVariant::ProductSum,
            schedule: Schedule::Serial,
            max_iterations: 1000,
            osd_order: 7,
            osd_candidates: None,
        }
    }
}

impl<T: Real> DecoderConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if let BpVariant::MinSum { scale } = self.variant {
            if !(scale > T::zero() && scale <= T::one()) {
                return Err(Error::Config(format!("min-sum scale {scale} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult<T> {
    pub correction: BitVector,
    pub converged: bool,
    pub iterations: usize,
    /// Posterior log-likelihood ratios, positive meaning "no fault".
    pub posteriors: Vec<T>,
    pub used_osd: bool,
}

/// Reusable decoder for one model; holds the graph and scratch buffers.
pub struct BpOsdDecoder<T: Real> {
    config: DecoderConfig<T>,
    graph: TannerGraph<T>,
    osd: OsdSolver,
}

impl<T: Real> BpOsdDecoder<T> {
    pub fn new(model: &DetectorModel, config: DecoderConfig<T>) -> Result<Self> {
        config.validate()?;
        let columns = model.checks.column_supports();
        let graph = TannerGraph::new(model.n_detectors(), &columns, &model.priors);
        let osd = OsdSolver::new(model.n_detectors(), &columns, &model.priors);
        Ok(Self { config, graph, osd })
    }

    pub fn config(&self) -> &DecoderConfig<T> {
        &self.config
    }

    pub fn n_columns(&self) -> usize {
        self.graph.n_cols()
    }

    pub fn decode(&mut self, syndrome: &BitVector) -> Result<DecodeResult<T>> {
        if syndrome.len() != self.graph.n_checks() {
            return Err(Error::DimensionMismatch(format!(
                "syndrome of length {} for {} detectors",
                syndrome.len(),
                self.graph.n_checks()
            )));
        }
        let bp = self.graph.run(syndrome, &self.config);
        if bp.converged {
            return Ok(DecodeResult {
                correction: bp.hard,
                converged: true,
                iterations: bp.iterations,
                posteriors: bp.posteriors,
                used_osd: false,
            });
        }
        let correction = self.osd.solve(syndrome, &bp.posteriors, self.config.osd_order, self.config.osd_candidates)?;
        debug_assert!(self.graph.satisfies(&correction, syndrome));
        Ok(DecodeResult {
            correction,
            converged: false,
            iterations: bp.iterations,
            posteriors: bp.posteriors,
            used_osd: true,
        })
    }
}

/// One-shot belief propagation: posteriors, hard decision and convergence.
pub fn bp_decode<T: Real>(
    model: &DetectorModel,
    syndrome: &BitVector,
    config: &DecoderConfig<T>,
) -> Result<bp::BpOutput<T>> {
    config.validate()?;
    if syndrome.len() != model.n_detectors() {
        return Err(Error::DimensionMismatch(format!(
            "syndrome of length {} for {} detectors",
            syndrome.len(),
            model.n_detectors()
        )));
    }
    let mut graph = TannerGraph::new(model.n_detectors(), &model.checks.column_supports(), &model.priors);
    Ok(graph.run(syndrome, config))
}

/// One-shot OSD from given posteriors.
pub fn osd_postprocess<T: Real>(
    model: &DetectorModel,
    syndrome: &BitVector,
    posteriors: &[T],
    config: &DecoderConfig<T>,
) -> Result<BitVector> {
    if posteriors.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidInput("posteriors must be finite".into()));
    }
    let mut osd = OsdSolver::new(model.n_detectors(), &model.checks.column_supports(), &model.priors);
    osd.solve(syndrome, posteriors, config.osd_order, config.osd_candidates)
}

#[cfg(test)]
pub(crate) mod tests_support {
    use crate::code::Sector;
    use crate::detector::{DetectorCoord, DetectorModel, FaultRef};
    use crate::gf2::SparseIndexMatrix;
    use crate::noise::ClassSupport;

    pub(crate) fn toy_model(n_det: usize, cols: &[Vec<usize>], obs: &[Vec<usize>], priors: &[f64]) -> DetectorModel {
        DetectorModel {
            sector: Sector::X,
            n_cycles: 1,
            checks: SparseIndexMatrix::from_columns(n_det, cols),
            observables: SparseIndexMatrix::from_columns(1, obs),
            priors: priors.to_vec(),
            layout: (0..n_det).map(|d| DetectorCoord { layer: 0, site: d }).collect(),
            sources: (0..cols.len()).map(|i| vec![FaultRef { op_index: i, support: ClassSupport::Single }]).collect(),
        }
    }

}

#[cfg(test)]
mod tests {
    use super::*;
    use super::tests_support::toy_model;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn repetition() -> DetectorModel {
        toy_model(2, &[vec![0], vec![0, 1], vec![1]], &[vec![0], vec![], vec![]], &[0.1; 3])
    }

    fn configs() -> Vec<DecoderConfig<f64>> {
        let mut out = Vec::new();
        for variant in [BpVariant::ProductSum, BpVariant::MinSum { scale: 0.75 }] {
            for schedule in [Schedule::Parallel, Schedule::Serial] {
                out.push(DecoderConfig { variant, schedule, max_iterations: 50, osd_order: 3, osd_candidates: None });
            }
        }
        out
    }

    #[test]
    fn zero_syndrome() {
        let m = repetition();
        for cfg in configs() {
            let out = bp_decode(&m, &BitVector::zeros(2), &cfg).unwrap();
            assert!(out.converged);
            assert_eq!(out.iterations, 1);
            assert!(out.hard.is_zero());
        }
    }

    #[test]
    fn repetition_code_flips_first_bit() {
        let m = repetition();
        for cfg in configs() {
            let out = bp_decode(&m, &BitVector::from_bools(&[true, false]), &cfg).unwrap();
            assert!(out.converged);
            assert_eq!(out.hard.iter_ones().collect::<Vec<_>>(), vec![0]);
        }
    }

    #[test]
    fn single_column_selected() {
        let m = toy_model(3, &[vec![0, 2]], &[vec![]], &[0.1]);
        let mut dec = BpOsdDecoder::<f64>::new(&m, DecoderConfig::default()).unwrap();
        let r = dec.decode(&BitVector::from_bools(&[true, false, true])).unwrap();
        assert_eq!(r.correction.iter_ones().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn osd_with_adversarial_posteriors_is_consistent() {
        let m = repetition();
        let s = BitVector::from_bools(&[true, false]);
        // posteriors claim column 2 is the likeliest fault and column 0 the least
        let post = [5.0, 0.0, -5.0];
        for order in [0, 2] {
            let cfg = DecoderConfig::<f64> { osd_order: order, ..DecoderConfig::default() };
            let x = osd_postprocess(&m, &s, &post, &cfg).unwrap();
            assert_eq!(m.checks.mul_vec(&x).unwrap(), s);
        }
        let cfg0 = DecoderConfig::<f64> { osd_order: 0, ..DecoderConfig::default() };
        let x = osd_postprocess(&m, &s, &post, &cfg0).unwrap();
        assert_eq!(x.iter_ones().collect::<Vec<_>>(), vec![1, 2]);
        // the sweep finds the lighter explanation
        let cfg2 = DecoderConfig::<f64> { osd_order: 2, ..DecoderConfig::default() };
        let x = osd_postprocess(&m, &s, &post, &cfg2).unwrap();
        assert_eq!(x.iter_ones().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn two_column_syndrome_recovered() {
        let cols = vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3], vec![0, 2], vec![1, 3]];
        let mut priors = vec![0.001; 6];
        priors[1] = 0.3;
        priors[3] = 0.3;
        let m = toy_model(4, &cols, &vec![vec![]; 6], &priors);
        let s = BitVector::from_indices(4, [1, 2, 0, 3]);
        let mut dec = BpOsdDecoder::<f64>::new(&m, DecoderConfig::default()).unwrap();
        let r = dec.decode(&s).unwrap();
        assert_eq!(r.correction.iter_ones().collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn unreachable_syndrome_is_an_error() {
        let m = toy_model(3, &[vec![0, 1]], &[vec![]], &[0.1]);
        let mut dec = BpOsdDecoder::<f64>::new(&m, DecoderConfig::default()).unwrap();
        assert!(matches!(dec.decode(&BitVector::from_indices(3, [2])), Err(Error::RankDeficient)));
    }

    #[test]
    fn config_validation() {
        let bad = DecoderConfig::<f64> { max_iterations: 0, ..DecoderConfig::default() };
        assert!(bad.validate().is_err());
        let bad = DecoderConfig::<f64> { variant: BpVariant::MinSum { scale: 1.5 }, ..DecoderConfig::default() };
        assert!(bad.validate().is_err());
        let ok = DecoderConfig::<f32> { variant: BpVariant::MinSum { scale: 0.5 }, ..DecoderConfig::default() };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn single_precision_agrees_on_small_instance() {
        let m = repetition();
        let s = BitVector::from_bools(&[false, true]);
        let mut d32 = BpOsdDecoder::<f32>::new(&m, DecoderConfig::default()).unwrap();
        let mut d64 = BpOsdDecoder::<f64>::new(&m, DecoderConfig::default()).unwrap();
        assert_eq!(d32.decode(&s).unwrap().correction, d64.decode(&s).unwrap().correction);
    }

    fn random_model(rng: &mut impl Rng) -> DetectorModel {
        let n_det = rng.random_range(3..8);
        let n_cols = rng.random_range(n_det..=15);
        let mut cols = Vec::new();
        for c in 0..n_cols {
            let mut sup: Vec<usize> = (0..n_det).filter(|_| rng.random_bool(0.35)).collect();
            if c < n_det {
                sup.push(c);
                sup.sort_unstable();
                sup.dedup();
            }
            cols.push(sup);
        }
        let obs = (0..n_cols).map(|_| if rng.random_bool(0.4) { vec![0] } else { vec![] }).collect::<Vec<_>>();
        let priors = (0..n_cols).map(|_| 10f64.powf(-rng.random_range(1.0..4.0))).collect::<Vec<_>>();
        toy_model(n_det, &cols, &obs, &priors)
    }

    #[test]
    fn deterministic_decoding() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let m = random_model(&mut rng);
        let s = m.checks.mul_vec(&BitVector::from_indices(m.n_columns(), [0, 1])).unwrap();
        let mut a = BpOsdDecoder::<f64>::new(&m, DecoderConfig::default()).unwrap();
        let mut b = BpOsdDecoder::<f64>::new(&m, DecoderConfig::default()).unwrap();
        let ra = a.decode(&s).unwrap();
        assert_eq!(ra, b.decode(&s).unwrap());
        assert_eq!(ra, a.decode(&s).unwrap());
    }

    proptest! {
        #[test]
        fn corrections_always_reproduce_the_syndrome(seed in any::<u64>(), pattern in any::<u16>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let m = random_model(&mut rng);
            let e = BitVector::from_indices(m.n_columns(), (0..m.n_columns()).filter(|i| pattern >> i & 1 == 1));
            let s = m.checks.mul_vec(&e).unwrap();
            for cfg in configs() {
                let mut dec = BpOsdDecoder::new(&m, cfg).unwrap();
                let r = dec.decode(&s).unwrap();
                prop_assert_eq!(m.checks.mul_vec(&r.correction).unwrap(), s.clone());
            }
        }
    }
}
