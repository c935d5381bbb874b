use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{snr_to_sigma, ChannelMatrix, ReceiverLocation};
use crate::detectors::{Detector, DetectorKind};
use crate::error::{Error, Result};
use crate::modulation::GomimoScheme;
use crate::neural::{fit, EpochRecord, FeatureInput, NetworkFlavor, TrainConfig};
use crate::scalar::Scalar;

use super::sweep::{count_errors, interpolate_snr_at_ber, run_ber_sweep, sweep_chunk, BerPoint, SweepConfig};

/// BER level at which curves are compared.
pub const READOUT_BER: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    /// Input `αFy`.
    pub mapping: Vec<BerPoint>,
    /// Input `αy`.
    pub identity: Vec<BerPoint>,
    /// SNR saved by the feature matrix at [`READOUT_BER`]; `None` when either
    /// curve does not bracket it.
    pub gain_db: Option<f64>,
}

/// Trains two blind detectors that differ only in the feature matrix and
/// sweeps both over the same noise realisations.
pub fn run_input_ablation<T: Scalar>(
    scheme: &GomimoScheme<T>,
    channel: &ChannelMatrix<T>,
    location: &ReceiverLocation,
    train_config: &TrainConfig,
    sweep: &SweepConfig,
) -> Result<AblationReport> {
    let mut arms = Vec::with_capacity(2);
    for feature in [FeatureInput::Mapping, FeatureInput::Identity] {
        let config = TrainConfig {
            flavor: NetworkFlavor::Blind,
            feature,
            ..train_config.clone()
        };
        let detector = fit(scheme, channel, location, &config)?.detector()?;
        arms.push(run_ber_sweep(scheme, channel, &detector, sweep)?);
    }
    let identity = arms.pop().expect("two arms");
    let mapping = arms.pop().expect("two arms");
    let gain_db = match (
        interpolate_snr_at_ber(&mapping, READOUT_BER),
        interpolate_snr_at_ber(&identity, READOUT_BER),
    ) {
        (Ok(m), Ok(i)) => Some(i - m),
        _ => None,
    };
    Ok(AblationReport {
        mapping,
        identity,
        gain_db,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaCell {
    pub alpha: f64,
    pub snr_db: f64,
    /// `None` when training diverged for this α.
    pub point: Option<BerPoint>,
    pub failure: Option<String>,
}

impl AlphaCell {
    pub fn ber(&self) -> Option<f64> {
        self.point.map(|p| p.ber)
    }
}

/// One blind detector per α, each evaluated at every SNR of `sweep`.
/// Training divergence is recorded in the affected cells and does not stop
/// the sweep.
pub fn run_alpha_sweep<T: Scalar>(
    scheme: &GomimoScheme<T>,
    channel: &ChannelMatrix<T>,
    location: &ReceiverLocation,
    train_config: &TrainConfig,
    alphas: &[f64],
    sweep: &SweepConfig,
) -> Result<Vec<AlphaCell>> {
    sweep.validate()?;
    let mut cells = Vec::with_capacity(alphas.len() * sweep.snr_list_db.len());
    for &alpha in alphas {
        let config = TrainConfig {
            alpha,
            flavor: NetworkFlavor::Blind,
            ..train_config.clone()
        };
        config.validate()?;
        match fit(scheme, channel, location, &config) {
            Ok(fitted) => {
                let points = run_ber_sweep(scheme, channel, &fitted.detector()?, sweep)?;
                cells.extend(points.into_iter().map(|p| AlphaCell {
                    alpha,
                    snr_db: p.snr_db,
                    point: Some(p),
                    failure: None,
                }));
            }
            Err(e @ Error::Divergence { .. }) => {
                cells.extend(sweep.snr_list_db.iter().map(|&snr_db| AlphaCell {
                    alpha,
                    snr_db,
                    point: None,
                    failure: Some(e.to_string()),
                }));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub detector: DetectorKind,
    pub vectors: u64,
    pub wall_seconds: f64,
    pub per_vector_us: f64,
    pub bit_errors: u64,
}

/// Wall time of each detector on one shared vector stream, on the calling
/// thread. The stream is the one [`run_ber_sweep`] draws for a single-point
/// sweep at `snr_db` with the same seed and chunk size, so error counts are
/// comparable.
pub fn run_timing_benchmark<T: Scalar>(
    scheme: &GomimoScheme<T>,
    channel: &ChannelMatrix<T>,
    detectors: &[Detector<T>],
    snr_db: f64,
    vector_count: usize,
    chunk_size: usize,
    seed: u64,
) -> Result<Vec<TimingReport>> {
    let noise = snr_to_sigma(snr_db, scheme.constellation().avg_power())?;
    let chunk_size = chunk_size.max(1);
    let chunks: Vec<_> = (0..vector_count.div_ceil(chunk_size))
        .map(|c| {
            let n = chunk_size.min(vector_count - c * chunk_size);
            sweep_chunk(scheme, channel, &noise, seed, 0, c, n)
        })
        .collect::<Result<_>>()?;

    let mut reports = Vec::with_capacity(detectors.len());
    for detector in detectors {
        let mut bit_errors = 0;
        let start = Instant::now();
        for (ys, frames) in &chunks {
            bit_errors += count_errors(&detector.detect_batch(ys)?, frames);
        }
        let wall = start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
        reports.push(TimingReport {
            detector: detector.kind(),
            vectors: vector_count as u64,
            wall_seconds: wall,
            per_vector_us: wall * 1e6 / vector_count.max(1) as f64,
            bit_errors,
        });
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseLog {
    pub training_snr_db: f64,
    pub records: Vec<EpochRecord>,
}

/// One training run per configuration, keeping only the per-epoch losses.
pub fn run_mse_log<T: Scalar>(
    scheme: &GomimoScheme<T>,
    channel: &ChannelMatrix<T>,
    location: &ReceiverLocation,
    configs: &[TrainConfig],
) -> Result<Vec<MseLog>> {
    configs
        .iter()
        .map(|c| {
            Ok(MseLog {
                training_snr_db: c.training_snr_db,
                records: fit(scheme, channel, location, c)?.outcome.log,
            })
        })
        .collect()
}
