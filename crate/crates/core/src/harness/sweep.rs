use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{snr_to_sigma, ChannelMatrix, NoiseModel};
use crate::detectors::Detector;
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::modulation::{BitFrame, GomimoScheme, SchemeKind};
use crate::rng::{self, streams};
use crate::scalar::Scalar;

pub const MIN_VECTORS: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub snr_list_db: Vec<f64>,
    pub vectors_per_point: usize,
    /// A point stops early once this many bit errors are counted (and at
    /// least [`MIN_VECTORS`] vectors were sent).
    pub min_errors: u64,
    /// Vectors per independently seeded work unit; stopping is decided only
    /// at chunk boundaries.
    pub chunk_size: usize,
    pub seed: u64,
    pub threads: usize,
}

impl SweepConfig {
    pub fn new(snr_list_db: Vec<f64>, vectors_per_point: usize, seed: u64) -> Self {
        Self {
            snr_list_db,
            vectors_per_point,
            min_errors: 100,
            chunk_size: 10_000,
            seed,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vectors_per_point < MIN_VECTORS {
            return Err(invalid("vectors_per_point", format!("must be at least {MIN_VECTORS}")));
        }
        if self.chunk_size == 0 {
            return Err(invalid("chunk_size", "must be positive"));
        }
        if self.threads == 0 {
            return Err(invalid("threads", "must be positive"));
        }
        if self.snr_list_db.iter().any(|s| !s.is_finite()) {
            return Err(invalid("snr_list_db", "entries must be finite"));
        }
        if self.snr_list_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("snr_list_db", "must be strictly increasing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub vectors: u64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    /// Binomial standard error `√(p(1−p)/bits)`.
    pub stderr: f64,
    /// No errors were observed; `ber` is then only an upper-bound hint.
    pub censored: bool,
}

impl BerPoint {
    pub fn from_counts(snr_db: f64, vectors: u64, bits_per_vector: u32, errors: u64) -> Self {
        let bits = vectors * u64::from(bits_per_vector);
        let ber = if bits == 0 { 0.0 } else { errors as f64 / bits as f64 };
        let stderr = if bits == 0 { 0.0 } else { (ber * (1.0 - ber) / bits as f64).sqrt() };
        Self {
            snr_db,
            vectors,
            bits,
            errors,
            ber,
            stderr,
            censored: errors == 0,
        }
    }
}

/// One labelled BER-vs-SNR curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    pub detector: String,
    pub scheme: SchemeKind,
    pub location: String,
    pub points: Vec<BerPoint>,
}

/// Draws `n` uniform frames and their received vectors `Hx + n`.
pub fn draw_block<T: Scalar, R: Rng + ?Sized>(
    scheme: &GomimoScheme<T>,
    channel: &ChannelMatrix<T>,
    noise: &NoiseModel,
    n: usize,
    rng: &mut R,
) -> Result<(Matrix<T>, Vec<BitFrame>)> {
    let nr = channel.nr();
    let count = scheme.frame_count() as u64;
    let mut frames = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n * nr);
    for _ in 0..n {
        let frame = BitFrame::new(rng.random_range(0..count), scheme.bits())?;
        let mut y = channel.apply(&scheme.map_bits(frame)?);
        noise.corrupt(rng, &mut y);
        ys.extend_from_slice(&y);
        frames.push(frame);
    }
    Ok((Matrix::from_vec(n, nr, ys)?, frames))
}

/// The vectors of chunk `chunk` at sweep point `point`.
pub fn sweep_chunk<T: Scalar>(
    scheme: &GomimoScheme<T>,
    channel: &ChannelMatrix<T>,
    noise: &NoiseModel,
    seed: u64,
    point: usize,
    chunk: usize,
    n: usize,
) -> Result<(Matrix<T>, Vec<BitFrame>)> {
    let mut rng = rng::stream(seed, streams::sweep_chunk(point, chunk));
    draw_block(scheme, channel, noise, n, &mut rng)
}

pub(crate) fn count_errors(decided: &[BitFrame], sent: &[BitFrame]) -> u64 {
    decided.iter().zip(sent).map(|(a, b)| u64::from(a.hamming(b))).sum()
}

fn check_detector<T: Scalar>(scheme: &GomimoScheme<T>, channel: &ChannelMatrix<T>, detector: &Detector<T>) -> Result<()> {
    if channel.nt() != scheme.nt() {
        return Err(Error::DimensionMismatch {
            context: "channel transmitters",
            expected: scheme.nt(),
            actual: channel.nt(),
        });
    }
    if let Detector::Dnn { network, .. } = detector {
        let out = network.architecture().output_width();
        if out != scheme.bits() as usize {
            return Err(Error::DimensionMismatch {
                context: "network output width",
                expected: scheme.bits() as usize,
                actual: out,
            });
        }
    }
    Ok(())
}

fn run_point<T: Scalar>(
    scheme: &GomimoScheme<T>,
    channel: &ChannelMatrix<T>,
    detector: &Detector<T>,
    config: &SweepConfig,
    point: usize,
) -> Result<BerPoint> {
    let snr = config.snr_list_db[point];
    let noise = snr_to_sigma(snr, scheme.constellation().avg_power())?;
    let total = config.vectors_per_point;
    let chunks = total.div_ceil(config.chunk_size);
    let chunk_len = |c: usize| config.chunk_size.min(total - c * config.chunk_size);
    let run_chunk = |c: usize| -> Result<u64> {
        let (ys, frames) = sweep_chunk(scheme, channel, &noise, config.seed, point, c, chunk_len(c))?;
        Ok(count_errors(&detector.detect_batch(&ys)?, &frames))
    };

    let (mut vectors, mut errors) = (0u64, 0u64);
    let wave = config.threads.max(1);
    let mut next = 0;
    'waves: while next < chunks {
        let end = (next + wave).min(chunks);
        let counts: Vec<Result<u64>> = if wave == 1 {
            vec![run_chunk(next)]
        } else {
            (next..end).into_par_iter().map(run_chunk).collect()
        };
        for (c, count) in (next..end).zip(counts) {
            errors += count?;
            vectors += chunk_len(c) as u64;
            if errors >= config.min_errors && vectors >= MIN_VECTORS as u64 {
                break 'waves;
            }
        }
        next = end;
    }
    Ok(BerPoint::from_counts(snr, vectors, scheme.bits(), errors))
}

/// BER at every SNR of the sweep. Each chunk owns a generator keyed by
/// (seed, point, chunk) and stopping is decided in chunk order, so the
/// result does not depend on the thread count.
pub fn run_ber_sweep<T: Scalar>(
    scheme: &GomimoScheme<T>,
    channel: &ChannelMatrix<T>,
    detector: &Detector<T>,
    config: &SweepConfig,
) -> Result<Vec<BerPoint>> {
    config.validate()?;
    check_detector(scheme, channel, detector)?;
    let body = || (0..config.snr_list_db.len()).map(|p| run_point(scheme, channel, detector, config, p)).collect();
    if config.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| invalid("threads", e.to_string()))?;
        pool.install(body)
    } else {
        body()
    }
}

/// SNR at which the curve crosses `target_ber`, interpolated linearly in
/// `(snr_db, log₁₀ ber)` between the first bracketing pair of adjacent
/// uncensored points.
pub fn interpolate_snr_at_ber(points: &[BerPoint], target_ber: f64) -> Result<f64> {
    if !(target_ber > 0.0 && target_ber < 1.0) {
        return Err(invalid("target_ber", "must lie in (0, 1)"));
    }
    for p in points {
        if !p.censored && p.ber == target_ber {
            return Ok(p.snr_db);
        }
    }
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.censored || b.censored {
            continue;
        }
        if a.ber > target_ber && b.ber < target_ber {
            let (la, lb, lt) = (a.ber.log10(), b.ber.log10(), target_ber.log10());
            return Ok(a.snr_db + (b.snr_db - a.snr_db) * (la - lt) / (la - lb));
        }
    }
    Err(Error::Unbracketed { target: target_ber })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(snr: f64, ber: f64) -> BerPoint {
        BerPoint {
            snr_db: snr,
            vectors: 1,
            bits: 1,
            errors: u64::from(ber > 0.0),
            ber,
            stderr: 0.0,
            censored: ber == 0.0,
        }
    }

    #[test]
    fn log_linear_midpoint() {
        let c = [pt(100.0, 1e-2), pt(110.0, 1e-4)];
        assert!((interpolate_snr_at_ber(&c, 1e-3).unwrap() - 105.0).abs() < 1e-12);
    }

    #[test]
    fn unbracketed_and_exact() {
        let c = [pt(100.0, 1e-2), pt(110.0, 1e-4)];
        assert!(matches!(interpolate_snr_at_ber(&c, 1e-5), Err(Error::Unbracketed { .. })));
        assert!(matches!(interpolate_snr_at_ber(&c, 0.5), Err(Error::Unbracketed { .. })));
        let c = [pt(100.0, 1e-2), pt(105.0, 1e-3), pt(110.0, 1e-4)];
        assert_eq!(interpolate_snr_at_ber(&c, 1e-3).unwrap(), 105.0);
    }

    #[test]
    fn never_through_censored() {
        let c = [pt(100.0, 1e-2), pt(110.0, 0.0)];
        assert!(interpolate_snr_at_ber(&c, 1e-3).is_err());
    }

    #[test]
    fn bit_accounting() {
        let p = BerPoint::from_counts(120.0, 1000, 6, 30);
        assert_eq!(p.bits, 6000);
        assert_eq!(p.ber, 0.005);
        assert!((p.stderr - (0.005f64 * 0.995 / 6000.0).sqrt()).abs() < 1e-18);
        assert!(BerPoint::from_counts(1.0, 1000, 4, 0).censored);
    }

    #[test]
    fn config_validation() {
        let mut c = SweepConfig::new(vec![1.0, 2.0], 1000, 0);
        assert!(c.validate().is_ok());
        c.snr_list_db = vec![2.0, 2.0];
        assert!(c.validate().is_err());
        c = SweepConfig::new(vec![1.0], 999, 0);
        assert!(c.validate().is_err());
    }
}
