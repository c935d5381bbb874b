use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::channel::{snr_to_sigma, ChannelMatrix, ReceiverLocation};
use crate::detectors::{pseudo_inverse, Detector, FrontEnd, PreprocessConfig};
use crate::error::{invalid, Error, Result};
use crate::modulation::{GomimoScheme, SchemeKind};
use crate::rng::{self, streams};
use crate::scalar::Scalar;

use super::adamax::AdamaxState;
use super::dataset::{generate_dataset, Dataset, Provenance};
use super::mlp::{backward, forward, mse_loss, MlpArchitecture, MlpParams};

/// Which signal the network is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkFlavor {
    /// `αFy`, no channel knowledge.
    Blind,
    /// `H†y`.
    Zf,
}

/// Feature matrix of the blind front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureInput {
    /// Pattern-indicator matrix.
    Mapping,
    /// Identity, i.e. amplitude scaling only.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub training_snr_db: f64,
    pub train_size: usize,
    pub validation_size: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub alpha: f64,
    pub flavor: NetworkFlavor,
    pub feature: FeatureInput,
}

impl TrainConfig {
    /// Reference blind-detector settings per scheme and location. The corner
    /// training SNR is the 160 dB optimum reported for the corner receiver.
    pub fn preset(kind: SchemeKind, location: &ReceiverLocation) -> Result<Self> {
        let (snr, lr, alpha) = match (kind, location) {
            (SchemeKind::Gosm, ReceiverLocation::Center) => (140.0, 0.01, 1e5),
            (SchemeKind::Gosm, ReceiverLocation::Corner) => (160.0, 0.001, 2e5),
            (SchemeKind::Gosmp, ReceiverLocation::Center) => (140.0, 0.01, 1e5),
            (SchemeKind::Gosmp, ReceiverLocation::Corner) => (160.0, 0.005, 1e6),
            (_, ReceiverLocation::Point(_)) => {
                return Err(invalid("location", "training presets exist for center and corner only"))
            }
        };
        Ok(Self {
            training_snr_db: snr,
            train_size: 150_000,
            validation_size: 50_000,
            batch_size: 100,
            epochs: 50,
            seed: 1,
            learning_rate: lr,
            alpha,
            flavor: NetworkFlavor::Blind,
            feature: FeatureInput::Mapping,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_size == 0 || self.validation_size == 0 || self.batch_size == 0 {
            return Err(invalid("train_size", "set and batch sizes must be positive"));
        }
        if !self.train_size.is_multiple_of(self.batch_size) {
            return Err(invalid("batch_size", "must divide train_size"));
        }
        if !self.training_snr_db.is_finite() {
            return Err(invalid("training_snr_db", "must be finite"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(invalid("learning_rate", "must be finite and ≥ 0"));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(invalid("alpha", "must be finite and > 0"));
        }
        Ok(())
    }

    /// The linear map in front of the network.
    pub fn front_end<T: Scalar>(&self, scheme: &GomimoScheme<T>, channel: &ChannelMatrix<T>) -> Result<FrontEnd<T>> {
        Ok(match (self.flavor, self.feature) {
            (NetworkFlavor::Zf, _) => FrontEnd::zero_forcing(pseudo_inverse(channel)?),
            (NetworkFlavor::Blind, FeatureInput::Mapping) => FrontEnd::blind(PreprocessConfig::with_patterns(
                T::of(self.alpha),
                scheme.patterns(),
                channel.nr(),
            )?),
            (NetworkFlavor::Blind, FeatureInput::Identity) => {
                FrontEnd::blind(PreprocessConfig::scaling_only(T::of(self.alpha), channel.nr())?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub params: MlpParams<T>,
    pub log: Vec<EpochRecord>,
    /// Epoch of the kept checkpoint; 0 means the initial weights.
    pub best_epoch: usize,
}

impl<T> TrainOutcome<T> {
    /// First epoch whose best-so-far validation MSE is within `rel_tol` of
    /// the best of the whole run.
    pub fn plateau_epoch(&self, rel_tol: f64) -> Option<usize> {
        plateau_epoch(&self.log, rel_tol)
    }

    /// Best validation MSE of the run.
    pub fn best_val_mse(&self) -> Option<f64> {
        self.log.iter().map(|r| r.val_mse).reduce(f64::min)
    }
}

pub fn plateau_epoch(log: &[EpochRecord], rel_tol: f64) -> Option<usize> {
    let best = log.iter().map(|r| r.val_mse).reduce(f64::min)?;
    let mut running = f64::INFINITY;
    for r in log {
        running = running.min(r.val_mse);
        if running <= best * (1.0 + rel_tol) {
            return Some(r.epoch);
        }
    }
    None
}

const EVAL_CHUNK: usize = 2_000;

fn dataset_mse<T: Scalar>(params: &MlpParams<T>, data: &Dataset<T>, epoch: usize) -> Result<f64> {
    let mut total = 0.0;
    let rows: Vec<usize> = (0..data.len()).collect();
    for chunk in rows.chunks(EVAL_CHUNK) {
        let (x, t) = data.gather(chunk);
        let out = forward(params, &x).map_err(|e| at_epoch(e, epoch))?.0;
        total += mse_loss(&out, &t)?.as_f64() * chunk.len() as f64;
    }
    Ok(total / data.len().max(1) as f64)
}

fn at_epoch(e: Error, epoch: usize) -> Error {
    match e {
        Error::Divergence { what, .. } => Error::Divergence { epoch, what },
        other => other,
    }
}

/// Mini-batch Adamax on the batch-mean MSE, one reshuffle per epoch, keeping
/// the parameters with the lowest validation MSE.
pub fn train<T: Scalar>(
    arch: &MlpArchitecture,
    train_set: &Dataset<T>,
    validation_set: &Dataset<T>,
    config: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    for (data, name) in [(train_set, "training set"), (validation_set, "validation set")] {
        if data.inputs().cols() != arch.input_width() || data.targets().cols() != arch.output_width() {
            return Err(Error::DimensionMismatch {
                context: if name == "training set" { "training set width" } else { "validation set width" },
                expected: arch.input_width() + arch.output_width(),
                actual: data.inputs().cols() + data.targets().cols(),
            });
        }
    }
    if !train_set.len().is_multiple_of(config.batch_size) || train_set.is_empty() {
        return Err(invalid("batch_size", "must divide the training set size"));
    }

    let mut params = MlpParams::<T>::glorot(arch, &mut rng::stream(config.seed, streams::WEIGHT_INIT));
    let mut optimizer = AdamaxState::new(&params, config.learning_rate)?;
    let mut shuffle_rng = rng::stream(config.seed, streams::SHUFFLE);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let mut best = (dataset_mse(&params, validation_set, 0)?, params.clone(), 0);
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let (x, t) = train_set.gather(batch);
            let (out, cache) = forward(&params, &x).map_err(|e| at_epoch(e, epoch))?;
            let loss = mse_loss(&out, &t)?.as_f64();
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    what: "training loss",
                });
            }
            loss_sum += loss;
            let grads = backward(&params, &cache, &t)?;
            optimizer.step(&mut params, &grads)?;
        }
        let train_mse = loss_sum / (train_set.len() / config.batch_size) as f64;
        let val_mse = dataset_mse(&params, validation_set, epoch)?;
        if !val_mse.is_finite() {
            return Err(Error::Divergence {
                epoch,
                what: "validation loss",
            });
        }
        if val_mse < best.0 {
            best = (val_mse, params.clone(), epoch);
        }
        log.push(EpochRecord {
            epoch,
            train_mse,
            val_mse,
        });
    }
    Ok(TrainOutcome {
        params: best.1,
        log,
        best_epoch: best.2,
    })
}

/// A trained network with the front end it was trained behind.
#[derive(Debug, Clone)]
pub struct FittedNetwork<T> {
    pub front_end: FrontEnd<T>,
    pub outcome: TrainOutcome<T>,
}

impl<T: Scalar> FittedNetwork<T> {
    pub fn detector(&self) -> Result<Detector<T>> {
        Detector::dnn(self.front_end.clone(), self.outcome.params.clone())
    }
}

/// Generates the training and validation sets for `config` and trains the
/// scheme's preset architecture on them.
pub fn fit<T: Scalar>(
    scheme: &GomimoScheme<T>,
    channel: &ChannelMatrix<T>,
    location: &ReceiverLocation,
    config: &TrainConfig,
) -> Result<FittedNetwork<T>> {
    config.validate()?;
    let arch = match scheme.kind() {
        SchemeKind::Gosm => MlpArchitecture::gosm(),
        SchemeKind::Gosmp => MlpArchitecture::gosmp(),
    };
    let arch = if arch.output_width() == scheme.bits() as usize {
        arch
    } else {
        let mut w = arch.widths().to_vec();
        let last = w.len() - 1;
        w[last] = scheme.bits() as usize;
        MlpArchitecture::new(w)?
    };
    let front_end = config.front_end(scheme, channel)?;
    let noise = snr_to_sigma(config.training_snr_db, scheme.constellation().avg_power())?;
    let sets = [
        (config.train_size, streams::TRAIN_DATA),
        (config.validation_size, streams::VALIDATION_DATA),
    ]
    .map(|(size, stream)| {
        let provenance = Provenance {
            scheme: scheme.kind(),
            location: location.label(),
            snr_db: config.training_snr_db,
            seed: config.seed,
            stream,
        };
        generate_dataset(
            scheme,
            channel,
            &front_end,
            size,
            &noise,
            provenance,
            &mut rng::stream(config.seed, stream),
        )
    });
    let [train_set, validation_set] = sets;
    let outcome = train(&arch, &train_set?, &validation_set?, config)?;
    Ok(FittedNetwork { front_end, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_channel_matrix, ArrayLayout, OpticsParams};

    fn small_config() -> TrainConfig {
        TrainConfig {
            training_snr_db: 140.0,
            train_size: 2_000,
            validation_size: 500,
            batch_size: 100,
            epochs: 3,
            seed: 11,
            learning_rate: 0.01,
            alpha: 1e5,
            flavor: NetworkFlavor::Blind,
            feature: FeatureInput::Mapping,
        }
    }

    fn centre() -> ChannelMatrix<f64> {
        let g = ArrayLayout::table1().geometry(ReceiverLocation::Center).unwrap();
        build_channel_matrix(&g, &OpticsParams::table1()).unwrap()
    }

    #[test]
    fn presets_follow_tables() {
        let c = TrainConfig::preset(SchemeKind::Gosm, &ReceiverLocation::Corner).unwrap();
        assert_eq!((c.learning_rate, c.alpha), (0.001, 2e5));
        let c = TrainConfig::preset(SchemeKind::Gosmp, &ReceiverLocation::Corner).unwrap();
        assert_eq!((c.learning_rate, c.alpha), (0.005, 1e6));
        let c = TrainConfig::preset(SchemeKind::Gosmp, &ReceiverLocation::Center).unwrap();
        assert_eq!((c.train_size, c.validation_size, c.batch_size, c.epochs), (150_000, 50_000, 100, 50));
        assert!(TrainConfig::preset(SchemeKind::Gosm, &ReceiverLocation::Point([1.0; 3])).is_err());
    }

    #[test]
    fn batch_must_divide() {
        let mut c = small_config();
        c.batch_size = 300;
        assert!(c.validate().is_err());
    }

    #[test]
    fn deterministic_logs() {
        let s = GomimoScheme::standard(SchemeKind::Gosm);
        let h = centre();
        let a = fit(&s, &h, &ReceiverLocation::Center, &small_config()).unwrap();
        let b = fit(&s, &h, &ReceiverLocation::Center, &small_config()).unwrap();
        assert_eq!(a.outcome.log, b.outcome.log);
        assert_eq!(a.outcome.params, b.outcome.params);
        assert_eq!(a.outcome.log.len(), 3);
    }

    #[test]
    fn zero_learning_rate_keeps_initial_weights() {
        let s = GomimoScheme::standard(SchemeKind::Gosm);
        let mut c = small_config();
        c.learning_rate = 0.0;
        let fitted = fit(&s, &centre(), &ReceiverLocation::Center, &c).unwrap();
        let init = MlpParams::<f64>::glorot(&MlpArchitecture::gosm(), &mut rng::stream(c.seed, streams::WEIGHT_INIT));
        assert_eq!(fitted.outcome.params, init);
        let v0 = fitted.outcome.log[0].val_mse;
        assert!(fitted.outcome.log.iter().all(|r| r.val_mse == v0));
    }

    #[test]
    fn plateau_definition() {
        let log: Vec<EpochRecord> = [0.5, 0.2, 0.105, 0.11, 0.1]
            .iter()
            .enumerate()
            .map(|(i, &v)| EpochRecord {
                epoch: i + 1,
                train_mse: v,
                val_mse: v,
            })
            .collect();
        assert_eq!(plateau_epoch(&log, 0.1), Some(3));
        assert_eq!(plateau_epoch(&log, 0.0), Some(5));
        assert_eq!(plateau_epoch(&[], 0.1), None);
    }
}
