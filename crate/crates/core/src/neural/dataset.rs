use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelMatrix, NoiseModel};
use crate::detectors::FrontEnd;
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::modulation::{BitFrame, GomimoScheme, SchemeKind};
use crate::scalar::Scalar;

/// Where a dataset came from, enough to regenerate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scheme: SchemeKind,
    pub location: String,
    pub snr_db: f64,
    pub seed: u64,
    pub stream: u64,
}

/// Network inputs (front end already applied) and their bit targets.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    inputs: Matrix<T>,
    targets: Matrix<T>,
    frames: Vec<BitFrame>,
    provenance: Provenance,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(inputs: Matrix<T>, frames: Vec<BitFrame>, provenance: Provenance) -> Result<Self> {
        if inputs.rows() != frames.len() {
            return Err(Error::DimensionMismatch {
                context: "dataset rows",
                expected: inputs.rows(),
                actual: frames.len(),
            });
        }
        let width = frames.first().map_or(0, |f| f.len() as usize);
        if frames.iter().any(|f| f.len() as usize != width) {
            return Err(invalid("frames", "all frames must have the same length"));
        }
        let targets = Matrix::from_fn(frames.len(), width, |r, q| T::of(f64::from(frames[r].bit(q as u32))));
        Ok(Self {
            inputs,
            targets,
            frames,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn inputs(&self) -> &Matrix<T> {
        &self.inputs
    }

    pub fn targets(&self) -> &Matrix<T> {
        &self.targets
    }

    pub fn frames(&self) -> &[BitFrame] {
        &self.frames
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Copies the listed rows into a batch `(inputs, targets)`.
    pub fn gather(&self, rows: &[usize]) -> (Matrix<T>, Matrix<T>) {
        let pick = |m: &Matrix<T>| {
            let mut data = Vec::with_capacity(rows.len() * m.cols());
            for &r in rows {
                data.extend_from_slice(m.row(r));
            }
            Matrix::from_vec(rows.len(), m.cols(), data).expect("rows have the matrix width")
        };
        (pick(&self.inputs), pick(&self.targets))
    }
}

/// Draws `size` uniform frames, sends them through `y = Hx + n` and the
/// front end.
pub fn generate_dataset<T: Scalar, R: Rng + ?Sized>(
    scheme: &GomimoScheme<T>,
    channel: &ChannelMatrix<T>,
    front_end: &FrontEnd<T>,
    size: usize,
    noise: &NoiseModel,
    provenance: Provenance,
    rng: &mut R,
) -> Result<Dataset<T>> {
    if channel.nt() != scheme.nt() || channel.nr() != front_end.nr() {
        return Err(Error::DimensionMismatch {
            context: "dataset channel",
            expected: scheme.nt(),
            actual: channel.nt(),
        });
    }
    let nr = channel.nr();
    let frame_count = scheme.frame_count() as u64;
    let mut frames = Vec::with_capacity(size);
    let mut received = Vec::with_capacity(size * nr);
    for _ in 0..size {
        let frame = BitFrame::new(rng.random_range(0..frame_count), scheme.bits())?;
        let mut y = channel.apply(&scheme.map_bits(frame)?);
        noise.corrupt(rng, &mut y);
        received.extend_from_slice(&y);
        frames.push(frame);
    }
    let inputs = front_end.apply_rows(&Matrix::from_vec(size, nr, received)?);
    Dataset::new(inputs, frames, provenance)
}
