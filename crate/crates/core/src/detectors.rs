//! The four receivers: joint ML, ZF-ML, ZF-DNN and the CSI-free blind DNN.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelMatrix;
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Matrix};
use crate::modulation::{BitFrame, Codebook, GomimoScheme, SchemeKind, SpatialPatternSet};
use crate::neural::MlpParams;
use crate::scalar::Scalar;

/// Channels whose condition number exceeds this are rejected by
/// [`pseudo_inverse`].
pub const MAX_CONDITION: f64 = 1e12;

/// Zero-forcing equalizer `H†`.
#[derive(Debug, Clone)]
pub struct EqualizerState<T> {
    h_pinv: Matrix<T>,
    condition: f64,
}

impl<T: Scalar> EqualizerState<T> {
    pub fn h_pinv(&self) -> &Matrix<T> {
        &self.h_pinv
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn nt(&self) -> usize {
        self.h_pinv.rows()
    }

    pub fn nr(&self) -> usize {
        self.h_pinv.cols()
    }
}

pub fn pseudo_inverse<T: Scalar>(h: &ChannelMatrix<T>) -> Result<EqualizerState<T>> {
    let (h_pinv, condition) = linalg::pinv(h.matrix(), MAX_CONDITION)?;
    Ok(EqualizerState { h_pinv, condition })
}

/// Exhaustive search `argmin_x ‖y − Hx‖²` over the codebook. Ties go to the
/// lowest frame.
pub fn joint_ml_detect<T: Scalar>(y: &[T], h: &ChannelMatrix<T>, codebook: &Codebook<T>) -> BitFrame {
    let hm = h.matrix();
    let mut best = 0;
    let mut best_d = T::infinity();
    for (i, (_, x)) in codebook.entries().iter().enumerate() {
        let mut d = T::zero();
        for (r, &yr) in y.iter().enumerate() {
            let hx = linalg::dot(hm.row(r), x);
            let e = yr - hx;
            d += e * e;
        }
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    codebook.frame(best)
}

/// `H†·y`.
pub fn zf_equalize<T: Scalar>(y: &[T], eq: &EqualizerState<T>) -> Vec<T> {
    eq.h_pinv.matvec(y).expect("received vector length matches Nr")
}

/// How ZF-ML picks the spatial pattern from the equalized vector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialRule {
    /// Pattern whose active entries carry the most energy `Σ x̂ᵢ²`.
    #[default]
    Energy,
    /// Pattern of the codeword nearest to `x̂` in Euclidean distance.
    NearestCodeword,
}

/// ZF-ML steps two and three on an already equalized vector: pick the
/// spatial pattern, then quantize the active entries (GOSM: their mean) to
/// the nearest PAM level. Pattern ties go to the lowest index, level ties to
/// the lower level.
pub fn zf_ml_detect<T: Scalar>(x_zf: &[T], scheme: &GomimoScheme<T>, rule: SpatialRule) -> BitFrame {
    let patterns = scheme.patterns().patterns();
    let constellation = scheme.constellation();
    let levels_for = |p: &[usize]| -> Vec<usize> {
        match scheme.kind() {
            SchemeKind::Gosm => {
                let mean = p.iter().map(|&i| x_zf[i]).sum::<T>() / T::of(p.len() as f64);
                vec![constellation.nearest(mean)]
            }
            SchemeKind::Gosmp => p.iter().map(|&i| constellation.nearest(x_zf[i])).collect(),
        }
    };

    let pattern = match rule {
        SpatialRule::Energy => {
            let mut best = 0;
            let mut best_e = T::neg_infinity();
            for (k, p) in patterns.iter().enumerate() {
                let e = p.iter().map(|&i| x_zf[i] * x_zf[i]).sum::<T>();
                if e > best_e {
                    best_e = e;
                    best = k;
                }
            }
            best
        }
        SpatialRule::NearestCodeword => {
            let mut best = 0;
            let mut best_d = T::infinity();
            for (k, p) in patterns.iter().enumerate() {
                let s = scheme.signal(k, &levels_for(p));
                let d = x_zf.iter().zip(&s).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>();
                if d < best_d {
                    best_d = d;
                    best = k;
                }
            }
            best
        }
    };
    scheme.frame_of(pattern, &levels_for(&patterns[pattern]))
}

/// Square 0/1 matrix whose row `i` is the indicator of activation pattern `i`.
pub fn feature_matrix<T: Scalar>(patterns: &SpatialPatternSet, nr: usize) -> Result<Matrix<T>> {
    if patterns.len() != nr {
        return Err(Error::DimensionMismatch {
            context: "feature matrix needs one pattern per receive branch",
            expected: nr,
            actual: patterns.len(),
        });
    }
    if patterns.nt() != nr {
        return Err(Error::DimensionMismatch {
            context: "feature matrix needs Nt == Nr",
            expected: nr,
            actual: patterns.nt(),
        });
    }
    let mut f = Matrix::zeros(nr, nr);
    for (row, p) in patterns.patterns().iter().enumerate() {
        for &led in p {
            f[(row, led)] = T::one();
        }
    }
    Ok(f)
}

/// Amplitude scaling and feature extraction ahead of the blind network.
#[derive(Debug, Clone)]
pub struct PreprocessConfig<T> {
    alpha: T,
    feature: Matrix<T>,
}

impl<T: Scalar> PreprocessConfig<T> {
    pub fn new(alpha: T, feature: Matrix<T>) -> Result<Self> {
        if !(alpha > T::zero() && alpha.is_finite()) {
            return Err(invalid("alpha", "scaling factor must be positive and finite"));
        }
        if feature.rows() != feature.cols() {
            return Err(Error::DimensionMismatch {
                context: "feature matrix must be square",
                expected: feature.rows(),
                actual: feature.cols(),
            });
        }
        if feature.as_slice().iter().any(|&v| v != T::zero() && v != T::one()) {
            return Err(invalid("feature", "entries must be 0 or 1"));
        }
        Ok(Self { alpha, feature })
    }

    /// `α·F·y` with `F` built from the scheme's activation patterns.
    pub fn with_patterns(alpha: T, patterns: &SpatialPatternSet, nr: usize) -> Result<Self> {
        Self::new(alpha, feature_matrix(patterns, nr)?)
    }

    /// `α·y` (feature extraction disabled).
    pub fn scaling_only(alpha: T, nr: usize) -> Result<Self> {
        Self::new(alpha, Matrix::identity(nr))
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn feature(&self) -> &Matrix<T> {
        &self.feature
    }

    pub fn nr(&self) -> usize {
        self.feature.rows()
    }
}

/// `α·F·y`.
pub fn preprocess<T: Scalar>(y: &[T], config: &PreprocessConfig<T>) -> Vec<T> {
    let fy = config.feature.matvec(y).expect("received vector length matches Nr");
    fy.into_iter().map(|v| config.alpha * v).collect()
}

/// Bit `q` is 1 iff the fuzzy output is at least 0.5.
pub fn hard_decision<T: Scalar>(fuzzy: &[T]) -> BitFrame {
    let half = T::of(0.5);
    let bits: Vec<u8> = fuzzy.iter().map(|&z| u8::from(z >= half)).collect();
    BitFrame::from_bits(&bits).expect("at most 64 outputs")
}

/// What the network sees: the equalized vector `H†y` or the pre-processed
/// vector `αFy`. Both are a fixed linear map, precomputed once so single and
/// batched detection round identically.
#[derive(Debug, Clone)]
pub struct FrontEnd<T> {
    source: FrontEndSource<T>,
    // input_width × nr
    op: Matrix<T>,
}

#[derive(Debug, Clone)]
pub enum FrontEndSource<T> {
    ZeroForcing(EqualizerState<T>),
    Blind(PreprocessConfig<T>),
}

impl<T: Scalar> FrontEnd<T> {
    pub fn zero_forcing(eq: EqualizerState<T>) -> Self {
        let op = eq.h_pinv.clone();
        Self {
            source: FrontEndSource::ZeroForcing(eq),
            op,
        }
    }

    pub fn blind(cfg: PreprocessConfig<T>) -> Self {
        let op = cfg.feature.scale(cfg.alpha);
        Self {
            source: FrontEndSource::Blind(cfg),
            op,
        }
    }

    pub fn source(&self) -> &FrontEndSource<T> {
        &self.source
    }

    pub fn is_blind(&self) -> bool {
        matches!(self.source, FrontEndSource::Blind(_))
    }

    pub fn apply(&self, y: &[T]) -> Vec<T> {
        self.op.matvec(y).expect("received vector length matches Nr")
    }

    pub fn input_width(&self) -> usize {
        self.op.rows()
    }

    pub fn nr(&self) -> usize {
        self.op.cols()
    }

    /// Applies the front end to every row of `ys`.
    pub fn apply_rows(&self, ys: &Matrix<T>) -> Matrix<T> {
        ys.matmul(&self.op.transpose()).expect("received vector length matches Nr")
    }
}

fn check_network<T: Scalar>(front: &FrontEnd<T>, network: &MlpParams<T>, y_len: usize) -> Result<()> {
    if y_len != front.nr() {
        return Err(Error::DimensionMismatch {
            context: "received vector",
            expected: front.nr(),
            actual: y_len,
        });
    }
    if network.architecture().input_width() != front.input_width() {
        return Err(Error::DimensionMismatch {
            context: "network input width",
            expected: front.input_width(),
            actual: network.architecture().input_width(),
        });
    }
    Ok(())
}

fn dnn_detect<T: Scalar>(y: &[T], front: &FrontEnd<T>, network: &MlpParams<T>) -> Result<BitFrame> {
    check_network(front, network, y.len())?;
    let out = network.predict(&front.apply_rows(&Matrix::from_vec(1, y.len(), y.to_vec())?))?;
    Ok(hard_decision(out.row(0)))
}

pub fn blind_dnn_detect<T: Scalar>(
    y: &[T],
    config: &PreprocessConfig<T>,
    network: &MlpParams<T>,
) -> Result<BitFrame> {
    dnn_detect(y, &FrontEnd::blind(config.clone()), network)
}

pub fn zf_dnn_detect<T: Scalar>(y: &[T], eq: &EqualizerState<T>, network: &MlpParams<T>) -> Result<BitFrame> {
    dnn_detect(y, &FrontEnd::zero_forcing(eq.clone()), network)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    JointMl,
    ZfMl,
    ZfDnn,
    BlindDnn,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 4] = [Self::JointMl, Self::ZfMl, Self::ZfDnn, Self::BlindDnn];

    pub fn name(self) -> &'static str {
        match self {
            Self::JointMl => "joint_ml",
            Self::ZfMl => "zf_ml",
            Self::ZfDnn => "zf_dnn",
            Self::BlindDnn => "blind_dnn",
        }
    }

    pub fn needs_network(self) -> bool {
        matches!(self, Self::ZfDnn | Self::BlindDnn)
    }
}

impl std::fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A detector together with everything it needs at run time.
#[derive(Debug, Clone)]
pub enum Detector<T> {
    JointMl {
        channel: ChannelMatrix<T>,
        codebook: Codebook<T>,
    },
    ZfMl {
        equalizer: EqualizerState<T>,
        scheme: GomimoScheme<T>,
        rule: SpatialRule,
    },
    Dnn {
        front_end: FrontEnd<T>,
        network: MlpParams<T>,
    },
}

impl<T: Scalar> Detector<T> {
    pub fn joint_ml(channel: &ChannelMatrix<T>, scheme: &GomimoScheme<T>) -> Self {
        Self::JointMl {
            channel: channel.clone(),
            codebook: scheme.enumerate_codebook(),
        }
    }

    pub fn zf_ml(channel: &ChannelMatrix<T>, scheme: &GomimoScheme<T>, rule: SpatialRule) -> Result<Self> {
        Ok(Self::ZfMl {
            equalizer: pseudo_inverse(channel)?,
            scheme: scheme.clone(),
            rule,
        })
    }

    pub fn dnn(front_end: FrontEnd<T>, network: MlpParams<T>) -> Result<Self> {
        if network.architecture().input_width() != front_end.input_width() {
            return Err(Error::DimensionMismatch {
                context: "network input width",
                expected: front_end.input_width(),
                actual: network.architecture().input_width(),
            });
        }
        Ok(Self::Dnn { front_end, network })
    }

    pub fn kind(&self) -> DetectorKind {
        match self {
            Self::JointMl { .. } => DetectorKind::JointMl,
            Self::ZfMl { .. } => DetectorKind::ZfMl,
            Self::Dnn { front_end, .. } if front_end.is_blind() => DetectorKind::BlindDnn,
            Self::Dnn { .. } => DetectorKind::ZfDnn,
        }
    }

    pub fn detect(&self, y: &[T]) -> Result<BitFrame> {
        match self {
            Self::JointMl { channel, codebook } => {
                check_len(y, channel.nr())?;
                Ok(joint_ml_detect(y, channel, codebook))
            }
            Self::ZfMl { equalizer, scheme, rule } => {
                check_len(y, equalizer.nr())?;
                Ok(zf_ml_detect(&zf_equalize(y, equalizer), scheme, *rule))
            }
            Self::Dnn { front_end, network } => dnn_detect(y, front_end, network),
        }
    }

    /// Detects every row of `ys`. The networks run the whole block through
    /// one batched forward pass.
    pub fn detect_batch(&self, ys: &Matrix<T>) -> Result<Vec<BitFrame>> {
        match self {
            Self::Dnn { front_end, network } => {
                if ys.rows() == 0 {
                    return Ok(Vec::new());
                }
                check_network(front_end, network, ys.cols())?;
                let out = network.predict(&front_end.apply_rows(ys))?;
                Ok(out.row_iter().map(hard_decision).collect())
            }
            _ => ys.row_iter().map(|y| self.detect(y)).collect(),
        }
    }
}

fn check_len<T>(y: &[T], nr: usize) -> Result<()> {
    if y.len() != nr {
        return Err(Error::DimensionMismatch {
            context: "received vector",
            expected: nr,
            actual: y.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_channel_matrix, ArrayLayout, OpticsParams, ReceiverLocation};
    use crate::modulation::legal_patterns;
    use crate::neural::MlpArchitecture;

    fn centre_channel() -> ChannelMatrix<f64> {
        let g = ArrayLayout::table1().geometry(ReceiverLocation::Center).unwrap();
        build_channel_matrix(&g, &OpticsParams::table1()).unwrap()
    }

    fn identity_channel(n: usize) -> ChannelMatrix<f64> {
        ChannelMatrix::from_matrix(Matrix::identity(n)).unwrap()
    }

    /// Brute force over every (pattern, level assignment) pair.
    fn brute_nearest(x: &[f64], scheme: &GomimoScheme<f64>) -> BitFrame {
        let cb = scheme.enumerate_codebook();
        let mut best = (f64::INFINITY, 0);
        for (i, (_, s)) in cb.entries().iter().enumerate() {
            let d: f64 = x.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best.0 {
                best = (d, i);
            }
        }
        cb.frame(best.1)
    }

    #[test]
    fn pseudo_inverse_small_cases() {
        let eq = pseudo_inverse(&identity_channel(4)).unwrap();
        assert!(eq.h_pinv().max_abs_diff(&Matrix::identity(4)) < 1e-15);
        let d = ChannelMatrix::from_matrix(Matrix::diagonal(&[2.0, 4.0])).unwrap();
        let eq = pseudo_inverse(&d).unwrap();
        assert!(eq.h_pinv().max_abs_diff(&Matrix::diagonal(&[0.5, 0.25])) < 1e-15);
        let singular = ChannelMatrix::from_matrix(Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap()).unwrap();
        assert!(matches!(pseudo_inverse(&singular), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn pseudo_inverse_table1_residual() {
        for loc in [ReceiverLocation::Center, ReceiverLocation::Corner] {
            let g = ArrayLayout::table1().geometry(loc).unwrap();
            let h: ChannelMatrix<f64> = build_channel_matrix(&g, &OpticsParams::table1()).unwrap();
            let eq = pseudo_inverse(&h).unwrap();
            let residual = eq.h_pinv().matmul(h.matrix()).unwrap().max_abs_diff(&Matrix::identity(4));
            assert!(residual < 1e-8, "{loc:?}: {residual:e}");
        }
    }

    #[test]
    fn joint_ml_toy() {
        let cb = Codebook::from_pairs(vec![
            (BitFrame::new(0, 1).unwrap(), vec![0.0, 1.0]),
            (BitFrame::new(1, 1).unwrap(), vec![1.0, 0.0]),
        ])
        .unwrap();
        let f = joint_ml_detect(&[0.9, 0.2], &identity_channel(2), &cb);
        assert_eq!(f.value(), 1);
        // equidistant: lowest frame wins
        assert_eq!(joint_ml_detect(&[0.5, 0.5], &identity_channel(2), &cb).value(), 0);
    }

    #[test]
    fn joint_ml_noise_free() {
        let h = centre_channel();
        for kind in [SchemeKind::Gosm, SchemeKind::Gosmp] {
            let scheme = GomimoScheme::standard(kind);
            let cb = scheme.enumerate_codebook();
            for (f, x) in cb.entries() {
                assert_eq!(joint_ml_detect(&h.apply(x), &h, &cb), *f);
            }
        }
    }

    #[test]
    fn zf_equalize_linearity() {
        let h = centre_channel();
        let eq = pseudo_inverse(&h).unwrap();
        let scheme = GomimoScheme::<f64>::standard(SchemeKind::Gosmp);
        let x = scheme.signal(2, &[1, 3]);
        let clean = zf_equalize(&h.apply(&x), &eq);
        for (a, b) in clean.iter().zip(&x) {
            assert!((a - b).abs() < 1e-8);
        }
        let n = [1e-7, -2e-7, 0.5e-7, 3e-7];
        let y: Vec<f64> = h.apply(&x).iter().zip(&n).map(|(a, b)| a + b).collect();
        let hn = zf_equalize(&n, &eq);
        for ((a, b), c) in zf_equalize(&y, &eq).iter().zip(&x).zip(&hn) {
            assert!((a - (b + c)).abs() < 1e-8);
        }
        let id = pseudo_inverse(&identity_channel(4)).unwrap();
        assert_eq!(zf_equalize(&[1.0, 2.0, 3.0, 4.0], &id), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn zf_ml_examples() {
        let gosm = GomimoScheme::<f64>::standard(SchemeKind::Gosm);
        let gosmp = GomimoScheme::<f64>::standard(SchemeKind::Gosmp);
        let x = [0.41, 0.39, 0.01, -0.02];
        let y = [0.0, 0.0, 1.55, 0.45];
        for rule in [SpatialRule::Energy, SpatialRule::NearestCodeword] {
            let f = zf_ml_detect(&x, &gosm, rule);
            assert_eq!(gosm.map_bits(f).unwrap(), vec![0.4, 0.4, 0.0, 0.0]);
            let f = zf_ml_detect(&y, &gosmp, rule);
            assert_eq!(gosmp.map_bits(f).unwrap(), vec![0.0, 0.0, 1.6, 0.4]);
        }
        assert_eq!(zf_ml_detect(&x, &gosm, SpatialRule::NearestCodeword), brute_nearest(&x, &gosm));
        assert_eq!(zf_ml_detect(&y, &gosmp, SpatialRule::NearestCodeword), brute_nearest(&y, &gosmp));
    }

    #[test]
    fn zf_ml_exact_on_codewords() {
        for kind in [SchemeKind::Gosm, SchemeKind::Gosmp] {
            let s = GomimoScheme::<f64>::standard(kind);
            for (f, x) in s.enumerate_codebook().entries() {
                for rule in [SpatialRule::Energy, SpatialRule::NearestCodeword] {
                    assert_eq!(zf_ml_detect(x, &s, rule), *f);
                }
            }
        }
    }

    #[test]
    fn feature_matrix_matches_mapping_table() {
        let f: Matrix<f64> = feature_matrix(&legal_patterns(4, 2).unwrap(), 4).unwrap();
        let expected = Matrix::from_rows(&[
            [1.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 1.0],
        ])
        .unwrap();
        assert_eq!(f, expected);
        for i in 0..4 {
            assert_eq!(f.row(i).iter().sum::<f64>(), 2.0);
            assert_eq!((0..4).map(|r| f[(r, i)]).sum::<f64>(), 2.0);
        }
        assert!(feature_matrix::<f64>(&legal_patterns(4, 1).unwrap(), 3).is_err());
        assert!(feature_matrix::<f64>(&legal_patterns(5, 2).unwrap(), 4).is_err());
    }

    #[test]
    fn preprocess_examples() {
        let id = PreprocessConfig::scaling_only(1.0, 4).unwrap();
        assert_eq!(preprocess(&[1.0, 2.0, 3.0, 4.0], &id), vec![1.0, 2.0, 3.0, 4.0]);
        let two = PreprocessConfig::scaling_only(2.0, 4).unwrap();
        assert_eq!(preprocess(&[1.0, 0.0, 0.0, 0.0], &two), vec![2.0, 0.0, 0.0, 0.0]);
        let f = PreprocessConfig::with_patterns(1.0, &legal_patterns(4, 2).unwrap(), 4).unwrap();
        assert_eq!(preprocess(&[1.0; 4], &f), vec![2.0; 4]);
        assert!(PreprocessConfig::scaling_only(0.0, 4).is_err());
        assert!(PreprocessConfig::new(1.0, Matrix::<f64>::from_rows(&[[0.5]]).unwrap()).is_err());
    }

    #[test]
    fn hard_decision_threshold() {
        assert_eq!(hard_decision(&[0.5]).bits(), vec![1]);
        assert_eq!(hard_decision(&[0.49]).bits(), vec![0]);
        assert_eq!(hard_decision(&[0.1, 0.9, 0.5, 0.4]).bits(), vec![0, 1, 1, 0]);
    }

    fn constant_network(outputs: &[f64]) -> MlpParams<f64> {
        let arch = MlpArchitecture::new(vec![4, 3, 3, 3, 3, outputs.len()]).unwrap();
        let mut p = MlpParams::zeros(&arch);
        // logit = ln(z / (1 - z)) gives sigmoid output z regardless of input
        for (b, &z) in p.biases_mut()[4].iter_mut().zip(outputs) {
            *b = (z / (1.0 - z)).ln();
        }
        p
    }

    #[test]
    fn dnn_pipeline_wiring() {
        let net = constant_network(&[0.9, 0.1, 0.8, 0.2]);
        let cfg = PreprocessConfig::with_patterns(1e5, &legal_patterns(4, 2).unwrap(), 4).unwrap();
        for y in [[0.0; 4], [1e-5, 2e-5, 0.0, 3e-5]] {
            assert_eq!(blind_dnn_detect(&y, &cfg, &net).unwrap().bits(), vec![1, 0, 1, 0]);
        }
        let eq = pseudo_inverse(&centre_channel()).unwrap();
        assert_eq!(zf_dnn_detect(&[1e-5; 4], &eq, &net).unwrap().bits(), vec![1, 0, 1, 0]);
        assert!(blind_dnn_detect(&[0.0; 3], &cfg, &net).is_err());
        let wide = MlpParams::zeros(&MlpArchitecture::new(vec![5, 2, 2, 2, 2, 4]).unwrap());
        assert!(blind_dnn_detect(&[0.0; 4], &cfg, &wide).is_err());
    }

    #[test]
    fn zf_dnn_equals_blind_under_identity_channel() {
        let arch = MlpArchitecture::new(vec![4, 6, 5, 4, 3, 4]).unwrap();
        let mut rng = crate::rng::stream(3, 0);
        let net = MlpParams::<f64>::glorot(&arch, &mut rng);
        let eq = pseudo_inverse(&identity_channel(4)).unwrap();
        let cfg = PreprocessConfig::scaling_only(1.0, 4).unwrap();
        for y in [[0.3, -1.0, 2.0, 0.1], [1.0, 1.0, 0.0, 0.5]] {
            let a = zf_dnn_detect(&y, &eq, &net).unwrap();
            assert_eq!(a, blind_dnn_detect(&y, &cfg, &net).unwrap());
            assert_eq!(a, blind_dnn_detect(&y, &cfg, &net).unwrap());
        }
    }

    #[test]
    fn batch_matches_single() {
        let h = centre_channel();
        let scheme = GomimoScheme::standard(SchemeKind::Gosmp);
        let arch = MlpArchitecture::gosmp();
        let net = MlpParams::<f64>::glorot(&arch, &mut crate::rng::stream(5, 0));
        let cfg = PreprocessConfig::with_patterns(1e5, scheme.patterns(), 4).unwrap();
        let detectors = [
            Detector::joint_ml(&h, &scheme),
            Detector::zf_ml(&h, &scheme, SpatialRule::Energy).unwrap(),
            Detector::dnn(FrontEnd::blind(cfg), net.clone()).unwrap(),
            Detector::dnn(FrontEnd::zero_forcing(pseudo_inverse(&h).unwrap()), net).unwrap(),
        ];
        let cb = scheme.enumerate_codebook();
        let ys = Matrix::from_rows(&cb.entries().iter().map(|(_, x)| h.apply(x)).collect::<Vec<_>>()).unwrap();
        for d in &detectors {
            let batch = d.detect_batch(&ys).unwrap();
            for (r, f) in ys.row_iter().zip(&batch) {
                assert_eq!(d.detect(r).unwrap(), *f, "{}", d.kind());
            }
        }
        assert_eq!(detectors[2].kind(), DetectorKind::BlindDnn);
        assert_eq!(detectors[3].kind(), DetectorKind::ZfDnn);
    }
}
