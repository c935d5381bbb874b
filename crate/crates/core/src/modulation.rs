//! Unipolar non-zero PAM, spatial activation patterns and the bit codecs for
//! generalized optical spatial modulation (GOSM) and spatial multiplexing
//! (GOSMP).
//!
//! Bit layout of a frame, most significant bit first:
//!
//! ```text
//! | pattern index (⌊log₂ C(Nt,Na)⌋ bits) | symbol 0 | symbol 1 | ... |
//! ```
//!
//! GOSM carries one `log₂ M`-bit symbol replicated on every active LED;
//! GOSMP carries one symbol per active LED, in ascending LED order. Both the
//! pattern index and the symbol values are natural binary, and symbol value
//! `v` selects level `I_{v+1}`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Ordered set of `M` strictly positive intensity levels with mean `I_av`.
#[derive(Debug, Clone, PartialEq)]
pub struct PamConstellation<T> {
    order: usize,
    avg_power: f64,
    levels: Vec<T>,
}

impl<T: Scalar> PamConstellation<T> {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn avg_power(&self) -> f64 {
        self.avg_power
    }

    pub fn levels(&self) -> &[T] {
        &self.levels
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.order.trailing_zeros()
    }

    /// Index of the nearest level; ties go to the lower level.
    pub fn nearest(&self, value: T) -> usize {
        let mut best = 0;
        let mut best_d = (value - self.levels[0]).abs();
        for (i, &l) in self.levels.iter().enumerate().skip(1) {
            let d = (value - l).abs();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Exact level lookup used by the demapper.
    fn index_of(&self, value: T) -> Option<usize> {
        self.levels.iter().position(|&l| l == value)
    }
}

/// `I_m = 2·I_av·m / (M + 1)` for `m = 1..M`.
pub fn pam_levels<T: Scalar>(order: usize, avg_power: f64) -> Result<PamConstellation<T>> {
    if order < 2 || !order.is_power_of_two() {
        return Err(invalid("pam_order", format!("{order} is not a power of two >= 2")));
    }
    if !(avg_power > 0.0 && avg_power.is_finite()) {
        return Err(invalid("avg_power", "must be positive"));
    }
    let step = 2.0 * avg_power / (order as f64 + 1.0);
    let levels = (1..=order).map(|m| T::of(step * m as f64)).collect();
    Ok(PamConstellation {
        order,
        avg_power,
        levels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Gosm,
    Gosmp,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gosm => "gosm",
            Self::Gosmp => "gosmp",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn floor_log2(x: u128) -> u32 {
    127 - x.leading_zeros()
}

/// Bits per channel use: `log₂M + ⌊log₂C(Nt,Na)⌋` for GOSM and
/// `Na·log₂M + ⌊log₂C(Nt,Na)⌋` for GOSMP.
pub fn spectral_efficiency(kind: SchemeKind, order: usize, nt: usize, na: usize) -> Result<u32> {
    if na == 0 || na > nt {
        return Err(invalid("active_leds", format!("need 1 <= Na <= Nt, got Na = {na}, Nt = {nt}")));
    }
    if order < 2 || !order.is_power_of_two() {
        return Err(invalid("pam_order", format!("{order} is not a power of two >= 2")));
    }
    let symbol = order.trailing_zeros();
    let spatial = floor_log2(binomial(nt, na));
    Ok(match kind {
        SchemeKind::Gosm => symbol + spatial,
        SchemeKind::Gosmp => na as u32 * symbol + spatial,
    })
}

/// Legal LED activation patterns, 0-based and sorted within each pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpatialPatternSet {
    nt: usize,
    na: usize,
    patterns: Vec<Vec<usize>>,
}

impl SpatialPatternSet {
    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn na(&self) -> usize {
        self.na
    }

    pub fn patterns(&self) -> &[Vec<usize>] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn index_bits(&self) -> u32 {
        self.patterns.len().trailing_zeros()
    }

    pub fn position(&self, active: &[usize]) -> Option<usize> {
        self.patterns.iter().position(|p| p == active)
    }
}

/// Lexicographic `Na`-subsets of the `Nt` LEDs truncated to the largest power
/// of two, except `(4, 2)`, which uses the four adjacent pairs
/// {1,2}, {1,3}, {2,4}, {3,4} of the 2×2 array.
pub fn legal_patterns(nt: usize, na: usize) -> Result<SpatialPatternSet> {
    if na == 0 || na > nt {
        return Err(invalid("active_leds", format!("need 1 <= Na <= Nt, got Na = {na}, Nt = {nt}")));
    }
    let count = binomial(nt, na);
    if count > 1 << 20 {
        return Err(invalid("leds", "too many activation patterns to enumerate"));
    }
    let keep = 1usize << floor_log2(count);
    let patterns = if (nt, na) == (4, 2) {
        vec![vec![0, 1], vec![0, 2], vec![1, 3], vec![2, 3]]
    } else {
        let mut out = Vec::with_capacity(keep);
        let mut combo: Vec<usize> = (0..na).collect();
        loop {
            out.push(combo.clone());
            if out.len() == keep || !next_combination(&mut combo, nt) {
                break;
            }
        }
        out
    };
    Ok(SpatialPatternSet { nt, na, patterns })
}

fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    for i in (0..k).rev() {
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// A frame of `len` bits packed MSB-first into `value`. Frame order is the
/// numeric order of `value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitFrame {
    value: u64,
    len: u32,
}

impl BitFrame {
    pub fn new(value: u64, len: u32) -> Result<Self> {
        if len > 64 || (len < 64 && value >> len != 0) {
            return Err(invalid("frame", format!("{value} does not fit in {len} bits")));
        }
        Ok(Self { value, len })
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.len() > 64 {
            return Err(invalid("frame", "at most 64 bits"));
        }
        let mut value = 0u64;
        for &b in bits {
            if b > 1 {
                return Err(invalid("frame", format!("bit value {b} is not 0 or 1")));
            }
            value = (value << 1) | b as u64;
        }
        Ok(Self {
            value,
            len: bits.len() as u32,
        })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit `q`, counting from the first (most significant) bit.
    pub fn bit(&self, q: u32) -> u8 {
        ((self.value >> (self.len - 1 - q)) & 1) as u8
    }

    pub fn bits(&self) -> Vec<u8> {
        (0..self.len).map(|q| self.bit(q)).collect()
    }

    pub fn hamming(&self, other: &Self) -> u32 {
        (self.value ^ other.value).count_ones()
    }

    /// Extracts `width` bits starting `offset` bits from the front.
    fn field(&self, offset: u32, width: u32) -> u64 {
        if width == 0 {
            return 0;
        }
        (self.value >> (self.len - offset - width)) & ((1u64 << width) - 1)
    }
}

impl fmt::Display for BitFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// A complete GOSM or GOSMP configuration.
#[derive(Debug, Clone)]
pub struct GomimoScheme<T> {
    kind: SchemeKind,
    constellation: PamConstellation<T>,
    patterns: SpatialPatternSet,
    bits: u32,
}

impl<T: Scalar> GomimoScheme<T> {
    pub fn new(kind: SchemeKind, order: usize, avg_power: f64, nt: usize, na: usize) -> Result<Self> {
        let constellation = pam_levels(order, avg_power)?;
        let patterns = legal_patterns(nt, na)?;
        let bits = spectral_efficiency(kind, order, nt, na)?;
        if bits > 24 {
            return Err(invalid("scheme", format!("{bits} bits per frame is too many to enumerate")));
        }
        debug_assert_eq!(bits, patterns.index_bits() + symbol_count(kind, na) * constellation.bits_per_symbol());
        Ok(Self {
            kind,
            constellation,
            patterns,
            bits,
        })
    }

    /// 4-PAM, four LEDs, two active.
    pub fn standard(kind: SchemeKind) -> Self {
        Self::new(kind, 4, 1.0, 4, 2).expect("default scheme parameters are valid")
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn constellation(&self) -> &PamConstellation<T> {
        &self.constellation
    }

    pub fn patterns(&self) -> &SpatialPatternSet {
        &self.patterns
    }

    pub fn nt(&self) -> usize {
        self.patterns.nt
    }

    pub fn na(&self) -> usize {
        self.patterns.na
    }

    /// Spectral efficiency `S` in bits per frame.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn frame_count(&self) -> usize {
        1 << self.bits
    }

    /// Number of constellation symbols carried per frame.
    pub fn symbols(&self) -> u32 {
        symbol_count(self.kind, self.na())
    }

    /// Signal vector for a pattern index and one level index per symbol.
    pub fn signal(&self, pattern: usize, level_indices: &[usize]) -> Vec<T> {
        let mut x = vec![T::zero(); self.nt()];
        let levels = self.constellation.levels();
        for (k, &led) in self.patterns.patterns[pattern].iter().enumerate() {
            let li = match self.kind {
                SchemeKind::Gosm => level_indices[0],
                SchemeKind::Gosmp => level_indices[k],
            };
            x[led] = levels[li];
        }
        x
    }

    /// Frame for a pattern index and one level index per symbol.
    pub fn frame_of(&self, pattern: usize, level_indices: &[usize]) -> BitFrame {
        let sym_bits = self.constellation.bits_per_symbol();
        let mut value = pattern as u64;
        for &li in level_indices.iter().take(self.symbols() as usize) {
            value = (value << sym_bits) | li as u64;
        }
        BitFrame {
            value,
            len: self.bits,
        }
    }

    pub fn map_bits(&self, frame: BitFrame) -> Result<Vec<T>> {
        if frame.len != self.bits {
            return Err(Error::DimensionMismatch {
                context: "frame length",
                expected: self.bits as usize,
                actual: frame.len as usize,
            });
        }
        let idx_bits = self.patterns.index_bits();
        let sym_bits = self.constellation.bits_per_symbol();
        let pattern = frame.field(0, idx_bits) as usize;
        let levels: Vec<usize> = (0..self.symbols())
            .map(|s| frame.field(idx_bits + s * sym_bits, sym_bits) as usize)
            .collect();
        Ok(self.signal(pattern, &levels))
    }

    pub fn demap_vector(&self, x: &[T]) -> Result<BitFrame> {
        if x.len() != self.nt() {
            return Err(Error::DimensionMismatch {
                context: "transmit vector",
                expected: self.nt(),
                actual: x.len(),
            });
        }
        let active: Vec<usize> = (0..x.len()).filter(|&i| x[i] != T::zero()).collect();
        let pattern = self
            .patterns
            .position(&active)
            .ok_or_else(|| Error::IllegalTxVector(format!("active LEDs {active:?} are not a legal pattern")))?;
        let mut levels = Vec::with_capacity(active.len());
        for &led in &active {
            let li = self
                .constellation
                .index_of(x[led])
                .ok_or_else(|| Error::IllegalTxVector(format!("{} is not a constellation level", x[led])))?;
            levels.push(li);
        }
        if self.kind == SchemeKind::Gosm && levels.iter().any(|&l| l != levels[0]) {
            return Err(Error::IllegalTxVector("GOSM requires equal levels on every active LED".into()));
        }
        Ok(self.frame_of(pattern, &levels))
    }

    /// All `2^S` (frame, signal) pairs in frame order.
    pub fn enumerate_codebook(&self) -> Codebook<T> {
        let entries = (0..self.frame_count() as u64)
            .map(|v| {
                let frame = BitFrame {
                    value: v,
                    len: self.bits,
                };
                let x = self.map_bits(frame).expect("frame length matches");
                (frame, x)
            })
            .collect();
        Codebook { entries }
    }
}

fn symbol_count(kind: SchemeKind, na: usize) -> u32 {
    match kind {
        SchemeKind::Gosm => 1,
        SchemeKind::Gosmp => na as u32,
    }
}

/// The transmit alphabet. Entry `i` carries the frame whose value is `i`.
#[derive(Debug, Clone)]
pub struct Codebook<T> {
    entries: Vec<(BitFrame, Vec<T>)>,
}

impl<T: Scalar> Codebook<T> {
    pub fn entries(&self) -> &[(BitFrame, Vec<T>)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn frame(&self, i: usize) -> BitFrame {
        self.entries[i].0
    }

    pub fn signal(&self, i: usize) -> &[T] {
        &self.entries[i].1
    }

    /// Builds a codebook from explicit pairs (for toy alphabets in tests and
    /// tools). Frames must be distinct.
    pub fn from_pairs(entries: Vec<(BitFrame, Vec<T>)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(invalid("codebook", "must not be empty"));
        }
        let nt = entries[0].1.len();
        for (i, (f, x)) in entries.iter().enumerate() {
            if x.len() != nt {
                return Err(Error::DimensionMismatch {
                    context: "codebook entry",
                    expected: nt,
                    actual: x.len(),
                });
            }
            if entries[..i].iter().any(|(g, _)| g == f) {
                return Err(invalid("codebook", format!("duplicate frame {f}")));
            }
        }
        Ok(Self { entries })
    }
}
