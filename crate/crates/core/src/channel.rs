//! Line-of-sight Lambertian channel between a ceiling LED array and a
//! photodiode array, plus the additive Gaussian noise model.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub type Point3 = [f64; 3];

const DOWN: Point3 = [0.0, 0.0, -1.0];
const UP: Point3 = [0.0, 0.0, 1.0];

/// Where the centre of the photodiode array sits on the receiving plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverLocation {
    Center,
    Corner,
    Point(Point3),
}

impl ReceiverLocation {
    pub fn label(&self) -> String {
        match self {
            Self::Center => "center".into(),
            Self::Corner => "corner".into(),
            Self::Point([x, y, z]) => format!("({x} {y} {z})"),
        }
    }
}

/// Room layout parameters for the square-array scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayLayout {
    pub room_dims: Point3,
    pub led_spacing: f64,
    pub pd_spacing: f64,
    pub receiver_height: f64,
}

impl ArrayLayout {
    /// 5 m × 5 m × 3 m room, 2.5 m LED spacing, 10 cm PD spacing, desk at 0.85 m.
    pub fn table1() -> Self {
        Self {
            room_dims: [5.0, 5.0, 3.0],
            led_spacing: 2.5,
            pd_spacing: 0.1,
            receiver_height: 0.85,
        }
    }

    /// 2×2 LED array centred on the ceiling and 2×2 PD array centred on the
    /// receiver location. Both arrays are enumerated (−,−), (−,+), (+,−), (+,+)
    /// in (x, y), so PD `i` sits under the same quadrant as LED `i`.
    pub fn geometry(&self, receiver: ReceiverLocation) -> Result<RoomGeometry> {
        let [lx, ly, lz] = self.room_dims;
        let centre = match receiver {
            ReceiverLocation::Center => [lx / 2.0, ly / 2.0, self.receiver_height],
            ReceiverLocation::Corner => [0.0, 0.0, self.receiver_height],
            ReceiverLocation::Point(p) => p,
        };
        let leds = square_array([lx / 2.0, ly / 2.0, lz], self.led_spacing);
        let pds = square_array(centre, self.pd_spacing);
        RoomGeometry::new(self.room_dims, leds, pds)
    }
}

fn square_array(centre: Point3, spacing: f64) -> Vec<Point3> {
    let h = spacing / 2.0;
    let [cx, cy, cz] = centre;
    vec![
        [cx - h, cy - h, cz],
        [cx - h, cy + h, cz],
        [cx + h, cy - h, cz],
        [cx + h, cy + h, cz],
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomGeometry {
    pub room_dims: Point3,
    pub led_positions: Vec<Point3>,
    pub pd_positions: Vec<Point3>,
    pub led_normal: Point3,
    pub pd_normal: Point3,
}

impl RoomGeometry {
    /// LEDs facing straight down, photodiodes facing straight up.
    pub fn new(room_dims: Point3, leds: Vec<Point3>, pds: Vec<Point3>) -> Result<Self> {
        let g = Self {
            room_dims,
            led_positions: leds,
            pd_positions: pds,
            led_normal: DOWN,
            pd_normal: UP,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn nt(&self) -> usize {
        self.led_positions.len()
    }

    pub fn nr(&self) -> usize {
        self.pd_positions.len()
    }

    /// Photodiodes may lie outside the room box (a corner receiver puts part
    /// of the array at negative coordinates); LEDs may not.
    pub fn validate(&self) -> Result<()> {
        if self.led_positions.is_empty() {
            return Err(invalid("led_positions", "at least one LED is required"));
        }
        if self.pd_positions.is_empty() {
            return Err(invalid("pd_positions", "at least one PD is required"));
        }
        let all = self.led_positions.iter().chain(&self.pd_positions);
        if all.flatten().any(|c| !c.is_finite()) || self.room_dims.iter().any(|c| !c.is_finite()) {
            return Err(invalid("positions", "coordinates must be finite"));
        }
        for n in [self.led_normal, self.pd_normal] {
            if (norm(n) - 1.0).abs() > 1e-9 {
                return Err(invalid("normal", "normals must be unit vectors"));
            }
        }
        let [lx, ly, _] = self.room_dims;
        for p in &self.led_positions {
            if p[0] < 0.0 || p[0] > lx || p[1] < 0.0 || p[1] > ly {
                return Err(invalid("led_positions", format!("LED at {p:?} is outside the room")));
            }
        }
        let lowest_led = self.led_positions.iter().map(|p| p[2]).fold(f64::INFINITY, f64::min);
        let highest_pd = self.pd_positions.iter().map(|p| p[2]).fold(f64::NEG_INFINITY, f64::max);
        if lowest_led <= highest_pd {
            return Err(invalid("positions", "every LED must be above every PD"));
        }
        Ok(())
    }
}

/// LED and photodiode optics entering the DC gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticsParams {
    pub semi_angle_deg: f64,
    pub responsivity: f64,
    pub pd_area: f64,
    pub filter_gain: f64,
    pub lens_refractive_index: f64,
    pub lens_half_fov_deg: f64,
}

impl OpticsParams {
    /// 60° semi-angle, 1 A/W, 1 cm², filter gain 0.9, lens n = 1.5 with 72° half FOV.
    pub fn table1() -> Self {
        Self {
            semi_angle_deg: 60.0,
            responsivity: 1.0,
            pd_area: 1e-4,
            filter_gain: 0.9,
            lens_refractive_index: 1.5,
            lens_half_fov_deg: 72.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_open = |x: f64, lo: f64, hi: f64| x > lo && x < hi;
        if !in_open(self.semi_angle_deg, 0.0, 90.0) {
            return Err(invalid("semi_angle_deg", "must lie in (0, 90)"));
        }
        if !(self.responsivity > 0.0 && self.responsivity.is_finite()) {
            return Err(invalid("responsivity", "must be positive"));
        }
        if !(self.pd_area > 0.0 && self.pd_area.is_finite()) {
            return Err(invalid("pd_area", "must be positive"));
        }
        if !(self.filter_gain > 0.0 && self.filter_gain <= 1.0) {
            return Err(invalid("filter_gain", "must lie in (0, 1]"));
        }
        if !(self.lens_refractive_index >= 1.0 && self.lens_refractive_index.is_finite()) {
            return Err(invalid("lens_refractive_index", "must be >= 1"));
        }
        if !(self.lens_half_fov_deg > 0.0 && self.lens_half_fov_deg <= 90.0) {
            return Err(invalid("lens_half_fov_deg", "must lie in (0, 90]"));
        }
        Ok(())
    }

    pub fn lambertian_order(&self) -> Result<f64> {
        lambertian_order(self.semi_angle_deg)
    }

    pub fn lens_gain(&self, incidence_angle_deg: f64) -> Result<f64> {
        lens_gain(
            incidence_angle_deg,
            self.lens_refractive_index,
            self.lens_half_fov_deg,
        )
    }
}

/// `l = −ln 2 / ln cos Ψ`.
pub fn lambertian_order(semi_angle_deg: f64) -> Result<f64> {
    if !(semi_angle_deg > 0.0 && semi_angle_deg < 90.0) {
        return Err(invalid("semi_angle_deg", "must lie in (0, 90)"));
    }
    Ok(-std::f64::consts::LN_2 / semi_angle_deg.to_radians().cos().ln())
}

/// Concentrator gain `n² / sin² Φ` inside the field of view (boundary
/// included), zero outside.
pub fn lens_gain(incidence_angle_deg: f64, refractive_index: f64, half_fov_deg: f64) -> Result<f64> {
    if !(0.0..180.0).contains(&incidence_angle_deg) {
        return Err(invalid("incidence_angle_deg", "must lie in [0, 180)"));
    }
    if refractive_index.is_nan() || refractive_index < 1.0 {
        return Err(invalid("lens_refractive_index", "must be >= 1"));
    }
    if !(half_fov_deg > 0.0 && half_fov_deg <= 90.0) {
        return Err(invalid("lens_half_fov_deg", "must lie in (0, 90]"));
    }
    if incidence_angle_deg > half_fov_deg {
        return Ok(0.0);
    }
    let s = half_fov_deg.to_radians().sin();
    Ok(refractive_index * refractive_index / (s * s))
}

/// DC gain between LED `led` and photodiode `pd`:
/// `(l+1)ρA/(2πd²) · cosˡφ · T_s · g(θ) · cos θ`.
pub fn dc_gain(led: usize, pd: usize, geometry: &RoomGeometry, optics: &OpticsParams) -> Result<f64> {
    let nt = geometry.nt();
    let nr = geometry.nr();
    if led >= nt {
        return Err(invalid("led_index", format!("{led} out of range for {nt} LEDs")));
    }
    if pd >= nr {
        return Err(invalid("pd_index", format!("{pd} out of range for {nr} PDs")));
    }
    optics.validate()?;
    let l = optics.lambertian_order()?;
    let q = geometry.led_positions[led];
    let p = geometry.pd_positions[pd];
    let to_pd = sub(p, q);
    let d = norm(to_pd);
    if d == 0.0 {
        return Err(Error::CoincidentPositions { led, pd });
    }
    let cos_emit = dot3(geometry.led_normal, to_pd) / d;
    let cos_inc = -dot3(geometry.pd_normal, to_pd) / d;
    if cos_emit <= 0.0 || cos_inc <= 0.0 {
        return Ok(0.0);
    }
    let incidence_deg = cos_inc.clamp(-1.0, 1.0).acos().to_degrees();
    let g = optics.lens_gain(incidence_deg)?;
    if g == 0.0 {
        return Ok(0.0);
    }
    let lead = (l + 1.0) * optics.responsivity * optics.pd_area / (2.0 * std::f64::consts::PI * d * d);
    Ok(lead * cos_emit.powf(l) * optics.filter_gain * g * cos_inc)
}

/// Nonnegative `Nr × Nt` matrix of DC gains; entry `(r, t)` couples LED `t`
/// into photodiode `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMatrix<T> {
    gains: Matrix<T>,
}

impl<T: Scalar> ChannelMatrix<T> {
    pub fn from_matrix(gains: Matrix<T>) -> Result<Self> {
        if gains.rows() == 0 || gains.cols() == 0 {
            return Err(invalid("channel", "matrix must be non-empty"));
        }
        if gains.as_slice().iter().any(|&g| g < T::zero() || !g.is_finite()) {
            return Err(invalid("channel", "gains must be finite and nonnegative"));
        }
        Ok(Self { gains })
    }

    pub fn nr(&self) -> usize {
        self.gains.rows()
    }

    pub fn nt(&self) -> usize {
        self.gains.cols()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.gains
    }

    /// Noise-free received vector `H·x`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        self.gains.matvec(x).expect("transmit vector length matches Nt")
    }

    pub fn cast<U: Scalar>(&self) -> ChannelMatrix<U> {
        ChannelMatrix {
            gains: self.gains.cast(),
        }
    }
}

pub fn build_channel_matrix<T: Scalar>(
    geometry: &RoomGeometry,
    optics: &OpticsParams,
) -> Result<ChannelMatrix<T>> {
    geometry.validate()?;
    optics.validate()?;
    let mut gains = Matrix::zeros(geometry.nr(), geometry.nt());
    for r in 0..geometry.nr() {
        for t in 0..geometry.nt() {
            gains[(r, t)] = T::of(dc_gain(t, r, geometry, optics)?);
        }
    }
    ChannelMatrix::from_matrix(gains)
}

/// Per-branch Gaussian noise level derived from a transmitted SNR
/// `10·log₁₀(I_av² / σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    sigma: f64,
    pub snr_tx_db: f64,
    pub avg_power: f64,
}

impl NoiseModel {
    pub fn from_sigma(sigma: f64, avg_power: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", "noise standard deviation must be positive and finite"));
        }
        if !(avg_power > 0.0 && avg_power.is_finite()) {
            return Err(invalid("avg_power", "must be positive"));
        }
        Ok(Self {
            sigma,
            snr_tx_db: sigma_to_snr(sigma, avg_power),
            avg_power,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Adds one noise draw per entry of `y`.
    pub fn corrupt<T: Scalar, R: Rng + ?Sized>(&self, rng: &mut R, y: &mut [T]) {
        for v in y {
            let n: f64 = rng.sample(StandardNormal);
            *v += T::of(n * self.sigma);
        }
    }
}

pub fn snr_to_sigma(snr_tx_db: f64, avg_power: f64) -> Result<NoiseModel> {
    if !(avg_power > 0.0 && avg_power.is_finite()) {
        return Err(invalid("avg_power", "must be positive"));
    }
    if !snr_tx_db.is_finite() {
        return Err(invalid("snr_tx_db", "must be finite"));
    }
    let sigma = avg_power * 10f64.powf(-snr_tx_db / 20.0);
    let mut model = NoiseModel::from_sigma(sigma, avg_power)?;
    model.snr_tx_db = snr_tx_db;
    Ok(model)
}

pub fn sigma_to_snr(sigma: f64, avg_power: f64) -> f64 {
    20.0 * (avg_power / sigma).log10()
}

/// `nr` i.i.d. zero-mean Gaussian draws with the model's standard deviation.
/// Draws are taken in `f64` and rounded, so `f32` and `f64` runs consume the
/// generator identically.
pub fn awgn_sample<T: Scalar, R: Rng + ?Sized>(rng: &mut R, noise: &NoiseModel, nr: usize) -> Vec<T> {
    let mut v = vec![T::zero(); nr];
    noise.corrupt(rng, &mut v);
    v
}

fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Point3) -> f64 {
    dot3(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(led: Point3, pd: Point3) -> RoomGeometry {
        RoomGeometry::new([5.0, 5.0, 3.0], vec![led], vec![pd]).unwrap()
    }

    #[test]
    fn lambertian_order_values() {
        assert_relative_eq!(lambertian_order(60.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(lambertian_order(45.0).unwrap(), 2.0, epsilon = 1e-12);
        // -ln 2 / ln(cos 30°) = 0.693147.../0.143841...
        assert_relative_eq!(lambertian_order(30.0).unwrap(), 4.818841679306418, epsilon = 1e-12);
        for bad in [0.0, 90.0, -5.0, 120.0, f64::NAN] {
            assert!(lambertian_order(bad).is_err());
        }
    }

    #[test]
    fn lens_gain_fov() {
        let inside = lens_gain(0.0, 1.5, 72.0).unwrap();
        assert_relative_eq!(inside, 2.487_538_820_250_189, epsilon = 1e-12);
        assert_eq!(lens_gain(72.0, 1.5, 72.0).unwrap(), inside);
        assert_eq!(lens_gain(80.0, 1.5, 72.0).unwrap(), 0.0);
        assert!(lens_gain(180.0, 1.5, 72.0).is_err());
        assert!(lens_gain(10.0, 0.9, 72.0).is_err());
        assert!(lens_gain(10.0, 1.5, 0.0).is_err());
    }

    #[test]
    fn gain_straight_below() {
        let o = OpticsParams::table1();
        let d = 2.15;
        let g = single([2.5, 2.5, 3.0], [2.5, 2.5, 3.0 - d]);
        let h = dc_gain(0, 0, &g, &o).unwrap();
        let l = 1.0;
        let expected = (l + 1.0) * o.responsivity * o.pd_area * o.filter_gain * o.lens_gain(0.0).unwrap()
            / (2.0 * std::f64::consts::PI * d * d);
        assert_relative_eq!(h, expected, max_relative = 1e-14);
    }

    #[test]
    fn gain_centre_pd_from_corner_led() {
        // closed form evaluated independently at 30 digits
        let g = single([1.25, 1.25, 3.0], [2.5, 2.5, 0.85]);
        let h = dc_gain(0, 0, &g, &OpticsParams::table1()).unwrap();
        assert_relative_eq!(h, 5.488_027_182_331_393e-6, max_relative = 1e-12);
    }

    #[test]
    fn gain_beyond_fov_is_zero() {
        // incidence of 89° from a PD far off to the side
        let dz = 0.05;
        let dx = dz * 89f64.to_radians().tan();
        let g = single([0.1, 2.5, 3.0], [0.1 + dx, 2.5, 3.0 - dz]);
        assert_eq!(dc_gain(0, 0, &g, &OpticsParams::table1()).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_indices_and_geometry() {
        let o = OpticsParams::table1();
        let g = single([2.5, 2.5, 3.0], [2.5, 2.5, 0.85]);
        assert!(dc_gain(1, 0, &g, &o).is_err());
        assert!(dc_gain(0, 1, &g, &o).is_err());
        assert!(RoomGeometry::new([5.0, 5.0, 3.0], vec![[1.0, 1.0, 0.5]], vec![[1.0, 1.0, 0.85]]).is_err());
        assert!(RoomGeometry::new([5.0, 5.0, 3.0], vec![[6.0, 1.0, 3.0]], vec![[1.0, 1.0, 0.85]]).is_err());
        assert!(RoomGeometry::new([5.0, 5.0, 3.0], vec![], vec![[1.0, 1.0, 0.85]]).is_err());
        let mut coincident = g.clone();
        coincident.pd_positions[0] = coincident.led_positions[0];
        assert!(matches!(
            dc_gain(0, 0, &coincident, &o),
            Err(Error::CoincidentPositions { .. })
        ));
    }

    #[test]
    fn one_by_one_matrix() {
        let o = OpticsParams::table1();
        let g = single([2.5, 2.5, 3.0], [2.0, 2.0, 0.85]);
        let h = build_channel_matrix::<f64>(&g, &o).unwrap();
        assert_eq!(h.matrix().shape(), (1, 1));
        assert_eq!(h.matrix()[(0, 0)], dc_gain(0, 0, &g, &o).unwrap());
    }

    #[test]
    fn corner_receiver_prefers_nearest_led() {
        let g = ArrayLayout::table1().geometry(ReceiverLocation::Corner).unwrap();
        let h = build_channel_matrix::<f64>(&g, &OpticsParams::table1()).unwrap();
        for r in 0..4 {
            let row = h.matrix().row(r);
            let best = (0..4).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert_eq!(best, 0, "row {r}: {row:?}");
        }
    }

    #[test]
    fn snr_sigma_conversion() {
        assert_eq!(snr_to_sigma(0.0, 1.0).unwrap().sigma(), 1.0);
        assert_relative_eq!(snr_to_sigma(20.0, 1.0).unwrap().sigma(), 0.1, max_relative = 1e-15);
        assert_relative_eq!(snr_to_sigma(140.0, 1.0).unwrap().sigma(), 1e-7, max_relative = 1e-15);
        assert!(snr_to_sigma(10.0, 0.0).is_err());
        assert!(NoiseModel::from_sigma(0.0, 1.0).is_err());
    }

    #[test]
    fn awgn_is_seeded() {
        let n = NoiseModel::from_sigma(1.0, 1.0).unwrap();
        let a: Vec<f64> = awgn_sample(&mut ChaCha8Rng::seed_from_u64(9), &n, 4);
        let b: Vec<f64> = awgn_sample(&mut ChaCha8Rng::seed_from_u64(9), &n, 4);
        assert_eq!(a, b);
        let tiny = NoiseModel::from_sigma(f64::MIN_POSITIVE, 1.0).unwrap();
        let z: Vec<f64> = awgn_sample(&mut ChaCha8Rng::seed_from_u64(9), &tiny, 4);
        assert!(z.iter().all(|v| v.abs() < 1e-300));
    }

    #[test]
    fn awgn_moments() {
        let n = NoiseModel::from_sigma(1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let samples: Vec<f64> = awgn_sample(&mut rng, &n, 1_000_000);
        let count = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / count;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0);
        assert!(mean.abs() < 4.0 / count.sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "variance {var}");
    }
}
