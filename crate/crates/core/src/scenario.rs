//! Synthetic multi-cell network instances.
//!
//! A [`Scenario`] holds everything that is fixed for one Monte-Carlo trial:
//! BS and device positions, the large-scale fading table, the signature
//! sequences and the noise variance. Activity ([`GroundTruth`]) and the per-BS
//! sample covariances ([`ObservationSet`]) are drawn separately so that the
//! same network can be observed with different antenna counts.
//!
//! All randomness comes from [`substream`], one ChaCha stream per purpose,
//! so changing `M` never moves a device and changing `N` never changes the
//! noise seed.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{ComplexMatrix, ComplexVector};
use crate::rng::{substream, Stream};

/// Minimum BS-device distance used by the path-loss model, in meters.
pub const MIN_DISTANCE_M: f64 = 5.0;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario configuration: {0}")]
    InvalidConfig(String),
    #[error("no cell layout for {cells} cells")]
    UnsupportedLayout { cells: usize },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario container schema mismatch: {0}")]
    SchemaVersionMismatch(String),
}

/// Network and radio parameters of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Number of cells `B` (one BS per cell).
    pub cells: usize,
    /// Devices per cell `N`.
    pub devices_per_cell: usize,
    /// Active devices per cell `K`.
    pub active_per_cell: usize,
    /// Signature length `L`.
    pub signature_len: usize,
    /// Antennas per BS `M`.
    pub antennas: usize,
    pub cell_radius_m: f64,
    /// Path loss is `pathloss_a_db + pathloss_b * log10(d_km)`.
    pub pathloss_a_db: f64,
    pub pathloss_b: f64,
    pub tx_power_dbm: f64,
    pub noise_psd_dbm_hz: f64,
    pub bandwidth_hz: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            cells: 7,
            devices_per_cell: 200,
            active_per_cell: 20,
            signature_len: 20,
            antennas: 512,
            cell_radius_m: 250.0,
            pathloss_a_db: 128.1,
            pathloss_b: 37.6,
            tx_power_dbm: 23.0,
            noise_psd_dbm_hz: -169.0,
            bandwidth_hz: 10e6,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |msg: String| Err(ScenarioError::InvalidConfig(msg));
        if self.cells == 0 {
            return Err(ScenarioError::UnsupportedLayout { cells: 0 });
        }
        if self.devices_per_cell == 0 {
            return bad("devices_per_cell must be at least 1".into());
        }
        if self.active_per_cell > self.devices_per_cell {
            return bad(format!(
                "active_per_cell ({}) exceeds devices_per_cell ({})",
                self.active_per_cell, self.devices_per_cell
            ));
        }
        if self.signature_len == 0 || self.antennas == 0 {
            return bad("signature_len and antennas must be at least 1".into());
        }
        if !(self.cell_radius_m > 0.0) || !(self.bandwidth_hz > 0.0) {
            return bad("cell_radius_m and bandwidth_hz must be positive".into());
        }
        Ok(())
    }

    /// Total number of devices `B * N`.
    pub fn total_devices(&self) -> usize {
        self.cells * self.devices_per_cell
    }
}

/// Path loss in dB at a distance given in meters (clamped to [`MIN_DISTANCE_M`]).
pub fn path_loss_db(config: &ScenarioConfig, distance_m: f64) -> f64 {
    let d_km = distance_m.max(MIN_DISTANCE_M) / 1000.0;
    config.pathloss_a_db + config.pathloss_b * d_km.log10()
}

/// Noise variance normalized by the transmit power, linear scale.
pub fn noise_variance(config: &ScenarioConfig) -> f64 {
    let noise_dbm = config.noise_psd_dbm_hz + 10.0 * config.bandwidth_hz.log10();
    10f64.powf((noise_dbm - config.tx_power_dbm) / 10.0)
}

pub type Point = [f64; 2];

/// Cell layout: BS positions plus the lattice images used for wrap-around.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub bs_positions: Vec<Point>,
    /// Translations (including the zero shift) under which the cluster repeats.
    pub wrap_shifts: Vec<Point>,
}

impl Layout {
    /// Builds the cell layout for `config.cells` cells.
    ///
    /// `B = 1` is a lone cell at the origin, `B = 7` the hexagonal cluster with
    /// six wrap-around images. Any other `B` is laid out on an `r x c` torus
    /// grid with `r` the largest divisor of `B` not above `sqrt(B)`.
    pub fn new(config: &ScenarioConfig) -> Result<Self, ScenarioError> {
        let r = config.cell_radius_m;
        let spacing = 3f64.sqrt() * r;
        match config.cells {
            0 => Err(ScenarioError::UnsupportedLayout { cells: 0 }),
            1 => Ok(Self {
                bs_positions: vec![[0.0, 0.0]],
                wrap_shifts: vec![[0.0, 0.0]],
            }),
            7 => {
                let mut bs = vec![[0.0, 0.0]];
                for k in 0..6 {
                    let ang = PI / 6.0 + k as f64 * PI / 3.0;
                    bs.push([spacing * ang.cos(), spacing * ang.sin()]);
                }
                // The 7-cell cluster tiles the plane under 2*a1 + a2 and its
                // 60-degree rotations, a1 and a2 being neighbor offsets.
                let t = [spacing * 3f64.sqrt(), spacing * 2.0];
                let mut shifts = vec![[0.0, 0.0]];
                for k in 0..6 {
                    let (s, c) = (k as f64 * PI / 3.0).sin_cos();
                    shifts.push([c * t[0] - s * t[1], s * t[0] + c * t[1]]);
                }
                Ok(Self {
                    bs_positions: bs,
                    wrap_shifts: shifts,
                })
            }
            b => {
                let rows = (1..=b).filter(|d| b % d == 0 && d * d <= b).max().unwrap_or(1);
                let cols = b / rows;
                let bs = (0..b)
                    .map(|i| [(i % cols) as f64 * spacing, (i / cols) as f64 * spacing])
                    .collect();
                let (px, py) = (cols as f64 * spacing, rows as f64 * spacing);
                let mut shifts = Vec::with_capacity(9);
                for dy in [0.0, -1.0, 1.0] {
                    for dx in [0.0, -1.0, 1.0] {
                        shifts.push([dx * px, dy * py]);
                    }
                }
                Ok(Self {
                    bs_positions: bs,
                    wrap_shifts: shifts,
                })
            }
        }
    }

    /// Wrap-around distance: minimum over all cluster images of the device.
    pub fn distance(&self, bs: usize, device: Point) -> f64 {
        let p = self.bs_positions[bs];
        self.wrap_shifts
            .iter()
            .map(|s| (device[0] + s[0] - p[0]).hypot(device[1] + s[1] - p[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Whether `p` (relative to the cell center) lies in a flat-top hexagon of
/// circumradius `r`.
pub fn in_hexagon(p: Point, r: f64) -> bool {
    let (x, y) = (p[0].abs(), p[1].abs());
    let h = 3f64.sqrt() / 2.0 * r;
    y <= h && 3f64.sqrt() * x + y <= 3f64.sqrt() * r
}

/// BS positions and per-device positions (flat, cell-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub layout: Layout,
    pub device_positions: Vec<Point>,
}

/// Places `N` devices uniformly in each hexagonal cell.
pub fn build_geometry(config: &ScenarioConfig) -> Result<Geometry, ScenarioError> {
    config.validate()?;
    let layout = Layout::new(config)?;
    let mut rng = substream(config.seed, Stream::Positions);
    let r = config.cell_radius_m;
    let h = 3f64.sqrt() / 2.0 * r;
    let mut device_positions = Vec::with_capacity(config.total_devices());
    for center in &layout.bs_positions {
        for _ in 0..config.devices_per_cell {
            let p = loop {
                let p = [rng.random_range(-r..=r), rng.random_range(-h..=h)];
                if in_hexagon(p, r) {
                    break p;
                }
            };
            device_positions.push([center[0] + p[0], center[1] + p[1]]);
        }
    }
    Ok(Geometry {
        layout,
        device_positions,
    })
}

/// Large-scale fading table `g[bs][cell][n]`, linear scale, flat storage.
#[derive(Debug, Clone, PartialEq)]
pub struct GainTable {
    cells: usize,
    devices_per_cell: usize,
    values: Vec<f64>,
}

impl GainTable {
    pub fn from_values(cells: usize, devices_per_cell: usize, values: Vec<f64>) -> Result<Self, ScenarioError> {
        if values.len() != cells * cells * devices_per_cell {
            return Err(ScenarioError::InvalidConfig(format!(
                "gain table needs {} entries, got {}",
                cells * cells * devices_per_cell,
                values.len()
            )));
        }
        if values.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(ScenarioError::InvalidConfig("gains must be positive and finite".into()));
        }
        Ok(Self {
            cells,
            devices_per_cell,
            values,
        })
    }

    /// Gain from device `n` of cell `cell` to BS `bs`.
    #[inline]
    pub fn get(&self, bs: usize, cell: usize, n: usize) -> f64 {
        self.values[(bs * self.cells + cell) * self.devices_per_cell + n]
    }

    /// Gains of one device (by flat index) towards every BS.
    pub fn towards_all(&self, device: usize) -> impl Iterator<Item = f64> + '_ {
        let (cell, n) = (device / self.devices_per_cell, device % self.devices_per_cell);
        (0..self.cells).map(move |bs| self.get(bs, cell, n))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            cells: self.cells,
            devices_per_cell: self.devices_per_cell,
            values: self.values.iter().map(|g| g * factor).collect(),
        }
    }
}

/// Path-loss gains with wrap-around distances.
pub fn compute_gains(geometry: &Geometry, config: &ScenarioConfig) -> GainTable {
    let (b, n) = (config.cells, config.devices_per_cell);
    let mut values = Vec::with_capacity(b * b * n);
    for bs in 0..b {
        for device in &geometry.device_positions {
            let d = geometry.layout.distance(bs, *device);
            values.push(10f64.powf(-path_loss_db(config, d) / 10.0));
        }
    }
    GainTable {
        cells: b,
        devices_per_cell: n,
        values,
    }
}

/// One network instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub geometry: Geometry,
    pub gains: GainTable,
    /// Signature of every device, flat cell-major, each of length `L`.
    pub signatures: Vec<ComplexVector>,
    pub noise_var: f64,
}

/// Draws a circularly-symmetric complex Gaussian with the given variance.
pub(crate) fn complex_gaussian(rng: &mut ChaCha8Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

impl Scenario {
    /// Generates geometry, gains, signatures and noise level from `config`.
    pub fn generate(config: &ScenarioConfig) -> Result<Self, ScenarioError> {
        let geometry = build_geometry(config)?;
        let gains = compute_gains(&geometry, config);
        let mut rng = substream(config.seed, Stream::Signatures);
        let signatures = (0..config.total_devices())
            .map(|_| {
                ComplexVector::from_vec(
                    (0..config.signature_len)
                        .map(|_| complex_gaussian(&mut rng, 1.0))
                        .collect(),
                )
            })
            .collect();
        Ok(Self {
            config: config.clone(),
            geometry,
            gains,
            signatures,
            noise_var: noise_variance(config),
        })
    }

    pub fn cells(&self) -> usize {
        self.config.cells
    }

    pub fn devices_per_cell(&self) -> usize {
        self.config.devices_per_cell
    }

    pub fn signature_len(&self) -> usize {
        self.config.signature_len
    }

    pub fn total_devices(&self) -> usize {
        self.config.total_devices()
    }

    /// Signature matrix `S_j` (L x N) of cell `cell`.
    pub fn signature_matrix(&self, cell: usize) -> ComplexMatrix {
        let n = self.devices_per_cell();
        ComplexMatrix::from_fn(self.signature_len(), n, |l, k| self.signatures[cell * n + k][l])
    }

    /// Model covariance `Sigma_b(a) = sum_j S_j A_j G_bj S_j^H + noise_var I`.
    pub fn covariance(&self, bs: usize, activity: &[f64]) -> ComplexMatrix {
        let n = self.devices_per_cell();
        let mut sigma = ComplexMatrix::scaled_identity(self.signature_len(), self.noise_var);
        for (device, &a) in activity.iter().enumerate() {
            if a != 0.0 {
                let w = a * self.gains.get(bs, device / n, device % n);
                sigma.add_outer(self.signatures[device].as_slice(), w);
            }
        }
        sigma
    }

    /// Same network with every gain and the noise variance multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            config: self.config.clone(),
            geometry: self.geometry.clone(),
            gains: self.gains.scaled(factor),
            signatures: self.signatures.clone(),
            noise_var: self.noise_var * factor,
        }
    }

    /// Rescaled so that the noise variance is one.
    pub fn normalized(&self) -> Self {
        self.rescaled(1.0 / self.noise_var)
    }
}

/// Binary activity pattern, flat cell-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub active: Vec<bool>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn as_activity(&self) -> Vec<f64> {
        self.active.iter().map(|&x| if x { 1.0 } else { 0.0 }).collect()
    }

    pub fn count_active(&self) -> usize {
        self.active.iter().filter(|&&x| x).count()
    }
}

/// Picks `K` active devices per cell uniformly without replacement.
pub fn draw_truth(config: &ScenarioConfig) -> Result<GroundTruth, ScenarioError> {
    config.validate()?;
    let mut rng = substream(config.seed, Stream::Activity);
    let n = config.devices_per_cell;
    let mut active = vec![false; config.total_devices()];
    for cell in 0..config.cells {
        for k in rand::seq::index::sample(&mut rng, n, config.active_per_cell) {
            active[cell * n + k] = true;
        }
    }
    Ok(GroundTruth { active })
}

/// How the sample covariances were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationMode {
    /// Exact model covariance, the `M -> infinity` limit.
    Ideal,
    /// `Y_b Y_b^H / M` from `antennas` simulated antennas.
    Sampled { antennas: usize },
}

/// Per-BS sample covariance matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub sample_covs: Vec<ComplexMatrix>,
    pub mode: ObservationMode,
}

impl ObservationSet {
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            sample_covs: self.sample_covs.iter().map(|m| m.scale(factor)).collect(),
            mode: self.mode,
        }
    }
}

/// Exact covariances `Sigma_b(truth)` for every BS.
pub fn ideal_observations(scn: &Scenario, truth: &GroundTruth) -> ObservationSet {
    let a = truth.as_activity();
    ObservationSet {
        sample_covs: (0..scn.cells()).map(|b| scn.covariance(b, &a)).collect(),
        mode: ObservationMode::Ideal,
    }
}

/// Simulates received pilots over `antennas` antennas and returns `Y Y^H / M`.
pub fn synthesize_observations(scn: &Scenario, truth: &GroundTruth, antennas: usize) -> ObservationSet {
    let (b_count, n, l) = (scn.cells(), scn.devices_per_cell(), scn.signature_len());
    let mut chan_rng = substream(scn.config.seed, Stream::Channels);
    let mut noise_rng = substream(scn.config.seed, Stream::Noise);
    let actives: Vec<usize> = (0..truth.len()).filter(|&i| truth.active[i]).collect();
    let mut sample_covs = Vec::with_capacity(b_count);
    for bs in 0..b_count {
        // Y is L x M, row-major.
        let mut y: Vec<Complex64> = (0..l * antennas)
            .map(|_| complex_gaussian(&mut noise_rng, scn.noise_var))
            .collect();
        for &device in &actives {
            let amp = scn.gains.get(bs, device / n, device % n).sqrt();
            let s = scn.signatures[device].as_slice();
            for m in 0..antennas {
                let h = complex_gaussian(&mut chan_rng, 1.0) * amp;
                for (li, sl) in s.iter().enumerate() {
                    y[li * antennas + m] += sl * h;
                }
            }
        }
        let mut cov = ComplexMatrix::zeros(l, l);
        let inv_m = 1.0 / antennas as f64;
        for i in 0..l {
            let yi = &y[i * antennas..(i + 1) * antennas];
            for j in i..l {
                let yj = &y[j * antennas..(j + 1) * antennas];
                let v = yi
                    .iter()
                    .zip(yj)
                    .fold(Complex64::new(0.0, 0.0), |acc, (p, q)| acc + p * q.conj())
                    * inv_m;
                cov[(i, j)] = v;
                cov[(j, i)] = v.conj();
            }
            cov[(i, i)].im = 0.0;
        }
        sample_covs.push(cov);
    }
    ObservationSet {
        sample_covs,
        mode: ObservationMode::Sampled { antennas },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small(cells: usize) -> ScenarioConfig {
        ScenarioConfig {
            cells,
            devices_per_cell: 20,
            active_per_cell: 3,
            signature_len: 6,
            antennas: 32,
            seed: 11,
            ..Default::default()
        }
    }

    #[test]
    fn path_loss_at_reference_distances() {
        let cfg = ScenarioConfig::default();
        assert_relative_eq!(path_loss_db(&cfg, 1000.0), 128.1, epsilon = 1e-12);
        let pl = path_loss_db(&cfg, 250.0);
        assert_relative_eq!(pl, 105.463, epsilon = 1e-3);
        assert_relative_eq!(10f64.powf(-pl / 10.0), 2.843e-11, max_relative = 1e-3);
        // clamp
        assert_eq!(path_loss_db(&cfg, 0.0), path_loss_db(&cfg, MIN_DISTANCE_M));
    }

    #[test]
    fn noise_variance_values() {
        let cfg = ScenarioConfig::default();
        assert_relative_eq!(noise_variance(&cfg), 10f64.powf(-12.2), max_relative = 1e-12);
        assert_relative_eq!(noise_variance(&cfg), 6.310e-13, max_relative = 1e-3);
        let unit = ScenarioConfig {
            noise_psd_dbm_hz: -30.0,
            bandwidth_hz: 1.0,
            tx_power_dbm: 0.0,
            ..cfg.clone()
        };
        assert_relative_eq!(noise_variance(&unit), 1e-3, max_relative = 1e-12);
        let equal = ScenarioConfig {
            noise_psd_dbm_hz: -70.0,
            bandwidth_hz: 1e7,
            tx_power_dbm: 0.0,
            ..cfg
        };
        assert_relative_eq!(noise_variance(&equal), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn single_cell_geometry() {
        let g = build_geometry(&small(1)).unwrap();
        assert_eq!(g.layout.bs_positions, vec![[0.0, 0.0]]);
        assert_eq!(g.device_positions.len(), 20);
        assert!(g.device_positions.iter().all(|p| in_hexagon(*p, 250.0)));
    }

    #[test]
    fn seven_cell_devices_within_radius_of_home_bs() {
        let cfg = small(7);
        let g = build_geometry(&cfg).unwrap();
        for (i, p) in g.device_positions.iter().enumerate() {
            let home = i / cfg.devices_per_cell;
            assert!(g.layout.distance(home, *p) <= 250.0 + 1e-9);
        }
        assert_eq!(g, build_geometry(&cfg).unwrap());
    }

    #[test]
    fn wrap_around_prefers_nearby_image() {
        let cfg = small(7);
        let layout = Layout::new(&cfg).unwrap();
        // A device at the outer edge of cell 1, far side from the cluster center.
        let c1 = layout.bs_positions[1];
        let norm = c1[0].hypot(c1[1]);
        let p = [c1[0] + 200.0 * c1[0] / norm, c1[1] + 200.0 * c1[1] / norm];
        // Opposite cell 4 is far directly but adjacent through the wrap.
        let c4 = layout.bs_positions[4];
        let direct = (p[0] - c4[0]).hypot(p[1] - c4[1]);
        let wrapped = layout.distance(4, p);
        assert!(wrapped < direct);
        assert!(wrapped < 2.0 * 3f64.sqrt() * 250.0);
        let g_wrapped = 10f64.powf(-path_loss_db(&cfg, wrapped) / 10.0);
        let g_direct = 10f64.powf(-path_loss_db(&cfg, direct) / 10.0);
        assert!(g_wrapped > g_direct);
    }

    #[test]
    fn seven_cell_wrap_images_have_cluster_period() {
        let layout = Layout::new(&small(7)).unwrap();
        let spacing = 3f64.sqrt() * 250.0;
        for s in &layout.wrap_shifts[1..] {
            assert_relative_eq!(s[0].hypot(s[1]), 7f64.sqrt() * spacing, max_relative = 1e-12);
        }
        // Every BS sees every other BS at exactly one cell spacing through the wrap.
        for a in 0..7 {
            for b in 0..7 {
                if a != b {
                    let d = layout.distance(a, layout.bs_positions[b]);
                    assert_relative_eq!(d, spacing, max_relative = 1e-9);
                }
            }
        }
    }

    #[test]
    fn fallback_layouts() {
        for b in [2, 3, 4, 6, 12] {
            let l = Layout::new(&small(b)).unwrap();
            assert_eq!(l.bs_positions.len(), b);
        }
        assert!(matches!(
            Layout::new(&small(0)),
            Err(ScenarioError::UnsupportedLayout { cells: 0 })
        ));
    }

    #[test]
    fn truth_cardinality() {
        for (k, n) in [(0, 10), (10, 10), (20, 200)] {
            let cfg = ScenarioConfig {
                devices_per_cell: n,
                active_per_cell: k,
                ..small(3)
            };
            let t = draw_truth(&cfg).unwrap();
            for cell in t.active.chunks(n) {
                assert_eq!(cell.iter().filter(|&&x| x).count(), k);
            }
        }
        let bad = ScenarioConfig {
            active_per_cell: 30,
            ..small(1)
        };
        assert!(draw_truth(&bad).is_err());
    }

    #[test]
    fn ideal_observation_of_silent_network_is_noise_floor() {
        let scn = Scenario::generate(&small(3)).unwrap();
        let truth = GroundTruth {
            active: vec![false; scn.total_devices()],
        };
        let obs = ideal_observations(&scn, &truth);
        for cov in &obs.sample_covs {
            assert_eq!(*cov, ComplexMatrix::scaled_identity(6, scn.noise_var));
        }
    }

    #[test]
    fn ideal_observation_matches_block_formula() {
        let scn = Scenario::generate(&small(3)).unwrap();
        let truth = draw_truth(&scn.config).unwrap();
        let obs = ideal_observations(&scn, &truth);
        let n = scn.devices_per_cell();
        for b in 0..3 {
            let mut expected = ComplexMatrix::scaled_identity(6, scn.noise_var);
            for j in 0..3 {
                let s = scn.signature_matrix(j);
                let ag = ComplexMatrix::from_fn(n, n, |p, q| {
                    if p == q && truth.active[j * n + p] {
                        Complex64::new(scn.gains.get(b, j, p), 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                let term = s.matmul(&ag).unwrap().matmul(&s.conj_transpose()).unwrap();
                expected = expected.add(&term).unwrap();
            }
            let err = obs.sample_covs[b].sub(&expected).unwrap().frobenius_norm();
            assert!(err <= 1e-12 * expected.frobenius_norm(), "{err}");
        }
    }

    #[test]
    fn sampled_covariances_are_hermitian_and_deterministic() {
        let scn = Scenario::generate(&small(7)).unwrap();
        let truth = draw_truth(&scn.config).unwrap();
        let obs = synthesize_observations(&scn, &truth, 32);
        for cov in &obs.sample_covs {
            assert!(cov.is_hermitian(1e-12));
        }
        assert_eq!(obs, synthesize_observations(&scn, &truth, 32));
    }

    #[test]
    fn positions_independent_of_antenna_count() {
        let a = Scenario::generate(&small(7)).unwrap();
        let b = Scenario::generate(&ScenarioConfig {
            antennas: 512,
            ..small(7)
        })
        .unwrap();
        assert_eq!(a.geometry, b.geometry);
        assert_eq!(a.signatures, b.signatures);
    }
}
