//! Synthetic C-RAN problem instances.
//!
//! `A = P^H` (L × KN) holds the pilots, `X = ΛH^H` (KN × GM) the masked
//! channels and `B = AX + N` (L × GM) the observations at the BBU.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{ChunkLayout, ComplexMatrix};
use crate::rng::RngStream;
use crate::textio::{self, KeyValues};

pub const DEFAULT_AREA: f64 = 1.0;
pub const DEFAULT_PATH_LOSS_EXPONENT: f64 = 3.5;
/// Distances below this fraction of the area side are clamped.
pub const MIN_DISTANCE_FRACTION: f64 = 0.01;

/// Geometric attenuation: RRHs and users dropped uniformly on a square of
/// side `area`, amplitude gain `d^(-exponent/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathLossModel {
    pub area: f64,
    pub exponent: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            area: DEFAULT_AREA,
            exponent: DEFAULT_PATH_LOSS_EXPONENT,
        }
    }
}

/// Node placement for the path-loss mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub rrh_positions: Vec<[f64; 2]>,
    pub user_positions: Vec<[f64; 2]>,
    /// Side of the square.
    pub area: f64,
    pub exponent: f64,
}

impl Geometry {
    pub fn uniform(layout: &ChunkLayout, model: &PathLossModel, rng: &mut RngStream) -> Self {
        let mut drop = |count: usize| -> Vec<[f64; 2]> {
            (0..count)
                .map(|_| [model.area * rng.uniform(), model.area * rng.uniform()])
                .collect()
        };
        let rrh_positions = drop(layout.rrhs);
        let user_positions = drop(layout.users);
        Self {
            rrh_positions,
            user_positions,
            area: model.area,
            exponent: model.exponent,
        }
    }

    fn distance(&self, user: usize, rrh: usize) -> f64 {
        let [ux, uy] = self.user_positions[user];
        let [rx, ry] = self.rrh_positions[rrh];
        (ux - rx).hypot(uy - ry)
    }

    /// Amplitude gain `(d / area)^(−η/2)` for 0-based `(user, rrh)`, with
    /// `d` clamped below at [`MIN_DISTANCE_FRACTION`]` · area`. Measuring
    /// distance in units of the area side only changes a global constant,
    /// which the SNR normalisation removes.
    pub fn amplitude(&self, user: usize, rrh: usize) -> f64 {
        let d = self.distance(user, rrh).max(MIN_DISTANCE_FRACTION * self.area);
        (d / self.area).powf(-self.exponent / 2.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub layout: ChunkLayout,
    pub active_count: usize,
    /// `f64::INFINITY` means noiseless.
    pub snr_db: f64,
    pub path_loss: Option<PathLossModel>,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        if self.active_count == 0 || self.active_count > self.layout.users {
            return Err(Error::Domain(format!(
                "active count {} outside 1..={}",
                self.active_count, self.layout.users
            )));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::Domain("snr_db must be finite (or +inf for noiseless)".into()));
        }
        if let Some(pl) = &self.path_loss {
            if !(pl.area > 0.0 && pl.area.is_finite() && pl.exponent.is_finite() && pl.exponent >= 0.0) {
                return Err(Error::Domain(
                    "path loss needs positive area and nonnegative exponent".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.insert("K", self.layout.users);
        kv.insert("G", self.layout.rrhs);
        kv.insert("M", self.layout.rrh_antennas);
        kv.insert("N", self.layout.user_antennas);
        kv.insert("L", self.layout.pilot_len);
        kv.insert("active_count", self.active_count);
        kv.insert("snr_db", self.snr_db);
        kv.insert("seed", self.seed);
        kv.insert("path_loss", self.path_loss.is_some());
        if let Some(pl) = &self.path_loss {
            kv.insert("area", pl.area);
            kv.insert("exponent", pl.exponent);
        }
        kv
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let layout = layout_from_key_values(kv)?;
        let path_loss = if kv.parse_opt::<bool>("path_loss")?.unwrap_or(false) {
            Some(PathLossModel {
                area: kv.parse_opt("area")?.unwrap_or(DEFAULT_AREA),
                exponent: kv.parse_opt("exponent")?.unwrap_or(DEFAULT_PATH_LOSS_EXPONENT),
            })
        } else {
            None
        };
        let spec = Self {
            layout,
            active_count: kv.parse_req("active_count")?,
            snr_db: kv.parse_req("snr_db")?,
            path_loss,
            seed: kv.parse_opt("seed")?.unwrap_or(0),
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub fn layout_from_key_values(kv: &KeyValues) -> Result<ChunkLayout> {
    ChunkLayout::new(
        kv.parse_req("K")?,
        kv.parse_req("G")?,
        kv.parse_req("M")?,
        kv.parse_req("N")?,
        kv.parse_req("L")?,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub layout: ChunkLayout,
    /// `P^H`, L × KN.
    pub a: ComplexMatrix,
    /// `R^H`, L × GM.
    pub b: ComplexMatrix,
    /// `ΛH^H`, KN × GM.
    pub truth_x: Option<ComplexMatrix>,
    /// 1-based user indices.
    pub active_set: Option<BTreeSet<usize>>,
    pub noise_sigma: f64,
}

/// i.i.d. unit-variance complex Gaussian pilots, shape L × KN.
pub fn generate_pilots(layout: &ChunkLayout, rng: &mut RngStream) -> ComplexMatrix {
    let (rows, cols) = layout.a_shape();
    ComplexMatrix::from_fn(rows, cols, |_, _| rng.complex_gaussian(1.0))
}

/// Uniform random subset of `{1..K}` with exactly `active_count` members.
pub fn sample_activity(layout: &ChunkLayout, active_count: usize, rng: &mut RngStream) -> Result<BTreeSet<usize>> {
    if active_count == 0 || active_count > layout.users {
        return Err(Error::Domain(format!(
            "active count {active_count} outside 1..={}",
            layout.users
        )));
    }
    Ok(rand::seq::index::sample(rng.inner(), layout.users, active_count)
        .into_iter()
        .map(|i| i + 1)
        .collect())
}

/// Rayleigh channels `ΛH^H`: element chunk `(i, j)` of an active user holds
/// i.i.d. unit complex Gaussians scaled by the path-loss gain, inactive row
/// chunks are exactly zero.
pub fn generate_channels(
    layout: &ChunkLayout,
    active_set: &BTreeSet<usize>,
    geometry: Option<&Geometry>,
    rng: &mut RngStream,
) -> Result<ComplexMatrix> {
    let mut x = ComplexMatrix::zeros(layout.x_rows(), layout.x_cols());
    for &user in active_set {
        if user == 0 || user > layout.users {
            return Err(Error::Index {
                what: "user",
                index: user,
                max: layout.users,
            });
        }
        let u0 = user - 1;
        for r in layout.user_rows(u0) {
            for rrh in 0..layout.rrhs {
                let gain = geometry.map_or(1.0, |g| g.amplitude(u0, rrh));
                for c in layout.rrh_cols(rrh) {
                    x.set(r, c, rng.complex_gaussian(1.0) * gain);
                }
            }
        }
    }
    Ok(x)
}

/// `B = A·X + N` with per-entry noise variance `‖AX‖_F² / (L·G·M·10^(snr/10))`.
/// `snr_db = +inf` gives a noiseless observation.
pub fn synthesize_observation(
    a: &ComplexMatrix,
    truth_x: &ComplexMatrix,
    snr_db: f64,
    rng: &mut RngStream,
) -> Result<(ComplexMatrix, f64)> {
    let signal = a.matmul(truth_x)?;
    if snr_db == f64::INFINITY {
        return Ok((signal, 0.0));
    }
    if !snr_db.is_finite() {
        return Err(Error::Domain("snr_db must be finite or +inf".into()));
    }
    let power = signal.frobenius_norm_sqr();
    if power == 0.0 {
        return Err(Error::DegenerateSignal);
    }
    let entries = (signal.rows() * signal.cols()) as f64;
    let variance = power / (entries * 10f64.powf(snr_db / 10.0));
    let mut b = signal;
    for s in b.as_mut_slice() {
        *s += rng.complex_gaussian(variance);
    }
    Ok((b, variance.sqrt()))
}

/// Draw order on a stream: activity, geometry, pilots, channels, noise.
pub fn generate_instance_on(spec: &ScenarioSpec, stream_id: u64) -> Result<ProblemInstance> {
    spec.validate()?;
    let layout = spec.layout;
    let mut rng = RngStream::new(spec.seed, stream_id);
    let active = sample_activity(&layout, spec.active_count, &mut rng)?;
    let geometry = spec.path_loss.map(|pl| Geometry::uniform(&layout, &pl, &mut rng));
    let a = generate_pilots(&layout, &mut rng);
    let truth = generate_channels(&layout, &active, geometry.as_ref(), &mut rng)?;
    let (b, noise_sigma) = synthesize_observation(&a, &truth, spec.snr_db, &mut rng)?;
    Ok(ProblemInstance {
        layout,
        a,
        b,
        truth_x: Some(truth),
        active_set: Some(active),
        noise_sigma,
    })
}

pub fn generate_instance(spec: &ScenarioSpec) -> Result<ProblemInstance> {
    generate_instance_on(spec, 0)
}

pub const A_FILE: &str = "a.mat";
pub const B_FILE: &str = "b.mat";
pub const TRUTH_FILE: &str = "truth_x.mat";
pub const META_FILE: &str = "instance.meta";

impl ProblemInstance {
    /// Writes `a.mat`, `b.mat`, `truth_x.mat` (if known) and `instance.meta`.
    pub fn write_dir(&self, dir: &Path, spec: Option<&ScenarioSpec>) -> Result<()> {
        fs::create_dir_all(dir)?;
        textio::write_matrix_file(&dir.join(A_FILE), &self.a)?;
        textio::write_matrix_file(&dir.join(B_FILE), &self.b)?;
        if let Some(x) = &self.truth_x {
            textio::write_matrix_file(&dir.join(TRUTH_FILE), x)?;
        }
        let mut kv = match spec {
            Some(s) => s.to_key_values(),
            None => {
                let mut kv = KeyValues::new();
                kv.insert("K", self.layout.users);
                kv.insert("G", self.layout.rrhs);
                kv.insert("M", self.layout.rrh_antennas);
                kv.insert("N", self.layout.user_antennas);
                kv.insert("L", self.layout.pilot_len);
                kv
            }
        };
        if let Some(active) = &self.active_set {
            let list: Vec<String> = active.iter().map(usize::to_string).collect();
            kv.insert("active_set", list.join(","));
        }
        kv.insert("noise_sigma", self.noise_sigma);
        fs::write(dir.join(META_FILE), kv.render())?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let kv = textio::parse_key_values(&fs::read_to_string(dir.join(META_FILE))?)?;
        let layout = layout_from_key_values(&kv)?;
        let a = textio::read_matrix_file(&dir.join(A_FILE))?;
        let b = textio::read_matrix_file(&dir.join(B_FILE))?;
        layout.check_a(&a, "instance a.mat")?;
        layout.check_b(&b, "instance b.mat")?;
        let truth_path = dir.join(TRUTH_FILE);
        let truth_x = if truth_path.exists() {
            let x = textio::read_matrix_file(&truth_path)?;
            layout.check_x(&x, "instance truth_x.mat")?;
            Some(x)
        } else {
            None
        };
        let active_set = match kv.get("active_set") {
            None => None,
            Some(list) => Some(parse_index_set(list, layout.users)?),
        };
        Ok(Self {
            layout,
            a,
            b,
            truth_x,
            active_set,
            noise_sigma: kv.parse_opt("noise_sigma")?.unwrap_or(0.0),
        })
    }
}

/// Parses a comma-separated list of 1-based indices bounded by `max`.
pub fn parse_index_set(list: &str, max: usize) -> Result<BTreeSet<usize>> {
    textio::split_list(list)
        .map(|tok| {
            let i: usize = tok
                .parse()
                .map_err(|_| Error::Domain(format!("invalid index `{tok}`")))?;
            if i == 0 || i > max {
                return Err(Error::Index {
                    what: "user",
                    index: i,
                    max,
                });
            }
            Ok(i)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk_layout(l: usize) -> ChunkLayout {
        ChunkLayout::new(100, 10, 3, 2, l).unwrap()
    }

    #[test]
    fn pilots_are_deterministic_and_shaped() {
        let layout = desk_layout(128);
        let a1 = generate_pilots(&layout, &mut RngStream::new(5, 0));
        let a2 = generate_pilots(&layout, &mut RngStream::new(5, 0));
        assert_eq!(a1, a2);
        assert_eq!(a1.shape(), (128, 200));
        let tiny = ChunkLayout::new(1, 1, 1, 1, 1).unwrap();
        assert_eq!(generate_pilots(&tiny, &mut RngStream::new(5, 0)).shape(), (1, 1));
    }

    #[test]
    fn pilot_power_concentrates() {
        // 25600 entries: the std of the mean |a|^2 is 1/160, so ±0.05 is an 8-sigma band.
        let layout = desk_layout(128);
        for seed in 0..5 {
            let a = generate_pilots(&layout, &mut RngStream::new(seed, 0));
            let mean = a.frobenius_norm_sqr() / (128.0 * 200.0);
            assert!((0.95..=1.05).contains(&mean), "mean power {mean}");
        }
    }

    #[test]
    fn activity_sampling() {
        let layout = desk_layout(10);
        let mut rng = RngStream::new(1, 0);
        assert_eq!(sample_activity(&layout, 100, &mut rng).unwrap(), (1..=100).collect());
        let one = ChunkLayout::new(1, 1, 1, 1, 1).unwrap();
        assert_eq!(sample_activity(&one, 1, &mut rng).unwrap(), BTreeSet::from([1]));
        let s = sample_activity(&layout, 10, &mut rng).unwrap();
        assert_eq!(s.len(), 10);
        assert!(s.iter().all(|&i| (1..=100).contains(&i)));
        assert!(sample_activity(&layout, 0, &mut rng).is_err());
        assert!(sample_activity(&layout, 101, &mut rng).is_err());
    }

    #[test]
    fn activity_is_roughly_uniform() {
        let layout = ChunkLayout::new(10, 1, 1, 1, 1).unwrap();
        let mut counts = [0usize; 10];
        let mut rng = RngStream::new(9, 0);
        for _ in 0..5000 {
            for i in sample_activity(&layout, 3, &mut rng).unwrap() {
                counts[i - 1] += 1;
            }
        }
        // expected 1500 each, binomial std ~32
        assert!(counts.iter().all(|&c| (1350..=1650).contains(&c)), "{counts:?}");
    }

    #[test]
    fn channels_zero_outside_active_set() {
        let layout = desk_layout(10);
        let mut rng = RngStream::new(2, 0);
        assert!(generate_channels(&layout, &BTreeSet::new(), None, &mut rng)
            .unwrap()
            .is_zero());
        let active = BTreeSet::from([3, 50, 100]);
        let x = generate_channels(&layout, &active, None, &mut rng).unwrap();
        for user in 1..=100 {
            let chunk = crate::matrix::chunk_extract(&x, &layout, user, None).unwrap();
            assert_eq!(chunk.is_zero(), !active.contains(&user));
        }
    }

    #[test]
    fn channel_entries_have_unit_variance() {
        let layout = desk_layout(10);
        let active: BTreeSet<usize> = (1..=100).collect();
        let x = generate_channels(&layout, &active, None, &mut RngStream::new(3, 0)).unwrap();
        // 6000 entries per draw, 2 draws = 12000 >= 1e4.
        let y = generate_channels(&layout, &active, None, &mut RngStream::new(4, 0)).unwrap();
        let var = (x.frobenius_norm_sqr() + y.frobenius_norm_sqr()) / 12000.0;
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn nearby_rrh_dominates_under_strong_path_loss() {
        let layout = ChunkLayout::new(1, 4, 2, 2, 4).unwrap();
        let geometry = Geometry {
            rrh_positions: vec![[0.1, 0.1], [0.9, 0.9], [0.9, 0.1], [0.1, 0.9]],
            user_positions: vec![[0.12, 0.11]],
            area: 1.0,
            exponent: 6.0,
        };
        let x = generate_channels(
            &layout,
            &BTreeSet::from([1]),
            Some(&geometry),
            &mut RngStream::new(1, 0),
        )
        .unwrap();
        let norms: Vec<f64> = (1..=4)
            .map(|j| {
                crate::matrix::chunk_extract(&x, &layout, 1, Some(j))
                    .unwrap()
                    .frobenius_norm()
            })
            .collect();
        assert!(norms[1..].iter().all(|&n| n * 100.0 < norms[0]), "{norms:?}");
        let d = 0.02f64.hypot(0.01);
        assert!((geometry.amplitude(0, 0) / d.powf(-3.0) - 1.0).abs() < 1e-12);
        // coincident nodes are clamped, and only distance ratios matter
        let on_top = Geometry {
            user_positions: vec![[0.1, 0.1]],
            ..geometry.clone()
        };
        assert_eq!(on_top.amplitude(0, 0), MIN_DISTANCE_FRACTION.powf(-3.0));
        let scaled = Geometry {
            rrh_positions: geometry
                .rrh_positions
                .iter()
                .map(|p| [5.0 * p[0], 5.0 * p[1]])
                .collect(),
            user_positions: vec![[0.6, 0.55]],
            area: 5.0,
            exponent: 6.0,
        };
        assert!((scaled.amplitude(0, 2) / geometry.amplitude(0, 2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_observation_is_exact() {
        let layout = ChunkLayout::new(4, 2, 2, 1, 3).unwrap();
        let mut rng = RngStream::new(1, 0);
        let a = generate_pilots(&layout, &mut rng);
        let x = generate_channels(&layout, &BTreeSet::from([2]), None, &mut rng).unwrap();
        let (b, sigma) = synthesize_observation(&a, &x, f64::INFINITY, &mut rng).unwrap();
        assert_eq!(b, a.matmul(&x).unwrap());
        assert_eq!(sigma, 0.0);
    }

    #[test]
    fn zero_signal_is_degenerate() {
        let a = ComplexMatrix::identity(2);
        let x = ComplexMatrix::zeros(2, 3);
        assert!(matches!(
            synthesize_observation(&a, &x, 10.0, &mut RngStream::new(0, 0)),
            Err(Error::DegenerateSignal)
        ));
    }

    #[test]
    fn zero_db_noise_matches_signal_power() {
        // L·G·M = 40·30 = 1200 entries; chi-square relative std ~ 1/sqrt(1200) ≈ 0.029.
        let spec = ScenarioSpec {
            layout: desk_layout(40),
            active_count: 10,
            snr_db: 0.0,
            path_loss: None,
            seed: 17,
        };
        for stream in 0..5 {
            let inst = generate_instance_on(&spec, stream).unwrap();
            let s = inst.a.matmul(inst.truth_x.as_ref().unwrap()).unwrap();
            let ratio = inst.b.sub(&s).unwrap().frobenius_norm_sqr() / s.frobenius_norm_sqr();
            assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
        }
    }

    #[test]
    fn ten_db_snr_is_realised() {
        let spec = ScenarioSpec {
            layout: desk_layout(50),
            active_count: 10,
            snr_db: 10.0,
            path_loss: None,
            seed: 99,
        };
        for stream in 0..5 {
            let inst = generate_instance_on(&spec, stream).unwrap();
            let s = inst.a.matmul(inst.truth_x.as_ref().unwrap()).unwrap();
            let noise = inst.b.sub(&s).unwrap().frobenius_norm_sqr();
            let snr = 10.0 * (s.frobenius_norm_sqr() / noise).log10();
            assert!((snr - 10.0).abs() < 0.5, "snr {snr}");
        }
    }

    #[test]
    fn instance_is_deterministic_and_round_trips() {
        let spec = ScenarioSpec {
            layout: ChunkLayout::new(6, 2, 2, 1, 4).unwrap(),
            active_count: 2,
            snr_db: 10.0,
            path_loss: Some(PathLossModel::default()),
            seed: 4,
        };
        let i1 = generate_instance(&spec).unwrap();
        let i2 = generate_instance(&spec).unwrap();
        assert_eq!(i1, i2);
        let dir = tempfile::tempdir().unwrap();
        i1.write_dir(dir.path(), Some(&spec)).unwrap();
        let back = ProblemInstance::read_dir(dir.path()).unwrap();
        assert_eq!(back, i1);
        let kv = textio::parse_key_values(&fs::read_to_string(dir.path().join(META_FILE)).unwrap()).unwrap();
        assert_eq!(ScenarioSpec::from_key_values(&kv).unwrap(), spec);
    }

    #[test]
    fn spec_validation() {
        let mut spec = ScenarioSpec {
            layout: ChunkLayout::new(5, 1, 1, 1, 2).unwrap(),
            active_count: 6,
            snr_db: 10.0,
            path_loss: None,
            seed: 0,
        };
        assert!(spec.validate().is_err());
        spec.active_count = 5;
        spec.snr_db = f64::NAN;
        assert!(spec.validate().is_err());
    }
}
