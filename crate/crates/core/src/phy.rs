//! BPSK over per-symbol Rayleigh fading with AWGN.
//!
//! Conventions: unit symbol energy, `E|h|² = 1`, SNR is Es/N0 so the complex
//! noise variance is `1 / snr_linear`, split evenly between I and Q. Bit 0
//! maps to +1 and bit 1 to -1.

use rayon::prelude::*;

use crate::numerics::{ComplexSample, Matrix, RngStream};
use crate::{Error, Result};

/// Number of symbols simulated per independent BER shard.
pub const BER_SHARD_SYMBOLS: usize = 1 << 16;

/// Minimum Monte-Carlo length accepted by [`measure_ber`].
pub const MIN_BER_SYMBOLS: usize = 10_000;

/// Fraction of a [`Dataset`] used for training; the remainder is the test split.
pub const TRAIN_FRACTION: f64 = 0.7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bit {
    Zero,
    One,
}

impl Bit {
    #[inline]
    pub fn symbol(self) -> f64 {
        match self {
            Bit::Zero => 1.0,
            Bit::One => -1.0,
        }
    }

    /// Hard decision on a real statistic; zero goes to [`Bit::Zero`].
    #[inline]
    pub fn from_statistic(v: f64) -> Bit {
        if v >= 0.0 {
            Bit::Zero
        } else {
            Bit::One
        }
    }

    #[inline]
    pub fn random(rng: &mut RngStream) -> Bit {
        if rng.next_u64() >> 63 == 0 {
            Bit::Zero
        } else {
            Bit::One
        }
    }
}

/// An average SNR, stored in both dB and linear form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnrPoint {
    snr_db: f64,
    snr_linear: f64,
}

impl SnrPoint {
    pub fn from_db(snr_db: f64) -> Self {
        Self {
            snr_db,
            snr_linear: 10f64.powf(snr_db / 10.0),
        }
    }

    pub fn from_linear(snr_linear: f64) -> Result<Self> {
        if !(snr_linear > 0.0) {
            return Err(Error::Domain(format!(
                "linear SNR must be positive, got {snr_linear}"
            )));
        }
        Ok(Self {
            snr_db: 10.0 * snr_linear.log10(),
            snr_linear,
        })
    }

    /// The infinite-SNR limit: zero noise variance.
    pub fn noiseless() -> Self {
        Self {
            snr_db: f64::INFINITY,
            snr_linear: f64::INFINITY,
        }
    }

    pub fn db(&self) -> f64 {
        self.snr_db
    }

    pub fn linear(&self) -> f64 {
        self.snr_linear
    }

    pub fn noise_variance(&self) -> f64 {
        1.0 / self.snr_linear
    }
}

/// One received sample together with its channel and transmitted symbol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FadedObservation {
    pub y: ComplexSample,
    pub h: ComplexSample,
    pub x: f64,
}

impl FadedObservation {
    /// Detector input row `(Re y, Im y, Re h, Im h)`.
    #[inline]
    pub fn features(&self) -> [f64; 4] {
        [self.y.re, self.y.im, self.h.re, self.h.im]
    }

    pub fn label(&self) -> Bit {
        Bit::from_statistic(self.x)
    }
}

pub fn bpsk_modulate(bits: &[Bit]) -> Vec<f64> {
    bits.iter().map(|b| b.symbol()).collect()
}

/// Passes symbols through independent CN(0,1) fading plus CN(0, 1/snr) noise.
///
/// Each symbol consumes exactly two Box-Muller pairs (channel, then noise)
/// regardless of SNR, so fading draws line up across SNR points.
pub fn channel_apply(symbols: &[f64], snr: SnrPoint, rng: &mut RngStream) -> Vec<FadedObservation> {
    let nv = snr.noise_variance();
    symbols
        .iter()
        .map(|&x| {
            let h = rng.complex_gaussian(1.0);
            let (a, b) = rng.normal_pair();
            let s = (0.5 * nv).sqrt();
            let n = ComplexSample::new(a * s, b * s);
            FadedObservation { y: h * x + n, h, x }
        })
        .collect()
}

/// Zero-forcing: sign of `Re(y / h)`, evaluated as `Re(y · conj h)`.
#[inline]
pub fn zf_detect(obs: &FadedObservation) -> Bit {
    Bit::from_statistic(obs.y.re * obs.h.re + obs.y.im * obs.h.im)
}

/// Closed-form BER of coherent BPSK over Rayleigh fading at average SNR `γ̄`:
/// `½(1 − √(γ̄/(1+γ̄)))`.
pub fn analytic_rayleigh_bpsk_ber(snr: SnrPoint) -> f64 {
    let g = snr.linear();
    if g.is_infinite() {
        return 0.0;
    }
    0.5 * (1.0 - (g / (1.0 + g)).sqrt())
}

/// Feature/label pairs for learned detectors with a 70/30 train/test split.
#[derive(Clone, Debug)]
pub struct Dataset {
    features: Matrix,
    labels: Matrix,
    train_len: usize,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Matrix) -> Result<Self> {
        if features.cols() != 4 || labels.cols() != 1 || features.rows() != labels.rows() {
            return Err(Error::Shape(format!(
                "dataset needs Nx4 features and Nx1 labels, got {}x{} and {}x{}",
                features.rows(),
                features.cols(),
                labels.rows(),
                labels.cols()
            )));
        }
        if labels.as_slice().iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::Domain("labels must be +1 or -1".into()));
        }
        let train_len = (features.rows() as f64 * TRAIN_FRACTION).floor() as usize;
        Ok(Self {
            features,
            labels,
            train_len,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &Matrix {
        &self.labels
    }

    pub fn train_len(&self) -> usize {
        self.train_len
    }

    pub fn test_len(&self) -> usize {
        self.len() - self.train_len
    }

    /// `(features, labels)` of the leading 70% of rows.
    pub fn train(&self) -> (Matrix, Matrix) {
        (
            self.features.row_range(0, self.train_len),
            self.labels.row_range(0, self.train_len),
        )
    }

    /// `(features, labels)` of the trailing 30% of rows.
    pub fn test(&self) -> (Matrix, Matrix) {
        let n = self.len();
        (
            self.features.row_range(self.train_len, n),
            self.labels.row_range(self.train_len, n),
        )
    }
}

pub fn generate_detection_dataset(n: usize, snr: SnrPoint, rng: &mut RngStream) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Domain("dataset size must be positive".into()));
    }
    let bits: Vec<Bit> = (0..n).map(|_| Bit::random(rng)).collect();
    let obs = channel_apply(&bpsk_modulate(&bits), snr, rng);
    let features = obs.iter().flat_map(|o| o.features()).collect();
    let labels = obs.iter().map(|o| o.x).collect();
    Dataset::new(
        Matrix::from_vec(n, 4, features)?,
        Matrix::from_vec(n, 1, labels)?,
    )
}

/// A symbol detector with full channel knowledge.
pub trait Detector: Sync {
    fn name(&self) -> &str;

    fn detect(&self, obs: &FadedObservation) -> Bit;

    fn detect_batch(&self, obs: &[FadedObservation]) -> Vec<Bit> {
        obs.iter().map(|o| self.detect(o)).collect()
    }
}

/// The zero-forcing baseline as a [`Detector`].
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroForcing;

impl Detector for ZeroForcing {
    fn name(&self) -> &str {
        "zf"
    }

    fn detect(&self, obs: &FadedObservation) -> Bit {
        zf_detect(obs)
    }
}

/// Wraps a closure as a named [`Detector`].
pub struct FnDetector<F> {
    name: String,
    f: F,
}

impl<F: Fn(&FadedObservation) -> Bit + Sync> FnDetector<F> {
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self {
            name: name.into(),
            f,
        }
    }
}

impl<F: Fn(&FadedObservation) -> Bit + Sync> Detector for FnDetector<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn detect(&self, obs: &FadedObservation) -> Bit {
        (self.f)(obs)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BerPoint {
    pub method: String,
    pub snr_db: f64,
    pub errors: u64,
    pub symbols: u64,
    pub ber: f64,
}

impl BerPoint {
    /// One binomial standard deviation of an estimate of `p` from `symbols` draws.
    pub fn binomial_sigma(p: f64, symbols: u64) -> f64 {
        (p * (1.0 - p) / symbols as f64).sqrt()
    }
}

/// Monte-Carlo BER of `detector` on freshly generated symbols.
///
/// The run is cut into [`BER_SHARD_SYMBOLS`]-sized shards, each with its own
/// stream keyed by one word drawn from `rng` and the shard index, so the
/// result is independent of how shards are scheduled.
pub fn measure_ber<D: Detector + ?Sized>(
    detector: &D,
    snr: SnrPoint,
    n_symbols: usize,
    rng: &mut RngStream,
) -> Result<BerPoint> {
    if n_symbols < MIN_BER_SYMBOLS {
        return Err(Error::Domain(format!(
            "BER measurement needs at least {MIN_BER_SYMBOLS} symbols, got {n_symbols}"
        )));
    }
    let base = rng.next_u64();
    let shards = n_symbols.div_ceil(BER_SHARD_SYMBOLS);
    let errors: u64 = (0..shards)
        .into_par_iter()
        .map(|s| {
            let len = BER_SHARD_SYMBOLS.min(n_symbols - s * BER_SHARD_SYMBOLS);
            let mut shard_rng = RngStream::new(base, s as u64);
            let bits: Vec<Bit> = (0..len).map(|_| Bit::random(&mut shard_rng)).collect();
            let obs = channel_apply(&bpsk_modulate(&bits), snr, &mut shard_rng);
            detector
                .detect_batch(&obs)
                .iter()
                .zip(&bits)
                .filter(|(d, b)| d != b)
                .count() as u64
        })
        .sum();
    Ok(BerPoint {
        method: detector.name().to_string(),
        snr_db: snr.db(),
        errors,
        symbols: n_symbols as u64,
        ber: errors as f64 / n_symbols as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modulation_mapping() {
        use Bit::*;
        assert_eq!(
            bpsk_modulate(&[Zero, One, One, Zero]),
            vec![1.0, -1.0, -1.0, 1.0]
        );
        assert!(bpsk_modulate(&[]).is_empty());
    }

    #[test]
    fn noiseless_unit_channel_round_trips() {
        use Bit::*;
        let bits = [Zero, One, One, Zero, One];
        let decided: Vec<Bit> = bpsk_modulate(&bits)
            .iter()
            .map(|&x| {
                zf_detect(&FadedObservation {
                    y: ComplexSample::new(x, 0.0),
                    h: ComplexSample::new(1.0, 0.0),
                    x,
                })
            })
            .collect();
        assert_eq!(decided, bits);
    }

    #[test]
    fn snr_round_trip() {
        for db in [-10.0, 0.0, 3.0, 10.0, 17.5, 30.0] {
            let p = SnrPoint::from_db(db);
            let back = SnrPoint::from_linear(p.linear()).unwrap();
            assert!((back.db() - db).abs() <= 1e-12 * db.abs().max(1.0));
            assert!((back.linear() / p.linear() - 1.0).abs() <= 1e-12);
        }
        assert!(SnrPoint::from_linear(0.0).is_err());
        assert_eq!(SnrPoint::noiseless().noise_variance(), 0.0);
    }

    #[test]
    fn zero_noise_gives_y_equal_hx() {
        let mut rng = RngStream::new(3, 0);
        let obs = channel_apply(&[1.0, -1.0, 1.0], SnrPoint::noiseless(), &mut rng);
        for o in obs {
            assert_eq!(o.y, o.h * o.x);
        }
    }

    #[test]
    fn zf_noiseless_positive_and_tie_break() {
        let h = ComplexSample::new(-0.3, 1.7);
        let o = FadedObservation { y: h, h, x: 1.0 };
        assert_eq!(zf_detect(&o), Bit::Zero);
        // Re(y/h) = 0: y orthogonal to h.
        let o = FadedObservation {
            y: h * ComplexSample::new(0.0, 2.0),
            h,
            x: 1.0,
        };
        assert_eq!(o.y.re * h.re + o.y.im * h.im, 0.0);
        assert_eq!(zf_detect(&o), Bit::Zero);
        // h exactly zero never aborts.
        let o = FadedObservation {
            y: ComplexSample::new(-1.0, 0.0),
            h: ComplexSample::new(0.0, 0.0),
            x: -1.0,
        };
        assert_eq!(zf_detect(&o), Bit::Zero);
    }

    #[test]
    fn analytic_values() {
        let p10 = analytic_rayleigh_bpsk_ber(SnrPoint::from_db(10.0));
        assert!((p10 - 2.3268705e-2).abs() < 1e-9, "{p10}");
        let p20 = analytic_rayleigh_bpsk_ber(SnrPoint::from_db(20.0));
        // 0.5 * (1 - sqrt(100/101)) evaluated independently.
        assert!((p20 - 2.4814049e-3).abs() < 1e-9, "{p20}");
        let p0 = analytic_rayleigh_bpsk_ber(SnrPoint::from_linear(1e-12).unwrap());
        assert!((p0 - 0.5).abs() < 1e-5);
        assert_eq!(analytic_rayleigh_bpsk_ber(SnrPoint::noiseless()), 0.0);
    }

    #[test]
    fn dataset_split_and_labels() {
        let mut rng = RngStream::new(1, 1);
        let ds = generate_detection_dataset(1001, SnrPoint::from_db(5.0), &mut rng).unwrap();
        assert_eq!(ds.train_len(), 700);
        assert_eq!(ds.test_len(), 301);
        assert!(ds
            .labels()
            .as_slice()
            .iter()
            .all(|&v| v == 1.0 || v == -1.0));
        assert!(generate_detection_dataset(0, SnrPoint::from_db(5.0), &mut rng).is_err());
    }

    #[test]
    fn dataset_labels_are_the_modulated_symbols() {
        let snr = SnrPoint::from_db(7.0);
        let mut a = RngStream::new(8, 2);
        let ds = generate_detection_dataset(500, snr, &mut a).unwrap();
        let mut b = RngStream::new(8, 2);
        let bits: Vec<Bit> = (0..500).map(|_| Bit::random(&mut b)).collect();
        assert_eq!(ds.labels().as_slice(), bpsk_modulate(&bits).as_slice());
        let obs = channel_apply(&bpsk_modulate(&bits), snr, &mut b);
        for (i, o) in obs.iter().enumerate() {
            assert_eq!(ds.features().row(i), &o.features());
        }
    }

    #[test]
    fn noiseless_dataset_is_zf_consistent() {
        let mut rng = RngStream::new(2, 2);
        let ds = generate_detection_dataset(2000, SnrPoint::noiseless(), &mut rng).unwrap();
        for i in 0..ds.len() {
            let r = ds.features().row(i);
            let stat = r[0] * r[2] + r[1] * r[3];
            assert_eq!(stat.signum(), ds.labels()[(i, 0)]);
        }
    }

    #[test]
    fn ber_requires_enough_symbols() {
        let mut rng = RngStream::new(1, 0);
        assert!(measure_ber(&ZeroForcing, SnrPoint::from_db(0.0), 9_999, &mut rng).is_err());
    }

    #[test]
    fn perfect_and_constant_detectors() {
        let snr = SnrPoint::from_db(0.0);
        let perfect = FnDetector::new("oracle", |o: &FadedObservation| o.label());
        let mut rng = RngStream::new(4, 0);
        let p = measure_ber(&perfect, snr, 100_000, &mut rng).unwrap();
        assert_eq!(p.errors, 0);
        assert_eq!(p.method, "oracle");

        let constant = FnDetector::new("zero", |_: &FadedObservation| Bit::Zero);
        let n = 200_000;
        let c = measure_ber(&constant, snr, n, &mut rng).unwrap();
        let sigma = BerPoint::binomial_sigma(0.5, n as u64);
        assert!((c.ber - 0.5).abs() <= 3.0 * sigma, "{}", c.ber);
    }

    #[test]
    fn ber_is_a_pure_function_of_the_stream() {
        let snr = SnrPoint::from_db(5.0);
        let a = measure_ber(&ZeroForcing, snr, 150_000, &mut RngStream::new(9, 4)).unwrap();
        let b = measure_ber(&ZeroForcing, snr, 150_000, &mut RngStream::new(9, 4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.ber, a.errors as f64 / a.symbols as f64);
    }
}
