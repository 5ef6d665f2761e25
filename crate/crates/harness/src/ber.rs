//! BER sweep: detectors against SNR, paired across methods.

use rayon::prelude::*;

use evocomm_core::detectors::{saelm_train, ElmModel};
use evocomm_core::numerics::{derive_seed, RngStream, DEFAULT_RIDGE_LAMBDA};
use evocomm_core::phy::{
    analytic_rayleigh_bpsk_ber, generate_detection_dataset, measure_ber, Detector, SnrPoint,
    ZeroForcing,
};

use crate::config::{BerPlan, DetectorKind};
use crate::error::Result;

const TAG_DATASET: u64 = 0x4441_5441;
const TAG_ELM: u64 = 0x454c_4d00;
const TAG_SAELM: u64 = 0x5341_454c;
const TAG_EVAL: u64 = 0x4556_414c;

/// One CSV row. `symbols` and `errors` are empty for the analytic method.
#[derive(Clone, Debug, PartialEq)]
pub struct BerRow {
    pub method: DetectorKind,
    pub snr_db: f64,
    pub seed: u64,
    pub symbols: Option<u64>,
    pub errors: Option<u64>,
    pub ber: f64,
}

/// A trained learned detector, kept for `--models-dir`.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub method: DetectorKind,
    pub snr_db: f64,
    pub seed: u64,
    pub model: ElmModel,
}

impl TrainedModel {
    /// `<method>-snr<snr_db>-seed<seed>.elmw`
    pub fn file_name(&self) -> String {
        format!(
            "{}-snr{}-seed{}.elmw",
            self.method.as_str(),
            self.snr_db,
            self.seed
        )
    }
}

/// Rows plus the models trained along the way.
#[derive(Clone, Debug, Default)]
pub struct BerSweep {
    pub rows: Vec<BerRow>,
    pub models: Vec<TrainedModel>,
}

/// Stream for `tag` at one SNR; `-0.0` and `0.0` share a stream.
fn stream(seed: u64, tag: u64, snr_db: f64) -> RngStream {
    RngStream::new(seed, derive_seed(tag, (snr_db + 0.0).to_bits()))
}

/// Seed of the `rep`-th repetition.
pub fn repetition_seed(base: u64, rep: usize) -> u64 {
    base.wrapping_add(rep as u64)
}

/// All rows of one `(snr, seed)` grid point.
///
/// Learned detectors train on a dataset shared by both of them. Every
/// simulated detector is scored on the same fresh symbol stream, so
/// per-seed differences between methods are paired.
pub fn ber_point(plan: &BerPlan, snr_db: f64, seed: u64) -> Result<BerSweep> {
    let snr = SnrPoint::from_db(snr_db);
    let dataset = if plan.detectors.iter().any(|d| d.is_learned()) {
        Some(generate_detection_dataset(
            plan.samples,
            snr,
            &mut stream(seed, TAG_DATASET, snr_db),
        )?)
    } else {
        None
    };
    let eval = stream(seed, TAG_EVAL, snr_db);
    let measure = |det: &dyn Detector| measure_ber(det, snr, plan.symbols, &mut eval.clone());

    let mut rows = Vec::with_capacity(plan.detectors.len());
    let mut models = Vec::new();
    for &kind in &plan.detectors {
        let point = match kind {
            DetectorKind::Analytic => {
                rows.push(BerRow {
                    method: kind,
                    snr_db,
                    seed,
                    symbols: None,
                    errors: None,
                    ber: analytic_rayleigh_bpsk_ber(snr),
                });
                continue;
            }
            DetectorKind::Zf => measure(&ZeroForcing)?,
            DetectorKind::Elm => {
                let data = dataset
                    .as_ref()
                    .expect("dataset exists for learned detectors");
                let model = ElmModel::train(
                    data,
                    plan.hidden_neurons,
                    DEFAULT_RIDGE_LAMBDA,
                    &mut stream(seed, TAG_ELM, snr_db),
                )?;
                let point = measure(&model.detector(kind.as_str()))?;
                models.push(TrainedModel {
                    method: kind,
                    snr_db,
                    seed,
                    model,
                });
                point
            }
            DetectorKind::Saelm => {
                let data = dataset
                    .as_ref()
                    .expect("dataset exists for learned detectors");
                let model =
                    saelm_train(data, &plan.saelm, &mut stream(seed, TAG_SAELM, snr_db))?.model;
                let point = measure(&model.detector(kind.as_str()))?;
                models.push(TrainedModel {
                    method: kind,
                    snr_db,
                    seed,
                    model,
                });
                point
            }
        };
        rows.push(BerRow {
            method: kind,
            snr_db,
            seed,
            symbols: Some(point.symbols),
            errors: Some(point.errors),
            ber: point.ber,
        });
    }
    Ok(BerSweep { rows, models })
}

/// Every `(detector, snr, seed)` row, sorted by method, SNR, then seed.
///
/// Grid points run on the current rayon pool.
pub fn run_ber_sweep(plan: &BerPlan) -> Result<Vec<BerRow>> {
    Ok(run_ber_sweep_with_models(plan)?.rows)
}

/// [`run_ber_sweep`] that also returns every trained model, in row order.
pub fn run_ber_sweep_with_models(plan: &BerPlan) -> Result<BerSweep> {
    let points: Vec<(f64, u64)> = plan
        .snr_db
        .iter()
        .flat_map(|&snr| (0..plan.repetitions).map(move |r| (snr, repetition_seed(plan.seed, r))))
        .collect();
    let batches = points
        .par_iter()
        .map(|&(snr, seed)| ber_point(plan, snr, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut out = BerSweep::default();
    for b in batches {
        out.rows.extend(b.rows);
        out.models.extend(b.models);
    }
    out.rows
        .sort_by(|a, b| key_order((a.method, a.snr_db, a.seed), (b.method, b.snr_db, b.seed)));
    out.models
        .sort_by(|a, b| key_order((a.method, a.snr_db, a.seed), (b.method, b.snr_db, b.seed)));
    Ok(out)
}

fn key_order(a: (DetectorKind, f64, u64), b: (DetectorKind, f64, u64)) -> std::cmp::Ordering {
    a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2))
}
