//! Extreme learning machine (ELM) detectors.
//!
//! An ELM is a single-hidden-layer network whose input weights and biases are
//! random and whose output weights are a ridge least-squares fit. SaE-ELM
//! keeps the closed-form output layer but searches the hidden parameters
//! with [`sade_run`], scoring each candidate by validation RMSE.
//!
//! ## Model file layout
//!
//! All integers and floats are little-endian.
//!
//! | offset | size     | field                                   |
//! |--------|----------|-----------------------------------------|
//! | 0      | 4        | magic `b"ELMW"`                         |
//! | 4      | 1        | format version (`1`)                    |
//! | 5      | 1        | activation (`0` = sigmoid)              |
//! | 6      | 4        | input width `D` (u32, always 4)         |
//! | 10     | 4        | hidden neurons `L` (u32)                |
//! | 14     | 8·D·L    | input weights, row-major `D×L` (f64)    |
//! | ..     | 8·L      | biases (f64)                            |
//! | ..     | 8·L      | output weights (f64)                    |

use crate::evolution::{sade_run, SadeConfig};
use crate::numerics::{
    dot, exp_poly, gram_lower, solve_normal_equations, Matrix, RngStream, DEFAULT_RIDGE_LAMBDA,
};
use crate::phy::{Bit, Dataset, Detector, FadedObservation};
use crate::{Error, Result};
use std::cell::RefCell;

pub const INPUT_WIDTH: usize = 4;
pub const MODEL_MAGIC: &[u8; 4] = b"ELMW";
pub const MODEL_FORMAT_VERSION: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
}

impl Activation {
    fn code(self) -> u8 {
        match self {
            Activation::Sigmoid => 0,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(Activation::Sigmoid),
            other => Err(Error::Format(format!("unknown activation code {other}"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
        }
    }
}

#[inline(always)]
fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + exp_poly(-t))
}

/// Feature matrix held as four contiguous columns.
struct Columns {
    n: usize,
    cols: [Vec<f64>; INPUT_WIDTH],
}

impl Columns {
    fn from_matrix(m: &Matrix) -> Result<Self> {
        if m.cols() != INPUT_WIDTH {
            return Err(Error::Shape(format!(
                "detector features must be {INPUT_WIDTH} wide, got {}",
                m.cols()
            )));
        }
        Ok(Self {
            n: m.rows(),
            cols: std::array::from_fn(|j| m.column(j)),
        })
    }

    fn from_observations(obs: &[FadedObservation]) -> Self {
        let mut cols: [Vec<f64>; INPUT_WIDTH] =
            std::array::from_fn(|_| Vec::with_capacity(obs.len()));
        for o in obs {
            for (c, v) in cols.iter_mut().zip(o.features()) {
                c.push(v);
            }
        }
        Self { n: obs.len(), cols }
    }

    /// Activations of one neuron over all rows, written into `out`.
    fn neuron(&self, w: [f64; INPUT_WIDTH], b: f64, out: &mut [f64]) {
        #[cfg(target_arch = "x86_64")]
        if crate::numerics::fma_available() {
            // SAFETY: the CPU supports AVX2 and FMA.
            return unsafe { neuron_fma(&self.cols, w, b, out) };
        }
        neuron_impl(&self.cols, w, b, out)
    }
}

#[inline(always)]
fn neuron_impl(cols: &[Vec<f64>; INPUT_WIDTH], w: [f64; INPUT_WIDTH], b: f64, out: &mut [f64]) {
    let [c0, c1, c2, c3] = cols;
    let n = out.len();
    let (c0, c1, c2, c3) = (&c0[..n], &c1[..n], &c2[..n], &c3[..n]);
    for (i, o) in out.iter_mut().enumerate() {
        let z = w[3].mul_add(
            c3[i],
            w[2].mul_add(c2[i], w[1].mul_add(c1[i], w[0].mul_add(c0[i], b))),
        );
        *o = sigmoid(z);
    }
}

// Same arithmetic as `neuron_impl`, so results are bit-identical.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
fn neuron_fma(cols: &[Vec<f64>; INPUT_WIDTH], w: [f64; INPUT_WIDTH], b: f64, out: &mut [f64]) {
    neuron_impl(cols, w, b, out)
}

/// Hidden-layer parameters: `D×L` input weights and `L` biases.
#[derive(Clone, Debug, PartialEq)]
struct HiddenLayer<'a> {
    weights: &'a [f64],
    biases: &'a [f64],
}

impl HiddenLayer<'_> {
    fn width(&self) -> usize {
        self.biases.len()
    }

    fn neuron_weights(&self, j: usize) -> [f64; INPUT_WIDTH] {
        let l = self.width();
        std::array::from_fn(|d| self.weights[d * l + j])
    }

    /// Neuron-major activations (`L` blocks of `n`) written into `h`.
    fn activations_into(&self, x: &Columns, h: &mut Vec<f64>) {
        let n = x.n;
        h.clear();
        h.resize(self.width() * n, 0.0);
        for (j, block) in h.chunks_exact_mut(n.max(1)).enumerate().take(self.width()) {
            x.neuron(self.neuron_weights(j), self.biases[j], block);
        }
    }

    fn activations(&self, x: &Columns) -> Vec<f64> {
        let mut h = Vec::new();
        self.activations_into(x, &mut h);
        h
    }

    fn fit(&self, x: &Columns, targets: &[f64], lambda: f64) -> Result<Vec<f64>> {
        thread_local! {
            // Reused across fitness evaluations to avoid faulting in a fresh
            // multi-megabyte buffer every call.
            static SCRATCH: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
        }
        let l = self.width();
        let (gram, rhs) = SCRATCH.with_borrow_mut(|h| {
            self.activations_into(x, h);
            let gram = gram_lower(h, l, x.n);
            let rhs: Vec<f64> = h.chunks_exact(x.n).map(|hj| dot(hj, targets)).collect();
            (gram, rhs)
        });
        let rhs = Matrix::from_vec(l, 1, rhs)?;
        Ok(solve_normal_equations(&gram, &rhs, lambda)?.into_vec())
    }

    fn scores(&self, x: &Columns, beta: &[f64]) -> Vec<f64> {
        let mut scores = vec![0.0; x.n];
        let mut hj = vec![0.0; x.n];
        for (j, &bj) in beta.iter().enumerate() {
            x.neuron(self.neuron_weights(j), self.biases[j], &mut hj);
            for (s, h) in scores.iter_mut().zip(&hj) {
                *s += bj * h;
            }
        }
        scores
    }
}

/// A trained single-hidden-layer random-feature network.
#[derive(Clone, Debug, PartialEq)]
pub struct ElmModel {
    input_weights: Matrix,
    biases: Vec<f64>,
    output_weights: Vec<f64>,
    activation: Activation,
}

impl ElmModel {
    pub fn from_parts(
        input_weights: Matrix,
        biases: Vec<f64>,
        output_weights: Vec<f64>,
    ) -> Result<Self> {
        let l = biases.len();
        if l == 0 {
            return Err(Error::Shape(
                "an ELM needs at least one hidden neuron".into(),
            ));
        }
        if input_weights.rows() != INPUT_WIDTH
            || input_weights.cols() != l
            || output_weights.len() != l
        {
            return Err(Error::Shape(format!(
                "ELM parts disagree: weights {}x{}, {} biases, {} output weights",
                input_weights.rows(),
                input_weights.cols(),
                l,
                output_weights.len()
            )));
        }
        if biases.iter().chain(&output_weights).any(|v| !v.is_finite()) {
            return Err(Error::Domain("ELM parameters must be finite".into()));
        }
        Ok(Self {
            input_weights,
            biases,
            output_weights,
            activation: Activation::Sigmoid,
        })
    }

    /// Hidden weights and biases uniform in `[-1, 1]`, output weights ridge-fitted
    /// on the training split.
    pub fn train(
        dataset: &Dataset,
        hidden: usize,
        lambda: f64,
        rng: &mut RngStream,
    ) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::Config("hidden neuron count must be >= 1".into()));
        }
        let params: Vec<f64> = (0..(INPUT_WIDTH + 1) * hidden)
            .map(|_| rng.uniform_range(-1.0, 1.0))
            .collect();
        let (x, t) = dataset.train();
        Self::fit_from_parameters(&params, hidden, &x, &t, lambda)
    }

    /// Builds a model from flattened `(W row-major, b)` and fits its output layer.
    pub fn fit_from_parameters(
        params: &[f64],
        hidden: usize,
        features: &Matrix,
        labels: &Matrix,
        lambda: f64,
    ) -> Result<Self> {
        if params.len() != (INPUT_WIDTH + 1) * hidden {
            return Err(Error::Shape(format!(
                "expected {} hidden parameters, got {}",
                (INPUT_WIDTH + 1) * hidden,
                params.len()
            )));
        }
        if features.rows() == 0 || labels.rows() != features.rows() || labels.cols() != 1 {
            return Err(Error::Shape(
                "training features/labels must be non-empty Nx4 / Nx1".into(),
            ));
        }
        let x = Columns::from_matrix(features)?;
        let (w, b) = params.split_at(INPUT_WIDTH * hidden);
        let layer = HiddenLayer {
            weights: w,
            biases: b,
        };
        let beta = layer.fit(&x, labels.as_slice(), lambda)?;
        Self::from_parts(
            Matrix::from_vec(INPUT_WIDTH, hidden, w.to_vec())?,
            b.to_vec(),
            beta,
        )
    }

    fn layer(&self) -> HiddenLayer<'_> {
        HiddenLayer {
            weights: self.input_weights.as_slice(),
            biases: &self.biases,
        }
    }

    pub fn hidden_neurons(&self) -> usize {
        self.biases.len()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_weights(&self) -> &Matrix {
        &self.input_weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.output_weights
    }

    /// Same hidden layer, output weights multiplied by `factor`.
    pub fn with_scaled_output(&self, factor: f64) -> Self {
        Self {
            output_weights: self.output_weights.iter().map(|b| b * factor).collect(),
            ..self.clone()
        }
    }

    /// Hidden-layer activation matrix `N×L` for `features`.
    pub fn hidden_matrix(&self, features: &Matrix) -> Result<Matrix> {
        let x = Columns::from_matrix(features)?;
        let h = self.layer().activations(&x);
        Matrix::from_vec(self.hidden_neurons(), x.n, h).map(|m| m.transpose())
    }

    /// Soft scores `sigmoid(xW + b) · β` per row.
    pub fn predict(&self, features: &Matrix) -> Result<Vec<f64>> {
        let x = Columns::from_matrix(features)?;
        Ok(self.layer().scores(&x, &self.output_weights))
    }

    /// Root-mean-square error of the scores against `labels`.
    pub fn rmse(&self, features: &Matrix, labels: &Matrix) -> Result<f64> {
        let s = self.predict(features)?;
        Ok(rmse(&s, labels.as_slice()))
    }

    /// Hard decision: score ≥ 0 is bit 0 (+1).
    pub fn detect(&self, obs: &FadedObservation) -> Bit {
        let x = Columns::from_observations(std::slice::from_ref(obs));
        Bit::from_statistic(self.layer().scores(&x, &self.output_weights)[0])
    }

    /// Wraps the model as a named [`Detector`].
    pub fn detector<'a>(&'a self, name: &'a str) -> ElmDetector<'a> {
        ElmDetector { name, model: self }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let l = self.hidden_neurons();
        let mut out = Vec::with_capacity(14 + 8 * (INPUT_WIDTH + 2) * l);
        out.extend_from_slice(MODEL_MAGIC);
        out.push(MODEL_FORMAT_VERSION);
        out.push(self.activation.code());
        out.extend_from_slice(&(INPUT_WIDTH as u32).to_le_bytes());
        out.extend_from_slice(&(l as u32).to_le_bytes());
        for v in self
            .input_weights
            .as_slice()
            .iter()
            .chain(&self.biases)
            .chain(&self.output_weights)
        {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 14 {
            return Err(Error::Format(format!(
                "{} bytes is shorter than the header",
                bytes.len()
            )));
        }
        if &bytes[0..4] != MODEL_MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        if bytes[4] != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {}",
                bytes[4]
            )));
        }
        let activation = Activation::from_code(bytes[5])?;
        let width = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
        let l = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
        if width != INPUT_WIDTH {
            return Err(Error::Format(format!(
                "input width {width} is not {INPUT_WIDTH}"
            )));
        }
        let expected = 14 + 8 * (INPUT_WIDTH + 2) * l;
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "expected {expected} bytes for L={l}, got {}",
                bytes.len()
            )));
        }
        let vals: Vec<f64> = bytes[14..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let (w, rest) = vals.split_at(INPUT_WIDTH * l);
        let (b, beta) = rest.split_at(l);
        let mut model = Self::from_parts(
            Matrix::from_vec(INPUT_WIDTH, l, w.to_vec())
                .map_err(|e| Error::Format(e.to_string()))?,
            b.to_vec(),
            beta.to_vec(),
        )
        .map_err(|e| Error::Format(e.to_string()))?;
        model.activation = activation;
        Ok(model)
    }
}

/// A borrowed [`ElmModel`] with a method label.
pub struct ElmDetector<'a> {
    name: &'a str,
    model: &'a ElmModel,
}

impl Detector for ElmDetector<'_> {
    fn name(&self) -> &str {
        self.name
    }

    fn detect(&self, obs: &FadedObservation) -> Bit {
        self.model.detect(obs)
    }

    fn detect_batch(&self, obs: &[FadedObservation]) -> Vec<Bit> {
        let x = Columns::from_observations(obs);
        self.model
            .layer()
            .scores(&x, &self.model.output_weights)
            .into_iter()
            .map(Bit::from_statistic)
            .collect()
    }
}

fn rmse(scores: &[f64], labels: &[f64]) -> f64 {
    let se: f64 = scores
        .iter()
        .zip(labels)
        .map(|(s, t)| (s - t) * (s - t))
        .sum();
    (se / scores.len() as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaelmConfig {
    pub hidden_neurons: usize,
    /// Search settings; `bounds` must be `[-1, 1]`-style boxes over `5·L` dims.
    pub sade: SadeConfig,
    /// Share of the training split held out to score candidates.
    pub validation_fraction: f64,
    pub lambda: f64,
}

impl SaelmConfig {
    /// SaDE population 100 × 50 generations over `[-1, 1]^(5L)`, 25% validation.
    pub fn new(hidden_neurons: usize) -> Self {
        Self {
            hidden_neurons,
            sade: SadeConfig::new(vec![(-1.0, 1.0); (INPUT_WIDTH + 1) * hidden_neurons]),
            validation_fraction: 0.25,
            lambda: DEFAULT_RIDGE_LAMBDA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_neurons == 0 {
            return Err(Error::Config("hidden_neurons must be >= 1".into()));
        }
        if self.sade.dims() != (INPUT_WIDTH + 1) * self.hidden_neurons {
            return Err(Error::Config(format!(
                "sade dims {} must equal 5 x hidden_neurons = {}",
                self.sade.dims(),
                (INPUT_WIDTH + 1) * self.hidden_neurons
            )));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config(format!(
                "validation_fraction must lie in (0, 1), got {}",
                self.validation_fraction
            )));
        }
        self.sade.validate()
    }
}

#[derive(Clone, Debug)]
pub struct SaelmOutcome {
    /// Best hidden layer with output weights re-fitted on the full training split.
    pub model: ElmModel,
    /// Validation RMSE of the selected hidden layer (fit on the fit portion).
    pub validation_rmse: f64,
    /// Validation RMSE of every member of SaDE's initial population.
    pub initial_validation_rmse: Vec<f64>,
    pub trace: Vec<f64>,
}

/// Evolves ELM hidden parameters with SaDE, minimizing validation RMSE.
///
/// The training split is cut into a leading fit portion and a trailing
/// validation portion of `validation_fraction` of its rows.
pub fn saelm_train(
    dataset: &Dataset,
    config: &SaelmConfig,
    rng: &mut RngStream,
) -> Result<SaelmOutcome> {
    config.validate()?;
    let (x, t) = dataset.train();
    let n = x.rows();
    let n_val = (n as f64 * config.validation_fraction).round() as usize;
    if n_val == 0 || n_val >= n {
        return Err(Error::Config(format!(
            "training split of {n} rows cannot hold a {} validation share",
            config.validation_fraction
        )));
    }
    let n_fit = n - n_val;
    let fit_x = Columns::from_matrix(&x.row_range(0, n_fit))?;
    let fit_t = t.row_range(0, n_fit).into_vec();
    let val_x = Columns::from_matrix(&x.row_range(n_fit, n))?;
    let val_t = t.row_range(n_fit, n).into_vec();
    let l = config.hidden_neurons;
    let lambda = config.lambda;

    let fitness = |params: &[f64]| -> f64 {
        let (w, b) = params.split_at(INPUT_WIDTH * l);
        let layer = HiddenLayer {
            weights: w,
            biases: b,
        };
        match layer.fit(&fit_x, &fit_t, lambda) {
            Ok(beta) => rmse(&layer.scores(&val_x, &beta), &val_t),
            Err(_) => f64::INFINITY,
        }
    };
    let out = sade_run(&config.sade, &fitness, rng)?;
    let model = ElmModel::fit_from_parameters(&out.best_vector, l, &x, &t, lambda)?;
    Ok(SaelmOutcome {
        model,
        validation_rmse: out.best_fitness,
        initial_validation_rmse: out.initial_fitness,
        trace: out.trace,
    })
}
