//! Feed-forward network with hand-written reverse-mode gradients.

use rand::Rng;

use super::dropout::{concrete_relaxation, logistic, DropoutSpec, NoiseDraw};
use super::{Matrix, NeuralError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Self::Relu => x.max(0.0),
            Self::Sigmoid => logistic(x),
            Self::Identity => x,
        }
    }

    /// Derivative expressed through the output `y`.
    #[inline]
    fn derivative(self, y: f64) -> f64 {
        match self {
            Self::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Sigmoid => y * (1.0 - y),
            Self::Identity => 1.0,
        }
    }
}

/// One fully connected layer. `dropout` acts on this layer's outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `in × out`
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
    pub dropout: DropoutSpec,
}

impl DenseLayer {
    pub fn zeros(input: usize, output: usize, activation: Activation) -> Self {
        Self {
            weights: Matrix::zeros(input, output),
            bias: vec![0.0; output],
            activation,
            dropout: DropoutSpec::None,
        }
    }

    /// Uniform fan-in initialisation; zero bias.
    pub fn init<R: Rng + ?Sized>(
        input: usize,
        output: usize,
        activation: Activation,
        dropout: DropoutSpec,
        rng: &mut R,
    ) -> Self {
        let gain = if activation == Activation::Relu { 6.0 } else { 3.0 };
        let limit = (gain / input.max(1) as f64).sqrt();
        let data = (0..input * output)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        Self {
            weights: Matrix::from_vec(input, output, data).expect("sized by construction"),
            bias: vec![0.0; output],
            activation,
            dropout,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.cols()
    }
}

/// Selects how dropout behaves during a forward pass.
#[derive(Debug, Clone, Copy)]
pub enum Noise<'a> {
    /// No masks and no rescaling.
    Deterministic,
    /// Masks derived from the given variates, rescaled by `1/(1-p)`.
    Sampled(&'a NoiseDraw),
}

/// Strength of the weight and dropout regularisers, before dividing by the
/// dataset size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularization {
    /// Prior length-scale `l`; the weight coefficient is `l² / N`.
    pub length_scale: f64,
    /// Numerator of the dropout-entropy coefficient `c / N`.
    pub dropout_scale: f64,
}

impl Default for Regularization {
    fn default() -> Self {
        Self {
            length_scale: 0.01,
            dropout_scale: 2.0,
        }
    }
}

/// Loss value split into its three parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub data: f64,
    pub weight_penalty: f64,
    pub dropout_penalty: f64,
}

impl LossBreakdown {
    pub fn total(&self) -> f64 {
        self.data + self.weight_penalty + self.dropout_penalty
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    /// Present for Concrete dropout layers only.
    pub p_logit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

impl Gradients {
    /// Flat views in the same order as [`Network::parameters_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 3);
        for g in &self.layers {
            out.push(g.weights.as_slice());
            out.push(g.bias.as_slice());
            if let Some(p) = &g.p_logit {
                out.push(std::slice::from_ref(p));
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Per-layer values kept from the forward pass for backpropagation.
struct LayerTrace {
    /// Pre-activation, kept for the output layer only.
    pre: Option<Matrix>,
    /// Post-activation, pre-dropout.
    act: Matrix,
    /// Post-dropout output; `None` when no mask was applied.
    dropped: Option<Matrix>,
    mask: Option<MaskTrace>,
}

impl LayerTrace {
    fn output(&self) -> &Matrix {
        self.dropped.as_ref().unwrap_or(&self.act)
    }
}

struct MaskTrace {
    /// `1 × units` (shared) or `rows × units`.
    mask: Matrix,
    /// Relaxed drop indicators, Concrete layers only.
    relaxed: Option<Matrix>,
    scale: f64,
}

impl MaskTrace {
    #[inline]
    fn row(&self, r: usize) -> usize {
        if self.mask.rows() == 1 {
            0
        } else {
            r
        }
    }
}

/// An ordered stack of dense layers ending in a single sigmoid unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<DenseLayer>,
}

impl Network {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self, NeuralError> {
        if layers.is_empty() {
            return Err(NeuralError::Config("network needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(NeuralError::Shape(format!(
                    "layer {i} emits {} units but layer {} expects {}",
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].input_dim()
                )));
            }
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.output_dim() {
                return Err(NeuralError::Shape(format!(
                    "layer {i} has {} biases for {} units",
                    layer.bias.len(),
                    layer.output_dim()
                )));
            }
            layer
                .dropout
                .validate()
                .map_err(|e| NeuralError::Config(format!("layer {i}: {e}")))?;
        }
        let head = layers.last().expect("non-empty");
        if head.output_dim() != 1 || head.activation != Activation::Sigmoid {
            return Err(NeuralError::Config(
                "output layer must be a single sigmoid unit".into(),
            ));
        }
        if head.dropout.is_active() {
            return Err(NeuralError::Config("output layer cannot use dropout".into()));
        }
        Ok(Self { layers })
    }

    /// ReLU hidden layers of the given widths, each followed by `dropout`,
    /// then a sigmoid head.
    pub fn mlp<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: &[usize],
        dropout: DropoutSpec,
        rng: &mut R,
    ) -> Result<Self, NeuralError> {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut fan_in = input_dim;
        for &width in hidden {
            layers.push(DenseLayer::init(fan_in, width, Activation::Relu, dropout, rng));
            fan_in = width;
        }
        layers.push(DenseLayer::init(
            fan_in,
            1,
            Activation::Sigmoid,
            DropoutSpec::None,
            rng,
        ));
        Self::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn has_dropout(&self) -> bool {
        self.layers.iter().any(|l| l.dropout.is_active())
    }

    /// Drop probabilities of the layers that use dropout.
    pub fn dropout_rates(&self) -> Vec<f64> {
        self.layers
            .iter()
            .filter(|l| l.dropout.is_active())
            .map(|l| l.dropout.rate())
            .collect()
    }

    pub fn mean_dropout_rate(&self) -> Option<f64> {
        let rates = self.dropout_rates();
        (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64)
    }

    /// Draws uniform variates for every dropout layer; `rows == 1` shares the
    /// draw across a whole forward pass.
    pub fn sample_noise<R: Rng + ?Sized>(&self, rows: usize, rng: &mut R) -> NoiseDraw {
        NoiseDraw::sample(
            self.layers
                .iter()
                .map(|l| (l.output_dim(), l.dropout.is_active())),
            rows,
            rng,
        )
    }

    /// Mutable views of every trainable parameter: per layer the weights,
    /// the bias and, for Concrete layers, the dropout logit.
    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 3);
        for layer in &mut self.layers {
            let DenseLayer {
                weights,
                bias,
                dropout,
                ..
            } = layer;
            out.push(weights.as_mut_slice());
            out.push(bias.as_mut_slice());
            if let DropoutSpec::Concrete { p_logit, .. } = dropout {
                out.push(std::slice::from_mut(p_logit));
            }
        }
        out
    }

    /// Predicted reward per input row, shape `rows × 1`.
    pub fn forward(&self, input: &Matrix, noise: Noise<'_>) -> Result<Matrix, NeuralError> {
        let mut traces = self.forward_traced(input, noise)?;
        Ok(traces.pop().expect("non-empty").act)
    }

    fn forward_traced(
        &self,
        input: &Matrix,
        noise: Noise<'_>,
    ) -> Result<Vec<LayerTrace>, NeuralError> {
        if input.cols() != self.input_dim() {
            return Err(NeuralError::Shape(format!(
                "input has {} columns, network expects {}",
                input.cols(),
                self.input_dim()
            )));
        }
        if input.rows() == 0 {
            return Err(NeuralError::EmptyBatch);
        }
        let rows = input.rows();
        let last = self.layers.len() - 1;
        let mut traces: Vec<LayerTrace> = Vec::with_capacity(self.layers.len());
        for (li, layer) in self.layers.iter().enumerate() {
            let x = traces.last().map_or(input, LayerTrace::output);
            let mut act = x.matmul(&layer.weights)?;
            for r in 0..rows {
                for (v, b) in act.row_mut(r).iter_mut().zip(&layer.bias) {
                    *v += b;
                }
            }
            let pre = (li == last).then(|| act.clone());
            for v in act.as_mut_slice() {
                *v = layer.activation.apply(*v);
            }
            if !act.is_finite() {
                return Err(NeuralError::NonFinite(format!("activation of layer {li}")));
            }

            let mask = match (noise, layer.dropout) {
                (_, DropoutSpec::None) | (Noise::Deterministic, _) => None,
                (Noise::Sampled(draw), spec) => {
                    let u = draw.layer(li).ok_or(NeuralError::MissingNoise { layer: li })?;
                    if u.cols() != layer.output_dim() || (u.rows() != 1 && u.rows() != rows) {
                        return Err(NeuralError::Shape(format!(
                            "noise for layer {li} is {}x{}, need 1x{units} or {rows}x{units}",
                            u.rows(),
                            u.cols(),
                            units = layer.output_dim()
                        )));
                    }
                    Some(build_mask(spec, u))
                }
            };

            let dropped = mask.as_ref().map(|m| {
                let mut out = act.clone();
                for r in 0..rows {
                    let mrow = m.mask.row(m.row(r));
                    for (o, k) in out.row_mut(r).iter_mut().zip(mrow) {
                        *o *= k * m.scale;
                    }
                }
                out
            });
            traces.push(LayerTrace {
                pre,
                act,
                dropped,
                mask,
            });
        }
        Ok(traces)
    }

    /// Data loss plus regularisers, and the gradient of that total with
    /// respect to every parameter.
    ///
    /// The data loss is the mean binary cross-entropy of the sigmoid head
    /// against `targets` in `[0, 1]`. Each layer adds
    /// `l²/N · ‖W‖² / (1 - p)` where `p` is the drop rate of its inputs, and
    /// each Concrete dropout adds `c/N · units · (p ln p + (1-p) ln(1-p))`,
    /// with `N = dataset_size`.
    pub fn loss_and_gradients(
        &self,
        input: &Matrix,
        targets: &[f64],
        noise: Noise<'_>,
        dataset_size: usize,
        reg: Regularization,
    ) -> Result<(LossBreakdown, Gradients), NeuralError> {
        if input.rows() == 0 {
            return Err(NeuralError::EmptyBatch);
        }
        if dataset_size == 0 {
            return Err(NeuralError::Config("dataset size must be positive".into()));
        }
        if targets.len() != input.rows() {
            return Err(NeuralError::Shape(format!(
                "{} targets for {} rows",
                targets.len(),
                input.rows()
            )));
        }
        if let Some(bad) = targets.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(NeuralError::InvalidTarget(*bad));
        }

        let traces = self.forward_traced(input, noise)?;
        let rows = input.rows();
        let batch = rows as f64;
        let n = dataset_size as f64;
        let weight_coef = reg.length_scale * reg.length_scale / n;
        let dropout_coef = reg.dropout_scale / n;

        // Cross-entropy from the head's logits.
        let head = traces.last().expect("non-empty");
        let logits = head.pre.as_ref().expect("output layer keeps its logits");
        let mut loss = LossBreakdown::default();
        let mut delta = Matrix::zeros(rows, 1);
        for (r, &y) in targets.iter().enumerate() {
            let z = logits.get(r, 0);
            loss.data += softplus(z) - y * z;
            delta.set(r, 0, (head.act.get(r, 0) - y) / batch);
        }
        loss.data /= batch;

        let mut grads: Vec<LayerGradient> = self
            .layers
            .iter()
            .map(|l| LayerGradient {
                weights: Matrix::zeros(0, 0),
                bias: Vec::new(),
                p_logit: l.dropout.is_learnable().then_some(0.0),
            })
            .collect();

        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let x = if li > 0 { traces[li - 1].output() } else { input };
            let mut dw = x.t_matmul(&delta)?;
            let db = delta.column_sums();

            // Weight penalty, scaled by the keep probability of the inputs.
            let p_in = if li > 0 {
                self.layers[li - 1].dropout.rate()
            } else {
                0.0
            };
            let w_norm = layer.weights.squared_norm();
            loss.weight_penalty += weight_coef * w_norm / (1.0 - p_in);
            let w_scale = 2.0 * weight_coef / (1.0 - p_in);
            for (g, w) in dw.as_mut_slice().iter_mut().zip(layer.weights.as_slice()) {
                *g += w_scale * w;
            }
            grads[li].weights = dw;
            grads[li].bias = db;

            if li == 0 {
                break;
            }

            // Back through the dropout and activation of the previous layer.
            let prev = &self.layers[li - 1];
            let prev_trace = &traces[li - 1];
            let mut d_act = delta.matmul_t(&layer.weights)?;
            if let Some(m) = &prev_trace.mask {
                let mut d_logit = 0.0;
                let learnable = match prev.dropout {
                    DropoutSpec::Concrete {
                        p_logit,
                        temperature,
                    } => Some((logistic(p_logit), temperature)),
                    _ => None,
                };
                let mut dmask = vec![0.0; prev.output_dim()];
                for r in 0..rows {
                    let mr = m.row(r);
                    let mask_row = m.mask.row(mr);
                    let d_row = d_act.row_mut(r);
                    if let (Some((p, t)), Some(relaxed)) = (learnable, &m.relaxed) {
                        // d(mask·scale)/d logit = scale·(-z(1-z)/t + mask·p)
                        if r == 0 || mr != 0 {
                            for ((c, &z), &k) in dmask.iter_mut().zip(relaxed.row(mr)).zip(mask_row) {
                                *c = -z * (1.0 - z) / t + k * p;
                            }
                        }
                        d_logit += d_row
                            .iter()
                            .zip(prev_trace.act.row(r))
                            .zip(&dmask)
                            .map(|((d, a), c)| d * a * c)
                            .sum::<f64>();
                    }
                    for (d, k) in d_row.iter_mut().zip(mask_row) {
                        *d *= k * m.scale;
                    }
                }
                if let Some(g) = grads[li - 1].p_logit.as_mut() {
                    *g += d_logit * m.scale;
                }
            }

            // Regulariser terms that depend on the previous layer's rate.
            if let DropoutSpec::Concrete { p_logit, .. } = prev.dropout {
                let p = logistic(p_logit);
                let units = prev.output_dim() as f64;
                let neg_entropy = p * -softplus(-p_logit) + (1.0 - p) * -softplus(p_logit);
                loss.dropout_penalty += dropout_coef * units * neg_entropy;
                let g = grads[li - 1].p_logit.as_mut().expect("learnable layer");
                *g += weight_coef * w_norm * p / (1.0 - p);
                *g += dropout_coef * units * p_logit * p * (1.0 - p);
            }

            let activation = prev.activation;
            if activation != Activation::Identity {
                for (d, &y) in d_act.as_mut_slice().iter_mut().zip(prev_trace.act.as_slice()) {
                    *d *= activation.derivative(y);
                }
            }
            delta = d_act;
        }

        if !loss.total().is_finite() {
            return Err(NeuralError::NonFinite("loss".into()));
        }
        Ok((loss, Gradients { layers: grads }))
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn build_mask(spec: DropoutSpec, u: &Matrix) -> MaskTrace {
    match spec {
        DropoutSpec::None => unreachable!("inactive layers have no mask"),
        DropoutSpec::Bernoulli { p } => {
            let mut mask = u.clone();
            for v in mask.as_mut_slice() {
                *v = if *v >= p { 1.0 } else { 0.0 };
            }
            MaskTrace {
                mask,
                relaxed: None,
                scale: 1.0 / (1.0 - p),
            }
        }
        DropoutSpec::Concrete {
            p_logit,
            temperature,
        } => {
            let mut mask = u.clone();
            let mut relaxed = u.clone();
            for (m, z) in mask
                .as_mut_slice()
                .iter_mut()
                .zip(relaxed.as_mut_slice())
            {
                let (keep, drop) = concrete_relaxation(p_logit, *m, temperature);
                *m = keep;
                *z = drop;
            }
            MaskTrace {
                mask,
                relaxed: Some(relaxed),
                scale: 1.0 / (1.0 - logistic(p_logit)),
            }
        }
    }
}
