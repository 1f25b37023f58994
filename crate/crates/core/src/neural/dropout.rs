//! Dropout variants and the noise that drives them.
//!
//! A dropout layer multiplies each unit by a mask and rescales by `1/(1-p)`.
//! The mask comes from a uniform variate `u` per unit:
//!
//! * Bernoulli: the unit is kept iff `u >= p`.
//! * Concrete: the relaxed drop indicator is
//!   `z = logistic((logit p + logit u) / t)` and the mask is `1 - z`, which is
//!   differentiable in `p`. As `t → 0` it approaches the Bernoulli mask.
//!
//! Noise is always drawn explicitly as a [`NoiseDraw`] so that one draw can be
//! shared by every row of a forward pass, which is what makes a forward pass a
//! single posterior sample.

use rand::Rng;

use super::Matrix;

/// Variates are clamped to `[UNIFORM_EPS, 1 - UNIFORM_EPS]` before taking logits.
pub const UNIFORM_EPS: f64 = 1e-7;

/// Default relaxation temperature for Concrete dropout.
pub const DEFAULT_TEMPERATURE: f64 = 0.1;

/// Numerically stable logistic function.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[inline]
fn clamp_uniform(u: f64) -> f64 {
    u.clamp(UNIFORM_EPS, 1.0 - UNIFORM_EPS)
}

/// Retained fraction `1 - z` of a Concrete dropout unit with drop probability `p`.
///
/// `p` must lie in `(0, 1)` and `temperature` must be positive. Variates at
/// exactly 0 or 1 are clamped by [`UNIFORM_EPS`].
pub fn concrete_mask(p: f64, u: f64, temperature: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0, "drop probability {p} outside (0,1)");
    debug_assert!(temperature > 0.0);
    concrete_relaxation(logit(p), u, temperature).0
}

/// Returns `(mask, z)` for a unit whose drop probability has logit `p_logit`.
#[inline]
pub(crate) fn concrete_relaxation(p_logit: f64, u: f64, temperature: f64) -> (f64, f64) {
    let u = clamp_uniform(u);
    let z = logistic((p_logit + logit(u)) / temperature);
    (1.0 - z, z)
}

/// How a layer's outputs are dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DropoutSpec {
    None,
    /// Fixed-rate Bernoulli dropout.
    Bernoulli { p: f64 },
    /// Concrete dropout with a learnable rate `p = logistic(p_logit)`.
    Concrete { p_logit: f64, temperature: f64 },
}

impl DropoutSpec {
    pub fn concrete(initial_p: f64, temperature: f64) -> Self {
        Self::Concrete {
            p_logit: logit(initial_p),
            temperature,
        }
    }

    /// Current drop probability; zero when dropout is off.
    pub fn rate(&self) -> f64 {
        match *self {
            Self::None => 0.0,
            Self::Bernoulli { p } => p,
            Self::Concrete { p_logit, .. } => logistic(p_logit),
        }
    }

    pub fn is_active(&self) -> bool {
        !matches!(self, Self::None)
    }

    pub fn is_learnable(&self) -> bool {
        matches!(self, Self::Concrete { .. })
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        match *self {
            Self::None => Ok(()),
            Self::Bernoulli { p } if p > 0.0 && p < 1.0 => Ok(()),
            Self::Bernoulli { p } => Err(format!("bernoulli dropout rate {p} outside (0,1)")),
            Self::Concrete {
                p_logit,
                temperature,
            } => {
                if !p_logit.is_finite() {
                    Err("concrete dropout logit is not finite".into())
                } else if !(temperature > 0.0) {
                    Err(format!("concrete temperature {temperature} must be positive"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Uniform variates for every droppable unit of a network.
///
/// Each active layer holds a matrix of shape `rows × units`. With one row the
/// draw is shared across all inputs of a forward pass; with one row per input
/// every example gets its own mask.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw {
    layers: Vec<Option<Matrix>>,
}

impl NoiseDraw {
    pub fn new(layers: Vec<Option<Matrix>>) -> Self {
        Self { layers }
    }

    /// Draws `rows` variates for each unit of every layer flagged in `active`.
    pub fn sample<R: Rng + ?Sized>(
        widths: impl IntoIterator<Item = (usize, bool)>,
        rows: usize,
        rng: &mut R,
    ) -> Self {
        let layers = widths
            .into_iter()
            .map(|(units, active)| {
                active.then(|| {
                    let data = (0..rows * units).map(|_| rng.random::<f64>()).collect();
                    Matrix::from_vec(rows, units, data).expect("sized by construction")
                })
            })
            .collect();
        Self { layers }
    }

    pub fn layer(&self, index: usize) -> Option<&Matrix> {
        self.layers.get(index).and_then(Option::as_ref)
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symmetric_point_gives_half() {
        for t in [0.01, 0.1, 1.0, 7.5] {
            assert!((concrete_mask(0.5, 0.5, t) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn half_rate_mask_is_one_minus_u() {
        assert!((concrete_mask(0.5, 0.75, 1.0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn tiny_variate_keeps_unit() {
        assert!((concrete_mask(0.1, 1e-7, 0.1) - 1.0).abs() < 1e-6);
        // exact zero is clamped rather than producing an infinite logit
        assert!((concrete_mask(0.1, 0.0, 0.1) - 1.0).abs() < 1e-6);
        assert!(concrete_mask(0.1, 1.0, 0.1) < 1e-6);
    }

    #[test]
    fn rate_of_each_mode() {
        assert_eq!(DropoutSpec::None.rate(), 0.0);
        assert_eq!(DropoutSpec::Bernoulli { p: 0.2 }.rate(), 0.2);
        let c = DropoutSpec::concrete(0.1, DEFAULT_TEMPERATURE);
        assert!((c.rate() - 0.1).abs() < 1e-12);
        if let DropoutSpec::Concrete { p_logit, .. } = c {
            assert!((p_logit + 2.197_224_577).abs() < 1e-8);
        }
    }

    #[test]
    fn validation() {
        assert!(DropoutSpec::Bernoulli { p: 1.0 }.validate().is_err());
        assert!(DropoutSpec::Concrete {
            p_logit: 0.0,
            temperature: 0.0
        }
        .validate()
        .is_err());
        assert!(DropoutSpec::concrete(0.3, 0.1).validate().is_ok());
    }

    #[test]
    fn sampled_noise_covers_only_active_layers() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = NoiseDraw::sample([(4, true), (3, false), (2, true)], 5, &mut rng);
        assert_eq!(d.len(), 3);
        assert_eq!(d.layer(0).map(|m| (m.rows(), m.cols())), Some((5, 4)));
        assert!(d.layer(1).is_none());
        assert!(d.layer(2).unwrap().as_slice().iter().all(|u| (0.0..1.0).contains(u)));
    }
}
