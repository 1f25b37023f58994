use rand::Rng;
use rand_distr::{Beta, Distribution};

use super::AgentError;
use crate::envs::argmax;

/// Beta posterior over one arm's payout probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaArm {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for BetaArm {
    /// The uniform `Beta(1, 1)` prior.
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

impl BetaArm {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, AgentError> {
        if !(alpha > 0.0 && beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(AgentError::Config(format!(
                "beta parameters must be positive, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// Conjugate update with a 0/1 reward.
    pub fn update(self, reward: u8) -> Result<Self, AgentError> {
        match reward {
            0 => Ok(Self {
                beta: self.beta + 1.0,
                ..self
            }),
            1 => Ok(Self {
                alpha: self.alpha + 1.0,
                ..self
            }),
            r => Err(AgentError::InvalidReward(r)),
        }
    }
}

/// Draws one payout probability per arm and returns the arm with the largest
/// draw.
pub fn beta_binomial_select<R: Rng + ?Sized>(arms: &[BetaArm], rng: &mut R) -> Result<usize, AgentError> {
    if arms.is_empty() {
        return Err(AgentError::NoActions);
    }
    let draws = arms
        .iter()
        .map(|a| {
            Beta::new(a.alpha, a.beta)
                .map(|d| d.sample(rng))
                .map_err(|e| AgentError::Config(format!("invalid beta arm {a:?}: {e}")))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(argmax(&draws))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn conjugate_updates() {
        let prior = BetaArm::default();
        assert_eq!(prior.update(1).unwrap(), BetaArm::new(2.0, 1.0).unwrap());
        assert_eq!(prior.update(0).unwrap(), BetaArm::new(1.0, 2.0).unwrap());
        assert!(matches!(prior.update(3), Err(AgentError::InvalidReward(3))));
    }

    #[test]
    fn confident_arm_wins() {
        let arms = [BetaArm::new(100.0, 1.0).unwrap(), BetaArm::new(1.0, 100.0).unwrap()];
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let wins = (0..10_000)
            .filter(|_| beta_binomial_select(&arms, &mut rng).unwrap() == 0)
            .count();
        assert!(wins >= 9_900, "{wins}");
    }

    #[test]
    fn rejects_empty_and_invalid() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            beta_binomial_select(&[], &mut rng),
            Err(AgentError::NoActions)
        ));
        assert!(BetaArm::new(0.0, 1.0).is_err());
    }
}
