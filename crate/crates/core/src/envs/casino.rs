//! The casino parity task.
//!
//! `L` slot machines carry binary IDs. Even-parity machines pay with
//! probability `p_a`, odd-parity ones with `p_b`. The gambler sees one ID and
//! either plays it or declines, in which case a machine is picked uniformly
//! from the whole casino and played instead.

use rand::Rng;

use super::{bernoulli, EnvError, EnvStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Parity of the number of set bits. Empty input is treated as even.
pub fn parity(bits: &[bool]) -> Parity {
    if bits.iter().filter(|b| **b).count() % 2 == 0 {
        Parity::Even
    } else {
        Parity::Odd
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CasinoConfig {
    /// Number of machines `L`.
    pub bandits: usize,
    /// Payout probability of even-parity machines.
    pub p_a: f64,
    /// Payout probability of odd-parity machines.
    pub p_b: f64,
}

impl Default for CasinoConfig {
    fn default() -> Self {
        Self {
            bandits: 32,
            p_a: 0.7,
            p_b: 0.3,
        }
    }
}

impl CasinoConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.bandits < 2 {
            return Err(EnvError::Config(format!(
                "casino needs at least 2 bandits, got {}",
                self.bandits
            )));
        }
        for (name, p) in [("p_a", self.p_a), ("p_b", self.p_b)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(EnvError::Config(format!("{name} = {p} outside [0,1]")));
            }
        }
        Ok(())
    }

    /// `ceil(log2 L)`
    pub fn id_bits(&self) -> usize {
        (usize::BITS - (self.bandits - 1).leading_zeros()) as usize
    }

    /// Binary encoding of `index`, most significant bit first.
    pub fn id(&self, index: usize) -> Vec<bool> {
        let bits = self.id_bits();
        (0..bits).rev().map(|b| (index >> b) & 1 == 1).collect()
    }

    pub fn payout(&self, index: usize) -> f64 {
        match parity(&self.id(index)) {
            Parity::Even => self.p_a,
            Parity::Odd => self.p_b,
        }
    }

    /// Expected payout of a machine drawn uniformly from the casino.
    pub fn mean_payout(&self) -> f64 {
        let even = (0..self.bandits)
            .filter(|&i| parity(&self.id(i)) == Parity::Even)
            .count();
        let odd = self.bandits - even;
        (even as f64 * self.p_a + odd as f64 * self.p_b) / self.bandits as f64
    }
}

#[derive(Debug, Clone)]
pub struct CasinoEnv {
    cfg: CasinoConfig,
    decline_value: f64,
}

impl CasinoEnv {
    pub fn new(cfg: CasinoConfig) -> Result<Self, EnvError> {
        cfg.validate()?;
        Ok(Self {
            decline_value: cfg.mean_payout(),
            cfg,
        })
    }

    pub fn config(&self) -> &CasinoConfig {
        &self.cfg
    }

    pub fn context_dim(&self) -> usize {
        self.cfg.id_bits()
    }

    /// The step for a specific machine.
    pub fn step_for_bandit<R: Rng + ?Sized>(&self, index: usize, rng: &mut R) -> EnvStep {
        let play = self.cfg.payout(index);
        let context = self
            .cfg
            .id(index)
            .into_iter()
            .map(|b| if b { 1.0 } else { 0.0 })
            .collect();
        let play_draw = bernoulli(play, rng);
        let assigned = rng.random_range(0..self.cfg.bandits);
        let decline_draw = bernoulli(self.cfg.payout(assigned), rng);
        EnvStep {
            context,
            expected: vec![play, self.decline_value],
            realized: vec![play_draw, decline_draw],
        }
    }

    /// Presents a machine drawn uniformly with replacement.
    pub fn step<R: Rng + ?Sized>(&self, rng: &mut R) -> EnvStep {
        let index = rng.random_range(0..self.cfg.bandits);
        self.step_for_bandit(index, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn parity_examples() {
        assert_eq!(parity(&bits("00000")), Parity::Even);
        assert_eq!(parity(&bits("10110")), Parity::Odd);
    }

    #[test]
    fn five_bit_ids_split_evenly() {
        let cfg = CasinoConfig::default();
        assert_eq!(cfg.id_bits(), 5);
        let even = (0..32).filter(|&i| parity(&cfg.id(i)) == Parity::Even).count();
        assert_eq!(even, 16);
    }

    #[test]
    fn id_bit_widths() {
        let width = |l| CasinoConfig { bandits: l, ..CasinoConfig::default() }.id_bits();
        assert_eq!(width(2), 1);
        assert_eq!(width(3), 2);
        assert_eq!(width(4), 2);
        assert_eq!(width(5), 3);
        assert_eq!(width(32), 5);
        assert_eq!(width(33), 6);
        let cfg = CasinoConfig::default();
        assert_eq!(cfg.id(6), bits("00110"));
    }

    #[test]
    fn expected_rewards_by_parity() {
        let env = CasinoEnv::new(CasinoConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let even = env.step_for_bandit(3, &mut rng);
        assert_eq!(even.context, vec![0.0, 0.0, 0.0, 1.0, 1.0]);
        assert_eq!(even.expected, vec![0.7, 0.5]);
        assert_eq!(even.oracle_expected_reward(), 0.7);
        let odd = env.step_for_bandit(1, &mut rng);
        assert_eq!(odd.expected, vec![0.3, 0.5]);
        assert_eq!(odd.oracle_expected_reward(), 0.5);
        assert_eq!(odd.oracle_action(), crate::envs::DECLINE);
    }

    #[test]
    fn equal_payouts_carry_no_signal() {
        let env = CasinoEnv::new(CasinoConfig {
            p_a: 0.5,
            p_b: 0.5,
            ..CasinoConfig::default()
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for i in 0..32 {
            let s = env.step_for_bandit(i, &mut rng);
            assert_eq!(s.expected, vec![0.5, 0.5]);
            assert_eq!(s.oracle_expected_reward(), 0.5);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = |cfg: CasinoConfig| CasinoEnv::new(cfg).is_err();
        assert!(bad(CasinoConfig { bandits: 1, ..Default::default() }));
        assert!(bad(CasinoConfig { p_a: 1.5, ..Default::default() }));
        assert!(bad(CasinoConfig { p_b: -0.1, ..Default::default() }));
    }
}
