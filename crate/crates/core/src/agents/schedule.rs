use super::AgentError;

/// Exponential retraining: the model is refit once the buffer holds
/// `N`, `K·N`, `K²·N`, ... triplets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetrainSchedule {
    initial: usize,
    growth: usize,
    next: usize,
}

impl RetrainSchedule {
    pub fn new(initial: usize, growth: usize) -> Result<Self, AgentError> {
        if initial == 0 {
            return Err(AgentError::Config("initial retrain size must be positive".into()));
        }
        if growth < 2 {
            return Err(AgentError::Config(format!(
                "retrain growth factor must be at least 2, got {growth}"
            )));
        }
        Ok(Self {
            initial,
            growth,
            next: initial,
        })
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn growth(&self) -> usize {
        self.growth
    }

    pub fn next_retrain(&self) -> usize {
        self.next
    }

    pub fn is_due(&self, observed: usize) -> bool {
        observed >= self.next
    }

    /// Moves to the next point of the geometric sequence.
    pub fn advance(&mut self) {
        self.next = self.next.saturating_mul(self.growth);
    }

    /// Whether `size` is one of `N·K^j`.
    pub fn contains(&self, size: usize) -> bool {
        let mut point = self.initial;
        while point < size {
            point = point.saturating_mul(self.growth);
            if point == usize::MAX {
                return false;
            }
        }
        point == size
    }
}
