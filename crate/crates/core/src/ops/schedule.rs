/// Polynomial learning-rate decay: `base_lr * (1 - step / max_steps)^power`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolyDecay {
    pub base_lr: f64,
    pub max_steps: u64,
    pub power: f64,
}

impl PolyDecay {
    pub const DEFAULT_POWER: f64 = 0.9;

    pub fn new(base_lr: f64, max_steps: u64) -> Self {
        Self {
            base_lr,
            max_steps,
            power: Self::DEFAULT_POWER,
        }
    }

    /// Learning rate at `step`; zero from `max_steps` onwards.
    pub fn lr_at_step(&self, step: u64) -> f64 {
        if step >= self.max_steps {
            return 0.0;
        }
        let remaining = 1.0 - step as f64 / self.max_steps as f64;
        self.base_lr * remaining.powf(self.power)
    }
}
