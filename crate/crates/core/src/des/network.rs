//! Message delivery model.
//!
//! The default model is a fixed latency with no jitter, no loss, and no
//! reordering. The non-default settings exist to stress the protocol's
//! safety argument: loss drops a message outright, jitter widens the delay
//! uniformly, and reorder draws an extra delay in `[0, 2*latency)` so later
//! sends can overtake earlier ones. All draws come from one seeded stream.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::time::SimTime;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeliveryModel {
    pub latency_s: Scalar,
    pub jitter_s: Scalar,
    pub loss: Scalar,
    pub reorder: bool,
    pub seed: u64,
}

impl Default for DeliveryModel {
    fn default() -> Self {
        DeliveryModel { latency_s: 0.05, jitter_s: 0.0, loss: 0.0, reorder: false, seed: 0 }
    }
}

impl DeliveryModel {
    pub fn validate(&self) -> Result<(), String> {
        if self.latency_s < 0.0 || self.jitter_s < 0.0 {
            return Err("latency and jitter must be nonnegative".into());
        }
        if !(0.0..=1.0).contains(&self.loss) {
            return Err("loss probability must be in [0, 1]".into());
        }
        Ok(())
    }
}

/// Stateful delivery sampler plus counters.
pub struct Network {
    model: DeliveryModel,
    rng: ChaCha8Rng,
    pub sent: u64,
    pub delivered_scheduled: u64,
    pub dropped: u64,
    pub dead_letter: u64,
}

impl Network {
    pub fn new(model: DeliveryModel) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
        rng.set_stream(0x4e455457);
        Network { model, rng, sent: 0, delivered_scheduled: 0, dropped: 0, dead_letter: 0 }
    }

    /// Samples the delivery delay for one send, or `None` when the message
    /// is lost. Self-addressed messages never drop; the loss model applies
    /// to the air interface between distinct aircraft.
    pub fn sample_delay(&mut self, self_addressed: bool) -> Option<SimTime> {
        self.sent += 1;
        if !self_addressed && self.model.loss > 0.0 && self.rng.random_range(0.0..1.0) < self.model.loss
        {
            self.dropped += 1;
            return None;
        }
        let mut delay = self.model.latency_s;
        if self.model.jitter_s > 0.0 {
            delay += self.rng.random_range(0.0..self.model.jitter_s);
        }
        if self.model.reorder {
            delay += self.rng.random_range(0.0..(2.0 * self.model.latency_s).max(1e-6));
        }
        self.delivered_scheduled += 1;
        Some(SimTime::from_secs_f64(delay))
    }

    pub fn model(&self) -> &DeliveryModel {
        &self.model
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_latency_is_exact() {
        let mut net = Network::new(DeliveryModel::default());
        assert_eq!(net.sample_delay(false), Some(SimTime::from_secs_f64(0.05)));
    }

    #[test]
    fn full_loss_drops_everything() {
        let mut net = Network::new(DeliveryModel { loss: 1.0, ..Default::default() });
        assert_eq!(net.sample_delay(false), None);
        assert_eq!(net.dropped, 1);
        assert_eq!(net.sample_delay(true), Some(SimTime::from_secs_f64(0.05)), "self sends never drop");
    }

    #[test]
    fn seeded_jitter_is_reproducible() {
        let model = DeliveryModel { jitter_s: 0.1, seed: 42, ..Default::default() };
        let a: Vec<_> = {
            let mut n = Network::new(model);
            (0..100).map(|_| n.sample_delay(false)).collect()
        };
        let b: Vec<_> = {
            let mut n = Network::new(model);
            (0..100).map(|_| n.sample_delay(false)).collect()
        };
        assert_eq!(a, b);
    }
}
