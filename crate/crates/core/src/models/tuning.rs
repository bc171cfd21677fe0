//! Adaptive random-walk proposal scale.

const TARGET_RATE: f64 = 0.44;
const BATCH: u32 = 20;
const GAIN: f64 = 3.0;

/// Proposal standard deviation tuned toward a 0.44 acceptance rate.
///
/// While adapting, every `BATCH` proposals the log scale moves by
/// `GAIN * (rate - 0.44) / sqrt(k)` for the k-th batch. Once adaptation ends
/// the scale is fixed and only the counters move.
#[derive(Clone, Debug)]
pub struct RwScale {
    ln_scale: f64,
    batch_accepted: u32,
    batch_tries: u32,
    batches: u32,
    accepted: u64,
    tries: u64,
}

impl RwScale {
    pub fn new(scale: f64) -> Self {
        Self {
            ln_scale: scale.ln(),
            batch_accepted: 0,
            batch_tries: 0,
            batches: 0,
            accepted: 0,
            tries: 0,
        }
    }

    #[inline]
    pub fn scale(&self) -> f64 {
        self.ln_scale.exp()
    }

    pub fn record(&mut self, accepted: bool, adapt: bool) {
        self.tries += 1;
        self.accepted += accepted as u64;
        if !adapt {
            return;
        }
        self.batch_tries += 1;
        self.batch_accepted += accepted as u32;
        if self.batch_tries == BATCH {
            self.batches += 1;
            let rate = self.batch_accepted as f64 / BATCH as f64;
            self.ln_scale += GAIN * (rate - TARGET_RATE) / (self.batches as f64).sqrt();
            self.batch_tries = 0;
            self.batch_accepted = 0;
        }
    }

    pub fn reset_counts(&mut self) {
        self.accepted = 0;
        self.tries = 0;
        self.batch_accepted = 0;
        self.batch_tries = 0;
    }

    /// Acceptance rate since the last reset; `NaN` before any proposal.
    pub fn rate(&self) -> f64 {
        if self.tries == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.tries as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::RngStream;

    #[test]
    fn adapts_toward_target_on_a_normal_target() {
        // RW Metropolis on N(0, 1) starting from a bad scale
        let mut rng = RngStream::new(3, 0);
        let mut tune = RwScale::new(50.0);
        let mut x = 0.0f64;
        for it in 0..6000 {
            let adapt = it < 3000;
            if it == 3000 {
                tune.reset_counts();
            }
            let prop = x + tune.scale() * crate::prob::sample::std_normal(&mut rng);
            let ok = crate::models::accept(&mut rng, 0.5 * (x * x - prop * prop));
            if ok {
                x = prop;
            }
            tune.record(ok, adapt);
        }
        let rate = tune.rate();
        assert!((0.3..0.6).contains(&rate), "rate {rate}");
        assert!(tune.scale() > 1.0 && tune.scale() < 5.0, "scale {}", tune.scale());
    }

    #[test]
    fn frozen_scale_does_not_move() {
        let mut tune = RwScale::new(0.7);
        for k in 0..500 {
            tune.record(k % 3 == 0, false);
        }
        assert_eq!(tune.scale(), 0.7f64.ln().exp());
        assert!((tune.rate() - 167.0 / 500.0).abs() < 1e-12);
    }
}
