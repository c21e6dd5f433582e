use std::f64::consts::PI;

/// Cosine annealing with warm restarts. Cycle lengths are
/// `t0, t0·t_mult, t0·t_mult², …` epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarmRestart {
    pub t0: f64,
    pub t_mult: u32,
    pub eta_min: f64,
}

impl WarmRestart {
    /// `(epochs into the current cycle, current cycle length)`
    pub fn position(&self, progress: f64) -> (f64, f64) {
        let mut start = 0.0;
        let mut len = self.t0;
        if self.t_mult <= 1 {
            let k = (progress / len).floor();
            return (progress - k * len, len);
        }
        while progress >= start + len {
            start += len;
            len *= self.t_mult as f64;
        }
        (progress - start, len)
    }

    /// Epoch counts at which the schedule restarts, up to `horizon`.
    pub fn restarts(&self, horizon: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut at = self.t0;
        let mut len = self.t0;
        while at <= horizon {
            out.push(at);
            len *= self.t_mult.max(1) as f64;
            at += len;
        }
        out
    }
}

/// Learning rate after `epoch_progress` (fractional) epochs.
pub fn lr_at(base_lr: f64, schedule: &WarmRestart, epoch_progress: f64) -> f64 {
    let (t_cur, t_i) = schedule.position(epoch_progress.max(0.0));
    schedule.eta_min + 0.5 * (base_lr - schedule.eta_min) * (1.0 + (PI * t_cur / t_i).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEFAULT_RESTARTS: WarmRestart = WarmRestart {
        t0: 3.0,
        t_mult: 2,
        eta_min: 1e-6,
    };

    #[test]
    fn cycle_start_and_end() {
        assert_eq!(lr_at(5e-5, &DEFAULT_RESTARTS, 0.0), 5e-5);
        assert!((lr_at(5e-5, &DEFAULT_RESTARTS, 3.0 - 1e-9) - 1e-6).abs() < 1e-12);
        assert_eq!(lr_at(5e-5, &DEFAULT_RESTARTS, 3.0), 5e-5);
    }

    #[test]
    fn restart_boundaries_follow_geometric_sums() {
        // 3, 3+6, 3+6+12
        assert_eq!(DEFAULT_RESTARTS.restarts(25.0), vec![3.0, 9.0, 21.0]);
        for b in [3.0, 9.0, 21.0] {
            assert_eq!(lr_at(5e-5, &DEFAULT_RESTARTS, b), 5e-5);
            assert!(lr_at(5e-5, &DEFAULT_RESTARTS, b - 1e-6) < 1.01e-6);
        }
    }

    #[test]
    fn constant_cycles_when_mult_is_one() {
        let s = WarmRestart {
            t0: 2.0,
            t_mult: 1,
            eta_min: 0.0,
        };
        assert_eq!(lr_at(1.0, &s, 1.0), lr_at(1.0, &s, 5.0));
    }
}
