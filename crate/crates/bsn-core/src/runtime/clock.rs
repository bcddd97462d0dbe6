//! Virtual simulation clock.

/// Tick-driven virtual clock. Virtual time is `tick * tick_duration`; the
/// duration is kept in integer milliseconds so timestamps stay clean.
#[derive(Debug, Clone)]
pub struct SimClock {
    tick: u64,
    tick_ms: u64,
}

impl SimClock {
    pub fn new(tick_ms: u64) -> Self {
        assert!(tick_ms > 0, "tick duration must be positive");
        Self { tick: 0, tick_ms }
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Seconds per tick.
    pub fn tick_duration(&self) -> f64 {
        self.tick_ms as f64 / 1000.0
    }

    /// Current virtual time in seconds.
    pub fn now(&self) -> f64 {
        (self.tick * self.tick_ms) as f64 / 1000.0
    }

    pub(crate) fn advance(&mut self) {
        self.tick += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_is_tick_times_duration() {
        let mut clock = SimClock::new(100);
        assert_eq!(clock.now(), 0.0);
        for _ in 0..5 {
            clock.advance();
        }
        assert_eq!(clock.tick(), 5);
        assert_eq!(clock.now(), 0.5);
        assert_eq!(clock.tick_duration(), 0.1);
    }

    #[test]
    fn ticks_never_decrease() {
        let mut clock = SimClock::new(250);
        let mut last = clock.tick();
        for _ in 0..100 {
            clock.advance();
            assert!(clock.tick() > last);
            last = clock.tick();
        }
    }
}
