//! Fixed-point simulation time.
//!
//! All instants and durations are whole counts of milliseconds, so schedule
//! arithmetic is exact and two runs can never drift apart through float
//! accumulation. Constructors that accept real-valued seconds round to the
//! nearest millisecond (half away from zero) exactly once.
//!
//! The 0.1 s *tick* is the quantization unit of NAV indices only: a NAV index
//! `k` stands for a wait of `k` ticks.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

/// Milliseconds per NAV tick (0.1 s).
pub const MILLIS_PER_TICK: u64 = 100;

/// A non-negative instant or duration, stored as whole milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Time(u64);

impl Time {
    pub const ZERO: Time = Time(0);

    pub const fn from_millis(ms: u64) -> Time {
        Time(ms)
    }

    /// Rounds to the nearest millisecond, half away from zero.
    ///
    /// Panics if `secs` is negative or not finite; callers validate inputs
    /// before they reach time arithmetic.
    pub fn from_secs_f64(secs: f64) -> Time {
        assert!(
            secs.is_finite() && secs >= 0.0,
            "time must be a finite non-negative number of seconds, got {secs}"
        );
        Time((secs * 1000.0).round() as u64)
    }

    /// A whole number of 0.1 s NAV ticks.
    pub const fn from_ticks(ticks: u64) -> Time {
        Time(ticks * MILLIS_PER_TICK)
    }

    pub const fn as_millis(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    /// Exact tick count, or `None` when the value is not on the tick grid.
    pub fn to_ticks_exact(self) -> Option<u64> {
        (self.0 % MILLIS_PER_TICK == 0).then_some(self.0 / MILLIS_PER_TICK)
    }

    pub fn checked_sub(self, rhs: Time) -> Option<Time> {
        self.0.checked_sub(rhs.0).map(Time)
    }

    /// `self − rhs`, clamped at zero.
    pub fn saturating_sub(self, rhs: Time) -> Time {
        Time(self.0.saturating_sub(rhs.0))
    }

    /// Integer scaling; exact.
    pub fn scaled(self, factor: u64) -> Time {
        Time(self.0 * factor)
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl AddAssign for Time {
    fn add_assign(&mut self, rhs: Time) {
        self.0 += rhs.0;
    }
}

impl Sub for Time {
    type Output = Time;
    /// Panics on underflow: a negative instant is a scheduling bug.
    fn sub(self, rhs: Time) -> Time {
        Time(
            self.0
                .checked_sub(rhs.0)
                .expect("time subtraction underflow"),
        )
    }
}

impl fmt::Display for Time {
    /// Seconds with three decimals, e.g. `19.066`. Fixed width after the
    /// point keeps CSV output byte-stable.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:03}", self.0 / 1000, self.0 % 1000)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_secs_rounds_to_nearest_millisecond() {
        assert_eq!(Time::from_secs_f64(3.0).as_millis(), 3000);
        assert_eq!(Time::from_secs_f64(3.3333).as_millis(), 3333);
        assert_eq!(Time::from_secs_f64(5000.0 / 1500.0).as_millis(), 3333);
        assert_eq!(Time::from_secs_f64(0.0004).as_millis(), 0);
        assert_eq!(Time::from_secs_f64(0.0006).as_millis(), 1);
    }

    #[test]
    fn tick_conversions_are_lossless_for_tick_multiples() {
        for (secs, ticks) in [(3.0, 30), (7.0, 70), (0.1, 1), (39.0, 390), (0.0, 0)] {
            let t = Time::from_secs_f64(secs);
            assert_eq!(t.to_ticks_exact(), Some(ticks));
            assert_eq!(Time::from_ticks(ticks), t);
        }
        assert_eq!(Time::from_millis(3333).to_ticks_exact(), None);
    }

    #[test]
    fn display_is_fixed_width_seconds() {
        assert_eq!(Time::from_millis(19066).to_string(), "19.066");
        assert_eq!(Time::from_millis(3000).to_string(), "3.000");
        assert_eq!(Time::ZERO.to_string(), "0.000");
        assert_eq!(Time::from_millis(7).to_string(), "0.007");
    }

    #[test]
    fn arithmetic_is_exact() {
        let a = Time::from_millis(1333);
        assert_eq!(a.scaled(3).as_millis(), 3999);
        assert_eq!((a + Time::from_millis(7)).as_millis(), 1340);
        assert_eq!((a - Time::from_millis(333)).as_millis(), 1000);
        assert_eq!(a.saturating_sub(Time::from_millis(2000)), Time::ZERO);
    }

    #[test]
    #[should_panic(expected = "underflow")]
    fn subtraction_underflow_panics() {
        let _ = Time::from_millis(1) - Time::from_millis(2);
    }
}
