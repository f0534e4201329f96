//! Musical time shared by every layer: time signatures and exact quarter-note
//! positions.

use core::fmt;

use num_rational::Ratio;

/// An exact position or length measured in quarter notes.
pub type Quarters = Ratio<i64>;

/// A time signature such as 4/4 or 6/8. The denominator is the actual note
/// value (4 = quarter), not the MIDI power-of-two exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeSignature {
    pub numerator: u8,
    pub denominator: u8,
}

impl TimeSignature {
    pub const COMMON: TimeSignature = TimeSignature { numerator: 4, denominator: 4 };

    /// Returns `None` unless the numerator is non-zero and the denominator is
    /// a power of two no larger than 64.
    pub fn new(numerator: u8, denominator: u8) -> Option<Self> {
        if numerator == 0 || denominator == 0 || !denominator.is_power_of_two() || denominator > 64 {
            return None;
        }
        Some(Self { numerator, denominator })
    }

    /// Length of one bar in quarter notes.
    pub fn bar_quarters(&self) -> Quarters {
        Ratio::new(4 * i64::from(self.numerator), i64::from(self.denominator))
    }

    /// Length of one bar in MIDI ticks, if it is a whole number of ticks.
    pub fn bar_ticks(&self, ticks_per_quarter: u32) -> Option<u64> {
        let num = 4 * u64::from(ticks_per_quarter) * u64::from(self.numerator);
        let den = u64::from(self.denominator);
        (num % den == 0).then_some(num / den)
    }

    /// Length of one bar in grid steps (`grid` steps per quarter), if whole.
    pub fn bar_steps(&self, grid: u32) -> Option<u32> {
        let num = 4 * grid * u32::from(self.numerator);
        let den = u32::from(self.denominator);
        num.is_multiple_of(den).then_some(num / den)
    }

    /// Compound meters (6/8, 9/8, 12/8, ...) group eighths in threes.
    pub fn is_compound(&self) -> bool {
        self.denominator >= 8 && self.numerator > 3 && self.numerator.is_multiple_of(3)
    }
}

impl fmt::Display for TimeSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Converts an exact quarter position to whole grid steps, if it lies on the grid.
pub fn quarters_to_steps(q: Quarters, grid: u32) -> Option<i64> {
    let scaled = q * Ratio::from_integer(i64::from(grid));
    scaled.is_integer().then(|| scaled.to_integer())
}

pub fn steps_to_quarters(steps: i64, grid: u32) -> Quarters {
    Ratio::new(steps, i64::from(grid))
}
