use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Maximum width of a [`Bitstring`].
pub const MAX_BITS: usize = 64;

/// A fixed-width string of classical bits.
///
/// Bit `i` is stored in bit `i` of `value`, and the textual form lists bit 0
/// first: `"01"` has bit 0 clear and bit 1 set (index 2).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring {
    width: u8,
    value: u64,
}

impl Bitstring {
    pub fn new(width: usize, value: u64) -> Result<Self> {
        if width > MAX_BITS {
            return Err(Error::invalid(format!("bitstring width {width} exceeds {MAX_BITS}")));
        }
        if width < MAX_BITS && value >> width != 0 {
            return Err(Error::invalid(format!("value {value} does not fit in {width} bits")));
        }
        Ok(Self { width: width as u8, value })
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let value = bits.iter().enumerate().fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i));
        Self::new(bits.len(), value)
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < self.width());
        (self.value >> i) & 1 == 1
    }

    /// Spin `(-1)^b` of bit `i`.
    pub fn spin(&self, i: usize) -> f64 {
        if self.bit(i) {
            -1.0
        } else {
            1.0
        }
    }

    pub fn hamming_weight(&self) -> u32 {
        self.value.count_ones()
    }

    pub fn hamming_distance(&self, other: &Bitstring) -> u32 {
        (self.value ^ other.value).count_ones()
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.width() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bitstring({self})")
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => {
                    Err(Error::Parse { what: "bitstring", reason: format!("unexpected character {other:?} in {s:?}") })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bits(&bits)
    }
}

impl Serialize for Bitstring {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bitstring {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
