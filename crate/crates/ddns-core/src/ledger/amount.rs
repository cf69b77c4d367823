//! Currency amounts in fixed-point milli-units, so fee arithmetic and the
//! conservation invariant are exact (0.1 phi is 100 milli, no floats).

use std::fmt;

use serde::{Deserialize, Serialize};

pub const MILLI_PER_PHI: u64 = 1000;

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Amount(u64);

impl Amount {
    pub const ZERO: Amount = Amount(0);

    pub const fn from_milli(milli: u64) -> Self {
        Amount(milli)
    }

    pub const fn from_phi(phi: u64) -> Self {
        Amount(phi * MILLI_PER_PHI)
    }

    /// Converts a phi value that may be fractional (as read from config
    /// files); rejects anything that does not land on a whole milli.
    pub fn from_phi_f64(phi: f64) -> Result<Self, String> {
        if !phi.is_finite() || phi < 0.0 {
            return Err(format!("bad amount: {phi}"));
        }
        let milli = phi * MILLI_PER_PHI as f64;
        let rounded = milli.round();
        if (milli - rounded).abs() > 1e-6 {
            return Err(format!("amount {phi} is not a multiple of 0.001"));
        }
        Ok(Amount(rounded as u64))
    }

    pub const fn milli(self) -> u64 {
        self.0
    }

    pub fn as_phi_f64(self) -> f64 {
        self.0 as f64 / MILLI_PER_PHI as f64
    }

    pub fn checked_add(self, other: Amount) -> Option<Amount> {
        self.0.checked_add(other.0).map(Amount)
    }

    pub fn checked_sub(self, other: Amount) -> Option<Amount> {
        self.0.checked_sub(other.0).map(Amount)
    }

    pub fn saturating_add(self, other: Amount) -> Amount {
        Amount(self.0.saturating_add(other.0))
    }
}

impl fmt::Display for Amount {
    /// Renders in phi with trailing zeros trimmed: 100 milli is "0.1".
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / MILLI_PER_PHI;
        let frac = self.0 % MILLI_PER_PHI;
        if frac == 0 {
            return write!(f, "{whole}");
        }
        let frac = format!("{frac:03}");
        write!(f, "{whole}.{}", frac.trim_end_matches('0'))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tenth_of_a_phi_is_exact() {
        let fee = Amount::from_phi_f64(0.1).unwrap();
        assert_eq!(fee.milli(), 100);
        assert_eq!(fee.to_string(), "0.1");
    }

    #[test]
    fn display_trims() {
        assert_eq!(Amount::from_phi(5).to_string(), "5");
        assert_eq!(Amount::from_milli(5025).to_string(), "5.025");
        assert_eq!(Amount::from_milli(500).to_string(), "0.5");
        assert_eq!(Amount::ZERO.to_string(), "0");
    }

    #[test]
    fn rejects_sub_milli_amounts() {
        assert!(Amount::from_phi_f64(0.0001).is_err());
        assert!(Amount::from_phi_f64(-1.0).is_err());
        assert!(Amount::from_phi_f64(f64::NAN).is_err());
    }

    #[test]
    fn checked_arithmetic() {
        let a = Amount::from_phi(1);
        let b = Amount::from_milli(100);
        assert_eq!(a.checked_sub(b), Some(Amount::from_milli(900)));
        assert_eq!(b.checked_sub(a), None);
        assert_eq!(a.checked_add(b), Some(Amount::from_milli(1100)));
    }

    #[test]
    fn serializes_as_plain_milli() {
        let json = serde_json::to_string(&Amount::from_milli(100)).unwrap();
        assert_eq!(json, "100");
    }
}
