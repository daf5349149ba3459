//! Attack-family taxonomy for NSL-KDD labels.
//!
//! Stratified splitting groups records by the five traffic families. The
//! table covers the KDD-CUP'99 training taxonomy plus the extra attack names
//! that appear only in NSL-KDD test files, so either file can be partitioned.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Normal,
    Dos,
    Probe,
    R2l,
    U2r,
}

pub const ALL_FAMILIES: [Family; 5] = [Family::Normal, Family::Dos, Family::Probe, Family::R2l, Family::U2r];

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Dos => "dos",
            Family::Probe => "probe",
            Family::R2l => "r2l",
            Family::U2r => "u2r",
        }
    }

    pub fn from_str(s: &str) -> Result<Family> {
        match s {
            "normal" => Ok(Family::Normal),
            "dos" => Ok(Family::Dos),
            "probe" => Ok(Family::Probe),
            "r2l" => Ok(Family::R2l),
            "u2r" => Ok(Family::U2r),
            other => Err(Error::Data(format!("unknown family name {other:?}"))),
        }
    }
}

/// Map an NSL-KDD label to its traffic family.
///
/// `synthattack` is the label emitted by the synthetic fixture generator.
pub fn family_of(label: &str) -> Result<Family> {
    let family = match label {
        "normal" => Family::Normal,
        // DoS
        "back" | "land" | "neptune" | "pod" | "smurf" | "teardrop" | "apache2" | "mailbomb"
        | "processtable" | "udpstorm" | "synthattack" => Family::Dos,
        // Probe
        "ipsweep" | "nmap" | "portsweep" | "satan" | "mscan" | "saint" => Family::Probe,
        // R2L
        "ftp_write" | "guess_passwd" | "imap" | "multihop" | "phf" | "spy" | "warezclient"
        | "warezmaster" | "sendmail" | "named" | "snmpgetattack" | "snmpguess" | "xlock"
        | "xsnoop" | "worm" => Family::R2l,
        // U2R
        "buffer_overflow" | "loadmodule" | "perl" | "rootkit" | "httptunnel" | "ps"
        | "sqlattack" | "xterm" => Family::U2r,
        other => {
            return Err(Error::UnknownAttackLabel {
                label: other.to_string(),
            })
        }
    };
    Ok(family)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_labels_map() {
        assert_eq!(family_of("normal").unwrap(), Family::Normal);
        assert_eq!(family_of("neptune").unwrap(), Family::Dos);
        assert_eq!(family_of("satan").unwrap(), Family::Probe);
        assert_eq!(family_of("guess_passwd").unwrap(), Family::R2l);
        assert_eq!(family_of("rootkit").unwrap(), Family::U2r);
        assert_eq!(family_of("synthattack").unwrap(), Family::Dos);
    }

    #[test]
    fn unknown_label_is_an_error() {
        assert!(matches!(
            family_of("quantumworm"),
            Err(Error::UnknownAttackLabel { .. })
        ));
    }
}
