//! Strict `0x`-prefixed lowercase hex, used by every exported byte field.
//!
//! Uppercase digits are rejected so that each byte string has exactly one
//! textual form; exported files can then be checked for canonical bytes.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HexError {
    #[error("missing 0x prefix")]
    MissingPrefix,
    #[error("invalid hex digit {0:?}")]
    BadDigit(char),
    #[error("odd number of hex digits")]
    OddLength,
    #[error("expected {expected} bytes, found {found}")]
    WrongLength { expected: usize, found: usize },
}

pub fn encode_prefixed(bytes: &[u8]) -> String {
    format!("0x{}", hex::encode(bytes))
}

pub fn parse_bytes(s: &str) -> Result<Vec<u8>, HexError> {
    let body = s.strip_prefix("0x").ok_or(HexError::MissingPrefix)?;
    if let Some(c) = body.chars().find(|c| !matches!(c, '0'..='9' | 'a'..='f')) {
        return Err(HexError::BadDigit(c));
    }
    if body.len() % 2 != 0 {
        return Err(HexError::OddLength);
    }
    Ok(hex::decode(body).expect("validated hex"))
}

pub fn parse_prefixed<const N: usize>(s: &str) -> Result<[u8; N], HexError> {
    let bytes = parse_bytes(s)?;
    <[u8; N]>::try_from(bytes.as_slice()).map_err(|_| HexError::WrongLength {
        expected: N,
        found: bytes.len(),
    })
}

/// `#[serde(with = "crate::hexfmt::bytes")]` for `Vec<u8>` fields.
pub mod bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::encode_prefixed(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_bytes(&s).map_err(serde::de::Error::custom)
    }
}
