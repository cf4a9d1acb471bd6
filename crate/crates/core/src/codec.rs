//! Canonical length-prefixed encoding shared by trie nodes, accounts,
//! transactions, lien tokens and block headers.
//!
//! Layout: `tag (1 byte) ‖ field count (u32 BE) ‖ { length (u32 BE) ‖ bytes }*`.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("input truncated")]
    Truncated,
    #[error("trailing bytes after encoding")]
    Trailing,
    #[error("unexpected tag {found:#04x}, expected {expected:#04x}")]
    Tag { expected: u8, found: u8 },
    #[error("expected {expected} fields, found {found}")]
    FieldCount { expected: usize, found: usize },
    #[error("field {index} has invalid length {len}")]
    FieldLength { index: usize, len: usize },
    #[error("field {0} is not valid UTF-8")]
    Utf8(usize),
}

pub fn encode_fields<F: AsRef<[u8]>>(tag: u8, fields: &[F]) -> Vec<u8> {
    let body: usize = fields.iter().map(|f| 4 + f.as_ref().len()).sum();
    let mut out = Vec::with_capacity(5 + body);
    out.push(tag);
    out.extend_from_slice(&(fields.len() as u32).to_be_bytes());
    for f in fields {
        let f = f.as_ref();
        out.extend_from_slice(&(f.len() as u32).to_be_bytes());
        out.extend_from_slice(f);
    }
    out
}

/// Splits an encoding into its tag and borrowed fields. The whole input
/// must be consumed.
pub fn decode_fields(bytes: &[u8]) -> Result<(u8, Vec<&[u8]>), CodecError> {
    let (&tag, mut rest) = bytes.split_first().ok_or(CodecError::Truncated)?;
    let count = take_u32(&mut rest)? as usize;
    // Each field needs at least its 4-byte length prefix.
    if count > rest.len() / 4 {
        return Err(CodecError::Truncated);
    }
    let mut fields = Vec::with_capacity(count);
    for _ in 0..count {
        let len = take_u32(&mut rest)? as usize;
        if rest.len() < len {
            return Err(CodecError::Truncated);
        }
        let (field, tail) = rest.split_at(len);
        fields.push(field);
        rest = tail;
    }
    if !rest.is_empty() {
        return Err(CodecError::Trailing);
    }
    Ok((tag, fields))
}

/// Decodes and checks both the tag and the exact field count.
pub fn decode_exact(bytes: &[u8], tag: u8, count: usize) -> Result<Vec<&[u8]>, CodecError> {
    let (found, fields) = decode_fields(bytes)?;
    if found != tag {
        return Err(CodecError::Tag { expected: tag, found });
    }
    if fields.len() != count {
        return Err(CodecError::FieldCount { expected: count, found: fields.len() });
    }
    Ok(fields)
}

fn take_u32(rest: &mut &[u8]) -> Result<u32, CodecError> {
    if rest.len() < 4 {
        return Err(CodecError::Truncated);
    }
    let (head, tail) = rest.split_at(4);
    *rest = tail;
    Ok(u32::from_be_bytes(head.try_into().unwrap()))
}

pub fn fixed<const N: usize>(fields: &[&[u8]], index: usize) -> Result<[u8; N], CodecError> {
    <[u8; N]>::try_from(fields[index]).map_err(|_| CodecError::FieldLength {
        index,
        len: fields[index].len(),
    })
}

pub fn u64_field(fields: &[&[u8]], index: usize) -> Result<u64, CodecError> {
    fixed::<8>(fields, index).map(u64::from_be_bytes)
}

pub fn u128_field(fields: &[&[u8]], index: usize) -> Result<u128, CodecError> {
    fixed::<16>(fields, index).map(u128::from_be_bytes)
}

pub fn str_field(fields: &[&[u8]], index: usize) -> Result<String, CodecError> {
    String::from_utf8(fields[index].to_vec()).map_err(|_| CodecError::Utf8(index))
}
