//! Content hashing shared by graph identities, checksums and cache keys.

use sha2::{Digest, Sha256};

/// Feeds length-prefixed fields into SHA-256 so that field boundaries are
/// unambiguous.
#[derive(Default, Clone)]
pub struct FieldHasher {
    inner: Sha256,
}

impl FieldHasher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(&mut self, bytes: impl AsRef<[u8]>) -> &mut Self {
        let bytes = bytes.as_ref();
        self.inner.update((bytes.len() as u64).to_le_bytes());
        self.inner.update(bytes);
        self
    }

    pub fn finish128(&self) -> u128 {
        let digest = self.inner.clone().finalize();
        let mut buf = [0u8; 16];
        buf.copy_from_slice(&digest[..16]);
        u128::from_be_bytes(buf)
    }

    pub fn finish_hex(&self) -> String {
        format!("{:032x}", self.finish128())
    }
}

/// 128-bit SHA-256 prefix of `bytes`, lowercase hex.
pub fn digest_hex(bytes: impl AsRef<[u8]>) -> String {
    let digest = Sha256::digest(bytes.as_ref());
    hex::encode(&digest[..16])
}

/// Full SHA-256 of `bytes`, lowercase hex.
pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}

/// Canonical pretty JSON with a trailing LF.
pub fn canonical_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable value");
    out.push(b'\n');
    out
}

/// Byte offset of a serde_json error position within `input`.
pub fn json_error_offset(input: &[u8], err: &serde_json::Error) -> usize {
    let (line, column) = (err.line(), err.column());
    if line == 0 {
        return 0;
    }
    let mut current = 1;
    let mut offset = 0;
    for (i, b) in input.iter().enumerate() {
        if current == line {
            offset = i;
            break;
        }
        if *b == b'\n' {
            current += 1;
            offset = i + 1;
        }
    }
    (offset + column.saturating_sub(1)).min(input.len())
}
