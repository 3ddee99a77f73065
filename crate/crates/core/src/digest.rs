use sha2::{Digest, Sha256};

pub(crate) fn sha256_bytes(data: &[u8]) -> [u8; 32] {
    let mut out = [0u8; 32];
    out.copy_from_slice(&Sha256::digest(data));
    out
}

pub(crate) fn sha256_hex(data: &[u8]) -> String {
    hex::encode(sha256_bytes(data))
}
