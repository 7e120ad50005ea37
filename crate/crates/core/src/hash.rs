use serde::Serialize;
use sha2::{Digest, Sha256};

/// Hex SHA-256 of the canonical JSON encoding of `value`.
///
/// Every store keeps its state in ordered maps, so equal states always
/// encode to equal bytes.
pub fn content_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("store state is always serializable");
    hex::encode(Sha256::digest(&bytes))
}
