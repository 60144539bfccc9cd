use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};

/// First 16 bytes of a SHA-256 over the state's `Hash` byte stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateDigest(pub [u8; 16]);

struct ShaHasher(Sha256);

impl Hasher for ShaHasher {
    fn write(&mut self, bytes: &[u8]) {
        self.0.update(bytes);
    }
    fn finish(&self) -> u64 {
        let out = self.0.clone().finalize();
        u64::from_le_bytes(out[..8].try_into().expect("8 bytes"))
    }
}

pub fn state_digest<S: Hash + ?Sized>(state: &S) -> StateDigest {
    let mut h = ShaHasher(Sha256::new());
    state.hash(&mut h);
    let out = h.0.finalize();
    let mut bytes = [0u8; 16];
    bytes.copy_from_slice(&out[..16]);
    StateDigest(bytes)
}

impl fmt::Display for StateDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl Serialize for StateDigest {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
