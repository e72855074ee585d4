//! Domain-separated, platform-stable RNG derivation.
//!
//! Every random decision in the crate flows from a master seed through
//! [`derive_rng`]. The ChaCha key is a SHA-256 digest of a domain tag plus
//! the integer context (class id, instance seed, repetition index, ...), so
//! streams never collide across subsystems and results do not depend on the
//! platform, the number of worker threads, or iteration order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Derives an independent RNG from a domain tag and integer context words.
pub fn derive_rng(domain: &str, parts: &[u64]) -> ChaCha12Rng {
    let mut hasher = Sha256::new();
    hasher.update(domain.as_bytes());
    hasher.update([0u8]);
    for p in parts {
        hasher.update(p.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha12Rng::from_seed(key)
}

/// Hex digest of arbitrary bytes; used to fingerprint shared artifacts such
/// as the sample matrix recorded in dataset manifests.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_context_same_stream() {
        let mut a = derive_rng("test", &[1, 2, 3]);
        let mut b = derive_rng("test", &[1, 2, 3]);
        for _ in 0..32 {
            assert_eq!(a.random::<u64>(), b.random::<u64>());
        }
    }

    #[test]
    fn different_domain_different_stream() {
        let mut a = derive_rng("test-a", &[7]);
        let mut b = derive_rng("test-b", &[7]);
        let va: Vec<u64> = (0..8).map(|_| a.random()).collect();
        let vb: Vec<u64> = (0..8).map(|_| b.random()).collect();
        assert_ne!(va, vb);
    }

    #[test]
    fn digest_is_stable() {
        // Pinned so manifests hashed on different machines stay comparable.
        assert_eq!(
            sha256_hex(b"landscape"),
            "acb955df82b85f26ecc8de1049fab7aa1059b8b42c89a9261bb99d3caae9a62a"
        );
    }
}
