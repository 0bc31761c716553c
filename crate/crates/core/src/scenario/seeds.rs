use sha2::{Digest, Sha256};

/// Child seed for one random role of one trial: the first eight bytes of
/// `SHA-256(master ‖ len(scenario) ‖ scenario ‖ trial ‖ role)`.
pub fn derive_seed(master_seed: u64, scenario: &str, trial: u64, role: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update((scenario.len() as u64).to_le_bytes());
    h.update(scenario.as_bytes());
    h.update(trial.to_le_bytes());
    h.update(role.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub mod roles {
    pub const BITS: &str = "desired-bits";
    pub const DESIRED_CHANNEL: &str = "desired-channel";
    pub const NOISE: &str = "noise";

    pub fn interferer_stream(j: usize) -> String {
        format!("interferer-{j}-stream")
    }

    pub fn interferer_channel(j: usize) -> String {
        format!("interferer-{j}-channel")
    }
}

/// Order-sensitive digest of a sample buffer.
pub fn checksum(samples: &[num_complex::Complex64]) -> u64 {
    let mut h = Sha256::new();
    for s in samples {
        h.update(s.re.to_le_bytes());
        h.update(s.im.to_le_bytes());
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("digest has 32 bytes"))
}
