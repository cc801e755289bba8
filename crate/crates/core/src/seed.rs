//! Counter-based seed derivation.
//!
//! A child seed depends only on `(master, key, counter)`, so adding or removing
//! configurations never shifts the randomness of the others.

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, key: &str, counter: u64) -> u64 {
    splitmix64(splitmix64(master ^ fnv1a(key.as_bytes())).wrapping_add(counter))
}
