//! Fixed 128-bit digest primitive used for all structural hashing.
//!
//! This is MurmurHash3 x64/128 (Austin Appleby's public-domain function)
//! with the seed pinned to 0. The choice is part of the on-disk format:
//! merge tables and token dictionaries are keyed by these digests, so the
//! function must produce identical bits across platforms and releases.
//! All inputs are canonical little-endian byte serializations built by the
//! callers; multisets are sorted bytewise before hashing.

const C1: u64 = 0x87c3_7b91_1142_53d5;
const C2: u64 = 0x4cf5_ad43_2745_937f;

#[inline]
fn fmix64(mut k: u64) -> u64 {
    k ^= k >> 33;
    k = k.wrapping_mul(0xff51_afd7_ed55_8ccd);
    k ^= k >> 33;
    k = k.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    k ^= k >> 33;
    k
}

#[inline]
fn read_u64_le(bytes: &[u8]) -> u64 {
    u64::from_le_bytes(bytes.try_into().expect("8-byte slice"))
}

/// MurmurHash3 x64/128 with seed 0. The returned value packs the two 64-bit
/// lanes as `(h1 << 64) | h2`, matching the common `{:032x}` rendering.
pub fn digest128(data: &[u8]) -> u128 {
    let mut h1: u64 = 0;
    let mut h2: u64 = 0;
    let nblocks = data.len() / 16;

    for block in 0..nblocks {
        let mut k1 = read_u64_le(&data[block * 16..block * 16 + 8]);
        let mut k2 = read_u64_le(&data[block * 16 + 8..block * 16 + 16]);

        k1 = k1.wrapping_mul(C1);
        k1 = k1.rotate_left(31);
        k1 = k1.wrapping_mul(C2);
        h1 ^= k1;

        h1 = h1.rotate_left(27);
        h1 = h1.wrapping_add(h2);
        h1 = h1.wrapping_mul(5).wrapping_add(0x52dc_e729);

        k2 = k2.wrapping_mul(C2);
        k2 = k2.rotate_left(33);
        k2 = k2.wrapping_mul(C1);
        h2 ^= k2;

        h2 = h2.rotate_left(31);
        h2 = h2.wrapping_add(h1);
        h2 = h2.wrapping_mul(5).wrapping_add(0x3849_5ab5);
    }

    let tail = &data[nblocks * 16..];
    let mut k1: u64 = 0;
    let mut k2: u64 = 0;
    for i in (8..tail.len()).rev() {
        k2 ^= (tail[i] as u64) << ((i - 8) * 8);
    }
    if tail.len() > 8 {
        k2 = k2.wrapping_mul(C2);
        k2 = k2.rotate_left(33);
        k2 = k2.wrapping_mul(C1);
        h2 ^= k2;
    }
    for i in (0..tail.len().min(8)).rev() {
        k1 ^= (tail[i] as u64) << (i * 8);
    }
    if !tail.is_empty() {
        k1 = k1.wrapping_mul(C1);
        k1 = k1.rotate_left(31);
        k1 = k1.wrapping_mul(C2);
        h1 ^= k1;
    }

    h1 ^= data.len() as u64;
    h2 ^= data.len() as u64;
    h1 = h1.wrapping_add(h2);
    h2 = h2.wrapping_add(h1);
    h1 = fmix64(h1);
    h2 = fmix64(h2);
    h1 = h1.wrapping_add(h2);
    h2 = h2.wrapping_add(h1);

    ((h1 as u128) << 64) | (h2 as u128)
}

/// Renders a digest as 32 lowercase hex characters.
pub fn to_hex(digest: u128) -> String {
    format!("{digest:032x}")
}

/// Parses the 32-character lowercase hex rendering produced by [`to_hex`].
pub fn from_hex(hex: &str) -> Option<u128> {
    if hex.len() != 32 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    u128::from_str_radix(hex, 16).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    // Frozen vectors computed with the murmur3 crate (v0.5.2), which follows
    // the reference C++ implementation.
    const VECTORS: &[(&[u8], &str)] = &[
        (b"", "00000000000000000000000000000000"),
        (b"a", "e6b53a48510e895a85555565f6597889"),
        (b"abc", "3ba2744126ca2d52b4963f3f3fad7867"),
        (b"hello world", "ab97467d60eb63b1533f6046eb7f610e"),
        (
            b"The quick brown fox jumps over the lazy dog",
            "7a433ca9c49a9347e34bbc7bbc071b6c",
        ),
    ];

    #[test]
    fn matches_frozen_reference_vectors() {
        for (input, expected) in VECTORS {
            assert_eq!(to_hex(digest128(input)), *expected, "input {input:?}");
        }
    }

    #[test]
    fn matches_reference_crate_on_varied_lengths() {
        // Exercise every tail length and multi-block inputs.
        let mut data = Vec::new();
        for i in 0..64u32 {
            data.push((i.wrapping_mul(37) % 251) as u8);
            let reference = murmur3::murmur3_x64_128(&mut Cursor::new(&data), 0).unwrap();
            assert_eq!(digest128(&data), reference, "length {}", data.len());
        }
    }

    #[test]
    fn hex_round_trip() {
        let d = digest128(b"round trip");
        assert_eq!(from_hex(&to_hex(d)), Some(d));
        assert_eq!(from_hex("zz"), None);
        assert_eq!(from_hex(""), None);
    }
}
