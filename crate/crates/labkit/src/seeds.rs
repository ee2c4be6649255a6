fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of run `(grid, repeat)` under `master`.
pub fn derive_seed(master: u64, grid: u64, repeat: u64) -> u64 {
    mix(mix(mix(master) ^ grid) ^ repeat.rotate_left(32))
}
