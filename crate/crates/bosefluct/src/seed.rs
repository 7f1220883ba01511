//! Replica streams. The key of a ChaCha8 generator is derived from the
//! master seed and `N` with SplitMix64; the replica index selects the
//! ChaCha stream. A replica's draws therefore depend only on
//! `(master, N, replica)`, never on which thread runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream_key(master: u64, n: usize) -> [u8; 32] {
    let mut state = master;
    // Mix N in after one step so that (m, n) and (n, m) differ.
    splitmix64(&mut state);
    state ^= (n as u64).wrapping_mul(0xd6e8_feb8_6659_fd93);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

pub fn replica_rng(master: u64, n: usize, replica: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(stream_key(master, n));
    rng.set_stream(replica as u64);
    rng
}
