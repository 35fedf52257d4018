//! Counter-based random streams.
//!
//! Every stream is addressed by a master seed and a path of integer labels
//! (run / iteration / candidate / trial). Its output is a pure function of
//! `(seed, path, draw index)`: the generator is Philox4x32-10 keyed by a hash of
//! the path, and the draw index is the counter. Streams fill a buffer in blocks
//! instead of generating one variate per call; since the counter fully
//! determines each value, the buffer size never changes the sequence.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // float math resolves through this trait under no_std
use num_traits::Float;


use crate::error::{Error, Result};

/// Generator family recorded in result manifests.
pub const GENERATOR_FAMILY: &str = "philox4x32-10";
/// Bumped whenever the mapping from `(seed, path, index)` to values changes.
pub const GENERATOR_VERSION: u32 = 1;
/// Default number of uniforms generated per refill.
pub const DEFAULT_BUFFER: usize = 4096;
const FIRST_FILL: usize = 16;

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

/// One Philox4x32 block with 10 rounds.
#[inline(always)]
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

const fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a textual label into a path component (FNV-1a).
pub const fn label(name: &str) -> u64 {
    let bytes = name.as_bytes();
    let mut hash = 0xCBF2_9CE4_8422_2325u64;
    let mut i = 0;
    while i < bytes.len() {
        hash ^= bytes[i] as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
        i += 1;
    }
    hash
}

/// 128-bit identity of a stream, derived from the seed and its path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    key: u64,
    nonce: u64,
}

impl StreamId {
    pub const fn root(master_seed: u64) -> Self {
        StreamId {
            key: splitmix64(master_seed),
            nonce: splitmix64(master_seed ^ 0x6A09_E667_F3BC_C908),
        }
    }

    pub const fn child(self, index: u64) -> Self {
        let h = splitmix64(index ^ 0x3C6E_F372_FE94_F82B);
        StreamId {
            key: splitmix64(self.key ^ h),
            nonce: splitmix64(self.nonce.rotate_left(23) ^ h ^ 0xA54F_F53A_5F1D_36F1),
        }
    }

    pub fn descend(self, path: &[u64]) -> Self {
        path.iter().fold(self, |id, &p| id.child(p))
    }

    #[inline(always)]
    fn block(self, index: u64) -> [u32; 4] {
        philox4x32_10(
            [
                index as u32,
                (index >> 32) as u32,
                self.nonce as u32,
                (self.nonce >> 32) as u32,
            ],
            [self.key as u32, (self.key >> 32) as u32],
        )
    }
}

#[inline(always)]
fn to_unit_interval(bits: u64) -> f64 {
    // 53 random bits mapped onto (0, 1].
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A buffered random stream; single owner, addressable by path.
#[derive(Debug, Clone)]
pub struct RngStream {
    id: StreamId,
    buffer: Vec<f64>,
    capacity: usize,
    // Default streams start with small refills that double up to `capacity`,
    // so short-lived streams stay cheap.
    fill: usize,
    ramp: bool,
    cursor: usize,
    next_draw: u64,
    spare_normal: Option<f64>,
}

impl RngStream {
    /// Stream for `path` under `master_seed`, with the default buffer size.
    pub fn seeded(master_seed: u64, path: &[u64]) -> Self {
        Self::from_id(StreamId::root(master_seed).descend(path))
    }

    pub fn from_id(id: StreamId) -> Self {
        RngStream {
            id,
            buffer: Vec::new(),
            capacity: DEFAULT_BUFFER,
            fill: FIRST_FILL.min(DEFAULT_BUFFER),
            ramp: true,
            cursor: 0,
            next_draw: 0,
            spare_normal: None,
        }
    }

    /// Sets the refill block size; every refill then generates exactly `size`
    /// draws. The output sequence is unaffected.
    pub fn with_buffer_size(mut self, size: usize) -> Self {
        self.capacity = size.max(1);
        self.fill = self.capacity;
        self.ramp = false;
        self
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    pub fn buffer_size(&self) -> usize {
        self.capacity
    }

    /// A fresh stream one level below this one. Independent of how much of the
    /// parent has been consumed.
    pub fn child(&self, index: u64) -> Self {
        let mut child = RngStream::from_id(self.id.child(index));
        child.capacity = self.capacity;
        child.ramp = self.ramp;
        child.fill = if self.ramp { FIRST_FILL.min(self.capacity) } else { self.capacity };
        child
    }

    /// Re-targets this stream at `parent.child(index)`, keeping the allocation.
    pub fn reset_to_child_of(&mut self, parent: StreamId, index: u64) {
        self.id = parent.child(index);
        self.buffer.clear();
        self.cursor = 0;
        self.next_draw = 0;
        self.fill = if self.ramp { FIRST_FILL.min(self.capacity) } else { self.capacity };
        self.spare_normal = None;
    }

    fn refill(&mut self) {
        self.buffer.clear();
        let end = self.next_draw + self.fill as u64;
        self.fill = (self.fill * 2).min(self.capacity);
        let mut draw = self.next_draw;
        // Each Philox block yields two 64-bit lanes, i.e. draws 2b and 2b + 1.
        if draw & 1 == 1 {
            let b = self.id.block(draw >> 1);
            self.buffer.push(to_unit_interval(u64::from(b[2]) | (u64::from(b[3]) << 32)));
            draw += 1;
        }
        while draw + 2 <= end {
            let b = self.id.block(draw >> 1);
            self.buffer.push(to_unit_interval(u64::from(b[0]) | (u64::from(b[1]) << 32)));
            self.buffer.push(to_unit_interval(u64::from(b[2]) | (u64::from(b[3]) << 32)));
            draw += 2;
        }
        if draw < end {
            let b = self.id.block(draw >> 1);
            self.buffer.push(to_unit_interval(u64::from(b[0]) | (u64::from(b[1]) << 32)));
        }
        self.next_draw = end;
        self.cursor = 0;
    }

    /// Next uniform variate on (0, 1].
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        if self.cursor == self.buffer.len() {
            self.refill();
        }
        let u = self.buffer[self.cursor];
        self.cursor += 1;
        u
    }

    pub fn fill_uniform(&mut self, out: &mut [f64]) {
        for slot in out.iter_mut() {
            *slot = self.next_uniform();
        }
    }

    /// `count` uniforms on (0, 1].
    pub fn draw_uniform(&mut self, count: usize) -> Vec<f64> {
        let mut out = alloc::vec![0.0; count];
        self.fill_uniform(&mut out);
        out
    }

    /// Uniform index in `0..n`.
    #[inline]
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let i = ((1.0 - self.next_uniform()) * n as f64) as usize;
        i.min(n - 1)
    }

    /// Uniform on `[low, high)`.
    #[inline]
    pub fn next_range(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * (1.0 - self.next_uniform())
    }

    /// Standard normal variate (Box-Muller, the second value of each pair is cached).
    pub fn next_standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        self.spare_normal = Some(r * s);
        r * c
    }

    /// One N(mean, sigma^2) variate. `sigma == 0` returns `mean` without consuming draws.
    pub fn next_gaussian(&mut self, mean: f64, sigma: f64) -> Result<f64> {
        if !(sigma >= 0.0) {
            return Err(Error::InvalidParameter("sigma must be non-negative"));
        }
        if sigma == 0.0 {
            return Ok(mean);
        }
        Ok(mean + sigma * self.next_standard_normal())
    }

    pub fn draw_gaussian(&mut self, count: usize, mean: f64, sigma: f64) -> Result<Vec<f64>> {
        (0..count).map(|_| self.next_gaussian(mean, sigma)).collect()
    }
}

/// Free-function form of [`RngStream::seeded`].
pub fn seeded_stream(master_seed: u64, path: &[u64]) -> RngStream {
    RngStream::seeded(master_seed, path)
}

/// A 64-bit seed for a sub-run, e.g. one re-optimization attempt.
pub fn derive_seed(master_seed: u64, path: &[u64]) -> u64 {
    StreamId::root(master_seed).descend(path).key
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn philox_known_answers() {
        // Reference vectors published with the Random123 library.
        assert_eq!(
            philox4x32_10([0, 0, 0, 0], [0, 0]),
            [0x6627_e8d5, 0xe169_c58d, 0xbc57_ac4c, 0x9b00_dbd8]
        );
        assert_eq!(
            philox4x32_10([u32::MAX; 4], [u32::MAX; 2]),
            [0x408f_276d, 0x41c8_3b0e, 0xa20b_c7c6, 0x6d54_51fd]
        );
        assert_eq!(
            philox4x32_10(
                [0x243f_6a88, 0x85a3_08d3, 0x1319_8a2e, 0x0370_7344],
                [0xa409_3822, 0x299f_31d0]
            ),
            [0xd16c_fe09, 0x94fd_cceb, 0x5001_e420, 0x2412_6ea1]
        );
    }

    #[test]
    fn same_seed_and_path_reproduce() {
        let a = RngStream::seeded(7, &[1, 2]).draw_uniform(1000);
        let b = RngStream::seeded(7, &[1, 2]).draw_uniform(1000);
        assert_eq!(a, b);
    }

    #[test]
    fn different_labels_differ() {
        let a = RngStream::seeded(7, &[label("a")]).draw_uniform(1000);
        let b = RngStream::seeded(7, &[label("b")]).draw_uniform(1000);
        assert!(a.iter().zip(&b).all(|(x, y)| x != y));
    }

    #[test]
    fn child_ignores_sibling_and_parent_consumption() {
        let mut parent = RngStream::seeded(3, &[9]);
        let fresh = parent.child(4).draw_uniform(100);
        let mut sibling = parent.child(5);
        sibling.draw_uniform(5000);
        parent.draw_uniform(777);
        assert_eq!(parent.child(4).draw_uniform(100), fresh);
    }

    #[test]
    fn buffer_size_does_not_change_sequence() {
        let reference = RngStream::seeded(11, &[0]).with_buffer_size(1).draw_uniform(10_000);
        for size in [2, 3, 7, 64, 4096, 5000] {
            let got = RngStream::seeded(11, &[0]).with_buffer_size(size).draw_uniform(10_000);
            assert_eq!(got, reference, "buffer size {size}");
        }
    }

    #[test]
    fn uniforms_are_in_half_open_unit_interval() {
        let mut s = RngStream::seeded(1, &[]);
        for _ in 0..100_000 {
            let u = s.next_uniform();
            assert!(u > 0.0 && u <= 1.0);
        }
        assert_eq!(to_unit_interval(u64::MAX), 1.0);
        assert!(to_unit_interval(0) > 0.0);
    }

    #[test]
    fn uniform_mean() {
        let mut s = RngStream::seeded(2024, &[label("mean")]);
        let n = 1_000_000;
        let mean = (0..n).map(|_| s.next_uniform()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn gaussian_moments() {
        let mut s = RngStream::seeded(99, &[label("gauss")]);
        let xs = s.draw_gaussian(1_000_000, 1.0, 0.2).unwrap();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!((mean - 1.0).abs() < 0.001);
        assert!((var.sqrt() - 0.2).abs() < 0.001, "std {}", var.sqrt());
    }

    #[test]
    fn zero_sigma_is_constant_and_negative_rejected() {
        let mut s = RngStream::seeded(5, &[]);
        assert!(s.draw_gaussian(100, 2.5, 0.0).unwrap().iter().all(|&x| x == 2.5));
        assert!(s.next_gaussian(0.0, -1.0).is_err());
        assert!(s.next_gaussian(0.0, f64::NAN).is_err());
    }

    #[test]
    fn reset_matches_child() {
        let parent = RngStream::seeded(42, &[1]);
        let mut reused = RngStream::seeded(0, &[]).with_buffer_size(16);
        reused.draw_uniform(3);
        reused.reset_to_child_of(parent.id(), 6);
        assert_eq!(reused.draw_uniform(50), parent.child(6).draw_uniform(50));
    }

    #[test]
    fn index_in_range() {
        let mut s = RngStream::seeded(8, &[]);
        let mut seen = [0usize; 5];
        for _ in 0..10_000 {
            seen[s.next_index(5)] += 1;
        }
        assert!(seen.iter().all(|&c| c > 1800));
    }
}
