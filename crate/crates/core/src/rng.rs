//! Counter-based random numbers (Philox4x32-10).
//!
//! Every Monte Carlo sample owns an independent stream addressed by
//! `(seed, sample index, draw index)`: the seed is the Philox key, the sample
//! index fills the upper half of the counter and the draw index the lower
//! half. A draw can therefore be reproduced without replaying any other
//! sample, and results do not depend on how samples are scheduled on threads.

use crate::normal;

const M0: u32 = 0xD251_1F53;
const M1: u32 = 0xCD9E_8D57;
const W0: u32 = 0x9E37_79B9;
const W1: u32 = 0xBB67_AE85;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

/// The Philox4x32 bijection with 10 rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Philox4x32 {
    key: [u32; 2],
}

impl Philox4x32 {
    pub fn new(seed: u64) -> Self {
        Self { key: [seed as u32, (seed >> 32) as u32] }
    }

    pub fn from_key(key: [u32; 2]) -> Self {
        Self { key }
    }

    #[inline]
    pub fn block(&self, mut ctr: [u32; 4]) -> [u32; 4] {
        let mut key = self.key;
        for round in 0..10 {
            if round > 0 {
                key[0] = key[0].wrapping_add(W0);
                key[1] = key[1].wrapping_add(W1);
            }
            let (hi0, lo0) = mulhilo(M0, ctr[0]);
            let (hi1, lo1) = mulhilo(M1, ctr[2]);
            ctr = [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0];
        }
        ctr
    }
}

/// Maps 64 random bits to the open interval (0, 1) with 52-bit resolution.
#[inline]
pub fn open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Sequential draws of one sample's stream.
#[derive(Debug, Clone)]
pub struct SampleStream {
    gen: Philox4x32,
    sample: u64,
    draw: u64,
    buf: [u64; 2],
}

impl SampleStream {
    pub fn new(seed: u64, sample: u64) -> Self {
        Self::at(seed, sample, 0)
    }

    /// Stream positioned at draw `draw` of sample `sample`.
    pub fn at(seed: u64, sample: u64, draw: u64) -> Self {
        let mut s = Self { gen: Philox4x32::new(seed), sample, draw, buf: [0; 2] };
        s.refill();
        s
    }

    fn refill(&mut self) {
        let block = self.draw / 2;
        let out = self.gen.block([
            block as u32,
            (block >> 32) as u32,
            self.sample as u32,
            (self.sample >> 32) as u32,
        ]);
        self.buf = [
            u64::from(out[0]) | (u64::from(out[1]) << 32),
            u64::from(out[2]) | (u64::from(out[3]) << 32),
        ];
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        if self.draw.is_multiple_of(2) && self.draw > 0 {
            self.refill();
        }
        let v = self.buf[(self.draw % 2) as usize];
        self.draw += 1;
        v
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        open_unit(self.next_u64())
    }

    /// Standard normal draw by inversion.
    #[inline]
    pub fn normal(&mut self) -> f64 {
        normal::inv_cdf(self.uniform())
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for z in out.iter_mut() {
            *z = self.normal();
        }
    }

    pub fn position(&self) -> u64 {
        self.draw
    }
}
