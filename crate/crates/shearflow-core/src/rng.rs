//! Counter-based random streams.
//!
//! Every stochastic operation draws from a [`Stream`] keyed by
//! `(master seed, operation tag, item index)`. Item `i` of an operation is
//! a pure function of that triple, never of how many items were generated
//! before it or on which worker. This is what makes Monte Carlo output
//! bit-identical for any thread count.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Tags keeping the per-operation streams disjoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamKind {
    FieldSample = 1,
    FieldSplit = 2,
    Path = 3,
    EigenTail = 4,
    Strategy = 5,
    Generic = 6,
}

/// A deterministic generator addressed by `(master, kind, index)`.
#[derive(Clone, Debug)]
pub struct Stream {
    state: u64,
    spare: Option<f64>,
}

impl Stream {
    pub fn new(master: u64, kind: StreamKind, index: u64) -> Self {
        let a = splitmix64(master ^ (kind as u64).wrapping_mul(GOLDEN));
        let state = splitmix64(a ^ index.wrapping_mul(GOLDEN)) ^ GOLDEN;
        Stream { state, spare: None }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        splitmix64(self.state)
    }

    /// Uniform in [0, 1) with 53 significant bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal via Box-Muller; pairs are cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // reject u1 == 0 so the log is finite
        let mut u1 = self.uniform();
        while u1 == 0.0 {
            u1 = self.uniform();
        }
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(radius * s);
        radius * c
    }
}
