//! Radix-2 complex FFT for power-of-two lengths, with a row/column driver
//! for the two-dimensional lattice.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::C64;

/// Precomputed twiddles and bit-reversal table for one transform length.
#[derive(Debug, Clone)]
pub struct FftPlan {
    n: usize,
    twiddles: Vec<C64>,
    bitrev: Vec<usize>,
}

impl FftPlan {
    /// `n` must be a power of two.
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "fft length must be a power of two");
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                C64::new(a.cos(), a.sin())
            })
            .collect();
        Self { n, twiddles, bitrev }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized in-place transform. `inverse` flips the exponent sign.
    pub fn process(&self, data: &mut [C64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(data.len(), n);
        for i in 0..n {
            let j = self.bitrev[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }

    /// Unitary transform of a `d`-dimensional row-major array with `n` points
    /// per axis (`d` is 1 or 2).
    pub fn transform(&self, data: &mut [C64], d: usize, inverse: bool) {
        let n = self.n;
        match d {
            1 => self.process(data, inverse),
            2 => {
                for row in data.chunks_exact_mut(n) {
                    self.process(row, inverse);
                }
                let mut col = alloc::vec![C64::new(0.0, 0.0); n];
                for j in 0..n {
                    for i in 0..n {
                        col[i] = data[i * n + j];
                    }
                    self.process(&mut col, inverse);
                    for i in 0..n {
                        data[i * n + j] = col[i];
                    }
                }
            }
            _ => unreachable!("grid dimension is validated at construction"),
        }
        let scale = 1.0 / (data.len() as f64).sqrt();
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}
