//! Complex FFTs of arbitrary length.
//!
//! Powers of two use an iterative radix-2 kernel; other lengths go through
//! Bluestein's chirp-z convolution on a padded power-of-two transform.
//! `forward` is unnormalized, `inverse` divides by `n`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::par;

#[derive(Clone, Debug)]
pub struct Fft {
    n: usize,
    imp: Imp,
}

#[derive(Clone, Debug)]
enum Imp {
    Trivial,
    Radix2 { twiddles: Vec<Complex64>, rev: Vec<usize> },
    Bluestein { inner: Box<Fft>, chirp: Vec<Complex64>, kernel: Vec<Complex64> },
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "fft length must be positive");
        let imp = if n == 1 {
            Imp::Trivial
        } else if n.is_power_of_two() {
            let bits = n.trailing_zeros();
            // Twiddles laid out stage by stage so each butterfly pass reads
            // them contiguously.
            let mut twiddles = Vec::with_capacity(n);
            let mut size = 2;
            while size <= n {
                twiddles.extend((0..size / 2).map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / size as f64)));
                size *= 2;
            }
            let rev = (0..n).map(|i| i.reverse_bits() >> (usize::BITS - bits)).collect();
            Imp::Radix2 { twiddles, rev }
        } else {
            let m = (2 * n - 1).next_power_of_two();
            let inner = Box::new(Fft::new(m));
            // k^2 mod 2n keeps the chirp argument small for large k.
            let chirp: Vec<Complex64> = (0..n)
                .map(|k| {
                    let q = ((k as u128 * k as u128) % (2 * n as u128)) as f64;
                    Complex64::from_polar(1.0, -PI * q / n as f64)
                })
                .collect();
            let mut kernel = vec![Complex64::new(0.0, 0.0); m];
            kernel[0] = chirp[0].conj();
            for k in 1..n {
                kernel[k] = chirp[k].conj();
                kernel[m - k] = chirp[k].conj();
            }
            inner.forward(&mut kernel);
            Imp::Bluestein { inner, chirp, kernel }
        };
        Self { n, imp }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n);
        match &self.imp {
            Imp::Trivial => {}
            Imp::Radix2 { twiddles, rev } => radix2(data, twiddles, rev),
            Imp::Bluestein { inner, chirp, kernel } => {
                let m = kernel.len();
                let mut a = vec![Complex64::new(0.0, 0.0); m];
                for k in 0..self.n {
                    a[k] = data[k] * chirp[k];
                }
                inner.forward(&mut a);
                for (x, k) in a.iter_mut().zip(kernel) {
                    *x *= k;
                }
                inner.inverse(&mut a);
                for k in 0..self.n {
                    data[k] = a[k] * chirp[k];
                }
            }
        }
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        for x in data.iter_mut() {
            *x = x.conj();
        }
        self.forward(data);
        let s = 1.0 / self.n as f64;
        for x in data.iter_mut() {
            *x = x.conj() * s;
        }
    }
}

fn radix2(a: &mut [Complex64], twiddles: &[Complex64], rev: &[usize]) {
    let n = a.len();
    for i in 0..n {
        let j = rev[i];
        if j > i {
            a.swap(i, j);
        }
    }
    let mut size = 2;
    let mut offset = 0;
    while size <= n {
        let half = size / 2;
        let tw = &twiddles[offset..offset + half];
        for chunk in a.chunks_exact_mut(size) {
            let (lo, hi) = chunk.split_at_mut(half);
            for ((u, v), w) in lo.iter_mut().zip(hi.iter_mut()).zip(tw) {
                let t = *v * w;
                *v = *u - t;
                *u += t;
            }
        }
        offset += half;
        size *= 2;
    }
}

/// Row-major transforms over one or two axes.
#[derive(Clone, Debug)]
pub struct FftNd {
    shape: [usize; 2],
    f0: Fft,
    f1: Option<Fft>,
}

impl FftNd {
    /// `shape[1] == 1` means a one-dimensional transform over axis 0.
    pub fn new(shape: [usize; 2]) -> Self {
        let f1 = (shape[1] > 1).then(|| Fft::new(shape[1]));
        Self { shape, f0: Fft::new(shape[0]), f1 }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, false);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, true);
    }

    fn apply(&self, data: &mut [Complex64], inverse: bool) {
        let [n0, n1] = self.shape;
        assert_eq!(data.len(), n0 * n1);
        let Some(f1) = &self.f1 else {
            return if inverse { self.f0.inverse(data) } else { self.f0.forward(data) };
        };
        if inverse {
            for z in data.iter_mut() {
                *z = z.conj();
            }
        }
        par::for_each_chunk_mut(data, n1, |row| f1.forward(row));
        match &self.f0.imp {
            Imp::Radix2 { twiddles, rev } => radix2_rows(data, n1, twiddles, rev),
            _ => {
                let mut t = transpose(data, n0, n1);
                par::for_each_chunk_mut(&mut t, n0, |col| self.f0.forward(col));
                data.copy_from_slice(&transpose(&t, n1, n0));
            }
        }
        if inverse {
            let s = 1.0 / (n0 * n1) as f64;
            for z in data.iter_mut() {
                *z = z.conj() * s;
            }
        }
    }
}

/// Radix-2 transform along axis 0, with whole rows as butterfly operands so
/// every access is contiguous.
fn radix2_rows(a: &mut [Complex64], n1: usize, twiddles: &[Complex64], rev: &[usize]) {
    let n0 = rev.len();
    for i in 0..n0 {
        let j = rev[i];
        if j > i {
            let (lo, hi) = a.split_at_mut(j * n1);
            lo[i * n1..(i + 1) * n1].swap_with_slice(&mut hi[..n1]);
        }
    }
    let mut size = 2;
    let mut offset = 0;
    while size <= n0 {
        let half = size / 2;
        let tw = &twiddles[offset..offset + half];
        for block in a.chunks_exact_mut(size * n1) {
            let (lo, hi) = block.split_at_mut(half * n1);
            for (k, w) in tw.iter().enumerate() {
                let u = &mut lo[k * n1..(k + 1) * n1];
                let v = &mut hi[k * n1..(k + 1) * n1];
                for (x, y) in u.iter_mut().zip(v.iter_mut()) {
                    let t = *y * w;
                    *y = *x - t;
                    *x += t;
                }
            }
        }
        offset += half;
        size *= 2;
    }
}

fn transpose(a: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut t = vec![Complex64::new(0.0, 0.0); a.len()];
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    t[c * rows + r] = a[r * cols + c];
                }
            }
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (j * k % n) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    fn signal(n: usize) -> Vec<Complex64> {
        (0..n).map(|j| Complex64::new((0.37 * j as f64).sin() + 0.1 * j as f64, (1.3 * j as f64).cos())).collect()
    }

    #[test]
    fn matches_naive_dft_for_various_lengths() {
        for n in [1, 2, 3, 5, 8, 12, 17, 64, 100, 243] {
            let x = signal(n);
            let want = naive_dft(&x);
            let mut got = x.clone();
            Fft::new(n).forward(&mut got);
            let scale = want.iter().map(|z| z.norm()).fold(1.0, f64::max);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).norm() < 1e-11 * scale, "n = {n}");
            }
            Fft::new(n).inverse(&mut got);
            for (a, b) in got.iter().zip(&x) {
                assert!((a - b).norm() < 1e-11 * scale, "roundtrip n = {n}");
            }
        }
    }

    #[test]
    fn two_dimensional_is_separable() {
        for (n0, n1) in [(6, 8), (8, 12), (16, 4)] {
            check_2d(n0, n1);
        }
    }

    fn check_2d(n0: usize, n1: usize) {
        let x = signal(n0 * n1);
        let mut got = x.clone();
        FftNd::new([n0, n1]).forward(&mut got);
        for k0 in 0..n0 {
            for k1 in 0..n1 {
                let mut s = Complex64::new(0.0, 0.0);
                for j0 in 0..n0 {
                    for j1 in 0..n1 {
                        let ph = -2.0 * PI * ((j0 * k0) as f64 / n0 as f64 + (j1 * k1) as f64 / n1 as f64);
                        s += x[j0 * n1 + j1] * Complex64::from_polar(1.0, ph);
                    }
                }
                assert!((got[k0 * n1 + k1] - s).norm() < 1e-10);
            }
        }
        FftNd::new([n0, n1]).inverse(&mut got);
        for (a, b) in got.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
