//! Small dense-band linear algebra: symmetric banded operators in the
//! phi = r*f coordinates, and a generic banded LU with partial pivoting used
//! for stationary solves, resolvents and the Crank-Nicolson step.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Scalar abstraction so the banded solver works for f64 and Complex64.
pub trait Scalar:
    Copy
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const ZERO: Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    const ZERO: f64 = 0.0;
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    const ZERO: Complex64 = Complex64::new(0.0, 0.0);
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Symmetric banded matrix with half-bandwidth 2 (pentadiagonal), the shape
/// of every phi-space operator in the crate: d0 is the main diagonal, d1 and
/// d2 the first and second off-diagonals.
#[derive(Debug, Clone)]
pub struct SymBanded {
    pub d0: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl SymBanded {
    pub fn n(&self) -> usize {
        self.d0.len()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n();
        debug_assert_eq!(x.len(), n);
        for i in 0..n {
            let mut s = self.d0[i] * x[i];
            if i >= 1 {
                s += self.d1[i - 1] * x[i - 1];
            }
            if i >= 2 {
                s += self.d2[i - 2] * x[i - 2];
            }
            if i + 1 < n {
                s += self.d1[i] * x[i + 1];
            }
            if i + 2 < n {
                s += self.d2[i] * x[i + 2];
            }
            y[i] = s;
        }
    }

    pub fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        y
    }

    /// Quadratic form x'Ax.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let n = self.n();
        let mut s = 0.0;
        for i in 0..n {
            s += self.d0[i] * x[i] * x[i];
            if i + 1 < n {
                s += 2.0 * self.d1[i] * x[i] * x[i + 1];
            }
            if i + 2 < n {
                s += 2.0 * self.d2[i] * x[i] * x[i + 2];
            }
        }
        s
    }

    pub fn shifted(&self, shift: f64) -> SymBanded {
        SymBanded {
            d0: self.d0.iter().map(|d| d + shift).collect(),
            d1: self.d1.clone(),
            d2: self.d2.clone(),
        }
    }

    pub fn to_banded(&self) -> Banded<f64> {
        let n = self.n();
        let mut b = Banded::zeros(n, 2, 2);
        for i in 0..n {
            b.set(i, i, self.d0[i]);
            if i + 1 < n {
                b.set(i, i + 1, self.d1[i]);
                b.set(i + 1, i, self.d1[i]);
            }
            if i + 2 < n {
                b.set(i, i + 2, self.d2[i]);
                b.set(i + 2, i, self.d2[i]);
            }
        }
        b
    }

    /// Product A*B of two symmetric pentadiagonal matrices (band 4 result).
    pub fn product(a: &SymBanded, b: &SymBanded) -> Banded<f64> {
        let n = a.n();
        assert_eq!(n, b.n());
        let entry = |m: &SymBanded, i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
                return 0.0;
            }
            let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
            match hi - lo {
                0 => m.d0[lo as usize],
                1 => m.d1[lo as usize],
                2 => m.d2[lo as usize],
                _ => 0.0,
            }
        };
        let mut out = Banded::zeros(n, 4, 4);
        for i in 0..n as isize {
            for j in (i - 4).max(0)..=(i + 4).min(n as isize - 1) {
                let mut s = 0.0;
                for k in (i - 2).max(0)..=(i + 2).min(n as isize - 1) {
                    s += entry(a, i, k) * entry(b, k, j);
                }
                if s != 0.0 {
                    out.set(i as usize, j as usize, s);
                }
            }
        }
        out
    }
}

/// General banded matrix with `kl` sub- and `ku` super-diagonals. Row storage
/// keeps `kl` extra super-diagonals so partial-pivoting fill stays in band.
#[derive(Debug, Clone)]
pub struct Banded<T: Scalar> {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Scalar> Banded<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Banded {
            n,
            kl,
            ku,
            width,
            data: vec![T::ZERO; n * width],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> Option<usize> {
        let d = j as isize - i as isize;
        if d < -(self.kl as isize) || d > (self.ku + self.kl) as isize {
            return None;
        }
        Some(i * self.width + (d + self.kl as isize) as usize)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.idx(i, j).map_or(T::ZERO, |k| self.data[k])
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let k = self.idx(i, j).expect("entry outside band");
        self.data[k] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let k = self.idx(i, j).expect("entry outside band");
        self.data[k] = self.data[k] + v;
    }

    pub fn apply(&self, x: &[T], y: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            let jlo = i.saturating_sub(self.kl);
            let jhi = (i + self.ku).min(n - 1);
            let mut s = T::ZERO;
            for j in jlo..=jhi {
                s = s + self.get(i, j) * x[j];
            }
            y[i] = s;
        }
    }

    /// LU factorization with partial pivoting, in place.
    pub fn lu(mut self) -> Result<BandedLu<T>> {
        let n = self.n;
        let kl = self.kl;
        let kumax = self.ku + self.kl;
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let imax = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).modulus();
            for i in k + 1..=imax {
                let v = self.get(i, k).modulus();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::LinearSolveFailure(format!(
                    "banded LU pivot {best:e} at column {k}"
                )));
            }
            piv[k] = p;
            if p != k {
                let jhi = (k + kumax).min(n - 1);
                for j in k..=jhi {
                    let a = self.get(k, j);
                    let b = self.get(p, j);
                    self.set(k, j, b);
                    self.set(p, j, a);
                }
            }
            let pivval = self.get(k, k);
            for i in k + 1..=imax {
                let l = self.get(i, k) / pivval;
                self.set(i, k, l);
                if l != T::ZERO {
                    let jhi = (k + kumax).min(n - 1);
                    for j in k + 1..=jhi {
                        let v = self.get(i, j) - l * self.get(k, j);
                        self.set(i, j, v);
                    }
                }
            }
        }
        Ok(BandedLu { mat: self, piv })
    }
}

/// Factored banded matrix ready for repeated solves.
#[derive(Debug, Clone)]
pub struct BandedLu<T: Scalar> {
    mat: Banded<T>,
    piv: Vec<usize>,
}

impl<T: Scalar> BandedLu<T> {
    pub fn solve_in_place(&self, x: &mut [T]) {
        let n = self.mat.n;
        let kl = self.mat.kl;
        let kumax = self.mat.ku + self.mat.kl;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let imax = (k + kl).min(n - 1);
            for i in k + 1..=imax {
                let v = x[i] - self.mat.get(i, k) * x[k];
                x[i] = v;
            }
        }
        for k in (0..n).rev() {
            let jhi = (k + kumax).min(n - 1);
            let mut s = x[k];
            for j in k + 1..=jhi {
                s = s - self.mat.get(k, j) * x[j];
            }
            x[k] = s / self.mat.get(k, k);
        }
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn banded_lu_solves_random_real_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, kl, ku) in &[(12usize, 1usize, 1usize), (40, 2, 2), (64, 5, 5)] {
            let mut a = Banded::zeros(n, kl, ku);
            for i in 0..n {
                for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                    a.set(i, j, rng.gen_range(-1.0..1.0));
                }
                a.add(i, i, 4.0);
            }
            let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut b = vec![0.0; n];
            a.apply(&x_true, &mut b);
            let x = a.clone().lu().unwrap().solve(&b);
            for (u, v) in x.iter().zip(&x_true) {
                assert!((u - v).abs() < 1e-10, "{u} vs {v}");
            }
        }
    }

    #[test]
    fn banded_lu_solves_random_complex_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 60;
        let (kl, ku) = (2, 2);
        let mut a = Banded::<Complex64>::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                a.set(
                    i,
                    j,
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                );
            }
            a.add(i, i, Complex64::new(1.0, 4.0));
        }
        let x_true: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        a.apply(&x_true, &mut b);
        let x = a.clone().lu().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).norm() < 1e-10);
        }
    }

    #[test]
    fn sym_banded_product_matches_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 23;
        let mk = |rng: &mut ChaCha8Rng| SymBanded {
            d0: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            d1: (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            d2: (0..n - 2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        };
        let a = mk(&mut rng);
        let b = mk(&mut rng);
        let m = SymBanded::product(&a, &b);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut y1 = vec![0.0; n];
        m.apply(&x, &mut y1);
        let y2 = a.apply_vec(&b.apply_vec(&x));
        for (u, v) in y1.iter().zip(&y2) {
            assert!((u - v).abs() < 1e-12);
        }
        // quadratic form agrees with <Ax, x>
        let q = a.quad_form(&x);
        let ax = a.apply_vec(&x);
        let dot: f64 = ax.iter().zip(&x).map(|(p, q)| p * q).sum();
        assert!((q - dot).abs() < 1e-12);
    }
}
