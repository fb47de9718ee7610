//! Periodic Fourier-collocation operators on a uniform grid.
//!
//! Every operator here works on plain `&[f64]` sample vectors whose length
//! equals [`Grid::n`]. Transforms are planned once per grid; the plans are
//! shared behind `Arc` and carry no mutable state, so one grid can be used
//! from any number of threads.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::{Error, Result};

thread_local! {
    static SCRATCH: std::cell::RefCell<Vec<Complex64>> = const { std::cell::RefCell::new(Vec::new()) };
}

/// Uniform periodic collocation grid on `[0, L)`.
///
/// Spectra are half-length (`n/2 + 1` bins, modes `0..=n/2`); the negative
/// modes of a real field are their conjugates.
#[derive(Clone)]
pub struct Grid {
    n: usize,
    length: f64,
    dx: f64,
    x: Vec<f64>,
    /// Angular wavenumber `2π·m/L` per spectral bin.
    wavenumbers: Vec<f64>,
    /// Bins surviving the 2/3-rule filter.
    keep: Vec<bool>,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl Grid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < Self::MIN_POINTS || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n = {n}: need an even number of points >= {}",
                Self::MIN_POINTS
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("length = {length}: must be > 0")));
        }
        let dx = length / n as f64;
        let x = (0..n).map(|j| j as f64 * dx).collect();
        let cutoff = n / 3;
        let bins = n / 2 + 1;
        let wavenumbers = (0..bins).map(|m| 2.0 * PI * m as f64 / length).collect();
        let keep = (0..bins).map(|m| m <= cutoff && m != n / 2).collect();
        let mut planner = RealFftPlanner::new();
        Ok(Grid {
            n,
            length,
            dx,
            x,
            wavenumbers,
            keep,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of spectral bins, `n/2 + 1`.
    #[inline]
    pub fn bins(&self) -> usize {
        self.n / 2 + 1
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Node coordinates `x_j = j·dx`, right endpoint excluded.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Angular wavenumber of each spectral bin.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Highest mode index kept by [`Grid::dealias`].
    pub fn dealias_cutoff(&self) -> usize {
        self.n / 3
    }

    /// Samples `f(x_j)` on the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.x.iter().map(|&x| f(x)).collect()
    }

    pub fn check(&self, field: &[f64]) -> Result<()> {
        if field.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: field.len(),
            });
        }
        Ok(())
    }

    fn check_finite(&self, field: &[f64]) -> Result<()> {
        self.check(field)?;
        if let Some(j) = field.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field sample {j}")));
        }
        Ok(())
    }

    /// Unnormalized forward DFT of a real field, bins `0..=n/2`.
    pub fn spectrum(&self, field: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(field.len(), self.n);
        let mut input = field.to_vec();
        let mut out = vec![Complex64::new(0.0, 0.0); self.bins()];
        SCRATCH.with_borrow_mut(|scratch| {
            scratch.resize(self.forward.get_scratch_len(), Complex64::new(0.0, 0.0));
            // Lengths match by construction.
            let _ = self.forward.process_with_scratch(&mut input, &mut out, scratch);
        });
        out
    }

    /// Inverse of [`Grid::spectrum`]. Imaginary parts of the mean and
    /// Nyquist bins are ignored.
    pub fn physical(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        debug_assert_eq!(spec.len(), self.bins());
        let last = spec.len() - 1;
        spec[0].im = 0.0;
        spec[last].im = 0.0;
        let mut out = vec![0.0; self.n];
        SCRATCH.with_borrow_mut(|scratch| {
            scratch.resize(self.inverse.get_scratch_len(), Complex64::new(0.0, 0.0));
            let _ = self.inverse.process_with_scratch(&mut spec, &mut out, scratch);
        });
        let scale = 1.0 / self.n as f64;
        for v in &mut out {
            *v *= scale;
        }
        out
    }

    /// Multiplier `(i·k)^order` applied to a spectrum, Nyquist bin zeroed for
    /// odd orders.
    fn apply_derivative(&self, spec: &[Complex64], order: u8, out: &mut Vec<Complex64>) {
        out.clear();
        let nyquist = self.n / 2;
        out.extend(spec.iter().zip(&self.wavenumbers).enumerate().map(|(j, (c, &k))| {
            if order % 2 == 1 && j == nyquist {
                return Complex64::new(0.0, 0.0);
            }
            match order {
                0 => *c,
                1 => Complex64::new(-k * c.im, k * c.re),
                2 => *c * (-k * k),
                _ => {
                    let k3 = k * k * k;
                    Complex64::new(k3 * c.im, -k3 * c.re)
                }
            }
        }));
    }

    /// Fourier-collocation derivative of order 1, 2 or 3.
    pub fn deriv(&self, field: &[f64], order: u8) -> Result<Vec<f64>> {
        if !(1..=3).contains(&order) {
            return Err(Error::DerivativeOrder(order));
        }
        self.check_finite(field)?;
        let spec = self.spectrum(field);
        let mut out = Vec::with_capacity(spec.len());
        self.apply_derivative(&spec, order, &mut out);
        Ok(self.physical(out))
    }

    /// Several derivatives of one field from a single forward transform.
    /// `orders` may contain 0 for the unfiltered field itself.
    pub fn derivs<const K: usize>(&self, field: &[f64], orders: [u8; K]) -> [Vec<f64>; K] {
        let spec = self.spectrum(field);
        orders.map(|order| {
            let mut out = Vec::with_capacity(spec.len());
            self.apply_derivative(&spec, order, &mut out);
            self.physical(out)
        })
    }

    /// `∂x` of the 2/3-filtered field, in one transform pair.
    pub fn filtered_derivative(&self, field: &[f64]) -> Vec<f64> {
        let mut spec = self.spectrum(field);
        self.filter_spectrum(&mut spec);
        let mut out = Vec::with_capacity(spec.len());
        self.apply_derivative(&spec, 1, &mut out);
        self.physical(out)
    }

    /// `filter(a) − ∂x filter(b)` from two forward and one inverse transform.
    pub fn filtered_minus_derivative(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let sa = self.spectrum(a);
        let sb = self.spectrum(b);
        let out = sa
            .iter()
            .zip(&sb)
            .enumerate()
            .map(|(j, (&ca, &cb))| {
                if !self.keep[j] {
                    return Complex64::new(0.0, 0.0);
                }
                let k = self.wavenumbers[j];
                ca - Complex64::new(-k * cb.im, k * cb.re)
            })
            .collect();
        self.physical(out)
    }

    fn filter_spectrum(&self, spec: &mut [Complex64]) {
        for (c, &keep) in spec.iter_mut().zip(&self.keep) {
            if !keep {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Zeroes every mode above the 2/3 cutoff, in place.
    pub fn dealias(&self, field: &mut [f64]) {
        let mut spec = self.spectrum(field);
        self.filter_spectrum(&mut spec);
        let filtered = self.physical(spec);
        field.copy_from_slice(&filtered);
    }

    /// Pointwise product followed by the 2/3-rule filter.
    pub fn dealias_product(&self, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        self.check(a)?;
        self.check(b)?;
        let mut prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        self.dealias(&mut prod);
        Ok(prod)
    }

    /// Periodic rectangle rule `dx·Σ f_j`.
    pub fn integrate(&self, field: &[f64]) -> f64 {
        self.dx * field.iter().sum::<f64>()
    }

    pub fn mean(&self, field: &[f64]) -> f64 {
        field.iter().sum::<f64>() / field.len() as f64
    }

    /// `L·Σ_m |f̂_m / n|²` over all modes, equal to `∫ f² dx` by Parseval.
    pub fn spectral_energy(&self, field: &[f64]) -> f64 {
        let n = self.n as f64;
        let spec = self.spectrum(field);
        let last = spec.len() - 1;
        let sum: f64 = spec
            .iter()
            .enumerate()
            .map(|(j, c)| if j == 0 || j == last { c.norm_sqr() } else { 2.0 * c.norm_sqr() })
            .sum();
        self.length * sum / (n * n)
    }
}

/// Signed Fourier mode index of FFT bin `j`, in `[−n/2, n/2)`.
#[inline]
pub fn mode_of_bin(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// A periodic differentiation scheme on a uniform grid.
pub trait Differentiate {
    fn deriv(&self, field: &[f64], order: u8) -> Result<Vec<f64>>;
}

impl Differentiate for Grid {
    fn deriv(&self, field: &[f64], order: u8) -> Result<Vec<f64>> {
        Grid::deriv(self, field, order)
    }
}

/// Fourth-order central differences, for cross-checking the spectral path.
#[derive(Debug, Clone, Copy)]
pub struct CentralDifference4 {
    n: usize,
    dx: f64,
}

impl CentralDifference4 {
    pub fn new(grid: &Grid) -> Self {
        CentralDifference4 {
            n: grid.n(),
            dx: grid.dx(),
        }
    }
}

impl Differentiate for CentralDifference4 {
    fn deriv(&self, field: &[f64], order: u8) -> Result<Vec<f64>> {
        if field.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: field.len(),
            });
        }
        let n = self.n as isize;
        let at = |j: isize| field[j.rem_euclid(n) as usize];
        let h = self.dx;
        let stencil: Box<dyn Fn(isize) -> f64> = match order {
            1 => Box::new(move |j| {
                (at(j - 2) - 8.0 * at(j - 1) + 8.0 * at(j + 1) - at(j + 2)) / (12.0 * h)
            }),
            2 => Box::new(move |j| {
                (-at(j - 2) + 16.0 * at(j - 1) - 30.0 * at(j) + 16.0 * at(j + 1) - at(j + 2))
                    / (12.0 * h * h)
            }),
            3 => Box::new(move |j| {
                (at(j - 3) - 8.0 * at(j - 2) + 13.0 * at(j - 1) - 13.0 * at(j + 1)
                    + 8.0 * at(j + 2)
                    - at(j + 3))
                    / (8.0 * h * h * h)
            }),
            other => return Err(Error::DerivativeOrder(other)),
        };
        Ok((0..n).map(stencil).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(15, 1.0).is_err());
        assert!(Grid::new(8, 1.0).is_err());
        assert!(Grid::new(17, 1.0).is_err());
        assert!(Grid::new(16, 0.0).is_err());
        let g = Grid::new(16, 2.0).unwrap();
        assert_eq!(g.x()[0], 0.0);
        assert!((g.x()[15] - 2.0 * 15.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = Grid::new(64, 20.0).unwrap();
        let c = vec![3.25; 64];
        for order in 1..=3 {
            let d = g.deriv(&c, order).unwrap();
            assert!(d.iter().all(|v| v.abs() < 1e-13), "order {order}");
        }
    }

    #[test]
    fn first_derivative_of_sine() {
        let l = 20.0;
        let g = Grid::new(64, l).unwrap();
        let k = 2.0 * PI / l;
        let f = g.sample(|x| (k * x).sin());
        let exact = g.sample(|x| k * (k * x).cos());
        assert!(max_abs_diff(&g.deriv(&f, 1).unwrap(), &exact) <= 1e-12);
    }

    #[test]
    fn third_derivative_of_cosine() {
        let l = 20.0;
        let g = Grid::new(64, l).unwrap();
        let k = 4.0 * PI / l;
        let f = g.sample(|x| (k * x).cos());
        let exact = g.sample(|x| k.powi(3) * (k * x).sin());
        assert!(max_abs_diff(&g.deriv(&f, 3).unwrap(), &exact) <= 1e-12);
    }

    #[test]
    fn deriv_errors() {
        let g = Grid::new(16, 1.0).unwrap();
        assert!(matches!(g.deriv(&[0.0; 16], 4), Err(Error::DerivativeOrder(4))));
        assert!(matches!(
            g.deriv(&[0.0; 15], 1),
            Err(Error::LengthMismatch { .. })
        ));
        let mut f = vec![0.0; 16];
        f[3] = f64::INFINITY;
        assert!(matches!(g.deriv(&f, 1), Err(Error::NonFinite(_))));
    }

    #[test]
    fn odd_derivative_drops_nyquist() {
        let g = Grid::new(16, 1.0).unwrap();
        let f: Vec<f64> = (0..16).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(g.deriv(&f, 1).unwrap().iter().all(|v| v.abs() < 1e-12));
        assert!(g.deriv(&f, 3).unwrap().iter().all(|v| v.abs() < 1e-9));
        // Even orders keep it: (i k_N)² = −k_N².
        let kn = PI * 16.0;
        let d2 = g.deriv(&f, 2).unwrap();
        assert!(max_abs_diff(&d2, &f.iter().map(|v| -kn * kn * v).collect::<Vec<_>>()) < 1e-9);
    }

    #[test]
    fn integrate_basics() {
        let l = 20.0;
        let g = Grid::new(64, l).unwrap();
        assert!((g.integrate(&vec![1.0; 64]) - 20.0).abs() < 1e-13);
        let c = g.sample(|x| (2.0 * PI * x / l).cos());
        assert!(g.integrate(&c).abs() <= 1e-13);
    }

    #[test]
    fn dealias_examples() {
        let l = 20.0;
        let g = Grid::new(64, l).unwrap();
        let k = 2.0 * PI / l;
        let s = g.sample(|x| (k * x).sin());
        let two = vec![2.0; 64];
        let p = g.dealias_product(&two, &s).unwrap();
        assert!(max_abs_diff(&p, &s.iter().map(|v| 2.0 * v).collect::<Vec<_>>()) < 1e-15);

        let c = g.sample(|x| (k * x).cos());
        let sq = g.dealias_product(&c, &c).unwrap();
        let exact = g.sample(|x| 0.5 + 0.5 * (2.0 * k * x).cos());
        assert!(max_abs_diff(&sq, &exact) <= 1e-13);
    }

    #[test]
    fn dealias_removes_energy_above_cutoff() {
        let l = 20.0;
        let g = Grid::new(64, l).unwrap();
        let m = 31.0;
        let a = g.sample(|x| (2.0 * PI * m * x / l).cos());
        let b = g.sample(|x| (2.0 * PI * (m - 1.0) * x / l).sin());
        let p = g.dealias_product(&a, &b).unwrap();
        let spec = g.spectrum(&p);
        for (j, c) in spec.iter().enumerate() {
            if mode_of_bin(j, 64).unsigned_abs() > g.dealias_cutoff() as u64 {
                assert!(c.norm() < 1e-13, "bin {j}: {}", c.norm());
            }
        }
    }

    #[test]
    fn finite_difference_backend_agrees_on_smooth_fields() {
        let l = 20.0;
        let g = Grid::new(256, l).unwrap();
        let fd = CentralDifference4::new(&g);
        let k = 2.0 * PI / l;
        let f = g.sample(|x| (k * x).sin() + 0.3 * (2.0 * k * x).cos());
        for order in 1..=3u8 {
            let a = Differentiate::deriv(&g, &f, order).unwrap();
            let b = fd.deriv(&f, order).unwrap();
            assert!(max_abs_diff(&a, &b) < 1e-5, "order {order}");
        }
        assert!(fd.deriv(&f, 0).is_err());
    }

    #[test]
    fn finite_difference_converges_at_fourth_order() {
        let l = 20.0;
        let k = 2.0 * PI / l;
        let err = |n: usize| {
            let g = Grid::new(n, l).unwrap();
            let f = g.sample(|x| (k * x).sin());
            let exact = g.sample(|x| k * (k * x).cos());
            max_abs_diff(&CentralDifference4::new(&g).deriv(&f, 1).unwrap(), &exact)
        };
        let order = (err(32) / err(64)).log2();
        assert!((order - 4.0).abs() < 0.1, "observed {order}");
    }
}
