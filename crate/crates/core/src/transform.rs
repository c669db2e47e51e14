//! Spectral <-> physical transforms on (padded) collocation grids.
//!
//! A coefficient array `c` over the retained modes represents
//! `f(x) = sum_k c(k) exp(i k.x)`; physical samples sit at
//! `x = (i1, i2) L / M`, stored row-major with `i1` slowest.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Pad, SpectralGrid};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(m: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(m), p.plan_fft_inverse(m))
    })
}

/// Real samples of a scalar field on an `m x m` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    m: usize,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn new(m: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != m * m {
            return Err(Error::Shape(format!(
                "expected {} samples for a {m}x{m} grid, got {}",
                m * m,
                values.len()
            )));
        }
        Ok(PhysicalField { m, values })
    }

    pub fn zeros(m: usize) -> Self {
        PhysicalField {
            m,
            values: vec![0.0; m * m],
        }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.m + i2]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Grid quadrature of the field over the box with volume `volume`.
    pub fn integrate(&self, volume: f64) -> f64 {
        let n = self.values.len();
        volume / n as f64 * crate::sum::pairwise_slice(&self.values)
    }
}

fn check_len(grid: &SpectralGrid, c: &[Complex64]) -> Result<()> {
    if c.len() != grid.len() {
        return Err(Error::Shape(format!(
            "coefficient array has {} entries, grid expects {}",
            c.len(),
            grid.len()
        )));
    }
    Ok(())
}

fn transpose(src: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); m * m];
    for r in 0..m {
        for c in 0..m {
            out[c * m + r] = src[r * m + c];
        }
    }
    out
}

/// Rows `[0, kmax]` and `[m - kmax, m)` hold every retained wavenumber.
fn retained_row_ranges(kmax: usize, m: usize) -> [(usize, usize); 2] {
    [(0, kmax + 1), (m - kmax, m)]
}

fn inverse_complex(grid: &SpectralGrid, z: &[Complex64], m: usize) -> Vec<Complex64> {
    let (_, inv) = plans(m);
    let mut scratch = vec![Complex64::new(0.0, 0.0); inv.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); m * m];
    let mi = m as i32;
    for (idx, &c) in z.iter().enumerate() {
        let (k1, k2) = grid.wavenumber(idx);
        let r = k1.rem_euclid(mi) as usize;
        let col = k2.rem_euclid(mi) as usize;
        buf[r * m + col] = c;
    }
    for (lo, hi) in retained_row_ranges(grid.kmax(), m) {
        inv.process_with_scratch(&mut buf[lo * m..hi * m], &mut scratch);
    }
    let mut t = transpose(&buf, m);
    inv.process_with_scratch(&mut t, &mut scratch);
    transpose(&t, m)
}

fn forward_complex(grid: &SpectralGrid, mut buf: Vec<Complex64>, m: usize) -> Vec<Complex64> {
    let (fwd, _) = plans(m);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fwd.get_inplace_scratch_len()];
    fwd.process_with_scratch(&mut buf, &mut scratch);
    let mut t = transpose(&buf, m);
    for (lo, hi) in retained_row_ranges(grid.kmax(), m) {
        fwd.process_with_scratch(&mut t[lo * m..hi * m], &mut scratch);
    }
    let scale = 1.0 / (m * m) as f64;
    let mi = m as i32;
    (0..grid.len())
        .map(|idx| {
            let (k1, k2) = grid.wavenumber(idx);
            let r = k1.rem_euclid(mi) as usize;
            let col = k2.rem_euclid(mi) as usize;
            t[col * m + r] * scale
        })
        .collect()
}

/// Samples the real field with coefficients `coeffs` on the grid selected by `pad`.
pub fn evaluate_physical(
    grid: &SpectralGrid,
    coeffs: &[Complex64],
    pad: Pad,
) -> Result<PhysicalField> {
    evaluate_on(grid, coeffs, grid.eval_size(pad)?)
}

/// Samples on an explicit `m x m` grid.
pub fn evaluate_on(grid: &SpectralGrid, coeffs: &[Complex64], m: usize) -> Result<PhysicalField> {
    check_len(grid, coeffs)?;
    grid.check_eval_size(m)?;
    let out = inverse_complex(grid, coeffs, m);
    Ok(PhysicalField {
        m,
        values: out.into_iter().map(|z| z.re).collect(),
    })
}

/// Samples two real fields with one complex transform.
pub fn evaluate_pair_on(
    grid: &SpectralGrid,
    a: &[Complex64],
    b: &[Complex64],
    m: usize,
) -> Result<(PhysicalField, PhysicalField)> {
    check_len(grid, a)?;
    check_len(grid, b)?;
    grid.check_eval_size(m)?;
    let i = Complex64::new(0.0, 1.0);
    let z: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + i * y).collect();
    let out = inverse_complex(grid, &z, m);
    let (re, im): (Vec<f64>, Vec<f64>) = out.into_iter().map(|z| (z.re, z.im)).unzip();
    Ok((PhysicalField { m, values: re }, PhysicalField { m, values: im }))
}

/// Projects grid samples onto the retained modes (exact inverse of
/// [`evaluate_on`] for band-limited data).
pub fn to_spectral(grid: &SpectralGrid, field: &PhysicalField) -> Result<Vec<Complex64>> {
    grid.check_eval_size(field.m)?;
    let buf = field
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    Ok(forward_complex(grid, buf, field.m))
}

/// Forward transform of two real fields packed into one complex transform.
pub fn to_spectral_pair(
    grid: &SpectralGrid,
    a: &PhysicalField,
    b: &PhysicalField,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if a.m != b.m {
        return Err(Error::Shape(format!("grid sizes differ: {} vs {}", a.m, b.m)));
    }
    grid.check_eval_size(a.m)?;
    let buf = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| Complex64::new(x, y))
        .collect();
    let f = forward_complex(grid, buf, a.m);
    let n = f.len();
    let mut fa = Vec::with_capacity(n);
    let mut fb = Vec::with_capacity(n);
    for idx in 0..n {
        let z = f[idx];
        let zc = f[n - 1 - idx].conj();
        fa.push(0.5 * (z + zc));
        fb.push(Complex64::new(0.0, -0.5) * (z - zc));
    }
    Ok((fa, fb))
}
