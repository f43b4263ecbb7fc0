use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

fn check(d: usize, u: &[f64]) -> Result<()> {
    if d == 0 || !d.is_power_of_two() {
        return Err(Error::invalid(format!("side {d} is not a power of two")));
    }
    if u.len() != d * d {
        return Err(Error::DimensionMismatch(format!(
            "{} values for a {d}x{d} image",
            u.len()
        )));
    }
    Ok(())
}

// one averaging/differencing step on `len` entries spaced `stride` apart
fn step(x: &mut [f64], start: usize, stride: usize, len: usize, tmp: &mut Vec<f64>) {
    let half = len / 2;
    tmp.clear();
    tmp.resize(len, 0.0);
    for k in 0..half {
        let a = x[start + 2 * k * stride];
        let b = x[start + (2 * k + 1) * stride];
        tmp[k] = (a + b) * FRAC_1_SQRT_2;
        tmp[half + k] = (a - b) * FRAC_1_SQRT_2;
    }
    for k in 0..len {
        x[start + k * stride] = tmp[k];
    }
}

fn step_inverse(x: &mut [f64], start: usize, stride: usize, len: usize, tmp: &mut Vec<f64>) {
    let half = len / 2;
    tmp.clear();
    tmp.resize(len, 0.0);
    for k in 0..half {
        let s = x[start + k * stride];
        let w = x[start + (half + k) * stride];
        tmp[2 * k] = (s + w) * FRAC_1_SQRT_2;
        tmp[2 * k + 1] = (s - w) * FRAC_1_SQRT_2;
    }
    for k in 0..len {
        x[start + k * stride] = tmp[k];
    }
}

/// Orthonormal non-standard 2D Haar transform of a `d × d` row-major image:
/// at every level one step along the rows, one along the columns, then
/// recurse on the low-pass quadrant.
pub fn haar_2d(d: usize, u: &[f64]) -> Result<Vec<f64>> {
    check(d, u)?;
    let mut x = u.to_vec();
    let mut tmp = Vec::new();
    let mut size = d;
    while size > 1 {
        for i in 0..size {
            step(&mut x, i * d, 1, size, &mut tmp);
        }
        for j in 0..size {
            step(&mut x, j, d, size, &mut tmp);
        }
        size /= 2;
    }
    Ok(x)
}

/// Inverse (and adjoint) of [`haar_2d`].
pub fn haar_2d_inverse(d: usize, c: &[f64]) -> Result<Vec<f64>> {
    check(d, c)?;
    let mut x = c.to_vec();
    let mut tmp = Vec::new();
    let mut size = 2;
    while size <= d {
        for j in 0..size {
            step_inverse(&mut x, j, d, size, &mut tmp);
        }
        for i in 0..size {
            step_inverse(&mut x, i * d, 1, size, &mut tmp);
        }
        size *= 2;
    }
    Ok(x)
}
