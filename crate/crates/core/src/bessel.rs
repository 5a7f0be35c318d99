//! Integer-order Bessel functions of the first kind.
//!
//! Miller's downward recurrence normalized by `J_0 + 2 Σ J_2k = 1` for small
//! and medium arguments, Hankel's asymptotic expansion for large arguments of
//! low order.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};

/// Arguments at or beyond this magnitude are rejected.
pub const MAX_ARGUMENT: f64 = 1.0e4;

const ASYMPTOTIC_MIN_ARGUMENT: f64 = 25.0;
const RESCALE_ABOVE: f64 = 1.0e250;

/// `J_n(z)` to an absolute accuracy of about `1e-10` or better.
pub fn bessel_jn(n: u32, z: f64) -> Result<f64> {
    if !z.is_finite() || z.abs() >= MAX_ARGUMENT {
        return Err(Error::invalid(
            "z",
            format!("Bessel argument must satisfy |z| < {MAX_ARGUMENT}, got {z}"),
        ));
    }
    if z < 0.0 {
        let value = bessel_jn(n, -z)?;
        return Ok(if n % 2 == 1 { -value } else { value });
    }
    if z == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let nf = n as f64;
    if z >= ASYMPTOTIC_MIN_ARGUMENT && nf * nf < 0.5 * z {
        Ok(hankel_asymptotic(nf, z))
    } else {
        Ok(miller(n, z))
    }
}

fn miller(n: u32, z: f64) -> f64 {
    let top = (n as f64).max(z.ceil());
    let mut start = (top + 20.0 + (40.0 * top).sqrt()) as u32;
    start += start % 2;

    let two_over_z = 2.0 / z;
    let mut next = 0.0; // J_{k+1}
    let mut current = 1.0e-300; // J_k
    let mut norm = 0.0;
    let mut wanted = 0.0;
    for k in (1..=start).rev() {
        let prev = k as f64 * two_over_z * current - next; // J_{k-1}
        next = current;
        current = prev;
        if k - 1 == n {
            wanted = current;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * current;
        }
        if current.abs() > RESCALE_ABOVE {
            current /= RESCALE_ABOVE;
            next /= RESCALE_ABOVE;
            norm /= RESCALE_ABOVE;
            wanted /= RESCALE_ABOVE;
        }
    }
    norm += current;
    wanted / norm
}

fn hankel_asymptotic(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let eight_z = 8.0 * z;
    // P = Σ (-1)^k a_{2k} / z^{2k}, Q = Σ (-1)^k a_{2k+1} / z^{2k+1}
    let mut term: f64 = 1.0;
    let mut p: f64 = 1.0;
    let mut q = 0.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * eight_z);
        if next.abs() >= last || next.abs() < 1e-17 * p.abs() {
            break;
        }
        last = next.abs();
        term = next;
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    let chi = z - (0.5 * nu * PI + FRAC_PI_4);
    (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// `sup_z |J_n(z)|`: 1 for `n = 0`, otherwise the first maximum of `J_n`.
pub fn bessel_jn_sup(n: u32) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let nf = n as f64;
    let first_peak_guess = nf + 0.8086 * nf.cbrt();
    let scan_end = first_peak_guess + 2.0;
    let f = |z: f64| bessel_jn(n, z).expect("argument in range");

    let mut best_z = 0.0;
    let mut best = f64::NEG_INFINITY;
    let step = 0.01;
    let mut z = step;
    while z <= scan_end {
        let value = f(z);
        if value > best {
            best = value;
            best_z = z;
        }
        z += step;
    }
    // golden-section refinement
    let (mut a, mut b) = ((best_z - step).max(0.0), best_z + step);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    f(0.5 * (a + b)).max(best)
}
