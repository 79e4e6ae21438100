//! Cached 2D complex FFT on the row-major (beta fastest) layout.
//!
//! Forward transforms return trigonometric-series coefficients: the inverse of
//! `forward` reproduces the samples exactly, f(x) = sum_m c_m e^{j x.xi_m}.
//! Plans are cached per thread; results are identical with a cold or warm
//! cache (the planner is deterministic).

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

#[derive(Clone)]
struct AxisPlans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static CACHE: RefCell<HashMap<usize, Rc<AxisPlans>>> = RefCell::new(HashMap::new());
}

fn plans_for(n: usize) -> Rc<AxisPlans> {
    CACHE.with(|c| {
        let mut cache = c.borrow_mut();
        if let Some(p) = cache.get(&n) {
            return p.clone();
        }
        let p = PLANNER.with(|pl| {
            let mut pl = pl.borrow_mut();
            Rc::new(AxisPlans {
                forward: pl.plan_fft_forward(n),
                inverse: pl.plan_fft_inverse(n),
            })
        });
        cache.insert(n, p.clone());
        p
    })
}

fn transpose(data: &[Complex64], rows: usize, cols: usize, out: &mut Vec<Complex64>) {
    out.clear();
    out.resize(rows * cols, Complex64::default());
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
}

fn fft_rows(data: &mut [Complex64], row_len: usize, forward: bool) {
    let plans = plans_for(row_len);
    let plan = if forward { &plans.forward } else { &plans.inverse };
    for row in data.chunks_exact_mut(row_len) {
        plan.process(row);
    }
}

/// In-place style 2D FFT; `n_alpha` rows of `n_beta` contiguous entries.
fn fft2(data: &mut Vec<Complex64>, n_alpha: usize, n_beta: usize, forward: bool) {
    fft_rows(data, n_beta, forward);
    let mut t = Vec::new();
    transpose(data, n_alpha, n_beta, &mut t);
    fft_rows(&mut t, n_alpha, forward);
    transpose(&t, n_beta, n_alpha, data);
}

/// Forward 2D transform to series coefficients (includes the 1/N scaling).
pub fn forward2(data: &mut Vec<Complex64>, n_alpha: usize, n_beta: usize) {
    fft2(data, n_alpha, n_beta, true);
    let scale = 1.0 / (n_alpha * n_beta) as f64;
    for c in data.iter_mut() {
        *c *= scale;
    }
}

/// Inverse 2D transform from series coefficients to samples.
pub fn inverse2(data: &mut Vec<Complex64>, n_alpha: usize, n_beta: usize) {
    fft2(data, n_alpha, n_beta, false);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_single_mode() {
        let (na, nb) = (8, 16);
        let mut data: Vec<Complex64> = (0..na * nb)
            .map(|i| Complex64::new(i as f64 * 0.01, (i % 7) as f64))
            .collect();
        let orig = data.clone();
        forward2(&mut data, na, nb);
        inverse2(&mut data, na, nb);
        for (a, b) in data.iter().zip(orig.iter()) {
            assert!((a - b).norm() < 1e-12);
        }

        // e^{j 2 pi ia/na} along alpha -> coefficient 1 at (1, 0)
        let mut mode: Vec<Complex64> = vec![Complex64::default(); na * nb];
        for ia in 0..na {
            for ib in 0..nb {
                let th = 2.0 * std::f64::consts::PI * ia as f64 / na as f64;
                mode[ia * nb + ib] = Complex64::new(th.cos(), th.sin());
            }
        }
        forward2(&mut mode, na, nb);
        for ia in 0..na {
            for ib in 0..nb {
                let c = mode[ia * nb + ib];
                let expect = if ia == 1 && ib == 0 { 1.0 } else { 0.0 };
                assert!((c - Complex64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }
}
