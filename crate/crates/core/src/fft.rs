//! FFT plumbing: cached plans and unitary transform helpers.
//!
//! The crate-wide DFT convention is unitary: both directions carry a `1/sqrt(n)`
//! factor, so `F` preserves the l2 norm and `F^{-1} = F^H`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse plans for one transform size.
pub(crate) struct Plans {
    pub n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Plans {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// In-place unnormalized DFT: `X[k] = sum_j x[j] e^{-2*pi*i*k*j/n}`.
    pub fn forward_unnorm(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.forward.process(buf);
    }

    /// In-place unnormalized inverse DFT: `x[j] = sum_k X[k] e^{+2*pi*i*k*j/n}`.
    pub fn inverse_unnorm(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.inverse.process(buf);
    }
}

thread_local! {
    static PLAN_CACHE: RefCell<HashMap<usize, Rc<Plans>>> = RefCell::new(HashMap::new());
}

/// Runs `f` with the (per-thread) cached plans for size `n`.
pub(crate) fn with_plans<R>(n: usize, f: impl FnOnce(&Plans) -> R) -> R {
    let plans = PLAN_CACHE.with(|cache| {
        cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| Rc::new(Plans::new(n)))
            .clone()
    });
    f(&plans)
}

/// Unitary DFT of `x`.
pub fn unitary_dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let scale = 1.0 / (n as f64).sqrt();
    let mut buf = x.to_vec();
    with_plans(n, |p| p.forward_unnorm(&mut buf));
    for v in &mut buf {
        *v *= scale;
    }
    buf
}

/// Unitary inverse DFT of `x`; exact inverse of [`unitary_dft`].
pub fn unitary_idft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let scale = 1.0 / (n as f64).sqrt();
    let mut buf = x.to_vec();
    with_plans(n, |p| p.inverse_unnorm(&mut buf));
    for v in &mut buf {
        *v *= scale;
    }
    buf
}
