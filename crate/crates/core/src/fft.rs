//! Multi-axis complex FFT over row-major `(nx, ny, nz)` buffers.

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::{Arc, Mutex};

pub(crate) struct FftPlans {
    shape: [usize; 3],
    forward: Vec<Option<Arc<dyn Fft<f64>>>>,
    inverse: Vec<Option<Arc<dyn Fft<f64>>>>,
    // Reused between calls: fresh large buffers cost a page fault per page.
    work: Mutex<Work>,
}

#[derive(Default)]
struct Work {
    scratch: Vec<Complex64>,
    block: Vec<Complex64>,
}

impl std::fmt::Debug for FftPlans {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPlans").field("shape", &self.shape).finish()
    }
}

impl FftPlans {
    pub(crate) fn new(shape: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        let mut forward = Vec::with_capacity(3);
        let mut inverse = Vec::with_capacity(3);
        for &n in &shape {
            if n > 1 {
                forward.push(Some(planner.plan_fft(n, FftDirection::Forward)));
                inverse.push(Some(planner.plan_fft(n, FftDirection::Inverse)));
            } else {
                forward.push(None);
                inverse.push(None);
            }
        }
        FftPlans {
            shape,
            forward,
            inverse,
            work: Mutex::default(),
        }
    }

    /// Unnormalised transform of every axis, in place.
    pub(crate) fn process(&self, data: &mut [Complex64], direction: FftDirection) {
        debug_assert_eq!(data.len(), self.shape.iter().product::<usize>());
        let plans = match direction {
            FftDirection::Forward => &self.forward,
            FftDirection::Inverse => &self.inverse,
        };
        let mut work = self.work.lock().unwrap_or_else(|e| e.into_inner());
        let Work { scratch, block } = &mut *work;
        for axis in (0..3).rev() {
            let Some(plan) = &plans[axis] else { continue };
            let n = self.shape[axis];
            let inner: usize = self.shape[axis + 1..].iter().product();
            let scratch_len = plan.get_inplace_scratch_len();
            if scratch.len() < scratch_len {
                scratch.resize(scratch_len, Complex64::default());
            }
            if inner == 1 {
                plan.process_with_scratch(data, &mut scratch[..scratch_len]);
                continue;
            }
            // Transpose each (n x inner) slab so the axis becomes contiguous.
            let slab = n * inner;
            block.resize(slab, Complex64::default());
            for chunk in data.chunks_exact_mut(slab) {
                transpose::transpose(chunk, block, inner, n);
                plan.process_with_scratch(block, &mut scratch[..scratch_len]);
                transpose::transpose(block, chunk, n, inner);
            }
        }
    }
}
