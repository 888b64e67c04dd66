//! N-dimensional complex FFT on top of per-axis `rustfft` plans.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> PlanPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

/// In-place unnormalised transform over every axis of an `n^dim` array.
pub(crate) fn transform(data: &mut [Complex64], n: usize, dim: usize, direction: Direction) {
    debug_assert_eq!(data.len(), n.pow(dim as u32));
    let (fwd, inv) = plans(n);
    let plan = match direction {
        Direction::Forward => fwd,
        Direction::Inverse => inv,
    };
    let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
    // last axis is contiguous
    plan.process_with_scratch(data, &mut scratch);
    let mut line = vec![Complex64::default(); n];
    for axis in (0..dim.saturating_sub(1)).rev() {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        for outer in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}
