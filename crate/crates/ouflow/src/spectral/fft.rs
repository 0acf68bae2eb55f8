//! Two-dimensional FFT engine on square grids, built on `rustfft`.
//!
//! Plans are cached per grid size in a process-wide table so that fields and
//! steppers can transform without carrying planner state around. All
//! transforms are unnormalized; callers apply the `1/M^2` factor that turns
//! the forward DFT into Fourier coefficients of the `e^{2 pi i k.x}` basis.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Clone)]
pub(crate) struct Plans {
    pub forward: Arc<dyn Fft<f64>>,
    pub inverse: Arc<dyn Fft<f64>>,
}

fn plan_table() -> &'static Mutex<HashMap<usize, Plans>> {
    static TABLE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    TABLE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub(crate) fn plans_for(m: usize) -> Plans {
    let mut table = plan_table().lock().unwrap();
    table
        .entry(m)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Plans {
                forward: planner.plan_fft_forward(m),
                inverse: planner.plan_fft_inverse(m),
            }
        })
        .clone()
}

/// Reusable 2D transform workspace for one grid size.
pub(crate) struct Fft2 {
    m: usize,
    plans: Plans,
    scratch: Vec<Complex64>,
    transpose: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(m: usize) -> Self {
        let plans = plans_for(m);
        let len = plans
            .forward
            .get_inplace_scratch_len()
            .max(plans.inverse.get_inplace_scratch_len());
        Fft2 {
            m,
            plans,
            scratch: vec![Complex64::default(); len],
            transpose: vec![Complex64::default(); m * m],
        }
    }

    fn pass(&mut self, data: &mut [Complex64], forward: bool) {
        let fft = if forward {
            self.plans.forward.clone()
        } else {
            self.plans.inverse.clone()
        };
        fft.process_with_scratch(data, &mut self.scratch);
    }

    fn transpose(&mut self, data: &mut [Complex64]) {
        let m = self.m;
        for i in 0..m {
            for j in 0..m {
                self.transpose[j * m + i] = data[i * m + j];
            }
        }
        data.copy_from_slice(&self.transpose);
    }

    /// Unnormalized forward DFT over both axes, in place.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.m * self.m);
        self.pass(data, true);
        self.transpose(data);
        self.pass(data, true);
        self.transpose(data);
    }

    /// Unnormalized inverse DFT over both axes, in place.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.m * self.m);
        self.pass(data, false);
        self.transpose(data);
        self.pass(data, false);
        self.transpose(data);
    }
}
