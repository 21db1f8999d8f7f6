//! Process-wide FFT plan cache. Plans are immutable and `Send + Sync`, so one
//! instance per length is shared by every thread.

use std::sync::{Arc, Mutex, OnceLock};

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

fn real_planner() -> &'static Mutex<RealFftPlanner<f64>> {
    static P: OnceLock<Mutex<RealFftPlanner<f64>>> = OnceLock::new();
    P.get_or_init(|| Mutex::new(RealFftPlanner::new()))
}

fn complex_planner() -> &'static Mutex<FftPlanner<f64>> {
    static P: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    P.get_or_init(|| Mutex::new(FftPlanner::new()))
}

pub(crate) fn r2c(len: usize) -> Arc<dyn RealToComplex<f64>> {
    real_planner().lock().unwrap().plan_fft_forward(len)
}

pub(crate) fn c2r(len: usize) -> Arc<dyn ComplexToReal<f64>> {
    real_planner().lock().unwrap().plan_fft_inverse(len)
}

pub(crate) fn forward(len: usize) -> Arc<dyn Fft<f64>> {
    complex_planner().lock().unwrap().plan_fft_forward(len)
}

pub(crate) fn inverse(len: usize) -> Arc<dyn Fft<f64>> {
    complex_planner().lock().unwrap().plan_fft_inverse(len)
}
