//! Ohmic bath kernel with a Debye cutoff.

/// Fourier-transformed bath autocorrelation `K(w)`.
///
/// Positive `w` is energy given to the bath; `K(-w) = e^{w/T} K(w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathKernel {
    pub temperature: f64,
    pub cutoff: f64,
}

const SERIES_CUTOFF: f64 = 1e-6;

impl BathKernel {
    pub fn new(temperature: f64, cutoff: f64) -> Self {
        BathKernel {
            temperature,
            cutoff,
        }
    }

    /// `K(w) = e^{-|w|/Gamma}/4 * w/(e^{w/T} - 1)`.
    pub fn eval(&self, omega: f64) -> f64 {
        let t = self.temperature;
        let x = omega / t;
        // w/(e^{w/T}-1), with the removable point at w = 0
        let bose = if x.abs() < SERIES_CUTOFF {
            t * (1.0 - x / 2.0 + x * x / 12.0 - x.powi(4) / 720.0)
        } else {
            omega / x.exp_m1()
        };
        0.25 * (-omega.abs() / self.cutoff).exp() * bose
    }

    /// Rate imbalance `K(w) - K(-w) = -w e^{-|w|/Gamma}/4`.
    pub fn odd_part(&self, omega: f64) -> f64 {
        -0.25 * omega * (-omega.abs() / self.cutoff).exp()
    }
}
