//! Closed-form references for two-level atoms, two-channel scatterers,
//! atomic-memory cascades and two-channel coherent feedback.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pulse::{Pulse, PulseShape};
use crate::slh::SINGULAR_LOOP_TOL;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoLevelParams {
    pub kappa: f64,
    pub omega_c: f64,
}

impl TwoLevelParams {
    pub fn new(kappa: f64, omega_c: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) || !omega_c.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "need kappa > 0 and finite omega_c, got kappa={kappa}, omega_c={omega_c}"
            )));
        }
        Ok(Self { kappa, omega_c })
    }

    /// `-iω_c - κ/2`
    pub fn pole(&self) -> Complex64 {
        Complex64::new(-self.kappa / 2.0, -self.omega_c)
    }
}

/// `(-κ/2 + i(ω+ω_c)) / (κ/2 + i(ω+ω_c))`
pub fn two_level_g(p: TwoLevelParams, omega: f64) -> Complex64 {
    let d = omega + p.omega_c;
    Complex64::new(-p.kappa / 2.0, d) / Complex64::new(p.kappa / 2.0, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoChannelResponse {
    /// Amplitude remaining in the input channel.
    pub through: Complex64,
    /// `√(κ1κ2) / (κ̄ + i(ω+ω_c))`. The amplitude emitted into the other
    /// channel is `-cross`.
    pub cross: Complex64,
}

impl TwoChannelResponse {
    pub fn flux(&self) -> f64 {
        self.through.norm_sqr() + self.cross.norm_sqr()
    }
}

/// Two-level atom coupled to two channels with identity scattering, photon
/// entering channel 1.
pub fn two_channel_g(kappa1: f64, kappa2: f64, omega_c: f64, omega: f64) -> TwoChannelResponse {
    let d = omega + omega_c;
    let denom = Complex64::new((kappa1 + kappa2) / 2.0, d);
    TwoChannelResponse {
        through: Complex64::new(-(kappa1 - kappa2) / 2.0, d) / denom,
        cross: Complex64::new((kappa1 * kappa2).sqrt(), 0.0) / denom,
    }
}

/// Response of `n` identical atoms in series.
pub fn memory_g(n: u32, p: TwoLevelParams, omega: f64) -> Complex64 {
    two_level_g(p, omega).powu(n)
}

const SERIES_STOP: f64 = 1e-16;
const SERIES_QUIET_TERMS: usize = 3;
const SERIES_MAX_TERMS: usize = 100_000;

/// Kummer's confluent hypergeometric function `1F1(a; b; z)` for real
/// arguments.
///
/// Sums `Σ (a)_n zⁿ / ((b)_n n!)` with Neumaier compensation, stopping once
/// three consecutive terms fall below `1e-16` of the partial sum. Negative
/// `z` goes through `1F1(a; b; z) = e^z 1F1(b-a; b; -z)` so the summed
/// series never alternates for positive `a`.
pub fn hyp1f1(a: f64, b: f64, z: f64) -> Result<f64> {
    if b <= 0.0 && b.fract() == 0.0 {
        return Err(Error::InvalidArgument(format!("1F1 undefined for b = {b}")));
    }
    if !(a.is_finite() && b.is_finite() && z.is_finite()) {
        return Err(Error::NonFinite("1F1 arguments"));
    }
    if z < 0.0 {
        return Ok(z.exp() * hyp1f1_series(b - a, b, -z, 0)?);
    }
    hyp1f1_series(a, b, z, 0)
}

/// Series value with `extra` terms summed past the stopping rule.
fn hyp1f1_series(a: f64, b: f64, z: f64, extra: usize) -> Result<f64> {
    let mut sum = 1.0;
    let mut comp = 0.0;
    let mut term = 1.0;
    let mut quiet = 0;
    let mut remaining_extra = extra;
    for n in 0..SERIES_MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) * z / ((b + nf) * (nf + 1.0));
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        if term == 0.0 {
            return Ok(sum + comp);
        }
        if term.abs() < SERIES_STOP * (sum + comp).abs() {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if quiet >= SERIES_QUIET_TERMS {
            if remaining_extra == 0 {
                return Ok(sum + comp);
            }
            remaining_extra -= 1;
        }
    }
    Err(Error::InvalidArgument(format!(
        "1F1({a}; {b}; {z}) series did not converge in {SERIES_MAX_TERMS} terms"
    )))
}

/// Smooth part of the impulse response of `n` identical atoms in series,
/// `-κn e^{-κt/2} 1F1(1-n; 2; κt) e^{-iω_c t}` for `t ≥ 0`; the full kernel
/// adds `δ(t)`.
///
/// Equivalently `-κn e^{κt/2} 1F1(1+n; 2; -κt) e^{-iω_c t}`. For `n = 1` this
/// is the single-atom kernel `-κ e^{-(κ/2 + iω_c)t}`.
pub fn memory_kernel(n: u32, p: TwoLevelParams, t: f64) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::InvalidArgument("memory needs at least one atom".into()));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("memory kernel is causal, got t = {t}")));
    }
    let nf = n as f64;
    let x = p.kappa * t;
    let m = hyp1f1(1.0 - nf, 2.0, x)?;
    Ok(Complex64::from_polar(-p.kappa * nf * (-x / 2.0).exp() * m, -p.omega_c * t))
}

/// Shapes a single-channel pulse through `n` atoms in series by direct
/// convolution with [`memory_kernel`] (trapezoid weights) plus the
/// feedthrough.
pub fn convolve_memory_kernel(pulse: &Pulse, n: u32, p: TwoLevelParams) -> Result<Pulse> {
    if pulse.n_channels() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: pulse.n_channels(),
        });
    }
    let len = pulse.len();
    let dt = pulse.dt();
    let m = 2 * len;
    let mut kernel = vec![ZERO; m];
    for (j, k) in kernel.iter_mut().take(len).enumerate() {
        *k = memory_kernel(n, p, j as f64 * dt)? * dt;
    }
    kernel[0] *= 0.5;
    let mut input = pulse.channel(0).to_vec();
    input.resize(m, ZERO);

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    let ifft = planner.plan_fft_inverse(m);
    fft.process(&mut kernel);
    fft.process(&mut input);
    let mut prod: Vec<Complex64> = kernel.iter().zip(&input).map(|(a, b)| a * b).collect();
    ifft.process(&mut prod);
    let scale = 1.0 / m as f64;
    let out = pulse
        .channel(0)
        .iter()
        .zip(&prod)
        .map(|(x, y)| x + y * scale)
        .collect();
    Pulse::sampled(*pulse.grid(), vec![out])
}

/// Input that drives a two-level atom fully into its excited state:
/// `-√κ e^{(κ/2 - iω_c)t}` for `t < 0`.
pub fn inverting_pulse(p: TwoLevelParams) -> PulseShape {
    PulseShape::RisingExp {
        kappa: p.kappa,
        omega_c: p.omega_c,
    }
}

/// `√κ / (-κ/2 + i(ω+ω_c))`
pub fn inverting_pulse_spectrum(p: TwoLevelParams, omega: f64) -> Complex64 {
    Complex64::new(p.kappa.sqrt(), 0.0) / Complex64::new(-p.kappa / 2.0, omega + p.omega_c)
}

/// Output of the matched atom for the inverting input:
/// `√κ e^{-(κ/2 + iω_c)t}` for `t > 0`.
pub fn inverted_output(p: TwoLevelParams) -> PulseShape {
    PulseShape::DecayingExp {
        kappa: p.kappa,
        onset: 0.0,
        carrier: -p.omega_c,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackCase {
    /// Real scattering matrix; the loop leaves the transition frequency
    /// unchanged.
    RealScattering,
    /// Complex scattering matrix; the loop shifts the transition frequency
    /// by `Δ`.
    ComplexScattering,
}

/// Single-channel response left after feeding output 2 of a two-channel
/// atom (couplings `√κ1`, `√κ2`) back into input 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeedbackClosedForm {
    pub scattering: Complex64,
    pub coupling: Complex64,
    pub delta: f64,
    pub pole: Complex64,
}

impl FeedbackClosedForm {
    pub fn new(case: FeedbackCase, s: &DMatrix<Complex64>, kappa1: f64, kappa2: f64, omega_c: f64) -> Result<Self> {
        if s.shape() != (2, 2) {
            return Err(Error::InvalidArgument(format!(
                "feedback needs a 2x2 scattering matrix, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        if !(kappa1 > 0.0 && kappa2 > 0.0) {
            return Err(Error::InvalidArgument("feedback needs positive decay rates".into()));
        }
        if case == FeedbackCase::RealScattering && s.iter().any(|z| z.im != 0.0) {
            return Err(Error::InvalidArgument("scattering matrix is not real".into()));
        }
        let open = ONE - s[(1, 1)];
        if open.norm() <= SINGULAR_LOOP_TOL {
            return Err(Error::SingularLoop(open.norm()));
        }
        let (c1, c2) = (kappa1.sqrt(), kappa2.sqrt());
        let gain = s[(0, 1)] / open;
        let scattering = s[(0, 0)] + gain * s[(1, 0)];
        let coupling = c1 + gain * c2;
        let delta = match case {
            FeedbackCase::RealScattering => 0.0,
            FeedbackCase::ComplexScattering => (c1 * c2 * gain + kappa2 * s[(1, 1)] / open).im,
        };
        let pole = Complex64::new(-coupling.norm_sqr() / 2.0, -(omega_c + delta));
        Ok(Self {
            scattering,
            coupling,
            delta,
            pole,
        })
    }

    /// `S' - |θ'|² S' / (iω - a')`
    pub fn response(&self, omega: f64) -> Complex64 {
        self.scattering - self.coupling.norm_sqr() * self.scattering / (Complex64::new(0.0, omega) - self.pole)
    }
}

pub fn feedback_g(
    case: FeedbackCase,
    s: &DMatrix<Complex64>,
    kappa1: f64,
    kappa2: f64,
    omega_c: f64,
    omega: f64,
) -> Result<Complex64> {
    Ok(FeedbackClosedForm::new(case, s, kappa1, kappa2, omega_c)?.response(omega))
}
