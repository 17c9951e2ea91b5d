//! Single-photon pulse shapes on uniform time grids and their transformation
//! by transfer filters.
//!
//! Spectra follow the continuous convention `ξ̃(ω) = ∫ e^{-iωt} ξ(t) dt`,
//! approximated by `dt · e^{-iω t_start} · DFT`. Shaping splits every filter
//! into its exact feedthrough (applied sample by sample) and a smooth
//! convolution evaluated by zero-padded FFT.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::transfer::PhotonTransfer;

/// Energy fraction of the filter kernel allowed to fall outside the window.
pub const KERNEL_TAIL: f64 = 1e-8;

/// Largest `|a|·dt` accepted by [`shape_fft`]; beyond it the pole is
/// poorly resolved by the grid's frequency band.
pub const FFT_MAX_POLE_STEP: f64 = 1.0;

/// Largest `|a|·dt` accepted by [`shape_ode`].
pub const ODE_MAX_POLE_STEP: f64 = 0.1;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Analytic pulse descriptors. Amplitudes are unit-norm in the continuum;
/// at a jump the sample takes the midpoint of the one-sided limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseShape {
    /// `|ξ|²` is a normal density with mean `center` and standard deviation
    /// `width`, carrying phase `e^{i·carrier·(t - center)}`.
    Gaussian { center: f64, width: f64, carrier: f64 },
    /// `√κ e^{-κ(t - onset)/2} e^{i·carrier·(t - onset)}` for `t > onset`.
    DecayingExp { kappa: f64, onset: f64, carrier: f64 },
    /// `-√κ e^{(κ/2 - iω_c)t}` for `t < 0`; the input that fully excites a
    /// two-level atom of linewidth `κ` and transition frequency `ω_c`.
    RisingExp { kappa: f64, omega_c: f64 },
    /// Constant `1/√(end - start)` on `(start, end)`.
    Square { start: f64, end: f64 },
}

impl PulseShape {
    pub fn check(&self) -> Result<()> {
        let ok = match *self {
            PulseShape::Gaussian { center, width, carrier } => {
                center.is_finite() && carrier.is_finite() && width > 0.0 && width.is_finite()
            }
            PulseShape::DecayingExp { kappa, onset, carrier } => {
                kappa > 0.0 && kappa.is_finite() && onset.is_finite() && carrier.is_finite()
            }
            PulseShape::RisingExp { kappa, omega_c } => kappa > 0.0 && kappa.is_finite() && omega_c.is_finite(),
            PulseShape::Square { start, end } => start.is_finite() && end.is_finite() && end > start,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("bad pulse parameters: {self:?}")))
        }
    }

    pub fn amplitude(&self, t: f64) -> Complex64 {
        // Step weight with the midpoint convention at the jump.
        let step = |x: f64| {
            if x > 0.0 {
                1.0
            } else if x == 0.0 {
                0.5
            } else {
                0.0
            }
        };
        match *self {
            PulseShape::Gaussian { center, width, carrier } => {
                let norm = (2.0 * PI * width * width).powf(-0.25);
                let x = t - center;
                Complex64::from_polar(norm * (-x * x / (4.0 * width * width)).exp(), carrier * x)
            }
            PulseShape::DecayingExp { kappa, onset, carrier } => {
                let w = step(t - onset);
                if w == 0.0 {
                    return ZERO;
                }
                let x = t - onset;
                Complex64::from_polar(w * kappa.sqrt() * (-kappa * x / 2.0).exp(), carrier * x)
            }
            PulseShape::RisingExp { kappa, omega_c } => {
                let w = step(-t);
                if w == 0.0 {
                    return ZERO;
                }
                -w * kappa.sqrt() * (Complex64::new(kappa / 2.0, -omega_c) * t).exp()
            }
            PulseShape::Square { start, end } => {
                let w = step(t - start).min(step(end - t));
                Complex64::new(w / (end - start).sqrt(), 0.0)
            }
        }
    }
}

/// Analytic pulse placed on one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticSource {
    pub shape: PulseShape,
    pub channel: usize,
}

/// Complex samples `ξ_k(t_j)` for each channel `k` on a power-of-two grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    grid: UniformGrid,
    channels: Vec<Vec<Complex64>>,
    source: Option<AnalyticSource>,
}

impl Pulse {
    pub fn sampled(grid: UniformGrid, channels: Vec<Vec<Complex64>>) -> Result<Self> {
        if !grid.len().is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "pulse grids need a power-of-two length, got {}",
                grid.len()
            )));
        }
        if channels.is_empty() {
            return Err(Error::InvalidArgument("pulse needs at least one channel".into()));
        }
        if let Some(bad) = channels.iter().find(|c| c.len() != grid.len()) {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: bad.len(),
            });
        }
        if channels.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("pulse samples"));
        }
        Ok(Self {
            grid,
            channels,
            source: None,
        })
    }

    /// Materializes `shape` on `channel` of an `n_channels` pulse, other
    /// channels in vacuum.
    pub fn analytic(shape: PulseShape, grid: UniformGrid, n_channels: usize, channel: usize) -> Result<Self> {
        shape.check()?;
        if channel >= n_channels {
            return Err(Error::InvalidArgument(format!(
                "channel {channel} out of range for {n_channels} channels"
            )));
        }
        let mut channels = vec![vec![ZERO; grid.len()]; n_channels];
        channels[channel] = grid.points().map(|t| shape.amplitude(t)).collect();
        let mut p = Self::sampled(grid, channels)?;
        p.source = Some(AnalyticSource { shape, channel });
        Ok(p)
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.grid.step()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, k: usize) -> &[Complex64] {
        &self.channels[k]
    }

    pub fn channels(&self) -> &[Vec<Complex64>] {
        &self.channels
    }

    pub fn source(&self) -> Option<&AnalyticSource> {
        self.source.as_ref()
    }

    /// Re-samples the analytic source on the pulse's grid.
    pub fn rematerialize(&self) -> Result<Self> {
        match self.source {
            Some(src) => Self::analytic(src.shape, self.grid, self.n_channels(), src.channel),
            None => Ok(self.clone()),
        }
    }

    /// `Σ_k Σ_j |ξ_k(t_j)|² dt`
    pub fn energy(&self) -> f64 {
        self.channels.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>() * self.dt()
    }

    pub fn norm(&self) -> f64 {
        self.energy().sqrt()
    }

    /// Energy carried by samples with `t < t_ref`.
    pub fn energy_before(&self, t_ref: f64) -> f64 {
        let cut = self.grid.points().take_while(|&t| t < t_ref).count();
        self.channels
            .iter()
            .flat_map(|c| &c[..cut])
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            * self.dt()
    }

    pub fn normalize(&self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(Error::ZeroPulse);
        }
        Ok(self.map_samples(|z| z / norm))
    }

    fn map_samples(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            channels: self.channels.iter().map(|c| c.iter().map(|&z| f(z)).collect()).collect(),
            source: self.source,
        }
    }

    /// `Σ_k Σ_j conj(self) · other · dt`
    pub fn inner(&self, other: &Pulse) -> Result<Complex64> {
        self.check_compatible(other)?;
        let s: Complex64 = self
            .channels
            .iter()
            .zip(&other.channels)
            .flat_map(|(a, b)| a.iter().zip(b))
            .map(|(x, y)| x.conj() * y)
            .sum();
        Ok(s * self.dt())
    }

    pub fn l2_distance(&self, other: &Pulse) -> Result<f64> {
        self.check_compatible(other)?;
        let s: f64 = self
            .channels
            .iter()
            .zip(&other.channels)
            .flat_map(|(a, b)| a.iter().zip(b))
            .map(|(x, y)| (x - y).norm_sqr())
            .sum();
        Ok((s * self.dt()).sqrt())
    }

    /// `min_φ ‖self - e^{iφ} other‖`
    pub fn l2_distance_up_to_phase(&self, other: &Pulse) -> Result<f64> {
        let overlap = other.inner(self)?;
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        self.l2_distance(&other.map_samples(|z| z * phase))
    }

    /// Delays the samples by `samples` grid steps (negative advances),
    /// filling with vacuum.
    pub fn shifted(&self, samples: isize) -> Self {
        let n = self.len() as isize;
        let channels = self
            .channels
            .iter()
            .map(|c| {
                (0..n)
                    .map(|j| {
                        let src = j - samples;
                        if (0..n).contains(&src) {
                            c[src as usize]
                        } else {
                            ZERO
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            grid: self.grid,
            channels,
            source: None,
        }
    }

    fn check_compatible(&self, other: &Pulse) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument("pulses live on different grids".into()));
        }
        if self.n_channels() != other.n_channels() {
            return Err(Error::DimensionMismatch {
                expected: self.n_channels(),
                found: other.n_channels(),
            });
        }
        Ok(())
    }

    fn sample_vector(&self, j: usize) -> DVector<Complex64> {
        DVector::from_iterator(self.n_channels(), self.channels.iter().map(|c| c[j]))
    }
}

/// Continuous-normalization spectrum on the grid's DFT frequencies, in
/// ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub omegas: UniformGrid,
    /// Time grid the spectrum was taken from; needed to invert it.
    pub times: UniformGrid,
    pub channels: Vec<Vec<Complex64>>,
}

impl Spectrum {
    /// `Σ_k Σ |ξ̃_k|² dω / 2π`
    pub fn energy(&self) -> f64 {
        self.channels.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>() * self.omegas.step() / (2.0 * PI)
    }
}

fn dft_frequency(k: usize, n: usize, dt: f64) -> f64 {
    let signed = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
    2.0 * PI * signed / (n as f64 * dt)
}

pub fn fourier(p: &Pulse) -> Spectrum {
    let n = p.len();
    let dt = p.dt();
    let t0 = p.grid().start();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let half = n / 2;
    let dw = 2.0 * PI / (n as f64 * dt);
    let channels = p
        .channels()
        .iter()
        .map(|c| {
            let mut buf = c.clone();
            fft.process(&mut buf);
            (0..n)
                .map(|i| {
                    // Ascending order: bins n/2..n hold the negative frequencies.
                    let k = (i + half) % n;
                    let w = dft_frequency(k, n, dt);
                    buf[k] * Complex64::from_polar(dt, -w * t0)
                })
                .collect()
        })
        .collect();
    Spectrum {
        omegas: UniformGrid::new(-(half as f64) * dw, dw, n).expect("valid frequency grid"),
        times: *p.grid(),
        channels,
    }
}

pub fn inverse_fourier(s: &Spectrum) -> Result<Pulse> {
    let n = s.times.len();
    let dt = s.times.step();
    let t0 = s.times.start();
    let half = n / 2;
    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(n);
    let channels = s
        .channels
        .iter()
        .map(|c| {
            let mut buf = vec![ZERO; n];
            for (i, &z) in c.iter().enumerate() {
                let k = (i + half) % n;
                let w = dft_frequency(k, n, dt);
                buf[k] = z * Complex64::from_polar(1.0 / (n as f64 * dt), w * t0);
            }
            ifft.process(&mut buf);
            buf
        })
        .collect();
    Pulse::sampled(s.times, channels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeResult {
    pub output: Pulse,
    pub input_norm: f64,
    pub output_norm: f64,
}

impl ShapeResult {
    fn new(input: &Pulse, output: Pulse) -> Self {
        Self {
            input_norm: input.norm(),
            output_norm: output.norm(),
            output,
        }
    }
}

fn check_channels(p: &Pulse, f: &PhotonTransfer) -> Result<()> {
    if p.n_channels() != f.channels() {
        return Err(Error::DimensionMismatch {
            expected: f.channels(),
            found: p.n_channels(),
        });
    }
    Ok(())
}

/// Shapes `p` by multiplying its spectrum with `G(iω)`.
///
/// The window must outlast the filter's settling time (kernel tail energy
/// below [`KERNEL_TAIL`]); the input is zero-padded to twice its length so
/// the result is a linear, not circular, convolution over the window.
pub fn shape_fft(p: &Pulse, f: &PhotonTransfer) -> Result<ShapeResult> {
    check_channels(p, f)?;
    let n = p.len();
    let dt = p.dt();
    let required = f.settling_time(KERNEL_TAIL);
    if p.grid().span() < required {
        return Err(Error::GridTooShort {
            span: p.grid().span(),
            required,
        });
    }
    let max_pole = f.max_pole_magnitude();
    if max_pole * dt > FFT_MAX_POLE_STEP {
        return Err(Error::GridTooCoarse {
            dt,
            max_dt: FFT_MAX_POLE_STEP / max_pole,
        });
    }

    let m = 2 * n;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    let ifft = planner.plan_fft_inverse(m);
    let spectra: Vec<Vec<Complex64>> = p
        .channels()
        .iter()
        .map(|c| {
            let mut buf = c.clone();
            buf.resize(m, ZERO);
            fft.process(&mut buf);
            buf
        })
        .collect();

    let k = p.n_channels();
    let direct = f.feedthrough();
    let mut smooth = vec![vec![ZERO; m]; k];
    let mut x = DVector::zeros(k);
    for bin in 0..m {
        let smooth_gain = f.response_at(dft_frequency(bin, m, dt)) - &direct;
        for (ch, s) in spectra.iter().enumerate() {
            x[ch] = s[bin];
        }
        let y = smooth_gain * &x;
        for (ch, out) in smooth.iter_mut().enumerate() {
            out[bin] = y[ch];
        }
    }
    for buf in &mut smooth {
        ifft.process(buf);
    }

    let scale = 1.0 / m as f64;
    let mut channels = vec![vec![ZERO; n]; k];
    for j in 0..n {
        let fed = &direct * p.sample_vector(j);
        for ch in 0..k {
            channels[ch][j] = fed[ch] + smooth[ch][j] * scale;
        }
    }
    let output = Pulse::sampled(*p.grid(), channels)?;
    Ok(ShapeResult::new(p, output))
}

/// Shapes `p` in the time domain, stage by stage.
///
/// Each stage integrates `η' = aη + θ^dag S ξ(t)` from `η(t_start) = 0` with
/// classical fourth-order Runge-Kutta, the input linearly interpolated
/// between samples, and emits `ξ' = Sξ + hθη`.
pub fn shape_ode(p: &Pulse, f: &PhotonTransfer) -> Result<ShapeResult> {
    check_channels(p, f)?;
    let dt = p.dt();
    let max_pole = f.max_pole_magnitude();
    if max_pole * dt > ODE_MAX_POLE_STEP {
        return Err(Error::GridTooCoarse {
            dt,
            max_dt: ODE_MAX_POLE_STEP / max_pole,
        });
    }
    let n = p.len();
    let k = p.n_channels();
    let mut samples: Vec<DVector<Complex64>> = (0..n).map(|j| p.sample_vector(j)).collect();
    for stage in f.stages() {
        let s = stage.scattering();
        let a = stage.pole();
        let drive_row = stage.theta().adjoint() * s;
        let drive: Vec<Complex64> = samples.iter().map(|x| (&drive_row * x)[(0, 0)]).collect();
        let emit = stage.theta() * Complex64::new(stage.h(), 0.0);

        let mut eta = ZERO;
        let mut next = Vec::with_capacity(n);
        for j in 0..n {
            next.push(s * &samples[j] + &emit * eta);
            if j + 1 < n {
                let (u0, u1) = (drive[j], drive[j + 1]);
                let um = 0.5 * (u0 + u1);
                let k1 = a * eta + u0;
                let k2 = a * (eta + 0.5 * dt * k1) + um;
                let k3 = a * (eta + 0.5 * dt * k2) + um;
                let k4 = a * (eta + dt * k3) + u1;
                eta += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        }
        samples = next;
    }
    let channels = (0..k).map(|ch| samples.iter().map(|x| x[ch]).collect()).collect();
    let output = Pulse::sampled(*p.grid(), channels)?;
    Ok(ShapeResult::new(p, output))
}
