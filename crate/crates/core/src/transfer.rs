//! Single-photon transfer filters.
//!
//! A stage realizes the impulse response `g(t) = hθθ^dag e^{at} S + δ(t) S`
//! for `t >= 0` (zero before), whose frequency response under the
//! `∫ e^{-iωt} f(t) dt` convention is `G(iω) = S + hθθ^dag S / (iω - a)`.
//! Cascades keep the stage list and multiply responses pointwise, later
//! stages on the left.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::slh::{validate_single_photon_linearity, SlhModel};

/// Residual allowed between the closed-form `G(0)` and quadrature of the kernel.
pub const SELF_TEST_TOL: f64 = 1e-9;

const I: Complex64 = Complex64::new(0.0, 1.0);

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    scattering: DMatrix<Complex64>,
    theta: DVector<Complex64>,
    h: f64,
    pole: Complex64,
    /// `hθθ^dag S`
    residue: DMatrix<Complex64>,
}

impl Stage {
    pub fn new(scattering: DMatrix<Complex64>, theta: DVector<Complex64>, h: f64, pole: Complex64) -> Result<Self> {
        let k = theta.len();
        if k == 0 {
            return Err(Error::InvalidArgument("stage needs at least one channel".into()));
        }
        if scattering.nrows() != k || scattering.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: scattering.nrows(),
            });
        }
        if !(pole.re < 0.0) || !pole.im.is_finite() || !h.is_finite() {
            return Err(Error::Unstable(pole.re));
        }
        let residue = &theta * theta.adjoint() * &scattering * Complex64::new(h, 0.0);
        let stage = Self {
            scattering,
            theta,
            h,
            pole,
            residue,
        };
        stage.self_test()?;
        Ok(stage)
    }

    pub fn channels(&self) -> usize {
        self.theta.len()
    }

    pub fn scattering(&self) -> &DMatrix<Complex64> {
        &self.scattering
    }

    pub fn theta(&self) -> &DVector<Complex64> {
        &self.theta
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn pole(&self) -> Complex64 {
        self.pole
    }

    /// Coefficient matrix `hθθ^dag S` of the smooth kernel.
    pub fn residue(&self) -> &DMatrix<Complex64> {
        &self.residue
    }

    /// `S + hθθ^dag S / (iω - a)`
    pub fn response(&self, omega: f64) -> DMatrix<Complex64> {
        &self.scattering + &self.residue * (I * omega - self.pole).inv()
    }

    /// Smooth part of the impulse response at `t`; zero for `t < 0`.
    pub fn kernel(&self, t: f64) -> DMatrix<Complex64> {
        if t < 0.0 {
            return DMatrix::zeros(self.channels(), self.channels());
        }
        &self.residue * (self.pole * t).exp()
    }

    /// Time after which the kernel carries less than `tail` of its energy.
    pub fn settling_time(&self, tail: f64) -> f64 {
        -tail.ln() / (2.0 * -self.pole.re)
    }

    /// Compares `G(0)` against `S + hθθ^dag S ∫₀^∞ e^{at} dt` evaluated by
    /// composite Gauss-Legendre quadrature on cells of length `1/|a|`.
    fn self_test(&self) -> Result<()> {
        let a = self.pole;
        let horizon = 40.0 / -a.re;
        let cells = (horizon * a.norm()).ceil().max(1.0) as usize;
        let width = horizon / cells as f64;
        let half = 0.5 * width;
        let mut integral = Complex64::new(0.0, 0.0);
        for c in 0..cells {
            let mid = (c as f64 + 0.5) * width;
            let mut cell = Complex64::new(0.0, 0.0);
            for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
                cell += w * ((a * (mid - half * x)).exp() + (a * (mid + half * x)).exp());
            }
            integral += cell * half;
        }
        let direct = &self.scattering + &self.residue * integral;
        let scale = 1.0 + self.scattering.norm() + self.residue.norm() / a.norm();
        let residual = (self.response(0.0) - direct).norm() / scale;
        if residual < SELF_TEST_TOL {
            Ok(())
        } else {
            Err(Error::SelfTest(residual))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhotonTransfer {
    stages: Vec<Stage>,
}

impl PhotonTransfer {
    /// Filter realized by a model that passes the single-photon linearity
    /// conditions at tolerance `tol`.
    pub fn from_model(m: &SlhModel, tol: f64) -> Result<Self> {
        let report = validate_single_photon_linearity(m, tol);
        let Some(params) = report.params else {
            return Err(Error::Validation(Box::new(report)));
        };
        let theta = m.theta().expect("validated models are factored").clone();
        let stage = Stage::new(m.scattering().clone(), theta, params.h, params.a)?;
        Ok(Self::from_stage(stage))
    }

    pub fn from_stage(stage: Stage) -> Self {
        Self { stages: vec![stage] }
    }

    /// `G ≡ I`, realized as a decoupled stage with an artificial pole at -1.
    pub fn identity(channels: usize) -> Self {
        let stage = Stage::new(
            DMatrix::identity(channels, channels),
            DVector::zeros(channels),
            0.0,
            Complex64::new(-1.0, 0.0),
        )
        .expect("identity stage is valid");
        Self::from_stage(stage)
    }

    pub fn channels(&self) -> usize {
        self.stages[0].channels()
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// `self` followed by `next`.
    pub fn cascade(&self, next: &PhotonTransfer) -> Result<Self> {
        if self.channels() != next.channels() {
            return Err(Error::DimensionMismatch {
                expected: self.channels(),
                found: next.channels(),
            });
        }
        let mut stages = self.stages.clone();
        stages.extend(next.stages.iter().cloned());
        Ok(Self { stages })
    }

    /// `n` copies of `self` in series.
    pub fn repeat(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("cascade length must be at least 1".into()));
        }
        let stages = (0..n).flat_map(|_| self.stages.iter().cloned()).collect();
        Ok(Self { stages })
    }

    /// Overall direct feedthrough, the response as `ω → ±∞`.
    pub fn feedthrough(&self) -> DMatrix<Complex64> {
        let k = self.channels();
        self.stages
            .iter()
            .fold(DMatrix::identity(k, k), |acc, s| s.scattering() * acc)
    }

    pub fn response_at(&self, omega: f64) -> DMatrix<Complex64> {
        let k = self.channels();
        self.stages
            .iter()
            .fold(DMatrix::identity(k, k), |acc, s| s.response(omega) * acc)
    }

    pub fn frequency_response(&self, omegas: &UniformGrid) -> FrequencyResponse {
        FrequencyResponse {
            omegas: *omegas,
            values: omegas.points().map(|w| self.response_at(w)).collect(),
        }
    }

    /// Samples the smooth kernel on `ts` and returns it with the feedthrough
    /// matrix, which multiplies `δ(t)` and is never discretized.
    pub fn impulse_response(&self, ts: &UniformGrid) -> Result<ImpulseResponse> {
        let [stage] = self.stages.as_slice() else {
            return Err(Error::MultiStage);
        };
        Ok(ImpulseResponse {
            times: *ts,
            kernel: ts.points().map(|t| stage.kernel(t)).collect(),
            feedthrough: stage.scattering().clone(),
        })
    }

    /// Window length after which the cascade's response has settled below
    /// `tail` of its energy, stage by stage.
    pub fn settling_time(&self, tail: f64) -> f64 {
        self.stages.iter().map(|s| s.settling_time(tail)).sum()
    }

    /// Largest `|a|` over the stages.
    pub fn max_pole_magnitude(&self) -> f64 {
        self.stages.iter().map(|s| s.pole().norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub omegas: UniformGrid,
    pub values: Vec<DMatrix<Complex64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    pub times: UniformGrid,
    pub kernel: Vec<DMatrix<Complex64>>,
    pub feedthrough: DMatrix<Complex64>,
}
