//! `(S, L, H0)` models, the ground-state conditions under which a model acts
//! linearly on single-photon inputs, and network composition.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{self, commutator, ground_state, EigenRelationReport, Operator};

/// Tolerance on `‖S^dag S - I‖` and `‖H0 - H0^dag‖` accepted by constructors.
pub const STRUCTURE_TOL: f64 = 1e-10;

/// Loops with `|1 - S22|` at or below this are rejected by [`feedback_reduce`].
pub const SINGULAR_LOOP_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// System-field coupling, one operator per channel.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    /// `L = θᵀ L0`: every channel couples through the same operator.
    Factored { theta: DVector<Complex64>, l0: Operator },
    /// Composite couplings that no longer share a common operator.
    General(Vec<Operator>),
}

impl Coupling {
    pub fn channels(&self) -> usize {
        match self {
            Coupling::Factored { theta, .. } => theta.len(),
            Coupling::General(ls) => ls.len(),
        }
    }

    /// Per-channel coupling operators `L_k`.
    pub fn operators(&self) -> Vec<Operator> {
        match self {
            Coupling::Factored { theta, l0 } => theta.iter().map(|&c| l0.scale(c)).collect(),
            Coupling::General(ls) => ls.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlhModel {
    scattering: DMatrix<Complex64>,
    coupling: Coupling,
    hamiltonian: Operator,
}

impl SlhModel {
    /// Model with factored coupling `L = θᵀ L0`.
    pub fn new(scattering: DMatrix<Complex64>, theta: DVector<Complex64>, l0: Operator, h0: Operator) -> Result<Self> {
        Self::with_coupling(scattering, Coupling::Factored { theta, l0 }, h0)
    }

    pub fn with_coupling(scattering: DMatrix<Complex64>, coupling: Coupling, h0: Operator) -> Result<Self> {
        let k = coupling.channels();
        if k == 0 {
            return Err(Error::InvalidArgument("model needs at least one channel".into()));
        }
        if !scattering.is_square() {
            return Err(Error::NotSquare {
                rows: scattering.nrows(),
                cols: scattering.ncols(),
            });
        }
        if scattering.nrows() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: scattering.nrows(),
            });
        }
        if scattering.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("scattering matrix"));
        }
        let n = h0.dim();
        match &coupling {
            Coupling::Factored { theta, l0 } => {
                if theta.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::NonFinite("theta"));
                }
                if l0.dim() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: l0.dim() });
                }
            }
            Coupling::General(ls) => {
                if let Some(l) = ls.iter().find(|l| l.dim() != n) {
                    return Err(Error::DimensionMismatch { expected: n, found: l.dim() });
                }
            }
        }
        let unitarity = (scattering.adjoint() * &scattering - DMatrix::<Complex64>::identity(k, k)).norm();
        if unitarity > STRUCTURE_TOL {
            return Err(Error::NotUnitary(unitarity));
        }
        let herm = h0.hermiticity_defect();
        if herm > STRUCTURE_TOL {
            return Err(Error::NotHermitian(herm));
        }
        Ok(Self {
            scattering,
            coupling,
            hamiltonian: h0,
        })
    }

    /// `(1, √κ σ-, (ω_c/2) σz)`
    pub fn two_level(kappa: f64, omega_c: f64) -> Self {
        Self::two_level_channels(DMatrix::identity(1, 1), &[Complex64::new(kappa.sqrt(), 0.0)], omega_c)
            .expect("two-level model is well formed")
    }

    /// Two-level atom `(S, θᵀσ-, (ω_c/2) σz)` with one coupling per channel.
    pub fn two_level_channels(scattering: DMatrix<Complex64>, theta: &[Complex64], omega_c: f64) -> Result<Self> {
        Self::new(
            scattering,
            DVector::from_column_slice(theta),
            Operator::sigma_minus(),
            Operator::sigma_z().scale(Complex64::new(omega_c / 2.0, 0.0)),
        )
    }

    /// The trivial system `(I, 0, 0)`.
    pub fn identity(channels: usize, levels: usize) -> Self {
        Self {
            scattering: DMatrix::identity(channels, channels),
            coupling: Coupling::Factored {
                theta: DVector::zeros(channels),
                l0: Operator::zeros(levels),
            },
            hamiltonian: Operator::zeros(levels),
        }
    }

    pub fn channels(&self) -> usize {
        self.coupling.channels()
    }

    pub fn levels(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn scattering(&self) -> &DMatrix<Complex64> {
        &self.scattering
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn theta(&self) -> Option<&DVector<Complex64>> {
        match &self.coupling {
            Coupling::Factored { theta, .. } => Some(theta),
            Coupling::General(_) => None,
        }
    }

    pub fn l0(&self) -> Option<&Operator> {
        match &self.coupling {
            Coupling::Factored { l0, .. } => Some(l0),
            Coupling::General(_) => None,
        }
    }

    pub fn is_factored(&self) -> bool {
        matches!(self.coupling, Coupling::Factored { .. })
    }

    /// Lifts the model onto `site` of an `n_sites`-fold tensor product.
    pub fn embed(&self, site: usize, n_sites: usize) -> Result<Self> {
        let coupling = match &self.coupling {
            Coupling::Factored { theta, l0 } => Coupling::Factored {
                theta: theta.clone(),
                l0: operator::embed_site(l0, site, n_sites)?,
            },
            Coupling::General(ls) => Coupling::General(
                ls.iter()
                    .map(|l| operator::embed_site(l, site, n_sites))
                    .collect::<Result<_>>()?,
            ),
        };
        Ok(Self {
            scattering: self.scattering.clone(),
            coupling,
            hamiltonian: operator::embed_site(&self.hamiltonian, site, n_sites)?,
        })
    }

    pub fn validate(&self, tol: f64) -> ValidationReport {
        validate_single_photon_linearity(self, tol)
    }
}

/// Scalars extracted from a model that passes validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams {
    /// Ground-state energy, `H0 |0_s> = α |0_s>`.
    pub alpha: Complex64,
    /// `<0_s| [L0, H0] = β <0_s| L0`
    pub beta: Complex64,
    /// `[L0^dag, L0] |0_s> = h |0_s>`
    pub h: f64,
    /// Pole of the single-photon transfer function.
    pub a: Complex64,
}

/// `a = -iβ + ½ (Σ|c_k|²) h`
pub fn pole(beta: Complex64, h: f64, theta: &DVector<Complex64>) -> Complex64 {
    -I * beta + 0.5 * theta.norm_squared() * h
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub holds: bool,
    pub residual: f64,
    pub value: Option<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ConditionCheck {
    fn from_report(r: EigenRelationReport) -> Self {
        Self {
            holds: r.holds,
            residual: r.residual,
            value: r.eigenvalue,
            note: None,
        }
    }

    fn not_evaluated(note: &str) -> Self {
        Self {
            holds: false,
            residual: f64::INFINITY,
            value: None,
            note: Some(note.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub factored: bool,
    /// `H0 |0_s> = α |0_s>`
    pub ground_energy: ConditionCheck,
    /// `L0 |0_s> = 0`
    pub coupling_annihilates: ConditionCheck,
    /// `<0_s| [L0, H0] = β <0_s| L0`
    pub commutator_proportional: ConditionCheck,
    /// `[L0^dag, L0] |0_s> = h |0_s>`
    pub number_eigenrelation: ConditionCheck,
    /// `Re(a) < 0`
    pub stability: ConditionCheck,
    pub params: Option<DerivedParams>,
}

impl ValidationReport {
    pub fn conditions(&self) -> [(&'static str, &ConditionCheck); 5] {
        [
            ("ground_energy", &self.ground_energy),
            ("coupling_annihilates", &self.coupling_annihilates),
            ("commutator_proportional", &self.commutator_proportional),
            ("number_eigenrelation", &self.number_eigenrelation),
            ("stability", &self.stability),
        ]
    }

    /// Names of the conditions that do not hold.
    pub fn failed(&self) -> Vec<&'static str> {
        self.conditions()
            .into_iter()
            .filter(|(_, c)| !c.holds)
            .map(|(name, _)| name)
            .collect()
    }

    pub fn summary(&self) -> String {
        if self.passed {
            return "all conditions hold".into();
        }
        let mut parts: Vec<String> = Vec::new();
        if !self.factored {
            parts.push("coupling is not of the form θᵀL0".into());
        }
        for (name, c) in self.conditions() {
            if !c.holds {
                match &c.note {
                    Some(note) => parts.push(format!("{name} ({note})")),
                    None => parts.push(format!("{name} (residual {:.3e})", c.residual)),
                }
            }
        }
        format!("failed: {}", parts.join(", "))
    }
}

/// Checks the ground-state conditions with strict stability `Re(a) < 0`.
pub fn validate_single_photon_linearity(m: &SlhModel, tol: f64) -> ValidationReport {
    validate_with_margin(m, tol, 0.0)
}

/// As [`validate_single_photon_linearity`], requiring `Re(a) < -stability_margin`.
pub fn validate_with_margin(m: &SlhModel, tol: f64, stability_margin: f64) -> ValidationReport {
    let Coupling::Factored { theta, l0 } = &m.coupling else {
        let skip = || ConditionCheck::not_evaluated("coupling is not of the form θᵀL0");
        return ValidationReport {
            passed: false,
            factored: false,
            ground_energy: skip(),
            coupling_annihilates: skip(),
            commutator_proportional: skip(),
            number_eigenrelation: skip(),
            stability: skip(),
            params: None,
        };
    };
    let h0 = &m.hamiltonian;
    let g = ground_state(m.levels());
    let row = g.transpose();

    // Dimensions were checked at construction, so these cannot fail.
    let ground_energy = ConditionCheck::from_report(operator::vector_eigen_test(h0, &g, tol).expect("dims"));

    let annihilated = l0.apply(&g).expect("dims").norm();
    let coupling_annihilates = ConditionCheck {
        holds: annihilated <= tol,
        residual: annihilated,
        value: None,
        note: None,
    };

    let k = commutator(l0, h0).expect("dims");
    let mut commutator_proportional =
        ConditionCheck::from_report(operator::row_proportionality_test(&k, l0, &row, tol).expect("dims"));
    if commutator_proportional.holds && commutator_proportional.value.is_none() {
        // <0_s|L0 = 0 and <0_s|[L0,H0] = 0: any β works, take 0.
        commutator_proportional.value = Some(ZERO);
    }

    let number = commutator(&l0.adjoint(), l0).expect("dims");
    let mut number_eigenrelation = ConditionCheck::from_report(operator::vector_eigen_test(&number, &g, tol).expect("dims"));
    if let Some(h) = number_eigenrelation.value {
        if h.im.abs() > tol {
            number_eigenrelation.holds = false;
            number_eigenrelation.note = Some(format!("eigenvalue has imaginary part {:.3e}", h.im));
        }
    }

    let stability = match (commutator_proportional.value, number_eigenrelation.value) {
        (Some(beta), Some(h)) if commutator_proportional.holds && number_eigenrelation.holds => {
            let a = pole(beta, h.re, theta);
            let holds = a.re < -stability_margin;
            let note = if holds {
                None
            } else if a.re == 0.0 {
                Some("marginally stable: Re(a) = 0".to_string())
            } else if a.re > 0.0 {
                Some(format!("unstable: Re(a) = {:e} > 0", a.re))
            } else {
                Some(format!("Re(a) = {:e} is inside the stability margin {stability_margin:e}", a.re))
            };
            ConditionCheck {
                holds,
                residual: a.re.max(0.0),
                value: Some(a),
                note,
            }
        }
        _ => ConditionCheck::not_evaluated("needs β and h"),
    };

    let passed = ground_energy.holds
        && coupling_annihilates.holds
        && commutator_proportional.holds
        && number_eigenrelation.holds
        && stability.holds;
    let params = if passed {
        Some(DerivedParams {
            alpha: ground_energy.value.expect("checked"),
            beta: commutator_proportional.value.expect("checked"),
            h: number_eigenrelation.value.expect("checked").re,
            a: stability.value.expect("checked"),
        })
    } else {
        None
    };
    ValidationReport {
        passed,
        factored: true,
        ground_energy,
        coupling_annihilates,
        commutator_proportional,
        number_eigenrelation,
        stability,
        params,
    }
}

/// Cascade `g1 → g2`: `(S2 S1, L2 + S2 L1, H1 + H2 + Im{L2^dag S2 L1})`.
///
/// Both models must already live on the same Hilbert space (see
/// [`SlhModel::embed`]). The result keeps the `θᵀL0` form when the composed
/// couplings share a common operator, and falls back to [`Coupling::General`]
/// otherwise.
pub fn series_product(g2: &SlhModel, g1: &SlhModel) -> Result<SlhModel> {
    if g1.channels() != g2.channels() {
        return Err(Error::DimensionMismatch {
            expected: g2.channels(),
            found: g1.channels(),
        });
    }
    if g1.levels() != g2.levels() {
        return Err(Error::DimensionMismatch {
            expected: g2.levels(),
            found: g1.levels(),
        });
    }
    let k = g1.channels();
    let l1 = g1.coupling.operators();
    let l2 = g2.coupling.operators();
    let s2 = &g2.scattering;

    // S2 L1, channel by channel.
    let s2l1: Vec<Operator> = (0..k)
        .map(|i| {
            (0..k).fold(Operator::zeros(g1.levels()), |acc, j| &acc + &l1[j].scale(s2[(i, j)]))
        })
        .collect();
    let coupled: Vec<Operator> = l2.iter().zip(&s2l1).map(|(a, b)| a + b).collect();
    let cross = l2
        .iter()
        .zip(&s2l1)
        .fold(Operator::zeros(g1.levels()), |acc, (a, b)| &acc + &(&a.adjoint() * b));
    let h = &(&g1.hamiltonian + &g2.hamiltonian) + &cross.imag_part();
    // Im{X} of a Hermitian sum is exactly Hermitian up to rounding; symmetrize.
    let h = Operator::new((h.matrix() + h.matrix().adjoint()) * Complex64::new(0.5, 0.0))?;

    let candidates: Vec<&Operator> = [g2.l0(), g1.l0()].into_iter().flatten().collect();
    let coupling = factor_couplings(&coupled, &candidates);
    SlhModel::with_coupling(s2 * &g1.scattering, coupling, h)
}

/// Tries to write `ls` as `θᵀ L0`, trying `candidates` for `L0` first and then
/// the first nonzero `L_k` scaled so its largest entry is 1.
fn factor_couplings(ls: &[Operator], candidates: &[&Operator]) -> Coupling {
    let scale: f64 = ls.iter().map(Operator::frobenius_norm).sum::<f64>().max(1.0);
    let try_factor = |l0: &Operator| -> Option<DVector<Complex64>> {
        let nn = l0.inner(l0).re;
        if nn == 0.0 {
            return None;
        }
        let theta = DVector::from_iterator(ls.len(), ls.iter().map(|l| l0.inner(l) / nn));
        let residual: f64 = ls
            .iter()
            .zip(theta.iter())
            .map(|(l, &c)| (l - &l0.scale(c)).frobenius_norm())
            .sum();
        (residual <= 1e-12 * scale).then_some(theta)
    };

    if ls.iter().all(|l| l.frobenius_norm() == 0.0) {
        let l0 = candidates
            .first()
            .map(|&c| c.clone())
            .unwrap_or_else(|| Operator::zeros(ls[0].dim()));
        return Coupling::Factored {
            theta: DVector::zeros(ls.len()),
            l0,
        };
    }
    for &cand in candidates {
        if let Some(theta) = try_factor(cand) {
            return Coupling::Factored { theta, l0: cand.clone() };
        }
    }
    let first = ls.iter().find(|l| l.frobenius_norm() > 0.0).expect("nonzero coupling");
    let max = first.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = *first
        .matrix()
        .iter()
        .find(|z| z.norm() >= max * (1.0 - 1e-12))
        .expect("nonzero entry");
    let l0 = first.scale(pivot.inv());
    match try_factor(&l0) {
        Some(theta) => Coupling::Factored { theta, l0 },
        None => Coupling::General(ls.to_vec()),
    }
}

/// Single-channel model obtained by feeding output channel 2 back into input
/// channel 2.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackReduction {
    pub model: SlhModel,
    /// Frequency shift added to the excited-state energy.
    pub delta: f64,
    /// `S12 (1 - S22)^{-1}`
    pub loop_gain: Complex64,
}

/// Closes the loop on channel 2 of a two-channel factored model.
///
/// `S' = S11 + S12 (1-S22)^{-1} S21`, `θ' = c1 + S12 (1-S22)^{-1} c2`, and
/// `H' = H0 + Δ L0^dag L0` with
/// `Δ = Im(c1* c2 S12 (1-S22)^{-1} + |c2|² S22 (1-S22)^{-1})`.
/// For `L0 = σ-`, `L0^dag L0 = (σz + 1)/2`. Real `S` gives `Δ = 0`.
pub fn feedback_reduce(m: &SlhModel) -> Result<FeedbackReduction> {
    if m.channels() != 2 {
        return Err(Error::InvalidArgument(format!(
            "feedback reduction needs 2 channels, model has {}",
            m.channels()
        )));
    }
    let (Some(theta), Some(l0)) = (m.theta(), m.l0()) else {
        return Err(Error::InvalidArgument("feedback reduction needs a θᵀL0 coupling".into()));
    };
    if theta.iter().any(|c| c.re < 0.0) {
        return Err(Error::InvalidArgument(
            "feedback reduction needs couplings with nonnegative real part".into(),
        ));
    }
    let s = &m.scattering;
    let open = Complex64::new(1.0, 0.0) - s[(1, 1)];
    if open.norm() <= SINGULAR_LOOP_TOL {
        return Err(Error::SingularLoop(open.norm()));
    }
    let gain = s[(0, 1)] / open;
    let (c1, c2) = (theta[0], theta[1]);
    let s_red = s[(0, 0)] + gain * s[(1, 0)];
    let theta_red = c1 + gain * c2;
    let delta = (c1.conj() * c2 * gain + c2.norm_sqr() * s[(1, 1)] / open).im;
    let number = &l0.adjoint() * l0;
    let h = &m.hamiltonian + &number.scale(Complex64::new(delta, 0.0));
    let model = SlhModel::new(
        DMatrix::from_element(1, 1, s_red),
        DVector::from_element(1, theta_red),
        l0.clone(),
        h,
    )?;
    Ok(FeedbackReduction {
        model,
        delta,
        loop_gain: gain,
    })
}
