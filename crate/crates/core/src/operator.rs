//! Dense operators on small finite-level Hilbert spaces.
//!
//! Basis convention: index 0 is the ground state `|0_s>`, index 1 the first
//! excited state. For qubits `sigma_z = |1><1| - |0><0|`, `sigma_+ = |1><0|`,
//! `sigma_- = |0><1|`. Tensor products put site 0 in the leftmost factor.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default tolerance for eigen-relation tests.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Default cap on the total dimension produced by [`embed_site`].
pub const DEFAULT_TENSOR_CAP: usize = 64;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square complex matrix acting on `C^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator(DMatrix<Complex64>);

impl Operator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        if matrix.nrows() == 0 {
            return Err(Error::InvalidArgument("operator dimension must be positive".into()));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("operator"));
        }
        Ok(Self(matrix))
    }

    /// Builds an operator from row-major entries.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    /// `|1><1| - |0><0|`
    pub fn sigma_z() -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_vec(vec![-ONE, ONE])))
    }

    /// Raising operator `|1><0|`.
    pub fn sigma_plus() -> Self {
        let mut m = DMatrix::zeros(2, 2);
        m[(1, 0)] = ONE;
        Self(m)
    }

    /// Lowering operator `|0><1|`.
    pub fn sigma_minus() -> Self {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = ONE;
        Self(m)
    }

    pub fn sigma_x() -> Self {
        &Self::sigma_plus() + &Self::sigma_minus()
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self(&self.0 * c)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Frobenius inner product `tr(A^dag B)`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.0.dotc(&other.0)
    }

    /// `‖A - A^dag‖_F`
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.0 - self.0.adjoint()).norm()
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        check_dim(self.dim(), v.len())?;
        Ok(&self.0 * v)
    }

    /// Covector product `row * A`.
    pub fn apply_left(&self, row: &RowDVector<Complex64>) -> Result<RowDVector<Complex64>> {
        check_dim(self.dim(), row.len())?;
        Ok(row * &self.0)
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// Operator imaginary part `(X - X^dag) / 2i`.
    pub fn imag_part(&self) -> Self {
        Self((&self.0 - self.0.adjoint()) * Complex64::new(0.0, -0.5))
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        check_dim(self.dim(), rhs.dim())?;
        Ok(Self(&self.0 * &rhs.0))
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        check_dim(self.dim(), rhs.dim())?;
        Ok(Self(&self.0 + &rhs.0))
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    /// Panics on dimension mismatch; use [`Operator::try_add`] for checked addition.
    fn add(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-&self.0)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Basis vector `|k>` in `C^dim`.
pub fn basis_vector(dim: usize, k: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(dim);
    v[k] = ONE;
    v
}

/// Ground state `|0_s>`.
pub fn ground_state(dim: usize) -> DVector<Complex64> {
    basis_vector(dim, 0)
}

/// `[A, B] = AB - BA`
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    check_dim(a.dim(), b.dim())?;
    Ok(Operator(&a.0 * &b.0 - &b.0 * &a.0))
}

/// Outcome of testing `A v = λ v` or `row·A = λ row·B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenRelationReport {
    pub holds: bool,
    /// `None` for degenerate inputs (zero test vector, or a vanishing
    /// reference row).
    pub eigenvalue: Option<Complex64>,
    pub residual: f64,
}

impl EigenRelationReport {
    fn degenerate() -> Self {
        Self {
            holds: false,
            eigenvalue: None,
            residual: f64::INFINITY,
        }
    }
}

/// Tests whether `v` is an eigenvector of `A`.
///
/// The eigenvalue estimate is the Rayleigh quotient `<v, Av>/<v, v>` and the
/// residual is `‖Av - λv‖ / ‖v‖`.
pub fn vector_eigen_test(a: &Operator, v: &DVector<Complex64>, tol: f64) -> Result<EigenRelationReport> {
    let av = a.apply(v)?;
    let vv = v.norm_squared();
    if vv == 0.0 {
        return Ok(EigenRelationReport::degenerate());
    }
    let lambda = v.dotc(&av) / vv;
    let residual = (av - v * lambda).norm() / vv.sqrt();
    Ok(EigenRelationReport {
        holds: residual <= tol,
        eigenvalue: Some(lambda),
        residual,
    })
}

/// Tests `row·A = λ (row·B)` with `λ` the least-squares fit.
///
/// The residual is relative to `‖row·B‖`. When `row·B` vanishes the relation
/// holds only if `row·A` vanishes too; `λ` is then left unset and the
/// residual is `‖row·A‖`.
pub fn row_proportionality_test(
    a: &Operator,
    b: &Operator,
    row: &RowDVector<Complex64>,
    tol: f64,
) -> Result<EigenRelationReport> {
    check_dim(a.dim(), b.dim())?;
    let ra = a.apply_left(row)?;
    let rb = b.apply_left(row)?;
    if row.norm_squared() == 0.0 {
        return Ok(EigenRelationReport::degenerate());
    }
    let bb = rb.norm_squared();
    if bb == 0.0 {
        let residual = ra.norm();
        return Ok(EigenRelationReport {
            holds: residual <= tol,
            eigenvalue: None,
            residual,
        });
    }
    let lambda = rb.dotc(&ra) / bb;
    let residual = (ra - rb * lambda).norm() / bb.sqrt();
    Ok(EigenRelationReport {
        holds: residual <= tol,
        eigenvalue: Some(lambda),
        residual,
    })
}

/// Embeds `a` on `site` of an `n_sites`-fold tensor product, identity elsewhere.
pub fn embed_site(a: &Operator, site: usize, n_sites: usize) -> Result<Operator> {
    embed_site_with_cap(a, site, n_sites, DEFAULT_TENSOR_CAP)
}

pub fn embed_site_with_cap(a: &Operator, site: usize, n_sites: usize, cap: usize) -> Result<Operator> {
    if site >= n_sites {
        return Err(Error::InvalidArgument(format!(
            "site {site} out of range for {n_sites} sites"
        )));
    }
    let d = a.dim();
    let mut total = 1usize;
    for _ in 0..n_sites {
        total = total.saturating_mul(d);
    }
    if total > cap {
        return Err(Error::TensorCap { dim: total, cap });
    }
    let id = Operator::identity(d);
    let mut out = Operator::identity(1);
    for k in 0..n_sites {
        out = out.kron(if k == site { a } else { &id });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_abs_diff(a: &Operator, b: &Operator) -> f64 {
        (a.matrix() - b.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn raising_lowering_commutator_is_sigma_z() {
        let k = commutator(&Operator::sigma_plus(), &Operator::sigma_minus()).unwrap();
        assert_eq!(k, Operator::sigma_z());
        // [σ+, σ-]|0> = -|0>
        let g = k.apply(&ground_state(2)).unwrap();
        assert_eq!(g[0], c(-1.0, 0.0));
        assert_eq!(g[1], c(0.0, 0.0));
    }

    #[test]
    fn self_commutator_vanishes() {
        let a = Operator::from_rows(&[vec![c(1.0, 2.0), c(0.5, 0.0)], vec![c(-3.0, 1.0), c(0.0, 4.0)]]).unwrap();
        assert_eq!(commutator(&a, &a).unwrap(), Operator::zeros(2));
    }

    #[test]
    fn lowering_with_sigma_z() {
        // By hand: σ-σz = |0><1|, σzσ- = -|0><1|.
        let k = commutator(&Operator::sigma_minus(), &Operator::sigma_z()).unwrap();
        assert_eq!(k, Operator::sigma_minus().scale(c(2.0, 0.0)));
    }

    #[test]
    fn commutator_rejects_mismatched_dims() {
        let err = commutator(&Operator::sigma_z(), &Operator::identity(3)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, found: 3 }));
    }

    #[test]
    fn ground_state_eigenvalue_of_qubit_hamiltonian() {
        let wc = 1.7;
        let h = Operator::sigma_z().scale(c(wc / 2.0, 0.0));
        let r = vector_eigen_test(&h, &ground_state(2), DEFAULT_TOL).unwrap();
        assert!(r.holds);
        assert_eq!(r.eigenvalue, Some(c(-wc / 2.0, 0.0)));
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn identity_has_every_vector_as_eigenvector() {
        let v = DVector::from_vec(vec![c(0.3, -1.0), c(2.0, 0.5), c(-0.1, 0.0)]);
        let r = vector_eigen_test(&Operator::identity(3), &v, DEFAULT_TOL).unwrap();
        assert!(r.holds);
        assert!((r.eigenvalue.unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert!(r.residual < 1e-15);
    }

    #[test]
    fn raising_operator_moves_ground_state_off_axis() {
        let r = vector_eigen_test(&Operator::sigma_plus(), &ground_state(2), DEFAULT_TOL).unwrap();
        assert!(!r.holds);
        assert_eq!(r.eigenvalue, Some(c(0.0, 0.0)));
        assert!((r.residual - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_is_degenerate() {
        let r = vector_eigen_test(&Operator::identity(2), &DVector::zeros(2), DEFAULT_TOL).unwrap();
        assert!(!r.holds);
        assert!(r.eigenvalue.is_none());
    }

    #[test]
    fn row_test_on_lowering_commutator() {
        let wc = 2.5;
        let h = Operator::sigma_z().scale(c(wc / 2.0, 0.0));
        let l = Operator::sigma_minus();
        let k = commutator(&l, &h).unwrap();
        let row = ground_state(2).transpose();
        let r = row_proportionality_test(&k, &l, &row, DEFAULT_TOL).unwrap();
        assert!(r.holds);
        assert!((r.eigenvalue.unwrap() - c(wc, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn row_test_zero_numerator() {
        let row = ground_state(2).transpose();
        let r = row_proportionality_test(&Operator::zeros(2), &Operator::sigma_minus(), &row, DEFAULT_TOL).unwrap();
        assert!(r.holds);
        assert_eq!(r.eigenvalue, Some(c(0.0, 0.0)));
    }

    #[test]
    fn row_test_detects_non_proportional_rows() {
        let row = ground_state(2).transpose();
        let r = row_proportionality_test(&Operator::sigma_z(), &Operator::sigma_minus(), &row, DEFAULT_TOL).unwrap();
        assert!(!r.holds);
        assert!((r.residual - 1.0).abs() < 1e-15);
    }

    #[test]
    fn row_test_with_vanishing_reference_row() {
        let row = ground_state(2).transpose();
        let z = Operator::zeros(2);
        let r = row_proportionality_test(&z, &z, &row, DEFAULT_TOL).unwrap();
        assert!(r.holds);
        assert!(r.eigenvalue.is_none());
        let r = row_proportionality_test(&Operator::sigma_z(), &z, &row, DEFAULT_TOL).unwrap();
        assert!(!r.holds);
    }

    #[test]
    fn embed_single_site_is_identity_map() {
        assert_eq!(embed_site(&Operator::sigma_z(), 0, 1).unwrap(), Operator::sigma_z());
    }

    #[test]
    fn embed_on_second_site() {
        let e = embed_site(&Operator::sigma_minus(), 1, 2).unwrap();
        // I⊗σ- lowers the right factor: |a,1> -> |a,0>, index = 2a + b.
        let mut expected = DMatrix::zeros(4, 4);
        expected[(0, 1)] = ONE;
        expected[(2, 3)] = ONE;
        assert_eq!(e.matrix(), &expected);
    }

    #[test]
    fn excitation_hops_between_sites() {
        let lower0 = embed_site(&Operator::sigma_minus(), 0, 2).unwrap();
        let raise1 = embed_site(&Operator::sigma_plus(), 1, 2).unwrap();
        let hop = &lower0 * &raise1;
        // |1,0> (site 0 excited) has index 2, |0,1> index 1.
        let out = hop.apply(&basis_vector(4, 2)).unwrap();
        assert_eq!(out, basis_vector(4, 1));
    }

    #[test]
    fn embed_cap_is_enforced() {
        let err = embed_site(&Operator::sigma_z(), 0, 7).unwrap_err();
        assert!(matches!(err, Error::TensorCap { dim: 128, cap: 64 }));
        assert!(embed_site(&Operator::sigma_z(), 5, 6).is_ok());
        assert!(embed_site(&Operator::sigma_z(), 2, 2).is_err());
    }

    #[test]
    fn operator_rejects_bad_input() {
        assert!(Operator::new(DMatrix::zeros(2, 3)).is_err());
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = c(f64::NAN, 0.0);
        assert!(matches!(Operator::new(m), Err(Error::NonFinite(_))));
    }

    #[test]
    fn imag_part_of_hermitian_is_zero() {
        let x = Operator::sigma_x();
        assert_eq!(x.imag_part(), Operator::zeros(2));
        let y = Operator::sigma_plus().scale(c(0.0, 1.0));
        assert!(max_abs_diff(&y.imag_part(), &Operator::sigma_x().scale(c(0.5, 0.0))) < 1e-16);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn op(dim: usize) -> impl Strategy<Value = Operator> {
            prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), dim * dim).prop_map(move |v| {
                Operator::new(DMatrix::from_fn(dim, dim, |i, j| {
                    let (re, im) = v[i * dim + j];
                    Complex64::new(re, im)
                }))
                .unwrap()
            })
        }

        proptest! {
            #[test]
            fn commutator_is_antisymmetric(a in op(3), b in op(3)) {
                let ab = commutator(&a, &b).unwrap();
                let ba = commutator(&b, &a).unwrap();
                prop_assert!(max_abs_diff(&ab, &-&ba) <= 1e-14);
            }

            #[test]
            fn synthesized_eigenvectors_pass(
                lambdas in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 3),
                basis in op(3),
                pick in 0usize..3,
            ) {
                // A = V D V^{-1} with V well conditioned enough to invert.
                let v = basis.matrix() + DMatrix::identity(3, 3) * Complex64::new(20.0, 0.0);
                let vinv = v.clone().try_inverse().unwrap();
                let d = DMatrix::from_diagonal(&DVector::from_iterator(3, lambdas.iter().map(|&(r, i)| Complex64::new(r, i))));
                let a = Operator::new(&v * d * vinv).unwrap();
                let col = v.column(pick).into_owned();
                let r = vector_eigen_test(&a, &col, DEFAULT_TOL).unwrap();
                prop_assert!(r.residual < 1e-12, "residual {}", r.residual);
                let (re, im) = lambdas[pick];
                prop_assert!((r.eigenvalue.unwrap() - Complex64::new(re, im)).norm() < 1e-12);
            }

            #[test]
            fn embedded_operators_on_distinct_sites_commute(
                a in op(2), b in op(2), i in 0usize..3, j in 0usize..3,
            ) {
                prop_assume!(i != j);
                let ea = embed_site(&a, i, 3).unwrap();
                let eb = embed_site(&b, j, 3).unwrap();
                prop_assert!(commutator(&ea, &eb).unwrap().frobenius_norm() < 1e-13);
            }
        }
    }
}
