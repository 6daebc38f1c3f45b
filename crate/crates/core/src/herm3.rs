//! 3×3 Hermitian matrix algebra for polarimetric coherency matrices.
//!
//! A coherency matrix is the ensemble average ⟨k·kᴴ⟩ of the Pauli
//! scattering vector k, so it is Hermitian and positive semidefinite by
//! construction. [`Herm3`] stores only the three real diagonal entries and
//! the three upper-triangle complex entries, which makes Hermitian symmetry
//! *structural*: no arithmetic on the type can ever produce an asymmetric
//! matrix or leak an imaginary part onto the diagonal.
//!
//! The module provides the pieces the metrics need in closed form:
//! determinant and trace (for the degree-of-polarisation radicand),
//! eigenvalues via the trigonometric solution of the characteristic cubic
//! (for entropy), a log-space LDLᴴ determinant (for likelihood ratios whose
//! plain determinants underflow), and a clamped LDLᴴ square root used by the
//! scene simulator to color Gaussian draws.

use num_complex::Complex;

use crate::error::{CoreError, Result};
use crate::real::{cast, Real};

/// Hermitian 3×3 matrix in compact storage.
///
/// `diag` holds the (real) diagonal; `off` holds the upper triangle in the
/// order (0,1), (0,2), (1,2). The lower triangle is implied by conjugation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Herm3<T: Real> {
    diag: [T; 3],
    off: [Complex<T>; 3],
}

impl<T: Real> Herm3<T> {
    /// Zero matrix.
    #[inline]
    pub fn zero() -> Self {
        Self {
            diag: [T::zero(); 3],
            off: [Complex::new(T::zero(), T::zero()); 3],
        }
    }

    /// Identity matrix.
    #[inline]
    pub fn identity() -> Self {
        Self::from_diag([T::one(), T::one(), T::one()])
    }

    /// Diagonal matrix.
    #[inline]
    pub fn from_diag(diag: [T; 3]) -> Self {
        Self {
            diag,
            off: [Complex::new(T::zero(), T::zero()); 3],
        }
    }

    /// Builds from explicit diagonal and upper-triangle entries
    /// ((0,1), (0,2), (1,2)).
    #[inline]
    pub fn new(diag: [T; 3], off: [Complex<T>; 3]) -> Self {
        Self { diag, off }
    }

    /// Rank-one outer product k·kᴴ of a scattering vector.
    #[inline]
    pub fn outer(k: &[Complex<T>; 3]) -> Self {
        Self {
            diag: [k[0].norm_sqr(), k[1].norm_sqr(), k[2].norm_sqr()],
            off: [
                k[0] * k[1].conj(),
                k[0] * k[2].conj(),
                k[1] * k[2].conj(),
            ],
        }
    }

    /// Diagonal entries.
    #[inline]
    pub fn diag(&self) -> [T; 3] {
        self.diag
    }

    /// Upper-triangle entries in the order (0,1), (0,2), (1,2).
    #[inline]
    pub fn off(&self) -> [Complex<T>; 3] {
        self.off
    }

    /// Full entry (i, j); the lower triangle is produced by conjugation.
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        assert!(i < 3 && j < 3, "Herm3 index out of range");
        if i == j {
            Complex::new(self.diag[i], T::zero())
        } else if i < j {
            self.off[Self::off_index(i, j)]
        } else {
            self.off[Self::off_index(j, i)].conj()
        }
    }

    #[inline]
    fn off_index(i: usize, j: usize) -> usize {
        // (0,1) -> 0, (0,2) -> 1, (1,2) -> 2
        i + j - 1
    }

    /// Sum of two matrices.
    #[inline]
    pub fn add(&self, rhs: &Self) -> Self {
        Self {
            diag: [
                self.diag[0] + rhs.diag[0],
                self.diag[1] + rhs.diag[1],
                self.diag[2] + rhs.diag[2],
            ],
            off: [
                self.off[0] + rhs.off[0],
                self.off[1] + rhs.off[1],
                self.off[2] + rhs.off[2],
            ],
        }
    }

    /// In-place accumulation; the hot path of boxcar averaging.
    #[inline]
    pub fn accumulate(&mut self, rhs: &Self) {
        for i in 0..3 {
            self.diag[i] += rhs.diag[i];
            self.off[i] = self.off[i] + rhs.off[i];
        }
    }

    /// Matrix scaled by a real factor.
    #[inline]
    pub fn scale(&self, s: T) -> Self {
        Self {
            diag: [self.diag[0] * s, self.diag[1] * s, self.diag[2] * s],
            off: [
                self.off[0].scale(s),
                self.off[1].scale(s),
                self.off[2].scale(s),
            ],
        }
    }

    /// Trace (always real for Hermitian matrices).
    #[inline]
    pub fn trace(&self) -> T {
        self.diag[0] + self.diag[1] + self.diag[2]
    }

    /// Determinant, evaluated with the real-valued cofactor expansion valid
    /// for Hermitian matrices:
    ///
    /// det = d₀d₁d₂ − d₀|m₁₂|² − d₁|m₀₂|² − d₂|m₀₁|²
    ///       + 2·Re(m₀₁ · m₁₂ · conj(m₀₂))
    ///
    /// The result is exactly real by construction, so no imaginary residue
    /// has to be discarded.
    pub fn det(&self) -> T {
        let [d0, d1, d2] = self.diag;
        let [m01, m02, m12] = self.off;
        let two = cast::<T>(2.0);
        d0 * d1 * d2 - d0 * m12.norm_sqr() - d1 * m02.norm_sqr()
            - d2 * m01.norm_sqr()
            + two * (m01 * m12 * m02.conj()).re
    }

    /// Eigenvalues in ascending order, via the trigonometric solution of the
    /// characteristic cubic for Hermitian 3×3 matrices.
    ///
    /// The matrix is shifted by its mean eigenvalue and rescaled before the
    /// cubic is solved, which makes the routine scale-invariant; the arccos
    /// argument is clamped to [−1, 1] against rounding.
    ///
    /// Accuracy caveat: near a repeated eigenvalue the arccos argument sits
    /// at ±1 where its derivative blows up, so an O(ε) rounding error there
    /// becomes an O(√ε)·tr error in the eigenvalues — around 1e-8·tr in f64.
    /// Positive-semidefiniteness gates built on this routine must allow at
    /// least that much slack; rank decisions should prefer [`Self::log_det`]
    /// or [`Self::lower_factor`], whose LDLᴴ pivots do not have this floor.
    pub fn eigenvalues(&self) -> [T; 3] {
        let q = self.trace() / cast::<T>(3.0);
        let p1 = self.off[0].norm_sqr() + self.off[1].norm_sqr()
            + self.off[2].norm_sqr();
        let dq = [
            self.diag[0] - q,
            self.diag[1] - q,
            self.diag[2] - q,
        ];
        let p2 = dq[0] * dq[0] + dq[1] * dq[1] + dq[2] * dq[2]
            + cast::<T>(2.0) * p1;
        if p2 <= T::zero() {
            // Scalar multiple of the identity.
            return [q, q, q];
        }
        let p = (p2 / cast::<T>(6.0)).sqrt();
        // B = (A - q·I) / p, then r = det(B) / 2 is cos(3φ).
        let b = Herm3 {
            diag: [dq[0] / p, dq[1] / p, dq[2] / p],
            off: [
                self.off[0].unscale(p),
                self.off[1].unscale(p),
                self.off[2].unscale(p),
            ],
        };
        let r = (b.det() / cast::<T>(2.0))
            .max(-T::one())
            .min(T::one());
        let phi = r.acos() / cast::<T>(3.0);
        let two_p = cast::<T>(2.0) * p;
        // eig1 ≥ eig2 ≥ eig3 by the ordering of the cosine arguments.
        let eig1 = q + two_p * phi.cos();
        let eig3 = q
            + two_p
                * (phi + cast::<T>(2.0) * T::FRAC_PI_3()).cos();
        let eig2 = cast::<T>(3.0) * q - eig1 - eig3;
        [eig3, eig2, eig1]
    }

    /// Smallest eigenvalue. Subject to the accuracy caveat on
    /// [`Self::eigenvalues`]: do not test it against thresholds tighter
    /// than ~1e-7·tr.
    #[inline]
    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues()[0]
    }

    /// Log-determinant via LDLᴴ factorization, or `None` when any pivot is
    /// non-positive (matrix not positive definite).
    ///
    /// Likelihood-ratio statistics multiply many determinants of averaged
    /// coherency matrices; taking logs pivot-by-pivot avoids the underflow
    /// that the plain determinant product hits long before the statistic
    /// itself becomes meaningless.
    pub fn log_det(&self) -> Option<T> {
        let (d, _l) = self.ldl()?;
        Some(d[0].ln() + d[1].ln() + d[2].ln())
    }

    /// Raw LDLᴴ factorization: returns (pivots d, unit-lower multipliers
    /// [l10, l20, l21]) or `None` if a leading pivot is non-positive while
    /// later entries still need it as divisor.
    fn ldl(&self) -> Option<([T; 3], [Complex<T>; 3])> {
        let d0 = self.diag[0];
        if d0 <= T::zero() {
            return None;
        }
        // Lower-triangle entries: A(1,0) = conj(m01), A(2,0) = conj(m02),
        // A(2,1) = conj(m12).
        let l10 = self.off[0].conj().unscale(d0);
        let l20 = self.off[1].conj().unscale(d0);
        let d1 = self.diag[1] - l10.norm_sqr() * d0;
        if d1 <= T::zero() {
            return None;
        }
        let l21 = (self.off[2].conj() - l20 * l10.conj().scale(d0))
            .unscale(d1);
        let d2 = self.diag[2] - l20.norm_sqr() * d0 - l21.norm_sqr() * d1;
        if d2 <= T::zero() {
            return None;
        }
        Some(([d0, d1, d2], [l10, l20, l21]))
    }

    /// Lower-triangular factor F with F·Fᴴ = A, for positive-*semi*definite
    /// input.
    ///
    /// Built from LDLᴴ with pivot clamping: a pivot in [−tol, 0] is treated
    /// as exactly zero (its column of multipliers is dropped), so rank-
    /// deficient covariances factor cleanly. A pivot below −tol means the
    /// matrix is indefinite and the factorization fails. `tol` is absolute;
    /// callers scale it by the trace.
    pub fn lower_factor(&self, tol: T) -> Result<[[Complex<T>; 3]; 3]> {
        let zero = Complex::new(T::zero(), T::zero());
        let mut d = [T::zero(); 3];
        let mut l = [[zero; 3]; 3];
        l[0][0] = Complex::new(T::one(), T::zero());
        l[1][1] = Complex::new(T::one(), T::zero());
        l[2][2] = Complex::new(T::one(), T::zero());

        let reject = |pivot: T, k: usize| -> CoreError {
            CoreError::Validation(format!(
                "matrix is not positive semidefinite: pivot {k} = {pivot}"
            ))
        };

        let d0 = self.diag[0];
        if d0 < -tol {
            return Err(reject(d0, 0));
        }
        if d0 > T::zero() {
            d[0] = d0;
            l[1][0] = self.off[0].conj().unscale(d0);
            l[2][0] = self.off[1].conj().unscale(d0);
        }
        let d1 = self.diag[1] - l[1][0].norm_sqr() * d[0];
        if d1 < -tol {
            return Err(reject(d1, 1));
        }
        if d1 > T::zero() {
            d[1] = d1;
            l[2][1] = (self.off[2].conj()
                - l[2][0] * l[1][0].conj().scale(d[0]))
            .unscale(d1);
        }
        let d2 = self.diag[2]
            - l[2][0].norm_sqr() * d[0]
            - l[2][1].norm_sqr() * d[1];
        if d2 < -tol {
            return Err(reject(d2, 2));
        }
        if d2 > T::zero() {
            d[2] = d2;
        }

        // F = L · diag(√d); zeroed pivots zero their column.
        let s = [d[0].sqrt(), d[1].sqrt(), d[2].sqrt()];
        let mut f = [[zero; 3]; 3];
        for i in 0..3 {
            for j in 0..=i {
                f[i][j] = l[i][j].scale(s[j]);
            }
        }
        Ok(f)
    }

    /// Element-wise conversion to double precision (for JSON export).
    pub fn to_f64(&self) -> Herm3<f64> {
        Herm3 {
            diag: [
                self.diag[0].to_f64().unwrap(),
                self.diag[1].to_f64().unwrap(),
                self.diag[2].to_f64().unwrap(),
            ],
            off: [
                Complex::new(
                    self.off[0].re.to_f64().unwrap(),
                    self.off[0].im.to_f64().unwrap(),
                ),
                Complex::new(
                    self.off[1].re.to_f64().unwrap(),
                    self.off[1].im.to_f64().unwrap(),
                ),
                Complex::new(
                    self.off[2].re.to_f64().unwrap(),
                    self.off[2].im.to_f64().unwrap(),
                ),
            ],
        }
    }
}

/// Mean of a non-empty slice of matrices.
pub fn mean<T: Real>(mats: &[Herm3<T>]) -> Result<Herm3<T>> {
    if mats.is_empty() {
        return Err(CoreError::Argument(
            "mean of zero matrices is undefined".into(),
        ));
    }
    let mut acc = Herm3::zero();
    for m in mats {
        acc.accumulate(m);
    }
    Ok(acc.scale(T::one() / cast::<T>(mats.len() as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        Complex::new(re, im)
    }

    /// Reference determinant through full complex cofactor expansion on the
    /// expanded 3×3 array — an independent route to compare the compact
    /// closed form against.
    fn det_cofactor(m: &Herm3<f64>) -> C {
        let a: Vec<Vec<C>> = (0..3)
            .map(|i| (0..3).map(|j| m.get(i, j)).collect())
            .collect();
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    }

    fn herm_strategy() -> impl Strategy<Value = Herm3<f64>> {
        // General Hermitian (not necessarily PSD): bounded entries.
        let e = -4.0..4.0f64;
        (
            [e.clone(), e.clone(), e.clone()],
            [e.clone(), e.clone(), e.clone()],
            [e.clone(), e.clone(), e],
        )
            .prop_map(|(d, re, im)| {
                Herm3::new(
                    d,
                    [c(re[0], im[0]), c(re[1], im[1]), c(re[2], im[2])],
                )
            })
    }

    fn psd_strategy() -> impl Strategy<Value = Herm3<f64>> {
        // Sum of three outer products: PSD, generically full rank.
        let e = -2.0..2.0f64;
        proptest::collection::vec((e.clone(), e.clone()), 9).prop_map(|v| {
            let mut acc = Herm3::zero();
            for ch in v.chunks(3) {
                let k = [
                    c(ch[0].0, ch[0].1),
                    c(ch[1].0, ch[1].1),
                    c(ch[2].0, ch[2].1),
                ];
                acc.accumulate(&Herm3::outer(&k));
            }
            acc
        })
    }

    #[test]
    fn get_reflects_hermitian_symmetry() {
        let m = Herm3::new([1.0, 2.0, 3.0], [c(1.0, -2.0), c(0.5, 4.0), c(-1.0, 1.0)]);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), m.get(j, i).conj());
            }
        }
        assert_eq!(m.get(1, 0), c(1.0, 2.0));
    }

    #[test]
    fn outer_product_matches_manual_entries() {
        let k = [c(1.0, 1.0), c(2.0, -1.0), c(0.0, 3.0)];
        let m = Herm3::outer(&k);
        for i in 0..3 {
            for j in 0..3 {
                let want = k[i] * k[j].conj();
                let got = m.get(i, j);
                assert_abs_diff_eq!(got.re, want.re, epsilon = 1e-14);
                assert_abs_diff_eq!(got.im, want.im, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn determinant_of_known_matrices() {
        assert_eq!(Herm3::<f64>::identity().det(), 1.0);
        assert_eq!(Herm3::from_diag([2.0, 1.0, 1.0]).det(), 2.0);
        let rank1 = Herm3::outer(&[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)]);
        assert_abs_diff_eq!(rank1.det(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn eigenvalues_of_diagonal_matrix_sort_ascending() {
        let m = Herm3::from_diag([3.0, 1.0, 2.0]);
        let e = m.eigenvalues();
        assert_abs_diff_eq!(e[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[2], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn eigenvalues_of_scaled_identity() {
        let m = Herm3::from_diag([0.5, 0.5, 0.5]);
        assert_eq!(m.eigenvalues(), [0.5, 0.5, 0.5]);
    }

    #[test]
    fn log_det_matches_plain_determinant_when_well_scaled() {
        let m = Herm3::new(
            [2.0, 3.0, 4.0],
            [c(0.5, 0.25), c(-0.25, 0.5), c(0.1, -0.3)],
        );
        let ld = m.log_det().expect("positive definite");
        assert_relative_eq!(ld, m.det().ln(), max_relative = 1e-12);
    }

    #[test]
    fn log_det_survives_scales_that_underflow_det_products() {
        // 200 matrices with det ≈ 1e-9 each: the product of plain dets is
        // ~1e-1800 (underflows), the log-space sum is exact.
        let m = Herm3::from_diag([1e-3, 1e-3, 1e-3]);
        let ld = m.log_det().unwrap();
        let sum: f64 = (0..200).map(|_| ld).sum();
        assert_relative_eq!(sum, 200.0 * 3.0 * (1e-3f64).ln(), max_relative = 1e-12);
    }

    #[test]
    fn log_det_rejects_indefinite_and_singular() {
        assert!(Herm3::from_diag([1.0, -1.0, 1.0]).log_det().is_none());
        assert!(Herm3::from_diag([1.0, 1.0, 0.0]).log_det().is_none());
    }

    #[test]
    fn lower_factor_reconstructs_full_rank_input() {
        let m = Herm3::new(
            [2.0, 3.0, 4.0],
            [c(0.5, 0.25), c(-0.25, 0.5), c(0.1, -0.3)],
        );
        let f = m.lower_factor(1e-12).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = c(0.0, 0.0);
                for k in 0..3 {
                    acc += f[i][k] * f[j][k].conj();
                }
                let want = m.get(i, j);
                assert_abs_diff_eq!(acc.re, want.re, epsilon = 1e-12);
                assert_abs_diff_eq!(acc.im, want.im, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn lower_factor_handles_rank_deficiency() {
        // Rank-1 covariance: a single deterministic mechanism.
        let m = Herm3::outer(&[c(1.0, 0.5), c(0.0, 1.0), c(2.0, 0.0)]);
        let f = m.lower_factor(1e-12 * m.trace()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = c(0.0, 0.0);
                for k in 0..3 {
                    acc += f[i][k] * f[j][k].conj();
                }
                let want = m.get(i, j);
                assert_abs_diff_eq!(acc.re, want.re, epsilon = 1e-10);
                assert_abs_diff_eq!(acc.im, want.im, epsilon = 1e-10);
            }
        }
        // Zero matrix factors to zero.
        let z = Herm3::<f64>::zero().lower_factor(1e-12).unwrap();
        for row in &z {
            for e in row {
                assert_eq!(*e, c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn lower_factor_rejects_indefinite_input() {
        let m = Herm3::from_diag([1.0, -0.5, 1.0]);
        assert!(m.lower_factor(1e-9).is_err());
    }

    #[test]
    fn mean_averages_entrywise() {
        let a = Herm3::from_diag([1.0, 2.0, 3.0]);
        let b = Herm3::from_diag([3.0, 2.0, 1.0]);
        let m = mean(&[a, b]).unwrap();
        assert_eq!(m.diag(), [2.0, 2.0, 2.0]);
        assert!(mean::<f64>(&[]).is_err());
    }

    proptest! {
        #[test]
        fn det_matches_complex_cofactor_route(m in herm_strategy()) {
            let fast = m.det();
            let slow = det_cofactor(&m);
            // The cofactor route must come out real (Hermitian input) and
            // equal to the compact closed form.
            prop_assert!(slow.im.abs() <= 1e-10 * (1.0 + slow.norm()));
            prop_assert!((fast - slow.re).abs() <= 1e-10 * (1.0 + slow.norm()));
        }

        #[test]
        fn eigenvalues_satisfy_invariants(m in herm_strategy()) {
            let e = m.eigenvalues();
            let scale = 1.0 + m.trace().abs() + e.iter().map(|x| x.abs()).fold(0.0, f64::max);
            // Ascending order.
            prop_assert!(e[0] <= e[1] + 1e-12 * scale);
            prop_assert!(e[1] <= e[2] + 1e-12 * scale);
            // Sum = trace, product = det, pairwise sum = second invariant.
            prop_assert!((e[0] + e[1] + e[2] - m.trace()).abs() <= 1e-10 * scale);
            let det = m.det();
            prop_assert!((e[0] * e[1] * e[2] - det).abs() <= 1e-8 * scale.powi(3));
            let i2 = m.diag()[0] * m.diag()[1] + m.diag()[0] * m.diag()[2]
                + m.diag()[1] * m.diag()[2]
                - m.off()[0].norm_sqr() - m.off()[1].norm_sqr() - m.off()[2].norm_sqr();
            let e2 = e[0] * e[1] + e[0] * e[2] + e[1] * e[2];
            prop_assert!((e2 - i2).abs() <= 1e-8 * scale.powi(2));
        }

        #[test]
        fn psd_inputs_have_nonnegative_spectrum_and_det(m in psd_strategy()) {
            let e = m.eigenvalues();
            let tol = 1e-10 * (1.0 + m.trace());
            prop_assert!(e[0] >= -tol);
            prop_assert!(m.det() >= -tol * (1.0 + m.trace()).powi(2));
        }

        #[test]
        fn lower_factor_round_trips_psd(m in psd_strategy()) {
            let f = m.lower_factor(1e-10 * (1.0 + m.trace())).unwrap();
            let tol = 1e-8 * (1.0 + m.trace());
            for i in 0..3 {
                for j in 0..3 {
                    let mut acc = Complex::new(0.0, 0.0);
                    for k in 0..3 {
                        acc += f[i][k] * f[j][k].conj();
                    }
                    let want = m.get(i, j);
                    prop_assert!((acc - want).norm() <= tol);
                }
            }
        }
    }
}

