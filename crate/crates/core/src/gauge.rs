//! so(N) numerics.
//!
//! The gauge field of a model is a 1-form on the base space `R^N` with
//! values in so(N), acting on fibre vectors in the fundamental
//! representation. Its value at a point is stored as one skew matrix per
//! base direction `mu`.
//!
//! Basis convention: `B_(a,b)` for `a < b` in lexicographic order, with `+1`
//! at `(a, b)` and `-1` at `(b, a)`. Flat network outputs are read in
//! mu-major blocks of `N(N-1)/2` coefficients.
//!
//! Every skew matrix produced from coefficients is built from the upper
//! triangle and mirrored with negation, so `X^T == -X` holds bitwise.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::math::sqrt;

/// Default finite-difference step for the diagnostics below.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Orthogonality tolerance for group-valued evaluators.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        check_len("matrix entries", n * n, data.len())?;
        Ok(Matrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    fn same_dim(&self, other: &Matrix) -> Result<()> {
        check_len("matrix dimension", self.n, other.n)
    }

    pub fn transpose(&self) -> Matrix {
        let n = self.n;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.data[j * n + i] = self.data[i * n + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        self.same_dim(other)?;
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.same_dim(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.same_dim(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("vector", self.n, v.len())?;
        Ok(self
            .data
            .chunks_exact(self.n.max(1))
            .take(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        sqrt(self.data.iter().map(|v| v * v).sum())
    }

    /// `max |X + X^T|`; zero exactly for matrices built from coefficients.
    pub fn skew_residual(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.get(i, j) + self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn is_skew(&self) -> bool {
        self.skew_residual() == 0.0
    }

    /// `(X - X^T) / 2`, with the lower triangle mirrored from the upper.
    pub fn skew_part(&self) -> Matrix {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.get(i, j) - self.get(j, i));
                out.set(i, j, v);
                out.set(j, i, -v);
            }
        }
        out
    }

    /// `max |g^T g - I|`.
    pub fn orthogonality_residual(&self) -> f64 {
        let gtg = self.transpose().matmul(self).expect("same dimension");
        gtg.sub(&Matrix::identity(self.n)).expect("same dimension").max_abs()
    }
}

/// Canonical ordered basis of so(N).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkewBasis {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl SkewBasis {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("so(N) needs N >= 2"));
        }
        let pairs = (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).collect();
        Ok(SkewBasis { n, pairs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `N(N-1)/2`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn index_of(&self, a: usize, b: usize) -> Option<usize> {
        if a < b && b < self.n {
            Some(a * self.n - a * (a + 1) / 2 + (b - a - 1))
        } else {
            None
        }
    }

    pub fn element(&self, index: usize) -> Matrix {
        let (a, b) = self.pairs[index];
        let mut m = Matrix::zeros(self.n);
        m.set(a, b, 1.0);
        m.set(b, a, -1.0);
        m
    }

    pub fn elements(&self) -> impl Iterator<Item = Matrix> + '_ {
        (0..self.len()).map(move |i| self.element(i))
    }

    /// `sum_i coeffs[i] * B_i`.
    pub fn matrix_from_coeffs(&self, coeffs: &[f64]) -> Result<Matrix> {
        check_len("so(N) coefficients", self.len(), coeffs.len())?;
        let mut m = Matrix::zeros(self.n);
        for (&(a, b), &c) in self.pairs.iter().zip(coeffs) {
            m.set(a, b, c);
            m.set(b, a, -c);
        }
        Ok(m)
    }

    /// Reads the upper triangle of `m`.
    pub fn coeffs_of(&self, m: &Matrix) -> Result<Vec<f64>> {
        check_len("matrix dimension", self.n, m.n())?;
        Ok(self.pairs.iter().map(|&(a, b)| m.get(a, b)).collect())
    }

    /// Adds `X(coeffs) * v` into `out` without forming the matrix.
    pub fn apply_coeffs_into(&self, coeffs: &[f64], v: &[f64], out: &mut [f64]) {
        for (&(a, b), &c) in self.pairs.iter().zip(coeffs) {
            out[a] += c * v[b];
            out[b] -= c * v[a];
        }
    }
}

pub fn skew_basis(n: usize) -> Result<SkewBasis> {
    SkewBasis::new(n)
}

/// Value of a gauge field at one point: one skew matrix per base direction.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeFieldValue {
    n: usize,
    components: Vec<Matrix>,
}

impl GaugeFieldValue {
    pub fn zeros(n: usize) -> Self {
        GaugeFieldValue {
            n,
            components: (0..n).map(|_| Matrix::zeros(n)).collect(),
        }
    }

    /// Takes ownership of `n` matrices of size `n x n`; each must be exactly skew.
    pub fn new(components: Vec<Matrix>) -> Result<Self> {
        let n = components.len();
        for m in &components {
            check_len("gauge component dimension", n, m.n())?;
            if !m.is_skew() {
                return Err(Error::InvalidArgument("gauge components must be skew-symmetric"));
            }
        }
        Ok(GaugeFieldValue { n, components })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn component(&self, mu: usize) -> &Matrix {
        &self.components[mu]
    }

    pub fn components(&self) -> &[Matrix] {
        &self.components
    }

    pub fn max_skew_residual(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.skew_residual()))
    }
}

/// `[x, y] = xy - yx`.
pub fn bracket(x: &Matrix, y: &Matrix) -> Result<Matrix> {
    x.matmul(y)?.sub(&y.matmul(x)?)
}

/// Splits a flat gauge-network output into `N` blocks of so(N) coefficients.
pub fn decode_gauge_output(basis: &SkewBasis, raw: &[f64]) -> Result<GaugeFieldValue> {
    let n = basis.n();
    let dim_g = basis.len();
    check_len("gauge network output", n * dim_g, raw.len())?;
    let components = raw
        .chunks_exact(dim_g)
        .map(|block| basis.matrix_from_coeffs(block))
        .collect::<Result<Vec<_>>>()?;
    Ok(GaugeFieldValue { n, components })
}

/// `sum_mu d^mu A_mu`.
pub fn contract_direction(a: &GaugeFieldValue, d: &[f64]) -> Result<Matrix> {
    check_len("direction vector", a.n(), d.len())?;
    let n = a.n();
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v: f64 = a.components.iter().zip(d).map(|(c, &dm)| dm * c.get(i, j)).sum();
            m.set(i, j, v);
            m.set(j, i, -v);
        }
    }
    Ok(m)
}

/// Acts with a Lie-algebra element on a fibre vector.
pub fn apply_fiber(m: &Matrix, v: &[f64]) -> Result<Vec<f64>> {
    m.matvec(v)
}

fn shifted(x: &[f64], axis: usize, delta: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[axis] += delta;
    y
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("finite-difference step must be positive"))
    }
}

fn checked_group_element<G>(g_field: &mut G, x: &[f64], n: usize) -> Result<Matrix>
where
    G: FnMut(&[f64]) -> Result<Matrix>,
{
    let g = g_field(x)?;
    check_len("group element dimension", n, g.n())?;
    let residual = g.orthogonality_residual();
    if residual > ORTHOGONALITY_TOL {
        return Err(Error::NotOrthogonal { residual });
    }
    Ok(g)
}

/// Gauge-transformed field `g^-1 A_mu g + g^-1 d_mu g` at `x`.
///
/// `d_mu g` uses central differences of step `h`; `g^-1` is taken as `g^T`.
/// The result is projected onto so(N) to drop roundoff.
pub fn gauge_transform_at<A, G>(mut a_field: A, mut g_field: G, x: &[f64], h: f64) -> Result<GaugeFieldValue>
where
    A: FnMut(&[f64]) -> Result<GaugeFieldValue>,
    G: FnMut(&[f64]) -> Result<Matrix>,
{
    check_step(h)?;
    let n = x.len();
    let a = a_field(x)?;
    check_len("gauge field dimension", n, a.n())?;
    let g = checked_group_element(&mut g_field, x, n)?;
    let g_inv = g.transpose();
    let mut components = Vec::with_capacity(n);
    for mu in 0..n {
        let plus = checked_group_element(&mut g_field, &shifted(x, mu, h), n)?;
        let minus = checked_group_element(&mut g_field, &shifted(x, mu, -h), n)?;
        let dg = plus.sub(&minus)?.scale(1.0 / (2.0 * h));
        let conj = g_inv.matmul(a.component(mu))?.matmul(&g)?;
        let pure = g_inv.matmul(&dg)?;
        components.push(conj.add(&pure)?.skew_part());
    }
    Ok(GaugeFieldValue { n, components })
}

/// Curvature components `F_{mu nu}` at one point; `F_{nu mu} = -F_{mu nu}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldStrength {
    n: usize,
    entries: Vec<Matrix>,
}

impl FieldStrength {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, mu: usize, nu: usize) -> &Matrix {
        &self.entries[mu * self.n + nu]
    }

    /// Frobenius norms of `F_{mu nu}` for `mu < nu`, lexicographic.
    pub fn upper_norms(&self) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .flat_map(|mu| ((mu + 1)..n).map(move |nu| (mu, nu)))
            .map(|(mu, nu)| self.get(mu, nu).frobenius_norm())
            .collect()
    }

    pub fn max_norm(&self) -> f64 {
        self.upper_norms().into_iter().fold(0.0, f64::max)
    }
}

/// `F_{mu nu} = d_mu A_nu - d_nu A_mu + [A_mu, A_nu]` with central differences.
pub fn field_strength_at<A>(mut a_field: A, x: &[f64], h: f64) -> Result<FieldStrength>
where
    A: FnMut(&[f64]) -> Result<GaugeFieldValue>,
{
    check_step(h)?;
    let n = x.len();
    let a = a_field(x)?;
    check_len("gauge field dimension", n, a.n())?;
    // partial[axis][component] = d_axis A_component
    let mut partial: Vec<Vec<Matrix>> = Vec::with_capacity(n);
    for axis in 0..n {
        let plus = a_field(&shifted(x, axis, h))?;
        let minus = a_field(&shifted(x, axis, -h))?;
        check_len("gauge field dimension", n, plus.n())?;
        check_len("gauge field dimension", n, minus.n())?;
        let d = plus
            .components
            .iter()
            .zip(&minus.components)
            .map(|(p, m)| p.sub(m).map(|diff| diff.scale(1.0 / (2.0 * h))))
            .collect::<Result<Vec<_>>>()?;
        partial.push(d);
    }
    let mut entries = vec![Matrix::zeros(n); n * n];
    for mu in 0..n {
        for nu in (mu + 1)..n {
            let curl = partial[mu][nu].sub(&partial[nu][mu])?;
            let f = curl.add(&bracket(a.component(mu), a.component(nu))?)?;
            entries[nu * n + mu] = f.scale(-1.0);
            entries[mu * n + nu] = f;
        }
    }
    Ok(FieldStrength { n, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_small_cases() {
        let b2 = SkewBasis::new(2).unwrap();
        assert_eq!(b2.len(), 1);
        assert_eq!(b2.element(0).data(), &[0.0, 1.0, -1.0, 0.0]);
        let b3 = SkewBasis::new(3).unwrap();
        assert_eq!(b3.pairs(), &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(SkewBasis::new(32).unwrap().len(), 496);
        assert!(SkewBasis::new(1).is_err());
        assert!(SkewBasis::new(0).is_err());
    }

    #[test]
    fn index_of_inverts_pairs() {
        let basis = SkewBasis::new(7).unwrap();
        for (i, &(a, b)) in basis.pairs().iter().enumerate() {
            assert_eq!(basis.index_of(a, b), Some(i));
        }
        assert_eq!(basis.index_of(3, 3), None);
        assert_eq!(basis.index_of(4, 2), None);
    }

    #[test]
    fn basis_elements_are_skew_and_independent() {
        let basis = SkewBasis::new(5).unwrap();
        for (i, e) in basis.elements().enumerate() {
            assert!(e.is_skew());
            // Independence: each element owns exactly one upper-triangle slot.
            let coeffs = basis.coeffs_of(&e).unwrap();
            for (j, c) in coeffs.iter().enumerate() {
                assert_eq!(*c, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn bracket_cases() {
        let b3 = SkewBasis::new(3).unwrap();
        let (x, y, z) = (b3.element(0), b3.element(1), b3.element(2));
        assert_eq!(bracket(&x, &x).unwrap(), Matrix::zeros(3));
        // [B01, B02] = -B12 by direct multiplication.
        assert_eq!(bracket(&x, &y).unwrap(), z.scale(-1.0));
        assert!(bracket(&x, &y).unwrap().is_skew());
        let b2 = SkewBasis::new(2).unwrap();
        let e = b2.element(0);
        assert_eq!(bracket(&e.scale(2.5), &e.scale(-0.7)).unwrap().max_abs(), 0.0);
        assert!(bracket(&x, &e).is_err());
    }

    #[test]
    fn jacobi_identity_exact_for_small_n() {
        for n in 2..=4 {
            let basis = SkewBasis::new(n).unwrap();
            let els: Vec<Matrix> = basis.elements().collect();
            for x in &els {
                for y in &els {
                    for z in &els {
                        let t1 = bracket(x, &bracket(y, z).unwrap()).unwrap();
                        let t2 = bracket(y, &bracket(z, x).unwrap()).unwrap();
                        let t3 = bracket(z, &bracket(x, y).unwrap()).unwrap();
                        let sum = t1.add(&t2).unwrap().add(&t3).unwrap();
                        assert_eq!(sum.max_abs(), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn decode_layout_is_mu_major() {
        let b2 = SkewBasis::new(2).unwrap();
        let a = decode_gauge_output(&b2, &[1.5, -2.0]).unwrap();
        assert_eq!(a.component(0), &b2.element(0).scale(1.5));
        assert_eq!(a.component(1), &b2.element(0).scale(-2.0));

        let b3 = SkewBasis::new(3).unwrap();
        let raw: Vec<f64> = (1..=9).map(f64::from).collect();
        let a = decode_gauge_output(&b3, &raw).unwrap();
        assert_eq!(b3.coeffs_of(a.component(0)).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(b3.coeffs_of(a.component(2)).unwrap(), vec![7.0, 8.0, 9.0]);
        assert_eq!(a.max_skew_residual(), 0.0);

        let zero = decode_gauge_output(&b3, &[0.0; 9]).unwrap();
        assert_eq!(zero, GaugeFieldValue::zeros(3));
        assert!(decode_gauge_output(&b3, &[0.0; 8]).is_err());
    }

    #[test]
    fn contraction_cases() {
        let b2 = SkewBasis::new(2).unwrap();
        let a = decode_gauge_output(&b2, &[0.75, 3.0]).unwrap();
        assert_eq!(contract_direction(&a, &[0.0, 0.0]).unwrap(), Matrix::zeros(2));
        assert_eq!(contract_direction(&a, &[1.0, 0.0]).unwrap(), b2.element(0).scale(0.75));
        assert!(contract_direction(&a, &[1.0]).is_err());
    }

    #[test]
    fn fiber_action() {
        let b2 = SkewBasis::new(2).unwrap();
        assert_eq!(apply_fiber(&b2.element(0), &[0.0, 1.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(apply_fiber(&Matrix::zeros(2), &[4.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        assert!(apply_fiber(&Matrix::zeros(2), &[1.0]).is_err());
        let mut out = vec![0.0; 2];
        b2.apply_coeffs_into(&[2.0], &[3.0, 5.0], &mut out);
        assert_eq!(out, apply_fiber(&b2.element(0).scale(2.0), &[3.0, 5.0]).unwrap());
    }

    fn rotation2(theta: f64) -> Matrix {
        let (s, c) = (libm::sin(theta), libm::cos(theta));
        Matrix::from_row_major(2, vec![c, s, -s, c]).unwrap()
    }

    fn sample_field_2d(x: &[f64]) -> Result<GaugeFieldValue> {
        let b = SkewBasis::new(2)?;
        decode_gauge_output(&b, &[0.3 + x[1], -1.2 * x[0]])
    }

    #[test]
    fn identity_gauge_transform_is_exact() {
        let x = [0.4, -0.9];
        let a = sample_field_2d(&x).unwrap();
        let t = gauge_transform_at(sample_field_2d, |_| Ok(Matrix::identity(2)), &x, DEFAULT_FD_STEP).unwrap();
        assert_eq!(t, a);
    }

    #[test]
    fn constant_gauge_transform_is_conjugation() {
        let b3 = SkewBasis::new(3).unwrap();
        let a_field =
            |_: &[f64]| decode_gauge_output(&SkewBasis::new(3)?, &[0.2, -0.4, 1.0, 0.5, 0.1, -0.3, 0.0, 0.7, 0.9]);
        // A fixed rotation about the z-axis.
        let (s, c) = (libm::sin(0.6), libm::cos(0.6));
        let g = Matrix::from_row_major(3, vec![c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let x = [0.1, 0.2, 0.3];
        let t = gauge_transform_at(a_field, |_| Ok(g.clone()), &x, DEFAULT_FD_STEP).unwrap();
        let a = a_field(&x).unwrap();
        for mu in 0..3 {
            let expected = g.transpose().matmul(a.component(mu)).unwrap().matmul(&g).unwrap();
            let diff = t.component(mu).sub(&expected).unwrap().max_abs();
            assert!(diff < 1e-14, "mu = {mu}: {diff}");
            assert!(t.component(mu).is_skew());
        }
        let _ = b3;
    }

    #[test]
    fn pure_gauge_from_rotation() {
        // g(x) = exp(x0 B) gives g^-1 d_0 g = B, g^-1 d_1 g = 0.
        let b = SkewBasis::new(2).unwrap().element(0);
        let h = 1e-4;
        let t = gauge_transform_at(
            |_| Ok(GaugeFieldValue::zeros(2)),
            |x| Ok(rotation2(x[0])),
            &[0.7, -0.2],
            h,
        )
        .unwrap();
        assert!(t.component(0).sub(&b).unwrap().max_abs() < 10.0 * h * h);
        assert!(t.component(1).max_abs() < 1e-12);
    }

    #[test]
    fn non_orthogonal_gauge_is_rejected() {
        let x = [0.0, 0.0];
        let err = gauge_transform_at(
            |_| Ok(GaugeFieldValue::zeros(2)),
            |_| Ok(Matrix::identity(2).scale(1.01)),
            &x,
            1e-4,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotOrthogonal { .. }));
        assert!(gauge_transform_at(|_| Ok(GaugeFieldValue::zeros(2)), |_| Ok(Matrix::identity(2)), &x, 0.0).is_err());
    }

    #[test]
    fn constant_abelian_field_has_no_curvature() {
        let f = field_strength_at(|_| sample_field_2d(&[1.0, 1.0]), &[0.3, 0.3], DEFAULT_FD_STEP).unwrap();
        assert_eq!(f.max_norm(), 0.0);
    }

    #[test]
    fn constant_non_abelian_field_curvature_is_the_bracket() {
        let b3 = SkewBasis::new(3).unwrap();
        let field =
            |_: &[f64]| decode_gauge_output(&SkewBasis::new(3)?, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let f = field_strength_at(field, &[0.5, -0.5, 2.0], DEFAULT_FD_STEP).unwrap();
        let expected = bracket(&b3.element(0), &b3.element(1)).unwrap();
        assert_eq!(f.get(0, 1), &expected);
        assert_eq!(f.get(1, 0), &expected.scale(-1.0));
        assert_eq!(f.get(0, 2).max_abs(), 0.0);
        assert_eq!(f.get(1, 2).max_abs(), 0.0);
    }

    #[test]
    fn linear_abelian_field_curvature() {
        // A_0 = 0, A_1 = x0 B  =>  F_01 = d_0 A_1 = B.
        let b = SkewBasis::new(2).unwrap();
        let h = 1e-4;
        let field = |x: &[f64]| decode_gauge_output(&SkewBasis::new(2)?, &[0.0, x[0]]);
        let f = field_strength_at(field, &[0.25, 1.5], h).unwrap();
        assert!(f.get(0, 1).sub(&b.element(0)).unwrap().max_abs() < 10.0 * h * h);
    }
}
