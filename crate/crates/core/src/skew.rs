//! Rank-structured skew-symmetric operators and the rotations they generate.
//!
//! An operator is stored as a list of atoms `c (a⊗b − b⊗a)`. An atom acts as
//! `y ↦ c(⟨a,y⟩ b − ⟨b,y⟩ a)`, so with orthonormal `(u1, u2)` the atom
//! `(1, u1, u2)` sends `u1` to `u2` and generates the rotation from `u1`
//! towards `u2`. Nothing here ever materializes a `d × d` matrix; all
//! arithmetic goes through inner products and small dense problems on the
//! span of the atom vectors.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{relate, AmbientVector, Relation, SpherePoint};
use crate::linalg::Matrix;
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct SkewAtom<T> {
    pub coef: T,
    pub a: AmbientVector<T>,
    pub b: AmbientVector<T>,
}

impl<T: Real> SkewAtom<T> {
    #[inline]
    fn apply_into(&self, x: &AmbientVector<T>, out: &mut AmbientVector<T>) {
        let ax = self.a.dot(x);
        let bx = self.b.dot(x);
        out.axpy(self.coef * ax, &self.b);
        out.axpy(-self.coef * bx, &self.a);
    }
}

/// Skew-symmetric operator on a weighted space, as a sum of atoms.
#[derive(Debug, Clone)]
pub struct SkewOperator<T> {
    atoms: Vec<SkewAtom<T>>,
    weights: Arc<[T]>,
}

/// Largest atom count a linear combination may keep before it is compressed.
fn compress_threshold(dim: usize) -> usize {
    64.min(4 * dim)
}

impl<T: Real> SkewOperator<T> {
    /// The zero operator on the space with these weights.
    pub fn zero(weights: Arc<[T]>) -> Self {
        Self {
            atoms: Vec::new(),
            weights,
        }
    }

    pub fn zero_like(x: &AmbientVector<T>) -> Self {
        Self::zero(x.weights_arc().clone())
    }

    pub fn from_atoms(weights: Arc<[T]>, atoms: Vec<SkewAtom<T>>) -> Result<Self> {
        let op = Self::zero(weights);
        let probe = AmbientVector::zeros(op.weights.clone());
        for atom in &atoms {
            probe.same_space(&atom.a)?;
            probe.same_space(&atom.b)?;
        }
        Ok(Self { atoms, ..op })
    }

    /// Single atom `coef (a⊗b − b⊗a)`.
    pub fn single(coef: T, a: AmbientVector<T>, b: AmbientVector<T>) -> Result<Self> {
        a.same_space(&b)?;
        Ok(Self {
            weights: a.weights_arc().clone(),
            atoms: vec![SkewAtom { coef, a, b }],
        })
    }

    pub fn atoms(&self) -> &[SkewAtom<T>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &Arc<[T]> {
        &self.weights
    }

    fn check_vector(&self, x: &AmbientVector<T>) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: x.dim(),
            });
        }
        if Arc::ptr_eq(&self.weights, x.weights_arc()) || self.weights[..] == x.weights()[..] {
            Ok(())
        } else {
            Err(Error::WeightMismatch)
        }
    }

    fn check_operator(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        if Arc::ptr_eq(&self.weights, &other.weights) || self.weights[..] == other.weights[..] {
            Ok(())
        } else {
            Err(Error::WeightMismatch)
        }
    }

    pub fn apply(&self, x: &AmbientVector<T>) -> Result<AmbientVector<T>> {
        self.check_vector(x)?;
        let mut out = x.zeros_like();
        for atom in &self.atoms {
            atom.apply_into(x, &mut out);
        }
        Ok(out)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|at| SkewAtom {
                    coef: s * at.coef,
                    ..at.clone()
                })
                .collect(),
            weights: self.weights.clone(),
        }
    }

    /// Hilbert-Schmidt inner product in `H⊗H`, evaluated atom pairwise.
    pub fn hs_inner(&self, other: &Self) -> Result<T> {
        self.check_operator(other)?;
        let two = T::c(2.0);
        let mut total = T::zero();
        for p in &self.atoms {
            for q in &other.atoms {
                let aa = p.a.dot(&q.a);
                let bb = p.b.dot(&q.b);
                let ab = p.a.dot(&q.b);
                let ba = p.b.dot(&q.a);
                total += two * p.coef * q.coef * (aa * bb - ab * ba);
            }
        }
        Ok(total)
    }

    pub fn hs_norm(&self) -> T {
        self.hs_inner(self).map(|v| v.max(T::zero()).sqrt()).unwrap_or_else(|_| T::zero())
    }

    /// Equivalent operator whose atoms are mutually orthogonal planes
    /// spanned by orthonormal vectors.
    ///
    /// The atom vectors are orthonormalized (modified Gram-Schmidt with one
    /// re-orthogonalization pass), the operator is restricted to that basis
    /// as a small skew matrix, and that matrix is split into its canonical
    /// plane rotations `sigma_j (p_j⊗q_j − q_j⊗p_j)`. The result has at most
    /// `k/2` atoms for a span of dimension `k`.
    pub fn compress(&self) -> Self {
        let Some(sub) = Subspace::of(self) else {
            return Self::zero(self.weights.clone());
        };
        let k = sub.basis.len();
        let mut gen = sub.generator.clone();
        let initial = gen.max_abs();
        let floor = T::snap() * initial;
        let mut atoms = Vec::new();
        for _ in 0..k / 2 + 1 {
            let gram = gen.transpose().matmul(&gen);
            let (vals, vecs) = gram.symmetric_eigen();
            let top = vals.first().copied().unwrap_or_else(T::zero);
            if !(top > T::zero()) || top.sqrt() <= floor {
                break;
            }
            let p: Vec<T> = (0..k).map(|i| vecs[(i, 0)]).collect();
            let w = gen.matvec(&p);
            let sigma = w.iter().map(|&v| v * v).sum::<T>().sqrt();
            if sigma <= floor {
                break;
            }
            let q: Vec<T> = w.iter().map(|&v| v / sigma).collect();
            gen = gen.add(&Matrix::from_fn(k, k, |i, j| -sigma * (q[i] * p[j] - p[i] * q[j])));
            atoms.push(SkewAtom {
                coef: sigma,
                a: sub.lift(&p),
                b: sub.lift(&q),
            });
        }
        Self {
            atoms,
            weights: self.weights.clone(),
        }
    }

    /// `exp(self)` applied to an arbitrary vector.
    pub fn exp_apply(&self, y: &AmbientVector<T>) -> Result<AmbientVector<T>> {
        self.check_vector(y)?;
        Ok(Rotation::new(self).apply(T::one(), y))
    }

    /// Rotation of a sphere point: `exp(self) x`.
    pub fn rotate(&self, x: &SpherePoint<T>) -> Result<SpherePoint<T>> {
        self.check_vector(x)?;
        if self.atoms.is_empty() {
            return Ok(x.clone());
        }
        SpherePoint::normalize(Rotation::new(self).apply(T::one(), x))
    }
}

/// `x2 ⊖ x1`: the single-atom operator `theta (u1⊗u2 − u2⊗u1)` with
/// `u1 = x1` and `u2` the normalized component of `x2` orthogonal to `x1`.
pub fn spherical_log<T: Real>(x1: &SpherePoint<T>, x2: &SpherePoint<T>) -> Result<SkewOperator<T>> {
    x1.same_space(x2)?;
    match relate(x1, x2) {
        Relation::Identical => Ok(SkewOperator::zero_like(x1)),
        Relation::Antipodal => Err(Error::LogUndefinedAtAntipode),
        Relation::Generic(frame) => {
            let theta = frame.angle();
            let u2 = frame.residual.scaled(T::one() / frame.sin);
            SkewOperator::single(theta, x1.vector().clone(), u2)
        }
    }
}

pub fn apply<T: Real>(op: &SkewOperator<T>, x: &AmbientVector<T>) -> Result<AmbientVector<T>> {
    op.apply(x)
}

pub fn hs_inner<T: Real>(a: &SkewOperator<T>, b: &SkewOperator<T>) -> Result<T> {
    a.hs_inner(b)
}

pub fn rotate<T: Real>(op: &SkewOperator<T>, x: &SpherePoint<T>) -> Result<SpherePoint<T>> {
    op.rotate(x)
}

pub fn compress<T: Real>(op: &SkewOperator<T>) -> SkewOperator<T> {
    op.compress()
}

/// Linear combination by atom concatenation, without compression.
pub fn lincomb_raw<T: Real>(terms: &[(T, &SkewOperator<T>)]) -> Result<SkewOperator<T>> {
    let (_, first) = terms.first().ok_or(Error::EmptyInput("linear combination of no operators"))?;
    let mut atoms = Vec::with_capacity(terms.iter().map(|(_, op)| op.len()).sum());
    for (s, op) in terms {
        first.check_operator(op)?;
        if *s == T::zero() {
            continue;
        }
        atoms.extend(op.atoms.iter().map(|at| SkewAtom {
            coef: *s * at.coef,
            a: at.a.clone(),
            b: at.b.clone(),
        }));
    }
    Ok(SkewOperator {
        atoms,
        weights: first.weights.clone(),
    })
}

/// Linear combination `sum s_i L_i`; compressed once the atom count grows
/// past `min(64, 4d)`.
pub fn lincomb<T: Real>(terms: &[(T, &SkewOperator<T>)]) -> Result<SkewOperator<T>> {
    let raw = lincomb_raw(terms)?;
    if raw.len() > compress_threshold(raw.dim()) {
        Ok(raw.compress())
    } else {
        Ok(raw)
    }
}

/// Orthonormalizes `vectors` by modified Gram-Schmidt with one
/// re-orthogonalization pass; residuals at or below `SNAP` times the
/// input norm are dropped.
pub(crate) fn orthonormal_basis<'a, T: Real>(
    vectors: impl IntoIterator<Item = &'a AmbientVector<T>>,
) -> Vec<AmbientVector<T>> {
    let mut basis: Vec<AmbientVector<T>> = Vec::new();
    for v in vectors {
        let norm0 = v.norm();
        if !(norm0 > T::zero()) {
            continue;
        }
        let mut r = v.clone();
        for _pass in 0..2 {
            for q in &basis {
                let c = q.dot(&r);
                r.axpy(-c, q);
            }
        }
        let norm = r.norm();
        if norm > T::snap() * norm0 {
            basis.push(r.scaled(T::one() / norm));
        }
    }
    basis
}

/// Orthonormal basis of an operator's atom span with the operator's
/// restriction to it.
pub(crate) struct Subspace<T> {
    basis: Vec<AmbientVector<T>>,
    generator: Matrix<T>,
}

impl<T: Real> Subspace<T> {
    pub fn of(op: &SkewOperator<T>) -> Option<Self> {
        let basis = orthonormal_basis(op.atoms.iter().flat_map(|at| [&at.a, &at.b]));
        let k = basis.len();
        if k == 0 {
            return None;
        }
        let mut generator = Matrix::zeros(k, k);
        for at in &op.atoms {
            let alpha: Vec<T> = basis.iter().map(|q| q.dot(&at.a)).collect();
            let beta: Vec<T> = basis.iter().map(|q| q.dot(&at.b)).collect();
            for i in 0..k {
                for j in 0..k {
                    generator[(i, j)] += at.coef * (beta[i] * alpha[j] - alpha[i] * beta[j]);
                }
            }
        }
        Some(Self { basis, generator })
    }

    fn coords(&self, y: &AmbientVector<T>) -> Vec<T> {
        self.basis.iter().map(|q| q.dot(y)).collect()
    }

    fn lift(&self, c: &[T]) -> AmbientVector<T> {
        let mut out = self.basis[0].zeros_like();
        for (q, &ci) in self.basis.iter().zip(c) {
            out.axpy(ci, q);
        }
        out
    }
}

/// Precomputed exponential `c ↦ exp(cL)` of a skew operator.
pub(crate) enum Rotation<T> {
    Identity,
    /// Closed form `I + sin(ϑ)Q + (1 − cos ϑ)Q²` for one plane.
    Plane {
        u1: AmbientVector<T>,
        u2: AmbientVector<T>,
        angle: T,
    },
    /// `B expm(cA) Bᵀ` on the atom span, identity on its complement.
    Subspace(Subspace<T>),
}

impl<T: Real> Rotation<T> {
    pub fn new(op: &SkewOperator<T>) -> Self {
        match op.atoms.as_slice() {
            [] => Rotation::Identity,
            [atom] => Self::plane(atom),
            _ => Self::subspace(op),
        }
    }

    pub fn subspace(op: &SkewOperator<T>) -> Self {
        Subspace::of(op).map_or(Rotation::Identity, Rotation::Subspace)
    }

    fn plane(atom: &SkewAtom<T>) -> Self {
        // a⊗b − b⊗a = |a| |b_perp| (u1⊗u2 − u2⊗u1)
        let na = atom.a.norm();
        if !(na > T::zero()) {
            return Rotation::Identity;
        }
        let u1 = atom.a.scaled(T::one() / na);
        let mut b_perp = atom.b.clone();
        let c = u1.dot(&b_perp);
        b_perp.axpy(-c, &u1);
        let nb = b_perp.norm();
        if !(nb > T::snap() * atom.b.norm()) {
            return Rotation::Identity;
        }
        let u2 = b_perp.scaled(T::one() / nb);
        Rotation::Plane {
            u1,
            u2,
            angle: atom.coef * na * nb,
        }
    }

    /// `exp(c L) y`
    pub fn apply(&self, c: T, y: &AmbientVector<T>) -> AmbientVector<T> {
        match self {
            Rotation::Identity => y.clone(),
            Rotation::Plane { u1, u2, angle } => {
                let t = c * *angle;
                let y1 = u1.dot(y);
                let y2 = u2.dot(y);
                let (s, cs) = t.sin_cos();
                // Q y = y1 u2 − y2 u1,  Q² y = −(y1 u1 + y2 u2)
                let mut out = y.clone();
                out.axpy(s * y1 - (T::one() - cs) * y2, u2);
                out.axpy(-s * y2 - (T::one() - cs) * y1, u1);
                out
            }
            Rotation::Subspace(sub) => {
                let coords = sub.coords(y);
                let rotated = sub.generator.scaled(c).expm().matvec(&coords);
                let mut out = y.clone();
                for ((q, &before), &after) in sub.basis.iter().zip(&coords).zip(&rotated) {
                    out.axpy(after - before, q);
                }
                out
            }
        }
    }
}

/// JSON form of an operator: `{dim, weights_ref, atoms: [{coef, a, b}]}`.
///
/// Weights are not repeated per atom; `weights_ref` names where the reader
/// finds them (for model files, the `base` point).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SkewOperatorRepr<T> {
    pub dim: usize,
    pub weights_ref: String,
    pub atoms: Vec<SkewAtomRepr<T>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SkewAtomRepr<T> {
    pub coef: T,
    pub a: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Real> SkewOperator<T> {
    pub fn to_repr(&self, weights_ref: &str) -> SkewOperatorRepr<T> {
        SkewOperatorRepr {
            dim: self.dim(),
            weights_ref: weights_ref.to_string(),
            atoms: self
                .atoms
                .iter()
                .map(|at| SkewAtomRepr {
                    coef: at.coef,
                    a: at.a.values().to_vec(),
                    b: at.b.values().to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_repr(repr: &SkewOperatorRepr<T>, weights: Arc<[T]>) -> Result<Self> {
        if repr.dim != weights.len() {
            return Err(Error::DimensionMismatch {
                left: repr.dim,
                right: weights.len(),
            });
        }
        let atoms = repr
            .atoms
            .iter()
            .map(|at| {
                Ok(SkewAtom {
                    coef: at.coef,
                    a: AmbientVector::with_weights(at.a.clone(), weights.clone())?,
                    b: AmbientVector::with_weights(at.b.clone(), weights.clone())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { atoms, weights })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn ev(v: &[f64]) -> AmbientVector<f64> {
        AmbientVector::euclidean(v.to_vec()).unwrap()
    }

    fn sp(v: &[f64]) -> SpherePoint<f64> {
        SpherePoint::euclidean(v.to_vec()).unwrap()
    }

    #[test]
    fn log_of_identical_is_zero() {
        let x = sp(&[0.2, 0.3, 0.9]);
        assert!(spherical_log(&x, &x).unwrap().is_empty());
    }

    #[test]
    fn log_quarter_circle() {
        let l = spherical_log(&sp(&[1.0, 0.0]), &sp(&[0.0, 1.0])).unwrap();
        assert_eq!(l.len(), 1);
        let at = &l.atoms()[0];
        assert!((at.coef - FRAC_PI_2).abs() < 1e-15);
        assert!(at.a.max_abs_diff(&ev(&[1.0, 0.0])) < 1e-15);
        assert!(at.b.max_abs_diff(&ev(&[0.0, 1.0])) < 1e-15);
    }

    #[test]
    fn log_antipode_errors() {
        assert!(matches!(
            spherical_log(&sp(&[1.0, 0.0, 0.0]), &sp(&[-1.0, 0.0, 0.0])),
            Err(Error::LogUndefinedAtAntipode)
        ));
    }

    #[test]
    fn apply_examples() {
        let q = SkewOperator::single(1.0, ev(&[1.0, 0.0]), ev(&[0.0, 1.0])).unwrap();
        assert!(q.apply(&ev(&[1.0, 0.0])).unwrap().max_abs_diff(&ev(&[0.0, 1.0])) < 1e-15);
        assert!(q.apply(&ev(&[0.0, 1.0])).unwrap().max_abs_diff(&ev(&[-1.0, 0.0])) < 1e-15);
        let q3 = SkewOperator::single(1.0, ev(&[1.0, 0.0, 0.0]), ev(&[0.0, 1.0, 0.0])).unwrap();
        assert_eq!(q3.apply(&ev(&[0.0, 0.0, 1.0])).unwrap().values(), &[0.0, 0.0, 0.0]);
        let z = SkewOperator::zero_like(&ev(&[1.0, 2.0]));
        assert_eq!(z.apply(&ev(&[1.0, 2.0])).unwrap().values(), &[0.0, 0.0]);
        assert!(matches!(q.apply(&ev(&[1.0, 0.0, 0.0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn hs_inner_examples() {
        let l = SkewOperator::single(1.0, ev(&[1.0, 0.0, 0.0]), ev(&[0.0, 1.0, 0.0])).unwrap();
        assert!((l.hs_inner(&l).unwrap() - 2.0).abs() < 1e-15);
        let z = SkewOperator::zero_like(&ev(&[1.0, 0.0, 0.0]));
        assert_eq!(l.hs_inner(&z).unwrap(), 0.0);
    }

    #[test]
    fn lincomb_examples() {
        let l = SkewOperator::single(0.7, ev(&[1.0, 2.0, 0.0]), ev(&[0.0, 1.0, -1.0])).unwrap();
        let same = lincomb(&[(1.0, &l)]).unwrap();
        let x = ev(&[0.3, -0.2, 0.5]);
        assert_eq!(same.apply(&x).unwrap().values(), l.apply(&x).unwrap().values());
        let cancel = lincomb(&[(1.0, &l), (-1.0, &l)]).unwrap();
        assert!(cancel.apply(&x).unwrap().norm() < 1e-15);
        assert!(lincomb::<f64>(&[]).is_err());
    }

    #[test]
    fn compress_merges_duplicate_atom() {
        let l = SkewOperator::single(0.5, ev(&[1.0, 1.0, 0.0]), ev(&[0.0, 1.0, 0.0])).unwrap();
        let doubled = lincomb_raw(&[(1.0, &l), (1.0, &l)]).unwrap().compress();
        assert_eq!(doubled.len(), 1);
        let x = ev(&[0.4, -1.0, 2.0]);
        let want = l.apply(&x).unwrap().scaled(2.0);
        assert!(doubled.apply(&x).unwrap().max_abs_diff(&want) < 1e-14);
        let single = l.compress();
        assert_eq!(single.len(), 1);
        let at = &single.atoms()[0];
        assert!((at.a.norm() - 1.0).abs() < 1e-14 && (at.b.norm() - 1.0).abs() < 1e-14);
        assert!(at.a.dot(&at.b).abs() < 1e-14);
    }

    #[test]
    fn compress_of_cancelling_sum_is_zero() {
        let l = SkewOperator::single(0.5, ev(&[1.0, 1.0, 0.0]), ev(&[0.0, 1.0, 0.0])).unwrap();
        assert!(lincomb_raw(&[(1.0, &l), (-1.0, &l)]).unwrap().compress().is_empty());
    }

    #[test]
    fn rotate_zero_and_plane() {
        let x = sp(&[0.6, 0.8, 0.0]);
        let z = SkewOperator::zero_like(&x);
        assert_eq!(z.rotate(&x).unwrap().values(), x.values());
        let theta = 1.1;
        let q = SkewOperator::single(theta, ev(&[1.0, 0.0, 0.0]), ev(&[0.0, 1.0, 0.0])).unwrap();
        let r = q.rotate(&sp(&[1.0, 0.0, 0.0])).unwrap();
        assert!(r.max_abs_diff(&ev(&[theta.cos(), theta.sin(), 0.0])) < 1e-15);
    }

    #[test]
    fn plane_and_subspace_paths_agree() {
        let q = SkewOperator::single(0.9, ev(&[1.0, 2.0, 0.5, 0.0]), ev(&[0.0, 1.0, -1.0, 3.0])).unwrap();
        let y = ev(&[0.1, 0.2, -0.7, 0.4]);
        let a = Rotation::new(&q).apply(1.0, &y);
        let b = Rotation::subspace(&q).apply(1.0, &y);
        assert!(matches!(Rotation::new(&q), Rotation::Plane { .. }));
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn json_repr_round_trip() {
        let l = SkewOperator::single(0.25, ev(&[1.0, 0.0, 2.0]), ev(&[0.0, 1.0, 0.0])).unwrap();
        let repr = l.to_repr("base");
        let s = serde_json::to_string(&repr).unwrap();
        assert!(s.contains("\"weights_ref\":\"base\""));
        let back: SkewOperatorRepr<f64> = serde_json::from_str(&s).unwrap();
        let l2 = SkewOperator::from_repr(&back, l.weights().clone()).unwrap();
        let x = ev(&[1.0, -1.0, 0.5]);
        assert_eq!(l.apply(&x).unwrap().values(), l2.apply(&x).unwrap().values());
        let bad = SkewOperator::from_repr(&back, vec![1.0, 1.0].into());
        assert!(bad.is_err());
    }
}
