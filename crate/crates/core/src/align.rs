//! Length normalization, mean centering, Orthogonal Procrustes and cosine distance.

use crate::numeric::{dot, norm};
use crate::static_embed::VectorSpace;
use crate::{Error, Result};
use nalgebra::DMatrix;

/// `1 - cos(u, v)`, in `[0, 2]`.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
            context: "cosine distance".into(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 {
        return Err(Error::ZeroVector("first argument".into()));
    }
    if nv == 0.0 {
        return Err(Error::ZeroVector("second argument".into()));
    }
    let cos = (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0);
    Ok(1.0 - cos)
}

/// Scale every row to unit length, then subtract the column means.
pub fn normalize_and_center(space: &VectorSpace) -> Result<VectorSpace> {
    let mut out = space.clone();
    let dim = out.dim();
    for i in 0..out.len() {
        let n = norm(out.row(i));
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroVector(out.words()[i].clone()));
        }
        out.row_mut(i).iter_mut().for_each(|x| *x /= n);
    }
    let mut means = vec![0.0; dim];
    for (_, row) in out.rows() {
        for (m, x) in means.iter_mut().zip(row) {
            *m += x;
        }
    }
    let count = out.len() as f64;
    means.iter_mut().for_each(|m| *m /= count);
    for i in 0..out.len() {
        for (x, m) in out.row_mut(i).iter_mut().zip(&means) {
            *x -= m;
        }
    }
    Ok(out)
}

/// Two spaces after mapping `space1` onto `space2`.
#[derive(Clone, Debug)]
pub struct AlignedPair {
    /// `space1` multiplied by `rotation`.
    pub space1: VectorSpace,
    pub space2: VectorSpace,
    /// Anchor words in `space1` order.
    pub shared_words: Vec<String>,
    pub rotation: DMatrix<f64>,
}

impl AlignedPair {
    /// Cosine distance between a word's aligned vectors.
    pub fn distance(&self, word: &str) -> Option<Result<f64>> {
        let u = self.space1.vector(word)?;
        let v = self.space2.vector(word)?;
        Some(cosine_distance(u, v).map_err(|e| match e {
            Error::ZeroVector(_) => Error::ZeroVector(word.to_owned()),
            other => other,
        }))
    }

    pub fn mean_shared_distance(&self) -> Result<f64> {
        let mut total = 0.0;
        for w in &self.shared_words {
            total += self.distance(w).expect("shared word")?;
        }
        Ok(total / self.shared_words.len() as f64)
    }

    /// `max |WᵀW - I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        orthogonality_defect(&self.rotation)
    }
}

pub fn orthogonality_defect(w: &DMatrix<f64>) -> f64 {
    let gram = w.transpose() * w;
    let id = DMatrix::<f64>::identity(w.ncols(), w.ncols());
    (gram - id).abs().max()
}

fn shared_rows(space1: &VectorSpace, space2: &VectorSpace) -> (Vec<String>, DMatrix<f64>, DMatrix<f64>) {
    let shared: Vec<String> = space1.words().iter().filter(|w| space2.contains(w)).cloned().collect();
    let dim = space1.dim();
    let a = DMatrix::from_fn(shared.len(), dim, |r, c| space1.vector(&shared[r]).unwrap()[c]);
    let b = DMatrix::from_fn(shared.len(), dim, |r, c| space2.vector(&shared[r]).unwrap()[c]);
    (shared, a, b)
}

/// Frobenius residual `‖A W - B‖` over the shared vocabulary.
pub fn procrustes_residual(space1: &VectorSpace, space2: &VectorSpace, rotation: &DMatrix<f64>) -> f64 {
    let (_, a, b) = shared_rows(space1, space2);
    (a * rotation - b).norm()
}

/// Rotate `space1` onto `space2` with the orthogonal `W = U Vᵀ` from the SVD of `AᵀB`,
/// where `A`, `B` hold the shared words' rows in identical order.
pub fn orthogonal_procrustes(space1: &VectorSpace, space2: &VectorSpace) -> Result<AlignedPair> {
    if space1.dim() != space2.dim() {
        return Err(Error::DimensionMismatch {
            expected: space1.dim(),
            found: space2.dim(),
            context: "procrustes".into(),
        });
    }
    let (shared, a, b) = shared_rows(space1, space2);
    if shared.is_empty() {
        return Err(Error::NoSharedVocabulary);
    }
    let m = a.transpose() * b;
    let svd = m.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Undefined("SVD did not converge".into())),
    };
    let rotation = u * v_t;
    let mapped = space1.matrix() * &rotation;
    let aligned = VectorSpace::from_matrix(space1.words().to_vec(), &mapped)?
        .with_meta(space1.config.clone(), space1.period);
    Ok(AlignedPair {
        space1: aligned,
        space2: space2.clone(),
        shared_words: shared,
        rotation,
    })
}

/// Normalize and center both spaces, then align the first onto the second.
pub fn align_spaces(space1: &VectorSpace, space2: &VectorSpace) -> Result<AlignedPair> {
    orthogonal_procrustes(&normalize_and_center(space1)?, &normalize_and_center(space2)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn space(rows: &[&[f64]]) -> VectorSpace {
        let words = (0..rows.len()).map(|i| format!("w{i}")).collect();
        VectorSpace::new(words, rows[0].len(), rows.iter().flat_map(|r| r.iter().copied()).collect()).unwrap()
    }

    #[test]
    fn cosine_examples() {
        assert_abs_diff_eq!(cosine_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            cosine_distance(&[1.0, 0.0], &[1.0, 1.0]).unwrap(),
            1.0 - 1.0 / 2f64.sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(cosine_distance(&[1.0, 0.0], &[-2.0, 0.0]).unwrap(), 2.0, epsilon = 1e-12);
        assert!(matches!(cosine_distance(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroVector(_))));
    }

    #[test]
    fn normalize_then_center() {
        let s = normalize_and_center(&space(&[&[3.0, 4.0]])).unwrap();
        assert_abs_diff_eq!(s.row(0)[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.row(0)[1], 0.0, epsilon = 1e-12);

        let s = normalize_and_center(&space(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert_eq!(s.row(0), &[0.5, -0.5]);
        assert_eq!(s.row(1), &[-0.5, 0.5]);
    }

    #[test]
    fn zero_row_names_the_word() {
        let err = normalize_and_center(&space(&[&[1.0, 0.0], &[0.0, 0.0]])).unwrap_err();
        assert!(matches!(err, Error::ZeroVector(w) if w == "w1"));
    }

    #[test]
    fn self_alignment_is_identity() {
        let s = normalize_and_center(&space(&[&[1.0, 0.2, 0.0], &[0.1, 1.0, 0.3], &[0.0, 0.4, 1.0], &[0.5, 0.5, 0.1]]))
            .unwrap();
        let pair = orthogonal_procrustes(&s, &s).unwrap();
        let id = DMatrix::<f64>::identity(3, 3);
        assert!((&pair.rotation - id).abs().max() < 1e-6);
        assert!(procrustes_residual(&pair.space1, &pair.space2, &DMatrix::identity(3, 3)) < 1e-9);
    }

    #[test]
    fn disjoint_vocabularies_fail() {
        let a = space(&[&[1.0, 0.0]]);
        let b = VectorSpace::new(vec!["other".into()], 2, vec![0.0, 1.0]).unwrap();
        assert!(matches!(orthogonal_procrustes(&a, &b), Err(Error::NoSharedVocabulary)));
    }
}
