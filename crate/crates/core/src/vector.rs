//! Small dense-vector helpers over `f64` slices.

/// A dense real vector of the problem dimension: iterates, displacements and
/// gradient estimates all use this representation.
pub type ParamVector = Vec<f64>;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> ParamVector {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> ParamVector {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &[f64]) -> ParamVector {
    x.iter().map(|v| alpha * v).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Arithmetic mean of equally sized vectors. Panics on an empty slice.
pub fn mean<V: AsRef<[f64]>>(points: &[V]) -> ParamVector {
    let dim = points[0].as_ref().len();
    let mut acc = vec![0.0; dim];
    for p in points {
        axpy(1.0, p.as_ref(), &mut acc);
    }
    let n = points.len() as f64;
    acc.iter_mut().for_each(|v| *v /= n);
    acc
}
