use rand_distr::{Distribution, StandardNormal};

use crate::seed;
use crate::{Error, Result};

const POWER_ITERS: usize = 500;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn matvec(m: &[f64], d: usize, v: &[f64]) -> Vec<f64> {
    m.chunks_exact(d).map(|row| dot(row, v)).collect()
}

/// Project onto the top two principal directions, found by power iteration
/// with deflation and a fixed iteration budget.
pub fn pca2(embeddings: &[Vec<f64>]) -> Result<Vec<[f64; 2]>> {
    if embeddings.len() < 2 {
        return Err(Error::Input("pca2 needs at least two vectors".into()));
    }
    let d = embeddings[0].len();
    if d == 0 || embeddings.iter().any(|e| e.len() != d) {
        return Err(Error::Input("pca2 vectors must share a non-zero dimension".into()));
    }
    let n = embeddings.len() as f64;
    let mean: Vec<f64> = (0..d).map(|j| embeddings.iter().map(|e| e[j]).sum::<f64>() / n).collect();
    let centered: Vec<Vec<f64>> =
        embeddings.iter().map(|e| e.iter().zip(&mean).map(|(x, m)| x - m).collect()).collect();
    let mut cov = vec![0.0; d * d];
    for x in &centered {
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] += x[i] * x[j] / n;
            }
        }
    }
    let mut rng = seed::rng(0x5CA, &[d as u64]);
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(2);
    for _ in 0..2 {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let orthogonalize = |v: &mut Vec<f64>, dirs: &[Vec<f64>]| {
            for u in dirs {
                let p = dot(v, u);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= p * y);
            }
        };
        orthogonalize(&mut v, &dirs);
        normalize(&mut v);
        for _ in 0..POWER_ITERS {
            let mut w = matvec(&cov, d, &v);
            orthogonalize(&mut w, &dirs);
            if normalize(&mut w) < 1e-300 {
                break;
            }
            v = w;
        }
        let lambda = dot(&v, &matvec(&cov, d, &v));
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] -= lambda * v[i] * v[j];
            }
        }
        dirs.push(v);
    }
    Ok(centered.iter().map(|x| [dot(x, &dirs[0]), dot(x, &dirs[1])]).collect())
}

/// Mean silhouette coefficient of labelled 2D points.
pub fn silhouette(points: &[[f64; 2]], labels: &[usize]) -> f64 {
    let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut total = 0.0;
    for (i, &p) in points.iter().enumerate() {
        let mean_to = |c: usize| {
            let (s, k) = points
                .iter()
                .zip(labels)
                .enumerate()
                .filter(|(j, (_, &l))| l == c && *j != i)
                .fold((0.0, 0usize), |(s, k), (_, (&q, _))| (s + dist(p, q), k + 1));
            if k == 0 {
                0.0
            } else {
                s / k as f64
            }
        };
        let a = mean_to(labels[i]);
        let b = classes.iter().filter(|&&c| c != labels[i]).map(|&c| mean_to(c)).fold(f64::INFINITY, f64::min);
        let s = if a.max(b) > 0.0 && b.is_finite() { (b - a) / a.max(b) } else { 0.0 };
        total += s;
    }
    total / points.len() as f64
}
