//! Small dense-vector helpers shared by the learners and solvers.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Index of the smallest entry; ties resolve to the lowest index.
pub fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x < v[best] {
            best = i;
        }
    }
    best
}

/// Normalizes `[v]^+` onto the simplex, or returns the uniform vector when
/// the positive part is identically zero.
pub fn normalize_positive(v: &[f64], out: &mut [f64]) {
    let total: f64 = v.iter().map(|x| x.max(0.0)).sum();
    if total > 0.0 {
        for (o, x) in out.iter_mut().zip(v) {
            *o = x.max(0.0) / total;
        }
    } else {
        let u = 1.0 / v.len() as f64;
        out.iter_mut().for_each(|o| *o = u);
    }
}

/// Numerically stable softmax of `logits` written into `out`; returns
/// `log Σ exp(logits)`.
pub fn softmax_into(logits: &[f64], out: &mut [f64]) -> f64 {
    let m = max(logits);
    let mut total = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - m).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
    m + total.ln()
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn project_simplex_into(v: &[f64], out: &mut [f64]) {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    for (o, &x) in out.iter_mut().zip(v) {
        *o = (x - theta).max(0.0);
    }
}
