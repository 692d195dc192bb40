fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Project `g` so it does not point against the reference gradient.
pub fn agem_project(g: &[f64], g_ref: &[f64]) -> Vec<f64> {
    assert_eq!(g.len(), g_ref.len(), "gradient shapes differ");
    let d = dot(g, g_ref);
    if d >= 0.0 {
        return g.to_vec();
    }
    // d < 0 implies g_ref is non-zero.
    let s = d / dot(g_ref, g_ref);
    g.iter().zip(g_ref).map(|(a, r)| a - s * r).collect()
}
