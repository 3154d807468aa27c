//! Order-independent floating-point reductions.

/// Sum that does not depend on the order of `values`: sort by total order,
/// then add pairwise.
pub fn canonical_sum(mut values: Vec<f64>) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    pairwise(&values)
}

/// Pairwise (tree) sum in the given order.
pub fn pairwise(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise(a) + pairwise(b)
        }
    }
}

/// Order-independent sum of 4-vectors, component by component.
pub fn canonical_sum4(values: &[[f64; 4]]) -> [f64; 4] {
    std::array::from_fn(|k| canonical_sum(values.iter().map(|v| v[k]).collect()))
}
