//! Finite-difference weights.

/// Fornberg's recursion: `w[d][j]` is the weight of `f(nodes[j])` in the
/// approximation of the `d`-th derivative at `x0`, for `d = 0..=max_order`.
pub fn fornberg_weights(x0: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut w = vec![vec![0.0; n]; max_order + 1];
    if n == 0 {
        return w;
    }
    w[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mi = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mi).rev() {
                    w[k][i] = c1 * (k as f64 * w[k - 1][i - 1] - c5 * w[k][i - 1]) / c2;
                }
                w[0][i] = -c1 * c5 * w[0][i - 1] / c2;
            }
            for k in (1..=mi).rev() {
                w[k][j] = (c4 * w[k][j] - k as f64 * w[k - 1][j]) / c3;
            }
            w[0][j] = c4 * w[0][j] / c3;
        }
        c1 = c2;
    }
    w
}

/// Weights on the integer nodes `-half..=half` for derivatives up to `max_order`, unit spacing.
pub fn central_weights(half: usize, max_order: usize) -> Vec<Vec<f64>> {
    let nodes: Vec<f64> = (-(half as i64)..=half as i64).map(|k| k as f64).collect();
    fornberg_weights(0.0, &nodes, max_order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_stencils() {
        let w = central_weights(1, 2);
        assert_eq!(w[0], vec![0.0, 1.0, 0.0]);
        assert!((w[1][0] + 0.5).abs() < 1e-15 && w[1][1].abs() < 1e-15 && (w[1][2] - 0.5).abs() < 1e-15);
        assert!((w[2][0] - 1.0).abs() < 1e-15 && (w[2][1] + 2.0).abs() < 1e-15 && (w[2][2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nine_point_weights_are_exact_on_polynomials() {
        let w = central_weights(4, 4);
        for d in 0..=4usize {
            for p in 0..=8u32 {
                let got: f64 = (-4i32..=4).zip(&w[d]).map(|(k, c)| c * (k as f64).powi(p as i32)).sum();
                let want = if p as usize == d { (1..=d).map(|i| i as f64).product::<f64>() } else { 0.0 };
                assert!((got - want).abs() < 1e-9, "d={d} p={p} got={got}");
            }
        }
    }
}
