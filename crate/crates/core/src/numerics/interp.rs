//! Finite-difference and interpolation stencils built from Fornberg's recursion.

/// Weights `c[k][j]` such that `f^(k)(z) ≈ Σ_j c[k][j] f(x_j)` for `k ≤ m`.
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// First index of a `width`-point window centred on `center` and clipped to `[0, n)`.
pub fn window_start(n: usize, center: f64, width: usize) -> usize {
    let width = width.min(n);
    let lo = (center - 0.5 * (width as f64 - 1.0)).round();
    (lo.max(0.0) as usize).min(n - width)
}

/// Derivative operator on a uniform grid with local stencils of fixed width.
#[derive(Debug, Clone)]
pub struct UniformDiff {
    starts: Vec<usize>,
    weights: Vec<Vec<f64>>,
}

impl UniformDiff {
    /// `order`-th derivative on `n` points with spacing `h`; 7-point stencils give 6th order for `order = 1`.
    pub fn new(n: usize, h: f64, order: usize, width: usize) -> Self {
        let width = width.min(n);
        let mut starts = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for j in 0..n {
            let s = window_start(n, j as f64, width);
            let nodes: Vec<f64> = (s..s + width).map(|k| (k as f64 - j as f64) * h).collect();
            let w = fornberg_weights(0.0, &nodes, order);
            starts.push(s);
            weights.push(w[order].clone());
        }
        Self { starts, weights }
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..f.len()).map(|j| self.at(f, j)).collect()
    }

    pub fn at(&self, f: &[f64], j: usize) -> f64 {
        let s = self.starts[j];
        self.weights[j]
            .iter()
            .enumerate()
            .map(|(k, w)| w * f[s + k])
            .sum()
    }
}

/// Value and first derivative at `z` of the local polynomial through `width` nearest nodes.
pub fn local_interp(xs: &[f64], fs: &[f64], z: f64, width: usize) -> (f64, f64) {
    let n = xs.len();
    let pos = match xs.binary_search_by(|v| v.partial_cmp(&z).expect("finite nodes")) {
        Ok(i) => i as f64,
        Err(i) => {
            if i == 0 {
                0.0
            } else if i >= n {
                (n - 1) as f64
            } else {
                (i - 1) as f64 + (z - xs[i - 1]) / (xs[i] - xs[i - 1])
            }
        }
    };
    let s = window_start(n, pos, width);
    let e = (s + width).min(n);
    let w = fornberg_weights(z, &xs[s..e], 1);
    let mut v = 0.0;
    let mut d = 0.0;
    for k in 0..e - s {
        v += w[0][k] * fs[s + k];
        d += w[1][k] * fs[s + k];
    }
    (v, d)
}

/// Uniform-grid variant: nodes `x_j = x0 + j h`.
pub fn uniform_interp(x0: f64, h: f64, fs: &[f64], z: f64, width: usize, m: usize) -> Vec<f64> {
    let n = fs.len();
    let pos = (z - x0) / h;
    let s = window_start(n, pos, width);
    let e = (s + width).min(n);
    let nodes: Vec<f64> = (s..e).map(|k| x0 + k as f64 * h).collect();
    let w = fornberg_weights(z, &nodes, m);
    w.iter()
        .map(|row| row.iter().enumerate().map(|(k, c)| c * fs[s + k]).sum())
        .collect()
}

/// Periodic variant: `fs[i]` sampled at `i·period/n`, window wraps around.
pub fn periodic_interp(period: f64, fs: &[f64], z: f64, width: usize, m: usize) -> Vec<f64> {
    let n = fs.len();
    let h = period / n as f64;
    let pos = z / h;
    let width = width.min(n);
    let lo = (pos - 0.5 * (width as f64 - 1.0)).round() as i64;
    let nodes: Vec<f64> = (0..width).map(|k| (lo + k as i64) as f64 * h).collect();
    let w = fornberg_weights(z, &nodes, m);
    w.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(k, c)| c * fs[(lo + k as i64).rem_euclid(n as i64) as usize])
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_central_difference() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w[1][0] + 0.5).abs() < 1e-15 && (w[1][2] - 0.5).abs() < 1e-15);
        assert!((w[2][0] - 1.0).abs() < 1e-15 && (w[2][1] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_diff_sixth_order() {
        let n = 96;
        let h = std::f64::consts::PI / (n - 1) as f64;
        let f: Vec<f64> = (0..n).map(|j| (j as f64 * h).sin()).collect();
        let d = UniformDiff::new(n, h, 1, 7).apply(&f);
        for (j, dj) in d.iter().enumerate() {
            assert!((dj - (j as f64 * h).cos()).abs() < 1e-9, "j = {j}");
        }
    }

    #[test]
    fn nonuniform_interpolation() {
        let xs: Vec<f64> = (0..40).map(|k| (k as f64 / 39.0).powf(1.3) * 3.0).collect();
        let fs: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        for z in [0.0, 0.33, 1.7, 2.99, 3.0] {
            let (v, d) = local_interp(&xs, &fs, z, 8);
            assert!((v - z.exp()).abs() < 1e-9 * z.exp());
            assert!((d - z.exp()).abs() < 1e-6 * z.exp());
        }
    }

    #[test]
    fn periodic_wraps() {
        let n = 64;
        let period = 5.0;
        let fs: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).sin())
            .collect();
        for z in [0.0, 0.01, 2.5, 4.99] {
            let v = periodic_interp(period, &fs, z, 10, 1);
            let arg = 2.0 * std::f64::consts::PI * z / period;
            assert!((v[0] - arg.sin()).abs() < 1e-10);
            assert!((v[1] - arg.cos() * 2.0 * std::f64::consts::PI / period).abs() < 1e-8);
        }
    }
}
