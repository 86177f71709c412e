//! Row-major 2-D grids of `f64`.

/// Bilinear resampling with half-pixel centers (edge samples clamp).
pub fn resize_bilinear(src: &[f64], rows: usize, cols: usize, out_rows: usize, out_cols: usize) -> Vec<f64> {
    assert_eq!(src.len(), rows * cols, "grid size");
    if rows == out_rows && cols == out_cols {
        return src.to_vec();
    }
    let axis = |n_in: usize, n_out: usize| -> Vec<(usize, usize, f64)> {
        let scale = n_in as f64 / n_out as f64;
        (0..n_out)
            .map(|o| {
                let pos = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_in - 1) as f64);
                let lo = pos.floor() as usize;
                let hi = (lo + 1).min(n_in - 1);
                (lo, hi, pos - lo as f64)
            })
            .collect()
    };
    let ys = axis(rows, out_rows);
    let xs = axis(cols, out_cols);
    let mut out = Vec::with_capacity(out_rows * out_cols);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let top = src[y0 * cols + x0] * (1.0 - fx) + src[y0 * cols + x1] * fx;
            let bot = src[y1 * cols + x0] * (1.0 - fx) + src[y1 * cols + x1] * fx;
            out.push(top * (1.0 - fy) + bot * fy);
        }
    }
    out
}
