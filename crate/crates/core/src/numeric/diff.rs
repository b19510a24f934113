use crate::error::Result;

/// Central-difference gradient with a fixed absolute step per coordinate.
pub fn finite_diff_gradient<F>(f: F, x: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut point = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = point[i];
        point[i] = orig + step;
        let up = f(&point)?;
        point[i] = orig - step;
        let down = f(&point)?;
        point[i] = orig;
        grad.push((up - down) / (2.0 * step));
    }
    Ok(grad)
}

/// Central-difference Jacobian of a vector-valued map; row `i` holds `∂f_i/∂x`.
pub fn finite_diff_jacobian<F>(f: F, x: &[f64], steps: &[f64]) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut point = x.to_vec();
    let mut cols = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let orig = point[j];
        let h = steps[j];
        point[j] = orig + h;
        let up = f(&point)?;
        point[j] = orig - h;
        let down = f(&point)?;
        point[j] = orig;
        cols.push(
            up.iter()
                .zip(&down)
                .map(|(u, d)| (u - d) / (2.0 * h))
                .collect::<Vec<_>>(),
        );
    }
    let rows = cols.first().map_or(0, Vec::len);
    Ok((0..rows)
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect())
}
