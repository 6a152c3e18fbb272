use crate::{Error, Result};

/// Least-squares slope of `log w2` against `log(1 + t)` over the second half
/// of the series.
pub fn rate_fit(w2: &[f64], t: &[f64]) -> Result<f64> {
    if w2.len() != t.len() {
        return Err(Error::arg("series lengths differ"));
    }
    if w2.len() < 20 {
        return Err(Error::arg(format!("rate fit needs at least 20 points, got {}", w2.len())));
    }
    if w2.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::arg("rate fit needs positive finite values"));
    }
    if t.iter().any(|&v| !(v > -1.0) || !v.is_finite()) {
        return Err(Error::arg("times must exceed -1"));
    }
    let start = w2.len() / 2;
    let xs: Vec<f64> = t[start..].iter().map(|&v| (1.0 + v).ln()).collect();
    let ys: Vec<f64> = w2[start..].iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx <= 0.0 {
        return Err(Error::arg("times in the fitted half are all equal"));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let t: Vec<f64> = (0..100).map(|k| (k * 10) as f64).collect();
        let w: Vec<f64> = t.iter().map(|&s| 3.0 * (1.0 + s).powf(-0.5)).collect();
        assert!((rate_fit(&w, &t).unwrap() + 0.5).abs() < 1e-6);
        let flat = vec![0.7; 100];
        assert!(rate_fit(&flat, &t).unwrap().abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let t: Vec<f64> = (0..30).map(f64::from).collect();
        let mut w = vec![1.0; 30];
        w[3] = 0.0;
        assert!(rate_fit(&w, &t).is_err());
        assert!(rate_fit(&[1.0; 10], &t[..10]).is_err());
    }
}
