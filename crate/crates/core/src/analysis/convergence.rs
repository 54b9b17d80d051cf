use super::AnalysisError;

/// A scalar quantity measured on a sequence of resolutions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceStudy {
    /// `(resolution, quantity)` pairs, coarsest first.
    pub levels: Vec<(f64, f64)>,
}

impl ConvergenceStudy {
    pub fn new(levels: Vec<(f64, f64)>) -> Self {
        Self { levels }
    }

    pub fn push(&mut self, resolution: f64, quantity: f64) {
        self.levels.push((resolution, quantity));
    }

    /// Three-level order from the last three quantities of a halving sequence.
    pub fn estimated_order(&self) -> Result<f64, AnalysisError> {
        let n = self.levels.len();
        if n < 3 {
            return Err(AnalysisError::TooFewLevels { needed: 3, got: n });
        }
        let q = |k: usize| self.levels[k].1;
        estimate_order([q(n - 3), q(n - 2), q(n - 1)])
    }

    /// Least-squares slope of `log |quantity|` against `log resolution`,
    /// for quantities that are themselves errors.
    pub fn fitted_order(&self) -> Result<f64, AnalysisError> {
        let (x, y): (Vec<f64>, Vec<f64>) = self.levels.iter().map(|&(h, q)| (h, q.abs())).unzip();
        loglog_slope(&x, &y)
    }
}

/// `log2(|N1 - N2| / |N2 - N3|)` for quantities on meshes `h, h/2, h/4`.
pub fn estimate_order(values: [f64; 3]) -> Result<f64, AnalysisError> {
    let [a, b, c] = values;
    let coarse = (a - b).abs();
    let fine = (b - c).abs();
    if fine == 0.0 || coarse == 0.0 || !coarse.is_finite() || !fine.is_finite() {
        return Err(AnalysisError::UndefinedOrder(format!(
            "successive differences {coarse} and {fine}"
        )));
    }
    Ok((coarse / fine).log2())
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(AnalysisError::TooFewLevels {
            needed: 2,
            got: x.len().min(y.len()),
        });
    }
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(AnalysisError::UndefinedOrder(
            "log-log fit needs positive finite values".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::UndefinedOrder("all resolutions are equal".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_halving_is_first_order() {
        assert_eq!(estimate_order([4.0, 2.0, 1.0]).unwrap(), 1.0);
        assert!(estimate_order([1.0, 1.0, 1.0]).is_err());
        let s = ConvergenceStudy::new(vec![(1.0, 4.0), (0.5, 2.0)]);
        assert_eq!(s.estimated_order(), Err(AnalysisError::TooFewLevels { needed: 3, got: 2 }));
    }

    #[test]
    fn immersed_column_of_the_reference_table() {
        let r = estimate_order([5.8833092, 5.9302898, 5.9484929]).unwrap();
        assert!((r - 1.36788).abs() < 5e-6, "{r}");
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 0.5, 0.25, 0.125];
        let y: Vec<f64> = x.iter().map(|h: &f64| 3.0 * h.powf(1.7)).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 1.7).abs() < 1e-12);
        let s = ConvergenceStudy::new(x.iter().copied().zip(y.iter().map(|v| -v)).collect());
        assert!((s.fitted_order().unwrap() - 1.7).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_err());
        assert!(loglog_slope(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }
}
