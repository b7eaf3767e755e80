//! Ordinary least squares on a straight line.

/// Result of fitting `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Signed Pearson correlation of the abscissae and ordinates.
    pub pearson: f64,
    pub points: usize,
}

impl LineFit {
    /// Correlation between the observed ordinates and the fitted line.
    ///
    /// For a straight-line fit this is `|pearson|`; it is the figure quoted as
    /// the "correlation coefficient" of a linearized fit.
    pub fn fit_correlation(&self) -> f64 {
        self.pearson.abs()
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Unweighted least squares. Returns `None` for fewer than two points or when
/// every abscissa is identical.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    assert_eq!(xs.len(), ys.len(), "abscissae and ordinates differ in length");
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    // A horizontal data set sits exactly on the fitted line.
    let pearson = if syy > 0.0 {
        (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
    } else {
        1.0
    };
    Some(LineFit {
        slope,
        intercept,
        pearson,
        points: n,
    })
}
