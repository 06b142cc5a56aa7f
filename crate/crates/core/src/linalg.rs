//! Tridiagonal systems: products and a partial-pivoting solver.

#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    /// `lower[i]` couples row `i + 1` to column `i`.
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    /// `upper[i]` couples row `i` to column `i + 1`.
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y: Vec<f64> = (0..n).map(|i| self.diag[i] * x[i]).collect();
        for i in 0..n.saturating_sub(1) {
            y[i] += self.upper[i] * x[i + 1];
            y[i + 1] += self.lower[i] * x[i];
        }
        y
    }

    /// Solves `T x = b` by Gaussian elimination with partial pivoting after symmetric
    /// Jacobi scaling. Returns `None` for a singular system.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        if n == 0 {
            return Some(Vec::new());
        }
        // D^{-1/2} T D^{-1/2} y = D^{-1/2} b, x = D^{-1/2} y.
        let s: Vec<f64> = self.diag.iter().map(|d| if *d != 0.0 && d.is_finite() { 1.0 / d.abs().sqrt() } else { 1.0 }).collect();
        let mut dl: Vec<f64> = (0..n - 1).map(|i| self.lower[i] * s[i + 1] * s[i]).collect();
        let mut d: Vec<f64> = (0..n).map(|i| self.diag[i] * s[i] * s[i]).collect();
        let mut du: Vec<f64> = (0..n - 1).map(|i| self.upper[i] * s[i] * s[i + 1]).collect();
        let mut x: Vec<f64> = (0..n).map(|i| b[i] * s[i]).collect();
        // LAPACK gtsv elimination; after row i, dl[i] holds the fill-in of the second superdiagonal.
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    return None;
                }
                let f = dl[i] / d[i];
                d[i + 1] -= f * du[i];
                x[i + 1] -= f * x[i];
                dl[i] = 0.0;
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                let tmp = d[i + 1];
                d[i + 1] = du[i] - f * tmp;
                if i + 2 < n {
                    dl[i] = du[i + 1];
                    du[i + 1] = -f * dl[i];
                } else {
                    dl[i] = 0.0;
                }
                du[i] = tmp;
                let bi = x[i];
                x[i] = x[i + 1];
                x[i + 1] = bi - f * x[i + 1];
            }
        }
        if d[n - 1] == 0.0 {
            return None;
        }
        x[n - 1] /= d[n - 1];
        if n > 1 {
            x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - du[i] * x[i + 1] - dl[i] * x[i + 2]) / d[i];
        }
        for i in 0..n {
            x[i] *= s[i];
        }
        if x.iter().all(|v| v.is_finite()) {
            Some(x)
        } else {
            None
        }
    }
}
