//! Refinement studies: observed orders and Richardson extrapolation.

use serde::Serialize;

use crate::error::{Error, Result};

/// `log(e_k / e_{k+1}) / log(ratio)` for each consecutive pair.
pub fn observed_orders(errors: &[f64], ratio: f64) -> Vec<f64> {
    errors
        .windows(2)
        .map(|w| (w[0] / w[1]).ln() / ratio.ln())
        .collect()
}

/// Extrapolates two values computed at spacing `h` and `h/ratio` for a
/// method of order `p`.
pub fn richardson(coarse: f64, fine: f64, ratio: f64, p: f64) -> f64 {
    let r = ratio.powf(p);
    (r * fine - coarse) / (r - 1.0)
}

/// Residuals on a sequence of grids, each refined by the same ratio.
#[derive(Debug, Clone, Serialize)]
pub struct Study {
    pub label: String,
    pub spacings: Vec<f64>,
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
}

impl Study {
    pub fn new(label: impl Into<String>, spacings: Vec<f64>, errors: Vec<f64>) -> Result<Self> {
        if spacings.len() != errors.len() || spacings.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a study needs at least two levels with matching lengths, got {} spacings and {} errors",
                spacings.len(),
                errors.len()
            )));
        }
        let orders = spacings
            .windows(2)
            .zip(errors.windows(2))
            .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
            .collect();
        Ok(Self {
            label: label.into(),
            spacings,
            errors,
            orders,
        })
    }

    /// Smallest order over the last `pairs` refinements.
    pub fn min_order(&self, pairs: usize) -> f64 {
        let k = self.orders.len().saturating_sub(pairs);
        self.orders[k..]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn finest(&self) -> f64 {
        *self.errors.last().expect("study has levels")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let e = [4.0, 1.0, 0.25];
        assert_eq!(observed_orders(&e, 2.0), vec![2.0, 2.0]);
        let s = Study::new("x", vec![0.4, 0.2, 0.1], e.to_vec()).unwrap();
        assert!((s.min_order(2) - 2.0).abs() < 1e-14);
        assert_eq!(s.finest(), 0.25);
        assert!(Study::new("x", vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn richardson_removes_leading_term() {
        // Q(h) = 1 + 3 h^2
        let q = |h: f64| 1.0 + 3.0 * h * h;
        assert!((richardson(q(0.2), q(0.1), 2.0, 2.0) - 1.0).abs() < 1e-14);
    }
}
