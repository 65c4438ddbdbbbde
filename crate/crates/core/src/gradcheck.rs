//! Central finite-difference validation of analytic gradients.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Result;
use crate::graph::Gradients;
use crate::tensor::ModelParams;

/// Magnitudes below this are compared absolutely rather than relatively.
pub const RELATIVE_FLOOR: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamCheck {
    pub name: String,
    pub max_rel_error: f64,
    /// Flat index of the worst entry.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
    pub entries_checked: usize,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.params.iter().all(|p| !p.flagged)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &ParamCheck> {
        self.params.iter().filter(|p| p.flagged)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.params.iter().map(|p| p.max_rel_error).fold(0.0, f64::max)
    }
}

/// `|a - n| / max(|a|, |n|, RELATIVE_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
    (analytic - numeric).abs() / scale
}

/// Compares `analytic` against `(L(p + ε) - L(p - ε)) / (2ε)` for every
/// scalar of every parameter. The step actually taken is measured after the
/// `f32` round trip, so the quotient uses the true perturbation.
pub fn finite_diff_check<F>(
    params: &ModelParams,
    analytic: &Gradients,
    mut loss_fn: F,
    epsilon: f64,
    tolerance: f64,
) -> Result<GradCheckReport>
where
    F: FnMut(&ModelParams) -> Result<f64>,
{
    let mut work = params.clone();
    let names: Vec<String> = params.names().map(String::from).collect();
    let mut report = GradCheckReport::default();

    for name in names {
        let len = params.get(&name)?.len();
        let grad = analytic.get(&name);
        let mut check = ParamCheck {
            name: name.clone(),
            max_rel_error: 0.0,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
            flagged: false,
        };
        for index in 0..len {
            let original = work.get(&name)?.data()[index];
            let plus = (f64::from(original) + epsilon) as f32;
            let minus = (f64::from(original) - epsilon) as f32;

            work.get_mut(&name)?.data_mut()[index] = plus;
            let up = loss_fn(&work)?;
            work.get_mut(&name)?.data_mut()[index] = minus;
            let down = loss_fn(&work)?;
            work.get_mut(&name)?.data_mut()[index] = original;

            let step = f64::from(plus) - f64::from(minus);
            let numeric = (up - down) / step;
            let a = grad.map(|g| g.data[index]).unwrap_or(0.0);
            let err = relative_error(a, numeric);
            if err > check.max_rel_error || index == 0 {
                check.max_rel_error = err;
                check.worst_index = index;
                check.analytic = a;
                check.numeric = numeric;
            }
            report.entries_checked += 1;
        }
        check.flagged = check.max_rel_error > tolerance;
        report.params.push(check);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::tensor::Tensor;
    use alloc::vec;

    fn quadratic_params() -> ModelParams {
        let mut p = ModelParams::new(0);
        p.insert("w", Tensor::new(vec![3], vec![0.5, -1.25, 2.0]).unwrap())
            .unwrap();
        p
    }

    fn quadratic_loss(params: &ModelParams) -> Result<(f64, Gradients)> {
        let mut g = Graph::new(params);
        let w = g.param("w")?;
        let sq = g.row_dot(w, w)?;
        let loss = g.scale(sq, 0.5)?;
        Ok((g.scalar(loss), g.backward(loss)?))
    }

    #[test]
    fn quadratic_is_exact() {
        let params = quadratic_params();
        let (_, grads) = quadratic_loss(&params).unwrap();
        let report =
            finite_diff_check(&params, &grads, |p| Ok(quadratic_loss(p)?.0), 1e-3, 1e-6).unwrap();
        assert!(report.passed());
        assert!(report.max_rel_error() < 1e-6, "{report:?}");
        assert_eq!(report.entries_checked, 3);
    }

    #[test]
    fn injected_error_is_flagged() {
        let params = quadratic_params();
        let (_, grads) = quadratic_loss(&params).unwrap();
        let mut broken = Gradients::default();
        let mut other = grads.clone();
        other.scale(1.05);
        broken.accumulate(&other);
        let report =
            finite_diff_check(&params, &broken, |p| Ok(quadratic_loss(p)?.0), 1e-3, 1e-3).unwrap();
        assert!(!report.passed());
        assert_eq!(report.flagged().count(), 1);
    }

    #[test]
    fn empty_model_gives_empty_report() {
        let params = ModelParams::new(0);
        let report =
            finite_diff_check(&params, &Gradients::default(), |_| Ok(1.0), 1e-3, 1e-3).unwrap();
        assert!(report.params.is_empty());
        assert!(report.passed());
    }
}
