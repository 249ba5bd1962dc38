use alloc::vec::Vec;

use super::{Tape, Tensor, TensorError, Var};

/// Worst coordinate found by [`grad_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(tensor index, flat coordinate)` of the worst coordinate.
    pub worst: (usize, usize),
    pub analytic: f64,
    pub numeric: f64,
    pub coordinates: usize,
    pub passed: bool,
}

fn eval<F>(params: &[Tensor], f: &mut F) -> Result<f64, TensorError>
where
    F: FnMut(&mut Tape<'_>, &[Var]) -> Result<Var, TensorError>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p)).collect();
    let out = f(&mut tape, &vars)?;
    let v = tape.value(out);
    if v.len() != 1 {
        return Err(TensorError::NotScalarLoss(v.shape().to_vec()));
    }
    let v = v.item();
    if !v.is_finite() {
        return Err(TensorError::NonFinite { op: "grad_check" });
    }
    Ok(v)
}

/// Compares tape gradients of `f` with central differences
/// `(f(θ+ε) − f(θ−ε)) / 2ε` at every coordinate of every parameter.
///
/// Relative error is `|a − b| / max(1, |a|, |b|)`.
pub fn grad_check<F>(params: &[Tensor], eps: f64, tol: f64, mut f: F) -> Result<GradCheckReport, TensorError>
where
    F: FnMut(&mut Tape<'_>, &[Var]) -> Result<Var, TensorError>,
{
    let analytic: Vec<Tensor> = {
        let mut tape = Tape::new();
        let vars: Vec<Var> = params.iter().map(|p| tape.param(p)).collect();
        let out = f(&mut tape, &vars)?;
        if !tape.value(out).is_finite() {
            return Err(TensorError::NonFinite { op: "grad_check" });
        }
        let mut grads = tape.backward(out)?;
        vars.iter().map(|&v| grads.take(v)).collect()
    };

    let mut work: Vec<Tensor> = params.to_vec();
    let mut report = GradCheckReport { max_rel_error: 0.0, worst: (0, 0), analytic: 0.0, numeric: 0.0, coordinates: 0, passed: true };
    for (t, grad) in analytic.iter().enumerate() {
        for c in 0..grad.len() {
            let orig = work[t].data()[c];
            work[t].data_mut()[c] = orig + eps;
            let up = eval(&work, &mut f)?;
            work[t].data_mut()[c] = orig - eps;
            let down = eval(&work, &mut f)?;
            work[t].data_mut()[c] = orig;

            let numeric = (up - down) / (2.0 * eps);
            let a = grad.data()[c];
            let rel = (a - numeric).abs() / 1f64.max(a.abs()).max(numeric.abs());
            report.coordinates += 1;
            if rel > report.max_rel_error || report.coordinates == 1 {
                report.max_rel_error = rel;
                report.worst = (t, c);
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    report.passed = report.max_rel_error < tol;
    Ok(report)
}
