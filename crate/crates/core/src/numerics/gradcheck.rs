use super::{NumericsError, Tape, Tensor, Var};

/// Outcome of comparing analytic gradients with central differences.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|a − n| / max(|a|, |n|, 1e-8)` over all checked entries.
    pub max_rel_error: f64,
    /// (input index, flat element index) of the worst entry.
    pub worst: (usize, usize),
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.tolerance
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Checks the gradient of a scalar function of one tensor.
pub fn grad_check<F>(f: F, x: &Tensor, h: f64, tol: f64) -> Result<GradCheckReport, NumericsError>
where
    F: Fn(&mut Tape, Var) -> Result<Var, NumericsError>,
{
    grad_check_many(|tape, vars| f(tape, vars[0]), std::slice::from_ref(x), h, tol)
}

/// Checks the gradient of a scalar function with respect to every element of
/// every input tensor.
pub fn grad_check_many<F>(
    f: F,
    inputs: &[Tensor],
    h: f64,
    tol: f64,
) -> Result<GradCheckReport, NumericsError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, NumericsError>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let loss = f(&mut tape, &vars)?;
    tape.backward(loss)?;
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .zip(inputs)
        .map(|(v, t)| tape.grad(*v).map_or_else(|| vec![0.0; t.len()], <[f64]>::to_vec))
        .collect();

    let eval = |inputs: &[Tensor]| -> Result<f64, NumericsError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.constant(t.clone())).collect();
        let out = f(&mut tape, &vars)?;
        tape.value(out).item()
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: (0, 0),
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
        tolerance: tol,
    };
    let mut probe = inputs.to_vec();
    for (t, grads) in analytic.iter().enumerate() {
        for (e, &a) in grads.iter().enumerate() {
            let orig = inputs[t].data()[e];
            probe[t].data_mut()[e] = orig + h;
            let plus = eval(&probe)?;
            probe[t].data_mut()[e] = orig - h;
            let minus = eval(&probe)?;
            probe[t].data_mut()[e] = orig;
            let n = (plus - minus) / (2.0 * h);
            let err = relative_error(a, n);
            report.checked += 1;
            if err > report.max_rel_error || report.checked == 1 {
                report.max_rel_error = err;
                report.worst = (t, e);
                report.analytic = a;
                report.numeric = n;
            }
        }
    }
    Ok(report)
}
