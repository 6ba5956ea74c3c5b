use alloc::string::String;
use alloc::vec::Vec;

use super::{Tape, Var};
use crate::tensor::Tensor;
use crate::Result;

/// Gradients smaller than this are compared in absolute terms.
const ERROR_FLOOR: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamCheck {
    pub name: String,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
    pub max_rel_error: f64,
    /// Parameter holding the largest relative error.
    pub worst: Option<String>,
    pub tol: f64,
    pub passed: bool,
}

/// Compares reverse-mode gradients of the scalar `f` against central
/// differences with step `h`.
///
/// The per-element error is `|analytic - numeric| / max(|analytic|,
/// |numeric|, 1e-2)`; the check passes when every error is below `tol`.
pub fn gradient_check<F>(f: F, params: &[(String, Tensor)], h: f64, tol: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|(_, t)| tape.leaf(t.clone())).collect();
    let root = f(&mut tape, &vars)?;
    tape.backward(root)?;
    let analytic: Vec<Tensor> = vars.iter().map(|&v| tape.grad(v)).collect();

    let eval = |probe: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = probe.iter().map(|t| tape.leaf(t.clone())).collect();
        let root = f(&mut tape, &vars)?;
        Ok(tape.value(root).item())
    };

    let mut probe: Vec<Tensor> = params.iter().map(|(_, t)| t.clone()).collect();
    let mut checks = Vec::with_capacity(params.len());
    for (p, (name, _)) in params.iter().enumerate() {
        let mut max_rel: f64 = 0.0;
        let mut max_abs: f64 = 0.0;
        for e in 0..probe[p].len() {
            let orig = probe[p].data()[e];
            probe[p].data_mut()[e] = orig + h;
            let up = eval(&probe)?;
            probe[p].data_mut()[e] = orig - h;
            let down = eval(&probe)?;
            probe[p].data_mut()[e] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[p].data()[e];
            let abs = (a - numeric).abs();
            let rel = abs / a.abs().max(numeric.abs()).max(ERROR_FLOOR);
            max_abs = max_abs.max(abs);
            max_rel = max_rel.max(rel);
        }
        checks.push(ParamCheck {
            name: name.clone(),
            max_rel_error: max_rel,
            max_abs_error: max_abs,
        });
    }

    let worst = checks
        .iter()
        .fold(None::<&ParamCheck>, |best, c| match best {
            Some(b) if b.max_rel_error >= c.max_rel_error => Some(b),
            _ => Some(c),
        });
    let max_rel_error = worst.map_or(0.0, |c| c.max_rel_error);
    let worst = worst.map(|c| c.name.clone());
    Ok(GradCheckReport {
        passed: max_rel_error < tol,
        params: checks,
        max_rel_error,
        worst,
        tol,
    })
}
