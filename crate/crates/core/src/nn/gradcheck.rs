//! Central finite-difference gradient checks in `f64`.

use alloc::string::String;

use super::graph::{Graph, Var};
use super::params::ParamStore;

pub const FD_EPSILON: f64 = 1e-3;
/// Denominator floor for the relative error, so that gradients that are
/// zero on both sides compare as equal.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    pub checked: usize,
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: (String, usize),
    pub analytic: f64,
    pub numeric: f64,
}

pub fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

/// Compares `backward` against `(f(p + ε) - f(p - ε)) / 2ε` for every
/// scalar of every parameter. `build` must return a `1 x 1` node and be
/// deterministic.
pub fn check_gradients(params: &ParamStore<f64>, build: impl Fn(&mut Graph<'_, f64>) -> Var) -> GradReport {
    let analytic = {
        let mut g = Graph::new(params);
        let loss = build(&mut g);
        g.backward(loss)
    };
    let eval = |p: &ParamStore<f64>| {
        let mut g = Graph::new(p);
        let loss = build(&mut g);
        g.value(loss).data[0]
    };
    let mut work = params.clone();
    let mut report =
        GradReport { checked: 0, max_rel_error: 0.0, worst: (String::new(), 0), analytic: 0.0, numeric: 0.0 };
    for id in params.ids() {
        for k in 0..params.get(id).data.len() {
            let orig = params.get(id).data[k];
            work.get_mut(id).data[k] = orig + FD_EPSILON;
            let up = eval(&work);
            work.get_mut(id).data[k] = orig - FD_EPSILON;
            let down = eval(&work);
            work.get_mut(id).data[k] = orig;
            let numeric = (up - down) / (2.0 * FD_EPSILON);
            let a = analytic.get(id).data[k];
            let err = rel_error(a, numeric);
            report.checked += 1;
            if err > report.max_rel_error || report.checked == 1 {
                report.max_rel_error = err;
                report.worst = (String::from(params.name(id)), k);
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    report
}
