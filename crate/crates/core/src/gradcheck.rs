//! Numerical differentiation used as an independent oracle for analytic
//! gradients. Only function values are evaluated here, never the backward
//! pass being checked.

use crate::error::Result;
use crate::tensor::Tensor;

/// Relative error with denominator `max(|analytic|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(floor)
}

/// Stencil for [`numeric_gradient`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stencil {
    /// `(f(x+h) - f(x-h)) / 2h`
    Central,
    /// Fourth-order central stencil over `x ± h`, `x ± 2h`.
    Central5,
}

pub fn numeric_gradient<F>(mut f: F, x: &Tensor, step: f64, stencil: Stencil) -> Result<Tensor>
where
    F: FnMut(&Tensor) -> Result<f64>,
{
    let mut out = Vec::with_capacity(x.len());
    let mut probe = x.data().to_vec();
    for i in 0..x.len() {
        let orig = probe[i];
        let mut at = |delta: f64, probe: &mut Vec<f64>| -> Result<f64> {
            probe[i] = orig + delta;
            let t = Tensor::new(x.shape().to_vec(), probe.clone())?;
            f(&t)
        };
        let d = match stencil {
            Stencil::Central => (at(step, &mut probe)? - at(-step, &mut probe)?) / (2.0 * step),
            Stencil::Central5 => {
                let p1 = at(step, &mut probe)?;
                let m1 = at(-step, &mut probe)?;
                let p2 = at(2.0 * step, &mut probe)?;
                let m2 = at(-2.0 * step, &mut probe)?;
                (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * step)
            }
        };
        probe[i] = orig;
        out.push(d);
    }
    Tensor::new(x.shape().to_vec(), out)
}

/// Outcome of comparing one analytic gradient against its numeric estimate.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Comparison {
    pub checked: usize,
    pub max_relative_error: f64,
    pub worst_index: usize,
}

impl Comparison {
    pub fn between(analytic: &Tensor, numeric: &Tensor, floor: f64) -> Self {
        assert_eq!(analytic.shape(), numeric.shape());
        let mut c = Comparison::default();
        for (i, (&a, &n)) in analytic.data().iter().zip(numeric.data()).enumerate() {
            let e = relative_error(a, n, floor);
            if e > c.max_relative_error || c.checked == 0 {
                c.max_relative_error = c.max_relative_error.max(e);
                c.worst_index = i;
            }
            c.checked += 1;
        }
        c
    }

    pub fn merge(&mut self, other: &Comparison) {
        if other.max_relative_error > self.max_relative_error {
            self.max_relative_error = other.max_relative_error;
            self.worst_index = other.worst_index;
        }
        self.checked += other.checked;
    }
}
