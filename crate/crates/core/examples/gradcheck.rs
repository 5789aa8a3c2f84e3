//! Differentiates through a gradient and checks the meta-gradients of a
//! tiny instance against central finite differences.

use metaprompt::autodiff::Graph;
use metaprompt::harness::oracle::gradcheck_suite;
use metaprompt::tensor::Tensor;

fn main() -> metaprompt::Result<()> {
    // f(x) = tanh(x)²; f'(x) and f''(x) come from the tape.
    let mut g = Graph::new();
    let x = g.param(Tensor::scalar(0.3));
    let t = g.tanh(x)?;
    let f = g.hadamard(t, t)?;
    let df = g.grad(f, &[x], true)?[x];
    let d2f = g.grad(df, &[x], false)?[x];
    let th = 0.3f64.tanh();
    println!(
        "f'(0.3)  = {:.12} (closed form {:.12})",
        g.value(df).item(),
        2.0 * th * (1.0 - th * th)
    );
    println!(
        "f''(0.3) = {:.12} (closed form {:.12})",
        g.value(d2f).item(),
        2.0 * (1.0 - th * th) * (1.0 - 3.0 * th * th)
    );

    for seed in 0..3 {
        let r = gradcheck_suite(seed)?;
        println!(
            "seed {seed}: {} prompt and {} regulator entries, max relative error {:.2e}",
            r.theta_entries,
            r.phi_entries,
            r.max_relative_error()
        );
    }
    Ok(())
}
