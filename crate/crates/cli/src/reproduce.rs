//! The reproduction table: every quoted figure, recomputed.

use anyhow::Result;
use fockport_core::bell::{reference_n2_detector, DetectorDesign, SuccessModel};
use fockport_core::resources::SqueezeParams;
use fockport_core::teleport::{n_photon_source, reversal, truncated_maximal_epr, Pipeline, RunOptions};
use fockport_core::State;

use crate::report::{Comparison, Rule};

fn net(input: &State, pipeline: &Pipeline<f64>, model: &SuccessModel<f64>, opts: &RunOptions<f64>) -> Result<f64> {
    Ok(pipeline.run(input, model, opts)?.net)
}

/// Rows in a fixed order. `model` drives the pipeline rows; the detector
/// rows always use the built-in networks.
pub fn rows(model: &SuccessModel<f64>, opts: &RunOptions<f64>) -> Result<Vec<Comparison>> {
    let n2 = reference_n2_detector::<f64>()?;
    let g = n2.g();
    let half = DetectorDesign::<f64>::fifty_fifty();
    let squeeze = SqueezeParams::new(0.7, 0.49)?;

    let mut rows = vec![
        Comparison::new("p(N~=2)", 0.375, n2.success_probability(), Rule::Within(1e-12)),
        Comparison::new("|g1|,|g2|", 1e-12, g[1].norm().max(g[2].norm()), Rule::Below),
        Comparison::new("p(N~=1) 50/50", 1.0, half.success_probability(), Rule::Within(1e-12)),
    ];

    let qubit = State::from_real_amplitudes(&[1.0, 0.5])?;
    rows.push(Comparison::new(
        "reversal qubit",
        6e-3,
        net(&qubit, &reversal(1, squeeze, 0.7)?, model, opts)?,
        Rule::OneFigure,
    ));
    let qutrit = State::from_real_amplitudes(&[1.0, 0.5, 0.25])?;
    rows.push(Comparison::new(
        "reversal qutrit",
        2e-5,
        net(&qutrit, &reversal(2, squeeze, 0.7)?, model, opts)?,
        Rule::OneFigure,
    ));

    let vacuum = State::basis(&[0])?;
    for (n, lambda, quoted) in [(1, 0.5, 7e-2), (2, 0.7, 8e-3)] {
        rows.push(Comparison::new(
            format!("source |0>->|{n}>"),
            quoted,
            net(&vacuum, &n_photon_source(n, lambda)?, model, opts)?,
            Rule::OneFigure,
        ));
    }

    for (n, quoted) in [(1, 1e-2), (2, 2e-4)] {
        let (input, pipe) = truncated_maximal_epr(n, 0.7, 0.49, 0.7, opts.tail_epsilon)?;
        rows.push(Comparison::new(
            format!("truncated maximal N={n}"),
            quoted,
            net(&input, &pipe, model, opts)?,
            Rule::OneFigure,
        ));
    }
    Ok(rows)
}
