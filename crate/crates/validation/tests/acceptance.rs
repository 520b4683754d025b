//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::process::ExitCode;

use fockport_core::bell::{
    bell_state, conditional_bell_measure, fifty_fifty_measure, ideal_bell_project, reference_n2_detector,
    SuccessModel,
};
use fockport_core::design::{design, verify_design, DesignProblem};
use fockport_core::fock::{phase_distance, random_state, Occupation, PureState};
use fockport_core::resources::{
    generalized_bell, preparation_probability, prepare_via_swapping, GeneralizedBellSpec,
    SqueezeParams,
};
use fockport_core::sigfig::{format_one_figure, rounds_to};
use fockport_core::teleport::{
    extractor, n_photon_source, reversal, run_pipeline, teleport, truncated_maximal_epr, ManipulationStep,
    Pipeline,
};
use fockport_core::{Complex, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn reference() -> SuccessModel<f64> {
    SuccessModel::reference()
}

fn c1_n2_detector() -> Verdict {
    let d = reference_n2_detector::<f64>().expect("reference design builds");
    let p = d.success_probability();
    let (g1, g2) = (d.g()[1].norm(), d.g()[2].norm());
    let pass = (p - 0.375).abs() < 1e-12 && g1 < 1e-12 && g2 < 1e-12;
    verdict(pass, format!("|g0|^2 = {p:.15} (want 0.375), |g1| = {g1:.1e}, |g2| = {g2:.1e}"))
}

fn c2_fifty_fifty() -> Verdict {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let minus = PureState::superpose([
        (Occupation::new(vec![1, 0]), Complex::new(h, 0.0)),
        (Occupation::new(vec![0, 1]), Complex::new(-h, 0.0)),
    ])
    .unwrap();
    let cases = [(bell_state::<f64>(0), 0usize), (bell_state(1), 1), (minus, 2)];
    let mut worst = 0.0f64;
    for (state, slot) in &cases {
        let out = fifty_fifty_measure(state, (0, 1)).unwrap();
        let probs = [out.vacuum.probability, out.plus.probability, out.minus.probability];
        for (k, p) in probs.iter().enumerate() {
            let want = if k == *slot { 1.0 } else { 0.0 };
            worst = worst.max((p - want).abs());
        }
        worst = worst.max(out.other);
    }
    // any superposition on number sums 0 and 1, with a spectator mode
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let s = random_state::<f64, _>(2, 1, &mut rng).tensor(&random_state(1, 3, &mut rng));
        let out = fifty_fifty_measure(&s, (0, 1)).unwrap();
        worst = worst.max((out.bell_total() - 1.0).abs());
    }
    verdict(worst < 1e-12, format!("max deviation from certain classification {worst:.1e}"))
}

fn c3_reversal_qubit() -> Verdict {
    let input = State::from_real_amplitudes(&[1.0, 0.5]).unwrap();
    let pipe = reversal(1, SqueezeParams::new(0.49, 0.7).unwrap(), 0.7).unwrap();
    let out = run_pipeline(&input, &pipe, &reference()).unwrap();
    let want = State::from_real_amplitudes(&[0.5, 1.0]).unwrap().normalize();
    let d = phase_distance(&out.output, &want).unwrap();
    let pass = rounds_to(out.net, 6e-3) && d < 1e-10;
    verdict(
        pass,
        format!("net {:.4e} ~ {} (want 6e-3), output distance {d:.1e}", out.net, format_one_figure(out.net)),
    )
}

fn c4_reversal_qutrit() -> Verdict {
    let input = State::from_real_amplitudes(&[1.0, 0.5, 0.25]).unwrap();
    let pipe = reversal(2, SqueezeParams::new(0.7, 0.49).unwrap(), 0.7).unwrap();
    let out = run_pipeline(&input, &pipe, &reference()).unwrap();
    let want = State::from_real_amplitudes(&[0.25, 0.5, 1.0]).unwrap().normalize();
    let d = phase_distance(&out.output, &want).unwrap();
    let pass = rounds_to(out.net, 2e-5) && d < 1e-10;
    verdict(
        pass,
        format!("net {:.4e} ~ {} (want 2e-5), output distance {d:.1e}", out.net, format_one_figure(out.net)),
    )
}

fn c5_sources() -> Verdict {
    let vac = State::basis(&[0]).unwrap();
    let one = run_pipeline(&vac, &n_photon_source(1, 0.5).unwrap(), &reference()).unwrap();
    let two = run_pipeline(&vac, &n_photon_source(2, 0.7).unwrap(), &reference()).unwrap();
    let states = one.output == State::basis(&[1]).unwrap() && two.output == State::basis(&[2]).unwrap();
    let pass = rounds_to(one.net, 7e-2) && rounds_to(two.net, 8e-3) && states;
    verdict(
        pass,
        format!(
            "|0>->|1>: {:.4e} (want 7e-2); |0>->|2>: {:.4e} (want 8e-3)",
            one.net, two.net
        ),
    )
}

fn c6_truncated_maximal() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for (n, quoted) in [(1u32, 1e-2), (2, 2e-4)] {
        let (input, pipe) = truncated_maximal_epr(n, 0.7, 0.49, 0.7, 1e-12).unwrap();
        let out = run_pipeline(&input, &pipe, &reference()).unwrap();
        let amp = Complex::new(1.0 / ((n + 1) as f64).sqrt(), 0.0);
        let want = PureState::superpose((0..=n).map(|k| (Occupation::new(vec![k, k]), amp))).unwrap();
        let d = phase_distance(&out.output, &want).unwrap();
        let ok = rounds_to(out.net, quoted) && d < 1e-10;
        pass &= ok;
        parts.push(format!(
            "N={n}: {:.4e} ~ {} (want {}), state distance {d:.1e}",
            out.net,
            format_one_figure(out.net),
            format_one_figure(quoted)
        ));
    }
    verdict(pass, parts.join("; "))
}

fn c7_swapping() -> Verdict {
    let grid = [0.3, 0.5, 0.7];
    let (mut dp, mut ds) = (0.0f64, 0.0f64);
    for n in 0..=3u32 {
        for m in 0..=n as i64 {
            for &l in &grid {
                for &lp in &grid {
                    let params = SqueezeParams::<f64>::new(l, lp).unwrap();
                    let out = prepare_via_swapping(&params, n, m, 1e-14).unwrap();
                    dp = dp.max((out.probability - preparation_probability(n, &params)).abs());
                    let want = generalized_bell(&GeneralizedBellSpec::from_squeeze(n, m, params).unwrap()).unwrap();
                    ds = ds.max(phase_distance(out.state.as_ref().unwrap(), &want).unwrap());
                }
            }
        }
    }
    verdict(dp < 1e-10 && ds < 1e-10, format!("probability gap {dp:.1e}, state gap {ds:.1e}"))
}

fn random_step(kind: usize, rng: &mut ChaCha8Rng) -> ManipulationStep<f64> {
    let nt = rng.gen_range(0..=3u32);
    let lambda = rng.gen_range(0.05..0.95);
    match kind {
        0 => ManipulationStep::reversal_scaling(lambda, nt),
        1 => ManipulationStep::reversal_derivative(lambda, nt),
        2 => ManipulationStep::number_shift(rng.gen_range(0..=4), nt, None),
        _ => ManipulationStep::scaling(nt, rng.gen_range(0.2..3.0)),
    }
    .unwrap()
}

fn c8_analytic() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let model = reference();
    let mut worst = 0.0f64;
    for kind in 0..4 {
        for _ in 0..200 {
            let step = random_step(kind, &mut rng);
            let input = random_state::<f64, _>(1, step.n_tilde() + 3, &mut rng);
            let epr = step.resource(1e-14).unwrap();
            let sim = teleport(&input, 0, &epr, step.n_tilde(), &model).unwrap().probability;
            let p = model.factor(step.n_tilde()).unwrap();
            let analytic = p * step.analytic_projection(&input.marginal(0).unwrap());
            worst = worst.max((sim - analytic).abs());
        }
    }
    // uniform inputs against the closed forms P_(a) .. P_(d)
    let mut uniform = 0.0f64;
    for kind in 0..4 {
        for _ in 0..20 {
            let step = random_step(kind, &mut rng);
            let nt = step.n_tilde() as usize;
            let input = State::from_real_amplitudes(&vec![1.0; nt + 1]).unwrap().normalize();
            let epr = step.resource(1e-14).unwrap();
            let sim = teleport(&input, 0, &epr, step.n_tilde(), &model).unwrap().probability;
            let p = model.factor(step.n_tilde()).unwrap();
            uniform = uniform.max((sim - step.uniform_probability(p)).abs());
        }
    }
    verdict(
        worst < 1e-10 && uniform < 1e-10,
        format!("800 random inputs: max gap {worst:.1e}; uniform closed forms: max gap {uniform:.1e}"),
    )
}

fn c9_equivalence() -> Verdict {
    let d = reference_n2_detector::<f64>().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut ds, mut dr) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let s = random_state::<f64, _>(3, 4, &mut rng);
        let ideal = ideal_bell_project(&s, (0, 1), 2).unwrap();
        let real = conditional_bell_measure(&s, (0, 1), &d).unwrap();
        ds = ds.max(phase_distance(ideal.state.as_ref().unwrap(), real.state.as_ref().unwrap()).unwrap());
        dr = dr.max((real.probability / ideal.probability - 0.375).abs());
    }
    verdict(
        ds < 1e-10 && dr < 1e-10,
        format!(
            "state gap {ds:.1e}; probability ratio {:.15} (want 0.375, gap {dr:.1e})",
            d.success_probability()
        ),
    )
}

fn c10_composition() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let model = reference();
    let mut aa_gap = 0.0f64;
    for _ in 0..20 {
        let nt = rng.gen_range(1..=3u32);
        let (l, lp) = (rng.gen_range(0.2..0.9), rng.gen_range(0.2..0.9));
        let input = random_state::<f64, _>(1, nt, &mut rng);
        let aa = Pipeline::new()
            .then(ManipulationStep::reversal_scaling(l, nt).unwrap(), 0)
            .then(ManipulationStep::reversal_scaling(lp, nt).unwrap(), 0);
        let d = Pipeline::single(ManipulationStep::scaling(nt, lp / l).unwrap());
        let a = run_pipeline(&input, &aa, &model).unwrap();
        let b = run_pipeline(&input, &d, &model).unwrap();
        aa_gap = aa_gap.max(phase_distance(&a.output, &b.output).unwrap());
    }

    let mut assoc = 0.0f64;
    for _ in 0..20 {
        let steps: Vec<_> = (0..3).map(|_| random_step(rng.gen_range(0..4), &mut rng)).collect();
        let input = random_state::<f64, _>(1, 4, &mut rng);
        let whole = Pipeline::new()
            .then(steps[0].clone(), 0)
            .then(steps[1].clone(), 0)
            .then(steps[2].clone(), 0);
        let head = Pipeline::new().then(steps[0].clone(), 0).then(steps[1].clone(), 0);
        let tail = Pipeline::single(steps[2].clone());
        match (run_pipeline(&input, &whole, &model), run_pipeline(&input, &head, &model)) {
            (Ok(w), Ok(h)) => {
                let t = run_pipeline(&h.output, &tail, &model).unwrap();
                assoc = assoc.max(phase_distance(&w.output, &t.output).unwrap());
                assoc = assoc.max((w.net - h.net * t.net).abs());
            }
            (Err(_), _) => {}
            (Ok(_), Err(e)) => panic!("prefix failed where the whole pipeline succeeded: {e}"),
        }
    }

    let mut extract_ok = true;
    for _ in 0..20 {
        let n = rng.gen_range(0..=3u32);
        let mut input = random_state::<f64, _>(1, 4, &mut rng);
        if rng.gen_bool(0.5) {
            let amps: Vec<Complex<f64>> = (0..=4u32)
                .map(|k| if k == n { Complex::new(0.0, 0.0) } else { input.amplitude_of(&[k]) })
                .collect();
            input = State::from_amplitudes(&amps).unwrap();
        }
        let has_n = input.amplitude_of(&[n]).norm() > 0.0;
        match run_pipeline(&input, &extractor(n, None).unwrap(), &model) {
            Ok(out) => {
                let d = phase_distance(&out.output, &State::basis(&[n]).unwrap()).unwrap();
                extract_ok &= has_n && d < 1e-12;
            }
            Err(fockport_core::Error::ZeroProbability { .. }) => extract_ok &= !has_n,
            Err(_) => extract_ok = false,
        }
    }
    verdict(
        aa_gap < 1e-10 && assoc < 1e-10 && extract_ok,
        format!("(a)o(a) vs (d) gap {aa_gap:.1e}; associativity gap {assoc:.1e}; extractor dichotomy {extract_ok}"),
    )
}

fn c11_optimizer() -> Verdict {
    let one = design(&DesignProblem::new(1, 0).unwrap());
    let two = design(&DesignProblem::new(2, 1).unwrap());
    let mut notes = Vec::new();
    for ancillas in 1..=3 {
        let r = design(&DesignProblem::new(3, ancillas).unwrap());
        let dev = if r.feasible {
            format!(", verify {:.1e}", verify_design(&r.to_detector().unwrap(), 20, 0).unwrap().max_deviation)
        } else {
            String::new()
        };
        notes.push(format!(
            "N~=3/{ancillas} anc: feasible={} |g0|^2={:.4}{dev}",
            r.feasible, r.success_probability
        ));
    }
    let pass = one.feasible
        && one.success_probability >= 0.49
        && one.max_cross_talk < 1e-8
        && two.feasible
        && two.success_probability >= 0.3
        && two.max_cross_talk < 1e-8;
    verdict(
        pass,
        format!(
            "N~=1: |g0|^2={:.4} ct={:.1e}; N~=2/1 anc: |g0|^2={:.4} ct={:.1e}; {}",
            one.success_probability,
            one.max_cross_talk,
            two.success_probability,
            two.max_cross_talk,
            notes.join("; ")
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("N~=2 detector parameters", c1_n2_detector),
        ("50/50 measurement for N~ <= 1", c2_fifty_fifty),
        ("reversal of a qubit", c3_reversal_qubit),
        ("reversal of a qutrit", c4_reversal_qutrit),
        ("N-photon sources", c5_sources),
        ("truncated maximal EPR", c6_truncated_maximal),
        ("swapping preparation", c7_swapping),
        ("analytic vs simulated probabilities", c8_analytic),
        ("detector equivalence", c9_equivalence),
        ("composition laws", c10_composition),
        ("detector optimizer", c11_optimizer),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {name}: {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
