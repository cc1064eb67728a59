use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use tropikam::barrier::{analyze, check_cost_axioms, check_propdec, BarrierData};
use tropikam::ergodic::{
    birkhoff_statistics, empirical_occupation, empirical_pair_frequencies, markov_from_coupling,
    orbit_in_d, sample_by_class, total_variation,
};
use tropikam::ingest::{render_cost, CostFormat};
use tropikam::mather::{
    d1_candidates, d_infinity_filter, generating_family, solve_mather,
    verify_minimizer_characterization,
};
use tropikam::transport::{
    check_duality, check_support, dual_value, factor_through_aubry, solve_primal,
};
use tropikam::weakkam::{
    check_theorem_pairs, complete_pair, lipschitz_seed, pair_from_lipschitz, KamPair,
};
use tropikam::{CostKernel, Tolerances};

use crate::input::{input_error, load, parse_measure, InputInfo};
use crate::{Cli, Command, Failure};

#[derive(Serialize)]
struct Report<'a> {
    report_version: u32,
    command: &'static str,
    input: &'a InputInfo,
    tolerances: Tolerances,
    seed: u64,
    #[serde(flatten)]
    body: Value,
    pass: bool,
}

/// One finished command: its JSON body, a human summary and the verdict.
struct Outcome {
    body: Value,
    summary: String,
    pass: bool,
    csv: Option<String>,
}

fn check_err(e: tropikam::Error) -> Failure {
    Failure::Check(e.to_string())
}

/// Runs the selected command; `Ok(pass)` on completion.
pub fn run(cli: &Cli) -> Result<bool, Failure> {
    let (kernel, info) = load(cli)?;
    if let Command::Ingest = cli.command {
        return ingest(cli, &kernel, &info);
    }
    let tol = cli.tolerances();
    let (norm, bd) = analyze(&kernel, &tol).map_err(check_err)?;
    let (name, outcome) = match cli.command {
        Command::Ingest => unreachable!(),
        Command::Analyze => ("analyze", cmd_analyze(&norm, &bd)?),
        Command::Kam => ("kam", cmd_kam(cli, &norm, &bd)?),
        Command::Transport => ("transport", cmd_transport(cli, &bd)?),
        Command::Mather => ("mather", cmd_mather(&norm, &bd)?),
        Command::Ergodic => ("ergodic", cmd_ergodic(cli, &norm, &bd)?),
    };
    let report = Report {
        report_version: 1,
        command: name,
        input: &info,
        tolerances: tol,
        seed: cli.seed,
        body: outcome.body,
        pass: outcome.pass,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Some(path) = &cli.out {
        write(path, &(json.clone() + "\n"))?;
    }
    if let (Some(path), Some(csv)) = (&cli.emit_csv, &outcome.csv) {
        write(path, csv)?;
    }
    if cli.json {
        println!("{json}");
    } else {
        println!(
            "{name}: {} ({} points, sha256 {})",
            info.source,
            info.points,
            &info.sha256[..16]
        );
        print!("{}", outcome.summary);
        println!("status: {}", if outcome.pass { "PASS" } else { "FAIL" });
    }
    Ok(outcome.pass)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn ingest(cli: &Cli, kernel: &CostKernel, info: &InputInfo) -> Result<bool, Failure> {
    let format = cli
        .format
        .or_else(|| cli.out.as_deref().map(CostFormat::from_path))
        .unwrap_or(CostFormat::Json);
    let text = render_cost(kernel, format).map_err(input_error)?;
    match &cli.out {
        Some(path) => {
            write(path, &text)?;
            println!(
                "ingest: {} ({} points, sha256 {}) -> {}",
                info.source,
                info.points,
                info.sha256,
                path.display()
            );
        }
        None => print!("{text}"),
    }
    Ok(true)
}

fn point_label(kernel: &CostKernel, x: usize) -> (String, String) {
    let coord = kernel
        .coords()
        .map(|c| {
            c[x].iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .unwrap_or_else(|| x.to_string());
    (kernel.labels()[x].clone(), coord)
}

fn cmd_analyze(norm: &CostKernel, bd: &BarrierData) -> Result<Outcome, Failure> {
    let axioms = check_cost_axioms(bd);
    let propdec: Vec<_> = [1, 2, bd.size().max(3)]
        .into_iter()
        .map(|n| check_propdec(norm, bd, n).map_err(check_err))
        .collect::<Result<_, _>>()?;
    let pass = axioms.pass && propdec.iter().all(|p| p.pass);
    let body = json!({
        "l": bd.l,
        "c_bound": bd.oscillation,
        "aubry": bd.aubry,
        "d_edges": bd.d_edges,
        "barrier": bd.c.to_rows(),
        "axioms": axioms,
        "propdec": propdec,
    });
    let mut summary = String::new();
    let _ = writeln!(summary, "critical value l = {}", bd.l);
    let _ = writeln!(summary, "oscillation bound C = {}", bd.oscillation);
    let _ = writeln!(summary, "Aubry set: {:?}", bd.aubry);
    let _ = writeln!(summary, "D: {:?}", bd.d_edges);
    let _ = writeln!(
        summary,
        "triangle violation {:.3e}, factorization violation {:.3e}",
        axioms.triangle_violation, axioms.factorization_violation
    );
    let mut csv = String::from("index,label,coord,aubry,barrier_from_first_aubry\n");
    let a0 = bd.aubry[0];
    for x in 0..bd.size() {
        let (label, coord) = point_label(norm, x);
        let _ = writeln!(
            csv,
            "{x},{label},{coord},{},{}",
            bd.is_aubry(x) as u8,
            bd.c[(a0, x)]
        );
    }
    Ok(Outcome {
        body,
        summary,
        pass,
        csv: Some(csv),
    })
}

#[derive(Serialize)]
struct PairSummary {
    seed: Vec<(usize, f64)>,
    admissibility_residual: f64,
    t_plus_residual: f64,
    t_minus_residual: f64,
    aubry_gap: f64,
    completion_spread: f64,
    pass: bool,
}

fn cmd_kam(cli: &Cli, norm: &CostKernel, bd: &BarrierData) -> Result<Outcome, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let scale = bd.c.max_entry().abs().max(1.0);
    let mut anchor_sets: Vec<Vec<(usize, f64)>> =
        bd.aubry.iter().map(|&a| vec![(a, 0.0)]).collect();
    for _ in 0..cli.pairs {
        let k = rng.gen_range(1..=bd.aubry.len().min(4));
        anchor_sets.push(
            (0..k)
                .map(|_| {
                    (
                        bd.aubry[rng.gen_range(0..bd.aubry.len())],
                        rng.gen_range(-scale..=scale),
                    )
                })
                .collect(),
        );
    }
    let mut rows = Vec::new();
    let mut first: Option<KamPair> = None;
    for anchors in anchor_sets {
        let seed = lipschitz_seed(bd, &anchors).map_err(check_err)?;
        let pair = pair_from_lipschitz(bd, &seed).map_err(check_err)?;
        let th = check_theorem_pairs(norm, bd, &pair).map_err(check_err)?;
        let completed = complete_pair(norm, bd, &pair.phi1).map_err(check_err)?;
        let spread = completed.phi0.sup_distance(&pair.phi0);
        let adm = &th.admissibility;
        rows.push(PairSummary {
            seed: anchors,
            admissibility_residual: adm.phi0_residual.max(adm.phi1_residual),
            t_plus_residual: th.t_plus_residual,
            t_minus_residual: th.t_minus_residual,
            aubry_gap: th.aubry_gap,
            completion_spread: spread,
            pass: adm.pass && th.conditions_hold && th.equivalence_holds && spread <= bd.tol.num,
        });
        first.get_or_insert(pair);
    }
    let pass = rows.iter().all(|r| r.pass);
    let worst = |f: fn(&PairSummary) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let mut summary = String::new();
    let _ = writeln!(summary, "pairs checked: {}", rows.len());
    let _ = writeln!(
        summary,
        "max admissibility residual {:.3e}",
        worst(|r| r.admissibility_residual)
    );
    let _ = writeln!(
        summary,
        "max fixed-point residuals T+ {:.3e}, T- {:.3e}",
        worst(|r| r.t_plus_residual),
        worst(|r| r.t_minus_residual)
    );
    let first = first.expect("at least one Aubry point");
    let mut csv = String::from("index,label,coord,phi0,phi1\n");
    for x in 0..bd.size() {
        let (label, coord) = point_label(norm, x);
        let _ = writeln!(
            csv,
            "{x},{label},{coord},{},{}",
            first.phi0[x], first.phi1[x]
        );
    }
    let body = json!({ "pairs": rows, "first_pair": first });
    Ok(Outcome {
        body,
        summary,
        pass,
        csv: Some(csv),
    })
}

fn cmd_transport(cli: &Cli, bd: &BarrierData) -> Result<Outcome, Failure> {
    let n = bd.size();
    let mu0 = parse_measure(cli.mu0.as_deref().unwrap_or("uniform"), n)?;
    let mu1 = parse_measure(cli.mu1.as_deref().unwrap_or("uniform"), n)?;
    let tol = bd.tol;
    let (plan, primal) = solve_primal(&bd.c, &mu0, &mu1, tol.num).map_err(check_err)?;
    let (pair, dual) = dual_value(bd, &mu0, &mu1).map_err(check_err)?;
    let duality = check_duality(primal, dual, tol.dual);
    let support = check_support(&plan, &pair, bd);
    let factor = factor_through_aubry(bd, &mu0, &mu1).map_err(check_err)?;
    let pass = duality.pass && support.pass && factor.pass;
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "primal {primal}, dual {dual}, gap {:.3e}",
        duality.gap
    );
    let _ = writeln!(summary, "support violation {:.3e}", support.max_violation);
    let _ = writeln!(
        summary,
        "factorization {} = {} + {} (gap {:.3e})",
        factor.direct, factor.first_leg, factor.second_leg, factor.gap
    );
    let body = json!({
        "mu0": mu0,
        "mu1": mu1,
        "plan": plan.eta.to_rows(),
        "pair": pair,
        "duality": duality,
        "support": support,
        "factorization": {
            "mu": factor.mu,
            "direct": factor.direct,
            "first_leg": factor.first_leg,
            "second_leg": factor.second_leg,
            "gap": factor.gap,
            "pass": factor.pass,
        },
    });
    Ok(Outcome {
        body,
        summary,
        pass,
        csv: None,
    })
}

fn cmd_mather(norm: &CostKernel, bd: &BarrierData) -> Result<Outcome, Failure> {
    let (eta, value) = solve_mather(norm, bd.tol.dual).map_err(check_err)?;
    let report = verify_minimizer_characterization(norm, bd, &eta);
    let d1 = d1_candidates(norm, bd, &generating_family(bd));
    let d_inf = d_infinity_filter(bd, &d1);
    let filter_matches = d_inf == bd.d_edges;
    let pass = report.pass && report.supported_on_d && filter_matches;
    let mut summary = String::new();
    let _ = writeln!(summary, "minimal stationary action {value}");
    let _ = writeln!(summary, "support: {:?}", eta.support(bd.tol.mass));
    let _ = writeln!(
        summary,
        "identity slack {:.3e}, mass off D {:.3e}",
        report.max_identity_slack, report.off_d_mass
    );
    let _ = writeln!(summary, "filtered candidates match D: {filter_matches}");
    let mut csv = String::from("index,label,coord,mu\n");
    for (x, w) in eta.common_marginal.weights().iter().enumerate() {
        let (label, coord) = point_label(norm, x);
        let _ = writeln!(csv, "{x},{label},{coord},{w}");
    }
    let body = json!({
        "value": value,
        "coupling": eta.eta.to_rows(),
        "marginal": eta.common_marginal,
        "characterization": report,
        "d1_candidates": d1,
        "d_infinity": d_inf,
        "filter_matches_d": filter_matches,
    });
    Ok(Outcome {
        body,
        summary,
        pass,
        csv: Some(csv),
    })
}

fn cmd_ergodic(cli: &Cli, norm: &CostKernel, bd: &BarrierData) -> Result<Outcome, Failure> {
    if cli.orbit_length < 2 {
        return Err(Failure::Input("--orbit-length must be at least 2".into()));
    }
    let n = norm.size();
    let (eta, _) = solve_mather(norm, bd.tol.dual).map_err(check_err)?;
    let mr = markov_from_coupling(&eta, bd.tol.mass);
    let orbits = sample_by_class(&mr, cli.orbit_length, cli.seed).map_err(check_err)?;
    let stats = birkhoff_statistics(&orbits, norm).map_err(check_err)?;
    let allowed = stats.tolerance(1e-2);
    let freq = empirical_pair_frequencies(&orbits, n);
    let tv = total_variation(freq.as_slice(), eta.eta.as_slice());
    let occupation = empirical_occupation(&orbits, n);
    let deterministic = orbit_in_d(bd, bd.aubry[0], 16).map_err(check_err)?;
    let pass = stats.mean.abs() <= allowed && tv <= 5e-2;
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "Birkhoff average {:.3e} (sigma {:.3e}, {} steps, tolerance {:.3e})",
        stats.mean, stats.sigma, stats.steps, allowed
    );
    let _ = writeln!(summary, "recurrent classes: {:?}", mr.recurrent_classes());
    let _ = writeln!(summary, "pair-frequency total variation {tv:.3e}");
    let mut csv = String::from("index,label,coord,mu,occupation\n");
    for (x, occ) in occupation.iter().enumerate() {
        let (label, coord) = point_label(norm, x);
        let _ = writeln!(
            csv,
            "{x},{label},{coord},{},{occ}",
            eta.common_marginal.weights()[x]
        );
    }
    let body = json!({
        "stationary": mr.stationary,
        "transition": mr.kernel.to_rows(),
        "recurrent_classes": mr.recurrent_classes(),
        "birkhoff": stats,
        "tolerance": allowed,
        "pair_frequency_tv": tv,
        "occupation": occupation,
        "orbit_in_d": deterministic.path,
    });
    Ok(Outcome {
        body,
        summary,
        pass,
        csv: Some(csv),
    })
}
