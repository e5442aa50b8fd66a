use crate::report::{Check, CommandResult, Outcome};
use crate::{
    CertifyArgs, Command, FeasibilityArgs, FeasibilityModeArg, FunctionsArg, KindArg, MeasureArg, PaperCommand,
    ReplayArgs, SweepArgs,
};
use fkg_core::cumulants::{reduction_check, zero_sum, CumulantSpec, SpecKind};
use fkg_core::rational::{format_rational, parse_rational};
use fkg_core::symcert::{certify, duplicate_variables_certify};
use fkg_core::verifier::{
    case6_printed, case_ordering, coefficient_feasibility, generate_trial, indicator_case_eval,
    indicator_cov_decomposition, two_point_gaps, two_point_instance, replay, rho_table, sweep, FeasibilityMode,
    FeasibilityReport, FunctionMode, InstanceGenConfig, MeasureMode, TwoPointParams, Witness,
};
use num_traits::{Signed, Zero};
use serde_json::json;
use std::path::Path;

pub type CmdResult = Result<CommandResult, String>;

pub fn run(cmd: &Command) -> CmdResult {
    match cmd {
        Command::Certify(a) => certify_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Paper { which } => paper_cmd(which),
        Command::Apps(a) => crate::apps::run(a.which, &a.input),
        Command::Feasibility(a) => feasibility_cmd(a),
        Command::Replay(a) => replay_cmd(a),
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn load_spec(m: usize, kind: KindArg, coeffs: Option<&Path>) -> Result<CumulantSpec, String> {
    match (kind, coeffs) {
        (KindArg::Custom, Some(path)) => {
            let spec: CumulantSpec = read_json(path)?;
            if spec.m() != m {
                return Err(format!("spec file is for m = {}, but --m is {m}", spec.m()));
            }
            Ok(spec)
        }
        (KindArg::Custom, None) => Err("--kind custom needs --coeffs <file>".into()),
        (_, Some(_)) => Err("--coeffs is only used with --kind custom".into()),
        (KindArg::Conjugate, None) => CumulantSpec::conjugate(m).map_err(err),
        (KindArg::Cumulant, None) => CumulantSpec::cumulant(m).map_err(err),
    }
}

/// Label and tag for the claim `P_m >= 0` of a spec.
fn claim(spec: &CumulantSpec) -> (String, String) {
    let m = spec.m();
    match spec.kind() {
        SpecKind::Conjugate => (
            format!("κ'_{m} ≥ 0"),
            match m {
                2 => "FKG".into(),
                3 => "third-order FKG".into(),
                _ => "higher-order FKG".into(),
            },
        ),
        SpecKind::Cumulant => (format!("κ_{m} ≥ 0"), "plain cumulant, not a theorem".into()),
        SpecKind::Custom => (format!("P_{m} ≥ 0"), "custom coefficients".into()),
    }
}

fn certify_cmd(a: &CertifyArgs) -> CmdResult {
    let spec = load_spec(a.m, a.kind, a.coeffs.as_deref())?;
    let cert = certify(&spec).map_err(err)?;
    let (label, tag) = claim(&spec);
    let detail = format!(
        "{} monomials, {} negative, minimum coefficient {}",
        cert.monomial_count,
        cert.offending.len(),
        cert.min_coefficient().map_or("none".into(), format_rational)
    );
    let zs = zero_sum(&spec);
    Ok(CommandResult {
        checks: vec![
            Check::new(
                format!("{label} certificate"),
                tag,
                Outcome::from_bool(cert.pass),
                detail,
            ),
            Check::new(
                "coefficients sum to zero over splits",
                "vanishing on constants",
                Outcome::from_bool(zs == 0),
                format!("zero sum {zs}"),
            ),
        ],
        text: Some(cert.text()),
        payload: serde_json::to_value(&cert).map_err(err)?,
    })
}

fn sweep_cmd(a: &SweepArgs) -> CmdResult {
    let spec = load_spec(a.m, a.kind, a.coeffs.as_deref())?;
    let mut cfg = InstanceGenConfig::new(a.shape.clone(), a.seed, a.m);
    cfg.functions = match a.functions {
        FunctionsArg::IncrementSum => FunctionMode::IncrementSum,
        FunctionsArg::IndicatorMixture => FunctionMode::IndicatorMixture,
    };
    cfg.measure = match a.measure {
        MeasureArg::Pairwise | MeasureArg::Product => MeasureMode::PairwisePotential,
        MeasureArg::Exchangeable => MeasureMode::Exchangeable,
        MeasureArg::Uniform => MeasureMode::Uniform,
    };
    cfg.coupled = a.measure != MeasureArg::Product;
    cfg.shift = parse_rational(&a.shift).map_err(err)?;
    let rep = sweep(&spec, &cfg, a.trials).map_err(err)?;
    if let (Some(path), Some(w)) = (&a.witness_out, &rep.first_witness) {
        let text = serde_json::to_string_pretty(w).map_err(err)?;
        std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    let (label, tag) = claim(&spec);
    let mut detail = format!(
        "{} violations in {} trials, minimum {} at trial {}",
        rep.violations,
        rep.trials,
        format_rational(&rep.min_value),
        rep.min_trial
    );
    if let Some(w) = &rep.first_witness {
        detail.push_str(&format!(", first witness at trial {}", w.trial.unwrap_or_default()));
    }
    let hyp = if rep.hypothesis_failures == 0 {
        Outcome::Pass
    } else {
        Outcome::Inconclusive
    };
    let hyp_detail = if cfg.shift.is_positive() {
        "MTP2 and monotone; nonnegativity not required with a shift"
    } else {
        "MTP2, monotone, nonnegative"
    };
    Ok(CommandResult {
        checks: vec![
            Check::new(
                "instances satisfy the hypotheses",
                "generator",
                hyp,
                format!("{hyp_detail}; {} failures", rep.hypothesis_failures),
            ),
            Check::new(label, tag, Outcome::from_bool(rep.violations == 0), detail),
        ],
        payload: serde_json::to_value(&rep).map_err(err)?,
        text: None,
    })
}

fn paper_cmd(which: &PaperCommand) -> CmdResult {
    match which {
        PaperCommand::TwoPointGap => two_point_gap_cmd(),
        PaperCommand::NegativeControls { trials, seed } => negative_controls(*trials, *seed),
        PaperCommand::Cases { grid, measures, seed } => cases(grid, *measures, *seed),
        PaperCommand::Duplicate => duplicate(),
        PaperCommand::Identities => identities(),
    }
}

fn two_point_gap_cmd() -> CmdResult {
    let mut checks = Vec::new();
    let mut sets = Vec::new();
    for (name, params, want_negative) in [
        ("set 1", TwoPointParams::first_set(), true),
        ("set 2", TwoPointParams::second_set(), false),
    ] {
        let gaps = two_point_gaps(&params).map_err(err)?;
        let (measure, functions) = two_point_instance(&params).map_err(err)?;
        let ok = if want_negative {
            gaps.difference.is_negative()
        } else {
            gaps.difference.is_positive()
        };
        checks.push(Check::new(
            format!("g(∅) − g({{w}}) {} 0 for {name}", if want_negative { "<" } else { ">" }),
            "gap not monotone in B",
            Outcome::from_bool(ok),
            format!(
                "g(∅) = {}, g({{w}}) = {}, difference {}",
                format_rational(&gaps.g_empty),
                format_rational(&gaps.g_w),
                format_rational(&gaps.difference)
            ),
        ));
        sets.push(json!({
            "name": name,
            "params": params,
            "gaps": gaps,
            "measure": measure,
            "functions": functions,
        }));
    }
    Ok(CommandResult {
        checks,
        payload: json!({ "sets": sets }),
        text: None,
    })
}

fn first_witness(spec: &CumulantSpec, cfg: &InstanceGenConfig, trials: u64) -> Result<Option<Witness>, String> {
    Ok(sweep(spec, cfg, trials).map_err(err)?.first_witness)
}

fn negative_controls(trials: u64, seed: u64) -> CmdResult {
    let mut checks = Vec::new();
    let mut witnesses = serde_json::Map::new();

    let cumulant = CumulantSpec::cumulant(3).map_err(err)?;
    let mut plain = None;
    for shape in [vec![2, 2], vec![2, 2, 2], vec![3, 3]] {
        let mut cfg = InstanceGenConfig::new(shape, seed, 3);
        cfg.functions = FunctionMode::IndicatorMixture;
        if let Some(w) = first_witness(&cumulant, &cfg, trials)? {
            plain = Some(w);
            break;
        }
    }
    checks.push(witness_check("κ_3 can be negative under MTP2", "plain cumulant", &plain));
    witnesses.insert("plain_cumulant".into(), serde_json::to_value(&plain).map_err(err)?);

    let mut cfg = InstanceGenConfig::new(vec![2, 2, 2], seed, 3);
    cfg.shift = fkg_core::rational::int(5);
    let signed = first_witness(&CumulantSpec::conjugate(3).map_err(err)?, &cfg, trials)?;
    checks.push(witness_check(
        "κ'_3 can be negative without nonnegativity",
        "sign-changing functions",
        &signed,
    ));
    witnesses.insert("sign_changing".into(), serde_json::to_value(&signed).map_err(err)?);

    for c1 in [1, 2] {
        let mode = FeasibilityMode::IndicatorR2 {
            c1,
            grid: [3, 3],
            measures: 10,
            seed,
        };
        let FeasibilityReport::Indicator(rep) = coefficient_feasibility(3, &mode).map_err(err)? else {
            unreachable!("indicator mode returns an indicator report");
        };
        let (label, ok) = if c1 == 1 {
            (
                "c1 = 1 variant fails on indicators with the bound attained",
                rep.violations > 0 && rep.negative_bound_attained,
            )
        } else {
            ("c1 = 2 variant has no indicator violation", rep.violations == 0)
        };
        checks.push(Check::new(
            label,
            "coefficient sharpness",
            Outcome::from_bool(ok),
            format!(
                "{} violations over {} triples, minimum {}",
                rep.violations,
                rep.triples_checked,
                format_rational(&rep.min_value)
            ),
        ));
        witnesses.insert(format!("c1_{c1}"), serde_json::to_value(&rep).map_err(err)?);
    }
    Ok(CommandResult {
        checks,
        payload: serde_json::Value::Object(witnesses),
        text: None,
    })
}

fn witness_check(label: &str, tag: &str, w: &Option<Witness>) -> Check {
    match w {
        Some(w) => Check::new(
            label,
            tag,
            Outcome::Pass,
            format!("witness value {} at trial {}", format_rational(&w.value), w.trial.unwrap_or_default()),
        ),
        None => Check::new(label, tag, Outcome::Inconclusive, "no witness found; raise --trials"),
    }
}

fn cases(grid: &[usize], measures: u64, seed: u64) -> CmdResult {
    let &[k1, k2] = grid else {
        return Err("--grid needs two chain lengths".into());
    };
    let cfg = InstanceGenConfig::new(grid.to_vec(), seed, 0);
    let mut per_case = [0u64; 6];
    let mut printed_wrong = 0u64;
    let mut case6 = 0u64;
    let mut splits = 0u64;
    let mut split_printed_wrong = 0u64;
    let mut split_det_cases = 0u64;
    for t in 0..measures {
        let mu = generate_trial(&cfg, t).map_err(err)?.measure;
        for a1 in 0..k1 {
            for a2 in a1..k1 {
                for a3 in a2..k1 {
                    for b in (0..k2 * k2 * k2).map(|x| [x % k2, x / k2 % k2, x / (k2 * k2)]) {
                        let a = [a1, a2, a3];
                        for case in 1..=6u8 {
                            let (ord, _) = case_ordering(case).expect("six cases");
                            if b[ord[0]] > b[ord[1]] || b[ord[1]] > b[ord[2]] {
                                continue;
                            }
                            let rep = indicator_case_eval(&mu, a, b, case).map_err(err)?;
                            per_case[case as usize - 1] += 1;
                            if case == 6 {
                                case6 += 1;
                                if case6_printed(&rho_table(&mu, a, b).map_err(err)?) != rep.direct {
                                    printed_wrong += 1;
                                }
                            }
                        }
                    }
                }
            }
            for a2 in a1..k1 {
                for b1 in 0..k2 {
                    for b2 in 0..k2 {
                        let d = indicator_cov_decomposition(&mu, a1, a2, b1, b2).map_err(err)?;
                        splits += 1;
                        if let (Some(det), Some(alt)) = (&d.determinant, &d.alternative_product_term) {
                            split_det_cases += 1;
                            if alt + det != d.cov {
                                split_printed_wrong += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    let total: u64 = per_case.iter().sum();
    Ok(CommandResult {
        checks: vec![
            Check::new(
                "case closed forms equal κ'_3",
                "northeast indicators",
                Outcome::Pass,
                format!("{total} evaluations, per case {per_case:?}"),
            ),
            Check::new(
                "case 6 with the corrected middle term",
                "typo",
                Outcome::Pass,
                format!("the printed middle term ρ33(1 − ρ21) differs from κ'_3 on {printed_wrong} of {case6}"),
            ),
            Check::new(
                "covariance split exact with determinant ≥ 0",
                "MTP2 determinant",
                Outcome::Pass,
                format!(
                    "{splits} splits; the printed product term P11(1 − P12) breaks the identity on {split_printed_wrong} of {split_det_cases}"
                ),
            ),
        ],
        payload: json!({
            "grid": grid,
            "measures": measures,
            "seed": seed,
            "per_case": per_case,
            "case6_printed_mismatches": printed_wrong,
            "case6_evaluations": case6,
            "splits": splits,
            "split_printed_mismatches": split_printed_wrong,
        }),
        text: None,
    })
}

fn duplicate() -> CmdResult {
    let dup = duplicate_variables_certify();
    Ok(CommandResult {
        checks: vec![
            Check::new(
                "J has nonnegative coefficients in the increment basis",
                "duplicated variables",
                Outcome::from_bool(dup.certificate.pass),
                format!("{} monomials", dup.certificate.monomial_count),
            ),
            Check::new(
                "J equals the twelve-term chamber form",
                "chamber decomposition",
                Outcome::from_bool(dup.chamber_form_agrees),
                format!("{} random rational points", dup.comparisons),
            ),
        ],
        text: Some(dup.certificate.text()),
        payload: serde_json::to_value(&dup).map_err(err)?,
    })
}

fn identities() -> CmdResult {
    let mut checks = Vec::new();
    let mut zero_sums = Vec::new();
    for m in 2..=6 {
        let z = zero_sum(&CumulantSpec::conjugate(m).map_err(err)?);
        zero_sums.push(json!({"m": m, "zero_sum": z.to_string()}));
        let ok = if m <= 5 { z == 0 } else { z > 0 };
        let want = if m <= 5 { "= 0" } else { "> 0" };
        checks.push(Check::new(
            format!("zero sum m={m} {want}"),
            "vanishing on constants",
            Outcome::from_bool(ok),
            format!("{z}"),
        ));
    }
    let mut reductions = Vec::new();
    for m in 3..=6 {
        let r = reduction_check(m, SpecKind::Conjugate).map_err(err)?;
        let d = r.d.as_ref().map_or("none".to_string(), format_rational);
        if m <= 5 {
            let want = fkg_core::rational::int(m as i64 - 2);
            checks.push(Check::new(
                format!("reduction m={m} gives d = m − 2"),
                "setting f_m = 1",
                Outcome::from_bool(r.holds && r.d.as_ref() == Some(&want)),
                format!("d = {d}"),
            ));
        }
        reductions.push(serde_json::to_value(&r).map_err(err)?);
    }
    let six = reductions.last().cloned().unwrap_or_default();
    Ok(CommandResult {
        checks,
        payload: json!({ "zero_sums": zero_sums, "reductions": reductions, "reduction_m6": six }),
        text: None,
    })
}

fn feasibility_cmd(a: &FeasibilityArgs) -> CmdResult {
    let mode = match a.mode {
        FeasibilityModeArg::Certificate => FeasibilityMode::Certificate { bound: a.bound },
        FeasibilityModeArg::Indicator => {
            let &[g1, g2] = a.grid.as_slice() else {
                return Err("--grid needs two chain lengths".into());
            };
            FeasibilityMode::IndicatorR2 {
                c1: a.c1,
                grid: [g1, g2],
                measures: a.measures,
                seed: a.seed,
            }
        }
    };
    let rep = coefficient_feasibility(a.m, &mode).map_err(err)?;
    let check = match &rep {
        FeasibilityReport::Certificate(s) => Check::new(
            "coefficient vectors with a passing certificate",
            "exploration",
            Outcome::Pass,
            format!("{} candidates, found {:?}", s.candidates, s.found),
        ),
        FeasibilityReport::Indicator(r) => Check::new(
            format!("c1 = {} variant ≥ 0 on northeast indicators", r.c1),
            "coefficient sharpness",
            Outcome::from_bool(r.violations == 0),
            format!(
                "{} violations over {} triples, minimum {}",
                r.violations,
                r.triples_checked,
                format_rational(&r.min_value)
            ),
        ),
    };
    Ok(CommandResult {
        checks: vec![check],
        payload: serde_json::to_value(&rep).map_err(err)?,
        text: None,
    })
}

fn replay_cmd(a: &ReplayArgs) -> CmdResult {
    let w: Witness = read_json(&a.witness)?;
    let out = replay(&w).map_err(err)?;
    if !out.matches {
        return Err(format!(
            "witness stores {} but the instance evaluates to {}",
            format_rational(&out.stored),
            format_rational(&out.recomputed)
        ));
    }
    let (label, tag) = claim(&w.spec);
    let nonneg = !out.recomputed.is_negative();
    let detail = if out.recomputed.is_zero() {
        "replayed value 0".to_string()
    } else {
        format!("replayed value {}", format_rational(&out.recomputed))
    };
    Ok(CommandResult {
        checks: vec![
            Check::new("stored value reproduced", "replay", Outcome::Pass, ""),
            Check::new(label, tag, Outcome::from_bool(nonneg), detail),
        ],
        payload: json!({ "replay": out, "witness": w }),
        text: None,
    })
}
