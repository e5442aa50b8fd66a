use crate::commands::{read_json, CmdResult};
use crate::report::{Check, CommandResult, Outcome};
use crate::AppKind;
use fkg_core::applications::{
    bernstein_check, exchangeable_bound_check, kleitman_check, logconvex_check, psd_measure_check,
    ranking_monotonicity, triangle_hadamard_check, AppCheck, FamilyOfSubsets, FloatOutcome, PsdKind,
    RationalMatrix, Relation,
};
use fkg_core::lattice::{LatticeFunction, LatticeMeasure};
use fkg_core::rational::{format_rational, serde_rational};
use fkg_core::Rational;
use num_traits::Signed;
use serde::Deserialize;
use std::path::Path;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BernsteinInput {
    n: usize,
    #[serde(with = "serde_rational")]
    x: Rational,
    #[serde(with = "serde_rational::vec")]
    f1: Vec<Rational>,
    #[serde(with = "serde_rational::vec")]
    f2: Vec<Rational>,
    #[serde(with = "serde_rational::vec")]
    f3: Vec<Rational>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LogConvexInput {
    #[serde(with = "serde_rational::vec")]
    a: Vec<Rational>,
    #[serde(with = "serde_rational::vec")]
    alpha: Vec<Rational>,
    #[serde(with = "serde_rational::vec")]
    beta: Vec<Rational>,
    #[serde(with = "serde_rational::vec")]
    gamma: Vec<Rational>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KleitmanInput {
    u1: FamilyOfSubsets,
    u2: FamilyOfSubsets,
    l: FamilyOfSubsets,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixInput {
    r: RationalMatrix,
    f1: RationalMatrix,
    f2: RationalMatrix,
    f3: RationalMatrix,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PsdInput {
    m: RationalMatrix,
    #[serde(with = "serde_rational")]
    t: Rational,
    kind: PsdKind,
    #[serde(default)]
    functions: Option<Vec<LatticeFunction>>,
    #[serde(default)]
    eigen: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RankingInput {
    m: usize,
    n: usize,
    #[serde(default)]
    theta: Vec<Relation>,
    #[serde(default)]
    theta2: Vec<Relation>,
    #[serde(default)]
    events: Option<[Vec<Relation>; 4]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExchangeableInput {
    measure: LatticeMeasure,
    a: usize,
    m: usize,
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn app_result(c: AppCheck, label: &str, tag: &str) -> CmdResult {
    let detail = format!(
        "value {}, direct summation {}",
        format_rational(&c.value),
        format_rational(&c.oracle)
    );
    Ok(CommandResult {
        checks: vec![Check::new(label, tag, Outcome::from_bool(c.holds), detail)],
        payload: serde_json::to_value(&c).map_err(err)?,
        text: None,
    })
}

pub fn run(which: AppKind, input: &Path) -> CmdResult {
    match which {
        AppKind::Bernstein => {
            let i: BernsteinInput = read_json(input)?;
            let c = bernstein_check(i.n, &i.x, [&i.f1, &i.f2, &i.f3]).map_err(err)?;
            app_result(c, "Bernstein third-order expression ≥ 0", "binomial measure")
        }
        AppKind::Logconvex => {
            let i: LogConvexInput = read_json(input)?;
            let c = logconvex_check(&i.a, &i.alpha, &i.beta, &i.gamma).map_err(err)?;
            app_result(c, "log-convex third-order expression ≥ 0", "Tchebycheff type")
        }
        AppKind::Kleitman => {
            let i: KleitmanInput = read_json(input)?;
            let k = kleitman_check(&i.u1, &i.u2, &i.l).map_err(err)?;
            Ok(CommandResult {
                checks: vec![Check::new(
                    "generalized Kleitman expression ≥ 0",
                    "up-sets and down-sets",
                    Outcome::from_bool(k.holds),
                    format!("value {}", k.value),
                )],
                payload: serde_json::to_value(&k).map_err(err)?,
                text: None,
            })
        }
        AppKind::Matrix => {
            let i: MatrixInput = read_json(input)?;
            let c = triangle_hadamard_check(&i.r, [&i.f1, &i.f2, &i.f3]).map_err(err)?;
            app_result(c, "Hadamard third-order expression ≥ 0", "triangle kernel")
        }
        AppKind::Psd => psd(read_json(input)?),
        AppKind::Ranking => {
            let i: RankingInput = read_json(input)?;
            let r = ranking_monotonicity(i.m, i.n, &i.theta, &i.theta2, i.events.as_ref()).map_err(err)?;
            let mut checks = vec![Check::new(
                "P(a1 < b1 | Θ ∪ Θ'') ≥ P(a1 < b1 | Θ)",
                "team rankings",
                Outcome::from_bool(r.holds),
                format!("{} then {}", format_rational(&r.p_before), format_rational(&r.p_after)),
            )];
            if let (Some(v), Some(holds)) = (&r.prop_value, r.prop_holds) {
                checks.push(Check::new(
                    "four-event expression ≤ 0",
                    "team rankings",
                    Outcome::from_bool(holds),
                    format!("value {}", format_rational(v)),
                ));
            }
            Ok(CommandResult {
                checks,
                payload: serde_json::to_value(&r).map_err(err)?,
                text: None,
            })
        }
        AppKind::Exchangeable => {
            let i: ExchangeableInput = read_json(input)?;
            let r = exchangeable_bound_check(&i.measure, i.a, i.m).map_err(err)?;
            let mut res = app_result(r.check.clone(), "exchangeable bound ≤ 0", "discrete exchangeable analog")?;
            res.payload = serde_json::to_value(&r).map_err(err)?;
            Ok(res)
        }
    }
}

fn float_outcome(o: FloatOutcome) -> Outcome {
    match o {
        FloatOutcome::Pass => Outcome::Pass,
        FloatOutcome::Violation => Outcome::Violation,
        FloatOutcome::Inconclusive => Outcome::Inconclusive,
    }
}

fn psd(i: PsdInput) -> CmdResult {
    let rep = psd_measure_check(&i.m, &i.t, i.kind, i.functions.as_deref(), i.eigen).map_err(err)?;
    if !rep.mtp2 {
        let pair = rep
            .mtp2_violation
            .as_ref()
            .map_or(String::new(), |(p, q)| format!(" at {p:?}, {q:?}"));
        return Err(format!(
            "the {} measure with t = {} is not MTP2{pair}",
            format!("{:?}", i.kind).to_lowercase(),
            format_rational(&i.t)
        ));
    }
    let mut checks = vec![Check::new(
        "measure is MTP2",
        "matrix measure",
        if rep.mtp2_inconclusive_pairs > 0 {
            Outcome::Inconclusive
        } else {
            Outcome::Pass
        },
        format!("{:?} backend, {} pairs within tolerance", rep.backend, rep.mtp2_inconclusive_pairs).to_lowercase(),
    )];
    if let Some(k) = &rep.kappa {
        checks.push(Check::new(
            "κ'_3 ≥ 0",
            "third-order FKG",
            Outcome::from_bool(!k.is_negative()),
            format!("value {}", format_rational(k)),
        ));
    }
    if let (Some(k), Some(o)) = (rep.kappa_float, rep.kappa_float_outcome) {
        checks.push(Check::new(
            "κ'_3 ≥ 0",
            "third-order FKG, floating",
            float_outcome(o),
            format!("value {k:e}"),
        ));
    }
    if let Some(e) = &rep.eigen {
        checks.push(Check::new(
            "Cov(λmin, 1/λmax) ≥ 0",
            "FKG on decreasing eigenvalue functions",
            float_outcome(e.outcome),
            format!(
                "difference {:e} at scale {:e}; trace increasing {}, λmin decreasing {}, 1/λmax decreasing {}",
                e.difference, e.scale, e.trace_increasing, e.lambda_min_decreasing, e.inv_lambda_max_decreasing
            ),
        ));
    }
    Ok(CommandResult {
        checks,
        payload: serde_json::to_value(&rep).map_err(err)?,
        text: None,
    })
}

