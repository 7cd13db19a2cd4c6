//! Built-in normal-form checks behind `iode validate`. Every check is
//! deterministic (no randomness, ordered iteration), so two runs emit
//! byte-identical JSON.

use iode_core::clairaut::{
    classify_family, dara_condition, is_clairaut_type, is_reduced, ClairautKind, GeneratingFamily,
};
use iode_core::classify::{
    classify_equilibrium, classify_implicit_point, ClassifyConfig, SingularKind,
};
use iode_core::expr::{Expression, VarSet};
use iode_core::surface::{Box3, TraceOptions};
use iode_core::umbrella::{reduce_and_integrate, UmbrellaInput};

use crate::config::Config;
use crate::report::CheckJson;

fn xyp(src: &str) -> Expression {
    Expression::parse(src, &VarSet::new(["x", "y", "p"])).unwrap()
}

fn xy(src: &str) -> Expression {
    Expression::parse(src, &VarSet::new(["x", "y"])).unwrap()
}

fn check(name: &str, pass: bool, detail: String) -> CheckJson {
    CheckJson {
        name: name.to_string(),
        pass,
        detail,
    }
}

fn folded_representative(name: &str, k: f64, want: &str, cfg: &ClassifyConfig<f64>) -> CheckJson {
    let g = xyp(&format!("p^2 - y + {:?}*x^2", k));
    match classify_implicit_point(&g, [0.0, 0.0, 0.0], cfg) {
        Ok(report) => {
            let lambda = report.lambda.unwrap_or(f64::NAN);
            let k_back = report.k.unwrap_or(f64::NAN);
            let pass = report.kind.base_name() == want && (k_back - k).abs() <= 1e-8;
            check(
                name,
                pass,
                format!(
                    "kind={} lambda={:.12e} k_formula={:.12e}",
                    report.kind.label(),
                    lambda,
                    k_back
                ),
            )
        }
        Err(e) => check(name, false, format!("classification failed: {}", e)),
    }
}

pub fn run_suite(config: &Config) -> Vec<CheckJson> {
    let cfg = config.classify_config();
    let mut checks = Vec::new();

    checks.push(folded_representative(
        "folded_saddle_representative",
        -1.0,
        "FoldedNonresonanceSaddle",
        &cfg,
    ));
    checks.push(folded_representative(
        "folded_node_representative",
        0.05,
        "FoldedNode",
        &cfg,
    ));
    checks.push(folded_representative(
        "folded_focus_representative",
        1.0,
        "FoldedFocus",
        &cfg,
    ));

    checks.push({
        let report = classify_implicit_point(&xyp("p^2 - x"), [0.0, 0.0, 0.0], &cfg);
        match report {
            Ok(r) => check(
                "folded_regular_point",
                r.kind == SingularKind::FoldedRegular,
                format!("kind={}", r.kind.label()),
            ),
            Err(e) => check("folded_regular_point", false, e.to_string()),
        }
    });

    checks.push({
        let report = classify_implicit_point(&xyp("x - p*(y + p^2)"), [0.0, 0.0, 0.0], &cfg);
        match report {
            Ok(r) => check(
                "pleated_point",
                r.kind == SingularKind::PleatedSingularPoint,
                format!("kind={}", r.kind.label()),
            ),
            Err(e) => check("pleated_point", false, e.to_string()),
        }
    });

    // Whitney umbrella model and its negation
    for (name, src, want_a0p, want_b0) in [
        (
            "whitney_umbrella_model",
            "v*(u - v^2)",
            -2.0 / 3.0,
            2.0 / 5.0,
        ),
        (
            "whitney_umbrella_negated",
            "v*(v^2 - u)",
            2.0 / 3.0,
            -2.0 / 5.0,
        ),
    ] {
        let e = Expression::parse(src, &VarSet::new(["u", "v"])).unwrap();
        let outcome = UmbrellaInput::new(&e, config.jet_order, config.tol_zero)
            .and_then(|input| reduce_and_integrate(&input, config.tol_zero));
        checks.push(match outcome {
            Ok(cert) => {
                let pass = cert.kind == SingularKind::WhitneyUmbrellaPoint
                    && cert.a0.abs() <= 1e-10
                    && (cert.a0_prime - want_a0p).abs() <= 1e-10
                    && (cert.b0 - want_b0).abs() <= 1e-10;
                check(
                    name,
                    pass,
                    format!(
                        "a0={:.3e} a0_prime={:.12} b0={:.12} kind={}",
                        cert.a0,
                        cert.a0_prime,
                        cert.b0,
                        cert.kind.label()
                    ),
                )
            }
            Err(e) => check(name, false, e.to_string()),
        });
    }

    // resonance coefficient consistency over coprime pairs
    checks.push({
        fn gcd(a: u32, b: u32) -> u32 {
            if b == 0 {
                a
            } else {
                gcd(b, a % b)
            }
        }
        let mut pass = true;
        let mut worst = 0.0_f64;
        let mut tested = 0;
        for p in 1..=6u32 {
            for q in 1..=6u32 {
                if p == q || gcd(p, q) != 1 {
                    continue;
                }
                let lambda = -(p as f64) / q as f64;
                let k_ratio = lambda / (2.0 * lambda + 2.0).powi(2);
                let k_pq = -((p * q) as f64) / (2.0 * p as f64 - 2.0 * q as f64).powi(2);
                worst = worst.max((k_ratio - k_pq).abs());
                if (k_ratio - k_pq).abs() > 1e-12 {
                    pass = false;
                }
                let g = xyp(&format!("p^2 - y + {:?}*x^2", k_pq));
                let canonical = if p > q { (p, q) } else { (q, p) };
                match classify_implicit_point(&g, [0.0, 0.0, 0.0], &cfg) {
                    Ok(r) => {
                        if r.kind != SingularKind::FoldedResonanceSaddle
                            || r.resonance != Some(canonical)
                        {
                            pass = false;
                        }
                    }
                    Err(_) => pass = false,
                }
                tested += 1;
            }
        }
        check(
            "resonance_coefficient_consistency",
            pass,
            format!("{} coprime pairs, worst formula gap {:.3e}", tested, worst),
        )
    });

    // explicit plane fields
    checks.push({
        let cases: [(&str, &str, &str); 4] = [
            ("1", "0", "NonsingularPoint"),
            ("x", "-2*y", "ResonanceSaddle"),
            ("x + 2*y", "-2*x + y", "Focus"),
            ("x", "3.141592653589793*y", "NonresonanceNode"),
        ];
        let mut pass = true;
        let mut got = Vec::new();
        for (f1, f2, want) in cases {
            let r = classify_equilibrium(&xy(f1), &xy(f2), [0.0, 0.0], &cfg);
            if r.kind.base_name() != want {
                pass = false;
            }
            got.push(r.kind.label());
        }
        check("plane_field_suite", pass, got.join(", "))
    });

    // generating families
    checks.push({
        let cases: [(&str, ClairautKind); 4] = [
            ("t + x", ClairautKind::Regular),
            ("t^2 + t*x", ClairautKind::ClairautFold),
            ("t^3 + t*x", ClairautKind::ClairautCusp),
            ("t^2 + t*x^2", ClairautKind::ClairautCrossCap),
        ];
        let mut pass = true;
        let mut got = Vec::new();
        for (src, want) in &cases {
            let e = Expression::parse(src, &VarSet::new(["t", "x"])).unwrap();
            let fam = GeneratingFamily::at_origin(e, config.tol_zero).unwrap();
            let r = classify_family(&fam, config.tol_zero);
            if &r.kind != want {
                pass = false;
            }
            got.push(r.kind.label());
        }
        check("generating_family_conditions", pass, got.join(", "))
    });

    // Clairaut equation verdicts
    checks.push({
        let bounds = Box3::new(-1.0, 1.0, -1.0, 1.0, -1.0, 1.0);
        let opts = TraceOptions {
            newton_tol: config.newton_tol,
            ..TraceOptions::default()
        };
        let cusp = xyp("y - 2*p^3");
        let clairaut_ok = is_clairaut_type(
            &cusp,
            &bounds,
            config.criminant_samples,
            config.tol_clairaut,
            &opts,
        )
        .map(|v| v.is_clairaut)
        .unwrap_or(false);
        let reduced = is_reduced(
            &cusp,
            &bounds,
            config.criminant_samples,
            config.tol_reduced,
            &opts,
        )
        .map(|v| v.is_reduced)
        .unwrap_or(true);
        let dara_cusp = dara_condition(&cusp, [0.0, 0.0, 0.0], config.dara_order)
            .map(|v| v.holds)
            .unwrap_or(true);
        let dara_classic = dara_condition(&xyp("y - x*p - p^2"), [0.0, 0.0, 0.0], config.dara_order)
            .map(|v| v.holds)
            .unwrap_or(false);
        let folded = is_clairaut_type(
            &xyp("p^2 - y + x^2"),
            &bounds,
            config.criminant_samples,
            config.tol_clairaut,
            &opts,
        )
        .map(|v| v.is_clairaut)
        .unwrap_or(true);
        let pass = clairaut_ok && !reduced && !dara_cusp && dara_classic && !folded;
        check(
            "clairaut_equation_verdicts",
            pass,
            format!(
                "cusp_cubic: clairaut={} reduced={} dara={}; classical: dara={}; folded: clairaut={}",
                clairaut_ok, reduced, dara_cusp, dara_classic, folded
            ),
        )
    });

    // fixed-exponent roundtrips through the node normal form
    checks.push({
        let lambdas = [
            std::f64::consts::E,
            7.0_f64.sqrt(),
            std::f64::consts::PI - 1.0,
            9.5,
        ];
        let mut pass = true;
        let mut worst = 0.0_f64;
        for lambda in lambdas {
            let k = lambda / (2.0 * lambda + 2.0).powi(2);
            let g = xyp(&format!("p^2 - y + {:?}*x^2", k));
            match classify_implicit_point(&g, [0.0, 0.0, 0.0], &cfg) {
                Ok(r) => {
                    let err = (r.lambda.unwrap_or(f64::NAN) - lambda).abs();
                    worst = worst.max(err);
                    if !(r.kind == SingularKind::FoldedNode && err <= 1e-6) {
                        pass = false;
                    }
                }
                Err(_) => pass = false,
            }
        }
        check(
            "exponent_roundtrip_fixed",
            pass,
            format!("worst recovery error {:.3e}", worst),
        )
    });

    checks
}
