//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::*;
use num_traits::{Signed, Zero};
use xpaudit::audit::{audit_instance, Issue, Registry};
use xpaudit::census::parity_report;
use xpaudit::explain::{check_mhs_duality, explanation_sets, is_weak_axp};
use xpaudit::shapley::{delta, phi, shapley_scaled};
use xpaudit::{
    enumerate_axps, enumerate_cxps, relevancy, run_census, shapley_values, CensusConfig,
    CensusMode, CensusStats, ExplanationProblem, FeatureSet, Rational,
};

type Check = Result<String, String>;

struct Gate {
    failed: usize,
}

impl Gate {
    fn run(&mut self, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(limit)) if took > limit => Err(format!(
                "took {:.2}s, limit {:.0}s",
                took.as_secs_f64(),
                limit.as_secs_f64()
            )),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS {name} [{:.2}s] {detail}", took.as_secs_f64()),
            Err(detail) => {
                self.failed += 1;
                println!("FAIL {name} [{:.2}s] {detail}", took.as_secs_f64());
            }
        }
    }
}

fn ensure(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn running_example() -> Check {
    let e = problem("fig1.tt", "0,0,0,0");
    ensure(enumerate_axps(&e) == vec![set(&[2, 3, 4])], || {
        "AXps".into()
    })?;
    ensure(
        enumerate_cxps(&e) == vec![set(&[2]), set(&[3]), set(&[4])],
        || "CXps".into(),
    )?;
    let rel = relevancy(&e).map_err(|x| x.to_string())?;
    ensure(
        rel.relevant == set(&[2, 3, 4]) && rel.irrelevant == set(&[1]),
        || format!("relevancy {} / {}", rel.relevant, rel.irrelevant),
    )?;
    ensure(
        phi(&e, set(&[1, 4])).unwrap() == Rational::new(2, 4),
        || "phi({1,4})".into(),
    )?;
    ensure(
        phi(&e, set(&[3, 4])).unwrap() == Rational::new(1, 4),
        || "phi({3,4})".into(),
    )?;
    let verdicts: Vec<bool> = [set(&[2, 3]), set(&[1, 2, 4]), set(&[2, 3, 4])]
        .into_iter()
        .map(|s| is_weak_axp(&e, s).unwrap())
        .collect();
    ensure(verdicts == [false, false, true], || {
        format!("weak AXp verdicts {verdicts:?}")
    })?;
    let sv = shapley_values(&e).map_err(|x| x.to_string())?;
    ensure(
        (2..=4).all(|i| sv.value(1).abs() > sv.value(i).abs()),
        || format!("|Sv(1)| not strictly largest: {sv}"),
    )?;
    let rec = audit_instance(&e, Registry::Table3V1).map_err(|x| x.to_string())?;
    ensure(
        rec.issues.get(Issue::I2) && rec.issues.get(Issue::I5),
        || "I2/I5 not flagged".into(),
    )?;
    Ok(format!("{sv}"))
}

fn census(m: usize, workers: usize, registry: Registry) -> Result<CensusStats, String> {
    let mut config = CensusConfig::new(m, CensusMode::Exhaustive);
    config.workers = workers;
    config.registry = registry;
    run_census(&config).map_err(|e| e.to_string())
}

fn census_figures(stats: &CensusStats, default_v1: &CensusStats) -> Check {
    ensure(stats.complete() && stats.counts.functions == 65_534, || {
        format!("{} functions audited", stats.counts.functions)
    })?;
    ensure(stats.instances() == 65_534 * 16, || {
        format!("{} instances", stats.instances())
    })?;
    ensure(stats.function_share_in(Issue::I5, 185, 195), || {
        format!("I5 at {}%", stats.function_pct(Issue::I5))
    })?;
    ensure(
        stats.issue_functions(Issue::I1) * 100 > 99 * stats.counts.functions,
        || format!("I1 at {}%", stats.function_pct(Issue::I1)),
    )?;
    for s in [stats, default_v1] {
        for issue in [Issue::I1, Issue::I2, Issue::I6] {
            ensure(
                s.issue_functions(issue) * 100 > 55 * s.counts.functions,
                || format!("{issue} at {}% under {}", s.function_pct(issue), s.registry),
            )?;
        }
    }
    Ok(format!(
        "I5 {}%, I1 {}%, I2 {}%, I6 {}% (default-v1 I6 {}%)",
        stats.function_pct(Issue::I5),
        stats.function_pct(Issue::I1),
        stats.function_pct(Issue::I2),
        stats.function_pct(Issue::I6),
        default_v1.function_pct(Issue::I6),
    ))
}

fn class_parity(stats: &[&CensusStats]) -> Check {
    for s in stats {
        let report = parity_report(s);
        ensure(report.exhaustive && report.balanced(), || {
            format!("{}:\n{report}", s.registry)
        })?;
    }
    let rows: Vec<String> = Issue::ALL
        .iter()
        .map(|&i| {
            let [c0, _] = stats[0].issue_class_counts(i);
            format!("{i}={c0}")
        })
        .collect();
    Ok(format!("per-class counts equal: {}", rows.join(" ")))
}

fn duality(domain: &[ExplanationProblem]) -> Check {
    for e in domain {
        let sets = explanation_sets(e);
        let union = |f: &[FeatureSet]| f.iter().fold(FeatureSet::empty(), |a, &x| a | x);
        ensure(
            check_mhs_duality(&sets) && union(&sets.axps) == union(&sets.cxps),
            || format!("{:?} at {}", e.table(), e.instance()),
        )?;
    }
    Ok(format!("{} problems", domain.len()))
}

fn efficiency(domain: &[ExplanationProblem]) -> Check {
    for e in domain {
        let sv = shapley_values(e).map_err(|x| x.to_string())?;
        let total: Rational = sv.sv.iter().sum();
        let expected =
            Rational::from_integer(e.prediction() as i128) - phi(e, FeatureSet::empty()).unwrap();
        ensure(
            total == expected && shapley_scaled(e).to_rationals() == sv.sv,
            || format!("{:?} at {}", e.table(), e.instance()),
        )?;
    }
    Ok(format!("{} problems", domain.len()))
}

fn axioms(domain: &[ExplanationProblem]) -> Check {
    let (mut dummies, mut pairs) = (0u64, 0u64);
    for e in domain {
        let m = e.m();
        let sv = shapley_values(e).map_err(|x| x.to_string())?;
        let where_ = || format!("{:?} at {}", e.table(), e.instance());
        for i in 1..=m {
            let others = FeatureSet::full(m).without(i);
            let dummy = FeatureSet::all_subsets(m)
                .filter(|s| s.is_subset(others))
                .all(|s| delta(e, i, s).unwrap().is_zero());
            if dummy {
                dummies += 1;
                ensure(sv.value(i).is_zero(), || format!("dummy {i}: {}", where_()))?;
            }
            for j in i + 1..=m {
                let mut perm: Vec<usize> = (1..=m).collect();
                perm.swap(i - 1, j - 1);
                if e.permuted(&perm).unwrap() == *e {
                    pairs += 1;
                    ensure(sv.value(i) == sv.value(j), || {
                        format!("symmetry {i},{j}: {}", where_())
                    })?;
                }
            }
        }
        let n = e.negated();
        let neg = shapley_values(&n).map_err(|x| x.to_string())?;
        ensure(sv.sv.iter().zip(&neg.sv).all(|(a, b)| *a == -b), || {
            format!("antisymmetry: {}", where_())
        })?;
        for registry in [Registry::Table3V1, Registry::DefaultV1] {
            let a = audit_instance(e, registry).map_err(|x| x.to_string())?;
            let b = audit_instance(&n, registry).map_err(|x| x.to_string())?;
            ensure(a.issues.bits() == b.issues.bits(), || {
                format!("flags change under negation ({registry}): {}", where_())
            })?;
        }
    }
    Ok(format!(
        "{} problems, {dummies} dummy features, {pairs} interchangeable pairs",
        domain.len()
    ))
}

fn orderings_oracle() -> Check {
    let mut count = 0;
    for m in 1..=4 {
        for e in seeded_problems(m, 50, 0xACCE_0000 + m as u64) {
            let sv = shapley_values(&e).map_err(|x| x.to_string())?;
            ensure(sv.sv == oracle_shapley_by_orderings(&e), || {
                format!("{:?} at {}", e.table(), e.instance())
            })?;
            count += 1;
        }
    }
    Ok(format!("{count} problems, m = 1..4"))
}

fn implications(stats: &[&CensusStats]) -> Check {
    for s in stats {
        ensure(s.counts.implication_violations == 0, || {
            format!(
                "{} violations under {}",
                s.counts.implication_violations, s.registry
            )
        })?;
    }
    Ok(format!(
        "0 violations over {} instances per registry",
        stats[0].instances()
    ))
}

fn determinism(one: &CensusStats, eight: &CensusStats) -> Check {
    let a = serde_json::to_string_pretty(one).map_err(|e| e.to_string())?;
    let b = serde_json::to_string_pretty(eight).map_err(|e| e.to_string())?;
    ensure(a == b, || {
        "JSON differs between workers=1 and workers=8".into()
    })?;
    Ok(format!("{} bytes identical", a.len()))
}

fn main() {
    let mut gate = Gate { failed: 0 };
    gate.run(
        "1 running example goldens",
        Some(Duration::from_secs(1)),
        running_example,
    );

    let start = Instant::now();
    let table3 = census(4, 1, Registry::Table3V1).expect("census");
    let census_time = start.elapsed();
    let table3_w8 = census(4, 8, Registry::Table3V1).expect("census");
    let default_v1 = census(4, 8, Registry::DefaultV1).expect("census");
    gate.run("2 census reproduction (m=4, table3-v1)", None, || {
        if census_time > Duration::from_secs(300) {
            return Err(format!("census took {:.1}s", census_time.as_secs_f64()));
        }
        census_figures(&table3, &default_v1)
            .map(|d| format!("{d}; census {:.2}s", census_time.as_secs_f64()))
    });
    gate.run("3 class parity (m=4)", None, || {
        class_parity(&[&table3, &default_v1])
    });

    let exhaustive: Vec<ExplanationProblem> = all_problems(3).collect();
    let mut extended = exhaustive.clone();
    extended.extend(seeded_problems(4, 1_000, 0xACCE_0004));
    gate.run(
        "4a duality (m<=3, all instances)",
        Some(Duration::from_secs(10)),
        || duality(&exhaustive),
    );
    gate.run("4b efficiency (m<=3 + 1000 seeded m=4)", None, || {
        efficiency(&extended)
    });
    gate.run("4c dummy/symmetry/negation", None, || axioms(&extended));
    gate.run(
        "4d orderings oracle (200 seeded, m<=4)",
        None,
        orderings_oracle,
    );
    gate.run("4e issue implications (m=4 census)", None, || {
        implications(&[&table3, &default_v1])
    });
    gate.run("5 determinism (workers 1 vs 8)", None, || {
        determinism(&table3, &table3_w8)
    });

    if gate.failed > 0 {
        println!("{} acceptance criteria failed", gate.failed);
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
