//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test --release -p starnoma --test acceptance`.

mod common;

use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use starnoma::analysis::{op_asymptotic, op_exact};
use starnoma::cli::{self, Baselines, Mode, PartitionSource, RunSpec, ScenarioSpec, Sweep};
use starnoma::model::{preset, CorrelationSpec, Partition, Scenario, Side};
use starnoma::partition::{
    algorithm1_nthr, fixture, two_stage_partition, uniform_partition, worst_floor, PartitionError,
    PartitionRequest, FIXTURE_NAMES,
};
use starnoma::sim::{mc_sweep, noma_op_exact, oma_op_exact, McConfig, McSweep};
use starnoma::specfun::{chi2_diff_cdf, marcum_q};

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

fn sweep(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

/// Binomial SE of the estimate, floored by that of `reference` so that an
/// empty count still carries an error bar.
fn se_floor(se: f64, reference: f64, trials: u64) -> f64 {
    se.max(common::binomial_se(reference, trials as f64))
}

fn fixture_rows() -> Vec<(String, Scenario, Partition)> {
    let mut out = Vec::new();
    for (name, _) in FIXTURE_NAMES {
        let table = fixture(name).unwrap().unwrap();
        for row in &table.rows {
            let s = table.scenario(row).unwrap();
            let p = Partition::new(&s, row.counts.clone()).unwrap();
            out.push((format!("{name} N={}", row.n_total), s, p));
        }
    }
    out
}

fn c1_special_functions() -> Verdict {
    let mut worst = (0.0f64, 0.0, 0.0, 0.0);
    for m in [0.5, 1.0, 1.5, 2.5] {
        for i in 0..50 {
            for j in 0..50 {
                let (a, b) = (20.0 * i as f64 / 49.0, 20.0 * j as f64 / 49.0);
                let err = (marcum_q(m, a, b).unwrap() - common::marcum_q_quadrature(m, a, b)).abs();
                if err > worst.0 {
                    worst = (err, m, a, b);
                }
            }
        }
    }
    let marcum_ok = worst.0 <= 1e-10;

    let n = 10_000_000u64;
    let mut rng = common::rng(101);
    let mut max_z = 0.0f64;
    let mut points = 0;
    for mu in [0.3, 1.0, 3.0, 8.0] {
        for (nu, u) in [(0.5, 0.2), (1.0, 1.0), (2.0, 0.05), (1.5, 3.0), (0.8, 0.6)] {
            // probe near the median so the band is informative
            let x = mu * mu - u * u;
            let hits = (0..n)
                .filter(|_| {
                    let z: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
                    let a = mu + nu * z[0];
                    a * a - u * u * (z[1] * z[1] + z[2] * z[2]) < x
                })
                .count();
            let cdf = chi2_diff_cdf(x, mu, nu, u).unwrap();
            let z = (hits as f64 / n as f64 - cdf).abs() / common::binomial_se(cdf, n as f64);
            max_z = max_z.max(z);
            points += 1;
        }
    }
    verdict(
        marcum_ok && max_z <= 3.0,
        format!(
            "marcum max |err| {:.2e} at m={} a={:.2} b={:.2} (tol 1e-10); chi2 diff max {:.2} SE over {points} points",
            worst.0, worst.1, worst.2, worst.3, max_z
        ),
    )
}

fn c2_analytic_vs_mc() -> Verdict {
    let trials = 1_000_000;
    let p = sweep(-10.0, 40.0, 2.0);
    let mut checked = 0;
    let mut outside = 0;
    let mut failures = Vec::new();
    let mut worst = (0.0f64, String::new());
    for (label, s, part) in fixture_rows() {
        let mc = mc_sweep(&s, &part, &p, &McConfig::new(trials, 2)).unwrap();
        for (i, &p_dbm) in p.iter().enumerate() {
            for k in 0..s.num_users() {
                if part.count(k) < 24 {
                    continue;
                }
                let m = mc.points[i].proposed.op[k];
                if m.mean < 1e-3 {
                    continue;
                }
                let e = op_exact(&s, &part, k, p_dbm).unwrap();
                let tol = (3.0 * m.se).max(0.01);
                let err = (e - m.mean).abs();
                checked += 1;
                if err - tol > worst.0 {
                    worst = (
                        err - tol,
                        format!(
                            "{label} U{} P={p_dbm}: exact {e:.4} mc {:.4}",
                            k + 1,
                            m.mean
                        ),
                    );
                }
                if err > tol {
                    outside += 1;
                    let who = format!("{label} U{}", k + 1);
                    if !failures.contains(&who) {
                        failures.push(who);
                    }
                }
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{checked} points within max(3 SE, 0.01)")
    } else {
        format!(
            "{outside} of {checked} points outside max(3 SE, 0.01); worst excess {:.4} ({}); affected {}",
            worst.0,
            worst.1,
            failures.join(", ")
        )
    };
    verdict(failures.is_empty(), detail)
}

fn c3_error_floor() -> Verdict {
    let t = fixture("table2").unwrap().unwrap();
    let row = &t.rows[0];
    let s = t.scenario(row).unwrap();
    let part = Partition::new(&s, row.counts.clone()).unwrap();
    let trials = 1_000_000;
    let p = sweep(-10.0, 30.0, 2.0);
    let top = *p.last().unwrap();
    let mc = mc_sweep(&s, &part, &p, &McConfig::new(trials, 3)).unwrap();
    let last = &mc.points[p.len() - 1].proposed;
    let mut ok = true;
    let mut parts = Vec::new();
    for k in 0..2 {
        let floor = op_asymptotic(&s, &part, k);
        let m = last.op[k];
        let tol = (3.0 * m.se).max(0.1 * floor);
        ok &= (m.mean - floor).abs() <= tol;
        parts.push(format!("U{} mc {:.4} floor {:.4}", k + 1, m.mean, floor));
    }
    let i20 = p.iter().position(|&x| x == top - 20.0).unwrap();
    let (hi, lo) = (last.op[2].mean, mc.points[i20].proposed.op[2].mean);
    ok &= hi < lo / 5.0;
    parts.push(format!(
        "U3 {:.2e} at {top} dBm vs {:.2e} at {} dBm",
        hi,
        lo,
        top - 20.0
    ));
    verdict(ok, format!("N=60 {:?}: {}", row.counts, parts.join("; ")))
}

/// Power where the user's outage first drops through `target`, interpolated
/// in log outage.
fn crossing(p: &[f64], op: &[f64], target: f64) -> Option<f64> {
    (1..p.len())
        .find(|&i| op[i - 1] >= target && op[i] < target)
        .map(|i| {
            let (a, b) = (op[i - 1], op[i]);
            let t = if b > 0.0 {
                (a.ln() - target.ln()) / (a.ln() - b.ln())
            } else {
                (a - target) / (a - b)
            };
            p[i - 1] + t * (p[i] - p[i - 1])
        })
}

fn c4_db_gaps() -> Verdict {
    let t = fixture("case1").unwrap().unwrap();
    let p = sweep(-10.0, 30.0, 1.0);
    let mut cross = Vec::new();
    let mut cross2 = Vec::new();
    for n in [64, 128, 256] {
        let row = t.rows.iter().find(|r| r.n_total == n).unwrap();
        let s = t.scenario(row).unwrap();
        let part = Partition::new(&s, row.counts.clone()).unwrap();
        let mc = mc_sweep(&s, &part, &p, &McConfig::new(1_000_000, 4)).unwrap();
        let op: Vec<f64> = mc.points.iter().map(|x| x.proposed.op[0].mean).collect();
        cross.push(crossing(&p, &op, 1e-3));
        let op2: Vec<f64> = mc.points.iter().map(|x| x.proposed.op[1].mean).collect();
        cross2.push(crossing(&p, &op2, 1e-3));
    }
    let gaps2: Vec<String> = cross2
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => format!("{:.2}", a - b),
            _ => "n/a".into(),
        })
        .collect();
    let [Some(a), Some(b), Some(c)] = cross[..] else {
        return verdict(false, format!("crossing not found: {cross:?}"));
    };
    let (g1, g2) = (a - b, b - c);
    verdict(
        (g1 - 10.0).abs() <= 2.0 && (g2 - 5.0).abs() <= 2.0,
        format!(
            "OP1=1e-3 at {a:.2}/{b:.2}/{c:.2} dBm; gap 64->128 {g1:.2} dB (want 10 +- 2), 128->256 {g2:.2} dB (want 5 +- 2); OP2 gaps {} dB",
            gaps2.join("/")
        ),
    )
}

fn c5_partition_invariants() -> Verdict {
    let mut problems = Vec::new();
    let mut solved = 0;
    let mut exhausted = Vec::new();
    for id in [1u8, 2, 3] {
        for n in [60, 90, 120, 150, 180] {
            let s = preset(id).unwrap().with_n_total(n);
            let req = PartitionRequest::from_scenario(&s, 0.6);
            let out = match two_stage_partition(&s, &req) {
                Ok(o) => o,
                Err(PartitionError::BudgetExhausted { .. }) => {
                    exhausted.push(format!("preset {id} N={n}"));
                    continue;
                }
                Err(e) => {
                    problems.push(format!("preset {id} N={n}: {e}"));
                    continue;
                }
            };
            solved += 1;
            let p = &out.partition;
            let c = p.counts();
            if c.iter().sum::<usize>() != n {
                problems.push(format!("preset {id} N={n}: budget"));
            }
            if !c.windows(2).all(|w| w[0] <= w[1]) {
                problems.push(format!("preset {id} N={n}: counts {c:?} not monotone"));
            }
            for side in [Side::Transmission, Side::Reflection] {
                let sum: usize = s.side_users(side).iter().map(|&k| c[k]).sum();
                if sum != p.side_total(side) {
                    problems.push(format!("preset {id} N={n}: side total"));
                }
            }
            if let Some(t) = out.n_thr {
                let scan = (1..=n / s.num_users()).find(|&m| worst_floor(&s, m) <= 0.6);
                if scan != Some(t) || algorithm1_nthr(&s, 0.6).ok() != Some(t) {
                    problems.push(format!("preset {id} N={n}: N_thr {t} vs scan {scan:?}"));
                }
            }
        }
    }
    let mut rows = 0;
    for (name, _) in FIXTURE_NAMES {
        let table = fixture(name).unwrap().unwrap();
        for row in &table.rows {
            let s = table.scenario(row).unwrap();
            match two_stage_partition(&s, &table.request(row)) {
                Ok(o) if o.partition.counts() == row.counts.as_slice() && o.n_thr == row.n_thr => {
                    rows += 1
                }
                Ok(o) => problems.push(format!(
                    "{name} N={}: got {:?}",
                    row.n_total,
                    o.partition.counts()
                )),
                Err(e) => problems.push(format!("{name} N={}: {e}", row.n_total)),
            }
        }
    }
    let mut detail =
        format!("{solved} allocations checked, {rows} calibration-regression rows reproduced");
    if !exhausted.is_empty() {
        detail += &format!("; budget exhausted for {}", exhausted.join(", "));
    }
    if !problems.is_empty() {
        detail += &format!("; {}", problems.join("; "));
    }
    verdict(problems.is_empty(), detail)
}

fn c6_baselines() -> Verdict {
    let t = fixture("case1").unwrap().unwrap();
    let row = t.rows.iter().find(|r| r.n_total == 256).unwrap();
    let s = t.scenario(row).unwrap();
    let prop = Partition::new(&s, row.counts.clone()).unwrap();
    let uni = uniform_partition(&s).unwrap();
    let trials = 200_000;
    let p = sweep(-10.0, 40.0, 5.0);
    let cfg = McConfig {
        baselines: true,
        ..McConfig::new(trials, 6)
    };
    let a = mc_sweep(&s, &prop, &p, &cfg).unwrap();
    let b = mc_sweep(&s, &uni, &p, &McConfig::new(trials, 6)).unwrap();
    let mid = 0.5 * (p[0] + p[p.len() - 1]);
    let (mut beats, mut rate_ok, mut closed_ok) = (true, true, true);
    let mut notes = Vec::new();
    for (i, &p_dbm) in p.iter().enumerate() {
        let pt = &a.points[i];
        let (noma, oma) = (pt.noma.as_ref().unwrap(), pt.oma.as_ref().unwrap());
        for k in 0..2 {
            let own = pt.proposed.op[k].mean;
            if p_dbm >= mid && !(own < noma.op[k].mean && own < oma.op[k].mean) {
                beats = false;
                notes.push(format!(
                    "U{} at {p_dbm} dBm: {own:.2e} vs noma {:.2e} oma {:.2e}",
                    k + 1,
                    noma.op[k].mean,
                    oma.op[k].mean
                ));
            }
            for (est, exact) in [
                (noma.op[k], noma_op_exact(&s, k, p_dbm)),
                (oma.op[k], oma_op_exact(&s, k, p_dbm)),
            ] {
                if (est.mean - exact).abs() > 3.0 * se_floor(est.se, exact, trials) {
                    closed_ok = false;
                    notes.push(format!(
                        "baseline U{} at {p_dbm} dBm: {:.4e} vs {exact:.4e}",
                        k + 1,
                        est.mean
                    ));
                }
            }
        }
        let (x, y) = (pt.proposed.sumrate, b.points[i].proposed.sumrate);
        if x.mean < y.mean - 3.0 * x.se.hypot(y.se) {
            rate_ok = false;
            notes.push(format!(
                "sum rate at {p_dbm} dBm: {:.3} vs uniform {:.3}",
                x.mean, y.mean
            ));
        }
    }
    let mut detail = format!(
        "N=256 {:?} vs uniform {:?}: OP beats baselines above {mid} dBm: {beats}; sum rate >= uniform: {rate_ok}; baselines match closed forms: {closed_ok}",
        prop.counts(),
        uni.counts()
    );
    if !notes.is_empty() {
        detail += &format!(" [{}]", notes.join("; "));
    }
    verdict(beats && rate_ok && closed_ok, detail)
}

fn curves(s: &Scenario, part: &Partition, p: &[f64], trials: u64) -> McSweep {
    mc_sweep(s, part, p, &McConfig::new(trials, 7)).unwrap()
}

fn c7_impairments() -> Verdict {
    let t = fixture("case1").unwrap().unwrap();
    let row = t.rows.iter().find(|r| r.n_total == 64).unwrap();
    let base = t.scenario(row).unwrap();
    let part = Partition::new(&base, vec![24, 40]).unwrap();
    let trials = 200_000;
    let p = sweep(-10.0, 40.0, 2.5);
    let im = p.iter().position(|&x| x == 15.0).unwrap();
    let with = |kappa: Option<f64>, spacing: Option<f64>| {
        let mut s = base.clone();
        s.phase_error_kappa = kappa;
        s.correlation = spacing.map(|d| CorrelationSpec::from_carrier(d, cli::DEFAULT_CARRIER_HZ));
        curves(&s, &part, &p, trials)
    };
    let k2 = with(Some(2.0), None);
    let k10 = with(Some(10.0), None);
    let iid = with(None, None);
    let half = with(None, Some(0.5));
    let eighth = with(None, Some(0.125));

    let op = |m: &McSweep, i: usize, k: usize| m.points[i].proposed.op[k];
    let mut notes = Vec::new();
    let mut ordered = true;
    for i in 0..p.len() {
        for k in 0..2 {
            for (worse, better, label) in [(&k2, &k10, "2 vs 10"), (&k10, &iid, "10 vs inf")] {
                let (w, b) = (op(worse, i, k), op(better, i, k));
                if w.mean < b.mean - 3.0 * w.se.hypot(b.se) {
                    ordered = false;
                    notes.push(format!("kappa {label} U{} at {} dBm", k + 1, p[i]));
                }
            }
        }
    }
    let strict = (0..2).all(|k| {
        op(&k2, im, k).mean > op(&k10, im, k).mean && op(&k10, im, k).mean > op(&iid, im, k).mean
    });
    let mut close = true;
    for i in 0..p.len() {
        for k in 0..2 {
            let (c, u) = (op(&half, i, k), op(&iid, i, k));
            if (c.mean - u.mean).abs() > 3.0 * c.se.hypot(u.se) + 0.01 {
                close = false;
                notes.push(format!(
                    "lambda/2 U{} at {} dBm: {:.4} vs {:.4}",
                    k + 1,
                    p[i],
                    c.mean,
                    u.mean
                ));
            }
        }
    }
    let worse = (0..2).all(|k| op(&eighth, im, k).mean > op(&iid, im, k).mean);
    let fmt = |m: &McSweep| format!("{:.4}/{:.4}", op(m, im, 0).mean, op(m, im, 1).mean);
    let mut detail = format!(
        "at {} dBm OP1/OP2: kappa 2 {}, 10 {}, inf {}, lambda/2 {}, lambda/8 {}; ordered over sweep {ordered}, strict at mid {strict}, lambda/2 close {close}, lambda/8 worse {worse}",
        p[im],
        fmt(&k2),
        fmt(&k10),
        fmt(&iid),
        fmt(&half),
        fmt(&eighth)
    );
    if !notes.is_empty() {
        detail += &format!(" [{}]", notes.join("; "));
    }
    verdict(ordered && strict && close && worse, detail)
}

fn run_bytes(spec: &RunSpec) -> Vec<u8> {
    let report = cli::run(spec).unwrap();
    let mut out = Vec::new();
    cli::write_report(&mut out, &report, cli::OutputFormat::Csv, None).unwrap();
    out
}

fn c8_determinism() -> Verdict {
    let mut correlated = ScenarioSpec::preset(1);
    correlated.kappa = Some(4.0);
    correlated.spacing_wavelengths = Some(0.25);
    let specs = [
        (
            ScenarioSpec::preset(2),
            Mode::MonteCarlo,
            PartitionSource::Fixture,
        ),
        (
            ScenarioSpec::preset(3),
            Mode::Both,
            PartitionSource::TwoStage,
        ),
        (correlated, Mode::MonteCarlo, PartitionSource::Uniform),
    ];
    let mut same = 0;
    for (scenario, mode, partition) in specs.iter().cloned() {
        let mut spec = RunSpec {
            scenario,
            mode,
            sweep: Sweep {
                start: -10.0,
                stop: 40.0,
                step: 5.0,
            },
            trials: 20_000,
            seed: 8,
            workers: Some(1),
            partition,
            allocation: Default::default(),
            baselines: Baselines {
                noma: true,
                oma: true,
            },
            strict_sumrate: false,
        };
        let a = run_bytes(&spec);
        spec.workers = Some(8);
        let b = run_bytes(&spec);
        same += usize::from(a == b && !a.is_empty());
    }
    let alloc = |w| {
        let spec = cli::PartitionSpec {
            scenario: ScenarioSpec::preset(2),
            allocation: Default::default(),
            seed: 1,
            workers: Some(w),
        };
        cli::partition_cmd(&spec).unwrap().document
    };
    let alloc_same = alloc(1) == alloc(8);
    verdict(
        same == specs.len() && alloc_same,
        format!("{same}/{} sweep files identical across 1 and 8 workers; allocation identical: {alloc_same}", specs.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("1 special-function oracles", c1_special_functions),
        ("2 analytic vs Monte Carlo", c2_analytic_vs_mc),
        ("3 error floor", c3_error_floor),
        ("4 dB gaps", c4_db_gaps),
        ("5 partition invariants", c5_partition_invariants),
        ("6 baselines", c6_baselines),
        ("7 impairments", c7_impairments),
        ("8 determinism", c8_determinism),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.starts_with(f.as_str())) {
            continue;
        }
        let t0 = Instant::now();
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "{} criterion {name} ({:.0} s): {}",
            if v.pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64(),
            v.detail
        );
    }
    std::process::exit(i32::from(failed > 0));
}
