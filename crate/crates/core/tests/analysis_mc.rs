mod common;

use starnoma::analysis::{op_asymptotic, op_exact, op_twouser, outage_params};
use starnoma::model::{preset, Partition};
use starnoma::sim::{mc_sweep, McConfig};

/// `|exact - mc| <= 3 SE`, with the binomial error of the exact value when
/// no outage was observed.
fn within_3se(exact: f64, mc: f64, se: f64, trials: f64) -> bool {
    let se = se.max(common::binomial_se(exact, trials));
    (exact - mc).abs() <= 3.0 * se
}

#[test]
fn case2_large_surface_matches_mc() {
    let s = preset(2).unwrap().with_n_total(150);
    let part = Partition::new(&s, vec![36, 50, 64]).unwrap();
    let trials = 1_000_000;
    let sweep = mc_sweep(&s, &part, &[10.0], &McConfig::new(trials, 31)).unwrap();
    for k in 0..3 {
        let e = op_exact(&s, &part, k, 10.0).unwrap();
        let m = sweep.points[0].proposed.op[k];
        assert!(
            within_3se(e, m.mean, m.se, trials as f64),
            "U{}: {e} vs {m:?}",
            k + 1
        );
    }
}

#[test]
#[ignore = "the CLT surrogate is off by about 0.01/sqrt(N/100) near OP = 0.5, far more than 3 SE at 1e6 trials"]
fn case1_256_matches_mc_mid_power() {
    let s = preset(1).unwrap().with_n_total(256);
    let part = Partition::new(&s, vec![102, 154]).unwrap();
    let trials = 1_000_000;
    let p = [2.0, 3.0, 4.0];
    let sweep = mc_sweep(&s, &part, &p, &McConfig::new(trials, 32)).unwrap();
    for (i, &p_dbm) in p.iter().enumerate() {
        for k in 0..2 {
            let e = op_twouser(&s, &part, k, p_dbm).unwrap();
            let m = sweep.points[i].proposed.op[k];
            assert!(
                within_3se(e, m.mean, m.se, trials as f64),
                "P={p_dbm} U{}: {e} vs {m:?}",
                k + 1
            );
        }
    }
}

#[test]
#[ignore = "CLT fidelity band of 0.01 needs roughly N^k >= 115; see acceptance criterion 2"]
fn clt_fidelity_from_32_elements() {
    let s = preset(2).unwrap().with_n_total(120);
    let part = Partition::new(&s, vec![32, 40, 48]).unwrap();
    let trials = 1_000_000;
    let p: Vec<f64> = (0..=30).map(|i| i as f64).collect();
    let sweep = mc_sweep(&s, &part, &p, &McConfig::new(trials, 33)).unwrap();
    for (i, &p_dbm) in p.iter().enumerate() {
        for k in 0..3 {
            let m = sweep.points[i].proposed.op[k];
            if m.mean >= 1e-3 {
                let e = op_exact(&s, &part, k, p_dbm).unwrap();
                assert!(
                    (e - m.mean).abs() <= (3.0 * m.se).max(0.01),
                    "P={p_dbm} U{}",
                    k + 1
                );
            }
        }
    }
}

#[test]
fn floor_matches_mc_at_very_high_power() {
    for (id, n, counts) in [(2, 60, vec![16, 20, 24]), (3, 90, vec![19, 30, 41])] {
        let s = preset(id).unwrap().with_n_total(n);
        let part = Partition::new(&s, counts).unwrap();
        let trials = 1_000_000;
        let sweep = mc_sweep(&s, &part, &[120.0], &McConfig::new(trials, 34)).unwrap();
        for k in 0..3 {
            if outage_params(&s, &part, k, 120.0).u_tilde == 0.0 {
                continue;
            }
            let floor = op_asymptotic(&s, &part, k);
            let m = sweep.points[0].proposed.op[k];
            let tol = (3.0 * m.se).max(0.1 * floor);
            assert!(
                (m.mean - floor).abs() <= tol,
                "case {id} U{}: {m:?} vs {floor}",
                k + 1
            );
        }
    }
}

#[test]
fn hand_arithmetic_thresholds() {
    let s = preset(1).unwrap();
    let part = Partition::new(&s, vec![26, 38]).unwrap();
    for p_dbm in [-3.0, 12.5] {
        let rho = s.snr(p_dbm);
        let p = outage_params(&s, &part, 0, p_dbm);
        assert!((p.varrho[0] * 0.2 * rho - 1.0).abs() < 1e-12);
    }
    let s = preset(2).unwrap();
    let part = Partition::new(&s, vec![16, 20, 24]).unwrap();
    let p = outage_params(&s, &part, 0, 0.0);
    assert!((p.varrho_dagger - 2.1875).abs() < 1e-12);
    let u3 = outage_params(&s, &part, 2, 0.0);
    assert_eq!((u3.u, u3.u_tilde), (0.0, 0.0));
}
