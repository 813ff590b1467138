mod common;

use mrplab::analysis::{mc_asymptotic_variance, return_variance, td_asymptotic_variance};
use mrplab::coupling::{crossing_coupling, DEFAULT_ATOM_CAP};
use mrplab::harness::{normal_cdf, stats::mean};
use mrplab::mrp::{gen_checkout, gen_layered, gen_meeting, sample_dataset, RewardDist};
use mrplab::{analyze, mc_estimate, td_estimate, Weighting};

#[test]
fn analysis_matches_enumeration() {
    let mut specs = vec![
        gen_meeting(3, 3, 6, RewardDist::gaussian(0.5, 1.0)).unwrap(),
        gen_checkout(&[0.1, 0.4, 0.0], 0.3).unwrap(),
        gen_layered(3, 5, 0.0, 4).unwrap(),
    ];
    let mut rng = common::rng(99);
    for _ in 0..10 {
        specs.push(common::random_dyadic_dag(&mut rng, 4, 3));
    }
    for spec in &specs {
        let e = common::enumerate_moments(spec, 10_000).unwrap();
        let r = analyze(spec).unwrap();
        for s in 0..spec.num_states() {
            assert!((r.values[s] - e.values[s]).abs() < 1e-12);
            assert!((r.visit_prob[s] - e.visit_prob[s]).abs() < 1e-12);
            assert!((return_variance(&r, s) - e.return_var[s]).abs() < 1e-12);
            for x in 0..spec.num_states() {
                assert!((r.occupancy[(s, x)] - e.occupancy[s][x]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn crossing_time_matches_exhaustive_plans() {
    let mut rng = common::rng(5);
    let mut checked = 0;
    while checked < 15 {
        let spec = common::random_dyadic_dag(&mut rng, 4, 2);
        let n = spec.num_states();
        if n < 2 {
            continue;
        }
        let c = crossing_coupling(&spec, 0, n - 1, DEFAULT_ATOM_CAP).unwrap();
        let probs: Vec<f64> = c.from_s.iter().chain(&c.from_s_prime).map(|a| a.prob).collect();
        let Some(m) = common::dyadic_scale(&probs, 8) else { continue };
        if c.from_s.len() > 6 || c.from_s_prime.len() > 6 {
            continue;
        }
        let ints = |v: &[mrplab::coupling::TrajectoryAtom]| -> Vec<u64> {
            v.iter().map(|a| (a.prob * m as f64) as u64).collect()
        };
        let p = mrplab::coupling::crossing_problem(&c.from_s, &c.from_s_prime).unwrap();
        let oracle = common::integer_transport(&ints(&c.from_s), &ints(&c.from_s_prime), &p.cost);
        assert!((c.crossing_time() * m as f64 - oracle).abs() < 1e-9);
        checked += 1;
    }
}

#[test]
fn normal_cdf_against_series() {
    let mut worst: f64 = 0.0;
    for i in -8000..=8000 {
        let x = i as f64 * 1e-3;
        worst = worst.max((normal_cdf(x) - common::normal_cdf_series(x)).abs());
    }
    assert!(worst < 1e-7, "{worst}");
}

/// Both estimators are consistent, and n times their MSE approaches the
/// asymptotic variances.
#[test]
fn small_scale_clt() {
    let spec = gen_layered(3, 6, 0.1, 21).unwrap();
    let r = analyze(&spec).unwrap();
    let s = 0;
    let (n, k) = (400, 400);
    let mut td_sq = Vec::new();
    let mut mc_sq = Vec::new();
    let mut mc_err = Vec::new();
    for rep in 0..k {
        let data = sample_dataset(&spec, n, 1000 + rep).unwrap();
        let mc = mc_estimate(&data, &spec).value(s).unwrap() - r.values[s];
        let td = td_estimate(&data, &spec).unwrap().value(s).unwrap() - r.values[s];
        mc_err.push(mc);
        mc_sq.push(n as f64 * mc * mc);
        td_sq.push(n as f64 * td * td);
    }
    let check = |sq: &[f64], target: f64| {
        let m = mean(sq);
        let sd = mrplab::harness::stats::sample_variance(sq).sqrt();
        let se = sd / (sq.len() as f64).sqrt();
        assert!((m - target).abs() < 4.0 * se, "{m} vs {target} (se {se})");
    };
    check(&mc_sq, mc_asymptotic_variance(&r, s));
    check(&td_sq, td_asymptotic_variance(&r, &Weighting::point(s)).unwrap());
    // first-visit MC is unbiased whenever the state is visited
    let bias = mean(&mc_err);
    let se = (mc_asymptotic_variance(&r, s) / n as f64 / k as f64).sqrt();
    assert!(bias.abs() < 4.0 * se, "bias {bias} (se {se})");
}
