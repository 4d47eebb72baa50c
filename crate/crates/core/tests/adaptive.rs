use rand::seq::SliceRandom;
use rand::Rng;
use uepq::channel::{substream, Bsc};
use uepq::harness::{run_point, ExperimentConfig, Policy, SchedulePoint, SpcDecoder};
use uepq::policy_adaptive::{bz_select_query, variance_reduction, Posterior};

const CELLS: usize = 64;
const EPS: f64 = 0.2;

fn reduction(p: &Posterior, members: impl Fn(usize) -> bool) -> f64 {
    let region: Vec<bool> = (0..p.cells()).map(members).collect();
    variance_reduction(p, &region, EPS).unwrap()
}

#[test]
fn median_split_maximizes_variance_reduction() {
    let p = Posterior::uniform(6).unwrap();
    let split = reduction(&p, |m| m >= CELLS / 2);
    let tol = 1e-15;

    // every union of two intervals holding half of the cells
    for a in 0..CELLS {
        for len_a in 1..=CELLS / 2 {
            if a + len_a > CELLS {
                break;
            }
            let len_b = CELLS / 2 - len_a;
            for b in a + len_a..=CELLS - len_b {
                let v = reduction(&p, |m| {
                    (a..a + len_a).contains(&m) || (b..b + len_b).contains(&m)
                });
                assert!(
                    v <= split + tol,
                    "[{a}, +{len_a}) u [{b}, +{len_b}): {v} > {split}"
                );
            }
        }
    }

    let mut rng = substream(31, &[]);
    let mut order: Vec<usize> = (0..CELLS).collect();
    for _ in 0..100_000 {
        order.shuffle(&mut rng);
        let mut region = vec![false; CELLS];
        order[..CELLS / 2].iter().for_each(|&m| region[m] = true);
        assert!(variance_reduction(&p, &region, EPS).unwrap() <= split + tol);
    }
}

#[test]
fn median_split_wins_on_uneven_posteriors() {
    // integer weights whose right half carries exactly half of the mass
    let mut rng = substream(32, &[]);
    for _ in 0..200 {
        let half: Vec<f64> = (0..4).map(|_| rng.gen_range(1..6) as f64).collect();
        let mut other: Vec<f64> = half.clone();
        other.shuffle(&mut rng);
        let raw: Vec<f64> = other.into_iter().chain(half).collect();
        let total: f64 = raw.iter().sum();
        let p = Posterior::from_masses(raw.iter().map(|w| w / total).collect()).unwrap();
        let split = reduction(&p, |m| m >= 4);
        for subset in 0u32..256 {
            let mass: f64 = (0..8)
                .filter(|&m| subset >> m & 1 == 1)
                .map(|m| raw[m])
                .sum();
            if mass * 2.0 != total {
                continue;
            }
            let v = reduction(&p, |m| subset >> m & 1 == 1);
            assert!(
                v <= split + 1e-15,
                "{raw:?} subset {subset:08b}: {v} > {split}"
            );
        }
    }
}

#[test]
fn bisection_queries_split_mass_in_half_on_average() {
    let ch = Bsc::new(0.3).unwrap();
    let mut rng = substream(33, &[]);
    let mut p = Posterior::uniform(5).unwrap();
    for _ in 0..40 {
        let draws = 4000;
        let tails: Vec<f64> = (0..=p.cells())
            .map(|t| p.masses()[t.min(p.cells())..].iter().sum())
            .collect();
        let mean: f64 = (0..draws)
            .map(|_| tails[bz_select_query(&p, &mut rng).threshold_index])
            .sum::<f64>()
            / draws as f64;
        assert!((mean - 0.5).abs() < 0.03, "mean queried mass {mean}");
        let q = bz_select_query(&p, &mut rng);
        p.update(q, rng.gen(), &ch).unwrap();
    }
}

#[test]
fn bisection_cost_falls_with_queries() {
    let cfg = ExperimentConfig {
        policies: vec![Policy::Bz],
        eps: 0.3,
        alpha: 0.1,
        points: vec![],
        trials: 1500,
        seed: 34,
        decoder: SpcDecoder::Sc,
        fixed_codebook: false,
    };
    let mut previous: Option<(f64, f64)> = None;
    for n in [20, 40, 80, 160] {
        let records = run_point(&cfg, Policy::Bz, SchedulePoint { n, k1: 8, k2: 0 }).unwrap();
        let costs: Vec<f64> = records.iter().map(|r| r.quantized_cost).collect();
        let mean = costs.iter().sum::<f64>() / costs.len() as f64;
        let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (costs.len() - 1) as f64;
        let se = (var / costs.len() as f64).sqrt();
        if let Some((m, s)) = previous {
            assert!(mean <= m + 3.0 * s.hypot(se), "n {n}: {mean} after {m}");
        }
        previous = Some((mean, se));
    }
}
