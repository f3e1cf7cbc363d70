use distmatch::lqg::{gain_gap, leqr, mm_lqg, random_lqg, riccati_lqr, scalar_benchmark};
use distmatch::mm::{extract_deterministic, mm_iterate, MMConfig, MmMode};
use distmatch::model::{CostModel, DiscreteProblem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SPACING: f64 = 0.1;
const HALF_WIDTH: i64 = 20;

fn grid(i: usize) -> f64 {
    (i as i64 - HALF_WIDTH) as f64 * SPACING
}

/// `x' = x + u` on a grid of spacing 0.1 over [-2, 2], clamped at the edges,
/// with `r = ½u²` and `r_T = ½x²`.
fn discretized_benchmark(x0: usize) -> (DiscreteProblem, CostModel) {
    let n = (2 * HALF_WIDTH + 1) as usize;
    let mut table = vec![0.0; n * n * n];
    for x in 0..n {
        for u in 0..n {
            let next = (x as i64 + u as i64 - HALF_WIDTH).clamp(0, 2 * HALF_WIDTH) as usize;
            table[(x * n + u) * n + next] = 1.0;
        }
    }
    let mut initial = vec![0.0; n];
    initial[x0] = 1.0;
    let problem = DiscreteProblem::time_invariant(n, n, initial, table, 1).unwrap();
    let stage = (0..n)
        .flat_map(|_| (0..n).map(|u| 0.5 * grid(u).powi(2)))
        .collect();
    let terminal = (0..n).map(|x| 0.5 * grid(x).powi(2)).collect();
    (problem, CostModel::new(vec![stage], terminal, 1.0).unwrap())
}

#[test]
fn tabular_mm_matches_continuous_gain() {
    let (dynamics, cost) = scalar_benchmark(0.0, 1).unwrap();
    let gain = riccati_lqr(&dynamics, &cost).unwrap().gains[0][(0, 0)];
    for x0 in [10, 14, 20, 23, 30] {
        let (problem, cost) = discretized_benchmark(x0);
        let config = MMConfig {
            max_iters: 300,
            ..MMConfig::default()
        };
        let trace = mm_iterate(&problem, &cost, MmMode::Soc, &config).unwrap();
        let u = grid(extract_deterministic(&trace.policy, 1.0).actions[0][x0]);
        // ties at half-grid targets resolve to either neighbour
        assert!(
            (u - gain * grid(x0)).abs() <= 0.5 * SPACING + 1e-9,
            "x = {}, u = {u}",
            grid(x0)
        );
    }
}

#[test]
fn mm_lqg_approaches_the_riccati_gains() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..5 {
        let (dynamics, cost) = random_lqg(&mut rng, 2, 2, 4).unwrap();
        let lqr = riccati_lqr(&dynamics, &cost).unwrap();
        let le = leqr(&dynamics, &cost).unwrap();
        let config = MMConfig {
            max_iters: 400,
            ..MMConfig::default()
        };
        for (alpha, target) in [(0.0, &lqr), (1.0, &le)] {
            let trace = mm_lqg(&dynamics, &cost, alpha, &config).unwrap();
            let gaps: Vec<f64> = [10, 100, 400]
                .iter()
                .map(|&k| gain_gap(&trace.iterates[k], target))
                .collect();
            assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "{gaps:?}");
            assert!(gaps[2] < 1e-2, "{gaps:?}");
        }
    }
}
