use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unsatflow::assembly::{assemble_ls_mono, assemble_newton_mono};
use unsatflow::linalg::{cond1_mode, factorize, CondMode};
use unsatflow::mms::{ManufacturedCase, FINAL_TIME};
use unsatflow::{build_grid, LParams};

fn main() {
    let case = ManufacturedCase::example(1).unwrap();
    let nx = 40;
    let dt = FINAL_TIME / 25.0;
    let grid = build_grid(nx, nx).unwrap();
    let p = case.problem(grid.clone());
    let old = case.state_at(&grid, dt * 18.0);
    let cur = case.state_at(&grid, dt * 19.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    for (label, sys) in [
        ("newton", assemble_newton_mono(&cur, &old, dt, &p).unwrap()),
        ("ls    ", assemble_ls_mono(&cur, &old, dt, &p, LParams::uniform(0.1)).unwrap()),
    ] {
        let f = factorize(&sys.matrix).unwrap();
        let b: Vec<f64> = (0..sys.dim()).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
        let x = f.solve(&b).unwrap();
        let ax = sys.matrix.matvec(&x);
        let res = ax.iter().zip(&b).map(|(a, y)| (a - y).abs()).fold(0.0f64, f64::max);
        let xmax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!(
            "{label}: cond {:9.2e}; |Ax-b|_inf {:.2e}; |x|_inf {:.2e}; normA1 {:.2e}",
            cond1_mode(&sys.matrix, CondMode::ForceEstimate),
            res,
            xmax,
            sys.matrix.norm1()
        );
    }
}
