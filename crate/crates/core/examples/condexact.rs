use unsatflow::assembly::assemble_newton_mono;
use unsatflow::linalg::{cond1_mode, CondMode};
use unsatflow::mms::{ManufacturedCase, FINAL_TIME};
use unsatflow::build_grid;

fn main() {
    let case = ManufacturedCase::example(1).unwrap();
    for nx in [10usize, 20, 40] {
        let dt = FINAL_TIME / 25.0;
        let grid = build_grid(nx, nx).unwrap();
        let p = case.problem(grid.clone());
        let n = grid.num_cells();
        for step in [1usize, 19, 24] {
            let t = step as f64 * dt;
            let old = case.state_at(&grid, t - dt);
            let cur = case.state_at(&grid, t);
            let sys = assemble_newton_mono(&cur, &old, dt, &p).unwrap();
            let mut worst = (f64::INFINITY, 0usize);
            for i in 0..n {
                let mut c = 0.0;
                for (j, v) in sys.matrix.row(i) {
                    if j == n + i {
                        c = v;
                    }
                }
                if c / grid.cell_volume() < worst.0 {
                    worst = (c / grid.cell_volume(), i);
                }
            }
            let (x, y) = grid.cell_centers[worst.1];
            println!(
                "nx={nx:2} t={t:4.2}: cond {:9.2e}; worst mass theta-diag {:+6.2}V @({x:.2},{y:.2})",
                cond1_mode(&sys.matrix, CondMode::ForceEstimate),
                worst.0
            );
        }
    }
}
