use unsatflow::assembly::{assemble_newton_mono, DiscreteState, KAveraging};
use unsatflow::linalg::{cond1_mode, factorize, CondMode};
use unsatflow::mms::{ManufacturedCase, FINAL_TIME};
use unsatflow::build_grid;

fn main() {
    let upstream = std::env::var("UPSTREAM").is_ok();
    let case = ManufacturedCase::example(1).unwrap();
    for nx in [20usize, 40] {
        let dt = FINAL_TIME / 25.0;
        let grid = build_grid(nx, nx).unwrap();
        let mut p = case.problem(grid.clone());
        if upstream {
            p.k_avg = KAveraging::Upstream;
        }
        let n = grid.num_cells();
        let old = case.initial_state(&grid);
        let mut cur = old.clone();
        cur.time = dt;
        println!("nx={nx} upstream={upstream}");
        for it in 1..=4 {
            let sys = assemble_newton_mono(&cur, &old, dt, &p).unwrap();
            // three most negative mass-row theta diagonals
            let mut diags: Vec<(f64, usize)> = (0..n)
                .map(|i| {
                    let mut c = 0.0;
                    for (j, v) in sys.matrix.row(i) {
                        if j == n + i {
                            c = v;
                        }
                    }
                    (c / grid.cell_volume(), i)
                })
                .collect();
            diags.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let show: Vec<String> = diags
                .iter()
                .take(3)
                .map(|&(v, i)| {
                    let (x, y) = grid.cell_centers[i];
                    format!("{v:+.2} @({x:.2},{y:.2})")
                })
                .collect();
            let f = match factorize(&sys.matrix) {
                Ok(f) => f,
                Err(e) => {
                    println!("  iter {it}: factorization failed: {e}");
                    break;
                }
            };
            let x = f.solve(&sys.rhs).unwrap();
            let mut mx = (0.0f64, 0usize);
            for (i, (a, b)) in x.iter().zip(&cur.to_vec()).enumerate() {
                if (a - b).abs() > mx.0 {
                    mx = ((a - b).abs(), i);
                }
            }
            let (block, cell) = (mx.1 / n, mx.1 % n);
            let (px, py) = grid.cell_centers[cell];
            println!(
                "  iter {it}: max incr {:.3e} in {} @({px:.2},{py:.2}); worst diags: {:?}; cond {:.2e}",
                mx.0,
                ["psi", "theta", "conc"][block],
                show,
                cond1_mode(&sys.matrix, CondMode::ForceEstimate)
            );
            if !x.iter().all(|v| v.is_finite() && v.abs() < 1e10) {
                println!("  diverged");
                break;
            }
            cur = DiscreteState::from_vec(&x, n, dt);
        }
    }
}
