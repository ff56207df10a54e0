use unsatflow::mms::{theta_m, ManufacturedCase, FINAL_TIME};
use unsatflow::solvers::{run_simulation, Coupling, LinKind, SchemeConfig};
use unsatflow::{build_grid, LParams};

fn main() {
    let case = ManufacturedCase::example(3).unwrap();
    let nx = 10;
    let dt = FINAL_TIME / 25.0;
    let grid = build_grid(nx, nx).unwrap();
    let p = case.problem(grid.clone());
    let ic = case.initial_state(&grid);
    let mut cfg = SchemeConfig::new(Coupling::Monolithic, LinKind::LScheme);
    cfg.l = LParams::uniform(1.0);
    cfg.record_condition = false;
    let (traj, rep) = run_simulation(&p, &ic, &cfg, 19.0 * dt, dt).unwrap();
    println!("completed {} steps, converged={}", traj.len() - 1, rep.converged);
    let cell = grid.cell_index(5, 5).unwrap(); // (0.55, 0.55)
    for (k, st) in traj.iter().enumerate() {
        let t = st.time;
        let (x, y) = grid.cell_centers[cell];
        let e_max = grid
            .cell_centers
            .iter()
            .enumerate()
            .map(|(i, &(cx, cy))| (st.theta[i] - theta_m(cx, cy, t)).abs())
            .fold(0.0f64, f64::max);
        if k % 2 == 0 || k > 14 {
            println!(
                "t={t:5.2}: theta(cell)={:.4} exact={:.4} psi(cell)={:+.4}; max theta err {:.3e}",
                st.theta[cell],
                theta_m(x, y, t),
                st.psi[cell],
                e_max
            );
        }
    }
}
