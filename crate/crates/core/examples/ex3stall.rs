use unsatflow::assembly::{assemble_ls_mono, DiscreteState};
use unsatflow::linalg::factorize;
use unsatflow::mms::{ManufacturedCase, FINAL_TIME};
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

    // run the 19 good steps
    let (traj, _rep) = run_simulation(&p, &ic, &cfg, 19.0 * dt, dt).unwrap();
    let old = traj.last().unwrap().clone();
    let t_new = old.time + dt;
    let n = grid.num_cells();
    let delta = 5e-3;

    let mut cur = old.clone();
    cur.time = t_new;
    for it in 1..=14 {
        let sys = assemble_ls_mono(&cur, &old, dt, &p, cfg.l).unwrap();
        let x = factorize(&sys.matrix).unwrap().solve(&sys.rhs).unwrap();
        let prev = cur.to_vec();
        let mut mx = (0.0f64, 0usize);
        for (i, (a, b)) in x.iter().zip(&prev).enumerate() {
            if (a - b).abs() > mx.0 {
                mx = ((a - b).abs(), i);
            }
        }
        let cell = mx.1 % n;
        let (cx, cy) = grid.cell_centers[cell];
        let xi_old = (cur.theta[cell] - old.theta[cell]) / dt;
        let xi_new = (x[n + cell] - old.theta[cell]) / dt;
        println!(
            "it {it:2}: dmax {:9.3e} [{}] @ ({cx:.2},{cy:.2}) xi {:+9.4} -> {:+9.4} (band ±{delta}) theta {:+.4} -> {:+.4}",
            mx.0,
            ["psi", "theta", "conc"][mx.1 / n],
            xi_old,
            xi_new,
            cur.theta[cell],
            x[n + cell],
        );
        cur = DiscreteState::from_vec(&x, n, t_new);
    }
}
