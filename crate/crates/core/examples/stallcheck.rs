use unsatflow::assembly::{assemble_newton_mono, DiscreteState};
use unsatflow::linalg::factorize;
use unsatflow::mms::{ManufacturedCase, FINAL_TIME};
use unsatflow::solvers::{run_simulation, Coupling, LinKind, SchemeConfig};
use unsatflow::{build_grid, LParams};

fn main() {
    let case = ManufacturedCase::example(1).unwrap();
    let nx = 20;
    let dt = FINAL_TIME / 25.0;
    let grid = build_grid(nx, nx).unwrap();
    let p = case.problem(grid.clone());
    let ic = case.initial_state(&grid);

    let mut cfg = SchemeConfig::new(Coupling::Monolithic, LinKind::Newton);
    cfg.l = LParams::uniform(0.1);
    let (traj, rep) = run_simulation(&p, &ic, &cfg, FINAL_TIME, dt).unwrap();
    println!("converged={} failure={:?} completed_steps={}", rep.converged, rep.failure, traj.len() - 1);
    for (k, s) in rep.steps.iter().enumerate() {
        println!("step {:2} (t = {:5.2}): iters {:3} converged {}", k + 1, (k + 1) as f64 * dt, s.iterations, s.converged);
    }

    // replay the failing step manually and localize the oscillation
    let old = traj.last().unwrap().clone();
    let t_new = old.time + dt;
    println!("\nreplaying step at t_new = {t_new}");
    let n = grid.num_cells();
    let mut cur = old.clone();
    cur.time = t_new;
    let mut prev_vec = cur.to_vec();
    for it in 1..=12 {
        let sys = assemble_newton_mono(&cur, &old, dt, &p).unwrap();
        let f = factorize(&sys.matrix).unwrap();
        let x = f.solve(&sys.rhs).unwrap();
        let mut dmax = (0.0f64, 0usize);
        for (i, (a, b)) in x.iter().zip(&prev_vec).enumerate() {
            if (a - b).abs() > dmax.0 {
                dmax = ((a - b).abs(), i);
            }
        }
        let (block, cell) = (dmax.1 / n, dmax.1 % n);
        let (cx, cy) = grid.cell_centers[cell];
        println!(
            "iter {it:2}: max increment {:.4e} in block {} at cell {} ({:.2},{:.2}); theta there: {:.6} -> {:.6}; psi: {:.6} -> {:.6}",
            dmax.0,
            ["psi", "theta", "conc"][block],
            cell,
            cx,
            cy,
            cur.theta[cell],
            x[n + cell],
            cur.psi[cell],
            x[cell],
        );
        prev_vec = x.clone();
        cur = DiscreteState::from_vec(&x, n, t_new);
    }
}
