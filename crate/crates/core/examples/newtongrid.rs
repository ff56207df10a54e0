use unsatflow::mms::{ManufacturedCase, FINAL_TIME};
use unsatflow::solvers::{run_simulation, Coupling, LinKind, SchemeConfig};
use unsatflow::{build_grid, LParams};

fn main() {
    let case = ManufacturedCase::example(1).unwrap();
    for (nx, div) in [(10usize, 25.0f64), (10, 50.0), (10, 100.0), (20, 25.0), (40, 25.0)] {
        let dt = FINAL_TIME / div;
        let grid = build_grid(nx, nx).unwrap();
        let mut p = case.problem(grid.clone());

        let ic = case.initial_state(&grid);
        let mut cfg = SchemeConfig::new(Coupling::Monolithic, LinKind::Newton);
        cfg.l = LParams::uniform(0.1);
        cfg.record_condition = false;
        let (traj, rep) = run_simulation(&p, &ic, &cfg, FINAL_TIME, dt).unwrap();
        println!(
            "nx={nx:2} dt=T/{div:3}: total={:4} converged={} failed_at_step={:?} of {}",
            rep.total_iterations(),
            rep.converged,
            (!rep.converged).then(|| traj.len()),
            rep.steps.len()
        );
    }
}
