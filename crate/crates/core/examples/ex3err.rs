use unsatflow::mms::{ManufacturedCase, FINAL_TIME};
use unsatflow::solvers::{run_simulation, Coupling, LinKind, SchemeConfig};
use unsatflow::{build_grid, error_norms, LParams};

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
    let (traj, rep) = run_simulation(&p, &ic, &cfg, FINAL_TIME, dt).unwrap();
    let counts: Vec<usize> = rep.steps.iter().map(|s| s.iterations).collect();
    println!("per-step: {counts:?}");
    println!("total {}", rep.total_iterations());
    let e = error_norms(&traj, &case, &grid, dt, FINAL_TIME).unwrap();
    println!("e_psi {:.3e} e_theta {:.3e} e_c {:.3e}", e.e_psi, e.e_theta, e.e_conc);
}
