use unsatflow::mms::{ManufacturedCase, FINAL_TIME};
use unsatflow::solvers::{run_simulation, Coupling, LinKind, SchemeConfig};
use unsatflow::{build_grid, error_norms, LParams};

fn main() {
    let case = ManufacturedCase::example(3).unwrap();
    for (nx, div) in [(20usize, 50.0f64), (40, 100.0)] {
        let dt = FINAL_TIME / div;
        let grid = build_grid(nx, nx).unwrap();
        let p = case.problem(grid.clone());
        let ic = case.initial_state(&grid);
        for l in [0.5, 1.0, 2.0] {
            for m in [0usize, 1, 2] {
                let mut cfg = SchemeConfig::new(Coupling::Monolithic, LinKind::LScheme);
                cfg.l = LParams::uniform(l);
                cfg.aa_m = m;
                cfg.record_condition = false;
                let (traj, rep) = run_simulation(&p, &ic, &cfg, FINAL_TIME, dt).unwrap();
                let status = if rep.converged {
                    let e = error_norms(&traj, &case, &grid, dt, FINAL_TIME).unwrap();
                    format!(
                        "ok    iters {:5} e_psi {:.2e} e_theta {:.2e} e_c {:.2e}",
                        rep.total_iterations(),
                        e.e_psi,
                        e.e_theta,
                        e.e_conc
                    )
                } else {
                    format!("FAIL at step {} ({:?})", traj.len() - 1, rep.failure)
                };
                println!("nx={nx:2} L={l:3} m={m}: {status}");
            }
        }
    }
}
