use unsatflow::mms::{ManufacturedCase, FINAL_TIME};
use unsatflow::solvers::{run_simulation, Coupling, LinKind, SchemeConfig};
use unsatflow::{build_grid, error_norms, LParams};

fn main() {
    let mut base = ManufacturedCase::example(3).unwrap();
    if std::env::var("WIDE").is_ok() {
        base.delta = 0.05;
    }
    for (nx, div) in [(10usize, 25.0f64), (20, 50.0), (40, 100.0)] {
        let dt = FINAL_TIME / div;
        let grid = build_grid(nx, nx).unwrap();
        let p = base.problem(grid.clone());
        let ic = base.initial_state(&grid);
        let mut cfg = SchemeConfig::new(Coupling::Monolithic, LinKind::LScheme);
        cfg.l = LParams::uniform(1.0);
        cfg.record_condition = false;
        let (traj, rep) = run_simulation(&p, &ic, &cfg, FINAL_TIME, dt).unwrap();
        if !rep.converged {
            let fs = &rep.final_step_residuals;
            let k = fs.psi.len();
            let tail: Vec<String> = (k.saturating_sub(4)..k)
                .map(|i| format!("({:.1e},{:.1e},{:.1e})", fs.psi[i], fs.theta[i], fs.conc[i]))
                .collect();
            println!(
                "nx={nx}: FAILED after {} steps (t={:.2}) cause={:?} last increments {}",
                traj.len() - 1,
                (traj.len() - 1) as f64 * dt,
                rep.failure,
                tail.join(" ")
            );
            continue;
        }
        let e = error_norms(&traj, &base, &grid, dt, FINAL_TIME).unwrap();
        println!(
            "nx={nx:2} dt=T/{div:3}: iters {:5}  e_psi {:.3e} e_theta {:.3e} e_c {:.3e}",
            rep.total_iterations(),
            e.e_psi,
            e.e_theta,
            e.e_conc
        );
    }
}
