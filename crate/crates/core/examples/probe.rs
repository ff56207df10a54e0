use std::time::Instant;

use unsatflow::mms::{ManufacturedCase, FINAL_TIME};
use unsatflow::solvers::{run_simulation, Coupling, LinKind, SchemeConfig};
use unsatflow::{build_grid, error_norms, LParams};

fn main() {
    let case = ManufacturedCase::example(1).unwrap();
    let nx = 10;
    let dt = FINAL_TIME / 25.0;
    let grid = build_grid(nx, nx).unwrap();
    let mut p = case.problem(grid.clone());

    let ic = case.initial_state(&grid);

    for (label, coupling, lin) in [
        ("newton-mono", Coupling::Monolithic, LinKind::Newton),
        ("ls-mono", Coupling::Monolithic, LinKind::LScheme),
        ("newton-nonlins", Coupling::NonlinearSplit, LinKind::Newton),
        ("ls-nonlins", Coupling::NonlinearSplit, LinKind::LScheme),
        ("newton-altlins", Coupling::AlternateSplit, LinKind::Newton),
        ("ls-altlins", Coupling::AlternateSplit, LinKind::LScheme),
    ] {
        let mut cfg = SchemeConfig::new(coupling, lin);
        cfg.l = LParams::uniform(0.1);
        let t0 = Instant::now();
        let (traj, rep) = run_simulation(&p, &ic, &cfg, FINAL_TIME, dt).unwrap();
        let e = if rep.converged {
            let er = error_norms(&traj, &case, &grid, dt, FINAL_TIME).unwrap();
            format!("e_psi={:.3e} e_theta={:.3e} e_c={:.3e}", er.e_psi, er.e_theta, er.e_conc)
        } else {
            format!("FAILED: {:?}", rep.failure)
        };
        let per_step: Vec<usize> = rep.steps.iter().take(8).map(|s| s.iterations).collect();
        println!(
            "{label:>16}: total={:4} flow={:4} transp={:4} cond_full={:?} cond_flow={:?} cond_tr={:?} {:.2?} {e}",
            rep.total_iterations(),
            rep.total_flow_iterations(),
            rep.total_transport_iterations(),
            rep.cond_full.average().map(|v| format!("{v:.3e}")),
            rep.cond_flow.average().map(|v| format!("{v:.3e}")),
            rep.cond_transport.average().map(|v| format!("{v:.3e}")),
            t0.elapsed(),
        );
        println!("                  per-step iters: {per_step:?}");
        let fs = &rep.final_step_residuals;
        println!(
            "                  final-step res_psi: {:?}",
            fs.psi.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>()
        );
    }
}
