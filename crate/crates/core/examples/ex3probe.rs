use unsatflow::mms::{ManufacturedCase, FINAL_TIME};
use unsatflow::solvers::{run_simulation, Coupling, LinKind, SchemeConfig};
use unsatflow::{build_grid, LParams};

fn main() {
    let case = ManufacturedCase::example(3).unwrap();
    let nx = 10;
    let dt = FINAL_TIME / 25.0;
    let grid = build_grid(nx, nx).unwrap();
    let mut p = case.problem(grid.clone());
    p.k_avg = unsatflow::assembly::KAveraging::Upstream;
    let ic = case.initial_state(&grid);

    for (label, coupling, lin, m, mlin) in [
        ("newton-mono", Coupling::Monolithic, LinKind::Newton, 0, 0),
        ("newton-nonlins", Coupling::NonlinearSplit, LinKind::Newton, 0, 0),
        ("newton-altlins", Coupling::AlternateSplit, LinKind::Newton, 0, 0),
        ("ls-mono", Coupling::Monolithic, LinKind::LScheme, 0, 0),
        ("ls-nonlins", Coupling::NonlinearSplit, LinKind::LScheme, 0, 0),
        ("ls-altlins", Coupling::AlternateSplit, LinKind::LScheme, 0, 0),
        ("ls-mono-aa2", Coupling::Monolithic, LinKind::LScheme, 2, 0),
        ("ls-nonlins-aa", Coupling::NonlinearSplit, LinKind::LScheme, 2, 5),
        ("ls-altlins-aa1", Coupling::AlternateSplit, LinKind::LScheme, 1, 0),
    ] {
        let mut cfg = SchemeConfig::new(coupling, lin);
        cfg.l = LParams::uniform(1.0);
        cfg.aa_m = m;
        cfg.aa_m_lin = mlin;
        cfg.record_condition = false;
        let (traj, rep) = run_simulation(&p, &ic, &cfg, FINAL_TIME, dt).unwrap();
        let fs = &rep.final_step_residuals;
        let k = fs.psi.len();
        let tail: Vec<String> = (k.saturating_sub(6)..k)
            .map(|i| format!("({:.1e},{:.1e},{:.1e})", fs.psi[i], fs.theta[i], fs.conc[i]))
            .collect();
        println!(
            "{label:>16}: total={:5} flow={:5} transp={:5} converged={} steps_done={} cause={:?}\n                  last increments: {}",
            rep.total_iterations(),
            rep.total_flow_iterations(),
            rep.total_transport_iterations(),
            rep.converged,
            traj.len() - 1,
            rep.failure,
            tail.join(" "),
        );
    }
}
