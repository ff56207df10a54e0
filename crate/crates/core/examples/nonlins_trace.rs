use unsatflow::assembly::{
    assemble_flow_subsystem, assemble_transport_subsystem, DiscreteState, Linearization,
};
use unsatflow::linalg::factorize;
use unsatflow::mms::{ManufacturedCase, FINAL_TIME};
use unsatflow::build_grid;

fn jac_res(sys: &unsatflow::LinearSystem, x: &[f64]) -> f64 {
    let ax = sys.matrix.matvec(x);
    let mut worst = 0.0f64;
    for i in 0..sys.dim() {
        let mut diag = 0.0;
        for (j, v) in sys.matrix.row(i) {
            if j == i {
                diag = v;
            }
        }
        worst = worst.max(((sys.rhs[i] - ax[i]) / diag).abs());
    }
    worst
}

fn main() {
    let case = ManufacturedCase::example(1).unwrap();
    let nx = 10;
    let dt = FINAL_TIME / 25.0;
    let grid = build_grid(nx, nx).unwrap();
    let p = case.problem(grid.clone());
    let n = grid.num_cells();
    let eps = 1e-6;
    let lin = Linearization::Newton;

    let mut state = case.initial_state(&grid);
    let (mut tot_f, mut tot_t) = (0usize, 0usize);
    for step in 1..=25 {
        let t_new = step as f64 * dt;
        let old = state.clone();
        let mut cur = old.clone();
        cur.time = t_new;
        let mut log = String::new();
        for pass in 1..=6 {
            // flow inner
            let mut psi = cur.psi.clone();
            let mut theta = cur.theta.clone();
            let mut nf = 0;
            loop {
                let it = DiscreteState::new(psi.clone(), theta.clone(), cur.conc.clone(), t_new);
                let sys =
                    assemble_flow_subsystem(&it, &old, dt, &p, &cur.conc, &cur.theta, &lin).unwrap();
                let mut x0 = psi.clone();
                x0.extend_from_slice(&theta);
                let d_est = jac_res(&sys, &x0);
                if nf == 0 {
                    log += &format!(" p{pass}[fent {d_est:.1e}");
                }
                if d_est <= eps {
                    break;
                }
                let x = factorize(&sys.matrix).unwrap().solve(&sys.rhs).unwrap();
                nf += 1;
                let dmax = x
                    .iter()
                    .zip(x0.iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                psi.copy_from_slice(&x[..n]);
                theta.copy_from_slice(&x[n..]);
                if dmax <= eps || nf > 50 {
                    break;
                }
            }
            // transport inner
            let mut conc = cur.conc.clone();
            let mut nt = 0;
            loop {
                let sys = assemble_transport_subsystem(
                    &conc, &cur.conc, &psi, &theta, &old, dt, t_new, &p, &lin,
                )
                .unwrap();
                let d_est = jac_res(&sys, &conc);
                if nt == 0 {
                    log += &format!(" tent {d_est:.1e}");
                    if d_est <= eps {
                        break;
                    }
                }
                let x = factorize(&sys.matrix).unwrap().solve(&sys.rhs).unwrap();
                nt += 1;
                let dmax =
                    x.iter().zip(conc.iter()).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
                conc = x;
                if step == 2 {
                    log += &format!(" tinc{nt}={dmax:.1e}");
                }
                if dmax <= eps || nt > 50 {
                    break;
                }
            }
            log += &format!(" nf{nf} nt{nt}]");
            tot_f += nf;
            tot_t += nt;
            let dpsi = psi.iter().zip(&cur.psi).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
            let dth =
                theta.iter().zip(&cur.theta).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
            let dc = conc.iter().zip(&cur.conc).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
            cur.psi = psi;
            cur.theta = theta;
            cur.conc = conc;
            if dpsi <= eps && dth <= eps && dc <= eps {
                break;
            }
        }
        if step <= 4 || step >= 22 || step % 6 == 0 {
            println!("step {step:2}:{log}");
        }
        state = cur;
    }
    println!("totals: flow {tot_f} transport {tot_t}");
}
