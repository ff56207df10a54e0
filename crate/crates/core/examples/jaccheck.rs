use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unsatflow::assembly::{assemble_flow_subsystem, residual_flow, DiscreteState, Linearization};
use unsatflow::build_grid;
use unsatflow::mms::ManufacturedCase;

fn main() {
    let case = ManufacturedCase::example(1).unwrap();
    let grid = build_grid(3, 3).unwrap();
    let p = case.problem(grid.clone());
    let n = grid.num_cells();
    let dt = 0.12;
    let t = 0.6;
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let old = case.state_at(&grid, t - dt);
    let mut it = case.state_at(&grid, t);
    for v in it.psi.iter_mut() {
        *v += rng.gen_range(-0.05..0.05);
    }
    for v in it.theta.iter_mut() {
        *v += rng.gen_range(-0.05..0.05);
    }

    let conc = it.conc.clone();
    let sys = assemble_flow_subsystem(&it, &old, dt, &p, &conc, &it.theta, &Linearization::Newton)
        .unwrap();

    // G(z): stacked (mass, closure) residuals at psi,theta = z
    let g = |z: &[f64]| -> Vec<f64> {
        let st = DiscreteState::new(z[..n].to_vec(), z[n..].to_vec(), conc.clone(), t);
        let fr = residual_flow(&st, &old, dt, &p).unwrap();
        let mut out = fr.mass;
        out.extend_from_slice(&fr.closure);
        out
    };

    let mut x0 = it.psi.clone();
    x0.extend_from_slice(&it.theta);

    // check 1: b - A x0 == -G(x0)
    let ax0 = sys.matrix.matvec(&x0);
    let g0 = g(&x0);
    let mut worst = (0.0f64, 0usize);
    for i in 0..2 * n {
        let lhs = sys.rhs[i] - ax0[i];
        let d = (lhs + g0[i]).abs();
        if d > worst.0 {
            worst = (d, i);
        }
    }
    println!("residual consistency: worst |(b - A x0) + G(x0)| = {:.3e} at row {}", worst.0, worst.1);

    // check 2: A v vs directional FD of G
    let h = 1e-6;
    for trial in 0..3 {
        let v: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xp: Vec<f64> = x0.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        let xm: Vec<f64> = x0.iter().zip(&v).map(|(a, b)| a - h * b).collect();
        let gp = g(&xp);
        let gm = g(&xm);
        let av = sys.matrix.matvec(&v);
        let mut worst = (0.0f64, 0usize, 0.0, 0.0);
        for i in 0..2 * n {
            let fd = (gp[i] - gm[i]) / (2.0 * h);
            let d = (av[i] - fd).abs();
            if d > worst.0 {
                worst = (d, i, av[i], fd);
            }
        }
        println!(
            "trial {trial}: worst |A v - FD| = {:.3e} at row {} (Av = {:.6e}, fd = {:.6e})",
            worst.0, worst.1, worst.2, worst.3
        );
    }
}
