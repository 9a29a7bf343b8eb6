use viscoshallow::assembly::{apply_update, assemble_residual, jacobian_blocks};
use viscoshallow::benchmarks::*;
use viscoshallow::constitutive::{PhysicalParams, RegVariant, RegularizationConfig};
use viscoshallow::newton::{newton_solve, NewtonConfig};

fn main() {
    let pd = PhysicalParams::new(1.0, 9.81, 0.0, 0.02, 0.2).unwrap();
    let rc = RegularizationConfig::new(RegVariant::Reg1, 1e2, 1e3).unwrap();
    let (mut setup, state0) = setup_dam_break(100, [1, 1, 1, 0], pd, rc).unwrap();
    let config = NewtonConfig::new(1e-5);
    // one converged step at gamma=1e2, then switch to gamma=5e2
    let (state1, st) = newton_solve(&state0, &state0, &setup, &config).unwrap();
    assert!(st.converged);
    setup.reg = setup.reg.with_gamma(5e2);

    let dt = 1e-5;
    let jac = jacobian_blocks(&state1, &state0, dt, &setup).unwrap();
    let n = setup.n_unknowns();
    let nb = setup.block_size();
    let (_, _, e_off) = setup.offsets();
    let delta = 1e-8;
    let mut worst: (f64, usize, usize, f64, f64) = (0.0, 0, 0, 0.0, 0.0);
    // FD over E-columns only (E dof of each element = slot e_off, m3 = 0)
    for el in 0..100 {
        let col = el * nb + e_off;
        let mut dir = vec![0.0; n];
        dir[col] = delta;
        let mut plus = state1.clone();
        apply_update(&mut plus, &dir, &setup);
        dir[col] = -delta;
        let mut minus = state1.clone();
        apply_update(&mut minus, &dir, &setup);
        let rp = assemble_residual(&plus, &state0, dt, &setup).unwrap();
        let rm = assemble_residual(&minus, &state0, dt, &setup).unwrap();
        for row in 0..n {
            let fd = (rp[row] - rm[row]) / (2.0 * delta);
            let an = jac.entry(row, col);
            let err = (fd - an).abs() / an.abs().max(1.0);
            if err > worst.0 {
                worst = (err, row, col, fd, an);
            }
        }
    }
    println!("worst E-column rel err: {:.3e} at row {} col {} (fd {:.6e} an {:.6e})", worst.0, worst.1, worst.2, worst.3, worst.4);

    // Also u-columns and h-columns (will include frozen-speed effects in flux rows)
    for (name, off) in [("h", 0usize), ("u", setup.basis_h.n_functions())] {
        let mut worst: (f64, usize, usize, f64, f64) = (0.0, 0, 0, 0.0, 0.0);
        for el in 0..100 {
            for j in 0..2 {
                let col = el * nb + off + j;
                let mut dir = vec![0.0; n];
                dir[col] = delta;
                let mut plus = state1.clone();
                apply_update(&mut plus, &dir, &setup);
                dir[col] = -delta;
                let mut minus = state1.clone();
                apply_update(&mut minus, &dir, &setup);
                let rp = assemble_residual(&plus, &state0, dt, &setup).unwrap();
                let rm = assemble_residual(&minus, &state0, dt, &setup).unwrap();
                for row in 0..n {
                    let fd = (rp[row] - rm[row]) / (2.0 * delta);
                    let an = jac.entry(row, col);
                    let err = (fd - an).abs() / an.abs().max(1.0);
                    if err > worst.0 {
                        worst = (err, row, col, fd, an);
                    }
                }
            }
        }
        println!("worst {name}-column rel err: {:.3e} at row {} col {} (fd {:.6e} an {:.6e})", worst.0, worst.1, worst.2, worst.3, worst.4);
    }
}
