use waxfront::conductivity::Conductivity;
use waxfront::outer;
use waxfront::solver::{run, SolverConfig};
use waxfront::sweep::interp_series;

fn main() {
    let k: f64 = std::env::args().nth(1).unwrap().parse().unwrap();
    let model = Conductivity::quadratic(0.0).unwrap();
    let t_end = if k == 2.0 { 8.0 } else { 6.0 };
    let sol = outer::integrate_h0(&model, k, t_end, 1e-4).unwrap();
    let mut sups = vec![];
    for eps in [0.02, 0.01] {
        let mut records = vec![];
        for nx in [81usize, 161] {
            let mut cfg = SolverConfig::new(model.clone(), k, eps);
            cfg.n_x = nx;
            if k == 2.0 {
                cfg.delta = Some(4.9e-3);
            }
            cfg.t_end = t_end;
            cfg.steady_tol = 1e-12;
            records.push(run(&cfg).unwrap());
        }
        let delta = records[0].params.delta;
        let mut sup = 0.0f64;
        let mut sup_t = 0.0;
        let n_probe = 4000;
        for i in 0..=n_probe {
            let t = 2.0 * delta + (t_end * 0.999 - 2.0 * delta) * i as f64 / n_probe as f64;
            let h_coarse = interp_series(&records[0].series, t).unwrap();
            let h_fine = interp_series(&records[1].series, t).unwrap();
            let h_extrap = 2.0 * h_fine - h_coarse;
            let gap = (h_extrap - sol.eval(t)).abs();
            if gap > sup {
                sup = gap;
                sup_t = t;
            }
        }
        println!("k={k} eps={eps}: richardson sup_gap={sup:.4e} at t={sup_t:.3}");
        sups.push(sup);
    }
    println!("k={k}: ratio = {:.3}", sups[0] / sups[1]);
}
