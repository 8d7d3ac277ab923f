use treepark::dist_solver::{de_map, eq_residual, flux_law, iterate_law_detailed, tail_rate};
use treepark::model::Model;

fn subcritical() -> Model {
    Model::geometric_poisson(0.325, 60, 30).unwrap()
}

#[test]
fn subcritical_law_matches_closed_forms() {
    let it = iterate_law_detailed(&subcritical(), 400, 10_000, 1e-13).unwrap();
    let law = &it.law;
    eprintln!("iters {} p0 {:.15} mean {:.12} defect {:e}", it.iterations, law.p0(), law.mean(), law.mass_defect());
    assert!((law.p0() - 0.675).abs() < 1e-10);
    let c_minus = (1.325 - 0.244375f64.sqrt()) / 2.0;
    assert!((law.mean() - c_minus).abs() < 1e-6);
    let flux_mean = flux_law(law).mean();
    assert!((flux_mean - (0.675 - 0.244375f64.sqrt()) / 2.0).abs() < 1e-6);
    let rho = tail_rate(law, 20).unwrap();
    eprintln!("rho {rho}");
    assert!(rho < 1.0 - 1e-3);
}

#[test]
fn fixed_point_and_functional_equation() {
    let m = subcritical();
    let tol = 1e-13;
    let it = iterate_law_detailed(&m, 400, 10_000, tol).unwrap();
    assert!(de_map(&m, &it.law).tv_distance(&it.law) < 10.0 * tol);
    for z in [0.2, 0.5, 0.9] {
        let r = eq_residual(&m, &it.law, z);
        assert!(r < 10.0 * (tol + it.law.mass_defect()), "z = {z}: residual {r:e}");
    }
    // Successive distances contract after the first step.
    assert!(it.distances.windows(2).skip(1).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
}

#[test]
fn critical_tail_rate_approaches_one() {
    let m = Model::geometric_poisson(2f64.sqrt() - 1.0, 60, 30).unwrap();
    let t = std::time::Instant::now();
    let it = iterate_law_detailed(&m, 400, 20_000, 1e-8).unwrap();
    let rho = tail_rate(&it.law, 100).unwrap();
    eprintln!("critical: iters {} rho {rho} time {:?}", it.iterations, t.elapsed());
    assert!((rho - 1.0).abs() < 0.02);
}
