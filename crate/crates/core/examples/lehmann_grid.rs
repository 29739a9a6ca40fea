//! Expected left loss E_θ[D(θ', δ)] across a grid of θ', from one replicate set.

use bregman_umvue::divergence::Orientation;
use bregman_umvue::estimators::{build_type1_umvue, Estimator};
use bregman_umvue::generators::Generator;
use bregman_umvue::models::Model;
use bregman_umvue::risk_lab::{lehmann_grid_check, McConfig};

fn main() -> bregman_umvue::Result<()> {
    let model = Model::exponential();
    let g = Generator::neg_log(1);
    let grid = [1.0, 1.5, 2.0, 2.5, 3.0];
    let mc = McConfig::new(200_000, 5);
    for e in [build_type1_umvue(&model, &g)?, Estimator::sample_mean()] {
        let r = lehmann_grid_check(&model, 2.0, &grid, 5, &e, &g, Orientation::Left, &mc)?;
        println!("{} (argmin θ' = {}):", e.id(), r.argmin_theta);
        for p in &r.points {
            println!("  θ' = {:<4} loss {:.5}  vs θ {:+.5} ± {:.5}", p.theta_prime, p.expected_loss, p.diff_vs_theta, p.diff_se);
        }
    }
    Ok(())
}
