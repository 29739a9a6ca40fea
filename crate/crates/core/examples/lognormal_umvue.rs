//! LogNormal model under negative entropy: the geometric mean is the type-I
//! UMVUE of the median θ.

use bregman_umvue::estimators::{build_type1_umvue, Estimator};
use bregman_umvue::generators::Generator;
use bregman_umvue::models::Model;
use bregman_umvue::risk_lab::{check_type1_unbiased, check_type2_unbiased, McConfig};

fn main() -> bregman_umvue::Result<()> {
    let model = Model::lognormal(0.25)?;
    let g = Generator::neg_entropy(1);
    let grid = [0.5, 1.0, std::f64::consts::E];
    let mc = McConfig::new(100_000, 3);
    for e in [build_type1_umvue(&model, &g)?, Estimator::classical(&model)] {
        for (a, b) in check_type1_unbiased(&model, &grid, 10, &e, &g, &mc)?
            .iter()
            .zip(check_type2_unbiased(&model, &grid, 10, &e, &mc)?)
        {
            println!(
                "{:<10} θ = {:.4}: type-I z {:>7.2} {}   type-II z {:>7.2} {}",
                e.id(),
                a.theta,
                a.z_score,
                a.verdict,
                b.z_score,
                b.verdict
            );
        }
    }
    Ok(())
}
