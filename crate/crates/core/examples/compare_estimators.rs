//! Paired risk comparison on common random numbers: the full-sample type-I
//! UMVUE against the same rule applied to the first three observations.

use bregman_umvue::divergence::Orientation;
use bregman_umvue::estimators::{build_type1_umvue, Estimator};
use bregman_umvue::generators::Generator;
use bregman_umvue::models::Model;
use bregman_umvue::risk_lab::{compare_estimators, McConfig};

fn main() -> bregman_umvue::Result<()> {
    let model = Model::exponential();
    let g = Generator::neg_log(1);
    let umvue = build_type1_umvue(&model, &g)?;
    let partial = Estimator::first_k(3, &umvue);
    let mc = McConfig::new(200_000, 2);
    let r = compare_estimators(&model, 2.0, 5, &umvue, &partial, &g, Orientation::Left, &mc)?;
    println!(
        "risk {} = {:.5} ± {:.5}, risk {} = {:.5} ± {:.5}, paired difference {:.5} (z = {:.1})",
        r.estimator_1, r.risk_1, r.se_1, r.estimator_2, r.risk_2, r.se_2, r.difference, r.difference_z
    );
    Ok(())
}
