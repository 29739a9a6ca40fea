//! Exponential model under the negative-log generator: T/(n−1) is type-I
//! unbiased while the sample mean is only classically unbiased.

use bregman_umvue::divergence::Orientation;
use bregman_umvue::estimators::{build_type1_umvue, Estimator};
use bregman_umvue::generators::Generator;
use bregman_umvue::models::Model;
use bregman_umvue::risk_lab::{check_type1_unbiased, check_type2_unbiased, estimate_risk, McConfig};

fn main() -> bregman_umvue::Result<()> {
    let model = Model::exponential();
    let g = Generator::neg_log(1);
    let (theta, n) = (2.0, 5);
    let mc = McConfig::new(200_000, 1);
    for e in [build_type1_umvue(&model, &g)?, Estimator::classical(&model)] {
        let t1 = &check_type1_unbiased(&model, &[theta], n, &e, &g, &mc)?[0];
        let t2 = &check_type2_unbiased(&model, &[theta], n, &e, &mc)?[0];
        let risk = estimate_risk(&model, theta, n, &e, &g, Orientation::Left, &mc)?;
        println!(
            "{:<10} E∇φ(δ) = {:.4} (target {:.4}, {})  Eδ = {:.4} ({})  left risk {:.4} = {:.4} + {:.4}",
            e.id(),
            t1.mean,
            t1.target,
            t1.verdict,
            t2.mean,
            t2.verdict,
            risk.risk,
            risk.bias_term,
            risk.variance_term
        );
    }
    Ok(())
}
