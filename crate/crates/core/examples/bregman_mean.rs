//! The Bregman mean of a weighted point cloud and the two bias–variance
//! decompositions around it.

use bregman_umvue::divergence::{bregman_mean, decompose_left, decompose_right, uniform_weights};
use bregman_umvue::generators::Generator;

fn main() -> bregman_umvue::Result<()> {
    let points = [[0.5], [1.0], [4.0]];
    let w = uniform_weights(points.len());
    let theta = [1.2];
    for g in [Generator::squared_euclidean(1), Generator::neg_entropy(1), Generator::neg_log(1)] {
        let center = bregman_mean(&g, &points, &w)?;
        let l = decompose_left(&g, &theta, &points, &w)?;
        let r = decompose_right(&g, &theta, &points, &w)?;
        println!("{}: Bregman mean {:.6}", g.id(), center[0]);
        for d in [l, r] {
            println!(
                "  {:<5} total {:.6} = bias {:.6} + variance {:.6}  (residual {:.1e})",
                d.orientation.to_string(),
                d.total,
                d.bias_term,
                d.variance_term,
                d.residual()
            );
        }
    }
    Ok(())
}
