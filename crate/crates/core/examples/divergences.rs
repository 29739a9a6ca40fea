//! Bregman divergences of the built-in generators, evaluated directly and
//! through the conjugate.

use bregman_umvue::divergence::{bregman_div, dual_transport};
use bregman_umvue::generators::GeneratorRegistry;

fn main() -> bregman_umvue::Result<()> {
    let registry = GeneratorRegistry::with_builtins(2);
    let (x, y) = ([1.5, 0.5], [0.8, 2.0]);
    println!("{:<12} {:>14} {:>14}", "generator", "D(x, y)", "dual route");
    for id in registry.ids() {
        let g = registry.get(id).unwrap();
        println!(
            "{:<12} {:>14.10} {:>14.10}",
            id,
            bregman_div(&g, &x, &y)?,
            dual_transport(&g, &x, &y)?
        );
    }
    Ok(())
}
