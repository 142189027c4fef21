//! Bhattacharyya parameters, symmetric capacity, and polarization of the
//! synthesized channels of a BSC.

use std::sync::Arc;

use nested_polar::design::{estimate_index_params, EstimationMode};
use nested_polar::dmc::{bsc, Dmc, OutputAlphabet};
use nested_polar::AbelianGroup;

fn main() -> nested_polar::Result<()> {
    let w = bsc(0.25)?;
    println!(
        "BSC(0.25): Z_1 = {:.4}, I = {:.4}",
        w.z_params().z[1],
        w.symmetric_capacity()
    );

    // Z_4 input, output is the input mod 2: the subgroup {0, 2} is invisible.
    let g = Arc::new(AbelianGroup::new(&[4])?);
    let m2 = Dmc::from_fn(
        g.clone(),
        OutputAlphabet::from_names(&[("Y", 2)])?,
        |x, y| (x % 2 == y[0]) as u8 as f64,
    )?;
    let z = m2.z_params();
    let h = g.find_subgroup(&[0, 2])?;
    println!(
        "mod-2 over Z_4: Z_d = {:?}, Z^H({{0,2}}) = {:.4}, I = {:.4}",
        z.z,
        z.z_sub(&g, h),
        m2.symmetric_capacity()
    );

    let w = bsc(0.1)?;
    println!("BSC(0.1), capacity {:.4}", w.symmetric_capacity());
    for n in [6u32, 8, 10] {
        let p = estimate_index_params(&w, n, EstimationMode::MonteCarlo { trials: 2000 }, 1)?;
        let zs: Vec<f64> = p.z.iter().map(|r| r[1]).collect();
        let frac =
            |f: fn(f64) -> bool| zs.iter().filter(|&&z| f(z)).count() as f64 / zs.len() as f64;
        println!(
            "  N = {:5}: good {:.3}  unpolarized {:.3}  bad {:.3}",
            zs.len(),
            frac(|z| z < 0.01),
            frac(|z| (0.01..0.99).contains(&z)),
            frac(|z| z >= 0.99)
        );
    }
    Ok(())
}
