//! Designing a nested code from a degraded BSC pair, one encode/decode
//! round trip, and the JSON form of the design.

use std::sync::Arc;

use nested_polar::codec::Codec;
use nested_polar::design::{design_code, CodeSpec, DesignConfig, EstimationMode, Thresholds};
use nested_polar::dmc::{bsc, ChannelPair, Dmc, Kernel, Orientation, OutputAlphabet};
use nested_polar::AbelianGroup;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> nested_polar::Result<()> {
    let g = Arc::new(AbelianGroup::new(&[2])?);
    let out = OutputAlphabet::from_names(&[("dither", 2)])?;
    let mk = |p: f64| Dmc::new(g.clone(), out.clone(), bsc(p)?.table().to_vec());
    // Channel coding with state: the state channel is the noisier one.
    // BSC(0.2) is BSC(0.05) followed by BSC(1/6).
    let recipe = Kernel::from_fn(out.clone(), out.clone(), |a, b| {
        if a == b {
            5.0 / 6.0
        } else {
            1.0 / 6.0
        }
    })?;
    let pair = ChannelPair::new("T", mk(0.05)?, mk(0.2)?, Orientation::ChannelCoding, recipe)?;
    println!("degraded: {}", pair.verify_degradation()?.degraded);

    let cfg = DesignConfig {
        n: 10,
        thresholds: Thresholds {
            delta_c: 0.01,
            delta_s: 0.1,
        },
        mode: EstimationMode::MonteCarlo { trials: 2000 },
        seed: 3,
    };
    let spec = design_code(&pair, &cfg, 0)?;
    println!(
        "N = {}, rate {:.4}, message symbols {}",
        spec.len(),
        spec.rate(),
        spec.message_indices().len()
    );
    println!(
        "I(Wc) - I(Ws) = {:.4}",
        pair.wc.symmetric_capacity() - pair.ws.symmetric_capacity()
    );
    for ((h, k), idx) in spec.partition.cells() {
        println!("  cell (H{}, K{}): {} indices", h.0, k.0, idx.len());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut codec = Codec::new(&spec)?;
    let mut errors = 0;
    let trials = 100;
    for _ in 0..trials {
        let msg: Vec<usize> = spec
            .message_indices()
            .iter()
            .map(|_| rng.gen_range(0..2))
            .collect();
        // The encoder picks a codeword close to the dither; the receiver
        // sees that codeword through BSC(0.05).
        let enc = codec.encode(&spec, &spec.dither, Some(&msg), &mut rng)?;
        let x = codec.transform(&spec.group, &enc.a);
        let rx: Vec<usize> = x
            .iter()
            .map(|&xi| xi ^ rng.gen_bool(0.05) as usize)
            .collect();
        let dec = codec.decode(&spec, &rx, None)?;
        errors += (dec.message != msg) as usize;
    }
    println!("block errors: {errors}/{trials}");

    let json = spec.to_json()?;
    let back = CodeSpec::from_json(&json)?;
    println!(
        "JSON: {} bytes, round trip identical: {}",
        json.len(),
        back.to_json()? == json
    );
    Ok(())
}
