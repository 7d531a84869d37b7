//! Scratch probe for desk-scale network density (not shipped behavior).
use qas_core::wsn::{partition, Network};

fn main() {
    for (ns, nch, w, h, r) in [
        (16usize, 3usize, 120.0, 30.0, 12.0),
        (16, 3, 140.0, 25.0, 12.0),
        (16, 3, 160.0, 20.0, 11.0),
        (16, 3, 180.0, 15.0, 12.0),
    ] {
        println!("== sensors={ns} ch={nch} area={w}x{h} R={r}");
        for seed in 0..12u64 {
            let Ok(net) = Network::random(ns, nch, w, h, r, 1.0, seed) else {
                continue;
            };
            for k in [2usize, 3] {
                let Ok(subs) = partition(&net, k, seed) else { continue };
                let sizes: Vec<usize> = subs.iter().map(|s| s.edges.len()).collect();
                let max = sizes.iter().max().copied().unwrap_or(0);
                if max <= 12 && net.edges.len() >= 14 {
                    println!(
                        "  seed {seed} k={k}: edges/cluster {sizes:?} total {} bs_reach {}",
                        net.edges.len(),
                        net.bs_reachable
                    );
                }
            }
        }
    }
}
