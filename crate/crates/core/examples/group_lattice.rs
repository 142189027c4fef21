//! Subgroup lattices, transversals and coset decompositions of small groups.

use nested_polar::AbelianGroup;

fn main() -> nested_polar::Result<()> {
    for factors in [vec![4], vec![2, 2], vec![2, 4], vec![6]] {
        let g = AbelianGroup::new(&factors)?;
        println!(
            "Z_{factors:?}: order {}, {} subgroups",
            g.order(),
            g.subgroups().len()
        );
        for id in g.subgroup_ids() {
            let members: Vec<String> = g
                .members_of(id)
                .iter()
                .map(|&e| format!("{:?}", g.tuple(e)))
                .collect();
            println!(
                "  H{} = {{{}}}  transversal {:?}",
                id.0,
                members.join(" "),
                g.transversal(id)
            );
        }
        println!("  additive transversals: {}", g.has_additive_transversals());
    }

    // Every element splits uniquely along a chain K <= H <= G.
    let g = AbelianGroup::new(&[4])?;
    let k = g.trivial();
    let h = g.find_subgroup(&[0, 2])?;
    for e in g.elements() {
        let (in_k, k_to_h, h_to_g) = g.coset_decompose(e, k, h)?;
        println!("{e} = {in_k} + {k_to_h} + {h_to_g}");
    }
    Ok(())
}
