use crate::archspace::{ArchDag, SpaceKind, SpaceSpec, Wiring};

/// Length of [`flatten_for_mlp`] vectors for `space`.
pub fn flat_len(space: &SpaceSpec) -> usize {
    let v = space.max_nodes;
    let n = space.op_choices().len();
    match (space.kind, space.wiring) {
        (SpaceKind::Oon, _) => v * v + v * space.vocab_size(),
        (SpaceKind::Ooe, Wiring::FixedInDegree) => {
            (v - space.num_inputs) * space.max_in_degree * (v + n)
        }
        (SpaceKind::Ooe, _) => lower_pairs(space).len() * n,
    }
}

fn lower_pairs(space: &SpaceSpec) -> Vec<(usize, usize)> {
    (space.num_inputs..space.max_nodes)
        .flat_map(|dst| (0..dst).map(move |src| (dst, src)))
        .collect()
}

/// Fixed-length serialization used by the MLP encoder.
///
/// * OON: the `V×V` adjacency (destination rows) followed by one one-hot
///   block over the full vocabulary per node; padded nodes are `none`.
/// * Complete or free OOE: one one-hot block over the operations per
///   lower-triangular `(dst, src)` pair, zero where there is no edge.
/// * Fixed in-degree OOE: per node and slot, a one-hot source followed by a
///   one-hot operation.
///
/// Node labels are used as-is, so isomorphic cells generally flatten to
/// different vectors.
pub fn flatten_for_mlp(arch: &ArchDag) -> Vec<f64> {
    let space = arch.space();
    let v = space.max_nodes;
    let choices = space.op_choices();
    let op_pos = |op: usize| choices.iter().position(|&c| c == op).expect("validated op");
    let mut out = vec![0.0; flat_len(space)];
    match (space.kind, space.wiring) {
        (SpaceKind::Oon, _) => {
            for e in arch.edges() {
                out[e.dst * v + e.src] = 1.0;
            }
            let k = space.vocab_size();
            for n in 0..v {
                let op = arch
                    .node_ops()
                    .get(n)
                    .copied()
                    .unwrap_or(space.none_token());
                out[v * v + n * k + op] = 1.0;
            }
        }
        (SpaceKind::Ooe, Wiring::FixedInDegree) => {
            let block = v + choices.len();
            for e in arch.edges() {
                let base = ((e.dst - space.num_inputs) * space.max_in_degree + e.slot) * block;
                out[base + e.src] = 1.0;
                out[base + v + op_pos(e.op)] = 1.0;
            }
        }
        (SpaceKind::Ooe, _) => {
            let pairs = lower_pairs(space);
            for e in arch.edges() {
                let p = pairs.iter().position(|&p| p == (e.dst, e.src)).unwrap();
                out[p * choices.len() + op_pos(e.op)] += 1.0;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::archspace::{isomorphic_variants, sample_random};

    #[test]
    fn lengths() {
        assert_eq!(flat_len(&SpaceSpec::nb201()), 30);
        let nb101 = SpaceSpec::nb101();
        assert_eq!(flat_len(&nb101), 49 + 7 * nb101.vocab_size());
        for spec in SpaceSpec::presets() {
            let s = Arc::new(spec);
            let a = sample_random(&s, 4).unwrap();
            assert_eq!(flatten_for_mlp(&a).len(), flat_len(&s));
        }
    }

    #[test]
    fn not_isomorphism_invariant() {
        let s = Arc::new(SpaceSpec::nb101());
        let a = ArchDag::oon_named(
            s,
            &["input", "conv3x3", "maxpool3x3", "output"],
            &[(0, 1), (0, 2), (1, 3), (2, 3)],
        )
        .unwrap();
        let vars = isomorphic_variants(&a).unwrap();
        assert_eq!(vars.len(), 2);
        assert_ne!(flatten_for_mlp(&vars[0]), flatten_for_mlp(&vars[1]));
    }
}
