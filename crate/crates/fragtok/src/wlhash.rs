//! Weisfeiler-Lehman label refinement and stable 128-bit molecule digests.
//!
//! Node labels start from the atom attributes, then each round hashes a
//! node's previous label together with the sorted multiset of
//! (bond label, neighbor label) pairs. The molecule digest hashes the sorted
//! multiset of converged node labels plus a canonicalized descriptor per
//! stereo double bond, so geometric isomers separate while the digest stays
//! invariant under atom renumbering.
//!
//! Digests are MurmurHash3 x64/128 over fixed little-endian serializations
//! (see [`crate::hash128`]); they are stable across runs and platforms.

use crate::chemgraph::{Atom, Bond, MolGraph, StereoKind};
use crate::hash128::{digest128, from_hex, to_hex};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Default refinement depth; token-dictionary keys always use this value.
pub const DEFAULT_ITERATIONS: u32 = 3;

/// A stable 128-bit structural digest, rendered as 32 lowercase hex chars.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MolDigest(u128);

impl MolDigest {
    /// All-zero sentinel (used for masked positions in emitted datasets).
    pub const ZERO: MolDigest = MolDigest(0);

    pub fn from_u128(value: u128) -> Self {
        MolDigest(value)
    }

    pub fn as_u128(self) -> u128 {
        self.0
    }

    pub fn hex(self) -> String {
        to_hex(self.0)
    }

    pub fn parse(hex: &str) -> Option<Self> {
        from_hex(hex).map(MolDigest)
    }
}

impl fmt::Display for MolDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hex())
    }
}

impl fmt::Debug for MolDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MolDigest({})", self.hex())
    }
}

impl Serialize for MolDigest {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.hex())
    }
}

impl<'de> Deserialize<'de> for MolDigest {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        MolDigest::parse(&text)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid digest '{text}'")))
    }
}

/// Per-node labels after `iteration` rounds of refinement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WlLabels {
    pub per_node: Vec<u128>,
    pub iteration: u32,
}

/// Seed label of an atom: (Z, hybridization, radical electrons, total H,
/// formal charge, aromatic, dummy flag).
pub fn atom_seed_label(atom: &Atom) -> u128 {
    let bytes = [
        b'A',
        atom.atomic_number,
        match atom.hybridization {
            crate::chemgraph::Hybridization::Sp => 1,
            crate::chemgraph::Hybridization::Sp2 => 2,
            crate::chemgraph::Hybridization::Sp3 => 3,
            crate::chemgraph::Hybridization::Unspecified => 0,
        },
        atom.radical_electrons,
        atom.total_h(),
        atom.formal_charge as u8,
        atom.aromatic as u8,
        atom.is_dummy() as u8,
    ];
    digest128(&bytes)
}

/// Bond label: (order, conjugation, stereo kind, ring membership).
pub fn bond_label(bond: &Bond) -> u128 {
    let stereo = match bond.stereo.map(|s| s.kind) {
        None => 0u8,
        Some(StereoKind::Cis) => 1,
        Some(StereoKind::Trans) => 2,
    };
    let bytes = [
        b'B',
        bond.order.code(),
        bond.conjugated as u8,
        stereo,
        bond.in_ring as u8,
    ];
    digest128(&bytes)
}

/// Bond label used inside refinement: stereo collapsed to a presence bit.
///
/// The cis/trans reading of a stored stereo spec depends on which neighbors
/// serve as references, so it is only meaningful after canonicalization;
/// feeding it into per-node labels raw would make digests depend on the
/// spelling of the input. The refined labels carry stereo presence, and the
/// final molecule digest appends canonical stereo descriptors.
fn bond_label_structural(bond: &Bond) -> u128 {
    let bytes = [
        b'S',
        bond.order.code(),
        bond.conjugated as u8,
        bond.stereo.is_some() as u8,
        bond.in_ring as u8,
    ];
    digest128(&bytes)
}

/// Runs `t` rounds of neighborhood refinement over the molecular graph.
pub fn wl_refine(mol: &MolGraph, t: u32) -> WlLabels {
    let mut labels: Vec<u128> = mol.atoms().iter().map(atom_seed_label).collect();
    let bond_labels: Vec<u128> = mol.bonds().iter().map(bond_label_structural).collect();
    let mut buf: Vec<u8> = Vec::new();
    let mut neighborhood: Vec<[u8; 32]> = Vec::new();
    for _ in 0..t {
        let mut next = Vec::with_capacity(labels.len());
        for atom in 0..mol.atom_count() {
            neighborhood.clear();
            for &bi in mol.incident_bonds(atom) {
                let other = mol.bond(bi).other(atom);
                let mut entry = [0u8; 32];
                entry[..16].copy_from_slice(&bond_labels[bi].to_le_bytes());
                entry[16..].copy_from_slice(&labels[other].to_le_bytes());
                neighborhood.push(entry);
            }
            neighborhood.sort_unstable();
            buf.clear();
            buf.push(b'R');
            buf.extend_from_slice(&labels[atom].to_le_bytes());
            for entry in &neighborhood {
                buf.extend_from_slice(entry);
            }
            next.push(digest128(&buf));
        }
        labels = next;
    }
    WlLabels {
        per_node: labels,
        iteration: t,
    }
}

/// Canonical per-stereo-bond descriptors, computed from converged labels.
///
/// Each descriptor re-reads the stored (reference, reference, kind) triple
/// against canonically chosen references — the max-labeled substituent on
/// each end — so equivalent spellings of the same geometry agree. A tie
/// between the two substituents on an end means the stereo is vacuous and
/// the descriptor is skipped.
fn stereo_descriptors(mol: &MolGraph, labels: &[u128]) -> Vec<[u8; 65]> {
    let mut out = Vec::new();
    for bond in mol.bonds() {
        let Some(stereo) = bond.stereo else { continue };
        let mut arms: [Option<(u128, u128, bool)>; 2] = [None, None];
        for (slot, (endpoint, stored_ref)) in
            [(bond.a, stereo.ref_a), (bond.b, stereo.ref_b)].into_iter().enumerate()
        {
            let other_end = bond.other(endpoint);
            let mut candidates: Vec<usize> = mol
                .neighbors(endpoint)
                .filter(|&n| n != other_end)
                .collect();
            candidates.sort_by_key(|&n| std::cmp::Reverse(labels[n]));
            if candidates.is_empty()
                || (candidates.len() >= 2 && labels[candidates[0]] == labels[candidates[1]])
            {
                arms[slot] = None;
                break;
            }
            let canonical = candidates[0];
            arms[slot] = Some((labels[endpoint], labels[canonical], canonical != stored_ref));
        }
        let (Some((la, ra, flip_a)), Some((lb, rb, flip_b))) = (arms[0], arms[1]) else {
            continue;
        };
        let kind = if flip_a ^ flip_b {
            stereo.kind.flipped()
        } else {
            stereo.kind
        };
        let mut first = (la, ra);
        let mut second = (lb, rb);
        if first > second {
            std::mem::swap(&mut first, &mut second);
        }
        let mut entry = [0u8; 65];
        entry[..16].copy_from_slice(&first.0.to_le_bytes());
        entry[16..32].copy_from_slice(&first.1.to_le_bytes());
        entry[32..48].copy_from_slice(&second.0.to_le_bytes());
        entry[48..64].copy_from_slice(&second.1.to_le_bytes());
        entry[64] = match kind {
            StereoKind::Cis => 1,
            StereoKind::Trans => 2,
        };
        out.push(entry);
    }
    out.sort_unstable();
    out
}

/// Molecule/fragment digest at refinement depth `t`.
pub fn wl_hash_at(mol: &MolGraph, t: u32) -> MolDigest {
    let labels = wl_refine(mol, t).per_node;
    let mut sorted = labels.clone();
    sorted.sort_unstable();
    let mut buf = Vec::with_capacity(1 + 16 * sorted.len());
    buf.push(b'M');
    for label in &sorted {
        buf.extend_from_slice(&label.to_le_bytes());
    }
    buf.push(b'S');
    for descriptor in stereo_descriptors(mol, &labels) {
        buf.extend_from_slice(&descriptor);
    }
    MolDigest(digest128(&buf))
}

/// Molecule/fragment digest at the default depth.
pub fn wl_hash(mol: &MolGraph) -> MolDigest {
    wl_hash_at(mol, DEFAULT_ITERATIONS)
}

/// Digest equality at the default depth — the crate's working notion of
/// "same molecule".
pub fn wl_equal(a: &MolGraph, b: &MolGraph) -> bool {
    wl_hash(a) == wl_hash(b)
}

/// Generic refinement over an arbitrary labeled graph; used for
/// fragment-level role ids. Runs until the induced partition stabilizes or
/// `max_iters` rounds, whichever comes first.
pub fn refine_generic(
    seeds: &[u128],
    edges: &[(usize, usize, u128)],
    max_iters: usize,
) -> Vec<u128> {
    let n = seeds.len();
    let mut adjacency: Vec<Vec<(usize, u128)>> = vec![Vec::new(); n];
    for &(a, b, label) in edges {
        adjacency[a].push((b, label));
        adjacency[b].push((a, label));
    }
    let partition_signature = |labels: &[u128]| -> Vec<usize> {
        let mut sorted: Vec<u128> = labels.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        labels
            .iter()
            .map(|l| sorted.binary_search(l).unwrap())
            .collect()
    };

    let mut labels = seeds.to_vec();
    let mut signature = partition_signature(&labels);
    let mut buf: Vec<u8> = Vec::new();
    for _ in 0..max_iters {
        let mut next = Vec::with_capacity(n);
        for node in 0..n {
            let mut neighborhood: Vec<[u8; 32]> = adjacency[node]
                .iter()
                .map(|&(other, edge_label)| {
                    let mut entry = [0u8; 32];
                    entry[..16].copy_from_slice(&edge_label.to_le_bytes());
                    entry[16..].copy_from_slice(&labels[other].to_le_bytes());
                    entry
                })
                .collect();
            neighborhood.sort_unstable();
            buf.clear();
            buf.push(b'R');
            buf.extend_from_slice(&labels[node].to_le_bytes());
            for entry in &neighborhood {
                buf.extend_from_slice(entry);
            }
            next.push(digest128(&buf));
        }
        let next_signature = partition_signature(&next);
        let stable = next_signature == signature;
        labels = next;
        signature = next_signature;
        if stable {
            break;
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemgraph::parse_smiles;

    #[test]
    fn seed_labels_separate_attributes() {
        let sp3 = parse_smiles("CC").unwrap();
        let sp2 = parse_smiles("C=C").unwrap();
        assert_eq!(
            atom_seed_label(sp3.atom(0)),
            atom_seed_label(sp3.atom(1))
        );
        assert_ne!(
            atom_seed_label(sp3.atom(0)),
            atom_seed_label(sp2.atom(0))
        );
        let dummy = parse_smiles("*O").unwrap();
        assert_ne!(
            atom_seed_label(dummy.atom(0)),
            atom_seed_label(dummy.atom(1))
        );
    }

    #[test]
    fn bond_labels_separate_flags() {
        let chain = parse_smiles("CCCC").unwrap();
        let ring = parse_smiles("C1CCC1").unwrap();
        assert_eq!(bond_label(chain.bond(0)), bond_label(chain.bond(1)));
        assert_ne!(bond_label(chain.bond(0)), bond_label(ring.bond(0)));

        let cis = parse_smiles("C/C=C\\C").unwrap();
        let trans = parse_smiles("C/C=C/C").unwrap();
        let cis_double = cis.bonds().iter().find(|b| b.stereo.is_some()).unwrap();
        let trans_double = trans.bonds().iter().find(|b| b.stereo.is_some()).unwrap();
        assert_ne!(bond_label(cis_double), bond_label(trans_double));
    }

    #[test]
    fn refinement_separates_by_neighborhood() {
        let mol = parse_smiles("CCO").unwrap();
        let seeds = wl_refine(&mol, 0);
        assert_eq!(seeds.per_node[0], seeds.per_node[1]);
        let refined = wl_refine(&mol, 1);
        assert_ne!(refined.per_node[0], refined.per_node[1]);
    }

    #[test]
    fn benzene_carbons_stay_equivalent() {
        let mol = parse_smiles("c1ccccc1").unwrap();
        for t in 0..4 {
            let labels = wl_refine(&mol, t).per_node;
            assert!(labels.iter().all(|&l| l == labels[0]), "iteration {t}");
        }
    }

    #[test]
    fn relabeling_invariance() {
        assert_eq!(wl_hash(&parse_smiles("CCO").unwrap()), wl_hash(&parse_smiles("OCC").unwrap()));
    }

    #[test]
    fn geometric_isomers_differ() {
        let cis = wl_hash(&parse_smiles("C/C=C\\C").unwrap());
        let trans = wl_hash(&parse_smiles("C/C=C/C").unwrap());
        let plain = wl_hash(&parse_smiles("CC=CC").unwrap());
        assert_ne!(cis, trans);
        assert_ne!(cis, plain);
        assert_ne!(trans, plain);
    }

    #[test]
    fn equivalent_stereo_spellings_agree() {
        // Same trisubstituted geometry with the directional mark carried by
        // the other substituent of the left end: methyl opposite the right
        // methyl is the same shape as chlorine beside it.
        let a = wl_hash(&parse_smiles("C/C(Cl)=C/C").unwrap());
        let b = wl_hash(&parse_smiles("Cl\\C(C)=C/C").unwrap());
        assert_eq!(a, b);
        let different = wl_hash(&parse_smiles("C/C(Cl)=C\\C").unwrap());
        assert_ne!(a, different);
    }

    #[test]
    fn dangling_bond_counts_differ() {
        let one = wl_hash(&parse_smiles("C*").unwrap());
        let two = wl_hash(&parse_smiles("*C*").unwrap());
        let double = wl_hash(&parse_smiles("*=C").unwrap());
        assert_ne!(one, two);
        assert_ne!(one, double);
        assert_ne!(two, double);
    }

    #[test]
    fn digest_hex_round_trip() {
        let digest = wl_hash(&parse_smiles("CCO").unwrap());
        assert_eq!(MolDigest::parse(&digest.hex()), Some(digest));
        assert_eq!(digest.hex().len(), 32);
    }
}
