//! Valence and aromaticity checks.

use super::{allowed_valences, BondOrder, MolGraph};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SanitizeError {
    #[error("atom {atom} has valence {observed}, allowed {allowed:?}")]
    Valence {
        atom: usize,
        observed: i32,
        allowed: Vec<i32>,
    },
    #[error("aromatic bond {bond} joins non-aromatic atoms")]
    AromaticBondEndpoints { bond: usize },
    #[error("aromatic bond {bond} is not part of an aromatic ring")]
    AromaticBondOutsideRing { bond: usize },
    #[error("aromatic atom {atom} is not part of an aromatic ring")]
    AromaticAtomOutsideRing { atom: usize },
}

/// Checks every non-dummy atom's valence against the element/charge table
/// and, for dummy-free graphs, that aromatic notation forms rings.
///
/// Atoms in aromatic environments accept any of three bond-sum readings
/// (aromatic bonds as 1.5 rounded either way, or as plain sigma bonds); a
/// Kekulé assignment would pick one of them, and no kekulization pass
/// exists. Fragments (graphs containing dummy atoms) skip the ring checks,
/// since their broken bonds may complete rings elsewhere.
pub fn sanitize(mol: &MolGraph) -> Result<(), SanitizeError> {
    for (ai, atom) in mol.atoms().iter().enumerate() {
        if atom.is_dummy() {
            continue;
        }
        let weighted = mol.bond_order_sum(ai);
        let aromatic_env = atom.aromatic
            || mol
                .incident_bonds(ai)
                .iter()
                .any(|&bi| mol.bond(bi).order == BondOrder::Aromatic);
        let h = atom.total_h() as i32;
        let allowed = allowed_valences(atom.atomic_number, atom.formal_charge);
        let ok = if aromatic_env {
            let sigma: f64 = mol
                .incident_bonds(ai)
                .iter()
                .map(|&bi| match mol.bond(bi).order {
                    BondOrder::Aromatic => 1.0,
                    other => other.valence_weight(),
                })
                .sum();
            [
                weighted.floor() as i32,
                weighted.ceil() as i32,
                sigma.round() as i32,
            ]
            .iter()
            .any(|&sum| allowed.contains(&(sum + h)))
        } else {
            let observed = weighted.round() as i32 + h + atom.radical_electrons as i32;
            allowed.contains(&observed)
        };
        if !ok {
            return Err(SanitizeError::Valence {
                atom: ai,
                observed: weighted.ceil() as i32 + h,
                allowed,
            });
        }
    }

    let has_dummies = mol.atoms().iter().any(|a| a.is_dummy());
    if !has_dummies {
        check_aromatic_rings(mol)?;
    }
    Ok(())
}

/// Every aromatic bond must join aromatic atoms and lie on a cycle of the
/// aromatic-bond subgraph; every aromatic atom must sit on such a cycle.
fn check_aromatic_rings(mol: &MolGraph) -> Result<(), SanitizeError> {
    let aromatic_bond_indices: Vec<usize> = (0..mol.bond_count())
        .filter(|&bi| mol.bond(bi).order == BondOrder::Aromatic)
        .collect();
    let has_aromatic_atoms = mol.atoms().iter().any(|a| a.aromatic);
    if aromatic_bond_indices.is_empty() && !has_aromatic_atoms {
        return Ok(());
    }
    for &bi in &aromatic_bond_indices {
        let bond = mol.bond(bi);
        if !mol.atom(bond.a).aromatic || !mol.atom(bond.b).aromatic {
            return Err(SanitizeError::AromaticBondEndpoints { bond: bi });
        }
    }

    // Ring flags within the aromatic-only subgraph.
    let sub_bonds: Vec<super::Bond> = aromatic_bond_indices
        .iter()
        .map(|&bi| {
            let bond = mol.bond(bi);
            super::Bond::new(bond.a, bond.b, BondOrder::Aromatic)
        })
        .collect();
    let subgraph = MolGraph::new(mol.atoms().to_vec(), sub_bonds)
        .expect("aromatic subgraph reuses validated atoms and bonds");
    for (sub_bi, &orig_bi) in aromatic_bond_indices.iter().enumerate() {
        if !subgraph.bond(sub_bi).in_ring {
            return Err(SanitizeError::AromaticBondOutsideRing { bond: orig_bi });
        }
    }
    for (ai, atom) in mol.atoms().iter().enumerate() {
        if !atom.aromatic {
            continue;
        }
        let ring_aromatic_bonds = subgraph
            .incident_bonds(ai)
            .iter()
            .filter(|&&bi| subgraph.bond(bi).in_ring)
            .count();
        if ring_aromatic_bonds < 2 {
            return Err(SanitizeError::AromaticAtomOutsideRing { atom: ai });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::parse_smiles;
    use super::*;

    #[test]
    fn methane_ok() {
        assert_eq!(sanitize(&parse_smiles("C").unwrap()), Ok(()));
    }

    #[test]
    fn pentavalent_carbon_rejected() {
        let mol = parse_smiles("C(C)(C)(C)(C)C").unwrap();
        match sanitize(&mol) {
            Err(SanitizeError::Valence { atom: 0, observed, allowed }) => {
                assert_eq!(observed, 5);
                assert_eq!(allowed, vec![4]);
            }
            other => panic!("expected valence error, got {other:?}"),
        }
    }

    #[test]
    fn common_aromatics_ok() {
        for smiles in [
            "c1ccccc1",
            "c1ccncc1",
            "c1cc[nH]c1",
            "c1ccoc1",
            "c1ccsc1",
            "c1ccc2ccccc2c1",
            "Cc1ccccc1",
            "CN1C(=O)c2ccccc2C1c3ccccc3Cl",
        ] {
            let mol = parse_smiles(smiles).unwrap();
            assert_eq!(sanitize(&mol), Ok(()), "{smiles}");
        }
    }

    #[test]
    fn acyclic_aromatic_bond_rejected() {
        let mol = parse_smiles("cc").unwrap();
        assert!(matches!(
            sanitize(&mol),
            Err(SanitizeError::AromaticBondOutsideRing { .. })
                | Err(SanitizeError::AromaticAtomOutsideRing { .. })
        ));
    }

    #[test]
    fn fragments_skip_ring_checks() {
        let frag = parse_smiles("*:c(:*)").unwrap();
        assert_eq!(sanitize(&frag), Ok(()));
    }

    #[test]
    fn charged_species() {
        assert_eq!(sanitize(&parse_smiles("[NH4+]").unwrap()), Ok(()));
        assert_eq!(sanitize(&parse_smiles("C[O-]").unwrap()), Ok(()));
        assert_eq!(sanitize(&parse_smiles("[CH3]").unwrap()), Ok(()));
    }
}
