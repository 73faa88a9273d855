//! Attributed molecular graphs, a SMILES subset parser/writer, and valence
//! sanitization. Everything else in the crate operates on [`MolGraph`].
//!
//! Graphs are immutable after construction: [`MolGraph::new`] validates the
//! atom/bond lists and computes the derived annotations (ring membership,
//! conjugation, hybridization) so that every live value satisfies the type's
//! invariants. All operations over finished graphs are pure functions.

mod parser;
mod sanitize;
mod writer;

pub use parser::parse_smiles;
pub use sanitize::{sanitize, SanitizeError};
pub use writer::write_smiles;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bond multiplicity. Aromatic is a first-class order (no kekulization pass
/// exists; aromaticity is taken from the input notation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Stable numeric code used in byte serializations and dataset files.
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(BondOrder::Single),
            2 => Some(BondOrder::Double),
            3 => Some(BondOrder::Triple),
            4 => Some(BondOrder::Aromatic),
            _ => None,
        }
    }

    /// Contribution to an atom's bond-order sum; aromatic bonds count 1.5.
    pub fn valence_weight(self) -> f64 {
        match self {
            BondOrder::Single => 1.0,
            BondOrder::Double => 2.0,
            BondOrder::Triple => 3.0,
            BondOrder::Aromatic => 1.5,
        }
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Hybridization {
    Sp,
    Sp2,
    Sp3,
    #[default]
    Unspecified,
}

/// Tetrahedral mark from the input (`@` / `@@`). Stored as an annotation
/// only: it is re-emitted verbatim and excluded from hashing.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Chirality {
    #[default]
    None,
    Ccw,
    Cw,
}

/// Cis/trans relation between the two reference neighbors of a double bond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StereoKind {
    Cis,
    Trans,
}

impl StereoKind {
    pub fn flipped(self) -> Self {
        match self {
            StereoKind::Cis => StereoKind::Trans,
            StereoKind::Trans => StereoKind::Cis,
        }
    }
}

/// Double-bond geometry, stored against two explicit reference atoms.
///
/// `ref_a` is a neighbor of the bond's first endpoint, `ref_b` of the second;
/// `kind` says whether those two references lie on the same side (`Cis`) or
/// opposite sides (`Trans`). Keeping explicit references (rather than a bare
/// cis/trans flag) makes the geometry survive fragmentation and welding,
/// where an atom's neighbor set changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BondStereo {
    pub ref_a: usize,
    pub ref_b: usize,
    pub kind: StereoKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    /// Atomic number; 0 marks a dummy atom (open attachment point).
    pub atomic_number: u8,
    pub formal_charge: i8,
    /// Hydrogens written explicitly (bracket `H` counts).
    pub explicit_h: u8,
    /// Hydrogens implied by the valence model for bare organic-subset atoms.
    pub implicit_h: u8,
    pub aromatic: bool,
    pub radical_electrons: u8,
    pub hybridization: Hybridization,
    pub chirality: Chirality,
}

impl Atom {
    pub fn new(atomic_number: u8) -> Self {
        Atom {
            atomic_number,
            formal_charge: 0,
            explicit_h: 0,
            implicit_h: 0,
            aromatic: false,
            radical_electrons: 0,
            hybridization: Hybridization::Unspecified,
            chirality: Chirality::None,
        }
    }

    /// Attachment-point placeholder: atomic number 0, no chemical attributes.
    pub fn dummy() -> Self {
        Atom::new(0)
    }

    pub fn is_dummy(&self) -> bool {
        self.atomic_number == 0
    }

    pub fn total_h(&self) -> u8 {
        self.explicit_h + self.implicit_h
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    /// Endpoint atom indices (distinct).
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    /// Derived: true iff the bond lies on a cycle. Computed on construction.
    pub in_ring: bool,
    /// Derived: see the conjugation rule in [`MolGraph::new`].
    pub conjugated: bool,
    pub stereo: Option<BondStereo>,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Self {
        Bond {
            a,
            b,
            order,
            in_ring: false,
            conjugated: false,
            stereo: None,
        }
    }

    pub fn with_stereo(mut self, stereo: BondStereo) -> Self {
        self.stereo = Some(stereo);
        self
    }

    /// The endpoint that is not `atom`. Panics if `atom` is not an endpoint.
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            debug_assert_eq!(self.b, atom);
            self.a
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("bond {bond} endpoint {atom} is out of range (atom count {atoms})")]
    EndpointOutOfRange { bond: usize, atom: usize, atoms: usize },
    #[error("bond {bond} connects atom {atom} to itself")]
    SelfBond { bond: usize, atom: usize },
    #[error("duplicate bond between atoms {a} and {b}")]
    DuplicateBond { a: usize, b: usize },
    #[error("stereo on bond {bond} requires a double bond")]
    StereoOnNonDouble { bond: usize },
    #[error("stereo reference {reference} on bond {bond} is not a neighbor of endpoint {endpoint}")]
    BadStereoReference { bond: usize, endpoint: usize, reference: usize },
    #[error("dummy atom {atom} carries chemical attributes")]
    DecoratedDummy { atom: usize },
}

/// An attributed molecular graph.
///
/// Hydrogens are not graph nodes; they live in the per-atom H counts.
#[derive(Debug, Clone, PartialEq)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// Per-atom list of incident bond indices.
    adjacency: Vec<Vec<usize>>,
}

impl MolGraph {
    /// Builds a graph, validating structure and computing the derived
    /// annotations. Ring membership, conjugation and hybridization supplied
    /// on the inputs are ignored and recomputed.
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, GraphError> {
        for (ai, atom) in atoms.iter().enumerate() {
            if atom.is_dummy()
                && (atom.implicit_h != 0
                    || atom.explicit_h != 0
                    || atom.formal_charge != 0
                    || atom.aromatic
                    || atom.radical_electrons != 0)
            {
                return Err(GraphError::DecoratedDummy { atom: ai });
            }
        }
        let mut seen = std::collections::HashSet::new();
        for (bi, bond) in bonds.iter().enumerate() {
            for endpoint in [bond.a, bond.b] {
                if endpoint >= atoms.len() {
                    return Err(GraphError::EndpointOutOfRange {
                        bond: bi,
                        atom: endpoint,
                        atoms: atoms.len(),
                    });
                }
            }
            if bond.a == bond.b {
                return Err(GraphError::SelfBond { bond: bi, atom: bond.a });
            }
            if !seen.insert((bond.a.min(bond.b), bond.a.max(bond.b))) {
                return Err(GraphError::DuplicateBond { a: bond.a, b: bond.b });
            }
            if let Some(stereo) = &bond.stereo {
                if bond.order != BondOrder::Double {
                    return Err(GraphError::StereoOnNonDouble { bond: bi });
                }
                for (endpoint, reference) in [(bond.a, stereo.ref_a), (bond.b, stereo.ref_b)] {
                    let is_neighbor = bonds
                        .iter()
                        .any(|other| {
                            (other.a == endpoint && other.b == reference)
                                || (other.b == endpoint && other.a == reference)
                        });
                    if !is_neighbor || reference == bond.other(endpoint) {
                        return Err(GraphError::BadStereoReference {
                            bond: bi,
                            endpoint,
                            reference,
                        });
                    }
                }
            }
        }

        let mut graph = MolGraph {
            adjacency: build_adjacency(atoms.len(), &bonds),
            atoms,
            bonds,
        };
        graph.compute_ring_flags();
        graph.compute_conjugation();
        graph.compute_hybridization();
        Ok(graph)
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom(&self, index: usize) -> &Atom {
        &self.atoms[index]
    }

    pub fn bond(&self, index: usize) -> &Bond {
        &self.bonds[index]
    }

    /// Indices of bonds incident to `atom`.
    pub fn incident_bonds(&self, atom: usize) -> &[usize] {
        &self.adjacency[atom]
    }

    pub fn neighbors(&self, atom: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[atom].iter().map(move |&b| self.bonds[b].other(atom))
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    /// The bond between `a` and `b`, if present.
    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a]
            .iter()
            .copied()
            .find(|&bi| self.bonds[bi].other(a) == b)
    }

    /// Sum of incident bond orders (aromatic = 1.5), excluding hydrogens.
    pub fn bond_order_sum(&self, atom: usize) -> f64 {
        self.adjacency[atom]
            .iter()
            .map(|&bi| self.bonds[bi].order.valence_weight())
            .sum()
    }

    pub fn is_connected(&self) -> bool {
        if self.atoms.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.atoms.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut visited = 1;
        while let Some(atom) = stack.pop() {
            for next in self.neighbors(atom) {
                if !seen[next] {
                    seen[next] = true;
                    visited += 1;
                    stack.push(next);
                }
            }
        }
        visited == self.atoms.len()
    }

    pub fn connected_components(&self) -> usize {
        let mut seen = vec![false; self.atoms.len()];
        let mut components = 0;
        for start in 0..self.atoms.len() {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(atom) = stack.pop() {
                for next in self.neighbors(atom) {
                    if !seen[next] {
                        seen[next] = true;
                        stack.push(next);
                    }
                }
            }
        }
        components
    }

    /// Bridge-finding DFS: a bond is in a ring iff it is not a bridge.
    fn compute_ring_flags(&mut self) {
        let n = self.atoms.len();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut timer = 0usize;
        // Iterative DFS; frames are (atom, parent bond, next adjacency slot).
        let mut stack: Vec<(usize, usize, usize)> = Vec::new();
        for bond in &mut self.bonds {
            bond.in_ring = false;
        }
        let mut ring = vec![false; self.bonds.len()];
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            stack.push((root, usize::MAX, 0));
            while !stack.is_empty() {
                let frame = stack.len() - 1;
                let (atom, parent_bond, slot) = stack[frame];
                if slot < self.adjacency[atom].len() {
                    stack[frame].2 += 1;
                    let bi = self.adjacency[atom][slot];
                    if bi == parent_bond {
                        continue;
                    }
                    let next = self.bonds[bi].other(atom);
                    if disc[next] == usize::MAX {
                        disc[next] = timer;
                        low[next] = timer;
                        timer += 1;
                        stack.push((next, bi, 0));
                    } else {
                        // Non-tree edge: closes a cycle.
                        low[atom] = low[atom].min(disc[next]);
                        ring[bi] = true;
                    }
                } else {
                    stack.pop();
                    if let Some(&(parent, _, _)) = stack.last() {
                        low[parent] = low[parent].min(low[atom]);
                        // A tree edge is a bridge iff low(child) > disc(parent).
                        if low[atom] <= disc[parent] {
                            ring[parent_bond] = true;
                        }
                    }
                }
            }
        }
        for (bi, flag) in ring.into_iter().enumerate() {
            self.bonds[bi].in_ring = flag;
        }
    }

    /// Conjugation rule (the input notation never specifies it):
    /// - aromatic bonds are conjugated;
    /// - a single bond is conjugated when one endpoint carries another
    ///   multiple/aromatic bond and the other endpoint either does too or is
    ///   a lone-pair donor (N, O, S);
    /// - a double/triple bond is conjugated when it shares an atom with an
    ///   aromatic bond or with a conjugated single bond.
    fn compute_conjugation(&mut self) {
        let has_other_multiple = |graph: &MolGraph, atom: usize, skip: usize| {
            graph.adjacency[atom].iter().any(|&bi| {
                bi != skip
                    && matches!(
                        graph.bonds[bi].order,
                        BondOrder::Double | BondOrder::Triple | BondOrder::Aromatic
                    )
            })
        };
        let lone_pair_donor =
            |graph: &MolGraph, atom: usize| matches!(graph.atoms[atom].atomic_number, 7 | 8 | 16);

        let mut conjugated = vec![false; self.bonds.len()];
        for (bi, bond) in self.bonds.iter().enumerate() {
            match bond.order {
                BondOrder::Aromatic => conjugated[bi] = true,
                BondOrder::Single => {
                    let a_multiple = has_other_multiple(self, bond.a, bi);
                    let b_multiple = has_other_multiple(self, bond.b, bi);
                    let a_capable = a_multiple || lone_pair_donor(self, bond.a);
                    let b_capable = b_multiple || lone_pair_donor(self, bond.b);
                    conjugated[bi] = a_capable && b_capable && (a_multiple || b_multiple);
                }
                BondOrder::Double | BondOrder::Triple => {}
            }
        }
        for (bi, bond) in self.bonds.iter().enumerate() {
            if matches!(bond.order, BondOrder::Double | BondOrder::Triple) {
                let adjacent_conjugated = [bond.a, bond.b].iter().any(|&atom| {
                    self.adjacency[atom].iter().any(|&other| {
                        other != bi
                            && (self.bonds[other].order == BondOrder::Aromatic
                                || (self.bonds[other].order == BondOrder::Single
                                    && conjugated[other]))
                    })
                });
                conjugated[bi] = adjacent_conjugated;
            }
        }
        for (bi, flag) in conjugated.into_iter().enumerate() {
            self.bonds[bi].conjugated = flag;
        }
    }

    /// Order-based assignment: triple or two doubles → sp, aromatic or one
    /// double → sp2, otherwise sp3. Dummies stay unspecified.
    fn compute_hybridization(&mut self) {
        for atom in 0..self.atoms.len() {
            if self.atoms[atom].is_dummy() {
                self.atoms[atom].hybridization = Hybridization::Unspecified;
                continue;
            }
            let mut doubles = 0;
            let mut triples = 0;
            let mut aromatic = self.atoms[atom].aromatic;
            for &bi in &self.adjacency[atom] {
                match self.bonds[bi].order {
                    BondOrder::Double => doubles += 1,
                    BondOrder::Triple => triples += 1,
                    BondOrder::Aromatic => aromatic = true,
                    BondOrder::Single => {}
                }
            }
            self.atoms[atom].hybridization = if triples > 0 || doubles >= 2 {
                Hybridization::Sp
            } else if doubles == 1 || aromatic {
                Hybridization::Sp2
            } else {
                Hybridization::Sp3
            };
        }
    }
}

fn build_adjacency(atom_count: usize, bonds: &[Bond]) -> Vec<Vec<usize>> {
    let mut adjacency = vec![Vec::new(); atom_count];
    for (bi, bond) in bonds.iter().enumerate() {
        adjacency[bond.a].push(bi);
        adjacency[bond.b].push(bi);
    }
    adjacency
}

/// Implicit hydrogens for a bare (unbracketed) atom: fill up to the smallest
/// allowed valence. In aromatic environments the bond-order sum counts
/// aromatic bonds as 1.5 and rounds up.
pub(crate) fn implicit_h_for(
    atomic_number: u8,
    charge: i8,
    aromatic_env: bool,
    weighted_sum: f64,
) -> u8 {
    let observed = if aromatic_env {
        weighted_sum.ceil() as i32
    } else {
        weighted_sum.round() as i32
    };
    allowed_valences(atomic_number, charge)
        .iter()
        .copied()
        .find(|&v| v >= observed)
        .map(|v| (v - observed) as u8)
        .unwrap_or(0)
}

/// Valence table. Charge shifts every allowed valence by the signed charge;
/// shifted values below zero are dropped.
pub fn allowed_valences(atomic_number: u8, charge: i8) -> Vec<i32> {
    let base: &[i32] = match atomic_number {
        1 => &[1],
        5 => &[3],
        6 => &[4],
        7 => &[3, 5],
        8 => &[2],
        9 | 17 | 35 | 53 => &[1],
        15 => &[3, 5],
        16 => &[2, 4, 6],
        _ => &[],
    };
    base.iter()
        .map(|v| v + charge as i32)
        .filter(|v| *v >= 0)
        .collect()
}

/// Element symbol for the supported subset; dummies render as `*`.
pub fn element_symbol(atomic_number: u8) -> &'static str {
    match atomic_number {
        0 => "*",
        1 => "H",
        5 => "B",
        6 => "C",
        7 => "N",
        8 => "O",
        9 => "F",
        15 => "P",
        16 => "S",
        17 => "Cl",
        35 => "Br",
        53 => "I",
        _ => "?",
    }
}

/// Standard atomic weights for the supported subset.
pub fn atomic_weight(atomic_number: u8) -> f64 {
    match atomic_number {
        0 => 0.0,
        1 => 1.008,
        5 => 10.811,
        6 => 12.011,
        7 => 14.007,
        8 => 15.999,
        9 => 18.998,
        15 => 30.974,
        16 => 32.065,
        17 => 35.453,
        35 => 79.904,
        53 => 126.904,
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(orders: &[BondOrder]) -> MolGraph {
        let atoms = (0..=orders.len()).map(|_| Atom::new(6)).collect();
        let bonds = orders
            .iter()
            .enumerate()
            .map(|(i, &order)| Bond::new(i, i + 1, order))
            .collect();
        MolGraph::new(atoms, bonds).unwrap()
    }

    #[test]
    fn rejects_self_and_duplicate_bonds() {
        let atoms = vec![Atom::new(6), Atom::new(6)];
        let err = MolGraph::new(atoms.clone(), vec![Bond::new(0, 0, BondOrder::Single)]);
        assert!(matches!(err, Err(GraphError::SelfBond { .. })));
        let err = MolGraph::new(
            atoms,
            vec![
                Bond::new(0, 1, BondOrder::Single),
                Bond::new(1, 0, BondOrder::Single),
            ],
        );
        assert!(matches!(err, Err(GraphError::DuplicateBond { .. })));
    }

    #[test]
    fn ring_flags_on_cycle_with_tail() {
        // Triangle with a pendant atom: the three cycle bonds are flagged,
        // the pendant bond is not.
        let atoms = (0..4).map(|_| Atom::new(6)).collect();
        let bonds = vec![
            Bond::new(0, 1, BondOrder::Single),
            Bond::new(1, 2, BondOrder::Single),
            Bond::new(2, 0, BondOrder::Single),
            Bond::new(2, 3, BondOrder::Single),
        ];
        let graph = MolGraph::new(atoms, bonds).unwrap();
        assert_eq!(
            graph.bonds().iter().map(|b| b.in_ring).collect::<Vec<_>>(),
            vec![true, true, true, false]
        );
    }

    #[test]
    fn conjugation_in_butadiene() {
        let graph = chain(&[BondOrder::Double, BondOrder::Single, BondOrder::Double]);
        assert!(graph.bonds().iter().all(|b| b.conjugated));
    }

    #[test]
    fn allene_is_not_conjugated() {
        let graph = chain(&[BondOrder::Double, BondOrder::Double]);
        assert!(graph.bonds().iter().all(|b| !b.conjugated));
        assert_eq!(graph.atom(1).hybridization, Hybridization::Sp);
    }

    #[test]
    fn isolated_double_bond_not_conjugated() {
        let graph = chain(&[BondOrder::Single, BondOrder::Double]);
        assert!(graph.bonds().iter().all(|b| !b.conjugated));
    }

    #[test]
    fn charge_shifts_valence() {
        assert_eq!(allowed_valences(7, 1), vec![4, 6]);
        assert_eq!(allowed_valences(8, -1), vec![1]);
        assert_eq!(allowed_valences(8, -2), vec![0]);
    }
}
