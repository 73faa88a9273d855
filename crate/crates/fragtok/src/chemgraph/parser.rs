//! Recursive-descent parser for the supported SMILES subset.
//!
//! Supported: organic-subset atoms B C N O P S F Cl Br I, aromatic lowercase
//! b c n o s p, bracket atoms (isotope ignored, `@`/`@@` stored as an
//! annotation, H count, charge), bonds `- = # :`, directional bonds `/ \`,
//! branches, ring closures (digits and `%nn`), dummy atoms `*`, and `.` as a
//! component separator. Anything else is rejected. Parsing stops at the
//! first whitespace, so `.smi` lines with trailing names are accepted.

use super::{
    allowed_valences, Atom, Bond, BondOrder, BondStereo, Chirality, GraphError, MolGraph,
    StereoKind,
};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesError {
    #[error("syntax error at {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unsupported feature at {position}: {message}")]
    Unsupported { position: usize, message: String },
}

impl SmilesError {
    fn syntax(position: usize, message: impl Into<String>) -> Self {
        SmilesError::Syntax {
            position,
            message: message.into(),
        }
    }

    fn unsupported(position: usize, message: impl Into<String>) -> Self {
        SmilesError::Unsupported {
            position,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Up,
    Down,
}

impl Direction {
    fn flipped(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct BondSpec {
    order: BondOrder,
    /// Direction as written, oriented from the bond's first atom to its second.
    direction: Option<Direction>,
    position: usize,
}

#[derive(Debug, Clone, Copy)]
struct PendingBond {
    a: usize,
    b: usize,
    order: BondOrder,
    direction: Option<Direction>,
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    /// Whether each atom was written without brackets (implicit-H eligible).
    bare: Vec<bool>,
    bonds: Vec<PendingBond>,
    last_atom: Option<usize>,
    pending: Option<BondSpec>,
    branch_stack: Vec<(Option<usize>, usize)>,
    ring_open: std::collections::HashMap<u16, (usize, Option<BondSpec>, usize)>,
}

pub fn parse_smiles(text: &str) -> Result<MolGraph, SmilesError> {
    let mut parser = Parser {
        bytes: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bare: Vec::new(),
        bonds: Vec::new(),
        last_atom: None,
        pending: None,
        branch_stack: Vec::new(),
        ring_open: std::collections::HashMap::new(),
    };
    parser.run()?;
    parser.finish()
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        if self.bytes.is_empty() {
            return Err(SmilesError::syntax(0, "empty input"));
        }
        while let Some(byte) = self.peek() {
            match byte {
                b' ' | b'\t' => break,
                b'(' => {
                    self.pos += 1;
                    let Some(last) = self.last_atom else {
                        return Err(SmilesError::syntax(self.pos - 1, "branch before any atom"));
                    };
                    if self.pending.is_some() {
                        return Err(SmilesError::syntax(self.pos - 1, "bond symbol before '('"));
                    }
                    self.branch_stack.push((Some(last), self.pos - 1));
                }
                b')' => {
                    self.pos += 1;
                    if let Some(spec) = self.pending {
                        return Err(SmilesError::syntax(spec.position, "dangling bond before ')'"));
                    }
                    match self.branch_stack.pop() {
                        Some((saved, _)) => self.last_atom = saved,
                        None => {
                            return Err(SmilesError::syntax(self.pos - 1, "unmatched ')'"));
                        }
                    }
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.pending.is_some() {
                        return Err(SmilesError::syntax(self.pos, "two bond symbols in a row"));
                    }
                    let (order, direction) = match byte {
                        b'-' => (BondOrder::Single, None),
                        b'=' => (BondOrder::Double, None),
                        b'#' => (BondOrder::Triple, None),
                        b':' => (BondOrder::Aromatic, None),
                        b'/' => (BondOrder::Single, Some(Direction::Up)),
                        _ => (BondOrder::Single, Some(Direction::Down)),
                    };
                    self.pending = Some(BondSpec {
                        order,
                        direction,
                        position: self.pos,
                    });
                    self.pos += 1;
                }
                b'.' => {
                    self.pos += 1;
                    if let Some(spec) = self.pending {
                        return Err(SmilesError::syntax(spec.position, "bond symbol before '.'"));
                    }
                    self.last_atom = None;
                }
                b'0'..=b'9' => {
                    let number = (byte - b'0') as u16;
                    self.pos += 1;
                    self.ring_closure(number)?;
                }
                b'%' => {
                    let start = self.pos;
                    self.pos += 1;
                    let d1 = self.bump();
                    let d2 = self.bump();
                    match (d1, d2) {
                        (Some(a), Some(b)) if a.is_ascii_digit() && b.is_ascii_digit() => {
                            let number = (a - b'0') as u16 * 10 + (b - b'0') as u16;
                            self.ring_closure(number)?;
                        }
                        _ => {
                            return Err(SmilesError::syntax(start, "'%' needs two digits"));
                        }
                    }
                }
                b'[' => {
                    let atom = self.parse_bracket_atom()?;
                    self.add_atom(atom, false)?;
                }
                b'*' => {
                    self.pos += 1;
                    self.add_atom(Atom::dummy(), true)?;
                }
                b'>' => {
                    return Err(SmilesError::unsupported(self.pos, "reaction SMILES"));
                }
                _ => {
                    let atom = self.parse_bare_atom()?;
                    self.add_atom(atom, true)?;
                }
            }
        }
        Ok(())
    }

    fn parse_bare_atom(&mut self) -> Result<Atom, SmilesError> {
        let start = self.pos;
        let byte = self.bump().expect("caller checked a byte is present");
        let (atomic_number, aromatic) = match byte {
            b'B' => {
                if self.peek() == Some(b'r') {
                    self.pos += 1;
                    (35, false)
                } else {
                    (5, false)
                }
            }
            b'C' => {
                if self.peek() == Some(b'l') {
                    self.pos += 1;
                    (17, false)
                } else {
                    (6, false)
                }
            }
            b'N' => (7, false),
            b'O' => (8, false),
            b'P' => (15, false),
            b'S' => (16, false),
            b'F' => (9, false),
            b'I' => (53, false),
            b'b' => (5, true),
            b'c' => (6, true),
            b'n' => (7, true),
            b'o' => (8, true),
            b's' => (16, true),
            b'p' => (15, true),
            b'H' => {
                return Err(SmilesError::syntax(start, "hydrogen must be bracketed"));
            }
            _ => {
                return Err(SmilesError::syntax(
                    start,
                    format!("unexpected character '{}'", byte as char),
                ));
            }
        };
        let mut atom = Atom::new(atomic_number);
        atom.aromatic = aromatic;
        Ok(atom)
    }

    fn parse_bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let start = self.pos;
        self.pos += 1; // consume '['

        // Isotope digits are parsed and discarded.
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }

        let sym_pos = self.pos;
        let first = self
            .bump()
            .ok_or_else(|| SmilesError::syntax(start, "unterminated bracket atom"))?;
        let (atomic_number, aromatic) = match first {
            b'*' => (0u8, false),
            b'H' => (1, false),
            b'B' => {
                if self.peek() == Some(b'r') {
                    self.pos += 1;
                    (35, false)
                } else {
                    (5, false)
                }
            }
            b'C' => {
                if self.peek() == Some(b'l') {
                    self.pos += 1;
                    (17, false)
                } else {
                    (6, false)
                }
            }
            b'N' => (7, false),
            b'O' => (8, false),
            b'P' => (15, false),
            b'S' => (16, false),
            b'F' => (9, false),
            b'I' => (53, false),
            b'b' => (5, true),
            b'c' => (6, true),
            b'n' => (7, true),
            b'o' => (8, true),
            b's' => (16, true),
            b'p' => (15, true),
            other if other.is_ascii_alphabetic() => {
                // Consume a trailing lowercase letter so the message names
                // the whole symbol.
                let mut symbol = (other as char).to_string();
                if matches!(self.peek(), Some(b'a'..=b'z')) {
                    symbol.push(self.bump().unwrap() as char);
                }
                return Err(SmilesError::unsupported(
                    sym_pos,
                    format!("element '{symbol}' outside supported subset"),
                ));
            }
            other => {
                return Err(SmilesError::syntax(
                    sym_pos,
                    format!("unexpected character '{}' in bracket atom", other as char),
                ));
            }
        };

        let mut atom = Atom::new(atomic_number);
        atom.aromatic = aromatic;

        if self.peek() == Some(b'@') {
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
                atom.chirality = Chirality::Cw;
            } else {
                atom.chirality = Chirality::Ccw;
            }
            if matches!(self.peek(), Some(b'A'..=b'Z')) {
                return Err(SmilesError::unsupported(
                    self.pos,
                    "extended chirality classes",
                ));
            }
        }

        if self.peek() == Some(b'H') {
            self.pos += 1;
            let mut count = 0u8;
            let mut saw_digit = false;
            while let Some(d @ b'0'..=b'9') = self.peek() {
                saw_digit = true;
                count = count
                    .checked_mul(10)
                    .and_then(|c| c.checked_add(d - b'0'))
                    .ok_or_else(|| SmilesError::syntax(self.pos, "hydrogen count overflow"))?;
                self.pos += 1;
            }
            atom.explicit_h = if saw_digit { count } else { 1 };
        }

        match self.peek() {
            Some(sign @ (b'+' | b'-')) => {
                self.pos += 1;
                let mut magnitude: i32 = 1;
                if let Some(d @ b'0'..=b'9') = self.peek() {
                    magnitude = (d - b'0') as i32;
                    self.pos += 1;
                } else {
                    while self.peek() == Some(sign) {
                        magnitude += 1;
                        self.pos += 1;
                    }
                }
                let signed = if sign == b'+' { magnitude } else { -magnitude };
                atom.formal_charge = i8::try_from(signed)
                    .map_err(|_| SmilesError::syntax(self.pos, "charge out of range"))?;
            }
            _ => {}
        }

        if self.peek() == Some(b':') {
            return Err(SmilesError::unsupported(self.pos, "atom maps"));
        }
        match self.bump() {
            Some(b']') => {}
            _ => {
                return Err(SmilesError::syntax(start, "unterminated bracket atom"));
            }
        }

        if atom.is_dummy() && (atom.explicit_h != 0 || atom.formal_charge != 0) {
            return Err(SmilesError::syntax(
                start,
                "dummy atoms carry no hydrogens or charge",
            ));
        }
        Ok(atom)
    }

    fn add_atom(&mut self, atom: Atom, bare: bool) -> Result<(), SmilesError> {
        let index = self.atoms.len();
        let aromatic = atom.aromatic;
        self.atoms.push(atom);
        self.bare.push(bare);
        if let Some(prev) = self.last_atom {
            let spec = self.pending.take();
            let (order, direction) = match spec {
                Some(spec) => (spec.order, spec.direction),
                None => (self.default_order(prev, aromatic), None),
            };
            self.bonds.push(PendingBond {
                a: prev,
                b: index,
                order,
                direction,
            });
        } else if let Some(spec) = self.pending.take() {
            return Err(SmilesError::syntax(spec.position, "bond before any atom"));
        }
        self.last_atom = Some(index);
        Ok(())
    }

    fn default_order(&self, prev: usize, new_aromatic: bool) -> BondOrder {
        if self.atoms[prev].aromatic && new_aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn ring_closure(&mut self, number: u16) -> Result<(), SmilesError> {
        let here = self.pos - 1;
        let Some(current) = self.last_atom else {
            return Err(SmilesError::syntax(here, "ring closure before any atom"));
        };
        let spec = self.pending.take();
        match self.ring_open.remove(&number) {
            None => {
                self.ring_open.insert(number, (current, spec, here));
            }
            Some((open_atom, open_spec, open_pos)) => {
                if open_atom == current {
                    return Err(SmilesError::syntax(here, "ring bond to the same atom"));
                }
                // Normalize the closing spec to the open→close orientation.
                let close_spec = spec.map(|mut s| {
                    s.direction = s.direction.map(Direction::flipped);
                    s
                });
                let order = match (open_spec.map(|s| s.order), close_spec.map(|s| s.order)) {
                    (Some(a), Some(b)) if a != b => {
                        return Err(SmilesError::syntax(here, "ring bond order mismatch"));
                    }
                    (Some(a), _) | (_, Some(a)) => a,
                    (None, None) => self.default_order(open_atom, self.atoms[current].aromatic),
                };
                let direction = match (
                    open_spec.and_then(|s| s.direction),
                    close_spec.and_then(|s| s.direction),
                ) {
                    (Some(a), Some(b)) if a != b => {
                        return Err(SmilesError::syntax(here, "ring bond direction mismatch"));
                    }
                    (Some(a), _) | (_, Some(a)) => Some(a),
                    (None, None) => None,
                };
                let _ = open_pos;
                self.bonds.push(PendingBond {
                    a: open_atom,
                    b: current,
                    order,
                    direction,
                });
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Result<MolGraph, SmilesError> {
        if let Some(spec) = self.pending {
            return Err(SmilesError::syntax(spec.position, "dangling bond at end"));
        }
        if let Some(&(_, pos)) = self.branch_stack.last() {
            return Err(SmilesError::syntax(pos, "unclosed '('"));
        }
        if let Some((&number, &(_, _, pos))) = self.ring_open.iter().next() {
            return Err(SmilesError::syntax(
                pos,
                format!("ring closure {number} never closed"),
            ));
        }
        if self.atoms.is_empty() {
            return Err(SmilesError::syntax(0, "no atoms"));
        }

        self.assign_hydrogens_and_radicals();
        let stereo = self.resolve_stereo()?;

        let bonds = self
            .bonds
            .iter()
            .enumerate()
            .map(|(bi, pending)| {
                let mut bond = Bond::new(pending.a, pending.b, pending.order);
                if let Some(s) = stereo.get(&bi) {
                    bond.stereo = Some(*s);
                }
                bond
            })
            .collect();
        MolGraph::new(self.atoms, bonds).map_err(|err| match err {
            GraphError::DuplicateBond { a, b } => {
                SmilesError::syntax(0, format!("duplicate bond between atoms {a} and {b}"))
            }
            other => SmilesError::syntax(0, other.to_string()),
        })
    }

    /// Implicit hydrogens for bare atoms: fill up to the smallest allowed
    /// valence. Aromatic environments use the 1.5-per-aromatic-bond sum
    /// rounded up. Bracket atoms get no implicit hydrogens; a hypovalent
    /// non-aromatic bracket atom is recorded as a radical instead.
    fn assign_hydrogens_and_radicals(&mut self) {
        let mut weighted = vec![0.0f64; self.atoms.len()];
        let mut has_aromatic_bond = vec![false; self.atoms.len()];
        for bond in &self.bonds {
            for end in [bond.a, bond.b] {
                weighted[end] += bond.order.valence_weight();
                if bond.order == BondOrder::Aromatic {
                    has_aromatic_bond[end] = true;
                }
            }
        }
        for (ai, atom) in self.atoms.iter_mut().enumerate() {
            if atom.is_dummy() {
                continue;
            }
            let aromatic_env = atom.aromatic || has_aromatic_bond[ai];
            if self.bare[ai] {
                atom.implicit_h = super::implicit_h_for(
                    atom.atomic_number,
                    atom.formal_charge,
                    aromatic_env,
                    weighted[ai],
                );
            } else if !aromatic_env {
                let observed = weighted[ai].round() as i32 + atom.explicit_h as i32;
                let allowed = allowed_valences(atom.atomic_number, atom.formal_charge);
                if let Some(v) = allowed.iter().copied().find(|&v| v >= observed) {
                    atom.radical_electrons = (v - observed) as u8;
                }
            }
        }
    }

    /// Turn directional single bonds into explicit-reference stereo specs on
    /// the double bonds they flank.
    fn resolve_stereo(
        &self,
    ) -> Result<std::collections::HashMap<usize, BondStereo>, SmilesError> {
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); self.atoms.len()];
        for (bi, bond) in self.bonds.iter().enumerate() {
            incident[bond.a].push(bi);
            incident[bond.b].push(bi);
        }

        // Side of neighbor `x` relative to endpoint `u`, for a directional
        // bond written `p/q` (direction oriented p→q): `u/x` puts x up,
        // `x/u` puts x down.
        let side_at = |bond: &PendingBond, u: usize| -> Direction {
            let dir = bond.direction.expect("directional bond");
            if bond.a == u {
                dir
            } else {
                dir.flipped()
            }
        };

        let mut out = std::collections::HashMap::new();
        for (bi, bond) in self.bonds.iter().enumerate() {
            if bond.order != BondOrder::Double {
                continue;
            }
            let mut refs: [Option<(usize, Direction)>; 2] = [None, None];
            for (slot, endpoint) in [bond.a, bond.b].into_iter().enumerate() {
                let mut sides: Vec<(usize, Direction)> = Vec::new();
                for &other_bi in &incident[endpoint] {
                    if other_bi == bi {
                        continue;
                    }
                    let other = &self.bonds[other_bi];
                    if other.direction.is_none() {
                        continue;
                    }
                    let neighbor = if other.a == endpoint { other.b } else { other.a };
                    sides.push((neighbor, side_at(other, endpoint)));
                }
                sides.sort_by_key(|&(n, _)| n);
                if sides.len() == 2 && sides[0].1 == sides[1].1 {
                    return Err(SmilesError::syntax(
                        0,
                        format!("conflicting directional bonds at atom {endpoint}"),
                    ));
                }
                refs[slot] = sides.first().copied();
            }
            if let (Some((ref_a, side_a)), Some((ref_b, side_b))) = (refs[0], refs[1]) {
                let kind = if side_a == side_b {
                    StereoKind::Cis
                } else {
                    StereoKind::Trans
                };
                out.insert(bi, BondStereo { ref_a, ref_b, kind });
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn methane() {
        let mol = parse_smiles("C").unwrap();
        assert_eq!(mol.atom_count(), 1);
        assert_eq!(mol.bond_count(), 0);
        assert_eq!(mol.atom(0).implicit_h, 4);
    }

    #[test]
    fn butene_with_stereo() {
        let mol = parse_smiles("C/C=C/C").unwrap();
        assert_eq!(mol.atom_count(), 4);
        let double = mol
            .bonds()
            .iter()
            .find(|b| b.order == BondOrder::Double)
            .unwrap();
        let stereo = double.stereo.unwrap();
        assert_eq!(stereo.kind, StereoKind::Trans);
        assert_eq!((stereo.ref_a, stereo.ref_b), (0, 3));

        let cis = parse_smiles("C/C=C\\C").unwrap();
        let double = cis
            .bonds()
            .iter()
            .find(|b| b.order == BondOrder::Double)
            .unwrap();
        assert_eq!(double.stereo.unwrap().kind, StereoKind::Cis);
    }

    #[test]
    fn dummy_double_bond() {
        let mol = parse_smiles("*=O").unwrap();
        assert_eq!(mol.atom_count(), 2);
        assert!(mol.atom(0).is_dummy());
        assert_eq!(mol.bond(0).order, BondOrder::Double);
        assert_eq!(mol.atom(1).implicit_h, 0);
    }

    #[test]
    fn benzene_hydrogens_and_rings() {
        let mol = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(mol.atom_count(), 6);
        assert_eq!(mol.bond_count(), 6);
        for atom in mol.atoms() {
            assert!(atom.aromatic);
            assert_eq!(atom.implicit_h, 1);
        }
        assert!(mol.bonds().iter().all(|b| b.in_ring));
        assert!(mol.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
    }

    #[test]
    fn pyridine_vs_pyrrole_nitrogens() {
        let pyridine = parse_smiles("c1ccncc1").unwrap();
        let n = pyridine.atoms().iter().find(|a| a.atomic_number == 7).unwrap();
        assert_eq!(n.total_h(), 0);

        let pyrrole = parse_smiles("c1cc[nH]c1").unwrap();
        let n = pyrrole.atoms().iter().find(|a| a.atomic_number == 7).unwrap();
        assert_eq!(n.total_h(), 1);
    }

    #[test]
    fn charges_and_h_counts() {
        let mol = parse_smiles("[NH4+]").unwrap();
        assert_eq!(mol.atom(0).formal_charge, 1);
        assert_eq!(mol.atom(0).explicit_h, 4);
        assert_eq!(mol.atom(0).implicit_h, 0);

        let mol = parse_smiles("C[O-]").unwrap();
        assert_eq!(mol.atom(1).formal_charge, -1);
        assert_eq!(mol.atom(1).total_h(), 0);

        let mol = parse_smiles("[Fe]");
        assert!(matches!(mol, Err(SmilesError::Unsupported { .. })));
    }

    #[test]
    fn methyl_radical() {
        let mol = parse_smiles("[CH3]").unwrap();
        assert_eq!(mol.atom(0).explicit_h, 3);
        assert_eq!(mol.atom(0).radical_electrons, 1);
        let plain = parse_smiles("C").unwrap();
        assert_eq!(plain.atom(0).radical_electrons, 0);
    }

    #[test]
    fn ring_closure_orders() {
        let mol = parse_smiles("C=1CCCCC=1").unwrap();
        assert!(mol.bonds().iter().any(|b| b.order == BondOrder::Double));
        assert!(matches!(
            parse_smiles("C=1CCCCC#1"),
            Err(SmilesError::Syntax { .. })
        ));
        assert!(matches!(
            parse_smiles("C1CC"),
            Err(SmilesError::Syntax { .. })
        ));
    }

    #[test]
    fn percent_ring_numbers() {
        let mol = parse_smiles("C%12CCCCC%12").unwrap();
        assert_eq!(mol.bond_count(), 6);
    }

    #[test]
    fn isotopes_ignored_and_maps_rejected() {
        let mol = parse_smiles("[13CH4]").unwrap();
        assert_eq!(mol.atom(0).atomic_number, 6);
        assert!(matches!(
            parse_smiles("[CH3:1]"),
            Err(SmilesError::Unsupported { .. })
        ));
    }

    #[test]
    fn component_separator() {
        let mol = parse_smiles("C.C").unwrap();
        assert_eq!(mol.atom_count(), 2);
        assert_eq!(mol.bond_count(), 0);
        assert_eq!(mol.connected_components(), 2);
    }

    #[test]
    fn reaction_smiles_rejected() {
        assert!(matches!(
            parse_smiles("C>>O"),
            Err(SmilesError::Unsupported { .. })
        ));
    }

    #[test]
    fn chirality_stored_as_annotation() {
        let mol = parse_smiles("N[C@@H](C)O").unwrap();
        assert_eq!(mol.atom(1).chirality, Chirality::Cw);
        assert_eq!(mol.atom(1).explicit_h, 1);
    }

    #[test]
    fn trailing_name_ignored() {
        let mol = parse_smiles("CCO ethanol").unwrap();
        assert_eq!(mol.atom_count(), 3);
    }
}
