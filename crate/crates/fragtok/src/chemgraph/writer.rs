//! Deterministic SMILES emission.
//!
//! The walk starts at the atom with the smallest WL-refined label (ties by
//! original index) and visits neighbors in (label, index) order, so
//! isomorphic inputs produce equivalent strings without a full
//! canonicalization pass. Re-parsing the output yields a WL-equal graph.

use super::{implicit_h_for, Atom, BondOrder, Chirality, MolGraph, StereoKind};
use crate::wlhash;
use std::collections::{BTreeSet, HashMap};

pub fn write_smiles(mol: &MolGraph) -> String {
    if mol.atom_count() == 0 {
        return String::new();
    }
    Writer::new(mol).emit()
}

/// Side of a bond's `b` atom relative to its `a` atom, for directional marks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Up,
    Down,
}

impl Side {
    fn flipped(self) -> Side {
        match self {
            Side::Up => Side::Down,
            Side::Down => Side::Up,
        }
    }
}

struct Writer<'a> {
    mol: &'a MolGraph,
    rank: Vec<u128>,
    /// Tree parent bond per atom (usize::MAX at roots).
    parent_bond: Vec<usize>,
    /// Tree children (as bond indices) per atom, in emission order.
    children: Vec<Vec<usize>>,
    /// Ring (non-tree) bonds opening at each atom, in emission order.
    ring_opens: Vec<Vec<usize>>,
    /// Ring bonds closing at each atom.
    ring_closes: Vec<Vec<usize>>,
    /// For each ring bond: the atom where it opens.
    open_atom: HashMap<usize, usize>,
    /// Emission order of every atom (DFS preorder).
    visit_order: Vec<usize>,
    /// Directional marks chosen for single bonds.
    marks: HashMap<usize, Side>,
    /// Ring digit assigned per ring bond during emission.
    digits: HashMap<usize, u16>,
}

impl<'a> Writer<'a> {
    fn new(mol: &'a MolGraph) -> Self {
        let rank = wlhash::wl_refine(mol, wlhash::DEFAULT_ITERATIONS).per_node;
        let n = mol.atom_count();
        let mut writer = Writer {
            mol,
            rank,
            parent_bond: vec![usize::MAX; n],
            children: vec![Vec::new(); n],
            ring_opens: vec![Vec::new(); n],
            ring_closes: vec![Vec::new(); n],
            open_atom: HashMap::new(),
            visit_order: Vec::new(),
            marks: HashMap::new(),
            digits: HashMap::new(),
        };
        writer.build_tree();
        writer.assign_directions();
        writer
    }

    fn sorted_incident(&self, atom: usize) -> Vec<usize> {
        let mut bonds: Vec<usize> = self.mol.incident_bonds(atom).to_vec();
        bonds.sort_by_key(|&bi| {
            let other = self.mol.bond(bi).other(atom);
            (self.rank[other], other)
        });
        bonds
    }

    fn build_tree(&mut self) {
        let n = self.mol.atom_count();
        let mut roots: Vec<usize> = (0..n).collect();
        roots.sort_by_key(|&a| (self.rank[a], a));
        let mut visited = vec![false; n];
        let mut position = vec![usize::MAX; n];

        for root in roots {
            if visited[root] {
                continue;
            }
            let mut stack = vec![(root, usize::MAX)];
            while let Some((atom, via_bond)) = stack.pop() {
                if visited[atom] {
                    // Lost the race to another path: `via_bond` is a ring bond.
                    if via_bond != usize::MAX {
                        self.record_ring_bond(via_bond, &position);
                    }
                    continue;
                }
                visited[atom] = true;
                position[atom] = self.visit_order.len();
                self.visit_order.push(atom);
                self.parent_bond[atom] = via_bond;
                // Push in reverse so the smallest-ranked neighbor pops first.
                for &bi in self.sorted_incident(atom).iter().rev() {
                    if bi == via_bond {
                        continue;
                    }
                    let other = self.mol.bond(bi).other(atom);
                    if visited[other] {
                        if self.parent_bond[other] != bi {
                            self.record_ring_bond(bi, &position);
                        }
                    } else {
                        stack.push((other, bi));
                    }
                }
            }
        }

        // A DFS stack visits children in pop order; rebuild the child lists
        // in true emission order from the recorded parents.
        for &atom in &self.visit_order {
            let bond = self.parent_bond[atom];
            if bond != usize::MAX {
                let parent = self.mol.bond(bond).other(atom);
                self.children[parent].push(bond);
            }
        }
        for atom in 0..n {
            let rank = &self.rank;
            let mol = self.mol;
            let open_atom = &self.open_atom;
            self.children[atom].sort_by_key(|&bi| {
                let child = mol.bond(bi).other(atom);
                (rank[child], child)
            });
            self.ring_opens[atom].sort_by_key(|&bi| {
                let bond = mol.bond(bi);
                let close = if open_atom[&bi] == bond.a { bond.b } else { bond.a };
                position[close]
            });
        }
    }

    fn record_ring_bond(&mut self, bond_index: usize, position: &[usize]) {
        if self.open_atom.contains_key(&bond_index) {
            return;
        }
        let bond = self.mol.bond(bond_index);
        let (open, close) = if position[bond.a] <= position[bond.b] {
            (bond.a, bond.b)
        } else {
            (bond.b, bond.a)
        };
        self.open_atom.insert(bond_index, open);
        self.ring_opens[open].push(bond_index);
        self.ring_closes[close].push(bond_index);
    }

    /// Picks one single-bond carrier per end of each stereo double bond and
    /// 2-colors the carriers' up/down orientation so every constraint
    /// (cis → same side, trans → opposite) holds. Bonds whose constraints
    /// cannot be satisfied lose their marks and are re-solved without them.
    fn assign_directions(&mut self) {
        let stereo_bonds: Vec<usize> = (0..self.mol.bond_count())
            .filter(|&bi| self.mol.bond(bi).stereo.is_some())
            .collect();
        if stereo_bonds.is_empty() {
            return;
        }
        let mut dropped: BTreeSet<usize> = BTreeSet::new();
        'solve: loop {
            // carrier per (stereo bond, endpoint slot): (bond, far atom, adjust bit)
            let mut constraints: Vec<(usize, u8, usize, u8, bool)> = Vec::new();
            for &di in &stereo_bonds {
                if dropped.contains(&di) {
                    continue;
                }
                let bond = self.mol.bond(di);
                let stereo = bond.stereo.unwrap();
                let mut carriers = [None; 2];
                for (slot, (endpoint, reference)) in
                    [(bond.a, stereo.ref_a), (bond.b, stereo.ref_b)].into_iter().enumerate()
                {
                    carriers[slot] = self.pick_carrier(di, endpoint, reference);
                }
                let (Some((cu, adj_u)), Some((cv, adj_v))) = (carriers[0], carriers[1]) else {
                    dropped.insert(di);
                    continue 'solve;
                };
                constraints.push((cu, adj_u, cv, adj_v, stereo.kind == StereoKind::Trans));
            }

            // 2-color sideB over the carrier bonds.
            let mut assignment: HashMap<usize, bool> = HashMap::new();
            let mut adjacency: HashMap<usize, Vec<(usize, bool, usize)>> = HashMap::new();
            for (ci, &(cu, adj_u, cv, adj_v, trans)) in constraints.iter().enumerate() {
                let parity = trans ^ (adj_u != 0) ^ (adj_v != 0);
                adjacency.entry(cu).or_default().push((cv, parity, ci));
                adjacency.entry(cv).or_default().push((cu, parity, ci));
            }
            let mut order: Vec<usize> = adjacency.keys().copied().collect();
            order.sort_unstable();
            for start in order {
                if assignment.contains_key(&start) {
                    continue;
                }
                assignment.insert(start, false);
                let mut queue = std::collections::VecDeque::from([start]);
                while let Some(var) = queue.pop_front() {
                    let value = assignment[&var];
                    for &(next, parity, ci) in adjacency.get(&var).into_iter().flatten() {
                        let wanted = value ^ parity;
                        match assignment.get(&next) {
                            None => {
                                assignment.insert(next, wanted);
                                queue.push_back(next);
                            }
                            Some(&have) if have != wanted => {
                                // Unsatisfiable cycle: drop the offending
                                // stereo bond and start over.
                                let di = self.constraint_owner(&constraints, ci, &stereo_bonds, &dropped);
                                dropped.insert(di);
                                continue 'solve;
                            }
                            Some(_) => {}
                        }
                    }
                }
            }
            self.marks = assignment
                .into_iter()
                .map(|(bond, down)| (bond, if down { Side::Down } else { Side::Up }))
                .collect();
            return;
        }
    }

    fn constraint_owner(
        &self,
        _constraints: &[(usize, u8, usize, u8, bool)],
        constraint_index: usize,
        stereo_bonds: &[usize],
        dropped: &BTreeSet<usize>,
    ) -> usize {
        stereo_bonds
            .iter()
            .copied()
            .filter(|di| !dropped.contains(di))
            .nth(constraint_index)
            .expect("constraint indexes an active stereo bond")
    }

    /// Chooses the single bond that will carry the directional mark at
    /// `endpoint`, preferring the stored reference bond. Returns the bond
    /// and the adjust bit folded into the constraint parity.
    fn pick_carrier(
        &self,
        double_bond: usize,
        endpoint: usize,
        reference: usize,
    ) -> Option<(usize, u8)> {
        let mut candidates: Vec<usize> = self
            .mol
            .incident_bonds(endpoint)
            .iter()
            .copied()
            .filter(|&bi| bi != double_bond && self.mol.bond(bi).order == BondOrder::Single)
            .collect();
        candidates.sort_unstable();
        let preferred = candidates
            .iter()
            .copied()
            .find(|&bi| self.mol.bond(bi).other(endpoint) == reference);
        let carrier = preferred.or_else(|| candidates.first().copied())?;
        let bond = self.mol.bond(carrier);
        let far = bond.other(endpoint);
        let adjust = ((far == bond.a) as u8) ^ ((far != reference) as u8);
        Some((carrier, adjust))
    }

    fn emit(&mut self) -> String {
        let mut out = String::new();
        let mut free_digits: BTreeSet<u16> = BTreeSet::new();
        let mut next_digit: u16 = 1;
        let roots: Vec<usize> = self
            .visit_order
            .iter()
            .copied()
            .filter(|&a| self.parent_bond[a] == usize::MAX)
            .collect();
        for (i, root) in roots.into_iter().enumerate() {
            if i > 0 {
                out.push('.');
            }
            self.emit_atom(root, &mut out, &mut free_digits, &mut next_digit);
        }
        out
    }

    fn emit_atom(
        &mut self,
        atom: usize,
        out: &mut String,
        free_digits: &mut BTreeSet<u16>,
        next_digit: &mut u16,
    ) {
        out.push_str(&self.atom_token(atom));

        for &bi in &self.ring_closes[atom].clone() {
            let digit = self.digits[&bi];
            push_ring_digit(out, digit);
            free_digits.insert(digit);
        }
        for &bi in &self.ring_opens[atom].clone() {
            let digit = match free_digits.iter().next().copied() {
                Some(d) => {
                    free_digits.remove(&d);
                    d
                }
                None => {
                    let d = *next_digit;
                    *next_digit += 1;
                    d
                }
            };
            self.digits.insert(bi, digit);
            out.push_str(&self.bond_token(bi, atom));
            push_ring_digit(out, digit);
        }

        let kids = self.children[atom].clone();
        for (i, &bond) in kids.iter().enumerate() {
            let child = self.mol.bond(bond).other(atom);
            let last = i + 1 == kids.len();
            if !last {
                out.push('(');
            }
            out.push_str(&self.bond_token(bond, atom));
            self.emit_atom(child, out, free_digits, next_digit);
            if !last {
                out.push(')');
            }
        }
    }

    fn bond_token(&self, bond_index: usize, from_atom: usize) -> String {
        let bond = self.mol.bond(bond_index);
        match bond.order {
            BondOrder::Double => "=".to_string(),
            BondOrder::Triple => "#".to_string(),
            BondOrder::Aromatic => {
                if self.mol.atom(bond.a).aromatic && self.mol.atom(bond.b).aromatic {
                    String::new()
                } else {
                    ":".to_string()
                }
            }
            BondOrder::Single => {
                if let Some(&side) = self.marks.get(&bond_index) {
                    let from_is_a = from_atom == bond.a;
                    let ch = match (side, from_is_a) {
                        (Side::Up, true) | (Side::Down, false) => '/',
                        (Side::Down, true) | (Side::Up, false) => '\\',
                    };
                    ch.to_string()
                } else if self.mol.atom(bond.a).aromatic && self.mol.atom(bond.b).aromatic {
                    "-".to_string()
                } else {
                    String::new()
                }
            }
        }
    }

    fn atom_token(&self, index: usize) -> String {
        let atom = self.mol.atom(index);
        if atom.is_dummy() {
            return "*".to_string();
        }
        let symbol = bare_symbol(atom);
        if let Some(symbol) = symbol {
            let weighted = self.mol.bond_order_sum(index);
            let aromatic_env = atom.aromatic
                || self
                    .mol
                    .incident_bonds(index)
                    .iter()
                    .any(|&bi| self.mol.bond(bi).order == BondOrder::Aromatic);
            let predicted =
                implicit_h_for(atom.atomic_number, 0, aromatic_env, weighted);
            if atom.formal_charge == 0
                && atom.explicit_h == 0
                && atom.radical_electrons == 0
                && atom.chirality == Chirality::None
                && predicted == atom.implicit_h
            {
                return symbol;
            }
        }
        bracket_token(atom)
    }
}

fn push_ring_digit(out: &mut String, digit: u16) {
    if digit < 10 {
        out.push((b'0' + digit as u8) as char);
    } else {
        out.push('%');
        out.push_str(&format!("{digit:02}"));
    }
}

/// Organic-subset spelling if the atom can be written without brackets.
fn bare_symbol(atom: &Atom) -> Option<String> {
    let symbol = match (atom.atomic_number, atom.aromatic) {
        (5, false) => "B",
        (5, true) => "b",
        (6, false) => "C",
        (6, true) => "c",
        (7, false) => "N",
        (7, true) => "n",
        (8, false) => "O",
        (8, true) => "o",
        (9, false) => "F",
        (15, false) => "P",
        (15, true) => "p",
        (16, false) => "S",
        (16, true) => "s",
        (17, false) => "Cl",
        (35, false) => "Br",
        (53, false) => "I",
        _ => return None,
    };
    Some(symbol.to_string())
}

fn bracket_token(atom: &Atom) -> String {
    let mut out = String::from("[");
    let symbol = super::element_symbol(atom.atomic_number);
    if atom.aromatic {
        out.push_str(&symbol.to_lowercase());
    } else {
        out.push_str(symbol);
    }
    match atom.chirality {
        Chirality::None => {}
        Chirality::Ccw => out.push('@'),
        Chirality::Cw => out.push_str("@@"),
    }
    let h = atom.total_h();
    if h == 1 {
        out.push('H');
    } else if h > 1 {
        out.push_str(&format!("H{h}"));
    }
    let charge = atom.formal_charge;
    if charge == 1 {
        out.push('+');
    } else if charge == -1 {
        out.push('-');
    } else if charge > 1 {
        out.push_str(&format!("+{charge}"));
    } else if charge < -1 {
        out.push_str(&format!("-{}", -charge));
    }
    out.push(']');
    out
}
