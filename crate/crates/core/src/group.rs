//! Finite groups stored as full multiplication tables.
//!
//! Elements are the indices `0..order`. Every group the engine handles has
//! order at most a few dozen, so the table is the whole representation and no
//! presentation machinery is needed.

use std::fmt;

use serde::Serialize;

use crate::error::Error;

/// A finite group given by its Cayley table.
///
/// `table[a][b]` is the index of the product `a·b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    table: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
}

/// One violated group axiom, with a witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "axiom", rename_all = "snake_case")]
pub enum GroupViolation {
    /// The table is empty or not square.
    Shape { rows: usize, row: usize, len: usize },
    /// An entry is not a valid element index.
    OutOfRange { a: usize, b: usize, value: usize },
    /// No element acts as a two-sided identity.
    Identity { candidate: Option<usize>, witness: Option<usize> },
    /// `element` has no two-sided inverse.
    Inverse { element: usize },
    /// `(a·b)·c != a·(b·c)`.
    Associativity { a: usize, b: usize, c: usize },
}

impl fmt::Display for GroupViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupViolation::Shape { rows, row, len } => {
                write!(f, "table is not square: {rows} rows but row {row} has {len} entries")
            }
            GroupViolation::OutOfRange { a, b, value } => {
                write!(f, "entry {a}·{b} = {value} is not an element index")
            }
            GroupViolation::Identity { candidate: None, .. } => {
                write!(f, "no row of the table is the identity row")
            }
            GroupViolation::Identity { candidate: Some(e), witness } => {
                write!(f, "element {e} is not a two-sided identity (fails at {witness:?})")
            }
            GroupViolation::Inverse { element } => write!(f, "element {element} has no inverse"),
            GroupViolation::Associativity { a, b, c } => {
                write!(f, "associativity fails at ({a}, {b}, {c})")
            }
        }
    }
}

/// Outcome of [`validate_table`]: every violated axiom, once, with its first witness.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GroupReport {
    pub violations: Vec<GroupViolation>,
}

impl GroupReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a raw Cayley table against the group axioms.
pub fn validate_table(table: &[Vec<usize>]) -> GroupReport {
    let mut violations = Vec::new();
    let n = table.len();
    if n == 0 {
        violations.push(GroupViolation::Shape { rows: 0, row: 0, len: 0 });
        return GroupReport { violations };
    }
    for (row, entries) in table.iter().enumerate() {
        if entries.len() != n {
            violations.push(GroupViolation::Shape { rows: n, row, len: entries.len() });
            return GroupReport { violations };
        }
    }
    for (a, entries) in table.iter().enumerate() {
        if let Some((b, &value)) = entries.iter().enumerate().find(|(_, &v)| v >= n) {
            violations.push(GroupViolation::OutOfRange { a, b, value });
            return GroupReport { violations };
        }
    }

    // Left identity candidate: a row equal to 0..n.
    let candidate = (0..n).find(|&e| (0..n).all(|a| table[e][a] == a));
    match candidate {
        None => violations.push(GroupViolation::Identity { candidate: None, witness: None }),
        Some(e) => {
            if let Some(a) = (0..n).find(|&a| table[a][e] != a) {
                violations.push(GroupViolation::Identity { candidate: Some(e), witness: Some(a) });
            }
            if let Some(a) = (0..n).find(|&a| !(0..n).any(|b| table[a][b] == e && table[b][a] == e)) {
                violations.push(GroupViolation::Inverse { element: a });
            }
        }
    }

    'outer: for a in 0..n {
        for b in 0..n {
            let ab = table[a][b];
            for c in 0..n {
                if table[ab][c] != table[a][table[b][c]] {
                    violations.push(GroupViolation::Associativity { a, b, c });
                    break 'outer;
                }
            }
        }
    }
    GroupReport { violations }
}

impl FiniteGroup {
    /// Builds a group from a Cayley table, rejecting tables that are not groups.
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Self, Error> {
        let report = validate_table(&table);
        if let Some(v) = report.violations.first() {
            return Err(Error::InvalidGroup(v.to_string()));
        }
        let n = table.len();
        let identity = (0..n)
            .find(|&e| (0..n).all(|a| table[e][a] == a))
            .expect("validated table has an identity");
        let inverse = (0..n)
            .map(|a| (0..n).find(|&b| table[a][b] == identity).expect("validated inverse"))
            .collect();
        Ok(Self { table, identity, inverse })
    }

    /// The cyclic group `Z_n` under addition mod `n`.
    pub fn cyclic(n: usize) -> Result<Self, Error> {
        if n == 0 {
            return Err(Error::InvalidParameter("cyclic group order must be positive".into()));
        }
        let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        let inverse = (0..n).map(|a| (n - a) % n).collect();
        Ok(Self { table, identity: 0, inverse })
    }

    /// The trivial group.
    pub fn trivial() -> Self {
        Self { table: vec![vec![0]], identity: 0, inverse: vec![0] }
    }

    /// Direct product `self × other`; the pair `(a, b)` has index `a·|other| + b`.
    pub fn direct_product(&self, other: &FiniteGroup) -> FiniteGroup {
        let m = other.order();
        let n = self.order() * m;
        let table = (0..n)
            .map(|x| {
                let (a1, b1) = (x / m, x % m);
                (0..n)
                    .map(|y| {
                        let (a2, b2) = (y / m, y % m);
                        self.mul(a1, a2) * m + other.mul(b1, b2)
                    })
                    .collect()
            })
            .collect();
        let inverse = (0..n).map(|x| self.inv(x / m) * m + other.inv(x % m)).collect();
        FiniteGroup { table, identity: self.identity * m + other.identity, inverse }
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order()
    }

    /// Smallest `k ≥ 1` with `a^k = e`.
    pub fn element_order(&self, a: usize) -> usize {
        let mut k = 1;
        let mut power = a;
        while power != self.identity {
            power = self.mul(power, a);
            k += 1;
        }
        k
    }

    /// Re-runs the axiom scan on the stored table.
    pub fn validate(&self) -> GroupReport {
        validate_table(&self.table)
    }

    /// True when every element commutes with every other.
    pub fn is_abelian(&self) -> bool {
        self.elements().all(|a| self.elements().all(|b| self.mul(a, b) == self.mul(b, a)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_basics() {
        let z1 = FiniteGroup::cyclic(1).unwrap();
        assert_eq!(z1.order(), 1);
        assert_eq!(z1.identity(), 0);

        let z4 = FiniteGroup::cyclic(4).unwrap();
        assert_eq!(z4.inv(3), 1);

        let z2 = FiniteGroup::cyclic(2).unwrap();
        assert_eq!(z2.table(), &[vec![0, 1], vec![1, 0]]);

        assert!(matches!(FiniteGroup::cyclic(0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn products() {
        let z2 = FiniteGroup::cyclic(2).unwrap();
        let v4 = z2.direct_product(&z2);
        assert_eq!(v4.order(), 4);
        assert!(v4.elements().all(|a| v4.inv(a) == a));

        let z3 = FiniteGroup::cyclic(3).unwrap();
        let g = FiniteGroup::trivial().direct_product(&z3);
        assert_eq!(g, z3);

        let z6 = z2.direct_product(&z3);
        assert_eq!(z6.order(), 6);
        // (1,1) encodes as 1·3 + 1.
        assert_eq!(z6.element_order(4), 6);
        assert!(z6.validate().is_valid());
    }

    #[test]
    fn product_is_associative_up_to_reindexing() {
        let a = FiniteGroup::cyclic(2).unwrap();
        let b = FiniteGroup::cyclic(3).unwrap();
        let c = FiniteGroup::cyclic(2).unwrap();
        let left = a.direct_product(&b).direct_product(&c);
        let right = a.direct_product(&b.direct_product(&c));
        assert_eq!(left.order(), right.order());
        // ((x,y),z) = (x·3 + y)·2 + z and (x,(y,z)) = x·6 + y·2 + z coincide.
        assert_eq!(left, right);
    }

    #[test]
    fn defective_tables() {
        assert!(validate_table(&FiniteGroup::cyclic(4).unwrap().table).is_valid());

        let no_inverse = vec![vec![0, 1], vec![1, 1]];
        let report = validate_table(&no_inverse);
        assert!(report.violations.contains(&GroupViolation::Inverse { element: 1 }));

        let constant_row = vec![vec![0, 1], vec![0, 0]];
        let report = validate_table(&constant_row);
        assert!(!report.is_valid());
        assert!(matches!(report.violations[0], GroupViolation::Identity { .. }));

        assert!(FiniteGroup::from_table(no_inverse).is_err());
    }

    #[test]
    fn non_associative_latin_square() {
        // Latin square with identity 0 that is not associative (order 5 loop).
        let table = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        let report = validate_table(&table);
        let witness = report.violations.iter().find_map(|v| match v {
            GroupViolation::Associativity { a, b, c } => Some((*a, *b, *c)),
            _ => None,
        });
        let (a, b, c) = witness.expect("associativity violation");
        assert_ne!(table[table[a][b]][c], table[a][table[b][c]]);
    }

    #[test]
    fn axioms_hold_exhaustively() {
        let z2 = FiniteGroup::cyclic(2).unwrap();
        let z4 = FiniteGroup::cyclic(4).unwrap();
        for g in [z4.clone(), z2.direct_product(&z2), z4.direct_product(&z2)] {
            let e = g.identity();
            for a in g.elements() {
                assert_eq!(g.mul(e, a), a);
                assert_eq!(g.mul(a, e), a);
                assert_eq!(g.mul(a, g.inv(a)), e);
                for b in g.elements() {
                    for c in g.elements() {
                        assert_eq!(g.mul(g.mul(a, b), c), g.mul(a, g.mul(b, c)));
                    }
                }
            }
        }
    }
}
