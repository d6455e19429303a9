//! Symmetric relations on the positive integers.
//!
//! Relations are closed predicate expressions, never materialized sets
//! (except [`Relation::Edges`], used by the enumeration oracle). The merge
//! engine only ever queries a relation inside the finite support of a mass
//! vector, so the infinite objects stay cheap.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::Error;

/// A symmetric, loop-free relation on `{1, 2, ...}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Relation {
    /// All pairs `{i, j}` with `i != j`.
    Maximal,
    /// No pairs.
    Empty,
    /// Pairs inside class `B_l = {l, m+l, 2m+l, ...}` for `1 <= l <= m`.
    IntraClass { classes: usize, class: usize },
    /// Pairs whose labels fall in different residue classes mod `m`.
    InterClass { classes: usize },
    /// `contains(i, j) <=> base.contains(i + offset, j + offset)`.
    Shifted { base: Box<Relation>, offset: usize },
    /// `base` restricted to pairs straddling the cut: `min <= cut < max`.
    UpDown { base: Box<Relation>, cut: usize },
    /// Union of two relations.
    Union(Box<Relation>, Box<Relation>),
    /// Explicit finite edge set, stored with `i < j`.
    Edges(BTreeSet<(usize, usize)>),
}

impl Relation {
    pub fn shifted(self, offset: usize) -> Relation {
        Relation::Shifted {
            base: Box::new(self),
            offset,
        }
    }

    pub fn up_down(self, cut: usize) -> Relation {
        Relation::UpDown {
            base: Box::new(self),
            cut,
        }
    }

    pub fn union(self, other: Relation) -> Relation {
        Relation::Union(Box::new(self), Box::new(other))
    }

    pub fn intra(classes: usize, class: usize) -> Relation {
        assert!(class >= 1 && class <= classes);
        Relation::IntraClass { classes, class }
    }

    pub fn inter(classes: usize) -> Relation {
        assert!(classes >= 1);
        Relation::InterClass { classes }
    }

    pub fn from_edges(edges: impl IntoIterator<Item = (usize, usize)>) -> Relation {
        let set = edges
            .into_iter()
            .filter(|&(i, j)| i != j)
            .map(|(i, j)| if i < j { (i, j) } else { (j, i) })
            .collect();
        Relation::Edges(set)
    }

    /// Membership predicate. Symmetric; `contains(i, i)` is always false.
    pub fn contains(&self, i: usize, j: usize) -> bool {
        if i == j || i == 0 || j == 0 {
            return false;
        }
        match self {
            Relation::Maximal => true,
            Relation::Empty => false,
            Relation::IntraClass { classes, class } => {
                let r = class % classes;
                i % classes == r && j % classes == r
            }
            Relation::InterClass { classes } => i % classes != j % classes,
            Relation::Shifted { base, offset } => base.contains(i + offset, j + offset),
            Relation::UpDown { base, cut } => {
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                lo <= *cut && *cut < hi && base.contains(i, j)
            }
            Relation::Union(a, b) => a.contains(i, j) || b.contains(i, j),
            Relation::Edges(set) => {
                let key = if i < j { (i, j) } else { (j, i) };
                set.contains(&key)
            }
        }
    }

    /// All edges `{i, j}` with `i < j <= n` and `contains(i, j)`, in
    /// lexicographic order. Specialized for the dense kinds; the generic
    /// fallback filters the full pair grid.
    pub fn edges_within(&self, n: usize) -> Vec<(usize, usize)> {
        match self {
            Relation::Empty => Vec::new(),
            Relation::Maximal => {
                let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
                for i in 1..=n {
                    for j in (i + 1)..=n {
                        out.push((i, j));
                    }
                }
                out
            }
            Relation::IntraClass { classes, class } => {
                let mut members: Vec<usize> = (1..=n)
                    .filter(|&v| v % classes == class % classes)
                    .collect();
                members.sort_unstable();
                let mut out = Vec::new();
                for (a, &i) in members.iter().enumerate() {
                    for &j in &members[a + 1..] {
                        out.push((i, j));
                    }
                }
                out
            }
            Relation::Edges(set) => set
                .iter()
                .copied()
                .filter(|&(_, j)| j <= n)
                .collect(),
            _ => {
                let mut out = Vec::new();
                for i in 1..=n {
                    for j in (i + 1)..=n {
                        if self.contains(i, j) {
                            out.push((i, j));
                        }
                    }
                }
                out
            }
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Relation::Maximal => write!(f, "maximal"),
            Relation::Empty => write!(f, "empty"),
            Relation::IntraClass { classes, class } => write!(f, "intra:{classes},{class}"),
            Relation::InterClass { classes } => write!(f, "inter:{classes}"),
            Relation::Shifted { base, offset } => write!(f, "shift:{offset}({base})"),
            Relation::UpDown { base, cut } => write!(f, "updown:{cut}({base})"),
            Relation::Union(a, b) => write!(f, "union({a},{b})"),
            Relation::Edges(set) => {
                write!(f, "edges:")?;
                for (k, (i, j)) in set.iter().enumerate() {
                    if k > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{i}-{j}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Relation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser { s, pos: 0 };
        let r = p.parse()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(Error::Usage(format!(
                "trailing input in relation expression at byte {}: {s:?}",
                p.pos
            )));
        }
        Ok(r)
    }
}

struct Parser<'a> {
    s: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn rest(&self) -> &str {
        &self.s[self.pos..]
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(' ') {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), Error> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(Error::Usage(format!(
                "expected {tok:?} at byte {} of relation expression {:?}",
                self.pos, self.s
            )))
        }
    }

    fn number(&mut self) -> Result<usize, Error> {
        let start = self.pos;
        while self
            .rest()
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_digit())
        {
            self.pos += 1;
        }
        self.s[start..self.pos].parse().map_err(|_| {
            Error::Usage(format!(
                "expected a number at byte {start} of relation expression {:?}",
                self.s
            ))
        })
    }

    fn parse(&mut self) -> Result<Relation, Error> {
        self.skip_ws();
        if self.eat("maximal") {
            Ok(Relation::Maximal)
        } else if self.eat("empty") {
            Ok(Relation::Empty)
        } else if self.eat("intra:") {
            let m = self.number()?;
            self.expect(",")?;
            let l = self.number()?;
            if m == 0 || l == 0 || l > m {
                return Err(Error::Usage(format!("intra:{m},{l} needs 1 <= l <= m")));
            }
            Ok(Relation::intra(m, l))
        } else if self.eat("inter:") {
            let m = self.number()?;
            if m == 0 {
                return Err(Error::Usage("inter:0 is not a relation".into()));
            }
            Ok(Relation::inter(m))
        } else if self.eat("shift:") {
            let m = self.number()?;
            self.expect("(")?;
            let base = self.parse()?;
            self.expect(")")?;
            Ok(base.shifted(m))
        } else if self.eat("updown:") {
            let m = self.number()?;
            self.expect("(")?;
            let base = self.parse()?;
            self.expect(")")?;
            Ok(base.up_down(m))
        } else if self.eat("union(") {
            let a = self.parse()?;
            self.expect(",")?;
            let b = self.parse()?;
            self.expect(")")?;
            Ok(a.union(b))
        } else if self.eat("edges:") {
            let mut edges = Vec::new();
            // `edges:` with no pairs is the explicit empty edge set.
            if !self.rest().chars().next().is_some_and(|c| c.is_ascii_digit()) {
                return Ok(Relation::from_edges(edges));
            }
            loop {
                let i = self.number()?;
                self.expect("-")?;
                let j = self.number()?;
                edges.push((i, j));
                if !self.eat(";") {
                    break;
                }
            }
            Ok(Relation::from_edges(edges))
        } else {
            Err(Error::Usage(format!(
                "unrecognized relation expression at byte {} of {:?}",
                self.pos, self.s
            )))
        }
    }
}
