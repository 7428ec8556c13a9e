//! Normal forms for elements of a free product `G = G_1 * ... * G_k * F_N`.
//!
//! A [`Word`] is a sequence of letters, each either a power of a free
//! generator `x_j` or a nontrivial element of one of the factors. Adjacent
//! letters never belong to the same free generator or the same factor, so
//! every letter is one syllable.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{malformed, Error, Result};

/// A factor group model. Element ids are integers; for cyclic factors the id
/// is the exponent of the generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FactorModel {
    FiniteCyclic { order: u64 },
    InfiniteCyclic,
    Table { names: Vec<String>, mul: Vec<Vec<usize>>, identity: usize, inv: Vec<usize> },
}

impl FactorModel {
    /// Builds a table model, checking the Latin square property, the identity
    /// and the existence of inverses. Associativity is checked too since the
    /// tables involved are small.
    pub fn table(names: Vec<String>, mul: Vec<Vec<usize>>, identity: Option<usize>) -> Result<Self> {
        let n = mul.len();
        if n == 0 {
            return malformed("empty multiplication table");
        }
        if names.len() != n {
            return malformed("element list and table sizes differ");
        }
        for row in &mul {
            if row.len() != n || row.iter().any(|&x| x >= n) {
                return malformed("table is not square over the element ids");
            }
            let mut seen = vec![false; n];
            for &x in row {
                if std::mem::replace(&mut seen[x], true) {
                    return malformed("table is not a Latin square (row repeats)");
                }
            }
        }
        for c in 0..n {
            let mut seen = vec![false; n];
            for row in &mul {
                if std::mem::replace(&mut seen[row[c]], true) {
                    return malformed("table is not a Latin square (column repeats)");
                }
            }
        }
        let e = match identity {
            Some(e) => e,
            None => (0..n)
                .find(|&e| (0..n).all(|x| mul[e][x] == x && mul[x][e] == x))
                .ok_or_else(|| Error::Malformed("table has no identity".into()))?,
        };
        if e >= n || (0..n).any(|x| mul[e][x] != x || mul[x][e] != x) {
            return malformed("declared identity is not an identity");
        }
        let mut inv = vec![0; n];
        for x in 0..n {
            inv[x] = (0..n)
                .find(|&y| mul[x][y] == e && mul[y][x] == e)
                .ok_or_else(|| Error::Malformed(format!("element {x} has no two-sided inverse")))?;
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if mul[mul[a][b]][c] != mul[a][mul[b][c]] {
                        return malformed("table is not associative");
                    }
                }
            }
        }
        Ok(FactorModel::Table { names, mul, identity: e, inv })
    }

    pub fn identity(&self) -> BigInt {
        match self {
            FactorModel::Table { identity, .. } => BigInt::from(*identity),
            _ => BigInt::zero(),
        }
    }

    pub fn is_identity(&self, a: &BigInt) -> bool {
        *a == self.identity()
    }

    /// Group order, `None` for ℤ.
    pub fn order(&self) -> Option<u64> {
        match self {
            FactorModel::FiniteCyclic { order } => Some(*order),
            FactorModel::InfiniteCyclic => None,
            FactorModel::Table { mul, .. } => Some(mul.len() as u64),
        }
    }

    fn idx(a: &BigInt) -> usize {
        a.to_usize().expect("table element id out of range")
    }

    pub fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        match self {
            FactorModel::FiniteCyclic { order } => (a + b).mod_floor(&BigInt::from(*order)),
            FactorModel::InfiniteCyclic => a + b,
            FactorModel::Table { mul, .. } => BigInt::from(mul[Self::idx(a)][Self::idx(b)]),
        }
    }

    pub fn inv(&self, a: &BigInt) -> BigInt {
        match self {
            FactorModel::FiniteCyclic { order } => (-a).mod_floor(&BigInt::from(*order)),
            FactorModel::InfiniteCyclic => -a,
            FactorModel::Table { inv, .. } => BigInt::from(inv[Self::idx(a)]),
        }
    }

    pub fn pow(&self, a: &BigInt, m: &BigInt) -> BigInt {
        match self {
            FactorModel::FiniteCyclic { order } => (a * m).mod_floor(&BigInt::from(*order)),
            FactorModel::InfiniteCyclic => a * m,
            FactorModel::Table { .. } => {
                let ord = self.elt_order(a).unwrap();
                let k = m.mod_floor(&ord).to_u64().unwrap();
                let mut acc = self.identity();
                for _ in 0..k {
                    acc = self.mul(&acc, a);
                }
                acc
            }
        }
    }

    /// Order of an element, `None` when infinite.
    pub fn elt_order(&self, a: &BigInt) -> Option<BigInt> {
        match self {
            FactorModel::FiniteCyclic { order } => {
                let n = BigInt::from(*order);
                Some(&n / n.gcd(a))
            }
            FactorModel::InfiniteCyclic => {
                if a.is_zero() {
                    Some(BigInt::one())
                } else {
                    None
                }
            }
            FactorModel::Table { .. } => {
                let mut k = 1u64;
                let mut acc = a.clone();
                while !self.is_identity(&acc) {
                    acc = self.mul(&acc, a);
                    k += 1;
                }
                Some(BigInt::from(k))
            }
        }
    }

    /// All element ids of a finite factor, in increasing order.
    pub fn elements(&self) -> Option<Vec<BigInt>> {
        self.order().map(|n| (0..n).map(BigInt::from).collect())
    }

    /// A generating set: `[1]` for cyclic models, a greedy set for tables.
    pub fn generators(&self) -> Vec<BigInt> {
        match self {
            FactorModel::Table { .. } => {
                let mut have: std::collections::BTreeSet<BigInt> = [self.identity()].into_iter().collect();
                let mut gens = Vec::new();
                for x in self.elements().unwrap() {
                    if have.contains(&x) {
                        continue;
                    }
                    gens.push(x.clone());
                    // close up
                    let mut frontier: Vec<BigInt> = have.iter().cloned().collect();
                    while let Some(y) = frontier.pop() {
                        for g in &gens {
                            let z = self.mul(&y, g);
                            if have.insert(z.clone()) {
                                frontier.push(z);
                            }
                        }
                    }
                }
                gens
            }
            _ => vec![BigInt::one()],
        }
    }

    /// Brings a raw id into canonical range; cyclic ids are taken modulo the order.
    pub fn normalize(&self, a: &BigInt) -> Result<BigInt> {
        match self {
            FactorModel::FiniteCyclic { order } => Ok(a.mod_floor(&BigInt::from(*order))),
            FactorModel::InfiniteCyclic => Ok(a.clone()),
            FactorModel::Table { names, .. } => {
                if a.is_negative() || *a >= BigInt::from(names.len()) {
                    malformed(format!("element id {a} outside table of size {}", names.len()))
                } else {
                    Ok(a.clone())
                }
            }
        }
    }

    /// Display name. Cyclic factors use `a^k`.
    pub fn name(&self, a: &BigInt) -> String {
        match self {
            FactorModel::Table { names, .. } => names[Self::idx(a)].clone(),
            _ if a.is_one() => "a".to_string(),
            _ => format!("a^{a}"),
        }
    }

    pub fn parse_name(&self, s: &str) -> Result<BigInt> {
        if let FactorModel::Table { names, .. } = self {
            return match names.iter().position(|n| n == s) {
                Some(i) => Ok(BigInt::from(i)),
                None => malformed(format!("unknown element name {s:?}")),
            };
        }
        let s = s.trim();
        let mut chars = s.chars();
        match chars.next() {
            Some(c) if c.is_ascii_alphabetic() => {}
            _ => return malformed(format!("cannot parse cyclic element {s:?}")),
        }
        let rest = chars.as_str();
        let k = if rest.is_empty() {
            BigInt::one()
        } else if let Some(e) = rest.strip_prefix('^') {
            e.parse::<BigInt>()
                .map_err(|_| Error::Malformed(format!("bad exponent in {s:?}")))?
        } else {
            return malformed(format!("cannot parse cyclic element {s:?}"));
        };
        self.normalize(&k)
    }
}

/// The free factor system data: free rank `N` and factors `G_1..G_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorSpec {
    pub free_rank: usize,
    pub factors: Vec<FactorModel>,
}

/// One syllable. Indices are 1-based as in `x_1..x_N`, `G_1..G_k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    Gen { index: usize, exp: BigInt },
    Per { factor: usize, elt: BigInt },
}

impl Letter {
    pub fn gen(index: usize, exp: i64) -> Letter {
        Letter::Gen { index, exp: BigInt::from(exp) }
    }
    pub fn per(factor: usize, elt: i64) -> Letter {
        Letter::Per { factor, elt: BigInt::from(elt) }
    }
    fn same_kind(&self, other: &Letter) -> bool {
        match (self, other) {
            (Letter::Gen { index: a, .. }, Letter::Gen { index: b, .. }) => a == b,
            (Letter::Per { factor: a, .. }, Letter::Per { factor: b, .. }) => a == b,
            _ => false,
        }
    }
}

// free generators by index, then sign (+ first), then magnitude; then
// peripheral letters by factor, then element id
impl Ord for Letter {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Letter::Gen { index: i, exp: a }, Letter::Gen { index: j, exp: b }) => i
                .cmp(j)
                .then(a.is_negative().cmp(&b.is_negative()))
                .then(a.abs().cmp(&b.abs())),
            (Letter::Gen { .. }, Letter::Per { .. }) => Ordering::Less,
            (Letter::Per { .. }, Letter::Gen { .. }) => Ordering::Greater,
            (Letter::Per { factor: i, elt: a }, Letter::Per { factor: j, elt: b }) => i.cmp(j).then(a.cmp(b)),
        }
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A reduced word. The empty word is the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity() -> Word {
        Word::default()
    }
    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }
    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }
    /// Number of syllables.
    pub fn len(&self) -> usize {
        self.letters.len()
    }
    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
    /// Free generator `x_index^exp` as a word (no spec needed).
    pub fn gen(index: usize, exp: i64) -> Word {
        if exp == 0 {
            Word::identity()
        } else {
            Word { letters: vec![Letter::gen(index, exp)] }
        }
    }
    /// Total absolute exponent plus peripheral syllables: the word length
    /// with multiplicity.
    pub fn letter_length(&self) -> BigInt {
        self.letters
            .iter()
            .map(|l| match l {
                Letter::Gen { exp, .. } => exp.abs(),
                Letter::Per { .. } => BigInt::one(),
            })
            .sum()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .letters
            .iter()
            .map(|l| match l {
                Letter::Gen { index, exp } if exp.is_one() => format!("x{index}"),
                Letter::Gen { index, exp } => format!("x{index}^{exp}"),
                Letter::Per { factor, elt } => format!("g{factor}[{elt}]"),
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// A cyclically reduced word stored in its canonical rotation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CyclicWord {
    pub representative: Word,
}

impl FactorSpec {
    pub fn new(free_rank: usize, factors: Vec<FactorModel>) -> Result<FactorSpec> {
        if free_rank + factors.len() == 0 {
            return Err(Error::Domain("Kurosh rank 0 is not supported".into()));
        }
        Ok(FactorSpec { free_rank, factors })
    }

    /// Free group of rank `n`.
    pub fn free(n: usize) -> FactorSpec {
        FactorSpec::new(n, vec![]).expect("rank must be positive")
    }

    pub fn rk_k(&self) -> usize {
        self.free_rank + self.factors.len()
    }

    pub fn k(&self) -> usize {
        self.factors.len()
    }

    /// Factor `i`, 1-based.
    pub fn factor(&self, i: usize) -> &FactorModel {
        &self.factors[i - 1]
    }

    fn check_letter(&self, l: &Letter) -> Result<Letter> {
        match l {
            Letter::Gen { index, exp } => {
                if *index == 0 || *index > self.free_rank {
                    return malformed(format!("free generator x{index} outside 1..{}", self.free_rank));
                }
                Ok(Letter::Gen { index: *index, exp: exp.clone() })
            }
            Letter::Per { factor, elt } => {
                if *factor == 0 || *factor > self.factors.len() {
                    return malformed(format!("factor {factor} outside 1..{}", self.factors.len()));
                }
                Ok(Letter::Per { factor: *factor, elt: self.factor(*factor).normalize(elt)? })
            }
        }
    }

    fn letter_trivial(&self, l: &Letter) -> bool {
        match l {
            Letter::Gen { exp, .. } => exp.is_zero(),
            Letter::Per { factor, elt } => self.factor(*factor).is_identity(elt),
        }
    }

    fn combine(&self, a: &Letter, b: &Letter) -> Letter {
        match (a, b) {
            (Letter::Gen { index, exp: x }, Letter::Gen { exp: y, .. }) => Letter::Gen { index: *index, exp: x + y },
            (Letter::Per { factor, elt: x }, Letter::Per { elt: y, .. }) => {
                Letter::Per { factor: *factor, elt: self.factor(*factor).mul(x, y) }
            }
            _ => unreachable!("combine called on letters of different kinds"),
        }
    }

    pub fn invert_letter(&self, l: &Letter) -> Letter {
        match l {
            Letter::Gen { index, exp } => Letter::Gen { index: *index, exp: -exp },
            Letter::Per { factor, elt } => Letter::Per { factor: *factor, elt: self.factor(*factor).inv(elt) },
        }
    }

    // The stack stays reduced, so a merged letter never merges again with
    // the letter below it.
    fn push_letter(&self, stack: &mut Vec<Letter>, l: Letter) {
        if self.letter_trivial(&l) {
            return;
        }
        if let Some(top) = stack.last() {
            if top.same_kind(&l) {
                let r = self.combine(top, &l);
                stack.pop();
                if !self.letter_trivial(&r) {
                    stack.push(r);
                }
                return;
            }
        }
        stack.push(l);
    }

    /// Reduces an arbitrary letter sequence, validating indices.
    pub fn reduce(&self, raw: &[Letter]) -> Result<Word> {
        let mut stack = Vec::with_capacity(raw.len());
        for l in raw {
            let l = self.check_letter(l)?;
            self.push_letter(&mut stack, l);
        }
        Ok(Word { letters: stack })
    }

    /// Checks that `w` is a valid reduced word over this spec.
    pub fn check_word(&self, w: &Word) -> Result<()> {
        for l in &w.letters {
            if self.check_letter(l)? != *l || self.letter_trivial(l) {
                return Err(Error::IncompatibleContext(format!("letter {l:?} is not valid here")));
            }
        }
        if w.letters.windows(2).any(|p| p[0].same_kind(&p[1])) {
            return Err(Error::IncompatibleContext("word is not reduced".into()));
        }
        Ok(())
    }

    /// Single-letter word, reduced (identity if trivial).
    pub fn letter(&self, l: Letter) -> Word {
        self.reduce(&[l]).expect("letter out of range")
    }

    /// `x_j^e`.
    pub fn x(&self, j: usize, e: i64) -> Word {
        self.letter(Letter::gen(j, e))
    }

    /// Element `elt` of factor `i`.
    pub fn p(&self, i: usize, elt: i64) -> Word {
        self.letter(Letter::per(i, elt))
    }

    /// Product without context checks (both operands assumed valid).
    pub fn mul(&self, u: &Word, v: &Word) -> Word {
        let mut stack = u.letters.clone();
        for l in &v.letters {
            self.push_letter(&mut stack, l.clone());
        }
        Word { letters: stack }
    }

    /// Product of several words.
    pub fn mul_all<'a>(&self, ws: impl IntoIterator<Item = &'a Word>) -> Word {
        let mut stack = Vec::new();
        for w in ws {
            for l in &w.letters {
                self.push_letter(&mut stack, l.clone());
            }
        }
        Word { letters: stack }
    }

    /// Checked product.
    pub fn multiply(&self, u: &Word, v: &Word) -> Result<Word> {
        self.check_word(u)?;
        self.check_word(v)?;
        Ok(self.mul(u, v))
    }

    pub fn inverse(&self, w: &Word) -> Word {
        Word { letters: w.letters.iter().rev().map(|l| self.invert_letter(l)).collect() }
    }

    /// `g h g⁻¹`.
    pub fn conj(&self, g: &Word, h: &Word) -> Word {
        self.mul_all([g, h, &self.inverse(g)])
    }

    pub fn pow(&self, w: &Word, m: &BigInt) -> Word {
        let (mut base, mut e) = if m.is_negative() { (self.inverse(w), -m) } else { (w.clone(), m.clone()) };
        let mut acc = Word::identity();
        let two = BigInt::from(2);
        while !e.is_zero() {
            if e.is_odd() {
                acc = self.mul(&acc, &base);
            }
            e /= &two;
            if !e.is_zero() {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    pub fn powi(&self, w: &Word, m: i64) -> Word {
        self.pow(w, &BigInt::from(m))
    }

    /// Returns `(core, conjugator)` with `w = conjugator · core · conjugator⁻¹`.
    pub fn cyclic_reduce(&self, w: &Word) -> (CyclicWord, Word) {
        let mut core = w.letters.clone();
        let mut left: Vec<Letter> = Vec::new();
        while core.len() >= 2 && core[0].same_kind(core.last().unwrap()) {
            let first = core[0].clone();
            let last = core.pop().unwrap();
            let merged = self.combine(&last, &first);
            if self.letter_trivial(&merged) {
                // first·m·first⁻¹
                core.remove(0);
                self.push_letter(&mut left, first);
            } else {
                // first·m·last = last⁻¹·(merged·m)·last
                core[0] = merged;
                self.push_letter(&mut left, self.invert_letter(&last));
            }
        }
        // canonical rotation: lexicographically least
        let n = core.len();
        let mut best = 0;
        for r in 1..n {
            let cand = core[r..].iter().chain(core[..r].iter());
            let cur = core[best..].iter().chain(core[..best].iter());
            if cand.cmp(cur) == Ordering::Less {
                best = r;
            }
        }
        let rotated: Vec<Letter> = core[best..].iter().chain(core[..best].iter()).cloned().collect();
        let mut conj = Word { letters: left };
        conj = self.mul(&conj, &Word { letters: core[..best].to_vec() });
        (CyclicWord { representative: Word { letters: rotated } }, conj)
    }

    /// Maximal root: `(root, m)` with `root^m = w` and `m` maximal. For a
    /// peripheral `w` conjugate to `e ∈ G_i` the multiplicity is the largest
    /// index `[⟨h⟩:⟨e⟩]` over `h ∈ G_i` with `h^[⟨h⟩:⟨e⟩] = e`; ties go to
    /// the least element id.
    pub fn max_root(&self, w: &Word) -> Result<(Word, BigInt)> {
        if w.is_identity() {
            return Err(Error::Domain("max_root of the identity".into()));
        }
        let (core, c) = self.cyclic_reduce(w);
        let seq = &core.representative.letters;
        let n = seq.len();
        if n == 1 {
            let (root, m) = match &seq[0] {
                Letter::Gen { index, exp } => {
                    (Letter::Gen { index: *index, exp: BigInt::from(exp.signum()) }, exp.abs())
                }
                Letter::Per { factor, elt } => {
                    let (h, m) = self.peripheral_root(*factor, elt);
                    (Letter::Per { factor: *factor, elt: h }, m)
                }
            };
            return Ok((self.conj(&c, &self.letter(root)), m));
        }
        let d = (1..=n)
            .find(|&d| n % d == 0 && (d..n).all(|i| seq[i] == seq[i - d]))
            .unwrap();
        let root = Word { letters: seq[..d].to_vec() };
        Ok((self.conj(&c, &root), BigInt::from(n / d)))
    }

    fn peripheral_root(&self, factor: usize, e: &BigInt) -> (BigInt, BigInt) {
        let g = self.factor(factor);
        match g {
            FactorModel::InfiniteCyclic => (BigInt::from(e.signum()), e.abs()),
            _ => {
                let ord_e = g.elt_order(e).unwrap();
                let mut best = (e.clone(), BigInt::one());
                for h in g.elements().unwrap() {
                    let ord_h = g.elt_order(&h).unwrap();
                    if !ord_h.is_multiple_of(&ord_e) {
                        continue;
                    }
                    let idx = &ord_h / &ord_e;
                    if idx > best.1 && g.pow(&h, &idx) == *e {
                        best = (h, idx);
                    }
                }
                best
            }
        }
    }

    /// `Some((i, c))` when `w = c·e·c⁻¹` with `e ∈ G_i` nontrivial.
    pub fn is_peripheral(&self, w: &Word) -> Option<(usize, Word)> {
        let (core, c) = self.cyclic_reduce(w);
        match core.representative.letters.as_slice() {
            [Letter::Per { factor, .. }] => Some((*factor, c)),
            _ => None,
        }
    }

    /// `Some(m)` when `g = c^m`. For `c` of finite order the least
    /// non-negative such `m` is returned.
    pub fn is_power_of(&self, g: &Word, c: &Word) -> Option<BigInt> {
        if g.is_identity() {
            return Some(BigInt::zero());
        }
        if c.is_identity() {
            return None;
        }
        let (core, p) = self.cyclic_reduce(c);
        let gp = self.mul_all([&self.inverse(&p), g, &p]);
        let cs = &core.representative.letters;
        let gs = &gp.letters;
        if cs.len() == 1 {
            if gs.len() != 1 {
                return None;
            }
            return match (&cs[0], &gs[0]) {
                (Letter::Gen { index: i, exp: a }, Letter::Gen { index: j, exp: b }) if i == j => {
                    if b.is_multiple_of(a) {
                        Some(b / a)
                    } else {
                        None
                    }
                }
                (Letter::Per { factor: i, elt: a }, Letter::Per { factor: j, elt: b }) if i == j => {
                    let f = self.factor(*i);
                    match f {
                        FactorModel::InfiniteCyclic => {
                            if b.is_multiple_of(a) {
                                Some(b / a)
                            } else {
                                None
                            }
                        }
                        _ => {
                            let ord = f.elt_order(a).unwrap().to_u64().unwrap();
                            (1..ord).map(BigInt::from).find(|m| f.pow(a, m) == *b)
                        }
                    }
                }
                _ => None,
            };
        }
        if gs.len() % cs.len() != 0 {
            return None;
        }
        let m = (gs.len() / cs.len()) as i64;
        if self.powi(&core.representative, m) == gp {
            Some(BigInt::from(m))
        } else if self.powi(&core.representative, -m) == gp {
            Some(BigInt::from(-m))
        } else {
            None
        }
    }

    // ---- JSON ----

    pub fn to_json(&self) -> Value {
        let factors: Vec<Value> = self
            .factors
            .iter()
            .map(|f| match f {
                FactorModel::FiniteCyclic { order } => json!({"type": "finite_cyclic", "order": order}),
                FactorModel::InfiniteCyclic => json!({"type": "infinite_cyclic"}),
                FactorModel::Table { names, mul, identity, .. } => {
                    json!({"type": "table", "elements": names, "mul": mul, "identity": identity})
                }
            })
            .collect();
        json!({"free_rank": self.free_rank, "factors": factors})
    }

    pub fn from_json(v: &Value) -> Result<FactorSpec> {
        let n = v
            .get("free_rank")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Malformed("factor spec needs integer free_rank".into()))? as usize;
        let mut factors = Vec::new();
        if let Some(fs) = v.get("factors") {
            let fs = fs.as_array().ok_or_else(|| Error::Malformed("factors must be an array".into()))?;
            for f in fs {
                let ty = f.get("type").and_then(Value::as_str).unwrap_or("");
                factors.push(match ty {
                    "finite_cyclic" => {
                        let order = f
                            .get("order")
                            .and_then(Value::as_u64)
                            .ok_or_else(|| Error::Malformed("finite_cyclic needs order".into()))?;
                        if order < 2 {
                            return malformed("finite cyclic order must be at least 2");
                        }
                        FactorModel::FiniteCyclic { order }
                    }
                    "infinite_cyclic" => FactorModel::InfiniteCyclic,
                    "table" => {
                        let names: Vec<String> = serde_json::from_value(f.get("elements").cloned().unwrap_or(Value::Null))
                            .map_err(|e| Error::Malformed(format!("table elements: {e}")))?;
                        let mul: Vec<Vec<usize>> = serde_json::from_value(f.get("mul").cloned().unwrap_or(Value::Null))
                            .map_err(|e| Error::Malformed(format!("table mul: {e}")))?;
                        let id = f.get("identity").and_then(Value::as_u64).map(|x| x as usize);
                        let t = FactorModel::table(names, mul, id)?;
                        if t.order() == Some(1) {
                            return malformed("trivial factor");
                        }
                        t
                    }
                    other => return malformed(format!("unknown factor type {other:?}")),
                });
            }
        }
        FactorSpec::new(n, factors).map_err(|e| Error::Malformed(e.to_string()))
    }

    pub fn word_to_json(&self, w: &Word) -> Value {
        Value::Array(
            w.letters
                .iter()
                .map(|l| match l {
                    Letter::Gen { index, exp } => json!({"gen": index, "pow": big_to_json(exp)}),
                    Letter::Per { factor, elt } => json!({"factor": factor, "elt": self.factor(*factor).name(elt)}),
                })
                .collect(),
        )
    }

    pub fn word_from_json(&self, v: &Value) -> Result<Word> {
        let arr = v.as_array().ok_or_else(|| Error::Malformed("word must be an array of syllables".into()))?;
        let mut raw = Vec::with_capacity(arr.len());
        for s in arr {
            if let Some(g) = s.get("gen") {
                let index = g.as_u64().ok_or_else(|| Error::Malformed("gen must be an integer".into()))? as usize;
                let exp = match s.get("pow") {
                    None => BigInt::one(),
                    Some(p) => big_from_json(p)?,
                };
                raw.push(Letter::Gen { index, exp });
            } else if let Some(f) = s.get("factor") {
                let factor = f.as_u64().ok_or_else(|| Error::Malformed("factor must be an integer".into()))? as usize;
                if factor == 0 || factor > self.factors.len() {
                    return malformed(format!("factor {factor} out of range"));
                }
                let elt = match s.get("elt") {
                    Some(Value::String(name)) => self.factor(factor).parse_name(name)?,
                    Some(x) => big_from_json(x)?,
                    None => return malformed("peripheral syllable needs elt"),
                };
                raw.push(Letter::Per { factor, elt });
            } else {
                return malformed(format!("unrecognised syllable {s}"));
            }
        }
        self.reduce(&raw)
    }
}

pub(crate) fn big_to_json(x: &BigInt) -> Value {
    match x.to_i64() {
        Some(v) => json!(v),
        None => Value::String(x.to_string()),
    }
}

pub(crate) fn big_from_json(v: &Value) -> Result<BigInt> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| Error::Malformed(format!("expected integer, got {n}"))),
        Value::String(s) => s.parse().map_err(|_| Error::Malformed(format!("expected integer, got {s:?}"))),
        _ => malformed(format!("expected integer, got {v}")),
    }
}
