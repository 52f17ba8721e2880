//! Combinatorics of free and surface groups: free reduction, word metrics,
//! ball enumeration, Gromov products on the group and eventually periodic
//! boundary rays.
//!
//! Letters are encoded as a single byte: `2*k` is the k-th generator and
//! `2*k + 1` its formal inverse, so the shortlex generator order
//! `a < a⁻¹ < b < b⁻¹ < …` is the byte order and inversion is `code ^ 1`.
//! The ASCII form writes generators as `a, b, c, …` and inverses as
//! `A, B, C, …`.

use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix2;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WordError {
    #[error("letter {0:?} does not name a generator of rank {1}")]
    InvalidLetter(char, usize),
    #[error("word uses generator #{0} but the model has rank {1}")]
    RankMismatch(usize, usize),
    #[error("element not identified within the configured BFS radius {radius}")]
    SurfaceRadiusExceeded { radius: usize },
    #[error("model carries no anchor representation")]
    MissingAnchor,
    #[error("anchor violates the genus-{genus} relation (residual {residual:.3e})")]
    RelatorViolation { genus: usize, residual: f64 },
    #[error("invalid boundary ray: {0}")]
    InvalidRay(&'static str),
    #[error("anchor image #{0} is singular")]
    SingularAnchor(usize),
}

/// A signed generator: byte code `2k` for the k-th generator, `2k+1` for its
/// inverse.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(pub u8);

impl Letter {
    pub fn generator(index: usize) -> Letter {
        Letter((2 * index) as u8)
    }

    pub fn inverse_generator(index: usize) -> Letter {
        Letter((2 * index + 1) as u8)
    }

    /// Index of the underlying generator (0-based).
    pub fn index(self) -> usize {
        (self.0 / 2) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn inverse(self) -> Letter {
        Letter(self.0 ^ 1)
    }

    pub fn to_char(self) -> char {
        let base = if self.is_inverse() { b'A' } else { b'a' };
        (base + self.0 / 2) as char
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'a'..='z' => Some(Letter(2 * (c as u8 - b'a'))),
            'A'..='Z' => Some(Letter(2 * (c as u8 - b'A') + 1)),
            _ => None,
        }
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// Symmetric generating alphabet of a rank-k group: letters `a₁..a_k` and
/// their formal inverses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Alphabet {
    rank: usize,
}

impl Alphabet {
    pub fn new(rank: usize) -> Alphabet {
        assert!(rank >= 1 && rank <= 26, "rank must be in 1..=26");
        Alphabet { rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// All 2k letters in shortlex order.
    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..2 * self.rank).map(|c| Letter(c as u8))
    }

    pub fn contains(&self, l: Letter) -> bool {
        l.index() < self.rank
    }
}

/// A freely reduced word over a symmetric generator alphabet. The empty word
/// is the identity.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity() -> Word {
        Word { letters: Vec::new() }
    }

    pub fn generator(index: usize) -> Word {
        Word { letters: vec![Letter::generator(index)] }
    }

    pub fn letter(l: Letter) -> Word {
        Word { letters: vec![l] }
    }

    /// Free reduction of a raw letter sequence. Idempotent on reduced input.
    pub fn reduce(raw: &[Letter]) -> Word {
        let mut stack: Vec<Letter> = Vec::with_capacity(raw.len());
        for &l in raw {
            if stack.last() == Some(&l.inverse()) {
                stack.pop();
            } else {
                stack.push(l);
            }
        }
        Word { letters: stack }
    }

    /// Parses ASCII form: `a`, `A` for a⁻¹, `b`, `B`, …; `""` and `"e"` are
    /// the identity. The result is freely reduced.
    pub fn parse(s: &str) -> Result<Word, WordError> {
        if s.is_empty() || s == "e" || s == "1" {
            return Ok(Word::identity());
        }
        let mut raw = Vec::with_capacity(s.len());
        for c in s.chars() {
            raw.push(Letter::from_char(c).ok_or(WordError::InvalidLetter(c, 26))?);
        }
        Ok(Word::reduce(&raw))
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn max_generator_index(&self) -> Option<usize> {
        self.letters.iter().map(|l| l.index()).max()
    }

    pub fn inverse(&self) -> Word {
        Word { letters: self.letters.iter().rev().map(|l| l.inverse()).collect() }
    }

    /// Product with free reduction at the seam.
    pub fn mul(&self, rhs: &Word) -> Word {
        let mut out = self.letters.clone();
        for &l in &rhs.letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word { letters: out }
    }

    pub fn push(&self, l: Letter) -> Word {
        self.mul(&Word::letter(l))
    }

    pub fn pow(&self, n: i32) -> Word {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut out = Word::identity();
        for _ in 0..n.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.letters.first(), self.letters.last()) {
            (Some(&f), Some(&l)) => f != l.inverse(),
            _ => true,
        }
    }

    /// The cyclically reduced word conjugate to `self`, together with the
    /// conjugation depth (number of peeled letter pairs).
    pub fn cyclic_reduce(&self) -> (Word, usize) {
        let mut letters = self.letters.clone();
        let mut depth = 0;
        while letters.len() >= 2 && letters[0] == letters[letters.len() - 1].inverse() {
            letters.pop();
            letters.remove(0);
            depth += 1;
        }
        (Word { letters }, depth)
    }

    /// Lexicographically least cyclic rotation; canonical representative of
    /// the rotation class of a cyclically reduced word.
    pub fn least_rotation(&self) -> Word {
        if self.letters.is_empty() {
            return self.clone();
        }
        let n = self.letters.len();
        let mut best = self.clone();
        for r in 1..n {
            let rot = Word {
                letters: self.letters[r..].iter().chain(&self.letters[..r]).copied().collect(),
            };
            if rot < best {
                best = rot;
            }
        }
        best
    }
}

/// Shortlex: length first, then byte-lexicographic.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        for l in &self.letters {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Word, D::Error> {
        let s = String::deserialize(deserializer)?;
        Word::parse(&s).map_err(D::Error::custom)
    }
}

/// Generator images of a 2×2 unimodular anchor representation. Realizes the
/// reference metric |γ|_X as a hyperbolic-plane displacement.
#[derive(Clone, Debug)]
pub struct Anchor {
    images: Vec<Matrix2<f64>>,
}

/// A 2×2 matrix with a separated log scale, enough for long anchor words.
#[derive(Clone, Copy, Debug)]
pub struct ScaledMatrix2 {
    pub mat: Matrix2<f64>,
    pub log_scale: f64,
}

impl ScaledMatrix2 {
    pub fn identity() -> ScaledMatrix2 {
        ScaledMatrix2 { mat: Matrix2::identity(), log_scale: 0.0 }
    }

    pub fn from_matrix(mat: Matrix2<f64>) -> ScaledMatrix2 {
        ScaledMatrix2 { mat, log_scale: 0.0 }.renormalized()
    }

    fn renormalized(mut self) -> ScaledMatrix2 {
        let n = self.mat.amax();
        if n > 0.0 && (n < 0.5 || n > 2.0) {
            self.mat /= n;
            self.log_scale += n.ln();
        }
        self
    }

    pub fn mul(&self, rhs: &ScaledMatrix2) -> ScaledMatrix2 {
        ScaledMatrix2 {
            mat: self.mat * rhs.mat,
            log_scale: self.log_scale + rhs.log_scale,
        }
        .renormalized()
    }

    pub fn pow(&self, n: u32) -> ScaledMatrix2 {
        let mut acc = ScaledMatrix2::identity();
        let mut base = *self;
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        acc
    }

    /// log σ₁ of the represented matrix.
    pub fn log_top_singular(&self) -> f64 {
        let sv = self.mat.svd(false, false).singular_values;
        sv[0].max(sv[1]).ln() + self.log_scale
    }

    /// log of the top eigenvalue modulus (closed form for 2×2).
    pub fn log_top_eigen(&self) -> f64 {
        let tr = self.mat.trace();
        let det = self.mat.determinant();
        let disc = tr * tr - 4.0 * det;
        let modulus = if disc >= 0.0 {
            let r1 = (tr + disc.sqrt()) / 2.0;
            let r2 = (tr - disc.sqrt()) / 2.0;
            r1.abs().max(r2.abs())
        } else {
            // complex pair: common modulus sqrt(det)
            det.abs().sqrt()
        };
        modulus.ln() + self.log_scale
    }
}

impl Anchor {
    /// Builds an anchor from 2×2 generator images; each image must be
    /// invertible and is normalized to |det| = 1.
    pub fn new(images: Vec<Matrix2<f64>>) -> Result<Anchor, WordError> {
        let mut normalized = Vec::with_capacity(images.len());
        for (i, m) in images.into_iter().enumerate() {
            let det = m.determinant();
            if det.abs() < 1e-14 {
                return Err(WordError::SingularAnchor(i));
            }
            normalized.push(m / det.abs().sqrt());
        }
        Ok(Anchor { images: normalized })
    }

    pub fn rank(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[Matrix2<f64>] {
        &self.images
    }

    pub fn letter_image(&self, l: Letter) -> Matrix2<f64> {
        let m = &self.images[l.index()];
        if l.is_inverse() {
            m.try_inverse().expect("anchor image invertible")
        } else {
            *m
        }
    }

    pub fn apply(&self, w: &Word) -> ScaledMatrix2 {
        let mut acc = ScaledMatrix2::identity();
        for &l in w.letters() {
            acc = acc.mul(&ScaledMatrix2::from_matrix(self.letter_image(l)));
        }
        acc
    }

    /// Hyperbolic-plane displacement of the image of `w` at the point
    /// stabilized by rotations: 2·log σ₁.
    pub fn displacement(&self, w: &Word) -> f64 {
        2.0 * self.apply(w).log_top_singular().max(0.0)
    }

    /// Exact translation length 2·log ℓ₁ of the image (0 for elliptic or
    /// parabolic images).
    pub fn translation_length(&self, w: &Word) -> f64 {
        2.0 * self.apply(w).log_top_eigen().max(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    Free { rank: usize },
    Surface { genus: usize },
}

/// Stable translation length together with the width of the estimation
/// bracket (0 where the value is exact).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StableLength {
    pub value: f64,
    pub bracket: f64,
}

const SURFACE_KEY_TOL: f64 = 1e-8;
const ANCHOR_RELATOR_TOL: f64 = 1e-8;

/// Precomputed Cayley-graph ball of a surface group: shortlex BFS with
/// matrix-keyed deduplication through the anchor.
#[derive(Debug)]
struct SurfaceTable {
    radius: usize,
    /// BFS discovery order = shortlex order
    words: Vec<Word>,
    lengths: Vec<usize>,
    cells: HashMap<[i64; 4], Vec<usize>>,
    keys: Vec<[f64; 4]>,
}

fn surface_key(m: &ScaledMatrix2) -> [f64; 4] {
    // normalize scale away and fix the sign: key of the PSL(2,R) element
    let f = m.mat.norm();
    let mut v = [m.mat[(0, 0)] / f, m.mat[(0, 1)] / f, m.mat[(1, 0)] / f, m.mat[(1, 1)] / f];
    for x in v {
        if x.abs() > SURFACE_KEY_TOL {
            if x < 0.0 {
                for y in v.iter_mut() {
                    *y = -*y;
                }
            }
            break;
        }
    }
    v
}

fn key_cell(k: &[f64; 4]) -> [i64; 4] {
    let mut c = [0i64; 4];
    for (i, x) in k.iter().enumerate() {
        c[i] = (x / SURFACE_KEY_TOL).round() as i64;
    }
    c
}

impl SurfaceTable {
    fn build(anchor: &Anchor, rank: usize, radius: usize) -> SurfaceTable {
        let mut table = SurfaceTable {
            radius,
            words: Vec::new(),
            lengths: Vec::new(),
            cells: HashMap::new(),
            keys: Vec::new(),
        };
        let alphabet = Alphabet::new(rank);
        let mut mats: Vec<ScaledMatrix2> = Vec::new();
        table.insert(Word::identity(), 0, ScaledMatrix2::identity(), &mut mats);
        let mut queue: VecDeque<usize> = VecDeque::new();
        queue.push_back(0);
        while let Some(i) = queue.pop_front() {
            if table.lengths[i] == radius {
                continue;
            }
            let (word, mat, len) = (table.words[i].clone(), mats[i], table.lengths[i]);
            for l in alphabet.letters() {
                let next = word.push(l);
                let m = mat.mul(&ScaledMatrix2::from_matrix(anchor.letter_image(l)));
                if table.lookup(&m).is_none() {
                    let idx = table.insert(next, len + 1, m, &mut mats);
                    queue.push_back(idx);
                }
            }
        }
        table
    }

    fn insert(
        &mut self,
        word: Word,
        len: usize,
        mat: ScaledMatrix2,
        mats: &mut Vec<ScaledMatrix2>,
    ) -> usize {
        let key = surface_key(&mat);
        let idx = self.words.len();
        self.words.push(word);
        self.lengths.push(len);
        self.keys.push(key);
        mats.push(mat);
        self.cells.entry(key_cell(&key)).or_default().push(idx);
        idx
    }

    fn lookup(&self, m: &ScaledMatrix2) -> Option<usize> {
        let key = surface_key(m);
        let cell = key_cell(&key);
        for d0 in -1..=1i64 {
            for d1 in -1..=1i64 {
                for d2 in -1..=1i64 {
                    for d3 in -1..=1i64 {
                        let probe = [cell[0] + d0, cell[1] + d1, cell[2] + d2, cell[3] + d3];
                        if let Some(bucket) = self.cells.get(&probe) {
                            for &i in bucket {
                                let k = &self.keys[i];
                                if (0..4).all(|j| (k[j] - key[j]).abs() <= SURFACE_KEY_TOL) {
                                    return Some(i);
                                }
                            }
                        }
                    }
                }
            }
        }
        None
    }
}

/// Group model: free group of finite rank or a closed surface group given by
/// a faithful discrete 2×2 anchor. Immutable after construction.
#[derive(Debug)]
pub struct GroupModel {
    kind: GroupKind,
    anchor: Option<Anchor>,
    surface: Option<SurfaceTable>,
    stable_power: u32,
}

pub const DEFAULT_SURFACE_RADIUS: usize = 6;
pub const DEFAULT_STABLE_POWER: u32 = 64;

impl GroupModel {
    pub fn free(rank: usize) -> Arc<GroupModel> {
        Arc::new(GroupModel {
            kind: GroupKind::Free { rank },
            anchor: None,
            surface: None,
            stable_power: DEFAULT_STABLE_POWER,
        })
    }

    /// Free group whose reference metric |γ|_X is realized by a 2×2 anchor.
    pub fn free_anchored(rank: usize, anchor: Anchor) -> Result<Arc<GroupModel>, WordError> {
        assert_eq!(anchor.rank(), rank);
        Ok(Arc::new(GroupModel {
            kind: GroupKind::Free { rank },
            anchor: Some(anchor),
            surface: None,
            stable_power: DEFAULT_STABLE_POWER,
        }))
    }

    /// Surface group of the given genus. The anchor generators must satisfy
    /// the defining relation Π[a_i, b_i] = ±1 within 1e−8 in operator norm;
    /// the word problem is solved by matrix-keyed BFS through the anchor up
    /// to `bfs_radius`.
    pub fn surface(
        genus: usize,
        anchor: Anchor,
        bfs_radius: usize,
    ) -> Result<Arc<GroupModel>, WordError> {
        assert!(genus >= 2, "genus must be at least 2");
        let rank = 2 * genus;
        assert_eq!(anchor.rank(), rank);
        let relator = GroupModel::genus_relator(genus);
        let rel = anchor.apply(&relator);
        let rel_mat = rel.mat * rel.log_scale.exp();
        let residual = (rel_mat - Matrix2::identity())
            .norm()
            .min((rel_mat + Matrix2::identity()).norm());
        if !(residual <= ANCHOR_RELATOR_TOL) {
            return Err(WordError::RelatorViolation { genus, residual });
        }
        let table = SurfaceTable::build(&anchor, rank, bfs_radius);
        Ok(Arc::new(GroupModel {
            kind: GroupKind::Surface { genus },
            anchor: Some(anchor),
            surface: Some(table),
            stable_power: DEFAULT_STABLE_POWER,
        }))
    }

    /// Π [a_{2i}, a_{2i+1}] for generators ordered a₁ b₁ a₂ b₂ …
    pub fn genus_relator(genus: usize) -> Word {
        let mut raw = Vec::new();
        for i in 0..genus {
            let a = Letter::generator(2 * i);
            let b = Letter::generator(2 * i + 1);
            raw.extend_from_slice(&[a, b, a.inverse(), b.inverse()]);
        }
        Word::reduce(&raw)
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn rank(&self) -> usize {
        match self.kind {
            GroupKind::Free { rank } => rank,
            GroupKind::Surface { genus } => 2 * genus,
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.rank())
    }

    pub fn anchor(&self) -> Option<&Anchor> {
        self.anchor.as_ref()
    }

    pub fn is_anchored(&self) -> bool {
        self.anchor.is_some()
    }

    pub fn bfs_radius(&self) -> Option<usize> {
        self.surface.as_ref().map(|t| t.radius)
    }

    fn check_rank(&self, g: &Word) -> Result<(), WordError> {
        match g.max_generator_index() {
            Some(i) if i >= self.rank() => Err(WordError::RankMismatch(i, self.rank())),
            _ => Ok(()),
        }
    }

    /// Word length |γ|_Γ. Exact for free groups; BFS distance through the
    /// anchor for surface groups (exact within the enumerated radius).
    pub fn word_length(&self, g: &Word) -> Result<usize, WordError> {
        self.check_rank(g)?;
        match self.kind {
            GroupKind::Free { .. } => Ok(g.len()),
            GroupKind::Surface { .. } => {
                let table = self.surface.as_ref().expect("surface table");
                let anchor = self.anchor.as_ref().expect("surface anchor");
                let m = anchor.apply(g);
                match table.lookup(&m) {
                    Some(i) => Ok(table.lengths[i]),
                    None => Err(WordError::SurfaceRadiusExceeded { radius: table.radius }),
                }
            }
        }
    }

    /// All elements of word length ≤ radius, each exactly once, in shortlex
    /// order (shortlex-least representative for surface groups).
    pub fn ball(&self, radius: usize) -> Result<Vec<Word>, WordError> {
        match self.kind {
            GroupKind::Free { rank } => {
                let mut out = vec![Word::identity()];
                let alphabet = Alphabet::new(rank);
                let mut level: Vec<Word> = vec![Word::identity()];
                for _ in 0..radius {
                    let mut next = Vec::with_capacity(level.len() * (2 * rank));
                    for w in &level {
                        for l in alphabet.letters() {
                            if w.letters().last() != Some(&l.inverse()) {
                                next.push(w.push(l));
                            }
                        }
                    }
                    out.extend(next.iter().cloned());
                    level = next;
                }
                Ok(out)
            }
            GroupKind::Surface { .. } => {
                let table = self.surface.as_ref().expect("surface table");
                if radius > table.radius {
                    return Err(WordError::SurfaceRadiusExceeded { radius: table.radius });
                }
                Ok(table
                    .words
                    .iter()
                    .zip(&table.lengths)
                    .filter(|(_, &l)| l <= radius)
                    .map(|(w, _)| w.clone())
                    .collect())
            }
        }
    }

    /// Canonical stored word for the element represented by `g`: `g` itself
    /// for free groups, the shortlex BFS representative for surface groups.
    pub fn canonical_word(&self, g: &Word) -> Result<Word, WordError> {
        self.check_rank(g)?;
        match self.kind {
            GroupKind::Free { .. } => Ok(g.clone()),
            GroupKind::Surface { .. } => {
                let table = self.surface.as_ref().expect("surface table");
                let anchor = self.anchor.as_ref().expect("surface anchor");
                match table.lookup(&anchor.apply(g)) {
                    Some(i) => Ok(table.words[i].clone()),
                    None => Err(WordError::SurfaceRadiusExceeded { radius: table.radius }),
                }
            }
        }
    }

    /// Gromov product ½(|g| + |h| − |g⁻¹h|) in the model's word metric.
    pub fn gromov_product(&self, g: &Word, h: &Word) -> Result<f64, WordError> {
        let a = self.word_length(g)? as f64;
        let b = self.word_length(h)? as f64;
        let c = self.word_length(&g.inverse().mul(h))? as f64;
        Ok(0.5 * (a + b - c))
    }

    /// Stable translation length |γ|_∞ in the model metric. Exact
    /// (cyclically reduced length) for free groups; estimated by power
    /// doubling of anchor displacements for surface groups, with the
    /// bracket width reported.
    pub fn stable_length(&self, g: &Word) -> Result<StableLength, WordError> {
        self.check_rank(g)?;
        match self.kind {
            GroupKind::Free { .. } => {
                let (cyc, _) = g.cyclic_reduce();
                Ok(StableLength { value: cyc.len() as f64, bracket: 0.0 })
            }
            GroupKind::Surface { .. } => {
                let anchor = self.anchor.as_ref().expect("surface anchor");
                let n = self.stable_power;
                let m = anchor.apply(g);
                let disp = |k: u32| 2.0 * m.pow(k).log_top_singular().max(0.0);
                let est = |k: u32| (disp(k) - disp(k / 2)) / (k as f64 / 2.0);
                let value = est(n);
                let bracket = (value - est(n / 2)).abs();
                Ok(StableLength { value, bracket })
            }
        }
    }

    /// Displacement |γ|_X of the anchor image: 2·log σ₁(anchor(γ)).
    pub fn anchor_displacement(&self, g: &Word) -> Result<f64, WordError> {
        self.check_rank(g)?;
        let anchor = self.anchor.as_ref().ok_or(WordError::MissingAnchor)?;
        Ok(anchor.displacement(g))
    }

    /// |γ|_X in the model's reference metric: anchor displacement when an
    /// anchor is present, word length otherwise.
    pub fn metric_length(&self, g: &Word) -> Result<f64, WordError> {
        match &self.anchor {
            Some(anchor) => {
                self.check_rank(g)?;
                Ok(anchor.displacement(g))
            }
            None => Ok(self.word_length(g)? as f64),
        }
    }

    /// |γ|_{X,∞} in the reference metric: exact translation length 2·log ℓ₁
    /// through the anchor when present, cyclically reduced length otherwise.
    pub fn metric_stable_length(&self, g: &Word) -> Result<f64, WordError> {
        match &self.anchor {
            Some(anchor) => {
                self.check_rank(g)?;
                Ok(anchor.translation_length(g))
            }
            None => Ok(g.cyclic_reduce().0.len() as f64),
        }
    }
}

/// One representative per cyclic-rotation class of cyclically reduced words
/// of length 1..=max_len over the rank-k free alphabet (the lex-least
/// rotation), in shortlex order. Conjugation-invariant quantities need only
/// be scanned over these.
pub fn cyclic_classes(rank: usize, max_len: usize) -> Vec<Word> {
    let alphabet = Alphabet::new(rank);
    let mut out = Vec::new();
    let mut level: Vec<Word> = vec![Word::identity()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(level.len() * 2 * rank);
        for w in &level {
            for l in alphabet.letters() {
                if w.letters().last() != Some(&l.inverse()) {
                    next.push(w.push(l));
                }
            }
        }
        for w in &next {
            if w.is_cyclically_reduced() && &w.least_rotation() == w {
                out.push(w.clone());
            }
        }
        level = next;
    }
    out
}

/// An eventually periodic boundary point: the ray head·cycle·cycle·…,
/// freely reduced at every junction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryRay {
    head: Word,
    cycle: Word,
}

impl BoundaryRay {
    pub fn new(head: Word, cycle: Word) -> Result<BoundaryRay, WordError> {
        if cycle.is_empty() {
            return Err(WordError::InvalidRay("cycle must be nonempty"));
        }
        if !cycle.is_cyclically_reduced() {
            return Err(WordError::InvalidRay("cycle must be cyclically reduced"));
        }
        if let (Some(&last), Some(&first)) = (head.letters().last(), cycle.letters().first()) {
            if last == first.inverse() {
                return Err(WordError::InvalidRay("head·cycle junction cancels"));
            }
        }
        Ok(BoundaryRay { head, cycle })
    }

    /// Pure cycle ray (empty head).
    pub fn periodic(cycle: Word) -> Result<BoundaryRay, WordError> {
        BoundaryRay::new(Word::identity(), cycle)
    }

    /// Parses "head|cycle"; a bare word is taken as a pure cycle.
    pub fn parse(s: &str) -> Result<BoundaryRay, WordError> {
        match s.split_once('|') {
            Some((h, c)) => BoundaryRay::new(Word::parse(h)?, Word::parse(c)?),
            None => BoundaryRay::periodic(Word::parse(s)?),
        }
    }

    pub fn head(&self) -> &Word {
        &self.head
    }

    pub fn cycle(&self) -> &Word {
        &self.cycle
    }

    /// The length-n initial subword of head·cycle^∞; successive outputs are
    /// nested.
    pub fn prefix(&self, n: usize) -> Word {
        let mut letters = Vec::with_capacity(n);
        let head = self.head.letters();
        let cycle = self.cycle.letters();
        for i in 0..n {
            if i < head.len() {
                letters.push(head[i]);
            } else {
                letters.push(cycle[(i - head.len()) % cycle.len()]);
            }
        }
        Word { letters }
    }

    /// Whether two rays describe the same boundary point (same infinite
    /// letter sequence).
    pub fn same_ray(&self, other: &BoundaryRay) -> bool {
        let p = self.cycle.len();
        let q = other.cycle.len();
        let lcm = p / gcd(p, q) * q;
        let n = self.head.len().max(other.head.len()) + lcm + p.max(q);
        self.prefix(n) == other.prefix(n)
    }
}

impl fmt::Display for BoundaryRay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.head, self.cycle)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(w("aAb"), w("b"));
        assert_eq!(w(""), Word::identity());
        assert_eq!(w("abBa"), w("aa"));
        // idempotent
        for s in ["abAB", "aaBBcC", "xyzZYX"] {
            let r = w(s);
            assert_eq!(Word::reduce(r.letters()), r);
        }
    }

    #[test]
    fn word_length_free() {
        let model = GroupModel::free(2);
        assert_eq!(model.word_length(&w("abab")).unwrap(), 4);
        assert_eq!(model.word_length(&w("")).unwrap(), 0);
    }

    #[test]
    fn cyclic_reduce_examples() {
        assert_eq!(w("abA").cyclic_reduce().0, w("b"));
        assert_eq!(w("ab").cyclic_reduce().0, w("ab"));
        assert_eq!(w("abbA").cyclic_reduce().0, w("bb"));
        assert_eq!(w("abA").cyclic_reduce().1, 1);
    }

    #[test]
    fn stable_length_free() {
        let model = GroupModel::free(2);
        assert_eq!(model.stable_length(&w("abA")).unwrap().value, 1.0);
        assert_eq!(model.stable_length(&w("")).unwrap().value, 0.0);
        // |γⁿ| = 5n for the cyclically reduced word aabab: concatenation oracle
        let g = w("aabab");
        for n in 1..6 {
            assert_eq!(g.pow(n).len(), 5 * n as usize);
        }
        assert_eq!(model.stable_length(&g).unwrap().value, 5.0);
    }

    #[test]
    fn ball_sizes_free() {
        let model = GroupModel::free(2);
        assert_eq!(model.ball(0).unwrap().len(), 1);
        assert_eq!(model.ball(1).unwrap().len(), 5);
        assert_eq!(model.ball(2).unwrap().len(), 17);
        // 1 + Σ 2k(2k−1)^{r−1}, exhaustive for r ≤ 6
        for k in 1..=3usize {
            let model = GroupModel::free(k);
            for r in 0..=6usize {
                let expected: usize =
                    1 + (1..=r).map(|i| 2 * k * (2 * k - 1).pow(i as u32 - 1)).sum::<usize>();
                assert_eq!(model.ball(r).unwrap().len(), expected, "rank {k} radius {r}");
            }
        }
    }

    #[test]
    fn ball_is_shortlex_sorted_and_unique() {
        let model = GroupModel::free(2);
        let ball = model.ball(4).unwrap();
        for pair in ball.windows(2) {
            assert!(pair[0] < pair[1]);
        }
    }

    #[test]
    fn gromov_product_examples() {
        let model = GroupModel::free(2);
        assert_eq!(model.gromov_product(&w("ab"), &w("a")).unwrap(), 1.0);
        assert_eq!(model.gromov_product(&w(""), &w("")).unwrap(), 0.0);
        assert_eq!(model.gromov_product(&w("a"), &w("A")).unwrap(), 0.0);
    }

    #[test]
    fn gromov_product_tree_hyperbolicity() {
        // δ = 0 on F₂: (x·y) ≥ min((x·z), (z·y)) exhaustively on ball(4);
        // the radius-6 sweep lives in the slower integration suite.
        let model = GroupModel::free(2);
        let ball = model.ball(4).unwrap();
        for x in &ball {
            for y in &ball {
                let pxy = model.gromov_product(x, y).unwrap();
                for z in &ball {
                    let pxz = model.gromov_product(x, z).unwrap();
                    let pzy = model.gromov_product(z, y).unwrap();
                    assert!(pxy >= pxz.min(pzy) - 1e-12);
                }
            }
        }
    }

    #[test]
    fn subadditivity_on_ball() {
        let model = GroupModel::free(2);
        let ball = model.ball(3).unwrap();
        for g in &ball {
            for h in &ball {
                let l = model.word_length(&g.mul(h)).unwrap();
                assert!(l <= g.len() + h.len());
            }
        }
    }

    #[test]
    fn stable_gromov_desk_check() {
        // |(g⁺·g⁻¹)_e − ½(|g|_Γ − |g|_∞)| ≤ 1 for every g ≠ e in ball(8),
        // with (g⁺·g⁻¹)_e evaluated at gⁿ, n = 8.
        let model = GroupModel::free(2);
        for g in model.ball(8).unwrap() {
            if g.is_empty() {
                continue;
            }
            let lhs = model.gromov_product(&g.pow(8), &g.inverse()).unwrap();
            let stable = model.stable_length(&g).unwrap().value;
            let rhs = 0.5 * (g.len() as f64 - stable);
            assert!((lhs - rhs).abs() <= 1.0 + 1e-12, "g={g} lhs={lhs} rhs={rhs}");
        }
    }

    #[test]
    fn ray_prefixes() {
        let r = BoundaryRay::parse("|ab").unwrap();
        assert_eq!(r.prefix(3), w("aba"));
        assert_eq!(r.prefix(0), Word::identity());
        let r = BoundaryRay::parse("b|a").unwrap();
        assert_eq!(r.prefix(4), w("baaa"));
        // nested
        for n in 0..6 {
            let p = r.prefix(n);
            let q = r.prefix(n + 1);
            assert_eq!(&q.letters()[..n], p.letters());
        }
    }

    #[test]
    fn ray_validation_and_equality() {
        assert!(BoundaryRay::new(w("a"), w("A")).is_err()); // junction cancels
        assert!(BoundaryRay::periodic(w("aBA")).is_err()); // not cyclically reduced
        assert!(BoundaryRay::periodic(Word::identity()).is_err());
        let x = BoundaryRay::parse("|abab").unwrap();
        let y = BoundaryRay::parse("ab|ab").unwrap();
        assert!(x.same_ray(&y));
        let z = BoundaryRay::parse("|ba").unwrap();
        assert!(!x.same_ray(&z));
    }

    #[test]
    fn anchor_displacement_diag() {
        // diag(2, 1/2) moves i to 4i in the upper half-plane: d = 2 log 2
        let anchor = Anchor::new(vec![Matrix2::new(2.0, 0.0, 0.0, 0.5)]).unwrap();
        let model = GroupModel::free_anchored(1, anchor).unwrap();
        let d = model.anchor_displacement(&w("a")).unwrap();
        assert!((d - 2.0 * 2.0f64.ln()).abs() < 1e-12);
        assert_eq!(model.anchor_displacement(&Word::identity()).unwrap(), 0.0);
        // rotations have σ₁ = 1
        let rot = Matrix2::new(0.6, -0.8, 0.8, 0.6);
        let model = GroupModel::free_anchored(1, Anchor::new(vec![rot]).unwrap()).unwrap();
        assert!(model.anchor_displacement(&w("a")).unwrap().abs() < 1e-12);
    }

    #[test]
    fn shortlex_order() {
        assert!(w("a") < w("A"));
        assert!(w("A") < w("b"));
        assert!(w("b") < w("aa"));
        assert!(w("ab") < w("aB"));
    }
}
