//! EL concepts, normalization into the four normal forms, and the
//! completion-based classifier that decides subsumption.
//!
//! Everything probabilistic in this crate eventually reduces to the
//! entailment check implemented here.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

/// An EL concept: `A | ⊤ | C ⊓ D | ∃r.C`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Concept {
    Atom(String),
    Top,
    And(Box<Concept>, Box<Concept>),
    Exists(String, Box<Concept>),
}

impl Concept {
    pub fn atom(name: impl Into<String>) -> Self {
        Concept::Atom(name.into())
    }

    pub fn and(left: Concept, right: Concept) -> Self {
        Concept::And(Box::new(left), Box::new(right))
    }

    pub fn exists(role: impl Into<String>, filler: Concept) -> Self {
        Concept::Exists(role.into(), Box::new(filler))
    }

    /// Nesting depth; atoms and `⊤` have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Concept::Atom(_) | Concept::Top => 0,
            Concept::And(l, r) => 1 + l.depth().max(r.depth()),
            Concept::Exists(_, f) => 1 + f.depth(),
        }
    }

    /// Collects concept names into `out`.
    pub fn collect_names<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Concept::Atom(a) => {
                out.insert(a);
            }
            Concept::Top => {}
            Concept::And(l, r) => {
                l.collect_names(out);
                r.collect_names(out);
            }
            Concept::Exists(_, f) => f.collect_names(out),
        }
    }

    /// Collects role names into `out`.
    pub fn collect_roles<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Concept::Atom(_) | Concept::Top => {}
            Concept::And(l, r) => {
                l.collect_roles(out);
                r.collect_roles(out);
            }
            Concept::Exists(role, f) => {
                out.insert(role);
                f.collect_roles(out);
            }
        }
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Concept::Atom(a) => f.write_str(a),
            Concept::Top => f.write_str("top"),
            Concept::And(l, r) => {
                write!(f, "{l} and ")?;
                if matches!(**r, Concept::And(..)) {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
            Concept::Exists(role, filler) => match **filler {
                Concept::Atom(_) | Concept::Top => write!(f, "exists {role} . {filler}"),
                _ => write!(f, "exists {role} . ({filler})"),
            },
        }
    }
}

/// A general concept inclusion `lhs ⊑ rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gci {
    pub lhs: Concept,
    pub rhs: Concept,
}

impl Gci {
    pub fn new(lhs: Concept, rhs: Concept) -> Self {
        Gci { lhs, rhs }
    }

    /// `A ⊑ B` between two concept names.
    pub fn atomic(lhs: &str, rhs: &str) -> Self {
        Gci::new(Concept::atom(lhs), Concept::atom(rhs))
    }
}

impl fmt::Display for Gci {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <= {}", self.lhs, self.rhs)
    }
}

/// Interned concept name. Id 0 is always `⊤`.
pub type NameId = u32;
/// Interned role name.
pub type RoleId = u32;

pub const TOP: NameId = 0;

/// Axioms in normal form over interned names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NormalAxiom {
    /// `A ⊑ B`
    Sub(NameId, NameId),
    /// `A₁ ⊓ A₂ ⊑ B`
    Conj(NameId, NameId, NameId),
    /// `A ⊑ ∃r.B`
    ExistsRhs(NameId, RoleId, NameId),
    /// `∃r.A ⊑ B`
    ExistsLhs(RoleId, NameId, NameId),
}

/// Where a normalized axiom came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    /// Produced from the input GCI at this position.
    Source(usize),
    /// Defines a fresh name as equivalent to the concept it abbreviates.
    Definition,
    /// Connects the fresh query names to the query's sides.
    Query,
}

pub(crate) const FRESH_PREFIX: &str = "_n";
pub(crate) const QUERY_LHS: &str = "_q_lhs";
pub(crate) const QUERY_RHS: &str = "_q_rhs";

/// A TBox in normal form, together with the interning tables and the
/// concepts abbreviated by fresh names.
#[derive(Clone, Debug)]
pub struct NormalizedTBox {
    pub(crate) names: Vec<String>,
    pub(crate) fresh: Vec<bool>,
    pub(crate) roles: Vec<String>,
    pub(crate) axioms: Vec<NormalAxiom>,
    pub(crate) origins: Vec<Origin>,
    definitions: BTreeMap<String, Concept>,
}

impl NormalizedTBox {
    pub fn axioms(&self) -> &[NormalAxiom] {
        &self.axioms
    }

    pub fn origins(&self) -> &[Origin] {
        &self.origins
    }

    pub fn name(&self, id: NameId) -> &str {
        &self.names[id as usize]
    }

    pub fn role(&self, id: RoleId) -> &str {
        &self.roles[id as usize]
    }

    pub fn name_id(&self, name: &str) -> Option<NameId> {
        self.names.iter().position(|n| n == name).map(|i| i as NameId)
    }

    pub fn is_fresh(&self, id: NameId) -> bool {
        self.fresh[id as usize]
    }

    pub fn num_names(&self) -> usize {
        self.names.len()
    }

    /// Fresh names and the complex concepts they stand for.
    pub fn definitions(&self) -> &BTreeMap<String, Concept> {
        &self.definitions
    }

    fn concept(&self, id: NameId) -> Concept {
        if id == TOP {
            Concept::Top
        } else {
            Concept::atom(self.name(id))
        }
    }

    /// Renders one normalized axiom as an ordinary GCI.
    pub fn to_gci(&self, axiom: &NormalAxiom) -> Gci {
        match *axiom {
            NormalAxiom::Sub(a, b) => Gci::new(self.concept(a), self.concept(b)),
            NormalAxiom::Conj(a1, a2, b) => Gci::new(
                Concept::and(self.concept(a1), self.concept(a2)),
                self.concept(b),
            ),
            NormalAxiom::ExistsRhs(a, r, b) => Gci::new(
                self.concept(a),
                Concept::exists(self.role(r), self.concept(b)),
            ),
            NormalAxiom::ExistsLhs(r, a, b) => Gci::new(
                Concept::exists(self.role(r), self.concept(a)),
                self.concept(b),
            ),
        }
    }

    pub fn to_gcis(&self) -> Vec<Gci> {
        self.axioms.iter().map(|a| self.to_gci(a)).collect()
    }
}

/// Structural key of a concept: conjunctions flattened, sorted and
/// deduplicated, `⊤` conjuncts dropped.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Key {
    Top,
    Atom(String),
    And(Vec<Key>),
    Exists(String, Box<Key>),
}

impl Key {
    fn of(concept: &Concept) -> Key {
        match concept {
            Concept::Top => Key::Top,
            Concept::Atom(a) => Key::Atom(a.clone()),
            Concept::Exists(r, f) => Key::Exists(r.clone(), Box::new(Key::of(f))),
            Concept::And(..) => {
                let mut parts = Vec::new();
                flatten(concept, &mut parts);
                Key::conjunction(parts)
            }
        }
    }

    fn conjunction(mut parts: Vec<Key>) -> Key {
        parts.retain(|k| *k != Key::Top);
        parts.sort();
        parts.dedup();
        match parts.len() {
            0 => Key::Top,
            1 => parts.pop().unwrap(),
            _ => Key::And(parts),
        }
    }
}

fn flatten(concept: &Concept, out: &mut Vec<Key>) {
    match concept {
        Concept::And(l, r) => {
            flatten(l, out);
            flatten(r, out);
        }
        other => out.push(Key::of(other)),
    }
}

enum Lhs {
    Name(NameId),
    Conj(NameId, NameId),
    Exists(RoleId, NameId),
}

enum RhsPiece {
    Name(NameId),
    Exists(RoleId, NameId),
}

pub(crate) struct Normalizer {
    names: Vec<String>,
    fresh: Vec<bool>,
    name_ids: HashMap<String, NameId>,
    roles: Vec<String>,
    role_ids: HashMap<String, RoleId>,
    reserved: HashSet<String>,
    memo: HashMap<Key, NameId>,
    abbreviates: HashMap<NameId, Key>,
    counter: usize,
    axioms: Vec<NormalAxiom>,
    origins: Vec<Origin>,
    seen: HashSet<(NormalAxiom, OriginKey)>,
}

#[derive(PartialEq, Eq, Hash)]
enum OriginKey {
    Source(usize),
    Definition,
    Query,
}

impl From<Origin> for OriginKey {
    fn from(o: Origin) -> Self {
        match o {
            Origin::Source(i) => OriginKey::Source(i),
            Origin::Definition => OriginKey::Definition,
            Origin::Query => OriginKey::Query,
        }
    }
}

impl Normalizer {
    /// `signature` lists every name that occurs in the input so fresh names
    /// never collide with it.
    pub(crate) fn new<'a>(signature: impl IntoIterator<Item = &'a Gci>) -> Self {
        let mut reserved = BTreeSet::new();
        for gci in signature {
            gci.lhs.collect_names(&mut reserved);
            gci.rhs.collect_names(&mut reserved);
        }
        let mut n = Normalizer {
            names: vec!["top".to_string()],
            fresh: vec![false],
            name_ids: HashMap::new(),
            roles: Vec::new(),
            role_ids: HashMap::new(),
            reserved: reserved.into_iter().map(str::to_string).collect(),
            memo: HashMap::new(),
            abbreviates: HashMap::new(),
            counter: 0,
            axioms: Vec::new(),
            origins: Vec::new(),
            seen: HashSet::new(),
        };
        // Input names get ids in sorted order so output is deterministic.
        let mut sorted: Vec<String> = n.reserved.iter().cloned().collect();
        sorted.sort();
        for name in sorted {
            n.intern(&name);
        }
        n
    }

    fn intern(&mut self, name: &str) -> NameId {
        if let Some(&id) = self.name_ids.get(name) {
            return id;
        }
        let id = self.names.len() as NameId;
        self.names.push(name.to_string());
        self.fresh.push(false);
        self.name_ids.insert(name.to_string(), id);
        id
    }

    fn intern_role(&mut self, role: &str) -> RoleId {
        if let Some(&id) = self.role_ids.get(role) {
            return id;
        }
        let id = self.roles.len() as RoleId;
        self.roles.push(role.to_string());
        self.role_ids.insert(role.to_string(), id);
        id
    }

    fn fresh_name(&mut self) -> NameId {
        loop {
            let candidate = format!("{FRESH_PREFIX}{}", self.counter);
            self.counter += 1;
            if !self.reserved.contains(&candidate) && !self.name_ids.contains_key(&candidate) {
                let id = self.intern(&candidate);
                self.fresh[id as usize] = true;
                return id;
            }
        }
    }

    /// Interns a reserved auxiliary name (query names). Collisions with
    /// input names are resolved by appending a suffix.
    pub(crate) fn auxiliary_name(&mut self, base: &str) -> NameId {
        let mut candidate = base.to_string();
        let mut k = 0;
        while self.reserved.contains(&candidate) || self.name_ids.contains_key(&candidate) {
            k += 1;
            candidate = format!("{base}{k}");
        }
        let id = self.intern(&candidate);
        self.fresh[id as usize] = true;
        id
    }

    fn emit(&mut self, axiom: NormalAxiom, origin: Origin) {
        if self.seen.insert((axiom, origin.into())) {
            self.axioms.push(axiom);
            self.origins.push(origin);
        }
    }

    /// Name standing for `key`, introducing a fresh name with defining
    /// axioms in both directions for complex concepts.
    fn name_of(&mut self, key: &Key) -> NameId {
        match key {
            Key::Top => TOP,
            Key::Atom(a) => self.intern(a),
            _ => {
                if let Some(&id) = self.memo.get(key) {
                    return id;
                }
                let id = match key {
                    Key::And(parts) => {
                        let names: Vec<NameId> = parts.iter().map(|p| self.name_of(p)).collect();
                        let left = if parts.len() == 2 {
                            names[0]
                        } else {
                            self.name_of(&Key::And(parts[..parts.len() - 1].to_vec()))
                        };
                        let right = names[names.len() - 1];
                        let x = self.fresh_name();
                        for &n in &names {
                            self.emit(NormalAxiom::Sub(x, n), Origin::Definition);
                        }
                        self.emit(NormalAxiom::Conj(left, right, x), Origin::Definition);
                        x
                    }
                    Key::Exists(role, filler) => {
                        let f = self.name_of(filler);
                        let r = self.intern_role(role);
                        let x = self.fresh_name();
                        self.emit(NormalAxiom::ExistsRhs(x, r, f), Origin::Definition);
                        self.emit(NormalAxiom::ExistsLhs(r, f, x), Origin::Definition);
                        x
                    }
                    Key::Top | Key::Atom(_) => unreachable!(),
                };
                self.memo.insert(key.clone(), id);
                self.abbreviates.insert(id, key.clone());
                id
            }
        }
    }

    fn lhs_form(&mut self, key: &Key) -> Lhs {
        match key {
            Key::Top => Lhs::Name(TOP),
            Key::Atom(a) => Lhs::Name(self.intern(a)),
            Key::Exists(role, filler) => {
                let f = self.name_of(filler);
                Lhs::Exists(self.intern_role(role), f)
            }
            Key::And(parts) => {
                let left = if parts.len() == 2 {
                    self.name_of(&parts[0])
                } else {
                    self.name_of(&Key::And(parts[..parts.len() - 1].to_vec()))
                };
                let right = self.name_of(&parts[parts.len() - 1]);
                Lhs::Conj(left, right)
            }
        }
    }

    fn rhs_pieces(&mut self, key: &Key) -> Vec<RhsPiece> {
        let parts: Vec<&Key> = match key {
            Key::And(parts) => parts.iter().collect(),
            other => vec![other],
        };
        let mut out = Vec::new();
        for part in parts {
            match part {
                Key::Top => {}
                Key::Atom(a) => out.push(RhsPiece::Name(self.intern(a))),
                Key::Exists(role, filler) => {
                    let f = self.name_of(filler);
                    out.push(RhsPiece::Exists(self.intern_role(role), f));
                }
                Key::And(_) => unreachable!("conjunction keys are flat"),
            }
        }
        out
    }

    /// Normalizes `lhs ⊑ rhs`, tagging the connecting axioms with `origin`.
    pub(crate) fn add_inclusion(&mut self, lhs: &Concept, rhs: &Concept, origin: Origin) {
        let lk = Key::of(lhs);
        let rk = Key::of(rhs);
        let pieces = self.rhs_pieces(&rk);
        if pieces.is_empty() {
            return;
        }
        let lhs_form = self.lhs_form(&lk);
        let mut named_lhs = match lhs_form {
            Lhs::Name(a) => Some(a),
            _ => None,
        };
        for piece in pieces {
            match (&lhs_form, piece) {
                (Lhs::Name(a), RhsPiece::Name(b)) => self.emit(NormalAxiom::Sub(*a, b), origin),
                (Lhs::Conj(a1, a2), RhsPiece::Name(b)) => {
                    self.emit(NormalAxiom::Conj(*a1, *a2, b), origin)
                }
                (Lhs::Exists(r, a), RhsPiece::Name(b)) => {
                    self.emit(NormalAxiom::ExistsLhs(*r, *a, b), origin)
                }
                (_, RhsPiece::Exists(r, b)) => {
                    let a = match named_lhs {
                        Some(a) => a,
                        None => {
                            let a = self.name_of(&lk);
                            named_lhs = Some(a);
                            a
                        }
                    };
                    self.emit(NormalAxiom::ExistsRhs(a, r, b), origin);
                }
            }
        }
    }

    /// Adds `name ⊑ concept`.
    pub(crate) fn add_name_below(&mut self, name: NameId, concept: &Concept, origin: Origin) {
        let rk = Key::of(concept);
        for piece in self.rhs_pieces(&rk) {
            match piece {
                RhsPiece::Name(b) => self.emit(NormalAxiom::Sub(name, b), origin),
                RhsPiece::Exists(r, b) => self.emit(NormalAxiom::ExistsRhs(name, r, b), origin),
            }
        }
    }

    /// Adds `concept ⊑ name`.
    pub(crate) fn add_name_above(&mut self, concept: &Concept, name: NameId, origin: Origin) {
        let lk = Key::of(concept);
        match self.lhs_form(&lk) {
            Lhs::Name(a) => self.emit(NormalAxiom::Sub(a, name), origin),
            Lhs::Conj(a1, a2) => self.emit(NormalAxiom::Conj(a1, a2, name), origin),
            Lhs::Exists(r, a) => self.emit(NormalAxiom::ExistsLhs(r, a, name), origin),
        }
    }

    pub(crate) fn finish(self) -> NormalizedTBox {
        let mut definitions = BTreeMap::new();
        for (id, key) in &self.abbreviates {
            definitions.insert(self.names[*id as usize].clone(), self.key_concept(key));
        }
        NormalizedTBox {
            names: self.names,
            fresh: self.fresh,
            roles: self.roles,
            axioms: self.axioms,
            origins: self.origins,
            definitions,
        }
    }

    fn key_concept(&self, key: &Key) -> Concept {
        match key {
            Key::Top => Concept::Top,
            Key::Atom(a) => Concept::atom(a.clone()),
            Key::Exists(r, f) => Concept::exists(r.clone(), self.key_concept(f)),
            Key::And(parts) => {
                let mut it = parts.iter().map(|p| self.key_concept(p));
                let first = it.next().expect("conjunction has at least two parts");
                it.fold(first, Concept::and)
            }
        }
    }
}

/// Brings a TBox into normal form. Entailments over the input signature
/// are preserved; fresh names use the reserved `_n` prefix.
pub fn normalize(tbox: &[Gci]) -> NormalizedTBox {
    let mut n = Normalizer::new(tbox);
    for (i, gci) in tbox.iter().enumerate() {
        n.add_inclusion(&gci.lhs, &gci.rhs, Origin::Source(i));
    }
    n.finish()
}

/// Normal axioms indexed by the premise they fire on.
#[derive(Default)]
pub(crate) struct AxiomIndex {
    /// `B ⊑ C`: B → [(C, axiom)]
    pub(crate) sub: HashMap<NameId, Vec<(NameId, usize)>>,
    /// `B ⊓ B2 ⊑ C`: B → [(B2, C, axiom)], both orientations
    pub(crate) conj: HashMap<NameId, Vec<(NameId, NameId, usize)>>,
    /// `B ⊑ ∃r.C`: B → [(r, C, axiom)]
    pub(crate) exists_rhs: HashMap<NameId, Vec<(RoleId, NameId, usize)>>,
    /// `∃r.B ⊑ C`: B → [(r, C, axiom)]
    pub(crate) exists_lhs: HashMap<NameId, Vec<(RoleId, NameId, usize)>>,
}

impl AxiomIndex {
    pub(crate) fn build(axioms: &[NormalAxiom]) -> Self {
        let mut idx = AxiomIndex::default();
        for (i, ax) in axioms.iter().enumerate() {
            match *ax {
                NormalAxiom::Sub(b, c) => idx.sub.entry(b).or_default().push((c, i)),
                NormalAxiom::Conj(b1, b2, c) => {
                    idx.conj.entry(b1).or_default().push((b2, c, i));
                    if b1 != b2 {
                        idx.conj.entry(b2).or_default().push((b1, c, i));
                    }
                }
                NormalAxiom::ExistsRhs(b, r, c) => {
                    idx.exists_rhs.entry(b).or_default().push((r, c, i))
                }
                NormalAxiom::ExistsLhs(r, b, c) => {
                    idx.exists_lhs.entry(b).or_default().push((r, c, i))
                }
            }
        }
        idx
    }
}

/// Plain completion saturation. Names are initialized on demand, so a
/// goal-directed run only explores what the start name reaches.
struct Saturation<'a> {
    index: &'a AxiomIndex,
    subsumers: Vec<Option<HashSet<NameId>>>,
    links: HashSet<(RoleId, NameId, NameId)>,
    /// (r, B) → A for every link A →r B
    preds: HashMap<(RoleId, NameId), Vec<NameId>>,
    queue: VecDeque<Step>,
}

enum Step {
    Sub(NameId, NameId),
    Link(RoleId, NameId, NameId),
}

impl<'a> Saturation<'a> {
    fn new(index: &'a AxiomIndex, num_names: usize) -> Self {
        Saturation {
            index,
            subsumers: vec![None; num_names],
            links: HashSet::new(),
            preds: HashMap::new(),
            queue: VecDeque::new(),
        }
    }

    fn init(&mut self, a: NameId) {
        if self.subsumers[a as usize].is_none() {
            self.subsumers[a as usize] = Some(HashSet::new());
            self.add(a, a);
            self.add(a, TOP);
        }
    }

    fn add(&mut self, a: NameId, b: NameId) {
        let set = self.subsumers[a as usize]
            .as_mut()
            .expect("subsumers added only to initialized names");
        if set.insert(b) {
            self.queue.push_back(Step::Sub(a, b));
        }
    }

    fn link(&mut self, r: RoleId, a: NameId, b: NameId) {
        if self.links.insert((r, a, b)) {
            self.preds.entry((r, b)).or_default().push(a);
            self.init(b);
            self.queue.push_back(Step::Link(r, a, b));
        }
    }

    fn contains(&self, a: NameId, b: NameId) -> bool {
        self.subsumers[a as usize]
            .as_ref()
            .is_some_and(|s| s.contains(&b))
    }

    fn run(&mut self) {
        let index = self.index;
        while let Some(step) = self.queue.pop_front() {
            match step {
                Step::Sub(a, b) => {
                    if let Some(rules) = index.sub.get(&b) {
                        for &(c, _) in rules {
                            self.add(a, c);
                        }
                    }
                    if let Some(rules) = index.conj.get(&b) {
                        for &(other, c, _) in rules {
                            if self.contains(a, other) {
                                self.add(a, c);
                            }
                        }
                    }
                    if let Some(rules) = index.exists_rhs.get(&b) {
                        for &(r, c, _) in rules {
                            self.link(r, a, c);
                        }
                    }
                    if let Some(rules) = index.exists_lhs.get(&b) {
                        for &(r, c, _) in rules {
                            let preds = self.preds.get(&(r, a)).cloned().unwrap_or_default();
                            for p in preds {
                                self.add(p, c);
                            }
                        }
                    }
                }
                Step::Link(r, a, b) => {
                    let fillers: Vec<NameId> = self.subsumers[b as usize]
                        .as_ref()
                        .map(|s| s.iter().copied().collect())
                        .unwrap_or_default();
                    for filler in fillers {
                        if let Some(rules) = index.exists_lhs.get(&filler) {
                            for &(role, c, _) in rules {
                                if role == r {
                                    self.add(a, c);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// The subsumption relation computed by [`classify`].
#[derive(Clone, Debug)]
pub struct Classification {
    names: Vec<String>,
    fresh: Vec<bool>,
    subsumers: Vec<BTreeSet<NameId>>,
}

impl Classification {
    fn id(&self, name: &str) -> Option<usize> {
        if name == "top" {
            return Some(TOP as usize);
        }
        self.names.iter().skip(1).position(|n| n == name).map(|i| i + 1)
    }

    /// Whether `sub ⊑ sup` holds. `"top"` denotes `⊤`.
    pub fn subsumes(&self, sub: &str, sup: &str) -> bool {
        match (self.id(sub), self.id(sup)) {
            (Some(a), Some(b)) => self.subsumers[a].contains(&(b as NameId)),
            _ => false,
        }
    }

    /// Every derived pair `(A, B)` with `A ⊑ B`, fresh names included.
    pub fn pairs(&self) -> BTreeSet<(String, String)> {
        self.collect(true)
    }

    /// Pairs restricted to names of the input signature.
    pub fn named_pairs(&self) -> BTreeSet<(String, String)> {
        self.collect(false)
    }

    fn collect(&self, include_fresh: bool) -> BTreeSet<(String, String)> {
        let mut out = BTreeSet::new();
        for (a, sups) in self.subsumers.iter().enumerate().skip(1) {
            if !include_fresh && self.fresh[a] {
                continue;
            }
            for &b in sups {
                if !include_fresh && self.fresh[b as usize] {
                    continue;
                }
                out.insert((self.names[a].clone(), self.names[b as usize].clone()));
            }
        }
        out
    }
}

/// Saturates the completion rules over every name of `tbox`.
pub fn classify(tbox: &NormalizedTBox) -> Classification {
    let index = AxiomIndex::build(&tbox.axioms);
    let mut sat = Saturation::new(&index, tbox.names.len());
    for a in 1..tbox.names.len() {
        sat.init(a as NameId);
    }
    sat.run();
    let subsumers = sat
        .subsumers
        .into_iter()
        .map(|s| s.map(|s| s.into_iter().collect()).unwrap_or_default())
        .collect();
    Classification {
        names: tbox.names.clone(),
        fresh: tbox.fresh.clone(),
        subsumers,
    }
}

/// Builds the normalized TBox for `tbox` extended by `_q_lhs ⊑ query.lhs`
/// and `query.rhs ⊑ _q_rhs`; returns it with the two query names.
pub(crate) fn normalize_with_query<'a>(
    tbox: impl IntoIterator<Item = (&'a Gci, Origin)> + Clone,
    query: &Gci,
) -> (NormalizedTBox, NameId, NameId) {
    let signature = tbox
        .clone()
        .into_iter()
        .map(|(g, _)| g)
        .chain(std::iter::once(query));
    let mut n = Normalizer::new(signature);
    for (gci, origin) in tbox {
        n.add_inclusion(&gci.lhs, &gci.rhs, origin);
    }
    let q_lhs = n.auxiliary_name(QUERY_LHS);
    let q_rhs = n.auxiliary_name(QUERY_RHS);
    n.add_name_below(q_lhs, &query.lhs, Origin::Query);
    n.add_name_above(&query.rhs, q_rhs, Origin::Query);
    (n.finish(), q_lhs, q_rhs)
}

/// Decides `tbox ⊨ query`.
pub fn entails(tbox: &[Gci], query: &Gci) -> bool {
    let (normalized, q_lhs, q_rhs) = normalize_with_query(
        tbox.iter().enumerate().map(|(i, g)| (g, Origin::Source(i))),
        query,
    );
    let index = AxiomIndex::build(&normalized.axioms);
    let mut sat = Saturation::new(&index, normalized.names.len());
    sat.init(q_lhs);
    sat.run();
    sat.contains(q_lhs, q_rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: &str) -> Concept {
        Concept::atom(n)
    }

    fn rendered(t: &NormalizedTBox) -> BTreeSet<String> {
        t.to_gcis().iter().map(|g| g.to_string()).collect()
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    pub(crate) fn example_tbox() -> Vec<Gci> {
        let use_ = |c| Concept::exists("use", c);
        vec![
            Gci::new(a("Comp"), Concept::and(use_(a("Mem")), use_(a("CPU")))),
            Gci::new(use_(a("FailMem")), a("FailComp")),
            Gci::new(use_(a("FailCPU")), a("FailComp")),
            Gci::new(
                Concept::and(use_(a("FailMem")), use_(a("FailCPU"))),
                a("FailComp"),
            ),
            Gci::atomic("Mem", "FailMem"),
            Gci::atomic("CPU", "FailCPU"),
        ]
    }

    #[test]
    fn normal_axiom_passes_through() {
        let t = normalize(&[Gci::atomic("A", "B")]);
        assert_eq!(rendered(&t), set(&["A <= B"]));
        assert!(t.definitions().is_empty());
    }

    #[test]
    fn existential_with_conjunctive_filler() {
        let t = normalize(&[Gci::new(
            a("A"),
            Concept::exists("r", Concept::and(a("B"), a("C"))),
        )]);
        assert_eq!(
            rendered(&t),
            set(&["A <= exists r . _n0", "_n0 <= B", "_n0 <= C", "B and C <= _n0"])
        );
        assert_eq!(
            t.definitions().get("_n0"),
            Some(&Concept::and(a("B"), a("C")))
        );
    }

    #[test]
    fn conjunctive_rhs_is_split() {
        let t = normalize(&example_tbox()[..1]);
        assert_eq!(
            rendered(&t),
            set(&["Comp <= exists use . Mem", "Comp <= exists use . CPU"])
        );
    }

    #[test]
    fn conjunction_order_does_not_matter() {
        let t = normalize(&[
            Gci::new(a("X"), Concept::exists("r", Concept::and(a("B"), a("C")))),
            Gci::new(a("Y"), Concept::exists("r", Concept::and(a("C"), a("B")))),
        ]);
        assert_eq!(t.definitions().len(), 1);
    }

    #[test]
    fn fresh_names_avoid_input_names() {
        let t = normalize(&[Gci::new(
            a("_n0"),
            Concept::exists("r", Concept::exists("s", a("B"))),
        )]);
        assert!(t.name_id("_n0").is_some_and(|id| !t.is_fresh(id)));
        assert!(t.definitions().contains_key("_n1"));
        assert!(!t.definitions().contains_key("_n0"));
    }

    #[test]
    fn empty_tbox_classification() {
        let t = normalize(&[Gci::new(a("A"), Concept::Top)]);
        let c = classify(&t);
        assert_eq!(
            c.pairs(),
            [("A".to_string(), "A".to_string()), ("A".to_string(), "top".to_string())]
                .into_iter()
                .collect()
        );
    }

    #[test]
    fn transitivity() {
        let c = classify(&normalize(&[Gci::atomic("A", "B"), Gci::atomic("B", "C")]));
        assert!(c.subsumes("A", "C"));
        assert!(!c.subsumes("C", "A"));
    }

    #[test]
    fn world_xz_entails_failure() {
        // O_W for W = {x, ¬y, z}
        let full = example_tbox();
        let tbox = vec![full[0].clone(), full[1].clone(), full[2].clone(), full[5].clone()];
        let c = classify(&normalize(&tbox));
        assert!(c.subsumes("Comp", "FailComp"));
        assert!(entails(&tbox, &Gci::atomic("Comp", "FailComp")));
    }

    #[test]
    fn world_not_x_y_not_z_does_not_entail_failure() {
        // O_W for W = {¬x, y, ¬z}: only the unconditional axiom, the ¬x
        // conjunctive rule and Mem ⊑ FailMem survive. The canonical model
        // has Comp with use-successors Mem (also FailMem) and CPU (not
        // FailCPU), so the conjunctive rule never fires.
        let full = example_tbox();
        let tbox = vec![full[0].clone(), full[3].clone(), full[4].clone()];
        assert!(!entails(&tbox, &Gci::atomic("Comp", "FailComp")));
        assert!(entails(
            &tbox,
            &Gci::new(a("Comp"), Concept::exists("use", a("FailMem")))
        ));
    }

    #[test]
    fn trivial_entailments() {
        assert!(entails(&[], &Gci::atomic("A", "A")));
        assert!(entails(&[], &Gci::new(a("A"), Concept::Top)));
        assert!(!entails(&[], &Gci::atomic("A", "B")));
        assert!(entails(&[], &Gci::new(Concept::and(a("A"), a("B")), a("B"))));
    }

    #[test]
    fn complex_query_sides() {
        let tbox = vec![
            Gci::new(a("A"), Concept::exists("r", a("B"))),
            Gci::atomic("B", "C"),
            Gci::new(Concept::exists("r", a("C")), a("D")),
        ];
        assert!(entails(&tbox, &Gci::atomic("A", "D")));
        assert!(entails(
            &tbox,
            &Gci::new(a("A"), Concept::and(a("D"), Concept::exists("r", a("C"))))
        ));
        assert!(entails(
            &tbox,
            &Gci::new(Concept::exists("r", a("B")), a("D"))
        ));
        assert!(!entails(
            &tbox,
            &Gci::new(Concept::exists("r", a("A")), a("D"))
        ));
    }

    #[test]
    fn top_on_left() {
        let tbox = vec![Gci::new(Concept::Top, a("A")), Gci::new(Concept::exists("r", a("A")), a("B"))];
        assert!(entails(&tbox, &Gci::new(Concept::exists("r", Concept::Top), a("B"))));
        assert!(entails(&tbox, &Gci::atomic("Z", "A")));
    }

    #[test]
    fn classification_is_idempotent() {
        let tbox = example_tbox();
        let c = classify(&normalize(&tbox));
        let mut extended = tbox.clone();
        for (x, y) in c.named_pairs() {
            let to = |n: &str| if n == "top" { Concept::Top } else { a(n) };
            extended.push(Gci::new(to(&x), to(&y)));
        }
        let again = classify(&normalize(&extended));
        assert_eq!(again.named_pairs(), c.named_pairs());
    }

    #[test]
    fn display_round_shapes() {
        let c = Concept::and(
            Concept::exists("r", Concept::and(a("A"), a("B"))),
            Concept::and(a("C"), Concept::Top),
        );
        assert_eq!(c.to_string(), "exists r . (A and B) and (C and top)");
        assert_eq!(c.depth(), 3);
    }
}
