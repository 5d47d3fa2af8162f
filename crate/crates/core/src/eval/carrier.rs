use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// A total operation table over one carrier, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpTable {
    arity: usize,
    size: usize,
    entries: Vec<usize>,
}

impl OpTable {
    pub fn new(arity: usize, size: usize, entries: Vec<usize>) -> Self {
        OpTable { arity, size, entries }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn apply(&self, args: &[usize]) -> usize {
        debug_assert_eq!(args.len(), self.arity);
        let k = args.iter().fold(0, |k, a| k * self.size + a);
        self.entries[k]
    }

    fn tabulate(arity: usize, size: usize, mut f: impl FnMut(&[usize]) -> usize) -> Self {
        let total = size.pow(arity as u32);
        let mut args = vec![0; arity];
        let mut entries = Vec::with_capacity(total);
        for mut k in 0..total {
            for slot in args.iter_mut().rev() {
                *slot = k % size;
                k /= size;
            }
            entries.push(f(&args));
        }
        OpTable { arity, size, entries }
    }
}

/// How a derived carrier's elements relate to other carriers.
#[derive(Clone, Debug)]
pub enum Structure {
    Plain,
    /// All functions `index -> base`; `graphs[e][i]` is the value of
    /// element `e` at index `i`.
    Function {
        index: Arc<FiniteCarrier>,
        base: Arc<FiniteCarrier>,
        graphs: Vec<Vec<usize>>,
    },
    /// Additive maps `dom -> cod`.
    AddHom {
        dom: Arc<FiniteCarrier>,
        cod: Arc<FiniteCarrier>,
        graphs: Vec<Vec<usize>>,
    },
    /// Same elements as `base`, multiplication reversed.
    Opposite {
        base: Arc<FiniteCarrier>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CarrierError {
    #[error("table `{op}`: {reason}")]
    BadTable { op: String, reason: String },
    #[error("carrier `{carrier}` declares {structure} but has no `{op}` table")]
    MissingOp { carrier: String, structure: String, op: String },
    #[error("carrier `{carrier}` violates {law}: {detail}")]
    LawViolation { carrier: String, law: String, detail: String },
    #[error("unknown structure `{0}` in declares")]
    UnknownStructure(String),
    #[error("carrier `{name}` would have {size} elements, above the cap of {cap}")]
    TooLarge { name: String, size: u128, cap: usize },
}

/// A named finite set with operation tables.
#[derive(Clone, Debug)]
pub struct FiniteCarrier {
    name: String,
    elems: Vec<String>,
    tables: BTreeMap<String, OpTable>,
    declares: Vec<String>,
    structure: Structure,
    graph_ix: HashMap<Vec<usize>, usize>,
}

const STRUCTURES: [&str; 6] =
    ["add_comm_monoid", "add_comm_group", "monoid", "comm_monoid", "semiring", "comm_semiring"];

/// Functions enumerated while filtering additive maps.
const ADD_HOM_SEARCH_CAP: u128 = 1 << 22;

impl FiniteCarrier {
    /// Builds a plain carrier and checks the laws of every declared
    /// structure.
    pub fn from_tables(
        name: impl Into<String>,
        elems: Vec<String>,
        tables: BTreeMap<String, OpTable>,
        declares: Vec<String>,
    ) -> Result<Self, CarrierError> {
        let n = elems.len();
        for (op, t) in &tables {
            let bad = |reason: String| CarrierError::BadTable { op: op.clone(), reason };
            if t.size != n {
                return Err(bad(format!("built for {} elements, carrier has {n}", t.size)));
            }
            if t.entries.len() != n.pow(t.arity as u32) {
                return Err(bad("wrong number of entries".into()));
            }
            if t.entries.iter().any(|&e| e >= n) {
                return Err(bad("entry out of range".into()));
            }
        }
        let c = FiniteCarrier {
            name: name.into(),
            elems,
            tables,
            declares,
            structure: Structure::Plain,
            graph_ix: HashMap::new(),
        };
        for s in &c.declares {
            if !STRUCTURES.contains(&s.as_str()) {
                return Err(CarrierError::UnknownStructure(s.clone()));
            }
            c.check_structure(s)?;
        }
        Ok(c)
    }

    /// A carrier with elements only, used as a function index.
    pub fn index_set(name: impl Into<String>, size: usize) -> Self {
        let elems = (0..size).map(|i| format!("i{i}")).collect();
        FiniteCarrier::from_tables(name, elems, BTreeMap::new(), Vec::new()).expect("no tables to check")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn elements(&self) -> &[String] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn table(&self, op: &str) -> Option<&OpTable> {
        self.tables.get(op)
    }

    pub fn tables(&self) -> &BTreeMap<String, OpTable> {
        &self.tables
    }

    pub fn declares(&self) -> &[String] {
        &self.declares
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn index_of(&self, elem: &str) -> Option<usize> {
        self.elems.iter().position(|e| e == elem)
    }

    /// Element of a function or additive-map carrier with the given graph.
    pub fn graph_index(&self, graph: &[usize]) -> Option<usize> {
        self.graph_ix.get(graph).copied()
    }

    pub fn op(&self, op: &str, args: &[usize]) -> Option<usize> {
        self.table(op).filter(|t| t.arity == args.len()).map(|t| t.apply(args))
    }

    fn need(&self, structure: &str, op: &str, arity: usize) -> Result<&OpTable, CarrierError> {
        self.table(op).filter(|t| t.arity == arity).ok_or_else(|| CarrierError::MissingOp {
            carrier: self.name.clone(),
            structure: structure.to_string(),
            op: op.to_string(),
        })
    }

    fn law(&self, law: &str, holds: impl Fn(&[usize]) -> bool, vars: usize) -> Result<(), CarrierError> {
        let n = self.len();
        let mut args = vec![0; vars];
        for mut k in 0..n.pow(vars as u32) {
            for slot in args.iter_mut().rev() {
                *slot = k % n;
                k /= n;
            }
            if !holds(&args) {
                let detail = args.iter().map(|&a| self.elems[a].as_str()).collect::<Vec<_>>().join(", ");
                return Err(CarrierError::LawViolation {
                    carrier: self.name.clone(),
                    law: law.to_string(),
                    detail: format!("at ({detail})"),
                });
            }
        }
        Ok(())
    }

    fn check_monoid_laws(&self, s: &str, op: &str, unit: &str) -> Result<(), CarrierError> {
        let m = self.need(s, op, 2)?;
        let e = self.need(s, unit, 0)?.apply(&[]);
        self.law(
            &format!("{unit} is an identity for {op}"),
            |a| m.apply(&[e, a[0]]) == a[0] && m.apply(&[a[0], e]) == a[0],
            1,
        )?;
        self.law(
            &format!("associativity of {op}"),
            |a| m.apply(&[m.apply(&[a[0], a[1]]), a[2]]) == m.apply(&[a[0], m.apply(&[a[1], a[2]])]),
            3,
        )
    }

    fn check_comm(&self, s: &str, op: &str) -> Result<(), CarrierError> {
        let m = self.need(s, op, 2)?;
        self.law(&format!("commutativity of {op}"), |a| m.apply(&[a[0], a[1]]) == m.apply(&[a[1], a[0]]), 2)
    }

    fn check_structure(&self, s: &str) -> Result<(), CarrierError> {
        match s {
            "add_comm_monoid" => {
                self.check_monoid_laws(s, "add", "zero")?;
                self.check_comm(s, "add")
            }
            "add_comm_group" => {
                self.check_structure("add_comm_monoid")?;
                let add = self.need(s, "add", 2)?;
                let neg = self.need(s, "neg", 1)?;
                let zero = self.need(s, "zero", 0)?.apply(&[]);
                self.law("neg is an additive inverse", |a| add.apply(&[a[0], neg.apply(&[a[0]])]) == zero, 1)
            }
            "monoid" => self.check_monoid_laws(s, "mul", "one"),
            "comm_monoid" => {
                self.check_monoid_laws(s, "mul", "one")?;
                self.check_comm(s, "mul")
            }
            "semiring" | "comm_semiring" => {
                self.check_structure("add_comm_monoid")?;
                self.check_monoid_laws(s, "mul", "one")?;
                if s == "comm_semiring" {
                    self.check_comm(s, "mul")?;
                }
                let add = self.need(s, "add", 2)?;
                let mul = self.need(s, "mul", 2)?;
                let zero = self.need(s, "zero", 0)?.apply(&[]);
                self.law(
                    "zero annihilates mul",
                    |a| mul.apply(&[zero, a[0]]) == zero && mul.apply(&[a[0], zero]) == zero,
                    1,
                )?;
                self.law(
                    "distributivity",
                    |a| {
                        let (x, y, z) = (a[0], a[1], a[2]);
                        mul.apply(&[x, add.apply(&[y, z])]) == add.apply(&[mul.apply(&[x, y]), mul.apply(&[x, z])])
                            && mul.apply(&[add.apply(&[x, y]), z])
                                == add.apply(&[mul.apply(&[x, z]), mul.apply(&[y, z])])
                    },
                    3,
                )
            }
            other => Err(CarrierError::UnknownStructure(other.to_string())),
        }
    }

    fn is_additive(&self) -> bool {
        self.declares.iter().any(|d| d.starts_with("add_comm") || d.ends_with("semiring"))
    }
}

impl fmt::Display for FiniteCarrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} elements)", self.name, self.len())
    }
}

fn graph_name(base: &FiniteCarrier, graph: &[usize]) -> String {
    let parts: Vec<&str> = graph.iter().map(|&g| base.elems[g].as_str()).collect();
    format!("[{}]", parts.join(" "))
}

fn graphs_all(index: usize, base: usize) -> Vec<Vec<usize>> {
    let total = base.pow(index as u32);
    (0..total)
        .map(|mut k| {
            let mut g = vec![0; index];
            for slot in g.iter_mut().rev() {
                *slot = k % base;
                k /= base;
            }
            g
        })
        .collect()
}

/// Pointwise lift of each table of `base` along `graphs`.
fn pointwise(
    base: &FiniteCarrier,
    graphs: &[Vec<usize>],
    ix: &HashMap<Vec<usize>, usize>,
    ops: impl Fn(&str) -> bool,
) -> BTreeMap<String, OpTable> {
    let width = graphs.first().map_or(0, |g| g.len());
    base.tables
        .iter()
        .filter(|(op, _)| ops(op))
        .filter_map(|(op, t)| {
            let mut bad = false;
            let table = OpTable::tabulate(t.arity, graphs.len(), |args| {
                let g: Vec<usize> =
                    (0..width).map(|i| t.apply(&args.iter().map(|&a| graphs[a][i]).collect::<Vec<_>>())).collect();
                ix.get(&g).copied().unwrap_or_else(|| {
                    bad = true;
                    0
                })
            });
            (!bad).then(|| (op.clone(), table))
        })
        .collect()
}

fn too_large(name: &str, size: u128, cap: usize) -> Result<(), CarrierError> {
    if size > cap as u128 {
        return Err(CarrierError::TooLarge { name: name.to_string(), size, cap });
    }
    Ok(())
}

/// All functions `index -> base`, with pointwise tables.
pub fn build_function_carrier(
    index: &Arc<FiniteCarrier>,
    base: &Arc<FiniteCarrier>,
    cap: usize,
) -> Result<FiniteCarrier, CarrierError> {
    let name = format!("fn({}, {})", index.name, base.name);
    let size = (base.len() as u128).checked_pow(index.len() as u32).unwrap_or(u128::MAX);
    too_large(&name, size, cap)?;
    let graphs = graphs_all(index.len(), base.len());
    let graph_ix: HashMap<Vec<usize>, usize> = graphs.iter().cloned().enumerate().map(|(i, g)| (g, i)).collect();
    let tables = pointwise(base, &graphs, &graph_ix, |_| true);
    Ok(FiniteCarrier {
        name,
        elems: graphs.iter().map(|g| graph_name(base, g)).collect(),
        tables,
        declares: base.declares.clone(),
        structure: Structure::Function { index: index.clone(), base: base.clone(), graphs },
        graph_ix,
    })
}

/// Additive maps `dom -> cod`, found by filtering all functions.
pub fn build_add_hom_carrier(
    dom: &Arc<FiniteCarrier>,
    cod: &Arc<FiniteCarrier>,
    cap: usize,
) -> Result<FiniteCarrier, CarrierError> {
    let name = format!("add_hom({}, {})", dom.name, cod.name);
    for c in [dom, cod] {
        if !c.is_additive() {
            return Err(CarrierError::MissingOp {
                carrier: c.name.clone(),
                structure: "add_comm_monoid".into(),
                op: "add".into(),
            });
        }
    }
    let total = (cod.len() as u128).checked_pow(dom.len() as u32).unwrap_or(u128::MAX);
    if total > ADD_HOM_SEARCH_CAP {
        return Err(CarrierError::TooLarge { name, size: total, cap });
    }
    let (dz, cz) =
        (dom.need("add_comm_monoid", "zero", 0)?.apply(&[]), cod.need("add_comm_monoid", "zero", 0)?.apply(&[]));
    let (dadd, cadd) = (dom.need("add_comm_monoid", "add", 2)?, cod.need("add_comm_monoid", "add", 2)?);
    let n = dom.len();
    let graphs: Vec<Vec<usize>> = graphs_all(n, cod.len())
        .into_iter()
        .filter(|g| g[dz] == cz && (0..n).all(|x| (0..n).all(|y| g[dadd.apply(&[x, y])] == cadd.apply(&[g[x], g[y]]))))
        .collect();
    too_large(&name, graphs.len() as u128, cap)?;
    let graph_ix: HashMap<Vec<usize>, usize> = graphs.iter().cloned().enumerate().map(|(i, g)| (g, i)).collect();
    let tables = pointwise(cod, &graphs, &graph_ix, |op| matches!(op, "add" | "zero" | "neg"));
    let mut declares = vec!["add_comm_monoid".to_string()];
    if tables.contains_key("neg") {
        declares.push("add_comm_group".into());
    }
    Ok(FiniteCarrier {
        name,
        elems: graphs.iter().map(|g| graph_name(cod, g)).collect(),
        tables,
        declares,
        structure: Structure::AddHom { dom: dom.clone(), cod: cod.clone(), graphs },
        graph_ix,
    })
}

/// Same elements tagged `op`, with the multiplication table transposed.
pub fn build_opposite_carrier(c: &Arc<FiniteCarrier>) -> Result<FiniteCarrier, CarrierError> {
    let mul = c.table("mul").filter(|t| t.arity == 2).ok_or_else(|| CarrierError::MissingOp {
        carrier: c.name.clone(),
        structure: "opposite".into(),
        op: "mul".into(),
    })?;
    let mut tables = c.tables.clone();
    tables.insert("mul".into(), OpTable::tabulate(2, c.len(), |a| mul.apply(&[a[1], a[0]])));
    Ok(FiniteCarrier {
        name: format!("op({})", c.name),
        elems: c.elems.iter().map(|e| format!("op {e}")).collect(),
        tables,
        declares: c.declares.clone(),
        structure: Structure::Opposite { base: c.clone() },
        graph_ix: HashMap::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn zmod(n: usize) -> FiniteCarrier {
        let mut tables = BTreeMap::new();
        tables.insert("zero".into(), OpTable::new(0, n, vec![0]));
        tables.insert("one".into(), OpTable::new(0, n, vec![1 % n]));
        tables.insert("add".into(), OpTable::tabulate(2, n, |a| (a[0] + a[1]) % n));
        tables.insert("mul".into(), OpTable::tabulate(2, n, |a| (a[0] * a[1]) % n));
        let elems = (0..n).map(|i| i.to_string()).collect();
        FiniteCarrier::from_tables(format!("zmod{n}"), elems, tables, vec!["comm_semiring".into()]).unwrap()
    }

    #[test]
    fn function_carrier_sizes() {
        let z2 = Arc::new(zmod(2));
        let z3 = Arc::new(zmod(3));
        let i2 = Arc::new(FiniteCarrier::index_set("i2", 2));
        let i3 = Arc::new(FiniteCarrier::index_set("i3", 3));
        let i0 = Arc::new(FiniteCarrier::index_set("i0", 0));
        assert_eq!(build_function_carrier(&i2, &z2, 256).unwrap().len(), 4);
        assert_eq!(build_function_carrier(&i3, &z3, 256).unwrap().len(), 27);
        assert_eq!(build_function_carrier(&i0, &z3, 256).unwrap().len(), 1);
        assert!(matches!(build_function_carrier(&i3, &z3, 26), Err(CarrierError::TooLarge { .. })));
    }

    #[test]
    fn function_tables_are_pointwise() {
        let z2 = Arc::new(zmod(2));
        let i2 = Arc::new(FiniteCarrier::index_set("i2", 2));
        let f = build_function_carrier(&i2, &z2, 256).unwrap();
        let a = f.graph_index(&[0, 1]).unwrap();
        let b = f.graph_index(&[1, 1]).unwrap();
        let sum = f.op("add", &[a, b]).unwrap();
        assert_eq!(f.elements()[sum], "[1 0]");
    }

    #[test]
    fn add_hom_filters_additive_maps() {
        let z2 = Arc::new(zmod(2));
        let z4 = Arc::new(zmod(4));
        let h = build_add_hom_carrier(&z2, &z2, 256).unwrap();
        assert_eq!(h.elements(), ["[0 0]", "[0 1]"]);
        let h = build_add_hom_carrier(&z2, &z4, 256).unwrap();
        assert_eq!(h.elements(), ["[0 0]", "[0 2]"]);
        let mut t = BTreeMap::new();
        t.insert("zero".into(), OpTable::new(0, 1, vec![0]));
        t.insert("add".into(), OpTable::new(2, 1, vec![0]));
        let triv =
            Arc::new(FiniteCarrier::from_tables("triv", vec!["z".into()], t, vec!["add_comm_monoid".into()]).unwrap());
        assert_eq!(build_add_hom_carrier(&triv, &z4, 256).unwrap().len(), 1);
    }

    #[test]
    fn opposite_transposes_mul() {
        let z3 = Arc::new(zmod(3));
        let o = build_opposite_carrier(&z3).unwrap();
        assert_eq!(o.table("mul"), z3.table("mul"));
        assert_eq!(o.elements()[1], "op 1");
    }

    #[test]
    fn law_violation_reported() {
        let mut tables = BTreeMap::new();
        tables.insert("zero".into(), OpTable::new(0, 2, vec![0]));
        tables.insert("add".into(), OpTable::new(2, 2, vec![0, 1, 1, 1]));
        let e = FiniteCarrier::from_tables("c", vec!["0".into(), "1".into()], tables, vec!["add_comm_group".into()]);
        assert!(matches!(e, Err(CarrierError::MissingOp { .. })));
    }
}
