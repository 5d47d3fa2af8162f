//! The corpus and carriers shipped with the crate.

use std::sync::Arc;

use crate::eval::FiniteCarrier;
use crate::parser::{parse_carrier, ParseError};
use crate::registry::{LoadError, Registry};

macro_rules! bundle {
    ($($name:ident => $path:literal),* $(,)?) => {
        $(pub const $name: (&str, &str) = ($path, include_str!(concat!("../../../", $path)));)*
    };
}

bundle! {
    HIERARCHY => "corpus/hierarchy.tc",
    DERIVED => "corpus/derived.tc",
    NAT_ACTION => "corpus/nat_action.tc",
    OPPOSITE => "corpus/opposite.tc",
    DIAMOND_NAIVE => "corpus/diamond_naive.tc",
    DIAMOND_FIXED => "corpus/diamond_fixed.tc",
}

/// Files loaded when no corpus is given, in load order.
pub const DEFAULT_CORPUS: [(&str, &str); 4] = [HIERARCHY, DERIVED, NAT_ACTION, OPPOSITE];

/// Every bundled corpus file.
pub const CORPUS: [(&str, &str); 6] = [HIERARCHY, DERIVED, NAT_ACTION, OPPOSITE, DIAMOND_NAIVE, DIAMOND_FIXED];

pub const CARRIERS: [(&str, &str); 9] = [
    ("zmod2", include_str!("../../../carriers/zmod2.car")),
    ("zmod3", include_str!("../../../carriers/zmod3.car")),
    ("zmod4", include_str!("../../../carriers/zmod4.car")),
    ("zmod4_bad", include_str!("../../../carriers/zmod4_bad.car")),
    ("noncomm2", include_str!("../../../carriers/noncomm2.car")),
    ("trivial", include_str!("../../../carriers/trivial.car")),
    ("idx2", include_str!("../../../carriers/idx2.car")),
    ("idx3", include_str!("../../../carriers/idx3.car")),
    ("idx0", "version 1\ncarrier idx0\nelems\n"),
];

pub fn default_registry() -> Result<Registry, LoadError> {
    Registry::from_sources(DEFAULT_CORPUS)
}

/// A bundled carrier by name.
pub fn carrier(name: &str) -> Option<Result<Arc<FiniteCarrier>, ParseError>> {
    CARRIERS.iter().find(|(n, _)| *n == name).map(|(n, text)| parse_carrier(&format!("{n}.car"), text).map(Arc::new))
}
