use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::{LogicalCorpus, RESERVED_CONTAINMENT_LABELS};
use crate::model::{EdgeId, NodeId, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    NoSlots,
    SlotNumbering,
    SlotOverlap,
    RegionOutOfBounds,
    EmptyRegion,
    EmptyMonads,
    MalformedMonads,
    MonadOutOfRange,
    DuplicateId,
    SlotNodeArity,
    SlotUncovered,
    SlotShared,
    DanglingEdge,
    ReservedSelfLoop,
    DanglingTarget,
    DuplicateFeature,
    UnknownRegion,
    // warnings
    UnusedRegion,
    NonIntegerValue,
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit enum serializes");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

/// Where a problem was found. For in-memory corpora `file` names the list
/// (`slots`, `nodes`, ...) and `line` is the 1-based position in it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Location {
    pub file: String,
    pub line: u32,
}

impl Location {
    pub fn new(file: impl Into<String>, line: u32) -> Self {
        Location {
            file: file.into(),
            line,
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub code: IssueCode,
    pub location: Location,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} {}", self.location, self.code, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has(&self, code: IssueCode) -> bool {
        self.errors.iter().any(|i| i.code == code)
    }

    pub(crate) fn error(&mut self, code: IssueCode, location: Location, message: impl Into<String>) {
        self.errors.push(Issue {
            code,
            location,
            message: message.into(),
        });
    }

    pub(crate) fn warning(
        &mut self,
        code: IssueCode,
        location: Location,
        message: impl Into<String>,
    ) {
        self.warnings.push(Issue {
            code,
            location,
            message: message.into(),
        });
    }

    pub(crate) fn merge(&mut self, other: ValidationReport) {
        self.errors.extend(other.errors);
        self.warnings.extend(other.warnings);
    }

    pub(crate) fn sort(&mut self) {
        let key = |i: &Issue| (i.location.clone(), i.code);
        self.errors.sort_by_key(key);
        self.warnings.sort_by_key(key);
    }

    pub fn summary(&self) -> String {
        match self.errors.first() {
            None => "no errors".to_string(),
            Some(first) if self.errors.len() == 1 => first.to_string(),
            Some(first) => format!("{first} (and {} more)", self.errors.len() - 1),
        }
    }
}

/// Source positions of corpus entities, recorded by the parsers so that
/// validation can point back into the input files.
#[derive(Debug, Default)]
pub(crate) struct Origins {
    pub slots: HashMap<u32, Location>,
    pub nodes: HashMap<NodeId, Location>,
    pub edges: HashMap<EdgeId, Location>,
    pub features: HashMap<(Target, String), Location>,
}

/// Checks every model invariant. Errors are ordered by file, line, code.
pub fn validate(c: &LogicalCorpus) -> ValidationReport {
    validate_with_origins(c, &Origins::default())
}

pub(crate) fn validate_with_origins(c: &LogicalCorpus, origins: &Origins) -> ValidationReport {
    let mut r = ValidationReport::default();

    // slots
    let slot_loc = |pos: usize, index: u32| {
        origins
            .slots
            .get(&index)
            .cloned()
            .unwrap_or_else(|| Location::new("slots", pos as u32 + 1))
    };
    if c.slots.is_empty() {
        r.error(IssueCode::NoSlots, Location::new("slots", 0), "corpus has no slot nodes");
    }
    let text_len = c.text.len();
    for (pos, s) in c.slots.iter().enumerate() {
        let loc = slot_loc(pos, s.index);
        if s.index != pos as u32 + 1 {
            r.error(
                IssueCode::SlotNumbering,
                loc.clone(),
                format!("slot {} found where slot {} expected", s.index, pos + 1),
            );
        }
        if s.region.start >= s.region.end {
            r.error(
                IssueCode::EmptyRegion,
                loc.clone(),
                format!("slot {} has empty region {}..{}", s.index, s.region.start, s.region.end),
            );
        }
        if s.region.end > text_len {
            r.error(
                IssueCode::RegionOutOfBounds,
                loc.clone(),
                format!(
                    "slot {} region {}..{} exceeds text length {}",
                    s.index, s.region.start, s.region.end, text_len
                ),
            );
        }
        if pos > 0 && c.slots[pos - 1].region.end > s.region.start {
            r.error(
                IssueCode::SlotOverlap,
                loc,
                format!("slot {} overlaps or precedes slot {}", s.index, c.slots[pos - 1].index),
            );
        }
    }
    let w = c.slots.len() as u32;

    // nodes
    let node_loc = |pos: usize, id: NodeId| {
        origins
            .nodes
            .get(&id)
            .cloned()
            .unwrap_or_else(|| Location::new("nodes", pos as u32 + 1))
    };
    let mut node_ids: HashSet<NodeId> = HashSet::with_capacity(c.nodes.len());
    let mut slot_owner: Vec<u32> = vec![0; w as usize + 1];
    for (pos, n) in c.nodes.iter().enumerate() {
        let loc = node_loc(pos, n.id);
        if !node_ids.insert(n.id) {
            r.error(IssueCode::DuplicateId, loc.clone(), format!("duplicate node id {}", n.id));
        }
        if n.monads.last() > w {
            r.error(
                IssueCode::MonadOutOfRange,
                loc.clone(),
                format!("node {} monads {} exceed slot count {}", n.id, n.monads, w),
            );
        }
        if n.otype == c.meta.slot_otype {
            if n.monads.len() != 1 {
                r.error(
                    IssueCode::SlotNodeArity,
                    loc,
                    format!("slot node {} must have exactly one monad, has {}", n.id, n.monads),
                );
            } else if n.monads.first() <= w {
                slot_owner[n.monads.first() as usize] += 1;
                if slot_owner[n.monads.first() as usize] == 2 {
                    r.error(
                        IssueCode::SlotShared,
                        loc,
                        format!("slot {} has more than one slot node", n.monads.first()),
                    );
                }
            }
        }
    }
    for m in 1..=w {
        if slot_owner[m as usize] == 0 {
            let pos = m as usize - 1;
            r.error(
                IssueCode::SlotUncovered,
                slot_loc(pos, c.slots[pos].index),
                format!("slot {m} has no {} node", c.meta.slot_otype),
            );
        }
    }

    // edges
    let mut edge_ids: HashSet<EdgeId> = HashSet::with_capacity(c.edges.len());
    for (pos, e) in c.edges.iter().enumerate() {
        let loc = origins
            .edges
            .get(&e.id)
            .cloned()
            .unwrap_or_else(|| Location::new("edges", pos as u32 + 1));
        if !edge_ids.insert(e.id) {
            r.error(IssueCode::DuplicateId, loc.clone(), format!("duplicate edge id {}", e.id));
        }
        for end in [e.from, e.to] {
            if !node_ids.contains(&end) {
                r.error(
                    IssueCode::DanglingEdge,
                    loc.clone(),
                    format!("edge {} references unknown node {}", e.id, end),
                );
            }
        }
        if e.from == e.to && RESERVED_CONTAINMENT_LABELS.contains(&e.label.as_str()) {
            r.error(
                IssueCode::ReservedSelfLoop,
                loc,
                format!("edge {} is a self-loop with containment label `{}`", e.id, e.label),
            );
        }
    }

    // features
    let mut seen: HashSet<(Target, &str)> = HashSet::with_capacity(c.features.len());
    for (pos, f) in c.features.iter().enumerate() {
        let loc = origins
            .features
            .get(&(f.target, f.key.clone()))
            .cloned()
            .unwrap_or_else(|| Location::new("features", pos as u32 + 1));
        let exists = match f.target {
            Target::Node(n) => node_ids.contains(&n),
            Target::Edge(e) => edge_ids.contains(&e),
        };
        if !exists {
            r.error(
                IssueCode::DanglingTarget,
                loc.clone(),
                format!("feature `{}` targets unknown {}", f.key, f.target),
            );
        }
        if !seen.insert((f.target, f.key.as_str())) {
            r.error(
                IssueCode::DuplicateFeature,
                loc.clone(),
                format!("second value for feature `{}` on {}", f.key, f.target),
            );
        }
        if c.meta.is_int_feature(&f.key) && f.value.trim().parse::<i64>().is_err() {
            r.warning(
                IssueCode::NonIntegerValue,
                loc,
                format!("integer feature `{}` has non-integer value `{}`", f.key, f.value),
            );
        }
    }

    r.sort();
    r
}
