//! Change reports between two graphs, joined on `b2b:sourceId` so that
//! re-minted IRIs do not show up as changes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

use super::turtle::escape_string;
use super::{BrickGraph, Literal, Term, RDF_TYPE, SOURCE_ID};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error("{side} graph: source id {source_id:?} is carried by more than one instance")]
    DuplicateSourceId { side: &'static str, source_id: String },
    #[error("{side} graph: instance {subject} has no single source id")]
    MissingSourceId { side: &'static str, subject: String },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Obj {
    Instance(String),
    Other(Term),
}

type Facts = BTreeSet<(String, Obj)>;

fn index(g: &BrickGraph, side: &'static str) -> Result<BTreeMap<String, Facts>, DiffError> {
    let ids = g.source_ids();
    let mut sid_of: BTreeMap<&str, &str> = BTreeMap::new();
    let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
    for (subject, sids) in &ids {
        if sids.len() != 1 {
            return Err(DiffError::MissingSourceId { side, subject: subject.to_string() });
        }
        if owner.insert(sids[0], subject).is_some() {
            return Err(DiffError::DuplicateSourceId { side, source_id: sids[0].to_owned() });
        }
        sid_of.insert(subject, sids[0]);
    }
    let mut out: BTreeMap<String, Facts> = BTreeMap::new();
    for subject in g.nodes().keys() {
        let sid =
            sid_of.get(subject).ok_or_else(|| DiffError::MissingSourceId { side, subject: subject.to_string() })?;
        out.insert(sid.to_string(), Facts::new());
    }
    for t in g.triples.iter().filter(|t| t.predicate != SOURCE_ID) {
        let Some(sid) = sid_of.get(t.subject.as_str()) else {
            continue;
        };
        let obj = match &t.object {
            Term::Iri(i) => match sid_of.get(i.as_str()) {
                Some(o) => Obj::Instance(o.to_string()),
                None => Obj::Other(t.object.clone()),
            },
            other => Obj::Other(other.clone()),
        };
        out.entry(sid.to_string()).or_default().insert((t.predicate.clone(), obj));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceChange {
    pub source_id: String,
    /// Compact class names.
    pub classes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Modified {
    pub source_id: String,
    /// `(predicate, object)` pairs; objects that are instances appear as
    /// `sourceId(...)`.
    pub added: Vec<(String, String)>,
    pub removed: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ChangeReport {
    pub added: Vec<InstanceChange>,
    pub removed: Vec<InstanceChange>,
    pub modified: Vec<Modified>,
}

impl ChangeReport {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.modified.is_empty()
    }

    pub fn to_text(&self) -> String {
        if self.is_empty() {
            return "no changes\n".to_owned();
        }
        let mut out = String::new();
        for a in &self.added {
            let _ = writeln!(out, "added    {} {}", a.source_id, a.classes.join(" "));
        }
        for r in &self.removed {
            let _ = writeln!(out, "removed  {} {}", r.source_id, r.classes.join(" "));
        }
        for m in &self.modified {
            let _ = writeln!(out, "modified {}", m.source_id);
            for (p, o) in &m.removed {
                let _ = writeln!(out, "  - {p} {o}");
            }
            for (p, o) in &m.added {
                let _ = writeln!(out, "  + {p} {o}");
            }
        }
        let _ = writeln!(
            out,
            "{} added, {} removed, {} modified",
            self.added.len(),
            self.removed.len(),
            self.modified.len()
        );
        out
    }

    /// One JSON object per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for a in &self.added {
            let v = serde_json::json!({"change": "added", "source_id": a.source_id, "classes": a.classes});
            let _ = writeln!(out, "{v}");
        }
        for r in &self.removed {
            let v = serde_json::json!({"change": "removed", "source_id": r.source_id, "classes": r.classes});
            let _ = writeln!(out, "{v}");
        }
        for m in &self.modified {
            let v = serde_json::json!({"change": "modified", "source_id": m.source_id, "added": m.added, "removed": m.removed});
            let _ = writeln!(out, "{v}");
        }
        out
    }
}

fn render(g: &BrickGraph, o: &Obj) -> String {
    match o {
        Obj::Instance(sid) => format!("sourceId({sid})"),
        Obj::Other(Term::Iri(i)) => g.compact(i),
        Obj::Other(Term::Literal(Literal::Integer(n))) => n.to_string(),
        Obj::Other(Term::Literal(Literal::String(s))) => {
            let mut out = String::new();
            escape_string(s, &mut out);
            out
        }
    }
}

/// Added and removed instances plus per-instance triple changes, keyed by
/// source id.
pub fn diff_by_source_id(old: &BrickGraph, new: &BrickGraph) -> Result<ChangeReport, DiffError> {
    let (a, b) = (index(old, "old")?, index(new, "new")?);
    let mut names = BrickGraph { prefixes: old.prefixes.clone(), ..Default::default() };
    names.prefixes.extend(new.prefixes.clone());
    let classes = |facts: &Facts| -> Vec<String> {
        facts.iter().filter(|(p, _)| p == RDF_TYPE).map(|(_, o)| render(&names, o)).collect()
    };
    let pairs = |facts: &mut dyn Iterator<Item = &(String, Obj)>| -> Vec<(String, String)> {
        facts.map(|(p, o)| (names.compact(p), render(&names, o))).collect()
    };

    let mut report = ChangeReport::default();
    for (sid, facts) in &b {
        match a.get(sid) {
            None => report.added.push(InstanceChange { source_id: sid.clone(), classes: classes(facts) }),
            Some(before) if before != facts => report.modified.push(Modified {
                source_id: sid.clone(),
                added: pairs(&mut facts.difference(before)),
                removed: pairs(&mut before.difference(facts)),
            }),
            Some(_) => {}
        }
    }
    for (sid, facts) in &a {
        if !b.contains_key(sid) {
            report.removed.push(InstanceChange { source_id: sid.clone(), classes: classes(facts) });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brick::{BRICK_NS, RDFS_LABEL};

    fn room(g: &mut BrickGraph, iri: &str, sid: &str, label: &str) {
        g.insert(iri, RDF_TYPE, Term::iri(format!("{BRICK_NS}Room")));
        g.insert(iri, SOURCE_ID, Term::string(sid));
        g.insert(iri, RDFS_LABEL, Term::string(label));
    }

    fn base() -> BrickGraph {
        let mut g = BrickGraph::default();
        g.prefixes.insert("brick".into(), BRICK_NS.into());
        room(&mut g, "urn:x#Room_101_aaa", "aaa", "Room 101");
        room(&mut g, "urn:x#Room_102_bbb", "bbb", "Room 102");
        g.insert("urn:x#Floor_1", RDF_TYPE, Term::iri(format!("{BRICK_NS}Floor")));
        g.insert("urn:x#Floor_1", SOURCE_ID, Term::string("fff"));
        g.insert("urn:x#Floor_1", &format!("{BRICK_NS}hasPart"), Term::iri("urn:x#Room_101_aaa"));
        g
    }

    #[test]
    fn identical_graphs() {
        let r = diff_by_source_id(&base(), &base()).unwrap();
        assert!(r.is_empty());
        assert_eq!(r.to_text(), "no changes\n");
        assert_eq!(r.to_json_lines(), "");
    }

    #[test]
    fn rename_with_new_iri_is_one_modification() {
        let old = base();
        let mut new = base();
        new.triples.retain(|t| t.subject != "urn:x#Room_101_aaa" && t.object != Term::iri("urn:x#Room_101_aaa"));
        room(&mut new, "urn:x#Lab_aaa", "aaa", "Lab");
        new.insert("urn:x#Floor_1", &format!("{BRICK_NS}hasPart"), Term::iri("urn:x#Lab_aaa"));
        let r = diff_by_source_id(&old, &new).unwrap();
        assert!(r.added.is_empty() && r.removed.is_empty());
        assert_eq!(r.modified.len(), 1);
        let m = &r.modified[0];
        assert_eq!(m.source_id, "aaa");
        assert_eq!(m.added, vec![("<http://www.w3.org/2000/01/rdf-schema#label>".to_owned(), "\"Lab\"".to_owned())]);
        assert_eq!(m.removed.len(), 1);
    }

    #[test]
    fn additions_and_removals() {
        let old = base();
        let mut new = base();
        room(&mut new, "urn:x#Room_103", "ccc", "Room 103");
        new.triples.retain(|t| t.subject != "urn:x#Room_102_bbb");
        let r = diff_by_source_id(&old, &new).unwrap();
        assert_eq!(r.added, vec![InstanceChange { source_id: "ccc".into(), classes: vec!["brick:Room".into()] }]);
        assert_eq!(r.removed.len(), 1);
        assert_eq!(r.removed[0].source_id, "bbb");
        assert!(r.modified.is_empty());
        assert_eq!(r.to_json_lines().lines().count(), 2);
        assert!(r.to_text().ends_with("1 added, 1 removed, 0 modified\n"));
    }

    #[test]
    fn duplicate_source_ids_are_rejected() {
        let mut g = base();
        g.insert("urn:x#Room_102_bbb", SOURCE_ID, Term::string("aaa"));
        assert!(matches!(diff_by_source_id(&base(), &g), Err(DiffError::MissingSourceId { side: "new", .. })));
        let mut g = base();
        room(&mut g, "urn:x#Other", "aaa", "dup");
        assert_eq!(
            diff_by_source_id(&g, &base()).unwrap_err(),
            DiffError::DuplicateSourceId { side: "old", source_id: "aaa".into() }
        );
    }
}
