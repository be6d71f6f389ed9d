use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{
    sanitize, BrickClass, BrickGraph, BrickRelation, Literal, Mode, Term, B2B_NS, BMS_IDENTIFIER, BRICK_NS,
    DEFAULT_OCC_NS, MASTER_PANEL, RDFS_LABEL, RDFS_NS, RDF_NS, RDF_TYPE, SOURCE_ID, TIMESERIES_ID,
};
use crate::ifc::{BuildingModel, Equipment, EquipmentKind, SourceId};
use crate::inference::{RelationKind, RelationSet};
use crate::occupants::OccupantRecord;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("building model has no building")]
    EmptyModel,
    #[error("occupant id {0:?} is also the source id of a model element")]
    SourceIdClash(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphOptions {
    /// Namespace for the occupant classes and the age/gender properties.
    pub occupant_namespace: String,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions { occupant_namespace: DEFAULT_OCC_NS.to_owned() }
    }
}

const SUFFIX_LEN: usize = 6;

struct Candidate {
    source_id: String,
    name: String,
}

/// `<name>_<last chars of the source id>`, falling back to the full
/// sanitized source id and then a counter. Minting sees every candidate the
/// model could contribute, so IRIs do not depend on the mode.
fn mint(candidates: &[Candidate], taken: &mut BTreeSet<String>) -> BTreeMap<String, String> {
    let key = |sid: &str| sid.split('#').next().unwrap_or(sid).to_owned();
    let preferred: Vec<String> = candidates
        .iter()
        .map(|c| {
            let k = sanitize(&key(&c.source_id));
            let suffix: String = k.chars().skip(k.chars().count().saturating_sub(SUFFIX_LEN)).collect();
            let name = if c.name.is_empty() { "element".to_owned() } else { sanitize(&c.name) };
            format!("{name}_{suffix}")
        })
        .collect();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for p in &preferred {
        *counts.entry(p).or_default() += 1;
    }
    let mut out = BTreeMap::new();
    for (c, p) in candidates.iter().zip(&preferred) {
        if counts[p.as_str()] == 1 && !taken.contains(p) {
            taken.insert(p.clone());
            out.insert(c.source_id.clone(), p.clone());
        }
    }
    for c in candidates {
        if out.contains_key(&c.source_id) {
            continue;
        }
        let name = if c.name.is_empty() { "element".to_owned() } else { sanitize(&c.name) };
        let base = format!("{name}_{}", sanitize(&c.source_id));
        let mut local = base.clone();
        let mut n = 2;
        while taken.contains(&local) {
            local = format!("{base}_{n}");
            n += 1;
        }
        taken.insert(local.clone());
        out.insert(c.source_id.clone(), local);
    }
    out
}

/// Derived source ids for the sensor points of one piece of equipment:
/// `<equipment id>#<Class>`, numbered from `_2` when a class repeats.
pub fn point_source_ids(eq: &Equipment) -> Vec<(SourceId, &'static str)> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    eq.bms
        .points
        .iter()
        .map(|p| {
            let class = p.point_kind.brick_name();
            let n = seen.entry(class).or_default();
            *n += 1;
            let sid =
                if *n == 1 { format!("{}#{class}", eq.source_id) } else { format!("{}#{class}_{n}", eq.source_id) };
            (SourceId(sid), class)
        })
        .collect()
}

fn equipment_class(kind: EquipmentKind) -> Option<BrickClass> {
    match kind {
        EquipmentKind::Vav => Some(BrickClass::VariableAirVolumeBox),
        EquipmentKind::Fcu => Some(BrickClass::FanCoilUnit),
        EquipmentKind::Thermostat => Some(BrickClass::Thermostat),
        EquipmentKind::AirTerminal => None,
    }
}

struct Builder<'a> {
    g: BrickGraph,
    ns: String,
    occ_ns: &'a str,
    iris: BTreeMap<String, String>,
}

impl Builder<'_> {
    fn iri(&self, sid: &str) -> Option<String> {
        self.iris.get(sid).map(|local| format!("{}{local}", self.ns))
    }

    fn node(&mut self, sid: &str, class: BrickClass, label: Option<&str>) -> String {
        let iri = self.iri(sid).expect("every node is minted up front");
        self.g.insert(&iri, RDF_TYPE, Term::Iri(class.iri(self.occ_ns)));
        self.g.insert(&iri, SOURCE_ID, Term::string(sid));
        if let Some(label) = label.filter(|l| !l.is_empty()) {
            self.g.insert(&iri, RDFS_LABEL, Term::string(label));
        }
        iri
    }

    fn literal(&mut self, subject: &str, predicate: &str, value: Option<&str>) {
        if let Some(v) = value.filter(|v| !v.is_empty()) {
            self.g.insert(subject, predicate, Term::string(v));
        }
    }

    fn link(&mut self, subject_sid: &str, rel: BrickRelation, object_sid: &str, nodes: &BTreeSet<String>) {
        if nodes.contains(subject_sid) && nodes.contains(object_sid) {
            let (s, o) = (self.iri(subject_sid).unwrap(), self.iri(object_sid).unwrap());
            self.g.insert(&s, &rel.iri(), Term::Iri(o));
        }
    }
}

/// Builds the graph for `mode`. `occupants` should be the validated
/// records; they are ignored in BMS mode. Zone membership, equipment and
/// occupant locations, feeds and control links come from `relations`.
pub fn build_graph(
    model: &BuildingModel,
    relations: &RelationSet,
    occupants: &[OccupantRecord],
    mode: Mode,
    options: &GraphOptions,
) -> Result<BrickGraph, BuildError> {
    if model.building.source_id.as_str().is_empty() {
        return Err(BuildError::EmptyModel);
    }
    let building_name =
        if model.building.name.is_empty() { "building".to_owned() } else { sanitize(&model.building.name) };
    let ns = format!("urn:bim2brick:{building_name}#");

    let bms_equipment: Vec<&Equipment> = model.equipment.iter().filter(|e| equipment_class(e.kind).is_some()).collect();
    let mut candidates =
        vec![Candidate { source_id: model.building.source_id.0.clone(), name: model.building.name.clone() }];
    candidates
        .extend(model.levels.iter().map(|l| Candidate { source_id: l.source_id.0.clone(), name: l.name.clone() }));
    candidates.extend(model.rooms.iter().map(|r| Candidate { source_id: r.source_id.0.clone(), name: r.name.clone() }));
    candidates.extend(model.zones.iter().map(|z| Candidate { source_id: z.source_id.0.clone(), name: z.name.clone() }));
    for e in &bms_equipment {
        candidates.push(Candidate { source_id: e.source_id.0.clone(), name: e.name.clone() });
        for (sid, class) in point_source_ids(e) {
            candidates.push(Candidate { source_id: sid.0, name: format!("{}_{class}", e.name) });
        }
    }
    candidates.sort_by(|a, b| a.source_id.cmp(&b.source_id));
    let mut taken = BTreeSet::new();
    let mut iris = mint(&candidates, &mut taken);
    if mode.includes_people() {
        let mut occ: Vec<Candidate> =
            occupants.iter().map(|r| Candidate { source_id: r.subject_id.clone(), name: "Occupant".into() }).collect();
        occ.sort_by(|a, b| a.source_id.cmp(&b.source_id));
        for c in &occ {
            if iris.contains_key(&c.source_id) {
                return Err(BuildError::SourceIdClash(c.source_id.clone()));
            }
            let base = format!("Occupant_{}", sanitize(&c.source_id));
            let mut local = base.clone();
            let mut n = 2;
            while taken.contains(&local) {
                local = format!("{base}_{n}");
                n += 1;
            }
            taken.insert(local.clone());
            iris.insert(c.source_id.clone(), local);
        }
    }

    let mut b = Builder { g: BrickGraph::default(), ns: ns.clone(), occ_ns: &options.occupant_namespace, iris };
    for (p, iri) in [("b2b", B2B_NS), ("bldg", ns.as_str()), ("brick", BRICK_NS), ("rdf", RDF_NS), ("rdfs", RDFS_NS)] {
        b.g.prefixes.insert(p.to_owned(), iri.to_owned());
    }
    if mode.includes_people() {
        b.g.prefixes.insert("occ".to_owned(), options.occupant_namespace.clone());
    }

    let mut nodes: BTreeSet<String> = BTreeSet::new();
    let building = model.building.source_id.as_str();
    b.node(building, BrickClass::Building, Some(&model.building.name));
    nodes.insert(building.to_owned());
    for l in &model.levels {
        b.node(l.source_id.as_str(), BrickClass::Floor, Some(&l.name));
        nodes.insert(l.source_id.0.clone());
        b.link(building, BrickRelation::HasPart, l.source_id.as_str(), &nodes);
    }
    for r in &model.rooms {
        let label =
            r.long_name.as_deref().filter(|l| !l.is_empty()).map_or(r.name.clone(), |l| format!("{} {l}", r.name));
        b.node(r.source_id.as_str(), BrickClass::Room, Some(label.trim()));
        nodes.insert(r.source_id.0.clone());
        b.link(r.level_ref.as_str(), BrickRelation::HasPart, r.source_id.as_str(), &nodes);
    }
    for z in &model.zones {
        b.node(z.source_id.as_str(), BrickClass::HvacZone, Some(&z.name));
        nodes.insert(z.source_id.0.clone());
    }
    for r in relations.iter().filter(|r| r.kind == RelationKind::RoomInZone) {
        b.link(r.object.as_str(), BrickRelation::HasPart, r.subject.as_str(), &nodes);
    }

    if mode.includes_bms() {
        for e in &bms_equipment {
            let class = equipment_class(e.kind).unwrap();
            let iri = b.node(e.source_id.as_str(), class, Some(&e.name));
            nodes.insert(e.source_id.0.clone());
            b.literal(&iri, TIMESERIES_ID, e.bms.timeseries_id.as_deref());
            b.literal(&iri, MASTER_PANEL, e.bms.master_panel.as_deref());
            b.literal(&iri, BMS_IDENTIFIER, e.bms.identifier.as_deref());
            for ((sid, _), spec) in point_source_ids(e).into_iter().zip(&e.bms.points) {
                let class = BrickClass::ALL.into_iter().find(|c| c.name() == spec.point_kind.brick_name()).unwrap();
                let p = b.node(sid.as_str(), class, None);
                nodes.insert(sid.0.clone());
                b.literal(&p, TIMESERIES_ID, spec.timeseries_id.as_deref());
                b.link(e.source_id.as_str(), BrickRelation::HasPoint, sid.as_str(), &nodes);
            }
        }
        for r in relations {
            let rel = match r.kind {
                RelationKind::EquipmentInRoom => BrickRelation::HasLocation,
                RelationKind::FeedsZone | RelationKind::Controls => BrickRelation::Feeds,
                _ => continue,
            };
            b.link(r.subject.as_str(), rel, r.object.as_str(), &nodes);
        }
    }

    if mode.includes_people() {
        let occ_ns = options.occupant_namespace.clone();
        for o in occupants {
            let iri = b.node(&o.subject_id, BrickClass::Individual, None);
            nodes.insert(o.subject_id.clone());
            if let Some(age) = o.age {
                b.g.insert(&iri, &format!("{occ_ns}age"), Term::Literal(Literal::Integer(age.into())));
            }
            b.literal(&iri, &format!("{occ_ns}gender"), o.gender.as_deref());
        }
        for r in relations.iter().filter(|r| r.kind == RelationKind::OccupantInRoom) {
            b.link(r.subject.as_str(), BrickRelation::HasLocation, r.object.as_str(), &nodes);
        }
    }
    Ok(b.g)
}
