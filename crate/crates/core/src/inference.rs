//! Relations the building model only implies: which room holds a device or
//! an occupant, which zones a VAV or fan coil unit feeds through the duct
//! network, and which equipment a thermostat controls.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use chrono::{DateTime, Utc};
use serde::Serialize;

use crate::diagnostics::Diagnostic;
use crate::geometry::{Point3, Polygon};
use crate::ifc::{BuildingModel, EquipmentKind, FlowDirection, SourceId};
use crate::occupants::OccupantRecord;

/// Thermostats matching more candidates than this are reported.
pub const MAX_CONTROLLED: usize = 3;

#[derive(Debug, Clone)]
struct Band {
    z_min: f64,
    /// `f64::INFINITY` for the top band.
    z_max: f64,
    rooms: Vec<(SourceId, Polygon)>,
}

/// Rooms bucketed by level. Each distinct level elevation opens a z band
/// that extends up to the next elevation; the top band is unbounded.
#[derive(Debug, Clone, Default)]
pub struct ContainmentIndex {
    bands: Vec<Band>,
}

impl ContainmentIndex {
    /// Rooms without a footprint are left out.
    pub fn build(model: &BuildingModel) -> Self {
        let mut elevations: Vec<f64> = model.levels.iter().map(|l| l.elevation).collect();
        elevations.sort_by(f64::total_cmp);
        elevations.dedup();
        let mut bands: Vec<Band> = elevations
            .iter()
            .enumerate()
            .map(|(i, &z)| Band {
                z_min: z,
                z_max: elevations.get(i + 1).copied().unwrap_or(f64::INFINITY),
                rooms: Vec::new(),
            })
            .collect();
        let mut rooms: Vec<_> = model.rooms.iter().collect();
        rooms.sort_by(|a, b| a.source_id.cmp(&b.source_id));
        for room in rooms {
            let (Some(footprint), Some(level)) =
                (&room.footprint, model.levels.iter().find(|l| l.source_id == room.level_ref))
            else {
                continue;
            };
            if let Some(band) = bands.iter_mut().find(|b| b.z_min == level.elevation) {
                band.rooms.push((room.source_id.clone(), footprint.clone()));
            }
        }
        ContainmentIndex { bands }
    }

    /// The z interval `[min, max)` of the band holding `room`.
    pub fn z_range(&self, room: &str) -> Option<(f64, f64)> {
        self.bands.iter().find(|b| b.rooms.iter().any(|(id, _)| id.as_str() == room)).map(|b| (b.z_min, b.z_max))
    }

    pub fn rooms(&self) -> impl Iterator<Item = (&SourceId, &Polygon)> {
        self.bands.iter().flat_map(|b| b.rooms.iter().map(|(id, p)| (id, p)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub room: SourceId,
    /// Other rooms whose footprint also claims the point.
    pub overlapping: Vec<SourceId>,
}

/// Finds the room containing `p`. Boundary points count as inside; when
/// footprints overlap the smallest source id wins.
pub fn locate(p: Point3, index: &ContainmentIndex) -> Option<Location> {
    let band = index.bands.iter().find(|b| p[2] >= b.z_min && p[2] < b.z_max)?;
    // rooms are kept sorted by source id
    let mut hits = band.rooms.iter().filter(|(_, poly)| poly.contains([p[0], p[1]])).map(|(id, _)| id.clone());
    let room = hits.next()?;
    Some(Location { room, overlapping: hits.collect() })
}

fn locate_reporting(
    p: Point3,
    index: &ContainmentIndex,
    who: &str,
    diagnostics: &mut Vec<Diagnostic>,
) -> Option<SourceId> {
    let loc = locate(p, index)?;
    if !loc.overlapping.is_empty() {
        let others: Vec<&str> = loc.overlapping.iter().map(SourceId::as_str).collect();
        diagnostics.push(Diagnostic::warning(
            "overlapping-rooms",
            Some(who),
            format!("point claimed by {} and {}; using {}", loc.room, others.join(", "), loc.room),
        ));
    }
    Some(loc.room)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    EquipmentInRoom,
    OccupantInRoom,
    RoomInZone,
    FeedsZone,
    Controls,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Relation {
    pub subject: SourceId,
    pub kind: RelationKind,
    pub object: SourceId,
}

impl Relation {
    pub fn new(subject: impl Into<String>, kind: RelationKind, object: impl Into<String>) -> Self {
        Relation { subject: SourceId(subject.into()), kind, object: SourceId(object.into()) }
    }
}

/// Ordered by (subject, kind, object), so iteration order is canonical.
pub type RelationSet = BTreeSet<Relation>;

pub fn objects<'a>(rels: &'a RelationSet, subject: &'a str, kind: RelationKind) -> impl Iterator<Item = &'a SourceId> {
    rels.iter().filter(move |r| r.kind == kind && r.subject.as_str() == subject).map(|r| &r.object)
}

pub fn subjects<'a>(rels: &'a RelationSet, kind: RelationKind, object: &'a str) -> impl Iterator<Item = &'a SourceId> {
    rels.iter().filter(move |r| r.kind == kind && r.object.as_str() == object).map(|r| &r.subject)
}

fn resolve_room<'m>(model: &'m BuildingModel, key: &str) -> Result<&'m SourceId, Vec<&'m SourceId>> {
    let key = key.trim();
    if let Some(r) = model.room(key) {
        return Ok(&r.source_id);
    }
    let mut by_name: Vec<&SourceId> = model
        .rooms
        .iter()
        .filter(|r| {
            r.name.trim().eq_ignore_ascii_case(key)
                || r.long_name.as_deref().is_some_and(|l| l.trim().eq_ignore_ascii_case(key))
        })
        .map(|r| &r.source_id)
        .collect();
    by_name.sort();
    match by_name.len() {
        1 => Ok(by_name[0]),
        _ => Err(by_name),
    }
}

/// `equipment_in_room` for every VAV, fan coil unit, thermostat and air
/// terminal. A `HostingRoom` parameter overrides the spatial query.
pub fn infer_equipment_rooms(model: &BuildingModel, index: &ContainmentIndex) -> (RelationSet, Vec<Diagnostic>) {
    let mut rels = RelationSet::new();
    let mut diagnostics = Vec::new();
    for eq in model.equipment.iter().chain(&model.air_terminals) {
        let id = eq.source_id.as_str();
        let room = match &eq.bms.hosting_room {
            Some(key) => match resolve_room(model, key) {
                Ok(room) => Some(room.clone()),
                Err(candidates) if candidates.is_empty() => {
                    diagnostics.push(Diagnostic::warning(
                        "unknown-hosting-room",
                        Some(id),
                        format!("hosting room {key:?} matches no room"),
                    ));
                    None
                }
                Err(candidates) => {
                    diagnostics.push(Diagnostic::warning(
                        "ambiguous-hosting-room",
                        Some(id),
                        format!("hosting room {key:?} matches {} rooms; using {}", candidates.len(), candidates[0]),
                    ));
                    Some(candidates[0].clone())
                }
            },
            None => {
                let room = locate_reporting(eq.placement_point, index, id, &mut diagnostics);
                if room.is_none() {
                    let [x, y, z] = eq.placement_point;
                    diagnostics.push(Diagnostic::warning(
                        "unlocated-equipment",
                        Some(id),
                        format!("placement ({x:.3}, {y:.3}, {z:.3}) lies in no room"),
                    ));
                }
                room
            }
        };
        if let Some(room) = room {
            rels.insert(Relation { subject: eq.source_id.clone(), kind: RelationKind::EquipmentInRoom, object: room });
        }
    }
    (rels, diagnostics)
}

/// `room_in_zone` from the zone groupings.
pub fn infer_zone_membership(model: &BuildingModel) -> RelationSet {
    model
        .zones
        .iter()
        .flat_map(|z| {
            z.room_refs.iter().map(|r| Relation {
                subject: r.clone(),
                kind: RelationKind::RoomInZone,
                object: z.source_id.clone(),
            })
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq)]
enum Owner {
    AirHandler,
    Terminal,
    Duct,
    Other,
}

/// The air terminals reachable from each VAV and fan coil unit through
/// ducts. Traversal leaves the unit only through ports whose direction is
/// unset, source or bidirectional; it passes through duct segments and
/// fittings and stops at any other element.
pub fn reachable_terminals(model: &BuildingModel) -> BTreeMap<SourceId, BTreeSet<SourceId>> {
    let mut owner_kind: BTreeMap<&str, Owner> = BTreeMap::new();
    for e in &model.equipment {
        owner_kind
            .insert(e.source_id.as_str(), if e.kind.is_air_handling() { Owner::AirHandler } else { Owner::Other });
    }
    for t in &model.air_terminals {
        owner_kind.insert(t.source_id.as_str(), Owner::Terminal);
    }
    for d in &model.ducts {
        owner_kind.insert(d.source_id.as_str(), Owner::Duct);
    }
    let mut ports_of: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut owner_of: BTreeMap<&str, &str> = BTreeMap::new();
    let mut links: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for p in &model.ports {
        ports_of.entry(p.owner_ref.as_str()).or_default().push(p.source_id.as_str());
        owner_of.insert(p.source_id.as_str(), p.owner_ref.as_str());
        if let Some(other) = &p.connected_to {
            links.entry(p.source_id.as_str()).or_default().insert(other.as_str());
            links.entry(other.as_str()).or_default().insert(p.source_id.as_str());
        }
    }
    let direction: BTreeMap<&str, Option<FlowDirection>> =
        model.ports.iter().map(|p| (p.source_id.as_str(), p.flow_direction)).collect();

    let mut out = BTreeMap::new();
    for eq in model.equipment.iter().filter(|e| e.kind.is_air_handling()) {
        let mut reached = BTreeSet::new();
        let mut visited_ducts: BTreeSet<&str> = BTreeSet::new();
        let mut queue: VecDeque<&str> = ports_of
            .get(eq.source_id.as_str())
            .into_iter()
            .flatten()
            .copied()
            .filter(|p| !matches!(direction.get(p), Some(Some(FlowDirection::Sink))))
            .collect();
        while let Some(port) = queue.pop_front() {
            for &next in links.get(port).into_iter().flatten() {
                let Some(&owner) = owner_of.get(next) else { continue };
                match owner_kind.get(owner) {
                    Some(Owner::Terminal) => {
                        reached.insert(SourceId::from(owner));
                    }
                    Some(Owner::Duct) if visited_ducts.insert(owner) => {
                        queue.extend(ports_of.get(owner).into_iter().flatten().copied());
                    }
                    _ => {}
                }
            }
        }
        out.insert(eq.source_id.clone(), reached);
    }
    out
}

/// `feeds_zone(unit, zone)` for every zone holding a room that contains an
/// air terminal reachable from the unit. Needs the `equipment_in_room`
/// relations of the terminals and the `room_in_zone` relations.
pub fn infer_feeds(model: &BuildingModel, relations: &RelationSet) -> (RelationSet, Vec<Diagnostic>) {
    let mut rels = RelationSet::new();
    let mut roomless = BTreeSet::new();
    let mut zoneless = BTreeSet::new();
    for (eq, terminals) in reachable_terminals(model) {
        for t in &terminals {
            let rooms: Vec<&SourceId> = objects(relations, t.as_str(), RelationKind::EquipmentInRoom).collect();
            if rooms.is_empty() {
                roomless.insert(t.clone());
            }
            for room in rooms {
                let mut any = false;
                for zone in objects(relations, room.as_str(), RelationKind::RoomInZone) {
                    any = true;
                    rels.insert(Relation { subject: eq.clone(), kind: RelationKind::FeedsZone, object: zone.clone() });
                }
                if !any {
                    zoneless.insert(room.clone());
                }
            }
        }
    }
    let mut diagnostics: Vec<Diagnostic> = roomless
        .iter()
        .map(|t| {
            Diagnostic::warning(
                "terminal-outside-rooms",
                Some(t.as_str()),
                "air terminal is in no room; skipped for feeds",
            )
        })
        .collect();
    diagnostics.extend(zoneless.iter().map(|r| {
        Diagnostic::info("room-without-zone", Some(r.as_str()), "room is served by a terminal but belongs to no zone")
    }));
    (rels, diagnostics)
}

/// `controls(thermostat, unit)`. An explicit `ControlsIdentifier` wins;
/// otherwise units in the thermostat's room, and failing that, units
/// feeding a zone of that room.
pub fn infer_controls(model: &BuildingModel, relations: &RelationSet) -> (RelationSet, Vec<Diagnostic>) {
    let mut rels = RelationSet::new();
    let mut diagnostics = Vec::new();
    let units: Vec<_> = model.equipment.iter().filter(|e| e.kind.is_air_handling()).collect();
    for t in model.equipment.iter().filter(|e| e.kind == EquipmentKind::Thermostat) {
        let tid = t.source_id.as_str();
        let controlled: BTreeSet<SourceId> = if let Some(key) = &t.bms.controls_identifier {
            let found: BTreeSet<SourceId> = units
                .iter()
                .filter(|u| u.bms.identifier.as_deref() == Some(key.as_str()))
                .map(|u| u.source_id.clone())
                .collect();
            if found.is_empty() {
                diagnostics.push(Diagnostic::warning(
                    "unknown-controls-identifier",
                    Some(tid),
                    format!("no VAV or fan coil unit has identifier {key:?}"),
                ));
            }
            found
        } else {
            let rooms: Vec<&SourceId> = objects(relations, tid, RelationKind::EquipmentInRoom).collect();
            let same_room: BTreeSet<SourceId> = units
                .iter()
                .filter(|u| {
                    objects(relations, u.source_id.as_str(), RelationKind::EquipmentInRoom).any(|r| rooms.contains(&r))
                })
                .map(|u| u.source_id.clone())
                .collect();
            if !same_room.is_empty() {
                same_room
            } else {
                let zones: BTreeSet<&SourceId> =
                    rooms.iter().flat_map(|r| objects(relations, r.as_str(), RelationKind::RoomInZone)).collect();
                units
                    .iter()
                    .filter(|u| {
                        objects(relations, u.source_id.as_str(), RelationKind::FeedsZone).any(|z| zones.contains(z))
                    })
                    .map(|u| u.source_id.clone())
                    .collect()
            }
        };
        if controlled.is_empty() && t.bms.controls_identifier.is_none() {
            diagnostics.push(Diagnostic::info(
                "uncontrolled-thermostat",
                Some(tid),
                "no VAV or fan coil unit serves the thermostat's room",
            ));
        }
        if controlled.len() > MAX_CONTROLLED {
            diagnostics.push(Diagnostic::warning(
                "ambiguous-control",
                Some(tid),
                format!("thermostat matches {} units", controlled.len()),
            ));
        }
        for unit in controlled {
            rels.insert(Relation { subject: t.source_id.clone(), kind: RelationKind::Controls, object: unit });
        }
    }
    (rels, diagnostics)
}

/// `occupant_in_room` from each occupant's sample selected by
/// [`OccupantRecord::sample_as_of`].
pub fn infer_occupant_rooms(
    records: &[OccupantRecord],
    index: &ContainmentIndex,
    as_of: Option<DateTime<Utc>>,
) -> (RelationSet, Vec<Diagnostic>) {
    let mut rels = RelationSet::new();
    let mut diagnostics = Vec::new();
    for r in records {
        let id = r.subject_id.as_str();
        let Some(sample) = r.sample_as_of(as_of) else {
            diagnostics.push(Diagnostic::warning(
                "unlocated-occupant",
                Some(id),
                "no localized sample at or before the selected instant",
            ));
            continue;
        };
        let local = sample.local.expect("sample_as_of only returns localized samples");
        match locate_reporting(local, index, id, &mut diagnostics) {
            Some(room) => {
                rels.insert(Relation { subject: SourceId::from(id), kind: RelationKind::OccupantInRoom, object: room });
            }
            None => diagnostics.push(Diagnostic::warning(
                "unlocated-occupant",
                Some(id),
                format!("sample from line {} lies in no room", sample.line),
            )),
        }
    }
    (rels, diagnostics)
}

/// Sets `room_ref` on every localized sample.
pub fn annotate_rooms(records: &mut [OccupantRecord], index: &ContainmentIndex) {
    for s in records.iter_mut().flat_map(|r| r.samples.iter_mut()) {
        s.room_ref = s.local.and_then(|p| locate(p, index)).map(|l| l.room);
    }
}

#[derive(Debug, Clone, Default)]
pub struct Inference {
    pub relations: RelationSet,
    pub diagnostics: Vec<Diagnostic>,
}

/// All inference steps in dependency order. `occupants` must be localized.
pub fn infer_all(model: &BuildingModel, occupants: &[OccupantRecord], as_of: Option<DateTime<Utc>>) -> Inference {
    let index = ContainmentIndex::build(model);
    let (mut relations, mut diagnostics) = infer_equipment_rooms(model, &index);
    relations.extend(infer_zone_membership(model));
    let (feeds, d) = infer_feeds(model, &relations);
    relations.extend(feeds);
    diagnostics.extend(d);
    let (controls, d) = infer_controls(model, &relations);
    relations.extend(controls);
    diagnostics.extend(d);
    let (occ, d) = infer_occupant_rooms(occupants, &index, as_of);
    relations.extend(occ);
    diagnostics.extend(d);
    Inference { relations, diagnostics }
}
