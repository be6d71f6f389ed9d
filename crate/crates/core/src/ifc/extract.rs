use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use super::model::*;
use super::shape::{FootprintError, ShapeReader};
use crate::diagnostics::Diagnostic;
use crate::step::{StepEntity, StepFile, StepValue};

/// Property set carrying the BMS parameters.
pub const BMS_PSET: &str = "BIM2BRICK";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("the file contains no IfcBuilding")]
    MissingBuilding,
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub model: BuildingModel,
    pub diagnostics: Vec<Diagnostic>,
}

/// Interprets the supported IFC subset.
///
/// Elements that cannot be mapped (missing GlobalId, space without storey,
/// unusable geometry, ...) are reported as diagnostics; only a file without
/// any building is fatal.
pub fn extract_model(file: &StepFile) -> Result<Extraction, ModelError> {
    Extractor::new(file).run()
}

struct Extractor<'a> {
    file: &'a StepFile,
    shapes: ShapeReader<'a>,
    diagnostics: Vec<Diagnostic>,
    /// GlobalId → claiming instance id.
    claimed: HashMap<String, u64>,
    /// Instance id → source id, for mapped elements only.
    mapped: HashMap<u64, SourceId>,
    /// Instance id → property sets.
    psets: HashMap<u64, PropertySets>,
}

fn name_of(e: &StepEntity, fallback: &SourceId) -> String {
    e.str_arg(2).filter(|s| !s.trim().is_empty()).map(str::to_owned).unwrap_or_else(|| fallback.to_string())
}

fn value_text(v: &StepValue) -> Option<String> {
    match v.untyped() {
        StepValue::String(s) => Some(s.clone()),
        StepValue::Integer(i) => Some(i.to_string()),
        StepValue::Real(r) => Some(r.to_string()),
        StepValue::Enum(e) => Some(match e.as_str() {
            "T" => "true".into(),
            "F" => "false".into(),
            other => other.to_owned(),
        }),
        _ => None,
    }
}

fn non_empty(s: Option<&String>) -> Option<String> {
    s.map(|v| v.trim().to_owned()).filter(|v| !v.is_empty())
}

impl<'a> Extractor<'a> {
    fn new(file: &'a StepFile) -> Self {
        Extractor {
            file,
            shapes: ShapeReader::new(file),
            diagnostics: Vec::new(),
            claimed: HashMap::new(),
            mapped: HashMap::new(),
            psets: HashMap::new(),
        }
    }

    fn warn(&mut self, code: &'static str, source_id: Option<&str>, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic::warning(code, source_id, message));
    }

    /// Reserves the GlobalId of an entity for the model. Fails (with a
    /// diagnostic) when the id is missing or already taken.
    fn claim(&mut self, e: &StepEntity) -> Option<SourceId> {
        let gid = match e.str_arg(0).map(str::trim) {
            Some(g) if !g.is_empty() => g.to_owned(),
            _ => {
                self.warn("missing-global-id", None, format!("#{} {} has no GlobalId; skipped", e.id, e.type_name));
                return None;
            }
        };
        if let Some(first) = self.claimed.get(&gid) {
            let msg = format!("#{} {} reuses the GlobalId of #{first}; skipped", e.id, e.type_name);
            self.warn("duplicate-global-id", Some(&gid), msg);
            return None;
        }
        self.claimed.insert(gid.clone(), e.id);
        let sid = SourceId(gid);
        self.mapped.insert(e.id, sid.clone());
        Some(sid)
    }

    fn of_types(&self, types: &[&str]) -> Vec<&'a StepEntity> {
        let file: &'a StepFile = self.file;
        file.entities.values().filter(|e| types.contains(&e.type_name.as_str())).collect()
    }

    fn run(mut self) -> Result<Extraction, ModelError> {
        for d in &self.file.dangling {
            self.diagnostics.push(Diagnostic::warning(
                "dangling-reference",
                None,
                format!("#{} references missing #{}", d.from, d.to),
            ));
        }
        self.collect_psets();

        let buildings = self.of_types(&["IFCBUILDING"]);
        let Some(building_entity) = buildings.first().copied() else {
            return Err(ModelError::MissingBuilding);
        };
        if buildings.len() > 1 {
            let msg = format!("{} buildings found; only #{} is converted", buildings.len(), building_entity.id);
            self.warn("multiple-buildings", None, msg);
        }
        let building_sid = self.claim(building_entity).ok_or(ModelError::MissingBuilding)?;
        let building = Building { name: name_of(building_entity, &building_sid), source_id: building_sid };

        let parents = self.spatial_parents();
        let levels = self.levels(building_entity.id, &parents);
        let level_ids: HashMap<u64, SourceId> = levels.iter().map(|(id, l)| (*id, l.source_id.clone())).collect();
        let rooms = self.rooms(&level_ids, &parents);
        let zones = self.zones();

        let mut equipment = Vec::new();
        let mut air_terminals = Vec::new();
        let mut owner_ids = HashMap::new();
        for (id, item) in self.equipment() {
            owner_ids.insert(id, item.source_id.clone());
            if item.kind == EquipmentKind::AirTerminal {
                air_terminals.push((id, item));
            } else {
                equipment.push((id, item));
            }
        }
        let mut ducts = Vec::new();
        for e in self.of_types(&["IFCDUCTSEGMENT", "IFCDUCTFITTING"]) {
            if let Some(sid) = self.claim(e) {
                owner_ids.insert(e.id, sid.clone());
                ducts.push((e.id, Duct { name: name_of(e, &sid), source_id: sid, ports: Vec::new() }));
            }
        }
        let ports = self.ports(&owner_ids);
        for port in &ports {
            let owner = &port.owner_ref;
            if let Some((_, eq)) =
                equipment.iter_mut().chain(air_terminals.iter_mut()).find(|(_, e)| &e.source_id == owner)
            {
                eq.ports.push(port.source_id.clone());
            } else if let Some((_, d)) = ducts.iter_mut().find(|(_, d)| &d.source_id == owner) {
                d.ports.push(port.source_id.clone());
            }
        }

        let mut psets = BTreeMap::new();
        for (id, sets) in std::mem::take(&mut self.psets) {
            if let Some(sid) = self.mapped.get(&id) {
                psets.insert(sid.clone(), sets);
            }
        }

        let model = BuildingModel {
            building,
            levels: levels.into_iter().map(|(_, l)| l).collect(),
            rooms,
            zones,
            equipment: equipment.into_iter().map(|(_, e)| e).collect(),
            air_terminals: air_terminals.into_iter().map(|(_, e)| e).collect(),
            ducts: ducts.into_iter().map(|(_, d)| d).collect(),
            ports,
            psets,
        };
        Ok(Extraction { model, diagnostics: self.diagnostics })
    }

    fn collect_psets(&mut self) {
        for rel in self.of_types(&["IFCRELDEFINESBYPROPERTIES"]) {
            let Some(pset) = rel.ref_arg(5).and_then(|id| self.file.get(id)) else { continue };
            if pset.type_name != "IFCPROPERTYSET" {
                continue;
            }
            let set_name = pset.str_arg(2).unwrap_or_default().to_owned();
            let mut props = BTreeMap::new();
            for prop in pset.ref_list_arg(4).into_iter().filter_map(|id| self.file.get(id)) {
                if prop.type_name != "IFCPROPERTYSINGLEVALUE" {
                    continue;
                }
                let (Some(name), Some(value)) = (prop.str_arg(0), prop.arg(2).and_then(value_text)) else {
                    continue;
                };
                props.insert(name.to_owned(), value);
            }
            for target in rel.ref_list_arg(4) {
                self.psets.entry(target).or_default().entry(set_name.clone()).or_default().extend(props.clone());
            }
        }
    }

    fn bms_pset(&self, id: u64) -> Option<&BTreeMap<String, String>> {
        self.psets.get(&id).and_then(|sets| sets.get(BMS_PSET))
    }

    /// Child instance id → (relationship id, parent instance id), from
    /// aggregation and spatial containment, in relationship-id order.
    fn spatial_parents(&self) -> HashMap<u64, Vec<(u64, u64)>> {
        let mut parents: HashMap<u64, Vec<(u64, u64)>> = HashMap::new();
        for rel in self.of_types(&["IFCRELAGGREGATES", "IFCRELCONTAINEDINSPATIALSTRUCTURE"]) {
            let (parent, children) = if rel.type_name == "IFCRELAGGREGATES" {
                (rel.ref_arg(4), rel.ref_list_arg(5))
            } else {
                (rel.ref_arg(5), rel.ref_list_arg(4))
            };
            let Some(parent) = parent else { continue };
            for child in children {
                parents.entry(child).or_default().push((rel.id, parent));
            }
        }
        parents
    }

    fn levels(&mut self, building_id: u64, parents: &HashMap<u64, Vec<(u64, u64)>>) -> Vec<(u64, Level)> {
        let mut levels = Vec::new();
        for e in self.of_types(&["IFCBUILDINGSTOREY"]) {
            let building_parents: Vec<u64> = parents
                .get(&e.id)
                .map(|ps| {
                    ps.iter()
                        .map(|&(_, p)| p)
                        .filter(|p| self.file.get(*p).is_some_and(|pe| pe.type_name == "IFCBUILDING"))
                        .collect()
                })
                .unwrap_or_default();
            if !building_parents.is_empty() && !building_parents.contains(&building_id) {
                continue;
            }
            let Some(sid) = self.claim(e) else { continue };
            if building_parents.is_empty() {
                self.diagnostics.push(Diagnostic::info(
                    "unattached-level",
                    Some(sid.as_str()),
                    "storey is not aggregated under the building; attached to it",
                ));
            }
            let elevation = match e.real_arg(9) {
                Some(v) => self.shapes.unit.to_metres(v),
                None => match self.shapes.product_frame(e) {
                    Ok(frame) => frame.origin[2],
                    Err(_) => {
                        self.warn("missing-elevation", Some(sid.as_str()), "storey has no elevation; using 0");
                        0.0
                    }
                },
            };
            levels.push((e.id, Level { name: name_of(e, &sid), source_id: sid, elevation }));
        }
        levels.sort_by(|a, b| a.1.elevation.total_cmp(&b.1.elevation).then_with(|| a.1.source_id.cmp(&b.1.source_id)));
        for pair in levels.windows(2) {
            if pair[0].1.elevation == pair[1].1.elevation {
                let msg = format!(
                    "storeys {} and {} share elevation {}",
                    pair[0].1.source_id, pair[1].1.source_id, pair[1].1.elevation
                );
                self.diagnostics.push(Diagnostic::warning(
                    "duplicate-elevation",
                    Some(pair[1].1.source_id.as_str()),
                    msg,
                ));
            }
        }
        levels
    }

    fn rooms(&mut self, levels: &HashMap<u64, SourceId>, parents: &HashMap<u64, Vec<(u64, u64)>>) -> Vec<Room> {
        let mut rooms = Vec::new();
        for e in self.of_types(&["IFCSPACE"]) {
            let mut storeys: Vec<(u64, u64)> = parents
                .get(&e.id)
                .map(|ps| ps.iter().copied().filter(|(_, p)| levels.contains_key(p)).collect())
                .unwrap_or_default();
            storeys.sort();
            let gid = e.str_arg(0).unwrap_or_default().to_owned();
            let Some(&(_, storey)) = storeys.first() else {
                self.warn(
                    "orphan-room",
                    Some(&gid),
                    format!("space #{} is not contained in any storey; skipped", e.id),
                );
                continue;
            };
            let distinct: BTreeSet<u64> = storeys.iter().map(|&(_, p)| p).collect();
            let Some(sid) = self.claim(e) else { continue };
            if distinct.len() > 1 {
                let msg = format!(
                    "ambiguous containment: space is contained in {} storeys; assigned to {} (first relationship)",
                    distinct.len(),
                    levels[&storey]
                );
                self.warn("orphan-room", Some(sid.as_str()), msg);
            }
            let (footprint, height) = match self.shapes.footprint(e) {
                Ok((p, h)) => (Some(p), h),
                Err(err) => {
                    let code = match err {
                        FootprintError::UnsupportedRepresentation(_) => "unsupported-representation",
                        FootprintError::InvalidPolygon(_) => "invalid-footprint",
                    };
                    let msg = format!("{err}; room excluded from spatial inference");
                    self.warn(code, Some(sid.as_str()), msg);
                    (None, None)
                }
            };
            rooms.push(Room {
                name: name_of(e, &sid),
                long_name: e.str_arg(7).filter(|s| !s.is_empty()).map(str::to_owned),
                level_ref: levels[&storey].clone(),
                footprint,
                height,
                source_id: sid,
            });
        }
        rooms
    }

    fn zones(&mut self) -> Vec<HvacZone> {
        let mut members: HashMap<u64, Vec<u64>> = HashMap::new();
        for rel in self.of_types(&["IFCRELASSIGNSTOGROUP"]) {
            if let Some(group) = rel.ref_arg(6) {
                members.entry(group).or_default().extend(rel.ref_list_arg(4));
            }
        }
        let mut zones = Vec::new();
        for e in self.of_types(&["IFCZONE", "IFCSPATIALZONE"]) {
            let Some(sid) = self.claim(e) else { continue };
            let mut room_refs: Vec<SourceId> = Vec::new();
            for member in members.get(&e.id).cloned().unwrap_or_default() {
                let is_room = self.file.get(member).is_some_and(|m| m.type_name == "IFCSPACE");
                match self.mapped.get(&member) {
                    Some(room) if is_room => {
                        if !room_refs.contains(room) {
                            room_refs.push(room.clone());
                        }
                    }
                    _ => {
                        let msg = format!("zone member #{member} is not a mapped room; ignored");
                        self.diagnostics.push(Diagnostic::info("zone-member-skipped", Some(sid.as_str()), msg));
                    }
                }
            }
            if room_refs.is_empty() {
                self.warn("empty-zone", Some(sid.as_str()), "zone has no rooms; skipped");
                self.mapped.remove(&e.id);
                continue;
            }
            zones.push(HvacZone { name: name_of(e, &sid), source_id: sid, room_refs });
        }
        zones
    }

    fn classify(&self, e: &StepEntity) -> Option<EquipmentKind> {
        if let Some(kind) = self.bms_pset(e.id).and_then(|p| p.get("Kind")).and_then(|k| k.parse().ok()) {
            return Some(kind);
        }
        let hints: Vec<String> = [e.str_arg(4), e.enum_arg(8), e.str_arg(2)]
            .into_iter()
            .flatten()
            .map(|s| s.to_ascii_uppercase().replace([' ', '_', '-'], ""))
            .collect();
        let mentions = |needle: &str| hints.iter().any(|h| h.contains(needle));
        match e.type_name.as_str() {
            "IFCAIRTERMINALBOX" => Some(EquipmentKind::Vav),
            "IFCAIRTERMINAL" => Some(EquipmentKind::AirTerminal),
            "IFCUNITARYEQUIPMENT" if mentions("FCU") || mentions("FANCOIL") => Some(EquipmentKind::Fcu),
            "IFCUNITARYCONTROLELEMENT" | "IFCCONTROLLER" | "IFCSENSOR" if mentions("THERMOSTAT") => {
                Some(EquipmentKind::Thermostat)
            }
            _ => None,
        }
    }

    fn bms_params(&mut self, id: u64, sid: &SourceId) -> BmsParams {
        let Some(pset) = self.bms_pset(id).cloned() else {
            return BmsParams::default();
        };
        let mut points = Vec::new();
        for item in pset.get("Points").map(String::as_str).unwrap_or_default().split(';') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let (kind, tsid) = match item.split_once(':') {
                Some((k, t)) => (k, Some(t.trim()).filter(|t| !t.is_empty()).map(str::to_owned)),
                None => (item, None),
            };
            match kind.parse::<PointKind>() {
                Ok(point_kind) => points.push(PointSpec { point_kind, timeseries_id: tsid }),
                Err(()) => {
                    let msg = format!("unknown point kind {kind:?} in {BMS_PSET}.Points; ignored");
                    self.warn("unknown-point-kind", Some(sid.as_str()), msg);
                }
            }
        }
        BmsParams {
            identifier: non_empty(pset.get("Identifier")),
            hosting_room: non_empty(pset.get("HostingRoom")),
            timeseries_id: non_empty(pset.get("TimeSeriesId")),
            master_panel: non_empty(pset.get("MasterPanel")),
            points,
            controls_identifier: non_empty(pset.get("ControlsIdentifier")),
        }
    }

    fn equipment(&mut self) -> Vec<(u64, Equipment)> {
        const CANDIDATES: &[&str] = &[
            "IFCAIRTERMINALBOX",
            "IFCAIRTERMINAL",
            "IFCUNITARYEQUIPMENT",
            "IFCUNITARYCONTROLELEMENT",
            "IFCCONTROLLER",
            "IFCSENSOR",
            "IFCFLOWTERMINAL",
            "IFCFLOWCONTROLLER",
            "IFCENERGYCONVERSIONDEVICE",
        ];
        let mut out = Vec::new();
        let mut identifiers: HashMap<String, SourceId> = HashMap::new();
        for e in self.of_types(CANDIDATES) {
            let Some(kind) = self.classify(e) else {
                if e.type_name == "IFCUNITARYEQUIPMENT" {
                    let gid = e.str_arg(0).unwrap_or_default().to_owned();
                    let msg = format!("#{} unitary equipment is not tagged as a fan coil unit; ignored", e.id);
                    self.diagnostics.push(Diagnostic::info("unmapped-equipment", Some(&gid), msg));
                }
                continue;
            };
            let placement = match self.shapes.product_frame(e) {
                Ok(frame) if frame.origin.iter().all(|c| c.is_finite()) => frame.origin,
                Ok(_) | Err(_) => {
                    let gid = e.str_arg(0).unwrap_or_default().to_owned();
                    let msg = format!("#{} {} has no usable placement; skipped", e.id, e.type_name);
                    self.warn("missing-placement", Some(&gid), msg);
                    continue;
                }
            };
            let Some(sid) = self.claim(e) else { continue };
            let mut bms = self.bms_params(e.id, &sid);
            if let Some(ident) = bms.identifier.clone() {
                if let Some(first) = identifiers.get(&ident) {
                    let msg = format!("BMS identifier {ident:?} already used by {first}; dropped here");
                    self.warn("duplicate-identifier", Some(sid.as_str()), msg);
                    bms.identifier = None;
                } else {
                    identifiers.insert(ident, sid.clone());
                }
            }
            out.push((
                e.id,
                Equipment {
                    name: name_of(e, &sid),
                    kind,
                    placement_point: placement,
                    ports: Vec::new(),
                    bms,
                    source_id: sid,
                },
            ));
        }
        out
    }

    fn ports(&mut self, owners: &HashMap<u64, SourceId>) -> Vec<Port> {
        // port instance id → owner instance id
        let mut port_owner: HashMap<u64, u64> = HashMap::new();
        for rel in self.of_types(&["IFCRELNESTS", "IFCRELCONNECTSPORTTOELEMENT"]) {
            if rel.type_name == "IFCRELNESTS" {
                if let Some(owner) = rel.ref_arg(4) {
                    for child in rel.ref_list_arg(5) {
                        port_owner.entry(child).or_insert(owner);
                    }
                }
            } else if let (Some(port), Some(owner)) = (rel.ref_arg(4), rel.ref_arg(5)) {
                port_owner.entry(port).or_insert(owner);
            }
        }

        let mut ports = Vec::new();
        let mut port_sids: HashMap<u64, SourceId> = HashMap::new();
        for e in self.of_types(&["IFCDISTRIBUTIONPORT"]) {
            let owner = port_owner.get(&e.id).and_then(|o| owners.get(o).map(|sid| (*o, sid.clone())));
            let Some((owner_id, owner_sid)) = owner else {
                let gid = e.str_arg(0).unwrap_or_default().to_owned();
                let msg = format!("port #{} has no mapped owner; ignored", e.id);
                self.diagnostics.push(Diagnostic::info("unowned-port", Some(&gid), msg));
                continue;
            };
            let Some(sid) = self.claim(e) else { continue };
            let flow_direction = match e.enum_arg(7) {
                Some("SOURCE") => Some(FlowDirection::Source),
                Some("SINK") => Some(FlowDirection::Sink),
                Some("SOURCEANDSINK") => Some(FlowDirection::Bidirectional),
                _ => None,
            };
            let position = self
                .shapes
                .product_frame(e)
                .or_else(|_| {
                    self.file
                        .get(owner_id)
                        .ok_or_else(|| "owner missing".to_string())
                        .and_then(|o| self.shapes.product_frame(o))
                })
                .map(|f| f.origin)
                .unwrap_or([0.0; 3]);
            port_sids.insert(e.id, sid.clone());
            ports.push(Port { source_id: sid, owner_ref: owner_sid, position, flow_direction, connected_to: None });
        }

        let index: HashMap<SourceId, usize> = ports.iter().enumerate().map(|(i, p)| (p.source_id.clone(), i)).collect();
        for rel in self.of_types(&["IFCRELCONNECTSPORTS"]) {
            let (Some(a), Some(b)) = (
                rel.ref_arg(4).and_then(|id| port_sids.get(&id)).cloned(),
                rel.ref_arg(5).and_then(|id| port_sids.get(&id)).cloned(),
            ) else {
                continue;
            };
            let (ia, ib) = (index[&a], index[&b]);
            if ia == ib {
                self.warn("self-connected-port", Some(a.as_str()), "port is connected to itself; ignored");
                continue;
            }
            let busy = [(ia, &b), (ib, &a)]
                .into_iter()
                .any(|(i, other)| ports[i].connected_to.as_ref().is_some_and(|c| c != other));
            if busy {
                let msg = format!("connection #{} would give a port two partners; ignored", rel.id);
                self.warn("port-multiply-connected", Some(a.as_str()), msg);
                continue;
            }
            ports[ia].connected_to = Some(b);
            ports[ib].connected_to = Some(a);
        }
        ports
    }
}
