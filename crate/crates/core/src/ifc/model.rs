use std::borrow::Borrow;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::geometry::{Point3, Polygon};

/// The IFC GlobalId of an element (or an id derived from one), used as the
/// join key between the building model and the generated graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct SourceId(pub String);

impl SourceId {
    pub fn new(s: impl Into<String>) -> Self {
        SourceId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for SourceId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for SourceId {
    fn from(s: &str) -> Self {
        SourceId(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Building {
    pub source_id: SourceId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Level {
    pub source_id: SourceId,
    pub name: String,
    /// Metres, local Z.
    pub elevation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Room {
    pub source_id: SourceId,
    pub name: String,
    pub long_name: Option<String>,
    pub level_ref: SourceId,
    /// `None` when the space has no usable 2-D boundary; such rooms never win
    /// containment queries.
    pub footprint: Option<Polygon>,
    pub height: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HvacZone {
    pub source_id: SourceId,
    pub name: String,
    pub room_refs: Vec<SourceId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum EquipmentKind {
    Vav,
    Fcu,
    Thermostat,
    AirTerminal,
}

impl EquipmentKind {
    pub fn is_air_handling(self) -> bool {
        matches!(self, EquipmentKind::Vav | EquipmentKind::Fcu)
    }
}

impl FromStr for EquipmentKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.trim().to_ascii_uppercase().replace([' ', '_', '-'], "").as_str() {
            "VAV" | "VARIABLEAIRVOLUMEBOX" | "AIRTERMINALBOX" => Ok(EquipmentKind::Vav),
            "FCU" | "FANCOILUNIT" | "FANCOIL" => Ok(EquipmentKind::Fcu),
            "THERMOSTAT" => Ok(EquipmentKind::Thermostat),
            "AIRTERMINAL" | "TERMINAL" => Ok(EquipmentKind::AirTerminal),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PointKind {
    Co2Sensor,
    TemperatureSensor,
    HumiditySensor,
}

impl PointKind {
    pub fn brick_name(self) -> &'static str {
        match self {
            PointKind::Co2Sensor => "CO2_Sensor",
            PointKind::TemperatureSensor => "Temperature_Sensor",
            PointKind::HumiditySensor => "Humidity_Sensor",
        }
    }
}

impl FromStr for PointKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        [PointKind::Co2Sensor, PointKind::TemperatureSensor, PointKind::HumiditySensor]
            .into_iter()
            .find(|k| k.brick_name().eq_ignore_ascii_case(s.trim()))
            .ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PointSpec {
    pub point_kind: PointKind,
    pub timeseries_id: Option<String>,
}

/// BMS metadata carried by the `BIM2BRICK` property set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BmsParams {
    pub identifier: Option<String>,
    /// Room name, long name or GlobalId; overrides spatial inference.
    pub hosting_room: Option<String>,
    pub timeseries_id: Option<String>,
    pub master_panel: Option<String>,
    pub points: Vec<PointSpec>,
    /// Thermostats only: identifier of the equipment it controls, overriding
    /// spatial inference.
    pub controls_identifier: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equipment {
    pub source_id: SourceId,
    pub name: String,
    pub kind: EquipmentKind,
    /// Room-calculation point in building-local metres.
    pub placement_point: Point3,
    pub ports: Vec<SourceId>,
    pub bms: BmsParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Duct {
    pub source_id: SourceId,
    pub name: String,
    pub ports: Vec<SourceId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FlowDirection {
    Source,
    Sink,
    Bidirectional,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Port {
    pub source_id: SourceId,
    /// Equipment, air terminal or duct that owns the port.
    pub owner_ref: SourceId,
    pub position: Point3,
    /// `None` when the file leaves it undefined.
    pub flow_direction: Option<FlowDirection>,
    pub connected_to: Option<SourceId>,
}

/// Property sets of one element: set name → property name → value text.
pub type PropertySets = BTreeMap<String, BTreeMap<String, String>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildingModel {
    pub building: Building,
    /// Sorted by elevation.
    pub levels: Vec<Level>,
    pub rooms: Vec<Room>,
    pub zones: Vec<HvacZone>,
    /// VAVs, fan coil units and thermostats.
    pub equipment: Vec<Equipment>,
    pub air_terminals: Vec<Equipment>,
    pub ducts: Vec<Duct>,
    pub ports: Vec<Port>,
    pub psets: BTreeMap<SourceId, PropertySets>,
}

impl BuildingModel {
    pub fn room(&self, id: &str) -> Option<&Room> {
        self.rooms.iter().find(|r| r.source_id.as_str() == id)
    }

    pub fn equipment_by_id(&self, id: &str) -> Option<&Equipment> {
        self.equipment.iter().chain(&self.air_terminals).find(|e| e.source_id.as_str() == id)
    }

    pub fn count_kind(&self, kind: EquipmentKind) -> usize {
        self.equipment.iter().chain(&self.air_terminals).filter(|e| e.kind == kind).count()
    }

    /// Every source id that the model maps from the IFC file.
    pub fn source_ids(&self) -> Vec<&SourceId> {
        let mut ids = vec![&self.building.source_id];
        ids.extend(self.levels.iter().map(|l| &l.source_id));
        ids.extend(self.rooms.iter().map(|r| &r.source_id));
        ids.extend(self.zones.iter().map(|z| &z.source_id));
        ids.extend(self.equipment.iter().map(|e| &e.source_id));
        ids.extend(self.air_terminals.iter().map(|e| &e.source_id));
        ids.extend(self.ducts.iter().map(|d| &d.source_id));
        ids.extend(self.ports.iter().map(|p| &p.source_id));
        ids
    }
}
