//! BRICK graph construction, Turtle serialization and source-id diffing.
//!
//! Instances live in a per-building namespace `urn:bim2brick:<building>#`.
//! Every instance carries exactly one `b2b:sourceId` literal with the IFC
//! GlobalId it came from (or the subject id for occupants), which is what
//! [`diff_by_source_id`] joins on.
//!
//! Only forward relations are written: `brick:hasPart` for spatial
//! composition, `brick:hasLocation` for equipment and occupants,
//! `brick:feeds` for units feeding zones and thermostats feeding the units
//! they control, and `brick:hasPoint` for sensors.

mod build;
mod diff;
mod turtle;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

pub use build::{build_graph, point_source_ids, BuildError, GraphOptions};
pub use diff::{diff_by_source_id, ChangeReport, DiffError, InstanceChange, Modified};
pub use turtle::{parse_turtle, serialize_turtle, TurtleSyntaxError};

pub const BRICK_NS: &str = "https://brickschema.org/schema/Brick#";
pub const B2B_NS: &str = "urn:bim2brick:schema#";
pub const DEFAULT_OCC_NS: &str = "urn:bim2brick:occupant#";
pub const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS_NS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
pub const SOURCE_ID: &str = "urn:bim2brick:schema#sourceId";
pub const TIMESERIES_ID: &str = "urn:bim2brick:schema#timeseriesId";
pub const MASTER_PANEL: &str = "urn:bim2brick:schema#masterPanel";
pub const BMS_IDENTIFIER: &str = "urn:bim2brick:schema#bmsIdentifier";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Mode {
    People,
    Bms,
    DigitalTwin,
}

impl Mode {
    pub fn includes_people(self) -> bool {
        matches!(self, Mode::People | Mode::DigitalTwin)
    }

    pub fn includes_bms(self) -> bool {
        matches!(self, Mode::Bms | Mode::DigitalTwin)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::People => "people",
            Mode::Bms => "bms",
            Mode::DigitalTwin => "digital-twin",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "people" => Ok(Mode::People),
            "bms" => Ok(Mode::Bms),
            "digital-twin" | "digitaltwin" => Ok(Mode::DigitalTwin),
            other => Err(format!("unknown mode {other:?} (expected people, bms or digital-twin)")),
        }
    }
}

/// The slice of the BRICK class hierarchy this tool emits, plus the two
/// occupant-extension classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum BrickClass {
    Location,
    Building,
    Floor,
    Space,
    Room,
    Zone,
    HvacZone,
    Equipment,
    HvacEquipment,
    TerminalUnit,
    VariableAirVolumeBox,
    FanCoilUnit,
    Thermostat,
    Point,
    Sensor,
    Co2Sensor,
    TemperatureSensor,
    HumiditySensor,
    Occupant,
    Individual,
}

impl BrickClass {
    pub const ALL: [BrickClass; 20] = [
        BrickClass::Location,
        BrickClass::Building,
        BrickClass::Floor,
        BrickClass::Space,
        BrickClass::Room,
        BrickClass::Zone,
        BrickClass::HvacZone,
        BrickClass::Equipment,
        BrickClass::HvacEquipment,
        BrickClass::TerminalUnit,
        BrickClass::VariableAirVolumeBox,
        BrickClass::FanCoilUnit,
        BrickClass::Thermostat,
        BrickClass::Point,
        BrickClass::Sensor,
        BrickClass::Co2Sensor,
        BrickClass::TemperatureSensor,
        BrickClass::HumiditySensor,
        BrickClass::Occupant,
        BrickClass::Individual,
    ];

    pub fn name(self) -> &'static str {
        use BrickClass::*;
        match self {
            Location => "Location",
            Building => "Building",
            Floor => "Floor",
            Space => "Space",
            Room => "Room",
            Zone => "Zone",
            HvacZone => "HVAC_Zone",
            Equipment => "Equipment",
            HvacEquipment => "HVAC_Equipment",
            TerminalUnit => "Terminal_Unit",
            VariableAirVolumeBox => "Variable_Air_Volume_Box",
            FanCoilUnit => "Fan_Coil_Unit",
            Thermostat => "Thermostat",
            Point => "Point",
            Sensor => "Sensor",
            Co2Sensor => "CO2_Sensor",
            TemperatureSensor => "Temperature_Sensor",
            HumiditySensor => "Humidity_Sensor",
            Occupant => "Occupant",
            Individual => "Individual",
        }
    }

    /// Direct superclasses.
    pub fn parents(self) -> &'static [BrickClass] {
        use BrickClass::*;
        match self {
            Location | Equipment | Point | Occupant => &[],
            Building | Floor | Space | Zone => &[Location],
            Room => &[Space],
            HvacZone => &[Zone],
            HvacEquipment => &[Equipment],
            TerminalUnit => &[HvacEquipment],
            VariableAirVolumeBox | FanCoilUnit => &[TerminalUnit],
            Thermostat => &[HvacEquipment],
            Sensor => &[Point],
            Co2Sensor | TemperatureSensor | HumiditySensor => &[Sensor],
            Individual => &[Occupant],
        }
    }

    /// Reflexive, transitive subclass test.
    pub fn is_subclass_of(self, other: BrickClass) -> bool {
        self == other || self.parents().iter().any(|p| p.is_subclass_of(other))
    }

    /// Classes that instances are typed with.
    pub fn is_instantiable(self) -> bool {
        use BrickClass::*;
        !matches!(self, Location | Space | Zone | Equipment | HvacEquipment | TerminalUnit | Point | Sensor | Occupant)
    }

    pub fn in_occupant_namespace(self) -> bool {
        matches!(self, BrickClass::Occupant | BrickClass::Individual)
    }

    pub fn iri(self, occupant_ns: &str) -> String {
        let ns = if self.in_occupant_namespace() { occupant_ns } else { BRICK_NS };
        format!("{ns}{}", self.name())
    }

    pub fn from_iri(iri: &str, occupant_ns: &str) -> Option<BrickClass> {
        let (ns, local) = if let Some(local) = iri.strip_prefix(BRICK_NS) {
            (BRICK_NS, local)
        } else {
            (occupant_ns, iri.strip_prefix(occupant_ns)?)
        };
        BrickClass::ALL.into_iter().find(|c| c.name() == local && (ns == BRICK_NS) != c.in_occupant_namespace())
    }
}

/// Relations from the BRICK vocabulary with their inverses. Only the
/// forward half is ever written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BrickRelation {
    HasPart,
    IsPartOf,
    HasLocation,
    IsLocationOf,
    Feeds,
    IsFedBy,
    HasPoint,
    IsPointOf,
    HasTag,
    IsTagOf,
}

impl BrickRelation {
    pub fn name(self) -> &'static str {
        use BrickRelation::*;
        match self {
            HasPart => "hasPart",
            IsPartOf => "isPartOf",
            HasLocation => "hasLocation",
            IsLocationOf => "isLocationOf",
            Feeds => "feeds",
            IsFedBy => "isFedBy",
            HasPoint => "hasPoint",
            IsPointOf => "isPointOf",
            HasTag => "hasTag",
            IsTagOf => "isTagOf",
        }
    }

    pub fn inverse(self) -> BrickRelation {
        use BrickRelation::*;
        match self {
            HasPart => IsPartOf,
            IsPartOf => HasPart,
            HasLocation => IsLocationOf,
            IsLocationOf => HasLocation,
            Feeds => IsFedBy,
            IsFedBy => Feeds,
            HasPoint => IsPointOf,
            IsPointOf => HasPoint,
            HasTag => IsTagOf,
            IsTagOf => HasTag,
        }
    }

    pub fn iri(self) -> String {
        format!("{BRICK_NS}{}", self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Literal {
    String(String),
    Integer(i64),
}

/// An RDF object. IRIs sort before literals.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Term {
    Iri(String),
    Literal(Literal),
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Term {
        Term::Iri(s.into())
    }

    pub fn string(s: impl Into<String>) -> Term {
        Term::Literal(Literal::String(s.into()))
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(i) => Some(i),
            Term::Literal(_) => None,
        }
    }
}

/// Subject and predicate are full IRIs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: impl Into<String>, predicate: impl Into<String>, object: Term) -> Self {
        Triple { subject: subject.into(), predicate: predicate.into(), object }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BrickGraph {
    /// Prefix name → namespace IRI.
    pub prefixes: BTreeMap<String, String>,
    pub triples: BTreeSet<Triple>,
}

impl BrickGraph {
    pub fn insert(&mut self, subject: &str, predicate: &str, object: Term) -> bool {
        self.triples.insert(Triple::new(subject, predicate, object))
    }

    /// Namespace bound to the occupant-extension prefix `occ`.
    pub fn occupant_namespace(&self) -> &str {
        self.prefixes.get("occ").map_or(DEFAULT_OCC_NS, String::as_str)
    }

    /// Subjects with an `rdf:type`, mapped to their type IRIs.
    pub fn nodes(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for t in self.triples.iter().filter(|t| t.predicate == RDF_TYPE) {
            if let Term::Iri(class) = &t.object {
                out.entry(&t.subject).or_default().push(class);
            }
        }
        out
    }

    /// Subject IRI → every `b2b:sourceId` value it carries.
    pub fn source_ids(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for t in self.triples.iter().filter(|t| t.predicate == SOURCE_ID) {
            if let Term::Literal(Literal::String(s)) = &t.object {
                out.entry(&t.subject).or_default().push(s);
            }
        }
        out
    }

    pub fn nodes_by_class(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for classes in self.nodes().values() {
            for c in classes {
                *out.entry(self.compact(c)).or_insert(0) += 1;
            }
        }
        out
    }

    pub fn triples_by_predicate(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for t in &self.triples {
            *out.entry(self.compact(&t.predicate)).or_insert(0) += 1;
        }
        out
    }

    /// `prefix:local` when a bound namespace covers `iri` and the rest is
    /// a plain local name, otherwise `<iri>`.
    pub fn compact(&self, iri: &str) -> String {
        self.prefixes
            .iter()
            .filter_map(|(p, ns)| {
                iri.strip_prefix(ns.as_str()).filter(|l| turtle::is_plain_local(l)).map(|l| (ns.len(), p, l))
            })
            .max_by_key(|(len, _, _)| *len)
            .map_or_else(|| turtle::write_iri(iri), |(_, p, l)| format!("{p}:{l}"))
    }
}

/// Non-alphanumeric characters become underscores.
pub fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}
