//! Synthetic stand-in for the SDE4 building: 9 storeys, 48 rooms each in
//! its own HVAC zone, 52 VAV boxes with three sensors, 14 fan coil units
//! with a thermometer and 2 with a CO2 sensor and a thermometer. Every unit
//! reaches one air terminal through two duct segments. The occupant
//! dataset has 30 subjects; 13 lack an age or a gender.

use std::collections::BTreeMap;

use bim2brick::brick::Mode;
use bim2brick::geo::from_local;
use bim2brick::pipeline::{convert, Conversion, ConvertOptions, SiteConfig};

use super::{Element, IfcBuilder};

pub const STOREYS: usize = 9;
pub const ROOMS: usize = 48;
pub const VAVS: usize = 52;
pub const FCU_TEMP: usize = 14;
pub const FCU_DUAL: usize = 2;
pub const EQUIPMENT: usize = VAVS + FCU_TEMP + FCU_DUAL;
pub const SUBJECTS: usize = 30;
pub const VALID_SUBJECTS: usize = 17;
pub const STOREY_HEIGHT: f64 = 4.0;
pub const ROOM_PITCH: f64 = 12.0;
pub const ROOM_SIZE: [f64; 2] = [10.0, 8.0];
pub const SAMPLES_PER_SUBJECT: usize = 3;

pub fn site() -> SiteConfig {
    SiteConfig { origin_lat: 1.2976, origin_lon: 103.7706, origin_alt: 15.0, rotation_deg: 30.0, scale: 1.0 }
}

pub fn storey_of(room: usize) -> usize {
    room % STOREYS
}

pub fn room_name(room: usize) -> String {
    format!("Room {}{:02}", storey_of(room) + 1, room / STOREYS + 1)
}

/// Lower-left corner of a room in building coordinates (x, y, floor z).
pub fn room_corner(room: usize) -> [f64; 3] {
    [(room / STOREYS) as f64 * ROOM_PITCH, 0.0, storey_of(room) as f64 * STOREY_HEIGHT]
}

pub fn room_centre(room: usize) -> [f64; 3] {
    let c = room_corner(room);
    [c[0] + ROOM_SIZE[0] / 2.0, c[1] + ROOM_SIZE[1] / 2.0, c[2]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Unit {
    Vav,
    FcuTemp,
    FcuDual,
}

pub fn unit(k: usize) -> Unit {
    if k < VAVS {
        Unit::Vav
    } else if k < VAVS + FCU_TEMP {
        Unit::FcuTemp
    } else {
        Unit::FcuDual
    }
}

pub fn unit_name(k: usize) -> String {
    match unit(k) {
        Unit::Vav => format!("VAV-{:02}", k + 1),
        _ => format!("FCU-{:02}", k + 1 - VAVS),
    }
}

pub fn unit_sensors(k: usize) -> &'static [&'static str] {
    match unit(k) {
        Unit::Vav => &["CO2_Sensor", "Humidity_Sensor", "Temperature_Sensor"],
        Unit::FcuTemp => &["Temperature_Sensor"],
        Unit::FcuDual => &["CO2_Sensor", "Temperature_Sensor"],
    }
}

/// Room served by unit `k` (and holding it).
pub fn unit_room(k: usize) -> usize {
    k % ROOMS
}

/// Room of the latest sample of subject `i` (0-based), and of the two
/// earlier ones.
pub fn subject_rooms(i: usize) -> [usize; SAMPLES_PER_SUBJECT] {
    [(i + 7) % ROOMS, (i + 13) % ROOMS, i % ROOMS]
}

pub fn subject_id(i: usize) -> String {
    format!("S{:02}", i + 1)
}

pub fn subject_is_valid(i: usize) -> bool {
    i < VALID_SUBJECTS
}

pub struct Fixture {
    pub ifc: String,
    pub occupants_csv: String,
    pub building_gid: String,
    pub room_gids: Vec<String>,
    pub zone_gids: Vec<String>,
    pub unit_gids: Vec<String>,
}

pub const SAMPLE_HOURS: [u32; SAMPLES_PER_SUBJECT] = [9, 11, 14];

pub fn generate() -> Fixture {
    generate_with(|_, _| {})
}

/// Generates the fixture and lets `edit` append to the IFC before it is
/// written out. `edit` also gets the storeys.
pub fn generate_with(edit: impl FnOnce(&mut IfcBuilder, &[Element])) -> Fixture {
    let mut b = IfcBuilder::new("SDE4", 0x5de4);
    let storeys: Vec<_> =
        (0..STOREYS).map(|i| b.storey(&format!("Level {}", i + 1), i as f64 * STOREY_HEIGHT)).collect();
    let mut rooms = Vec::new();
    for r in 0..ROOMS {
        let c = room_corner(r);
        let room = b.space(&storeys[storey_of(r)], &room_name(r), Some("Office"), [c[0], c[1]], ROOM_SIZE, r % 2 == 1);
        rooms.push(room);
    }
    let zones: Vec<_> = (0..ROOMS).map(|r| b.zone(&format!("Zone {}", room_name(r)), &[rooms[r].id])).collect();

    let mut unit_gids = Vec::new();
    for k in 0..EQUIPMENT {
        let room = unit_room(k);
        let storey = &storeys[storey_of(room)];
        let c = room_corner(room);
        let lane = (k / ROOMS) as f64;
        let name = unit_name(k);
        let eq = match unit(k) {
            Unit::Vav => {
                b.element("IFCAIRTERMINALBOX", storey, &name, None, "NOTDEFINED", [c[0] + 1.0 + 3.0 * lane, 2.0, 2.5])
            }
            _ => b.element(
                "IFCUNITARYEQUIPMENT",
                storey,
                &name,
                Some("Fan Coil Unit"),
                "USERDEFINED",
                [c[0] + 1.0 + 3.0 * lane, 2.0, 2.5],
            ),
        };
        let points: Vec<String> =
            unit_sensors(k).iter().map(|s| format!("{s}:ts-{}-{}", name.to_lowercase(), s.to_lowercase())).collect();
        let ts = format!("ts-{}", name.to_lowercase());
        let panel = format!("MP-L{}", storey_of(room) + 1);
        b.pset(
            eq.id,
            "BIM2BRICK",
            &[("Identifier", &name), ("TimeSeriesId", &ts), ("MasterPanel", &panel), ("Points", &points.join(";"))],
        );
        let d1 = b.element(
            "IFCDUCTSEGMENT",
            storey,
            &format!("Duct {name}/1"),
            None,
            "RIGIDSEGMENT",
            [c[0] + 2.0, 3.0, 3.2],
        );
        let d2 = b.element(
            "IFCDUCTSEGMENT",
            storey,
            &format!("Duct {name}/2"),
            None,
            "RIGIDSEGMENT",
            [c[0] + 4.0, 5.0, 3.2],
        );
        let term = b.element(
            "IFCAIRTERMINAL",
            storey,
            &format!("Diffuser {name}"),
            None,
            "DIFFUSER",
            [c[0] + 5.0 + 2.0 * lane, 6.0, 2.8],
        );
        let p_eq = b.port(&eq, Some("SOURCE"));
        let p_d1a = b.port(&d1, None);
        let p_d1b = b.port(&d1, None);
        let p_d2a = b.port(&d2, Some("SINK"));
        let p_d2b = b.port(&d2, Some("SOURCE"));
        let p_t = b.port(&term, Some("SINK"));
        b.connect(&p_eq, &p_d1a);
        b.connect(&p_d1b, &p_d2a);
        b.connect(&p_d2b, &p_t);
        unit_gids.push(eq.gid);
    }
    edit(&mut b, &storeys);

    Fixture {
        ifc: b.finish(),
        occupants_csv: occupants_csv(),
        building_gid: b.building_gid.clone(),
        room_gids: rooms.into_iter().map(|r| r.gid).collect(),
        zone_gids: zones.into_iter().map(|z| z.gid).collect(),
        unit_gids,
    }
}

/// Building-local position of sample `j` of subject `i`.
pub fn sample_position(i: usize, j: usize) -> [f64; 3] {
    let room = subject_rooms(i)[j];
    let c = room_centre(room);
    // spread subjects sharing a room over a small grid
    let dx = (i % 5) as f64 - 2.0;
    let dy = ((i / 5) % 3) as f64 - 1.0;
    [c[0] + dx, c[1] + dy, c[2] + 1.2]
}

pub fn occupants_csv() -> String {
    let t = site().transform().expect("fixture site is valid");
    let mut out = String::from("subject_id,age,gender,timestamp,latitude,longitude,altitude,device\n");
    for i in 0..SUBJECTS {
        let number = i + 1;
        let mut age = (20 + (i * 7) % 40).to_string();
        let mut gender = if i % 2 == 0 { "Female" } else { "male" }.to_owned();
        if !subject_is_valid(i) {
            if number % 2 == 1 {
                age.clear();
            } else {
                gender.clear();
            }
        }
        // rows are written newest first to exercise sorting
        for j in (0..SAMPLES_PER_SUBJECT).rev() {
            let g = from_local(sample_position(i, j), &t).expect("fixture samples are in zone");
            out.push_str(&format!(
                "{},{age},{gender},2021-03-01T{:02}:00:00Z,{:.10},{:.10},{:.4},ble-{:03}\n",
                subject_id(i),
                SAMPLE_HOURS[j],
                g.latitude,
                g.longitude,
                g.altitude,
                number
            ));
        }
    }
    out
}

pub fn options(mode: Mode) -> ConvertOptions {
    let mut o = ConvertOptions::new(mode);
    o.site = Some(site());
    o
}

/// Converts the fixture, passing the occupant dataset in every mode.
pub fn convert_fixture(f: &Fixture, mode: Mode) -> Conversion {
    convert(f.ifc.as_bytes(), Some(f.occupants_csv.as_bytes()), &options(mode)).expect("fixture converts")
}

pub struct Counts {
    pub nodes_by_class: BTreeMap<String, usize>,
    pub triples_by_predicate: BTreeMap<String, usize>,
}

impl Counts {
    pub fn nodes(&self) -> usize {
        self.nodes_by_class.values().sum()
    }

    pub fn triples(&self) -> usize {
        self.triples_by_predicate.values().sum()
    }
}

/// Node and triple counts for the fixture, tallied from the mapping rules:
/// each node carries a type and a source id; building, levels, rooms, zones
/// and equipment carry a label; equipment carries its time series, panel
/// and identifier literals, a location and one zone fed; each point carries
/// a type, source id and time series and hangs off its unit by hasPoint;
/// each validated occupant carries age, gender and a location.
pub fn expected_counts(mode: Mode) -> Counts {
    let mut nodes = BTreeMap::new();
    let mut triples = BTreeMap::new();
    let add = |m: &mut BTreeMap<String, usize>, k: &str, n: usize| *m.entry(k.to_owned()).or_insert(0) += n;

    let skeleton = 1 + STOREYS + ROOMS + ROOMS;
    add(&mut nodes, "brick:Building", 1);
    add(&mut nodes, "brick:Floor", STOREYS);
    add(&mut nodes, "brick:Room", ROOMS);
    add(&mut nodes, "brick:HVAC_Zone", ROOMS);
    let mut typed = skeleton;
    let mut labels = skeleton;
    // building→level, level→room, zone→room
    add(&mut triples, "brick:hasPart", STOREYS + ROOMS + ROOMS);

    if matches!(mode, Mode::Bms | Mode::DigitalTwin) {
        add(&mut nodes, "brick:Variable_Air_Volume_Box", VAVS);
        add(&mut nodes, "brick:Fan_Coil_Unit", FCU_TEMP + FCU_DUAL);
        let mut points = 0;
        for k in 0..EQUIPMENT {
            for s in unit_sensors(k) {
                add(&mut nodes, &format!("brick:{s}"), 1);
                points += 1;
            }
        }
        typed += EQUIPMENT + points;
        labels += EQUIPMENT;
        add(&mut triples, "b2b:timeseriesId", EQUIPMENT + points);
        add(&mut triples, "b2b:masterPanel", EQUIPMENT);
        add(&mut triples, "b2b:bmsIdentifier", EQUIPMENT);
        add(&mut triples, "brick:hasLocation", EQUIPMENT);
        add(&mut triples, "brick:feeds", EQUIPMENT);
        add(&mut triples, "brick:hasPoint", points);
    }
    if matches!(mode, Mode::People | Mode::DigitalTwin) {
        add(&mut nodes, "occ:Individual", VALID_SUBJECTS);
        typed += VALID_SUBJECTS;
        add(&mut triples, "occ:age", VALID_SUBJECTS);
        add(&mut triples, "occ:gender", VALID_SUBJECTS);
        add(&mut triples, "brick:hasLocation", VALID_SUBJECTS);
    }
    add(&mut triples, "rdf:type", typed);
    add(&mut triples, "b2b:sourceId", typed);
    add(&mut triples, "rdfs:label", labels);
    Counts { nodes_by_class: nodes, triples_by_predicate: triples }
}
