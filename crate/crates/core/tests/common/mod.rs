//! Test support: a small IFC4 STEP writer and the SDE4-scale fixture.
#![allow(dead_code)]

pub mod ducts;
pub mod oracles;
pub mod sde4;

use bim2brick::ifc::{extract_model, BuildingModel};
use bim2brick::occupants::{filter_defined, load_occupants, localize, OccupantRecord};
use bim2brick::pipeline::SiteConfig;
use bim2brick::step::{parse_step, StepValue};

const GID_ALPHABET: &[u8; 64] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz_$";

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn s(text: &str) -> String {
    StepValue::String(text.to_owned()).to_string()
}

pub fn opt(text: Option<&str>) -> String {
    text.map_or("$".to_owned(), s)
}

fn r(v: f64) -> String {
    StepValue::Real(v).to_string()
}

fn refs(ids: &[u64]) -> String {
    let items: Vec<String> = ids.iter().map(|i| format!("#{i}")).collect();
    format!("({})", items.join(","))
}

#[derive(Debug, Clone, Copy)]
pub struct Placed {
    pub id: u64,
    pub placement: u64,
}

/// Writes an IFC4 file with millimetre units. Coordinates passed in are
/// metres; the writer scales them.
pub struct IfcBuilder {
    next_id: u64,
    lines: Vec<String>,
    gid_state: u64,
    origin: u64,
    pub building: Placed,
    pub building_gid: String,
}

pub struct Element {
    pub id: u64,
    pub gid: String,
    pub placement: u64,
}

impl IfcBuilder {
    pub fn new(building_name: &str, seed: u64) -> Self {
        let mut b = IfcBuilder {
            next_id: 1,
            lines: Vec::new(),
            gid_state: seed,
            origin: 0,
            building: Placed { id: 0, placement: 0 },
            building_gid: String::new(),
        };
        let unit = b.add("IFCSIUNIT(*,.LENGTHUNIT.,.MILLI.,.METRE.)".into());
        b.add(format!("IFCUNITASSIGNMENT((#{unit}))"));
        b.origin = b.placement(None, [0.0; 3], None);
        let gid = b.gid();
        let id =
            b.add(format!("IFCBUILDING({},$,{},$,$,#{},$,$,.ELEMENT.,$,$,$)", s(&gid), s(building_name), b.origin));
        b.building = Placed { id, placement: b.origin };
        b.building_gid = gid;
        b
    }

    pub fn add(&mut self, body: String) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.lines.push(format!("#{id}={body};"));
        id
    }

    /// A 22-character GlobalId over the IFC base-64 alphabet (which
    /// includes `$` and `_`), deterministic in the builder's seed.
    pub fn gid(&mut self) -> String {
        let (a, b) = (splitmix(&mut self.gid_state), splitmix(&mut self.gid_state));
        let mut bits = (u128::from(a) << 64) | u128::from(b);
        let mut out = String::with_capacity(22);
        // the leading character carries only 2 bits in real GlobalIds
        out.push(GID_ALPHABET[(bits & 3) as usize] as char);
        bits >>= 2;
        for _ in 0..21 {
            out.push(GID_ALPHABET[(bits & 63) as usize] as char);
            bits >>= 6;
        }
        out
    }

    fn point3(&mut self, p: [f64; 3]) -> u64 {
        self.add(format!("IFCCARTESIANPOINT(({},{},{}))", r(p[0] * 1000.0), r(p[1] * 1000.0), r(p[2] * 1000.0)))
    }

    fn point2(&mut self, p: [f64; 2]) -> u64 {
        self.add(format!("IFCCARTESIANPOINT(({},{}))", r(p[0] * 1000.0), r(p[1] * 1000.0)))
    }

    /// Local placement at `at` (metres) relative to `parent`, optionally
    /// rotated about z by `rotation_deg`.
    pub fn placement(&mut self, parent: Option<u64>, at: [f64; 3], rotation_deg: Option<f64>) -> u64 {
        let p = self.point3(at);
        let dir = match rotation_deg {
            Some(deg) => {
                let (sn, cs) = deg.to_radians().sin_cos();
                let d = self.add(format!("IFCDIRECTION(({},{},0.))", r(cs), r(sn)));
                format!("#{d}")
            }
            None => "$".into(),
        };
        let axis = self.add(format!("IFCAXIS2PLACEMENT3D(#{p},$,{dir})"));
        let parent = parent.map_or("$".to_owned(), |p| format!("#{p}"));
        self.add(format!("IFCLOCALPLACEMENT({parent},#{axis})"))
    }

    pub fn storey(&mut self, name: &str, elevation: f64) -> Element {
        let gid = self.gid();
        let placement = self.placement(Some(self.building.placement), [0.0, 0.0, elevation], None);
        let id = self.add(format!(
            "IFCBUILDINGSTOREY({},$,{},$,$,#{placement},$,$,.ELEMENT.,{})",
            s(&gid),
            s(name),
            r(elevation * 1000.0)
        ));
        let b = self.building.id;
        let rel = self.gid();
        self.add(format!("IFCRELAGGREGATES({},$,$,$,#{b},(#{id}))", s(&rel)));
        Element { id, gid, placement }
    }

    /// Rectangular space `w`×`h` whose lower-left corner is at (x, y) in the
    /// storey frame. `body` selects an extruded-solid representation instead
    /// of a footprint polyline.
    pub fn space(
        &mut self,
        storey: &Element,
        name: &str,
        long_name: Option<&str>,
        corner: [f64; 2],
        size: [f64; 2],
        body: bool,
    ) -> Element {
        let gid = self.gid();
        let placement = self.placement(Some(storey.placement), [corner[0], corner[1], 0.0], None);
        let [w, h] = size;
        let item = if body {
            let c = self.point2([w / 2.0, h / 2.0]);
            let pos = self.add(format!("IFCAXIS2PLACEMENT2D(#{c},$)"));
            let profile =
                self.add(format!("IFCRECTANGLEPROFILEDEF(.AREA.,$,#{pos},{},{})", r(w * 1000.0), r(h * 1000.0)));
            let origin = self.point3([0.0; 3]);
            let at = self.add(format!("IFCAXIS2PLACEMENT3D(#{origin},$,$)"));
            let up = self.add("IFCDIRECTION((0.,0.,1.))".into());
            self.add(format!("IFCEXTRUDEDAREASOLID(#{profile},#{at},#{up},3000.)"))
        } else {
            let pts: Vec<u64> = [[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]].iter().map(|p| self.point2(*p)).collect();
            self.add(format!("IFCPOLYLINE((#{},#{},#{},#{},#{}))", pts[0], pts[1], pts[2], pts[3], pts[0]))
        };
        let (ident, kind) = if body { ("Body", "SweptSolid") } else { ("FootPrint", "Curve2D") };
        let rep = self.add(format!("IFCSHAPEREPRESENTATION($,{},{},(#{item}))", s(ident), s(kind)));
        let shape = self.add(format!("IFCPRODUCTDEFINITIONSHAPE($,$,(#{rep}))"));
        let id = self.add(format!(
            "IFCSPACE({},$,{},$,$,#{placement},#{shape},{},.ELEMENT.,.INTERNAL.,$)",
            s(&gid),
            s(name),
            opt(long_name)
        ));
        let rel = self.gid();
        self.add(format!("IFCRELAGGREGATES({},$,$,$,#{},(#{id}))", s(&rel), storey.id));
        Element { id, gid, placement }
    }

    pub fn zone(&mut self, name: &str, rooms: &[u64]) -> Element {
        let gid = self.gid();
        let id = self.add(format!("IFCZONE({},$,{},$,$,$)", s(&gid), s(name)));
        let rel = self.gid();
        self.add(format!("IFCRELASSIGNSTOGROUP({},$,$,$,{},$,#{id})", s(&rel), refs(rooms)));
        Element { id, gid, placement: 0 }
    }

    /// A distribution element with the common 9-argument layout, placed at
    /// `at` in the storey frame and contained in the storey.
    pub fn element(
        &mut self,
        entity: &str,
        storey: &Element,
        name: &str,
        object_type: Option<&str>,
        predefined: &str,
        at: [f64; 3],
    ) -> Element {
        let gid = self.gid();
        let placement = self.placement(Some(storey.placement), at, None);
        let id = self.add(format!(
            "{entity}({},$,{},$,{},#{placement},$,$,.{predefined}.)",
            s(&gid),
            s(name),
            opt(object_type)
        ));
        let rel = self.gid();
        self.add(format!("IFCRELCONTAINEDINSPATIALSTRUCTURE({},$,$,$,(#{id}),#{})", s(&rel), storey.id));
        Element { id, gid, placement }
    }

    pub fn pset(&mut self, owner: u64, name: &str, props: &[(&str, &str)]) {
        let ids: Vec<u64> = props
            .iter()
            .map(|(k, v)| self.add(format!("IFCPROPERTYSINGLEVALUE({},$,IFCLABEL({}),$)", s(k), s(v))))
            .collect();
        let gid = self.gid();
        let set = self.add(format!("IFCPROPERTYSET({},$,{},$,{})", s(&gid), s(name), refs(&ids)));
        let rel = self.gid();
        self.add(format!("IFCRELDEFINESBYPROPERTIES({},$,$,$,(#{owner}),#{set})", s(&rel)));
    }

    /// A port nested under `owner`; `direction` is SOURCE, SINK,
    /// SOURCEANDSINK or `None` for unset.
    pub fn port(&mut self, owner: &Element, direction: Option<&str>) -> Element {
        let gid = self.gid();
        let placement = self.placement(Some(owner.placement), [0.0; 3], None);
        let dir = direction.map_or("$".to_owned(), |d| format!(".{d}."));
        let id = self.add(format!("IFCDISTRIBUTIONPORT({},$,$,$,$,#{placement},$,{dir},.DUCT.,$)", s(&gid)));
        let rel = self.gid();
        self.add(format!("IFCRELNESTS({},$,$,$,#{},(#{id}))", s(&rel), owner.id));
        Element { id, gid, placement }
    }

    pub fn connect(&mut self, a: &Element, b: &Element) {
        let gid = self.gid();
        self.add(format!("IFCRELCONNECTSPORTS({},$,$,$,#{},#{},$)", s(&gid), a.id, b.id));
    }

    pub fn finish(&self) -> String {
        let mut out = String::from(
            "ISO-10303-21;\nHEADER;\nFILE_DESCRIPTION(('ViewDefinition [ReferenceView]'),'2;1');\n\
             FILE_NAME('fixture.ifc','2021-03-01T00:00:00',(''),(''),'bim2brick test builder','','');\n\
             FILE_SCHEMA(('IFC4'));\nENDSEC;\nDATA;\n",
        );
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        out.push_str("ENDSEC;\nEND-ISO-10303-21;\n");
        out
    }
}

pub fn model_of(ifc: &str) -> BuildingModel {
    extract_model(&parse_step(ifc).expect("fixture parses")).expect("fixture has a building").model
}

/// Loaded, validated and localized occupants.
pub fn occupants_of(csv: &str, site: &SiteConfig) -> Vec<OccupantRecord> {
    let loaded = load_occupants(csv.as_bytes()).expect("fixture csv loads");
    let (kept, _) = filter_defined(loaded.records);
    localize(kept, &site.transform().expect("valid site")).0
}

/// Wraps DATA records in a minimal exchange file.
pub fn step_file(records: &str) -> String {
    format!("ISO-10303-21;\nHEADER;\nFILE_DESCRIPTION((''),'2;1');\nFILE_NAME('','',(''),(''),'','','');\nFILE_SCHEMA(('IFC4'));\nENDSEC;\nDATA;\n{records}\nENDSEC;\nEND-ISO-10303-21;\n")
}

const STEP_NOISE: &[u8] = b"'()$#;,.*=\\/-+E0123456789 \n\"";

/// Applies one to four random byte-level edits: flips, deletions,
/// duplications, insertions of STEP punctuation or non-ASCII bytes, and
/// truncation.
pub fn mutate<R: rand::Rng>(rng: &mut R, input: &[u8]) -> Vec<u8> {
    let mut out = input.to_vec();
    for _ in 0..rng.gen_range(1..=4) {
        let len = out.len();
        let at = rng.gen_range(0..=len);
        match rng.gen_range(0..6) {
            0 if at < len => out[at] ^= 1 << rng.gen_range(0..8),
            1 if at < len => {
                let end = (at + rng.gen_range(1..8)).min(len);
                out.drain(at..end);
            }
            2 if at < len => {
                let end = (at + rng.gen_range(1..8)).min(len);
                let chunk = out[at..end].to_vec();
                out.splice(at..at, chunk);
            }
            3 => out.insert(at, STEP_NOISE[rng.gen_range(0..STEP_NOISE.len())]),
            4 => out.insert(at, rng.gen_range(0x80..=0xff)),
            _ => out.truncate(at),
        }
    }
    out
}

pub struct UtmReference {
    pub latitude: f64,
    pub longitude: f64,
    pub zone: u8,
    pub south: bool,
    pub easting: f64,
    pub northing: f64,
}

/// Projected coordinates computed by PROJ, committed under `tests/data`.
pub fn utm_reference() -> Vec<UtmReference> {
    let text = include_str!("../data/utm_reference.csv");
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            UtmReference {
                latitude: f[0].parse().unwrap(),
                longitude: f[1].parse().unwrap(),
                zone: f[2].parse().unwrap(),
                south: f[3] == "1",
                easting: f[4].parse().unwrap(),
                northing: f[5].parse().unwrap(),
            }
        })
        .collect()
}
