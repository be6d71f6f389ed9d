//! Units, object placements and 2-D space footprints.

use thiserror::Error;

use crate::geometry::{Frame, Point2, Point3, Polygon, PolygonError};
use crate::step::{StepEntity, StepFile, StepValue};

/// Placement chains longer than this are treated as cyclic.
const MAX_PLACEMENT_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FootprintError {
    #[error("unsupported representation: {0}")]
    UnsupportedRepresentation(String),
    #[error("invalid footprint: {0}")]
    InvalidPolygon(#[from] PolygonError),
}

/// Conversion from file length units to metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LengthUnit {
    /// SI metre with a decimal prefix exponent, e.g. `-3` for millimetres.
    Metre { exponent: i32 },
    /// Conversion-based unit such as the foot, metres per unit.
    Factor(f64),
}

impl Default for LengthUnit {
    fn default() -> Self {
        LengthUnit::Metre { exponent: 0 }
    }
}

impl LengthUnit {
    pub fn to_metres(self, v: f64) -> f64 {
        match self {
            LengthUnit::Metre { exponent } if exponent >= 0 => v * 10f64.powi(exponent),
            // divide so that e.g. 3500 mm is exactly 3.5 m
            LengthUnit::Metre { exponent } => v / 10f64.powi(-exponent),
            LengthUnit::Factor(f) => v * f,
        }
    }

    /// Reads the length unit from the first `IFCUNITASSIGNMENT`; metres when
    /// absent or unrecognised.
    pub fn from_file(file: &StepFile) -> LengthUnit {
        let Some(assignment) = file.of_type("IFCUNITASSIGNMENT").next() else {
            return LengthUnit::default();
        };
        for unit in assignment.ref_list_arg(0).into_iter().filter_map(|id| file.get(id)) {
            if unit.enum_arg(1) != Some("LENGTHUNIT") {
                continue;
            }
            match unit.type_name.as_str() {
                "IFCSIUNIT" => {
                    let exponent = match unit.enum_arg(2) {
                        Some(p) => si_prefix_exponent(p).unwrap_or(0),
                        None => 0,
                    };
                    return LengthUnit::Metre { exponent };
                }
                "IFCCONVERSIONBASEDUNIT" => {
                    let name = unit.str_arg(2).unwrap_or_default().to_ascii_uppercase();
                    let factor = match name.as_str() {
                        "FOOT" | "FEET" => 0.3048,
                        "INCH" => 0.0254,
                        "YARD" => 0.9144,
                        "MILE" => 1609.344,
                        _ => conversion_factor(file, unit).unwrap_or(1.0),
                    };
                    return LengthUnit::Factor(factor);
                }
                _ => {}
            }
        }
        LengthUnit::default()
    }
}

fn si_prefix_exponent(prefix: &str) -> Option<i32> {
    Some(match prefix {
        "EXA" => 18,
        "PETA" => 15,
        "TERA" => 12,
        "GIGA" => 9,
        "MEGA" => 6,
        "KILO" => 3,
        "HECTO" => 2,
        "DECA" => 1,
        "DECI" => -1,
        "CENTI" => -2,
        "MILLI" => -3,
        "MICRO" => -6,
        "NANO" => -9,
        "PICO" => -12,
        "FEMTO" => -15,
        "ATTO" => -18,
        _ => return None,
    })
}

/// IfcConversionBasedUnit(Dimensions, UnitType, Name, ConversionFactor):
/// the factor is an IfcMeasureWithUnit(ValueComponent, UnitComponent).
fn conversion_factor(file: &StepFile, unit: &StepEntity) -> Option<f64> {
    let measure = file.get(unit.ref_arg(3)?)?;
    let value = measure.real_arg(0)?;
    let base = file.get(measure.ref_arg(1)?)?;
    let exponent = base.enum_arg(2).and_then(si_prefix_exponent).unwrap_or(0);
    Some(LengthUnit::Metre { exponent }.to_metres(value))
}

/// Geometry reader bound to one file and its length unit.
pub struct ShapeReader<'a> {
    pub file: &'a StepFile,
    pub unit: LengthUnit,
}

impl<'a> ShapeReader<'a> {
    pub fn new(file: &'a StepFile) -> Self {
        ShapeReader { file, unit: LengthUnit::from_file(file) }
    }

    fn entity(&self, id: u64, expected: &[&str]) -> Result<&'a StepEntity, String> {
        let e = self.file.get(id).ok_or_else(|| format!("#{id} does not exist"))?;
        if expected.iter().any(|t| e.type_name == *t) {
            Ok(e)
        } else {
            Err(format!("#{id} is {}, expected {}", e.type_name, expected.join(" or ")))
        }
    }

    fn coordinates(&self, v: &StepValue) -> Result<Vec<f64>, String> {
        v.as_list()
            .ok_or("coordinates are not a list")?
            .iter()
            .map(|c| c.as_real().ok_or_else(|| "non-numeric coordinate".to_string()))
            .collect()
    }

    /// IfcCartesianPoint in metres, padded to three coordinates.
    pub fn point(&self, id: u64) -> Result<Point3, String> {
        let e = self.entity(id, &["IFCCARTESIANPOINT"])?;
        let c = self.coordinates(e.arg(0).ok_or("point without coordinates")?)?;
        if c.is_empty() || c.len() > 3 {
            return Err(format!("point #{id} has {} coordinates", c.len()));
        }
        let mut p = [0.0; 3];
        for (slot, v) in p.iter_mut().zip(c) {
            *slot = self.unit.to_metres(v);
        }
        Ok(p)
    }

    fn direction(&self, id: u64) -> Result<Point3, String> {
        let e = self.entity(id, &["IFCDIRECTION"])?;
        let c = self.coordinates(e.arg(0).ok_or("direction without ratios")?)?;
        if c.is_empty() || c.len() > 3 {
            return Err(format!("direction #{id} has {} ratios", c.len()));
        }
        let mut d = [0.0; 3];
        d[..c.len()].copy_from_slice(&c);
        Ok(d)
    }

    fn optional_direction(&self, v: Option<&StepValue>) -> Result<Option<Point3>, String> {
        match v.and_then(StepValue::as_ref_id) {
            Some(id) => self.direction(id).map(Some),
            None => Ok(None),
        }
    }

    /// IfcAxis2Placement3D / IfcAxis2Placement2D.
    pub fn axis_placement(&self, id: u64) -> Result<Frame, String> {
        let e = self.entity(id, &["IFCAXIS2PLACEMENT3D", "IFCAXIS2PLACEMENT2D"])?;
        let origin = self.point(e.ref_arg(0).ok_or("placement without location")?)?;
        let (axis, ref_dir) = if e.type_name == "IFCAXIS2PLACEMENT3D" {
            (self.optional_direction(e.arg(1))?, self.optional_direction(e.arg(2))?)
        } else {
            (None, self.optional_direction(e.arg(1))?)
        };
        Frame::from_axes(origin, axis, ref_dir).ok_or_else(|| format!("degenerate axes in #{id}"))
    }

    /// World frame of an IfcLocalPlacement, following PlacementRelTo.
    pub fn object_placement(&self, id: u64) -> Result<Frame, String> {
        let mut chain = Vec::new();
        let mut next = Some(id);
        while let Some(id) = next {
            if chain.len() >= MAX_PLACEMENT_DEPTH {
                return Err("placement chain is cyclic or too deep".into());
            }
            let e = self.entity(id, &["IFCLOCALPLACEMENT"])?;
            let rel = e.ref_arg(1).ok_or("local placement without relative placement")?;
            chain.push(self.axis_placement(rel)?);
            next = e.ref_arg(0);
        }
        Ok(chain.iter().rev().fold(Frame::default(), |world, local| world.then(local)))
    }

    /// World frame of a product, from its ObjectPlacement argument.
    pub fn product_frame(&self, product: &StepEntity) -> Result<Frame, String> {
        let id = product.ref_arg(5).ok_or("no object placement")?;
        self.object_placement(id)
    }

    /// Boundary ring of a curve, in the curve's own coordinates.
    fn curve_points(&self, id: u64) -> Result<Vec<Point3>, String> {
        let e = self.entity(id, &["IFCPOLYLINE", "IFCINDEXEDPOLYCURVE", "IFCGEOMETRICCURVESET", "IFCGEOMETRICSET"])?;
        match e.type_name.as_str() {
            "IFCPOLYLINE" => e.ref_list_arg(0).into_iter().map(|p| self.point(p)).collect(),
            "IFCINDEXEDPOLYCURVE" => {
                if e.arg(1).is_some_and(|s| !s.is_null()) {
                    let segments = e.arg(1).and_then(StepValue::as_list).unwrap_or_default();
                    if segments.iter().any(|s| matches!(s, StepValue::Typed(n, _) if n == "IFCARCINDEX")) {
                        return Err("indexed poly curve with arc segments".into());
                    }
                }
                let list = self.entity(
                    e.ref_arg(0).ok_or("indexed curve without points")?,
                    &["IFCCARTESIANPOINTLIST2D", "IFCCARTESIANPOINTLIST3D"],
                )?;
                list.arg(0)
                    .and_then(StepValue::as_list)
                    .ok_or("point list without coordinates")?
                    .iter()
                    .map(|c| {
                        let c = self.coordinates(c)?;
                        let mut p = [0.0; 3];
                        for (slot, v) in p.iter_mut().zip(c) {
                            *slot = self.unit.to_metres(v);
                        }
                        Ok(p)
                    })
                    .collect()
            }
            _ => {
                // first closed curve in the set
                let mut last_err = "curve set has no usable elements".to_string();
                for item in e.ref_list_arg(0) {
                    match self.curve_points(item) {
                        Ok(points) => return Ok(points),
                        Err(err) => last_err = err,
                    }
                }
                Err(last_err)
            }
        }
    }

    /// Profile outline in profile coordinates.
    fn profile_points(&self, id: u64) -> Result<Vec<Point3>, String> {
        let e = self.entity(
            id,
            &["IFCARBITRARYCLOSEDPROFILEDEF", "IFCARBITRARYPROFILEDEFWITHVOIDS", "IFCRECTANGLEPROFILEDEF"],
        )?;
        if e.type_name == "IFCRECTANGLEPROFILEDEF" {
            let x = self.unit.to_metres(e.real_arg(3).ok_or("rectangle without XDim")?);
            let y = self.unit.to_metres(e.real_arg(4).ok_or("rectangle without YDim")?);
            let position = match e.ref_arg(2) {
                Some(p) => self.axis_placement(p)?,
                None => Frame::default(),
            };
            let (hx, hy) = (x / 2.0, y / 2.0);
            return Ok([[-hx, -hy], [hx, -hy], [hx, hy], [-hx, hy]]
                .iter()
                .map(|c| position.apply([c[0], c[1], 0.0]))
                .collect());
        }
        self.curve_points(e.ref_arg(2).ok_or("profile without outer curve")?)
    }

    /// Footprint and height of one representation item, in the product's
    /// own coordinates.
    fn item_outline(&self, id: u64) -> Result<(Vec<Point3>, Option<f64>), String> {
        let e = self.file.get(id).ok_or_else(|| format!("#{id} does not exist"))?;
        match e.type_name.as_str() {
            "IFCEXTRUDEDAREASOLID" => {
                let outline = self.profile_points(e.ref_arg(0).ok_or("solid without swept area")?)?;
                let position = match e.ref_arg(1) {
                    Some(p) => self.axis_placement(p)?,
                    None => Frame::default(),
                };
                let depth = e.real_arg(3).map(|d| self.unit.to_metres(d));
                Ok((outline.into_iter().map(|p| position.apply(p)).collect(), depth))
            }
            _ => Ok((self.curve_points(id)?, None)),
        }
    }

    /// Footprint of an IfcSpace as a counter-clockwise polygon in world
    /// metres, plus the extrusion height when known. `FootPrint`
    /// representations are preferred over `Body` solids.
    pub fn footprint(&self, space: &StepEntity) -> Result<(Polygon, Option<f64>), FootprintError> {
        let unsupported = FootprintError::UnsupportedRepresentation;
        let frame = self.product_frame(space).map_err(unsupported)?;
        let shape_id = space.ref_arg(6).ok_or_else(|| unsupported("space has no representation".into()))?;
        let shape = self.entity(shape_id, &["IFCPRODUCTDEFINITIONSHAPE"]).map_err(unsupported)?;

        let mut reps: Vec<&StepEntity> = shape
            .ref_list_arg(2)
            .into_iter()
            .filter_map(|id| self.file.get(id))
            .filter(|r| r.type_name == "IFCSHAPEREPRESENTATION")
            .collect();
        reps.sort_by_key(|r| match r.str_arg(1) {
            Some(ident) if ident.eq_ignore_ascii_case("FootPrint") => 0,
            Some(ident) if ident.eq_ignore_ascii_case("Body") => 1,
            _ => 2,
        });

        let mut last_err = "no representation item yields a 2-D boundary".to_string();
        let mut polygon_err = None;
        for rep in reps {
            for item in rep.ref_list_arg(3) {
                match self.item_outline(item) {
                    Ok((outline, height)) => {
                        let ring: Vec<Point2> = outline
                            .into_iter()
                            .map(|p| {
                                let w = frame.apply(p);
                                [w[0], w[1]]
                            })
                            .collect();
                        match Polygon::new(ring) {
                            Ok(polygon) => return Ok((polygon, height)),
                            Err(e) => polygon_err = Some(e),
                        }
                    }
                    Err(e) => last_err = e,
                }
            }
        }
        match polygon_err {
            Some(e) => Err(FootprintError::InvalidPolygon(e)),
            None => Err(unsupported(last_err)),
        }
    }
}

/// Footprint of one IfcSpace, applying the file's length unit.
pub fn footprint_of(space: &StepEntity, file: &StepFile) -> Result<Polygon, FootprintError> {
    ShapeReader::new(file).footprint(space).map(|(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::step::{parse_step, resolve_refs};

    fn file(data: &str) -> StepFile {
        let text = format!("ISO-10303-21;HEADER;FILE_SCHEMA(('IFC4'));ENDSEC;DATA;\n{data}\nENDSEC;END-ISO-10303-21;");
        resolve_refs(parse_step(&text).unwrap())
    }

    const PLACEMENT: &str = "#10=IFCCARTESIANPOINT((0.,0.,0.));\
        #11=IFCAXIS2PLACEMENT3D(#10,$,$);\
        #12=IFCLOCALPLACEMENT($,#11);";

    fn space_with_profile(profile: &str, units: &str) -> StepFile {
        file(&format!(
            "{units}{PLACEMENT}\
             #20=IFCSPACE('gid',$,'R',$,$,#12,#30,$,.ELEMENT.,.INTERNAL.,$);\
             #30=IFCPRODUCTDEFINITIONSHAPE($,$,(#31));\
             #31=IFCSHAPEREPRESENTATION($,'Body','SweptSolid',(#32));\
             #32=IFCEXTRUDEDAREASOLID(#40,#11,#33,3.);\
             #33=IFCDIRECTION((0.,0.,1.));\
             {profile}"
        ))
    }

    fn polyline(points: &[(f64, f64)]) -> String {
        let mut s = String::new();
        let mut refs = Vec::new();
        for (i, (x, y)) in points.iter().enumerate() {
            let id = 100 + i;
            s.push_str(&format!("#{id}=IFCCARTESIANPOINT(({x:?},{y:?}));"));
            refs.push(format!("#{id}"));
        }
        s.push_str(&format!("#41=IFCPOLYLINE(({}));#40=IFCARBITRARYCLOSEDPROFILEDEF(.AREA.,$,#41);", refs.join(",")));
        s
    }

    #[test]
    fn square_profile_at_origin() {
        let f = space_with_profile(&polyline(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0), (0.0, 0.0)]), "");
        let p = footprint_of(f.get(20).unwrap(), &f).unwrap();
        assert_eq!(p.vertices(), &[[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]]);
    }

    #[test]
    fn clockwise_profile_is_normalized() {
        let f = space_with_profile(&polyline(&[(0.0, 0.0), (0.0, 10.0), (10.0, 10.0), (10.0, 0.0)]), "");
        let p = footprint_of(f.get(20).unwrap(), &f).unwrap();
        assert!(p.area() > 0.0);
        assert_eq!(p.area(), 100.0);
    }

    #[test]
    fn l_shape_area_is_the_sum_of_two_rectangles() {
        let f = space_with_profile(
            &polyline(&[(0.0, 0.0), (6.0, 0.0), (6.0, 2.0), (2.0, 2.0), (2.0, 5.0), (0.0, 5.0)]),
            "",
        );
        let p = footprint_of(f.get(20).unwrap(), &f).unwrap();
        // hand decomposition: 6×2 + 2×3
        assert_eq!(p.area(), 6.0 * 2.0 + 2.0 * 3.0);
        assert_eq!(p.vertices().len(), 6);
    }

    #[test]
    fn millimetre_files_are_scaled() {
        let units = "#1=IFCSIUNIT(*,.LENGTHUNIT.,.MILLI.,.METRE.);#2=IFCUNITASSIGNMENT((#1));";
        let f = space_with_profile(&polyline(&[(0.0, 0.0), (3500.0, 0.0), (3500.0, 2000.0), (0.0, 2000.0)]), units);
        let reader = ShapeReader::new(&f);
        assert_eq!(reader.unit, LengthUnit::Metre { exponent: -3 });
        let (p, height) = reader.footprint(f.get(20).unwrap()).unwrap();
        assert_eq!(p.vertices()[2], [3.5, 2.0]);
        assert_eq!(height, Some(0.003));
    }

    #[test]
    fn rectangle_profile_centered_on_its_position() {
        let profile = "#50=IFCCARTESIANPOINT((5.,4.));#51=IFCAXIS2PLACEMENT2D(#50,$);\
                       #40=IFCRECTANGLEPROFILEDEF(.AREA.,$,#51,10.,8.);";
        let f = space_with_profile(profile, "");
        let p = footprint_of(f.get(20).unwrap(), &f).unwrap();
        assert_eq!(p.vertices(), &[[0.0, 0.0], [10.0, 0.0], [10.0, 8.0], [0.0, 8.0]]);
    }

    #[test]
    fn placement_chain_is_composed() {
        let f = file(
            "#1=IFCCARTESIANPOINT((100.,0.,0.));#2=IFCAXIS2PLACEMENT3D(#1,$,$);#3=IFCLOCALPLACEMENT($,#2);\
             #4=IFCCARTESIANPOINT((0.,0.,4.));#9=IFCDIRECTION((0.,1.,0.));#5=IFCAXIS2PLACEMENT3D(#4,$,#9);\
             #6=IFCLOCALPLACEMENT(#3,#5);\
             #7=IFCCARTESIANPOINT((2.,0.,1.));#8=IFCAXIS2PLACEMENT3D(#7,$,$);#10=IFCLOCALPLACEMENT(#6,#8);",
        );
        let frame = ShapeReader::new(&f).object_placement(10).unwrap();
        let o = frame.origin;
        assert!((o[0] - 100.0).abs() < 1e-12 && (o[1] - 2.0).abs() < 1e-12 && (o[2] - 5.0).abs() < 1e-12, "{o:?}");
    }

    #[test]
    fn cyclic_placement_is_an_error() {
        let f = file("#1=IFCCARTESIANPOINT((0.,0.,0.));#2=IFCAXIS2PLACEMENT3D(#1,$,$);#3=IFCLOCALPLACEMENT(#4,#2);#4=IFCLOCALPLACEMENT(#3,#2);");
        assert!(ShapeReader::new(&f).object_placement(3).is_err());
    }

    #[test]
    fn space_without_geometry_is_unsupported() {
        let f = file(&format!("{PLACEMENT}#20=IFCSPACE('gid',$,'R',$,$,#12,$,$,$,$,$);"));
        assert!(matches!(footprint_of(f.get(20).unwrap(), &f), Err(FootprintError::UnsupportedRepresentation(_))));
    }

    #[test]
    fn foot_units() {
        let f = file("#1=IFCCONVERSIONBASEDUNIT(#5,.LENGTHUNIT.,'FOOT',#6);#2=IFCUNITASSIGNMENT((#1));");
        assert_eq!(LengthUnit::from_file(&f), LengthUnit::Factor(0.3048));
    }
}
