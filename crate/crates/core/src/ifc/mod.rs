//! Typed building model extracted from an IFC entity table.
//!
//! Supported mapping:
//!
//! | IFC entity                                   | model element            |
//! |----------------------------------------------|--------------------------|
//! | `IfcBuilding`                                | [`Building`]             |
//! | `IfcBuildingStorey`                          | [`Level`]                |
//! | `IfcSpace`                                   | [`Room`]                 |
//! | `IfcZone`, `IfcSpatialZone`                  | [`HvacZone`]             |
//! | `IfcAirTerminalBox`                          | VAV [`Equipment`]        |
//! | `IfcUnitaryEquipment` tagged FCU             | FCU [`Equipment`]        |
//! | `IfcUnitaryControlElement`/`IfcController`/`IfcSensor` tagged thermostat | thermostat |
//! | `IfcAirTerminal`                             | air terminal             |
//! | `IfcDuctSegment`, `IfcDuctFitting`           | [`Duct`]                 |
//! | `IfcDistributionPort` + `IfcRelConnectsPorts`| [`Port`] graph           |
//! | property set `BIM2BRICK`                     | [`BmsParams`]            |
//!
//! The `BIM2BRICK` set uses the keys `Identifier`, `HostingRoom`,
//! `TimeSeriesId`, `MasterPanel`, `Points` (`kind[:timeseries]` items
//! separated by `;`), `ControlsIdentifier` and an optional `Kind` that
//! overrides the entity-type classification.

mod extract;
mod model;
mod shape;

pub use extract::{extract_model, Extraction, ModelError, BMS_PSET};
pub use model::*;
pub use shape::{footprint_of, FootprintError, LengthUnit, ShapeReader};
