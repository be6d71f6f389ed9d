//! Random duct networks and a transitive-closure reachability oracle.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use bim2brick::ifc::{
    BmsParams, Building, BuildingModel, Duct, Equipment, EquipmentKind, FlowDirection, HvacZone, Port, SourceId,
};
use bim2brick::inference::{Relation, RelationKind, RelationSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Unit,
    Duct,
    Terminal,
    Blocker,
}

pub struct Network {
    pub model: BuildingModel,
    /// Terminal room and room-zone relations, standing in for the spatial
    /// inference.
    pub relations: RelationSet,
}

fn equipment(id: &str, kind: EquipmentKind) -> Equipment {
    Equipment {
        source_id: id.into(),
        name: id.into(),
        kind,
        placement_point: [0.0; 3],
        ports: vec![],
        bms: BmsParams::default(),
    }
}

/// Up to `max_nodes` elements: a few units, ducts, terminals and blocking
/// equipment (thermostats), wired port-to-port at random so that loops and
/// dead ends occur. Unit ports get random flow directions.
pub fn random_network<R: Rng>(rng: &mut R, max_nodes: usize) -> Network {
    let n = rng.gen_range(4..=max_nodes);
    let mut kinds = vec![NodeKind::Unit];
    for _ in 1..n {
        kinds.push(match rng.gen_range(0..20) {
            0..=2 => NodeKind::Unit,
            3..=12 => NodeKind::Duct,
            13..=17 => NodeKind::Terminal,
            _ => NodeKind::Blocker,
        });
    }
    let ids: Vec<String> = (0..n).map(|i| format!("n{i:02}")).collect();

    let mut model = BuildingModel {
        building: Building { source_id: "B".into(), name: "B".into() },
        levels: vec![],
        rooms: vec![],
        zones: vec![],
        equipment: vec![],
        air_terminals: vec![],
        ducts: vec![],
        ports: vec![],
        psets: BTreeMap::new(),
    };
    let mut free_ports: Vec<usize> = Vec::new();
    for (i, k) in kinds.iter().enumerate() {
        let id = ids[i].as_str();
        match k {
            NodeKind::Unit => {
                let kind = if rng.gen_bool(0.5) { EquipmentKind::Vav } else { EquipmentKind::Fcu };
                model.equipment.push(equipment(id, kind));
            }
            NodeKind::Blocker => model.equipment.push(equipment(id, EquipmentKind::Thermostat)),
            NodeKind::Terminal => model.air_terminals.push(equipment(id, EquipmentKind::AirTerminal)),
            NodeKind::Duct => model.ducts.push(Duct { source_id: id.into(), name: id.into(), ports: vec![] }),
        }
        let port_count = match k {
            NodeKind::Duct => rng.gen_range(2..=4),
            NodeKind::Unit => rng.gen_range(1..=2),
            _ => 1,
        };
        for p in 0..port_count {
            let flow_direction = match (k, rng.gen_range(0..6)) {
                (NodeKind::Unit, 0) => Some(FlowDirection::Sink),
                (NodeKind::Unit, 1) => Some(FlowDirection::Bidirectional),
                (NodeKind::Unit, 2 | 3) => Some(FlowDirection::Source),
                (_, 0) => Some(FlowDirection::Sink),
                (_, 1) => Some(FlowDirection::Source),
                _ => None,
            };
            free_ports.push(model.ports.len());
            model.ports.push(Port {
                source_id: SourceId(format!("{id}.p{p}")),
                owner_ref: id.into(),
                position: [0.0; 3],
                flow_direction,
                connected_to: None,
            });
        }
    }
    // pair ports at random; leave a few unconnected
    free_ports.shuffle(rng);
    while free_ports.len() >= 2 {
        let a = free_ports.pop().unwrap();
        if rng.gen_bool(0.1) {
            continue;
        }
        let Some(pos) = free_ports.iter().position(|&b| model.ports[b].owner_ref != model.ports[a].owner_ref) else {
            continue;
        };
        let b = free_ports.swap_remove(pos);
        let (pa, pb) = (model.ports[a].source_id.clone(), model.ports[b].source_id.clone());
        model.ports[a].connected_to = Some(pb);
        model.ports[b].connected_to = Some(pa);
    }

    // terminals sit in rooms (some in none); rooms belong to one or two zones
    let rooms = rng.gen_range(1..=6);
    let zones = rng.gen_range(1..=4);
    let mut relations = RelationSet::new();
    for t in &model.air_terminals {
        if rng.gen_bool(0.85) {
            let room = format!("room{}", rng.gen_range(0..rooms));
            relations.insert(Relation::new(t.source_id.as_str(), RelationKind::EquipmentInRoom, room));
        }
    }
    for r in 0..rooms {
        let mut members = BTreeSet::new();
        for _ in 0..rng.gen_range(0..=2) {
            members.insert(rng.gen_range(0..zones));
        }
        for z in members {
            relations.insert(Relation::new(format!("room{r}"), RelationKind::RoomInZone, format!("zone{z}")));
        }
    }
    for z in 0..zones {
        let room_refs = relations
            .iter()
            .filter(|r| r.kind == RelationKind::RoomInZone && r.object.as_str() == format!("zone{z}"))
            .map(|r| r.subject.clone())
            .collect();
        model.zones.push(HvacZone { source_id: SourceId(format!("zone{z}")), name: format!("zone{z}"), room_refs });
    }
    Network { model, relations }
}

/// Terminals reachable from each unit, by Warshall closure over the
/// duct-to-duct adjacency matrix rather than by search.
pub fn reachability_oracle(model: &BuildingModel) -> BTreeMap<String, BTreeSet<String>> {
    let owner: BTreeMap<&str, &str> =
        model.ports.iter().map(|p| (p.source_id.as_str(), p.owner_ref.as_str())).collect();
    let ducts: Vec<&str> = model.ducts.iter().map(|d| d.source_id.as_str()).collect();
    let di: BTreeMap<&str, usize> = ducts.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let terminals: BTreeSet<&str> = model.air_terminals.iter().map(|t| t.source_id.as_str()).collect();

    // element-level adjacency through connected port pairs
    let mut edges: BTreeSet<(&str, &str)> = BTreeSet::new();
    for p in &model.ports {
        if let Some(q) = &p.connected_to {
            let (a, b) = (p.owner_ref.as_str(), owner[q.as_str()]);
            edges.insert((a, b));
            edges.insert((b, a));
        }
    }
    let n = ducts.len();
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(a, b) in &edges {
        if let (Some(&i), Some(&j)) = (di.get(a), di.get(b)) {
            reach[i][j] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                let row_k = reach[k].clone();
                for (cell, via) in reach[i].iter_mut().zip(row_k) {
                    *cell |= via;
                }
            }
        }
    }

    let mut out = BTreeMap::new();
    for u in model.equipment.iter().filter(|e| matches!(e.kind, EquipmentKind::Vav | EquipmentKind::Fcu)) {
        let uid = u.source_id.as_str();
        // neighbours reached through an outlet of the unit
        let mut first_hops: BTreeSet<&str> = BTreeSet::new();
        for p in model.ports.iter().filter(|p| p.owner_ref.as_str() == uid) {
            if p.flow_direction == Some(FlowDirection::Sink) {
                continue;
            }
            if let Some(q) = &p.connected_to {
                first_hops.insert(owner[q.as_str()]);
            }
        }
        let mut found = BTreeSet::new();
        for &h in &first_hops {
            if terminals.contains(h) {
                found.insert(h.to_owned());
            }
            let Some(&i) = di.get(h) else { continue };
            for j in 0..n {
                if !reach[i][j] {
                    continue;
                }
                for &t in &terminals {
                    if edges.contains(&(ducts[j], t)) {
                        found.insert(t.to_owned());
                    }
                }
            }
        }
        out.insert(uid.to_owned(), found);
    }
    out
}

/// Expected `feeds_zone` relations given reachable terminals.
pub fn expected_feeds(reach: &BTreeMap<String, BTreeSet<String>>, relations: &RelationSet) -> RelationSet {
    let mut out = RelationSet::new();
    for (u, terminals) in reach {
        for t in terminals {
            for room in relations.iter().filter(|r| r.kind == RelationKind::EquipmentInRoom && r.subject.as_str() == t)
            {
                for z in relations.iter().filter(|r| r.kind == RelationKind::RoomInZone && r.subject == room.object) {
                    out.insert(Relation::new(u.as_str(), RelationKind::FeedsZone, z.object.as_str()));
                }
            }
        }
    }
    out
}
