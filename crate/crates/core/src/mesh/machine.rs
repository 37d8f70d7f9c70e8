use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

use super::polar::{arc_divisions, interface_divisions, radial_layers, Arc, PolarBuilder};
use super::{polar_angle, radius, BoundaryEdge, BoundaryLabel, MachineGeometry, Mesh, Part, Region};

/// Node and element counts of a machine mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshStats {
    pub nodes: usize,
    pub triangles: usize,
    pub interface_divisions: usize,
    pub per_region: Vec<(Region, usize)>,
}

impl MeshStats {
    pub fn of(mesh: &Mesh) -> Self {
        let per_region = Region::ALL
            .iter()
            .map(|&r| (r, mesh.regions.iter().filter(|&&x| x == r).count()))
            .collect();
        Self {
            nodes: mesh.n_nodes(),
            triangles: mesh.n_triangles(),
            interface_divisions: mesh.interface_intervals(),
            per_region,
        }
    }
}

impl fmt::Display for MeshStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} nodes, {} triangles, {} interface divisions",
            self.nodes, self.triangles, self.interface_divisions
        )?;
        for (r, n) in &self.per_region {
            write!(f, ", {r:?}: {n}")?;
        }
        Ok(())
    }
}

/// Divisions used on every stator arc: a multiple of eight per slot so slot
/// and opening edges coincide with mesh lines.
fn stator_divisions(geometry: &MachineGeometry, h: f64) -> usize {
    let unit = 8 * geometry.slots_per_pole();
    let r_mid = 0.5 * (geometry.stator_inner_radius + geometry.stator_outer_radius);
    let q = ((r_mid * geometry.pole_angle() / (unit as f64 * h)).ceil() as usize).max(1);
    unit * q
}

/// Phase belt of slot `k` within the pole, ordered along `+θ` as B+, C−, A+.
fn slot_region(geometry: &MachineGeometry, slot: usize) -> Region {
    let per_belt = geometry.slots_per_pole() / 3;
    match slot / per_belt {
        0 => Region::WindingBPlus,
        1 => Region::WindingCMinus,
        _ => Region::WindingAPlus,
    }
}

fn stator_region(geometry: &MachineGeometry, c: [f64; 2]) -> Region {
    let r = radius(c);
    let pitch = geometry.slot_pitch();
    let t = polar_angle(c) / pitch;
    let slot = (t.floor().max(0.0) as usize).min(geometry.slots_per_pole() - 1);
    let offset = (t - slot as f64 - 0.5).abs();
    if r < geometry.stator_inner_radius {
        Region::AirgapStator
    } else if r < geometry.slot_inner_radius() {
        if offset < 0.5 * geometry.slot_opening_ratio {
            Region::SlotOpening
        } else {
            Region::StatorIron
        }
    } else if r < geometry.slot_outer_radius() && offset < 0.5 * geometry.slot_width_ratio {
        slot_region(geometry, slot)
    } else {
        Region::StatorIron
    }
}

fn rotor_region(geometry: &MachineGeometry, c: [f64; 2]) -> Region {
    let r = radius(c);
    if r < geometry.rotor_inner_radius {
        Region::Shaft
    } else if r < geometry.design_outer_radius() {
        Region::Design
    } else if r < geometry.rotor_outer_radius {
        Region::IronRing
    } else {
        Region::AirgapRotor
    }
}

/// Builds the one-pole machine mesh with target edge length `h`.
///
/// The airgap is resolved by `⌈gap·aspect/h⌉` layers (at least three), split
/// between the rotor and stator sides of the sliding interface. Interface
/// nodes exist twice, once on each side, at identical coordinates.
pub fn build_machine_mesh(geometry: &MachineGeometry, h: f64) -> Result<Mesh> {
    geometry.validate()?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::MeshResolution("target edge length must be positive".into()));
    }
    let gap = geometry.stator_inner_radius - geometry.rotor_outer_radius;
    let layers = (gap * geometry.airgap_aspect / h).ceil() as usize;
    if layers < 3 {
        return Err(Error::MeshResolution(format!(
            "edge length {h:.3e} m resolves the {gap:.3e} m airgap with {layers} layers; at least 3 are required"
        )));
    }
    let pole = geometry.pole_angle();
    let n_int = interface_divisions(geometry, h);
    let n_st = stator_divisions(geometry, h);
    let mut b = PolarBuilder::new(pole);

    let rotor_cls = |c: [f64; 2]| rotor_region(geometry, c);
    let stator_cls = |c: [f64; 2]| stator_region(geometry, c);

    let span = |b: &mut PolarBuilder,
                prev: Arc,
                r1: f64,
                n: usize,
                divisions: &dyn Fn(f64, bool) -> usize,
                cls: &dyn Fn([f64; 2]) -> Region|
     -> Arc {
        let r0 = prev.radius;
        let mut prev = prev;
        for l in 1..=n {
            let r = if l == n { r1 } else { r0 + (r1 - r0) * l as f64 / n as f64 };
            let next = b.arc(r, divisions(r, l == n));
            b.zip(&prev, &next, cls);
            prev = next;
        }
        prev
    };
    let h_based = |r: f64, _: bool| arc_divisions(r, pole, h);

    // rotor
    let first = b.arc(geometry.shaft_radius, arc_divisions(geometry.shaft_radius, pole, h));
    let shaft_layers = radial_layers(geometry.rotor_inner_radius - geometry.shaft_radius, h);
    let a = span(&mut b, first, geometry.rotor_inner_radius, shaft_layers, &h_based, &rotor_cls);
    let design_layers = radial_layers(geometry.design_outer_radius() - geometry.rotor_inner_radius, h);
    let a = span(&mut b, a, geometry.design_outer_radius(), design_layers, &h_based, &rotor_cls);
    let ring_layers = radial_layers(geometry.iron_ring_thickness, h).max(2);
    let ring_div = |r: f64, last: bool| if last { n_int } else { arc_divisions(r, pole, h) };
    let a = span(&mut b, a, geometry.rotor_outer_radius, ring_layers, &ring_div, &rotor_cls);
    let rotor_gap_layers = layers.div_ceil(2);
    let a = span(
        &mut b,
        a,
        geometry.interface_radius,
        rotor_gap_layers,
        &|_, _| n_int,
        &rotor_cls,
    );
    let _ = a;

    // stator
    let s = b.arc(geometry.interface_radius, n_int);
    let gap_div = |_: f64, last: bool| if last { n_st } else { n_int };
    let s = span(
        &mut b,
        s,
        geometry.stator_inner_radius,
        layers - rotor_gap_layers,
        &gap_div,
        &stator_cls,
    );
    let st = |_: f64, _: bool| n_st;
    let s = span(
        &mut b,
        s,
        geometry.slot_inner_radius(),
        radial_layers(geometry.slot_opening_depth, h),
        &st,
        &stator_cls,
    );
    let s = span(
        &mut b,
        s,
        geometry.slot_outer_radius(),
        radial_layers(geometry.slot_depth, h),
        &st,
        &stator_cls,
    );
    let back = geometry.stator_outer_radius - geometry.slot_outer_radius();
    span(&mut b, s, geometry.stator_outer_radius, radial_layers(back, h), &st, &stator_cls);

    label_mesh(geometry, b.nodes, b.triangles, b.regions)
}

/// Picks the edge length whose machine mesh has the node count closest to
/// `target` among a log-spaced scan of admissible edge lengths.
pub fn edge_length_for_node_count(geometry: &MachineGeometry, target: usize) -> Result<f64> {
    let gap = geometry.stator_inner_radius - geometry.rotor_outer_radius;
    let h_max = gap * geometry.airgap_aspect / 2.0 * 0.999;
    let h_min = h_max / 20.0;
    let mut best: Option<(usize, f64)> = None;
    for i in 0..=120 {
        let h = h_min * (h_max / h_min).powf(i as f64 / 120.0);
        let n = build_machine_mesh(geometry, h)?.n_nodes();
        let d = n.abs_diff(target);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, h));
        }
    }
    Ok(best.map(|(_, h)| h).unwrap_or(h_max))
}

pub(crate) fn label_mesh(
    geometry: &MachineGeometry,
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    regions: Vec<Region>,
) -> Result<Mesh> {
    if triangles.len() != regions.len() {
        return Err(Error::InvalidInput("one region label per triangle required".into()));
    }
    let n = nodes.len();
    let pole = geometry.pole_angle();
    let tol = 1e-7 * geometry.stator_outer_radius;

    let mut part: Vec<Option<Part>> = vec![None; n];
    for (t, tri) in triangles.iter().enumerate() {
        let p = if regions[t].is_rotor() { Part::Rotor } else { Part::Stator };
        for &v in tri {
            if v >= n {
                return Err(Error::InvalidInput(format!("triangle {t} references node {v}")));
            }
            match part[v] {
                None => part[v] = Some(p),
                Some(q) if q != p => {
                    return Err(Error::InvalidInput(format!(
                        "node {v} is shared by rotor and stator triangles"
                    )))
                }
                _ => {}
            }
        }
    }
    let node_part: Vec<Part> = part
        .into_iter()
        .enumerate()
        .map(|(v, p)| p.ok_or_else(|| Error::InvalidInput(format!("node {v} is not used by any triangle"))))
        .collect::<Result<_>>()?;

    let on = |v: usize, r: f64| (radius(nodes[v]) - r).abs() < tol;
    let at_angle = |v: usize, a: f64| {
        let p = nodes[v];
        (p[0] * a.sin() - p[1] * a.cos()).abs() < tol && p[0] * a.cos() + p[1] * a.sin() > 0.0
    };

    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edge_order = Vec::new();
    for tri in &triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let c = edge_count.entry(key).or_insert(0);
            if *c == 0 {
                edge_order.push(key);
            }
            *c += 1;
        }
    }
    let arc_labels = [
        (geometry.stator_outer_radius, BoundaryLabel::OuterStator),
        (geometry.rotor_inner_radius, BoundaryLabel::Shaft),
        (geometry.rotor_outer_radius, BoundaryLabel::RotorRim),
        (geometry.shaft_radius, BoundaryLabel::ShaftInner),
    ];
    let mut boundary_edges = Vec::new();
    for &(a, b) in &edge_order {
        let label = if on(a, geometry.interface_radius) && on(b, geometry.interface_radius) {
            Some(match node_part[a] {
                Part::Rotor => BoundaryLabel::InterfaceRotor,
                Part::Stator => BoundaryLabel::InterfaceStator,
            })
        } else if let Some(&(_, l)) = arc_labels.iter().find(|(r, _)| on(a, *r) && on(b, *r)) {
            Some(l)
        } else if edge_count[&(a, b)] == 1 && at_angle(a, 0.0) && at_angle(b, 0.0) {
            Some(BoundaryLabel::Radial1)
        } else if edge_count[&(a, b)] == 1 && at_angle(a, pole) && at_angle(b, pole) {
            Some(BoundaryLabel::Radial2)
        } else {
            None
        };
        if let Some(label) = label {
            boundary_edges.push(BoundaryEdge { nodes: [a, b], label });
        }
    }

    let mut g1: Vec<usize> = (0..n).filter(|&v| at_angle(v, 0.0)).collect();
    let mut g2: Vec<usize> = (0..n).filter(|&v| at_angle(v, pole)).collect();
    let key = |v: &usize| (node_part[*v] == Part::Stator, radius(nodes[*v]));
    g1.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    g2.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    if g1.len() != g2.len() {
        return Err(Error::InvalidInput(format!(
            "{} nodes on the first radial boundary but {} on the second",
            g1.len(),
            g2.len()
        )));
    }
    let mut periodic_pairs = Vec::with_capacity(g1.len());
    for (&a, &b) in g1.iter().zip(&g2) {
        if node_part[a] != node_part[b] || (radius(nodes[a]) - radius(nodes[b])).abs() > tol {
            return Err(Error::InvalidInput(format!(
                "radial boundary node {a} has no partner at equal radius"
            )));
        }
        periodic_pairs.push((a, b));
    }

    let interface = |p: Part| {
        let mut v: Vec<usize> = (0..n)
            .filter(|&v| node_part[v] == p && on(v, geometry.interface_radius))
            .collect();
        v.sort_by(|a, b| polar_angle(nodes[*a]).partial_cmp(&polar_angle(nodes[*b])).unwrap());
        v
    };
    let rotor_interface = interface(Part::Rotor);
    let stator_interface = interface(Part::Stator);
    if rotor_interface.len() != stator_interface.len() || rotor_interface.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "sliding interface has {} rotor and {} stator nodes",
            rotor_interface.len(),
            stator_interface.len()
        )));
    }

    let mesh = Mesh {
        nodes,
        triangles,
        regions,
        boundary_edges,
        periodic_pairs,
        node_part,
        rotor_interface,
        stator_interface,
        pole_angle: pole,
    };
    if mesh.min_signed_area() <= 0.0 {
        return Err(Error::InvalidInput("mesh contains non-positive triangle areas".into()));
    }
    Ok(mesh)
}
