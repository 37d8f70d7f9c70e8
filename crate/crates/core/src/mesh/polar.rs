//! Structured polar triangulation of a pole sector.
//!
//! The sector is covered by concentric arcs, each carrying its own number of
//! equal angular divisions with nodes at `θ_j = j·θ_p/n` (both radial edges
//! included). Neighbouring arcs are stitched by a zipper that always advances
//! along the arc whose next node has the smaller angle, so arcs with
//! different division counts connect without hanging nodes.

use crate::error::{Error, Result};
use crate::fem::signed_area;

use super::{BoundaryLabel, MachineGeometry, Mesh, Part, Region};

#[derive(Clone, Debug)]
pub(crate) struct Arc {
    pub radius: f64,
    pub ids: Vec<usize>,
}

#[derive(Debug, Default)]
pub(crate) struct PolarBuilder {
    pub pole_angle: f64,
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
}

impl PolarBuilder {
    pub fn new(pole_angle: f64) -> Self {
        Self {
            pole_angle,
            ..Default::default()
        }
    }

    pub fn arc(&mut self, radius: f64, divisions: usize) -> Arc {
        let mut ids = Vec::with_capacity(divisions + 1);
        for j in 0..=divisions {
            let t = self.pole_angle * j as f64 / divisions as f64;
            ids.push(self.nodes.len());
            self.nodes.push([radius * t.cos(), radius * t.sin()]);
        }
        Arc { radius, ids }
    }

    /// Triangulates the strip between `inner` and `outer`; the region of each
    /// triangle is chosen from its centroid.
    pub fn zip(&mut self, inner: &Arc, outer: &Arc, classify: &dyn Fn([f64; 2]) -> Region) {
        let ni = inner.ids.len() - 1;
        let no = outer.ids.len() - 1;
        let (mut i, mut o) = (0usize, 0usize);
        while i < ni || o < no {
            let ti = if i < ni { (i + 1) as f64 / ni as f64 } else { f64::INFINITY };
            let to = if o < no { (o + 1) as f64 / no as f64 } else { f64::INFINITY };
            let tri = if ti <= to {
                i += 1;
                [inner.ids[i - 1], inner.ids[i], outer.ids[o]]
            } else {
                o += 1;
                [inner.ids[i], outer.ids[o], outer.ids[o - 1]]
            };
            self.push(tri, classify);
        }
    }

    fn push(&mut self, mut tri: [usize; 3], classify: &dyn Fn([f64; 2]) -> Region) {
        let p = [self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]];
        if signed_area(p) < 0.0 {
            tri.swap(1, 2);
        }
        let c = [
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
        ];
        self.triangles.push(tri);
        self.regions.push(classify(c));
    }
}

/// Equal radial layers needed to keep radial edges near `0.866·h`.
pub(crate) fn radial_layers(dr: f64, h: f64) -> usize {
    ((dr / (0.866 * h)).ceil() as usize).max(1)
}

/// Even division count giving arc segments of at most `h`.
pub(crate) fn arc_divisions(radius: f64, angle: f64, h: f64) -> usize {
    let n = ((radius * angle / h).ceil() as usize).max(2);
    n + n % 2
}

/// Annulus sector used by analytic tests of the rotor-side solvers.
#[derive(Clone, Debug)]
pub struct AnnulusSpec {
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub pole_angle: f64,
    pub edge_length: f64,
}

/// Builds an annulus sector labelled as design domain, with the inner arc
/// marked as shaft boundary and the outer arc as rotor rim.
pub fn build_annulus_mesh(spec: &AnnulusSpec) -> Result<Mesh> {
    let AnnulusSpec {
        inner_radius: r0,
        outer_radius: r1,
        pole_angle,
        edge_length: h,
    } = *spec;
    if !(r0 > 0.0 && r1 > r0 && h > 0.0 && pole_angle > 0.0) {
        return Err(Error::Geometry("annulus requires 0 < r_in < r_out and h > 0".into()));
    }
    let mut b = PolarBuilder::new(pole_angle);
    let layers = radial_layers(r1 - r0, h);
    let mut prev = b.arc(r0, arc_divisions(r0, pole_angle, h));
    let mut arcs = vec![prev.clone()];
    for l in 1..=layers {
        let r = r0 + (r1 - r0) * l as f64 / layers as f64;
        let next = b.arc(r, arc_divisions(r, pole_angle, h));
        b.zip(&prev, &next, &|_| Region::Design);
        arcs.push(next.clone());
        prev = next;
    }
    let n = b.nodes.len();
    let mut boundary_edges = Vec::new();
    for (arc, label) in [(&arcs[0], BoundaryLabel::Shaft), (&arcs[layers], BoundaryLabel::RotorRim)] {
        for w in arc.ids.windows(2) {
            boundary_edges.push(super::BoundaryEdge {
                nodes: [w[0], w[1]],
                label,
            });
        }
    }
    for w in arcs.windows(2) {
        boundary_edges.push(super::BoundaryEdge {
            nodes: [w[0].ids[0], w[1].ids[0]],
            label: BoundaryLabel::Radial1,
        });
        boundary_edges.push(super::BoundaryEdge {
            nodes: [*w[0].ids.last().unwrap(), *w[1].ids.last().unwrap()],
            label: BoundaryLabel::Radial2,
        });
    }
    let periodic_pairs = arcs
        .iter()
        .map(|a| (a.ids[0], *a.ids.last().unwrap()))
        .collect();
    Ok(Mesh {
        nodes: b.nodes,
        triangles: b.triangles,
        regions: b.regions,
        boundary_edges,
        periodic_pairs,
        node_part: vec![Part::Rotor; n],
        rotor_interface: Vec::new(),
        stator_interface: Vec::new(),
        pole_angle,
    })
}

/// Divisions of the sliding-interface arcs: `3N·m` per pole so the spacing
/// divides the rotation step, with `m` the smallest factor resolving `h`.
pub(crate) fn interface_divisions(geometry: &MachineGeometry, h: f64) -> usize {
    let step = geometry.step_angle();
    let m = ((geometry.interface_radius * step / h).ceil() as usize).max(1);
    3 * geometry.rotation_steps * m
}
