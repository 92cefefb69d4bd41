//! Semistable models of P¹ over `o` as explicit finite chart atlases.
//!
//! The level-n model is built by iterated blow-up: level 0 is P¹ with two
//! affine-line charts glued by `x ↦ 1/x`; each step blows up the smooth
//! F_q-rational points of the special fiber. Charts come in three shapes:
//!
//! * affine lines `o[t]` (the outermost charts, carrying the smooth points),
//! * localized affine lines `o[t][1/(t−c), …]` (remnants of partial
//!   blow-ups, and refinement charts for tests),
//! * dumbbells `o[u,z]/(uz−ϖ)` localized at `u^(q−1)−1` and `z^(q−1)−1`,
//!   one per node of the special fiber.
//!
//! Components of the special fiber are labeled by vertices of the
//! Bruhat–Tits tree; for the full level-n model the labels are exactly the
//! radius-n ball around the standard vertex, and nodes are tree edges.
//! Every chart records how its coordinates express in the standard
//! coordinate of each component it touches, which is all the Čech engine
//! needs to build restriction maps.

pub mod bundle;
pub mod proj;

use std::collections::BTreeSet;

use serde::Serialize;

use crate::bttree;
use crate::error::{CoreError, Result};
use crate::ringlab::TruncRing;

pub use bundle::{ample_bundle, exceptional_bundle, proj_line_bundle, tangent_bundle, trivial_bundle, GenExpr, LinFactor, LineBundleData};
pub use proj::{proj_points_count, ProjPoint};

/// A residue of the component coordinate, or the point at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Place {
    Finite(u64),
    Infinity,
}

/// Which affine coordinate of P¹ a subtree hangs under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    /// the `x`-coordinate chart
    Plus,
    /// the `y = 1/x` chart
    Minus,
}

/// How chart generators express in the standard coordinate τ of a component.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ChartRel {
    /// `t = τ`
    Identity,
    /// `u = τ − teich(center)`, `z = ϖ/(τ − teich(center))`
    Shift { center: u64 },
    /// `u = 1/τ`, `z = ϖτ` (the root edge at infinity, and the `y`-chart)
    InvShift,
    /// the child side of a dumbbell: `z = 1/τ`, `u = ϖτ`
    ZSide,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChartOnComponent {
    pub comp: usize,
    pub rel: ChartRel,
    /// residues of τ whose points are not in this chart
    pub excluded: BTreeSet<u64>,
    /// whether the τ = ∞ point is outside this chart
    pub excludes_infinity: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ChartKind {
    /// `Spec o[t]`
    Affine,
    /// `Spec o[t][1/(t − teich(r)) : r ∈ roots]`
    AffineLoc { roots: BTreeSet<u64> },
    /// `Spec o[u,z]/(uz−ϖ)[1/(u^(q−1)−1), 1/(z^(q−1)−1)]`
    Dumbbell,
}

#[derive(Clone, Debug, Serialize)]
pub struct Chart {
    pub id: String,
    pub kind: ChartKind,
    /// coordinate side for pullback trivializations
    pub side: Side,
    /// blow-up step at which this chart was created (0 for the base charts)
    pub born: u32,
    pub on: Vec<ChartOnComponent>,
}

impl Chart {
    pub fn on_component(&self, comp: usize) -> Option<&ChartOnComponent> {
        self.on.iter().find(|c| c.comp == comp)
    }

    /// Human-readable algebra presentation, for the JSON dump.
    pub fn presentation(&self, q: u64) -> String {
        match &self.kind {
            ChartKind::Affine => "o[t]".to_string(),
            ChartKind::AffineLoc { roots } => {
                let locs: Vec<String> = roots.iter().map(|r| format!("1/(t - [{r}])")).collect();
                format!("o[t][{}]", locs.join(", "))
            }
            ChartKind::Dumbbell => format!(
                "o[u,z]/(u*z - w)[1/(u^{} - 1), 1/(z^{} - 1)]",
                q - 1,
                q - 1
            ),
        }
    }
}

/// One irreducible component of the special fiber.
#[derive(Clone, Debug, Serialize)]
pub struct Component {
    /// distance from the root component
    pub depth: u32,
    pub side: Side,
    /// ξ = Σ teich(dᵢ)·ϖⁱ + ϖ^depth·τ, with ξ = x or y by side;
    /// pairs are (position, residue index), zero digits omitted
    pub base_digits: Vec<(u32, u64)>,
    /// tree label; the component ↔ ball bijection
    pub vertex: bttree::Vertex,
    /// residues of τ that are nodes (plus possibly ∞), with the edge index
    pub nodes: Vec<(Place, usize)>,
}

impl Component {
    pub fn is_node_at(&self, place: Place) -> bool {
        self.nodes.iter().any(|(p, _)| *p == place)
    }
}

/// A node of the special fiber: the intersection of two components,
/// covered by exactly one dumbbell chart.
#[derive(Clone, Debug, Serialize)]
pub struct Node {
    pub parent: usize,
    pub child: usize,
    pub chart: usize,
    /// where the node sits on the parent component
    pub parent_place: Place,
}

/// A smooth F_q-rational point of the special fiber.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SmoothPoint {
    pub comp: usize,
    pub residue: u64,
    /// `true` only for the τ = ∞ point of the root at level 0
    pub at_infinity: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelAtlas {
    ring: TruncRing,
    level: u32,
    charts: Vec<Chart>,
    components: Vec<Component>,
    nodes: Vec<Node>,
    /// true when this atlas is a full level-n model (every blow-up was total)
    full: bool,
}

/// Resource guard: chart counts grow like q^n.
const MAX_LEVEL: u32 = 4;
const MAX_CHARTS: usize = 400;

impl ModelAtlas {
    pub fn ring(&self) -> &TruncRing {
        &self.ring
    }
    pub fn level(&self) -> u32 {
        self.level
    }
    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }
    pub fn components(&self) -> &[Component] {
        &self.components
    }
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }
    pub fn is_full(&self) -> bool {
        self.full
    }
    pub fn q(&self) -> u64 {
        self.ring.q()
    }

    /// The same atlas over `o/ϖ^{j'}` (the combinatorics are level-free).
    pub fn with_truncation(&self, j: u32) -> Result<ModelAtlas> {
        Ok(ModelAtlas {
            ring: self.ring.with_level(j)?,
            ..self.clone()
        })
    }

    /// Insert a redundant chart: a localization of the affine chart of a
    /// component away from the given extra residues. Refinement independence
    /// of cohomology is tested against this.
    pub fn with_redundant_chart(&self, comp: usize, roots: BTreeSet<u64>) -> ModelAtlas {
        let host = self
            .charts
            .iter()
            .find(|c| {
                c.kind != ChartKind::Dumbbell
                    && c.on_component(comp)
                        .is_some_and(|on| on.rel == ChartRel::Identity)
            })
            .expect("component has an affine chart");
        let mut on = host.on_component(comp).unwrap().clone();
        on.excluded.extend(roots.iter().copied());
        let all_roots: BTreeSet<u64> = match &host.kind {
            ChartKind::AffineLoc { roots: r0 } => r0.union(&roots).copied().collect(),
            _ => roots,
        };
        let mut out = self.clone();
        out.charts.push(Chart {
            id: format!("R:{}", host.id),
            kind: ChartKind::AffineLoc { roots: all_roots },
            side: host.side,
            born: host.born,
            on: vec![on],
        });
        out
    }

    /// The base model: P¹ with charts `o[x]` and `o[y]`, glued by `x ↦ 1/x`.
    pub fn base(ring: &TruncRing) -> ModelAtlas {
        let root = Component {
            depth: 0,
            side: Side::Plus,
            base_digits: vec![],
            vertex: bttree::Vertex::standard(),
            nodes: vec![],
        };
        let x_chart = Chart {
            id: "A+".into(),
            kind: ChartKind::Affine,
            side: Side::Plus,
            born: 0,
            on: vec![ChartOnComponent {
                comp: 0,
                rel: ChartRel::Identity,
                excluded: BTreeSet::new(),
                excludes_infinity: true,
            }],
        };
        let y_chart = Chart {
            id: "A-".into(),
            kind: ChartKind::Affine,
            side: Side::Minus,
            born: 0,
            on: vec![ChartOnComponent {
                comp: 0,
                rel: ChartRel::InvShift,
                excluded: [0u64].into_iter().collect(),
                excludes_infinity: false,
            }],
        };
        ModelAtlas {
            ring: ring.clone(),
            level: 0,
            charts: vec![x_chart, y_chart],
            components: vec![root],
            nodes: vec![],
            full: true,
        }
    }

    /// The full level-n model.
    pub fn build(ring: &TruncRing, n: u32) -> Result<ModelAtlas> {
        if n > MAX_LEVEL {
            return Err(CoreError::OutOfRange {
                name: "n",
                value: n as i64,
                allowed: "0..=4",
            });
        }
        let mut atlas = ModelAtlas::base(ring);
        for _ in 0..n {
            let centers = atlas.smooth_fq_points();
            atlas = atlas.blow_up(&centers)?;
            if atlas.charts.len() > MAX_CHARTS {
                return Err(CoreError::OutOfRange {
                    name: "charts",
                    value: atlas.charts.len() as i64,
                    allowed: "≤ 400 (lower n or q)",
                });
            }
        }
        Ok(atlas)
    }

    /// All smooth F_q-rational points of the special fiber: the residues of
    /// each component that are not nodes (plus τ = ∞ on the root at level 0).
    pub fn smooth_fq_points(&self) -> Vec<SmoothPoint> {
        let q = self.q();
        let mut out = Vec::new();
        for (ci, comp) in self.components.iter().enumerate() {
            // a component has smooth F_q-points only while some A-type chart
            // still covers them
            for r in 0..q {
                if comp.is_node_at(Place::Finite(r)) {
                    continue;
                }
                if self.covering_affine_chart(ci, Place::Finite(r)).is_some() {
                    out.push(SmoothPoint {
                        comp: ci,
                        residue: r,
                        at_infinity: false,
                    });
                }
            }
            if comp.depth == 0
                && !comp.is_node_at(Place::Infinity)
                && self.covering_affine_chart(ci, Place::Infinity).is_some()
            {
                out.push(SmoothPoint {
                    comp: ci,
                    residue: 0,
                    at_infinity: true,
                });
            }
        }
        out
    }

    /// The unique affine-type chart containing the given place of the
    /// component, if any.
    fn covering_affine_chart(&self, comp: usize, place: Place) -> Option<usize> {
        self.charts.iter().position(|ch| {
            if ch.kind == ChartKind::Dumbbell {
                return false;
            }
            match ch.on_component(comp) {
                None => false,
                Some(on) => match place {
                    Place::Finite(r) => !on.excluded.contains(&r),
                    Place::Infinity => !on.excludes_infinity,
                },
            }
        })
    }

    /// Blow up the given smooth points. Every chart containing a center is
    /// localized away from it (or dropped once redundant); each center
    /// spawns a dumbbell and a fresh affine chart for the new component.
    pub fn blow_up(&self, centers: &[SmoothPoint]) -> Result<ModelAtlas> {
        let q = self.q();
        // validate centers
        for c in centers {
            if c.comp >= self.components.len() {
                return Err(CoreError::OutOfRange {
                    name: "component",
                    value: c.comp as i64,
                    allowed: "< number of components",
                });
            }
            if c.residue >= q {
                return Err(CoreError::CenterNotRational(format!(
                    "residue index {} out of range for q = {q}",
                    c.residue
                )));
            }
            let place = if c.at_infinity {
                Place::Infinity
            } else {
                Place::Finite(c.residue)
            };
            if c.at_infinity && self.components[c.comp].depth > 0 {
                return Err(CoreError::CenterNotSmooth(
                    "τ = ∞ on a non-root component is the node toward the root".into(),
                ));
            }
            if self.components[c.comp].is_node_at(place) {
                return Err(CoreError::CenterNotSmooth(format!(
                    "place {place:?} of component {} is a node",
                    c.comp
                )));
            }
            if self.covering_affine_chart(c.comp, place).is_none() {
                return Err(CoreError::CenterNotSmooth(format!(
                    "no affine chart covers {place:?} on component {}",
                    c.comp
                )));
            }
        }
        let center_set: BTreeSet<(usize, Place)> = centers
            .iter()
            .map(|c| {
                (
                    c.comp,
                    if c.at_infinity {
                        Place::Infinity
                    } else {
                        Place::Finite(c.residue)
                    },
                )
            })
            .collect();
        if center_set.len() != centers.len() {
            return Err(CoreError::CenterNotSmooth("duplicate centers".into()));
        }

        let step = self.level + 1;
        let mut components = self.components.clone();
        let mut nodes = self.nodes.clone();
        let mut new_charts: Vec<Chart> = Vec::new();

        // localize or drop existing charts
        for ch in &self.charts {
            let mut ch = ch.clone();
            let mut drop_chart = false;
            for on in ch.on.iter_mut() {
                let comp_centers: Vec<Place> = center_set
                    .iter()
                    .filter(|(c, _)| *c == on.comp)
                    .map(|(_, p)| *p)
                    .collect();
                if comp_centers.is_empty() {
                    continue;
                }
                for p in &comp_centers {
                    match p {
                        Place::Finite(r) => {
                            on.excluded.insert(*r);
                        }
                        Place::Infinity => {
                            on.excludes_infinity = true;
                        }
                    }
                }
                // update the chart's own localization roots (affine kinds
                // only; dumbbells never contain smooth points)
                if ch.kind != ChartKind::Dumbbell {
                    let mut roots = match &ch.kind {
                        ChartKind::AffineLoc { roots } => roots.clone(),
                        _ => BTreeSet::new(),
                    };
                    for p in &comp_centers {
                        if let Some(r) = place_in_chart_coord(&on.rel, *p, &self.ring) {
                            roots.insert(r);
                        }
                        // a center at the chart's own infinity needs no root
                    }
                    ch.kind = ChartKind::AffineLoc { roots };
                }
            }
            // redundancy: an affine-type chart is redundant when every place
            // of its component it still covers is also covered by dumbbells,
            // i.e. when all F_q-places and ∞ of the component are nodes or
            // excluded (non-rational points lie in every dumbbell of the
            // component)
            if ch.kind != ChartKind::Dumbbell {
                let on = &ch.on[0];
                let comp = on.comp;
                let all_special_gone = (0..q).all(|r| {
                    on.excluded.contains(&r)
                        || components[comp].is_node_at(Place::Finite(r))
                        || center_set.contains(&(comp, Place::Finite(r)))
                }) && (on.excludes_infinity
                    || components[comp].is_node_at(Place::Infinity)
                    || center_set.contains(&(comp, Place::Infinity)))
                    // only drop if the component will have at least one node
                    // (so dumbbells exist to cover it)
                    && (!components[comp].nodes.is_empty()
                        || center_set.iter().any(|(c, _)| *c == comp));
                if all_special_gone {
                    drop_chart = true;
                }
            }
            if !drop_chart {
                new_charts.push(ch);
            }
        }

        // create dumbbells, fresh affine charts, components, nodes
        for (comp_idx, place) in &center_set {
            let parent = components[*comp_idx].clone();
            let rel = match place {
                Place::Finite(r) => ChartRel::Shift { center: *r },
                Place::Infinity => ChartRel::InvShift,
            };
            // child component bookkeeping
            let (child_side, child_digits) = match place {
                Place::Finite(r) => {
                    let mut d = parent.base_digits.clone();
                    if *r != 0 {
                        d.push((parent.depth, *r));
                    }
                    (parent.side, d)
                }
                Place::Infinity => (Side::Minus, vec![]),
            };
            let vertex = proj::disk_vertex(
                &self.ring,
                child_side,
                &child_digits,
                parent.depth + 1,
            )?;
            let child_idx = components.len();
            let path = component_path_label(&components, *comp_idx, place);
            components.push(Component {
                depth: parent.depth + 1,
                side: child_side,
                base_digits: child_digits,
                vertex,
                nodes: vec![],
            });

            let dumbbell_idx = new_charts.len();
            let all_nonzero: BTreeSet<u64> = (1..q).collect();
            let excl_parent: BTreeSet<u64> = match place {
                Place::Finite(r) => (0..q).filter(|x| x != r).collect(),
                Place::Infinity => (0..q).collect(),
            };
            new_charts.push(Chart {
                id: format!("D:{path}"),
                kind: ChartKind::Dumbbell,
                side: child_side,
                born: step,
                on: vec![
                    ChartOnComponent {
                        comp: *comp_idx,
                        rel: rel.clone(),
                        excluded: excl_parent,
                        excludes_infinity: *place != Place::Infinity,
                    },
                    ChartOnComponent {
                        comp: child_idx,
                        rel: ChartRel::ZSide,
                        excluded: (0..q).collect(),
                        excludes_infinity: false,
                    },
                ],
            });
            let _ = all_nonzero;
            new_charts.push(Chart {
                id: format!("T:{path}"),
                kind: ChartKind::Affine,
                side: child_side,
                born: step,
                on: vec![ChartOnComponent {
                    comp: child_idx,
                    rel: ChartRel::Identity,
                    excluded: BTreeSet::new(),
                    excludes_infinity: true,
                }],
            });
            let node_idx = nodes.len();
            nodes.push(Node {
                parent: *comp_idx,
                child: child_idx,
                chart: dumbbell_idx,
                parent_place: *place,
            });
            components[*comp_idx].nodes.push((*place, node_idx));
            components[child_idx].nodes.push((Place::Infinity, node_idx));
        }

        // node chart indices inside `nodes` refer to positions in new_charts;
        // recompute for persisted dumbbells
        let mut rebuilt_nodes = Vec::with_capacity(nodes.len());
        for nd in &nodes {
            let chart = if nd.chart < new_charts.len()
                && new_charts[nd.chart].kind == ChartKind::Dumbbell
                && new_charts[nd.chart]
                    .on_component(nd.parent)
                    .is_some()
                && new_charts[nd.chart].on_component(nd.child).is_some()
            {
                nd.chart
            } else {
                new_charts
                    .iter()
                    .position(|ch| {
                        ch.kind == ChartKind::Dumbbell
                            && ch.on_component(nd.parent).is_some()
                            && ch.on_component(nd.child).is_some()
                    })
                    .expect("dumbbell chart persists")
            };
            rebuilt_nodes.push(Node { chart, ..nd.clone() });
        }

        let full = self.full && {
            // all smooth points blown up
            let all = self.smooth_fq_points();
            all.iter().all(|p| {
                let place = if p.at_infinity {
                    Place::Infinity
                } else {
                    Place::Finite(p.residue)
                };
                center_set.contains(&(p.comp, place))
            })
        };

        Ok(ModelAtlas {
            ring: self.ring.clone(),
            level: if full { self.level + 1 } else { self.level },
            charts: new_charts,
            components,
            nodes: rebuilt_nodes,
            full,
        })
    }

    /// Pairs of chart indices (i < k) sharing a component, with the shared
    /// component. Charts can share at most one component.
    pub fn overlap_pairs(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.charts.len() {
            for k in i + 1..self.charts.len() {
                if let Some(c) = self.shared_component(i, k) {
                    out.push((i, k, c));
                }
            }
        }
        out
    }

    pub fn shared_component(&self, i: usize, k: usize) -> Option<usize> {
        for a in &self.charts[i].on {
            if self.charts[k].on_component(a.comp).is_some() {
                return Some(a.comp);
            }
        }
        None
    }

    /// Triples (i < k < l) sharing a common component.
    pub fn overlap_triples(&self) -> Vec<(usize, usize, usize, usize)> {
        let mut out = Vec::new();
        let n = self.charts.len();
        for i in 0..n {
            for k in i + 1..n {
                let Some(c1) = self.shared_component(i, k) else {
                    continue;
                };
                for l in k + 1..n {
                    if self.charts[l].on_component(c1).is_some()
                        && self.charts[i].on_component(c1).is_some()
                    {
                        out.push((i, k, l, c1));
                    }
                }
            }
        }
        out
    }

    /// Union of excluded finite residues over the given charts on a
    /// component: the poles allowed in the overlap ring.
    pub fn overlap_roots(&self, comp: usize, chart_ids: &[usize]) -> BTreeSet<u64> {
        let mut roots = BTreeSet::new();
        for &ci in chart_ids {
            let on = self.charts[ci]
                .on_component(comp)
                .expect("chart is on the component");
            roots.extend(on.excluded.iter().copied());
        }
        roots
    }

    /// Stable JSON document describing the atlas (charts, presentations,
    /// gluing relations, component map), for debugging and golden tests.
    pub fn to_json(&self) -> serde_json::Value {
        let q = self.q();
        serde_json::json!({
            "ring": { "p": self.ring.p(), "f": self.ring.f(), "j": self.ring.j() },
            "level": self.level,
            "full": self.full,
            "components": self.components.iter().enumerate().map(|(i, c)| {
                serde_json::json!({
                    "index": i,
                    "depth": c.depth,
                    "side": format!("{:?}", c.side),
                    "base_digits": c.base_digits,
                    "vertex": format!("{:?}", c.vertex),
                    "nodes": c.nodes.iter().map(|(p, n)| serde_json::json!({
                        "place": format!("{p:?}"), "node": n })).collect::<Vec<_>>(),
                })
            }).collect::<Vec<_>>(),
            "charts": self.charts.iter().map(|ch| {
                serde_json::json!({
                    "id": ch.id,
                    "algebra": ch.presentation(q),
                    "side": format!("{:?}", ch.side),
                    "on": ch.on.iter().map(|on| serde_json::json!({
                        "component": on.comp,
                        "relation": describe_rel(&on.rel),
                        "excluded_residues": on.excluded,
                        "excludes_infinity": on.excludes_infinity,
                    })).collect::<Vec<_>>(),
                })
            }).collect::<Vec<_>>(),
            "nodes": self.nodes.iter().map(|n| serde_json::json!({
                "parent": n.parent, "child": n.child,
                "chart": self.charts[n.chart].id,
                "parent_place": format!("{:?}", n.parent_place),
            })).collect::<Vec<_>>(),
        })
    }
}

fn describe_rel(rel: &ChartRel) -> String {
    match rel {
        ChartRel::Identity => "t = tau".into(),
        ChartRel::Shift { center } => format!("u = tau - [{center}], z = w/(tau - [{center}])"),
        ChartRel::InvShift => "u = 1/tau, z = w*tau".into(),
        ChartRel::ZSide => "z = 1/tau, u = w*tau".into(),
    }
}

/// Where a place of the component sits in the chart's own coordinate, as a
/// residue index (None when it is the chart coordinate's infinity).
fn place_in_chart_coord(rel: &ChartRel, place: Place, ring: &TruncRing) -> Option<u64> {
    match (rel, place) {
        (ChartRel::Identity, Place::Finite(r)) => Some(r),
        (ChartRel::Identity, Place::Infinity) => None,
        (ChartRel::InvShift, Place::Infinity) => Some(0),
        (ChartRel::InvShift, Place::Finite(0)) => None,
        (ChartRel::InvShift, Place::Finite(r)) => {
            // y-residue of x = [r] is [r]⁻¹
            let teich = ring.teichmuller_set();
            let inv = ring.inv(&teich[r as usize]).expect("nonzero residue");
            Some(ring.residue_index(&inv))
        }
        _ => None,
    }
}

fn component_path_label(components: &[Component], parent: usize, place: &Place) -> String {
    let p = &components[parent];
    let mut segs: Vec<String> = Vec::new();
    match p.side {
        Side::Minus => segs.push("inf".into()),
        Side::Plus => {}
    }
    // digit path of the parent
    let mut digit_at = vec![0u64; p.depth as usize];
    for &(pos, d) in &p.base_digits {
        if (pos as usize) < digit_at.len() {
            digit_at[pos as usize] = d;
        }
    }
    let skip = match p.side {
        Side::Minus => 1,
        Side::Plus => 0,
    };
    for &d in digit_at.iter().skip(skip) {
        segs.push(format!("{d}"));
    }
    match place {
        Place::Finite(r) => segs.push(format!("{r}")),
        Place::Infinity => segs.push("inf".into()),
    }
    segs.join(".")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(p: u64, f: u32, j: u32) -> TruncRing {
        TruncRing::new(p, f, j).unwrap()
    }

    #[test]
    fn base_model_shape() {
        let r = ring(2, 1, 3);
        let m = ModelAtlas::base(&r);
        assert_eq!(m.charts().len(), 2);
        assert_eq!(m.components().len(), 1);
        assert_eq!(m.smooth_fq_points().len(), 3); // q + 1
    }

    #[test]
    fn level_one_counts() {
        for (p, f) in [(2u64, 1u32), (3, 1), (2, 2)] {
            let r = ring(p, f, 2);
            let q = r.q();
            let m = ModelAtlas::build(&r, 1).unwrap();
            assert_eq!(m.components().len() as u64, q + 2, "q+2 components");
            assert_eq!(m.nodes().len() as u64, q + 1, "one node per outer component");
            // clean level-1 atlas: q+1 dumbbells + q+1 affine charts
            assert_eq!(m.charts().len() as u64, 2 * (q + 1));
            assert_eq!(m.smooth_fq_points().len() as u64, q * (q + 1));
        }
    }

    #[test]
    fn level_two_counts() {
        let r = ring(2, 1, 2);
        let m = ModelAtlas::build(&r, 2).unwrap();
        let q = 2u64;
        // components: 1 + (q+1) + (q+1)q
        assert_eq!(m.components().len() as u64, 1 + (q + 1) + (q + 1) * q);
        assert_eq!(m.nodes().len(), m.components().len() - 1);
        assert_eq!(m.smooth_fq_points().len() as u64, q.pow(2) * (q + 1));
    }

    #[test]
    fn component_vertices_form_ball() {
        for (p, n) in [(2u64, 1u32), (2, 2), (3, 2)] {
            let r = ring(p, 1, 2);
            let m = ModelAtlas::build(&r, n).unwrap();
            let tree = bttree::Tree::new(p, 1, n + 1).unwrap();
            let ball: BTreeSet<_> = tree
                .ball(&bttree::Vertex::standard(), n)
                .into_iter()
                .collect();
            let labels: BTreeSet<_> = m.components().iter().map(|c| c.vertex.clone()).collect();
            assert_eq!(labels.len(), m.components().len(), "labels distinct");
            assert_eq!(labels, ball, "component labels = radius-n ball");
            // adjacency: nodes are tree edges
            for nd in m.nodes() {
                let pv = &m.components()[nd.parent].vertex;
                let cv = &m.components()[nd.child].vertex;
                assert_eq!(tree.dist(pv, cv), 1);
            }
        }
    }

    #[test]
    fn partial_blow_up_keeps_remnant() {
        let r = ring(2, 1, 2);
        let m = ModelAtlas::base(&r);
        // blow up only x = 0
        let centers = vec![SmoothPoint {
            comp: 0,
            residue: 0,
            at_infinity: false,
        }];
        let m1 = m.blow_up(&centers).unwrap();
        assert!(!m1.is_full());
        assert_eq!(m1.components().len(), 2);
        // A+ must persist, localized away from 0
        let a_plus = m1.charts().iter().find(|c| c.id == "A+").unwrap();
        match &a_plus.kind {
            ChartKind::AffineLoc { roots } => assert!(roots.contains(&0)),
            k => panic!("expected localized remnant, got {k:?}"),
        }
        // remaining smooth points: x = 1 (on root), ∞ (root), and q on child
        let pts = m1.smooth_fq_points();
        assert_eq!(pts.len(), 2 + 2);
        // empty center list: unchanged atlas
        let m2 = m.blow_up(&[]).unwrap();
        assert_eq!(m2.charts().len(), m.charts().len());
        assert_eq!(m2.components().len(), 1);
    }

    #[test]
    fn blow_up_error_cases() {
        let r = ring(2, 1, 2);
        let m1 = ModelAtlas::build(&r, 1).unwrap();
        // nodes of the root are no longer smooth
        let bad = vec![SmoothPoint {
            comp: 0,
            residue: 0,
            at_infinity: false,
        }];
        assert!(matches!(
            m1.blow_up(&bad),
            Err(CoreError::CenterNotSmooth(_))
        ));
        // residue out of range = not rational over F_q
        let bad = vec![SmoothPoint {
            comp: 1,
            residue: 7,
            at_infinity: false,
        }];
        assert!(matches!(
            m1.blow_up(&bad),
            Err(CoreError::CenterNotRational(_))
        ));
    }

    #[test]
    fn open_subscheme_compatibility() {
        // X_{n} away from its level-n centers is chart-isomorphic to X_{n-1}
        // away from its smooth points: dumbbells persist untouched
        let r = ring(2, 1, 2);
        let m1 = ModelAtlas::build(&r, 1).unwrap();
        let m2 = ModelAtlas::build(&r, 2).unwrap();
        for ch in m1.charts().iter().filter(|c| c.kind == ChartKind::Dumbbell) {
            let again = m2.charts().iter().find(|c| c.id == ch.id).unwrap();
            assert_eq!(again.kind, ch.kind);
            assert_eq!(again.on.len(), ch.on.len());
            for (a, b) in again.on.iter().zip(&ch.on) {
                assert_eq!(a.comp, b.comp);
                assert_eq!(a.rel, b.rel);
                assert_eq!(a.excluded, b.excluded);
            }
        }
    }

    #[test]
    fn overlap_structure() {
        let r = ring(2, 1, 2);
        let m = ModelAtlas::build(&r, 1).unwrap();
        // pairs: C(3,2) on the root + (D,T) per outer component
        let pairs = m.overlap_pairs();
        assert_eq!(pairs.len(), 3 + 3);
        let triples = m.overlap_triples();
        assert_eq!(triples.len(), 1);
        // every pair's overlap roots: all of F_q on the root
        for (i, k, c) in pairs {
            let roots = m.overlap_roots(c, &[i, k]);
            if c == 0 {
                assert_eq!(roots.len(), 2);
            }
        }
    }

    #[test]
    fn resource_guard() {
        let r = ring(2, 1, 2);
        assert!(ModelAtlas::build(&r, 9).is_err());
    }

    #[test]
    fn atlas_json_stable() {
        let r = ring(2, 1, 2);
        let m = ModelAtlas::build(&r, 1).unwrap();
        let j1 = serde_json::to_string(&m.to_json()).unwrap();
        let j2 = serde_json::to_string(&ModelAtlas::build(&r, 1).unwrap().to_json()).unwrap();
        assert_eq!(j1, j2);
        assert!(j1.contains("\"algebra\""));
    }
}
