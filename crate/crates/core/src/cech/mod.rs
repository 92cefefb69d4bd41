//! Čech cohomology over `o/ϖʲ` for chart-presented sheaves on a model atlas.
//!
//! Section modules of the charts are infinite rank, so the engine works with
//! monomial-degree cutoffs: `C⁰` is spanned by chart monomials of degree
//! ≤ D, and the overlap spaces are enlarged dynamically so that no
//! coboundary image is ever truncated. A report is only considered reliable
//! when recomputing at D+1 gives the same answer (`stabilized`); the CLI
//! refuses unstabilized reports. Since the nerve of the special fiber is
//! one-dimensional, only `H⁰` and `H¹` exist.

pub mod module;
mod oracle;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::models::{
    bundle::exceptional_local_gen, ChartKind, ChartRel, GenExpr, LinFactor, LineBundleData,
    ModelAtlas,
};
use crate::ringlab::{
    self, coker_invariants, howell, kernel_left, solve_left, span_invariants, Mat,
    ModuleInvariants,
};

pub use module::{LocalElt, ModCtx, Mono, RingShape};
pub use oracle::special_fiber_oracle;

/// A line bundle (or a finite direct sum) with exact ϖ-power scaling factors
/// recorded per summand. The scaling is bookkeeping for the embedding into
/// larger sheaves — cohomology of the underlying bundle does not see it, and
/// it is never collapsed at truncation.
#[derive(Clone, Debug, Serialize)]
pub struct SheafPresentation {
    pub label: String,
    pub summands: Vec<SheafSummand>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SheafSummand {
    pub bundle: LineBundleData,
    /// exact ϖ-exponent of the lattice scaling (may be negative)
    pub scale_varpi: i64,
}

impl SheafPresentation {
    pub fn of_bundle(label: impl Into<String>, bundle: LineBundleData) -> Self {
        SheafPresentation {
            label: label.into(),
            summands: vec![SheafSummand {
                bundle,
                scale_varpi: 0,
            }],
        }
    }

    pub fn scaled(label: impl Into<String>, bundle: LineBundleData, scale_varpi: i64) -> Self {
        SheafPresentation {
            label: label.into(),
            summands: vec![SheafSummand { bundle, scale_varpi }],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RingDesc {
    pub p: u64,
    pub f: u32,
    pub j: u32,
}

/// `H⁰`/`H¹` of a sheaf over `o/ϖʲ` as free rank plus torsion exponents,
/// with the cutoff and stabilization flag that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CohomologyReport {
    pub ring: RingDesc,
    #[serde(rename = "object-id")]
    pub object_id: String,
    #[serde(rename = "H0")]
    pub h0: ModuleInvariants,
    #[serde(rename = "H1")]
    pub h1: ModuleInvariants,
    pub cutoff: u32,
    pub stabilized: bool,
}

impl CohomologyReport {
    /// length of H⁰ minus length of H¹ as o-modules
    pub fn euler_length(&self) -> i64 {
        self.h0.length(self.ring.j) as i64 - self.h1.length(self.ring.j) as i64
    }
}

/// Default degree cutoff for a twist `L_n^(⊗r) ⊗ pr*O(d)` on the level-n
/// model.
pub fn default_cutoff(n: u32, r: i64, a0: i64, d: i64) -> u32 {
    (2 * (d.unsigned_abs() + (r.unsigned_abs() * (a0.unsigned_abs() + n as u64)) + n as u64 + 2))
        as u32
}

/// Čech cohomology of the sheaf over `o/ϖʲ` at cutoff `d_cut`, with
/// stabilization verified by recomputing at `d_cut + 1`.
pub fn cech_cohomology(
    atlas: &ModelAtlas,
    sheaf: &SheafPresentation,
    j: u32,
    d_cut: u32,
) -> Result<CohomologyReport> {
    let atlas = atlas.with_truncation(j)?;
    let (h0a, h1a) = cohomology_at_cutoff(&atlas, sheaf, d_cut)?;
    let (h0b, h1b) = cohomology_at_cutoff(&atlas, sheaf, d_cut + 1)?;
    let stabilized = h0a == h0b && h1a == h1b;
    Ok(CohomologyReport {
        ring: RingDesc {
            p: atlas.ring().p(),
            f: atlas.ring().f(),
            j,
        },
        object_id: sheaf.label.clone(),
        h0: h0a,
        h1: h1a,
        cutoff: d_cut,
        stabilized,
    })
}

fn merge_invariants(a: ModuleInvariants, b: &ModuleInvariants) -> ModuleInvariants {
    let mut torsion = a.torsion;
    torsion.extend(b.torsion.iter().copied());
    torsion.sort_unstable();
    ModuleInvariants {
        free_rank: a.free_rank + b.free_rank,
        torsion,
    }
}

fn cohomology_at_cutoff(
    atlas: &ModelAtlas,
    sheaf: &SheafPresentation,
    d_cut: u32,
) -> Result<(ModuleInvariants, ModuleInvariants)> {
    let mut h0 = ModuleInvariants::trivial();
    let mut h1 = ModuleInvariants::trivial();
    for summand in &sheaf.summands {
        let (a, b) = bundle_cohomology(atlas, &summand.bundle, d_cut)?;
        h0 = merge_invariants(h0, &a);
        h1 = merge_invariants(h1, &b);
    }
    Ok((h0, h1))
}

/// chart basis monomials at cutoff D
fn chart_monomials(atlas: &ModelAtlas, chart: usize, d: u32) -> Vec<Mono> {
    let q = atlas.q();
    let mut out = vec![Mono::One];
    out.extend((1..=d).map(Mono::U));
    match &atlas.charts()[chart].kind {
        ChartKind::Affine => {}
        ChartKind::AffineLoc { roots } => {
            for &r in roots {
                out.extend((1..=d).map(|m| Mono::UNeg { root: r, m }));
            }
        }
        ChartKind::Dumbbell => {
            out.extend((1..=d).map(Mono::Z));
            for r in 1..q {
                out.extend((1..=d).map(|m| Mono::UNeg { root: r, m }));
                out.extend((1..=d).map(|m| Mono::ZNeg { root: r, m }));
            }
        }
    }
    out
}

struct Layout {
    /// per unit: monomial → local index
    index: Vec<BTreeMap<Mono, usize>>,
    offsets: Vec<usize>,
    total: usize,
}

impl Layout {
    fn new(unit_monos: Vec<Vec<Mono>>) -> Layout {
        let mut index = Vec::with_capacity(unit_monos.len());
        let mut offsets = Vec::with_capacity(unit_monos.len());
        let mut total = 0;
        for monos in unit_monos {
            offsets.push(total);
            let mut map = BTreeMap::new();
            for m in monos {
                let next = map.len();
                map.entry(m).or_insert(next);
            }
            total += map.len();
            index.push(map);
        }
        Layout {
            index,
            offsets,
            total,
        }
    }

    fn pos(&self, unit: usize, m: &Mono) -> usize {
        self.offsets[unit] + self.index[unit][m]
    }
}

/// substitution of one chart monomial into the standard coordinate of a
/// component, per the chart's relation
pub fn subst_mono(ctx: &ModCtx, rel: &ChartRel, m: Mono) -> LocalElt {
    let ring = &ctx.ring;
    match rel {
        ChartRel::Identity => {
            debug_assert!(!matches!(m, Mono::Z(_) | Mono::ZNeg { .. }));
            LocalElt::monomial(ctx, m, ring.one())
        }
        ChartRel::Shift { center } => match m {
            Mono::One => LocalElt::one(ctx),
            Mono::U(k) => module::shifted_pow(ctx, *center, k),
            Mono::Z(k) => {
                let c = ring.varpi_pow(k);
                LocalElt::monomial(ctx, Mono::UNeg { root: *center, m: k }, c)
            }
            Mono::UNeg { root, m } => {
                // u − B = τ − (teich(center) + B)
                let delta = ring.add(ctx.teich(*center), ctx.teich(root));
                module::inv_shifted_linear(ctx, &delta).pow(ctx, m)
            }
            Mono::ZNeg { root, m } => {
                // (z − G)^{−1} = −G^{−1} Σ (ϖG^{−1})^i (τ−C)^{−i}
                let g = ctx.teich(root).clone();
                let ginv = ring.inv(&g).expect("unit root");
                let mut base = LocalElt::zero();
                let mut coef = ring.neg(&ginv);
                for i in 0..ring.j() {
                    let mono = if i == 0 {
                        Mono::One
                    } else {
                        Mono::UNeg {
                            root: *center,
                            m: i,
                        }
                    };
                    base.add_term(ctx, mono, coef.clone());
                    coef = ring.mul(&coef, &ring.mul(&ring.varpi(), &ginv));
                    if ring.is_zero(&coef) {
                        break;
                    }
                }
                base.pow(ctx, m)
            }
        },
        ChartRel::InvShift => match m {
            Mono::One => LocalElt::one(ctx),
            Mono::U(k) => LocalElt::monomial(ctx, Mono::UNeg { root: 0, m: k }, ring.one()),
            Mono::Z(k) => LocalElt::monomial(ctx, Mono::U(k), ring.varpi_pow(k)),
            Mono::UNeg { root, m } => inv_of_inv_coord_minus(ctx, root).pow(ctx, m),
            Mono::ZNeg { root, m } => geometric_in_coord(ctx, root).pow(ctx, m),
        },
        ChartRel::ZSide => match m {
            Mono::One => LocalElt::one(ctx),
            Mono::Z(k) => LocalElt::monomial(ctx, Mono::UNeg { root: 0, m: k }, ring.one()),
            Mono::U(k) => LocalElt::monomial(ctx, Mono::U(k), ring.varpi_pow(k)),
            Mono::ZNeg { root, m } => inv_of_inv_coord_minus(ctx, root).pow(ctx, m),
            Mono::UNeg { root, m } => geometric_in_coord(ctx, root).pow(ctx, m),
        },
    }
}

/// `(1/τ − B)^{−1} = −B^{−1}·τ·(τ − B^{−1})^{−1}` with `B^{−1}` again a
/// Teichmüller lift.
fn inv_of_inv_coord_minus(ctx: &ModCtx, root: u64) -> LocalElt {
    let ring = &ctx.ring;
    let binv = ring.inv(ctx.teich(root)).expect("unit root");
    let rinv = ctx.inv_residue(root);
    let tau_part = module::mono_mul(ctx, Mono::U(1), Mono::UNeg { root: rinv, m: 1 });
    tau_part.scale(ctx, &ring.neg(&binv))
}

/// `(ϖτ − B)^{−1} = −B^{−1} Σ (ϖB^{−1})^i τ^i` (finite modulo ϖʲ).
fn geometric_in_coord(ctx: &ModCtx, root: u64) -> LocalElt {
    let ring = &ctx.ring;
    let binv = ring.inv(ctx.teich(root)).expect("unit root");
    let mut out = LocalElt::zero();
    let mut coef = ring.neg(&binv);
    for i in 0..ring.j() {
        let mono = if i == 0 { Mono::One } else { Mono::U(i) };
        out.add_term(ctx, mono, coef.clone());
        coef = ring.mul(&coef, &ring.mul(&ring.varpi(), &binv));
        if ring.is_zero(&coef) {
            break;
        }
    }
    out
}

/// Expand a factored transition unit in an overlap module.
pub fn realize_genexpr(ctx: &ModCtx, g: &GenExpr) -> LocalElt {
    let ring = &ctx.ring;
    let mut acc = LocalElt::scalar(ctx, g.coeff.clone());
    if g.varpi != 0 {
        assert!(g.varpi > 0, "negative ϖ-power cannot be realized");
        acc = acc.scale(ctx, &ring.varpi_pow(g.varpi as u32));
    }
    for (f, &e) in &g.factors {
        let factor = match (f, e >= 0) {
            (LinFactor::Coord, true) => LocalElt::monomial(ctx, Mono::U(e as u32), ring.one()),
            (LinFactor::Coord, false) => {
                LocalElt::monomial(ctx, Mono::UNeg { root: 0, m: (-e) as u32 }, ring.one())
            }
            (LinFactor::CoordMinus(r), true) => module::shifted_pow(ctx, *r, e as u32),
            (LinFactor::CoordMinus(r), false) => LocalElt::monomial(
                ctx,
                Mono::UNeg {
                    root: *r,
                    m: (-e) as u32,
                },
                ring.one(),
            ),
        };
        if e != 0 {
            acc = acc.mul(ctx, &factor);
        }
    }
    acc
}

struct Complex {
    pairs: Vec<(usize, usize, usize)>,
    c0: Layout,
    c1: Layout,
    /// d⁰ as rows over the C¹ coordinates
    a_rows: Vec<Vec<(usize, crate::ringlab::RingElt)>>,
    /// per-component blocks of C¹/C² with kernel data
    blocks: Vec<Block>,
}

struct Block {
    /// kernel rows of d¹ on this block, in block-local C¹ coordinates
    kernel: Mat,
    /// syzygies among the kernel rows
    syz: Mat,
    /// window-supported cocycles, expressed in kernel coordinates
    window_gens: Mat,
    /// block-local coordinate → global C¹ coordinate
    to_global: Vec<usize>,
}

/// Reported `H¹`: classes of cocycles supported in the standard degree
/// window, modulo all coboundaries. Image monomials beyond the window (the
/// Hensel tails of top-degree chart generators) participate in the
/// relations but never spawn classes of their own — their would-be killers
/// lie outside any finite chart space, so counting them would manufacture
/// cutoff artifacts. The window exhausts `H¹` as the cutoff grows, which
/// the stabilization check certifies.
fn bundle_cohomology(
    atlas: &ModelAtlas,
    bundle: &LineBundleData,
    d_cut: u32,
) -> Result<(ModuleInvariants, ModuleInvariants)> {
    let ring = atlas.ring().clone();
    let complex = assemble(atlas, bundle, d_cut)?;

    // H⁰ = ker d⁰
    let a = Mat::from_fn(&ring, complex.a_rows.len(), complex.c1.total, |r, c| {
        complex.a_rows[r]
            .iter()
            .find(|(col, _)| *col == c)
            .map(|(_, x)| x.clone())
            .unwrap_or_else(|| ring.zero())
    });
    let ker = kernel_left(&a);
    let h0 = span_invariants(&ker);

    let mut offsets = Vec::new();
    let mut total_k = 0usize;
    for b in &complex.blocks {
        offsets.push(total_k);
        total_k += b.kernel.rows();
    }
    // relations: coboundaries and kernel-generator syzygies, in ⊕ kernel coords
    let mut rel_rows: Vec<Vec<ringlab::RingElt>> = Vec::new();
    for row in &complex.a_rows {
        let mut coords = vec![ring.zero(); total_k];
        for (bi, b) in complex.blocks.iter().enumerate() {
            let local: Vec<ringlab::RingElt> = b
                .to_global
                .iter()
                .map(|&g| {
                    row.iter()
                        .find(|(col, _)| *col == g)
                        .map(|(_, x)| x.clone())
                        .unwrap_or_else(|| ring.zero())
                })
                .collect();
            if local.iter().all(|x| ring.is_zero(x)) {
                continue;
            }
            let hf = howell(&b.kernel);
            let sol = solve_left(&hf, &local).ok_or_else(|| {
                CoreError::NoSolution(
                    "coboundary image is not a cocycle (internal inconsistency)".into(),
                )
            })?;
            for (i, x) in sol.into_iter().enumerate() {
                coords[offsets[bi] + i] = x;
            }
        }
        rel_rows.push(coords);
    }
    for (bi, b) in complex.blocks.iter().enumerate() {
        for r in 0..b.syz.rows() {
            let mut coords = vec![ring.zero(); total_k];
            for c in 0..b.syz.cols() {
                coords[offsets[bi] + c] = b.syz.at(r, c).clone();
            }
            rel_rows.push(coords);
        }
    }
    let rels = if rel_rows.is_empty() {
        Mat::zero(&ring, 0, total_k)
    } else {
        Mat::from_rows(&ring, rel_rows)
    };

    // window generators G, lifted to ⊕ kernel coords
    let total_w: usize = complex.blocks.iter().map(|b| b.window_gens.rows()).sum();
    let mut g_rows: Vec<Vec<ringlab::RingElt>> = Vec::new();
    for (bi, b) in complex.blocks.iter().enumerate() {
        for r in 0..b.window_gens.rows() {
            let mut coords = vec![ring.zero(); total_k];
            for c in 0..b.window_gens.cols() {
                coords[offsets[bi] + c] = b.window_gens.at(r, c).clone();
            }
            g_rows.push(coords);
        }
    }
    // H¹ ≅ F^(window gens) / {x : x·G ∈ span(rels)}
    let h1 = if total_w == 0 {
        ModuleInvariants::trivial()
    } else {
        let g = Mat::from_rows(&ring, g_rows);
        let stacked = Mat::stack(&g, &rels);
        let killer = kernel_left(&stacked);
        // first block of each kernel row = relation among the window classes
        let rel_on_w = Mat::from_fn(&ring, killer.rows(), total_w, |r, c| {
            killer.at(r, c).clone()
        });
        coker_invariants(&rel_on_w)
    };
    Ok((h0, h1))
}

fn assemble(atlas: &ModelAtlas, bundle: &LineBundleData, d_cut: u32) -> Result<Complex> {
    let ring = atlas.ring().clone();
    let pairs = atlas.overlap_pairs();
    let triples = atlas.overlap_triples();
    let nch = atlas.charts().len();

    // overlap contexts (Poly in the component coordinate)
    let overlap_ctx = ModCtx::new(&ring, RingShape::Poly);

    // realized transition inverses, and the degree headroom the chart spaces
    // need so that every C¹ class in the standard window is reachable by a
    // coboundary whenever it is one
    let mut ginvs = Vec::with_capacity(pairs.len());
    let mut headroom = 0u32;
    for &(i, k, _) in &pairs {
        let g = realize_genexpr(&overlap_ctx, bundle.transition(i, k));
        let ginv = realize_genexpr(
            &overlap_ctx,
            &bundle.transition(i, k).inv(&ring).map_err(|_| {
                CoreError::NoSolution("transition unit has non-invertible coefficient".into())
            })?,
        );
        headroom = headroom.max(g.max_degree()).max(ginv.max_degree());
        ginvs.push(ginv);
    }
    let d0_cut = d_cut + headroom + ring.j() + 1;

    let c0 = Layout::new(
        (0..nch)
            .map(|c| chart_monomials(atlas, c, d0_cut))
            .collect(),
    );

    // chart → (pair, ±, transition-inverse) contributions.
    // first pass: compute all images to know the pair monomial sets
    let mut pair_units: Vec<Vec<Mono>> = vec![Vec::new(); pairs.len()];
    let mut image_store: Vec<Vec<(usize, LocalElt)>> = vec![Vec::new(); c0.total];

    for (pi, &(i, k, comp)) in pairs.iter().enumerate() {
        let ginv = ginvs[pi].clone();
        for (chart, sign_is_plus) in [(i, true), (k, false)] {
            let rel = &atlas.charts()[chart].on_component(comp).unwrap().rel;
            for (mono, &li) in &c0.index[chart] {
                let mut img = subst_mono(&overlap_ctx, rel, *mono);
                if !sign_is_plus {
                    img = img.mul(&overlap_ctx, &ginv);
                    img = img.scale(&overlap_ctx, &ring.neg(&ring.one()));
                }
                if !img.is_zero() {
                    pair_units[pi].extend(img.terms.keys().copied());
                    image_store[c0.offsets[chart] + li].push((pi, img));
                }
            }
        }
    }
    // standard monomials give the kernel space room beyond the images
    let roots_of_pair: Vec<std::collections::BTreeSet<u64>> = pairs
        .iter()
        .map(|&(i, k, comp)| atlas.overlap_roots(comp, &[i, k]))
        .collect();
    for (pi, unit) in pair_units.iter_mut().enumerate() {
        unit.push(Mono::One);
        unit.extend((1..=d_cut).map(Mono::U));
        for &r in &roots_of_pair[pi] {
            unit.extend((1..=d_cut).map(|m| Mono::UNeg { root: r, m }));
        }
    }
    let c1 = Layout::new(pair_units);

    let mut a_rows: Vec<Vec<(usize, ringlab::RingElt)>> = vec![Vec::new(); c0.total];
    for (row, imgs) in image_store.into_iter().enumerate() {
        for (pi, img) in imgs {
            for (m, c) in &img.terms {
                a_rows[row].push((c1.pos(pi, m), c.clone()));
            }
        }
    }
    // merge duplicate columns within each row
    for row in a_rows.iter_mut() {
        row.sort_by_key(|(c, _)| *c);
        let mut merged: Vec<(usize, ringlab::RingElt)> = Vec::with_capacity(row.len());
        for (c, x) in row.drain(..) {
            if let Some(last) = merged.last_mut() {
                if last.0 == c {
                    last.1 = ring.add(&last.1, &x);
                    continue;
                }
            }
            merged.push((c, x));
        }
        merged.retain(|(_, x)| !ring.is_zero(x));
        *row = merged;
    }

    // d¹ per component block
    let mut comp_of_pairs: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (pi, &(_, _, comp)) in pairs.iter().enumerate() {
        comp_of_pairs.entry(comp).or_default().push(pi);
    }
    // window membership per pair: the standard monomials up to d_cut
    let in_window = |pi: usize, m: &Mono| -> bool {
        match m {
            Mono::One => true,
            Mono::U(k) => *k <= d_cut,
            Mono::UNeg { root, m } => *m <= d_cut && roots_of_pair[pi].contains(root),
            _ => false,
        }
    };

    let mut blocks = Vec::new();
    for (&comp, pair_ids) in &comp_of_pairs {
        let comp_triples: Vec<&(usize, usize, usize, usize)> =
            triples.iter().filter(|t| t.3 == comp).collect();
        // block-local C¹ coordinates
        let mut to_global = Vec::new();
        let mut local_of_global: BTreeMap<usize, usize> = BTreeMap::new();
        let mut window_locals: Vec<usize> = Vec::new();
        for &pi in pair_ids {
            for (mono, &li) in &c1.index[pi] {
                let g = c1.offsets[pi] + li;
                local_of_global.insert(g, to_global.len());
                if in_window(pi, mono) {
                    window_locals.push(to_global.len());
                }
                to_global.push(g);
            }
        }
        if comp_triples.is_empty() {
            // no cocycle condition: every element is a cocycle
            let n = to_global.len();
            let mut wg = Mat::zero(&ring, window_locals.len(), n);
            for (r, &loc) in window_locals.iter().enumerate() {
                *wg.at_mut(r, loc) = ring.one();
            }
            blocks.push(Block {
                kernel: Mat::identity(&ring, n),
                syz: Mat::zero(&ring, 0, n),
                window_gens: wg,
                to_global,
            });
            continue;
        }
        // triple layout: dynamic monomial sets from the images
        let pair_pos = |a: usize, b: usize| -> usize {
            pairs
                .iter()
                .position(|&(x, y, _)| x == a && y == b)
                .expect("adjacent pair")
        };
        let mut triple_units: Vec<Vec<Mono>> = vec![Vec::new(); comp_triples.len()];
        let mut entries: Vec<Vec<(usize, LocalElt)>> = vec![Vec::new(); to_global.len()];
        for (ti, &&(i, k, l, _)) in comp_triples.iter().enumerate() {
            let conv = realize_genexpr(
                &overlap_ctx,
                &bundle.transition(i, k).inv(&ring).map_err(|_| {
                    CoreError::NoSolution("transition unit not invertible".into())
                })?,
            );
            for (pi, factor) in [
                (pair_pos(i, k), None),
                (pair_pos(i, l), Some(ring.neg(&ring.one()))),
                (pair_pos(k, l), Some(ring.one())),
            ] {
                for (mono, &li) in &c1.index[pi] {
                    let g = c1.offsets[pi] + li;
                    let Some(&local) = local_of_global.get(&g) else {
                        continue;
                    };
                    let img = match &factor {
                        None => LocalElt::monomial(&overlap_ctx, *mono, ring.one()),
                        Some(s) if s == &ring.one() => {
                            LocalElt::monomial(&overlap_ctx, *mono, ring.one())
                                .mul(&overlap_ctx, &conv)
                        }
                        Some(s) => LocalElt::monomial(&overlap_ctx, *mono, s.clone()),
                    };
                    if !img.is_zero() {
                        triple_units[ti].extend(img.terms.keys().copied());
                        entries[local].push((ti, img));
                    }
                }
            }
        }
        let c2 = Layout::new(triple_units);
        let mut d1 = Mat::zero(&ring, to_global.len(), c2.total);
        for (local, imgs) in entries.into_iter().enumerate() {
            for (ti, img) in imgs {
                for (m, c) in &img.terms {
                    let col = c2.pos(ti, m);
                    *d1.at_mut(local, col) = ring.add(d1.at(local, col), c);
                }
            }
        }
        let kernel = kernel_left(&d1);
        let syz = kernel_left(&kernel);
        // window-supported cocycles: kernel of d¹ restricted to window rows,
        // expressed in kernel coordinates
        let d1_window = Mat::from_fn(&ring, window_locals.len(), d1.cols(), |r, c| {
            d1.at(window_locals[r], c).clone()
        });
        let kw = kernel_left(&d1_window);
        let hf = howell(&kernel);
        let mut wg_rows = Vec::with_capacity(kw.rows());
        for r in 0..kw.rows() {
            let mut full = vec![ring.zero(); to_global.len()];
            for (c, &loc) in window_locals.iter().enumerate() {
                full[loc] = kw.at(r, c).clone();
            }
            let sol = solve_left(&hf, &full).ok_or_else(|| {
                CoreError::NoSolution("window cocycle not in the kernel span".into())
            })?;
            wg_rows.push(sol);
        }
        let window_gens = if wg_rows.is_empty() {
            Mat::zero(&ring, 0, kernel.rows())
        } else {
            Mat::from_rows(&ring, wg_rows)
        };
        blocks.push(Block {
            kernel,
            syz,
            window_gens,
            to_global,
        });
    }

    Ok(Complex {
        pairs,
        c0,
        c1,
        a_rows,
        blocks,
    })
}

/// Smallest `c ≤ j` with `ϖᶜ·H¹ = 0` in the computed report, or the
/// inconclusive marker when the report cannot decide below `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TorsionBound {
    Exact(u32),
    AtLeast(u32),
}

pub fn torsion_exponent(
    atlas: &ModelAtlas,
    sheaf: &SheafPresentation,
    j: u32,
    d_cut: u32,
) -> Result<TorsionBound> {
    let report = cech_cohomology(atlas, sheaf, j, d_cut)?;
    if !report.stabilized {
        return Err(CoreError::NotStabilized {
            cutoff: d_cut as usize,
            what: format!("torsion exponent of {}", sheaf.label),
        });
    }
    Ok(match report.h1.annihilator_exponent(j) {
        Some(c) => TorsionBound::Exact(c),
        None => TorsionBound::AtLeast(j),
    })
}

/// Cocycle condition checked by full section-module arithmetic on every
/// triple overlap (the factored check is exponent bookkeeping; this one
/// exercises the symbolic multiplication).
pub fn verify_cocycles(atlas: &ModelAtlas, bundle: &LineBundleData) -> Result<bool> {
    let ring = atlas.ring();
    let ctx = ModCtx::new(ring, RingShape::Poly);
    for (i, k, l, _) in atlas.overlap_triples() {
        let gik = realize_genexpr(&ctx, bundle.transition(i, k));
        let gkl = realize_genexpr(&ctx, bundle.transition(k, l));
        let gil = realize_genexpr(&ctx, bundle.transition(i, l));
        if gik.mul(&ctx, &gkl) != gil {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Minimal `N` with `ϖᴺ·O ⊆ O_{Xn/X}(1)` at truncation `j`, found by an
/// honest division search chart by chart.
pub fn exceptional_sandwich_exponent(atlas: &ModelAtlas, j: u32) -> Result<u32> {
    let atlas = atlas.with_truncation(j)?;
    let ring = atlas.ring().clone();
    let mut needed = 0u32;
    for (ci, chart) in atlas.charts().iter().enumerate() {
        let (vp, has_u) = exceptional_local_gen(chart);
        let shape = if chart.kind == ChartKind::Dumbbell {
            RingShape::Node
        } else {
            RingShape::Poly
        };
        let ctx = ModCtx::new(&ring, shape);
        let mut gen = LocalElt::scalar(&ctx, ring.varpi_pow(vp));
        if has_u {
            gen = gen.mul(&ctx, &LocalElt::monomial(&ctx, Mono::U(1), ring.one()));
        }
        let mut found = None;
        for cand in 0..j {
            if divides_in_chart(&atlas, ci, &ctx, &gen, cand)? {
                found = Some(cand);
                break;
            }
        }
        match found {
            Some(n) => needed = needed.max(n),
            None => {
                return Err(CoreError::Inconclusive {
                    j,
                    what: format!("sandwich exponent exceeds truncation on chart {ci}"),
                })
            }
        }
    }
    Ok(needed)
}

/// Does `gen` divide `ϖᴺ` in the (degree-bounded) chart module?
fn divides_in_chart(
    atlas: &ModelAtlas,
    chart: usize,
    ctx: &ModCtx,
    gen: &LocalElt,
    n: u32,
) -> Result<bool> {
    let ring = &ctx.ring;
    let bound = ring.j() + 2;
    let monos = chart_monomials(atlas, chart, bound);
    // matrix rows = gen·mono, columns = all appearing monomials
    let mut col_index: BTreeMap<Mono, usize> = BTreeMap::new();
    let mut rows: Vec<LocalElt> = Vec::new();
    for m in &monos {
        let img = gen.mul(ctx, &LocalElt::monomial(ctx, *m, ring.one()));
        for mm in img.terms.keys() {
            let next = col_index.len();
            col_index.entry(*mm).or_insert(next);
        }
        rows.push(img);
    }
    {
        let next = col_index.len();
        col_index.entry(Mono::One).or_insert(next);
    }
    let mat = Mat::from_fn(ring, rows.len(), col_index.len(), |r, c| {
        rows[r]
            .terms
            .iter()
            .find(|(m, _)| col_index[m] == c)
            .map(|(_, x)| x.clone())
            .unwrap_or_else(|| ring.zero())
    });
    let mut target = vec![ring.zero(); col_index.len()];
    target[col_index[&Mono::One]] = ring.varpi_pow(n);
    let hf = howell(&mat);
    Ok(solve_left(&hf, &target).is_some())
}
