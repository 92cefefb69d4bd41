//! Points of P¹ over the truncated ring, their Möbius action, and the
//! correspondence between residue disks and tree vertices.

use crate::bttree::{self, GroupElt, Tree, Vertex};
use crate::error::Result;
use crate::ringlab::{RingElt, TruncRing};

use super::{ModelAtlas, Side, SmoothPoint};

/// A point of `P¹(o/ϖᵐ)` in canonical form: `[x : 1]` or `[1 : y]` with
/// `y ≡ 0 mod ϖ`. The ring is carried by the caller.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ProjPoint {
    Finite(RingElt),
    InfSide(RingElt),
}

/// `|P¹(o/ϖᵐ)| = q^(m−1)(q+1)`.
pub fn proj_points_count(q: u64, m: u32) -> u64 {
    q.pow(m - 1) * (q + 1)
}

/// All points, finite part first, in enumeration order.
pub fn all_proj_points(ring: &TruncRing) -> Vec<ProjPoint> {
    let mut out = Vec::new();
    for x in ring.all_elements() {
        out.push(ProjPoint::Finite(x));
    }
    for y in ring.all_elements() {
        if ring.val(&y) >= 1 {
            out.push(ProjPoint::InfSide(y));
        }
    }
    out
}

/// Möbius action of an invertible matrix `[a b; c d]` on a point, acting on
/// column vectors `(x0, x1)`.
pub fn mobius(ring: &TruncRing, m: &[RingElt; 4], pt: &ProjPoint) -> ProjPoint {
    let (x0, x1) = match pt {
        ProjPoint::Finite(x) => (x.clone(), ring.one()),
        ProjPoint::InfSide(y) => (ring.one(), y.clone()),
    };
    let nx0 = ring.add(&ring.mul(&m[0], &x0), &ring.mul(&m[1], &x1));
    let nx1 = ring.add(&ring.mul(&m[2], &x0), &ring.mul(&m[3], &x1));
    if ring.is_unit(&nx1) {
        let inv = ring.inv(&nx1).expect("unit");
        ProjPoint::Finite(ring.mul(&nx0, &inv))
    } else {
        let inv = ring.inv(&nx0).expect("primitive pair has a unit coordinate");
        ProjPoint::InfSide(ring.mul(&nx1, &inv))
    }
}

/// Teichmüller digit list of a ring element, positions `0..j`.
pub fn teich_digits(ring: &TruncRing, x: &RingElt) -> Vec<u64> {
    let teich = ring.teichmuller_set();
    let mut digits = Vec::with_capacity(ring.j() as usize);
    let mut cur = x.clone();
    for pos in 0..ring.j() {
        if ring.val(&cur) > pos {
            digits.push(0);
            continue;
        }
        let unit = ring.divide_varpi(&cur, pos);
        let idx = ring.residue_index(&unit);
        digits.push(idx);
        if idx != 0 {
            let t = ring.mul(&teich[idx as usize], &ring.varpi_pow(pos));
            cur = ring.sub(&cur, &t);
        }
    }
    digits
}

/// The tree vertex of the residue disk `{ξ ≡ Σ teich(dᵢ)ϖⁱ mod ϖᵐ}` where
/// ξ = x (side plus) or ξ = y (side minus). This is the sphere-radius-m
/// vertex the disk corresponds to.
pub fn disk_vertex(ring: &TruncRing, side: Side, digits: &[(u32, u64)], m: u32) -> Result<Vertex> {
    match side {
        Side::Plus => Ok(Vertex::from_digits(
            m as i64,
            digits.iter().map(|&(p, d)| (p as i64, d)),
        )),
        Side::Minus => {
            // lattice ⟨(1, y), (0, ϖᵐ)⟩
            let tree = Tree::new(ring.p(), ring.f(), m + 2)?;
            let ctx = tree.ctx();
            let teich = ctx.ring().teichmuller_set();
            let mut y = ctx.zero();
            for &(pos, d) in digits {
                y = ctx.add(&y, &ctx.from_unit_scaled(teich[d as usize].clone(), pos as i64));
            }
            let g = GroupElt {
                m: [ctx.from_i64(1), ctx.zero(), y, ctx.varpi_pow(m as i64)],
            };
            tree.vertex_from_matrix(&g)
        }
    }
}

/// The vertex of a point of `P¹(o/ϖᵐ)` (its residue disk).
pub fn vertex_of_proj(ring_m: &TruncRing, pt: &ProjPoint) -> Result<Vertex> {
    let m = ring_m.j();
    match pt {
        ProjPoint::Finite(x) => {
            let digits = teich_digits(ring_m, x);
            Ok(Vertex::from_digits(
                m as i64,
                digits
                    .iter()
                    .enumerate()
                    .map(|(p, &d)| (p as i64, d)),
            ))
        }
        ProjPoint::InfSide(y) => {
            let digits = teich_digits(ring_m, y);
            let pairs: Vec<(u32, u64)> = digits
                .iter()
                .enumerate()
                .filter(|&(_, &d)| d != 0)
                .map(|(p, &d)| (p as u32, d))
                .collect();
            disk_vertex(ring_m, Side::Minus, &pairs, m)
        }
    }
}

impl ModelAtlas {
    /// The class in `P¹(o/ϖ^(n+1))` of a smooth point of the level-n model.
    pub fn point_proj(&self, pt: &SmoothPoint) -> Result<(TruncRing, ProjPoint)> {
        let comp = &self.components()[pt.comp];
        let m = self.level() + 1;
        let ring_m = self.ring().with_level(m)?;
        if pt.at_infinity {
            return Ok((ring_m.clone(), ProjPoint::InfSide(ring_m.zero())));
        }
        let teich = ring_m.teichmuller_set();
        let mut xi = ring_m.zero();
        for &(pos, d) in &comp.base_digits {
            xi = ring_m.add(&xi, &ring_m.mul(&teich[d as usize], &ring_m.varpi_pow(pos)));
        }
        let center = ring_m.mul(&teich[pt.residue as usize], &ring_m.varpi_pow(comp.depth));
        xi = ring_m.add(&xi, &center);
        let point = match comp.side {
            Side::Plus => ProjPoint::Finite(xi),
            Side::Minus => ProjPoint::InfSide(xi),
        };
        Ok((ring_m, point))
    }

    /// The sphere-radius-(n+1) tree vertex of a smooth point (the component
    /// it would spawn under one more blow-up).
    pub fn point_vertex(&self, pt: &SmoothPoint) -> Result<Vertex> {
        let comp = &self.components()[pt.comp];
        let m = self.level() + 1;
        if pt.at_infinity {
            return disk_vertex(self.ring(), Side::Minus, &[], m);
        }
        let mut digits = comp.base_digits.clone();
        if pt.residue != 0 {
            digits.push((comp.depth, pt.residue));
        }
        disk_vertex(self.ring(), comp.side, &digits, m)
    }
}

/// Spot-check that the point ↔ P¹(o/ϖ^(n+1)) bijection intertwines the
/// GL₂(o)-action: the tree action on disk vertices against the Möbius action
/// on classes, for `count` seeded random group elements. Returns the number
/// of (g, point) pairs checked.
pub fn equivariance_spot_check(atlas: &ModelAtlas, seed: u64, count: usize) -> Result<usize> {
    use rand::SeedableRng;
    let m = atlas.level() + 1;
    let ring_m = atlas.ring().with_level(m)?;
    let tree = Tree::new(atlas.ring().p(), atlas.ring().f(), m + 2)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let pts = atlas.smooth_fq_points();
    let mut checked = 0;
    for _ in 0..count {
        let g = bttree::random_gl2_o(&tree, &mut rng);
        // the same matrix mod ϖᵐ for the Möbius side
        let gm: Vec<RingElt> = g
            .m
            .iter()
            .map(|e| {
                let digs = tree
                    .ctx()
                    .teich_digits(e, 0, m as i64)
                    .expect("integral entry");
                let teich = ring_m.teichmuller_set();
                let mut acc = ring_m.zero();
                for (i, &d) in digs.iter().enumerate() {
                    acc = ring_m.add(
                        &acc,
                        &ring_m.mul(&teich[d as usize], &ring_m.varpi_pow(i as u32)),
                    );
                }
                acc
            })
            .collect();
        let gm: [RingElt; 4] = [gm[0].clone(), gm[1].clone(), gm[2].clone(), gm[3].clone()];
        for pt in &pts {
            let (_, class) = atlas.point_proj(pt)?;
            let lhs = tree.act(&g, &atlas.point_vertex(pt)?)?;
            let rhs = vertex_of_proj(&ring_m, &mobius(&ring_m, &gm, &class))?;
            if lhs != rhs {
                return Err(crate::error::CoreError::NoSolution(format!(
                    "equivariance failed at {pt:?}"
                )));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelAtlas;

    #[test]
    fn point_counts_match_proj_line() {
        for (p, f, n) in [(2u64, 1u32, 0u32), (2, 1, 1), (2, 1, 2), (3, 1, 1), (2, 2, 1)] {
            let ring = TruncRing::new(p, f, 2).unwrap();
            let atlas = ModelAtlas::build(&ring, n).unwrap();
            let q = ring.q();
            let pts = atlas.smooth_fq_points();
            assert_eq!(pts.len() as u64, q.pow(n) * (q + 1));
            assert_eq!(pts.len() as u64, proj_points_count(q, n + 1));
            let ring_m = ring.with_level(n + 1).unwrap();
            assert_eq!(all_proj_points(&ring_m).len(), pts.len());
        }
    }

    #[test]
    fn point_classes_are_distinct_and_exhaust() {
        let ring = TruncRing::new(2, 1, 2).unwrap();
        let atlas = ModelAtlas::build(&ring, 1).unwrap();
        let ring_m = ring.with_level(2).unwrap();
        let mut classes: Vec<ProjPoint> = atlas
            .smooth_fq_points()
            .iter()
            .map(|p| atlas.point_proj(p).unwrap().1)
            .collect();
        classes.sort();
        classes.dedup();
        assert_eq!(classes.len(), 6); // |P¹(Z/4)|
        let mut all = all_proj_points(&ring_m);
        all.sort();
        assert_eq!(classes, all);
    }

    #[test]
    fn point_vertices_are_sphere() {
        let ring = TruncRing::new(2, 1, 2).unwrap();
        let atlas = ModelAtlas::build(&ring, 1).unwrap();
        let tree = Tree::new(2, 1, 3).unwrap();
        let mut vs: Vec<Vertex> = atlas
            .smooth_fq_points()
            .iter()
            .map(|p| atlas.point_vertex(p).unwrap())
            .collect();
        vs.sort();
        vs.dedup();
        assert_eq!(vs.len(), 6);
        let mut sphere = tree.sphere(&Vertex::standard(), 2);
        sphere.sort();
        assert_eq!(vs, sphere);
    }

    #[test]
    fn mobius_is_action() {
        let ring = TruncRing::new(2, 1, 2).unwrap();
        let g: [RingElt; 4] = [
            ring.from_u64(1),
            ring.from_u64(2),
            ring.from_u64(1),
            ring.from_u64(3),
        ]; // det = 1 (mod 4)
        let h: [RingElt; 4] = [
            ring.from_u64(3),
            ring.from_u64(1),
            ring.from_u64(0),
            ring.from_u64(1),
        ];
        let gh: [RingElt; 4] = [
            ring.add(&ring.mul(&g[0], &h[0]), &ring.mul(&g[1], &h[2])),
            ring.add(&ring.mul(&g[0], &h[1]), &ring.mul(&g[1], &h[3])),
            ring.add(&ring.mul(&g[2], &h[0]), &ring.mul(&g[3], &h[2])),
            ring.add(&ring.mul(&g[2], &h[1]), &ring.mul(&g[3], &h[3])),
        ];
        for pt in all_proj_points(&ring) {
            let lhs = mobius(&ring, &gh, &pt);
            let rhs = mobius(&ring, &g, &mobius(&ring, &h, &pt));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn equivariance() {
        for n in 0..=1u32 {
            let ring = TruncRing::new(2, 1, 2).unwrap();
            let atlas = ModelAtlas::build(&ring, n).unwrap();
            let checked = equivariance_spot_check(&atlas, 42, 5).unwrap();
            assert!(checked > 0);
        }
    }
}
