//! The Bruhat–Tits tree of PGL₂(L): homothety classes of lattices in L²,
//! tree distance, balls, and the GL₂(L)-action.
//!
//! A lattice class has a unique basis of the form `(ϖᵃ, 0), (b, 1)` (columns)
//! with `a ∈ Z` and `b ∈ L/ϖᵃo`, so a [`Vertex`] stores `a` together with the
//! Teichmüller digits of `b`. The standard vertex `v₀ = [o ⊕ o]` is `(0, 0)`.
//! Ball and sphere enumeration are pure digit combinatorics; only the group
//! action needs p-adic matrix arithmetic, which runs at the precision fixed
//! by the ambient radius and fails loudly on precision exhaustion.

use std::collections::BTreeMap;

use crate::error::{CoreError, Result};
use crate::ringlab::padic::{Padic, PadicCtx};
use crate::ringlab::TruncRing;

/// Canonical representative of a lattice class: the class of the lattice
/// with column basis `(ϖᵃ, 0), (b, 1)` where `b = Σ teich(dᵢ)·ϖⁱ` over the
/// stored digits (residue indices, positions `< a`, zero digits omitted).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct Vertex {
    a: i64,
    digits: BTreeMap<i64, u64>,
}

impl Vertex {
    pub fn standard() -> Vertex {
        Vertex {
            a: 0,
            digits: BTreeMap::new(),
        }
    }

    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn digits(&self) -> &BTreeMap<i64, u64> {
        &self.digits
    }

    pub fn from_digits(a: i64, digits: impl IntoIterator<Item = (i64, u64)>) -> Vertex {
        let digits: BTreeMap<i64, u64> = digits
            .into_iter()
            .filter(|&(p, d)| {
                assert!(p < a, "digit position must be below a");
                d != 0
            })
            .collect();
        Vertex { a, digits }
    }
}

/// Invertible 2×2 matrix over L at working precision; entries are tracked
/// p-adic approximations (row-major).
#[derive(Clone, Debug)]
pub struct GroupElt {
    pub m: [Padic; 4],
}

/// Tree operations at a fixed ambient radius. Matrices are canonicalized at
/// precision `2·radius + 2`; any operation that would need more digits
/// reports a precision error instead of guessing.
pub struct Tree {
    ctx: PadicCtx,
    q: u64,
    radius: u32,
}

impl Tree {
    pub fn new(p: u64, f: u32, radius: u32) -> Result<Tree> {
        let cap = 2 * radius + 2;
        let ctx = PadicCtx::new(p, f, cap.max(4))?;
        Ok(Tree {
            q: p.pow(f),
            ctx,
            radius,
        })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn ctx(&self) -> &PadicCtx {
        &self.ctx
    }

    pub fn ring(&self) -> &TruncRing {
        self.ctx.ring()
    }

    /// The `q+1` neighbors: `q` children `(a+1, b + βϖᵃ)` and the parent
    /// `(a−1, b mod ϖ^(a−1))`.
    pub fn neighbors(&self, v: &Vertex) -> Vec<Vertex> {
        let mut out = Vec::with_capacity(self.q as usize + 1);
        for beta in 0..self.q {
            let mut digits = v.digits.clone();
            if beta != 0 {
                digits.insert(v.a, beta);
            }
            out.push(Vertex { a: v.a + 1, digits });
        }
        let mut digits = v.digits.clone();
        digits.retain(|&pos, _| pos < v.a - 1);
        out.push(Vertex { a: v.a - 1, digits });
        out
    }

    /// All vertices at distance ≤ n (sorted canonically for determinism).
    pub fn ball(&self, v: &Vertex, n: u32) -> Vec<Vertex> {
        let mut seen = std::collections::BTreeSet::new();
        seen.insert(v.clone());
        let mut frontier = vec![v.clone()];
        for _ in 0..n {
            let mut next = Vec::new();
            for u in &frontier {
                for w in self.neighbors(u) {
                    if seen.insert(w.clone()) {
                        next.push(w);
                    }
                }
            }
            frontier = next;
        }
        seen.into_iter().collect()
    }

    /// Vertices at distance exactly n.
    pub fn sphere(&self, v: &Vertex, n: u32) -> Vec<Vertex> {
        if n == 0 {
            return vec![v.clone()];
        }
        let inner: std::collections::BTreeSet<Vertex> = self.ball(v, n - 1).into_iter().collect();
        self.ball(v, n)
            .into_iter()
            .filter(|w| !inner.contains(w))
            .collect()
    }

    /// Tree distance via elementary divisors of the relative position matrix
    /// `M_v⁻¹ M_w = [[ϖ^(a_w−a_v), ϖ^(−a_v)(b_w−b_v)], [0, 1]]`. Digit
    /// expansions are finite, so this is exact.
    pub fn dist(&self, v: &Vertex, w: &Vertex) -> u32 {
        if v == w {
            return 0;
        }
        let da = w.a - v.a;
        let vb = self.digit_difference_val(v, w);
        let s = match vb {
            Some(val) => da.min(val - v.a).min(0),
            None => da.min(0),
        };
        (da - 2 * s) as u32
    }

    fn digit_difference_val(&self, v: &Vertex, w: &Vertex) -> Option<i64> {
        if v.digits == w.digits {
            return None;
        }
        let base = v
            .digits
            .keys()
            .chain(w.digits.keys())
            .copied()
            .min()
            .unwrap_or(0)
            .min(0);
        let top = v.a.max(w.a);
        let j = (top - base + 2).max(2) as u32;
        let ring = TruncRing::new(self.ctx.ring().p(), self.ctx.ring().f(), j)
            .expect("digit ring parameters are in range");
        let teich = ring.teichmuller_set();
        let expand = |x: &Vertex| {
            let mut acc = ring.zero();
            for (&pos, &d) in &x.digits {
                let term = ring.mul(&teich[d as usize], &ring.varpi_pow((pos - base) as u32));
                acc = ring.add(&acc, &term);
            }
            acc
        };
        let d = ring.sub(&expand(w), &expand(v));
        if ring.is_zero(&d) {
            // equal modulo ϖ^(top+2−base): beyond both a's, so the minimum in
            // the distance formula is unaffected; report a large valuation
            Some(top + 2)
        } else {
            Some(ring.val(&d) as i64 + base)
        }
    }

    /// Canonical vertex of the lattice spanned by the columns of `g`.
    pub fn vertex_from_matrix(&self, g: &GroupElt) -> Result<Vertex> {
        let [a, b, c, d] = g.m.clone();
        self.canonicalize_columns(&a, &c, &b, &d)
    }

    /// The action `v ↦ g·v` on lattice classes.
    pub fn act(&self, g: &GroupElt, v: &Vertex) -> Result<Vertex> {
        let ctx = &self.ctx;
        let mv = self.vertex_matrix(v);
        let x1 = ctx.add(&ctx.mul(&g.m[0], &mv[0]), &ctx.mul(&g.m[1], &mv[2]));
        let y1 = ctx.add(&ctx.mul(&g.m[2], &mv[0]), &ctx.mul(&g.m[3], &mv[2]));
        let x2 = ctx.add(&ctx.mul(&g.m[0], &mv[1]), &ctx.mul(&g.m[1], &mv[3]));
        let y2 = ctx.add(&ctx.mul(&g.m[2], &mv[1]), &ctx.mul(&g.m[3], &mv[3]));
        self.canonicalize_columns(&x1, &y1, &x2, &y2)
    }

    /// `M_v` as padic entries (row-major).
    fn vertex_matrix(&self, v: &Vertex) -> [Padic; 4] {
        let ctx = &self.ctx;
        let teich = ctx.ring().teichmuller_set();
        let mut b = ctx.zero();
        for (&pos, &d) in &v.digits {
            b = ctx.add(&b, &ctx.from_unit_scaled(teich[d as usize].clone(), pos));
        }
        [ctx.varpi_pow(v.a), b, ctx.zero(), ctx.from_i64(1)]
    }

    fn canonicalize_columns(
        &self,
        x1: &Padic,
        y1: &Padic,
        x2: &Padic,
        y2: &Padic,
    ) -> Result<Vertex> {
        let ctx = &self.ctx;
        let vy1 = self.lax_val(y1);
        let vy2 = self.lax_val(y2);
        let (x1, y1, x2, y2) = if vy1 < vy2 {
            (x2.clone(), y2.clone(), x1.clone(), y1.clone())
        } else {
            (x1.clone(), y1.clone(), x2.clone(), y2.clone())
        };
        let c = ctx.val(&y2).map_err(|_| {
            CoreError::Precision("second column has no unit part at working precision".into())
        })?;
        let det = ctx.sub(&ctx.mul(&x1, &y2), &ctx.mul(&x2, &y1));
        let vdet = ctx.val(&det)?;
        // lattice ⟨(det/y2, 0), (x2, y2)⟩, scaled by ϖ^(−c)
        let a = vdet - 2 * c;
        let b_raw = ctx.div(&x2, &y2)?;
        let digits_vec;
        let start;
        if b_raw.is_exact_zero() {
            start = a;
            digits_vec = vec![];
        } else {
            start = ctx.val_lower_bound(&b_raw).min(a);
            digits_vec = ctx.teich_digits(&b_raw, start, a)?;
        }
        let mut digits = BTreeMap::new();
        for (i, &d) in digits_vec.iter().enumerate() {
            if d != 0 {
                digits.insert(start + i as i64, d);
            }
        }
        Ok(Vertex { a, digits })
    }

    fn lax_val(&self, x: &Padic) -> i64 {
        if x.is_exact_zero() {
            i64::MAX
        } else {
            self.ctx.val_lower_bound(x)
        }
    }
}

impl GroupElt {
    pub fn from_i64(ctx: &PadicCtx, m: [i64; 4]) -> GroupElt {
        GroupElt {
            m: [
                ctx.from_i64(m[0]),
                ctx.from_i64(m[1]),
                ctx.from_i64(m[2]),
                ctx.from_i64(m[3]),
            ],
        }
    }

    pub fn identity(ctx: &PadicCtx) -> GroupElt {
        GroupElt::from_i64(ctx, [1, 0, 0, 1])
    }

    /// Entries as `(valuation, unit)` pairs; `None` is a zero entry.
    pub fn from_val_unit(
        ctx: &PadicCtx,
        entries: [Option<(i64, crate::ringlab::RingElt)>; 4],
    ) -> GroupElt {
        let mk = |e: &Option<(i64, crate::ringlab::RingElt)>| match e {
            None => ctx.zero(),
            Some((v, u)) => ctx.from_unit_scaled(u.clone(), *v),
        };
        GroupElt {
            m: [
                mk(&entries[0]),
                mk(&entries[1]),
                mk(&entries[2]),
                mk(&entries[3]),
            ],
        }
    }

    pub fn mul(&self, ctx: &PadicCtx, other: &GroupElt) -> GroupElt {
        let a = &self.m;
        let b = &other.m;
        GroupElt {
            m: [
                ctx.add(&ctx.mul(&a[0], &b[0]), &ctx.mul(&a[1], &b[2])),
                ctx.add(&ctx.mul(&a[0], &b[1]), &ctx.mul(&a[1], &b[3])),
                ctx.add(&ctx.mul(&a[2], &b[0]), &ctx.mul(&a[3], &b[2])),
                ctx.add(&ctx.mul(&a[2], &b[1]), &ctx.mul(&a[3], &b[3])),
            ],
        }
    }

    pub fn scale_varpi(&self, ctx: &PadicCtx, k: i64) -> GroupElt {
        let s = ctx.varpi_pow(k);
        GroupElt {
            m: [
                ctx.mul(&self.m[0], &s),
                ctx.mul(&self.m[1], &s),
                ctx.mul(&self.m[2], &s),
                ctx.mul(&self.m[3], &s),
            ],
        }
    }
}

/// Seeded random elements of GL₂(o) (unit determinant), for spot checks.
pub fn random_gl2_o(tree: &Tree, rng: &mut impl rand::Rng) -> GroupElt {
    let ring = tree.ring();
    loop {
        let mut entries = Vec::with_capacity(4);
        for _ in 0..4 {
            let coeffs: Vec<u64> = (0..ring.f())
                .map(|_| rng.gen_range(0..ring.p().pow(ring.j())))
                .collect();
            entries.push(ring.from_coeffs(&coeffs));
        }
        let det = ring.sub(
            &ring.mul(&entries[0], &entries[3]),
            &ring.mul(&entries[1], &entries[2]),
        );
        if ring.is_unit(&det) {
            let ctx = tree.ctx();
            return GroupElt {
                m: [
                    ctx.from_unit_scaled(entries[0].clone(), 0),
                    ctx.from_unit_scaled(entries[1].clone(), 0),
                    ctx.from_unit_scaled(entries[2].clone(), 0),
                    ctx.from_unit_scaled(entries[3].clone(), 0),
                ],
            };
        }
    }
}

/// Seeded random elements of GL₂(L) with entry valuations shifted within the
/// given range.
pub fn random_gl2_l(
    tree: &Tree,
    rng: &mut impl rand::Rng,
    val_range: std::ops::RangeInclusive<i64>,
) -> GroupElt {
    let g = random_gl2_o(tree, rng);
    let ctx = tree.ctx();
    let shifts: Vec<i64> = (0..4).map(|_| rng.gen_range(val_range.clone())).collect();
    GroupElt {
        m: [
            ctx.mul(&g.m[0], &ctx.varpi_pow(shifts[0])),
            ctx.mul(&g.m[1], &ctx.varpi_pow(shifts[1])),
            ctx.mul(&g.m[2], &ctx.varpi_pow(shifts[2])),
            ctx.mul(&g.m[3], &ctx.varpi_pow(shifts[3])),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn tree(p: u64, f: u32) -> Tree {
        Tree::new(p, f, 4).unwrap()
    }

    #[test]
    fn vertex_from_matrix_examples() {
        let t = tree(2, 1);
        let v0 = Vertex::standard();
        let id = GroupElt::identity(t.ctx());
        assert_eq!(t.vertex_from_matrix(&id).unwrap(), v0);

        let d = GroupElt::from_i64(t.ctx(), [2, 0, 0, 1]);
        let v = t.vertex_from_matrix(&d).unwrap();
        assert_eq!(v, Vertex::from_digits(1, []));

        // upper triangular [[ϖ,1],[0,1]]: distinct from (1,0)
        let u = GroupElt::from_i64(t.ctx(), [2, 1, 0, 1]);
        let w = t.vertex_from_matrix(&u).unwrap();
        assert_eq!(w, Vertex::from_digits(1, [(0, 1)]));
        assert_ne!(w, v);
        assert_eq!(t.dist(&v, &w), 2);

        // homothety invariance: g and ϖg give the same vertex
        let g = GroupElt::from_i64(t.ctx(), [3, 1, 2, 1]);
        let gs = g.scale_varpi(t.ctx(), 1);
        assert_eq!(
            t.vertex_from_matrix(&g).unwrap(),
            t.vertex_from_matrix(&gs).unwrap()
        );
    }

    #[test]
    fn dist_examples() {
        let t = tree(2, 1);
        let v0 = Vertex::standard();
        for v in t.ball(&v0, 3) {
            assert_eq!(t.dist(&v, &v), 0);
        }
        let d1 = t
            .vertex_from_matrix(&GroupElt::from_i64(t.ctx(), [2, 0, 0, 1]))
            .unwrap();
        assert_eq!(t.dist(&v0, &d1), 1);
        let d2 = t
            .vertex_from_matrix(&GroupElt::from_i64(t.ctx(), [4, 0, 0, 1]))
            .unwrap();
        assert_eq!(t.dist(&v0, &d2), 2);
        assert_eq!(t.dist(&d2, &v0), 2);
    }

    #[test]
    fn ball_and_sphere_cardinalities() {
        for (p, f) in [(2u64, 1u32), (3, 1)] {
            let t = tree(p, f);
            let q = t.q();
            let v0 = Vertex::standard();
            for n in 0..=3u32 {
                let expect_ball = 1 + (q + 1) * (q.pow(n) - 1) / (q - 1);
                assert_eq!(t.ball(&v0, n).len() as u64, expect_ball, "ball q={q} n={n}");
                if n >= 1 {
                    let expect_sphere = (q + 1) * q.pow(n - 1);
                    assert_eq!(t.sphere(&v0, n).len() as u64, expect_sphere);
                }
            }
        }
        let t = Tree::new(2, 2, 3).unwrap();
        assert_eq!(t.ball(&Vertex::standard(), 1).len(), 6);
        assert_eq!(t.ball(&Vertex::standard(), 2).len(), 26);
    }

    #[test]
    fn ball_distances_consistent() {
        let t = tree(2, 1);
        let v0 = Vertex::standard();
        for n in 0..=3u32 {
            for w in t.sphere(&v0, n) {
                assert_eq!(t.dist(&v0, &w), n);
            }
        }
        let c = Vertex::from_digits(2, [(0, 1)]);
        assert_eq!(t.ball(&c, 2).len(), 10);
        for w in t.sphere(&c, 2) {
            assert_eq!(t.dist(&c, &w), 2);
        }
    }

    #[test]
    fn four_point_condition() {
        let t = tree(2, 1);
        let ball = t.ball(&Vertex::standard(), 2);
        for x in &ball {
            for y in &ball {
                for z in &ball {
                    assert!(t.dist(x, y) + t.dist(y, z) >= t.dist(x, z));
                    for w in &ball {
                        let s1 = t.dist(x, y) + t.dist(z, w);
                        let s2 = t.dist(x, z) + t.dist(y, w);
                        let s3 = t.dist(x, w) + t.dist(y, z);
                        let mut v = [s1, s2, s3];
                        v.sort_unstable();
                        assert_eq!(v[1], v[2], "four-point fails");
                    }
                }
            }
        }
    }

    #[test]
    fn action_properties() {
        let t = tree(2, 1);
        let v0 = Vertex::standard();
        let ctx = t.ctx();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);

        for v in t.ball(&v0, 2) {
            assert_eq!(t.act(&GroupElt::identity(ctx), &v).unwrap(), v);
            let scalar = GroupElt::identity(ctx).scale_varpi(ctx, 1);
            assert_eq!(t.act(&scalar, &v).unwrap(), v);
        }

        for _ in 0..20 {
            let g = random_gl2_o(&t, &mut rng);
            assert_eq!(t.act(&g, &v0).unwrap(), v0);
        }

        for _ in 0..10 {
            let g = random_gl2_l(&t, &mut rng, -1..=1);
            let h = random_gl2_l(&t, &mut rng, -1..=1);
            let gh = g.mul(ctx, &h);
            for v in t.ball(&v0, 1) {
                let lhs = t.act(&gh, &v).unwrap();
                let rhs = t.act(&g, &t.act(&h, &v).unwrap()).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn action_preserves_distance() {
        let t = Tree::new(2, 1, 6).unwrap();
        let v0 = Vertex::standard();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let ball = t.ball(&v0, 2);
        for _ in 0..8 {
            let g = random_gl2_l(&t, &mut rng, -2..=2);
            for v in &ball {
                for w in &ball {
                    let gv = t.act(&g, v).unwrap();
                    let gw = t.act(&g, w).unwrap();
                    assert_eq!(t.dist(&gv, &gw), t.dist(v, w));
                }
            }
        }
    }

    #[test]
    fn neighbors_of_negative_branch() {
        let t = tree(3, 1);
        let v = Vertex::from_digits(-1, []);
        let nb = t.neighbors(&v);
        assert_eq!(nb.len(), 4);
        assert!(nb.contains(&Vertex::standard()));
        for w in &nb {
            assert_eq!(t.dist(&v, w), 1);
        }
    }
}
