//! Section-module arithmetic for chart and overlap rings over `o/ϖʲ`.
//!
//! Every ring that shows up is one of
//!
//! * `o[t]` possibly localized at `t − teich(r)` for finitely many residues
//!   (affine charts and all overlaps, in the standard coordinate of a
//!   component), or
//! * `o[u,z]/(uz−ϖ)` localized at `u − β`, `z − γ` for unit Teichmüller
//!   roots (dumbbells).
//!
//! Because localization roots are distinct mod ϖ, partial fractions give a
//! canonical monomial basis: nonnegative powers of the coordinates plus
//! negative powers of the linear factors. Products reduce to the basis by
//! closed-form identities (binomial shifts, partial fractions, and the
//! `uz = ϖ` exchange); inverses of shifted roots Hensel-expand into finitely
//! many terms because ϖ is nilpotent. No operation truncates silently.

use std::collections::BTreeMap;

use crate::ringlab::{RingElt, TruncRing};

/// Basis monomial of a localized chart ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mono {
    One,
    /// coordinate power `u^k` (or `t^k`, `τ^k`), k ≥ 1
    U(u32),
    /// `z^k`, k ≥ 1 (dumbbells only)
    Z(u32),
    /// `(u − teich(root))^{−m}`, m ≥ 1
    UNeg { root: u64, m: u32 },
    /// `(z − teich(root))^{−m}`, m ≥ 1 (dumbbells only)
    ZNeg { root: u64, m: u32 },
}

impl Mono {
    pub fn degree(&self) -> u32 {
        match self {
            Mono::One => 0,
            Mono::U(k) | Mono::Z(k) => *k,
            Mono::UNeg { m, .. } | Mono::ZNeg { m, .. } => *m,
        }
    }

    fn uneg(root: u64, m: u32) -> Mono {
        if m == 0 {
            Mono::One
        } else {
            Mono::UNeg { root, m }
        }
    }
}

/// Whether the ring has the dumbbell relation `uz = ϖ` (otherwise it is a
/// polynomial ring in the single coordinate `u`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingShape {
    Poly,
    Node,
}

/// Arithmetic context: the truncated scalar ring plus cached Teichmüller
/// lifts.
#[derive(Clone, Debug)]
pub struct ModCtx {
    pub ring: TruncRing,
    pub shape: RingShape,
    teich: Vec<RingElt>,
}

impl ModCtx {
    pub fn new(ring: &TruncRing, shape: RingShape) -> ModCtx {
        ModCtx {
            ring: ring.clone(),
            shape,
            teich: ring.teichmuller_set(),
        }
    }

    pub fn teich(&self, idx: u64) -> &RingElt {
        &self.teich[idx as usize]
    }

    /// residue index of the inverse of a nonzero residue
    pub fn inv_residue(&self, idx: u64) -> u64 {
        let inv = self.ring.inv(self.teich(idx)).expect("nonzero residue");
        self.ring.residue_index(&inv)
    }
}

/// Sparse element of a localized chart ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalElt {
    pub terms: BTreeMap<Mono, RingElt>,
}

impl LocalElt {
    pub fn zero() -> LocalElt {
        LocalElt {
            terms: BTreeMap::new(),
        }
    }

    pub fn one(ctx: &ModCtx) -> LocalElt {
        LocalElt::monomial(ctx, Mono::One, ctx.ring.one())
    }

    pub fn monomial(ctx: &ModCtx, m: Mono, c: RingElt) -> LocalElt {
        let mut e = LocalElt::zero();
        e.add_term(ctx, m, c);
        e
    }

    pub fn scalar(ctx: &ModCtx, c: RingElt) -> LocalElt {
        LocalElt::monomial(ctx, Mono::One, c)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, ctx: &ModCtx, m: Mono, c: RingElt) {
        if ctx.ring.is_zero(&c) {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(|| ctx.ring.zero());
        *entry = ctx.ring.add(entry, &c);
        if ctx.ring.is_zero(entry) {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, ctx: &ModCtx, other: &LocalElt) -> LocalElt {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(ctx, *m, c.clone());
        }
        out
    }

    pub fn sub(&self, ctx: &ModCtx, other: &LocalElt) -> LocalElt {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(ctx, *m, ctx.ring.neg(c));
        }
        out
    }

    pub fn scale(&self, ctx: &ModCtx, c: &RingElt) -> LocalElt {
        let mut out = LocalElt::zero();
        for (m, x) in &self.terms {
            out.add_term(ctx, *m, ctx.ring.mul(x, c));
        }
        out
    }

    pub fn mul(&self, ctx: &ModCtx, other: &LocalElt) -> LocalElt {
        let mut out = LocalElt::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let prod = mono_mul(ctx, *m1, *m2);
                let c = ctx.ring.mul(c1, c2);
                for (m, x) in &prod.terms {
                    out.add_term(ctx, *m, ctx.ring.mul(x, &c));
                }
            }
        }
        out
    }

    pub fn pow(&self, ctx: &ModCtx, e: u32) -> LocalElt {
        let mut acc = LocalElt::one(ctx);
        for _ in 0..e {
            acc = acc.mul(ctx, self);
        }
        acc
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }
}

/// `(τ − teich(root))^k` for `k ≥ 0`, expanded in coordinate powers.
pub fn shifted_pow(ctx: &ModCtx, root: u64, k: u32) -> LocalElt {
    let t = ctx.teich(root).clone();
    let neg_t = ctx.ring.neg(&t);
    let mut out = LocalElt::zero();
    // Σ C(k,s)·(−T)^(k−s)·τ^s
    for s in 0..=k {
        let b = low_u64(binom_u128(k, s), &ctx.ring);
        let c = ctx
            .ring
            .mul_u64(&ctx.ring.pow(&neg_t, (k - s) as u64), b);
        let m = if s == 0 { Mono::One } else { Mono::U(s) };
        out.add_term(ctx, m, c);
    }
    out
}

fn binom_u128(k: u32, s: u32) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..s {
        acc = acc * (k - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// One basis-monomial product, fully reduced.
pub fn mono_mul(ctx: &ModCtx, a: Mono, b: Mono) -> LocalElt {
    use Mono::*;
    let ring = &ctx.ring;
    match (a, b) {
        (One, m) | (m, One) => LocalElt::monomial(ctx, m, ring.one()),
        (U(x), U(y)) => LocalElt::monomial(ctx, U(x + y), ring.one()),
        (Z(x), Z(y)) => LocalElt::monomial(ctx, Z(x + y), ring.one()),
        (U(x), Z(y)) | (Z(y), U(x)) => {
            assert_eq!(ctx.shape, RingShape::Node, "z-monomials need uz = ϖ");
            let k = x.min(y);
            let c = ring.varpi_pow(k);
            let m = if x > y {
                U(x - y)
            } else if y > x {
                Z(y - x)
            } else {
                One
            };
            LocalElt::monomial(ctx, m, c)
        }
        (U(x), UNeg { root, m }) | (UNeg { root, m }, U(x)) => {
            // τ^x = Σ C(x,i)·T^(x−i)·(τ−T)^i
            let t = ctx.teich(root).clone();
            let mut out = LocalElt::zero();
            for i in 0..=x {
                let c = ring.mul_u64(&ring.pow(&t, (x - i) as u64), low_u64(binom_u128(x, i), ring));
                if i >= m {
                    let poly = shifted_pow(ctx, root, i - m);
                    for (mm, cc) in &poly.terms {
                        out.add_term(ctx, *mm, ring.mul(cc, &c));
                    }
                } else {
                    out.add_term(ctx, Mono::uneg(root, m - i), c);
                }
            }
            out
        }
        (Z(x), ZNeg { root, m }) | (ZNeg { root, m }, Z(x)) => {
            swap_uz(ctx, &mono_mul(ctx, U(x), UNeg { root, m }))
        }
        (UNeg { root: r1, m: m1 }, UNeg { root: r2, m: m2 }) => {
            if r1 == r2 {
                LocalElt::monomial(ctx, UNeg { root: r1, m: m1 + m2 }, ring.one())
            } else {
                uneg_uneg(ctx, r1, m1, r2, m2)
            }
        }
        (ZNeg { root: r1, m: m1 }, ZNeg { root: r2, m: m2 }) => {
            if r1 == r2 {
                LocalElt::monomial(ctx, ZNeg { root: r1, m: m1 + m2 }, ring.one())
            } else {
                swap_uz(ctx, &uneg_uneg(ctx, r1, m1, r2, m2))
            }
        }
        (Z(x), UNeg { root, m }) | (UNeg { root, m }, Z(x)) => {
            assert_eq!(ctx.shape, RingShape::Node);
            // z·(u−β)^{−m} = −β^{−1} z (u−β)^{−(m−1)} + ϖβ^{−1}(u−β)^{−m}
            // iterate in x and m
            let beta_inv = ring.inv(ctx.teich(root)).expect("unit root");
            let mut acc = LocalElt::monomial(ctx, UNeg { root, m }, ring.one());
            for _ in 0..x {
                let mut next = LocalElt::zero();
                for (mono, c) in &acc.terms {
                    match mono {
                        UNeg { root: r, m: mm } => {
                            // z·(u−β)^{−mm}: recurse on mm
                            let e = z_times_uneg(ctx, *r, *mm, &beta_inv);
                            for (m2, c2) in &e.terms {
                                next.add_term(ctx, *m2, ring.mul(c2, c));
                            }
                        }
                        other => {
                            let e = mono_mul(ctx, Z(1), *other);
                            for (m2, c2) in &e.terms {
                                next.add_term(ctx, *m2, ring.mul(c2, c));
                            }
                        }
                    }
                }
                acc = next;
            }
            acc
        }
        (U(x), ZNeg { root, m }) | (ZNeg { root, m }, U(x)) => {
            swap_uz(ctx, &mono_mul(ctx, Z(x), UNeg { root, m }))
        }
        (UNeg { root: ru, m: mu }, ZNeg { root: rz, m: mz })
        | (ZNeg { root: rz, m: mz }, UNeg { root: ru, m: mu }) => {
            assert_eq!(ctx.shape, RingShape::Node);
            // base identity:
            // (u−β)^{−1}(z−γ)^{−1} = (ϖ−βγ)^{−1}·(β(u−β)^{−1} + 1 + γ(z−γ)^{−1})
            let beta = ctx.teich(ru).clone();
            let gamma = ctx.teich(rz).clone();
            let denom = ring.sub(&ring.varpi(), &ring.mul(&beta, &gamma));
            let dinv = ring.inv(&denom).expect("ϖ−βγ is a unit");
            let mut base = LocalElt::zero();
            base.add_term(ctx, UNeg { root: ru, m: 1 }, ring.mul(&beta, &dinv));
            base.add_term(ctx, One, dinv.clone());
            base.add_term(ctx, ZNeg { root: rz, m: 1 }, ring.mul(&gamma, &dinv));
            // multiply the remaining powers back in
            let mut acc = base;
            if mu > 1 {
                acc = acc.mul(ctx, &LocalElt::monomial(ctx, UNeg { root: ru, m: mu - 1 }, ring.one()));
            }
            if mz > 1 {
                acc = acc.mul(ctx, &LocalElt::monomial(ctx, ZNeg { root: rz, m: mz - 1 }, ring.one()));
            }
            acc
        }
    }
}

fn low_u64(x: u128, ring: &TruncRing) -> u64 {
    (x % (ring.p().pow(ring.j()) as u128)) as u64
}

/// `z·(u−β)^{−m} = −β^{−1}·z·(u−β)^{−(m−1)} + ϖβ^{−1}·(u−β)^{−m}`
fn z_times_uneg(ctx: &ModCtx, root: u64, m: u32, beta_inv: &RingElt) -> LocalElt {
    let ring = &ctx.ring;
    if m == 0 {
        return LocalElt::monomial(ctx, Mono::Z(1), ring.one());
    }
    let rec = z_times_uneg(ctx, root, m - 1, beta_inv);
    let mut out = rec.scale(ctx, &ring.neg(beta_inv));
    out.add_term(
        ctx,
        Mono::UNeg { root, m },
        ring.mul(&ring.varpi(), beta_inv),
    );
    out
}

/// partial fractions for distinct roots:
/// `(τ−R)^{−1}(τ−S)^{−1} = (R−S)^{−1}·((τ−R)^{−1} − (τ−S)^{−1})`
fn uneg_uneg(ctx: &ModCtx, r1: u64, m1: u32, r2: u64, m2: u32) -> LocalElt {
    let ring = &ctx.ring;
    let rr = ctx.teich(r1).clone();
    let ss = ctx.teich(r2).clone();
    let c = ring.inv(&ring.sub(&rr, &ss)).expect("distinct residues");
    let mut base = LocalElt::zero();
    base.add_term(ctx, Mono::UNeg { root: r1, m: 1 }, c.clone());
    base.add_term(ctx, Mono::UNeg { root: r2, m: 1 }, ring.neg(&c));
    let mut acc = base;
    // multiply remaining powers one at a time; same-root steps are trivial,
    // cross-root steps recurse with smaller total exponent
    for _ in 1..m1 {
        acc = acc.mul(ctx, &LocalElt::monomial(ctx, Mono::UNeg { root: r1, m: 1 }, ring.one()));
    }
    for _ in 1..m2 {
        acc = acc.mul(ctx, &LocalElt::monomial(ctx, Mono::UNeg { root: r2, m: 1 }, ring.one()));
    }
    acc
}


fn swap_uz(ctx: &ModCtx, e: &LocalElt) -> LocalElt {
    let mut out = LocalElt::zero();
    for (m, c) in &e.terms {
        let sm = match m {
            Mono::One => Mono::One,
            Mono::U(k) => Mono::Z(*k),
            Mono::Z(k) => Mono::U(*k),
            Mono::UNeg { root, m } => Mono::ZNeg { root: *root, m: *m },
            Mono::ZNeg { root, m } => Mono::UNeg { root: *root, m: *m },
        };
        out.add_term(ctx, sm, c.clone());
    }
    out
}

/// `(τ − δ)^{−1}` where δ ≡ teich(root) + ε with ε ∈ (ϖ): the Hensel
/// expansion `Σ εⁱ (τ−T)^{−(i+1)}`, finite because ϖ is nilpotent.
pub fn inv_shifted_linear(ctx: &ModCtx, delta: &RingElt) -> LocalElt {
    let ring = &ctx.ring;
    let root = ring.residue_index(delta);
    let t = ctx.teich(root).clone();
    let eps = ring.sub(delta, &t);
    debug_assert!(ring.val(&eps) >= 1);
    let mut out = LocalElt::zero();
    let mut eps_pow = ring.one();
    for i in 0..ring.j() {
        out.add_term(ctx, Mono::UNeg { root, m: i + 1 }, eps_pow.clone());
        eps_pow = ring.mul(&eps_pow, &eps);
        if ring.is_zero(&eps_pow) {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u64, j: u32, shape: RingShape) -> ModCtx {
        ModCtx::new(&TruncRing::new(p, 1, j).unwrap(), shape)
    }

    fn m(ctx: &ModCtx, mono: Mono) -> LocalElt {
        LocalElt::monomial(ctx, mono, ctx.ring.one())
    }

    #[test]
    fn poly_products() {
        let c = ctx(2, 3, RingShape::Poly);
        let r = &c.ring;
        // τ·(τ−1)^{−1} = 1 + (τ−1)^{−1}
        let e = mono_mul(&c, Mono::U(1), Mono::UNeg { root: 1, m: 1 });
        let mut want = LocalElt::one(&c);
        want.add_term(&c, Mono::UNeg { root: 1, m: 1 }, r.one());
        assert_eq!(e, want);
        // verify (τ−1)·[τ·(τ−1)^{−1}] = τ
        let lin = shifted_pow(&c, 1, 1);
        let back = lin.mul(&c, &e);
        assert_eq!(back, m(&c, Mono::U(1)));
    }

    #[test]
    fn partial_fractions_invert() {
        let c = ctx(3, 2, RingShape::Poly);
        // e = (τ−1)^{−2}(τ−2)^{−1}; check (τ−1)²(τ−2)·e = 1
        let e = mono_mul(&c, Mono::UNeg { root: 1, m: 2 }, Mono::UNeg { root: 2, m: 1 });
        let lin1 = shifted_pow(&c, 1, 2);
        let lin2 = shifted_pow(&c, 2, 1);
        let prod = lin1.mul(&c, &lin2).mul(&c, &e);
        assert_eq!(prod, LocalElt::one(&c));
    }

    #[test]
    fn node_products() {
        let c = ctx(2, 3, RingShape::Node);
        let r = &c.ring;
        // uz = ϖ
        let e = mono_mul(&c, Mono::U(1), Mono::Z(1));
        assert_eq!(e, LocalElt::scalar(&c, r.varpi()));
        // u²z = ϖu
        let e = mono_mul(&c, Mono::U(2), Mono::Z(1));
        assert_eq!(e, LocalElt::monomial(&c, Mono::U(1), r.varpi()));
        // z·(u−1)^{−1}: check (u−1)·[z(u−1)^{−1}] = z
        let e = mono_mul(&c, Mono::Z(1), Mono::UNeg { root: 1, m: 1 });
        let lin = shifted_pow(&c, 1, 1); // u − 1
        let back = lin.mul(&c, &e);
        assert_eq!(back, m(&c, Mono::Z(1)));
        // (u−1)^{−1}(z−1)^{−1}: multiply back by (u−1)(z−1)
        let e = mono_mul(
            &c,
            Mono::UNeg { root: 1, m: 1 },
            Mono::ZNeg { root: 1, m: 1 },
        );
        let lu = shifted_pow(&c, 1, 1);
        let lz = swap_uz(&c, &shifted_pow(&c, 1, 1));
        let back = lu.mul(&c, &lz).mul(&c, &e);
        assert_eq!(back, LocalElt::one(&c));
    }

    #[test]
    fn node_mixed_powers_invert() {
        let c = ctx(3, 2, RingShape::Node);
        for (mu, mz) in [(1u32, 1u32), (2, 1), (2, 2)] {
            for (ru, rz) in [(1u64, 1u64), (1, 2), (2, 1)] {
                let e = mono_mul(
                    &c,
                    Mono::UNeg { root: ru, m: mu },
                    Mono::ZNeg { root: rz, m: mz },
                );
                let lu = shifted_pow(&c, ru, mu);
                let lz = swap_uz(&c, &shifted_pow(&c, rz, mz));
                let back = lu.mul(&c, &lz).mul(&c, &e);
                assert_eq!(back, LocalElt::one(&c), "mu={mu} mz={mz} ru={ru} rz={rz}");
            }
        }
    }

    #[test]
    fn associativity_samples() {
        let c = ctx(2, 3, RingShape::Node);
        let elems = [
            m(&c, Mono::U(2)),
            m(&c, Mono::Z(1)),
            m(&c, Mono::UNeg { root: 1, m: 1 }),
            m(&c, Mono::ZNeg { root: 1, m: 2 }),
            LocalElt::scalar(&c, c.ring.varpi()),
        ];
        for a in &elems {
            for b in &elems {
                for d in &elems {
                    let ab_d = a.mul(&c, b).mul(&c, d);
                    let a_bd = a.mul(&c, &b.mul(&c, d));
                    assert_eq!(ab_d, a_bd);
                }
            }
        }
    }

    #[test]
    fn hensel_inverse() {
        let c = ctx(2, 3, RingShape::Poly);
        let r = &c.ring;
        // (τ − 3)^{−1} over Z/8: 3 ≡ teich(1) + 2
        let delta = r.from_u64(3);
        let inv = inv_shifted_linear(&c, &delta);
        // (τ − 3)·inv = 1
        let mut lin = LocalElt::monomial(&c, Mono::U(1), r.one());
        lin.add_term(&c, Mono::One, r.neg(&delta));
        assert_eq!(lin.mul(&c, &inv), LocalElt::one(&c));
    }
}
