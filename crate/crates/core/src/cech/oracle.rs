//! Special-fiber cross-check: cohomology of a line bundle restricted to the
//! tree of projective lines, computed from classical per-component
//! Riemann-Roch spaces glued along the nodes. Entirely independent of the
//! chain-ring Čech path: everything here is linear algebra over the residue
//! field. `cech_cohomology` at j = 1 must agree with this on every bundle.

use std::collections::BTreeMap;

use crate::error::{CoreError, Result};
use crate::models::{GenExpr, LineBundleData, ModelAtlas, Place};
use crate::ringlab::{kernel_left, Mat, ModuleInvariants, RingElt, TruncRing};

use super::{CohomologyReport, RingDesc};

/// dense polynomial over the residue field, ascending coefficients
#[derive(Clone, Debug)]
struct Poly(Vec<RingElt>);

impl Poly {
    fn zero() -> Poly {
        Poly(vec![])
    }
    fn one(f: &TruncRing) -> Poly {
        Poly(vec![f.one()])
    }
    fn monomial(f: &TruncRing, k: usize) -> Poly {
        let mut c = vec![f.zero(); k + 1];
        c[k] = f.one();
        Poly(c)
    }
    fn linear(f: &TruncRing, root: &RingElt) -> Poly {
        Poly(vec![f.neg(root), f.one()])
    }
    fn deg(&self, f: &TruncRing) -> Option<usize> {
        self.0.iter().rposition(|c| !f.is_zero(c))
    }
    fn mul(&self, f: &TruncRing, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![f.zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (k, b) in other.0.iter().enumerate() {
                out[i + k] = f.add(&out[i + k], &f.mul(a, b));
            }
        }
        Poly(out)
    }
    fn pow(&self, f: &TruncRing, e: u32) -> Poly {
        let mut acc = Poly::one(f);
        for _ in 0..e {
            acc = acc.mul(f, self);
        }
        acc
    }
    fn scale(&self, f: &TruncRing, c: &RingElt) -> Poly {
        Poly(self.0.iter().map(|x| f.mul(x, c)).collect())
    }
    fn eval(&self, f: &TruncRing, x: &RingElt) -> RingElt {
        let mut acc = f.zero();
        for c in self.0.iter().rev() {
            acc = f.add(&f.mul(&acc, x), c);
        }
        acc
    }
    /// remainder modulo (τ − root)^k, as its coefficient vector (length k)
    fn rem_linear_power(&self, f: &TruncRing, root: &RingElt, k: u32) -> Vec<RingElt> {
        // repeated division by (τ − root): digits of the Taylor expansion
        let mut cur = self.0.clone();
        let mut digits = Vec::with_capacity(k as usize);
        for _ in 0..k {
            // cur(τ) = q(τ)(τ−root) + cur(root)
            let mut q = vec![f.zero(); cur.len().saturating_sub(1)];
            let mut carry = f.zero();
            for i in (0..cur.len()).rev() {
                let v = f.add(&cur[i], &f.mul(&carry, root));
                if i > 0 {
                    q[i - 1] = v.clone();
                }
                carry = v;
            }
            let value = carry; // cur evaluated at root
            digits.push(value);
            cur = q;
        }
        digits
    }
    /// exact division by (τ − root)^k (panics if not divisible)
    fn divide_linear_power(&self, f: &TruncRing, root: &RingElt, k: u32) -> Poly {
        let mut cur = self.0.clone();
        for _ in 0..k {
            let mut q = vec![f.zero(); cur.len().saturating_sub(1)];
            let mut carry = f.zero();
            for i in (0..cur.len()).rev() {
                let v = f.add(&cur[i], &f.mul(&carry, root));
                if i > 0 {
                    q[i - 1] = v.clone();
                }
                carry = v;
            }
            assert!(f.is_zero(&carry), "inexact division by linear power");
            cur = q;
        }
        Poly(cur)
    }
}

/// rational function num/den over the residue field
#[derive(Clone, Debug)]
struct Rational {
    num: Poly,
    den: Poly,
}

impl Rational {
    fn value_at(&self, f: &TruncRing, place: Place, teich: &[RingElt]) -> Result<RingElt> {
        match place {
            Place::Finite(r) => {
                let root = teich[r as usize].clone();
                // cancel the common (τ − root)-power first
                let ord_den = self
                    .den
                    .rem_linear_power(f, &root, self.den.0.len() as u32)
                    .iter()
                    .position(|c| !f.is_zero(c))
                    .unwrap_or(self.den.0.len());
                let num = self.num.divide_linear_power(f, &root, ord_den as u32);
                let den = self.den.divide_linear_power(f, &root, ord_den as u32);
                let dv = den.eval(f, &root);
                if f.is_zero(&dv) {
                    return Err(CoreError::NoSolution(
                        "section has a pole at a node".into(),
                    ));
                }
                Ok(f.mul(&num.eval(f, &root), &f.inv(&dv)?))
            }
            Place::Infinity => {
                let dn = self.num.deg(f);
                let dd = self.den.deg(f).expect("nonzero denominator");
                match dn {
                    None => Ok(f.zero()),
                    Some(dn) if dn < dd => Ok(f.zero()),
                    Some(dn) if dn == dd => {
                        let l = f.inv(&self.den.0[dd])?;
                        Ok(f.mul(&self.num.0[dn], &l))
                    }
                    _ => Err(CoreError::NoSolution("section has a pole at ∞-node".into())),
                }
            }
        }
    }
}

/// H⁰/H¹ of the restriction of the bundle to the special fiber, via
/// per-component Riemann-Roch spaces and the node-gluing exact sequence.
pub fn special_fiber_oracle(
    atlas: &ModelAtlas,
    bundle: &LineBundleData,
) -> Result<CohomologyReport> {
    let fq = atlas.ring().with_level(1)?;
    let atlas1 = atlas.with_truncation(1)?;
    let teich = fq.teichmuller_set();
    let q = fq.q();

    struct CompData {
        basis: Vec<Poly>,
        den: Poly,
        reference: usize,
        degree: i64,
    }

    let mut comps: Vec<CompData> = Vec::new();
    for ci in 0..atlas1.components().len() {
        // divisor of the reference trivialization
        let charts_on: Vec<usize> = (0..atlas1.charts().len())
            .filter(|&c| atlas1.charts()[c].on_component(ci).is_some())
            .collect();
        let reference = charts_on[0];
        let mut ords: BTreeMap<Place, i64> = BTreeMap::new();
        let places: Vec<Place> = (0..q)
            .map(Place::Finite)
            .chain(std::iter::once(Place::Infinity))
            .collect();
        for place in &places {
            let local = bundle.local_chart_at(&atlas1, ci, *place);
            let g = if local == reference {
                GenExpr::one(&fq)
            } else if reference < local {
                bundle.transition(reference, local).clone()
            } else {
                bundle.transition(local, reference).inv(&fq)?
            };
            ords.insert(*place, g.order_at(*place));
        }
        let degree: i64 = ords.values().sum();

        // RR space: f = g/∏_{n_a>0}(τ−a)^{n_a}, deg g ≤ n_∞ + Σ_{n_a>0} n_a,
        // divisibility (τ−a)^{−n_a} | g at places with n_a < 0
        let s_plus: i64 = ords
            .iter()
            .filter(|(p, _)| **p != Place::Infinity)
            .map(|(_, &n)| n.max(0))
            .sum();
        let bound = ords[&Place::Infinity] + s_plus;
        let mut den = Poly::one(&fq);
        for (p, &n) in &ords {
            if let Place::Finite(r) = p {
                if n > 0 {
                    den = den.mul(&fq, &Poly::linear(&fq, &teich[*r as usize]).pow(&fq, n as u32));
                }
            }
        }
        let basis = if bound < 0 {
            vec![]
        } else {
            // conditions: remainders at negative places vanish
            let dim_g = (bound + 1) as usize;
            let mut cond_rows: Vec<Vec<RingElt>> = vec![Vec::new(); dim_g];
            for (p, &n) in &ords {
                if let Place::Finite(r) = p {
                    if n < 0 {
                        let k = (-n) as u32;
                        for (t, row) in cond_rows.iter_mut().enumerate() {
                            let rems = Poly::monomial(&fq, t).rem_linear_power(
                                &fq,
                                &teich[*r as usize],
                                k,
                            );
                            row.extend(rems);
                        }
                    }
                }
            }
            let ncols = cond_rows[0].len();
            let gspace = if ncols == 0 {
                (0..dim_g)
                    .map(|t| {
                        let mut v = vec![fq.zero(); dim_g];
                        v[t] = fq.one();
                        v
                    })
                    .collect::<Vec<_>>()
            } else {
                let m = Mat::from_rows(&fq, cond_rows);
                let k = kernel_left(&m);
                (0..k.rows()).map(|r| k.row(r).to_vec()).collect()
            };
            gspace
                .into_iter()
                .map(|coeffs| Poly(coeffs))
                .collect::<Vec<_>>()
        };
        // classical dimension check on P¹
        assert_eq!(
            basis.len() as i64,
            (degree + 1).max(0),
            "Riemann-Roch dimension on component {ci}"
        );
        comps.push(CompData {
            basis,
            den,
            reference,
            degree,
        });
    }

    // gluing matrix: rows = ⊕ component bases, cols = nodes
    let total_rows: usize = comps.iter().map(|c| c.basis.len()).sum();
    let nnodes = atlas1.nodes().len();
    let mut glue = Mat::zero(&fq, total_rows, nnodes);
    let mut row0 = 0usize;
    for (ci, cd) in comps.iter().enumerate() {
        for (bi, g) in cd.basis.iter().enumerate() {
            for (ni, node) in atlas1.nodes().iter().enumerate() {
                let (place, sign): (Place, i64) = if node.parent == ci {
                    (node.parent_place, 1)
                } else if node.child == ci {
                    (Place::Infinity, -1)
                } else {
                    continue;
                };
                // value in the node chart trivialization
                let nodechart = node.chart;
                let trans = if cd.reference == nodechart {
                    GenExpr::one(&fq)
                } else if cd.reference < nodechart {
                    bundle.transition(cd.reference, nodechart).clone()
                } else {
                    bundle.transition(nodechart, cd.reference).inv(&fq)?
                };
                let mut num = g.clone();
                let mut den = cd.den.clone();
                let coeff = fq.project(&trans.coeff, &fq);
                assert_eq!(trans.varpi, 0, "transition is a unit");
                num = num.scale(&fq, &coeff);
                for (f, &e) in &trans.factors {
                    let root = match f {
                        crate::models::LinFactor::Coord => fq.zero(),
                        crate::models::LinFactor::CoordMinus(r) => teich[*r as usize].clone(),
                    };
                    let lin = Poly::linear(&fq, &root);
                    if e > 0 {
                        num = num.mul(&fq, &lin.pow(&fq, e as u32));
                    } else {
                        den = den.mul(&fq, &lin.pow(&fq, (-e) as u32));
                    }
                }
                let value = Rational { num, den }.value_at(&fq, place, &teich)?;
                let signed = if sign > 0 { value } else { fq.neg(&value) };
                *glue.at_mut(row0 + bi, ni) = signed;
            }
        }
        row0 += cd.basis.len();
    }

    let h0 = kernel_left(&glue).rows();
    let rank = total_rows - h0;
    let h1_glue = nnodes - rank;
    let h1_comps: i64 = comps.iter().map(|c| (-c.degree - 1).max(0)).sum();
    Ok(CohomologyReport {
        ring: RingDesc {
            p: fq.p(),
            f: fq.f(),
            j: 1,
        },
        object_id: format!("{}|special fiber", bundle.label),
        h0: ModuleInvariants {
            free_rank: h0,
            torsion: vec![],
        },
        h1: ModuleInvariants {
            free_rank: h1_glue + h1_comps as usize,
            torsion: vec![],
        },
        cutoff: 0,
        stabilized: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cech::{cech_cohomology, SheafPresentation};
    use crate::models::{
        ample_bundle, exceptional_bundle, proj_line_bundle, tangent_bundle, trivial_bundle,
    };

    fn atlas(p: u64, n: u32) -> ModelAtlas {
        let ring = TruncRing::new(p, 1, 2).unwrap();
        ModelAtlas::build(&ring, n).unwrap()
    }

    #[test]
    fn p1_classical() {
        let m = atlas(2, 0);
        for d in [-3i64, -1, 0, 2, 5] {
            let rep = special_fiber_oracle(&m, &proj_line_bundle(&m, d)).unwrap();
            assert_eq!(rep.h0.free_rank as i64, (d + 1).max(0), "h0 of O({d})");
            assert_eq!(rep.h1.free_rank as i64, (-d - 1).max(0), "h1 of O({d})");
        }
    }

    #[test]
    fn level_one_structure_and_pullbacks() {
        let m = atlas(2, 1);
        let rep = special_fiber_oracle(&m, &trivial_bundle(&m)).unwrap();
        assert_eq!(rep.h0.free_rank, 1);
        assert_eq!(rep.h1.free_rank, 0);
        let rep = special_fiber_oracle(&m, &proj_line_bundle(&m, 1)).unwrap();
        assert_eq!(rep.h0.free_rank, 2);
        assert_eq!(rep.h1.free_rank, 0);
    }

    #[test]
    fn oracle_agrees_with_cech_at_level_one() {
        for (p, n) in [(2u64, 0u32), (2, 1), (3, 1), (2, 2)] {
            let m = atlas(p, n);
            let bundles = vec![
                trivial_bundle(&m),
                proj_line_bundle(&m, 1),
                proj_line_bundle(&m, -2),
                proj_line_bundle(&m, 3),
                tangent_bundle(&m),
                exceptional_bundle(&m).unwrap(),
                ample_bundle(&m, 1, 1, 0).unwrap(),
                ample_bundle(&m, 2, 1, 1).unwrap(),
            ];
            for b in bundles {
                let oracle = special_fiber_oracle(&m, &b).unwrap();
                let sheaf = SheafPresentation::of_bundle(b.label.clone(), b);
                let cech = cech_cohomology(&m, &sheaf, 1, 10).unwrap();
                assert!(cech.stabilized, "{} p={p} n={n}", sheaf.label);
                assert_eq!(
                    (cech.h0.free_rank, cech.h1.free_rank),
                    (oracle.h0.free_rank, oracle.h1.free_rank),
                    "disagreement for {} at p={p} n={n}",
                    sheaf.label
                );
                assert!(cech.h0.torsion.is_empty() && cech.h1.torsion.is_empty());
            }
        }
    }
}
