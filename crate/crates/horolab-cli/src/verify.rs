//! A fast invariant suite over the library, run by `horolab verify`.

use crate::table::Table;
use horolab::affine::GroupElement;
use horolab::arith::{
    kloosterman, quad_expsum_bruteforce, quad_expsum_closed, CongruenceData,
};
use horolab::autofns::{classify_orbit, BumpProfile, Freq, PoincareTestFn, TorusField};
use horolab::expsum::{enumerate_coset_ball, in_ball, CosetSpec};
use horolab::majorant::{delta_m, lemma72_sum, MajorantParams};
use horolab::orbitlab::partition_identity;
use horolab::quadrature::Quadrature;
use horolab::sl2core::{IntMatrix, Sl2Matrix};
use horolab::{rng, Result};
use rand::Rng;
use std::f64::consts::PI;

type Outcome = std::result::Result<String, String>;

fn judge(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const ZETA_3: f64 = 1.202_056_903_159_594_3;
const ZETA_3_2: f64 = 2.612_375_348_685_488_3;

fn delta_anchor() -> Result<Outcome> {
    let p = MajorantParams::new(3, 1, 20, None)?;
    let r = delta_m(&p, 0.25, &[[0.0, 0.0]])?;
    let target = 2.0 * ZETA_3 * ZETA_3_2 * ZETA_3_2;
    Ok(judge(
        r.value <= target && target <= r.upper(),
        format!("[{:.6}, {:.6}] around {target:.6}", r.value, r.upper()),
    ))
}

fn quadsum_agreement() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for n in 1..=2u64 {
        for q in 1..=4u64 {
            let r = IntMatrix::IDENTITY.reduce_mod(n as i64);
            for v in [[0, 0, 0, 0], [1, 0, 2, 1], [3, 1, 1, 2]] {
                let cd = CongruenceData::new(q, n, [r.a, r.b, r.c, r.d], v)?;
                let a = quad_expsum_closed(&cd)?;
                let b = quad_expsum_bruteforce(&cd)?;
                worst = worst.max((a - b).norm() / b.norm().max(1.0));
            }
        }
    }
    Ok(judge(worst <= 1e-9, format!("max relative gap {worst:.2e}")))
}

fn kloosterman_real_and_bounded() -> Result<Outcome> {
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29] {
        let k = kloosterman(1, 1, p)?;
        if k.im.abs() > 1e-9 || k.norm() > 2.0 * (p as f64).sqrt() + 1e-9 {
            return Ok(Err(format!("K(1,1;{p}) = {k}")));
        }
    }
    Ok(Ok("primes up to 29".into()))
}

fn geometry_round_trips() -> Result<Outcome> {
    let mut r = rng::stream(17, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let m = rng::bounded_matrix(&mut r);
        let back = m.iwasawa().to_matrix();
        worst = worst
            .max((back.a - m.a).abs())
            .max((back.b - m.b).abs())
            .max((back.c - m.c).abs())
            .max((back.d - m.d).abs());
        let red = m.reduce()?;
        let again = red.gamma.to_real() * red.reduced;
        worst = worst.max((again.a - m.a).abs() + (again.d - m.d).abs());
        if red.tau.im < 3f64.sqrt() / 2.0 - 1e-12 {
            return Ok(Err(format!("reduced point {} below the domain", red.tau)));
        }
    }
    Ok(judge(worst <= 1e-10, format!("max entry error {worst:.2e}")))
}

fn gap_against_scan() -> Result<Outcome> {
    let mut r = rng::stream(17, 1);
    for case in 0..20 {
        let g = GroupElement::from_torus(&rng::torus_point(&mut r, 1), rng::bounded_matrix(&mut r))?;
        let q = [(case % 3) as i64];
        let t: f64 = r.gen_range(1.0..20.0);
        let fast = g.gap(&q, t)?;
        let grid = g.grid(&q)?;
        let mut best = f64::INFINITY;
        for a in -40i64..=40 {
            for b in -40i64..=40 {
                if q[0] == 0 && a == 0 && b == 0 {
                    continue;
                }
                let w = grid.point([a, b]);
                best = best.min((t * w[0].abs()).max(w[1].abs()));
            }
        }
        if (fast - best).abs() > 1e-9 * best.max(1.0) {
            return Ok(Err(format!("case {case}: {fast} against scan {best}")));
        }
    }
    Ok(Ok("20 seeded grids".into()))
}

fn gamma_invariance() -> Result<Outcome> {
    let f = PoincareTestFn::new(2, Freq(vec![[1, 0]]), BumpProfile::new(2.4, 0.3)?)?;
    let t0 = IntMatrix::new(5, 2, 2, 1);
    let mut r = rng::stream(17, 2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let g = GroupElement::from_torus(&rng::torus_point(&mut r, 1), rng::bounded_matrix(&mut r))?;
        let n = vec![[r.gen_range(-3..=3) as f64, r.gen_range(-3..=3) as f64]];
        let moved = GroupElement::new(t0.to_real(), n)?.multiply(&g)?;
        worst = worst.max((f.evaluate(&moved)? - f.evaluate(&g)?).norm());
    }
    Ok(judge(worst <= 1e-9, format!("max change {worst:.2e}")))
}

fn coset_enumeration() -> Result<Outcome> {
    let cs = CosetSpec::principal(2)?;
    let rho = 5.0;
    let mut found = enumerate_coset_ball(&cs, rho, None);
    found.sort();
    let mut scan = Vec::new();
    for a in -5..=5 {
        for b in -5..=5 {
            for c in -5..=5 {
                for d in -5..=5 {
                    let t = IntMatrix::new(a, b, c, d);
                    if t.det() == 1 && cs.contains(&t) && in_ball(&t, None, rho) {
                        scan.push(t);
                    }
                }
            }
        }
    }
    scan.sort();
    Ok(judge(found == scan, format!("{} matrices", found.len())))
}

fn orbit_normal_form() -> Result<Outcome> {
    let m = Freq(vec![[4, 6], [3, -1]]);
    let c = classify_orbit(&m);
    Ok(judge(
        m.times(&c.transform) == c.canonical && c.transform.det() == 1,
        format!("{:?}", c.canonical.0),
    ))
}

fn partition_of_unity() -> Result<Outcome> {
    let quad = Quadrature::default();
    let mut worst: f64 = 0.0;
    for (c, d, s) in [(0.0, 1.0, 0.3), (1.5, -0.4, 2.0), (-2.0, 0.7, -1.1)] {
        worst = worst.max((partition_identity(c, d, s, &quad)? - 1.0).abs());
    }
    Ok(judge(worst <= 1e-8, format!("max deviation {worst:.2e}")))
}

fn lemma72_anchor() -> Result<Outcome> {
    let l = lemma72_sum(0.0, 0.0, 1.0, 1.0, 1_000_000)?;
    let target = PI * PI / 3.0 - 1.0;
    let gap = (l.lhs - target).abs();
    Ok(judge(gap <= l.tail + 1e-9, format!("gap {gap:.2e}, tail {:.2e}", l.tail)))
}

fn matrix_inverse() -> Result<Outcome> {
    let m = Sl2Matrix::new(2.0, 3.0, 1.0, 2.0)?;
    let p = m * m.inverse();
    let err = (p.a - 1.0).abs() + p.b.abs() + p.c.abs() + (p.d - 1.0).abs();
    Ok(judge(err <= 1e-14, format!("error {err:.2e}")))
}

type Check = (&'static str, fn() -> Result<Outcome>);

const CHECKS: &[Check] = &[
    ("matrix_inverse", matrix_inverse),
    ("geometry_round_trips", geometry_round_trips),
    ("delta_anchor", delta_anchor),
    ("quadsum_closed_vs_brute", quadsum_agreement),
    ("kloosterman_weil", kloosterman_real_and_bounded),
    ("gap_vs_scan", gap_against_scan),
    ("coset_enumeration", coset_enumeration),
    ("orbit_normal_form", orbit_normal_form),
    ("gamma_invariance", gamma_invariance),
    ("partition_of_unity", partition_of_unity),
    ("lemma72_anchor", lemma72_anchor),
];

/// Runs the checks in order, stopping at the first failure. The flag is
/// `true` when every check passed.
pub fn run() -> (Table, bool) {
    let mut t = Table::new(&["check", "status", "detail"]);
    for (name, check) in CHECKS {
        let (status, detail, ok) = match check() {
            Ok(Ok(d)) => ("pass", d, true),
            Ok(Err(d)) => ("fail", d, false),
            Err(e) => ("error", e.to_string(), false),
        };
        t.push(vec![(*name).into(), status.into(), detail.into()]);
        if !ok {
            return (t, false);
        }
    }
    (t, true)
}
