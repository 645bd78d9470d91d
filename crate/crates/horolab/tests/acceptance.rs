//! Desk-scale acceptance run: one line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are evaluated in full and reported
//! as FAIL when they fail; they only abort the run when `HOROLAB_STRICT` is set.
//! Any other failure makes the target exit with status 1.

use horolab::affine::{GroupElement, Row};
use horolab::arith::{
    quad_expsum_bruteforce, quad_expsum_closed, weil_bound, CongruenceData,
};
use horolab::autofns::{
    fourier_coefficient, sl2_mod_elements, BumpProfile, Freq, PoincareTestFn, TorusField,
};
use horolab::expsum::{cancellation_report, golden_alpha, CosetSpec, WeightFn};
use horolab::majorant::{
    delta_lower_check, delta_m, delta_m_column, lemma72_sum, theorem4_rhs, MajorantParams,
};
use horolab::orbitlab::{
    decay_fit, equidist_error, horocycle_main_term, long_orbit_average, orbit_split,
    partition_identity, split_form_average, y_g, OrbitExperiment, Weight1D,
};
use horolab::quadrature::Quadrature;
use horolab::sl2core::{IntMatrix, Iwasawa, Sl2Matrix};
use horolab::{rng, Result};
use rand::Rng;
use std::time::{Duration, Instant};

const KNOWN_UNATTAINABLE: &[u32] = &[3, 6, 15];

const ZETA_3: f64 = 1.202_056_903_159_594_3;
const ZETA_3_2: f64 = 2.612_375_348_685_488_3;
const ZETA_2: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

fn golden_row() -> Row {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    [phi.fract(), (phi * phi).fract()]
}

fn random_gamma_n<R: Rng>(r: &mut R, n: i64, len: usize) -> IntMatrix {
    let gens = [
        IntMatrix::new(1, n, 0, 1),
        IntMatrix::new(1, -n, 0, 1),
        IntMatrix::new(1, 0, n, 1),
        IntMatrix::new(1, 0, -n, 1),
    ];
    (0..len).fold(IntMatrix::IDENTITY, |acc, _| acc * gens[r.gen_range(0..4)])
}

fn random_congruence<R: Rng>(r: &mut R, q: u64, n: u64) -> Result<CongruenceData> {
    let residues = sl2_mod_elements(n as i64);
    let res = residues[r.gen_range(0..residues.len())];
    let m = (q * n) as i64;
    let v = [0; 4].map(|_: i64| r.gen_range(0..m));
    CongruenceData::new(q, n, [res.a, res.b, res.c, res.d], v)
}

fn c1_closed_form() -> Result<Verdict> {
    let mut r = rng::stream(1, 0);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 1..=3 {
        for q in 1..=6 {
            for _ in 0..20 {
                let cd = random_congruence(&mut r, q, n)?;
                let closed = quad_expsum_closed(&cd)?;
                let brute = quad_expsum_bruteforce(&cd)?;
                let rel = (closed - brute).norm() / brute.norm().max(1.0);
                worst = worst.max(rel);
                cases += 1;
            }
        }
    }
    verdict(worst <= 1e-6, format!("{cases} cases, max relative error {worst:.2e}"))
}

fn c2_weil_bound() -> Result<Verdict> {
    let mut r = rng::stream(2, 0);
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        for q in 1..=200 {
            for _ in 0..100 {
                let cd = random_congruence(&mut r, q, n)?;
                worst = worst.max(quad_expsum_closed(&cd)?.norm() / weil_bound(q, n));
            }
        }
    }
    verdict(worst <= 1.0, format!("max |S|/(N⁴τ(q)q^(5/2)) = {worst:.4}"))
}

fn c3_cancellation() -> Result<Verdict> {
    let cs = CosetSpec::principal(1)?;
    let w = WeightFn::Bump6Product { b: 1.0 };
    let xs = [25.0, 50.0, 100.0, 200.0];
    let rows = cancellation_report(&cs, golden_alpha(), &xs, &w)?;
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let c = ratios.iter().cloned().fold(0.0, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let one_constant = ratios.iter().all(|x| x.is_finite()) && c / lo <= 10.0;
    let growth = decay_fit(&rows.iter().map(|r| (r.x, r.lhs.norm())).collect::<Vec<_>>())?.slope;
    let base = cancellation_report(&cs, [0.0; 4], &xs, &w)?;
    let baseline = decay_fit(&base.iter().map(|r| (r.x, r.lhs.norm())).collect::<Vec<_>>())?.slope;
    let mags: Vec<String> = rows.iter().map(|r| format!("{:.3}", r.lhs.norm())).collect();
    verdict(
        one_constant && growth <= 1.7 && (baseline - 2.0).abs() <= 0.1,
        format!(
            "|LHS| = [{}], C = {c:.4} (spread {:.2}), growth {growth:.3} (≤ 1.7), α = 0 growth {baseline:.3}",
            mags.join(", "),
            c / lo
        ),
    )
}

fn c4_delta_anchor() -> Result<Verdict> {
    let p = MajorantParams::with_defaults(3, 1)?;
    let r = delta_m(&p, 0.25, &[[0.0, 0.0]])?;
    let target = 2.0 * ZETA_3 * ZETA_3_2 * ZETA_3_2;
    verdict(
        r.value <= target && target <= r.upper(),
        format!("[{:.4}, {:.4}] ∋ {target:.4}", r.value, r.upper()),
    )
}

fn sqrt23() -> [f64; 2] {
    [2f64.sqrt(), 3f64.sqrt()]
}

fn column(psi: [f64; 2]) -> Vec<Row> {
    psi.iter().map(|&x| [x, 0.0]).collect()
}

fn c5_delta_structure() -> Result<Verdict> {
    let fixed = MajorantParams::new(5, 2, 20, Some(200))?;
    let ys: Vec<f64> = (0..10).map(|i| 10f64.powf(-0.6 * i as f64)).collect();
    let values = ys
        .iter()
        .map(|&y| Ok(delta_m_column(&fixed, y, &sqrt23())?.value))
        .collect::<Result<Vec<f64>>>()?;
    let mut violations = 0;
    for i in 0..10 {
        for j in 0..10 {
            let (y, yp) = (ys[i], ys[j]);
            if yp < y {
                continue;
            }
            if values[i] > values[j] || values[j] > (yp / y).sqrt() * values[i] {
                violations += 1;
            }
        }
    }
    let lower_ys: Vec<f64> = (1..=6).map(|e| 10f64.powi(-e)).collect();
    let lower = delta_lower_check(&MajorantParams::with_defaults(5, 2)?, &lower_ys, &column(sqrt23()))?;
    verdict(
        violations == 0 && lower >= 0.05,
        format!("{violations} grid violations, min lower-bound ratio {lower:.4} (≥ 0.05)"),
    )
}

fn c6_diophantine_decay() -> Result<Verdict> {
    let p = MajorantParams::with_defaults(5, 2)?;
    let pts = (2..=8)
        .map(|e| {
            let y = 10f64.powi(-e);
            Ok((y, delta_m_column(&p, y, &sqrt23())?.value))
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = decay_fit(&pts)?.slope;
    verdict((0.20..=0.30).contains(&slope), format!("slope {slope:.4}, window [0.20, 0.30]"))
}

fn c7_mean_value() -> Result<Verdict> {
    let p = MajorantParams::with_defaults(3, 1)?;
    let mut r = rng::stream(7, 0);
    let xis: Vec<f64> = (0..10_000).map(|_| r.gen::<f64>()).collect();
    let mut ratios = Vec::new();
    for y in [1e-2, 1e-4, 1e-6] {
        let mut sum = 0.0;
        for &x in &xis {
            sum += delta_m_column(&p, y, &[x])?.value;
        }
        let mean = sum / xis.len() as f64;
        ratios.push(mean / (y.powf(0.25) * (1.0 / y).ln()));
    }
    let c = ratios.iter().cloned().fold(0.0, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    verdict(
        c.is_finite() && c / lo <= 10.0,
        format!("ratios {ratios:.4?}, C = {c:.4}, spread {:.2}", c / lo),
    )
}

fn c8_test_functions() -> Result<Verdict> {
    let mut r = rng::stream(8, 0);
    let f = PoincareTestFn::new(2, Freq(vec![[1, -1]]), BumpProfile::new(2.4, 0.25)?)?;
    let mut worst_inv: f64 = 0.0;
    for _ in 0..100 {
        let g = GroupElement::from_torus(&rng::torus_point(&mut r, 1), rng::bounded_matrix(&mut r))?;
        let len = r.gen_range(1..6);
        let t0 = random_gamma_n(&mut r, 2, len);
        let n = vec![[r.gen_range(-3..=3) as f64, r.gen_range(-3..=3) as f64]];
        let moved = GroupElement::new(t0.to_real(), n)?.multiply(&g)?;
        worst_inv = worst_inv.max((f.evaluate(&moved)? - f.evaluate(&g)?).norm());
    }
    let f1 = PoincareTestFn::new(1, Freq(vec![[1, 0]]), BumpProfile::new(2.3, 0.2)?)?;
    let mut worst_aut: f64 = 0.0;
    for _ in 0..20 {
        let m = rng::bounded_matrix(&mut r);
        let len = r.gen_range(1..5);
        let t = random_gamma_n(&mut r, 1, len);
        let freqs = f1.frequencies_at(&m);
        let freq = if freqs.is_empty() {
            Freq(vec![[1, 0]])
        } else {
            freqs[r.gen_range(0..freqs.len())].clone()
        };
        let lhs = fourier_coefficient(&f1, &(t.to_real() * m), &freq, 32)?;
        let rhs = fourier_coefficient(&f1, &m, &freq.dual_action(&t), 32)?;
        worst_aut = worst_aut.max((lhs - rhs).norm());
    }
    verdict(
        worst_inv <= 1e-9 && worst_aut <= 1e-6,
        format!("Γ-invariance {worst_inv:.2e} (≤ 1e-9), automorphy {worst_aut:.2e} (≤ 1e-6)"),
    )
}

fn c9_horocycle_main_term() -> Result<Verdict> {
    let f = PoincareTestFn::new(1, Freq::zero(1), BumpProfile::new(2.4, 0.0)?)?;
    let h = Weight1D::Bump6 { half_width: 1.0 };
    let ys = [1e-1, 1e-2, 1e-3, 1e-4];
    let rows = horocycle_main_term(&f, &Sl2Matrix::IDENTITY, &h, &ys, &Quadrature::default())?;
    let slope = decay_fit(&rows)?.slope;
    let errs: Vec<String> = rows.iter().map(|(_, e)| format!("{e:.3e}")).collect();
    verdict(slope >= 0.3, format!("errors [{}], slope {slope:.3} (≥ 0.3)", errs.join(", ")))
}

fn c10_equidistribution() -> Result<Verdict> {
    let f = PoincareTestFn::new(1, Freq(vec![[1, 0]]), BumpProfile::new(2.4, 0.0)?)?;
    let exp = OrbitExperiment::new(
        f,
        Weight1D::Bump6 { half_width: 1.0 },
        vec![golden_row()],
        Sl2Matrix::IDENTITY,
        MajorantParams::with_defaults(3, 1)?,
    )?;
    let rows = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&y| equidist_error(&exp, y))
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = rows.iter().map(|e| e.error).collect();
    let ratios: Vec<f64> = rows.iter().map(|e| e.ratio).collect();
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    verdict(
        decreasing && spread < 20.0,
        format!("errors {errors:.4?}, ratio spread {spread:.2} (< 20)"),
    )
}

fn c11_gap_oracle() -> Result<Verdict> {
    let mut r = rng::stream(11, 0);
    let mut mismatches = 0;
    for case in 0..200 {
        let g = GroupElement::from_torus(&rng::torus_point(&mut r, 1), rng::bounded_matrix(&mut r))?;
        let q = [[0i64, 1, -1, 2][case % 4]];
        let t: f64 = 10f64.powf(r.gen_range(0.0..1.7));
        let fast = g.gap_detailed(&q, t)?;
        let grid = g.grid(&q)?;
        let score = |a: i64, b: i64| {
            let w = grid.point([a, b]);
            (t * w[0].abs()).max(w[1].abs())
        };
        let mut best = f64::INFINITY;
        for a in -64i64..=64 {
            for b in -64i64..=64 {
                if q[0] == 0 && a == 0 && b == 0 {
                    continue;
                }
                best = best.min(score(a, b));
            }
        }
        let at_witness = score(fast.coeffs[0], fast.coeffs[1]);
        if at_witness != best || (fast.value - best).abs() > 1e-12 * best.max(1.0) {
            mismatches += 1;
        }
    }
    verdict(mismatches == 0, format!("{mismatches} mismatches in 200 cases"))
}

fn c12_splitting() -> Result<Verdict> {
    let mut r = rng::stream(12, 0);
    let quad = Quadrature::default().with_rel_tol(1e-12);
    let mut worst_pu: f64 = 0.0;
    let mut triples = 0;
    while triples < 50 {
        let (c, d, s): (f64, f64, f64) = (r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(-1.0..1.0));
        if (c * s + d).abs() < 1e-3 {
            continue;
        }
        worst_pu = worst_pu.max((partition_identity(c, d, s, &quad)? - 1.0).abs());
        triples += 1;
    }

    let mut invariant_failures = 0;
    let mut cusp_checked = 0;
    for i in 0..200 {
        let t = 10f64.powf(r.gen_range(2.0..4.0));
        let theta = if i % 2 == 0 {
            r.gen_range(-3.0..3.0) / t
        } else {
            r.gen_range(0.0..std::f64::consts::TAU)
        };
        let m = Iwasawa { u: r.gen_range(-0.5..0.5), v: r.gen_range(-3.0f64..0.0).exp(), theta }.to_matrix();
        let g = GroupElement::from_torus(&[[0.0, 0.0]], m)?;
        let z = r.gen_range(-1.0..1.0);
        let sd = match orbit_split(&g, t, z) {
            Ok(sd) => sd,
            Err(_) => continue,
        };
        if (sd.m_tilde.d.abs() - 1.0).abs() > 1e-9 {
            invariant_failures += 1;
        }
        if sd.t > 4.0 / 9.0 * sd.height && sd.height > 100.0 {
            cusp_checked += 1;
            if sd.m_tilde.frob_norm() > 3.0 {
                invariant_failures += 1;
            }
        }
    }

    let f = PoincareTestFn::new(1, Freq(vec![[1, 0]]), BumpProfile::new(2.4, 0.0)?)?;
    let h = Weight1D::Bump6 { half_width: 1.0 };
    let q = Quadrature::default().with_rel_tol(1e-9);
    let mut worst_split: f64 = 0.0;
    for i in 0..5 {
        let fi = i as f64;
        let m = Iwasawa { u: 0.37 - 0.15 * fi, v: 1.5, theta: 0.004 * (1.0 + fi) }.to_matrix();
        let g = GroupElement::from_torus(&[[0.21 + 0.1 * fi, 0.58 - 0.07 * fi]], m)?;
        let direct = long_orbit_average(&f, &g, 100.0, &h, &q)?;
        let split = split_form_average(&f, &g, 100.0, &h, 64, &q.with_rel_tol(1e-7))?;
        worst_split = worst_split.max((direct - split).norm());
    }
    verdict(
        worst_pu <= 1e-8 && invariant_failures == 0 && worst_split <= 1e-4,
        format!(
            "partition {worst_pu:.2e}, {invariant_failures} invariant failures ({cusp_checked} cusp cases), split vs direct {worst_split:.2e}"
        ),
    )
}

fn c13_lemma72() -> Result<Verdict> {
    let ws = [0.0, 0.1, 0.25, 0.5];
    let mut worst: f64 = 0.0;
    for &w1 in &ws {
        for &w2 in &ws {
            for alpha in [0.1, 1.0, 10.0, 100.0] {
                for beta in [0.1, 1.0, 10.0, 1e3] {
                    worst = worst.max(lemma72_sum(w1, w2, alpha, beta, 100_000)?.ratio);
                }
            }
        }
    }
    let anchor = lemma72_sum(0.0, 0.0, 1.0, 1.0, 10_000_000)?.lhs;
    let gap = (anchor - (2.0 * ZETA_2 - 1.0)).abs();
    verdict(
        worst <= 50.0 && gap <= 1e-6,
        format!("max ratio {worst:.3} (≤ 50), anchor gap {gap:.2e}"),
    )
}

fn c14_geometry() -> Result<Verdict> {
    let mut r = rng::stream(14, 0);
    let mut worst_rt: f64 = 0.0;
    let mut height_failures = 0;
    for i in 0..10_000 {
        let m = Iwasawa {
            u: r.gen_range(-5.0..5.0),
            v: r.gen_range(-4.0f64..4.0).exp(),
            theta: r.gen_range(0.0..std::f64::consts::TAU),
        }
        .to_matrix();
        if i < 1000 {
            for back in [m.iwasawa().to_matrix(), m.uvs().to_matrix()] {
                let err = [back.a - m.a, back.b - m.b, back.c - m.c, back.d - m.d]
                    .iter()
                    .fold(0.0f64, |acc, x| acc.max(x.abs()));
                worst_rt = worst_rt.max(err / m.frob_norm().max(1.0));
            }
        }
        let y = m.cuspidal_height()?;
        if y < 3f64.sqrt() / 2.0 - 1e-12 || y > m.frob_norm_sq() * (1.0 + 1e-12) {
            height_failures += 1;
        }
    }
    let mut products = Vec::new();
    for _ in 0..20 {
        let g = GroupElement::from_torus(&rng::torus_point(&mut r, 1), rng::bounded_matrix(&mut r))?;
        let t = 10f64.powf(r.gen_range(0.3..3.0));
        let s = g.gap(&[0], t)?;
        products.push(y_g(&g, t)? * s * s);
    }
    let in_window = products.iter().all(|p| (1.0 / 16.0..=16.0).contains(p));
    let lo = products.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = products.iter().cloned().fold(0.0, f64::max);
    verdict(
        worst_rt <= 1e-12 && height_failures == 0 && in_window,
        format!(
            "round trip {worst_rt:.2e}, {height_failures} height violations, y_g·S² ∈ [{lo:.3}, {hi:.3}]"
        ),
    )
}

fn c15_generic_decay() -> Result<Verdict> {
    let p = MajorantParams::with_defaults(3, 1)?;
    let mut slopes = Vec::new();
    for i in 0..50 {
        let mut r = rng::stream(15, i);
        let g = GroupElement::from_torus(&rng::torus_point(&mut r, 1), rng::bounded_matrix(&mut r))?;
        let pts = [1e2, 1e3, 1e4]
            .iter()
            .map(|&t| Ok((t, theorem4_rhs(&g, t, &p)?.value())))
            .collect::<Result<Vec<_>>>()?;
        slopes.push(decay_fit(&pts)?.slope);
    }
    slopes.sort_by(f64::total_cmp);
    let median = 0.5 * (slopes[24] + slopes[25]);
    verdict(
        (-0.35..=-0.15).contains(&median),
        format!("median slope {median:.4}, window [-0.35, -0.15]"),
    )
}

type Criterion = (u32, &'static str, Option<Duration>, fn() -> Result<Verdict>);

const CRITERIA: &[Criterion] = &[
    (1, "closed-form exponential sum", Some(Duration::from_secs(60)), c1_closed_form),
    (2, "Weil bound", Some(Duration::from_secs(120)), c2_weil_bound),
    (3, "smooth-sum cancellation", Some(Duration::from_secs(600)), c3_cancellation),
    (4, "majorant analytic anchor", Some(Duration::from_secs(1)), c4_delta_anchor),
    (5, "majorant structure", None, c5_delta_structure),
    (6, "Diophantine decay", Some(Duration::from_secs(60)), c6_diophantine_decay),
    (7, "majorant mean value", None, c7_mean_value),
    (8, "test-function soundness", None, c8_test_functions),
    (9, "horocycle main term", Some(Duration::from_secs(600)), c9_horocycle_main_term),
    (10, "equidistribution", None, c10_equidistribution),
    (11, "grid-gap oracle", None, c11_gap_oracle),
    (12, "orbit splitting", None, c12_splitting),
    (13, "one-dimensional splitting sum", None, c13_lemma72),
    (14, "geometry", None, c14_geometry),
    (15, "generic long-orbit decay", None, c15_generic_decay),
];

fn main() {
    let strict = std::env::var_os("HOROLAB_STRICT").is_some();
    let mut unexpected = Vec::new();
    for &(id, name, limit, run) in CRITERIA {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(v) => {
                let in_time = limit.map_or(true, |l| elapsed <= l);
                let timing = if in_time { String::new() } else { " [over time limit]".into() };
                (v.pass && in_time, format!("{}{timing}", v.detail))
            }
            Err(e) => (false, format!("error: {e}")),
        };
        let known = KNOWN_UNATTAINABLE.contains(&id);
        let tag = match (pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known unattainable at desk scale)",
            (false, false) => "FAIL",
        };
        println!("criterion {id:>2} {tag}: {name}: {detail} ({:.1} s)", elapsed.as_secs_f64());
        if !pass && (strict || !known) {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: no unexpected failures");
    } else {
        println!("acceptance: failing criteria {unexpected:?}");
        std::process::exit(1);
    }
}
