use crate::args::*;
use crate::table::{Cell, Table};
use horolab::affine::{GroupElement, Row};
use horolab::arith::{
    kloosterman, quad_expsum_bruteforce, quad_expsum_closed, weil_bound, CongruenceData,
};
use horolab::autofns::{BumpProfile, Freq, PoincareTestFn};
use horolab::expsum::{cancellation_report, golden_alpha, CosetSpec, WeightFn};
use horolab::majorant::{delta_m, lfd_test, theorem4_rhs, LfdOutcome, MajorantParams};
use horolab::orbitlab::{
    decay_fit, equidist_error, horocycle_main_term, OrbitExperiment, Weight1D,
};
use horolab::quadrature::Quadrature;
use horolab::sl2core::{IntMatrix, Sl2Matrix};
use horolab::{rng, Error, Result};
use rayon::prelude::*;

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

fn matrix(entries: Option<&RealList>) -> Result<Sl2Matrix> {
    match entries.map(|l| l.0.as_slice()) {
        None => Ok(Sl2Matrix::IDENTITY),
        Some(&[a, b, c, d]) => Sl2Matrix::new(a, b, c, d),
        Some(v) => Err(invalid(format!("--mat needs 4 entries, got {}", v.len()))),
    }
}

fn residue(entries: Option<&IntList>, n: i64) -> Result<IntMatrix> {
    if n < 1 {
        return Err(invalid(format!("N must be positive, got {n}")));
    }
    match entries.map(|l| l.0.as_slice()) {
        None => Ok(IntMatrix::IDENTITY.reduce_mod(n)),
        Some(&[a, b, c, d]) => Ok(IntMatrix::new(a, b, c, d)),
        Some(v) => Err(invalid(format!("--r needs 4 entries, got {}", v.len()))),
    }
}

fn torus_rows(xi: Option<&Rows>, k: usize) -> Result<Vec<Row>> {
    let rows = xi.map_or_else(|| vec![[0.0; 2]; k], |r| r.0.clone());
    if rows.len() != k {
        return Err(invalid(format!("ξ has {} rows, expected k = {k}", rows.len())));
    }
    Ok(rows)
}

fn weight(kind: WeightKind) -> Weight1D {
    match kind {
        WeightKind::Bump => Weight1D::Bump6 { half_width: 1.0 },
        WeightKind::Decay44 => Weight1D::Decay44,
    }
}

fn nonempty(list: &[f64], flag: &str) -> Result<()> {
    if list.is_empty() {
        return Err(invalid(format!("{flag} must not be empty")));
    }
    Ok(())
}

/// Evaluates `f` on every schedule point and keeps the schedule order.
fn over<T, R, F>(points: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    points.par_iter().map(f).collect()
}

pub fn delta(a: &DeltaArgs) -> Result<Table> {
    let p = MajorantParams::new(a.m, a.k, a.qmax, a.dmax)?;
    let xi = torus_rows(a.xi.as_ref(), a.k)?;
    nonempty(&a.y.0, "--y")?;
    let results = over(&a.y.0, |&y| delta_m(&p, y, &xi))?;
    let mut t = Table::new(&["y", "value", "tail", "Qmax", "Dmax"]);
    for (y, r) in a.y.0.iter().zip(results) {
        t.push(vec![(*y).into(), r.value.into(), r.tail_bound.into(), r.q_max.into(), r.d_max.into()]);
    }
    Ok(t)
}

pub fn lfd(a: &LfdArgs) -> Result<Table> {
    let outcome = lfd_test(&a.xi.0, a.kappa, a.alpha, a.c, a.dmax, a.qmax)?;
    let mut t = Table::new(&["outcome", "d", "q"]);
    match outcome {
        LfdOutcome::Pass => t.push(vec!["pass".into(), "".into(), "".into()]),
        LfdOutcome::Witness { d, q } => {
            let q: Vec<String> = q.iter().map(|x| x.to_string()).collect();
            t.push(vec!["witness".into(), d.into(), q.join(";").into()]);
        }
    }
    Ok(t)
}

pub fn sgq(a: &SgqArgs) -> Result<Table> {
    let m = matrix(a.mat.as_ref())?;
    let g = GroupElement::from_torus(&a.xi.0, m)?;
    if a.q.0.len() != g.k() {
        return Err(invalid(format!("q has {} entries, expected k = {}", a.q.0.len(), g.k())));
    }
    nonempty(&a.t.0, "--t")?;
    let gaps = over(&a.t.0, |&t| g.gap_detailed(&a.q.0, t))?;
    let mut t = Table::new(&["T", "S", "n1", "n2"]);
    for (tv, gap) in a.t.0.iter().zip(gaps) {
        t.push(vec![(*tv).into(), gap.value.into(), gap.coeffs[0].into(), gap.coeffs[1].into()]);
    }
    Ok(t)
}

fn parse_alpha(s: &str) -> Result<[f64; 4]> {
    if s.trim() == "golden" {
        return Ok(golden_alpha());
    }
    let v = real_list(s).map_err(invalid)?.0;
    <[f64; 4]>::try_from(v.as_slice())
        .map_err(|_| invalid(format!("--alpha needs `golden` or 4 reals, got {}", v.len())))
}

pub fn expsum(a: &ExpsumArgs) -> Result<Table> {
    let cs = CosetSpec::new(a.level, residue(a.r.as_ref(), a.level)?)?;
    let alpha = parse_alpha(&a.alpha)?;
    if !(a.b > 0.0) {
        return Err(invalid("--b must be positive"));
    }
    let w = WeightFn::Bump6Product { b: a.b };
    nonempty(&a.x.0, "--x")?;
    let rows = over(&a.x.0, |&x| cancellation_report(&cs, alpha, &[x], &w))?;
    let mut t = Table::new(&["X", "lhs_re", "lhs_im", "rhs", "ratio"]);
    for r in rows.into_iter().flatten() {
        t.push(vec![r.x.into(), r.lhs.re.into(), r.lhs.im.into(), r.rhs.into(), r.ratio.into()]);
    }
    Ok(t)
}

fn modulus(q: i64) -> Result<u64> {
    u64::try_from(q)
        .ok()
        .filter(|&q| q > 0)
        .ok_or_else(|| invalid(format!("moduli must be positive, got {q}")))
}

pub fn kloosterman_table(a: &KloostermanArgs) -> Result<Table> {
    let qs = a.q.0.iter().map(|&q| modulus(q)).collect::<Result<Vec<_>>>()?;
    let values = over(&qs, |&q| kloosterman(a.m, a.n, q))?;
    let mut t = Table::new(&["q", "re", "im", "abs"]);
    for (q, v) in qs.iter().zip(values) {
        t.push(vec![(*q).into(), v.re.into(), v.im.into(), v.norm().into()]);
    }
    Ok(t)
}

pub fn quadsum(a: &QuadsumArgs) -> Result<Table> {
    let r = residue(a.r.as_ref(), a.level as i64)?;
    let v = <[i64; 4]>::try_from(a.v.0.as_slice())
        .map_err(|_| invalid(format!("--v needs 4 entries, got {}", a.v.0.len())))?;
    let cd = CongruenceData::new(a.q, a.level, [r.a, r.b, r.c, r.d], v)?;
    let s = match a.method {
        QuadMethod::Closed => quad_expsum_closed(&cd)?,
        QuadMethod::Brute => quad_expsum_bruteforce(&cd)?,
    };
    let mut t = Table::new(&["q", "N", "re", "im", "abs", "weil"]);
    t.push(vec![
        a.q.into(),
        a.level.into(),
        s.re.into(),
        s.im.into(),
        s.norm().into(),
        weil_bound(a.q, a.level).into(),
    ]);
    Ok(t)
}

pub fn orbit(a: &OrbitArgs) -> Result<Table> {
    let freq = Freq(a.m0.0.clone());
    let k = freq.k();
    let f = PoincareTestFn::new(a.level, freq, BumpProfile::new(a.rho0, a.amp)?)?;
    let xi = torus_rows(a.xi.as_ref(), k)?;
    let m = matrix(a.mat.as_ref())?;
    let p = MajorantParams::new(a.m.unwrap_or(k as u32 + 2), k, a.qmax, None)?;
    let exp = OrbitExperiment::new(f, weight(a.h), xi, m, p)?;
    nonempty(&a.y.0, "--y")?;
    let scale = m.frob_norm().powi(13);
    let rows = over(&a.y.0, |&y| {
        let e = equidist_error(&exp, y)?;
        let tail = delta_m(&p, y, &exp.xi)?.tail_bound * scale;
        Ok((e, tail))
    })?;
    let mut t = Table::new(&[
        "y", "value_re", "value_im", "main", "error", "bound", "bound_tail", "ratio",
    ]);
    for (y, (e, tail)) in a.y.0.iter().zip(rows) {
        t.push(vec![
            (*y).into(),
            e.value.re.into(),
            e.value.im.into(),
            e.main.into(),
            e.error.into(),
            e.bound.into(),
            tail.into(),
            e.ratio.into(),
        ]);
    }
    Ok(t)
}

pub fn horocycle(a: &HorocycleArgs) -> Result<Table> {
    let f = PoincareTestFn::new(a.level, Freq::zero(a.k), BumpProfile::new(a.rho0, a.amp)?)?;
    let m = matrix(a.mat.as_ref())?;
    let h = weight(a.h);
    let quad = Quadrature::default();
    nonempty(&a.y.0, "--y")?;
    let rows = over(&a.y.0, |&y| horocycle_main_term(&f, &m, &h, &[y], &quad))?;
    let mut t = Table::new(&["y", "error"]);
    for (y, err) in rows.into_iter().flatten() {
        t.push(vec![y.into(), err.into()]);
    }
    Ok(t)
}

pub fn theorem4(a: &Theorem4Args) -> Result<Table> {
    let m = matrix(a.mat.as_ref())?;
    let g = GroupElement::from_torus(&a.xi.0, m)?;
    let k = g.k();
    let p = MajorantParams::new(a.m.unwrap_or(k as u32 + 2), k, a.qmax, a.dmax)?;
    nonempty(&a.t.0, "--t")?;
    let bounds = over(&a.t.0, |&t| theorem4_rhs(&g, t, &p))?;
    let mut t = Table::new(&["T", "term0", "series", "tail", "Dmax"]);
    for (tv, b) in a.t.0.iter().zip(bounds) {
        t.push(vec![(*tv).into(), b.term0.into(), b.series.into(), b.tail.into(), b.d_max.into()]);
    }
    Ok(t)
}

pub fn sweep(a: &SweepArgs, seed: u64) -> Result<Table> {
    if a.samples == 0 {
        return Err(invalid("--samples must be positive"));
    }
    let p = MajorantParams::new(a.m.unwrap_or(a.k as u32 + 2), a.k, a.qmax, None)?;
    let samples: Vec<u64> = (0..a.samples as u64).collect();
    match a.kind {
        SweepKind::Theorem4 => {
            if a.t.0.len() < 3 {
                return Err(invalid("the theorem4 sweep needs at least 3 values of T"));
            }
            let fits = over(&samples, |&i| {
                let mut r = rng::stream(seed, i);
                let m = rng::bounded_matrix(&mut r);
                let g = GroupElement::from_torus(&rng::torus_point(&mut r, a.k), m)?;
                let pts = a
                    .t
                    .0
                    .iter()
                    .map(|&t| Ok((t, theorem4_rhs(&g, t, &p)?.value())))
                    .collect::<Result<Vec<_>>>()?;
                decay_fit(&pts)
            })?;
            let mut t = Table::new(&["sample", "slope", "intercept", "residual"]);
            for (i, fit) in samples.iter().zip(fits) {
                t.push(vec![(*i).into(), fit.slope.into(), fit.intercept.into(), fit.residual.into()]);
            }
            Ok(t)
        }
        SweepKind::Delta => {
            nonempty(&a.y.0, "--y")?;
            let points: Vec<Vec<Row>> = samples
                .iter()
                .map(|&i| rng::torus_point(&mut rng::stream(seed, i), a.k))
                .collect();
            let stats = over(&a.y.0, |&y| {
                let mut sum = 0.0;
                let mut sum_sq = 0.0;
                let mut tail: f64 = 0.0;
                for xi in &points {
                    let d = delta_m(&p, y, xi)?;
                    sum += d.value;
                    sum_sq += d.value * d.value;
                    tail = tail.max(d.tail_bound);
                }
                let n = points.len() as f64;
                let mean = sum / n;
                let var = if points.len() > 1 {
                    ((sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0)
                } else {
                    0.0
                };
                Ok((mean, (var / n).sqrt(), tail))
            })?;
            let mut t = Table::new(&["y", "mean", "std_error", "tail", "samples"]);
            for (y, (mean, se, tail)) in a.y.0.iter().zip(stats) {
                t.push(vec![(*y).into(), mean.into(), se.into(), tail.into(), Cell::from(points.len())]);
            }
            Ok(t)
        }
    }
}
