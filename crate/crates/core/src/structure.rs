//! Module structure of `F(m_L)`: pi-regularity, the maps induced by `[pi]`
//! on graded pieces, bases and spanning sets, valuation formulas for the
//! logarithm, and exact linear algebra over `Q_p` for span membership.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use serde::Serialize;

use crate::element::FieldElement;
use crate::error::{Error, Result};
use crate::field::LocalField;
use crate::fpoly::ResidueField;
use crate::lubin_tate::{gamma, ell_for, LtContext};
use crate::padic::PadicScalar;

/// `v_L(pi)` for a context over `Q_p` inside `L`.
pub fn v_pi(field: &LocalField, ctx: &LtContext) -> i64 {
    field.e() as i64 * crate::padic::vp_int(ctx.p(), ctx.pi_int())
}

#[derive(Clone, Debug)]
pub struct RegularityReport {
    pub is_regular: bool,
    /// Whether `(q - 1)` divides `v_L(pi)`.
    pub ratio_integral: bool,
    /// The unit `epsilon` with `pi = epsilon varpi^(v_L(pi))`.
    pub epsilon: FieldElement,
    /// Residue class `u != 0` with `u^q + epsilon u = 0`, if any.
    pub witness: Option<Vec<u64>>,
}

/// Regularity test: `L` has nontrivial `[pi]`-torsion exactly when
/// `(q - 1) | v_L(pi)` and `u^q + epsilon u = 0` has a nonzero solution in
/// the residue field.
pub fn regularity_check(field: &LocalField, ctx: &LtContext) -> Result<RegularityReport> {
    regularity_with_uniformizer(field, ctx, &FieldElement::uniformizer(field, field.default_precision() + 8))
}

/// As [`regularity_check`], with `epsilon` computed from a caller-chosen
/// uniformiser.
pub fn regularity_with_uniformizer(
    field: &LocalField,
    ctx: &LtContext,
    varpi: &FieldElement,
) -> Result<RegularityReport> {
    if varpi.valuation()? != 1 {
        return Err(Error::WrongLevel {
            expected: 1,
            found: varpi.valuation()?,
        });
    }
    let q = ctx.q();
    let vpi = v_pi(field, ctx);
    let prec = varpi.precision();
    let pi = FieldElement::from_scalar(field, &ctx.pi().with_precision(prec));
    let epsilon = pi.div(&varpi.pow(vpi as u64))?;
    let ratio_integral = vpi % (q as i64 - 1) == 0;
    let mut witness = None;
    if ratio_integral {
        let eps = epsilon.residue_decompose(0)?;
        let kf = field.residue_field();
        for u in kf.elements().skip(1) {
            let lhs = kf.add(&kf.pow(&u, q as u128), &kf.mul(&eps, &u));
            if kf.is_zero(&lhs) {
                witness = Some(u);
                break;
            }
        }
    }
    Ok(RegularityReport {
        is_regular: witness.is_none(),
        ratio_integral,
        epsilon,
        witness,
    })
}

/// Target level of the map induced by `[pi]` on level `i`.
pub fn pi_level(q: u64, vpi: i64, i: i64) -> i64 {
    if i * (q as i64 - 1) <= vpi {
        q as i64 * i
    } else {
        i + vpi
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InducedMapReport {
    pub level: i64,
    pub target_level: i64,
    pub classes: u64,
    pub lands_in_target: bool,
    pub additive: bool,
    pub well_defined: bool,
    pub injective: bool,
    pub surjective: bool,
    pub kernel_witness: Option<Vec<u64>>,
}

impl InducedMapReport {
    pub fn is_isomorphism(&self) -> bool {
        self.lands_in_target && self.additive && self.well_defined && self.injective && self.surjective
    }
}

fn residue_at(y: &FieldElement, level: i64, f: usize) -> Result<Option<Vec<u64>>> {
    match y.try_valuation() {
        None if y.precision() > level => Ok(Some(vec![0; f])),
        None => Err(Error::exhausted("image known only below the target level")),
        Some(v) if v > level => Ok(Some(vec![0; f])),
        Some(v) if v == level => Ok(Some(y.residue_decompose(level)?)),
        Some(_) => Ok(None),
    }
}

/// Enumerates `F(m^i) / F(m^(i+1))` and tabulates the induced map of `[pi]`.
pub fn induced_map_check<R: Rng + ?Sized>(
    field: &LocalField,
    ctx: &LtContext,
    i: i64,
    rng: &mut R,
) -> Result<InducedMapReport> {
    if i < 1 {
        return Err(Error::Parse("level must be at least 1".into()));
    }
    let q = ctx.q();
    let f = field.f();
    let kf = field.residue_field();
    let vpi = v_pi(field, ctx);
    let target = pi_level(q, vpi, i);
    let prec = (target + 4).max(field.default_precision().min(target + 16));
    let mut table: BTreeMap<Vec<u64>, Vec<u64>> = BTreeMap::new();
    let mut lands = true;
    let mut well_defined = true;
    for c in kf.elements() {
        let x = FieldElement::lift_residue(field, &c, i, prec)?;
        let y = ctx.apply_pi(&x)?;
        let img = residue_at(&y, target, f)?;
        let img = match img {
            Some(r) => r,
            None => {
                lands = false;
                vec![0; f]
            }
        };
        // a perturbation deeper than level i must not change the class
        for _ in 0..2 {
            let delta = FieldElement::random_integral(field, rng, prec) * FieldElement::uniformizer(field, prec).pow((i + 1) as u64);
            let y2 = ctx.apply_pi(&(&x + &delta))?;
            if residue_at(&y2, target, f)? != Some(img.clone()) {
                well_defined = false;
            }
        }
        table.insert(c, img);
    }
    let additive = kf.elements().all(|a| {
        kf.elements().all(|b| {
            let s = kf.add(&a, &b);
            table[&s] == kf.add(&table[&a], &table[&b])
        })
    });
    let kernel_witness = table
        .iter()
        .find(|(c, img)| !kf.is_zero(c) && kf.is_zero(img))
        .map(|(c, _)| c.clone());
    let image: std::collections::BTreeSet<&Vec<u64>> = table.values().collect();
    Ok(InducedMapReport {
        level: i,
        target_level: target,
        classes: kf.size(),
        lands_in_target: lands,
        additive,
        well_defined,
        injective: kernel_witness.is_none(),
        surjective: image.len() as u64 == kf.size(),
        kernel_witness,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GeneratorKind {
    /// Basis of `F(m_L)` for regular `L`.
    BL,
    /// Spanning set of `F(m_L)` when `L` contains `[pi]`-torsion.
    SL,
    /// Spanning set `S_n` of `F(m)` of the level-`n` torsion field.
    Sn,
    /// Basis `B_n` of the log image of the level-`n` torsion field.
    Bn,
    /// Images under log of a basis or spanning set.
    Log,
}

/// A generator `zeta_i varpi^j` (or `lambda^j`) with its level and residue index.
#[derive(Clone, Debug)]
pub struct Generator {
    pub element: FieldElement,
    pub level: i64,
    pub index: usize,
}

#[derive(Clone, Debug)]
pub struct GeneratingSet {
    pub kind: GeneratorKind,
    pub generators: Vec<Generator>,
    pub claimed_rank: usize,
}

impl GeneratingSet {
    pub fn elements(&self) -> Vec<FieldElement> {
        self.generators.iter().map(|g| g.element.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }
}

fn level_generators(field: &LocalField, levels: &[i64], prec: i64) -> Result<Vec<Generator>> {
    let zetas = FieldElement::residue_basis(field, prec + 2)?;
    let w = FieldElement::uniformizer(field, prec + 2);
    let mut out = Vec::new();
    for &j in levels {
        let wj = w.pow(j as u64);
        for (i, z) in zetas.iter().enumerate() {
            out.push(Generator {
                element: (z * &wj).with_precision(prec),
                level: j,
                index: i,
            });
        }
    }
    Ok(out)
}

/// Levels `1 <= j <= q v_L(pi) / (q - 1)` with `q` not dividing `j`.
pub fn basis_levels(q: u64, vpi: i64) -> Vec<i64> {
    let top = q as i64 * vpi / (q as i64 - 1);
    (1..=top).filter(|j| j % q as i64 != 0).collect()
}

/// Levels `1 <= j < q v_L(pi) / (q - 1)` with `q` not dividing `j`, plus the
/// top level `q v_L(pi) / (q - 1)` itself.
pub fn spanning_levels(q: u64, vpi: i64) -> Vec<i64> {
    let num = q as i64 * vpi;
    let den = q as i64 - 1;
    let mut levels: Vec<i64> = (1..).take_while(|j| j * den < num).filter(|j| j % q as i64 != 0).collect();
    if num % den == 0 {
        levels.push(num / den);
    }
    levels
}

/// `B_L = {zeta_i varpi^j}`, an `O_K`-basis of `F(m_L)` for regular `L`.
pub fn basis_bl(field: &LocalField, ctx: &LtContext) -> Result<GeneratingSet> {
    if !regularity_check(field, ctx)?.is_regular {
        return Err(Error::NotRegular);
    }
    let levels = basis_levels(ctx.q(), v_pi(field, ctx));
    let gens = level_generators(field, &levels, field.default_precision())?;
    Ok(GeneratingSet {
        kind: GeneratorKind::BL,
        claimed_rank: field.degree(),
        generators: gens,
    })
}

/// `log(B_L)`, a basis of `log(F(m_L))` for regular `L`.
pub fn log_basis(field: &LocalField, ctx: &LtContext) -> Result<GeneratingSet> {
    let bl = basis_bl(field, ctx)?;
    log_of(ctx, &bl, GeneratorKind::Log)
}

fn log_of(ctx: &LtContext, set: &GeneratingSet, kind: GeneratorKind) -> Result<GeneratingSet> {
    let generators = set
        .generators
        .iter()
        .map(|g| {
            Ok(Generator {
                element: ctx.eval_log(&g.element)?,
                level: g.level,
                index: g.index,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GeneratingSet {
        kind,
        generators,
        claimed_rank: set.claimed_rank,
    })
}

/// `S_L`, spanning `F(m_L)` when `L` contains nontrivial `[pi]`-torsion.
pub fn spanning_sl(field: &LocalField, ctx: &LtContext) -> Result<GeneratingSet> {
    if regularity_check(field, ctx)?.is_regular {
        return Err(Error::RegularFieldGiven);
    }
    let levels = spanning_levels(ctx.q(), v_pi(field, ctx));
    let gens = level_generators(field, &levels, field.default_precision())?;
    Ok(GeneratingSet {
        kind: GeneratorKind::SL,
        claimed_rank: field.degree(),
        generators: gens,
    })
}

/// `S_n` and `B_n` for the level-`n` torsion field.
pub fn lt_sets(ctx: &LtContext, n: u32, prec: i64) -> Result<(crate::lubin_tate::TorsionField, GeneratingSet, GeneratingSet)> {
    let tf = ctx.torsion_field(n, prec)?;
    let q = ctx.q() as i64;
    let qn = q.pow(n);
    let mut levels: Vec<i64> = (1..qn).filter(|j| j % q != 0).collect();
    levels.push(qn);
    let gens = levels
        .iter()
        .map(|&j| Generator {
            element: tf.lambda.pow(j as u64),
            level: j,
            index: 0,
        })
        .collect::<Vec<_>>();
    let sn = GeneratingSet {
        kind: GeneratorKind::Sn,
        claimed_rank: tf.field.degree(),
        generators: gens,
    };
    let without_first = GeneratingSet {
        kind: GeneratorKind::Sn,
        claimed_rank: tf.field.degree(),
        generators: sn.generators.iter().filter(|g| g.level != 1).cloned().collect(),
    };
    let bn = log_of(ctx, &without_first, GeneratorKind::Bn)?;
    Ok((tf, sn, bn))
}

// ---- linear algebra over Q_p ------------------------------------------

/// Coordinates of `x` on the `Q_p`-basis `zeta^i varpi^j`.
pub fn coordinates(x: &FieldElement) -> Vec<PadicScalar> {
    let (f, e) = (x.field().f(), x.field().e());
    let mut out = Vec::with_capacity(f * e);
    for j in 0..e {
        for i in 0..f {
            out.push(x.coeff(i, j));
        }
    }
    out
}

/// Reduced echelon data for a coordinate matrix.
struct Elimination {
    /// Augmented rows after elimination.
    rows: Vec<Vec<PadicScalar>>,
    /// `pivots[c] = r`: column `c` is pivoted in row `r`.
    pivots: Vec<usize>,
    det: PadicScalar,
}

fn eliminate(cols: &[Vec<PadicScalar>], rhs: Option<&[PadicScalar]>, p: u64) -> Result<Elimination> {
    let n = cols.first().map(|c| c.len()).unwrap_or(0);
    let k = cols.len();
    let width = k + usize::from(rhs.is_some());
    let mut rows: Vec<Vec<PadicScalar>> = (0..n)
        .map(|r| {
            let mut row: Vec<PadicScalar> = cols.iter().map(|c| c[r].clone()).collect();
            if let Some(t) = rhs {
                row.push(t[r].clone());
            }
            row
        })
        .collect();
    let mut used = vec![false; n];
    let mut pivots = Vec::with_capacity(k);
    let mut det: Option<PadicScalar> = None;
    for c in 0..k {
        let pivot = (0..n)
            .filter(|&r| !used[r] && !rows[r][c].is_zero())
            .min_by_key(|&r| rows[r][c].valuation().unwrap());
        let r = pivot.ok_or(Error::RankDeficient)?;
        used[r] = true;
        pivots.push(r);
        det = Some(match det {
            None => rows[r][c].clone(),
            Some(d) => &d * &rows[r][c],
        });
        let inv = rows[r][c].inv()?;
        let prow: Vec<PadicScalar> = rows[r].iter().map(|x| x * &inv).collect();
        for (rr, row) in rows.iter_mut().enumerate() {
            if rr == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for cc in 0..width {
                let sub = &factor * &prow[cc];
                row[cc] = &row[cc] - &sub;
            }
        }
        rows[r] = prow;
    }
    let det = det.unwrap_or_else(|| PadicScalar::one(p, 1));
    Ok(Elimination { rows, pivots, det })
}

/// Coefficients `c` in `Q_p` with `target = sum c_k gens_k`.
pub fn coords_in_span(target: &FieldElement, gens: &[FieldElement]) -> Result<Vec<PadicScalar>> {
    let p = target.field().p();
    if gens.is_empty() {
        return if target.is_zero() { Ok(Vec::new()) } else { Err(Error::NotInSpan) };
    }
    let cols: Vec<Vec<PadicScalar>> = gens.iter().map(coordinates).collect();
    let t = coordinates(target);
    let el = eliminate(&cols, Some(&t), p)?;
    let k = gens.len();
    for (r, row) in el.rows.iter().enumerate() {
        if !el.pivots.contains(&r) && !row[k].is_zero() {
            return Err(Error::NotInSpan);
        }
    }
    Ok(el.pivots.iter().map(|&r| el.rows[r][k].clone()).collect())
}

/// Determinant (up to sign) of the square coordinate matrix of `gens`.
pub fn coordinate_determinant(gens: &[FieldElement]) -> Result<PadicScalar> {
    let p = gens.first().ok_or(Error::RankDeficient)?.field().p();
    let cols: Vec<Vec<PadicScalar>> = gens.iter().map(coordinates).collect();
    if cols[0].len() != cols.len() {
        return Err(Error::Mismatch("coordinate matrix is not square".into()));
    }
    Ok(eliminate(&cols, None, p)?.det)
}

// ---- valuations of log ------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Equality,
    AtLeast,
}

#[derive(Clone, Debug)]
pub struct ValuationCertificate {
    pub x: FieldElement,
    pub ell: i64,
    pub predicted: i64,
    /// `None` when `log(x)` vanishes at working precision.
    pub observed: Option<i64>,
    pub observed_precision: i64,
    pub relation: Relation,
    /// Whether the relation demanded by the field holds.
    pub holds: bool,
}

/// `v_L(log x)` against `q^ell v_L(x) - ell v_L(pi)`.
pub fn valuation_certificate(
    field: &LocalField,
    ctx: &LtContext,
    x: &FieldElement,
    regular: bool,
) -> Result<ValuationCertificate> {
    let v = x.valuation()?;
    if v < 1 {
        return Err(Error::OutsideMaximalIdeal);
    }
    let q = ctx.q() as i64;
    let vpi = v_pi(field, ctx);
    let ell = ell_for(ctx.q(), v, vpi);
    let predicted = q.pow(ell as u32) * v - ell * vpi;
    let log = ctx.eval_log(x)?;
    let observed = log.try_valuation();
    let relation = if observed == Some(predicted) {
        Relation::Equality
    } else {
        Relation::AtLeast
    };
    let holds = match observed {
        Some(o) if regular => o == predicted,
        Some(o) => o >= predicted,
        // vanishing at precision: consistent with ">=" only
        None => !regular && log.precision() >= predicted,
    };
    Ok(ValuationCertificate {
        x: x.clone(),
        ell,
        predicted,
        observed,
        observed_precision: log.precision(),
        relation,
        holds,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MinValuation {
    pub gamma: Option<i64>,
    pub value: i64,
    pub method: &'static str,
    /// `v_L(log varpi)`.
    pub log_uniformizer: Option<i64>,
    /// Minimum of `v_L` over the log images of the generating set.
    pub generator_minimum: i64,
}

/// Minimal valuation on `log(F(m_L))`.
pub fn min_valuation(field: &LocalField, ctx: &LtContext) -> Result<MinValuation> {
    let q = ctx.q();
    let vpi = v_pi(field, ctx);
    if vpi < q as i64 - 1 {
        return Err(Error::RatioTooSmall);
    }
    let reg = regularity_check(field, ctx)?;
    let w = FieldElement::uniformizer(field, field.default_precision());
    let log_w = ctx.eval_log(&w)?.try_valuation();
    let set = if reg.is_regular {
        basis_bl(field, ctx)?
    } else {
        spanning_sl(field, ctx)?
    };
    let logs = log_of(ctx, &set, GeneratorKind::Log)?;
    let generator_minimum = logs
        .generators
        .iter()
        .filter_map(|g| g.element.try_valuation())
        .min()
        .ok_or_else(|| Error::exhausted("every generator log vanished"))?;
    if reg.is_regular {
        let g = gamma(q, vpi);
        let value = (q as i64).pow(g as u32) - g * vpi;
        Ok(MinValuation {
            gamma: Some(g),
            value,
            method: "formula",
            log_uniformizer: log_w,
            generator_minimum,
        })
    } else {
        Ok(MinValuation {
            gamma: None,
            value: generator_minimum,
            method: "sweep",
            log_uniformizer: log_w,
            generator_minimum,
        })
    }
}

// ---- greedy expansion in generators -----------------------------------

/// How a level is reached: `pi_steps` applications of `[pi]` to the
/// generators at `source` level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Route {
    source: i64,
    pi_steps: u32,
}

#[derive(Clone, Debug)]
pub struct ExpansionStep {
    pub level: i64,
    pub generator: usize,
    pub pi_steps: u32,
    pub digit: u64,
}

#[derive(Clone, Debug)]
pub struct Expansion {
    /// Coefficient `a_k` of each generator, a truncated `pi`-adic integer.
    pub digits: Vec<PadicScalar>,
    pub steps: Vec<ExpansionStep>,
    /// Precision to which `x = sum_F [a_k](g_k)` was established.
    pub precision: i64,
}

/// All routes to each level up to `max_level`, ordered by number of `[pi]`
/// steps, then source level.
fn coverage(q: u64, vpi: i64, sources: &[i64], max_level: i64) -> BTreeMap<i64, Vec<Route>> {
    let mut table: BTreeMap<i64, Vec<Route>> = BTreeMap::new();
    let mut queue: VecDeque<(i64, Route)> = sources
        .iter()
        .map(|&s| (s, Route { source: s, pi_steps: 0 }))
        .collect();
    while let Some((lvl, route)) = queue.pop_front() {
        if lvl > max_level {
            continue;
        }
        table.entry(lvl).or_default().push(route);
        let next = pi_level(q, vpi, lvl);
        queue.push_back((
            next,
            Route {
                source: route.source,
                pi_steps: route.pi_steps + 1,
            },
        ));
    }
    for routes in table.values_mut() {
        routes.sort_by_key(|r| (r.pi_steps, r.source));
        routes.dedup();
    }
    table
}

/// Solves `sum a_k r_k = c` over `F_p` for residue vectors; `None` when the
/// `r_k` do not span.
fn solve_residues(kf: &ResidueField, cols: &[Vec<u64>], c: &[u64]) -> Option<Vec<u64>> {
    let p = kf.p;
    let f = c.len();
    let k = cols.len();
    let mut rows: Vec<Vec<u64>> = (0..f)
        .map(|r| {
            let mut row: Vec<u64> = cols.iter().map(|col| col[r]).collect();
            row.push(c[r]);
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r0 = 0;
    for col in 0..k {
        let Some(pr) = (r0..f).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(r0, pr);
        let inv = crate::fpoly::inv_mod_p(p, rows[r0][col]);
        for x in rows[r0].iter_mut() {
            *x = *x * inv % p;
        }
        for r in 0..f {
            if r != r0 && rows[r][col] != 0 {
                let fct = rows[r][col];
                for cc in 0..=k {
                    rows[r][cc] = (rows[r][cc] + p * p - fct * rows[r0][cc] % p) % p;
                }
            }
        }
        pivots.push((r0, col));
        r0 += 1;
    }
    if pivots.len() < f {
        return None;
    }
    let mut a = vec![0u64; k];
    for (r, col) in pivots {
        a[col] = rows[r][k];
    }
    Some(a)
}

/// Greedy `F`-adic expansion `x = sum_F [a_k](g_k)`.
pub fn expand_in_generators(x: &FieldElement, gens: &GeneratingSet, ctx: &LtContext) -> Result<Expansion> {
    let field = x.field();
    let q = ctx.q();
    let p = ctx.p();
    let vpi = v_pi(field, ctx);
    let prec = x.precision();
    let kf = field.residue_field();
    let mut sources: Vec<i64> = gens.generators.iter().map(|g| g.level).collect();
    sources.sort_unstable();
    sources.dedup();
    let table = coverage(q, vpi, &sources, prec);
    let pi = ctx.pi();
    let mut digits = vec![PadicScalar::zero(p, ctx.precision()); gens.len()];
    let mut steps = Vec::new();
    let mut r = x.clone();
    let mut contributions: Vec<FieldElement> = Vec::new();
    let mut guard = 0;
    while !r.is_zero() {
        guard += 1;
        if guard > 64 * prec.max(1) {
            return Err(Error::Internal("expansion did not terminate".into()));
        }
        let v = r.valuation()?;
        let routes = table.get(&v).ok_or(Error::StuckLevel { level: v })?;
        let c = r.residue_decompose(v)?;
        let mut done = false;
        for route in routes {
            let members: Vec<usize> = gens
                .generators
                .iter()
                .enumerate()
                .filter(|(_, g)| g.level == route.source)
                .map(|(k, _)| k)
                .collect();
            let images = members
                .iter()
                .map(|&k| ctx.apply_pi_n(&gens.generators[k].element, route.pi_steps))
                .collect::<Result<Vec<_>>>()?;
            let res = images
                .iter()
                .map(|h| Ok(residue_at(h, v, field.f())?.unwrap_or_else(|| vec![0; field.f()])))
                .collect::<Result<Vec<_>>>()?;
            let Some(a) = solve_residues(kf, &res, &c) else {
                continue;
            };
            for ((&k, h), &ak) in members.iter().zip(&images).zip(&a) {
                if ak == 0 {
                    continue;
                }
                let term = ctx.apply_endo(&PadicScalar::from_i64(p, ak as i64, ctx.inner_precision()), h)?;
                r = ctx.sub_points(&r, &term)?;
                contributions.push(term);
                let dig = &PadicScalar::from_i64(p, ak as i64, ctx.precision()) * &pi.pow(route.pi_steps);
                digits[k] = &digits[k] + &dig.with_precision(ctx.precision());
                steps.push(ExpansionStep {
                    level: v,
                    generator: k,
                    pi_steps: route.pi_steps,
                    digit: ak,
                });
            }
            done = true;
            break;
        }
        if !done {
            return Err(Error::StuckLevel { level: v });
        }
        if r.try_valuation().is_some_and(|nv| nv <= v) {
            return Err(Error::Internal("remainder valuation did not increase".into()));
        }
    }
    // recombine from scratch
    let mut sum = FieldElement::zero(field, prec);
    for t in &contributions {
        sum = if sum.is_zero() { t.with_precision(sum.precision()) } else { ctx.add_points(&sum, t)? };
    }
    let diff = &sum - x;
    if !diff.is_zero() {
        return Err(Error::Internal("expansion does not recombine".into()));
    }
    Ok(Expansion {
        digits,
        steps,
        precision: diff.precision().min(r.precision()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_sets() {
        assert_eq!(basis_levels(3, 4), vec![1, 2, 4, 5]);
        assert_eq!(basis_levels(3, 1), vec![1]);
        assert_eq!(basis_levels(5, 6), vec![1, 2, 3, 4, 6, 7]);
        // Q_3(zeta_3): v(pi) = 2, top level 3
        assert_eq!(spanning_levels(3, 2), vec![1, 2, 3]);
        assert_eq!(spanning_levels(2, 1), vec![1, 2]);
    }

    #[test]
    fn pi_levels() {
        assert_eq!(pi_level(3, 4, 1), 3);
        assert_eq!(pi_level(3, 4, 2), 6);
        assert_eq!(pi_level(3, 4, 3), 7);
    }

    #[test]
    fn residue_solver() {
        let kf = ResidueField::new(3, vec![1, 0, 1]);
        let cols = vec![vec![1, 0], vec![1, 1]];
        assert_eq!(solve_residues(&kf, &cols, &[2, 1]), Some(vec![1, 1]));
        assert_eq!(solve_residues(&kf, &[vec![1, 0], vec![2, 0]], &[0, 1]), None);
    }
}
