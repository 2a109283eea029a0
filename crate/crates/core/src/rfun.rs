//! Rational functions as a sparse Laurent polynomial plus off-origin poles.
//!
//! Pole terms are stored in groups sharing one sparse Laurent numerator. A
//! pole group `N(z) * sum_p c_p / (z - p)` holds poles from one side of the
//! unit circle, with `N` restricted to exponents `<= 0` for inner poles and
//! `>= 0` for outer ones. A quotient group
//! `sum_p c_p (N(z) - N(p)) / (z - p)` is a Laurent polynomial kept in closed
//! form, with `N` carrying exponents `>= 1` (a minus function) or `<= -1` (a
//! plus function). Every group is then a pure plus or pure minus function and
//! the additive split is a partition.
//!
//! Expanding either kind of group into coefficients would cost work
//! proportional to the crack length and, for inner poles, powers `p^{-L}` that
//! overflow; the closed forms avoid both. Groups on one side are recompressed
//! into a low-rank form once they accumulate.

use std::collections::BTreeSet;
use std::f64::consts::LN_10;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const POLE_MERGE_TOL: f64 = 1e-8;
pub const PRUNE_TOL: f64 = 1e-14;
pub const UNIT_CIRCLE_GUARD: f64 = 1e-6;
/// Groups of one kind allowed on one side before recompression.
const MAX_GROUPS: usize = 4;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Sparse Laurent polynomial `sum_k c_k z^k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LaurentPoly {
    terms: Vec<(i64, Complex64)>,
}

fn step_pow(x: Complex64, d: i64) -> Complex64 {
    match d {
        0 => ONE,
        1 => x,
        _ => x.powi(d as i32),
    }
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(k: i64, c: Complex64) -> Self {
        Self::from_terms(vec![(k, c)])
    }

    /// Dense coefficients starting at exponent `lo`.
    pub fn from_coeffs(lo: i64, coeffs: Vec<Complex64>) -> Self {
        Self::from_terms(coeffs.into_iter().enumerate().map(|(i, c)| (lo + i as i64, c)).collect())
    }

    /// Arbitrary `(exponent, coefficient)` pairs; repeated exponents are summed.
    pub fn from_terms(mut terms: Vec<(i64, Complex64)>) -> Self {
        terms.sort_by_key(|t| t.0);
        let mut out: Vec<(i64, Complex64)> = Vec::with_capacity(terms.len());
        for (k, c) in terms {
            match out.last_mut() {
                Some(last) if last.0 == k => last.1 += c,
                _ => out.push((k, c)),
            }
        }
        out.retain(|t| t.1.norm() >= PRUNE_TOL);
        Self { terms: out }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of stored terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Lowest exponent (0 for the zero polynomial).
    pub fn lo(&self) -> i64 {
        self.terms.first().map_or(0, |t| t.0)
    }

    /// Highest exponent (-1 for the zero polynomial).
    pub fn hi(&self) -> i64 {
        self.terms.last().map_or(-1, |t| t.0)
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        self.terms.binary_search_by_key(&k, |t| t.0).map_or(ZERO, |i| self.terms[i].1)
    }

    /// Nonzero `(exponent, coefficient)` pairs in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.terms.iter().copied()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.terms.iter().chain(&other.terms).copied().collect())
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self::from_terms(self.terms.iter().map(|&(k, c)| (k, c * a)).collect())
    }

    /// `z^s` times the polynomial.
    pub fn shift(&self, s: i64) -> Self {
        Self { terms: self.terms.iter().map(|&(k, c)| (k + s, c)).collect() }
    }

    /// Parts with exponents `< cut` and `>= cut`.
    pub fn split_at(&self, cut: i64) -> (Self, Self) {
        let idx = self.terms.partition_point(|t| t.0 < cut);
        (Self { terms: self.terms[..idx].to_vec() }, Self { terms: self.terms[idx..].to_vec() })
    }

    /// Evaluate with powers of `z` for nonnegative and of `1/z` for negative
    /// exponents.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let idx = self.terms.partition_point(|t| t.0 < 0);
        let (neg, nonneg) = self.terms.split_at(idx);
        let mut sum = ZERO;
        let (mut pow, mut cur) = (ONE, 0);
        for &(k, c) in nonneg {
            pow *= step_pow(z, k - cur);
            cur = k;
            sum += c * pow;
        }
        if neg.is_empty() {
            return sum;
        }
        let w = z.inv();
        let (mut pow, mut cur) = (ONE, 0);
        for &(k, c) in neg.iter().rev() {
            pow *= step_pow(w, -k - cur);
            cur = -k;
            sum += c * pow;
        }
        sum
    }

    /// Whether every `|p^k|` stays below 10, so that `self.eval(p)` is safe.
    fn bounded_at(&self, p: Complex64) -> bool {
        let lr = p.norm().ln();
        self.terms.iter().all(|&(k, _)| k as f64 * lr <= LN_10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// `N(z) sum c / (z - p)`.
    Pole,
    /// `sum c (N(z) - N(p)) / (z - p)`.
    Quotient,
}

/// `(pole, coefficient, N(pole))`; the last entry is unused for pole groups.
type Entry = (Complex64, Complex64, Complex64);

#[derive(Debug, Clone, PartialEq)]
struct Group {
    numerator: Arc<LaurentPoly>,
    entries: Vec<Entry>,
    kind: Kind,
    plus: bool,
}

impl Group {
    fn eval(&self, z: Complex64) -> Complex64 {
        let n = self.numerator.eval(z);
        match self.kind {
            Kind::Pole => n * self.entries.iter().fold(ZERO, |acc, (p, c, _)| acc + c / (z - p)),
            Kind::Quotient => self.entries.iter().fold(ZERO, |acc, (p, c, w)| acc + c * (n - w) / (z - p)),
        }
    }
}

fn is_inner(p: Complex64) -> bool {
    p.norm() < 1.0
}

fn merge_pole(list: &mut Vec<(Complex64, Complex64)>, p: Complex64, c: Complex64) {
    if c == ZERO {
        return;
    }
    match list.iter_mut().find(|(q, _)| (q - p).norm() < POLE_MERGE_TOL) {
        Some(entry) => entry.1 += c,
        None => list.push((p, c)),
    }
}

fn merge_entry(list: &mut Vec<Entry>, (p, c, w): Entry) {
    if c == ZERO {
        return;
    }
    match list.iter_mut().find(|(q, _, _)| (q - p).norm() < POLE_MERGE_TOL) {
        Some(entry) => entry.1 += c,
        None => list.push((p, c, w)),
    }
}

/// Sum of a sparse Laurent polynomial, simple poles `r / (z - p)` and groups.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LaurentPF {
    laurent: LaurentPoly,
    simple: Vec<(Complex64, Complex64)>,
    groups: Vec<Group>,
}

impl LaurentPF {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        Self::from_laurent(LaurentPoly::monomial(0, c))
    }

    pub fn monomial(k: i64, c: Complex64) -> Self {
        Self::from_laurent(LaurentPoly::monomial(k, c))
    }

    pub fn from_laurent(laurent: LaurentPoly) -> Self {
        Self { laurent, ..Self::default() }
    }

    /// `r / (z - p)`.
    pub fn simple_pole(p: Complex64, r: Complex64) -> Self {
        let mut f = Self::zero();
        merge_pole(&mut f.simple, p, r);
        f.finish();
        f
    }

    /// `numerator(z) / (z - p)`.
    pub fn pole_term(p: Complex64, numerator: LaurentPoly) -> Self {
        let mut f = Self::zero();
        f.push_raw(&Arc::new(numerator), vec![(p, ONE)]);
        f.finish();
        f
    }

    /// The Laurent polynomial `(numerator(z) - numerator(p)) / (z - p)`.
    ///
    /// `p` may lie on the unit circle. Fails if some `|p^k|` over the
    /// numerator exponents exceeds 10.
    pub fn difference_quotient(p: Complex64, numerator: &LaurentPoly) -> Result<Self> {
        if p.norm() < POLE_MERGE_TOL || !numerator.bounded_at(p) {
            return Err(Error::InvalidParameter(format!(
                "difference quotient at {p} would need unbounded powers of the node"
            )));
        }
        let mut f = Self::zero();
        f.push_quotient(numerator, &[(p, ONE)]);
        f.finish();
        Ok(f)
    }

    pub fn laurent(&self) -> &LaurentPoly {
        &self.laurent
    }

    /// Laurent coefficient of `z^k`, counting quotient groups but not the
    /// principal parts of pole groups.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let mut out = self.laurent.coeff(k);
        for g in self.groups.iter().filter(|g| g.kind == Kind::Quotient) {
            for &(p, c, _) in &g.entries {
                for (e, a) in g.numerator.terms() {
                    if e >= 1 && (0..e).contains(&k) {
                        out += c * a * p.powi((e - 1 - k) as i32);
                    } else if e <= -1 && (e..0).contains(&k) {
                        out -= c * a * p.powi((-1 - (k - e)) as i32);
                    }
                }
            }
        }
        out
    }

    /// Distinct poles, excluding the removable nodes of quotient groups.
    pub fn poles(&self) -> Vec<Complex64> {
        let mut out: Vec<(Complex64, Complex64)> = Vec::new();
        for p in self.pole_iter() {
            merge_pole(&mut out, p, ONE);
        }
        out.into_iter().map(|(p, _)| p).collect()
    }

    fn pole_iter(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.simple.iter().map(|t| t.0).chain(
            self.groups.iter().filter(|g| g.kind == Kind::Pole).flat_map(|g| g.entries.iter().map(|e| e.0)),
        )
    }

    /// Residue at the pole within `POLE_MERGE_TOL` of `p`, if any.
    pub fn residue_at(&self, p: Complex64) -> Option<Complex64> {
        let near = |q: &Complex64| (q - p).norm() < POLE_MERGE_TOL;
        let mut found = false;
        let mut res = ZERO;
        for (q, r) in &self.simple {
            if near(q) {
                found = true;
                res += r;
            }
        }
        for g in self.groups.iter().filter(|g| g.kind == Kind::Pole) {
            for (q, c, _) in &g.entries {
                if near(q) {
                    found = true;
                    res += c * g.numerator.eval(*q);
                }
            }
        }
        found.then_some(res)
    }

    pub fn is_zero(&self) -> bool {
        self.laurent.is_zero() && self.simple.is_empty() && self.groups.is_empty()
    }

    /// Number of stored coefficients, a measure of evaluation cost.
    pub fn size(&self) -> usize {
        self.laurent.len()
            + self.simple.len()
            + self.groups.iter().map(|g| g.numerator.len() + g.entries.len()).sum::<usize>()
    }

    /// Number of shared-numerator groups.
    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    fn add_to_group(&mut self, numerator: Arc<LaurentPoly>, kind: Kind, plus: bool, entries: impl IntoIterator<Item = Entry>) {
        let idx = match self.groups.iter().position(|g| g.kind == kind && g.plus == plus && Arc::ptr_eq(&g.numerator, &numerator)) {
            Some(i) => i,
            None => {
                self.groups.push(Group { numerator, entries: Vec::new(), kind, plus });
                self.groups.len() - 1
            }
        };
        for e in entries {
            merge_entry(&mut self.groups[idx].entries, e);
        }
    }

    /// Add `numerator(z) * sum c / (z - p)` in canonical form.
    fn push_raw(&mut self, numerator: &Arc<LaurentPoly>, poles: Vec<(Complex64, Complex64)>) {
        if numerator.is_zero() || poles.is_empty() {
            return;
        }
        let (inner, outer): (Vec<_>, Vec<_>) = poles.into_iter().partition(|(p, _)| is_inner(*p));
        if !inner.is_empty() {
            self.push_side(numerator, &inner, true);
        }
        if !outer.is_empty() {
            self.push_side(numerator, &outer, false);
        }
    }

    /// Inner poles keep numerator exponents `<= 0`, outer poles `>= 0`; the
    /// rest becomes a quotient group plus simple residues.
    fn push_side(&mut self, numerator: &Arc<LaurentPoly>, poles: &[(Complex64, Complex64)], inner: bool) {
        let fits = if inner { numerator.hi() <= 0 } else { numerator.lo() >= 0 };
        let (keep, excess) = if fits {
            (numerator.clone(), LaurentPoly::zero())
        } else {
            let (low, high) = numerator.split_at(if inner { 1 } else { 0 });
            if inner { (Arc::new(low), high) } else { (Arc::new(high), low) }
        };
        if !excess.is_zero() {
            let excess = Arc::new(excess);
            let mut entries = Vec::with_capacity(poles.len());
            for &(p, c) in poles {
                let w = excess.eval(p);
                merge_pole(&mut self.simple, p, c * w);
                entries.push((p, c, w));
            }
            self.add_to_group(excess, Kind::Quotient, !inner, entries);
        }
        if keep.is_zero() {
            return;
        }
        if keep.lo() == 0 && keep.hi() == 0 {
            let k0 = keep.coeff(0);
            for &(p, c) in poles {
                merge_pole(&mut self.simple, p, c * k0);
            }
        } else {
            self.add_to_group(keep, Kind::Pole, inner, poles.iter().map(|&(p, c)| (p, c, ZERO)));
        }
    }

    /// Add `sum c (numerator(z) - numerator(p)) / (z - p)`; the caller
    /// guarantees `numerator` is bounded at every `p`.
    fn push_quotient(&mut self, numerator: &LaurentPoly, poles: &[(Complex64, Complex64)]) {
        if numerator.is_zero() || poles.is_empty() {
            return;
        }
        let (neg, rest) = numerator.split_at(0);
        let (_, pos) = rest.split_at(1);
        for (part, plus) in [(neg, true), (pos, false)] {
            if part.is_zero() {
                continue;
            }
            let part = Arc::new(part);
            let entries: Vec<Entry> = poles.iter().map(|&(p, c)| (p, c, part.eval(p))).collect();
            self.add_to_group(part, Kind::Quotient, plus, entries);
        }
    }

    /// Prune negligible terms and recompress crowded sides.
    fn finish(&mut self) {
        self.simple.retain(|(_, r)| r.norm() >= PRUNE_TOL);
        for g in &mut self.groups {
            let scale = g.numerator.terms().map(|(_, c)| c.norm()).fold(0.0, f64::max);
            g.entries.retain(|(_, c, w)| c.norm() * scale.max(w.norm()) >= PRUNE_TOL);
        }
        self.groups.retain(|g| !g.entries.is_empty() && !g.numerator.is_zero());
        for kind in [Kind::Pole, Kind::Quotient] {
            for plus in [true, false] {
                if self.groups.iter().filter(|g| g.kind == kind && g.plus == plus).count() > MAX_GROUPS {
                    self.compress(kind, plus);
                }
            }
        }
    }

    /// Replace the groups of one kind and side by a low-rank factorization of
    /// their pole-by-exponent coefficient matrix, computed by Gaussian
    /// elimination with complete pivoting until the residual reaches rounding
    /// level.
    fn compress(&mut self, kind: Kind, plus: bool) {
        let (side, rest): (Vec<Group>, Vec<Group>) =
            std::mem::take(&mut self.groups).into_iter().partition(|g| g.kind == kind && g.plus == plus);
        self.groups = rest;
        let mut poles: Vec<(Complex64, Complex64)> = Vec::new();
        for g in &side {
            for &(p, _, _) in &g.entries {
                merge_pole(&mut poles, p, ONE);
            }
        }
        let exps: Vec<i64> = side
            .iter()
            .flat_map(|g| g.numerator.terms().map(|t| t.0))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut mat = DMatrix::from_element(poles.len(), exps.len(), ZERO);
        for g in &side {
            for &(p, c, _) in &g.entries {
                let Some(row) = poles.iter().position(|(q, _)| (q - p).norm() < POLE_MERGE_TOL) else {
                    continue;
                };
                for (k, n) in g.numerator.terms() {
                    let col = exps.binary_search(&k).unwrap_or_default();
                    mat[(row, col)] += c * n;
                }
            }
        }
        let top = mat.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let cutoff = (4.0 * f64::EPSILON * top).max(PRUNE_TOL);
        for _ in 0..poles.len().min(exps.len()) {
            let idx = (0..mat.len()).max_by(|&a, &b| mat[a].norm().total_cmp(&mat[b].norm())).unwrap_or(0);
            let (i, j) = (idx % poles.len(), idx / poles.len());
            let pivot = mat[(i, j)];
            if pivot.norm() <= cutoff {
                break;
            }
            let col = mat.column(j).map(|c| c / pivot);
            let row = mat.row(i).into_owned();
            mat -= &col * &row;
            let numerator = Arc::new(LaurentPoly::from_terms(exps.iter().copied().zip(row.iter().copied()).collect()));
            let entries: Vec<Entry> = poles
                .iter()
                .zip(col.iter())
                .filter(|(_, c)| **c != ZERO)
                .map(|(&(p, _), &c)| {
                    let w = if kind == Kind::Quotient { numerator.eval(p) } else { ZERO };
                    (p, c, w)
                })
                .collect();
            self.groups.push(Group { numerator, entries, kind, plus });
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.laurent = self.laurent.add(&other.laurent);
        for &(p, r) in &other.simple {
            merge_pole(&mut out.simple, p, r);
        }
        for g in &other.groups {
            out.add_to_group(g.numerator.clone(), g.kind, g.plus, g.entries.iter().copied());
        }
        out.finish();
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, a: Complex64) -> Self {
        let mut out = self.clone();
        out.laurent = self.laurent.scale(a);
        for r in &mut out.simple {
            r.1 *= a;
        }
        for e in out.groups.iter_mut().flat_map(|g| g.entries.iter_mut()) {
            e.1 *= a;
        }
        out.finish();
        out
    }

    /// `z^s f(z)`.
    pub fn mul_monomial(&self, s: i64) -> Self {
        if s == 0 {
            return self.clone();
        }
        let zs = LaurentPoly::monomial(s, ONE);
        let mut out = Self::from_laurent(self.laurent.shift(s));
        out.push_raw(&Arc::new(zs.clone()), self.simple.clone());
        for g in &self.groups {
            let shifted = Arc::new(g.numerator.shift(s));
            match g.kind {
                Kind::Pole => out.push_raw(&shifted, g.entries.iter().map(|&(p, c, _)| (p, c)).collect()),
                Kind::Quotient => {
                    // z^s (N(z) - N(p)) / (z - p) = DQ[z^s N] - N(p) DQ[z^s], when
                    // the powers of p stay bounded; otherwise as raw poles.
                    let (direct, raw): (Vec<Entry>, Vec<Entry>) = g
                        .entries
                        .iter()
                        .partition(|&&(p, _, _)| shifted.bounded_at(p) && zs.bounded_at(p));
                    let plain: Vec<_> = direct.iter().map(|&(p, c, _)| (p, c)).collect();
                    let weighted: Vec<_> = direct.iter().map(|&(p, c, w)| (p, -c * w)).collect();
                    out.push_quotient(&shifted, &plain);
                    out.push_quotient(&zs, &weighted);
                    out.push_raw(&shifted, raw.iter().map(|&(p, c, _)| (p, c)).collect());
                    out.push_raw(&Arc::new(zs.clone()), raw.iter().map(|&(p, c, w)| (p, -c * w)).collect());
                }
            }
        }
        out.finish();
        out
    }

    /// Evaluate, refusing points within `POLE_MERGE_TOL` of a pole.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if z.norm() < POLE_MERGE_TOL && self.has_origin_pole() {
            return Err(Error::NearPole { z });
        }
        if let Some(p) = self.pole_iter().find(|p| (z - p).norm() < POLE_MERGE_TOL) {
            return Err(Error::NearPole { z: p });
        }
        Ok(self.eval_unchecked(z))
    }

    /// Evaluate without pole-proximity checks.
    pub fn eval_unchecked(&self, z: Complex64) -> Complex64 {
        let simple = self.simple.iter().fold(ZERO, |acc, (p, r)| acc + r / (z - p));
        self.groups.iter().fold(self.laurent.eval(z) + simple, |acc, g| acc + g.eval(z))
    }

    fn has_origin_pole(&self) -> bool {
        self.laurent.lo() < 0 || self.groups.iter().any(|g| g.numerator.lo() < 0)
    }

    /// Value at the origin of a function analytic there.
    pub fn eval_at_origin(&self) -> Result<Complex64> {
        self.eval(ZERO)
    }

    /// Multiply by a zero-pole-gain function.
    pub fn mul_zpk(&self, zpk: &Zpk) -> Result<Self> {
        let partial = zpk_to_lpf(zpk)?;
        let z_terms = &partial.simple;
        let nodes = self.pole_iter().chain(
            self.groups.iter().filter(|g| g.kind == Kind::Quotient).flat_map(|g| g.entries.iter().map(|e| e.0)),
        );
        for p in nodes {
            if let Some(&(b, _)) = z_terms.iter().find(|(b, _)| (b - p).norm() < POLE_MERGE_TOL) {
                return Err(Error::PoleCollision { pole: b });
            }
        }
        let mut out = Self::from_laurent(self.laurent.scale(zpk.gain));
        // L Z = g L + L sum rho_j / (z - b_j)
        out.push_raw(&Arc::new(self.laurent.clone()), z_terms.clone());
        // Z / (z - p) = Z(p) / (z - p) + sum_j rho_j / ((b_j - p)(z - b_j))
        for &(p, r) in &self.simple {
            merge_pole(&mut out.simple, p, r * zpk.eval(p));
            for &(b, rho) in z_terms {
                merge_pole(&mut out.simple, b, r * rho / (b - p));
            }
        }
        for g in &self.groups {
            let cross: Vec<(Complex64, Complex64)> = z_terms
                .iter()
                .map(|&(b, rho)| (b, rho * g.entries.iter().fold(ZERO, |acc, &(p, c, _)| acc + c / (b - p))))
                .collect();
            match g.kind {
                Kind::Pole => {
                    let mut poles: Vec<_> = g.entries.iter().map(|&(p, c, _)| (p, c * zpk.eval(p))).collect();
                    poles.extend(cross);
                    out.push_raw(&g.numerator, poles);
                }
                Kind::Quotient => {
                    // (N(z) - N(p)) Z(z) / (z - p)
                    //   = Z(p) DQ + (N(z) - N(p)) sum_j rho_j / ((b_j - p)(z - b_j))
                    let scaled: Vec<Entry> = g.entries.iter().map(|&(p, c, w)| (p, c * zpk.eval(p), w)).collect();
                    out.add_to_group(g.numerator.clone(), Kind::Quotient, g.plus, scaled);
                    for &(b, rho) in z_terms {
                        let r = rho * g.entries.iter().fold(ZERO, |acc, &(p, c, w)| acc + c * w / (b - p));
                        merge_pole(&mut out.simple, b, -r);
                    }
                    out.push_raw(&g.numerator, cross);
                }
            }
        }
        out.finish();
        Ok(out)
    }

    /// `(f_minus, f_plus)`: `f_minus` is analytic inside the unit circle and
    /// collects exponents `>= 0` and outer poles, `f_plus` the rest.
    pub fn additive_split(&self) -> Result<(Self, Self)> {
        if let Some(p) = self.pole_iter().find(|p| (p.norm() - 1.0).abs() < UNIT_CIRCLE_GUARD) {
            return Err(Error::PoleOnCircle { pole: p });
        }
        let (neg, nonneg) = self.laurent.split_at(0);
        let (inner_simple, outer_simple): (Vec<_>, Vec<_>) = self.simple.iter().partition(|(p, _)| is_inner(*p));
        let (plus_groups, minus_groups): (Vec<_>, Vec<_>) = self.groups.iter().cloned().partition(|g| g.plus);
        let minus = Self { laurent: nonneg, simple: outer_simple, groups: minus_groups };
        let plus = Self { laurent: neg, simple: inner_simple, groups: plus_groups };
        Ok((minus, plus))
    }

    /// Largest Laurent coefficient or simple residue magnitude.
    pub fn max_coeff(&self) -> f64 {
        self.laurent
            .terms()
            .map(|(_, c)| c.norm())
            .chain(self.simple.iter().map(|(_, r)| r.norm()))
            .fold(0.0, f64::max)
    }
}

/// Gain-zero-pole form `gain * prod(z - zeros) / prod(z - poles)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Zpk {
    pub gain: Complex64,
    zeros: Vec<Complex64>,
    poles: Vec<Complex64>,
}

impl Zpk {
    pub fn new(gain: Complex64, zeros: Vec<Complex64>, poles: Vec<Complex64>) -> Result<Self> {
        if zeros.len() != poles.len() {
            return Err(Error::DegreeMismatch { zeros: zeros.len(), poles: poles.len() });
        }
        for &p in &poles {
            if zeros.iter().any(|z| (z - p).norm() < POLE_MERGE_TOL) {
                return Err(Error::ZeroPoleCollision { pole: p });
            }
        }
        Ok(Self { gain, zeros, poles })
    }

    pub fn constant(gain: Complex64) -> Self {
        Self { gain, zeros: Vec::new(), poles: Vec::new() }
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn degree(&self) -> usize {
        self.poles.len()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.zeros.iter().zip(&self.poles).fold(self.gain, |acc, (a, b)| acc * (z - a) / (z - b))
    }

    /// Limit as `z -> infinity`.
    pub fn at_infinity(&self) -> Complex64 {
        self.gain
    }

    /// `1 / self`.
    pub fn reciprocal(&self) -> Self {
        Self { gain: self.gain.inv(), zeros: self.poles.clone(), poles: self.zeros.clone() }
    }
}

/// Partial fractions `gain + sum res_l / (z - p_l)` by the cover-up rule.
pub fn zpk_to_lpf(zpk: &Zpk) -> Result<LaurentPF> {
    let poles = zpk.poles();
    for (i, p) in poles.iter().enumerate() {
        if p.norm() < POLE_MERGE_TOL {
            return Err(Error::InvalidParameter(format!("zero-pole-gain pole at the origin: {p}")));
        }
        if poles[..i].iter().any(|q| (q - p).norm() < POLE_MERGE_TOL) {
            return Err(Error::MultipleZpkPole { pole: *p });
        }
    }
    let mut out = LaurentPF::constant(zpk.gain);
    for (l, &p) in poles.iter().enumerate() {
        let mut res = zpk.gain;
        for (j, (&a, &b)) in zpk.zeros().iter().zip(poles).enumerate() {
            res *= p - a;
            if j != l {
                res /= p - b;
            }
        }
        out.simple.push((p, res));
    }
    out.finish();
    Ok(out)
}
