use num_traits::{One, Zero};
use qperiods::algebra::hbar::HbarElement;
use qperiods::algebra::rational::Rat;
use qperiods::algebra::series::SuperSeries;
use qperiods::models::ModelBundle;
use qperiods::semihodge::pipeline::PeriodResult;

use crate::linear::{annihilator, rank, solve};
use crate::ring::{Elem, Ring};

type Res<T> = std::result::Result<T, String>;

/// Everything the oracle recomputes for one model at one order.
#[derive(Clone, Debug)]
pub struct Reference {
    pub order: u32,
    pub ring: Ring,
    pub flat_ring: Ring,
    pub harmonic: Vec<Vec<Rat>>,
    pub gamma: Elem,
    /// Class coordinates of `l_ħ exp(i_γ/ħ) s_k`.
    pub generators: Vec<Elem>,
    pub psi: Elem,
    pub tw_map: Vec<Elem>,
    pub tw_inverse: Vec<Elem>,
    pub psi_flat: Elem,
    /// `A[a][b][c]`, exact to `order`.
    pub a: Vec<Vec<Vec<Elem>>>,
    pub eta: Vec<Vec<Rat>>,
    pub eta_halfstep: i32,
}

fn odd(d: i32) -> bool {
    d.rem_euclid(2) == 1
}

fn neg_if(v: Vec<Rat>, flip: bool) -> Vec<Rat> {
    if flip {
        v.into_iter().map(|x| -x).collect()
    } else {
        v
    }
}

fn matvec(rows: &[Vec<Rat>], v: &[Rat]) -> Vec<Rat> {
    rows.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn to_rows(m: &qperiods::algebra::matrix::Matrix) -> Vec<Vec<Rat>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn unit(n: usize, k: usize) -> Vec<Rat> {
    let mut v = vec![Rat::zero(); n];
    v[k] = Rat::one();
    v
}

/// `(-1)^{|m|} m ⊗ A x` for an odd constant map.
fn apply_odd(ring: &Ring, a: &[Vec<Rat>], x: &Elem) -> Elem {
    let mut out = Elem::zero(a.len());
    for ((e, m), v) in &x.terms {
        out.add(*e, m.clone(), &neg_if(matvec(a, v), ring.parity(m)));
    }
    out
}

/// The raw tensors of a model, read once.
struct Model {
    g_deg: Vec<i32>,
    d_g: Vec<Vec<Rat>>,
    bracket: Box<dyn Fn(&[Rat], &[Rat]) -> Vec<Rat>>,
    k: Vec<Vec<Rat>>,
    p: Vec<Vec<Rat>>,
    d1: Vec<Vec<Rat>>,
    d2: Vec<Vec<Rat>>,
    contractions: Vec<Vec<Vec<Rat>>>,
    h_charges: Vec<i32>,
    classes: Vec<Vec<Rat>>,
    class_charges: Vec<i32>,
    class_degrees: Vec<i32>,
    /// columns `[σ_1 .. σ_m | (d1 + d2) e_1 .. (d1 + d2) e_n]`
    class_system: Vec<Vec<Rat>>,
    d_total: Vec<Vec<Rat>>,
    omega0: Vec<Rat>,
    omega0_degree: i32,
    n: i32,
    w: Vec<(i32, Vec<Rat>)>,
    pairing: Vec<Vec<Rat>>,
}

impl Model {
    fn read(model: &ModelBundle) -> Res<Self> {
        let g = model.g.clone();
        let hodge = g.hodge().ok_or("Hodge data required")?;
        let m = &model.module;
        let hdim = m.dim();
        let d_total: Vec<Vec<Rat>> =
            (0..hdim).map(|i| (0..hdim).map(|j| &m.d1()[(i, j)] + &m.d2()[(i, j)]).collect()).collect();
        let classes = model.cohomology.classes.clone();
        let class_system = (0..hdim)
            .map(|i| classes.iter().map(|s| s[i].clone()).chain(d_total[i].iter().cloned()).collect())
            .collect();
        let pairing = (0..classes.len())
            .map(|i| (0..classes.len()).map(|j| matvec(&to_rows(m.pairing()), &classes[j]).iter().zip(&classes[i]).map(|(a, b)| a * b).sum()).collect())
            .collect();
        Ok(Model {
            g_deg: g.space().degrees().to_vec(),
            d_g: to_rows(g.d()),
            k: to_rows(&hodge.k),
            p: to_rows(&hodge.p),
            bracket: Box::new(move |x, y| g.bracket(x, y)),
            d1: to_rows(m.d1()),
            d2: to_rows(m.d2()),
            contractions: m.contractions().iter().map(to_rows).collect(),
            h_charges: m.space().charges().to_vec(),
            class_charges: model.cohomology.charges.clone(),
            class_degrees: model.cohomology.degrees.clone(),
            classes,
            class_system,
            d_total,
            omega0: m.omega0().to_vec(),
            omega0_degree: m.omega0_degree(),
            n: m.n(),
            w: model.w.pieces().to_vec(),
            pairing,
        })
    }

    fn gdim(&self) -> usize {
        self.g_deg.len()
    }

    fn hdim(&self) -> usize {
        self.d1.len()
    }

    fn hcls(&self) -> usize {
        self.classes.len()
    }

    fn contract(&self, x: &[Rat]) -> Vec<Vec<Rat>> {
        let n = self.hdim();
        let mut out = vec![vec![Rat::zero(); n]; n];
        for (a, c) in x.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (i, row) in out.iter_mut().enumerate() {
                for (j, o) in row.iter_mut().enumerate() {
                    *o += c * &self.contractions[a][i][j];
                }
            }
        }
        out
    }

    /// Class coordinates of a `(d1 + d2)`-closed vector.
    fn class_of(&self, v: &[Rat]) -> Res<Vec<Rat>> {
        if matvec(&self.d_total, v).iter().any(|x| !x.is_zero()) {
            return Err("coefficient is not (d1 + d2)-closed".into());
        }
        let cols = self.hcls() + self.hdim();
        let (x, _) = solve(&self.class_system, v, cols).ok_or("closed vector outside classes + exact")?;
        Ok(x[..self.hcls()].to_vec())
    }

    /// `i_γ x` for a `g`-valued `γ` of total degree 1.
    fn apply_i(&self, ring: &Ring, gamma: &Elem, x: &Elem) -> Elem {
        let mut out = Elem::zero(self.hdim());
        for ((_, mg), xg) in &gamma.terms {
            let a = self.contract(xg);
            let pg = ring.parity(mg);
            for ((e, m), v) in &x.terms {
                if let Some((mm, neg)) = ring.mul(mg, m) {
                    out.add(*e, mm, &neg_if(matvec(&a, v), pg ^ neg ^ (pg && ring.parity(m))));
                }
            }
        }
        out
    }

    /// `L_γ x = d2 i_γ x - i_γ d2 x`.
    fn apply_lie(&self, ring: &Ring, gamma: &Elem, x: &Elem) -> Elem {
        let a = apply_odd(ring, &self.d2, &self.apply_i(ring, gamma, x));
        let b = self.apply_i(ring, gamma, &apply_odd(ring, &self.d2, x));
        a.minus(&b)
    }

    fn l_hbar(&self, x: &Elem) -> Elem {
        let mut out = Elem::zero(x.dim);
        for ((e, m), v) in &x.terms {
            for (i, c) in v.iter().enumerate() {
                if !c.is_zero() {
                    let mut u = vec![Rat::zero(); x.dim];
                    u[i] = c.clone();
                    out.add(e + self.h_charges[i], m.clone(), &u);
                }
            }
        }
        out
    }

    fn to_classes(&self, x: &Elem) -> Res<Elem> {
        let mut out = Elem::zero(self.hcls());
        for ((e, m), v) in &x.terms {
            out.add(*e, m.clone(), &self.class_of(v)?);
        }
        Ok(out)
    }

    /// `exp(i_γ/ħ) x`.
    fn exp_i(&self, ring: &Ring, gamma: &Elem, x: &Elem) -> Elem {
        let mut total = x.clone();
        let mut term = x.clone();
        let mut k = 1i64;
        loop {
            term = shift(&self.apply_i(ring, gamma, &term), -2).scaled(&Rat::from_integer(k.into()).recip());
            if term.is_zero() {
                break total;
            }
            total = total.plus(&term);
            k += 1;
        }
    }
}

fn shift(x: &Elem, by: i32) -> Elem {
    let mut out = Elem::zero(x.dim);
    for ((e, m), v) in &x.terms {
        out.add(e + by, m.clone(), v);
    }
    out
}

/// Independent columns of `P`, left to right, sorted by (degree, charge, index).
fn harmonic_basis(model: &ModelBundle, m: &Model) -> Vec<(usize, Vec<Rat>)> {
    let n = m.gdim();
    let mut chosen: Vec<(usize, Vec<Rat>)> = Vec::new();
    for j in 0..n {
        let col: Vec<Rat> = m.p.iter().map(|r| r[j].clone()).collect();
        let mut trial: Vec<Vec<Rat>> = chosen.iter().map(|(_, v)| v.clone()).collect();
        trial.push(col.clone());
        if rank(&trial, n) == trial.len() {
            chosen.push((j, col));
        }
    }
    let sp = model.g.space();
    chosen.sort_by_key(|(j, _)| (sp.degree(*j), sp.charge(*j), *j));
    chosen
}

/// Bracket of `g`-valued elements with `[m⊗x, m'⊗y] = (-1)^{|x||m'|} mm'⊗[x, y]`.
fn bracket(ring: &Ring, m: &Model, a: &Elem, b: &Elem) -> Elem {
    let mut out = Elem::zero(m.gdim());
    for ((_, m1), x) in &a.terms {
        for ((_, m2), y) in &b.terms {
            let Some((mm, neg)) = ring.mul(m1, m2) else { continue };
            let p2 = ring.parity(m2);
            for (i, xi) in x.iter().enumerate() {
                if xi.is_zero() {
                    continue;
                }
                let r = (m.bracket)(&unit(m.gdim(), i), y);
                let flip = neg ^ (p2 && odd(m.g_deg[i]));
                out.add(0, mm.clone(), &neg_if(r.iter().map(|c| c * xi).collect(), flip));
            }
        }
    }
    out
}

fn kuranishi(ring: &Ring, m: &Model, basis: &[(usize, Vec<Rat>)]) -> Res<Elem> {
    let mut linear = Elem::zero(m.gdim());
    for (a, (_, v)) in basis.iter().enumerate() {
        linear.add(0, ring.unit(a), v);
    }
    let mut gamma = linear.clone();
    for _ in 0..=ring.order {
        let br = bracket(ring, m, &gamma, &gamma);
        gamma = linear.minus(&apply_odd(ring, &m.k, &br).scaled(&Rat::new(1.into(), 2.into())));
    }
    let mc = apply_odd(ring, &m.d_g, &gamma).plus(&bracket(ring, m, &gamma, &gamma).scaled(&Rat::new(1.into(), 2.into())));
    if !mc.is_zero() {
        return Err(format!("Maurer–Cartan equation fails ({} terms)", mc.terms.len()));
    }
    Ok(gamma)
}

/// `(d1 + ħ d2) x = b` in `h[ħ]`, trying longer polynomials until one fits.
fn solve_lift(m: &Model, b: &[(usize, Vec<Rat>)]) -> Option<Vec<(usize, Vec<Rat>)>> {
    let n = m.hdim();
    let top = b.iter().map(|(j, _)| *j).max().unwrap_or(0);
    for jmax in top..=top + n + 1 {
        let rows: Vec<Vec<Rat>> = (0..(jmax + 2) * n)
            .map(|r| {
                let (rj, ri) = (r / n, r % n);
                (0..(jmax + 1) * n)
                    .map(|c| {
                        let (cj, ci) = (c / n, c % n);
                        if rj == cj {
                            m.d1[ri][ci].clone()
                        } else if rj == cj + 1 {
                            m.d2[ri][ci].clone()
                        } else {
                            Rat::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        let mut rhs = vec![Rat::zero(); (jmax + 2) * n];
        for (j, v) in b {
            for (i, x) in v.iter().enumerate() {
                rhs[j * n + i] += x;
            }
        }
        if let Some((x, _)) = solve(&rows, &rhs, (jmax + 1) * n) {
            return Some((0..=jmax).map(|j| (j, x[j * n..(j + 1) * n].to_vec())).collect());
        }
    }
    None
}

/// A closed lift `s` of `σ` with `(d1 + ħ d2 + L_γ) s = 0`.
fn lift(ring: &Ring, m: &Model, gamma: &Elem, sigma: &[Rat]) -> Res<Elem> {
    let mut s = Elem::single(m.hdim(), 0, ring.one(), sigma.to_vec());
    for p in 1..=ring.order {
        let rhs = m.apply_lie(ring, gamma, &s);
        for mu in ring.monomials(p) {
            let mut b: Vec<(usize, Vec<Rat>)> = Vec::new();
            for e in rhs.halfsteps() {
                let v = rhs.at(e, &mu);
                if v.iter().all(Zero::is_zero) {
                    continue;
                }
                if e < 0 || e % 2 != 0 {
                    return Err("lift leaves h[[ħ]]".into());
                }
                // d(μ ⊗ x) = (-1)^{|μ|} μ ⊗ dx, and the right side is -L_γ s
                b.push(((e / 2) as usize, neg_if(v, !ring.parity(&mu))));
            }
            if b.is_empty() {
                continue;
            }
            let x = solve_lift(m, &b).ok_or_else(|| format!("no lift at order {p}"))?;
            for (j, v) in x {
                s.add(2 * j as i32, mu.clone(), &v);
            }
        }
    }
    let closed = apply_odd(ring, &m.d1, &s)
        .plus(&shift(&apply_odd(ring, &m.d2, &s), 2))
        .plus(&m.apply_lie(ring, gamma, &s));
    if !closed.is_zero() {
        return Err("lift is not closed".into());
    }
    Ok(s)
}

/// Solves `x = Σ_k λ_k g_k` with `λ_k ∈ R[[t]][[ħ]]` order by order; the
/// frame heads are `e_k ħ^{c_k/2}`. Returns the `λ_k` or the first failure.
fn span_coefficients(ring: &Ring, charges: &[i32], gens: &[Elem], x: &Elem) -> Res<Vec<Elem>> {
    let dim = charges.len();
    let mut lambdas: Vec<Elem> = (0..dim).map(|_| Elem::zero(1)).collect();
    for p in 0..=ring.order {
        let mut combo = Elem::zero(dim);
        for (l, g) in lambdas.iter().zip(gens) {
            combo = combo.plus(&Elem::scalar_mul(ring, l, g));
        }
        let resid = x.minus(&combo);
        for ((e, mu), v) in &resid.terms {
            if Ring::total(mu) != p {
                if Ring::total(mu) < p {
                    return Err(format!("order {} not cancelled", Ring::total(mu)));
                }
                continue;
            }
            for (k, c) in v.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                if charges[k] > *e || (e - charges[k]) % 2 != 0 {
                    return Err(format!("ħ^({e}/2) coefficient at order {p} is outside the span"));
                }
                lambdas[k].add(e - charges[k], mu.clone(), &[c.clone()]);
            }
        }
    }
    Ok(lambdas)
}

fn heads_ok(ring: &Ring, charges: &[i32], gens: &[Elem]) -> bool {
    gens.iter().enumerate().all(|(k, g)| {
        let at0 = g.truncated(0);
        at0 == Elem::single(charges.len(), charges[k], ring.one(), unit(charges.len(), k))
    })
}

/// `Ψ^W`: the element of the frame's span with `Ψ - Ω0 ħ^{-n/2} ∈ L_W`.
fn normalize(ring: &Ring, m: &Model, gens: &[Elem], omega: &[Rat]) -> Res<Elem> {
    let dim = m.hcls();
    let ch = &m.class_charges;
    let fixed = Elem::single(dim, -m.n, ring.one(), omega.to_vec());
    let mut lambdas: Vec<Elem> = (0..dim).map(|_| Elem::zero(1)).collect();
    let combine = |lambdas: &[Elem]| {
        let mut c = Elem::zero(dim);
        for (l, g) in lambdas.iter().zip(gens) {
            c = c.plus(&Elem::scalar_mul(ring, l, g));
        }
        c
    };
    for p in 0..=ring.order {
        let r = combine(&lambdas).minus(&fixed);
        for ((e, mu), v) in &r.terms {
            if Ring::total(mu) != p {
                continue;
            }
            let wsub: Vec<Vec<Rat>> = m.w.iter().filter(|(l, _)| (l + e) % 2 == 0 && *l <= -e).map(|(_, b)| b.clone()).collect();
            let q = annihilator(&wsub, dim);
            let unknowns: Vec<usize> = (0..dim).filter(|&k| ch[k] <= *e && (e - ch[k]) % 2 == 0).collect();
            let rows: Vec<Vec<Rat>> = q.iter().map(|row| unknowns.iter().map(|&k| row[k].clone()).collect()).collect();
            let rhs: Vec<Rat> = matvec(&q, v).into_iter().map(|x| -x).collect();
            let (x, rk) = solve(&rows, &rhs, unknowns.len()).ok_or_else(|| format!("no normalization at order {p}, ħ^({e}/2)"))?;
            if rk < unknowns.len() {
                return Err(format!("normalization not unique at ħ^({e}/2)"));
            }
            for (k, c) in unknowns.iter().zip(x) {
                lambdas[*k].add(e - ch[*k], mu.clone(), &[c]);
            }
        }
    }
    let psi = combine(&lambdas);
    let rest = psi.minus(&fixed);
    for ((e, _), v) in &rest.terms {
        let wsub: Vec<Vec<Rat>> = m.w.iter().filter(|(l, _)| (l + e) % 2 == 0 && *l <= -e).map(|(_, b)| b.clone()).collect();
        if annihilator(&wsub, dim).iter().any(|q| !q.iter().zip(v).map(|(a, b)| a * b).sum::<Rat>().is_zero()) {
            return Err("Ψ - Ω0 leaves L_W".into());
        }
    }
    Ok(psi)
}

fn vector_degree(v: &[Rat], degrees: &[i32]) -> Res<i32> {
    let ds: Vec<i32> = v.iter().zip(degrees).filter(|(c, _)| !c.is_zero()).map(|(_, &d)| d).collect();
    match ds.first() {
        Some(&d) if ds.iter().all(|&x| x == d) => Ok(d),
        _ => Err("Gr W vector is not homogeneous".into()),
    }
}

/// `f(t(s))`: substitutes the components `comps` (scalars over `dst`) for
/// the variables of `f`, letter by letter in ascending order.
pub fn substitute(f: &Elem, dst: &Ring, comps: &[Elem]) -> Elem {
    let mut out = Elem::zero(f.dim);
    for ((e, mu), v) in &f.terms {
        let mut prod = Elem::single(1, 0, dst.one(), vec![Rat::one()]);
        for (i, &k) in mu.iter().enumerate() {
            for _ in 0..k {
                prod = Elem::scalar_mul(dst, &prod, &comps[i]);
            }
        }
        for ((e2, m2), c) in &prod.terms {
            out.add(e + e2, m2.clone(), &v.iter().map(|x| x * &c[0]).collect::<Vec<_>>());
        }
    }
    out
}

fn invert_map(src: &Ring, dst: &Ring, map: &[Elem]) -> Res<Vec<Elem>> {
    let d = map.len();
    let lin: Vec<Vec<Rat>> = (0..d).map(|k| (0..d).map(|a| map[k].at(0, &src.unit(a))[0].clone()).collect()).collect();
    let mut inv = vec![vec![Rat::zero(); d]; d];
    for j in 0..d {
        let (x, rk) = solve(&lin, &unit(d, j), d).ok_or("local Torelli fails")?;
        if rk < d {
            return Err("local Torelli fails".into());
        }
        for a in 0..d {
            inv[a][j] = x[a].clone();
        }
    }
    let higher: Vec<Elem> = map.iter().map(|f| {
        let mut h = f.clone();
        h.terms.retain(|(_, m), _| Ring::total(m) >= 2);
        h
    }).collect();
    let coords: Vec<Elem> = (0..d).map(|k| Elem::single(1, 0, dst.unit(k), vec![Rat::one()])).collect();
    let apply_inv = |v: &[Elem]| -> Vec<Elem> {
        (0..d).map(|a| {
            let mut s = Elem::zero(1);
            for k in 0..d {
                s = s.plus(&v[k].scaled(&inv[a][k]));
            }
            s
        }).collect()
    };
    let mut t = apply_inv(&coords);
    for _ in 0..=dst.order {
        let h: Vec<Elem> = higher.iter().map(|f| substitute(f, dst, &t)).collect();
        let rhs: Vec<Elem> = coords.iter().zip(&h).map(|(c, x)| c.minus(x)).collect();
        t = apply_inv(&rhs);
    }
    Ok(t)
}

/// Structure constants from `∂_a∂_bΨ = ħ^{-1} A_ab^c ∂_cΨ + A0_ab^c ∂_cΨ`, to `limit`.
fn structure(ring: &Ring, psi: &Elem, limit: u32) -> Res<Vec<Vec<Vec<Elem>>>> {
    let d = ring.len();
    let first: Vec<Elem> = (0..d).map(|c| psi.deriv(ring, c)).collect();
    let mut cols: Vec<Elem> = first.iter().map(|x| shift(x, -2)).collect();
    cols.extend(first.iter().cloned());
    let heads: Vec<Elem> = cols.iter().map(|c| c.truncated(0)).collect();
    let mut keys: Vec<i32> = heads.iter().flat_map(|h| h.halfsteps()).collect();
    keys.sort_unstable();
    keys.dedup();
    let dim = psi.dim;
    let flat = |x: &Elem, mu: &[u8]| -> Res<Vec<Rat>> {
        let mut out = Vec::new();
        for e in &keys {
            out.extend(x.at(*e, mu));
        }
        let outside = x.terms.keys().any(|(e, m)| m.as_slice() == mu && !keys.contains(e));
        if outside {
            return Err("second derivative has an ħ-power no column reaches".into());
        }
        Ok(out)
    };
    let one = ring.one();
    let mat_cols: Vec<Vec<Rat>> = heads.iter().map(|h| flat(h, &one)).collect::<Res<_>>()?;
    let rows: Vec<Vec<Rat>> = (0..keys.len() * dim).map(|r| mat_cols.iter().map(|c| c[r].clone()).collect()).collect();
    if rank(&rows, 2 * d) < 2 * d {
        return Err("∂Ψ columns are dependent at t = 0".into());
    }
    let mut a = vec![vec![Vec::new(); d]; d];
    for i in 0..d {
        for j in 0..d {
            let target = first[j].deriv(ring, i).truncated(limit);
            let mut coeffs: Vec<Elem> = (0..2 * d).map(|_| Elem::zero(1)).collect();
            for p in 0..=limit {
                let mut combo = Elem::zero(dim);
                for (c, col) in coeffs.iter().zip(&cols) {
                    combo = combo.plus(&Elem::scalar_mul(ring, c, col));
                }
                let resid = target.minus(&combo).truncated(limit);
                for mu in ring.monomials(p) {
                    let rhs = flat(&resid, &mu)?;
                    if rhs.iter().all(Zero::is_zero) {
                        continue;
                    }
                    let (x, _) = solve(&rows, &rhs, 2 * d).ok_or_else(|| format!("second-order system fails at ({}, {})", i + 1, j + 1))?;
                    for (c, v) in x.into_iter().enumerate() {
                        coeffs[c].add(0, mu.clone(), &[v]);
                    }
                }
            }
            let mut combo = Elem::zero(dim);
            for (c, col) in coeffs.iter().zip(&cols) {
                combo = combo.plus(&Elem::scalar_mul(ring, c, col));
            }
            if !target.minus(&combo).truncated(limit).is_zero() {
                return Err(format!("second-order system not solved at ({}, {})", i + 1, j + 1));
            }
            if let Some(c) = (0..d).find(|&c| !coeffs[d + c].truncated(limit).is_zero()) {
                return Err(format!("A^(0)_({},{})^{} is nonzero", i + 1, j + 1, c + 1));
            }
            a[i][j] = coeffs[..d].iter().map(|c| c.truncated(limit)).collect();
        }
    }
    Ok(a)
}

/// `⟨u, v⟩` with `⟨ħ^{e1/2}x, ħ^{e2/2}y⟩ = (-1)^{(e2 - c_y)/2} (-1)^{|x||m2|} m1m2 G(x, y) ħ^{(e1+e2)/2}`.
fn pair(ring: &Ring, m: &Model, u: &Elem, v: &Elem) -> Elem {
    let mut out = Elem::zero(1);
    for ((e1, m1), x) in &u.terms {
        for ((e2, m2), y) in &v.terms {
            let Some((mm, neg)) = ring.mul(m1, m2) else { continue };
            let mut total = Rat::zero();
            for (i, xi) in x.iter().enumerate() {
                for (j, yj) in y.iter().enumerate() {
                    if xi.is_zero() || yj.is_zero() || m.pairing[i][j].is_zero() {
                        continue;
                    }
                    let flip = (odd(m.class_degrees[i]) && ring.parity(m2)) ^ odd((e2 - m.class_charges[j]) / 2);
                    let t = xi * yj * &m.pairing[i][j];
                    total += if flip { -t } else { t };
                }
            }
            out.add(e1 + e2, mm, &[if neg { -total } else { total }]);
        }
    }
    out
}

fn metric(ring: &Ring, m: &Model, psi: &Elem, limit: u32) -> Res<(Vec<Vec<Rat>>, i32)> {
    let d = ring.len();
    let first: Vec<Elem> = (0..d).map(|c| psi.deriv(ring, c)).collect();
    let mut eta = vec![vec![Rat::zero(); d]; d];
    let mut exponent = None;
    for a in 0..d {
        for b in 0..d {
            let p = pair(ring, m, &first[a], &first[b]).truncated(limit);
            for ((e, mu), c) in &p.terms {
                if *mu != ring.one() {
                    return Err(format!("⟨∂{}Ψ, ∂{}Ψ⟩ depends on t", a + 1, b + 1));
                }
                if exponent.is_some_and(|x| x != *e) {
                    return Err(format!("⟨∂{}Ψ, ∂{}Ψ⟩ spans several ħ-powers", a + 1, b + 1));
                }
                exponent = Some(*e);
                let twist = odd(m.n) && ring.odd(a);
                eta[a][b] = if twist { -c[0].clone() } else { c[0].clone() };
            }
        }
    }
    Ok((eta, exponent.ok_or("η vanishes")?))
}

/// Recomputes every quantity the engine reports, at internal order `order + 2`.
pub fn reference(model: &ModelBundle, order: u32) -> Res<Reference> {
    let m = Model::read(model)?;
    let basis = harmonic_basis(model, &m);
    let internal = order + 2;
    let ring = Ring::new(basis.iter().map(|(j, _)| 1 - m.g_deg[*j]).collect(), internal);
    let gamma = kuranishi(&ring, &m, &basis)?;
    let mut generators = Vec::new();
    for sigma in &m.classes {
        let s = lift(&ring, &m, &gamma, sigma)?;
        generators.push(m.to_classes(&m.l_hbar(&m.exp_i(&ring, &gamma, &s)))?);
    }
    if !heads_ok(&ring, &m.class_charges, &generators) {
        return Err("frame heads are not e_k ħ^{c_k/2}".into());
    }
    let omega = m.class_of(&m.omega0)?;
    let psi = normalize(&ring, &m, &generators, &omega)?;

    let rest = psi.minus(&Elem::single(m.hcls(), -m.n, ring.one(), omega.clone()));
    let mut tw_deg = Vec::new();
    let mut tw_map = Vec::new();
    for (k, (two_r, b)) in m.w.iter().enumerate() {
        tw_deg.push(m.omega0_degree - vector_degree(b, &m.class_degrees)?);
        let below: Vec<usize> = (0..m.w.len()).filter(|&j| m.w[j].0 <= *two_r && (m.w[j].0 - two_r) % 2 == 0).collect();
        let pos = below.iter().position(|&j| j == k).expect("own level");
        let rows: Vec<Vec<Rat>> = (0..m.hcls()).map(|i| below.iter().map(|&j| m.w[j].1[i].clone()).collect()).collect();
        let mut comp = Elem::zero(1);
        for ((e, mu), v) in &rest.terms {
            if *e != -two_r {
                continue;
            }
            let (x, _) = solve(&rows, v, below.len()).ok_or("Ψ^W has a component outside L_W")?;
            comp.add(0, mu.clone(), &[x[pos].clone()]);
        }
        tw_map.push(comp);
    }
    let flat_ring = Ring::new(tw_deg, internal);
    let tw_inverse = invert_map(&ring, &flat_ring, &tw_map)?;
    let psi_flat = substitute(&psi, &flat_ring, &tw_inverse);
    let a = structure(&flat_ring, &psi_flat, order)?;
    let (eta, eta_halfstep) = metric(&flat_ring, &m, &psi_flat, order)?;
    Ok(Reference {
        order,
        ring,
        flat_ring,
        harmonic: basis.into_iter().map(|(_, v)| v).collect(),
        gamma,
        generators,
        psi,
        tw_map,
        tw_inverse,
        psi_flat,
        a,
        eta,
        eta_halfstep,
    })
}

fn from_series(s: &SuperSeries) -> Elem {
    let mut out = Elem::zero(s.dim());
    for (mu, v) in s.terms() {
        out.add(0, mu.0.clone(), v);
    }
    out
}

fn from_hbar(h: &HbarElement) -> Elem {
    let mut out = Elem::zero(h.dim());
    for (e, s) in h.terms() {
        for (mu, v) in s.terms() {
            out.add(e, mu.0.clone(), v);
        }
    }
    out
}

fn degrees_of(s: &SuperSeries) -> Vec<i32> {
    s.vars().vars().iter().map(|v| v.degree).collect()
}

fn same(name: &str, ours: &Elem, theirs: &Elem) -> Option<String> {
    (ours != theirs).then(|| {
        let diff = ours.minus(theirs);
        let ((e, mu), v) = diff.terms.iter().next().expect("nonzero difference");
        format!("{name} differs at ħ^({e}/2) t^{mu:?}: {v:?}")
    })
}

/// Checks the engine's output against a fresh [`reference`]; one
/// `(quantity, failure)` entry per compared quantity.
pub fn compare(model: &ModelBundle, result: &PeriodResult) -> Res<Vec<(String, Option<String>)>> {
    let r = reference(model, result.order)?;
    let mut out = Vec::new();
    let core_deg = degrees_of(&result.miniversal.gamma);
    let gamma_ok = if core_deg != r.ring.degrees || result.miniversal.harmonic != r.harmonic {
        Some(format!("variables differ: degrees {core_deg:?} vs {:?}", r.ring.degrees))
    } else {
        same("γ̂", &r.gamma, &from_series(&result.miniversal.gamma))
    };
    out.push(("gamma".to_string(), gamma_ok));

    let core_gens: Vec<Elem> = result.frame.generators.iter().map(from_hbar).collect();
    let ch = &model.cohomology.charges;
    let frame_ok = if !heads_ok(&r.ring, ch, &core_gens) {
        Some("engine frame heads are not e_k ħ^{c_k/2}".to_string())
    } else {
        core_gens
            .iter()
            .chain(&r.generators)
            .enumerate()
            .find_map(|(i, g)| {
                let (span, label) = if i < core_gens.len() { (&r.generators, "engine") } else { (&core_gens, "oracle") };
                span_coefficients(&r.ring, ch, span, g).err().map(|e| format!("{label} generator {}: {e}", i % core_gens.len() + 1))
            })
    };
    out.push(("frame".to_string(), frame_ok));
    out.push(("psi".to_string(), same("Ψ^W", &r.psi, &from_hbar(&result.psi))));

    let map_ok = result
        .flat
        .map
        .components
        .iter()
        .zip(&r.tw_map)
        .enumerate()
        .find_map(|(k, (c, o))| same(&format!("t_W^{}", k + 1), o, &from_series(c)));
    out.push(("tW_map".to_string(), map_ok));
    out.push(("psi_flat".to_string(), same("Ψ^W(t_W)", &r.psi_flat, &from_hbar(&result.psi_flat))));

    let d = r.a.len();
    let mut a_ok = (result.a.dim() != d).then(|| format!("A has {} indices, expected {d}", result.a.dim()));
    for i in 0..d {
        for j in 0..d {
            for c in 0..d {
                if a_ok.is_none() {
                    a_ok = same(&format!("A_({},{})^{}", i + 1, j + 1, c + 1), &r.a[i][j][c], &from_series(result.a.get(i, j, c)));
                }
            }
        }
    }
    out.push(("A".to_string(), a_ok));
    let core_eta: Vec<Vec<Rat>> = (0..result.eta.rows()).map(|i| result.eta.row(i).to_vec()).collect();
    let eta_ok = if core_eta != r.eta {
        Some(format!("η differs: {:?} vs {:?}", core_eta, r.eta))
    } else {
        (result.eta_halfstep != r.eta_halfstep).then(|| format!("η exponent {} vs {}", result.eta_halfstep, r.eta_halfstep))
    };
    out.push(("eta".to_string(), eta_ok));
    Ok(out)
}

/// `A` at `t_W = 0` from the cup product alone: second and first
/// derivatives at the origin of the classes of `l_ħ exp(i_γ/ħ) Ω0 ħ^{-n/2}`
/// for the linear family `γ = Σ t^a e_a`, moved to flat coordinates by the
/// linear part of `t ↦ t_W`.
pub fn cup_product_a0(model: &ModelBundle, reference: &Reference) -> Res<Vec<Vec<Vec<Rat>>>> {
    let m = Model::read(model)?;
    let ring = Ring::new(reference.ring.degrees.clone(), 2);
    let d = ring.len();
    let mut gamma = Elem::zero(m.gdim());
    for (a, v) in reference.harmonic.iter().enumerate() {
        gamma.add(0, ring.unit(a), v);
    }
    let omega = Elem::single(m.hdim(), -m.n, ring.one(), m.omega0.clone());
    let e = m.to_classes(&m.l_hbar(&m.exp_i(&ring, &gamma, &omega)))?;
    let first: Vec<Elem> = (0..d).map(|c| e.deriv(&ring, c).truncated(0)).collect();
    let mut keys: Vec<i32> = first.iter().flat_map(|x| x.halfsteps()).map(|h| h - 2).collect();
    keys.sort_unstable();
    keys.dedup();
    let one = ring.one();
    let flat = |x: &Elem| -> Vec<Rat> { keys.iter().flat_map(|k| x.at(*k, &one)).collect() };
    let cols: Vec<Vec<Rat>> = first.iter().map(|x| flat(&shift(x, -2))).collect();
    let rows: Vec<Vec<Rat>> = (0..cols[0].len()).map(|r| cols.iter().map(|c| c[r].clone()).collect()).collect();
    let mut b = vec![vec![vec![Rat::zero(); d]; d]; d];
    for i in 0..d {
        for j in 0..d {
            let second = first_deriv_then(&ring, &e, i, j);
            if second.halfsteps().iter().any(|h| !keys.contains(h)) {
                return Err("second derivative outside the span of first derivatives".into());
            }
            let (x, _) = solve(&rows, &flat(&second), d).ok_or("cup product not in the span of first derivatives")?;
            b[i][j] = x;
        }
    }
    // t = M t_W with M the inverse of the linear part L of t ↦ t_W
    let lin = |k: usize, a: usize| reference.tw_map[k].at(0, &reference.ring.unit(a))[0].clone();
    let minv = |a: usize, k: usize| reference.tw_inverse[a].at(0, &reference.flat_ring.unit(k))[0].clone();
    let mut out = vec![vec![vec![Rat::zero(); d]; d]; d];
    for (i, oi) in out.iter_mut().enumerate() {
        for (j, oij) in oi.iter_mut().enumerate() {
            for (k, o) in oij.iter_mut().enumerate() {
                for a in 0..d {
                    for bb in 0..d {
                        for c in 0..d {
                            *o += minv(a, i) * minv(bb, j) * &b[a][bb][c] * lin(k, c);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn first_deriv_then(ring: &Ring, e: &Elem, i: usize, j: usize) -> Elem {
    e.deriv(ring, j).deriv(ring, i).truncated(0)
}

