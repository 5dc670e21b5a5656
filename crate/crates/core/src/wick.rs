//! Wick expansion of ladder-operator monomials on Gaussian states.
//!
//! For a Gaussian state every ordered product of ladder operators splits
//! into a sum over perfect matchings with loops: each factor is either
//! matched with itself (contributing its mean, the displacement) or paired
//! with one other factor (contributing the ordered connected two-point
//! function of the pair). Photon-added and photon-subtracted states are
//! handled by sandwiching the observable between the conjugated operation
//! strings, `⟨X⟩ = Tr[O† X O ρ_G] / Tr[O† O ρ_G]`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, MomentResult};
use crate::C64;

/// Default longest monomial the engine accepts. The number of plain
/// pairings of `2k` factors is `(2k-1)!!`, about 3.4e7 at 18.
pub const DEFAULT_MAX_FACTORS: usize = 18;

/// Normalizations at or below this are treated as annihilating the state.
pub const DEGENERATE_NORM: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LadderKind {
    Creation,
    Annihilation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LadderFactor {
    pub mode: usize,
    pub kind: LadderKind,
}

impl LadderFactor {
    pub fn create(mode: usize) -> Self {
        LadderFactor {
            mode,
            kind: LadderKind::Creation,
        }
    }

    pub fn annihilate(mode: usize) -> Self {
        LadderFactor {
            mode,
            kind: LadderKind::Annihilation,
        }
    }

    pub fn dagger(self) -> Self {
        LadderFactor {
            mode: self.mode,
            kind: match self.kind {
                LadderKind::Creation => LadderKind::Annihilation,
                LadderKind::Annihilation => LadderKind::Creation,
            },
        }
    }
}

/// Ordered operator product, written left to right. No implicit reordering.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LadderMonomial(pub Vec<LadderFactor>);

impl LadderMonomial {
    pub fn new(factors: Vec<LadderFactor>) -> Self {
        LadderMonomial(factors)
    }

    /// `a_j†a_j`.
    pub fn number(mode: usize) -> Self {
        LadderMonomial(vec![LadderFactor::create(mode), LadderFactor::annihilate(mode)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[LadderFactor] {
        &self.0
    }

    /// Hermitian conjugate: reversed order, each factor conjugated.
    pub fn dagger(&self) -> Self {
        LadderMonomial(self.0.iter().rev().map(|f| f.dagger()).collect())
    }

    pub fn then(&self, other: &LadderMonomial) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        LadderMonomial(v)
    }
}

/// Means and ordered connected two-point functions of a Gaussian state:
/// `d1_j = ⟨a_j⟩`, `d2_j = ⟨a_j†⟩`, and for the fluctuations
/// `i1 = ⟨a_j† a_k†⟩`, `i2 = ⟨a_j a_k⟩`, `i3 = ⟨a_j† a_k⟩`, `i4 = ⟨a_j a_k†⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct WickIdentities {
    pub d1: Vec<C64>,
    pub d2: Vec<C64>,
    pub i1: DMatrix<C64>,
    pub i2: DMatrix<C64>,
    pub i3: DMatrix<C64>,
    pub i4: DMatrix<C64>,
}

impl WickIdentities {
    pub fn n_modes(&self) -> usize {
        self.d1.len()
    }

    pub fn is_displaced(&self) -> bool {
        self.d1.iter().any(|d| *d != C64::new(0.0, 0.0))
    }

    fn pair(&self, left: LadderFactor, right: LadderFactor) -> C64 {
        let (j, k) = (left.mode, right.mode);
        match (left.kind, right.kind) {
            (LadderKind::Creation, LadderKind::Creation) => self.i1[(j, k)],
            (LadderKind::Annihilation, LadderKind::Annihilation) => self.i2[(j, k)],
            (LadderKind::Creation, LadderKind::Annihilation) => self.i3[(j, k)],
            (LadderKind::Annihilation, LadderKind::Creation) => self.i4[(j, k)],
        }
    }

    fn singlet(&self, f: LadderFactor) -> C64 {
        match f.kind {
            LadderKind::Annihilation => self.d1[f.mode],
            LadderKind::Creation => self.d2[f.mode],
        }
    }
}

/// With `V` the covariance matrix and `x_j`, `p_j` its rows:
/// `⟨a_j a_k⟩ = ¼[V(x_j,x_k) - V(p_j,p_k) + i(V(x_j,p_k) + V(p_j,x_k))]`,
/// `⟨a_j† a_k⟩ = ¼[V(x_j,x_k) + V(p_j,p_k) + i(V(x_j,p_k) - V(p_j,x_k)) - 2δ_jk]`.
pub fn wick_identities(state: &GaussianState) -> WickIdentities {
    let n = state.n_modes();
    let v = state.sigma();
    let d1: Vec<C64> = (0..n).map(|j| state.complex_displacement(j)).collect();
    let d2: Vec<C64> = d1.iter().map(|d| d.conj()).collect();
    let mut i1 = DMatrix::zeros(n, n);
    let mut i2 = DMatrix::zeros(n, n);
    let mut i3 = DMatrix::zeros(n, n);
    let mut i4 = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            let (xx, pp) = (v[(2 * j, 2 * k)], v[(2 * j + 1, 2 * k + 1)]);
            let (xp, px) = (v[(2 * j, 2 * k + 1)], v[(2 * j + 1, 2 * k)]);
            let delta = if j == k { 1.0 } else { 0.0 };
            let aa = C64::new(xx - pp, xp + px) * 0.25;
            let ca = C64::new(xx + pp - 2.0 * delta, xp - px) * 0.25;
            i2[(j, k)] = aa;
            i1[(j, k)] = aa.conj();
            i3[(j, k)] = ca;
        }
    }
    for j in 0..n {
        for k in 0..n {
            let delta = if j == k { 1.0 } else { 0.0 };
            i4[(j, k)] = i3[(k, j)] + delta;
        }
    }
    WickIdentities {
        d1,
        d2,
        i1,
        i2,
        i3,
        i4,
    }
}

struct Tables {
    len: usize,
    pairs: Vec<C64>,
    loops: Vec<C64>,
    use_loops: bool,
}

impl Tables {
    fn new(ids: &WickIdentities, factors: &[LadderFactor]) -> Self {
        let len = factors.len();
        let mut pairs = vec![C64::new(0.0, 0.0); len * len];
        for p in 0..len {
            for q in (p + 1)..len {
                pairs[p * len + q] = ids.pair(factors[p], factors[q]);
            }
        }
        let use_loops = ids.is_displaced();
        let loops = factors.iter().map(|&f| ids.singlet(f)).collect();
        Tables {
            len,
            pairs,
            loops,
            use_loops,
        }
    }
}

fn check_factors(ids: &WickIdentities, factors: &[LadderFactor], cap: usize) -> Result<()> {
    if factors.len() > cap || factors.len() > 30 {
        return Err(Error::TooManyFactors {
            len: factors.len(),
            cap: cap.min(30),
        });
    }
    if let Some(f) = factors.iter().find(|f| f.mode >= ids.n_modes()) {
        return Err(Error::ModeOutOfRange {
            index: f.mode,
            n_modes: ids.n_modes(),
        });
    }
    Ok(())
}

/// `Tr[monomial · ρ_G]`. The first remaining factor either loops or pairs
/// with a later one; since pair values depend only on positions, the value of
/// the remaining set is memoized on its bitmask.
pub fn matching_sum_with(ids: &WickIdentities, monomial: &LadderMonomial, cap: usize) -> Result<C64> {
    check_factors(ids, monomial.factors(), cap)?;
    let t = Tables::new(ids, monomial.factors());
    if t.len == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    if !t.use_loops && t.len % 2 == 1 {
        return Ok(C64::new(0.0, 0.0));
    }
    let full = (1u32 << t.len) - 1;
    let mut memo = vec![None; 1usize << t.len];
    Ok(reduce(&t, full, &mut memo))
}

fn reduce(t: &Tables, mask: u32, memo: &mut [Option<C64>]) -> C64 {
    if mask == 0 {
        return C64::new(1.0, 0.0);
    }
    if let Some(v) = memo[mask as usize] {
        return v;
    }
    let p = mask.trailing_zeros() as usize;
    let rest = mask & !(1 << p);
    let mut acc = C64::new(0.0, 0.0);
    if t.use_loops || rest.count_ones() % 2 == 1 {
        if t.use_loops && t.loops[p] != C64::new(0.0, 0.0) {
            acc += t.loops[p] * reduce(t, rest, memo);
        }
        let mut others = rest;
        while others != 0 {
            let q = others.trailing_zeros() as usize;
            others &= others - 1;
            let w = t.pairs[p * t.len + q];
            if w != C64::new(0.0, 0.0) {
                acc += w * reduce(t, rest & !(1 << q), memo);
            }
        }
    }
    memo[mask as usize] = Some(acc);
    acc
}

pub fn matching_sum(monomial: &LadderMonomial, state: &GaussianState) -> Result<C64> {
    matching_sum_with(&wick_identities(state), monomial, DEFAULT_MAX_FACTORS)
}

/// Plain depth-first enumeration without memoization or pruning. Returns the
/// sum and the number of complete matchings visited; used to check the
/// memoized reduction and the `(2k-1)!!` count.
pub fn enumerate_matchings(
    ids: &WickIdentities,
    monomial: &LadderMonomial,
    with_loops: bool,
) -> Result<(C64, u64)> {
    check_factors(ids, monomial.factors(), DEFAULT_MAX_FACTORS)?;
    let mut t = Tables::new(ids, monomial.factors());
    t.use_loops = with_loops;
    let mut leaves = 0;
    let full = if t.len == 0 { 0 } else { (1u32 << t.len) - 1 };
    let v = enumerate(&t, full, &mut leaves);
    Ok((v, leaves))
}

fn enumerate(t: &Tables, mask: u32, leaves: &mut u64) -> C64 {
    if mask == 0 {
        *leaves += 1;
        return C64::new(1.0, 0.0);
    }
    let p = mask.trailing_zeros() as usize;
    let rest = mask & !(1 << p);
    let mut acc = C64::new(0.0, 0.0);
    if t.use_loops {
        acc += t.loops[p] * enumerate(t, rest, leaves);
    }
    let mut others = rest;
    while others != 0 {
        let q = others.trailing_zeros() as usize;
        others &= others - 1;
        acc += t.pairs[p * t.len + q] * enumerate(t, rest & !(1 << q), leaves);
    }
    acc
}

/// A Gaussian state followed by ladder operations `o_1, o_2, …` applied in
/// that order and renormalized: `ρ ∝ O ρ_G O†` with `O = o_k ⋯ o_1`.
#[derive(Clone, Debug)]
pub struct NonGaussianState {
    base: GaussianState,
    ops: Vec<LadderFactor>,
    ids: WickIdentities,
    norm_k: f64,
    max_factors: usize,
}

impl NonGaussianState {
    pub fn new(base: GaussianState, ops: Vec<LadderFactor>) -> Result<Self> {
        Self::with_cap(base, ops, DEFAULT_MAX_FACTORS)
    }

    pub fn with_cap(base: GaussianState, ops: Vec<LadderFactor>, max_factors: usize) -> Result<Self> {
        let ids = wick_identities(&base);
        Self::from_identities(base, ops, ids, max_factors)
    }

    fn from_identities(
        base: GaussianState,
        ops: Vec<LadderFactor>,
        ids: WickIdentities,
        max_factors: usize,
    ) -> Result<Self> {
        let mut state = NonGaussianState {
            base,
            ops,
            ids,
            norm_k: 1.0,
            max_factors,
        };
        let k = state.unnormalized(&[])?.re;
        if !(k > DEGENERATE_NORM) {
            return Err(Error::Degenerate(k));
        }
        state.norm_k = k;
        Ok(state)
    }

    /// `m` photon additions on one mode.
    pub fn photon_added(base: GaussianState, mode: usize, m: usize) -> Result<Self> {
        Self::new(base, vec![LadderFactor::create(mode); m])
    }

    /// `m` photon subtractions on one mode.
    pub fn photon_subtracted(base: GaussianState, mode: usize, m: usize) -> Result<Self> {
        Self::new(base, vec![LadderFactor::annihilate(mode); m])
    }

    /// Same operations, with the sign of `⟨a_j† a_k†⟩` flipped while leaving
    /// its conjugate alone. Exists only to check that validation catches a
    /// broken engine.
    #[doc(hidden)]
    pub fn with_flipped_i1(&self) -> Result<Self> {
        let mut ids = self.ids.clone();
        ids.i1 = -ids.i1;
        Self::from_identities(self.base.clone(), self.ops.clone(), ids, self.max_factors)
    }

    pub fn base(&self) -> &GaussianState {
        &self.base
    }

    pub fn ops(&self) -> &[LadderFactor] {
        &self.ops
    }

    pub fn identities(&self) -> &WickIdentities {
        &self.ids
    }

    /// `K = Tr[O† O ρ_G]`.
    pub fn norm_k(&self) -> f64 {
        self.norm_k
    }

    fn sandwich(&self, inner: &[LadderFactor]) -> LadderMonomial {
        let mut f: Vec<LadderFactor> = self.ops.iter().map(|o| o.dagger()).collect();
        f.extend_from_slice(inner);
        f.extend(self.ops.iter().rev().copied());
        LadderMonomial(f)
    }

    fn unnormalized(&self, inner: &[LadderFactor]) -> Result<C64> {
        matching_sum_with(&self.ids, &self.sandwich(inner), self.max_factors)
    }

    /// Normalized `⟨X⟩`.
    pub fn expectation(&self, observable: &LadderMonomial) -> Result<C64> {
        Ok(self.unnormalized(observable.factors())? / self.norm_k)
    }

    /// `⟨N⟩` alone, cheaper than [`Self::raw_moments`].
    pub fn mean_photon_number(&self) -> Result<f64> {
        let mut mean = C64::new(0.0, 0.0);
        for j in 0..self.base.n_modes() {
            mean += self.unnormalized(&[LadderFactor::create(j), LadderFactor::annihilate(j)])?;
        }
        Ok(mean.re / self.norm_k)
    }

    /// `(⟨N⟩, ⟨N²⟩)` as complex numbers, so hermiticity can be checked.
    pub fn raw_moments(&self) -> Result<(C64, C64)> {
        let n = self.base.n_modes();
        let mut mean = C64::new(0.0, 0.0);
        let mut second = C64::new(0.0, 0.0);
        for j in 0..n {
            let nj = [LadderFactor::create(j), LadderFactor::annihilate(j)];
            mean += self.unnormalized(&nj)?;
            second += self.unnormalized(&[nj[0], nj[1], nj[0], nj[1]])?;
            for k in (j + 1)..n {
                let nk = [LadderFactor::create(k), LadderFactor::annihilate(k)];
                second += self.unnormalized(&[nj[0], nj[1], nk[0], nk[1]])? * 2.0;
            }
        }
        Ok((mean / self.norm_k, second / self.norm_k))
    }
}

pub fn normalization(state: &NonGaussianState) -> f64 {
    state.norm_k()
}

/// Photon statistics with `δN` measured against the passive state that has
/// the same symplectic spectrum as the Gaussian block.
pub fn ng_photon_moments(state: &NonGaussianState) -> Result<MomentResult> {
    let n0 = state.base.passive_energy()?;
    ng_photon_moments_with_reference(state, n0)
}

pub fn ng_photon_moments_with_reference(state: &NonGaussianState, n0: f64) -> Result<MomentResult> {
    let (mean, second) = state.raw_moments()?;
    MomentResult::from_second_moment(mean.re, second.re, n0)
}
