//! Closed forms for photon-subtracted squeezed thermal ("kitten") states and
//! for the cheapest photon-added thermal states.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::gaussian::{thermal_occupation, GaussianState, Snr, ThermalSpec};
use crate::wick::{wick_identities, WickIdentities, DEGENERATE_NORM};

fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

fn double_factorial_odd(n: i64) -> BigUint {
    // (n)!! for odd n, with (-1)!! = 1
    let mut acc = BigUint::one();
    let mut k = n;
    while k > 1 {
        acc *= k as u64;
        k -= 2;
    }
    acc
}

fn binomial(n: u64, k: u64) -> BigUint {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Number of perfect matchings of `(a†)^r a^r` with exactly `s` pairs
/// joining the two blocks: `s! C(r,s)² ((r-s-1)!!)²`.
pub fn b_r(r: u64, s: u64) -> Result<BigUint> {
    if s > r || !(r - s).is_multiple_of(2) {
        return Err(Error::Domain(format!(
            "b_r needs 0 <= s <= r with r - s even, got r = {r}, s = {s}"
        )));
    }
    let pairing = double_factorial_odd((r - s) as i64 - 1);
    Ok(factorial(s) * binomial(r, s).pow(2) * pairing.pow(2))
}

/// `f(r) = Tr[(a†)^r a^r ρ]` for an undisplaced single mode:
/// `Σ_s b_r(s) I₃^s (I₁I₂)^{(r-s)/2}` over `s ≡ r (mod 2)`.
pub fn f_r(r: u64, ids: &WickIdentities) -> f64 {
    let i3 = ids.i3[(0, 0)].re;
    let i1i2 = (ids.i1[(0, 0)] * ids.i2[(0, 0)]).re;
    (0..=r)
        .filter(|s| (r - s).is_multiple_of(2))
        .map(|s| {
            let b = b_r(r, s).expect("parity checked").to_f64().unwrap_or(f64::INFINITY);
            b * i3.powi(s as i32) * i1i2.powi(((r - s) / 2) as i32)
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KittenSpec {
    pub nu: f64,
    pub z: f64,
    pub m_subtractions: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KittenResult {
    pub mean_n: f64,
    pub var_n: f64,
    /// `⟨N⟩ - N₀` with `N₀` the thermal occupation before squeezing.
    pub delta_n: f64,
    pub snr: Snr,
}

/// `Γ = (f(m+1)/f(m) - N₀) / sqrt((f(m+1) + f(m+2))/f(m) - (f(m+1)/f(m))²)`.
pub fn kitten_snr(spec: &KittenSpec) -> Result<KittenResult> {
    let base = GaussianState::single_mode(spec.nu, spec.z, 0.0, [0.0, 0.0])?;
    let ids = wick_identities(&base);
    let m = spec.m_subtractions;
    let fm = f_r(m, &ids);
    if !(fm > DEGENERATE_NORM) {
        return Err(Error::Degenerate(fm));
    }
    let ratio1 = f_r(m + 1, &ids) / fm;
    let ratio2 = f_r(m + 2, &ids) / fm;
    let n0 = thermal_occupation(spec.nu)?;
    let mean = ratio1;
    let mut var = ratio1 + ratio2 - ratio1 * ratio1;
    let tol = 1e-12 * mean.abs().powi(2).max(1.0);
    if var < -tol {
        return Err(Error::Unphysical(format!("negative variance {var:e}")));
    }
    if var.abs() < tol {
        var = 0.0;
    }
    let delta_n = mean - n0;
    Ok(KittenResult {
        mean_n: mean,
        var_n: var,
        delta_n,
        snr: Snr::from_parts(delta_n, var),
    })
}

/// `(δN, ⟨N⟩) = (m(N₀+1), m(N₀+1) + N₀)` for `m` additions on a thermal mode.
pub fn min_added_energy(m: u64, n0: f64) -> (f64, f64) {
    let dn = m as f64 * (n0 + 1.0);
    (dn, dn + n0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeasibilityBound {
    pub epsilon: f64,
    pub nu: f64,
    pub m_max: u64,
}

/// Largest `m` with `m(N₀+1) ≤ ε`, i.e. `⌊2ε/(ν+1)⌋`.
pub fn max_additions(epsilon: f64, thermal: ThermalSpec) -> Result<FeasibilityBound> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!("energy budget must be >= 0, got {epsilon}")));
    }
    let nu = thermal.nu()?;
    let x = 2.0 * epsilon / (nu + 1.0);
    // keep exact integer ratios from rounding down a step
    let m_max = (x * (1.0 + 1e-12)).floor() as u64;
    Ok(FeasibilityBound {
        epsilon,
        nu,
        m_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{raw_photon_moments, NuConvention};
    use crate::wick::{enumerate_matchings, LadderFactor, LadderMonomial};
    use approx::assert_relative_eq;

    #[test]
    fn b_r_values() {
        for r in 0..10 {
            assert_eq!(b_r(r, r).unwrap(), factorial(r));
        }
        assert_eq!(b_r(2, 0).unwrap(), BigUint::from(1u32));
        assert_eq!(b_r(4, 2).unwrap(), BigUint::from(72u32));
        assert!(b_r(4, 1).is_err());
        assert!(b_r(2, 3).is_err());
        // large arguments stay exact
        assert_eq!(b_r(30, 30).unwrap(), factorial(30));
    }

    #[test]
    fn b_r_sums_to_total_matchings() {
        let ids = wick_identities(&GaussianState::vacuum(1));
        for r in 0..=6u64 {
            let total: BigUint = (0..=r).filter(|s| (r - s) % 2 == 0).map(|s| b_r(r, s).unwrap()).sum();
            let m = LadderMonomial::new(
                std::iter::repeat_n(LadderFactor::create(0), r as usize)
                    .chain(std::iter::repeat_n(LadderFactor::annihilate(0), r as usize))
                    .collect(),
            );
            let (_, leaves) = enumerate_matchings(&ids, &m, false).unwrap();
            assert_eq!(total, BigUint::from(leaves));
        }
    }

    #[test]
    fn b_r_by_brute_force_classification() {
        // classify each pairing of r creators followed by r annihilators by
        // the number of pairs that cross between the blocks
        fn walk(remaining: Vec<usize>, r: usize, crossing: usize, counts: &mut Vec<u64>) {
            if remaining.is_empty() {
                counts[crossing] += 1;
                return;
            }
            let p = remaining[0];
            for idx in 1..remaining.len() {
                let q = remaining[idx];
                let mut rest = remaining.clone();
                rest.remove(idx);
                rest.remove(0);
                let cross = (p < r) != (q < r);
                walk(rest, r, crossing + cross as usize, counts);
            }
        }
        for r in 1..=5usize {
            let mut counts = vec![0u64; r + 1];
            walk((0..2 * r).collect(), r, 0, &mut counts);
            for (s, &count) in counts.iter().enumerate() {
                let expected = if (r - s).is_multiple_of(2) {
                    b_r(r as u64, s as u64).unwrap()
                } else {
                    BigUint::from(0u32)
                };
                assert_eq!(BigUint::from(count), expected, "r = {r}, s = {s}");
            }
        }
    }

    #[test]
    fn f_r_examples() {
        let nu = 1.8;
        let n0 = thermal_occupation(nu).unwrap();
        let th = wick_identities(&GaussianState::thermal(1, nu).unwrap());
        assert_eq!(f_r(0, &th), 1.0);
        assert_relative_eq!(f_r(1, &th), n0, epsilon = 1e-15);
        for r in 0..8u64 {
            let fact = (1..=r).product::<u64>() as f64;
            assert_relative_eq!(f_r(r, &th), fact * n0.powi(r as i32), max_relative = 1e-13);
        }
        let sq = wick_identities(&GaussianState::single_mode(1.2, 0.5, 0.0, [0.0, 0.0]).unwrap());
        let (i1, i3) = (sq.i1[(0, 0)].re, sq.i3[(0, 0)].re);
        assert_relative_eq!(f_r(2, &sq), 2.0 * i3 * i3 + i1 * i1, max_relative = 1e-14);
    }

    #[test]
    fn kitten_zero_subtractions_is_gaussian() {
        for (nu, z) in [(1.0, 0.3), (1.5, 0.7), (2.5, 0.9)] {
            let k = kitten_snr(&KittenSpec { nu, z, m_subtractions: 0 }).unwrap();
            let s = GaussianState::single_mode(nu, z, 0.0, [0.0, 0.0]).unwrap();
            let g = raw_photon_moments(&s, thermal_occupation(nu).unwrap()).unwrap();
            assert_relative_eq!(k.snr.value(), g.snr.value(), max_relative = 1e-12);
        }
    }

    #[test]
    fn kitten_degenerate_on_vacuum() {
        let r = kitten_snr(&KittenSpec { nu: 1.0, z: 1.0, m_subtractions: 1 });
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn feasibility_examples() {
        assert_eq!(min_added_energy(0, 0.7), (0.0, 0.7));
        assert_eq!(min_added_energy(3, 0.0).0, 3.0);
        assert_eq!(min_added_energy(2, 0.5), (3.0, 3.5));

        let cold = max_additions(5.0, ThermalSpec::temperature(1e-3)).unwrap();
        assert_eq!(cold.m_max, 5);
        let warm = max_additions(5.0, ThermalSpec::temperature(0.5)).unwrap();
        assert_eq!(warm.m_max, 4);
        let coth1 = 1.0 / 1f64.tanh();
        assert_eq!(warm.m_max, (10.0 / (coth1 + 1.0)).floor() as u64);
        // below half of (ν + 1) no addition fits
        let tight = max_additions(0.5 * (coth1 + 1.0) - 1e-6, ThermalSpec::temperature(0.5)).unwrap();
        assert_eq!(tight.m_max, 0);
        let other = max_additions(
            5.0,
            ThermalSpec::Temperature { temperature: 0.5, convention: NuConvention::CothFull },
        )
        .unwrap();
        assert!(other.nu < warm.nu);
    }
}
