use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::{DiscreteDistribution, Distribution};
use crate::error::{invalid, Result};
use crate::measures::{MeasureKind, RiskMeasureSpec};
use crate::numeric::bisect_predicate;

/// Largest `|rho(F1) - rho(F2)|` accepted as a matched pair.
pub const MATCH_TOL: f64 = 1e-10;

/// Mixing weights tried by the randomized search.
const SEARCH_LAMBDAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Violation tolerance used by the randomized search.
const SEARCH_TOL: f64 = 1e-8;

/// Range the free atom may move over while matching.
const ATOM_RANGE: f64 = 1e3;

/// Two laws with equal `rho` whose mixture leaves the level set.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetWitness {
    pub f1: DiscreteDistribution,
    pub f2: DiscreteDistribution,
    pub lambda: f64,
    pub rho_f1: f64,
    pub rho_f2: f64,
    pub rho_mix: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClsOutcome {
    Pass,
    Violation(Box<LevelSetWitness>),
}

impl ClsOutcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, Self::Pass)
    }

    pub fn witness(&self) -> Option<&LevelSetWitness> {
        match self {
            Self::Pass => None,
            Self::Violation(w) => Some(w),
        }
    }
}

fn rho(spec: &RiskMeasureSpec, d: &DiscreteDistribution) -> Result<f64> {
    spec.evaluate(&Distribution::Discrete(d.clone()))
}

/// Evaluates `rho` on `lambda F1 + (1 - lambda) F2` for each weight and
/// reports the first mixture that moves more than `tol` off the level set.
pub fn convex_level_set_check(
    spec: &RiskMeasureSpec,
    f1: &DiscreteDistribution,
    f2: &DiscreteDistribution,
    lambdas: &[f64],
    tol: f64,
) -> Result<ClsOutcome> {
    let r1 = rho(spec, f1)?;
    let r2 = rho(spec, f2)?;
    if (r1 - r2).abs() > tol {
        return Err(invalid(format!(
            "laws are not matched: rho values {r1} and {r2}"
        )));
    }
    for &lambda in lambdas {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(invalid(format!("mixing weight {lambda} outside (0,1)")));
        }
        let mix = f1.mix(f2, lambda)?;
        let rm = rho(spec, &mix)?;
        if (rm - r1).abs() > tol {
            return Ok(ClsOutcome::Violation(Box::new(LevelSetWitness {
                f1: f1.clone(),
                f2: f2.clone(),
                lambda,
                rho_f1: r1,
                rho_f2: r2,
                rho_mix: rm,
            })));
        }
    }
    Ok(ClsOutcome::Pass)
}

/// Places an atom of mass `weight` so that `rho` of the completed law equals
/// `target`. `rho` is monotone in the atom location, so the smallest location
/// reaching `target` is found by bisection. `None` when `rho` jumps over
/// `target`.
pub fn match_last_atom(
    spec: &RiskMeasureSpec,
    atoms: &[f64],
    probs: &[f64],
    weight: f64,
    target: f64,
) -> Result<Option<DiscreteDistribution>> {
    let build = |z: f64| -> Result<DiscreteDistribution> {
        let mut pairs: Vec<(f64, f64)> = atoms.iter().copied().zip(probs.iter().copied()).collect();
        pairs.push((z, weight));
        DiscreteDistribution::from_pairs(&pairs)
    };
    let value = |z: f64| build(z).and_then(|d| rho(spec, &d));
    let lo = -ATOM_RANGE;
    let hi = ATOM_RANGE;
    if value(lo)? > target + MATCH_TOL || value(hi)? < target - MATCH_TOL {
        return Ok(None);
    }
    let z = bisect_predicate(lo, hi, 1e-13, |z| {
        value(z).map(|v| v >= target).unwrap_or(true)
    });
    for cand in [z, z - 1e-13, z + 1e-13] {
        let d = build(cand)?;
        if (rho(spec, &d)? - target).abs() <= MATCH_TOL {
            return Ok(Some(d));
        }
    }
    Ok(None)
}

/// Random weights on `n` atoms, each at least a small floor.
fn random_weights(rng: &mut impl Rng, n: usize, total: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| total * w / sum).collect()
}

fn random_atoms(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-5.0..5.0)).collect()
}

/// Level at which the law should sit flat, when the functional distinguishes
/// left and right quantiles.
fn flat_level(spec: &RiskMeasureSpec) -> Option<f64> {
    match spec.kind() {
        MeasureKind::QuantileMix { alpha, .. } => Some(*alpha),
        _ => None,
    }
}

/// `(atoms, probs)` of `n` random atoms; with a flat level, the distribution
/// function equals that level exactly between two atoms.
fn random_law(rng: &mut impl Rng, n: usize, flat: Option<f64>) -> (Vec<f64>, Vec<f64>) {
    let mut atoms = random_atoms(rng, n);
    atoms.sort_by(f64::total_cmp);
    let probs = match flat {
        Some(level) if n >= 2 => {
            let j = rng.random_range(1..n);
            let mut w = random_weights(rng, j, level);
            w.extend(random_weights(rng, n - j, 1.0 - level));
            w
        }
        _ => random_weights(rng, n, 1.0),
    };
    (atoms, probs)
}

/// A random pair `(F1, F2)` of `support` atoms each with `rho(F1) = rho(F2)`
/// to within the matching tolerance. The last atom of `F2` is moved to
/// match; `None` when no location matches.
pub fn random_matched_pair(
    spec: &RiskMeasureSpec,
    support: usize,
    rng: &mut impl Rng,
) -> Result<Option<(DiscreteDistribution, DiscreteDistribution)>> {
    if support < 2 {
        return Err(invalid("support size must be at least 2"));
    }
    let flat = flat_level(spec);
    let (a1, p1) = random_law(rng, support, flat);
    let f1 = DiscreteDistribution::from_pairs(&a1.into_iter().zip(p1).collect::<Vec<_>>())?;
    let target = rho(spec, &f1)?;
    let (mut a2, mut p2) = random_law(rng, support, flat);
    // With a flat level the free atom is one just above it, so the level is kept.
    let k = match flat {
        Some(level) => {
            let mut acc = 0.0;
            p2.iter()
                .position(|p| {
                    acc += p;
                    acc > level + 1e-9
                })
                .unwrap_or(support - 1)
        }
        None => support - 1,
    };
    let w = p2.remove(k);
    a2.remove(k);
    Ok(match_last_atom(spec, &a2, &p2, w, target)?.map(|f2| (f1, f2)))
}

/// Randomized search for a convex-level-set violation. Deterministic under
/// `seed`; `None` means no witness was found, not that none exists.
pub fn search_cls_violation(
    spec: &RiskMeasureSpec,
    support: usize,
    trials: usize,
    seed: u64,
) -> Result<Option<LevelSetWitness>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let Some((f1, f2)) = random_matched_pair(spec, support, &mut rng)? else {
            continue;
        };
        if let ClsOutcome::Violation(w) =
            convex_level_set_check(spec, &f1, &f2, &SEARCH_LAMBDAS, SEARCH_TOL)?
        {
            return Ok(Some(*w));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(pairs: &[(f64, f64)]) -> DiscreteDistribution {
        DiscreteDistribution::from_pairs(pairs).unwrap()
    }

    #[test]
    fn es_witness_by_hand() {
        let es = RiskMeasureSpec::es(0.5).unwrap();
        let f1 = law(&[(0.0, 0.5), (2.0, 0.5)]);
        let f2 = law(&[(-1.0, 0.6), (2.75, 0.4)]);
        let out = convex_level_set_check(&es, &f1, &f2, &[0.5], 1e-8).unwrap();
        let w = out.witness().expect("violation");
        assert!((w.rho_mix - 2.1).abs() < 1e-12, "{w:?}");
    }

    #[test]
    fn mean_and_var_pass_by_hand() {
        let f1 = law(&[(0.0, 0.5), (2.0, 0.5)]);
        let f2 = law(&[(-1.0, 0.6), (2.75, 0.4)]);
        let f3 = law(&[(0.0, 0.5), (2.0, 0.5)]).affine(1.0, 0.0).unwrap();
        let mean = RiskMeasureSpec::mean();
        let f4 = law(&[(-2.0, 0.5), (4.0, 0.5)]);
        assert!(convex_level_set_check(&mean, &f1, &f4, &[0.3, 0.7], 1e-8)
            .unwrap()
            .is_pass());
        let var = RiskMeasureSpec::var(0.9).unwrap();
        assert!(convex_level_set_check(&var, &f1, &f3, &[0.5], 1e-8)
            .unwrap()
            .is_pass());
        assert!(convex_level_set_check(&var, &f1, &f2, &[0.5], 1e-8).is_err());
    }

    #[test]
    fn matching_hits_target() {
        let es = RiskMeasureSpec::es(0.5).unwrap();
        let f2 = match_last_atom(&es, &[-1.0], &[0.6], 0.4, 2.0)
            .unwrap()
            .unwrap();
        assert!((f2.max() - 2.75).abs() < 1e-9);
        let var = RiskMeasureSpec::var(0.5).unwrap();
        // The free atom moves VaR only within [0, 1].
        let f2 = match_last_atom(&var, &[0.0, 1.0], &[0.4, 0.35], 0.25, 0.5)
            .unwrap()
            .unwrap();
        assert!((f2.atoms()[1] - 0.5).abs() < 1e-10);
        assert!(match_last_atom(&var, &[0.0, 1.0], &[0.4, 0.35], 0.25, 2.0)
            .unwrap()
            .is_none());
    }

    #[test]
    fn search_is_deterministic() {
        let es = RiskMeasureSpec::es(0.5).unwrap();
        let a = search_cls_violation(&es, 3, 200, 7).unwrap();
        let b = search_cls_violation(&es, 3, 200, 7).unwrap();
        assert!(a.is_some());
        assert_eq!(a, b);
    }

    #[test]
    fn flat_laws_keep_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let (_, p) = random_law(&mut rng, 4, Some(0.5));
            let mut acc = 0.0;
            assert!(p.iter().any(|q| {
                acc += q;
                (acc - 0.5).abs() < 1e-12
            }));
        }
    }
}
