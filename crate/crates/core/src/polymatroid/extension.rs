//! The continuous extension F(x) = E[f(x̄)], where x̄ rounds each coordinate
//! of x independently up with probability equal to its fractional part.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::lattice::{FractionalPoint, LatticePoint};
use crate::oracle::ValueOracle;

/// Exact expansion is limited to this many fractional coordinates.
pub const MAX_EXACT_FRACTIONAL: usize = 20;

/// Samples drawn per generator stream in [`extension_estimate`].
const CHUNK: u64 = 4096;

/// Dense corner counts are used up to this many fractional coordinates.
const DENSE_LIMIT: usize = 16;

fn validate(f: &ValueOracle, x: &FractionalPoint) -> Result<()> {
    check_dim(f.dim(), x.dim())?;
    for e in 0..x.dim() {
        if x.get(e) > f.cap()[e] as f64 {
            return Err(Error::Domain(format!("coordinate {e} = {} exceeds the oracle box {}", x.get(e), f.cap()[e])));
        }
    }
    Ok(())
}

/// Base point, fractional support and rounding probabilities of x.
fn split(x: &FractionalPoint) -> (LatticePoint, Vec<usize>, Vec<f64>) {
    let base = x.floor();
    let frac = x.fractional_support();
    let probs = frac.iter().map(|&i| x.get(i) - x.get(i).floor()).collect();
    (base, frac, probs)
}

fn corner(base: &LatticePoint, frac: &[usize], bit: impl Fn(usize) -> bool) -> LatticePoint {
    let mut p = base.clone();
    for (b, &i) in frac.iter().enumerate() {
        if bit(b) {
            p.add_to(i, 1);
        }
    }
    p
}

fn mask_weight(probs: &[f64], mask: u64) -> f64 {
    probs.iter().enumerate().map(|(b, &p)| if mask >> b & 1 == 1 { p } else { 1.0 - p }).product()
}

/// Σ_S g(⌊x⌋ + χ_S)·Pr[S] over subsets S of the fractional support `frac`.
fn expand<G>(base: &LatticePoint, frac: &[usize], probs: &[f64], mut g: G) -> Result<f64>
where
    G: FnMut(&LatticePoint) -> Result<f64>,
{
    if frac.len() > MAX_EXACT_FRACTIONAL {
        return Err(Error::Capacity(format!(
            "{} fractional coordinates exceed the exact limit of {MAX_EXACT_FRACTIONAL}; use extension_estimate",
            frac.len()
        )));
    }
    let mut total = 0.0;
    for mask in 0..1u64 << frac.len() {
        let p = corner(base, frac, |b| mask >> b & 1 == 1);
        total += g(&p)? * mask_weight(probs, mask);
    }
    Ok(total)
}

/// F(x) by full expansion over the fractional support.
pub fn extension_exact(f: &ValueOracle, x: &FractionalPoint) -> Result<f64> {
    validate(f, x)?;
    let (base, frac, probs) = split(x);
    expand(&base, &frac, &probs, |p| f.eval(p))
}

/// Sampled corners of the hypercube with their multiplicities.
enum Corners {
    Dense(Vec<u64>),
    Sparse(BTreeMap<Vec<u64>, u64>),
}

impl Corners {
    fn visit<V>(&self, mut visit: V) -> Result<()>
    where
        V: FnMut(&dyn Fn(usize) -> bool, u64) -> Result<()>,
    {
        match self {
            Corners::Dense(counts) => {
                for (mask, &c) in counts.iter().enumerate() {
                    if c > 0 {
                        visit(&|b| mask >> b & 1 == 1, c)?;
                    }
                }
            }
            Corners::Sparse(map) => {
                for (words, &c) in map {
                    visit(&|b| words[b / 64] >> (b % 64) & 1 == 1, c)?;
                }
            }
        }
        Ok(())
    }
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Draws `samples` corners. Each chunk of samples has its own generator
/// stream, so the counts do not depend on how chunks are spread over threads.
fn sample_corners(probs: &[f64], samples: u64, seed: u64) -> Corners {
    let k = probs.len();
    let chunks = samples.div_ceil(CHUNK);
    let len_of = |c: u64| CHUNK.min(samples - c * CHUNK);
    if k <= DENSE_LIMIT {
        let counts = (0..chunks)
            .into_par_iter()
            .fold(
                || vec![0u64; 1 << k],
                |mut acc, c| {
                    let mut rng = chunk_rng(seed, c);
                    for _ in 0..len_of(c) {
                        let mut mask = 0usize;
                        for (b, &p) in probs.iter().enumerate() {
                            if rng.gen::<f64>() < p {
                                mask |= 1 << b;
                            }
                        }
                        acc[mask] += 1;
                    }
                    acc
                },
            )
            .reduce(
                || vec![0u64; 1 << k],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        Corners::Dense(counts)
    } else {
        let words = k.div_ceil(64);
        let map = (0..chunks)
            .into_par_iter()
            .fold(BTreeMap::new, |mut acc: BTreeMap<Vec<u64>, u64>, c| {
                let mut rng = chunk_rng(seed, c);
                for _ in 0..len_of(c) {
                    let mut key = vec![0u64; words];
                    for (b, &p) in probs.iter().enumerate() {
                        if rng.gen::<f64>() < p {
                            key[b / 64] |= 1 << (b % 64);
                        }
                    }
                    *acc.entry(key).or_insert(0) += 1;
                }
                acc
            })
            .reduce(BTreeMap::new, |mut a, b| {
                for (key, c) in b {
                    *a.entry(key).or_insert(0) += c;
                }
                a
            });
        Corners::Sparse(map)
    }
}

/// Monte Carlo estimate of F(x) from `samples` independent roundings.
///
/// The oracle is queried once per distinct sampled corner; the result equals
/// the plain sample mean.
pub fn extension_estimate(f: &ValueOracle, x: &FractionalPoint, samples: u64, seed: u64) -> Result<f64> {
    sampled_mean(f, x, samples, seed, |p| f.eval(p))
}

/// Monte Carlo estimate of F(mχ_e | x) = E[f(x̄ + mχ_e) - f(x̄)].
pub fn estimate_marginal(
    f: &ValueOracle,
    x: &FractionalPoint,
    e: usize,
    m: u64,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    check_dim(f.dim(), x.dim())?;
    if x.get(e).ceil() as u64 + m > f.cap()[e] {
        return Err(Error::Domain(format!("x + {m}·χ_{e} leaves the oracle box")));
    }
    if m == 0 {
        return Ok(0.0);
    }
    sampled_mean(f, x, samples, seed, |p| Ok(f.eval(&p.plus_unit(e, m))? - f.eval(p)?))
}

fn sampled_mean<G>(f: &ValueOracle, x: &FractionalPoint, samples: u64, seed: u64, mut g: G) -> Result<f64>
where
    G: FnMut(&LatticePoint) -> Result<f64>,
{
    validate(f, x)?;
    if samples == 0 {
        return Err(Error::Domain("sample count must be at least 1".into()));
    }
    let (base, frac, probs) = split(x);
    if frac.is_empty() {
        return g(&base);
    }
    let corners = sample_corners(&probs, samples, seed);
    let mut total = 0.0;
    corners.visit(|bit, count| {
        total += g(&corner(&base, &frac, bit))? * count as f64;
        Ok(())
    })?;
    Ok(total / samples as f64)
}

/// Σ_S f(χ_i | b + χ_S)·Pr[S] over subsets of the fractional support without i.
fn directional(f: &ValueOracle, x: &FractionalPoint, i: usize, b: LatticePoint) -> Result<f64> {
    let (_, frac, probs) = split(x);
    let (rest, rest_p): (Vec<usize>, Vec<f64>) =
        frac.iter().zip(&probs).filter(|(&j, _)| j != i).map(|(&j, &p)| (j, p)).unzip();
    expand(&b, &rest, &rest_p, |p| Ok(f.eval(&p.plus_unit(i, 1))? - f.eval(p)?))
}

/// ∂F/∂x_i at a point whose i-th coordinate is not an integer.
pub fn extension_partial(f: &ValueOracle, x: &FractionalPoint, i: usize) -> Result<f64> {
    validate(f, x)?;
    if x.get(i).fract() == 0.0 {
        return Err(Error::Domain(format!("coordinate {i} is integral; use partial_left or partial_right")));
    }
    directional(f, x, i, x.floor())
}

/// Left partial derivative of F in coordinate i.
pub fn partial_left(f: &ValueOracle, x: &FractionalPoint, i: usize) -> Result<f64> {
    validate(f, x)?;
    if x.get(i).fract() != 0.0 {
        return directional(f, x, i, x.floor());
    }
    let mut b = x.floor();
    if b[i] == 0 {
        return Err(Error::Domain(format!("no left derivative at x_{i} = 0")));
    }
    b.set(i, b[i] - 1);
    directional(f, x, i, b)
}

/// Right partial derivative of F in coordinate i.
pub fn partial_right(f: &ValueOracle, x: &FractionalPoint, i: usize) -> Result<f64> {
    validate(f, x)?;
    let b = x.floor();
    if x.get(i).fract() == 0.0 && b[i] >= f.cap()[i] {
        return Err(Error::Domain(format!("no right derivative at the box edge x_{i} = {}", b[i])));
    }
    directional(f, x, i, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle<F: Fn(&[u64]) -> f64 + Send + Sync + 'static>(f: F, cap: &[u64]) -> ValueOracle {
        ValueOracle::new(f, LatticePoint::from_vec(cap.to_vec())).unwrap()
    }

    fn fp(v: &[f64]) -> FractionalPoint {
        FractionalPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn exact_examples() {
        let f = oracle(|x: &[u64]| x[0].min(2) as f64, &[3]);
        assert_eq!(extension_exact(&f, &fp(&[1.5])).unwrap(), 1.5);
        assert_eq!(extension_exact(&f, &fp(&[3.0])).unwrap(), 2.0);
        let g = oracle(|x: &[u64]| (x[0] + x[1]) as f64, &[3, 3]);
        let v = extension_exact(&g, &fp(&[0.3, 2.7])).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_box_rejected() {
        let f = oracle(|x: &[u64]| x[0] as f64, &[2]);
        assert!(matches!(extension_exact(&f, &fp(&[2.5])), Err(Error::Domain(_))));
    }

    #[test]
    fn too_many_fractional_coordinates() {
        let f = oracle(|x: &[u64]| x.iter().sum::<u64>() as f64, &[1; 21]);
        let x = fp(&[0.5; 21]);
        assert!(matches!(extension_exact(&f, &x), Err(Error::Capacity(_))));
        let v = extension_estimate(&f, &x, 2000, 3).unwrap();
        assert!((v - 10.5).abs() < 0.5);
    }

    #[test]
    fn estimate_is_seeded_and_sensible() {
        let f = oracle(|x: &[u64]| x[0].min(2) as f64, &[3]);
        let x = fp(&[1.5]);
        let a = extension_estimate(&f, &x, 10_000, 1).unwrap();
        assert_eq!(a, extension_estimate(&f, &x, 10_000, 1).unwrap());
        assert!((a - 1.5).abs() < 0.05);
        let b = extension_estimate(&f, &x, 10_000, 2).unwrap();
        assert_ne!(a, b);
        assert_eq!(extension_estimate(&f, &fp(&[1.0]), 50, 9).unwrap(), 1.0);
        assert!(extension_estimate(&f, &x, 0, 1).is_err());
    }

    #[test]
    fn marginal_estimate_of_modular_is_exact() {
        let f = oracle(|x: &[u64]| (2 * x[0] + x[1]) as f64, &[4, 4]);
        let x = fp(&[0.5, 1.25]);
        let m = estimate_marginal(&f, &x, 0, 3, 100, 0).unwrap();
        assert!((m - 6.0).abs() < 1e-12);
        assert!(estimate_marginal(&f, &x, 0, 4, 100, 0).is_err());
    }

    #[test]
    fn partials_match_central_differences() {
        let f = oracle(|x: &[u64]| ((x[0] + 2 * x[1]) as f64).sqrt() + (x[2] as f64).min(1.5), &[3, 3, 3]);
        let x = fp(&[1.3, 0.6, 2.2]);
        for i in 0..3 {
            let a = extension_partial(&f, &x, i).unwrap();
            let h = 1e-4;
            let mut lo = x.as_slice().to_vec();
            let mut hi = lo.clone();
            lo[i] -= h;
            hi[i] += h;
            let fd = (extension_exact(&f, &fp(&hi)).unwrap() - extension_exact(&f, &fp(&lo)).unwrap()) / (2.0 * h);
            assert!((a - fd).abs() <= 1e-6 * a.abs().max(1.0), "{i}: {a} vs {fd}");
        }
    }

    #[test]
    fn one_sided_partials_order_at_lattice_planes() {
        let f = oracle(|x: &[u64]| (x[0] as f64).sqrt() * 2.0 + ((x[0] + x[1]) as f64).sqrt(), &[3, 3]);
        let x = fp(&[2.0, 0.5]);
        let l = partial_left(&f, &x, 0).unwrap();
        let r = partial_right(&f, &x, 0).unwrap();
        assert!(l >= r);
        assert!(partial_left(&f, &fp(&[0.0, 0.5]), 0).is_err());
        assert!(partial_right(&f, &fp(&[3.0, 0.5]), 0).is_err());
    }
}
