//! Byzantine error location for rational interpolation.
//!
//! For values `y_i` at points `x_i`, of which at most `E` are corrupted, find
//! polynomials `P` and `Q` of degree `K + E - 1` with `P(x_i) = y_i Q(x_i)` at
//! every available point. `Q` carries the error-locator factor, so the
//! corrupted points are the ones where `|Q(x_i)|` is smallest. Dividing `P` by
//! `Q` is unstable in floating point; the serving path only ranks `|Q(x_i)|`
//! and leaves interpolation to the decoder. [`bw_recover_rational`] and the
//! [`exact`] module perform the full recovery for verification.

pub mod exact;
mod poly;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chebyshev::NODE_HIT_TOLERANCE;
use crate::codec::PredictionVector;
use crate::error::{Error, Result};

pub use poly::{DensePolynomial, RationalFunction};

/// Relative residual above which a round is flagged as holding more than `E`
/// corrupted values.
pub const INCONSISTENCY_THRESHOLD: f64 = 1e-3;

/// How the scale ambiguity of `P(x_i) = y_i Q(x_i)` is removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Unknowns `P_0.., Q_0..`; zero right-hand side, solved for a unit vector.
    Homogeneous,
    /// `Q_0 = 1`; the remaining unknowns solved in the least-squares sense.
    Q0Fixed,
}

/// Linear system for one rational fit; one row per available point.
#[derive(Debug, Clone, PartialEq)]
pub struct BwSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub normalization: Normalization,
    /// Coefficients in each of `P` and `Q`, i.e. `K + E`.
    pub terms: usize,
}

impl BwSystem {
    pub fn unknowns(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Solved `P`, `Q` together with fit diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct BwSolution {
    pub p: DensePolynomial,
    pub q: DensePolynomial,
    /// `‖Av - b‖ / ‖b‖` for [`Normalization::Q0Fixed`], `σ_min / σ_max` for
    /// [`Normalization::Homogeneous`].
    pub relative_residual: f64,
    pub rank: usize,
}

/// Builds the system `P(x_i) - y_i Q(x_i) = 0` with `K + E` terms per polynomial.
pub fn build_system(
    points: &[f64],
    values: &[f64],
    k: usize,
    e: usize,
    normalization: Normalization,
) -> Result<BwSystem> {
    if points.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: values.len(),
        });
    }
    if k == 0 {
        return Err(Error::InvalidInput("K must be at least 1".into()));
    }
    let terms = k + e;
    let (unknowns, needed) = match normalization {
        Normalization::Homogeneous => (2 * terms, 2 * terms),
        Normalization::Q0Fixed => (2 * terms - 1, 2 * terms - 1),
    };
    let rows = points.len();
    if rows < needed {
        return Err(Error::Underdetermined { rows, unknowns });
    }

    let q_offset = match normalization {
        Normalization::Homogeneous => 0,
        Normalization::Q0Fixed => 1,
    };
    let mut matrix = DMatrix::zeros(rows, unknowns);
    let mut rhs = DVector::zeros(rows);
    for (r, (&x, &y)) in points.iter().zip(values).enumerate() {
        let mut power = 1.0;
        for d in 0..terms {
            matrix[(r, d)] = power;
            if d >= q_offset {
                matrix[(r, terms + d - q_offset)] = -y * power;
            }
            power *= x;
        }
        if normalization == Normalization::Q0Fixed {
            rhs[r] = y;
        }
    }
    Ok(BwSystem {
        matrix,
        rhs,
        normalization,
        terms,
    })
}

/// Solves a [`BwSystem`].
///
/// `Q0Fixed` returns the minimum-norm least-squares solution; `Homogeneous`
/// returns the right singular vector of the smallest singular value, signed so
/// that its largest-magnitude entry is positive.
pub fn solve_system(system: &BwSystem) -> Result<BwSolution> {
    let (rows, cols) = system.matrix.shape();
    if rows < cols {
        return Err(Error::Underdetermined {
            rows,
            unknowns: cols,
        });
    }
    let svd = system.matrix.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let cutoff = sigma_max * rows.max(cols) as f64 * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let terms = system.terms;

    match system.normalization {
        Normalization::Q0Fixed => {
            let v = svd
                .solve(&system.rhs, cutoff)
                .map_err(|e| Error::InvalidInput(e.to_string()))?;
            let residual = (&system.matrix * &v - &system.rhs).norm();
            let scale = system.rhs.norm();
            let relative_residual = if scale > 0.0 { residual / scale } else { residual };
            if rank < cols && relative_residual > INCONSISTENCY_THRESHOLD {
                return Err(Error::Inconsistent {
                    residual: relative_residual,
                    threshold: INCONSISTENCY_THRESHOLD,
                });
            }
            let p = v.rows(0, terms).iter().copied().collect();
            let q = std::iter::once(1.0)
                .chain(v.rows(terms, terms - 1).iter().copied())
                .collect();
            Ok(BwSolution {
                p: DensePolynomial::new(p),
                q: DensePolynomial::new(q),
                relative_residual,
                rank,
            })
        }
        Normalization::Homogeneous => {
            let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
            let (min_index, &sigma_min) = svd
                .singular_values
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
                .expect("non-empty system");
            let mut v: Vec<f64> = v_t.row(min_index).iter().copied().collect();
            let pivot = v
                .iter()
                .copied()
                .fold(0.0f64, |m, c| if c.abs() > m.abs() { c } else { m });
            if pivot < 0.0 {
                v.iter_mut().for_each(|c| *c = -*c);
            }
            let q = v.split_off(terms);
            Ok(BwSolution {
                p: DensePolynomial::new(v),
                q: DensePolynomial::new(q),
                relative_residual: if sigma_max > 0.0 { sigma_min / sigma_max } else { 0.0 },
                rank,
            })
        }
    }
}

/// Positions of the `E` smallest `|Q(x_i)|`, ascending by magnitude, ties by position.
pub fn locate_errors_scalar(points: &[f64], values: &[f64], k: usize, e: usize) -> Result<Vec<usize>> {
    if e == 0 {
        return Ok(Vec::new());
    }
    let q = locator_polynomial(points, values, k, e)?;
    Ok(smallest_by_magnitude(&q, points, e))
}

/// The `Q` whose small values mark corrupted points.
///
/// Pinning `Q(0) = 1` cannot describe a corruption at `x = 0`, where the true
/// `Q` vanishes. The homogeneous solve is used instead when a point sits at
/// the origin, or when the pinned system is rank deficient and inconsistent.
pub fn locator_polynomial(points: &[f64], values: &[f64], k: usize, e: usize) -> Result<DensePolynomial> {
    let at_origin = points.iter().any(|x| x.abs() <= NODE_HIT_TOLERANCE);
    if !at_origin {
        let system = build_system(points, values, k, e, Normalization::Q0Fixed)?;
        match solve_system(&system) {
            Ok(solution) => return Ok(solution.q),
            Err(Error::Inconsistent { .. }) => {}
            Err(err) => return Err(err),
        }
    }
    let system = build_system(points, values, k, e, Normalization::Homogeneous)?;
    Ok(solve_system(&system)?.q)
}

fn smallest_by_magnitude(q: &DensePolynomial, points: &[f64], e: usize) -> Vec<usize> {
    let mut ranked: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, &x)| (q.eval(x).abs(), i))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ranked.into_iter().take(e).map(|(_, i)| i).collect()
}

/// Outcome of the per-class locator and majority vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocatorReport {
    /// Row `j` holds the `E` worker ids flagged by class coordinate `j`.
    pub candidate_matrix: Vec<Vec<usize>>,
    /// The `E` most frequent ids of the matrix.
    pub located: BTreeSet<usize>,
    pub vote_counts: BTreeMap<usize, usize>,
    /// Worst relative residual, over classes, of an error-free rational fit
    /// to the results that remain after exclusion.
    pub residual_after_exclusion: f64,
    /// `residual_after_exclusion` exceeds [`INCONSISTENCY_THRESHOLD`].
    pub inconsistent: bool,
}

impl LocatorReport {
    fn empty(classes: usize) -> Self {
        Self {
            candidate_matrix: vec![Vec::new(); classes],
            located: BTreeSet::new(),
            vote_counts: BTreeMap::new(),
            residual_after_exclusion: 0.0,
            inconsistent: false,
        }
    }

    /// The inconsistency flag as an error.
    pub fn check_consistent(&self) -> Result<()> {
        if self.inconsistent {
            Err(Error::Inconsistent {
                residual: self.residual_after_exclusion,
                threshold: INCONSISTENCY_THRESHOLD,
            })
        } else {
            Ok(())
        }
    }
}

/// Runs [`locate_errors_scalar`] once per class coordinate and keeps the `E`
/// worker ids flagged most often (ties by ascending id).
///
/// `nodes` is the full evaluation-point table indexed by worker id.
pub fn locate_errors_majority(
    predictions: &BTreeMap<usize, PredictionVector>,
    nodes: &[f64],
    k: usize,
    e: usize,
    classes: usize,
) -> Result<LocatorReport> {
    if classes == 0 {
        return Err(Error::InvalidInput("class count must be positive".into()));
    }
    let ids: Vec<usize> = predictions.keys().copied().collect();
    let mut points = Vec::with_capacity(ids.len());
    for (&id, y) in predictions {
        if y.len() != classes {
            return Err(Error::DimensionMismatch {
                expected: classes,
                got: y.len(),
            });
        }
        let x = nodes.get(id).ok_or_else(|| {
            Error::InvalidInput(format!("worker {id} has no evaluation point"))
        })?;
        points.push(*x);
    }
    if e == 0 {
        return Ok(LocatorReport::empty(classes));
    }

    let column = |j: usize| -> Vec<f64> { predictions.values().map(|y| y.0[j]).collect() };

    let mut candidate_matrix = Vec::with_capacity(classes);
    let mut vote_counts = BTreeMap::new();
    for j in 0..classes {
        let row: Vec<usize> = locate_errors_scalar(&points, &column(j), k, e)?
            .into_iter()
            .map(|pos| ids[pos])
            .collect();
        for &id in &row {
            *vote_counts.entry(id).or_insert(0) += 1;
        }
        candidate_matrix.push(row);
    }

    let mut ranked: Vec<(usize, usize)> = vote_counts.iter().map(|(&id, &n)| (id, n)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let located: BTreeSet<usize> = ranked.iter().take(e).map(|&(id, _)| id).collect();

    let kept: Vec<usize> = (0..ids.len()).filter(|&p| !located.contains(&ids[p])).collect();
    let kept_points: Vec<f64> = kept.iter().map(|&p| points[p]).collect();
    let mut residual_after_exclusion = 0.0f64;
    for j in 0..classes {
        let values = column(j);
        let kept_values: Vec<f64> = kept.iter().map(|&p| values[p]).collect();
        residual_after_exclusion = residual_after_exclusion.max(clean_fit_residual(&kept_points, &kept_values, k)?);
    }

    Ok(LocatorReport {
        candidate_matrix,
        located,
        vote_counts,
        residual_after_exclusion,
        inconsistent: residual_after_exclusion > INCONSISTENCY_THRESHOLD,
    })
}

/// Relative residual of a `(K-1)/(K-1)` rational fit with no error budget.
fn clean_fit_residual(points: &[f64], values: &[f64], k: usize) -> Result<f64> {
    let system = build_system(points, values, k, 0, Normalization::Q0Fixed)?;
    match solve_system(&system) {
        Ok(solution) => Ok(solution.relative_residual),
        Err(Error::Inconsistent { residual, .. }) => Ok(residual),
        Err(err) => Err(err),
    }
}

/// Recovers `P/Q` from values of a `(K-1)/(K-1)` rational function with at
/// most `E` corrupted entries, in floating point.
pub fn bw_recover_rational(points: &[f64], values: &[f64], k: usize, e: usize) -> Result<RationalFunction> {
    let system = build_system(points, values, k, e, Normalization::Homogeneous)?;
    let solution = solve_system(&system)?;
    if solution.q.max_abs_coeff() <= 1e-12 {
        return Err(Error::DegenerateQ);
    }
    Ok(RationalFunction {
        p: solution.p,
        q: solution.q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chebyshev::second_kind_nodes;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Random `(K-1)/(K-1)` rational with a denominator bounded away from zero on [-1, 1].
    fn random_rational(rng: &mut ChaCha8Rng, k: usize) -> (Vec<f64>, Vec<f64>) {
        let p: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut q: Vec<f64> = (0..k).map(|_| rng.random_range(-0.3..0.3) / k as f64).collect();
        q[0] = 1.0 + rng.random_range(0.0..0.5);
        (p, q)
    }

    fn eval(c: &[f64], x: f64) -> f64 {
        DensePolynomial::new(c.to_vec()).eval(x)
    }

    fn plant(rng: &mut ChaCha8Rng, n: usize, e: usize) -> BTreeSet<usize> {
        let mut planted = BTreeSet::new();
        while planted.len() < e {
            planted.insert(rng.random_range(0..n));
        }
        planted
    }

    #[test]
    fn system_dimensions() {
        let points = second_kind_nodes(5).unwrap();
        let values = vec![0.5; 6];
        let fixed = build_system(&points, &values, 2, 1, Normalization::Q0Fixed).unwrap();
        assert_eq!(fixed.matrix.shape(), (6, 5));
        assert_eq!(fixed.rhs.as_slice(), values.as_slice());
        let hom = build_system(&points, &values, 2, 1, Normalization::Homogeneous).unwrap();
        assert_eq!(hom.matrix.shape(), (6, 6));
        assert!(hom.rhs.iter().all(|&v| v == 0.0));
        assert!(matches!(
            build_system(&points[..5], &values[..5], 2, 1, Normalization::Homogeneous),
            Err(Error::Underdetermined { rows: 5, unknowns: 6 })
        ));
    }

    #[test]
    fn zero_values_give_zero_p() {
        let points = second_kind_nodes(7).unwrap();
        let system = build_system(&points, &[0.0; 8], 3, 1, Normalization::Q0Fixed).unwrap();
        let solution = solve_system(&system).unwrap();
        assert!(solution.p.max_abs_coeff() < 1e-12);
    }

    #[test]
    fn clean_rational_fits_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 1..=5 {
            for e in 0..=2 {
                let (p, q) = random_rational(&mut rng, k);
                let points = second_kind_nodes(2 * (k + e) - 1).unwrap();
                let values: Vec<f64> = points.iter().map(|&x| eval(&p, x) / eval(&q, x)).collect();
                let system = build_system(&points, &values, k, e, Normalization::Q0Fixed).unwrap();
                let solution = solve_system(&system).unwrap();
                assert!(solution.relative_residual <= 1e-8, "K={k} E={e}");
                let signs: BTreeSet<bool> = points.iter().map(|&x| solution.q.eval(x) > 0.0).collect();
                if e == 0 {
                    assert_eq!(signs.len(), 1, "Q changes sign on clean data, K={k}");
                }
            }
        }
    }

    /// Brute-force oracle: the single position whose removal leaves data
    /// consistent with a clean `(K-1)/(K-1)` rational.
    fn consistent_removal(points: &[f64], values: &[f64], k: usize) -> Vec<usize> {
        (0..points.len())
            .filter(|&t| {
                let pts: Vec<f64> = points.iter().enumerate().filter(|(i, _)| *i != t).map(|(_, &x)| x).collect();
                let vals: Vec<f64> = values.iter().enumerate().filter(|(i, _)| *i != t).map(|(_, &y)| y).collect();
                clean_fit_residual(&pts, &vals, k).unwrap() < 1e-9
            })
            .collect()
    }

    #[test]
    fn single_corruption_minimizes_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..50 {
            let k = 2 + trial % 3;
            let (p, q) = random_rational(&mut rng, k);
            let points = second_kind_nodes(2 * k + 2).unwrap();
            let mut values: Vec<f64> = points.iter().map(|&x| eval(&p, x) / eval(&q, x)).collect();
            let t = rng.random_range(0..points.len());
            values[t] += 1.0 + rng.random_range(0.0..1.0);
            assert_eq!(consistent_removal(&points, &values, k), vec![t]);

            let q = locator_polynomial(&points, &values, k, 1).unwrap();
            let mags: Vec<f64> = points.iter().map(|&x| q.eval(x).abs()).collect();
            for (i, m) in mags.iter().enumerate() {
                if i != t {
                    assert!(mags[t] < *m, "trial {trial}");
                }
            }
        }
    }

    #[test]
    fn corruption_at_origin_needs_homogeneous_solve() {
        let (p, q) = (vec![0.3, -1.0, 0.5], vec![1.2, 0.1, -0.2]);
        let points = second_kind_nodes(8).unwrap();
        assert_eq!(points[4], 0.0);
        let mut values: Vec<f64> = points.iter().map(|&x| eval(&p, x) / eval(&q, x)).collect();
        values[4] += 2.0;
        let pinned = build_system(&points, &values, 3, 1, Normalization::Q0Fixed).unwrap();
        assert!(matches!(solve_system(&pinned), Err(Error::Inconsistent { .. })));
        assert_eq!(locate_errors_scalar(&points, &values, 3, 1).unwrap(), vec![4]);
    }

    #[test]
    fn planted_gaussian_errors_are_found() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for &sigma in &[1.0, 100.0] {
            let mut hits = 0;
            for trial in 0..200 {
                let k = 2 + trial % 5;
                let e = 1 + trial % 3;
                let (p, q) = random_rational(&mut rng, k);
                let points = second_kind_nodes(2 * (k + e) - 1).unwrap();
                let mut values: Vec<f64> = points.iter().map(|&x| eval(&p, x) / eval(&q, x)).collect();
                let planted = plant(&mut rng, points.len(), e);
                for &i in &planted {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    values[i] += sigma * noise;
                }
                let found: BTreeSet<usize> = locate_errors_scalar(&points, &values, k, e).unwrap().into_iter().collect();
                hits += usize::from(found == planted);
            }
            assert!(hits >= 198, "sigma={sigma}: {hits}/200");
        }
    }

    #[test]
    fn zero_size_corruption_still_decodes() {
        use crate::codec::{BerrutCodec, CodingConfig, QueryBatch};
        let config = CodingConfig::new(3, 0, 2).unwrap();
        let codec = BerrutCodec::new(config).unwrap();
        let batch = QueryBatch::new(vec![vec![0.2], vec![-0.5], vec![0.9]]).unwrap();
        let coded = codec.encode(&batch).unwrap();
        let returned: BTreeMap<usize, PredictionVector> = coded
            .coded
            .iter()
            .enumerate()
            .map(|(i, x)| (i, PredictionVector(vec![2.0 * x[0] + 1.0, -x[0]])))
            .collect();
        let report = locate_errors_majority(&returned, &codec.nodes().beta, 3, 2, 2).unwrap();
        assert_eq!(report.located.len(), 2);
        let decoded = codec.decode(&returned, &report.located).unwrap();

        // Direct evaluation of the interpolation formula over the survivors.
        let beta = &codec.nodes().beta;
        let survivors: Vec<usize> = (0..beta.len()).filter(|i| !report.located.contains(i)).collect();
        assert!(survivors.len() >= config.min_survivors());
        for (j, &a) in codec.nodes().alpha.iter().enumerate() {
            let w: Vec<f64> = survivors
                .iter()
                .map(|&i| (-1.0f64).powi(i as i32) / (a - beta[i]))
                .collect();
            let total: f64 = w.iter().sum();
            for c in 0..2 {
                let expected: f64 = survivors.iter().zip(&w).map(|(&i, wi)| wi * returned[&i].0[c]).sum::<f64>() / total;
                assert!((decoded[j].0[c] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
            }
        }
    }

    #[test]
    fn location_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..100 {
            let k = 2 + trial % 4;
            let e = 1 + trial % 2;
            let (p, q) = random_rational(&mut rng, k);
            let points = second_kind_nodes(2 * (k + e) - 1).unwrap();
            let mut values: Vec<f64> = points.iter().map(|&x| eval(&p, x) / eval(&q, x)).collect();
            for i in plant(&mut rng, points.len(), e) {
                values[i] += rng.random_range(0.5..3.0);
            }
            let base: BTreeSet<_> = locate_errors_scalar(&points, &values, k, e).unwrap().into_iter().collect();
            for c in [3.0, -0.5, 1e3] {
                let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
                let found: BTreeSet<_> = locate_errors_scalar(&points, &scaled, k, e).unwrap().into_iter().collect();
                assert_eq!(found, base, "trial {trial}, scale {c}");
            }
        }
    }

    #[test]
    fn ties_break_by_position() {
        let q = DensePolynomial::new(vec![1.0]);
        assert_eq!(smallest_by_magnitude(&q, &[0.5, 0.1, -0.3], 2), vec![0, 1]);
    }

    fn coded_affine_predictions(
        rng: &mut ChaCha8Rng,
        k: usize,
        e: usize,
        classes: usize,
    ) -> (Vec<f64>, BTreeMap<usize, PredictionVector>) {
        use crate::codec::{BerrutCodec, CodingConfig, QueryBatch};
        let config = CodingConfig::new(k, 0, e).unwrap();
        let codec = BerrutCodec::new(config).unwrap();
        let batch = QueryBatch::new((0..k).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect()).unwrap();
        let w: Vec<[f64; 3]> = (0..classes)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let coded = codec.encode(&batch).unwrap();
        let returned = coded
            .coded
            .iter()
            .enumerate()
            .map(|(i, x)| (i, PredictionVector(w.iter().map(|r| r[0] * x[0] + r[1] * x[1] + r[2]).collect())))
            .collect();
        (codec.nodes().beta.clone(), returned)
    }

    #[test]
    fn majority_vote_finds_fully_corrupted_workers() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut hits = 0;
        for _ in 0..200 {
            let (nodes, mut returned) = coded_affine_predictions(&mut rng, 4, 2, 10);
            let planted = plant(&mut rng, nodes.len(), 2);
            for id in &planted {
                for v in returned.get_mut(id).unwrap().0.iter_mut() {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    *v += noise;
                }
            }
            let report = locate_errors_majority(&returned, &nodes, 4, 2, 10).unwrap();
            assert_eq!(report.candidate_matrix.len(), 10);
            assert!(report.candidate_matrix.iter().all(|row| row.len() == 2));
            let appearances = planted.iter().map(|id| report.vote_counts.get(id).copied().unwrap_or(0)).min().unwrap();
            if report.located == planted && appearances >= 9 {
                hits += 1;
            }
            assert!(!report.inconsistent || report.located != planted);
        }
        assert!(hits >= 198, "{hits}/200");
    }

    #[test]
    fn single_coordinate_corruption_success_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut hits = 0;
        let trials = 200;
        for _ in 0..trials {
            let (nodes, mut returned) = coded_affine_predictions(&mut rng, 4, 1, 10);
            let target = rng.random_range(0..nodes.len());
            let class = rng.random_range(0..10);
            returned.get_mut(&target).unwrap().0[class] += 5.0;
            let report = locate_errors_majority(&returned, &nodes, 4, 1, 10).unwrap();
            assert!(report.candidate_matrix[class].contains(&target));
            let target_votes = report.vote_counts[&target];
            let max_other = report.vote_counts.iter().filter(|(id, _)| **id != target).map(|(_, &n)| n).max().unwrap_or(0);
            if target_votes > max_other {
                assert!(report.located.contains(&target));
            }
            hits += usize::from(report.located.contains(&target));
        }
        // Clean rows of an affine model have no preferred index, so the
        // planted index usually still wins; record rather than pin.
        eprintln!("single-coordinate corruption located in {hits}/{trials} trials");
        assert!(hits > 0);
    }

    #[test]
    fn majority_edge_cases() {
        let nodes = second_kind_nodes(3).unwrap();
        let returned: BTreeMap<_, _> = (0..4).map(|i| (i, PredictionVector(vec![1.0, 2.0]))).collect();
        let report = locate_errors_majority(&returned, &nodes, 2, 0, 2).unwrap();
        assert!(report.located.is_empty());
        assert_eq!(report.candidate_matrix.len(), 2);
        assert!(locate_errors_majority(&returned, &nodes, 2, 0, 0).is_err());
        assert!(matches!(
            locate_errors_majority(&returned, &nodes, 2, 0, 3),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn majority_dominance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let (nodes, mut returned) = coded_affine_predictions(&mut rng, 3, 2, 7);
            for id in plant(&mut rng, nodes.len(), 2) {
                for v in returned.get_mut(&id).unwrap().0.iter_mut().take(4) {
                    *v += rng.random_range(-2.0..2.0);
                }
            }
            let report = locate_errors_majority(&returned, &nodes, 3, 2, 7).unwrap();
            for (id, &n) in &report.vote_counts {
                if 2 * n > 7 {
                    assert!(report.located.contains(id));
                }
            }
        }
    }

    #[test]
    fn repeated_runs_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (nodes, mut returned) = coded_affine_predictions(&mut rng, 5, 3, 6);
        for v in returned.get_mut(&4).unwrap().0.iter_mut() {
            *v += 1.5;
        }
        let a = locate_errors_majority(&returned, &nodes, 5, 3, 6).unwrap();
        let b = locate_errors_majority(&returned, &nodes, 5, 3, 6).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.residual_after_exclusion.to_bits(), b.residual_after_exclusion.to_bits());
    }

    #[test]
    fn inconsistency_flagged_beyond_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (nodes, mut returned) = coded_affine_predictions(&mut rng, 4, 1, 5);
        let clean = locate_errors_majority(&returned, &nodes, 4, 1, 5).unwrap();
        assert!(!clean.inconsistent);
        assert!(clean.check_consistent().is_ok());
        for id in [1, 5, 8] {
            for v in returned.get_mut(&id).unwrap().0.iter_mut() {
                *v += 3.0;
            }
        }
        let report = locate_errors_majority(&returned, &nodes, 4, 1, 5).unwrap();
        assert!(report.inconsistent);
        assert!(matches!(report.check_consistent(), Err(Error::Inconsistent { .. })));
    }

    #[test]
    fn float_recovery_matches_ground_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..60 {
            let k = 1 + trial % 4;
            let e = trial % 3;
            let s = trial % 2;
            let n = 2 * k + 2 * e + s - 1;
            let (p, q) = random_rational(&mut rng, k);
            let all = second_kind_nodes(n).unwrap();
            let erased = plant(&mut rng, all.len(), s);
            let points: Vec<f64> = all.iter().enumerate().filter(|(i, _)| !erased.contains(i)).map(|(_, &x)| x).collect();
            let truth = |x: f64| eval(&p, x) / eval(&q, x);
            let mut values: Vec<f64> = points.iter().map(|&x| truth(x)).collect();
            let planted = plant(&mut rng, points.len(), e);
            for &i in &planted {
                values[i] += rng.random_range(1.0..4.0);
            }
            let r = bw_recover_rational(&points, &values, k, e).unwrap();
            for (i, &x) in points.iter().enumerate() {
                if !planted.contains(&i) {
                    assert!((r.eval(x) - truth(x)).abs() <= 1e-6 * truth(x).abs().max(1.0), "trial {trial}");
                }
            }
            for _ in 0..20 {
                let x = rng.random_range(-1.0..1.0);
                if planted.iter().any(|&i| (points[i] - x).abs() < 1e-2) {
                    continue;
                }
                assert!((r.eval(x) - truth(x)).abs() <= 1e-6 * truth(x).abs().max(1.0), "trial {trial} probe {x}");
            }
        }
    }

    #[test]
    fn recovery_needs_enough_points() {
        let points = second_kind_nodes(4).unwrap();
        assert!(matches!(
            bw_recover_rational(&points, &[1.0; 5], 2, 1),
            Err(Error::Underdetermined { .. })
        ));
    }
}
