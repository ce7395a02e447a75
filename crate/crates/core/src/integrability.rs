//! Hypothesis checks for complete, partial and noncommutative
//! integrability, plus the objects the noncommutative proof builds: the
//! coinduced bracket structure on the image of F, its Casimirs, and the
//! derived Hamiltonian fields of the composed Casimirs.
//!
//! Everything here is sampled: a check evaluates residuals at a list of
//! phase-space points and condenses them into a report with a verdict.
//! Closure is verified by fiber pairing (several samples on one fiber must
//! see the same bracket values) rather than by fitting a model of s(x).

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{EvalError, Expression, ParseError};
use crate::flows::{integrate, FlowError, IntegratorOptions};
use crate::numeric;
use crate::symplectic::{
    hamiltonian_field, poisson_bracket_grads, LinearCombinationField, ScalarField,
    SymplecticChart, VectorField,
};
use crate::tolerances;

#[derive(Debug, Error)]
#[error("sample {index}: {source}")]
pub struct SampleError {
    pub index: usize,
    pub point: Vec<f64>,
    #[source]
    pub source: EvalError,
}

fn at_sample(index: usize, point: &DVector<f64>) -> impl Fn(EvalError) -> SampleError + '_ {
    move |source| SampleError {
        index,
        point: point.as_slice().to_vec(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Complete { n: usize },
    Partial { k: usize },
    Noncommutative { k: usize, rank: usize },
    Failed { reason: String },
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Complete { n } => write!(f, "complete({n})"),
            Verdict::Partial { k } => write!(f, "partial({k})"),
            Verdict::Noncommutative { k, rank } => {
                write!(f, "noncommutative({k}, rank {rank})")
            }
            Verdict::Failed { reason } => write!(f, "failed: {reason}"),
        }
    }
}

/// Per-point data underlying a bracket check.
#[derive(Debug, Clone)]
pub struct SampleRecord {
    pub point: DVector<f64>,
    /// Full k x k matrix of pairwise brackets at the point.
    pub brackets: DMatrix<f64>,
    pub jacobian_rank: usize,
    pub s_rank: usize,
    pub f_value: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct BracketReport {
    pub samples: Vec<SampleRecord>,
    pub max_involution_residual: f64,
    /// 1-based indices of the pair with the largest bracket magnitude.
    pub worst_pair: Option<(usize, usize)>,
    /// Max within-group spread of bracket entries; `None` until a closure
    /// check ran with at least one matched fiber group.
    pub closure_residual: Option<f64>,
    pub closure_unverifiable: Option<String>,
    pub matched_groups: usize,
    pub diagnostics: Vec<String>,
    pub verdict: Verdict,
}

impl BracketReport {
    pub fn jacobian_rank_range(&self) -> (usize, usize) {
        rank_range(self.samples.iter().map(|s| s.jacobian_rank))
    }

    pub fn s_rank_range(&self) -> (usize, usize) {
        rank_range(self.samples.iter().map(|s| s.s_rank))
    }

    /// Largest entry of B + B^T over all sampled bracket matrices. Both
    /// triangles are computed independently, so this is a real check.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for s in &self.samples {
            let d = &s.brackets + s.brackets.transpose();
            worst = worst.max(d.amax());
        }
        worst
    }
}

fn rank_range(ranks: impl Iterator<Item = usize>) -> (usize, usize) {
    ranks.fold((usize::MAX, 0), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

fn evaluate_samples(
    chart: &SymplecticChart,
    fs: &[Expression],
    samples: &[DVector<f64>],
) -> Result<Vec<SampleRecord>, SampleError> {
    let n = chart.n();
    let k = fs.len();
    samples
        .par_iter()
        .enumerate()
        .map(|(index, z)| {
            let wrap = at_sample(index, z);
            let mut grads = Vec::with_capacity(k);
            let mut f_value = DVector::zeros(k);
            for (i, f) in fs.iter().enumerate() {
                f_value[i] = f.eval(z.as_slice()).map_err(&wrap)?;
                grads.push(f.gradient(z.as_slice()).map_err(&wrap)?);
            }
            let brackets = DMatrix::from_fn(k, k, |i, j| {
                if i == j {
                    0.0
                } else {
                    poisson_bracket_grads(n, &grads[i], &grads[j])
                }
            });
            let jacobian = DMatrix::from_fn(k, 2 * n, |i, j| grads[i][j]);
            Ok(SampleRecord {
                point: z.clone(),
                jacobian_rank: numeric::numeric_rank(&jacobian, tolerances::RANK_REL),
                s_rank: numeric::numeric_rank(&brackets, tolerances::RANK_REL),
                brackets,
                f_value,
            })
        })
        .collect()
}

fn worst_bracket(records: &[SampleRecord]) -> (f64, Option<(usize, usize)>) {
    let mut max = 0.0_f64;
    let mut pair = None;
    for r in records {
        let k = r.brackets.nrows();
        for i in 0..k {
            for j in (i + 1)..k {
                let v = r.brackets[(i, j)].abs();
                if v > max {
                    max = v;
                    pair = Some((i + 1, j + 1));
                }
            }
        }
    }
    (max, pair)
}

/// Check that the k functions are independent and pairwise in involution
/// at the samples. Verdict `complete(n)` needs k = n, `partial(k)` covers
/// k < n; anything else fails with a reason naming the worst pair.
pub fn check_involution(
    chart: &SymplecticChart,
    fs: &[Expression],
    samples: &[DVector<f64>],
    tol: f64,
) -> Result<BracketReport, SampleError> {
    let k = fs.len();
    let n = chart.n();
    assert!(k >= 1, "need at least one function");
    assert!(!samples.is_empty(), "need at least one sample");
    let records = evaluate_samples(chart, fs, samples)?;
    let (residual, worst_pair) = worst_bracket(&records);
    let (rank_lo, _) = rank_range(records.iter().map(|r| r.jacobian_rank));

    let verdict = if residual > tol {
        let (i, j) = worst_pair.expect("nonzero residual has a pair");
        Verdict::Failed {
            reason: format!(
                "involution residual {residual:.3e} at pair ({i}, {j}) exceeds {tol:.1e}"
            ),
        }
    } else if rank_lo < k {
        Verdict::Failed {
            reason: format!("differentials have rank {rank_lo} < {k} at some sample"),
        }
    } else if k == n {
        Verdict::Complete { n }
    } else if k < n {
        Verdict::Partial { k }
    } else {
        Verdict::Failed {
            reason: format!("{k} independent functions in involution exceed n = {n}"),
        }
    };

    Ok(BracketReport {
        samples: records,
        max_involution_residual: residual,
        worst_pair,
        closure_residual: None,
        closure_unverifiable: None,
        matched_groups: 0,
        diagnostics: Vec::new(),
        verdict,
    })
}

/// Check that the pairwise brackets depend only on F: samples are grouped
/// by F-value within `pair_tol`, and within a group every bracket entry
/// must agree. Needs samples that actually share fibers (see
/// [`fiber_partners`]); otherwise closure is reported as unverifiable.
pub fn check_closure(
    chart: &SymplecticChart,
    fs: &[Expression],
    samples: &[DVector<f64>],
    pair_tol: f64,
    tol: f64,
) -> Result<BracketReport, SampleError> {
    let k = fs.len();
    let n = chart.n();
    assert!(
        k >= n && k < 2 * n,
        "closure check expects n <= k < 2n, got k = {k}, n = {n}"
    );
    let records = evaluate_samples(chart, fs, samples)?;
    let (inv_residual, worst_pair) = worst_bracket(&records);

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (idx, r) in records.iter().enumerate() {
        let found = groups.iter_mut().find(|g| {
            let rep = &records[g[0]].f_value;
            (&r.f_value - rep).amax() <= pair_tol
        });
        match found {
            Some(g) => g.push(idx),
            None => groups.push(vec![idx]),
        }
    }

    let mut closure_residual = 0.0_f64;
    let mut closure_pair = None;
    let mut matched_groups = 0;
    for g in &groups {
        if g.len() < 2 {
            continue;
        }
        matched_groups += 1;
        for i in 0..k {
            for j in (i + 1)..k {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &idx in g {
                    let v = records[idx].brackets[(i, j)];
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                if hi - lo > closure_residual {
                    closure_residual = hi - lo;
                    closure_pair = Some((i + 1, j + 1));
                }
            }
        }
    }

    let (s_lo, s_hi) = rank_range(records.iter().map(|r| r.s_rank));
    let mut diagnostics = Vec::new();
    if s_lo != s_hi {
        diagnostics.push(format!(
            "rank drop: s-rank varies from {s_lo} to {s_hi} across samples"
        ));
    }

    let mut closure_unverifiable = None;
    let verdict = if matched_groups == 0 {
        let reason = format!(
            "closure unverifiable: no two samples share an F-value within {pair_tol:.1e}"
        );
        closure_unverifiable = Some(reason.clone());
        Verdict::Failed { reason }
    } else if s_lo != s_hi {
        Verdict::Failed {
            reason: format!("s-rank is not constant across samples ({s_lo}..{s_hi})"),
        }
    } else if closure_residual > tol {
        let (i, j) = closure_pair.expect("nonzero spread has a pair");
        Verdict::Failed {
            reason: format!(
                "closure residual {closure_residual:.3e} at pair ({i}, {j}) exceeds {tol:.1e}"
            ),
        }
    } else {
        Verdict::Noncommutative { k, rank: s_hi }
    };

    Ok(BracketReport {
        samples: records,
        max_involution_residual: inv_residual,
        worst_pair,
        closure_residual: if matched_groups > 0 {
            Some(closure_residual)
        } else {
            None
        },
        closure_unverifiable,
        matched_groups,
        diagnostics,
        verdict,
    })
}

/// Names `x1..xk` for the base coordinates on the image of F.
pub fn base_coords(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("x{i}")).collect()
}

#[derive(Debug, Error)]
pub enum StructureError {
    #[error("closure entry s_{i}_{j}: need 1 <= i < j <= {k}")]
    BadIndex { i: usize, j: usize, k: usize },
    #[error("closure entry s_{i}_{j} given twice")]
    Duplicate { i: usize, j: usize },
    #[error("closure entry s_{i}_{j}: {source}")]
    Parse {
        i: usize,
        j: usize,
        #[source]
        source: ParseError,
    },
}

/// A declared bracket structure on the base: an antisymmetric k x k matrix
/// of expressions in x1..xk, given by its upper triangle (missing entries
/// are zero).
#[derive(Debug, Clone)]
pub struct CoinducedStructure {
    k: usize,
    coords: Arc<[String]>,
    upper: Vec<Option<Expression>>,
}

impl CoinducedStructure {
    /// `table` holds 1-based `(i, j, source)` entries with i < j, matching
    /// the `s_i_j` keys of the file format.
    pub fn new(k: usize, table: &[(usize, usize, &str)]) -> Result<CoinducedStructure, StructureError> {
        assert!(k >= 1);
        let coords: Arc<[String]> = base_coords(k).into();
        let names: Vec<&str> = coords.iter().map(String::as_str).collect();
        let mut upper: Vec<Option<Expression>> = vec![None; k * k];
        for &(i, j, src) in table {
            if i < 1 || j <= i || j > k {
                return Err(StructureError::BadIndex { i, j, k });
            }
            let slot = &mut upper[(i - 1) * k + (j - 1)];
            if slot.is_some() {
                return Err(StructureError::Duplicate { i, j });
            }
            *slot = Some(
                Expression::parse(src, &names)
                    .map_err(|source| StructureError::Parse { i, j, source })?,
            );
        }
        Ok(CoinducedStructure { k, coords, upper })
    }

    /// The zero structure (the commutative case).
    pub fn zero(k: usize) -> CoinducedStructure {
        CoinducedStructure::new(k, &[]).expect("empty table is valid")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn entry(&self, i: usize, j: usize) -> Option<&Expression> {
        assert!(i >= 1 && i < j && j <= self.k);
        self.upper[(i - 1) * self.k + (j - 1)].as_ref()
    }

    /// s(x), completed antisymmetrically.
    pub fn matrix_at(&self, x: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        let k = self.k;
        let mut m = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in (i + 1)..k {
                if let Some(e) = &self.upper[i * k + j] {
                    let v = e.eval(x)?;
                    m[(i, j)] = v;
                    m[(j, i)] = -v;
                }
            }
        }
        Ok(m)
    }

    pub fn rank_at(&self, x: &[f64]) -> Result<usize, EvalError> {
        Ok(numeric::numeric_rank(
            &self.matrix_at(x)?,
            tolerances::RANK_REL,
        ))
    }

    pub fn kernel_dimension_at(&self, x: &[f64]) -> Result<usize, EvalError> {
        Ok(self.k - self.rank_at(x)?)
    }

    /// Max deviation between measured brackets {F_i, F_j}(z) and the
    /// declared s_ij(F(z)) over the samples.
    pub fn consistency(
        &self,
        chart: &SymplecticChart,
        fs: &[Expression],
        samples: &[DVector<f64>],
    ) -> Result<ConsistencyReport, SampleError> {
        assert_eq!(fs.len(), self.k, "structure size must match F");
        let records = evaluate_samples(chart, fs, samples)?;
        let mut max_residual = 0.0_f64;
        let mut worst_pair = None;
        for (index, r) in records.iter().enumerate() {
            let wrap = at_sample(index, &r.point);
            let declared = self.matrix_at(r.f_value.as_slice()).map_err(&wrap)?;
            for i in 0..self.k {
                for j in (i + 1)..self.k {
                    let d = (r.brackets[(i, j)] - declared[(i, j)]).abs();
                    if d > max_residual {
                        max_residual = d;
                        worst_pair = Some((i + 1, j + 1));
                    }
                }
            }
        }
        Ok(ConsistencyReport {
            max_residual,
            worst_pair,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub max_residual: f64,
    pub worst_pair: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct CasimirReport {
    /// Max entry of |s(x) . grad C_i(x)| over samples and Casimirs.
    pub max_residual: f64,
    /// Rank of the stacked Casimir gradients per sample.
    pub ranks: Vec<usize>,
    pub expected_rank: usize,
    pub ok: bool,
    pub failure: Option<String>,
}

/// Verify that each C_i is a Casimir of the structure (s . grad C = 0) and
/// that the C_i stay independent at the given base points.
pub fn verify_casimirs(
    s: &CoinducedStructure,
    casimirs: &[Expression],
    xs: &[DVector<f64>],
    tol: f64,
) -> Result<CasimirReport, SampleError> {
    assert!(!casimirs.is_empty(), "need at least one Casimir");
    assert!(!xs.is_empty(), "need at least one base sample");
    let k = s.k();
    assert!(casimirs.iter().all(|c| c.dim() == k));
    let expected = casimirs.len();
    let mut max_residual = 0.0_f64;
    let mut ranks = Vec::with_capacity(xs.len());
    let mut failure = None;
    for (index, x) in xs.iter().enumerate() {
        let wrap = at_sample(index, x);
        let sm = s.matrix_at(x.as_slice()).map_err(&wrap)?;
        let mut stacked = DMatrix::zeros(expected, k);
        for (ci, c) in casimirs.iter().enumerate() {
            let g = c.gradient(x.as_slice()).map_err(&wrap)?;
            max_residual = max_residual.max((&sm * &g).amax());
            stacked.row_mut(ci).copy_from(&g.transpose());
        }
        let rank = numeric::numeric_rank(&stacked, tolerances::RANK_REL);
        if rank < expected && failure.is_none() {
            failure = Some(format!(
                "Casimir gradients have rank {rank} < {expected} at sample {index}"
            ));
        }
        ranks.push(rank);
    }
    if max_residual > tol && failure.is_none() {
        failure = Some(format!(
            "Casimir residual {max_residual:.3e} exceeds {tol:.1e}"
        ));
    }
    Ok(CasimirReport {
        max_residual,
        ranks,
        expected_rank: expected,
        ok: failure.is_none(),
        failure,
    })
}

/// z -> (dC/dx_alpha)(F(z)), the coefficient of X_{F_alpha} in the derived
/// field of C. The gradient comes from the chain rule and needs the
/// Hessian of C, hence the jet evaluator.
struct CasimirPullback {
    casimir: Expression,
    component: usize,
    fs: Vec<Expression>,
}

impl CasimirPullback {
    fn push(&self, z: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.fs.iter().map(|f| f.eval(z)).collect()
    }
}

impl ScalarField for CasimirPullback {
    fn dim(&self) -> usize {
        self.fs[0].dim()
    }

    fn value(&self, z: &[f64]) -> Result<f64, EvalError> {
        let x = self.push(z)?;
        let mut seed = vec![0.0; x.len()];
        seed[self.component] = 1.0;
        Ok(self.casimir.eval_dual(&x, &seed)?.1)
    }

    fn gradient(&self, z: &[f64]) -> Result<DVector<f64>, EvalError> {
        let x = self.push(z)?;
        let jet = self.casimir.jet(&x)?;
        let mut out = DVector::zeros(z.len());
        for (beta, f) in self.fs.iter().enumerate() {
            let h = jet.hessian[(self.component, beta)];
            if h != 0.0 {
                out += f.gradient(z)? * h;
            }
        }
        Ok(out)
    }
}

/// The derived fields X_{C_i o F} = sum_alpha (dC_i/dx_alpha o F) X_{F_alpha}.
/// Each equals the Hamiltonian field of the composed function C_i o F.
pub fn derived_fields(
    chart: &SymplecticChart,
    fs: &[Expression],
    casimirs: &[Expression],
) -> Vec<LinearCombinationField> {
    let k = fs.len();
    assert!(casimirs.iter().all(|c| c.dim() == k));
    casimirs
        .iter()
        .map(|c| {
            let mut coeffs: Vec<Arc<dyn ScalarField>> = Vec::with_capacity(k);
            let mut fields: Vec<Arc<dyn VectorField>> = Vec::with_capacity(k);
            for (alpha, f) in fs.iter().enumerate() {
                coeffs.push(Arc::new(CasimirPullback {
                    casimir: c.clone(),
                    component: alpha,
                    fs: fs.to_vec(),
                }));
                fields.push(Arc::new(hamiltonian_field(chart, f.clone())));
            }
            LinearCombinationField::new(coeffs, fields)
        })
        .collect()
}

/// Gradient of the composed function C o F at z, by the chain rule.
fn composed_gradient(
    c: &Expression,
    fs: &[Expression],
    z: &[f64],
) -> Result<DVector<f64>, EvalError> {
    let x: Vec<f64> = fs.iter().map(|f| f.eval(z)).collect::<Result<_, _>>()?;
    let gc = c.gradient(&x)?;
    let mut out = DVector::zeros(z.len());
    for (beta, f) in fs.iter().enumerate() {
        if gc[beta] != 0.0 {
            out += f.gradient(z)? * gc[beta];
        }
    }
    Ok(out)
}

/// Max pairwise bracket |{C_i o F, C_j o F}| over samples. Vanishes when
/// the C_i are Casimirs of the coinduced structure.
pub fn pairwise_commutation_of_derived(
    chart: &SymplecticChart,
    fs: &[Expression],
    casimirs: &[Expression],
    samples: &[DVector<f64>],
) -> Result<f64, SampleError> {
    let n = chart.n();
    let mut max = 0.0_f64;
    for (index, z) in samples.iter().enumerate() {
        let wrap = at_sample(index, z);
        let grads: Vec<DVector<f64>> = casimirs
            .iter()
            .map(|c| composed_gradient(c, fs, z.as_slice()))
            .collect::<Result<_, _>>()
            .map_err(&wrap)?;
        for i in 0..grads.len() {
            for j in (i + 1)..grads.len() {
                max = max.max(poisson_bracket_grads(n, &grads[i], &grads[j]).abs());
            }
        }
    }
    Ok(max)
}

/// Max |{C_i o F, F_lambda}| over samples: composed Casimirs must commute
/// with every component of F.
pub fn centrality_residual(
    chart: &SymplecticChart,
    fs: &[Expression],
    casimirs: &[Expression],
    samples: &[DVector<f64>],
) -> Result<f64, SampleError> {
    let n = chart.n();
    let mut max = 0.0_f64;
    for (index, z) in samples.iter().enumerate() {
        let wrap = at_sample(index, z);
        for c in casimirs {
            let gc = composed_gradient(c, fs, z.as_slice()).map_err(&wrap)?;
            for f in fs {
                let gf = f.gradient(z.as_slice()).map_err(&wrap)?;
                max = max.max(poisson_bracket_grads(n, &gc, &gf).abs());
            }
        }
    }
    Ok(max)
}

/// F(z) as a base point.
pub fn pushforward(fs: &[Expression], z: &[f64]) -> Result<DVector<f64>, EvalError> {
    Ok(DVector::from_iterator(
        fs.len(),
        fs.iter().map(|f| f.eval(z)).collect::<Result<Vec<_>, _>>()?,
    ))
}

pub fn pushforward_all(
    fs: &[Expression],
    samples: &[DVector<f64>],
) -> Result<Vec<DVector<f64>>, SampleError> {
    samples
        .iter()
        .enumerate()
        .map(|(index, z)| pushforward(fs, z.as_slice()).map_err(at_sample(index, z)))
        .collect()
}

/// Expand each base point into a fiber group by flowing along the derived
/// fields, which preserve all of F. Output keeps base points and their
/// partners adjacent, ready for [`check_closure`].
pub fn fiber_partners(
    fields: &[LinearCombinationField],
    bases: &[DVector<f64>],
    times: &[f64],
    opts: &IntegratorOptions,
) -> Result<Vec<DVector<f64>>, FlowError> {
    assert_eq!(fields.len(), times.len(), "one flow time per field");
    let mut out = Vec::with_capacity(bases.len() * (1 + fields.len()));
    for z in bases {
        out.push(z.clone());
        for (field, &t) in fields.iter().zip(times) {
            out.push(integrate(field, z.as_slice(), t, opts)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SampleBox;

    fn two_oscillators() -> (SymplecticChart, Vec<Expression>) {
        let chart = SymplecticChart::standard(2);
        let fs = vec![
            chart.parse("(p1^2 + q1^2)/2").unwrap(),
            chart.parse("(p2^2 + q2^2)/2").unwrap(),
        ];
        (chart, fs)
    }

    fn central_field() -> (SymplecticChart, Vec<Expression>) {
        let chart = SymplecticChart::standard(3);
        let fs = vec![
            chart
                .parse("(p1^2 + p2^2 + p3^2)/2 + (q1^2 + q2^2 + q3^2)/2")
                .unwrap(),
            chart.parse("q2*p3 - q3*p2").unwrap(),
            chart.parse("q3*p1 - q1*p3").unwrap(),
            chart.parse("q1*p2 - q2*p1").unwrap(),
        ];
        (chart, fs)
    }

    fn central_structure() -> CoinducedStructure {
        CoinducedStructure::new(4, &[(2, 3, "x4"), (2, 4, "-x3"), (3, 4, "x2")]).unwrap()
    }

    fn central_casimirs() -> Vec<Expression> {
        let names = base_coords(4);
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        vec![
            Expression::parse("x2^2 + x3^2 + x4^2", &names).unwrap(),
            Expression::parse("x1", &names).unwrap(),
        ]
    }

    fn central_samples(seed: u64, count: usize) -> Vec<DVector<f64>> {
        let (chart, _) = central_field();
        let guard = chart
            .parse("(q2*p3 - q3*p2)^2 + (q3*p1 - q1*p3)^2 + (q1*p2 - q2*p1)^2")
            .unwrap();
        crate::sampling::sample_avoiding(seed, &SampleBox::centered(6, 1.5), count, &[guard], 0.05)
            .unwrap()
    }

    #[test]
    fn decoupled_oscillators_are_complete() {
        let (chart, fs) = two_oscillators();
        let samples = crate::sampling::sample(7, &SampleBox::centered(4, 1.5), 50);
        let report = check_involution(&chart, &fs, &samples, tolerances::INVOLUTION).unwrap();
        assert!(report.max_involution_residual < 1e-12);
        assert_eq!(report.jacobian_rank_range(), (2, 2));
        assert_eq!(report.verdict, Verdict::Complete { n: 2 });
        assert!(report.antisymmetry_defect() < 1e-12);
    }

    #[test]
    fn single_function_is_partial() {
        let chart = SymplecticChart::standard(2);
        let fs = vec![chart.parse("p1").unwrap()];
        let samples = crate::sampling::sample(3, &SampleBox::centered(4, 2.0), 20);
        let report = check_involution(&chart, &fs, &samples, tolerances::INVOLUTION).unwrap();
        assert_eq!(report.max_involution_residual, 0.0);
        assert_eq!(report.worst_pair, None);
        assert_eq!(report.verdict, Verdict::Partial { k: 1 });
    }

    #[test]
    fn canonical_pair_fails_at_its_pair() {
        let chart = SymplecticChart::standard(1);
        let fs = vec![chart.parse("p1").unwrap(), chart.parse("q1").unwrap()];
        let samples = crate::sampling::sample(5, &SampleBox::centered(2, 1.0), 10);
        let report = check_involution(&chart, &fs, &samples, tolerances::INVOLUTION).unwrap();
        assert_eq!(report.max_involution_residual, 1.0);
        assert_eq!(report.worst_pair, Some((1, 2)));
        assert!(matches!(report.verdict, Verdict::Failed { .. }));
    }

    #[test]
    fn central_field_is_not_in_involution() {
        let (chart, fs) = central_field();
        let samples = central_samples(11, 30);
        let report = check_involution(&chart, &fs, &samples, tolerances::INVOLUTION).unwrap();
        let (i, j) = report.worst_pair.unwrap();
        assert!(i >= 2 && j >= 3, "angular momenta pair expected, got ({i}, {j})");
        assert!(matches!(report.verdict, Verdict::Failed { .. }));
    }

    #[test]
    fn central_field_closure_via_fiber_partners() {
        let (chart, fs) = central_field();
        let derived = derived_fields(&chart, &fs, &central_casimirs());
        let bases = central_samples(13, 20);
        let samples = fiber_partners(
            &derived,
            &bases,
            &[0.37, -0.61],
            &IntegratorOptions::with_tol(1e-12),
        )
        .unwrap();
        let report = check_closure(
            &chart,
            &fs,
            &samples,
            tolerances::PAIR_MATCH,
            tolerances::CLOSURE_PAIR,
        )
        .unwrap();
        assert_eq!(report.matched_groups, 20);
        assert!(report.closure_residual.unwrap() < 1e-8);
        assert_eq!(report.verdict, Verdict::Noncommutative { k: 4, rank: 2 });
        assert_eq!(report.s_rank_range(), (2, 2));
        assert_eq!(report.s_rank_range().0 % 2, 0);
    }

    #[test]
    fn closure_without_partners_is_unverifiable() {
        let (chart, fs) = central_field();
        let samples = central_samples(17, 10);
        let report = check_closure(
            &chart,
            &fs,
            &samples,
            tolerances::PAIR_MATCH,
            tolerances::CLOSURE_PAIR,
        )
        .unwrap();
        assert_eq!(report.matched_groups, 0);
        assert!(report.closure_unverifiable.is_some());
        assert!(matches!(report.verdict, Verdict::Failed { .. }));
    }

    #[test]
    fn straddling_zero_momentum_raises_rank_drop() {
        let (chart, fs) = central_field();
        let mut samples = central_samples(19, 4);
        let degenerate = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.5, 0.0, 0.0]);
        samples.push(degenerate.clone());
        samples.push(degenerate);
        let derived = derived_fields(&chart, &fs, &central_casimirs());
        let mut all = fiber_partners(
            &derived,
            &samples[..4],
            &[0.2, -0.3],
            &IntegratorOptions::with_tol(1e-12),
        )
        .unwrap();
        all.extend_from_slice(&samples[4..]);
        let report = check_closure(
            &chart,
            &fs,
            &all,
            tolerances::PAIR_MATCH,
            tolerances::CLOSURE_PAIR,
        )
        .unwrap();
        assert_eq!(report.s_rank_range(), (0, 2));
        assert!(report.diagnostics.iter().any(|d| d.contains("rank drop")));
        assert!(matches!(report.verdict, Verdict::Failed { .. }));
    }

    #[test]
    fn declared_structure_matches_measured_brackets() {
        let (chart, fs) = central_field();
        let s = central_structure();
        let report = s.consistency(&chart, &fs, &central_samples(23, 30)).unwrap();
        assert!(report.max_residual < 1e-10, "residual {}", report.max_residual);
        let m = s.matrix_at(&[0.3, 1.0, -2.0, 0.7]).unwrap();
        assert_eq!((&m + m.transpose()).amax(), 0.0);
        assert_eq!(m[(1, 2)], 0.7);
        assert_eq!(m[(1, 3)], 2.0);
        assert_eq!(m[(2, 3)], 1.0);
    }

    #[test]
    fn structure_rejects_bad_tables() {
        assert!(matches!(
            CoinducedStructure::new(3, &[(2, 2, "x1")]),
            Err(StructureError::BadIndex { .. })
        ));
        assert!(matches!(
            CoinducedStructure::new(3, &[(1, 2, "x1"), (1, 2, "x2")]),
            Err(StructureError::Duplicate { .. })
        ));
        assert!(matches!(
            CoinducedStructure::new(3, &[(1, 2, "x9")]),
            Err(StructureError::Parse { .. })
        ));
    }

    #[test]
    fn casimirs_verify_on_central_field() {
        let (_, fs) = central_field();
        let xs = pushforward_all(&fs, &central_samples(29, 30)).unwrap();
        let report =
            verify_casimirs(&central_structure(), &central_casimirs(), &xs, tolerances::CASIMIR)
                .unwrap();
        assert!(report.ok, "{:?}", report.failure);
        assert!(report.max_residual < 1e-12);
        assert!(report.ranks.iter().all(|&r| r == 2));
    }

    #[test]
    fn constant_casimir_fails_independence() {
        let (_, fs) = central_field();
        let xs = pushforward_all(&fs, &central_samples(31, 10)).unwrap();
        let names = base_coords(4);
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let consts = vec![Expression::parse("1", &names).unwrap()];
        let report =
            verify_casimirs(&central_structure(), &consts, &xs, tolerances::CASIMIR).unwrap();
        assert!(!report.ok);
        assert!(report.failure.unwrap().contains("rank 0"));
    }

    #[test]
    fn non_casimir_is_detected() {
        let (_, fs) = central_field();
        let xs = pushforward_all(&fs, &central_samples(37, 10)).unwrap();
        let names = base_coords(4);
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let bad = vec![Expression::parse("x2", &names).unwrap()];
        let report =
            verify_casimirs(&central_structure(), &bad, &xs, tolerances::CASIMIR).unwrap();
        assert!(!report.ok);
        assert!(report.max_residual > 0.1);
    }

    #[test]
    fn derived_field_matches_direct_hamiltonian_field() {
        let (chart, fs) = central_field();
        let derived = derived_fields(&chart, &fs, &central_casimirs());

        // |L|^2 expanded in phase-space coordinates.
        let l2 = chart
            .parse("(q2*p3 - q3*p2)^2 + (q3*p1 - q1*p3)^2 + (q1*p2 - q2*p1)^2")
            .unwrap();
        let xl2 = hamiltonian_field(&chart, l2);
        let xh = hamiltonian_field(&chart, fs[0].clone());
        for z in central_samples(41, 10) {
            let a = derived[0].value(z.as_slice()).unwrap();
            let b = xl2.value(z.as_slice()).unwrap();
            assert!((a - b).amax() < 1e-10);
            // The second Casimir is the coordinate x1, so its derived
            // field is X_H itself.
            let c = derived[1].value(z.as_slice()).unwrap();
            let d = xh.value(z.as_slice()).unwrap();
            assert!((c - d).amax() < 1e-14);
        }
    }

    #[test]
    fn true_casimirs_commute_pairwise_and_centrally() {
        let (chart, fs) = central_field();
        let samples = central_samples(43, 20);
        let pairwise =
            pairwise_commutation_of_derived(&chart, &fs, &central_casimirs(), &samples).unwrap();
        assert!(pairwise < 1e-10, "pairwise {pairwise}");
        let central = centrality_residual(&chart, &fs, &central_casimirs(), &samples).unwrap();
        assert!(central < 1e-10, "centrality {central}");
    }

    #[test]
    fn corrupted_casimirs_are_visible() {
        // so(3) alone: corrupt both Casimirs so their composed brackets
        // pick up {L1, L2} = L3.
        let chart = SymplecticChart::standard(3);
        let fs = vec![
            chart.parse("q2*p3 - q3*p2").unwrap(),
            chart.parse("q3*p1 - q1*p3").unwrap(),
            chart.parse("q1*p2 - q2*p1").unwrap(),
        ];
        let names = base_coords(3);
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let casi = Expression::parse("x1^2 + x2^2 + x3^2", &names).unwrap();
        let bad = vec![
            Expression::parse("x1^2 + x2^2 + x3^2 + x1", &names).unwrap(),
            Expression::parse("x1^2 + x2^2 + x3^2 + x2", &names).unwrap(),
        ];
        let samples = central_samples(47, 10);
        let good = pairwise_commutation_of_derived(&chart, &fs, &[casi.clone(), casi], &samples)
            .unwrap();
        assert!(good < 1e-12);
        let corrupt = pairwise_commutation_of_derived(&chart, &fs, &bad, &samples).unwrap();
        assert!(corrupt > 0.1, "corrupt residual {corrupt}");

        // Centrality catches a single corrupted Casimir as well.
        let (chart4, fs4) = central_field();
        let names4 = base_coords(4);
        let names4: Vec<&str> = names4.iter().map(String::as_str).collect();
        let bad4 = vec![Expression::parse("x2^2 + x3^2 + x4^2 + x2", &names4).unwrap()];
        let central = centrality_residual(&chart4, &fs4, &bad4, &samples).unwrap();
        assert!(central > 0.1, "corrupt centrality {central}");
    }

    #[test]
    fn verdicts_are_stable_under_resampling() {
        let (chart, fs) = two_oscillators();
        for seed in [101, 102, 103, 104, 105] {
            let samples = crate::sampling::sample(seed, &SampleBox::centered(4, 1.5), 50);
            let report =
                check_involution(&chart, &fs, &samples, tolerances::INVOLUTION).unwrap();
            assert_eq!(report.verdict, Verdict::Complete { n: 2 });
        }
    }
}
