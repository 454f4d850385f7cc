//! 480-D trial vectors to a scalar feature.
//!
//! Classwise PCA keeps, for each class, the leading principal directions of
//! that class's covariance plus the direction separating the two class means.
//! Inside each class subspace a Fisher-type eigenproblem (between-class scatter
//! against within-class scatter) yields one extraction direction. At inference
//! a trial is mapped through both branches and the branch whose own class is
//! more probable under its 1-D Gaussian model supplies the feature.
//!
//! Branch outputs are affinely rescaled so that the training means of the
//! non-oddball and oddball classes sit at 0 and 1 in either branch; the
//! piecewise map is therefore on a common scale.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::classifier::Label;
use crate::error::{Error, Result};
use crate::linalg::{
    axpy, canonical_sign, cholesky, dot, norm, normalize, solve_lower, solve_lower_transpose,
    symmetric_eigen, Matrix,
};
use crate::math::ln;

/// Fraction of the largest eigenvalue below which the within-class scatter
/// is treated as singular.
const SINGULAR_RATIO: f64 = 1e-10;
const RIDGE_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct CpcaConfig {
    /// Fraction of class variance the retained components must explain.
    pub eta: f64,
    /// Upper bound on retained principal components per class.
    pub max_components: usize,
}

impl Default for CpcaConfig {
    fn default() -> Self {
        CpcaConfig {
            eta: 0.9,
            max_components: 30,
        }
    }
}

impl CpcaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::param("eta", "must lie in (0, 1]"));
        }
        if self.max_components == 0 {
            return Err(Error::param("max_components", "must be at least 1"));
        }
        Ok(())
    }
}

/// Running first and second moments of one class, centred on a fixed
/// reference point. Moments sharing a reference can be merged, which lets
/// cross-validation assemble training statistics from per-fold pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMoments {
    dim: usize,
    count: usize,
    reference: Vec<f64>,
    sum: Vec<f64>,
    /// Lower triangle of the centred scatter, stored densely.
    scatter: Vec<f64>,
}

impl ClassMoments {
    pub fn new(reference: Vec<f64>) -> Self {
        let dim = reference.len();
        ClassMoments {
            dim,
            count: 0,
            reference,
            sum: vec![0.0; dim],
            scatter: vec![0.0; dim * dim],
        }
    }

    /// Moments of `vectors` centred on their own mean.
    pub fn from_vectors<V: AsRef<[f64]>>(vectors: &[V]) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or_else(|| Error::InsufficientData("empty class".into()))?;
        let dim = first.as_ref().len();
        let mut mean = vec![0.0; dim];
        for v in vectors {
            let v = v.as_ref();
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.len(),
                });
            }
            axpy(1.0, v, &mut mean);
        }
        let n = vectors.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        let mut out = ClassMoments::new(mean);
        for v in vectors {
            out.add(v.as_ref())?;
        }
        Ok(out)
    }

    pub fn add(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        let d: Vec<f64> = x.iter().zip(&self.reference).map(|(a, r)| a - r).collect();
        axpy(1.0, &d, &mut self.sum);
        let n = self.dim;
        for i in 0..n {
            let di = d[i];
            if di == 0.0 {
                continue;
            }
            axpy(di, &d[..=i], &mut self.scatter[i * n..i * n + i + 1]);
        }
        self.count += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &ClassMoments) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        if other.reference != self.reference {
            return Err(Error::param("moments", "cannot merge moments with different references"));
        }
        axpy(1.0, &other.sum, &mut self.sum);
        axpy(1.0, &other.scatter, &mut self.scatter);
        self.count += other.count;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.reference
            .iter()
            .zip(&self.sum)
            .map(|(r, s)| r + s / n)
            .collect()
    }

    /// Sample covariance (divisor n - 1).
    pub fn covariance(&self) -> Result<Matrix> {
        if self.count < 2 {
            return Err(Error::InsufficientData(format!(
                "need at least 2 samples per class, got {}",
                self.count
            )));
        }
        let n = self.count as f64;
        let d = self.dim;
        let mut c = vec![0.0; d * d];
        for i in 0..d {
            let si = self.sum[i] / n;
            for j in 0..=i {
                c[i * d + j] = (self.scatter[i * d + j] - si * self.sum[j]) / (n - 1.0);
            }
        }
        let mut m = Matrix::from_row_major(d, d, c)?;
        m.symmetrize_from_lower();
        Ok(m)
    }
}

/// The subspace adapted to one class.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassSubspace {
    pub class: Label,
    /// Class mean, the centre of projection.
    pub mean: Vec<f64>,
    /// Orthonormal basis vectors, one per row: the retained principal
    /// components followed (when independent of them) by the
    /// mean-difference direction.
    pub basis: Matrix,
    /// Number of retained principal components.
    pub components: usize,
    /// Variances along the retained components.
    pub eigenvalues: Vec<f64>,
    /// Total class variance (covariance trace).
    pub total_variance: f64,
}

impl ClassSubspace {
    /// Share of class variance explained by the retained components.
    pub fn explained(&self) -> f64 {
        if self.total_variance > 0.0 {
            self.eigenvalues.iter().map(|v| v.max(0.0)).sum::<f64>() / self.total_variance
        } else {
            1.0
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    /// Coordinates of `x - mean` in the basis.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                actual: x.len(),
            });
        }
        let centred: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        self.basis.mul_vec(&centred)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CpcaModel {
    pub oddball: ClassSubspace,
    pub non_oddball: ClassSubspace,
    pub config: CpcaConfig,
}

impl CpcaModel {
    pub fn subspace(&self, class: Label) -> &ClassSubspace {
        match class {
            Label::Oddball => &self.oddball,
            Label::NonOddball => &self.non_oddball,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.oddball.mean.len()
    }
}

fn split_by_label<'a, V: AsRef<[f64]>>(vectors: &'a [V], labels: &[Label]) -> Result<(Vec<&'a [f64]>, Vec<&'a [f64]>)> {
    if vectors.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: vectors.len(),
            actual: labels.len(),
        });
    }
    let mut o = Vec::new();
    let mut e = Vec::new();
    for (v, l) in vectors.iter().zip(labels) {
        match l {
            Label::Oddball => o.push(v.as_ref()),
            Label::NonOddball => e.push(v.as_ref()),
        }
    }
    Ok((o, e))
}

pub fn fit_cpca<V: AsRef<[f64]>>(vectors: &[V], labels: &[Label], config: CpcaConfig) -> Result<CpcaModel> {
    let (o, e) = split_by_label(vectors, labels)?;
    if o.len() < 2 || e.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 samples per class, got {} oddball and {} non-oddball",
            o.len(),
            e.len()
        )));
    }
    let mo = ClassMoments::from_vectors(&o)?;
    let me = ClassMoments::from_vectors(&e)?;
    fit_cpca_from_moments(&mo, &me, config)
}

pub fn fit_cpca_from_moments(oddball: &ClassMoments, non_oddball: &ClassMoments, config: CpcaConfig) -> Result<CpcaModel> {
    config.validate()?;
    if oddball.dim() != non_oddball.dim() {
        return Err(Error::DimensionMismatch {
            expected: oddball.dim(),
            actual: non_oddball.dim(),
        });
    }
    let mean_o = oddball.mean();
    let mean_e = non_oddball.mean();
    let diff: Vec<f64> = mean_o.iter().zip(&mean_e).map(|(a, b)| a - b).collect();
    Ok(CpcaModel {
        oddball: class_subspace(Label::Oddball, oddball, &diff, config)?,
        non_oddball: class_subspace(Label::NonOddball, non_oddball, &diff, config)?,
        config,
    })
}

fn class_subspace(class: Label, moments: &ClassMoments, mean_diff: &[f64], config: CpcaConfig) -> Result<ClassSubspace> {
    let cov = moments.covariance()?;
    let dim = cov.rows();
    let k = config.max_components.min(dim);
    let eig = symmetric_eigen(&cov, k)?;
    let total: f64 = cov.trace();

    let components = if total > 0.0 {
        let target = config.eta * total;
        let mut acc = 0.0;
        let mut m = k;
        for (i, v) in eig.values.iter().take(k).enumerate() {
            acc += v.max(0.0);
            if acc >= target * (1.0 - 1e-12) {
                m = i + 1;
                break;
            }
        }
        m
    } else {
        1
    };

    let mut rows: Vec<Vec<f64>> = eig.vectors.into_iter().take(components).collect();
    let dnorm = norm(mean_diff);
    if dnorm > 0.0 {
        let mut r = mean_diff.to_vec();
        for _ in 0..2 {
            for b in &rows {
                let c = dot(&r, b);
                axpy(-c, b, &mut r);
            }
        }
        if norm(&r) > 1e-9 * dnorm {
            normalize(&mut r);
            rows.push(r);
        }
    }
    Ok(ClassSubspace {
        class,
        mean: moments.mean(),
        basis: Matrix::from_rows(&rows)?,
        components,
        eigenvalues: eig.values[..components].to_vec(),
        total_variance: total,
    })
}

/// A unit direction maximizing between-class over within-class scatter.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherDirection {
    pub direction: Vec<f64>,
    /// Ridge added to the within-class scatter (0 if it was well conditioned).
    pub ridge: f64,
}

pub fn fisher_direction<V: AsRef<[f64]>>(class_o: &[V], class_e: &[V]) -> Result<FisherDirection> {
    if class_o.is_empty() || class_e.is_empty() {
        return Err(Error::InsufficientData("both classes required".into()));
    }
    let m = class_o[0].as_ref().len();
    if m == 0 {
        return Err(Error::param("dimension", "must be at least 1"));
    }
    let mean = |set: &[V]| -> Result<Vec<f64>> {
        let mut acc = vec![0.0; m];
        for v in set {
            let v = v.as_ref();
            if v.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    actual: v.len(),
                });
            }
            axpy(1.0, v, &mut acc);
        }
        let n = set.len() as f64;
        acc.iter_mut().for_each(|x| *x /= n);
        Ok(acc)
    };
    let mu_o = mean(class_o)?;
    let mu_e = mean(class_e)?;
    let n_total = (class_o.len() + class_e.len()) as f64;

    let mut sw = Matrix::zeros(m, m);
    for (set, mu) in [(class_o, &mu_o), (class_e, &mu_e)] {
        for v in set {
            let d: Vec<f64> = v.as_ref().iter().zip(mu.iter()).map(|(a, b)| a - b).collect();
            for i in 0..m {
                axpy(d[i] / n_total, &d[..=i], &mut sw.row_mut(i)[..=i]);
            }
        }
    }
    sw.symmetrize_from_lower();
    let delta: Vec<f64> = mu_o.iter().zip(&mu_e).map(|(a, b)| a - b).collect();

    let sw_eig = symmetric_eigen(&sw, 0)?;
    let top = sw_eig.values.first().copied().unwrap_or(0.0);
    let bottom = sw_eig.values.last().copied().unwrap_or(0.0);
    let mut ridge = 0.0;
    if !(top > 0.0) || bottom <= SINGULAR_RATIO * top {
        let tr = sw.trace();
        let sb_trace = dot(&delta, &delta);
        let scale = if tr > 0.0 {
            tr
        } else if sb_trace > 0.0 {
            sb_trace
        } else {
            m as f64
        };
        ridge = RIDGE_FRACTION * scale / m as f64;
        for i in 0..m {
            let v = sw.get(i, i) + ridge;
            sw.set(i, i, v);
        }
    }
    let l = cholesky(&sw).ok_or_else(|| Error::Numerical("within-class scatter not positive definite".into()))?;

    // Whitened between-class scatter (L⁻¹Δ)(L⁻¹Δ)ᵀ.
    let mut u = delta;
    solve_lower(&l, &mut u);
    let mut whitened = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            whitened.set(i, j, u[i] * u[j]);
        }
    }
    let top = symmetric_eigen(&whitened, 1)?;
    let mut w = top.vectors.into_iter().next().expect("one vector requested");
    solve_lower_transpose(&l, &mut w);
    if normalize(&mut w) == 0.0 {
        return Err(Error::Numerical("degenerate discriminant direction".into()));
    }
    canonical_sign(&mut w);
    Ok(FisherDirection { direction: w, ridge })
}

/// One branch of the piecewise feature map.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Branch {
    /// Unit extraction vector in subspace coordinates.
    pub direction: Vec<f64>,
    /// Training mean of the raw branch output for each class.
    pub mean_o: f64,
    pub mean_e: f64,
    /// Pooled within-class variance of the raw output, used for gating.
    pub variance: f64,
    pub prior_o: f64,
    pub ridge: f64,
}

impl Branch {
    fn raw(&self, coords: &[f64]) -> f64 {
        dot(&self.direction, coords)
    }

    /// Raw output rescaled so the class means map to 0 (non-oddball) and 1 (oddball).
    pub fn normalized(&self, raw: f64) -> f64 {
        let span = self.mean_o - self.mean_e;
        let span = if span == 0.0 { 1.0 } else { span };
        (raw - self.mean_e) / span
    }

    /// `ln p(class | raw)` under the branch's 1-D Gaussian model.
    pub fn log_posterior(&self, raw: f64, class: Label) -> f64 {
        let var = self.gating_variance();
        let lo = ln(self.prior_o) - (raw - self.mean_o) * (raw - self.mean_o) / (2.0 * var);
        let le = ln(1.0 - self.prior_o) - (raw - self.mean_e) * (raw - self.mean_e) / (2.0 * var);
        let top = lo.max(le);
        let lse = top + ln(crate::math::exp(lo - top) + crate::math::exp(le - top));
        match class {
            Label::Oddball => lo - lse,
            Label::NonOddball => le - lse,
        }
    }

    fn gating_variance(&self) -> f64 {
        let span = self.mean_o - self.mean_e;
        let floor = (1e-12 * span * span).max(f64::MIN_POSITIVE);
        self.variance.max(floor)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiscriminantModel {
    /// Branch inside the oddball subspace.
    pub oddball: Branch,
    /// Branch inside the non-oddball subspace.
    pub non_oddball: Branch,
}

impl DiscriminantModel {
    pub fn branch(&self, class: Label) -> &Branch {
        match class {
            Label::Oddball => &self.oddball,
            Label::NonOddball => &self.non_oddball,
        }
    }
}

fn fit_branch(subspace: &ClassSubspace, o: &[&[f64]], e: &[&[f64]]) -> Result<Branch> {
    let po: Vec<Vec<f64>> = o.iter().map(|x| subspace.project(x)).collect::<Result<_>>()?;
    let pe: Vec<Vec<f64>> = e.iter().map(|x| subspace.project(x)).collect::<Result<_>>()?;
    let fd = fisher_direction(&po, &pe)?;
    let ro: Vec<f64> = po.iter().map(|y| dot(&fd.direction, y)).collect();
    let re: Vec<f64> = pe.iter().map(|y| dot(&fd.direction, y)).collect();
    let mean_o = ro.iter().sum::<f64>() / ro.len() as f64;
    let mean_e = re.iter().sum::<f64>() / re.len() as f64;
    let ss: f64 = ro.iter().map(|r| (r - mean_o) * (r - mean_o)).sum::<f64>()
        + re.iter().map(|r| (r - mean_e) * (r - mean_e)).sum::<f64>();
    let n = (ro.len() + re.len()) as f64;
    Ok(Branch {
        direction: fd.direction,
        mean_o,
        mean_e,
        variance: ss / (n - 2.0).max(1.0),
        prior_o: ro.len() as f64 / n,
        ridge: fd.ridge,
    })
}

pub fn fit_discriminant<V: AsRef<[f64]>>(cpca: &CpcaModel, vectors: &[V], labels: &[Label]) -> Result<DiscriminantModel> {
    let (o, e) = split_by_label(vectors, labels)?;
    if o.is_empty() || e.is_empty() {
        return Err(Error::InsufficientData("both classes required".into()));
    }
    Ok(DiscriminantModel {
        oddball: fit_branch(&cpca.oddball, &o, &e)?,
        non_oddball: fit_branch(&cpca.non_oddball, &o, &e)?,
    })
}

/// Per-branch detail of one extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extraction {
    /// The feature value.
    pub value: f64,
    /// The class whose subspace supplied it.
    pub branch: Label,
    /// Normalized outputs of the oddball and non-oddball branches.
    pub outputs: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureModel {
    pub cpca: CpcaModel,
    pub disc: DiscriminantModel,
}

impl FeatureModel {
    pub fn fit<V: AsRef<[f64]>>(vectors: &[V], labels: &[Label], config: CpcaConfig) -> Result<Self> {
        let cpca = fit_cpca(vectors, labels, config)?;
        let disc = fit_discriminant(&cpca, vectors, labels)?;
        Ok(FeatureModel { cpca, disc })
    }

    /// Fit from precomputed class moments of exactly the given training vectors.
    pub fn fit_with_moments<V: AsRef<[f64]>>(
        oddball: &ClassMoments,
        non_oddball: &ClassMoments,
        vectors: &[V],
        labels: &[Label],
        config: CpcaConfig,
    ) -> Result<Self> {
        let cpca = fit_cpca_from_moments(oddball, non_oddball, config)?;
        let disc = fit_discriminant(&cpca, vectors, labels)?;
        Ok(FeatureModel { cpca, disc })
    }

    pub fn extract(&self, x: &[f64]) -> Result<f64> {
        Ok(self.extract_detail(x)?.value)
    }

    pub fn extract_detail(&self, x: &[f64]) -> Result<Extraction> {
        if x.len() != self.cpca.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.cpca.input_dim(),
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let raw_o = self.disc.oddball.raw(&self.cpca.oddball.project(x)?);
        let raw_e = self.disc.non_oddball.raw(&self.cpca.non_oddball.project(x)?);
        let lp_o = self.disc.oddball.log_posterior(raw_o, Label::Oddball);
        let lp_e = self.disc.non_oddball.log_posterior(raw_e, Label::NonOddball);
        let outputs = [
            self.disc.oddball.normalized(raw_o),
            self.disc.non_oddball.normalized(raw_e),
        ];
        let (branch, value) = if lp_o > lp_e {
            (Label::Oddball, outputs[0])
        } else {
            (Label::NonOddball, outputs[1])
        };
        Ok(Extraction {
            value,
            branch,
            outputs,
        })
    }
}
