//! Binary (mention, entity) classifiers: logistic regression and a small
//! feed-forward network, trained full-batch on z-scored features.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{FeatureSet, LinkFeatureVector};
use super::optim::{GradientDescent, Lbfgs, OptimReport};
use super::LinkError;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "logreg")]
    LogisticRegression,
    #[serde(rename = "mlp")]
    Mlp,
}

impl ModelKind {
    pub fn default_hidden(self) -> Vec<usize> {
        match self {
            ModelKind::LogisticRegression => vec![],
            ModelKind::Mlp => vec![20, 12],
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "logreg" | "logistic_regression" => Ok(ModelKind::LogisticRegression),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(format!(
                "unknown model kind `{other}` (expected logreg or mlp)"
            )),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::LogisticRegression => "logreg",
            ModelKind::Mlp => "mlp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Lbfgs,
    /// Full-batch gradient descent for `steps` iterations.
    GradientDescent {
        steps: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hyper {
    /// Hidden layer sizes; `None` uses the kind's default.
    pub hidden: Option<Vec<usize>>,
    pub max_iter: usize,
    /// L2 penalty on weights (not biases).
    pub alpha: f64,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub threshold: f64,
    /// Reweight classes by inverse frequency.
    pub balance_classes: bool,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            hidden: None,
            max_iter: 600,
            alpha: 1e-4,
            seed: 42,
            optimizer: OptimizerKind::Lbfgs,
            threshold: 0.5,
            balance_classes: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub examples: usize,
    pub positives: usize,
    pub iterations: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// A trained classifier with its frozen normalization statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkerModel {
    pub version: u32,
    pub kind: ModelKind,
    pub features: FeatureSet,
    /// Layer widths from input to the single output unit.
    pub layers: Vec<usize>,
    pub params: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub threshold: f64,
    #[serde(default)]
    pub training: Option<TrainingSummary>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Parameter layout: per layer, the `out x in` weight matrix (row-major)
/// followed by `out` biases.
struct Layout {
    layers: Vec<usize>,
    offsets: Vec<(usize, usize)>,
    total: usize,
}

impl Layout {
    fn new(layers: &[usize]) -> Layout {
        let mut offsets = Vec::new();
        let mut at = 0;
        for w in layers.windows(2) {
            let (i, o) = (w[0], w[1]);
            offsets.push((at, at + i * o));
            at += i * o + o;
        }
        Layout {
            layers: layers.to_vec(),
            offsets,
            total: at,
        }
    }

    fn depth(&self) -> usize {
        self.offsets.len()
    }

    fn scratch(&self) -> Vec<Vec<f64>> {
        self.layers.iter().map(|&n| vec![0.0; n]).collect()
    }

    /// Fills `acts` and returns the output logit.
    fn forward(&self, params: &[f64], x: &[f64], acts: &mut [Vec<f64>]) -> f64 {
        acts[0].copy_from_slice(x);
        for l in 0..self.depth() {
            let (wo, bo) = self.offsets[l];
            let (n_in, n_out) = (self.layers[l], self.layers[l + 1]);
            let last = l + 1 == self.depth();
            let (prev, next) = acts.split_at_mut(l + 1);
            let input = &prev[l];
            let out = &mut next[0];
            for o in 0..n_out {
                let row = &params[wo + o * n_in..wo + (o + 1) * n_in];
                let mut z = params[bo + o];
                for (w, a) in row.iter().zip(input) {
                    z += w * a;
                }
                out[o] = if last { z } else { z.max(0.0) };
            }
        }
        acts[self.depth()][0]
    }

    fn backward(
        &self,
        params: &[f64],
        acts: &[Vec<f64>],
        dz: f64,
        grad: &mut [f64],
        deltas: &mut [Vec<f64>],
    ) {
        let depth = self.depth();
        deltas[depth][0] = dz;
        for l in (0..depth).rev() {
            let (wo, bo) = self.offsets[l];
            let (n_in, n_out) = (self.layers[l], self.layers[l + 1]);
            for o in 0..n_out {
                let d = deltas[l + 1][o];
                if d == 0.0 {
                    continue;
                }
                grad[bo + o] += d;
                let g = &mut grad[wo + o * n_in..wo + (o + 1) * n_in];
                for (gi, a) in g.iter_mut().zip(&acts[l]) {
                    *gi += d * a;
                }
            }
            if l > 0 {
                for i in 0..n_in {
                    let mut s = 0.0;
                    if acts[l][i] > 0.0 {
                        for o in 0..n_out {
                            s += params[wo + o * n_in + i] * deltas[l + 1][o];
                        }
                    }
                    deltas[l][i] = s;
                }
            }
        }
    }

    fn init(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut p = vec![0.0; self.total];
        for (l, &(wo, bo)) in self.offsets.iter().enumerate() {
            let (n_in, n_out) = (self.layers[l], self.layers[l + 1]);
            let factor = if l + 1 == self.depth() { 2.0 } else { 6.0 };
            let bound = (factor / (n_in + n_out) as f64).sqrt();
            for v in &mut p[wo..bo + n_out] {
                *v = rng.gen_range(-bound..bound);
            }
        }
        p
    }

    fn weight_ranges(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        self.offsets.iter().map(|&(wo, bo)| wo..bo)
    }
}

struct Dataset<'a> {
    x: &'a [f64],
    y: &'a [f64],
    w: &'a [f64],
    dim: usize,
}

fn objective<'a>(
    layout: &'a Layout,
    data: Dataset<'a>,
    alpha: f64,
) -> impl FnMut(&[f64], &mut [f64]) -> f64 + 'a {
    let n = data.y.len() as f64;
    let mut acts = layout.scratch();
    let mut deltas = layout.scratch();
    move |params: &[f64], grad: &mut [f64]| {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for (i, (&y, &w)) in data.y.iter().zip(data.w).enumerate() {
            let x = &data.x[i * data.dim..(i + 1) * data.dim];
            let z = layout.forward(params, x, &mut acts);
            loss += w * (softplus(z) - y * z);
            layout.backward(params, &acts, w * (sigmoid(z) - y) / n, grad, &mut deltas);
        }
        loss /= n;
        for r in layout.weight_ranges() {
            for k in r {
                loss += 0.5 * alpha / n * params[k] * params[k];
                grad[k] += alpha / n * params[k];
            }
        }
        loss
    }
}

/// Fits a classifier on `(features, label)` pairs.
pub fn train_linker(
    examples: &[(LinkFeatureVector, bool)],
    kind: ModelKind,
    features: FeatureSet,
    hyper: &Hyper,
) -> Result<LinkerModel, LinkError> {
    let positives = examples.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == examples.len() {
        return Err(LinkError::SingleClass);
    }
    let dim = features.dim();
    let n = examples.len();
    let rows: Vec<Vec<f64>> = examples.iter().map(|(f, _)| f.to_vec(features)).collect();
    let mut mean = vec![0.0; dim];
    for r in &rows {
        mean.iter_mut().zip(r).for_each(|(m, v)| *m += v / n as f64);
    }
    let mut std = vec![0.0; dim];
    for r in &rows {
        std.iter_mut()
            .zip(r.iter().zip(&mean))
            .for_each(|(s, (v, m))| *s += (v - m).powi(2) / n as f64);
    }
    let std: Vec<f64> = std
        .into_iter()
        .map(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 })
        .collect();
    let x: Vec<f64> = rows
        .iter()
        .flat_map(|r| {
            r.iter()
                .zip(mean.iter().zip(&std))
                .map(|(v, (m, s))| (v - m) / s)
        })
        .collect();
    let y: Vec<f64> = examples
        .iter()
        .map(|(_, l)| if *l { 1.0 } else { 0.0 })
        .collect();
    let w: Vec<f64> = if hyper.balance_classes {
        let wp = n as f64 / (2.0 * positives as f64);
        let wn = n as f64 / (2.0 * (n - positives) as f64);
        y.iter().map(|&l| if l > 0.5 { wp } else { wn }).collect()
    } else {
        vec![1.0; n]
    };

    let mut layers = vec![dim];
    layers.extend(
        hyper
            .hidden
            .clone()
            .unwrap_or_else(|| kind.default_hidden()),
    );
    layers.push(1);
    let layout = Layout::new(&layers);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut params = layout.init(&mut rng);
    let mut obj = objective(
        &layout,
        Dataset {
            x: &x,
            y: &y,
            w: &w,
            dim,
        },
        hyper.alpha,
    );
    let report: OptimReport = match hyper.optimizer {
        OptimizerKind::Lbfgs => Lbfgs {
            max_iter: hyper.max_iter,
            ..Lbfgs::default()
        }
        .minimize(&mut obj, &mut params),
        OptimizerKind::GradientDescent { steps } => GradientDescent {
            steps,
            ..GradientDescent::default()
        }
        .minimize(&mut obj, &mut params),
    };

    Ok(LinkerModel {
        version: MODEL_FORMAT_VERSION,
        kind,
        features,
        layers,
        params,
        mean,
        std,
        threshold: hyper.threshold,
        training: Some(TrainingSummary {
            examples: n,
            positives,
            iterations: report.iterations,
            initial_loss: report.loss_trace.first().copied().unwrap_or(f64::NAN),
            final_loss: report.loss_trace.last().copied().unwrap_or(f64::NAN),
        }),
    })
}

impl LinkerModel {
    /// Probability that the pair should be linked.
    pub fn score(&self, f: &LinkFeatureVector) -> f64 {
        let layout = Layout::new(&self.layers);
        let mut acts = layout.scratch();
        self.score_with(&layout, &mut acts, f)
    }

    fn score_with(&self, layout: &Layout, acts: &mut [Vec<f64>], f: &LinkFeatureVector) -> f64 {
        let x: Vec<f64> = f
            .to_vec(self.features)
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        sigmoid(layout.forward(&self.params, &x, acts))
    }

    pub fn score_all(&self, fs: &[LinkFeatureVector]) -> Vec<f64> {
        let layout = Layout::new(&self.layers);
        let mut acts = layout.scratch();
        fs.iter()
            .map(|f| self.score_with(&layout, &mut acts, f))
            .collect()
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        let bad = |m: &str| Err(LinkError::Format(m.to_string()));
        if self.version != MODEL_FORMAT_VERSION {
            return bad("unsupported model version");
        }
        if self.layers.first() != Some(&self.features.dim()) || self.layers.last() != Some(&1) {
            return bad("layer widths do not match the feature set");
        }
        if self.kind == ModelKind::Mlp && self.layers.len() != 4 {
            return bad("mlp must have exactly two hidden layers");
        }
        if Layout::new(&self.layers).total != self.params.len() {
            return bad("parameter count does not match layer widths");
        }
        if self.mean.len() != self.features.dim() || self.std.len() != self.features.dim() {
            return bad("normalization statistics have the wrong width");
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<LinkerModel, LinkError> {
        let m: LinkerModel =
            serde_json::from_str(text).map_err(|e| LinkError::Format(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), LinkError> {
        std::fs::write(path, self.to_json())
            .map_err(|e| LinkError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<LinkerModel, LinkError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LinkError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linking::features::hops_to_feature;

    fn vector(exact: f64, jw: f64, graph: f64) -> LinkFeatureVector {
        LinkFeatureVector {
            exact_match: exact,
            levenshtein: (1.0 - jw) * 10.0,
            jaro_winkler: jw,
            lcs_len: jw * 10.0,
            levenshtein_norm: 1.0 - jw,
            lcs_norm: jw,
            token_diff_card: 1.0 - exact,
            token_union_card: 2.0,
            graph_dist: graph,
        }
    }

    fn separable(n: usize, seed: u64) -> Vec<(LinkFeatureVector, bool)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let pos = rng.gen_bool(0.2);
                let jw = if pos {
                    rng.gen_range(0.8..1.0)
                } else {
                    rng.gen_range(0.0..0.6)
                };
                (
                    vector(
                        if pos && rng.gen_bool(0.5) { 1.0 } else { 0.0 },
                        jw,
                        hops_to_feature(Some(10)),
                    ),
                    pos,
                )
            })
            .collect()
    }

    fn accuracy(m: &LinkerModel, data: &[(LinkFeatureVector, bool)]) -> f64 {
        data.iter()
            .filter(|(f, y)| (m.score(f) >= m.threshold) == *y)
            .count() as f64
            / data.len() as f64
    }

    #[test]
    fn separable_data_is_fit_exactly() {
        let data = separable(300, 1);
        for kind in [ModelKind::LogisticRegression, ModelKind::Mlp] {
            let m = train_linker(&data, kind, FeatureSet::String, &Hyper::default()).unwrap();
            assert_eq!(accuracy(&m, &data), 1.0, "{kind}");
        }
    }

    #[test]
    fn mlp_defaults() {
        let data = separable(100, 2);
        let m = train_linker(
            &data,
            ModelKind::Mlp,
            FeatureSet::StringGraph,
            &Hyper::default(),
        )
        .unwrap();
        assert_eq!(m.layers, vec![9, 20, 12, 1]);
        assert_eq!(Hyper::default().max_iter, 600);
        assert!(m.training.as_ref().unwrap().iterations <= 600);
    }

    #[test]
    fn single_class_rejected() {
        let data: Vec<_> = separable(50, 3)
            .into_iter()
            .map(|(f, _)| (f, false))
            .collect();
        assert!(matches!(
            train_linker(&data, ModelKind::Mlp, FeatureSet::String, &Hyper::default()),
            Err(LinkError::SingleClass)
        ));
    }

    #[test]
    fn deterministic_and_serializable() {
        let data = separable(120, 4);
        let a = train_linker(
            &data,
            ModelKind::Mlp,
            FeatureSet::StringGraph,
            &Hyper::default(),
        )
        .unwrap();
        let b = train_linker(
            &data,
            ModelKind::Mlp,
            FeatureSet::StringGraph,
            &Hyper::default(),
        )
        .unwrap();
        assert_eq!(a, b);
        let back = LinkerModel::from_json(&a.to_json()).unwrap();
        assert_eq!(back.score(&data[0].0), a.score(&data[0].0));
        let mut broken = a.clone();
        broken.params.pop();
        assert!(LinkerModel::from_json(&broken.to_json()).is_err());
    }

    #[test]
    fn gradient_descent_fallback() {
        let data = separable(200, 5);
        let hyper = Hyper {
            optimizer: OptimizerKind::GradientDescent { steps: 2000 },
            ..Hyper::default()
        };
        let m = train_linker(
            &data,
            ModelKind::LogisticRegression,
            FeatureSet::String,
            &hyper,
        )
        .unwrap();
        assert!(accuracy(&m, &data) > 0.97);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = separable(40, 6);
        let rows: Vec<f64> = data
            .iter()
            .flat_map(|(f, _)| f.to_vec(FeatureSet::StringGraph))
            .collect();
        let y: Vec<f64> = data.iter().map(|(_, l)| f64::from(u8::from(*l))).collect();
        let w: Vec<f64> = y.iter().map(|v| 1.0 + v).collect();
        let layout = Layout::new(&[9, 5, 3, 1]);
        let mut p = layout.init(&mut ChaCha8Rng::seed_from_u64(0));
        let mut obj = objective(
            &layout,
            Dataset {
                x: &rows,
                y: &y,
                w: &w,
                dim: 9,
            },
            0.3,
        );
        let mut g = vec![0.0; p.len()];
        obj(&p, &mut g);
        let mut scratch = vec![0.0; p.len()];
        for k in (0..p.len()).step_by(7) {
            let h = 1e-6;
            p[k] += h;
            let up = obj(&p, &mut scratch);
            p[k] -= 2.0 * h;
            let down = obj(&p, &mut scratch);
            p[k] += h;
            let fd = (up - down) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-6, "param {k}: {fd} vs {}", g[k]);
        }
    }
}
