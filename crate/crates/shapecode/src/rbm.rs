//! Restricted Boltzmann machines and one-step contrastive divergence.
//!
//! An RBM couples a visible layer to a hidden layer through a weight matrix
//! with no intra-layer connections, so both conditionals factorize into
//! per-unit terms. The joint energy of a configuration `(v, h)` is
//!
//! ```text
//! E(v, h) = -sum_i a_i v_i - sum_j b_j h_j - sum_ij w_ij v_i h_j
//! ```
//!
//! Visible units here always take values in [0,1] (raw pixels, or the mean
//! activations of the layer below). Hidden units are binary except in the
//! topmost layer of a stack, where they are Gaussian with unit variance
//! around a linear mean so the final codes stay real-valued.
//!
//! Training uses CD-1: hidden means driven by the data, a sampled hidden
//! state, a "confabulated" visible reconstruction that is kept as means, and
//! one more hidden inference. The weight step is the learning rate times the
//! difference between the data and reconstruction correlations.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// How a hidden layer behaves: stochastic binary units, or linear units with
/// unit-variance Gaussian noise around their mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitKind {
    Binary,
    GaussianLinear,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One RBM: weights `[visible x hidden]`, a visible bias and a hidden bias.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmLayer {
    pub weights: Array2<f64>,
    pub visible_bias: Array1<f64>,
    pub hidden_bias: Array1<f64>,
    pub hidden_kind: UnitKind,
}

impl RbmLayer {
    /// Fresh layer: weights drawn from a zero-mean Gaussian with sigma 0.01,
    /// biases zero.
    pub fn new(
        visible_count: usize,
        hidden_count: usize,
        hidden_kind: UnitKind,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut weights = Array2::zeros((visible_count, hidden_count));
        for i in 0..visible_count {
            for j in 0..hidden_count {
                let z: f64 = rng.sample(StandardNormal);
                weights[[i, j]] = 0.01 * z;
            }
        }
        RbmLayer {
            weights,
            visible_bias: Array1::zeros(visible_count),
            hidden_bias: Array1::zeros(hidden_count),
            hidden_kind,
        }
    }

    /// Assemble a layer from explicit parameters, checking shapes and
    /// finiteness.
    pub fn from_parts(
        weights: Array2<f64>,
        visible_bias: Array1<f64>,
        hidden_bias: Array1<f64>,
        hidden_kind: UnitKind,
    ) -> Result<Self> {
        if visible_bias.len() != weights.nrows() || hidden_bias.len() != weights.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "weights {}x{} vs biases {}/{}",
                weights.nrows(),
                weights.ncols(),
                visible_bias.len(),
                hidden_bias.len()
            )));
        }
        let finite = weights.iter().all(|x| x.is_finite())
            && visible_bias.iter().all(|x| x.is_finite())
            && hidden_bias.iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidInput("non-finite RBM parameter".into()));
        }
        Ok(RbmLayer {
            weights,
            visible_bias,
            hidden_bias,
            hidden_kind,
        })
    }

    pub fn visible_count(&self) -> usize {
        self.weights.nrows()
    }

    pub fn hidden_count(&self) -> usize {
        self.weights.ncols()
    }

    /// Joint energy of a configuration.
    ///
    /// ```
    /// use ndarray::array;
    /// use shapecode::rbm::{RbmLayer, UnitKind};
    ///
    /// let rbm = RbmLayer::from_parts(
    ///     array![[2.0]],   // one visible, one hidden
    ///     array![0.5],     // visible bias
    ///     array![-0.25],   // hidden bias
    ///     UnitKind::Binary,
    /// ).unwrap();
    /// let e = rbm.energy(array![1.0].view(), array![1.0].view()).unwrap();
    /// assert_eq!(e, -2.25);
    /// ```
    pub fn energy(&self, v: ArrayView1<f64>, h: ArrayView1<f64>) -> Result<f64> {
        self.check_visible(v.len())?;
        self.check_hidden(h.len())?;
        Ok(-self.visible_bias.dot(&v) - self.hidden_bias.dot(&h) - v.dot(&self.weights).dot(&h))
    }

    /// Hidden activations given a visible vector: sigmoid probabilities for
    /// binary hidden units, raw linear means for Gaussian ones.
    pub fn hidden_given_visible(&self, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_visible(v.len())?;
        let mut act = v.dot(&self.weights) + &self.hidden_bias;
        if self.hidden_kind == UnitKind::Binary {
            act.mapv_inplace(sigmoid);
        }
        Ok(act)
    }

    /// Row-per-sample version of [`hidden_given_visible`](Self::hidden_given_visible).
    pub fn hidden_given_visible_batch(&self, v: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_visible(v.ncols())?;
        let mut act = v.dot(&self.weights) + &self.hidden_bias;
        if self.hidden_kind == UnitKind::Binary {
            act.mapv_inplace(sigmoid);
        }
        Ok(act)
    }

    /// Visible means given a hidden vector: sigmoid of the linear activation
    /// (visible units always live in [0,1]).
    pub fn visible_given_hidden(&self, h: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_hidden(h.len())?;
        let mut act = self.weights.dot(&h) + &self.visible_bias;
        act.mapv_inplace(sigmoid);
        Ok(act)
    }

    /// Row-per-sample version of [`visible_given_hidden`](Self::visible_given_hidden).
    pub fn visible_given_hidden_batch(&self, h: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_hidden(h.ncols())?;
        let mut act = h.dot(&self.weights.t()) + &self.visible_bias;
        act.mapv_inplace(sigmoid);
        Ok(act)
    }

    fn check_visible(&self, len: usize) -> Result<()> {
        if len != self.visible_count() {
            return Err(Error::DimensionMismatch(format!(
                "visible vector length {} vs layer visible count {}",
                len,
                self.visible_count()
            )));
        }
        Ok(())
    }

    fn check_hidden(&self, len: usize) -> Result<()> {
        if len != self.hidden_count() {
            return Err(Error::DimensionMismatch(format!(
                "hidden vector length {} vs layer hidden count {}",
                len,
                self.hidden_count()
            )));
        }
        Ok(())
    }

    fn all_finite(&self) -> bool {
        self.weights.iter().all(|x| x.is_finite())
            && self.visible_bias.iter().all(|x| x.is_finite())
            && self.hidden_bias.iter().all(|x| x.is_finite())
    }
}

/// Turn activations into stochastic states: Bernoulli draws for binary units
/// (entries must be probabilities), mean plus standard-normal noise for
/// Gaussian-linear units. Draws consume the generator element by element in
/// order, so a fixed seed reproduces the sequence exactly.
pub fn sample(values: ArrayView1<f64>, kind: UnitKind, rng: &mut ChaCha8Rng) -> Result<Array1<f64>> {
    let mut out = Array1::zeros(values.len());
    match kind {
        UnitKind::Binary => {
            for (o, &p) in out.iter_mut().zip(values.iter()) {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidInput(format!(
                        "binary sampling needs probabilities in [0,1], got {p}"
                    )));
                }
                *o = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
            }
        }
        UnitKind::GaussianLinear => {
            for (o, &m) in out.iter_mut().zip(values.iter()) {
                let z: f64 = rng.sample(StandardNormal);
                *o = m + z;
            }
        }
    }
    Ok(out)
}

fn sample_batch(values: &Array2<f64>, kind: UnitKind, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
    let mut out = Array2::zeros(values.raw_dim());
    for i in 0..values.nrows() {
        match kind {
            UnitKind::Binary => {
                for j in 0..values.ncols() {
                    let p = values[[i, j]];
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::InvalidInput(format!(
                            "binary sampling needs probabilities in [0,1], got {p}"
                        )));
                    }
                    out[[i, j]] = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
                }
            }
            UnitKind::GaussianLinear => {
                for j in 0..values.ncols() {
                    let z: f64 = rng.sample(StandardNormal);
                    out[[i, j]] = values[[i, j]] + z;
                }
            }
        }
    }
    Ok(out)
}

/// Hyperparameters for contrastive-divergence training of one layer.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CdConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    /// Momentum used for the first `momentum_switch_epoch` epochs.
    pub momentum_initial: f64,
    /// Momentum used afterwards.
    pub momentum_final: f64,
    pub momentum_switch_epoch: usize,
    /// L2 weight decay applied to the weight matrix each mini-batch.
    pub weight_decay: f64,
    pub rng_seed: u64,
}

impl Default for CdConfig {
    fn default() -> Self {
        CdConfig {
            learning_rate: 0.1,
            epochs: 40,
            minibatch_size: 100,
            momentum_initial: 0.5,
            momentum_final: 0.9,
            momentum_switch_epoch: 5,
            weight_decay: 0.0002,
            rng_seed: 0,
        }
    }
}

impl CdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.minibatch_size == 0 {
            return Err(Error::InvalidConfig("minibatch size must be >= 1".into()));
        }
        Ok(())
    }
}

/// The sufficient statistics of one CD-1 pass over a mini-batch. All
/// correlation and mean fields are batch averages.
#[derive(Debug, Clone)]
pub struct CdStatistics {
    /// `<v h>` with hidden activations driven by the data, `[visible x hidden]`.
    pub data_correlation: Array2<f64>,
    /// `<v h>` on the confabulated reconstruction.
    pub recon_correlation: Array2<f64>,
    pub visible_mean_data: Array1<f64>,
    pub visible_mean_recon: Array1<f64>,
    pub hidden_mean_data: Array1<f64>,
    pub hidden_mean_recon: Array1<f64>,
    /// Mean over the batch of the per-sample squared reconstruction error.
    pub reconstruction_error: f64,
}

/// Run the four CD-1 phases on a batch (rows = samples) and collect the
/// statistics that drive the update: hidden activations from the data, a
/// sampled hidden state, visible means as the confabulation, and the hidden
/// activations of that confabulation. Correlations use hidden activations
/// (not samples) on both sides.
pub fn cd1_statistics(
    rbm: &RbmLayer,
    batch: ArrayView2<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<CdStatistics> {
    let n = batch.nrows();
    if n == 0 {
        return Err(Error::InvalidInput("empty mini-batch".into()));
    }
    let h_data = rbm.hidden_given_visible_batch(batch)?;
    let h_states = sample_batch(&h_data, rbm.hidden_kind, rng)?;
    let v_recon = rbm.visible_given_hidden_batch(h_states.view())?;
    let h_recon = rbm.hidden_given_visible_batch(v_recon.view())?;

    let scale = 1.0 / n as f64;
    let data_correlation = batch.t().dot(&h_data) * scale;
    let recon_correlation = v_recon.t().dot(&h_recon) * scale;
    let reconstruction_error = batch
        .iter()
        .zip(v_recon.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        * scale;

    Ok(CdStatistics {
        data_correlation,
        recon_correlation,
        visible_mean_data: batch.mean_axis(Axis(0)).unwrap(),
        visible_mean_recon: v_recon.mean_axis(Axis(0)).unwrap(),
        hidden_mean_data: h_data.mean_axis(Axis(0)).unwrap(),
        hidden_mean_recon: h_recon.mean_axis(Axis(0)).unwrap(),
        reconstruction_error,
    })
}

/// Momentum velocities carried across CD-1 updates.
#[derive(Debug, Clone)]
pub struct CdState {
    pub weight_velocity: Array2<f64>,
    pub visible_bias_velocity: Array1<f64>,
    pub hidden_bias_velocity: Array1<f64>,
}

impl CdState {
    pub fn zeros(rbm: &RbmLayer) -> Self {
        CdState {
            weight_velocity: Array2::zeros(rbm.weights.raw_dim()),
            visible_bias_velocity: Array1::zeros(rbm.visible_count()),
            hidden_bias_velocity: Array1::zeros(rbm.hidden_count()),
        }
    }
}

/// One CD-1 parameter update on a mini-batch. The weight step is
/// `lr * (data_correlation - recon_correlation - weight_decay * W)` folded
/// into the caller's momentum velocity; bias steps follow the same rule
/// without decay. Returns the updated layer and the batch reconstruction
/// error. Fails if any parameter becomes non-finite.
pub fn cd1_update(
    rbm: &RbmLayer,
    batch: ArrayView2<f64>,
    cfg: &CdConfig,
    momentum: f64,
    state: &mut CdState,
    rng: &mut ChaCha8Rng,
) -> Result<(RbmLayer, f64)> {
    if batch.ncols() != rbm.visible_count() {
        return Err(Error::DimensionMismatch(format!(
            "batch columns {} vs visible count {}",
            batch.ncols(),
            rbm.visible_count()
        )));
    }
    let stats = cd1_statistics(rbm, batch, rng)?;
    let lr = cfg.learning_rate;

    state.weight_velocity = &state.weight_velocity * momentum
        + (&stats.data_correlation - &stats.recon_correlation - &(&rbm.weights * cfg.weight_decay))
            * lr;
    state.visible_bias_velocity = &state.visible_bias_velocity * momentum
        + (&stats.visible_mean_data - &stats.visible_mean_recon) * lr;
    state.hidden_bias_velocity = &state.hidden_bias_velocity * momentum
        + (&stats.hidden_mean_data - &stats.hidden_mean_recon) * lr;

    let updated = RbmLayer {
        weights: &rbm.weights + &state.weight_velocity,
        visible_bias: &rbm.visible_bias + &state.visible_bias_velocity,
        hidden_bias: &rbm.hidden_bias + &state.hidden_bias_velocity,
        hidden_kind: rbm.hidden_kind,
    };
    if !updated.all_finite() {
        return Err(Error::TrainingDiverged(
            "CD-1 update produced non-finite parameters".into(),
        ));
    }
    Ok((updated, stats.reconstruction_error))
}

/// Train a layer with CD-1 for `cfg.epochs` epochs. Rows are shuffled each
/// epoch with the seeded generator, so the whole run is a deterministic
/// function of the layer, data and seed. Returns the trained layer and the
/// per-epoch mean reconstruction error.
pub fn train(layer: RbmLayer, data: ArrayView2<f64>, cfg: &CdConfig) -> Result<(RbmLayer, Vec<f64>)> {
    cfg.validate()?;
    if data.ncols() != layer.visible_count() {
        return Err(Error::DimensionMismatch(format!(
            "data columns {} vs visible count {}",
            data.ncols(),
            layer.visible_count()
        )));
    }
    if data.nrows() == 0 {
        return Err(Error::InvalidInput("empty training set".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut state = CdState::zeros(&layer);
    let mut layer = layer;
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..data.nrows()).collect();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let momentum = if epoch < cfg.momentum_switch_epoch {
            cfg.momentum_initial
        } else {
            cfg.momentum_final
        };
        let mut squared_sum = 0.0;
        for chunk in order.chunks(cfg.minibatch_size) {
            let batch = data.select(Axis(0), chunk);
            let (updated, err) = cd1_update(&layer, batch.view(), cfg, momentum, &mut state, &mut rng)
                .map_err(|e| match e {
                    Error::TrainingDiverged(msg) => {
                        Error::TrainingDiverged(format!("epoch {epoch}: {msg}"))
                    }
                    other => other,
                })?;
            layer = updated;
            squared_sum += err * chunk.len() as f64;
        }
        curve.push(squared_sum / data.nrows() as f64);
    }
    Ok((layer, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_rbm(visible: usize, hidden: usize, kind: UnitKind, seed: u64) -> RbmLayer {
        let mut r = rng(seed);
        let mut layer = RbmLayer::new(visible, hidden, kind, &mut r);
        // widen the parameters so tests exercise non-trivial values
        layer.weights.mapv_inplace(|w| w * 100.0);
        for a in layer.visible_bias.iter_mut() {
            *a = r.random::<f64>() - 0.5;
        }
        for b in layer.hidden_bias.iter_mut() {
            *b = r.random::<f64>() - 0.5;
        }
        layer
    }

    #[test]
    fn energy_zero_parameters_is_zero() {
        let rbm = RbmLayer::from_parts(
            Array2::zeros((3, 2)),
            Array1::zeros(3),
            Array1::zeros(2),
            UnitKind::Binary,
        )
        .unwrap();
        let e = rbm
            .energy(array![1.0, 0.0, 1.0].view(), array![1.0, 1.0].view())
            .unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn energy_hand_computed() {
        let rbm = RbmLayer::from_parts(
            array![[2.0]],
            array![0.5],
            array![-0.25],
            UnitKind::Binary,
        )
        .unwrap();
        let e = rbm.energy(array![1.0].view(), array![1.0].view()).unwrap();
        assert_abs_diff_eq!(e, -2.25, epsilon = 1e-15);
    }

    #[test]
    fn energy_matches_term_by_term_sum() {
        let rbm = random_rbm(2, 2, UnitKind::Binary, 7);
        let v = array![0.3, 0.9];
        let h = array![1.0, 0.0];
        let mut expected = 0.0;
        for i in 0..2 {
            expected -= rbm.visible_bias[i] * v[i];
        }
        for j in 0..2 {
            expected -= rbm.hidden_bias[j] * h[j];
        }
        for i in 0..2 {
            for j in 0..2 {
                expected -= rbm.weights[[i, j]] * v[i] * h[j];
            }
        }
        assert_abs_diff_eq!(
            rbm.energy(v.view(), h.view()).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn zero_parameters_give_half_probabilities() {
        let rbm = RbmLayer::from_parts(
            Array2::zeros((4, 3)),
            Array1::zeros(4),
            Array1::zeros(3),
            UnitKind::Binary,
        )
        .unwrap();
        let h = rbm
            .hidden_given_visible(array![0.1, 0.9, 0.4, 0.6].view())
            .unwrap();
        assert!(h.iter().all(|&p| p == 0.5));
        let v = rbm.visible_given_hidden(array![1.0, 0.0, 1.0].view()).unwrap();
        assert!(v.iter().all(|&p| p == 0.5));
    }

    #[test]
    fn sigmoid_saturates_for_large_activation() {
        let rbm = RbmLayer::from_parts(
            array![[30.0]],
            array![0.0],
            array![0.0],
            UnitKind::Binary,
        )
        .unwrap();
        let p = rbm.hidden_given_visible(array![1.0].view()).unwrap()[0];
        assert!(p >= 1.0 - 1e-9);
    }

    #[test]
    fn conditionals_match_scalar_loops() {
        let rbm = random_rbm(3, 4, UnitKind::Binary, 11);
        let v = array![0.2, 0.8, 0.5];
        let h = rbm.hidden_given_visible(v.view()).unwrap();
        for j in 0..4 {
            let mut act = rbm.hidden_bias[j];
            for i in 0..3 {
                act += rbm.weights[[i, j]] * v[i];
            }
            assert_abs_diff_eq!(h[j], sigmoid(act), epsilon = 1e-12);
        }

        let hv = array![1.0, 0.0, 1.0, 1.0];
        let vm = rbm.visible_given_hidden(hv.view()).unwrap();
        for i in 0..3 {
            let mut act = rbm.visible_bias[i];
            for j in 0..4 {
                act += rbm.weights[[i, j]] * hv[j];
            }
            assert_abs_diff_eq!(vm[i], sigmoid(act), epsilon = 1e-12);
        }
    }

    #[test]
    fn conditionals_are_transposes_of_each_other() {
        let rbm = random_rbm(3, 5, UnitKind::Binary, 13);
        let swapped = RbmLayer::from_parts(
            rbm.weights.t().to_owned(),
            rbm.hidden_bias.clone(),
            rbm.visible_bias.clone(),
            UnitKind::Binary,
        )
        .unwrap();
        let h = array![1.0, 0.0, 1.0, 0.0, 1.0];
        let direct = rbm.visible_given_hidden(h.view()).unwrap();
        let via_transpose = swapped.hidden_given_visible(h.view()).unwrap();
        for (a, b) in direct.iter().zip(via_transpose.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn gaussian_hidden_returns_linear_mean() {
        let rbm = RbmLayer::from_parts(
            array![[1.5], [-0.5]],
            Array1::zeros(2),
            array![0.25],
            UnitKind::GaussianLinear,
        )
        .unwrap();
        let m = rbm.hidden_given_visible(array![1.0, 1.0].view()).unwrap();
        assert_abs_diff_eq!(m[0], 1.5 - 0.5 + 0.25, epsilon = 1e-12);
    }

    #[test]
    fn sample_certain_probabilities() {
        let mut r = rng(0);
        let s = sample(array![1.0, 1.0, 1.0].view(), UnitKind::Binary, &mut r).unwrap();
        assert_eq!(s, array![1.0, 1.0, 1.0]);
        let z = sample(array![0.0, 0.0].view(), UnitKind::Binary, &mut r).unwrap();
        assert_eq!(z, array![0.0, 0.0]);
    }

    #[test]
    fn sample_rejects_bad_probability() {
        let mut r = rng(0);
        assert!(sample(array![1.2].view(), UnitKind::Binary, &mut r).is_err());
        assert!(sample(array![-0.1].view(), UnitKind::Binary, &mut r).is_err());
    }

    #[test]
    fn sample_is_reproducible_under_seed() {
        let probs = Array1::from_elem(64, 0.5);
        let a = sample(probs.view(), UnitKind::Binary, &mut rng(42)).unwrap();
        let b = sample(probs.view(), UnitKind::Binary, &mut rng(42)).unwrap();
        assert_eq!(a, b);
        let ga = sample(probs.view(), UnitKind::GaussianLinear, &mut rng(9)).unwrap();
        let gb = sample(probs.view(), UnitKind::GaussianLinear, &mut rng(9)).unwrap();
        assert_eq!(ga, gb);
    }

    #[test]
    fn sample_empirical_mean_half() {
        // 1e5 Bernoulli(0.5) draws: the mean sits within 6 sigma = 0.0095.
        let n = 100_000;
        let probs = Array1::from_elem(n, 0.5);
        let s = sample(probs.view(), UnitKind::Binary, &mut rng(1)).unwrap();
        let mean = s.sum() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let rbm = random_rbm(4, 3, UnitKind::Binary, 3);
        let batch = array![[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0]];
        let cfg = CdConfig {
            learning_rate: 0.0,
            ..CdConfig::default()
        };
        let mut state = CdState::zeros(&rbm);
        let (updated, err) =
            cd1_update(&rbm, batch.view(), &cfg, 0.5, &mut state, &mut rng(0)).unwrap();
        assert_eq!(updated.weights, rbm.weights);
        assert_eq!(updated.visible_bias, rbm.visible_bias);
        assert_eq!(updated.hidden_bias, rbm.hidden_bias);
        assert!(err > 0.0);
    }

    #[test]
    fn saturated_rbm_has_vanishing_update() {
        // Weights so strong the confabulation reproduces the data exactly:
        // the data and reconstruction correlations coincide.
        let rbm = RbmLayer::from_parts(
            array![[60.0, -60.0], [-60.0, 60.0]],
            array![-30.0, -30.0],
            array![-30.0, -30.0],
            UnitKind::Binary,
        )
        .unwrap();
        let batch = array![[1.0, 0.0], [0.0, 1.0]];
        let cfg = CdConfig {
            learning_rate: 1.0,
            weight_decay: 0.0,
            ..CdConfig::default()
        };
        let mut state = CdState::zeros(&rbm);
        let (updated, err) =
            cd1_update(&rbm, batch.view(), &cfg, 0.0, &mut state, &mut rng(5)).unwrap();
        let max_step = (&updated.weights - &rbm.weights)
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(max_step < 1e-5, "max weight step {max_step}");
        assert!(err < 1e-10, "reconstruction error {err}");
    }

    #[test]
    fn training_reduces_reconstruction_error() {
        // Four binary patterns over 6 visibles, 3 hidden units, 200 epochs.
        let data = array![
            [1.0, 1.0, 1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
            [1.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 1.0, 1.0, 0.0],
        ];
        let layer = RbmLayer::new(6, 3, UnitKind::Binary, &mut rng(0));
        let cfg = CdConfig {
            epochs: 200,
            minibatch_size: 4,
            rng_seed: 0,
            ..CdConfig::default()
        };
        let (_, curve) = train(layer, data.view(), &cfg).unwrap();
        assert!(
            curve[curve.len() - 1] < curve[0],
            "first {} last {}",
            curve[0],
            curve[curve.len() - 1]
        );
    }

    #[test]
    fn training_is_bit_deterministic() {
        let data = array![
            [1.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 1.0],
            [1.0, 1.0, 0.0, 0.0],
        ];
        let cfg = CdConfig {
            epochs: 7,
            minibatch_size: 2,
            rng_seed: 123,
            ..CdConfig::default()
        };
        let run = || {
            let layer = RbmLayer::new(4, 2, UnitKind::Binary, &mut rng(99));
            train(layer, data.view(), &cfg).unwrap().0
        };
        let (a, b) = (run(), run());
        assert!(a
            .weights
            .iter()
            .zip(b.weights.iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(a
            .visible_bias
            .iter()
            .zip(b.visible_bias.iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let rbm = random_rbm(3, 2, UnitKind::Binary, 0);
        assert!(rbm.hidden_given_visible(array![1.0, 0.0].view()).is_err());
        assert!(rbm.visible_given_hidden(array![1.0].view()).is_err());
        assert!(rbm
            .energy(array![1.0, 0.0, 1.0].view(), array![1.0].view())
            .is_err());
    }
}
