//! Adam and the training-loop driver shared by all fitting tasks.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::metrics::psnr_slices;
use crate::net::{check_gradients, GradientSet, Mlp};
use crate::sample::SampleBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    L2,
    L1,
}

/// Adam with bias correction. Moment buffers mirror the network shapes;
/// `step` increments by exactly one per update.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<(Matrix, Vector)>,
    v: Vec<(Matrix, Vector)>,
}

impl AdamState {
    pub fn new(mlp: &Mlp, lr: f64) -> Self {
        AdamState::with_hyperparams(mlp, lr, 0.9, 0.999, 1e-8).unwrap()
    }

    pub fn with_hyperparams(
        mlp: &Mlp,
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    ) -> Result<Self> {
        ensure!(lr >= 0.0 && lr.is_finite(), "lr must be >= 0, got {lr}");
        ensure!((0.0..1.0).contains(&beta1), "beta1 must be in (0,1)");
        ensure!((0.0..1.0).contains(&beta2), "beta2 must be in (0,1)");
        ensure!(eps >= 0.0, "eps must be >= 0, got {eps}");
        let zeros = |l: &crate::net::Layer| {
            (
                Matrix::zeros(l.weights.rows(), l.weights.cols()),
                Vector::zeros(l.biases.len()),
            )
        };
        Ok(AdamState {
            step: 0,
            lr,
            beta1,
            beta2,
            eps,
            m: mlp.layers().iter().map(zeros).collect(),
            v: mlp.layers().iter().map(zeros).collect(),
        })
    }
}

/// One Adam update: θ ← θ − lr·m̂/(√v̂ + eps). Rejects non-finite gradients
/// naming the offending layer.
pub fn adam_step(mlp: &mut Mlp, grads: &GradientSet, state: &mut AdamState) -> Result<()> {
    check_gradients(grads)?;
    ensure!(
        grads.weights.len() == mlp.num_layers() && state.m.len() == mlp.num_layers(),
        "gradient/state layer count does not match the network"
    );
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.lr, state.eps);

    for l in 0..mlp.num_layers() {
        {
            let gw = &grads.weights[l];
            let (w, _) = mlp.layer_mut(l);
            ensure!(
                gw.rows() == w.rows() && gw.cols() == w.cols(),
                "weight gradient shape mismatch in layer {l}"
            );
            let (mw, vw) = (&mut state.m[l].0, &mut state.v[l].0);
            update_slice(
                w.data_mut(),
                gw.data(),
                mw.data_mut(),
                vw.data_mut(),
                b1,
                b2,
                bc1,
                bc2,
                lr,
                eps,
            );
        }
        {
            let gb = &grads.biases[l];
            let (_, b) = mlp.layer_mut(l);
            ensure!(
                gb.len() == b.len(),
                "bias gradient shape mismatch in layer {l}"
            );
            let (mb, vb) = (&mut state.m[l].1, &mut state.v[l].1);
            update_slice(
                b.as_mut_slice(),
                gb.as_slice(),
                mb.as_mut_slice(),
                vb.as_mut_slice(),
                b1,
                b2,
                bc1,
                bc2,
                lr,
                eps,
            );
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn update_slice(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    b1: f64,
    b2: f64,
    bc1: f64,
    bc2: f64,
    lr: f64,
    eps: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        let denom = v_hat.sqrt() + eps;
        if denom > 0.0 {
            params[i] -= lr * m_hat / denom;
        }
    }
}

/// Per-iteration training record. `wall_ms` is measured wall-clock time and
/// is excluded from every reproducibility contract; iteration, loss and
/// psnr are deterministic for a given build and config.
#[derive(Debug, Clone)]
pub struct TrainRecord {
    pub iteration: usize,
    pub loss: f64,
    pub wall_ms: f64,
    pub psnr: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub records: Vec<TrainRecord>,
}

impl TrainLog {
    pub fn final_loss(&self) -> Option<f64> {
        self.records.last().map(|r| r.loss)
    }

    pub fn total_wall_ms(&self) -> f64 {
        self.records.iter().map(|r| r.wall_ms).sum()
    }

    /// CSV with header `iter,loss,ms,psnr`. With `include_timing` false the
    /// ms column is written as 0 so identical runs serialize byte-identically.
    pub fn to_csv(&self, include_timing: bool) -> String {
        let mut out = String::from("iter,loss,ms,psnr\n");
        for r in &self.records {
            let ms = if include_timing { r.wall_ms } else { 0.0 };
            match r.psnr {
                Some(p) => out.push_str(&format!("{},{:e},{},{:.6}\n", r.iteration, r.loss, ms, p)),
                None => out.push_str(&format!("{},{:e},{},\n", r.iteration, r.loss, ms)),
            }
        }
        out
    }

    pub fn write_csv(&self, path: &std::path::Path, include_timing: bool) -> Result<()> {
        std::fs::write(path, self.to_csv(include_timing))?;
        Ok(())
    }
}

/// Error carrying the partial log accumulated before an aborted iteration.
#[derive(Debug)]
pub struct TrainAbort {
    pub error: Error,
    pub partial: TrainLog,
}

impl From<TrainAbort> for Error {
    fn from(a: TrainAbort) -> Error {
        a.error
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub iterations: usize,
    pub loss: Loss,
    /// Record PSNR of the batch predictions each iteration (meaningful for
    /// full-batch image training).
    pub log_psnr: bool,
    /// Optional cosine learning-rate decay over the iteration budget.
    pub cosine_decay: bool,
}

impl TrainConfig {
    pub fn new(iterations: usize, loss: Loss) -> Self {
        TrainConfig {
            iterations,
            loss,
            log_psnr: false,
            cosine_decay: false,
        }
    }
}

/// Runs forward/backward/adam per iteration, pulling one batch per
/// iteration from `sampler`. The log has exactly `iterations` records on
/// success; on abort the partial log rides along with the error.
pub fn train<S>(
    mlp: &mut Mlp,
    mut sampler: S,
    cfg: &TrainConfig,
    state: &mut AdamState,
) -> std::result::Result<TrainLog, TrainAbort>
where
    S: FnMut(usize) -> SampleBatch,
{
    let mut log = TrainLog::default();
    if cfg.iterations == 0 {
        return Err(TrainAbort {
            error: Error::Contract("iterations must be >= 1".into()),
            partial: log,
        });
    }
    let base_lr = state.lr;
    let mut run = |log: &mut TrainLog| -> Result<()> {
        for it in 0..cfg.iterations {
            let t0 = Instant::now();
            if cfg.cosine_decay {
                let frac = it as f64 / cfg.iterations as f64;
                state.lr = base_lr * 0.5 * (1.0 + (std::f64::consts::PI * frac).cos());
            }
            let batch = sampler(it);
            let cache = mlp.forward(&batch.coords)?;
            let (loss, delta) = loss_and_delta(cfg.loss, &cache.outputs, &batch.targets)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("loss at iteration {}", it + 1)));
            }
            let psnr = if cfg.log_psnr {
                Some(psnr_slices(cache.outputs.data(), batch.targets.data())?)
            } else {
                None
            };
            let grads = mlp.backward(&cache, &delta, false)?;
            adam_step(mlp, &grads, state)?;
            log.records.push(TrainRecord {
                iteration: it + 1,
                loss,
                wall_ms: t0.elapsed().as_secs_f64() * 1e3,
                psnr,
            });
        }
        Ok(())
    };
    let outcome = run(&mut log);
    state.lr = base_lr;
    match outcome {
        Ok(()) => Ok(log),
        Err(error) => Err(TrainAbort {
            error,
            partial: log,
        }),
    }
}

/// Mean loss over all batch entries and its gradient w.r.t. the outputs.
pub fn loss_and_delta(loss: Loss, outputs: &Matrix, targets: &Matrix) -> Result<(f64, Matrix)> {
    ensure!(
        outputs.rows() == targets.rows() && outputs.cols() == targets.cols(),
        "outputs are {}x{}, targets {}x{}",
        outputs.rows(),
        outputs.cols(),
        targets.rows(),
        targets.cols()
    );
    let n = (outputs.rows() * outputs.cols()) as f64;
    let mut delta = Matrix::zeros(outputs.rows(), outputs.cols());
    let mut total = 0.0;
    match loss {
        Loss::L2 => {
            for (d, (o, t)) in delta
                .data_mut()
                .iter_mut()
                .zip(outputs.data().iter().zip(targets.data()))
            {
                let r = o - t;
                total += r * r;
                *d = 2.0 * r / n;
            }
        }
        Loss::L1 => {
            for (d, (o, t)) in delta
                .data_mut()
                .iter_mut()
                .zip(outputs.data().iter().zip(targets.data()))
            {
                let r = o - t;
                total += r.abs();
                *d = r.signum() / n;
            }
        }
    }
    Ok((total / n, delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::init::InitScheme;

    fn affine_scalar_net(w: f64, b: f64) -> Mlp {
        let layers = vec![crate::net::Layer {
            weights: Matrix::from_vec(1, 1, vec![w]).unwrap(),
            biases: Vector::from_vec(vec![b]).unwrap(),
        }];
        Mlp::from_layers(layers, Activation::Identity).unwrap()
    }

    #[test]
    fn zero_gradients_leave_params() {
        let mut mlp = Mlp::init(
            &[2, 8, 1],
            Activation::finer(1.0),
            &InitScheme::new(1.0, 3),
        )
        .unwrap();
        let before = mlp.clone();
        let mut state = AdamState::new(&mlp, 0.1);
        let grads = GradientSet::zeros_like(&mlp);
        adam_step(&mut mlp, &grads, &mut state).unwrap();
        assert_eq!(mlp, before);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_step_closed_form() {
        // g = 1, lr = 0.1: bias correction gives m̂ = v̂ = 1, so the move is
        // exactly −lr/(1 + eps).
        let mut mlp = affine_scalar_net(0.5, 0.0);
        let mut state = AdamState::new(&mlp, 0.1);
        let mut grads = GradientSet::zeros_like(&mlp);
        grads.weights[0].set(0, 0, 1.0);
        adam_step(&mut mlp, &grads, &mut state).unwrap();
        let expect = 0.5 - 0.1 / (1.0 + 1e-8);
        assert!((mlp.layer(0).0.get(0, 0) - expect).abs() < 1e-15);
    }

    #[test]
    fn descends_quadratic() {
        // Minimize (w − 3)² for 10 steps.
        let mut mlp = affine_scalar_net(0.0, 0.0);
        let mut state = AdamState::new(&mlp, 0.1);
        let loss_of = |m: &Mlp| {
            let w = m.layer(0).0.get(0, 0);
            (w - 3.0) * (w - 3.0)
        };
        let initial = loss_of(&mlp);
        for _ in 0..10 {
            let w = mlp.layer(0).0.get(0, 0);
            let mut grads = GradientSet::zeros_like(&mlp);
            grads.weights[0].set(0, 0, 2.0 * (w - 3.0));
            adam_step(&mut mlp, &grads, &mut state).unwrap();
        }
        assert!(loss_of(&mlp) < initial);
    }

    #[test]
    fn zero_lr_is_identity() {
        let mut mlp = Mlp::init(
            &[2, 8, 1],
            Activation::finer(1.0),
            &InitScheme::new(1.0, 5),
        )
        .unwrap();
        let before = mlp.clone();
        let mut state = AdamState::new(&mlp, 0.0);
        let mut grads = GradientSet::zeros_like(&mlp);
        for v in grads.weights[0].data_mut() {
            *v = 0.37;
        }
        adam_step(&mut mlp, &grads, &mut state).unwrap();
        assert_eq!(mlp, before);
    }

    #[test]
    fn update_scale_invariant_at_step_one() {
        // With eps = 0 the first update m̂/√v̂ ignores gradient scale.
        let run = |scale: f64| {
            let mut mlp = affine_scalar_net(1.0, -0.5);
            let mut state = AdamState::with_hyperparams(&mlp, 0.05, 0.9, 0.999, 0.0).unwrap();
            let mut grads = GradientSet::zeros_like(&mlp);
            grads.weights[0].set(0, 0, 0.73 * scale);
            grads.biases[0][0] = -1.9 * scale;
            adam_step(&mut mlp, &grads, &mut state).unwrap();
            (mlp.layer(0).0.get(0, 0), mlp.layer(0).1[0])
        };
        let (w1, b1) = run(1.0);
        let (w7, b7) = run(7.0);
        assert!((w1 - w7).abs() < 1e-12);
        assert!((b1 - b7).abs() < 1e-12);
    }

    #[test]
    fn nan_gradient_names_layer() {
        let mut mlp = Mlp::init(
            &[2, 4, 4, 1],
            Activation::finer(1.0),
            &InitScheme::new(1.0, 6),
        )
        .unwrap();
        let mut state = AdamState::new(&mlp, 0.1);
        let mut grads = GradientSet::zeros_like(&mlp);
        grads.biases[1][2] = f64::NAN;
        match adam_step(&mut mlp, &grads, &mut state) {
            Err(Error::NonFiniteGradient { layer }) => assert_eq!(layer, 1),
            other => panic!("expected NonFiniteGradient, got {other:?}"),
        }
    }

    #[test]
    fn fits_line_with_dense_samples() {
        // 0-hidden-layer net on y = 2x + 1.
        let xs: Vec<f64> = (0..64).map(|i| -1.0 + 2.0 * i as f64 / 63.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let batch = SampleBatch::new(
            Matrix::from_vec(64, 1, xs).unwrap(),
            Matrix::from_vec(64, 1, ys).unwrap(),
        )
        .unwrap();
        let mut mlp = affine_scalar_net(0.0, 0.0);
        let mut state = AdamState::new(&mlp, 0.01);
        let cfg = TrainConfig::new(2000, Loss::L2);
        let log = train(&mut mlp, |_| batch.clone(), &cfg, &mut state).unwrap();
        assert_eq!(log.records.len(), 2000);
        let w = mlp.layer(0).0.get(0, 0);
        let b = mlp.layer(0).1[0];
        assert!((w - 2.0).abs() < 1e-3, "w = {w}");
        assert!((b - 1.0).abs() < 1e-3, "b = {b}");
    }

    #[test]
    fn train_deterministic() {
        let run = || {
            let mut mlp = Mlp::init(
                &[1, 16, 1],
                Activation::finer(5.0),
                &InitScheme::new(1.0, 17),
            )
            .unwrap();
            let xs: Vec<f64> = (0..32).map(|i| -1.0 + 2.0 * i as f64 / 31.0).collect();
            let ys: Vec<f64> = xs.iter().map(|x| (3.0 * x).sin()).collect();
            let batch = SampleBatch::new(
                Matrix::from_vec(32, 1, xs).unwrap(),
                Matrix::from_vec(32, 1, ys).unwrap(),
            )
            .unwrap();
            let mut state = AdamState::new(&mlp, 1e-3);
            let cfg = TrainConfig::new(50, Loss::L2);
            let log = train(&mut mlp, |_| batch.clone(), &cfg, &mut state).unwrap();
            (log, mlp)
        };
        let (log_a, mlp_a) = run();
        let (log_b, mlp_b) = run();
        assert_eq!(mlp_a, mlp_b);
        let ia: Vec<(usize, f64)> = log_a.records.iter().map(|r| (r.iteration, r.loss)).collect();
        let ib: Vec<(usize, f64)> = log_b.records.iter().map(|r| (r.iteration, r.loss)).collect();
        assert_eq!(ia, ib);
    }

    #[test]
    fn l1_loss_gradient_signs() {
        let out = Matrix::from_vec(1, 3, vec![1.0, -2.0, 0.5]).unwrap();
        let tgt = Matrix::from_vec(1, 3, vec![0.0, 0.0, 0.5]).unwrap();
        let (loss, delta) = loss_and_delta(Loss::L1, &out, &tgt).unwrap();
        assert!((loss - 1.0).abs() < 1e-15);
        assert!(delta.get(0, 0) > 0.0);
        assert!(delta.get(0, 1) < 0.0);
    }

    #[test]
    fn csv_shape() {
        let log = TrainLog {
            records: vec![TrainRecord {
                iteration: 1,
                loss: 0.5,
                wall_ms: 12.3,
                psnr: Some(30.0),
            }],
        };
        let csv = log.to_csv(false);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "iter,loss,ms,psnr");
        assert_eq!(lines.next().unwrap(), "1,5e-1,0,30.000000");
    }
}
