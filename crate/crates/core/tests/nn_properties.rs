use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ratnet_core::basis::BoxDomain;
use ratnet_core::data::{linspace, sample_function, SampleSet, TargetFunction};
use ratnet_core::nn::*;

const RELU_FIT_ERROR: f64 = 0.02184443001288330;

fn target(n: usize) -> SampleSet {
    sample_function(TargetFunction::SqrtAbsShift, &BoxDomain::unit(1), &[n]).unwrap()
}

fn random_params(rng: &mut ChaCha8Rng, hidden: usize, kind: ActivationKind) -> MlpParams {
    let activation = match kind {
        ActivationKind::Relu => ActivationSpec::relu(),
        _ => {
            // perturb the ReLU fit so every coefficient matters
            let base = RationalActivation::relu_fit(401).unwrap().0;
            let mut num = base.num;
            let mut den = base.den;
            num.iter_mut().for_each(|c| *c += rng.gen_range(-0.1..0.1));
            den.iter_mut().for_each(|c| *c += rng.gen_range(-0.05..0.05));
            den[0] = den[0].abs().max(0.3);
            den[2] = den[2].abs().max(0.5);
            ActivationSpec::rational(kind, RationalActivation::new(num, den).unwrap()).unwrap()
        }
    };
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    let (w1, b1, w2) = (draw(hidden), draw(hidden), draw(hidden));
    let b2 = draw(1)[0];
    MlpParams::new(w1, b1, w2, b2, activation).unwrap()
}

fn perturbed_loss(p: &MlpParams, s: &SampleSet, k: usize, h: f64, kind: LossKind) -> f64 {
    let mut flat = p.to_flat();
    flat[k] += h;
    let mut q = p.clone();
    q.set_flat(&flat);
    loss(&q, s, kind).unwrap()
}

#[test]
fn mse_gradient_matches_central_differences() {
    let s = target(61);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for kind in [
        ActivationKind::Relu,
        ActivationKind::FixedRational,
        ActivationKind::LearnableRational,
    ] {
        for hidden in [2, 10] {
            for _ in 0..20 {
                let p = random_params(&mut rng, hidden, kind);
                let g = backward(&p, &s, LossKind::Mse).unwrap();
                let learnable = kind == ActivationKind::LearnableRational;
                for k in 0..p.num_flat() {
                    if k > 3 * hidden && !learnable {
                        assert_eq!(g[k], 0.0);
                        continue;
                    }
                    let fd = (perturbed_loss(&p, &s, k, h, LossKind::Mse)
                        - perturbed_loss(&p, &s, k, -h, LossKind::Mse))
                        / (2.0 * h);
                    let rel = (g[k] - fd).abs() / fd.abs().max(g[k].abs()).max(1e-3);
                    worst = worst.max(rel);
                    assert!(
                        rel < 1e-5,
                        "{kind:?} H={hidden} coordinate {k}: analytic {} vs fd {fd}",
                        g[k]
                    );
                }
            }
        }
    }
    assert!(worst < 1e-5);
}

#[test]
fn uniform_subgradient_is_an_ascent_direction() {
    let s = target(101);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for kind in [ActivationKind::Relu, ActivationKind::LearnableRational] {
        for hidden in [2, 10] {
            let p = random_params(&mut rng, hidden, kind);
            let g = backward(&p, &s, LossKind::Uniform).unwrap();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let step = 1e-7 / norm;
            let mut flat = p.to_flat();
            for (v, d) in flat.iter_mut().zip(&g) {
                *v += step * d;
            }
            let mut q = p.clone();
            q.set_flat(&flat);
            let up = loss(&q, &s, LossKind::Uniform).unwrap();
            assert!(up > loss(&p, &s, LossKind::Uniform).unwrap());
        }
    }
}

#[test]
fn adam_three_step_trace() {
    // θ² from θ = 1, learning rate 0.1; values traced by hand.
    let mut theta = [1.0];
    let mut state = Moments::zeros(1);
    let expected = [0.9000000005, 0.8004122286917928, 0.7015862729460303];
    for (t, want) in (1..=3).zip(expected) {
        let g = [2.0 * theta[0]];
        adam_step(&mut state, &mut theta, &g, 0.1, t);
        assert!((theta[0] - want).abs() < 1e-15, "step {t}: {}", theta[0]);
    }
}

#[test]
fn adamax_three_step_trace() {
    let mut theta = [1.0];
    let mut state = Moments::zeros(1);
    let expected = [0.9000000005, 0.8051683271692486, 0.7154994733936834];
    for (t, want) in (1..=3).zip(expected) {
        let g = [2.0 * theta[0]];
        adamax_step(&mut state, &mut theta, &g, 0.1, t);
        assert!((theta[0] - want).abs() < 1e-15, "step {t}: {}", theta[0]);
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &mut Vec<f64>, b: &[f64]) {
    if a.len() < b.len() {
        a.resize(b.len(), 0.0);
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

/// Coefficients in `x` of `Σ c_k (w x + b)^k`.
fn compose_affine(c: &[f64], w: f64, b: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut power = vec![1.0];
    for &ck in c {
        poly_add(&mut out, &power.iter().map(|v| ck * v).collect::<Vec<_>>());
        power = poly_mul(&power, &[b, w]);
    }
    out
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}

#[test]
fn fixed_rational_network_is_an_expanded_rational() {
    let act = RationalActivation::relu_fit(2001).unwrap().0;
    let spec = ActivationSpec::rational(ActivationKind::FixedRational, act).unwrap();
    let p = MlpParams::new(vec![0.8, -1.3], vec![0.2, 0.5], vec![1.1, -0.7], 0.3, spec).unwrap();
    let nums: Vec<Vec<f64>> = (0..2).map(|h| compose_affine(&act.num, p.w1[h], p.b1[h])).collect();
    let dens: Vec<Vec<f64>> = (0..2).map(|h| compose_affine(&act.den, p.w1[h], p.b1[h])).collect();
    let den = poly_mul(&dens[0], &dens[1]);
    let mut num = den.iter().map(|v| p.b2 * v).collect::<Vec<_>>();
    poly_add(
        &mut num,
        &poly_mul(&nums[0], &dens[1])
            .iter()
            .map(|v| p.w2[0] * v)
            .collect::<Vec<_>>(),
    );
    poly_add(
        &mut num,
        &poly_mul(&nums[1], &dens[0])
            .iter()
            .map(|v| p.w2[1] * v)
            .collect::<Vec<_>>(),
    );
    // numerator degree 3 + 2(H − 1), denominator degree 2H
    assert_eq!((num.len() - 1, den.len() - 1), (5, 4));
    for x in linspace(-1.0, 1.0, 100) {
        let direct = forward(&p, x).unwrap();
        let expanded = horner(&num, x) / horner(&den, x);
        assert!((direct - expanded).abs() < 1e-12 * direct.abs().max(1.0));
    }
}

#[test]
fn relu_fit_activation_stays_within_fit_error() {
    let (act, err) = RationalActivation::relu_fit(2001).unwrap();
    assert!((err - RELU_FIT_ERROR).abs() < 1e-9, "E_relu drifted to {err}");
    for x in linspace(-1.0, 1.0, 2001) {
        assert!((act.eval(x).unwrap() - x.max(0.0)).abs() <= err + 1e-9);
    }
}

#[test]
fn seeded_training_is_bit_identical() {
    let s = target(201);
    let run = || {
        let mut p = MlpParams::init(
            10,
            ActivationSpec::for_kind(ActivationKind::LearnableRational, 401).unwrap(),
            7,
        )
        .unwrap();
        train(&mut p, &s, &TrainConfig::new(LossKind::Uniform, 30, 7)).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(
        a.per_epoch_loss.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        b.per_epoch_loss.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
}

#[test]
fn report_is_consistent_with_history() {
    let s = target(201);
    for (kind, split) in [
        (ActivationKind::Relu, false),
        (ActivationKind::FixedRational, false),
        (ActivationKind::LearnableRational, true),
    ] {
        let mut p = MlpParams::init(10, ActivationSpec::for_kind(kind, 401).unwrap(), 3).unwrap();
        let mut cfg = TrainConfig::new(LossKind::Mse, 40, 3);
        if split {
            cfg = cfg.split();
        }
        let rep = train(&mut p, &s, &cfg).unwrap();
        assert_eq!(rep.per_epoch_loss.len(), 40);
        let (k, min) = rep
            .per_epoch_loss
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |b, (i, &l)| if l < b.1 { (i, l) } else { b });
        assert_eq!(rep.min_loss, min);
        assert_eq!(rep.min_loss_epoch, k + 1);
        assert!(rep.min_loss <= rep.final_loss);
        assert!(rep.min_loss_epoch <= 40);
        assert_eq!(rep.final_loss, loss(&p, &s, LossKind::Mse).unwrap());
    }
}

#[test]
fn frozen_blocks_match_first_block_alone() {
    let s = target(201);
    let start = MlpParams::init(
        10,
        ActivationSpec::for_kind(ActivationKind::LearnableRational, 401).unwrap(),
        2,
    )
    .unwrap();
    let mut split = start.clone();
    let mut cfg = TrainConfig::new(LossKind::Uniform, 25, 2).split();
    cfg.block_learning_rates = Some([1e-2, 0.0, 0.0]);
    let rep = train(&mut split, &s, &cfg).unwrap();

    let mut alone = start.clone();
    let mut flat = alone.to_flat();
    let block = alone.blocks()[0].clone();
    let mut state = Moments::zeros(block.len());
    let mut history = Vec::new();
    for epoch in 1..=25 {
        let (_, g) = loss_and_gradient(&alone, &s, LossKind::Uniform).unwrap();
        adamax_step(&mut state, &mut flat[block.clone()], &g[block.clone()], 1e-2, epoch);
        alone.set_flat(&flat);
        history.push(loss(&alone, &s, LossKind::Uniform).unwrap());
    }
    assert_eq!(rep.per_epoch_loss, history);
    assert_eq!(split.to_flat(), alone.to_flat());
}

#[test]
fn split_epochs_mostly_descend() {
    let s = target(2001);
    let mut descending = 0;
    let mut total = 0;
    for seed in 1..=5 {
        let mut p = MlpParams::init(
            10,
            ActivationSpec::for_kind(ActivationKind::LearnableRational, 2001).unwrap(),
            seed,
        )
        .unwrap();
        let before = loss(&p, &s, LossKind::Uniform).unwrap();
        let rep = train(&mut p, &s, &TrainConfig::new(LossKind::Uniform, 200, seed).split()).unwrap();
        let mut prev = before;
        for &l in &rep.per_epoch_loss {
            total += 1;
            if l <= prev {
                descending += 1;
            }
            prev = l;
        }
    }
    let share = descending as f64 / total as f64;
    // measured 0.619 on these seeds; the uniform loss moves only one sample's
    // residual per step, so single epochs often go up
    assert!(share >= 0.6, "only {share:.3} of epochs descended");
}

#[test]
fn pole_at_a_pre_activation_is_reported() {
    let act = RationalActivation::new([0.0, 1.0, 0.0, 0.0], [1.0, 0.0, 1.0]).unwrap();
    let spec = ActivationSpec::rational(ActivationKind::LearnableRational, act).unwrap();
    let mut p = MlpParams::new(vec![0.0], vec![0.5], vec![1.0], 0.0, spec).unwrap();
    let mut flat = p.to_flat();
    // Q(s) = s² − 0.25 vanishes at the constant pre-activation s = 0.5
    let n = flat.len();
    flat[n - 3] = -0.25;
    p.set_flat(&flat);
    let s = target(11);
    assert!(matches!(forward(&p, 0.3), Err(ratnet_core::Error::Pole { .. })));
    assert!(matches!(
        train(&mut p, &s, &TrainConfig::new(LossKind::Mse, 5, 1)),
        Err(ratnet_core::Error::Pole { .. })
    ));
}
