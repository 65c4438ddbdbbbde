use coref_core::clusterers::ClustererKind;
use coref_core::corpus::{Document, PreparedDoc, Vocab};
use coref_core::model::{CorefModel, ModelConfig};
use coref_core::nn::EncoderConfig;
use coref_core::synth::{generate_corpus, SynthConfig};
use coref_core::training::{train_step, OptimizerState, TrainConfig, Trainer};

fn setup(kind: ClustererKind) -> (CorefModel, Vec<PreparedDoc>) {
    let docs: Vec<Document> = generate_corpus(&SynthConfig::default());
    let config = ModelConfig {
        encoder: EncoderConfig {
            vocab: 0,
            d_model: 32,
            layers: 2,
            heads: 4,
            max_len: 128,
        },
        d_hid: 64,
        d_pair: 32,
        kind,
        speaker_prefix: false,
    };
    let model = CorefModel::initialize(config, Vocab::build(&docs), 5).unwrap();
    let segs = docs.iter().flat_map(|d| model.prepare(d).unwrap()).collect();
    (model, segs)
}

fn fast(epochs: usize) -> TrainConfig {
    TrainConfig {
        lr_heads: 1e-3,
        lr_encoder: 1e-3,
        epochs,
        ..TrainConfig::default()
    }
}

#[test]
fn loss_falls_below_five_percent_of_initial() {
    let (mut model, segs) = setup(ClustererKind::S2e);
    let mut trainer = Trainer::new(fast(200), segs).unwrap();
    let initial = trainer.evaluate_loss(&model).unwrap().total;
    let mut reached = None;
    for epoch in 1..=200 {
        trainer.run_epoch(&mut model).unwrap();
        if epoch % 10 == 0 && trainer.evaluate_loss(&model).unwrap().total < 0.05 * initial {
            reached = Some(epoch);
            break;
        }
    }
    println!("initial loss {initial:.3}, below 5% at epoch {reached:?}");
    assert!(reached.is_some());
}

#[test]
fn zero_rates_leave_parameters_unchanged() {
    let (mut model, segs) = setup(ClustererKind::Incr);
    let before = model.params.clone();
    let config = TrainConfig {
        lr_heads: 0.0,
        lr_encoder: 0.0,
        ..TrainConfig::default()
    };
    let mut state = OptimizerState::new(&config, segs.len());
    let batch: Vec<&PreparedDoc> = segs.iter().take(4).collect();
    let loss = train_step(&mut model, &batch, &mut state, &config).unwrap();
    assert!(loss.total > 0.0);
    assert_eq!(model.params, before);
}

#[test]
fn training_is_deterministic() {
    let run = || {
        let (mut model, segs) = setup(ClustererKind::Mes);
        let mut trainer = Trainer::new(fast(3), segs).unwrap();
        let losses: Vec<f64> = (0..3).map(|_| trainer.run_epoch(&mut model).unwrap().total).collect();
        (model.params, losses)
    };
    let (a, la) = run();
    let (b, lb) = run();
    assert_eq!(la, lb);
    for ((n, x), (_, y)) in a.iter().zip(b.iter()) {
        let bits = |t: &coref_core::Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(x), bits(y), "{n}");
    }
}

#[test]
fn only_encoder_moves_with_head_rate_tiny() {
    let (mut model, segs) = setup(ClustererKind::S2e);
    let before = model.params.clone();
    let config = TrainConfig {
        lr_heads: 1e-30,
        lr_encoder: 1e-2,
        warmup_fraction: 0.0,
        ..TrainConfig::default()
    };
    let mut state = OptimizerState::new(&config, segs.len());
    let batch: Vec<&PreparedDoc> = segs.iter().take(4).collect();
    train_step(&mut model, &batch, &mut state, &config).unwrap();
    assert_ne!(model.params.get("encoder.embed").unwrap(), before.get("encoder.embed").unwrap());
    assert_eq!(model.params.get("s2e.W_ss").unwrap(), before.get("s2e.W_ss").unwrap());
}
