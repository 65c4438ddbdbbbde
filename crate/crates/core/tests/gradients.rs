use coref_core::clusterers::ClustererKind;
use coref_core::corpus::{Document, Span, Vocab};
use coref_core::gradcheck::finite_diff_check;
use coref_core::model::{CorefModel, ModelConfig};
use coref_core::nn::EncoderConfig;

fn fixture() -> Document {
    Document {
        doc_id: "g".into(),
        tokens: ["Ann", "met", "Bob", ".", "she", "."].iter().map(|t| t.to_string()).collect(),
        sentence_ends: vec![3, 5],
        speakers: None,
        gold_clusters: vec![vec![Span::new(0, 0), Span::new(4, 4)], vec![Span::new(2, 2)]],
    }
}

fn model(kind: ClustererKind) -> CorefModel {
    let doc = fixture();
    let config = ModelConfig {
        encoder: EncoderConfig {
            vocab: 0,
            d_model: 16,
            layers: 1,
            heads: 2,
            max_len: 16,
        },
        d_hid: 16,
        d_pair: 8,
        kind,
        speaker_prefix: false,
    };
    CorefModel::initialize(config, Vocab::build([&doc]), 11).unwrap()
}

#[test]
fn every_parameter_matches_finite_differences() {
    for kind in ClustererKind::ALL {
        let m = model(kind);
        let seg = m.prepare(&fixture()).unwrap().remove(0);
        let (_, grads) = m.loss(&seg).unwrap();
        let report = finite_diff_check(&m.params, &grads, |p| m.loss_value(p, &seg), 1e-3, 1e-3).unwrap();
        let worst = report.params.iter().max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error)).unwrap();
        println!("{kind:?}: {} entries, worst {} {:?}", report.entries_checked, worst.name, worst);
        assert!(report.passed(), "{kind:?}: {:?}", report.flagged().collect::<Vec<_>>());
    }
}
