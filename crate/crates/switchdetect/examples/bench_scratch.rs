use std::time::Instant;
use switchdetect::eval::{auc, proportional_split, rank_fuse, RankedPrediction};
use switchdetect::features::{build_corpus_stats, BucketingConfig};
use switchdetect::logs::{assemble_sessions, session_label, LabelMode, LogRecord, Session};
use switchdetect::synth::{generate, GeneratorParams};
use switchdetect::task::{predict_task, train, TaskKind, TaskSpec};

fn sessions_from(records: Vec<LogRecord>) -> Vec<Session> {
    assemble_sessions(records.into_iter().map(Ok)).collect::<Result<_, _>>().unwrap()
}

fn main() {
    let t0 = Instant::now();
    let params = GeneratorParams::default(); // 50k sessions, seed 42
    let log = generate(&params).unwrap();
    eprintln!("gen: {:?}, rate={:.4}", t0.elapsed(), log.truth.positive_rate());

    let sessions = sessions_from(log.records);
    let (training, validation) = proportional_split(sessions, 10, 1).unwrap();
    eprintln!("split: train={} val={}", training.len(), validation.len());

    let t1 = Instant::now();
    let stats = build_corpus_stats(&training);
    let buckets = BucketingConfig::default();
    eprintln!("stats: {:?}", t1.elapsed());

    let mut scores_by_task = Vec::new();
    for kind in [TaskKind::Binary, TaskKind::ThreeCategory, TaskKind::FourCategory] {
        let t2 = Instant::now();
        let spec = TaskSpec::new(kind);
        let trained = train(&spec, &training, &stats, &buckets).unwrap();
        let masked: Vec<Session> = validation.iter().map(|s| s.without_switch_data()).collect();
        let predictions = predict_task(&spec, &trained, &masked, &stats, &buckets);
        let scores: Vec<(u64, f64)> = predictions.iter().map(|p| (p.session_id, p.probability)).collect();
        let labels: Vec<_> = validation.iter().map(|s| (s.session_id, session_label(s, LabelMode::Binary))).collect();
        let a = auc(&scores, &labels).unwrap();
        let mean_p: f64 = scores.iter().map(|(_, p)| p).sum::<f64>() / scores.len() as f64;
        let pos_rate = labels.iter().filter(|(_, l)| l.is_positive()).count() as f64 / labels.len() as f64;
        eprintln!("{kind:?}: auc={a:.5} mean_p={mean_p:.4} pos_rate={pos_rate:.4} ({:?})", t2.elapsed());
        scores_by_task.push(scores);
    }

    let rankings: Vec<RankedPrediction> = scores_by_task.iter().map(|s| RankedPrediction::from_scores(s.clone()).unwrap()).collect();
    let fused = rank_fuse(&[rankings[0].clone(), rankings[1].clone(), rankings[2].clone()]).unwrap();
    let labels: Vec<_> = validation.iter().map(|s| (s.session_id, session_label(s, LabelMode::Binary))).collect();
    let fused_auc = auc(fused.entries(), &labels).unwrap();
    eprintln!("ensemble: auc={fused_auc:.5}");
    eprintln!("total: {:?}", t0.elapsed());
}
