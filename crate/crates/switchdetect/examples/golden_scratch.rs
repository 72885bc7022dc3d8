use switchdetect::features::{build_corpus_stats, BucketingConfig, FeatureExtractor};
use switchdetect::logs::{ClickEvent, QueryEvent, Session, SessionEvent, SwitchEvent, SwitchType};

fn fixture() -> Session {
    Session {
        session_id: 42,
        day: 3,
        user_id: 7,
        switch_type: SwitchType::H,
        events: vec![
            SessionEvent::Query(QueryEvent { time_passed: 0, serp_id: 1, query_id: 900,
                urls: vec![101, 102, 103, 104, 105, 106, 107, 108, 109, 110] }),
            SessionEvent::Click(ClickEvent { time_passed: 50, serp_id: 1, url_id: 105 }),
            SessionEvent::Query(QueryEvent { time_passed: 400, serp_id: 2, query_id: 901, urls: vec![201, 202] }),
            SessionEvent::Click(ClickEvent { time_passed: 450, serp_id: 2, url_id: 201 }),
            SessionEvent::Query(QueryEvent { time_passed: 900, serp_id: 3, query_id: 900, urls: vec![101, 202] }),
            SessionEvent::Switch(SwitchEvent { time_passed: 1000 }),
        ],
        unmatched_clicks: 0,
    }
}

fn history() -> Vec<Session> {
    // user 7: three prior sessions typed N, N, B sharing the fixture's ids
    [SwitchType::N, SwitchType::N, SwitchType::B]
        .iter()
        .enumerate()
        .map(|(i, st)| Session {
            session_id: i as u64 + 1,
            day: 1,
            user_id: 7,
            switch_type: *st,
            events: vec![SessionEvent::Query(QueryEvent {
                time_passed: 0, serp_id: 1, query_id: 900, urls: vec![101, 102],
            })],
            unmatched_clicks: 0,
        })
        .collect()
}

fn main() {
    let stats = build_corpus_stats(&history());
    let buckets = BucketingConfig::default();
    let extractor = FeatureExtractor::new(&stats, &buckets);
    let extraction = extractor.extract(&fixture());
    println!("--- tokens ({}):", extraction.features.len());
    for f in &extraction.features {
        println!("(\"{}\", \"{}\"),", f.tag, f.value);
    }
    let x = extractor.encode(&fixture());
    let mut ids: Vec<u64> = x.ids().iter().map(|id| id.0).collect();
    ids.sort_unstable();
    println!("--- {} unique ids:", ids.len());
    for chunk in ids.chunks(4) {
        println!("{},", chunk.iter().map(|i| format!("0x{i:016x}")).collect::<Vec<_>>().join(", "));
    }
}
