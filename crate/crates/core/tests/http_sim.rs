//! The simulator served over HTTP and queried with the live-engine client
//! must produce the same log as the in-process client.

use std::net::{SocketAddr, TcpListener};
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serpaudit_core::crawler::{
    build_history, default_queries, load_url_lists, make_profiles, run_audit, AuditPlan, DelayRange, EngineConfig,
    EngineClient, HttpEngineClient, HttpFetcher, Humanization, PageFetcher, ProfileSpec, ResponseFormat, Session,
    VirtualClock, WarmupSpec, CONFLICT_KEYWORDS, GENERAL_KEYWORDS,
};
use serpaudit_core::model::{BotProfile, BotType, HistoryKind, Location};
use serpaudit_core::simengine::{serve_blocking, write_warmup_sources, EnginePersona, SimClient, SimEngine};

fn start(engine: Arc<SimEngine>) -> SocketAddr {
    let addr = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap();
    std::thread::spawn(move || serve_blocking(engine, false, addr));
    let probe = BotProfile::new("probe", BotType::Type1, Location::new("US_NY").unwrap(), serpaudit_core::model::Language::english(), HistoryKind::Stateless, "ip").unwrap();
    for _ in 0..100 {
        if HttpFetcher::default().fetch_page(&format!("http://{addr}/healthz"), &probe, &mut Session::default()).is_ok() {
            return addr;
        }
        std::thread::sleep(Duration::from_millis(20));
    }
    panic!("simulator did not start on {addr}");
}

fn warmed_profiles(client: &SimClient, dir: &Path) -> Vec<BotProfile> {
    let spec = ProfileSpec {
        bot_type: BotType::Type3,
        locations: vec![Location::new("IL").unwrap(), Location::new("BR").unwrap()],
        per_location: 3,
        type3_mix: [1, 1, 1],
    };
    let src = dir.join("sources.csv");
    write_warmup_sources(&src).unwrap();
    let warm = WarmupSpec { seed: 5, dwell_ms: DelayRange::ZERO, ..WarmupSpec::default() };
    make_profiles(&spec)
        .unwrap()
        .into_iter()
        .map(|p| {
            if p.history_kind == HistoryKind::Stateless {
                return p;
            }
            let lists = load_url_lists(&CONFLICT_KEYWORDS, &GENERAL_KEYWORDS, &src, &p.location, &p.language).unwrap();
            build_history(&p, &warm, lists.for_history(p.history_kind), client, &VirtualClock::new(0)).unwrap().profile
        })
        .collect()
}

fn plan(profiles: Vec<BotProfile>) -> AuditPlan {
    AuditPlan {
        audit_id: "http".into(),
        engines: vec!["sim".into()],
        queries: default_queries().into_iter().filter(|q| q.in_type3_subset()).take(4).collect(),
        profiles,
        repeat_count: 1,
        inter_query_delay_ms: DelayRange::new(100, 200),
        humanization: Humanization { typing_ms_per_char: DelayRange::new(10, 20), jitter_seed: 1 },
    }
}

fn http_client(addr: SocketAddr, send_all_cookies: bool) -> HttpEngineClient {
    HttpEngineClient::new(EngineConfig {
        name: "sim".into(),
        search_url: format!("http://{addr}/search?q={{q}}&loc={{loc}}&lang={{lang}}&ip={{ip}}"),
        format: ResponseFormat::Json,
        result_pattern: None,
        captcha_marker: None,
        timeout_ms: 5_000,
        send_all_cookies,
    })
    .unwrap()
}

#[test]
fn http_and_in_process_logs_are_identical() {
    let mut persona = EnginePersona::neutral("sim", 11);
    persona.w_loc = 0.5;
    persona.w_hist = 1.0;
    persona.noise_sigma = 0.05;
    let engine = Arc::new(SimEngine::new(persona, &default_queries()).unwrap());
    let local = SimClient::new(engine.clone());
    let addr = start(engine);
    let dir = tempfile::tempdir().unwrap();
    let plan = plan(warmed_profiles(&local, dir.path()));

    let over_http = dir.path().join("http.jsonl");
    let in_process = dir.path().join("local.jsonl");
    let remote = http_client(addr, true);
    let s = run_audit(&plan, &[&remote as &dyn EngineClient], &over_http, &VirtualClock::new(0)).unwrap();
    assert_eq!(s.failed, 0);
    run_audit(&plan, &[&local as &dyn EngineClient], &in_process, &VirtualClock::new(0)).unwrap();
    assert_eq!(std::fs::read(&over_http).unwrap(), std::fs::read(&in_process).unwrap());
}

#[test]
fn host_scoped_cookies_hide_history_from_the_engine() {
    let mut persona = EnginePersona::neutral("sim", 12);
    persona.w_hist = 1.0;
    let engine = Arc::new(SimEngine::new(persona, &default_queries()).unwrap());
    let local = SimClient::new(engine.clone());
    let addr = start(engine);
    let dir = tempfile::tempdir().unwrap();
    let profiles = warmed_profiles(&local, dir.path());
    let q = &plan(Vec::new()).queries[0];
    let conflict = profiles.iter().find(|p| p.history_kind == HistoryKind::ConflictNews).unwrap();
    let mut stateless = conflict.clone();
    stateless.cookie_jar.clear();

    let search = |c: &HttpEngineClient, p: &BotProfile| c.search(q, p, &mut Session::fresh(p)).unwrap();
    let scoped = http_client(addr, false);
    assert_eq!(search(&scoped, conflict), search(&scoped, &stateless));
    let tracked = http_client(addr, true);
    assert_ne!(search(&tracked, conflict), search(&tracked, &stateless));
}
