use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use proptest::prelude::*;

use serpaudit_core::analyze::{make_pairs, PairingSpec};
use serpaudit_core::annotate::{leaning_proportions, Category, CategoryMap, CategorySource, Consensus, Leaning, Scope};
use serpaudit_core::crawler::{
    default_queries, make_profiles, run_audit, success_filter, AuditPlan, DelayRange, EngineClient, Humanization,
    ProfileSpec, SuccessRule, VirtualClock,
};
use serpaudit_core::model::log::{decode_serp_line, encode_serp_line, read_serp_log_all, write_serp_log};
use serpaudit_core::model::{
    BotProfile, BotType, HistoryKind, Language, Location, QueryCategory, RankedResult, SerpRecord, SerpStatus,
};
use serpaudit_core::simengine::{EnginePersona, SimClient, SimEngine};
use serpaudit_core::stats::{mann_whitney_u, MwuMode};

const LOCS: [&str; 4] = ["IL", "SA", "BR", "US_NY"];

fn bot(id: &str, loc: &str) -> BotProfile {
    let l = Location::new(loc).unwrap();
    let lang = l.local_language().unwrap_or_else(Language::english);
    BotProfile::new(id, BotType::Type2, l, lang, HistoryKind::Stateless, format!("ip-{id}")).unwrap()
}

fn results(sites: &[u8], title: &str) -> Vec<RankedResult> {
    sites
        .iter()
        .enumerate()
        .map(|(i, s)| RankedResult::from_url(i as u32 + 1, format!("https://news{s}.example.com/a/{s}"), title, "s").unwrap())
        .collect()
}

fn serp(bot_id: &str, loc: &str, query: &str, status: SerpStatus, sites: &[u8], title: &str) -> SerpRecord {
    let res = if status == SerpStatus::Ok { results(sites, title) } else { Vec::new() };
    SerpRecord::new("a", "e", bot(bot_id, loc).meta(), query, QueryCategory::General, 7, status, res).unwrap()
}

fn sites() -> impl Strategy<Value = Vec<u8>> {
    proptest::sample::subsequence((0u8..30).collect::<Vec<_>>(), 1..=10).prop_shuffle()
}

fn status() -> impl Strategy<Value = SerpStatus> {
    prop_oneof![4 => Just(SerpStatus::Ok), 1 => Just(SerpStatus::CaptchaBlocked), 1 => Just(SerpStatus::Timeout)]
}

prop_compose! {
    fn any_record()(bot in 0usize..20, loc in 0usize..4, q in 0usize..5, st in status(), s in sites(), title in "\\PC{0,20}") -> SerpRecord {
        serp(&format!("b{bot}"), LOCS[loc], &format!("query {q}"), st, &s, &title)
    }
}

proptest! {
    #[test]
    fn log_round_trip_and_independent_lines(records in prop::collection::vec(any_record(), 0..40)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        write_serp_log(&records, &path).unwrap();
        prop_assert_eq!(&read_serp_log_all(&path).unwrap(), &records);
        for (i, r) in records.iter().enumerate().rev() {
            prop_assert_eq!(&decode_serp_line(&encode_serp_line(r), i + 1).unwrap(), r);
        }
    }

    #[test]
    fn mwu_invariant_under_monotone_transform(
        a in prop::collection::btree_set(-500i32..500, 1..8),
        b in prop::collection::btree_set(-500i32..500, 1..8),
    ) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(|x| f64::from(x) + 0.5).collect();
        let f = |x: &f64| (x / 100.0).exp() * 3.0 + 1.0;
        let (ta, tb): (Vec<f64>, Vec<f64>) = (a.iter().map(f).collect(), b.iter().map(f).collect());
        for mode in [MwuMode::Exact, MwuMode::Normal] {
            let r = mann_whitney_u(&a, &b, mode).unwrap();
            let t = mann_whitney_u(&ta, &tb, mode).unwrap();
            prop_assert_eq!(r.statistic, t.statistic);
            prop_assert_eq!(r.p_value, t.p_value);
        }
    }

    #[test]
    fn relaxing_the_success_rule_never_drops_a_cell(
        records in prop::collection::vec(any_record(), 1..80),
        urls in 1usize..8, ips in 1usize..5, du in 0usize..4, di in 0usize..3,
    ) {
        let ip_map: BTreeMap<String, String> = records.iter().map(|r| (r.bot_id().to_string(), format!("ip{}", &r.bot_id()[1..].parse::<u32>().unwrap() % 7))).collect();
        let cells = |rule| -> BTreeSet<(String, String)> {
            success_filter(records.clone(), &ip_map, rule).kept.iter().map(|r| (r.location().as_str().to_string(), r.query_text().to_string())).collect()
        };
        let strict = cells(SuccessRule { min_urls: urls + du, min_ips: ips + di });
        let relaxed = cells(SuccessRule { min_urls: urls, min_ips: ips });
        prop_assert!(strict.is_subset(&relaxed));
    }

    #[test]
    fn pair_values_do_not_depend_on_bot_order(serps in prop::collection::vec((0usize..4, sites()), 2..12)) {
        let build = |rename: &dyn Fn(usize) -> String| -> Vec<SerpRecord> {
            serps.iter().enumerate().map(|(i, (loc, s))| serp(&rename(i), LOCS[*loc], "q", SerpStatus::Ok, s, "t")).collect()
        };
        let forward = build(&|i| format!("b{i:02}"));
        let reversed = build(&|i| format!("b{:02}", 99 - i));
        let values = |recs: &[SerpRecord]| {
            let mut v: Vec<(bool, u64)> = make_pairs(recs, &PairingSpec::default(), None).unwrap().records.iter().map(|r| (r.same_location, r.value.to_bits())).collect();
            v.sort();
            v
        };
        prop_assert_eq!(values(&forward), values(&reversed));
    }

    #[test]
    fn top3_denominators_never_exceed_all(
        serps in prop::collection::vec((0usize..4, sites()), 1..20),
        labelled in prop::collection::btree_map(0u8..30, 0usize..6, 0..30),
    ) {
        let records: Vec<SerpRecord> = serps.iter().enumerate().map(|(i, (loc, s))| serp(&format!("b{i}"), LOCS[*loc], "q", SerpStatus::Ok, s, "t")).collect();
        let mut categories = CategoryMap::new();
        for s in 0u8..30 {
            let c = if s % 3 == 0 { Category::Reference } else { Category::News };
            categories.insert(format!("news{s}.example.com"), c, CategorySource::Auto);
        }
        let resolved: BTreeMap<String, Consensus> = labelled
            .iter()
            .map(|(s, l)| (format!("https://news{s}.example.com/a/{s}"), Leaning::ALL.get(*l).map_or(Consensus::Unresolved, |l| Consensus::Resolved(*l))))
            .collect();
        let all = leaning_proportions(&records, &categories, &resolved, Scope::All);
        let top = leaning_proportions(&records, &categories, &resolved, Scope::Top3);
        for t in &top.cells {
            let a = all.cells.iter().find(|a| a.engine == t.engine && a.location == t.location).unwrap();
            prop_assert!(a.labeled >= t.labeled);
            prop_assert!(a.labeled + a.unresolved >= t.labeled + t.unresolved);
        }
        for c in all.cells.iter().chain(&top.cells) {
            prop_assert!((c.proportions.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn repeated_audits_show_no_carry_over() {
    let mut persona = EnginePersona::neutral("sim", 3);
    persona.w_hist = 1.0;
    persona.w_loc = 0.3;
    persona.noise_sigma = 0.1;
    let client = SimClient::new(Arc::new(SimEngine::new(persona, &default_queries()).unwrap()));
    let spec = ProfileSpec { per_location: 2, ..ProfileSpec::defaults(BotType::Type2) };
    let plan = AuditPlan {
        audit_id: "carry".into(),
        engines: vec!["sim".into()],
        queries: default_queries().into_iter().take(6).collect(),
        profiles: make_profiles(&spec).unwrap(),
        repeat_count: 1,
        inter_query_delay_ms: DelayRange::ZERO,
        humanization: Humanization { typing_ms_per_char: DelayRange::ZERO, jitter_seed: 0 },
    };
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        run_audit(&plan, &[&client as &dyn EngineClient], &path, &VirtualClock::new(0)).unwrap();
        read_serp_log_all(&path).unwrap().into_iter().map(|r| (r.bot_id().to_string(), r.query_text().to_string(), r.results().to_vec())).collect::<Vec<_>>()
    };
    assert_eq!(run("first.jsonl"), run("second.jsonl"));
}

#[test]
fn simulator_is_deterministic_across_instances() {
    let mut persona = EnginePersona::neutral("sim", 21);
    persona.w_loc = 0.7;
    persona.noise_sigma = 0.3;
    let a = SimEngine::new(persona.clone(), &default_queries()).unwrap();
    let b = SimEngine::new(persona, &default_queries()).unwrap();
    for q in default_queries().iter().take(8) {
        for loc in LOCS {
            let p = bot("x", loc);
            let ctx = serpaudit_core::simengine::RequestContext::new(p.location.clone(), p.language.clone(), &[], "ip");
            assert_eq!(a.serve_search(q.text(), &ctx), b.serve_search(q.text(), &ctx));
        }
    }
}
