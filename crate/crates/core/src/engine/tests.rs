use std::collections::BTreeSet;

use super::*;
use crate::product::{
    BillingPeriod, BuildingElement, Lod, ProgressReading, ProgressSnapshot, Project, ProjectInfo, SovEntry,
};
use crate::store::{ContentStore, EvidenceBundle};

const WEEK: u64 = 7 * DAY;

fn info(trades: &[&str]) -> ProjectInfo {
    ProjectInfo {
        name: "fixture".into(),
        profile: "uav".into(),
        bim_ref: Some("bim:fixture".into()),
        horizon_start: 0,
        horizon_days: 28,
        trades: trades.iter().map(|s| s.to_string()).collect(),
    }
}

/// `n` partitions, every one carrying every trade at `value` cents.
fn partitions(n: usize, trades: &[&str], value: u64, store: &mut ContentStore) -> Project {
    let elements: Vec<BuildingElement> = (0..n)
        .map(|i| BuildingElement {
            guid: format!("p{i:03}"),
            element_type: "partition".into(),
            trades: trades.iter().map(|s| s.to_string()).collect(),
        })
        .collect();
    let sov: Vec<SovEntry> = elements
        .iter()
        .flat_map(|e| e.trades.iter().map(|t| SovEntry { guid: e.guid.clone(), trade: t.clone(), value_cents: value }))
        .collect();
    Project::new(info(trades), elements, &sov, store).unwrap()
}

fn snapshot(id: &str, week: u64, lod: Lod, readings: Vec<(String, &str, u32)>) -> ProgressSnapshot {
    let readings: Vec<ProgressReading> = readings
        .into_iter()
        .map(|(key, trade, bp)| ProgressReading { key, trade: trade.into(), basis_points: bp })
        .collect();
    let (per_element, per_type) = match lod {
        Lod::PerElement => (readings, vec![]),
        Lod::Aggregate => (vec![], readings),
    };
    ProgressSnapshot {
        snapshot_id: id.into(),
        captured_at: week * WEEK + 6 * DAY,
        lod,
        per_element,
        per_type,
        source: "fixture".into(),
    }
}

fn cfg(code: &str) -> GranularityConfig {
    code.parse().unwrap()
}

fn bundle_of(store: &ContentStore, p: &PaymentRecord) -> EvidenceBundle {
    EvidenceBundle::from_slice(&store.get_content(&p.evidence_cid).unwrap()).unwrap()
}

#[test]
fn fig7d_shape_insulation_week() {
    // insulation on 42 of 60 partitions in week 2 only
    let mut store = ContentStore::in_memory();
    let mut project = partitions(60, &["framing", "insulation"], 50_000, &mut store);
    let readings = (0..42).map(|i| (format!("p{i:03}"), "insulation", 10_000)).collect();
    project.ingest_snapshot(snapshot("w2", 1, Lod::PerElement, readings), &mut store).unwrap();

    let run = run_scenario("fixture", &project, cfg("LHH"), AssetKind::Native, 10_000_000, &mut store).unwrap();
    let ds = run.dataset;
    assert_eq!(ds.payments.len(), 1);
    let p = &ds.payments[0];
    assert_eq!(p.period, "week 2");
    assert_eq!(p.trades, vec!["insulation".to_string()]);
    assert_eq!(p.payee, PayeeDirectory::for_trades(&project.info().trades).subcontractors["insulation"]);
    assert_eq!(p.element_count, 42);
    assert_eq!(p.amount_cents, 42 * 50_000);
    // one block per weekly period on top of genesis
    assert_eq!(run.chain.tip().height, 4);
    assert_eq!(p.block_height, 2);
}

#[test]
fn lll_pays_general_contractor_once_per_type() {
    let mut store = ContentStore::in_memory();
    let mut project = partitions(5, &["framing", "drywall"], 1_000, &mut store);
    for w in 0..4u64 {
        let bp = 2_500 * (w as u32 + 1);
        let readings =
            (0..5).flat_map(|i| [(format!("p{i:03}"), "framing", bp), (format!("p{i:03}"), "drywall", bp / 2)]).collect();
        project.ingest_snapshot(snapshot(&format!("s{w}"), w, Lod::PerElement, readings), &mut store).unwrap();
    }
    let run = run_scenario("fixture", &project, cfg("LLL"), AssetKind::Native, 1_000_000, &mut store).unwrap();
    let ds = &run.dataset;
    assert_eq!(ds.payments.len(), 1);
    let p = &ds.payments[0];
    assert_eq!(p.payee, Address::derive("gc"));
    assert_eq!(p.trades, vec!["framing".to_string(), "drywall".to_string()]);
    assert_eq!(p.element_count, 5);
    // framing complete (5 * 1000) + drywall half (5 * 500)
    assert_eq!(p.amount_cents, 7_500);
    assert_eq!(run.chain.state().balance(&Address::derive("gc")), 7_500);
    assert_eq!(run.chain.state().balance(&Roles::default().escrow), 1_000_000 - 7_500);
}

/// Brute-force count of (week, element, trade) triples whose latest reading
/// in that week exceeds the previous week's.
fn active_triples(project: &Project) -> usize {
    let mut last = std::collections::BTreeMap::new();
    let mut n = 0;
    for w in 0..4u64 {
        let window = w * WEEK..(w + 1) * WEEK;
        let mut seen = std::collections::BTreeMap::new();
        for s in project.timeline().iter().filter(|s| window.contains(&s.snapshot.captured_at)) {
            for r in s.snapshot.readings() {
                seen.insert((r.key.clone(), r.trade.clone()), r.basis_points);
            }
        }
        for (k, bp) in seen {
            let prev = last.insert(k, bp).unwrap_or(0);
            if bp > prev {
                n += 1;
            }
        }
    }
    n
}

#[test]
fn hhh_batch_count_matches_enumeration() {
    let mut store = ContentStore::in_memory();
    let trades = ["framing", "insulation", "drywall"];
    let mut project = partitions(8, &trades, 20_000, &mut store);
    // staggered progress, some weeks idle per item
    for w in 0..4u64 {
        let mut readings = Vec::new();
        for i in 0..8u32 {
            for (t, trade) in trades.iter().enumerate() {
                let start = (i + t as u32) % 4;
                let bp = if (w as u32) < start { 0 } else { (3_000 * (w as u32 - start + 1)).min(10_000) };
                readings.push((format!("p{i:03}"), *trade, bp));
            }
        }
        project.ingest_snapshot(snapshot(&format!("s{w}"), w, Lod::PerElement, readings), &mut store).unwrap();
    }
    let run = run_scenario("fixture", &project, cfg("HHH"), AssetKind::Native, 10_000_000, &mut store).unwrap();
    assert_eq!(run.dataset.payments.len(), active_triples(&project));
    assert!(run.dataset.payments.iter().all(|p| p.trades.len() == 1 && p.element_count == 1));
}

#[test]
fn no_progress_no_batches() {
    let mut store = ContentStore::in_memory();
    let project = partitions(3, &["framing"], 100, &mut store);
    for config in GranularityConfig::all() {
        let run = run_scenario("fixture", &project, config, AssetKind::Native, 1_000, &mut store).unwrap();
        assert!(run.dataset.payments.is_empty());
        assert!(run.dataset.failures.is_empty());
        assert!(run.chain.blocks().iter().all(|b| b.batches.is_empty()));
    }
}

#[test]
fn escrow_shortfall_aborts_the_period() {
    let mut store = ContentStore::in_memory();
    let mut project = partitions(4, &["framing"], 1_000, &mut store);
    let readings = (0..4).map(|i| (format!("p{i:03}"), "framing", 10_000)).collect();
    project.ingest_snapshot(snapshot("s0", 0, Lod::PerElement, readings), &mut store).unwrap();
    let engine = PaymentEngine::new(&project, cfg("HLH"), AssetKind::Native, 3_999).unwrap();
    let period = &plan_periods(Level::Low, Horizon { start: 0, days: 28 })[0];
    let err = engine.settle_period(period, &mut store).unwrap_err();
    assert!(matches!(err, EngineError::EscrowInsufficient { needed: 4_000, available: 3_999 }));
    assert_eq!(engine.chain().tip().height, 0);
    assert_eq!(engine.paid().iter().count(), 0);
    assert!(run_scenario("fixture", &project, cfg("HLH"), AssetKind::Native, 3_999, &mut store).is_err());
}

fn aggregate_project(store: &mut ContentStore) -> Project {
    let trades = ["plumbing", "partitions", "hvac"];
    let mut elements = Vec::new();
    for (ty, trade, n) in [("pipe", "plumbing", 3), ("partition", "partitions", 4), ("duct", "hvac", 2)] {
        for i in 0..n {
            elements.push(BuildingElement { guid: format!("{ty}-{i}"), element_type: ty.into(), trades: vec![trade.into()] });
        }
    }
    let sov: Vec<SovEntry> = elements
        .iter()
        .map(|e| SovEntry { guid: e.guid.clone(), trade: e.trades[0].clone(), value_cents: 10_000 })
        .collect();
    let mut project = Project::new(info(&trades), elements, &sov, store).unwrap();
    for w in 0..4u64 {
        let bp = 2_500 * (w as u32 + 1);
        let readings = vec![
            ("pipe".to_string(), "plumbing", bp),
            ("partition".to_string(), "partitions", bp / 2),
            ("duct".to_string(), "hvac", bp),
        ];
        project.ingest_snapshot(snapshot(&format!("a{w}"), w, Lod::Aggregate, readings), store).unwrap();
    }
    project
}

#[test]
fn aggregate_data_fails_per_element_scopes() {
    let mut store = ContentStore::in_memory();
    let project = aggregate_project(&mut store);
    for config in GranularityConfig::all() {
        let run = run_scenario("ugv", &project, config, AssetKind::Native, 1_000_000, &mut store).unwrap();
        let ds = run.dataset;
        if config.product == Level::High {
            assert!(ds.payments.is_empty(), "{config}");
            let periods = if config.time == Level::High { 4 } else { 1 };
            assert_eq!(ds.failures.len(), 9 * periods, "{config}");
            assert_eq!(ds.metrics.failure_count as usize, ds.failures.len());
        } else {
            assert!(ds.failures.is_empty(), "{config}");
            // 3 + 2 + 2 (half of 4 partitions)
            assert_eq!(ds.total_paid(), 30_000 + 20_000 + 20_000, "{config}");
            for p in &ds.payments {
                assert_eq!(p.scope.key_kind, crate::product::KeyKind::ElementType);
            }
        }
    }
}

#[test]
fn token_settlement_conserves_supply() {
    let mut store = ContentStore::in_memory();
    let project = aggregate_project(&mut store);
    let run = run_scenario("ugv", &project, cfg("LHH"), AssetKind::Token, 500_000, &mut store).unwrap();
    let roles = Roles::default();
    let token = run.chain.state().fungible(&roles.token).unwrap();
    assert_eq!(token.total_supply(), 500_000);
    let held: u128 = token.balances().into_iter().map(|(_, b)| b).sum();
    assert_eq!(held, 500_000);
    assert_eq!(token.balance_of(&roles.escrow), 500_000 - u128::from(run.dataset.total_paid()));
    // native coin untouched
    assert_eq!(run.chain.state().native_supply(), 0);
}

#[test]
fn every_batch_pairs_payment_and_lien() {
    let mut store = ContentStore::in_memory();
    let project = aggregate_project(&mut store);
    let roles = Roles::default();
    for config in GranularityConfig::all().into_iter().filter(|c| c.product == Level::Low) {
        let run = run_scenario("ugv", &project, config, AssetKind::Native, 1_000_000, &mut store).unwrap();
        let registry = run.chain.state().lien_registry(&roles.lien_registry).unwrap();
        let mut ids = BTreeSet::new();
        for p in &run.dataset.payments {
            assert_eq!(p.payment.evidence_cid, Some(p.evidence_cid));
            assert_eq!(p.lien.evidence_cid, Some(p.evidence_cid));
            assert_eq!(p.payment.amount, u128::from(p.amount_cents));
            let bundle = bundle_of(&store, p);
            assert_eq!(bundle.rederive_amount(), Some(p.amount_cents));
            assert_eq!(bundle.payee, p.payee);
            // reverse lookup from the lien token alone
            let token = registry.token(p.lien_token_id).unwrap();
            assert_eq!(token.owner, roles.owner);
            assert_eq!(token.scope, bundle.scope);
            let via_token = EvidenceBundle::from_slice(&store.get_content(&token.uri_cid).unwrap()).unwrap();
            assert_eq!(via_token.amount_cents, p.amount_cents);
            assert!(ids.insert(p.lien_token_id));
        }
        assert_eq!(registry.tokens().len(), run.dataset.payments.len());
    }
}

#[test]
fn paid_state_only_advances_on_commit() {
    let mut store = ContentStore::in_memory();
    let project = aggregate_project(&mut store);
    let engine = PaymentEngine::new(&project, cfg("LLL"), AssetKind::Native, 1_000_000).unwrap();
    let period = BillingPeriod { start: 0, end: 28 * DAY, label: "month".into() };
    let a = engine.settle_period(&period, &mut store).unwrap();
    let b = engine.settle_period(&period, &mut store).unwrap();
    assert_eq!(a.payments.len(), b.payments.len());
    assert_eq!(a.payments[0].record.evidence_cid, b.payments[0].record.evidence_cid);
}

#[test]
fn metric_ordering_on_fixture() {
    let mut store = ContentStore::in_memory();
    let trades = ["framing", "drywall"];
    let mut project = partitions(6, &trades, 7_777, &mut store);
    for w in 0..4u64 {
        let readings = (0..6)
            .flat_map(|i| trades.map(|t| (format!("p{i:03}"), t, (2_000 * (w as u32 + 1) + 37 * i).min(10_000))))
            .collect();
        project.ingest_snapshot(snapshot(&format!("s{w}"), w, Lod::PerElement, readings), &mut store).unwrap();
    }
    let runs: Vec<(GranularityConfig, PaymentDataset)> = GranularityConfig::all()
        .into_iter()
        .map(|c| (c, run_scenario("fixture", &project, c, AssetKind::Native, 10_000_000, &mut store).unwrap().dataset))
        .collect();
    let get = |p, t, tr| &runs.iter().find(|(c, _)| *c == GranularityConfig { product: p, time: t, trade: tr }).unwrap().1;
    use Level::{High as H, Low as L};
    for a in [L, H] {
        for b in [L, H] {
            let m = |ds: &PaymentDataset| ds.metrics.clone();
            assert!(m(get(L, a, b)).mean_elements_per_payment >= m(get(H, a, b)).mean_elements_per_payment);
            assert!(m(get(a, H, b)).payments_per_trade_per_month >= m(get(a, L, b)).payments_per_trade_per_month);
            assert!(m(get(a, b, L)).mean_payees_per_payment >= m(get(a, b, H)).mean_payees_per_payment);
            // floor bound between weekly and monthly settlement
            let (hi, lo) = (get(a, H, b), get(a, L, b));
            assert!(hi.total_paid() <= lo.total_paid());
            let items: usize = hi.payments.iter().map(|p| bundle_of(&store, p).progress_delta.items.len()).sum();
            assert!(((lo.total_paid() - hi.total_paid()) as usize) < items.max(1));
        }
    }
    for (_, ds) in &runs {
        assert_eq!(ds.recompute_metrics(), ds.metrics);
    }
}
