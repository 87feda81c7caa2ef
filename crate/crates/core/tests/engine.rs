use proptest::prelude::*;
use symfact_core::engine::{factorize, run_multi_source};
use symfact_core::generate::{erdos_renyi, fixed_degree};
use symfact_core::memory::arena::required_bytes;
use symfact_core::reference::fill1_all;
use symfact_core::{AccessOrder, EngineConfig, Error, SpillBackend, Vertex};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn any_configuration_matches_fill1(
        seed in 0u64..100_000,
        n in 1usize..60,
        density in 0.0f64..0.25,
        k in 1usize..12,
        threads in 1usize..5,
        fill_first in any::<bool>(),
        floor in 1usize..8,
    ) {
        let g = erdos_renyi(n, density, seed);
        let cfg = EngineConfig {
            concurrent_sources: k,
            threads,
            access_order: if fill_first { AccessOrder::FillFirst } else { AccessOrder::MaxIdFirst },
            checked: true,
            frontier_floor: floor,
            // tight budgets force both concurrency shrinking and spills
            budget_bytes: Some(required_bytes(n, &[(n - 1) as Vertex], floor) + 64),
            max_encoded: (3 * n) as u64,
            ..Default::default()
        };
        let (fs, stats) = factorize(&g, &cfg).unwrap();
        prop_assert_eq!(fs, fill1_all(&g));
        prop_assert_eq!(stats.spilled_entries, stats.reloaded_entries);
    }
}

#[test]
fn sources_may_come_in_any_order() {
    let g = fixed_degree(50, 3, 4);
    let mut sources: Vec<Vertex> = (0..50).rev().collect();
    sources.swap(3, 40);
    let out = run_multi_source(
        &g,
        &sources,
        &EngineConfig {
            concurrent_sources: 7,
            ..Default::default()
        },
    )
    .unwrap();
    let fs = out.into_structure(50);
    assert_eq!(fs, fill1_all(&g));
}

#[test]
fn frontier_profile_sums_to_insertions() {
    let g = erdos_renyi(60, 0.08, 5);
    let (_, st) = factorize(
        &g,
        &EngineConfig {
            concurrent_sources: 5,
            threads: 3,
            ..Default::default()
        },
    )
    .unwrap();
    let total: u64 = st.per_source_frontier.iter().map(|p| p.1).sum();
    assert_eq!(total, st.frontier_insertions);
    assert_eq!(st.per_source_frontier.len(), 60);
}

#[test]
fn tiny_budget_is_infeasible() {
    let g = erdos_renyi(30, 0.1, 1);
    let cfg = EngineConfig {
        budget_bytes: Some(16),
        ..Default::default()
    };
    assert!(matches!(
        factorize(&g, &cfg),
        Err(Error::ConfigurationInfeasible(_))
    ));
}

#[test]
fn file_spill_backend_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let g = erdos_renyi(120, 0.05, 8);
    let cfg = EngineConfig {
        concurrent_sources: 16,
        threads: 2,
        checked: true,
        frontier_floor: 4,
        budget_bytes: Some(required_bytes(120, &(104..120).collect::<Vec<_>>(), 4)),
        spill: SpillBackend::File(dir.path().to_path_buf()),
        ..Default::default()
    };
    let (fs, st) = factorize(&g, &cfg).unwrap();
    assert_eq!(fs, fill1_all(&g));
    assert!(st.spill_events > 0);
}
