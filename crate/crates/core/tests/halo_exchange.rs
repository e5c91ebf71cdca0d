use std::time::{Duration, Instant};

use proptest::prelude::*;
use sale_core::grid::{allocate_field, decompose_domain, BlockLayout, Centering, Field, GlobalGrid};
use sale_core::halo::{
    build_schedule, build_topology, exchange_blocking, exchange_finish, exchange_start,
    in_process_endpoints, run_in_process, run_on_endpoints, CommSchedule, Communicator,
    FieldShape, NeighborClass,
};
use sale_core::SaleError;

/// Value of global element `g` (cell or vertex index), component `c`.
fn global_value(g: [isize; 3], c: usize, seed: f64) -> f64 {
    seed + 1000.0 * c as f64 + g[0] as f64 + 17.0 * g[1] as f64 + 301.0 * g[2] as f64
}

fn filled_field(
    layout: &BlockLayout,
    rank: usize,
    centering: Centering,
    comps: usize,
    value: impl Fn([isize; 3], usize) -> f64,
) -> Field {
    let block = layout.block(rank).unwrap();
    let mut f = allocate_field(layout, rank, centering, Some(comps)).unwrap();
    for [i, j, k] in f.interior_indices().collect::<Vec<_>>() {
        let g = [
            (block.start[0] + i) as isize,
            (block.start[1] + j) as isize,
            (block.start[2] + k) as isize,
        ];
        for c in 0..comps {
            f.set(c, i as isize, j as isize, k as isize, value(g, c));
        }
    }
    f
}

fn schedule_for(layout: &BlockLayout, rank: usize, f: &Field) -> CommSchedule {
    let topo = build_topology(layout, rank, None).unwrap();
    build_schedule(&topo, FieldShape::of(f))
}

/// Global re-slicing oracle: every storage entry must equal the global value
/// at its global index when that index is inside the domain, and must still
/// be zero otherwise.
fn check_against_global(
    layout: &BlockLayout,
    rank: usize,
    f: &Field,
    value: impl Fn([isize; 3], usize) -> f64,
) {
    let block = layout.block(rank).unwrap();
    let cells = layout.grid().cells();
    let ghost = f.ghost();
    let interior = f.interior_extent();
    let vertex = f.centering() == Centering::Vertex;
    for c in 0..f.components() {
        for k in -(ghost[2] as isize)..(interior[2] + ghost[2]) as isize {
            for j in -(ghost[1] as isize)..(interior[1] + ghost[1]) as isize {
                for i in -(ghost[0] as isize)..(interior[0] + ghost[0]) as isize {
                    let local = [i, j, k];
                    let g: [isize; 3] = std::array::from_fn(|d| block.start[d] as isize + local[d]);
                    let inside = (0..3).all(|d| {
                        let hi = cells[d] as isize + if vertex && ghost[d] > 0 { 1 } else { 0 };
                        g[d] >= 0 && g[d] < hi
                    });
                    let expect = if inside { value(g, c) } else { 0.0 };
                    let got = f.get(c, i, j, k);
                    assert_eq!(got, expect, "rank {rank} comp {c} local {local:?} global {g:?}");
                }
            }
        }
    }
}

#[test]
fn one_dimensional_two_rank_exchange() {
    let grid = GlobalGrid::unit([6, 1, 1]).unwrap();
    let layout = decompose_domain(&grid, [2, 1, 1]).unwrap();
    let ghosts = run_in_process(2, |rank, mut comm| {
        let mut f = filled_field(&layout, rank, Centering::Cell, 1, |g, _| g[0] as f64 + 1.0);
        let s = schedule_for(&layout, rank, &f);
        exchange_blocking(&mut f, &s, &mut comm).unwrap();
        assert_eq!(f.exchange_count(), 1);
        (f.get(0, -1, 0, 0), f.get(0, 3, 0, 0))
    });
    assert_eq!(ghosts[0].1, 4.0);
    assert_eq!(ghosts[1].0, 3.0);
    assert_eq!(ghosts[0].0, 0.0);
    assert_eq!(ghosts[1].1, 0.0);
}

#[test]
fn single_rank_has_no_messages_but_counts() {
    let grid = GlobalGrid::unit([4, 4, 4]).unwrap();
    let layout = decompose_domain(&grid, [1, 1, 1]).unwrap();
    run_in_process(1, |rank, mut comm| {
        let mut f = filled_field(&layout, rank, Centering::Cell, 1, |_, _| 1.0);
        let before = f.clone();
        let s = schedule_for(&layout, rank, &f);
        assert!(s.messages.is_empty());
        exchange_blocking(&mut f, &s, &mut comm).unwrap();
        assert_eq!(f.data(), before.data());
        assert_eq!(f.exchange_count(), 1);
        assert_eq!(comm.stats().calls, 1);
    });
}

#[test]
fn rank_ids_land_in_every_ghost_direction() {
    let grid = GlobalGrid::unit([4, 4, 4]).unwrap();
    let layout = decompose_domain(&grid, [2, 2, 2]).unwrap();
    let layout = &layout;
    run_in_process(8, |rank, mut comm| {
        let mut f = filled_field(layout, rank, Centering::Cell, 1, |_, _| rank as f64);
        let s = schedule_for(layout, rank, &f);
        assert_eq!(s.messages.len(), 7);
        exchange_blocking(&mut f, &s, &mut comm).unwrap();
        let owner = |g: [isize; 3], _c: usize| {
            layout.owner_of_cell([g[0] as usize, g[1] as usize, g[2] as usize]) as f64
        };
        check_against_global(layout, rank, &f, owner);
        // each of the 26 ghost sub-regions that exists holds one neighbor's id
        let block = layout.block(rank).unwrap();
        let mut seen = 0;
        for m in &s.messages {
            m.recv.for_each(|i, j, k| {
                assert_eq!(f.get(0, i, j, k), m.rank as f64);
            });
            seen += 1;
            let off = m.offset;
            for d in 0..3 {
                if off[d] < 0 {
                    assert!(!block.at_low_boundary(d));
                }
            }
        }
        assert_eq!(seen, 7);
    });
}

#[test]
fn every_split_of_six_cubed_matches_global_oracle() {
    let grid = GlobalGrid::unit([6, 6, 6]).unwrap();
    for rx in 1..=3 {
        for ry in 1..=3 {
            for rz in 1..=3 {
                let layout = decompose_domain(&grid, [rx, ry, rz]).unwrap();
                let layout = &layout;
                for (centering, comps) in [(Centering::Cell, 1), (Centering::Cell, 2), (Centering::Vertex, 3)] {
                    let value = |g: [isize; 3], c: usize| global_value(g, c, 0.5);
                    run_in_process(layout.size(), |rank, mut comm| {
                        let mut f = filled_field(layout, rank, centering, comps, value);
                        let s = schedule_for(layout, rank, &f);
                        exchange_blocking(&mut f, &s, &mut comm).unwrap();
                        check_against_global(layout, rank, &f, value);
                    });
                }
            }
        }
    }
}

#[test]
fn class_element_counts_follow_closed_forms() {
    let grid = GlobalGrid::unit([144, 144, 144]).unwrap();
    let layout = decompose_domain(&grid, [3, 3, 3]).unwrap();
    let center = layout.rank_of([1, 1, 1]);
    let f = allocate_field(&layout, center, Centering::Cell, None).unwrap();
    let s = schedule_for(&layout, center, &f);
    assert_eq!(s.messages.len(), 26);
    for m in &s.messages {
        let expect = match m.class {
            NeighborClass::Face => 48 * 48,
            NeighborClass::Edge => 48,
            NeighborClass::Corner => 1,
        };
        assert_eq!(m.elements(), expect);
        assert_eq!(m.send.count(), m.recv.count());
    }
}

#[test]
fn start_then_finish_equals_blocking() {
    let grid = GlobalGrid::unit([6, 4, 1]).unwrap();
    let layout = decompose_domain(&grid, [3, 2, 1]).unwrap();
    let layout = &layout;
    run_in_process(6, |rank, mut comm| {
        let value = |g: [isize; 3], c: usize| global_value(g, c, 3.25);
        let mut a = filled_field(layout, rank, Centering::Vertex, 2, value).with_tag(1);
        let mut b = a.clone().with_tag(2);
        let s = schedule_for(layout, rank, &a);
        exchange_blocking(&mut a, &s, &mut comm).unwrap();
        let mut h = exchange_start(&mut b, &s, &mut comm).unwrap();
        exchange_finish(&mut h, &mut b, &s, &mut comm).unwrap();
        assert_eq!(a.data(), b.data());
        assert_eq!(a.exchange_count(), b.exchange_count());
    });
}

#[test]
fn non_blocking_sends_a_snapshot() {
    let grid = GlobalGrid::unit([8, 1, 1]).unwrap();
    let layout = decompose_domain(&grid, [2, 1, 1]).unwrap();
    let layout = &layout;
    run_in_process(2, |rank, mut comm| {
        let mut f = filled_field(layout, rank, Centering::Cell, 1, |g, _| g[0] as f64);
        let s = schedule_for(layout, rank, &f);
        let mut h = exchange_start(&mut f, &s, &mut comm).unwrap();
        // a non-boundary interior element, then the boundary strip too
        f.set(0, 1, 0, 0, -1.0);
        f.set(0, 0, 0, 0, -2.0);
        f.set(0, 3, 0, 0, -3.0);
        exchange_finish(&mut h, &mut f, &s, &mut comm).unwrap();
        if rank == 0 {
            assert_eq!(f.get(0, 4, 0, 0), 4.0);
        } else {
            assert_eq!(f.get(0, -1, 0, 0), 3.0);
        }
    });
}

#[test]
fn double_start_and_double_finish_are_rejected() {
    let grid = GlobalGrid::unit([4, 1, 1]).unwrap();
    let layout = decompose_domain(&grid, [2, 1, 1]).unwrap();
    let layout = &layout;
    run_in_process(2, |rank, mut comm| {
        let mut f = filled_field(layout, rank, Centering::Cell, 1, |_, _| 1.0);
        let s = schedule_for(layout, rank, &f);
        let mut h = exchange_start(&mut f, &s, &mut comm).unwrap();
        assert!(f.has_pending_exchange());
        assert!(matches!(exchange_start(&mut f, &s, &mut comm), Err(SaleError::Contract(_))));
        assert!(matches!(exchange_blocking(&mut f, &s, &mut comm), Err(SaleError::Contract(_))));
        exchange_finish(&mut h, &mut f, &s, &mut comm).unwrap();
        assert!(!h.is_open());
        assert!(matches!(
            exchange_finish(&mut h, &mut f, &s, &mut comm),
            Err(SaleError::Contract(_))
        ));
        assert_eq!(f.exchange_count(), 1);
    });
}

#[test]
fn mismatched_schedule_is_a_contract_violation() {
    let grid = GlobalGrid::unit([4, 4, 1]).unwrap();
    let layout = decompose_domain(&grid, [1, 1, 1]).unwrap();
    let cell = allocate_field(&layout, 0, Centering::Cell, None).unwrap();
    let mut vert = allocate_field(&layout, 0, Centering::Vertex, None).unwrap();
    let s = schedule_for(&layout, 0, &cell);
    let mut comm = Communicator::new(Box::new(in_process_endpoints(1).remove(0)));
    assert!(matches!(exchange_blocking(&mut vert, &s, &mut comm), Err(SaleError::Contract(_))));
}

#[test]
fn interleaved_fields_each_get_their_own_ghosts() {
    let grid = GlobalGrid::unit([6, 6, 6]).unwrap();
    let layout = decompose_domain(&grid, [2, 2, 2]).unwrap();
    let layout = &layout;
    run_in_process(8, |rank, mut comm| {
        let va = |g: [isize; 3], c: usize| global_value(g, c, 1.0);
        let vb = |g: [isize; 3], c: usize| -global_value(g, c, 7.0);
        let mut a = filled_field(layout, rank, Centering::Cell, 1, va).with_tag(10);
        let mut b = filled_field(layout, rank, Centering::Vertex, 3, vb).with_tag(11);
        let sa = schedule_for(layout, rank, &a);
        let sb = schedule_for(layout, rank, &b);
        let mut ha = exchange_start(&mut a, &sa, &mut comm).unwrap();
        let mut hb = exchange_start(&mut b, &sb, &mut comm).unwrap();
        // finish in the opposite order, and on alternate ranks swap order
        if rank % 2 == 0 {
            exchange_finish(&mut hb, &mut b, &sb, &mut comm).unwrap();
            exchange_finish(&mut ha, &mut a, &sa, &mut comm).unwrap();
        } else {
            exchange_finish(&mut ha, &mut a, &sa, &mut comm).unwrap();
            exchange_finish(&mut hb, &mut b, &sb, &mut comm).unwrap();
        }
        check_against_global(layout, rank, &a, va);
        check_against_global(layout, rank, &b, vb);
    });
}

#[test]
fn delayed_delivery_gives_same_result_later() {
    let grid = GlobalGrid::unit([4, 4, 1]).unwrap();
    let layout = decompose_domain(&grid, [2, 2, 1]).unwrap();
    let layout = &layout;
    let value = |g: [isize; 3], c: usize| global_value(g, c, 2.0);
    let run = |delay_ms: u64| {
        let mut eps = in_process_endpoints(4);
        for ep in &mut eps {
            ep.set_delivery_delay_ms(delay_ms);
        }
        let t0 = Instant::now();
        let fields = run_on_endpoints(eps, |rank, mut comm| {
            let mut f = filled_field(layout, rank, Centering::Cell, 1, value);
            let s = schedule_for(layout, rank, &f);
            let mut h = exchange_start(&mut f, &s, &mut comm).unwrap();
            exchange_finish(&mut h, &mut f, &s, &mut comm).unwrap();
            f
        });
        (fields, t0.elapsed())
    };
    let (fast, _) = run(0);
    let (slow, elapsed) = run(40);
    assert!(elapsed >= Duration::from_millis(40));
    for (rank, (a, b)) in fast.iter().zip(&slow).enumerate() {
        assert_eq!(a.data(), b.data());
        check_against_global(layout, rank, b, value);
    }
}

#[test]
fn counters_track_completed_rounds() {
    let grid = GlobalGrid::unit([4, 4, 1]).unwrap();
    let layout = decompose_domain(&grid, [2, 1, 1]).unwrap();
    let layout = &layout;
    run_in_process(2, |rank, mut comm| {
        let mut f = filled_field(layout, rank, Centering::Cell, 1, |_, _| 0.0);
        let s = schedule_for(layout, rank, &f);
        for n in 1..=5u64 {
            exchange_blocking(&mut f, &s, &mut comm).unwrap();
            assert_eq!(f.exchange_count(), n);
            assert_eq!(comm.stats().halo_rounds, n);
        }
        let m = comm.all_min(rank as f64).unwrap();
        assert_eq!(m, 0.0);
        assert_eq!(comm.stats().calls, 6);
        assert_eq!(comm.stats().bytes[0], 5 * 8 * 4);
    });
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn blocking_and_non_blocking_agree(
        cells in prop::array::uniform3(4usize..=8),
        ranks in prop::array::uniform3(1usize..=2),
        vertex in any::<bool>(),
        comps in 1usize..=3,
        seed in 0u64..1_000_000,
    ) {
        let grid = GlobalGrid::unit(cells).unwrap();
        let layout = decompose_domain(&grid, ranks).unwrap();
        let layout = &layout;
        let centering = if vertex { Centering::Vertex } else { Centering::Cell };
        let value = move |g: [isize; 3], c: usize| {
            let h = (g[0] * 73856093 ^ g[1] * 19349663 ^ g[2] * 83492791) as u64 ^ seed;
            (h % 100_003) as f64 * 0.37 + c as f64
        };
        let ok = run_in_process(layout.size(), |rank, mut comm| {
            let mut a = filled_field(layout, rank, centering, comps, value).with_tag(1);
            let mut b = a.clone().with_tag(2);
            let s = schedule_for(layout, rank, &a);
            exchange_blocking(&mut a, &s, &mut comm).unwrap();
            let mut h = exchange_start(&mut b, &s, &mut comm).unwrap();
            exchange_finish(&mut h, &mut b, &s, &mut comm).unwrap();
            a.data() == b.data()
        });
        prop_assert!(ok.into_iter().all(|x| x));
    }
}
