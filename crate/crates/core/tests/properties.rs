use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use num_rational::Rational64;
use orthosearch::decomposition::{allocate_robots, rectangulate};
use orthosearch::geometry::{rasterize, Cell, GridGraph, OrthoPolygon};
use orthosearch::planning::{astar_indices, cost_field, hungarian, CostMap};
use orthosearch::polygen::inflate_cut;
use orthosearch::sfc::{gilbert_curve, rectangle_patrol, repair_curve, segments};
use orthosearch::sim::{init_trial, run_trial, Arena, IntruderModel, Role, SfcLayout, SimConfig, Strategy};
use proptest::prelude::*;
use proptest::strategy::Strategy as _;

fn center_inside(poly: &OrthoPolygon, c: Cell) -> bool {
    let (px, py) = (c.col as f64 + 0.5, c.row as f64 + 0.5);
    let mut crossings = 0;
    for e in poly.edges() {
        let (x0, y0, x1, y1) = (e.from.x as f64, e.from.y as f64, e.to.x as f64, e.to.y as f64);
        if x0 == x1 && x0 > px && (y0.min(y1) < py && py < y0.max(y1)) {
            crossings += 1;
        }
    }
    crossings % 2 == 1
}

fn bfs_reach(g: &GridGraph) -> usize {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([g.cell(0)]);
    seen.insert(g.cell(0));
    while let Some(c) = queue.pop_front() {
        for n in [
            Cell::new(c.col + 1, c.row),
            Cell::new(c.col - 1, c.row),
            Cell::new(c.col, c.row + 1),
            Cell::new(c.col, c.row - 1),
        ] {
            if g.contains(n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.len()
}

fn polygon_strategy() -> impl proptest::strategy::Strategy<Value = OrthoPolygon> {
    (2usize..16, any::<u64>()).prop_map(|(half, seed)| inflate_cut(2 * half, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rasterization_matches_ray_casting(poly in polygon_strategy()) {
        let g = rasterize(&poly).unwrap();
        let (w, h) = poly.bounds();
        for row in -1..=h as i32 {
            for col in -1..=w as i32 {
                let c = Cell::new(col, row);
                prop_assert_eq!(g.contains(c), center_inside(&poly, c), "cell {:?}", c);
            }
        }
    }

    #[test]
    fn shoelace_area_counts_cells(poly in polygon_strategy()) {
        let g = rasterize(&poly).unwrap();
        prop_assert_eq!(poly.area() as usize, g.len());
    }

    #[test]
    fn grid_is_connected_and_symmetric(poly in polygon_strategy()) {
        let g = rasterize(&poly).unwrap();
        prop_assert!(g.is_connected());
        prop_assert_eq!(bfs_reach(&g), g.len());
        for &c in g.cells() {
            for n in g.neighbors(c).unwrap() {
                prop_assert_eq!(c.manhattan(n), 1);
                prop_assert!(g.neighbors(n).unwrap().contains(&c));
            }
        }
    }

    #[test]
    fn normalization_is_idempotent(poly in polygon_strategy()) {
        let again = OrthoPolygon::new(poly.vertices()).unwrap();
        prop_assert_eq!(again.vertices(), poly.vertices());
        let flipped: Vec<_> = poly.vertices().iter().rev().map(|p| (p.x + 7, p.y - 3)).collect();
        let back = OrthoPolygon::new(&flipped).unwrap();
        prop_assert_eq!(back.vertices(), poly.vertices());
    }

    #[test]
    fn rectangulation_partitions_cells(poly in polygon_strategy(), seed in any::<u64>()) {
        let g = rasterize(&poly).unwrap();
        let r = rectangulate(&g, seed);
        let owners = r.owners(&g);
        prop_assert!(owners.is_some());
        prop_assert_eq!(r.areas().iter().sum::<u64>() as usize, g.len());
        for j in &r.junctions {
            prop_assert!(!j.is_empty());
            for &(a, b) in &j.pairs {
                prop_assert_eq!(a.manhattan(b), 1);
                prop_assert!(r.rects[j.a].contains(a));
                prop_assert!(r.rects[j.b].contains(b));
            }
        }
    }

    #[test]
    fn gilbert_is_a_king_move_permutation(w in 1u32..40, h in 1u32..40) {
        let c = gilbert_curve(w, h);
        prop_assert_eq!(c.len(), (w * h) as usize);
        prop_assert_eq!(c.cells()[0], Cell::new(0, 0));
        let distinct: HashSet<Cell> = c.cells().iter().copied().collect();
        prop_assert_eq!(distinct.len(), c.len());
        prop_assert!(c.steps().all(|(a, b)| a.chebyshev(b) == 1));
        let fixed = repair_curve(&c, &GridGraph::block(w, h)).unwrap();
        prop_assert!(fixed.is_unit_step());
        prop_assert_eq!(fixed.len(), c.len() + c.diagonal_steps());
    }

    #[test]
    fn segments_tile_the_curve(w in 1u32..12, h in 1u32..12, count in 1usize..40) {
        let rect = orthosearch::Rectangle::new(Cell::new(3, 4), w, h);
        let curve = rectangle_patrol(&rect);
        prop_assume!(count <= curve.len());
        let segs = segments(&curve, count).unwrap();
        prop_assert_eq!(segs[0].start, 0);
        prop_assert_eq!(segs.last().unwrap().end, curve.len() - 1);
        for pair in segs.windows(2) {
            prop_assert_eq!(pair[0].end + 1, pair[1].start);
        }
        let lens: Vec<usize> = segs.iter().map(|s| s.len()).collect();
        prop_assert!(lens.iter().max().unwrap() - lens.iter().min().unwrap() <= 1);
    }

    #[test]
    fn allocation_sums_and_tracks_quota(areas in prop::collection::vec(1u64..200, 1..8), extra in 0usize..60) {
        let k = areas.len() + extra;
        let counts = allocate_robots(&areas, k).unwrap();
        prop_assert_eq!(counts.iter().sum::<usize>(), k);
        prop_assert!(counts.iter().all(|&c| c >= 1));
        let total: u64 = areas.iter().sum();
        let quotas: Vec<f64> = areas.iter().map(|&a| k as f64 * a as f64 / total as f64).collect();
        if quotas.iter().all(|&q| q >= 1.0) {
            for (c, q) in counts.iter().zip(&quotas) {
                prop_assert!((*c as f64 - q).abs() < 1.0, "count {} quota {}", c, q);
            }
        }
    }

    #[test]
    fn float_and_exact_planners_agree(poly in polygon_strategy(), bumps in prop::collection::vec(any::<u16>(), 0..200), s in any::<u16>(), t in any::<u16>()) {
        let g = rasterize(&poly).unwrap();
        let n = g.len();
        let mut exact = CostMap::<Rational64>::new(n);
        let mut float = CostMap::<f64>::new(n);
        let mut single = CostMap::<f32>::new(n);
        for b in bumps {
            let i = b as usize % n;
            exact.bump_index(i);
            float.bump_index(i);
            single.bump_index(i);
        }
        let (s, t) = (s as usize % n, t as usize % n);
        let fe = cost_field(&g, &exact, s)[t].unwrap();
        let ff = cost_field(&g, &float, s)[t].unwrap();
        let fs = cost_field(&g, &single, s)[t].unwrap();
        let fe_f64 = *fe.numer() as f64 / *fe.denom() as f64;
        prop_assert!((ff - fe_f64).abs() < 1e-9);
        prop_assert!((fs as f64 - fe_f64).abs() < 1e-3);
        let path = astar_indices(&g, &exact, s, t).unwrap();
        let cost: Rational64 = path[1..].iter().map(|&v| exact.entry_cost(v)).sum();
        prop_assert_eq!(cost, fe);
        let fpath = astar_indices(&g, &float, s, t).unwrap();
        let fcost: f64 = fpath[1..].iter().map(|&v| float.entry_cost(v)).sum();
        prop_assert!((fcost - fe_f64).abs() < 1e-9);
    }

    #[test]
    fn hungarian_matches_brute_force(m in (1usize..6).prop_flat_map(|k| prop::collection::vec(prop::collection::vec(0i64..30, k), k))) {
        let k = m.len();
        let mut best = i64::MAX;
        let mut perm: Vec<usize> = (0..k).collect();
        heap_permutations(&mut perm, k, &mut |p| {
            best = best.min(p.iter().enumerate().map(|(r, &c)| m[r][c]).sum());
        });
        let exact: Vec<Vec<Rational64>> = m.iter().map(|r| r.iter().map(|&v| Rational64::from_integer(v)).collect()).collect();
        let a = hungarian(&exact).unwrap();
        prop_assert_eq!(a.cost, Rational64::from_integer(best));
        let realized: i64 = a.targets.iter().enumerate().map(|(r, &c)| m[r][c]).sum();
        prop_assert_eq!(realized, best);
    }
}

fn heap_permutations(p: &mut Vec<usize>, n: usize, f: &mut impl FnMut(&[usize])) {
    if n <= 1 {
        f(p);
        return;
    }
    for i in 0..n - 1 {
        heap_permutations(p, n - 1, f);
        if n.is_multiple_of(2) {
            p.swap(i, n - 1);
        } else {
            p.swap(0, n - 1);
        }
    }
    heap_permutations(p, n - 1, f);
}

#[test]
fn inflate_cut_over_500_seeds() {
    for seed in 0..500u64 {
        let target = 4 + 2 * (seed % 19) as usize;
        let p = inflate_cut(target, seed).unwrap();
        assert_eq!(p.vertex_count(), target, "seed {seed}");
        assert!(OrthoPolygon::new(p.vertices()).is_ok());
        let side = (target / 2 - 1) as i64;
        let (w, h) = p.bounds();
        assert!(w <= side && h <= side, "seed {seed}: {w}x{h} for {target} vertices");
        assert!(rasterize(&p).unwrap().is_connected());
    }
    let a = inflate_cut(40, 9).unwrap();
    let (w, h) = a.bounds();
    assert!(w <= 19 && h <= 19);
    assert_eq!(inflate_cut(24, 3).unwrap(), inflate_cut(24, 3).unwrap());
}

fn arena(vertices: usize, seed: u64) -> Arc<Arena> {
    Arc::new(Arena::new("p", inflate_cut(vertices, seed).unwrap()).unwrap())
}

#[test]
fn trials_are_reproducible() {
    let a = arena(20, 4);
    let layout = Arc::new(SfcLayout::new(&a.grid, 0, 8));
    for s in Strategy::ALL {
        for m in [IntruderModel::Static, IntruderModel::RandomWalk, IntruderModel::NeighborWalk] {
            let mut cfg = SimConfig::new(a.clone(), s, layout.min_robots(s).max(12), m, 99);
            cfg.layout = Some(layout.clone());
            cfg.record_trace = true;
            let r1 = run_trial(&cfg).unwrap();
            let r2 = run_trial(&cfg).unwrap();
            assert_eq!(r1.steps, r2.steps);
            assert_eq!(
                serde_json::to_string(&r1.trace).unwrap(),
                serde_json::to_string(&r2.trace).unwrap()
            );
        }
    }
}

#[test]
fn traces_stay_in_the_grid_and_move_by_unit_steps() {
    let a = arena(24, 8);
    let layout = Arc::new(SfcLayout::new(&a.grid, 0, 8));
    for s in Strategy::ALL {
        for seed in 0..10 {
            let k = layout.min_robots(s).max(14);
            let mut cfg = SimConfig::new(a.clone(), s, k, IntruderModel::RandomWalk, seed);
            cfg.layout = Some(layout.clone());
            cfg.record_trace = true;
            let r = run_trial(&cfg).unwrap();
            let trace = r.trace.unwrap();
            assert_eq!(trace.len() as u64, r.steps + 1);
            for pair in trace.windows(2) {
                assert!(a.grid.contains(pair[1].intruder));
                assert!(pair[0].intruder.manhattan(pair[1].intruder) <= 1);
                for (x, y) in pair[0].robots.iter().zip(&pair[1].robots) {
                    assert!(a.grid.contains(*y));
                    assert!(x.manhattan(*y) <= 1, "{s}: jump {x:?} -> {y:?}");
                }
            }
            let last = trace.last().unwrap();
            if r.captured && r.steps > 0 {
                assert!(last.events.iter().any(|e| e.contains("capture")));
            }
        }
    }
}

#[test]
fn cost_map_counts_every_robot_step() {
    let a = arena(16, 2);
    let mut cfg = SimConfig::new(a.clone(), Strategy::Random, 5, IntruderModel::Static, 3);
    cfg.max_steps = 30;
    let mut state = init_trial(&cfg).unwrap();
    let mut steps = 0;
    while !state.captured && state.t < cfg.max_steps {
        state.step();
        steps += 1;
    }
    let total: u32 = (0..a.cells()).map(|i| state.costs.visits(i)).sum();
    assert_eq!(total as usize, 5 * steps);

    let k = SfcLayout::new(&a.grid, 0, 1).rect_count();
    let mut cfg = SimConfig::new(a.clone(), Strategy::Sfc, k, IntruderModel::Static, 3);
    cfg.max_steps = 30;
    let mut state = init_trial(&cfg).unwrap();
    while !state.captured && state.t < cfg.max_steps {
        state.step();
    }
    assert!((0..a.cells()).all(|i| state.costs.visits(i) == 0));
}

#[test]
fn sfc_guards_never_move() {
    let a = arena(22, 5);
    let layout = Arc::new(SfcLayout::new(&a.grid, 1, 8));
    let k = layout.min_robots(Strategy::SfcGuarded) + 3;
    for seed in 0..20 {
        let mut cfg = SimConfig::new(a.clone(), Strategy::SfcGuarded, k, IntruderModel::RandomWalk, seed);
        cfg.layout = Some(layout.clone());
        let mut state = init_trial(&cfg).unwrap();
        let guards: Vec<(usize, usize)> =
            state.robots.iter().filter(|r| r.role == Role::Guard).map(|r| (r.id, r.pos)).collect();
        assert_eq!(guards.len(), layout.junction_count());
        while !state.captured && state.t < 500 {
            state.step();
            for &(id, pos) in &guards {
                assert_eq!(state.robots[id].pos, pos);
            }
        }
    }
}

#[test]
fn intruder_step_distribution_is_uniform() {
    // Chi-square against uniform over {stay, N, E, S, W} from an interior cell.
    let a = Arc::new(Arena::new("sq", OrthoPolygon::rectangle(5, 5).unwrap()).unwrap());
    let centre = Cell::new(2, 2);
    let mut cfg = SimConfig::new(a.clone(), Strategy::Random, 1, IntruderModel::RandomWalk, 17);
    cfg.intruder_cell = Some(centre);
    cfg.robot_cells = Some(vec![Cell::new(0, 0)]);
    let mut state = init_trial(&cfg).unwrap();
    let origin = a.grid.index_of(centre).unwrap();
    let options: Vec<usize> = std::iter::once(origin)
        .chain(centre.around().iter().map(|c| a.grid.index_of(*c).unwrap()))
        .collect();
    let n = 20_000;
    let mut counts = [0usize; 5];
    for _ in 0..n {
        let next = state.intruder_move();
        counts[options.iter().position(|&o| o == next).unwrap()] += 1;
    }
    let expected = n as f64 / 5.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 4 degrees of freedom, p = 0.001.
    assert!(chi2 < 18.47, "chi2 {chi2}, counts {counts:?}");
}

#[test]
fn rs_and_crs_eventually_find_a_static_intruder() {
    let a = arena(18, 11);
    for s in [Strategy::Random, Strategy::Cooperative] {
        for seed in 0..20 {
            let r = run_trial(&SimConfig::new(a.clone(), s, 3, IntruderModel::Static, seed)).unwrap();
            assert!(r.captured, "{s} seed {seed}");
        }
    }
}
