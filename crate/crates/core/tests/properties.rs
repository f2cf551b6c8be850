use std::collections::BTreeSet;

use proptest::prelude::*;
use psml_core::geometry::{make_primitive, mesh_volume, repeat_shape, split_shape, Axis, Shape};
use psml_core::scene::{resolve_path, NodeKind, ParseTree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KINDS: [&str; 19] = [
    "box",
    "ramp",
    "ramp-frustum-x",
    "ramp-frustum-y",
    "cylinder",
    "cylinder-sector",
    "ring",
    "ring-sector",
    "cone",
    "cone-sector",
    "conicfrustum",
    "frustum-sector",
    "hollow-frustum",
    "tetrahedron",
    "tetra-frustum",
    "tetra-frustum-sector",
    "sphere",
    "sphere-shell",
    "sphere-wedge",
];

/// Valid constructor parameters for `kind` from six unit-interval draws.
fn params(kind: &str, u: &[f64]) -> Vec<f64> {
    let len = |x: f64| 0.5 + 2.0 * x;
    let frac = |x: f64| 0.1 + 0.8 * x;
    let angle = |x: f64| 0.3 + 5.9 * x;
    let (w, h, d) = (len(u[0]), len(u[1]), len(u[2]));
    match kind {
        "box" | "ramp" | "tetrahedron" => vec![w, h, d],
        "ramp-frustum-x" | "tetra-frustum" => vec![w, h, d, h * frac(u[3])],
        "ramp-frustum-y" => vec![w, h, d, h * frac(u[3]), d * frac(u[4])],
        "tetra-frustum-sector" => vec![w, h, d, w * frac(u[3]), h * frac(u[4]), d * frac(u[5])],
        "cylinder" | "cone" => vec![w, h],
        "cylinder-sector" | "cone-sector" => vec![w, h, angle(u[3])],
        "ring" => vec![w * frac(u[3]), w, h],
        "ring-sector" => vec![w * frac(u[3]), w, h, angle(u[4])],
        "conicfrustum" => vec![w, d, h],
        "frustum-sector" => vec![w, d, h, angle(u[4])],
        "hollow-frustum" => vec![w, d, h, w.max(d) * frac(u[3])],
        "sphere" => vec![w],
        "sphere-shell" => vec![w * frac(u[1]), w],
        "sphere-wedge" => vec![w, angle(u[1]), 0.3 + 2.8 * u[2]],
        other => panic!("unknown kind {other}"),
    }
}

fn shape_strategy() -> impl Strategy<Value = (Shape, usize)> {
    (0..KINDS.len(), prop::collection::vec(0.0..1.0f64, 6), 0..3usize).prop_map(|(k, u, axis)| {
        let s = make_primitive(KINDS[k], &params(KINDS[k], &u)).unwrap_or_else(|e| panic!("{}: {e}", KINDS[k]));
        (s, axis)
    })
}

fn axis_of(s: &Shape, i: usize) -> Axis {
    s.coord_system().unwrap().axes()[i]
}

/// Pieces from tiling `[0, extent]` with `size` from `-offset`, ignoring slivers under 1e-9.
fn tile_count(extent: f64, size: f64, offset: f64) -> usize {
    (0..)
        .map(|k| ((-offset + k as f64 * size).max(0.0), (-offset + (k + 1) as f64 * size).min(extent)))
        .take_while(|(lo, _)| *lo < extent)
        .filter(|(lo, hi)| hi - lo > 1e-9)
        .count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn split_conserves_volume((shape, ai) in shape_strategy(), weights in prop::collection::vec(0.05..1.0f64, 1..6)) {
        let axis = axis_of(&shape, ai);
        let extent = shape.axis_extent(axis).unwrap();
        let total: f64 = weights.iter().sum();
        let sizes: Vec<f64> = weights.iter().map(|w| w / total * extent).collect();
        let children = split_shape(&shape, axis, &sizes).unwrap();
        prop_assert_eq!(children.len(), sizes.len());
        let sum: f64 = children.iter().map(Shape::volume).sum();
        let parent = shape.volume();
        prop_assert!((sum - parent).abs() <= 1e-6 * parent, "{} vs {}", sum, parent);
        for c in &children {
            let desc = c.descriptor().unwrap();
            prop_assert!(desc.check_invariants().is_ok(), "{:?}", desc.check_invariants());
            prop_assert!(KINDS.iter().any(|k| c.is_instance_of(k)));
            prop_assert!(c.volume() > 0.0);
        }
    }

    #[test]
    fn repeat_partitions_axis((shape, ai) in shape_strategy(), frac in 0.05..0.6f64, off in 0.0..1.0f64) {
        let axis = axis_of(&shape, ai);
        let parent = shape.descriptor().unwrap().axis_interval(axis).unwrap();
        let extent = parent.len();
        let size = extent * frac;
        let offset = size * off;
        let children = repeat_shape(&shape, axis, &[size], offset).unwrap();
        prop_assert_eq!(children.len(), tile_count(extent, size, offset));
        let ivs: Vec<_> = children.iter().map(|c| c.descriptor().unwrap().axis_interval(axis).unwrap()).collect();
        prop_assert_eq!(ivs[0].lo, parent.lo);
        prop_assert_eq!(ivs[ivs.len() - 1].hi, parent.hi);
        for w in ivs.windows(2) {
            prop_assert_eq!(w[0].hi, w[1].lo);
        }
        let total: f64 = ivs.iter().map(|i| i.len()).sum();
        prop_assert!((total - extent).abs() <= 1e-12 * extent.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn transform_laws((shape, _) in shape_strategy(), s in prop::array::uniform3(0.2..3.0f64), r in prop::array::uniform3(-3.2..3.2f64)) {
        let v = shape.volume();
        let scaled = shape.apply_scale(s[0], s[1], s[2]).unwrap().volume();
        prop_assert!((scaled - v * s[0] * s[1] * s[2]).abs() <= 1e-12 * scaled);
        let moved = shape.apply_rotate(r[0], r[1], r[2]).apply_translate(r[2], r[0], r[1]);
        prop_assert!((moved.volume() - v).abs() <= 1e-12 * v);
    }

    #[test]
    fn triangulations_are_closed_and_outward((shape, ai) in shape_strategy(), weights in prop::collection::vec(0.05..1.0f64, 1..4)) {
        let axis = axis_of(&shape, ai);
        let extent = shape.axis_extent(axis).unwrap();
        let total: f64 = weights.iter().sum();
        let sizes: Vec<f64> = weights.iter().map(|w| w / total * extent).collect();
        for c in std::iter::once(shape.clone()).chain(split_shape(&shape, axis, &sizes).unwrap()) {
            let m = c.triangulate(32);
            prop_assert!(m.is_watertight());
            prop_assert!(mesh_volume(&m).unwrap() > 0.0);
        }
    }
}

#[test]
fn mesh_volume_converges_for_curved_kinds() {
    for (kind, p, exact) in [
        ("cylinder", vec![1.0, 2.0], 2.0 * std::f64::consts::PI),
        ("cone", vec![1.0, 2.0], 2.0 * std::f64::consts::PI / 3.0),
        ("sphere", vec![1.0], 4.0 * std::f64::consts::PI / 3.0),
    ] {
        let s = make_primitive(kind, &p).unwrap();
        assert!((s.volume() - exact).abs() < 1e-12, "{kind}");
        let errs: Vec<f64> =
            [8, 16, 32, 64].iter().map(|&n| (mesh_volume(&s.triangulate(n)).unwrap() - exact).abs() / exact).collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0]), "{kind}: {errs:?}");
        assert!(errs[3] < 0.005, "{kind}: {errs:?}");
    }
}

#[test]
fn box_triangulation_volume_is_exact() {
    let s = make_primitive("box", &[2.0, 3.0, 4.0]).unwrap();
    assert!((mesh_volume(&s.triangulate(32)).unwrap() - 24.0).abs() < 1e-9);
}

const SYMBOLS: [&str; 10] = ["wall", "Bricks", "brick", "even", "odd", "a", "ab", "ba", "tower", "stone"];
const ELEMENTS: [&str; 12] = ["wall", "Bricks", "brick", "ick", "a", "b", "o", "ev", "r", "t", "zz", "Axiom"];

fn random_tree(rng: &mut ChaCha8Rng, levels: usize) -> ParseTree {
    let mut t = ParseTree::new("Axiom", Shape::unit_cube());
    let mut frontier = vec![t.root()];
    for level in 0..levels {
        let mut next = Vec::new();
        for &p in &frontier {
            for _ in 0..rng.random_range(1..4) {
                let sym = SYMBOLS[rng.random_range(0..SYMBOLS.len())];
                let kind = if level + 1 == levels { NodeKind::Terminal } else { NodeKind::NonTerminal };
                next.push(t.add_child(p, sym, Shape::unit_cube(), kind));
            }
        }
        frontier = next;
    }
    t
}

/// Nodes whose root path matches `^.*e1.*/.*e2.*...$` for the query elements.
fn regex_oracle(tree: &ParseTree, path: &str) -> BTreeSet<usize> {
    let elements: Vec<String> = path.split('/').map(|e| format!(".*{}.*", regex::escape(e))).collect();
    let re = regex::Regex::new(&format!("^{}$", elements.join("/"))).unwrap();
    tree.preorder().into_iter().filter(|&n| re.is_match(&tree.path(n))).collect()
}

#[test]
fn path_matching_agrees_with_regex_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..1000 {
        let levels = rng.random_range(1..5);
        let tree = random_tree(&mut rng, levels);
        let n = rng.random_range(1..4);
        let path: Vec<&str> = (0..n).map(|_| ELEMENTS[rng.random_range(0..ELEMENTS.len())]).collect();
        let path = path.join("/");
        let got: BTreeSet<usize> = resolve_path(&tree, tree.root(), &path).into_iter().collect();
        assert_eq!(got, regex_oracle(&tree, &path), "case {case}: {path}");
    }
}

#[test]
fn four_level_wall_bricks_query() {
    let mut t = ParseTree::new("Axiom", Shape::unit_cube());
    let c = Shape::unit_cube;
    let wall = t.add_child(0, "wall", c(), NodeKind::NonTerminal);
    let tower = t.add_child(0, "tower", c(), NodeKind::NonTerminal);
    let wb = t.add_child(wall, "Bricks", c(), NodeKind::NonTerminal);
    let tb = t.add_child(tower, "Bricks", c(), NodeKind::NonTerminal);
    for parent in [wb, tb] {
        for row in ["even", "odd"] {
            let r = t.add_child(parent, row, c(), NodeKind::NonTerminal);
            t.add_child(r, "brick", c(), NodeKind::Terminal);
        }
    }
    let got: BTreeSet<usize> = resolve_path(&t, 0, "wall/Bricks").into_iter().collect();
    let expected = regex_oracle(&t, "wall/Bricks");
    assert_eq!(got, expected);
    assert_eq!(got.len(), 5);
    assert!(got.contains(&wb) && !got.contains(&tb));
    assert!(resolve_path(&t, 0, "nothing/here").is_empty());
    assert!(psml_core::scene::terminals(&t, 0, "nothing").is_empty());
    assert!(psml_core::scene::instances(&t, 0, "nothing").is_empty());
}
