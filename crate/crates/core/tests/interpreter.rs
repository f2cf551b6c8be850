#![allow(clippy::result_large_err)]

use std::path::{Path, PathBuf};

use psml_core::frontend::{parse_attributes, parse_program};
use psml_core::interp::{run_program, Library, RunOptions, RunOutput, RuntimeError, RuntimeErrorKind, Value};
use psml_core::scene::{NodeKind, ParseTree};

fn gallery(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../gallery").join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(gallery(name)).unwrap()
}

fn run_with(src: &str, lib: &Library, opts: &RunOptions) -> Result<RunOutput, RuntimeError> {
    let program = parse_program(src).unwrap_or_else(|e| panic!("{e}"));
    run_program(&program, None, lib, opts)
}

fn run(src: &str) -> Result<RunOutput, RuntimeError> {
    run_with(src, &Library::new(), &RunOptions::default())
}

fn wrap(name: &str, body: &str) -> String {
    format!(
        "public class {name} extends ShapeGrammar {{\n public static void main(String[] args) {{\n{body}\n }}\n}}\n"
    )
}

fn leaves_named(tree: &ParseTree, symbol: &str, kind: NodeKind) -> Vec<usize> {
    tree.leaves().into_iter().filter(|&n| tree.node(n).symbol == symbol && tree.node(n).kind == kind).collect()
}

fn brick_library(group: &str) -> (String, Library) {
    let src = read("Bricks.psm").replace("brick.properties, sand", &format!("brick.properties, {group}"));
    let mut lib = Library::new();
    lib.add_attributes("brick.properties", parse_attributes(&read("brick.properties")).unwrap());
    (src, lib)
}

/// Pieces produced by tiling `[0, extent]` with `size` starting at `-offset`,
/// dropping slivers thinner than 1e-9.
fn tiles(extent: f64, size: f64, offset: f64) -> usize {
    let mut n = 0;
    let mut k = 0;
    loop {
        let lo = (-offset + k as f64 * size).max(0.0);
        let hi = (-offset + (k + 1) as f64 * size).min(extent);
        if lo >= extent {
            return n;
        }
        if hi - lo > 1e-9 {
            n += 1;
        }
        k += 1;
    }
}

fn brick_oracle(w: f64, h: f64) -> usize {
    let rows = tiles(8.0, h, 0.0);
    let (even, odd) = (rows.div_ceil(2), rows / 2);
    let flat = even * tiles(4.0, w, 0.0) + odd * tiles(4.0, w, w / 2.0);
    let step = w / 2.0;
    let tau = std::f64::consts::TAU;
    let ring = even * tiles(tau, step, 0.0) + odd * tiles(tau, step, step / 2.0);
    flat + 2 * ring
}

#[test]
fn identity_grammar_yields_one_terminal_cube() {
    let out = run(&wrap("Id", "rules { a::{terminal}; }")).unwrap();
    let leaves = out.tree.leaves();
    assert_eq!(leaves.len(), 1);
    assert_eq!(out.tree.node(leaves[0]).kind, NodeKind::Terminal);
    assert!((out.tree.node(leaves[0]).shape.volume() - 1.0).abs() < 1e-12);
}

#[test]
fn coffee_mug_counts_and_thickness() {
    let out = run(&read("CoffeeMug.psm")).unwrap();
    let t = &out.tree;
    assert_eq!(t.count(NodeKind::Terminal), 3);
    assert_eq!(t.count(NodeKind::VoidTerminal), 3);
    assert_eq!(leaves_named(t, "vesselBody", NodeKind::Terminal).len(), 2);
    let handle = leaves_named(t, "handle", NodeKind::Terminal);
    assert_eq!(handle.len(), 1);
    let s = &t.node(handle[0]).shape;
    assert!((s.radius().unwrap() - s.inner_radius().unwrap() - 0.4).abs() < 1e-6);
    assert!(t.empty_nonterminals().is_empty());
}

#[test]
fn coffee_mug_parameter_variations() {
    let base = read("CoffeeMug.psm");
    for (field, from, to, t) in
        [("t", "t = 0.4", "t = 1", 1.0), ("w_top", "w_top = 4.5", "w_top = 7", 0.4), ("h", "h = 8.5", "h = 10", 0.4)]
    {
        let out = run(&base.replace(from, to)).unwrap_or_else(|e| panic!("{field}: {e}"));
        let tree = &out.tree;
        assert_eq!(tree.count(NodeKind::Terminal), 3, "{field}");
        assert_eq!(tree.count(NodeKind::VoidTerminal), 3, "{field}");
        let wall = leaves_named(tree, "vesselBody", NodeKind::Terminal)
            .into_iter()
            .map(|n| &tree.node(n).shape)
            .find(|s| s.inner_radius().unwrap() > 0.0)
            .unwrap();
        assert!((wall.radius().unwrap() - wall.inner_radius().unwrap() - t).abs() < 1e-6, "{field}");
    }
}

#[test]
fn overrides_replace_fields() {
    let mut opts = RunOptions::default();
    opts.overrides.push(("t".into(), Value::Num(1.0)));
    let out = run_with(&read("CoffeeMug.psm"), &Library::new(), &opts).unwrap();
    let handle = leaves_named(&out.tree, "handle", NodeKind::Terminal)[0];
    let s = &out.tree.node(handle).shape;
    assert!((s.radius().unwrap() - s.inner_radius().unwrap() - 1.0).abs() < 1e-9);

    opts.overrides = vec![("nope".into(), Value::Num(1.0))];
    let err = run_with(&read("CoffeeMug.psm"), &Library::new(), &opts).unwrap_err();
    assert!(matches!(err.kind, RuntimeErrorKind::UnknownOverride(_)));
}

#[test]
fn tiling_oracle_matches_hand_counts() {
    assert_eq!(tiles(4.0, 1.5, 0.75), 4);
    assert_eq!(tiles(4.0, 0.4, 0.0), 10);
    assert_eq!(brick_oracle(1.5, 0.6), 301);
    assert_eq!(brick_oracle(0.7, 0.3), 1173);
}

#[test]
fn bricks_sand_and_rock_match_tiling_oracle() {
    let mut counts = Vec::new();
    for (group, w, h) in [("sand", 1.5, 0.6), ("rock", 0.7, 0.3)] {
        let (src, lib) = brick_library(group);
        let out = run_with(&src, &lib, &RunOptions::default()).unwrap();
        let bricks = leaves_named(&out.tree, "brick", NodeKind::Terminal);
        assert_eq!(bricks.len(), brick_oracle(w, h), "{group}");
        assert_eq!(out.tree.count(NodeKind::VoidTerminal), 2);
        let texture = out.tree.node(bricks[0]).shape.appearance.text(psml_core::geometry::AppearanceKey::Texture);
        assert_eq!(texture, Some(if group == "sand" { "sandStone.jpg" } else { "rock.jpg" }));
        counts.push(bricks.len());
    }
    assert!(counts[1] > counts[0]);
}

#[test]
fn bricks_paths_read_wall_bricks_brick() {
    let (src, lib) = brick_library("sand");
    let out = run_with(&src, &lib, &RunOptions::default()).unwrap();
    let t = &out.tree;
    let hits = psml_core::scene::terminals(t, t.root(), "Axiom/wall/Bricks/brick");
    assert_eq!(hits.len(), 301);
}

#[test]
fn rule_precedence_follows_source_order() {
    let a = "rules { s::{x}; x:1:appearance(diffuse,{1,0,0}){terminal}; x:2:appearance(diffuse,{0,1,0}){terminal}; }";
    let b = "rules { s::{x}; x:2:appearance(diffuse,{0,1,0}){terminal}; x:1:appearance(diffuse,{1,0,0}){terminal}; }";
    let key = psml_core::geometry::AppearanceKey::Diffuse;
    for (body, expect) in [(a, [1.0, 0.0, 0.0]), (b, [0.0, 1.0, 0.0])] {
        let out = run(&wrap("P", body)).unwrap();
        let leaf = out.tree.leaves()[0];
        assert_eq!(out.tree.node(leaf).shape.appearance.numbers(key), Some(&expect[..]));
    }
}

#[test]
fn false_condition_falls_through_to_next_rule() {
    let body = "rules { s::{x}; x:0:{y}; x:1:{terminal}; }";
    let out = run(&wrap("F", body)).unwrap();
    assert_eq!(out.tree.count(NodeKind::Terminal), 1);
    let err = run(&wrap("F", "rules { s::{x}; x:0:{terminal}; }")).unwrap_err();
    assert_eq!(err.kind, RuntimeErrorKind::NoApplicableRule("x".into()));
}

#[test]
fn fibonacci_split_depth() {
    let body = "float phi = (1 + Math.sqrt(5)) / 2;
        rules {
            start::I(box, {100, 1, 1}){cell};
            cell : scope.w > 1 : split(x, {scope.w / phi, scope.w - scope.w / phi}){cell, piece};
            cell::{terminal};
            piece::{terminal};
        }";
    let out = run(&wrap("Fib", body)).unwrap();
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let k = (100f64.ln() / phi.ln()).ceil() as usize;
    let t = &out.tree;
    assert_eq!(leaves_named(t, "piece", NodeKind::Terminal).len(), k);
    let max_depth = t.leaves().into_iter().map(|n| t.depth(n)).max().unwrap();
    assert_eq!(max_depth, 1 + k);
}

#[test]
fn depth_limit_stops_runaway_recursion() {
    let opts = RunOptions { depth_limit: 50, ..RunOptions::default() };
    let err = run_with(&wrap("Inf", "rules { s::{s}; }"), &Library::new(), &opts).unwrap_err();
    assert_eq!(err.kind, RuntimeErrorKind::DepthLimit(50));
}

#[test]
fn expressions_and_instanceof() {
    let body = "float a = Math.atan(8.5 / (4.5 - 3));
        print(a);
        rules {
            s::I(conicfrustum, {4.5, 3, 8.5}){f};
            f::split(y, {0.4, scope.h - 0.4}){f1, f2};
            f1::{terminal};
            f2::{terminal};
        }
        Shape c = instances(\"f2\");
        print(c.h);
        print(c instanceof RotaryShape);
        print(c instanceof Shape3D.CartesianShape);
        print(\"n=\" + 3);";
    let out = run(&wrap("E", body)).unwrap();
    let a: f64 = out.log[0].parse().unwrap();
    assert!((a - (8.5f64 / 1.5).atan()).abs() < 1e-15);
    assert!((a - 1.3962).abs() < 1e-4);
    let h: f64 = out.log[1].parse().unwrap();
    assert!((h - 8.1).abs() < 1e-12);
    assert_eq!(out.log[2..], ["1", "0", "n=3"]);
}

#[test]
fn random_is_seeded() {
    let body = "print(Math.random()); rules { s::{terminal}; }";
    let r = |seed| {
        let opts = RunOptions { seed, ..RunOptions::default() };
        run_with(&wrap("Rnd", body), &Library::new(), &opts).unwrap().log
    };
    assert_eq!(r(7), r(7));
    assert_ne!(r(7), r(8));
}

#[test]
fn attribute_errors() {
    let early = run(&wrap("A", "rules { s::I(box, {@brick.width, 1, 1}){terminal}; }")).unwrap_err();
    assert_eq!(early.kind, RuntimeErrorKind::UnresolvedAttribute("brick.width".into()));

    let (_, lib) = brick_library("sand");
    let missing_group = run_with(
        &wrap("A", "rules { s::useAttributes(brick.properties, lava){t}; t::{terminal}; }"),
        &lib,
        &RunOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(missing_group.kind, RuntimeErrorKind::MissingGroup { .. }));

    let missing_file =
        run(&wrap("A", "rules { s::useAttributes(nothere.properties, sand){t}; t::{terminal}; }")).unwrap_err();
    assert_eq!(missing_file.kind, RuntimeErrorKind::MissingAttributeFile("nothere.properties".into()));
}

#[test]
fn attributes_load_from_grammar_directory() {
    let path = gallery("Bricks.psm");
    let program = psml_core::interp::load_program(&path).unwrap();
    let out = run_program(&program, path.parent(), &Library::new(), &RunOptions::default()).unwrap();
    assert_eq!(leaves_named(&out.tree, "brick", NodeKind::Terminal).len(), 301);
}

#[test]
fn nested_attribute_groups_shadow_outer_ones() {
    let mut lib = Library::new();
    lib.add_attributes(
        "a.properties",
        parse_attributes("attributes outer { k = 1; only = 5; } attributes inner { k = 2; }").unwrap(),
    );
    let body = "rules {
        s::useAttributes(a.properties, outer) split(x, {0.5, 0.5}){p, q};
        p::useAttributes(a.properties, inner) I(box, {@k, @only, 1}){terminal};
        q::I(box, {@k, @only, 1}){terminal};
    }";
    let out = run_with(&wrap("N", body), &lib, &RunOptions::default()).unwrap();
    let vols: Vec<f64> = out.tree.leaves().iter().map(|&n| out.tree.node(n).shape.volume()).collect();
    assert_eq!(vols, [10.0, 5.0]);
}

#[test]
fn successor_arity_and_void_misuse_are_errors() {
    let e = run(&wrap("S", "rules { s::split(x, {0.5, 0.5}){a}; a::{terminal}; }")).unwrap_err();
    assert_eq!(e.kind, RuntimeErrorKind::SuccessorArity { expected: 1, got: 2 });
    let e = run(&wrap("S", "rules { s::void() I(box, {1, 1, 1}){terminal}; }")).unwrap_err();
    assert_eq!(e.kind, RuntimeErrorKind::VoidWithGeometry);
    let e = run(&wrap("S", "rules { s::split(x, {0.5, 0.5}) T(1, 0, 0){a, b}; }")).unwrap_err();
    assert_eq!(e.kind, RuntimeErrorKind::FunctionAfterSplit("T".into()));
}

#[test]
fn repeat_cycles_successors() {
    let body = "rules { s::repeat(x, {0.2}, 0){a, b, c}; a::{terminal}; b::{terminal}; c::{terminal}; }";
    let out = run(&wrap("R", body)).unwrap();
    let names: Vec<&str> = out.tree.leaves().iter().map(|&n| out.tree.node(n).symbol.as_str()).collect();
    assert_eq!(names, ["a", "b", "c", "a", "b"]);
}

#[test]
fn derivation_is_depth_first() {
    let (src, lib) = brick_library("sand");
    let out = run_with(&src, &lib, &RunOptions::default()).unwrap();
    let t = &out.tree;
    for n in t.preorder() {
        let stamps: Vec<u64> = t.subtree(n).iter().map(|&m| t.node(m).stamp.unwrap()).collect();
        let lo = *stamps.iter().min().unwrap();
        let hi = *stamps.iter().max().unwrap();
        assert_eq!(lo, t.node(n).stamp.unwrap());
        assert_eq!((hi - lo + 1) as usize, stamps.len());
    }
    for n in t.preorder() {
        let c = &t.node(n).children;
        for w in c.windows(2) {
            assert!(t.node(w[0]).stamp < t.node(w[1]).stamp);
        }
    }
}

#[test]
fn leaf_totality_and_occupancy() {
    let (src, lib) = brick_library("rock");
    let out = run_with(&src, &lib, &RunOptions::default()).unwrap();
    let t = &out.tree;
    for n in t.preorder() {
        let node = t.node(n);
        if node.children.is_empty() {
            assert!(node.kind.is_leaf(), "{}", t.path(n));
        }
    }
    // The wall box below `Bricks` is expanded only by repeat.
    let bricks = psml_core::scene::instances(t, t.root(), "Bricks");
    for b in bricks {
        let parent = t.node(b).shape.volume();
        let sum: f64 =
            t.subtree(b).iter().filter(|&&m| t.node(m).kind.is_leaf()).map(|&m| t.node(m).shape.volume()).sum();
        assert!((sum - parent).abs() <= 1e-6 * parent);
    }
}

fn operand_case(stmt: &str) -> RunOutput {
    let body = format!(
        "rules {{
            s::I(box, {{2, 1, 1}}) T(0.5, 0, 0) I(box, {{2, 1, 1}}){{p, q}};
            p::split(x, {{1, 1}}){{pa, pb}};
            q::split(x, {{1, 1}}){{qa, qb}};
            pa::{{terminal}}; pb::{{terminal}}; qa::{{terminal}}; qb::{{terminal}};
        }}
        {stmt}"
    );
    run(&wrap("Table", &body)).unwrap_or_else(|e| panic!("{e}"))
}

fn leaf_volume(out: &RunOutput, symbol: &str) -> Option<f64> {
    let t = &out.tree;
    let v = leaves_named(t, symbol, NodeKind::Terminal);
    assert!(v.len() <= 1);
    v.first().map(|&n| t.node(n).shape.volume())
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-6
}

#[test]
fn boolean_nt_nt_is_detached() {
    let out = operand_case("Shape r = instances(\"p\").geometricBoolean(instances(\"q\"), \"&&\"); print(r.volume());");
    assert!(close(out.log[0].parse().unwrap(), 1.5));
    assert_eq!(out.tree.leaves().len(), 4);
    assert!(close(out.tree.visible_volume(), 4.0));
}

#[test]
fn boolean_nt_t_is_detached() {
    let out = operand_case("Shape r = instances(\"p\").geometricBoolean(terminals(\"qa\"), \"-\"); print(r.volume());");
    assert!(close(out.log[0].parse().unwrap(), 1.0));
    assert_eq!(out.tree.leaves().len(), 4);
    assert!(close(leaf_volume(&out, "qa").unwrap(), 1.0));
}

#[test]
fn boolean_t_nt_mutates_terminal() {
    let out = operand_case("terminals(\"pa\").geometricBoolean(instances(\"qb\"), \"+\");");
    assert!(close(leaf_volume(&out, "pa").unwrap(), 2.0));
    assert!(close(leaf_volume(&out, "qb").unwrap(), 1.0));
    assert_eq!(out.tree.leaves().len(), 4);
}

#[test]
fn boolean_t_t_union_and_intersection_delete_t2() {
    let out = operand_case("terminals(\"pb\").geometricBoolean(terminals(\"qb\"), \"+\");");
    assert!(close(leaf_volume(&out, "pb").unwrap(), 1.5));
    assert_eq!(leaf_volume(&out, "qb"), None);
    assert!(psml_core::scene::terminals(&out.tree, 0, "qb").is_empty());
    assert_eq!(out.tree.leaves().len(), 3);

    let out = operand_case("terminals(\"pb\").geometricBoolean(terminals(\"qb\"), \"&&\");");
    assert!(close(leaf_volume(&out, "pb").unwrap(), 0.5));
    assert_eq!(leaf_volume(&out, "qb"), None);
    assert_eq!(out.tree.leaves().len(), 3);
}

#[test]
fn boolean_t_t_difference_keeps_t2() {
    let out = operand_case("terminals(\"pb\").geometricBoolean(terminals(\"qb\"), \"-\");");
    assert!(close(leaf_volume(&out, "pb").unwrap(), 0.5));
    assert!(close(leaf_volume(&out, "qb").unwrap(), 1.0));
    assert_eq!(out.tree.leaves().len(), 4);
}

#[test]
fn grammar_on_boolean_result_gets_bounding_box() {
    let body = "rules {
            s::I(box, {2, 1, 1}) T(0.5, 0, 0) I(box, {2, 1, 1}){p, q};
            p::{terminal};
            q::void(){terminal};
        }
        Shape r = instances(\"p\").geometricBoolean(instances(\"q\"), \"&&\");
        Inner(r);";
    let src = format!(
        "public class Outer extends ShapeGrammar {{\n public void Inner() {{ print(myShape.w, myShape.h, myShape.x); rules {{ i::{{terminal}}; }} }}\n public static void main(String[] args) {{\n{body}\n }}\n}}\n"
    );
    let out = run(&src).unwrap();
    let parts: Vec<f64> = out.log[0].split(' ').map(|x| x.parse().unwrap()).collect();
    assert!(close(parts[0], 1.5) && close(parts[1], 1.0) && close(parts[2], 0.25));
    let inner = leaves_named(&out.tree, "Inner", NodeKind::Terminal);
    assert_eq!(inner.len(), 1);
    assert_eq!(out.tree.path(inner[0]), "Axiom/Inner");
}

#[test]
fn named_block_scopes_queries() {
    let body = "rules first { s::split(x, {0.5, 0.5}){a, b}; a::{terminal}; b::{terminal}; }
        print(terminals(first, \"a\").length);
        print(terminals(first, \"zzz\").length);";
    let out = run(&wrap("Named", body)).unwrap();
    assert_eq!(out.log, ["1", "0"]);
}

#[test]
fn axis_names_win_over_numeric_fields() {
    let src = "public class Ax extends ShapeGrammar {
        float r = 4, t = 0.5;
        public static void main(String[] args) {
            rules {
                s::I(cylinder, {r, 2}){body};
                body::split(r, {r - t, t}){inside, wall};
                inside::void(){terminal};
                wall::{terminal};
            }
            String ax = \"y\";
            rules second { c::split(ax, {0.5, 0.5}){a, b}; a::{terminal}; b::{terminal}; }
        }
    }";
    let out = run(src).unwrap();
    let wall = leaves_named(&out.tree, "wall", NodeKind::Terminal)[0];
    let s = &out.tree.node(wall).shape;
    assert!((s.radius().unwrap() - s.inner_radius().unwrap() - 0.5).abs() < 1e-9);
    let a = leaves_named(&out.tree, "a", NodeKind::Terminal)[0];
    assert!((out.tree.node(a).shape.dims().y - 0.5).abs() < 1e-9);
}
