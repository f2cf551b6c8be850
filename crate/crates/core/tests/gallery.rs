use std::path::{Path, PathBuf};

use psml_core::geometry::{mesh_volume, DEFAULT_SEGMENTS};
use psml_core::interp::{load_program, resolve_imports, run_program, Library, RunOptions, RunOutput};
use psml_core::scene::{terminals, NodeKind};

fn gallery_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../gallery")
}

fn run_gallery(name: &str, edit: impl Fn(String) -> String) -> RunOutput {
    let dir = gallery_dir();
    let src = edit(std::fs::read_to_string(dir.join(format!("{name}.psm"))).unwrap());
    let program = psml_core::frontend::parse_program_named(&src, name).unwrap();
    let mut lib = Library::new();
    resolve_imports(&program, &mut lib, std::slice::from_ref(&dir)).unwrap();
    run_program(&program, Some(&dir), &lib, &RunOptions::default()).unwrap()
}

#[test]
fn castle_gate_carves_opening_and_fits_door() {
    let carved = run_gallery("CastleGate", |s| s);
    let plain = run_gallery("CastleGate", |s| {
        s.replace("terminals(castle, \"towerWall\").geometricBoolean(opening, \"-\");", "")
    });
    let stones = |o: &RunOutput| -> Vec<f64> {
        let t = &o.tree;
        terminals(t, t.root(), "towerWall/stone")
            .iter()
            .map(|&n| mesh_volume(&t.node(n).shape.triangulate(DEFAULT_SEGMENTS)).unwrap())
            .collect()
    };
    let (before, after) = (stones(&plain), stones(&carved));
    assert_eq!(before.len(), 12 * 16);
    assert_eq!(after.len(), before.len());
    let opening: f64 = carved.log[0].split(' ').nth(2).unwrap().parse().unwrap();
    let removed = before.iter().sum::<f64>() - after.iter().sum::<f64>();
    assert!(opening > 0.0);
    assert!((removed - opening).abs() < 0.02 * opening, "removed {removed}, opening {opening}");
    assert!(after.iter().zip(&before).all(|(a, b)| *a <= b + 1e-9));

    let t = &carved.tree;
    let door = terminals(t, t.root(), "/GothicDoor");
    let kinds: Vec<NodeKind> = door.iter().map(|&n| t.node(n).kind).collect();
    assert_eq!(kinds.iter().filter(|k| **k == NodeKind::VoidTerminal).count(), 1);
    assert_eq!(kinds.len(), 5);
    for &n in &door {
        assert!(t.path(n).starts_with("Axiom/GothicDoor/"));
    }
    // The walkway void and hall remain in the tree, untouched by the detached intersection.
    assert_eq!(t.count(NodeKind::VoidTerminal), 3);
}

#[test]
fn spiral_terminates_with_shrinking_squares() {
    let out = run_gallery("Spiral", |s| s);
    let t = &out.tree;
    let mut squares: Vec<f64> =
        t.leaves().into_iter().filter(|&n| t.node(n).symbol == "square").map(|n| t.node(n).shape.dims().x).collect();
    squares.sort_by(|a, b| b.total_cmp(a));
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let expected = ((8.0f64 / 0.05).ln() / phi.ln()).ceil() as usize;
    assert_eq!(squares.len(), expected);
    for w in squares.windows(2) {
        assert!((w[0] / w[1] - phi).abs() < 1e-6, "{squares:?}");
    }
}

#[test]
fn stress_wall_has_over_ten_thousand_bricks() {
    let path = gallery_dir().join("StressWall.psm");
    let program = load_program(&path).unwrap();
    let mut lib = Library::new();
    resolve_imports(&program, &mut lib, &[gallery_dir()]).unwrap();
    let out = run_program(&program, path.parent(), &lib, &RunOptions::default()).unwrap();
    let bricks = out.tree.leaves().into_iter().filter(|&n| out.tree.node(n).symbol == "brick").count();
    assert_eq!(bricks, 20050);
}
