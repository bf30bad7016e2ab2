//! Actions, inverses and the N-forward / N-inverse probe, stepped through
//! the room3 fixture.

use wsbench::action::{Action, ActionSequence};
use wsbench::env::{fixture, sample_start, trace_poses};
use wsbench::rng::seeded;

fn main() {
    for a in Action::ALL {
        println!("{a:?} ({}) inverse {:?}", a.code(), a.inverse());
    }

    let probe = ActionSequence::probe(Action::TurnLeft, 3).unwrap();
    println!("\nprobe L x3: {probe}  inverted: {}", probe.inverted());
    let walk: ActionSequence = "FFRB".parse().unwrap();
    println!("parsed {walk:?}");

    let map = fixture("room3").unwrap();
    for action in [Action::TurnRight, Action::Forward] {
        let probe = ActionSequence::probe(action, 2).unwrap();
        let start = sample_start(&map, &mut seeded(3), &probe).unwrap();
        let (poses, collided) = trace_poses(&map, start, &probe);
        println!("\n{probe} from {start:?}");
        for (p, c) in poses.iter().skip(1).zip(&collided) {
            println!("  -> ({}, {}, heading {}){}", p.x, p.y, p.heading, if *c { " collided" } else { "" });
        }
        assert_eq!(poses.first(), poses.last(), "a valid probe returns home");
    }
}
