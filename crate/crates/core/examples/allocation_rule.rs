//! Response-adaptive allocation: probabilities proportional to Q^c.
//!
//! `cargo run --example allocation_rule`

use smartq::allocation::allocation_probs;
use smartq::domain::History;

fn main() -> smartq::Result<()> {
    let q = [0.975, 0.5725];
    println!("Q = {q:?}");
    for c in [0.0, 0.5, 1.0, 2.0, 5.0] {
        let p = allocation_probs(History::INITIAL, q, c, None)?;
        println!("  c = {c:<4} P(a=0) = {:.4}  P(a=1) = {:.4}", p.probs[0], p.probs[1]);
    }

    // A floor keeps both arms in play.
    let floored = allocation_probs(History::INITIAL, [1.0, 0.01], 3.0, Some(0.1))?;
    println!("c = 3 with floor 0.1: {:?}", floored.probs);

    // An arm with zero expected utility is dropped entirely.
    let stop = allocation_probs(History::INITIAL, [0.0, 0.4], 1.0, None)?;
    println!("Q = [0, 0.4]: {:?}", stop.probs);
    Ok(())
}
