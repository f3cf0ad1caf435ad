//! Partial solutions as a monoid: sequences concatenate, sets unite.

use bqco::{PartialSolution, SolutionKind, Step};

fn main() {
    let a = PartialSolution::from_steps(SolutionKind::Sequence, [Step::Node(3), Step::Node(1)]);
    let b = PartialSolution::unit(SolutionKind::Sequence, Step::Node(4));
    let e = PartialSolution::empty(SolutionKind::Sequence);
    println!("a = {a}, b = {b}");
    println!("a.b = {}", a.compose(&b));
    println!("b.a = {}", b.compose(&a));
    println!("a.e == a: {}", a.compose(&e) == a);
    println!("a is a prefix of a.b: {}", a.is_prefix_of(&a.compose(&b)));

    let s = PartialSolution::from_steps(SolutionKind::Set, [Step::Item(2), Step::Item(0)]);
    let t = PartialSolution::unit(SolutionKind::Set, Step::Item(1));
    println!("sets commute: {}", s.compose(&t) == t.compose(&s));
    println!("s.t = {}", s.compose(&t));
}
