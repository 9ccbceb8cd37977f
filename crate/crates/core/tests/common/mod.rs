#![allow(dead_code)]

use mechkit::gen::generate;
use mechkit::instance::{Family, Instance};
use mechkit::onesided::Housing;
use mechkit::registry::Params;
use mechkit::twosided::SchoolChoice;

pub fn gen(family: Family, params: Params, seed: u64) -> Instance {
    generate(family, &params, seed).expect("generator output validates")
}

pub fn housing(params: Params, seed: u64) -> Housing {
    match gen(Family::OneSided, params, seed) {
        Instance::OneSided(h) => h,
        _ => unreachable!(),
    }
}

pub fn school(params: Params, seed: u64) -> SchoolChoice {
    match gen(Family::TwoSided, params, seed) {
        Instance::TwoSided(sc) => sc,
        _ => unreachable!(),
    }
}

/// Position of `x` in a ranking; unlisted items sort after staying unmatched.
pub fn pos(list: &[usize], x: Option<usize>) -> usize {
    match x {
        None => list.len(),
        Some(x) => list.iter().position(|&y| y == x).unwrap_or(list.len() + 1),
    }
}

/// All injective maps from `n` agents into `k` items or nothing, each item used once.
pub fn assignments(n: usize, k: usize) -> Vec<Vec<Option<usize>>> {
    fn go(i: usize, n: usize, k: usize, used: &mut Vec<bool>, cur: &mut Vec<Option<usize>>, out: &mut Vec<Vec<Option<usize>>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        cur.push(None);
        go(i + 1, n, k, used, cur, out);
        cur.pop();
        for x in 0..k {
            if !used[x] {
                used[x] = true;
                cur.push(Some(x));
                go(i + 1, n, k, used, cur, out);
                cur.pop();
                used[x] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut vec![false; k], &mut Vec::new(), &mut out);
    out
}

pub fn config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config { cases, failure_persistence: None, ..Default::default() }
}
