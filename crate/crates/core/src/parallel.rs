//! Order-preserving fan-out over scoped threads.

use std::thread;

/// Applies `f` to every item on up to `threads` workers and returns the
/// results in input order. `threads <= 1` runs inline.
pub fn par_map<I, O, F>(items: &[I], threads: usize, f: F) -> Vec<O>
where
    I: Sync,
    O: Send,
    F: Fn(usize, &I) -> O + Sync,
{
    if threads <= 1 || items.len() <= 1 {
        return items.iter().enumerate().map(|(i, x)| f(i, x)).collect();
    }
    let per = items.len().div_ceil(threads);
    thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(per)
            .enumerate()
            .map(|(c, chunk)| {
                let f = &f;
                s.spawn(move || chunk.iter().enumerate().map(|(j, x)| f(c * per + j, x)).collect::<Vec<O>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u32> = (0..37).collect();
        let serial = par_map(&items, 1, |i, x| (i, x * 2));
        assert_eq!(par_map(&items, 4, |i, x| (i, x * 2)), serial);
        assert_eq!(serial[36], (36, 72));
    }
}
