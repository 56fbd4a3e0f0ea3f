//! Enumeration of multi-indices.

/// All `n` in `Z^d` with `|n|_inf <= n_max`, first axis slowest.
pub fn cube_indices(dim: usize, n_max: i64) -> Vec<Vec<i64>> {
    let side = (2 * n_max + 1) as usize;
    (0..side.pow(dim as u32))
        .map(|mut flat| {
            let mut idx = vec![0i64; dim];
            for axis in (0..dim).rev() {
                idx[axis] = (flat % side) as i64 - n_max;
                flat /= side;
            }
            idx
        })
        .collect()
}

/// Position of `n` inside [`cube_indices`]`(dim, n_max)`, if present.
pub fn cube_position(n: &[i64], n_max: i64) -> Option<usize> {
    let side = 2 * n_max + 1;
    let mut flat = 0i64;
    for &c in n {
        if c.abs() > n_max {
            return None;
        }
        flat = flat * side + c + n_max;
    }
    Some(flat as usize)
}

/// All `n` in `Z_+^d` with `|n| <= order`, by total degree then lexicographically.
pub fn multi_indices_up_to(dim: usize, order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for total in 0..=order {
        let mut current = vec![0; dim];
        compositions(dim, total, 0, &mut current, &mut out);
    }
    out
}

fn compositions(dim: usize, remaining: usize, axis: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if axis + 1 == dim {
        current[axis] = remaining;
        out.push(current.clone());
        return;
    }
    for k in (0..=remaining).rev() {
        current[axis] = k;
        compositions(dim, remaining - k, axis + 1, current, out);
    }
}

pub fn total(n: &[usize]) -> usize {
    n.iter().sum()
}

pub fn add(n: &[usize], m: &[usize]) -> Vec<usize> {
    n.iter().zip(m).map(|(a, b)| a + b).collect()
}
